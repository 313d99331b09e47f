import re

from utils.errors import PreconditionError

_SIZE_RE = re.compile(r'^\s*([0-9]*\.?[0-9]+)\s*([kmgt]?)(i?b?)\s*$', re.IGNORECASE)
_POWERS = {'': 0, 'k': 1, 'm': 2, 'g': 3, 't': 4}


def parse_size(text, base=1000):
    """'4GB' -> 4e9 with base 1000; '32KB' -> 32768 with base 1024.

    An explicit ``KiB``/``GiB`` suffix always means base 1024.
    """
    if isinstance(text, (int, float)):
        return text
    match = _SIZE_RE.match(str(text))
    if not match:
        raise PreconditionError(f'cannot parse size {text!r}')
    number, prefix, suffix = match.groups()
    if suffix.lower().startswith('i'):
        base = 1024
    value = float(number) * base ** _POWERS[prefix.lower()]
    return int(value) if value.is_integer() else value
