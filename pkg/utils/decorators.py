from functools import wraps

import click
from flask import jsonify

from config.config import Config
from utils.errors import ModelError


def cli_errors(f):
    """Report a ModelError as ``error[<kind>]: <message>`` on stderr and exit with its code"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ModelError as e:
            click.echo(f'error[{e.kind}]: {e.message}', err=True)
            raise SystemExit(e.exit_code)
    return decorated_function


def api_errors(f):
    """JSON error body with the error's HTTP status"""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ModelError as e:
            return jsonify({'status': 'error', 'kind': e.kind, 'message': e.message}), e.http_status
    return decorated_function


def common_options(f):
    """--gpu, --output and --spec, shared by every command"""
    f = click.option('--spec', 'spec_path', type=click.Path(exists=True, dir_okay=False),
                     help='Machine file overriding the bundled preset.')(f)
    f = click.option('--output', 'output', type=click.Choice(Config.OUTPUT_FORMATS),
                     default=Config.OUTPUT_FORMAT, show_default=True)(f)
    f = click.option('--gpu', default='B200', show_default=True, help='Machine to model.')(f)
    return f
