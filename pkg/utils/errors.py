class ModelError(Exception):
    """Base class for every error the model reports to a caller"""
    kind = 'model_error'
    exit_code = 1
    http_status = 400

    def __init__(self, message=''):
        super().__init__(message)
        self.message = message


class ParseError(ModelError):
    kind = 'parse_error'
    exit_code = 2

    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ''
        if source:
            where += f'{source}:'
        if line is not None:
            where += f'{line}:'
            if column is not None:
                where += f'{column}:'
        super().__init__(f'{where} {message}'.strip() if where else message)
        self.detail = message


class ValidationError(ModelError):
    kind = 'validation_error'
    exit_code = 2

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__('; '.join(str(v) for v in self.violations))


class UnknownMachine(ModelError):
    kind = 'unknown_machine'
    exit_code = 2
    http_status = 404


class PreconditionError(ModelError, ValueError):
    kind = 'precondition'
    exit_code = 2


class MissingCalibration(ModelError):
    kind = 'missing_calibration'
    exit_code = 3
    http_status = 422


class Unsupported(MissingCalibration):
    kind = 'unsupported'


class NoTmem(MissingCalibration):
    kind = 'no_tmem'


class UnknownChunk(MissingCalibration):
    kind = 'unknown_chunk'
    http_status = 404


class UnknownFormat(ModelError):
    kind = 'unknown_format'
    exit_code = 2
    http_status = 404


class TmemOverflow(ModelError):
    kind = 'tmem_overflow'
    exit_code = 2


class ShapeMismatch(ModelError):
    kind = 'shape_mismatch'
    exit_code = 2


class InvalidCode(ModelError):
    kind = 'invalid_code'
    exit_code = 2


class EmptyComparison(ModelError):
    kind = 'empty_comparison'
    exit_code = 2


class NoPoint(ModelError):
    kind = 'no_point'
    exit_code = 2


class DegenerateSignal(ModelError):
    """Signal power is zero, so SQNR is undefined; ``stats`` still carries mse"""
    kind = 'degenerate_signal'
    exit_code = 2

    def __init__(self, stats):
        self.stats = stats
        super().__init__('signal power is zero; sqnr undefined')


class IllConditioned(ModelError):
    kind = 'ill_conditioned'
    exit_code = 5
