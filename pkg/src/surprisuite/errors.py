"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation/parse problems exit 2,
transport failures exit 3, protocol violations exit 4.
"""


class SurprisuiteError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SurprisuiteError):
    """Malformed input text (suite, template, rules, scores, model files)."""


class ValidationError(SurprisuiteError):
    """Structurally well-formed input that violates a semantic invariant."""


class UnknownConditionError(ValidationError):
    """A condition label that does not exist in the referenced item."""


class TransportError(SurprisuiteError):
    """Backend unreachable, handshake failed, or connection died mid-request."""


class ProtocolViolation(SurprisuiteError):
    """A backend reply that breaks the wire contract (bad spans, bad framing)."""


class ModelFileError(SurprisuiteError):
    """Corrupt or version-incompatible n-gram model file."""


class TrainingError(SurprisuiteError):
    """Unusable training corpus (e.g. no in-vocabulary tokens)."""


EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_TRANSPORT = 3
EXIT_PROTOCOL = 4


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (TransportError,)):
        return EXIT_TRANSPORT
    if isinstance(exc, ProtocolViolation):
        return EXIT_PROTOCOL
    return EXIT_VALIDATION
