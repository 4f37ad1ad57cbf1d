"""Exception hierarchy shared by every module.

Each error carries a short machine-readable ``code`` (its class name) and a
``details`` dict so the CLI can print structured JSON on stderr.
"""


class ToposError(Exception):
    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    @property
    def code(self):
        return type(self).__name__

    def to_json(self):
        out = {"error": self.code, "message": self.message}
        if self.details:
            out["details"] = {k: str(v) for k, v in sorted(self.details.items())}
        return out


class DimensionMismatch(ToposError):
    pass


class NotHermitian(ToposError):
    pass


class NotIdempotent(ToposError):
    pass


class NotUnitary(ToposError):
    pass


class NotNormalized(ToposError):
    pass


class NotDensity(ToposError):
    pass


class IrrationalSpectrum(ToposError):
    pass


class InvalidHint(ToposError):
    pass


class NotOrthogonal(ToposError):
    pass


class NotResolution(ToposError):
    pass


class TrivialContext(ToposError):
    pass


class UnknownContext(ToposError):
    pass


class ImageOutsidePoset(ToposError):
    pass


class NotSubcontext(ToposError):
    pass


class NotInAlgebra(ToposError):
    pass


class PosetMismatch(ToposError):
    pass


class RootMismatch(ToposError):
    pass


class IncompatibleSubobject(ToposError):
    pass


class BadThreshold(ToposError):
    pass


class IllDefined(ToposError):
    pass


class ParseError(ToposError):
    pass


class ValidationError(ToposError):
    pass
