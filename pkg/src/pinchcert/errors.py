"""Exception hierarchy. Every error raised by the library derives from PinchCertError."""


class PinchCertError(Exception):
    pass


class StructureError(PinchCertError):
    """Input lacks a required structure (Hermitian, unitary, support, orthogonality)."""


class ShapeError(PinchCertError, ValueError):
    pass


class NotPSDError(PinchCertError):
    pass


class RankError(PinchCertError):
    pass


class InfeasibleError(PinchCertError):
    """A feasibility condition failed.

    ``index`` is the first violated prefix (for majorization failures) and
    ``flag`` names the failed feasibility flag (for decompositions).
    """

    def __init__(self, message, index=None, flag=None):
        super().__init__(message)
        self.index = index
        self.flag = flag


class CertificateError(PinchCertError):
    pass


class NotAveragingError(PinchCertError):
    pass


class BranchError(PinchCertError):
    pass


class DomainError(PinchCertError, ValueError):
    pass


class TraceError(PinchCertError):
    def __init__(self, message, tau):
        super().__init__(message)
        self.tau = tau


class ParityError(PinchCertError):
    def __init__(self, message, parts):
        super().__init__(message)
        self.parts = parts


class SizeError(PinchCertError):
    pass


class ParseError(PinchCertError):
    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line


class SchemaError(PinchCertError):
    pass
