class StringyError(Exception):
    """
    Base error of the toolkit. `exit_code` is what the command line returns
    when the error escapes a command; `detail` is the human readable reason.
    """

    exit_code = 2

    def __init__(self, detail: str, **context):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def __str__(self):
        return self.detail


class InvalidInput(StringyError):
    exit_code = 2


class InvalidResolutionData(InvalidInput):
    def __init__(self, detail: str, diagnostics=()):
        super().__init__(detail, diagnostics=list(diagnostics))
        self.diagnostics = list(diagnostics)


class InvalidFan(InvalidInput):
    def __init__(self, detail: str, diagnostics=()):
        super().__init__(detail, diagnostics=list(diagnostics))
        self.diagnostics = list(diagnostics)


class NotARefinement(InvalidInput):
    pass


class NotSmooth(InvalidInput):
    pass


class NotIntegrable(InvalidInput):
    def __init__(self, detail: str, discrepancy=None):
        super().__init__(detail, discrepancy=discrepancy)
        self.discrepancy = discrepancy


class Unsupported(InvalidInput):
    pass


class RootIndexError(InvalidInput):
    pass


class StructuralError(StringyError):
    pass


class LogTerminalViolation(StringyError):
    exit_code = 2


class NotPolynomial(StringyError):
    def __init__(self, detail: str, denominator=None, residual=None):
        super().__init__(detail, denominator=denominator, residual=residual)
        self.denominator = denominator
        self.residual = residual


class StringyHodgeDoNotExist(NotPolynomial):
    pass


class PoleError(StringyError):
    pass


class NotQGorenstein(StringyError):
    exit_code = 3

    def __init__(self, detail: str, cone=None):
        super().__init__(detail, cone=cone)
        self.cone = cone


class CapExceeded(StringyError):
    exit_code = 4

    def __init__(self, detail: str, cone=None, index=None, cap=None):
        super().__init__(detail, cone=cone, index=index, cap=cap)
        self.cone = cone
        self.index = index
        self.cap = cap
