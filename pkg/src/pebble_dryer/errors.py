"""Exception hierarchy shared by the toolkit.

Configuration problems map to CLI exit code 2, numerical failures to 3.
"""


class DryerError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(DryerError, ValueError):
    """Malformed configuration or an input outside its documented range."""


class InvalidParameterError(ConfigError):
    def __init__(self, field, value, reason="must be strictly positive"):
        self.field = field
        self.value = value
        super().__init__(f"{field}={value!r}: {reason}")


class NumericalError(DryerError, ArithmeticError):
    """Base class for failures of the numerical machinery."""


class SingularStateError(NumericalError):
    def __init__(self, name, value=None):
        self.name = name
        self.value = value
        msg = f"singular state: {name}"
        if value is not None:
            msg += f" = {value!r}"
        super().__init__(msg)


class SingularOperatingPointError(NumericalError):
    def __init__(self, expression):
        self.expression = expression
        super().__init__(f"zero denominator in steady-state expression: {expression}")


class NonConvergenceError(NumericalError):
    def __init__(self, message, last_norm=None, iterations=None, condition=None):
        self.last_norm = last_norm
        self.iterations = iterations
        self.condition = condition
        super().__init__(message)


class InvalidLinearizationPoint(NumericalError):
    pass


class DesignError(NumericalError):
    """A controller synthesis request that has no valid answer."""


class TuningError(DesignError):
    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class ImproperTransferFunctionError(DesignError):
    pass


class IntegrationBlowUp(NumericalError):
    def __init__(self, time, detail=""):
        self.time = time
        msg = f"non-finite state at t = {time:.4f} s"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class UndefinedQuantityError(NumericalError):
    """Moisture, efficiency or lift undefined for the supplied arguments."""
