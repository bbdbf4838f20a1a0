from __future__ import annotations


class KirchhoffError(Exception):
    """Base class for every error raised by kirchhoff-mp."""

    exit_code = 1


class ConfigError(KirchhoffError):
    exit_code = 2


class GridMismatchError(KirchhoffError, ValueError):
    pass


class ZeroFieldError(KirchhoffError, ValueError):
    pass


class OffSphereError(KirchhoffError, ValueError):
    pass


class NotTangentError(KirchhoffError, ValueError):
    pass


class InvariantViolation(KirchhoffError):
    """A computed object failed one of its numeric invariants.

    ``names`` lists the violated invariants so callers can report them without
    parsing the message.
    """

    exit_code = 1

    def __init__(self, message: str, *, names: list[str] | None = None):
        super().__init__(message)
        self.names = list(names or [])


class GeometryNotCertified(InvariantViolation):
    def __init__(self, c: float, cstar: float):
        super().__init__(
            f"mass c={c:.6g} exceeds certified threshold cstar={cstar:.6g}",
            names=["c_le_cstar"],
        )
        self.c = c
        self.cstar = cstar


class CertificateViolation(InvariantViolation):
    def __init__(self, inequality: str, margin: float | None = None):
        detail = "" if margin is None else f" (margin {margin:.6g})"
        super().__init__(f"certificate inequality failed: {inequality}{detail}", names=[inequality])
        self.inequality = inequality
        self.margin = margin


class ConvergenceError(KirchhoffError):
    exit_code = 3


class SingularJacobianError(ConvergenceError):
    def __init__(self, message: str, *, condition_estimate: float):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3g})")
        self.condition_estimate = condition_estimate
