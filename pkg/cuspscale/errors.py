from dataclasses import dataclass
from typing import Any, ClassVar, Generic, TypeVar


class UserError(Exception):
    exit_code: ClassVar[int] = 2

    def __str__(self):
        return "Unknown user error."


T = TypeVar("T")


@dataclass
class CyclicWorkflowError(UserError, Generic[T]):
    cycle: list[T]

    def __str__(self):
        return "Job graph has a cycle: " + " -> ".join(map(str, self.cycle))


@dataclass
class ConfigError(UserError):
    msg: str

    def __str__(self):
        return self.msg


@dataclass
class InputError(UserError):
    expected: str
    got: Any

    def __str__(self):
        return f"Could not read {self.got!r} as {self.expected}"


class ComputationError(UserError):
    """Numerical failures. These map to exit code 3; findings (failing
    hypotheses, bounds or escape certificates) are never raised."""

    exit_code: ClassVar[int] = 3


@dataclass
class DomainError(ComputationError):
    z: complex
    theta_max: float

    def __str__(self):
        return f"Argument {self.z} lies outside the cone |arg z| < {self.theta_max:.4f}."


@dataclass
class ContourConstructionError(ComputationError):
    r: float
    message: str

    def __str__(self):
        return f"Contour construction failed at r = {self.r:.6g}: {self.message}"


@dataclass
class NonEllipticTruncation(ComputationError):
    edge: str
    certificate: dict[str, float]

    def __str__(self):
        return (
            f"Scaled symbol is not elliptic near the `{self.edge}` truncation edge: "
            f"{self.certificate}"
        )


@dataclass
class EigensolveError(ComputationError):
    message: str
    condition: float

    def __str__(self):
        return f"{self.message} (condition number estimate {self.condition:.3e})"


@dataclass
class CutoffNotFound(ComputationError):
    searched: int
    floor: float

    def __str__(self):
        return (
            f"No elliptic mode cutoff within {self.searched} modes at floor {self.floor}; "
            f"increase `max_modes` or the window grid."
        )


@dataclass
class DivergentIntegral(ComputationError):
    piece: str
    diagnostic: str

    def __str__(self):
        return f"Volume integral over `{self.piece}` does not converge: {self.diagnostic}"


@dataclass
class UnsupportedModelError(ComputationError):
    msg: str

    def __str__(self):
        return self.msg
