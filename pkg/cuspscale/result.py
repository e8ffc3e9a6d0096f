"""Outcomes of jobs: `Ok(value)` or a falsy `Failure`. A failure that
propagates through dependents keeps its root causes."""

from dataclasses import dataclass
from typing import Generic, TypeVar

T = TypeVar("T")
R = TypeVar("R")


class Failure(Exception):
    def __bool__(self):
        return False

    def causes(self) -> list["Failure"]:
        return [self]


@dataclass
class JobFailure(Failure):
    """A numerical kernel raised inside the job that creates `key`."""

    key: str
    message: str

    def __post_init__(self):
        Exception.__init__(self, str(self))

    def __str__(self):
        return f"{self.key}: {self.message}"


@dataclass
class MissingFailure(Failure, Generic[T]):
    key: T

    def __str__(self):
        return f"No job computes `{self.key}`"


@dataclass
class DependencyFailure(Failure, Generic[T]):
    dependencies: dict[T, Failure]

    def __str__(self):
        return "\n".join(f"{key} -> {fail}" for key, fail in self.dependencies.items())

    def causes(self) -> list[Failure]:
        out: list[Failure] = []
        for fail in self.dependencies.values():
            out.extend(c for c in fail.causes() if c not in out)
        return out


@dataclass
class Ok(Generic[R]):
    value: R

    def __bool__(self):
        return True


Result = Failure | Ok[R]
