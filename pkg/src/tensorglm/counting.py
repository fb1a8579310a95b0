"""Exact scalar-operation counters for instrumented kernels."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class OpCounter:
    """Tally of scalar multiplies, adds (including subtractions) and divides.

    Kernels that accept a ``counter`` add exactly the number of scalar
    operations they execute.  Counts are optionally attributed to a named
    stage (``gram``, ``solve``, ...) so a benchmark can report them per stage.
    """

    multiplies: int = 0
    adds: int = 0
    divides: int = 0
    stages: dict[str, int] = field(default_factory=dict)
    stage: str | None = None

    def add(self, multiplies: int = 0, adds: int = 0, divides: int = 0) -> None:
        if multiplies < 0 or adds < 0 or divides < 0:
            raise ValueError("operation counts must be non-negative")
        self.multiplies += multiplies
        self.adds += adds
        self.divides += divides
        if self.stage is not None:
            self.stages[self.stage] = (
                self.stages.get(self.stage, 0) + multiplies + adds + divides
            )

    @property
    def total(self) -> int:
        return self.multiplies + self.adds + self.divides


def tally(counter: OpCounter | None, multiplies: int = 0, adds: int = 0, divides: int = 0) -> None:
    if counter is not None:
        counter.add(multiplies, adds, divides)


class stage:
    """Context manager attributing counts to a named stage."""

    def __init__(self, counter: OpCounter | None, name: str):
        self.counter = counter
        self.name = name
        self._previous: str | None = None

    def __enter__(self) -> OpCounter | None:
        if self.counter is not None:
            self._previous = self.counter.stage
            self.counter.stage = self.name
        return self.counter

    def __exit__(self, *exc) -> None:
        if self.counter is not None:
            self.counter.stage = self._previous
