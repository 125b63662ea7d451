"""Domain types shared by every analysis: periods, potentials, phases, energy sets."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class PotentialFormatError(ValueError):
    """Raised when a potential file cannot be parsed or has inconsistent dimensions."""


@dataclass(frozen=True)
class Period:
    """Horizontal period ``p`` (first lattice index) and vertical period ``q``."""

    p: int
    q: int

    def __post_init__(self):
        for name in ("p", "q"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ValueError(f"period component {name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @classmethod
    def parse(cls, text: str) -> "Period":
        """Parse the ``PxQ`` syntax, e.g. ``"5x4"``."""
        parts = text.lower().replace("×", "x").split("x")
        if len(parts) != 2:
            raise ValueError(f"period must look like PxQ, got {text!r}")
        try:
            return cls(int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise ValueError(f"period must look like PxQ, got {text!r}") from exc

    @property
    def size(self) -> int:
        return self.p * self.q

    @property
    def has_odd(self) -> bool:
        return self.p % 2 == 1 or self.q % 2 == 1

    def normalized_even(self) -> "Period":
        """Square even period ``(r, r)`` with ``r = lcm(p, q, 2)``."""
        r = math.lcm(self.p, self.q, 2)
        return Period(r, r)

    def normalized_odd(self) -> "Period":
        """Period used for the zero-energy argument, odd component first.

        ``(p, lcm(q, 4))`` if ``p`` is odd, otherwise ``(lcm(p, 4), q)``; in the
        latter case the components are swapped so that the odd period leads.
        Swapping the axes leaves the bands unchanged.
        """
        if self.p % 2 == 1:
            return Period(self.p, math.lcm(self.q, 4))
        if self.q % 2 == 1:
            return Period(self.q, math.lcm(self.p, 4))
        raise ValueError(f"normalized_odd needs an odd period component, got {self}")

    def divides(self, other: "Period") -> bool:
        return other.p % self.p == 0 and other.q % self.q == 0

    def __str__(self) -> str:
        return f"{self.p}x{self.q}"


@dataclass(frozen=True, eq=False)
class Potential:
    """One fundamental domain of a periodic potential, ``values[n, m] = V_{n,m}``.

    ``n`` runs over the horizontal period ``p`` and ``m`` over the vertical
    period ``q``. The array is stored read-only.
    """

    period: Period
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.period.p, self.period.q):
            raise ValueError(
                f"potential values have shape {values.shape}, expected {(self.period.p, self.period.q)}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("potential values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values) -> "Potential":
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 2:
            raise ValueError("potential values must form a 2D grid")
        return cls(Period(*arr.shape), arr)

    @classmethod
    def zero(cls, period: Period) -> "Potential":
        return cls(period, np.zeros((period.p, period.q)))

    @classmethod
    def constant(cls, period: Period, c: float) -> "Potential":
        return cls(period, np.full((period.p, period.q), float(c)))

    @classmethod
    def checkerboard(cls, delta: float) -> "Potential":
        """The period-(2,2) potential ``delta * (-1)**(n+m)``."""
        n, m = np.indices((2, 2))
        return cls(Period(2, 2), delta * (-1.0) ** (n + m))

    @classmethod
    def random(cls, period: Period, sup_norm: float, rng: np.random.Generator) -> "Potential":
        """Uniform random values rescaled so that ``sup_norm`` is attained exactly."""
        raw = rng.uniform(-1.0, 1.0, size=(period.p, period.q))
        peak = np.max(np.abs(raw))
        if peak == 0.0:
            return cls.zero(period)
        return cls(period, raw * (sup_norm / peak))

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def scaled(self, factor: float) -> "Potential":
        return Potential(self.period, self.values * factor)

    def retile(self, period: Period) -> "Potential":
        """Return the same potential described on a multiple of its period."""
        if not self.period.divides(period):
            raise ValueError(f"cannot retile period {self.period} to {period}")
        reps = (period.p // self.period.p, period.q // self.period.q)
        return Potential(period, np.tile(self.values, reps))

    def __add__(self, other: "Potential") -> "Potential":
        big = Period(math.lcm(self.period.p, other.period.p), math.lcm(self.period.q, other.period.q))
        return Potential(big, self.retile(big).values + other.retile(big).values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Potential):
            return NotImplemented
        return self.period == other.period and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.period, self.values.tobytes()))

    def to_dict(self) -> dict:
        return {"p": self.period.p, "q": self.period.q, "values": self.values.tolist()}


@dataclass(frozen=True)
class BlochPhase:
    """A point of the reduced Brillouin zone ``[0, pi]^2``.

    Phases outside the zone are rejected; folding is the caller's job.
    """

    theta: float
    phi: float

    def __post_init__(self):
        for name in ("theta", "phi"):
            value = float(getattr(self, name))
            if not (0.0 <= value <= math.pi):
                raise ValueError(f"{name}={value!r} lies outside [0, pi]")
            object.__setattr__(self, name, value)

    def in_units_of_pi(self) -> tuple[float, float]:
        return (self.theta / math.pi, self.phi / math.pi)


@dataclass(frozen=True, order=True)
class EnergyInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, energy: float) -> bool:
        return self.lo <= energy <= self.hi

    def expanded(self, amount: float) -> "EnergyInterval":
        return EnergyInterval(self.lo - amount, self.hi + amount)


def interval_union(intervals: Iterable[EnergyInterval], merge_tol: float = 0.0) -> list[EnergyInterval]:
    """Minimal sorted disjoint cover of ``intervals``.

    Neighbours whose gap is at most ``merge_tol`` are merged, so touching
    intervals always merge.
    """
    if merge_tol < 0:
        raise ValueError("merge_tol must be nonnegative")
    ordered = sorted(intervals)
    merged: list[EnergyInterval] = []
    for iv in ordered:
        if merged and iv.lo - merged[-1].hi <= merge_tol:
            last = merged[-1]
            merged[-1] = EnergyInterval(last.lo, max(last.hi, iv.hi))
        else:
            merged.append(iv)
    return merged


@dataclass(frozen=True)
class SpectrumApproximation:
    """Spectrum as a union of components with a two-sided error bound.

    ``unresolved_gaps`` lists gaps seen between band enclosures that were too
    narrow to certify at the working resolution; they are neither asserted
    present nor absent.
    """

    intervals: tuple[EnergyInterval, ...]
    error_bound: float
    unresolved_gaps: tuple[EnergyInterval, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        object.__setattr__(self, "unresolved_gaps", tuple(self.unresolved_gaps))
        if self.error_bound < 0:
            raise ValueError("error_bound must be nonnegative")
        for a, b in zip(self.intervals, self.intervals[1:]):
            if not b.lo - a.hi > 2 * self.error_bound:
                raise ValueError("components must be separated by more than 2*error_bound")

    @property
    def component_count(self) -> int:
        return len(self.intervals)

    @property
    def lo(self) -> float:
        return self.intervals[0].lo

    @property
    def hi(self) -> float:
        return self.intervals[-1].hi

    def to_dict(self) -> dict:
        return {
            "intervals": [[iv.lo, iv.hi] for iv in self.intervals],
            "error_bound": self.error_bound,
            "component_count": self.component_count,
            "unresolved_gaps": [[iv.lo, iv.hi] for iv in self.unresolved_gaps],
        }


def _parse_json_potential(text: str) -> Potential:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PotentialFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or not {"p", "q", "values"} <= data.keys():
        raise PotentialFormatError('JSON potential needs keys "p", "q", "values"')
    p, q, rows = data["p"], data["q"], data["values"]
    if not isinstance(rows, list) or len(rows) != p or any(not isinstance(r, list) or len(r) != q for r in rows):
        raise PotentialFormatError(f"values grid does not match declared dimensions p={p}, q={q}")
    return _checked_potential(Period(p, q), rows)


def _parse_csv_potential(text: str) -> Potential:
    rows: list[list[float]] = []
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    for lineno, row in enumerate(csv.reader(lines), start=1):
        try:
            rows.append([float(cell) for cell in row])
        except ValueError as exc:
            raise PotentialFormatError(f"row {lineno}: {exc}") from exc
    if not rows:
        raise PotentialFormatError("CSV potential is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise PotentialFormatError(f"ragged CSV rows with lengths {[len(r) for r in rows]}")
    return _checked_potential(Period(len(rows), widths.pop()), rows)


def _checked_potential(period: Period, rows: Sequence[Sequence[float]]) -> Potential:
    try:
        values = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise PotentialFormatError(f"non-numeric potential entry: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise PotentialFormatError("potential entries must be finite")
    return Potential(period, values)


def load_potential(path: str | Path, format: str | None = None) -> Potential:
    """Read a potential from a JSON or CSV file.

    The format defaults to the file extension. JSON files carry explicit
    ``p``/``q`` dimensions; CSV files hold ``p`` rows of ``q`` values with
    optional ``#`` comment lines.
    """
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    text = path.read_text()
    if fmt == "json":
        return _parse_json_potential(text)
    if fmt == "csv":
        return _parse_csv_potential(text)
    raise PotentialFormatError(f"unknown potential format {fmt!r}")


def save_potential(potential: Potential, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "json":
        path.write_text(json.dumps(potential.to_dict()))
    elif fmt == "csv":
        lines = [f"# p={potential.period.p} q={potential.period.q}"]
        lines += [",".join(repr(float(v)) for v in row) for row in potential.values]
        path.write_text("\n".join(lines) + "\n")
    else:
        raise PotentialFormatError(f"unknown potential format {fmt!r}")
