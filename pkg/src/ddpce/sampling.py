"""
Monte Carlo input generation and sample-set persistence.

Each input dimension draws from its own PCG64 stream.  The stream for
dimension ``j`` (0-based) is seeded with ``SeedSequence(seed, spawn_key=(j,))``,
so appending a dimension to an :class:`InputSpec` leaves the draws of the
existing dimensions untouched.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, SampleParseError

__all__ = [
    "Uniform",
    "Normal",
    "DiscreteUniform",
    "Empirical",
    "InputSpec",
    "SampleSet",
    "parse_distribution",
    "dimension_rng",
    "draw_samples",
    "load_samples",
    "save_samples",
]


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ConfigurationError(
                f"uniform({self.lo}, {self.hi}): need finite lo < hi"
            )

    def draw(self, rng, m):
        return rng.uniform(self.lo, self.hi, size=m)

    def contains(self, values):
        values = np.asarray(values)
        return (values >= self.lo) & (values < self.hi)

    def __str__(self):
        return f"uniform({self.lo!r}, {self.hi!r})"


@dataclass(frozen=True)
class Normal:
    mean: float
    std: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.std)) or self.std <= 0:
            raise ConfigurationError(
                f"normal({self.mean}, {self.std}): need finite mean and std > 0"
            )

    def draw(self, rng, m):
        return rng.normal(self.mean, self.std, size=m)

    def contains(self, values):
        return np.isfinite(np.asarray(values, dtype=float))

    def __str__(self):
        return f"normal({self.mean!r}, {self.std!r})"


@dataclass(frozen=True)
class DiscreteUniform:
    """Equiprobable draw from a finite list of values."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigurationError("discrete-uniform: value list is empty")
        if not all(math.isfinite(v) for v in vals):
            raise ConfigurationError("discrete-uniform: values must be finite")
        object.__setattr__(self, "values", vals)

    def draw(self, rng, m):
        support = np.asarray(self.values)
        return support[rng.integers(0, len(support), size=m)]

    def contains(self, values):
        return np.isin(np.asarray(values), np.asarray(self.values))

    def __str__(self):
        return "discrete(" + ", ".join(repr(v) for v in self.values) + ")"


@dataclass(frozen=True)
class Empirical:
    """Bootstrap draw (with replacement) from values stored in a file.

    The file is either a single column of numbers, optionally headed, or a
    sample CSV from which ``column`` is taken.
    """

    path: str
    column: Optional[str] = None
    values: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if not self.values:
            object.__setattr__(self, "values", tuple(_read_column(self.path, self.column)))
        if not self.values:
            raise ConfigurationError(f"empirical({self.path}): no values")

    def draw(self, rng, m):
        support = np.asarray(self.values)
        return support[rng.integers(0, len(support), size=m)]

    def contains(self, values):
        return np.isin(np.asarray(values), np.asarray(self.values))

    def __str__(self):
        if self.column is None:
            return f"empirical({self.path})"
        return f"empirical({self.path}, {self.column})"


Distribution = Union[Uniform, Normal, DiscreteUniform, Empirical]


def _read_column(path, column):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ConfigurationError(f"empirical: cannot read {path}: {exc}") from exc
    if not rows:
        return []
    header = None
    try:
        float(rows[0][0])
    except ValueError:
        header, rows = rows[0], rows[1:]
    idx = 0
    if column is not None:
        if header is None or column not in header:
            raise ConfigurationError(f"empirical: column {column!r} not in {path}")
        idx = header.index(column)
    out = []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        try:
            v = float(row[idx])
        except (ValueError, IndexError) as exc:
            raise SampleParseError("non-numeric value", row=lineno, column=column or idx) from exc
        if not math.isfinite(v):
            raise SampleParseError("non-finite value", row=lineno, column=column or idx)
        out.append(v)
    return out


_DIST_RE = re.compile(r"^\s*([a-z_\-]+)\s*\((.*)\)\s*$", re.IGNORECASE)


def parse_distribution(text: str) -> Distribution:
    """Parse a descriptor such as ``uniform(0.8, 1.2)`` or ``discrete(6, 12, 18)``.

    Recognised names: ``uniform``, ``normal``, ``discrete`` (alias
    ``discrete-uniform``), ``discrete_range(lo, hi[, step])`` for an
    inclusive integer range, and ``empirical(path[, column])``.
    """
    match = _DIST_RE.match(text)
    if match is None:
        raise ConfigurationError(f"cannot parse distribution descriptor {text!r}")
    name = match.group(1).lower().replace("-", "_")
    args = [a.strip() for a in match.group(2).split(",") if a.strip()]
    if name == "empirical":
        if not 1 <= len(args) <= 2:
            raise ConfigurationError("empirical(path[, column]) takes 1 or 2 arguments")
        return Empirical(args[0], args[1] if len(args) == 2 else None)
    try:
        nums = [float(a) for a in args]
    except ValueError as exc:
        raise ConfigurationError(f"non-numeric argument in {text!r}") from exc
    if name == "uniform" and len(nums) == 2:
        return Uniform(*nums)
    if name == "normal" and len(nums) == 2:
        return Normal(*nums)
    if name in ("discrete", "discrete_uniform"):
        return DiscreteUniform(tuple(nums))
    if name == "discrete_range" and len(nums) in (2, 3):
        step = nums[2] if len(nums) == 3 else 1.0
        if step <= 0:
            raise ConfigurationError("discrete_range step must be positive")
        n = int(math.floor((nums[1] - nums[0]) / step + 1e-9)) + 1
        return DiscreteUniform(tuple(nums[0] + k * step for k in range(max(n, 0))))
    raise ConfigurationError(f"unknown or malformed distribution {text!r}")


@dataclass(frozen=True)
class InputSpec:
    """Independent per-dimension input distributions."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(parse_distribution(d) if isinstance(d, str) else d for d in self.dims)
        if len(dims) < 1:
            raise ConfigurationError("InputSpec needs at least one dimension")
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return len(self.dims)


@dataclass(frozen=True, eq=False)
class SampleSet:
    """M realisations of a d-dimensional input, optionally with responses."""

    x: np.ndarray
    y: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ConfigurationError(f"sample matrix must be M x d with M, d >= 1, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ConfigurationError("sample matrix contains non-finite entries")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if self.y is not None:
            y = np.array(self.y, dtype=float, copy=True).reshape(-1)
            if y.shape[0] != x.shape[0]:
                raise ConfigurationError(f"len(y)={y.shape[0]} does not match M={x.shape[0]}")
            if not np.all(np.isfinite(y)):
                raise ConfigurationError("responses contain non-finite entries")
            y.setflags(write=False)
            object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def with_responses(self, y) -> "SampleSet":
        return SampleSet(self.x, y, self.seed)

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        if (self.y is None) != (other.y is None):
            return False
        return np.array_equal(self.x, other.x) and (
            self.y is None or np.array_equal(self.y, other.y)
        )


def dimension_rng(seed: int, j: int) -> np.random.Generator:
    """Generator for dimension ``j`` of a sample drawn with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(j,))))


def draw_samples(spec: InputSpec, m: int, seed: int) -> SampleSet:
    """Draw ``m`` independent realisations of ``spec``.

    Output is a pure function of ``(spec, m, seed)``.
    """
    if m < 1:
        raise ConfigurationError(f"sample count must be >= 1, got {m}")
    if isinstance(spec, (list, tuple)):
        spec = InputSpec(tuple(spec))
    cols = [dist.draw(dimension_rng(seed, j), m) for j, dist in enumerate(spec.dims)]
    return SampleSet(np.column_stack(cols), None, int(seed))


def save_samples(s: SampleSet, path) -> None:
    """Write ``s`` as CSV with header ``x1,...,xd[,y]``.

    Floats are written with ``repr`` so that a reload is bit-exact.
    """
    header = [f"x{j + 1}" for j in range(s.d)]
    if s.y is not None:
        header.append("y")
    lines = [",".join(header)]
    for i in range(s.m):
        row = [repr(float(v)) for v in s.x[i]]
        if s.y is not None:
            row.append(repr(float(s.y[i])))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_samples(path) -> SampleSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise SampleParseError(f"sample file not found: {path}") from exc
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise SampleParseError("empty sample file", row=1)
    header = [h.strip() for h in lines[0].split(",")]
    has_y = header[-1] == "y"
    xcols = header[:-1] if has_y else header
    expected = [f"x{j + 1}" for j in range(len(xcols))]
    if not xcols or xcols != expected:
        raise SampleParseError(f"header must be x1,...,xd[,y], got {lines[0]!r}", row=1)
    if len(lines) < 2:
        raise SampleParseError("no data rows", row=2)

    data = np.empty((len(lines) - 1, len(header)))
    for i, line in enumerate(lines[1:]):
        rowno = i + 2
        cells = line.split(",")
        if len(cells) != len(header):
            raise SampleParseError(
                f"expected {len(header)} cells, found {len(cells)}", row=rowno
            )
        for j, cell in enumerate(cells):
            try:
                v = float(cell)
            except ValueError:
                raise SampleParseError(f"non-numeric cell {cell!r}", row=rowno, column=header[j]) from None
            if not math.isfinite(v):
                raise SampleParseError(f"non-finite cell {cell!r}", row=rowno, column=header[j])
            data[i, j] = v
    if has_y:
        return SampleSet(data[:, :-1], data[:, -1])
    return SampleSet(data)
