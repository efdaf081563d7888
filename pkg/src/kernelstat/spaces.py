"""Finite spaces, probability vectors, stochastic-matrix kernels and grids.

Every numeric container holds a numpy array in one of two backends:

``exact``
    ``dtype=object`` arrays of :class:`fractions.Fraction`; arithmetic is
    closed and every comparison is decided without tolerance.
``float``
    ``float64`` arrays; equality checks use the active tolerance
    (see :func:`tolerance` and :func:`using_tolerance`).

All containers are immutable once built.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)

_tolerance = contextvars.ContextVar("kernelstat_tolerance", default=1e-9)


class KernelStatError(Exception):
    """Base class for all library errors."""


class SpaceMismatch(KernelStatError):
    pass


class NegativeMass(KernelStatError):
    pass


class MassNotOne(KernelStatError):
    pass


class RowNotStochastic(KernelStatError):
    def __init__(self, row, message):
        super().__init__(message)
        self.row = row


class UnknownPoint(KernelStatError):
    pass


class BackendMismatch(KernelStatError):
    pass


def tolerance() -> float:
    """Absolute tolerance used by float-backend equality checks."""
    return _tolerance.get()


@contextlib.contextmanager
def using_tolerance(eps: float):
    token = _tolerance.set(float(eps))
    try:
        yield
    finally:
        _tolerance.reset(token)


# ---------------------------------------------------------------------------
# scalar helpers
# ---------------------------------------------------------------------------

def to_fraction(x) -> Fraction:
    """Parse ``x`` as an exact rational.

    Accepts ints, Fractions, ``"p/q"`` or decimal strings, and floats. Floats
    go through their shortest repr so that ``0.7`` becomes ``7/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(x, (int, Rational, Decimal)):
        return Fraction(x)
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, (np.integer,)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a number")


def to_scalar(x, backend: str = EXACT):
    if backend == EXACT:
        return to_fraction(x)
    if isinstance(x, str):
        return float(Fraction(x.strip()))
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers")
    return float(x)


def as_array(values, backend: str = EXACT) -> np.ndarray:
    """Build a read-only array of scalars in ``backend`` from nested sequences."""
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if isinstance(values, np.ndarray) and backend == backend_of(values) and not values.flags.writeable:
        return values
    raw = np.asarray(values, dtype=object)
    if backend == EXACT:
        out = np.empty(raw.shape, dtype=object)
        for idx, v in np.ndenumerate(raw):
            out[idx] = to_fraction(v)
    else:
        out = np.empty(raw.shape, dtype=float)
        for idx, v in np.ndenumerate(raw):
            out[idx] = to_scalar(v, FLOAT)
    out.flags.writeable = False
    return out


def frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def zeros(shape, backend: str) -> np.ndarray:
    if backend == EXACT:
        return np.full(shape, Fraction(0), dtype=object)
    return np.zeros(shape, dtype=float)


def backend_of(arr: np.ndarray) -> str:
    return EXACT if arr.dtype == object else FLOAT


def common_backend(*arrays: np.ndarray) -> str:
    kinds = {backend_of(a) for a in arrays}
    if len(kinds) != 1:
        raise BackendMismatch("operands mix exact and float backends; convert one side first")
    return kinds.pop()


def is_zero(x, backend: str) -> bool:
    if backend == EXACT:
        return x == 0
    return abs(x) <= tolerance()


def is_positive(x, backend: str) -> bool:
    if backend == EXACT:
        return x > 0
    return x > tolerance()


def scalars_equal(a, b, backend: str) -> bool:
    if backend == EXACT:
        return a == b
    return abs(float(a) - float(b)) <= tolerance()


def arrays_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Backend-aware array equality (exact, or within tolerance in float mode)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    if backend_of(a) == EXACT and backend_of(b) == EXACT:
        return bool(np.all(a == b))
    return bool(np.all(np.abs(a.astype(float) - b.astype(float)) <= tolerance()))


def to_float_array(arr: np.ndarray) -> np.ndarray:
    return frozen(np.asarray(arr, dtype=float).copy())


def to_exact_array(arr: np.ndarray) -> np.ndarray:
    return as_array(arr, EXACT)


def convert(arr: np.ndarray, backend: str) -> np.ndarray:
    if backend_of(arr) == backend:
        return arr
    return to_exact_array(arr) if backend == EXACT else to_float_array(arr)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteSpace:
    """A labelled finite set; every subset is an event."""

    id: str
    points: tuple

    def __post_init__(self):
        pts = tuple(str(p) for p in self.points)
        if not pts:
            raise ValueError(f"space {self.id!r} must have at least one point")
        if len(set(pts)) != len(pts):
            seen = set()
            dup = next(p for p in pts if p in seen or seen.add(p))
            raise ValueError(f"space {self.id!r} has duplicate point {dup!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(pts)})

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, label):
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise UnknownPoint(f"{label!r} is not a point of {self.id!r}") from None

    def indices(self, labels: Iterable[str]) -> list[int]:
        return [self.index(p) for p in labels]

    def mask(self, event: Iterable[str]) -> np.ndarray:
        m = np.zeros(len(self), dtype=bool)
        for p in event:
            m[self.index(p)] = True
        return m

    def __repr__(self):
        return f"FiniteSpace({self.id!r}, {list(self.points)!r})"


def _same_space(a: FiniteSpace, b: FiniteSpace, what: str):
    if a != b:
        raise SpaceMismatch(f"{what}: {a.id!r} {list(a.points)} != {b.id!r} {list(b.points)}")


class Distribution:
    """Probability vector over a :class:`FiniteSpace`."""

    __slots__ = ("space", "mass")

    def __init__(self, space: FiniteSpace, mass: np.ndarray):
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "mass", mass)

    def __setattr__(self, name, value):
        raise AttributeError("Distribution is immutable")

    @property
    def backend(self) -> str:
        return backend_of(self.mass)

    def __getitem__(self, label: str):
        return self.mass[self.space.index(label)]

    def support(self) -> tuple:
        return tuple(p for p, m in zip(self.space.points, self.mass) if is_positive(m, self.backend))

    def to_backend(self, backend: str) -> "Distribution":
        return Distribution(self.space, convert(self.mass, backend))

    def as_dict(self) -> dict:
        return dict(zip(self.space.points, self.mass))

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.space == other.space and arrays_equal(self.mass, other.mass)

    __hash__ = None

    def __repr__(self):
        body = ", ".join(f"{p}: {m}" for p, m in zip(self.space.points, self.mass))
        return f"Distribution({self.space.id}; {body})"


class Kernel:
    """Row-stochastic matrix from ``source`` points to ``target`` points."""

    __slots__ = ("source", "target", "rows")

    def __init__(self, source: FiniteSpace, target: FiniteSpace, rows: np.ndarray):
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, name, value):
        raise AttributeError("Kernel is immutable")

    @property
    def backend(self) -> str:
        return backend_of(self.rows)

    def row(self, label: str) -> Distribution:
        return Distribution(self.target, frozen(self.rows[self.source.index(label)].copy()))

    def to_backend(self, backend: str) -> "Kernel":
        return Kernel(self.source, self.target, convert(self.rows, backend))

    def is_deterministic(self) -> bool:
        """True when every row is a point mass (the kernel of a statistic)."""
        b = self.backend
        for r in self.rows:
            if sum(1 for x in r if not is_zero(x, b)) != 1:
                return False
        return True

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return (self.source == other.source and self.target == other.target
                and arrays_equal(self.rows, other.rows))

    __hash__ = None

    def __repr__(self):
        return f"Kernel({self.source.id} -> {self.target.id}, shape={self.rows.shape}, {self.backend})"


@dataclass(frozen=True)
class Statistic:
    """Total map between finite spaces, stored as target indices."""

    source: FiniteSpace
    target: FiniteSpace
    map: tuple

    def __post_init__(self):
        if len(self.map) != len(self.source):
            raise ValueError("statistic must assign exactly one image to every source point")
        for i in self.map:
            if not 0 <= i < len(self.target):
                raise ValueError(f"statistic image index {i} outside target {self.target.id!r}")

    @classmethod
    def from_mapping(cls, source: FiniteSpace, target: FiniteSpace, mapping: Mapping[str, str]):
        missing = [p for p in source.points if p not in mapping]
        if missing:
            raise ValueError(f"statistic is not total: no image for {missing[0]!r}")
        extra = [p for p in mapping if p not in source]
        if extra:
            raise UnknownPoint(f"{extra[0]!r} is not a point of {source.id!r}")
        return cls(source, target, tuple(target.index(str(mapping[p])) for p in source.points))

    @classmethod
    def from_function(cls, source: FiniteSpace, target: FiniteSpace, fn):
        return cls(source, target, tuple(target.index(str(fn(p))) for p in source.points))

    @classmethod
    def identity(cls, space: FiniteSpace):
        return cls(space, space, tuple(range(len(space))))

    def __call__(self, label: str) -> str:
        return self.target.points[self.map[self.source.index(label)]]

    def then(self, other: "Statistic") -> "Statistic":
        """Composite ``other ∘ self``."""
        _same_space(self.target, other.source, "statistic composition")
        return Statistic(self.source, other.target, tuple(other.map[i] for i in self.map))

    def as_dict(self) -> dict:
        return {p: self.target.points[i] for p, i in zip(self.source.points, self.map)}


class ValueGrid:
    """Attaches one point of R^k to every point of a space.

    ``values`` has shape ``(len(space), dim)``. Value vectors need not be
    distinct; :meth:`collapse` merges duplicates.
    """

    __slots__ = ("space", "values")

    def __init__(self, space: FiniteSpace, values: np.ndarray):
        if values.ndim != 2 or values.shape[0] != len(space) or values.shape[1] < 1:
            raise ValueError(f"grid on {space.id!r} needs shape ({len(space)}, k>=1), got {values.shape}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("ValueGrid is immutable")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def backend(self) -> str:
        return backend_of(self.values)

    def value(self, label: str) -> np.ndarray:
        return self.values[self.space.index(label)]

    def to_backend(self, backend: str) -> "ValueGrid":
        return ValueGrid(self.space, convert(self.values, backend))

    def collapse(self, space_id: str | None = None) -> tuple[Statistic, "ValueGrid"]:
        """Merge points carrying equal vectors.

        Returns the statistic from this grid's space onto a space of distinct
        values (first-occurrence order) and the grid on that space.
        """
        distinct: list[tuple] = []
        where: dict[tuple, int] = {}
        image = []
        for row in self.values:
            key = _value_key(row, self.backend)
            if key not in where:
                where[key] = len(distinct)
                distinct.append(tuple(row))
            image.append(where[key])
        vals = frozen(np.array(distinct, dtype=self.values.dtype).reshape(len(distinct), self.dim))
        target = FiniteSpace(space_id or f"values({self.space.id})", _distinct_labels(distinct))
        return Statistic(self.space, target, tuple(image)), ValueGrid(target, vals)

    def __eq__(self, other):
        if not isinstance(other, ValueGrid):
            return NotImplemented
        return self.space == other.space and arrays_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"ValueGrid({self.space.id}, dim={self.dim}, {self.backend})"


def _value_key(row, backend):
    if backend == EXACT:
        return tuple(row)
    # float duplicates merge only when bitwise equal; tolerance merging is not transitive
    return tuple(float(x) for x in row)


def _distinct_labels(vectors) -> tuple:
    """Grid labels, suffixed ``~2``, ``~3``... when distinct float vectors print alike."""
    seen: dict[str, int] = {}
    out = []
    for v in vectors:
        label = grid_label(v)
        seen[label] = seen.get(label, 0) + 1
        out.append(label if seen[label] == 1 else f"{label}~{seen[label]}")
    return tuple(out)


def format_scalar(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def format_vector(v) -> str:
    return "[" + ", ".join(format_scalar(x) for x in v) + "]"


def grid_label(v) -> str:
    """Point label used for a numeric grid point: bare scalar when k = 1."""
    v = list(v)
    return format_scalar(v[0]) if len(v) == 1 else format_vector(v)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def make_distribution(space: FiniteSpace, mass: Sequence, backend: str = EXACT) -> Distribution:
    """Validate a probability vector on ``space``.

    Raises
    ------
    NegativeMass
        If some mass is negative.
    MassNotOne
        If the masses do not sum to one (exactly, or within tolerance).
    """
    arr = as_array(mass, backend)
    if arr.shape != (len(space),):
        raise ValueError(f"expected {len(space)} masses for {space.id!r}, got shape {arr.shape}")
    for p, m in zip(space.points, arr):
        if m < 0 and not is_zero(m, backend):
            raise NegativeMass(f"mass at {p!r} is negative ({format_scalar(m)})")
    total = arr.sum()
    if not scalars_equal(total, 1, backend):
        raise MassNotOne(f"masses on {space.id!r} sum to {format_scalar(total)}, not 1")
    return Distribution(space, arr)


def make_kernel(source: FiniteSpace, target: FiniteSpace, rows, backend: str = EXACT) -> Kernel:
    """Validate a row-stochastic matrix.

    Raises :class:`RowNotStochastic` naming the first offending source point.
    """
    arr = as_array(rows, backend)
    if arr.shape != (len(source), len(target)):
        raise ValueError(f"kernel {source.id!r}->{target.id!r} needs shape "
                         f"({len(source)}, {len(target)}), got {arr.shape}")
    _check_rows(source, arr)
    return Kernel(source, target, arr)


def _check_rows(source: FiniteSpace, arr: np.ndarray):
    backend = backend_of(arr)
    for p, r in zip(source.points, arr):
        if any(x < 0 and not is_zero(x, backend) for x in r):
            raise RowNotStochastic(p, f"row {p!r} has a negative entry")
        if any(x > 1 and not scalars_equal(x, 1, backend) for x in r):
            raise RowNotStochastic(p, f"row {p!r} has an entry above 1")
        s = r.sum()
        if not scalars_equal(s, 1, backend):
            raise RowNotStochastic(p, f"row {p!r} sums to {format_scalar(s)}, not 1")


def make_grid(space: FiniteSpace, values, backend: str = EXACT) -> ValueGrid:
    """Grid from one number (k = 1) or one vector per point."""
    raw = [v if isinstance(v, (list, tuple, np.ndarray)) else [v] for v in values]
    return ValueGrid(space, as_array(raw, backend))


def numeric_space(space_id: str, values, backend: str = EXACT) -> tuple[FiniteSpace, ValueGrid]:
    """A space whose points are the given numeric values, plus its grid."""
    raw = [v if isinstance(v, (list, tuple, np.ndarray)) else [v] for v in values]
    arr = as_array(raw, backend)
    space = FiniteSpace(space_id, tuple(grid_label(r) for r in arr))
    return space, ValueGrid(space, arr)


def event_mass(d: Distribution, event: Iterable[str]):
    """P(A) for an event given as a set of point labels."""
    idx = sorted({d.space.index(p) for p in event})
    total = Fraction(0) if d.backend == EXACT else 0.0
    for i in idx:
        total = total + d.mass[i]
    return total


def point_mass(space: FiniteSpace, label: str, backend: str = EXACT) -> Distribution:
    m = zeros(len(space), backend)
    m[space.index(label)] = 1
    if backend == EXACT:
        m[space.index(label)] = Fraction(1)
    return Distribution(space, frozen(m))


def uniform(space: FiniteSpace, backend: str = EXACT) -> Distribution:
    n = len(space)
    val = Fraction(1, n) if backend == EXACT else 1.0 / n
    return Distribution(space, frozen(np.full(n, val, dtype=object if backend == EXACT else float)))


def constant_kernel(source: FiniteSpace, dist: Distribution) -> Kernel:
    rows = np.empty((len(source), len(dist.space)), dtype=dist.mass.dtype)
    rows[:] = dist.mass
    return Kernel(source, dist.space, frozen(rows))
