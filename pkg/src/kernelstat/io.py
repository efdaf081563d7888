"""JSON experiment files.

Layout::

    {
      "space": ["00", "01", "10", "11"],          # or {"id": ..., "points": [...]}
      "spaces": {"T": ["0", "1", "2"]},           # optional named spaces
      "family": {"0.2": ["16/25", "4/25", "4/25", "1/25"], ...},
      "estimand": {"0.2": ["1/5"], ...},          # optional
      "kernels": {
        "coinflip": {"target": {"grid": [0, 1]},
                     "rows": {"00": [1, 0], "01": ["1/2", "1/2"], ...}}
      },
      "statistics": {"sumT": {"target": "T", "map": {"00": "0", ...}}},
      "grids": {"halfT": {"space": "T", "dim": 1, "values": {"0": [0], ...}}}
    }

A ``target`` is a named space, a list of point labels, or ``{"grid": [...]}``
for numeric outputs (scalars or vectors). Numbers may be JSON numbers or
``"p/q"`` / decimal strings; rational strings stay exact in the exact backend.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

from .algebra import dirac_kernel
from .conditioning import RealKernel, real_statistic
from .experiment import Experiment
from .spaces import (
    EXACT,
    FiniteSpace,
    Kernel,
    KernelStatError,
    MassNotOne,
    NegativeMass,
    RowNotStochastic,
    Statistic,
    ValueGrid,
    as_array,
    grid_label,
    make_distribution,
    make_kernel,
)

MAIN_SPACE_ID = "Omega"


class ParseError(KernelStatError):
    pass


class ValidationError(KernelStatError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Model:
    """Everything defined by one experiment file, resolved and validated."""

    experiment: Experiment
    spaces: dict = field(default_factory=dict)
    kernels: dict = field(default_factory=dict)
    statistics: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)

    @property
    def backend(self) -> str:
        return self.experiment.backend

    def kernel(self, name: str) -> Kernel:
        """A kernel by name; statistics are returned as their Dirac kernels."""
        if name in self.kernels:
            return self.kernels[name]
        if name in self.statistics:
            return dirac_kernel(self.statistics[name], self.backend)
        raise KeyError(f"no kernel or statistic named {name!r}")

    def grid_for(self, space: FiniteSpace) -> ValueGrid | None:
        for g in self.grids.values():
            if g.space == space:
                return g
        return None

    def estimator(self, name: str) -> RealKernel:
        """A kernel or statistic whose target carries a numeric grid."""
        if name in self.statistics:
            T = self.statistics[name]
            grid = self.grid_for(T.target)
            if grid is None:
                raise KeyError(f"statistic {name!r} has no numeric grid on its target {T.target.id!r}")
            return real_statistic(T, grid, self.backend)
        K = self.kernel(name)
        grid = self.grid_for(K.target)
        if grid is None:
            raise KeyError(f"kernel {name!r} has no numeric grid on its target {K.target.id!r}")
        return RealKernel(K, grid)

    def real_statistic(self, name: str) -> tuple[Statistic, ValueGrid]:
        if name not in self.statistics:
            raise KeyError(f"no statistic named {name!r}")
        T = self.statistics[name]
        grid = self.grid_for(T.target)
        if grid is None:
            raise KeyError(f"statistic {name!r} has no numeric grid on its target {T.target.id!r}")
        return T, grid


def _points(raw, path: str) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ValidationError(path, "expected a non-empty list of point labels")
    labels = tuple(str(p) for p in raw)
    if len(set(labels)) != len(labels):
        raise ValidationError(path, "point labels must be distinct")
    return labels


def _vector(raw, backend, path):
    items = raw if isinstance(raw, list) else [raw]
    try:
        return as_array(items, backend)
    except (TypeError, ValueError, ZeroDivisionError, ArithmeticError) as exc:
        raise ValidationError(path, f"not a number list ({exc})") from None


def _is_number(x) -> bool:
    return isinstance(x, (int, Decimal)) and not isinstance(x, bool)


def _numeric_grid(space_id: str, raw, backend: str, path: str) -> ValueGrid:
    if not isinstance(raw, list) or not raw:
        raise ValidationError(path, "grid must be a non-empty list of numbers or vectors")
    rows = [_vector(v, backend, f"{path}/{i}") for i, v in enumerate(raw)]
    if len({len(r) for r in rows}) != 1:
        raise ValidationError(path, "grid vectors must share one dimension")
    arr = as_array([list(r) for r in rows], backend)
    labels = tuple(grid_label(r) for r in arr)
    if len(set(labels)) != len(labels):
        raise ValidationError(path, "grid values must be distinct")
    return ValueGrid(FiniteSpace(space_id, labels), arr)


class _Loader:
    def __init__(self, doc, backend):
        if not isinstance(doc, dict):
            raise ValidationError("/", "top level must be an object")
        self.doc = doc
        self.backend = backend
        self.spaces: dict[str, FiniteSpace] = {}
        self.grids: dict[str, ValueGrid] = {}

    def space_ref(self, raw, path: str, owner: str) -> FiniteSpace:
        if isinstance(raw, str):
            if raw not in self.spaces:
                raise ValidationError(path, f"unknown space {raw!r}")
            return self.spaces[raw]
        if isinstance(raw, dict) and "grid" in raw:
            if owner in self.grids:
                raise ValidationError(path, f"grid name {owner!r} already used")
            grid = _numeric_grid(owner, raw["grid"], self.backend, f"{path}/grid")
            self.grids[owner] = grid
            return grid.space
        if isinstance(raw, list):
            if raw and all(_is_number(x) for x in raw):
                return self.space_ref({"grid": raw}, path, owner)
            return FiniteSpace(owner, _points(raw, path))
        raise ValidationError(path, "expected a space name, a label list or {\"grid\": [...]}")

    def load(self) -> Model:
        doc = self.doc
        if "space" not in doc:
            raise ValidationError("space", "missing sample space")
        raw = doc["space"]
        if isinstance(raw, dict):
            main = FiniteSpace(str(raw.get("id", MAIN_SPACE_ID)), _points(raw.get("points"), "space/points"))
        else:
            main = FiniteSpace(MAIN_SPACE_ID, _points(raw, "space"))
        self.spaces[main.id] = main
        for name, pts in (doc.get("spaces") or {}).items():
            if name in self.spaces:
                raise ValidationError(f"spaces/{name}", "duplicate space name")
            self.spaces[name] = FiniteSpace(name, _points(pts, f"spaces/{name}"))

        family = {}
        raw_family = doc.get("family")
        if not isinstance(raw_family, dict) or not raw_family:
            raise ValidationError("family", "expected a non-empty object theta -> probability list")
        for theta, masses in raw_family.items():
            path = f"family/{theta}"
            vec = _vector(masses, self.backend, path)
            if len(vec) != len(main):
                raise ValidationError(path, f"expected {len(main)} probabilities, got {len(vec)}")
            try:
                family[str(theta)] = make_distribution(main, vec, self.backend)
            except (NegativeMass, MassNotOne) as exc:
                raise ValidationError(path, str(exc)) from None

        estimand = None
        if doc.get("estimand") is not None:
            raw_est = doc["estimand"]
            if not isinstance(raw_est, dict):
                raise ValidationError("estimand", "expected an object theta -> number list")
            estimand = {}
            for theta in family:
                if theta not in raw_est:
                    raise ValidationError(f"estimand/{theta}", "missing estimand value")
                estimand[theta] = _vector(raw_est[theta], self.backend, f"estimand/{theta}")
            for theta in raw_est:
                if theta not in family:
                    raise ValidationError(f"estimand/{theta}", "unknown theta label")
            if len({len(v) for v in estimand.values()}) != 1:
                raise ValidationError("estimand", "all estimand values must have the same dimension")
        experiment = Experiment(main, family, estimand)

        statistics = {}
        for name, entry in (doc.get("statistics") or {}).items():
            statistics[name] = self.statistic(name, entry)
        kernels = {}
        for name, entry in (doc.get("kernels") or {}).items():
            if name in statistics:
                raise ValidationError(f"kernels/{name}", "name already used by a statistic")
            kernels[name] = self.kernel(name, entry)
        for name, entry in (doc.get("grids") or {}).items():
            self.grid(name, entry)
        return Model(experiment, dict(self.spaces), kernels, statistics, dict(self.grids))

    def _source(self, entry, path):
        return self.space_ref(entry.get("source", MAIN_SPACE_ID if MAIN_SPACE_ID in self.spaces
                                       else next(iter(self.spaces))), f"{path}/source", "")

    def statistic(self, name, entry) -> Statistic:
        path = f"statistics/{name}"
        if not isinstance(entry, dict) or "target" not in entry or "map" not in entry:
            raise ValidationError(path, "expected {\"target\": ..., \"map\": {...}}")
        source = self._source(entry, path)
        target = self.space_ref(entry["target"], f"{path}/target", name)
        grid = self.grids.get(name) if target.id == name else None
        mapping = entry["map"]
        if not isinstance(mapping, dict):
            raise ValidationError(f"{path}/map", "expected an object source point -> target point")
        image = []
        for p in source.points:
            if p not in mapping:
                raise ValidationError(f"{path}/map/{p}", "missing image")
            image.append(self._target_index(target, grid, mapping[p], f"{path}/map/{p}"))
        for p in mapping:
            if p not in source:
                raise ValidationError(f"{path}/map/{p}", f"unknown source point in {source.id!r}")
        return Statistic(source, target, tuple(image))

    def _target_index(self, target, grid, value, path) -> int:
        if isinstance(value, str) and value in target:
            return target.index(value)
        if grid is not None:
            vec = _vector(value, self.backend, path)
            label = grid_label(vec)
            if label in target:
                return target.index(label)
        raise ValidationError(path, f"{value!r} is not a point of {target.id!r}")

    def kernel(self, name, entry) -> Kernel:
        path = f"kernels/{name}"
        if not isinstance(entry, dict) or "target" not in entry or "rows" not in entry:
            raise ValidationError(path, "expected {\"target\": ..., \"rows\": {...}}")
        source = self._source(entry, path)
        target = self.space_ref(entry["target"], f"{path}/target", name)
        rows_raw = entry["rows"]
        if not isinstance(rows_raw, dict):
            raise ValidationError(f"{path}/rows", "expected an object source point -> probability list")
        rows = []
        for p in source.points:
            rpath = f"{path}/rows/{p}"
            if p not in rows_raw:
                raise ValidationError(rpath, "missing row")
            vec = _vector(rows_raw[p], self.backend, rpath)
            if len(vec) != len(target):
                raise ValidationError(rpath, f"expected {len(target)} probabilities, got {len(vec)}")
            rows.append(list(vec))
        for p in rows_raw:
            if p not in source:
                raise ValidationError(f"{path}/rows/{p}", f"unknown source point in {source.id!r}")
        try:
            return make_kernel(source, target, rows, self.backend)
        except RowNotStochastic as exc:
            raise ValidationError(f"{path}/rows/{exc.row}", str(exc)) from None

    def grid(self, name, entry):
        path = f"grids/{name}"
        if name in self.grids:
            raise ValidationError(path, "grid name already used")
        if not isinstance(entry, dict) or "space" not in entry or "values" not in entry:
            raise ValidationError(path, "expected {\"space\": ..., \"dim\": k, \"values\": ...}")
        space = self.space_ref(entry["space"], f"{path}/space", name)
        raw = entry["values"]
        if isinstance(raw, dict):
            missing = [p for p in space.points if p not in raw]
            if missing:
                raise ValidationError(f"{path}/values/{missing[0]}", "missing value")
            raw = [raw[p] for p in space.points]
        if not isinstance(raw, list) or len(raw) != len(space):
            raise ValidationError(f"{path}/values", f"expected {len(space)} values")
        vecs = [_vector(v, self.backend, f"{path}/values/{p}") for p, v in zip(space.points, raw)]
        dim = entry.get("dim", len(vecs[0]))
        if any(len(v) != dim for v in vecs):
            raise ValidationError(f"{path}/dim", f"every value must have dimension {dim}")
        self.grids[name] = ValueGrid(space, as_array([list(v) for v in vecs], self.backend))


def loads(text: str, backend: str = EXACT) -> Model:
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return _Loader(doc, backend).load()


def load(path, backend: str = EXACT) -> Model:
    """Read and validate an experiment file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads(text, backend)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    return repr(float(x))


def _vec(v):
    return [_num(x) for x in v]


def to_document(model: Model) -> dict:
    """Inverse of :func:`loads` on validated models."""
    main = model.experiment.space
    doc: dict = {"space": {"id": main.id, "points": list(main.points)}}
    named = {n: s for n, s in model.spaces.items() if n != main.id}
    if named:
        doc["spaces"] = {n: list(s.points) for n, s in named.items()}
    doc["family"] = {t: _vec(P.mass) for t, P in model.experiment.family.items()}
    if model.experiment.estimand is not None:
        doc["estimand"] = {t: _vec(v) for t, v in model.experiment.estimand.items()}

    inline = set()

    def ref(space: FiniteSpace, owner: str):
        for n, s in model.spaces.items():
            if s == space:
                return n
        g = model.grids.get(owner)
        if g is not None and g.space == space and space.id == owner:
            inline.add(owner)
            return {"grid": [_vec(r) if g.dim > 1 else _num(r[0]) for r in g.values]}
        return list(space.points)

    if model.statistics:
        doc["statistics"] = {}
        for name, T in model.statistics.items():
            doc["statistics"][name] = {"source": ref(T.source, ""), "target": ref(T.target, name),
                                       "map": T.as_dict()}
    if model.kernels:
        doc["kernels"] = {}
        for name, K in model.kernels.items():
            doc["kernels"][name] = {"source": ref(K.source, ""), "target": ref(K.target, name),
                                    "rows": {p: _vec(r) for p, r in zip(K.source.points, K.rows)}}
    grids = {n: g for n, g in model.grids.items() if n not in inline}
    if grids:
        doc["grids"] = {}
        for name, g in grids.items():
            doc["grids"][name] = {"space": ref(g.space, name), "dim": g.dim,
                                  "values": {p: _vec(r) for p, r in zip(g.space.points, g.values)}}
    return doc


def dumps(model: Model) -> str:
    return json.dumps(to_document(model), indent=2) + "\n"


def dump(model: Model, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")
