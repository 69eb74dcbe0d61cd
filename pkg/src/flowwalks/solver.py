"""Backend-neutral MILP models.

Models are built from ``Var``/``LinExpr`` objects and solved by a named
backend: ``highs`` (HiGHS through ``scipy.optimize.milp``) or ``exhaustive``,
a small propagate-and-branch search used as a reference in tests.  The
``FLOWWALKS_SOLVER`` environment variable picks the default backend.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import BackendUnavailable, MalformedModel, SolverError

INT_TOL = 1e-6
SENSES = ("<=", ">=", "==")


class Status:
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIMED_OUT = "TimedOut"


class LinExpr:
    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms: dict[int, float] = dict(terms or {})
        self.const = const

    @staticmethod
    def of(value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Var):
            return LinExpr({value.index: 1})
        if isinstance(value, (int, float, np.integer, np.floating)):
            return LinExpr(const=value)
        raise TypeError(f"cannot use {type(value).__name__} in a linear expression")

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def add_term(self, var: "Var", coef=1) -> "LinExpr":
        if coef:
            self.terms[var.index] = self.terms.get(var.index, 0) + coef
        return self

    def __iadd__(self, other):
        other = LinExpr.of(other)
        for i, c in other.terms.items():
            self.terms[i] = self.terms.get(i, 0) + c
        self.const += other.const
        return self

    def __add__(self, other):
        out = self.copy()
        out += other
        return out

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({i: -c for i, c in self.terms.items()}, -self.const)

    def __sub__(self, other):
        return self + (-LinExpr.of(other))

    def __rsub__(self, other):
        return LinExpr.of(other) + (-self)

    def __mul__(self, k):
        if not isinstance(k, (int, float, np.integer, np.floating)):
            raise TypeError("expressions can only be scaled by constants")
        return LinExpr({i: c * k for i, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __repr__(self):
        return f"LinExpr({self.terms}, {self.const})"


@dataclass(frozen=True)
class Var:
    index: int
    name: str

    def _e(self):
        return LinExpr({self.index: 1})

    def __add__(self, o):
        return self._e() + o

    __radd__ = __add__

    def __sub__(self, o):
        return self._e() - o

    def __rsub__(self, o):
        return LinExpr.of(o) - self._e()

    def __mul__(self, k):
        return self._e() * k

    __rmul__ = __mul__

    def __neg__(self):
        return -self._e()


def quicksum(items: Iterable) -> LinExpr:
    out = LinExpr()
    for it in items:
        out += it
    return out


@dataclass(frozen=True)
class Constraint:
    terms: tuple[tuple[int, float], ...]   # sorted by variable index
    sense: str
    rhs: float
    name: str


@dataclass
class Params:
    time_limit: float = 300.0
    gap: float = 1e-4
    threads: int | None = None


class Model:
    def __init__(self, name: str = "model"):
        self.name = name
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.vtype: list[str] = []       # "C", "I" or "B"
        self.constraints: list[Constraint] = []
        self.objective = LinExpr()
        self.sense = "min"
        self.params = Params()
        self._by_name: dict[str, Var] = {}

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def add_var(self, name: str, lb=0, ub=math.inf, vtype="C") -> Var:
        if vtype not in ("C", "I", "B"):
            raise MalformedModel(f"unknown variable type {vtype!r}")
        if name in self._by_name:
            raise MalformedModel(f"duplicate variable name {name!r}")
        if vtype == "B":
            lb, ub = max(lb, 0), min(ub, 1)
        var = Var(len(self.names), name)
        self.names.append(name)
        self.lb.append(lb)
        self.ub.append(ub)
        self.vtype.append(vtype)
        self._by_name[name] = var
        return var

    def var(self, name: str) -> Var:
        return self._by_name[name]

    def set_bounds(self, var: Var, lb=None, ub=None):
        if lb is not None:
            self.lb[var.index] = lb
        if ub is not None:
            self.ub[var.index] = ub

    def set_type(self, var: Var, vtype: str):
        self.vtype[var.index] = vtype

    def add_constraint(self, lhs, sense: str, rhs=0, name: str | None = None) -> Constraint:
        if sense not in SENSES:
            raise MalformedModel(f"unknown constraint sense {sense!r}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        for i in expr.terms:
            if not 0 <= i < len(self.names):
                raise MalformedModel(f"constraint references undeclared variable #{i}")
        terms = tuple(sorted((i, c) for i, c in expr.terms.items() if c != 0))
        con = Constraint(terms, sense, -expr.const, name or f"c{len(self.constraints)}")
        self.constraints.append(con)
        return con

    def set_objective(self, expr, sense: str = "min"):
        if sense not in ("min", "max"):
            raise MalformedModel(f"unknown objective sense {sense!r}")
        self.objective = LinExpr.of(expr).copy()
        self.sense = sense

    def check(self):
        for i, t in enumerate(self.vtype):
            if t != "C" and not (math.isfinite(self.lb[i]) and math.isfinite(self.ub[i])):
                raise MalformedModel(f"integer variable {self.names[i]!r} needs finite bounds")

    def integer_count(self) -> int:
        return sum(t != "C" for t in self.vtype)


@dataclass
class SolveResult:
    status: str
    values: dict[str, float] | None = None
    objective: float | None = None
    wall_seconds: float = 0.0
    backend: str = ""
    gap: float | None = None

    @property
    def has_solution(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)

    def value(self, var: Var | str) -> float:
        if self.values is None:
            raise SolverError(f"no values available (status {self.status})")
        return self.values[var if isinstance(var, str) else var.name]


def _round_values(model: Model, x) -> dict[str, float]:
    out = {}
    for i, name in enumerate(model.names):
        v = float(x[i])
        if model.vtype[i] != "C":
            r = round(v)
            if abs(v - r) > INT_TOL:
                raise SolverError(f"integer variable {name!r} came back as {v!r}")
            v = float(r)
        out[name] = v
    return out


def _objective_value(model: Model, values: dict[str, float]) -> float:
    obj = model.objective
    return obj.const + sum(c * values[model.names[i]] for i, c in obj.terms.items())


# --------------------------------------------------------------------------
# HiGHS via scipy


def _solve_highs(model: Model, params: Params) -> SolveResult:
    try:
        from scipy.optimize import Bounds, LinearConstraint, milp
        from scipy.sparse import csr_matrix
    except ImportError as exc:  # pragma: no cover
        raise BackendUnavailable("scipy with HiGHS support is required for the highs backend") from exc
    n = model.num_vars
    if any(lo > hi for lo, hi in zip(model.lb, model.ub)):
        return SolveResult(Status.INFEASIBLE, backend="highs")
    if n == 0:
        infeasible = any(
            (c.sense == "<=" and c.rhs < 0) or (c.sense == ">=" and c.rhs > 0) or (c.sense == "==" and c.rhs != 0)
            for c in model.constraints)
        if infeasible:
            return SolveResult(Status.INFEASIBLE, backend="highs")
        return SolveResult(Status.OPTIMAL, {}, model.objective.const, backend="highs")
    sign = 1 if model.sense == "min" else -1
    c = np.zeros(n)
    for i, coef in model.objective.terms.items():
        c[i] = sign * coef
    cons = []
    if model.constraints:
        rows, cols, data = [], [], []
        lo = np.empty(len(model.constraints))
        hi = np.empty(len(model.constraints))
        for r, con in enumerate(model.constraints):
            for i, coef in con.terms:
                rows.append(r)
                cols.append(i)
                data.append(coef)
            lo[r] = con.rhs if con.sense in (">=", "==") else -np.inf
            hi[r] = con.rhs if con.sense in ("<=", "==") else np.inf
        A = csr_matrix((data, (rows, cols)), shape=(len(model.constraints), n))
        cons = [LinearConstraint(A, lo, hi)]
    integrality = np.array([0 if t == "C" else 1 for t in model.vtype])
    options = {"disp": False, "time_limit": params.time_limit, "mip_rel_gap": params.gap}
    res = milp(c, constraints=cons, integrality=integrality,
               bounds=Bounds(np.array(model.lb, float), np.array(model.ub, float)), options=options)
    if res.status == 0:
        values = _round_values(model, res.x)
        return SolveResult(Status.OPTIMAL, values, _objective_value(model, values), backend="highs",
                           gap=getattr(res, "mip_gap", None))
    if res.status == 1:
        if res.x is not None:
            values = _round_values(model, res.x)
            return SolveResult(Status.FEASIBLE, values, _objective_value(model, values), backend="highs",
                               gap=getattr(res, "mip_gap", None))
        return SolveResult(Status.TIMED_OUT, backend="highs")
    if res.status == 2:
        return SolveResult(Status.INFEASIBLE, backend="highs")
    if res.status == 3:
        return SolveResult(Status.UNBOUNDED, backend="highs")
    raise SolverError(f"HiGHS failed: {res.message}")


# --------------------------------------------------------------------------
# exhaustive reference backend


class _Search:
    """Depth-first search over integer domains with interval propagation."""

    def __init__(self, model: Model, deadline: float):
        model.check()
        if any(t == "C" for t in model.vtype):
            raise MalformedModel("the exhaustive backend handles integer variables only")
        self.model = model
        self.deadline = deadline
        self.rows = []   # (indices, coefs, lo, hi)
        self.watch: list[list[int]] = [[] for _ in range(model.num_vars)]
        for con in model.constraints:
            idx = [i for i, _ in con.terms]
            coef = [c for _, c in con.terms]
            lo = con.rhs if con.sense in (">=", "==") else -math.inf
            hi = con.rhs if con.sense in ("<=", "==") else math.inf
            r = len(self.rows)
            self.rows.append((idx, coef, lo, hi))
            for i in idx:
                self.watch[i].append(r)

    def propagate(self, lo, hi, dirty) -> bool:
        queue = list(dirty)
        queued = set(queue)
        while queue:
            r = queue.pop()
            queued.discard(r)
            idx, coef, rlo, rhi = self.rows[r]
            amin = amax = 0.0
            for i, c in zip(idx, coef):
                if c > 0:
                    amin += c * lo[i]
                    amax += c * hi[i]
                else:
                    amin += c * hi[i]
                    amax += c * lo[i]
            if amin > rhi + 1e-9 or amax < rlo - 1e-9:
                return False
            for i, c in zip(idx, coef):
                cmin = c * lo[i] if c > 0 else c * hi[i]
                cmax = c * hi[i] if c > 0 else c * lo[i]
                nlo, nhi = lo[i], hi[i]
                if rhi < math.inf:
                    bound = (rhi - (amin - cmin)) / c
                    if c > 0:
                        nhi = min(nhi, math.floor(bound + 1e-9))
                    else:
                        nlo = max(nlo, math.ceil(bound - 1e-9))
                if rlo > -math.inf:
                    bound = (rlo - (amax - cmax)) / c
                    if c > 0:
                        nlo = max(nlo, math.ceil(bound - 1e-9))
                    else:
                        nhi = min(nhi, math.floor(bound + 1e-9))
                if nlo > nhi:
                    return False
                if nlo != lo[i] or nhi != hi[i]:
                    lo[i], hi[i] = nlo, nhi
                    for r2 in self.watch[i]:
                        if r2 not in queued:
                            queued.add(r2)
                            queue.append(r2)
        return True

    def root(self):
        lo = [math.ceil(v - 1e-9) for v in self.model.lb]
        hi = [math.floor(v + 1e-9) for v in self.model.ub]
        if any(a > b for a, b in zip(lo, hi)):
            return None
        if not self.propagate(lo, hi, range(len(self.rows))):
            return None
        return lo, hi

    def branch(self, lo, hi, order):
        """Yield complete assignments, branching on ``order`` first."""
        if time.monotonic() > self.deadline:
            raise TimeoutError
        pick = next((i for i in order if lo[i] != hi[i]), None)
        if pick is None:
            free = [i for i in range(len(lo)) if lo[i] != hi[i]]
            if not free:
                yield list(lo)
                return
            pick = min(free, key=lambda i: hi[i] - lo[i])
        for v in range(lo[pick], hi[pick] + 1):
            nlo, nhi = list(lo), list(hi)
            nlo[pick] = nhi[pick] = v
            if self.propagate(nlo, nhi, self.watch[pick]):
                yield from self.branch(nlo, nhi, order)


def _solve_exhaustive(model: Model, params: Params) -> SolveResult:
    search = _Search(model, time.monotonic() + params.time_limit)
    start = search.root()
    if start is None:
        return SolveResult(Status.INFEASIBLE, backend="exhaustive")
    sign = 1 if model.sense == "min" else -1
    obj = [(i, sign * c) for i, c in model.objective.terms.items()]
    best, best_val = None, math.inf
    order = sorted(model.objective.terms, key=lambda i: -abs(model.objective.terms[i]))
    try:
        for point in search.branch(*start, order):
            val = sum(c * point[i] for i, c in obj)
            if val < best_val:
                best, best_val = point, val
    except TimeoutError:
        if best is None:
            return SolveResult(Status.TIMED_OUT, backend="exhaustive")
        values = dict(zip(model.names, map(float, best)))
        return SolveResult(Status.FEASIBLE, values, _objective_value(model, values), backend="exhaustive")
    if best is None:
        return SolveResult(Status.INFEASIBLE, backend="exhaustive")
    values = dict(zip(model.names, map(float, best)))
    return SolveResult(Status.OPTIMAL, values, _objective_value(model, values), backend="exhaustive")


def enumerate_feasible(model: Model, project: Iterable[Var] | None = None,
                       time_limit: float = 60.0) -> Iterator[dict[str, int]]:
    """Feasible integer points of ``model``; with ``project`` each distinct
    projection onto those variables is yielded once."""
    search = _Search(model, time.monotonic() + time_limit)
    start = search.root()
    if start is None:
        return
    if project is None:
        for point in search.branch(*start, []):
            yield dict(zip(model.names, point))
        return
    proj = [v.index for v in project]
    seen = set()
    for point in search.branch(*start, proj):
        key = tuple(point[i] for i in proj)
        if key not in seen:
            seen.add(key)
            yield {model.names[i]: point[i] for i in proj}


BACKENDS = {"highs": _solve_highs, "exhaustive": _solve_exhaustive}


def default_backend() -> str:
    return os.environ.get("FLOWWALKS_SOLVER", "highs")


def solve(model: Model, params: Params | None = None, backend: str | None = None) -> SolveResult:
    name = backend or default_backend()
    if name not in BACKENDS:
        raise BackendUnavailable(f"unknown solver backend {name!r} (choose from {', '.join(BACKENDS)})")
    model.check()
    params = params or model.params
    t0 = time.perf_counter()
    result = BACKENDS[name](model, params)
    result.wall_seconds = time.perf_counter() - t0
    return result


# --------------------------------------------------------------------------
# LP text export

_LP_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789!\"#$%&()/,.;?@_`'{}|~")


def _lp_name(name: str) -> str:
    out = "".join(ch if ch in _LP_OK else "_" for ch in name)
    if not out or out[0].isdigit() or out[0] == ".":
        out = "_" + out
    return out


def _num(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return f"{x:.12g}"


def _lp_expr(terms, names) -> str:
    parts = []
    for i, c in terms:
        mag = abs(c)
        coef = "" if mag == 1 else _num(mag) + " "
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {coef}{names[i]}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[1:]


def export_lp_text(model: Model) -> str:
    """CPLEX LP format with variables in declaration order."""
    names = [_lp_name(n) for n in model.names]
    lines = [f"\\ {model.name}", "Minimize" if model.sense == "min" else "Maximize"]
    obj = sorted(model.objective.terms.items())
    lines.append(" obj: " + _lp_expr([(i, c) for i, c in obj if c != 0], names))
    if model.objective.const:
        lines.append(f" \\ constant {_num(model.objective.const)}")
    lines.append("Subject To")
    for con in model.constraints:
        op = {"<=": "<=", ">=": ">=", "==": "="}[con.sense]
        lines.append(f" {_lp_name(con.name)}: {_lp_expr(con.terms, names)} {op} {_num(con.rhs)}")
    lines.append("Bounds")
    for i, name in enumerate(names):
        if model.vtype[i] == "B" and model.lb[i] == 0 and model.ub[i] == 1:
            continue
        lo, hi = model.lb[i], model.ub[i]
        if lo == hi:
            lines.append(f" {name} = {_num(lo)}")
        elif hi == math.inf:
            lines.append(f" {name} >= {_num(lo)}" if lo != -math.inf else f" {name} free")
        else:
            low = "-inf" if lo == -math.inf else _num(lo)
            lines.append(f" {low} <= {name} <= {_num(hi)}")
    gens = [names[i] for i, t in enumerate(model.vtype) if t == "I"]
    bins = [names[i] for i, t in enumerate(model.vtype) if t == "B"]
    if gens:
        lines.append("Generals")
        lines.extend(f" {n}" for n in gens)
    if bins:
        lines.append("Binaries")
        lines.extend(f" {n}" for n in bins)
    lines.append("End")
    return "\n".join(lines) + "\n"
