"""Rate-region search: optimize corner evaluators over factored laws.

For every weight lambda the engine maximizes the support function
lambda*Rc + (1-lambda)*R1 of the per-law pentagon by multi-start projected
coordinate ascent on the rows of the law's conditional pmfs. Every law the
runs end on is kept in a pool; the reported region is the convex hull of
the pool's pentagons, so the support at each lambda is the best over the
whole pool (a lower bound on the true region).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .bounds import BOUND_LAW_KIND, FEASIBILITY_TOL, corner_arrays
from .channels import (
    LAW_STRUCTURE,
    ChannelSpec,
    FactoredLaw,
    factor_key,
    prop2_card_bound,
)
from .errors import ValidationError
from .prob import InfoCalculator, binary_convolve, binary_entropy, check_cells

MODES = ("pentagon-union", "decoupled")
IMPROVE_TOL = 1e-13


@dataclass(frozen=True)
class SearchConfig:
    """Search hyperparameters.

    ``lambdas`` overrides the uniform ``lambda_points`` grid (e.g. ``(0.0,)``
    for the Rc = 0 slice). ``q1``/``q2`` cap Pr{X1 != 0} and Pr{X2 != 0}.
    ``step_levels`` is the number of halving step sizes tried per row move.
    """

    lambda_points: int = 33
    restarts: int = 4
    sweeps: int = 60
    grid_resolution: int = 8
    card_v: int | None = None
    card_u: int | None = None
    seed: int = 0
    q1: float | None = None
    q2: float | None = None
    tol: float = 1e-9
    mode: str = "pentagon-union"
    relax_constraint: bool = False
    lambdas: tuple[float, ...] | None = None
    penalty: float = 10.0
    step_levels: int = 11

    def __post_init__(self):
        for name in ("lambda_points", "sweeps"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.restarts < 0:
            raise ValidationError("restarts must be >= 0")
        if self.grid_resolution < 2:
            raise ValidationError("grid_resolution must be >= 2")
        for name in ("card_v", "card_u"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValidationError(f"{name} must be positive")
        for name in ("q1", "q2"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0,1]")
        if self.step_levels < 1:
            raise ValidationError("step_levels must be positive")
        if self.tol <= 0 or self.penalty <= 0:
            raise ValidationError("tol and penalty must be positive")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.lambdas is not None:
            lams = tuple(float(x) for x in self.lambdas)
            if not lams or any(not 0.0 <= x <= 1.0 for x in lams):
                raise ValidationError("lambdas must be a nonempty list in [0,1]")
            object.__setattr__(self, "lambdas", lams)

    def lambda_grid(self) -> tuple[float, ...]:
        if self.lambdas is not None:
            return self.lambdas
        if self.lambda_points == 1:
            return (0.0,)
        return tuple(float(x) for x in np.linspace(0.0, 1.0, self.lambda_points))

    def to_json(self) -> dict:
        d = asdict(self)
        d["lambdas"] = list(self.lambdas) if self.lambdas is not None else None
        return d


@dataclass(frozen=True)
class RatePoint:
    rc: float
    r1: float

    def __post_init__(self):
        if self.rc < 0 or self.r1 < 0:
            raise ValidationError("rates must be nonnegative")


# ---------------------------------------------------------------- law space

def default_cards(ch: ChannelSpec, bound: str, cfg: SearchConfig) -> dict[str, int]:
    """Auxiliary alphabet sizes used for a bound (see README for the defaults)."""
    s, x1, x2 = ch.sizes["S"], ch.sizes["X1"], ch.sizes["X2"]
    if bound in ("inner-sc", "outer-sc", "outer-sc-withU"):
        cards = {"V": cfg.card_v or prop2_card_bound(ch.sizes)}
        if bound == "outer-sc-withU":
            cards["U"] = cfg.card_u or s
        return cards
    if bound == "asym-inner":
        return {"U": cfg.card_u or x1 * x2, "V": cfg.card_v or s * x2 + 1}
    if bound == "causal":
        return {"V": cfg.card_v or x2**s, "U": cfg.card_u or x1**s}
    return {}


@dataclass
class LawSpace:
    """Shapes of the factors a search optimizes, stored as row matrices."""

    ch: ChannelSpec
    bound: str
    kind: str
    sizes: dict[str, int]
    keys: list[str]
    shapes: dict[str, tuple[int, ...]]
    n_children: dict[str, int]

    @staticmethod
    def build(ch: ChannelSpec, bound: str, cfg: SearchConfig) -> "LawSpace":
        if bound not in BOUND_LAW_KIND:
            raise ValidationError(f"unsupported bound {bound!r}; choose from {sorted(BOUND_LAW_KIND)}")
        kind = BOUND_LAW_KIND[bound]
        sizes = dict(ch.sizes)
        sizes.update(default_cards(ch, bound, cfg))
        keys, shapes, n_children = [], {}, {}
        for children, parents in LAW_STRUCTURE[kind]:
            key = factor_key(children)
            if key == "U" and kind == "outer-sc" and bound != "outer-sc-withU":
                continue
            keys.append(key)
            shapes[key] = tuple(sizes[n] for n in parents + children)
            n_children[key] = len(children)
        space = LawSpace(ch, bound, kind, sizes, keys, shapes, n_children)
        cells = int(np.prod([sizes[n] for n in ("S", "X1", "X2", "Y")]))
        for aux in ("U", "V"):
            if aux in sizes:
                cells *= sizes[aux]
        check_cells(cells, "search joint")
        return space

    def row_count(self, key: str) -> int:
        shape = self.shapes[key]
        return int(np.prod(shape[: len(shape) - self.n_children[key]], dtype=int))

    def row_len(self, key: str) -> int:
        shape = self.shapes[key]
        return int(np.prod(shape[len(shape) - self.n_children[key]:], dtype=int))

    def to_factors(self, rows: Mapping[str, np.ndarray], batch: int | None = None) -> dict[str, np.ndarray]:
        out = {}
        for key in self.keys:
            arr = rows[key]
            lead = arr.shape[:-2] if arr.ndim == 3 else ()
            out[key] = arr.reshape(lead + self.shapes[key])
        return out

    def to_law(self, rows: Mapping[str, np.ndarray]) -> FactoredLaw:
        factors = {k: v.copy() for k, v in self.to_factors(rows).items()}
        return FactoredLaw(self.kind, factors, allow_large_card=True)

    def from_law(self, law: FactoredLaw) -> dict[str, np.ndarray]:
        if law.kind != self.kind:
            raise ValidationError(f"law kind {law.kind} does not match search kind {self.kind}")
        rows = {}
        for key in self.keys:
            if key not in law.factors:
                raise ValidationError(f"law lacks factor {key}")
            arr = np.asarray(law.factors[key], dtype=float)
            if arr.shape != self.shapes[key]:
                raise ValidationError(f"factor {key} has shape {arr.shape}, search expects {self.shapes[key]}")
            rows[key] = arr.reshape(self.row_count(key), self.row_len(key)).copy()
        return rows

    def uniform(self) -> dict[str, np.ndarray]:
        return {k: np.full((self.row_count(k), self.row_len(k)), 1.0 / self.row_len(k)) for k in self.keys}

    def random(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        rows = {}
        for k in self.keys:
            # mix sparse and dense Dirichlet rows so deterministic-like laws get explored
            alpha = 0.3 if rng.random() < 0.5 else 1.0
            rows[k] = rng.dirichlet(np.full(self.row_len(k), alpha), size=self.row_count(k))
        return rows


def _deterministic_rows(space: LawSpace, key: str, fn: Callable[[tuple[int, ...]], int]) -> np.ndarray:
    shape = space.shapes[key]
    parents = shape[: len(shape) - space.n_children[key]]
    rows = np.zeros((space.row_count(key), space.row_len(key)))
    for r, idx in enumerate(itertools.product(*[range(n) for n in parents])):
        rows[r, fn(idx) % space.row_len(key)] = 1.0
    return rows


def structured_seeds(space: LawSpace) -> list[dict[str, np.ndarray]]:
    """Deterministic starting laws: uniform inputs with simple auxiliary maps."""
    seeds = [space.uniform()]
    s, x1, x2 = space.sizes["S"], space.sizes["X1"], space.sizes["X2"]
    kind = space.kind
    if kind in ("inner-sc", "outer-sc"):
        nv = space.sizes["V"]
        maps = [lambda i: 0, lambda i: i[0]]
        if kind == "inner-sc":
            maps.append(lambda i: i[0] * x2 + i[1])
        else:
            maps.append(lambda i: i[0] * x2 + i[2])
            maps.append(lambda i: (i[0] * x1 + i[1]) * x2 + i[2])
        for m in maps:
            law = space.uniform()
            law["V"] = _deterministic_rows(space, "V", m)
            if "U" in law:
                law["U"] = _deterministic_rows(space, "U", lambda i: 0)
            seeds.append(law)
        if nv < s:
            seeds = seeds[:2]
    elif kind == "asym-inner":
        for m in (lambda i: 0, lambda i: i[0]):
            law = space.uniform()
            law["V"] = _deterministic_rows(space, "V", m)
            law["U"] = _deterministic_rows(space, "U", lambda i: 0)
            seeds.append(law)
    elif kind == "causal":
        nv, nu = space.sizes["V"], space.sizes["U"]

        def digit(code: int, pos: int, base: int) -> int:
            return (code // base**pos) % base

        # V indexes a map S -> X2 and U a map S -> X1 (Shannon strategies)
        law = space.uniform()
        law["X2"] = _deterministic_rows(space, "X2", lambda i: digit(i[0], i[1], x2))
        law["X1"] = _deterministic_rows(space, "X1", lambda i: digit(i[2], i[0], x1))
        seeds.append(law)
    elif kind == "joint-input":
        if x1 == x2:
            seeds.append({"X1,X2": (np.eye(x1) / x1).reshape(1, -1)})
    return seeds


def pad_law(law: FactoredLaw, var: str, new_size: int) -> FactoredLaw:
    """Embed a law into a larger alphabet for ``var`` (extra symbols unused)."""
    factors = {}
    for key, children, parents in ((k, c, p) for c, p in LAW_STRUCTURE[law.kind]
                                   for k in [factor_key(c)] if k in law.factors):
        arr = np.asarray(law.factors[key])
        axes = parents + children
        for ax, name in enumerate(axes):
            if name == var and arr.shape[ax] < new_size:
                pad = [(0, 0)] * arr.ndim
                pad[ax] = (0, new_size - arr.shape[ax])
                if name in children:
                    arr = np.pad(arr, pad)
                else:
                    # rows for unused parent symbols: copy the first row
                    extra = np.take(arr, [0] * (new_size - arr.shape[ax]), axis=ax)
                    arr = np.concatenate([arr, extra], axis=ax)
        factors[key] = arr
    return FactoredLaw(law.kind, factors, allow_large_card=True)


# ---------------------------------------------------------------- objective

class Problem:
    """Batched corner evaluation plus cap checks for one (channel, bound)."""

    def __init__(self, space: LawSpace, cfg: SearchConfig):
        self.space = space
        self.cfg = cfg
        self.relax = cfg.relax_constraint

    def corners(self, rows: Mapping[str, np.ndarray], batch: bool) -> dict[str, np.ndarray]:
        factors = self.space.to_factors(rows)
        arr = corner_arrays(self.space.ch, self.space.bound, factors, 1 if batch else 0, self.relax)
        out = {"a": np.asarray(arr["r1"], dtype=float), "b": np.asarray(arr["sum"], dtype=float)}
        shape = out["a"].shape
        out["c"] = np.full(shape, np.inf) if arr["rc"] is None else np.asarray(arr["rc"], dtype=float)
        out["slack"] = np.full(shape, np.nan) if arr["slack"] is None else np.asarray(arr["slack"], dtype=float)
        out["violation"] = self._cap_violation(factors, batch)
        return out

    def _cap_violation(self, factors: Mapping[str, np.ndarray], batch: bool) -> np.ndarray:
        if self.cfg.q1 is None and self.cfg.q2 is None:
            return np.zeros(())
        p1, p2 = input_marginals(self.space, factors, batch)
        v = np.zeros(p1.shape[:-1])
        if self.cfg.q1 is not None:
            v = np.maximum(v, (1.0 - p1[..., 0]) - self.cfg.q1)
        if self.cfg.q2 is not None:
            v = np.maximum(v, (1.0 - p2[..., 0]) - self.cfg.q2)
        return v


def input_marginals(space: LawSpace, factors: Mapping[str, np.ndarray], batch: bool):
    """(P_X1, P_X2) of a (batched) law, from the assembled joint."""
    from .channels import assemble_values

    values, names = assemble_values(space.ch, space.kind, factors)
    calc_b = 1 if batch else 0
    axes = list(range(calc_b, values.ndim))
    i1, i2 = calc_b + names.index("X1"), calc_b + names.index("X2")
    p1 = values.sum(axis=tuple(a for a in axes if a != i1))
    p2 = values.sum(axis=tuple(a for a in axes if a != i2))
    return p1, p2


def support_values(a, b, c, lam: float) -> np.ndarray:
    """max of lam*Rc + (1-lam)*R1 over {R1<=a, Rc<=c, Rc+R1<=b, Rc,R1>=0}.

    Negative caps give the empty pentagon; the raw linear extension is
    returned there so the ascent still has a gradient to follow.
    """
    a, b, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), np.asarray(c, float))
    m = np.minimum(a, b)
    xc = np.minimum(c, b)
    cands = [
        lam * xc + (1 - lam) * np.minimum(a, b - xc),
        lam * np.minimum(b - m, c) + (1 - lam) * m,
    ]
    best = np.maximum(cands[0], cands[1])
    best = np.maximum(best, np.maximum(lam * xc, (1 - lam) * m))
    return best


def pentagon_vertices(a: float, b: float, c: float = math.inf) -> list[tuple[float, float]]:
    """Vertices (rc, r1) of {R1<=a, Rc<=c, Rc+R1<=b, Rc,R1>=0}; [(0,0)] if empty."""
    a, b = max(a, 0.0), max(b, 0.0)
    c = max(c, 0.0)
    m = min(a, b)
    xc = min(c, b)
    pts = {(0.0, 0.0), (xc, 0.0), (0.0, m), (xc, min(a, b - xc)), (min(b - m, c), m)}
    return sorted(pts)


class Objective:
    """Scalar objective with a penalty for constraint and cap violations."""

    def __init__(self, problem: Problem, target: str, lam: float = 0.0):
        self.problem = problem
        self.target = target  # "support", "r1" or "sum"
        self.lam = lam

    def __call__(self, rows, batch: bool) -> np.ndarray:
        cr = self.problem.corners(rows, batch)
        if self.target == "support":
            val = support_values(cr["a"], cr["b"], cr["c"], self.lam)
        elif self.target == "r1":
            val = cr["a"]
        else:
            val = cr["b"]
        slack = np.nan_to_num(cr["slack"], nan=0.0)
        pen = self.problem.cfg.penalty * np.maximum(0.0, -slack)
        val = val - pen
        return np.where(cr["violation"] > 1e-12, -np.inf, val)


# ---------------------------------------------------------------- ascent

def step_levels(count: int) -> np.ndarray:
    """Ascent step sizes 1, 1/2, ..., 2^-(count-1)."""
    return 0.5 ** np.arange(count)


def _row_candidates(p: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """Moves toward each vertex and away from each vertex of the simplex."""
    k = p.shape[0]
    eye = np.eye(k)
    t = steps[:, None, None]
    toward = (1 - t) * p[None, None, :] + t * eye[None, :, :]
    away = np.repeat(p[None, None, :], len(steps), axis=0).repeat(k, axis=1)
    idx = np.arange(k)
    away[:, idx, idx] *= 1 - steps[:, None]
    tot = away.sum(axis=-1, keepdims=True)
    away = np.where(tot > 0, away / np.where(tot > 0, tot, 1.0), p)
    return np.concatenate([toward.reshape(-1, k), away.reshape(-1, k)])


def _grid_candidates(p: np.ndarray, res: int, max_sources: int = 6) -> np.ndarray:
    """Pairwise mass transfers of size res^-m between coordinates."""
    k = p.shape[0]
    sources = [int(j) for j in np.argsort(-p, kind="stable")[:max_sources] if p[j] > 0]
    out = []
    for m in range(1, 5):
        h = float(res) ** -m
        for j in sources:
            amt = min(h, p[j])
            for i in range(k):
                if i != j:
                    q = p.copy()
                    q[j] -= amt
                    q[i] += amt
                    out.append(q)
    return np.array(out) if out else p[None, :]


def _improve_row(obj: Objective, rows: dict, key: str, r: int, cands: np.ndarray, current: float):
    batch = {k: (v[None] if k != key else np.repeat(v[None], len(cands), axis=0)) for k, v in rows.items()}
    batch[key][:, r, :] = np.clip(cands, 0.0, None)
    batch[key][:, r, :] /= batch[key][:, r, :].sum(axis=-1, keepdims=True)
    vals = obj(batch, batch=True)
    j = int(np.argmax(vals))
    if vals[j] > current + IMPROVE_TOL:
        rows[key][r] = batch[key][j, r]
        return float(vals[j]), True
    return current, False


def coordinate_ascent(obj: Objective, rows: dict[str, np.ndarray], cfg: SearchConfig):
    """Improve ``rows`` in place; returns the final objective value."""
    space = obj.problem.space
    steps = step_levels(cfg.step_levels)
    current = float(obj(rows, batch=False))
    order = [(key, r) for key in space.keys for r in range(space.row_count(key))]
    for phase in ("vertex", "grid", "vertex"):
        for _ in range(cfg.sweeps):
            any_improved = False
            for key, r in order:
                p = rows[key][r]
                cands = _row_candidates(p, steps) if phase == "vertex" else _grid_candidates(p, cfg.grid_resolution)
                current, improved = _improve_row(obj, rows, key, r, cands, current)
                any_improved |= improved
            if not any_improved:
                break
    return current


def make_feasible(space: LawSpace, rows: dict[str, np.ndarray], cfg: SearchConfig) -> dict[str, np.ndarray]:
    """Scale input rows so that Pr{Xi != 0} respects the caps."""
    if cfg.q1 is None and cfg.q2 is None:
        return rows
    rows = {k: v.copy() for k, v in rows.items()}
    for var, cap in (("X1", cfg.q1), ("X2", cfg.q2)):
        if cap is None:
            continue
        p1, p2 = input_marginals(space, space.to_factors(rows), batch=False)
        weight = 1.0 - (p1 if var == "X1" else p2)[0]
        if weight <= cap + 1e-15:
            continue
        kappa = cap / weight * (1 - 1e-12)
        if "X1,X2" in rows:
            n1, n2 = space.sizes["X1"], space.sizes["X2"]
            m = rows["X1,X2"].reshape(n1, n2)
            if var == "X1":
                moved = m[1:].sum(axis=0) * (1 - kappa)
                m[1:] *= kappa
                m[0] += moved
            else:
                moved = m[:, 1:].sum(axis=1) * (1 - kappa)
                m[:, 1:] *= kappa
                m[:, 0] += moved
            rows["X1,X2"] = m.reshape(1, -1)
        else:
            mat = rows[var]
            moved = mat[:, 1:].sum(axis=1) * (1 - kappa)
            mat[:, 1:] *= kappa
            mat[:, 0] += moved
    return rows


# ---------------------------------------------------------------- regions

@dataclass(frozen=True, eq=False)
class Corner:
    a: float
    b: float
    c: float
    slack: float | None
    feasible: bool
    digest: str
    law: FactoredLaw = field(repr=False)

    def vertices(self) -> list[tuple[float, float]]:
        if not self.feasible:
            return [(0.0, 0.0)]
        return pentagon_vertices(self.a, self.b, self.c)


@dataclass(frozen=True)
class SupportSample:
    lam: float
    value: float
    rc: float
    r1: float
    sum_cap: float
    r1_cap: float
    feasible: bool
    digest: str


@dataclass(frozen=True, eq=False)
class RateRegion:
    """Inner approximation of a rate region in the (Rc, R1) plane.

    For the indep-states bound the first coordinate is R2.
    """

    bound: str
    mode: str
    samples: tuple[SupportSample, ...]
    hull: tuple[tuple[float, float], ...]
    corners: tuple[Corner, ...]
    cards: Mapping[str, int]
    config: SearchConfig
    cardinality_heuristic: bool = False

    def support(self, lam: float) -> float:
        return max(lam * x + (1 - lam) * y for x, y in self.hull)

    def distance(self, pt: tuple[float, float]) -> float:
        return hull_distance(self.hull, pt)

    def max_sum(self) -> float:
        return max(x + y for x, y in self.hull)

    def max_r1(self) -> float:
        return max(y for _, y in self.hull)

    def witness(self, lam: float) -> FactoredLaw | None:
        s = min(self.samples, key=lambda t: abs(t.lam - lam))
        for c in self.corners:
            if c.digest == s.digest:
                return c.law
        return None

    def witness_laws(self) -> list[FactoredLaw]:
        """Laws of every kept corner (support attainers and hull contributors)."""
        return [c.law for c in self.corners]


def convex_hull(points: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    """Andrew's monotone chain; counter-clockwise, collinear points dropped."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return tuple(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-15:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-15:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


def hull_distance(hull: Sequence[tuple[float, float]], pt: tuple[float, float]) -> float:
    """Euclidean distance from ``pt`` to the convex polygon (0 inside)."""
    px, py = pt
    if len(hull) == 1:
        return math.hypot(px - hull[0][0], py - hull[0][1])
    inside = len(hull) >= 3
    best = math.inf
    n = len(hull)
    for i in range(n):
        (x0, y0), (x1, y1) = hull[i], hull[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        if (ex * (py - y0) - ey * (px - x0)) < -1e-15:
            inside = False
        seg = ex * ex + ey * ey
        t = 0.0 if seg == 0 else max(0.0, min(1.0, ((px - x0) * ex + (py - y0) * ey) / seg))
        best = min(best, math.hypot(px - (x0 + t * ex), py - (y0 + t * ey)))
    return 0.0 if inside else best


def region_excess(inner: RateRegion, outer: RateRegion) -> float:
    """Largest distance from a vertex of ``inner`` to the hull of ``outer``."""
    return max(outer.distance(v) for v in inner.hull)


def support_gap(a: RateRegion, b: RateRegion, points: int = 201) -> float:
    """max over a dense lambda grid of |h_a(lambda) - h_b(lambda)|."""
    return max(abs(a.support(lam) - b.support(lam)) for lam in np.linspace(0.0, 1.0, points))


def _rng(seed: int, *index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *index]))


def _evaluate_corner(problem: Problem, rows: dict, tol: float) -> Corner:
    cr = problem.corners(rows, batch=False)
    slack = None if np.isnan(cr["slack"]) else float(cr["slack"])
    feasible = (slack is None or slack >= -max(tol, FEASIBILITY_TOL)) and float(cr["violation"]) <= 1e-12
    law = problem.space.to_law(rows)
    return Corner(float(cr["a"]), float(cr["b"]), float(cr["c"]), slack, feasible, law.digest(), law)


def _starts(space: LawSpace, cfg: SearchConfig, work: int) -> list[dict]:
    starts = [make_feasible(space, s, cfg) for s in structured_seeds(space)]
    for r in range(cfg.restarts):
        starts.append(make_feasible(space, space.random(_rng(cfg.seed, work, r)), cfg))
    return starts


def _best_at(corners: Sequence[Corner], lam: float):
    """(value, corner, vertex) attaining the support at lam; ties -> larger r1."""
    best = None
    for c in corners:
        if not c.feasible:
            continue
        for v in c.vertices():
            val = lam * v[0] + (1 - lam) * v[1]
            key = (round(val, 12), v[1])
            if best is None or key > best[0]:
                best = (key, val, c, v)
    if best is None:
        return 0.0, None, (0.0, 0.0)
    return best[1], best[2], best[3]


def compute_region(ch: ChannelSpec, bound: str, cfg: SearchConfig | None = None,
                   extra_laws: Iterable[FactoredLaw] = ()) -> RateRegion:
    """Search the law space of ``bound`` and return the hull of the best pentagons.

    ``extra_laws`` are evaluated and added to the corner pool as they are.
    """
    cfg = cfg or SearchConfig()
    space = LawSpace.build(ch, bound, cfg)
    problem = Problem(space, cfg)
    extra = [space.from_law(law) for law in extra_laws]
    pool: list[Corner] = []

    for rows in extra:
        pool.append(_evaluate_corner(problem, rows, cfg.tol))

    def run(obj: Objective, work: int) -> None:
        for start in _starts(space, cfg, work):
            pool.append(_evaluate_corner(problem, start, cfg.tol))
            coordinate_ascent(obj, start, cfg)
            pool.append(_evaluate_corner(problem, start, cfg.tol))

    lams = cfg.lambda_grid()
    if cfg.mode == "decoupled":
        run(Objective(problem, "r1"), 0)
        run(Objective(problem, "sum"), 1)
        feas = [c for c in pool if c.feasible]
        best_a = max(feas, key=lambda c: c.a) if feas else None
        best_b = max(feas, key=lambda c: c.b) if feas else None
        a_star = max(best_a.a, 0.0) if best_a else 0.0
        b_star = max(best_b.b, 0.0) if best_b else 0.0
        hull = convex_hull(pentagon_vertices(a_star, b_star) + [(0.0, 0.0)])
        samples = []
        for lam in lams:
            val, _, v = _best_at([Corner(a_star, b_star, math.inf, None, True, "decoupled", best_a.law
                                         if best_a else None)], lam)
            samples.append(SupportSample(lam, val, v[0], v[1], b_star, a_star, bool(feas),
                                         f"{best_a.digest if best_a else '-'}+{best_b.digest if best_b else '-'}"))
        corners = tuple(c for c in (best_a, best_b) if c is not None)
        return RateRegion(bound, cfg.mode, tuple(samples), hull, corners, dict(space.sizes), cfg,
                          bound == "causal" and cfg.card_v is None)

    # lambda >= 1/2 all maximize the sum cap, so they share one work item
    problems: dict[float, int] = {}
    for i, lam in enumerate(lams):
        key = 1.0 if lam >= 0.5 else lam
        problems.setdefault(key, i)
    for key, work in problems.items():
        target = "sum" if key == 1.0 else "support"
        run(Objective(problem, target, key), work)
    pts = [(0.0, 0.0)]
    for c in pool:
        pts.extend(c.vertices())
    hull = convex_hull(pts)
    samples = []
    for lam in lams:
        val, corner, v = _best_at(pool, lam)
        if corner is None:
            samples.append(SupportSample(lam, 0.0, 0.0, 0.0, 0.0, 0.0, False, "-"))
        else:
            samples.append(SupportSample(lam, val, v[0], v[1], corner.b, corner.a, corner.feasible, corner.digest))
    keep = {s.digest for s in samples}
    corners = tuple(c for c in pool if c.feasible and c.digest in keep)
    seen: set = set()
    uniq = []
    for c in corners:
        if c.digest not in seen:
            seen.add(c.digest)
            uniq.append(c)
    # keep every feasible corner that contributes a hull vertex, so the hull can be rebuilt
    hull_set = set(hull)
    for c in pool:
        if c.feasible and c.digest not in seen and any(v in hull_set for v in c.vertices()):
            seen.add(c.digest)
            uniq.append(c)
    return RateRegion(bound, cfg.mode, tuple(samples), hull, tuple(uniq), dict(space.sizes), cfg,
                      bound == "causal" and (cfg.card_v is None or cfg.card_u is None))


def membership(region: RateRegion, pt: RatePoint | tuple[float, float], tol: float = 1e-6) -> str:
    """"inside" when within ``tol`` of the hull, else "outside-at-resolution"."""
    if isinstance(pt, RatePoint):
        pt = (pt.rc, pt.r1)
    return "inside" if region.distance(pt) <= tol else "outside-at-resolution"


# ---------------------------------------------------------------- sum capacity

def blahut_arimoto(kernel: np.ndarray, tol: float = 1e-12, max_iter: int = 20000,
                   p0: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Capacity (bits) of a DMC W[x, y] and the maximizing input law."""
    w = np.asarray(kernel, dtype=float)
    nx = w.shape[0]
    p = np.full(nx, 1.0 / nx) if p0 is None else np.asarray(p0, dtype=float)
    logw = np.log2(np.where(w > 0, w, 1.0))
    lower = 0.0
    for _ in range(max_iter):
        q = p @ w
        logq = np.log2(np.where(q > 0, q, 1.0))
        d = np.sum(w * (logw - logq[None, :]), axis=1)  # D(W(.|x) || q)
        lower = float(p @ d)
        upper = float(np.max(d))
        if upper - lower < tol:
            break
        p = p * np.exp2(d)
        p /= p.sum()
    return max(lower, 0.0), p


def sum_capacity(ch: ChannelSpec, cfg: SearchConfig | None = None) -> float:
    """max over P(x1,x2) of I(X1,X2;Y) for the state-averaged channel.

    The joint input is treated as one input letter, so Blahut-Arimoto gives
    the global maximum (the mutual information is concave in the input law).
    """
    kernel = ch.averaged_kernel().reshape(ch.sizes["X1"] * ch.sizes["X2"], ch.sizes["Y"])
    value, _ = blahut_arimoto(kernel)
    return value


# ---------------------------------------------------------------- oracles

def example3_capacity(p: float, q1: float) -> float:
    """R1 at Rc = 0 for the additive binary channel with a helper (q2 >= 1/2)."""
    if q1 >= 0.5:
        return 1.0 - binary_entropy(p)
    return binary_entropy(binary_convolve(p, q1)) - binary_entropy(p)


def example6_capacity(p: float, grid: int = 401) -> dict:
    """max over (q1, q2) of min{h2(q1), g(p,q2) - h2(p)}: grid then 1-D refinement."""
    from scipy.optimize import minimize_scalar

    from .bounds import example6_g

    hp = binary_entropy(p)
    qs = np.linspace(0.0, 1.0, grid)
    h = np.array([binary_entropy(q) for q in qs])
    g = np.array([example6_g(p, q) for q in qs]) - hp
    # the two terms separate: best q1 maximizes h2, best q2 maximizes g
    i2 = int(np.argmax(g))
    lo, hi = qs[max(i2 - 1, 0)], qs[min(i2 + 1, grid - 1)]
    res = minimize_scalar(lambda q: -example6_g(p, q), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    q2 = float(res.x) if -res.fun >= g[i2] + hp else float(qs[i2])
    g_best = example6_g(p, q2) - hp
    q1 = float(qs[int(np.argmax(h))])
    value = min(binary_entropy(q1), g_best)
    return {"value": value, "q1": q1, "q2": q2}


def oracle(name: str, params: Mapping | None = None):
    """Closed-form reference values: example3, example6, thm4-pentagon."""
    params = dict(params or {})
    if name == "example3":
        return example3_capacity(float(params["p"]), float(params["q1"]))
    if name == "example6":
        return example6_capacity(float(params["p"]))
    if name == "thm4-pentagon":
        ch = params["channel"]
        cfg = params.get("config") or SearchConfig()
        return compute_region(ch, "prop1", cfg)
    raise ValidationError(f"unknown oracle {name!r}; choose from example3, example6, thm4-pentagon")
