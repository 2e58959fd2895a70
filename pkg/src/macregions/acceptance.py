"""Acceptance battery shared by ``macregions verify-examples`` and the tests.

Each check returns a ``CriterionResult`` with a pass flag, the measured
values, and the wall-clock time compared against the criterion's budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fme
from .bounds import corner_arrays, eval_outer_sc
from .channels import (
    FactoredLaw,
    builtin_channel,
    lift_inner_to_outer,
    no_state_channel,
    random_channel,
)
from .gaussian import example4_grid_max, example4_max, gaussian_capacity
from .search import (
    RatePoint,
    SearchConfig,
    compute_region,
    example3_capacity,
    oracle,
    region_excess,
    sum_capacity,
    support_gap,
)
from .sim import SimConfig, example3_law, run_block_markov


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    budget_s: float
    elapsed_s: float = 0.0
    details: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def within_budget(self) -> bool:
        return self.elapsed_s <= self.budget_s

    def line(self) -> str:
        status = "PASS" if self.passed and self.within_budget else "FAIL"
        extra = "" if not self.failures else " | " + "; ".join(self.failures)
        return f"[{status}] {self.number}. {self.name} ({self.elapsed_s:.1f}s / {self.budget_s:.0f}s){extra}"

    def to_json(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed and self.within_budget,
            "elapsed_s": self.elapsed_s,
            "budget_s": self.budget_s,
            "details": self.details,
            "failures": self.failures,
        }


def _timed(number: int, name: str, budget: float, body: Callable[[CriterionResult], None]) -> CriterionResult:
    res = CriterionResult(number, name, True, budget)
    t0 = time.perf_counter()
    body(res)
    res.elapsed_s = time.perf_counter() - t0
    res.passed = not res.failures
    if not res.within_budget:
        res.failures.append(f"runtime {res.elapsed_s:.1f}s exceeds {budget:.0f}s")
    return res


def _close(res: CriterionResult, label: str, got: float, want: float, tol: float) -> None:
    res.details[label] = got
    if not abs(got - want) <= tol:
        res.failures.append(f"{label}={got:.6f}, expected {want:.6f} +/- {tol:g}")


def example2_witness() -> FactoredLaw:
    """Outer-sc law V = S_{X1+X2 mod 2} with iid uniform inputs."""
    v = np.zeros((4, 2, 2, 2))
    for s in range(4):
        comps = (s // 2, s % 2)
        for x1 in range(2):
            for x2 in range(2):
                v[s, x1, x2, comps[(x1 + x2) % 2]] = 1.0
    return FactoredLaw("outer-sc", {"X2": np.full(2, 0.5), "X1": np.full((2, 2), 0.5), "V": v})


# ---------------------------------------------------------------- criteria

def criterion_1() -> CriterionResult:
    def body(res):
        ch = builtin_channel("mod2-selector")
        ev = eval_outer_sc(ch, example2_witness())
        _close(res, "r1_cap", ev.r1_cap, 1.0, 1e-6)
        _close(res, "sum_cap", ev.sum_cap, 1.5, 1e-6)
        _close(res, "constraint_slack", ev.constraint_slack, 0.5, 1e-6)
    return _timed(1, "Selector-channel witness corner", 1.0, body)


def criterion_2(cfg: SearchConfig | None = None) -> CriterionResult:
    def body(res):
        for p in (0.05, 0.1, 0.25):
            ch = builtin_channel("additive-binary-helper", {"p": p})
            for q1 in (0.1, 0.3, 0.5):
                want = example3_capacity(p, q1)
                for relax in (False, True):
                    c = cfg or SearchConfig()
                    c = SearchConfig(**{**c.to_json(), "lambdas": (0.0,), "q1": q1, "q2": 0.5,
                                        "relax_constraint": relax})
                    got = compute_region(ch, "inner-sc", c).support(0.0)
                    _close(res, f"p={p},q1={q1},relaxed={relax}", got, want, 1e-2)
    return _timed(2, "Additive-helper closed form at Rc=0", 120.0, body)


def criterion_3() -> CriterionResult:
    def body(res):
        ch = builtin_channel("switch")
        cfg = SearchConfig(lambda_points=9, restarts=2, seed=0)
        dec = compute_region(ch, "prop1", SearchConfig(**{**cfg.to_json(), "mode": "decoupled"}))
        caps = (dec.samples[0].r1_cap, dec.samples[0].sum_cap)
        _close(res, "decoupled_max_r1", caps[0], 0.5, 1e-3)
        _close(res, "decoupled_max_sum", caps[1], 1.0, 1e-3)
        union = compute_region(ch, "prop1", cfg)
        res.details["pentagon_union_hull"] = [list(v) for v in union.hull]
        res.details["decoupled_hull"] = [list(v) for v in dec.hull]
        # informational: how far the decoupled pentagon reaches outside the union hull
        res.details["decoupled_excess_over_union"] = region_excess(dec, union)
        res.details["corner_(0.5,0.5)_in_union"] = union.distance((0.5, 0.5)) <= 1e-6
    return _timed(3, "Switch-channel prop1 caps", 30.0, body)


def criterion_4() -> CriterionResult:
    def body(res):
        for name in ("appendixE", "appendixJ"):
            first = fme.dumps(fme.run_builtin(name))
            second = fme.dumps(fme.run_builtin(name))
            out = fme.run_builtin(name)
            res.details[name] = out["stages"]["projected"]["text"]
            if not out["golden_match"]:
                res.failures.append(f"{name} does not match its golden system")
            if first != second:
                res.failures.append(f"{name} output is not byte-stable")
    return _timed(4, "FME golden outputs", 1.0, body)


NESTING_CONFIG = SearchConfig(lambda_points=5, restarts=1, sweeps=12, grid_resolution=4, step_levels=6, seed=0)


def _random_sizes(rng: np.random.Generator) -> dict:
    return {k: int(rng.integers(2, 4)) for k in ("S", "X1", "X2", "Y")}


def criterion_5(n_channels: int = 20, n_laws: int = 200, cfg: SearchConfig = NESTING_CONFIG) -> CriterionResult:
    def body(res):
        rng = np.random.default_rng(2024)
        worst = {"inner_in_outer": 0.0, "outer_in_prop1": 0.0, "sum_gap": -math.inf, "dominance": -math.inf}
        offenders = []
        for idx in range(n_channels):
            ch = random_channel(rng, _random_sizes(rng), name=f"random-{idx}")
            c = SearchConfig(**{**cfg.to_json(), "card_v": ch.sizes["S"] * ch.sizes["X2"], "seed": idx})
            inner = compute_region(ch, "inner-sc", c)
            lifted = [lift_inner_to_outer(law) for law in inner.witness_laws()]
            outer = compute_region(ch, "outer-sc", c, extra_laws=lifted)
            inputs = [FactoredLaw("joint-input", {"X1,X2": (law.factors["X2"][:, None] * law.factors["X1"]).T})
                      for law in outer.witness_laws()]
            prop1 = compute_region(ch, "prop1", c, extra_laws=inputs)
            e1, e2 = region_excess(inner, outer), region_excess(outer, prop1)
            gap = inner.max_sum() - sum_capacity(ch)
            worst["inner_in_outer"] = max(worst["inner_in_outer"], e1)
            worst["outer_in_prop1"] = max(worst["outer_in_prop1"], e2)
            worst["sum_gap"] = max(worst["sum_gap"], gap)
            if e2 > 1e-6:
                offenders.append(idx)
        res.details["channels_with_outer_outside_prop1"] = offenders
        # dominance of the U-dropped corners over the with-U corners
        for t in range(n_laws):
            ch = random_channel(rng, _random_sizes(rng), name=f"dominance-{t}")
            sz = ch.sizes
            nv, nu = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            factors = {
                "X2": rng.dirichlet(np.ones(sz["X2"])),
                "X1": rng.dirichlet(np.ones(sz["X1"]), size=sz["X2"]),
                "V": rng.dirichlet(np.ones(nv), size=(sz["S"], sz["X1"], sz["X2"])),
                "U": rng.dirichlet(np.ones(nu), size=(sz["S"], sz["X1"], sz["X2"], nv)),
            }
            with_u = corner_arrays(ch, "outer-sc-withU", factors)
            without = corner_arrays(ch, "outer-sc", {k: v for k, v in factors.items() if k != "U"})
            d = max(float(with_u["r1"] - without["r1"]), float(with_u["sum"] - without["sum"]))
            worst["dominance"] = max(worst["dominance"], d)
        res.details.update(worst)
        if worst["inner_in_outer"] > 1e-6:
            res.failures.append(f"inner-sc hull leaves outer-sc hull by {worst['inner_in_outer']:.3g}")
        if worst["outer_in_prop1"] > 1e-6:
            res.failures.append(f"outer-sc hull leaves prop1 hull by {worst['outer_in_prop1']:.3g} "
                                f"on channels {offenders}")
        if worst["sum_gap"] > 1e-6:
            res.failures.append(f"inner-sc max sum exceeds sum capacity by {worst['sum_gap']:.3g}")
        if worst["dominance"] > 1e-9:
            res.failures.append(f"with-U corner exceeds U-dropped corner by {worst['dominance']:.3g}")
    return _timed(5, "Nesting and sum-invariance suite", 300.0, body)


def deterministic_state_channel(state_p: float = 0.3):
    """Y = (X1 xor S, X2) with S ~ Bern(state_p)."""
    return builtin_channel("additive-binary-helper", {"p": 0.0, "state_p": state_p})


def criterion_6() -> CriterionResult:
    def body(res):
        ch = deterministic_state_channel()
        cfg = SearchConfig(lambda_points=9, restarts=2, seed=0)
        relaxed = compute_region(ch, "inner-sc", SearchConfig(**{**cfg.to_json(), "relax_constraint": True}))
        pentagon = oracle("thm4-pentagon", {"channel": ch, "config": cfg})
        d = float(support_gap(relaxed, pentagon))
        res.details["inner_vs_prop1_support_gap"] = d
        if d > 1e-3:
            res.failures.append(f"relaxed inner-sc and prop1 hulls differ by {d:.3g}")
        gap = abs(relaxed.max_sum() - sum_capacity(ch))
        res.details["max_sum_gap"] = gap
        if gap > 1e-2:
            res.failures.append(f"max sum differs from sum capacity by {gap:.3g}")
        for p in (0.1, 0.25):
            fading = builtin_channel("fading-binary", {"p": p})
            got = compute_region(fading, "helper", SearchConfig(lambdas=(0.0,), restarts=2, seed=0)).support(0.0)
            _close(res, f"example6_p={p}", got, oracle("example6", {"p": p})["value"], 1e-3)
    return _timed(6, "Deterministic-state capacity agreement", 120.0, body)


def criterion_7() -> CriterionResult:
    def body(res):
        P1, P2, N, Q = 0.5, 0.5, 0.5, 1.0
        rho, val = example4_max(P1, P2, Q, N)
        _, grid_val = example4_grid_max(P1, P2, Q, N, points=10**6)
        _close(res, "example4_golden_vs_grid", val, grid_val, 1e-8)
        res.details["rho_star"] = rho
        rho_w, val_w = example4_max(P1, P2, Q, N, lo=-1.0, hi=1.0)
        _close(res, "example4_wide_vs_unit", val_w, val, 1e-10)
        grid = np.linspace(0.1, 4.0, 12)
        for model in ("remark5", "remark7", "example5"):
            ok = True
            for name in ("P1", "P2"):
                vals = [gaussian_capacity(model, {**dict(P1=1.0, P2=1.0, Q=1.0, N=1.0), name: x})["value"]
                        for x in grid]
                ok &= bool(np.all(np.diff(vals) >= -1e-12))
            vals = [gaussian_capacity(model, dict(P1=1.0, P2=1.0, Q=x, N=1.0))["value"] for x in grid]
            ok &= bool(np.all(np.diff(vals) <= 1e-12))
            res.details[f"{model}_monotone"] = ok
            if not ok:
                res.failures.append(f"{model} fails the monotonicity grid")
    return _timed(7, "Gaussian closed forms", 10.0, body)


def criterion_8(trials: int = 500) -> CriterionResult:
    def body(res):
        p = 0.1
        ch = builtin_channel("additive-binary-helper", {"p": p})
        cap = example3_capacity(p, 0.5)
        law = example3_law()
        inside, above = [], None
        for n in (6, 10, 14):
            r = run_block_markov(ch, RatePoint(0.0, 0.8 * cap), SimConfig(n=n, B=4, trials=trials, seed=1, law=law))
            inside.append(r.rate)
            res.details[f"inside_n={n}"] = r.to_json()
        r = run_block_markov(ch, RatePoint(0.0, 1.2 * cap), SimConfig(n=14, B=4, trials=trials, seed=1, law=law))
        above = r.rate
        res.details["above_n=14"] = r.to_json()
        if not (inside[0] > inside[1] > inside[2]):
            res.failures.append(f"inside-capacity error rates {inside} are not strictly decreasing")
        if not above > 0.5:
            res.failures.append(f"above-capacity error rate {above} is not > 0.5")
    return _timed(8, "Simulator error-rate trend", 600.0, body)


def criterion_9() -> CriterionResult:
    def body(res):
        rng = np.random.default_rng(9)
        channels = [builtin_channel("adder-mac")]
        kernel = rng.dirichlet(np.ones(3), size=(2, 2))
        channels.append(no_state_channel(kernel, name="random-no-state"))
        for ch in channels:
            cfg = SearchConfig(lambda_points=33, restarts=2, seed=0)
            causal = compute_region(ch, "causal", cfg)
            classical = compute_region(ch, "nostate", cfg)
            d = float(support_gap(causal, classical))
            res.details[ch.name] = d
            if d > 1e-3:
                res.failures.append(f"{ch.name}: causal and no-state hulls differ by {d:.3g}")
    return _timed(9, "Causal region collapses to the no-state region", 120.0, body)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run_all(selected=None) -> list[CriterionResult]:
    return [CRITERIA[i]() for i in sorted(selected or CRITERIA)]


__all__ = ["CRITERIA", "CriterionResult", "example2_witness", "run_all"]
