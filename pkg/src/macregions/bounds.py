"""Per-distribution corner evaluators for every rate region.

Each bound maps one factored law to a pentagon
{R1 <= r1_cap, Rc + R1 <= sum_cap, Rc, R1 >= 0}. The ``corner_arrays``
entry point works on batches of laws and is what the optimizer calls;
the ``eval_*`` functions are the single-law public surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import entr

from .channels import (
    ChannelSpec,
    FactoredLaw,
    assemble_values,
    check_law_sizes,
    is_state_deterministic,
    warn_not_deterministic,
)
from .errors import ValidationError
from .prob import LN2, InfoCalculator

FEASIBILITY_TOL = 1e-9

# bound name -> law kind it optimizes over
BOUND_LAW_KIND = {
    "inner-sc": "inner-sc",
    "outer-sc": "outer-sc",
    "outer-sc-withU": "outer-sc",
    "prop1": "joint-input",
    "asym-inner": "asym-inner",
    "helper": "product-input",
    "causal": "causal",
    "nostate": "joint-input",
    "indep-states": "product-input",
}


@dataclass(frozen=True)
class CornerEvaluation:
    r1_cap: float
    sum_cap: float
    constraint_slack: float | None
    feasible: bool
    r1_caps: tuple[float, ...] | None = None

    def as_dict(self) -> dict:
        return {
            "r1_cap": self.r1_cap,
            "sum_cap": self.sum_cap,
            "constraint_slack": self.constraint_slack,
            "feasible": self.feasible,
            "r1_caps": list(self.r1_caps) if self.r1_caps is not None else None,
        }


@dataclass(frozen=True)
class IndepStatesCaps:
    """Caps R1 <= r1_cap, R2 <= r2_cap, R1 + R2 <= sum_cap."""

    r1_cap: float
    r2_cap: float
    sum_cap: float


def _require(law: FactoredLaw, kind: str) -> None:
    if law.kind != kind:
        raise ValidationError(f"this evaluator needs a {kind} law, got {law.kind}")


def _calc(ch: ChannelSpec, kind: str, factors: Mapping[str, np.ndarray], batch_ndim: int) -> InfoCalculator:
    values, names = assemble_values(ch, kind, factors)
    return InfoCalculator(values, names, batch_ndim)


def _split_states(ch: ChannelSpec, calc: InfoCalculator) -> InfoCalculator:
    """Re-express S as the pair (S1, S2) of a product state."""
    if ch.state_factors is None:
        raise ValidationError("indep-states needs a channel with two state axes (state_factors)")
    b = calc.batch_ndim
    i = b + calc.names.index("S")
    shape = calc.values.shape[:i] + tuple(ch.state_factors) + calc.values.shape[i + 1:]
    names = list(calc.names)
    names[i - b: i - b + 1] = ["S1", "S2"]
    return InfoCalculator(calc.values.reshape(shape), names, b)


def corner_arrays(ch: ChannelSpec, bound: str, factors: Mapping[str, np.ndarray], batch_ndim: int = 0,
                  relax_constraint: bool = False) -> dict[str, np.ndarray | None]:
    """Caps for a batch of laws.

    Returns arrays ``r1`` (effective R1 cap), ``sum``, ``slack`` (None when
    the bound has no decodability constraint), ``r1_caps`` (stack of the
    individual R1 caps when there are several) and ``rc`` (a cap on the
    first coordinate, only for indep-states where it is the R2 cap).
    """
    if bound not in BOUND_LAW_KIND:
        raise ValidationError(f"unknown bound {bound!r}; choose from {sorted(BOUND_LAW_KIND)}")
    kind = BOUND_LAW_KIND[bound]
    c = _calc(ch, kind, factors, batch_ndim)
    out: dict[str, np.ndarray | None] = {"slack": None, "r1_caps": None, "rc": None}
    if bound == "inner-sc" or (bound in ("outer-sc", "outer-sc-withU") and "U" not in factors):
        out["r1"] = c.mi("X1", "Y", ("V", "X2"))
        out["sum"] = c.mi(("V", "X1", "X2"), "Y") - c.mi(("V", "X1", "X2"), "S")
        if not (bound == "inner-sc" and relax_constraint):
            out["slack"] = c.mi(("V", "X2"), "Y") - c.mi(("V", "X2"), "S")
    elif bound in ("outer-sc", "outer-sc-withU"):
        out["r1"] = c.mi(("U", "X1"), "Y", ("V", "X2")) - c.mi(("U", "X1"), "S", ("V", "X2"))
        out["sum"] = c.mi(("U", "V", "X1", "X2"), "Y") - c.mi(("U", "V", "X1", "X2"), "S")
        out["slack"] = c.mi(("V", "X2"), "Y") - c.mi(("V", "X2"), "S")
    elif bound == "prop1":
        out["r1"] = c.mi("X1", "Y", ("X2", "S"))
        out["sum"] = c.mi(("X1", "X2"), "Y")
    elif bound == "asym-inner":
        penalty = c.mi("V", "S", ("U", "X2"))
        first = c.mi("X1", "Y", ("U", "V", "X2"))
        second = c.mi(("V", "X1", "X2"), "Y", "U") - penalty
        out["r1_caps"] = np.stack([first, second])
        out["r1"] = np.minimum(first, second)
        out["sum"] = c.mi(("U", "V", "X1", "X2"), "Y") - penalty
    elif bound == "helper":
        out["r1"] = c.mi("X1", "Y", ("S", "X2"))
        out["sum"] = c.mi(("X1", "X2"), "Y")
    elif bound == "causal":
        out["r1"] = c.mi("U", "Y", "V")
        out["sum"] = c.mi(("U", "V"), "Y")
    elif bound == "nostate":
        out["r1"] = c.mi("X1", "Y", "X2")
        out["sum"] = c.mi(("X1", "X2"), "Y")
    elif bound == "indep-states":
        c2 = _split_states(ch, c)
        out["r1"] = c2.mi("X1", "Y", ("X2", "S2"))
        out["rc"] = c2.mi("X2", "Y", ("X1", "S1"))
        out["sum"] = c2.mi(("X1", "X2"), "Y")
    return out


def _single(ch: ChannelSpec, law: FactoredLaw, bound: str, relax: bool = False) -> CornerEvaluation:
    check_law_sizes(ch, law.sizes)
    arr = corner_arrays(ch, bound, law.factors, 0, relax)
    slack = None if arr["slack"] is None else float(arr["slack"])
    caps = None if arr["r1_caps"] is None else tuple(float(v) for v in arr["r1_caps"])
    return CornerEvaluation(
        r1_cap=float(arr["r1"]),
        sum_cap=float(arr["sum"]),
        constraint_slack=slack,
        feasible=slack is None or slack >= -FEASIBILITY_TOL,
        r1_caps=caps,
    )


def eval_inner_sc(ch: ChannelSpec, law: FactoredLaw, relax_constraint: bool = False) -> CornerEvaluation:
    """R1 <= I(X1;Y|V,X2), Rc+R1 <= I(V,X1,X2;Y) - I(V,X1,X2;S), with the
    decodability constraint 0 <= I(V,X2;Y) - I(V,X2;S) unless relaxed."""
    _require(law, "inner-sc")
    return _single(ch, law, "inner-sc", relax_constraint)


def eval_outer_sc(ch: ChannelSpec, law: FactoredLaw) -> CornerEvaluation:
    """Outer bound caps; with a U factor the (U,X1)-form caps are used."""
    _require(law, "outer-sc")
    return _single(ch, law, "outer-sc")


def eval_prop1(ch: ChannelSpec, law: FactoredLaw) -> CornerEvaluation:
    """R1 <= I(X1;Y|X2,S), Rc+R1 <= I(X1,X2;Y) under a joint input law."""
    _require(law, "joint-input")
    return _single(ch, law, "prop1")


def eval_asym_inner(ch: ChannelSpec, law: FactoredLaw) -> CornerEvaluation:
    """Two R1 caps (``r1_caps``; ``r1_cap`` is their minimum) and the sum cap."""
    _require(law, "asym-inner")
    return _single(ch, law, "asym-inner")


def eval_helper_capacity(ch: ChannelSpec, law: FactoredLaw) -> float:
    """min{I(X1;Y|S,X2), I(X1,X2;Y)} with independent inputs.

    This is the capacity expression only for state-deterministic channels;
    otherwise a warning is issued and the value is still returned.
    """
    _require(law, "product-input")
    warn_not_deterministic(ch)
    ev = _single(ch, law, "helper")
    return min(ev.r1_cap, ev.sum_cap)


def eval_causal(ch: ChannelSpec, law: FactoredLaw) -> CornerEvaluation:
    """R1 <= I(U;Y|V), Rc+R1 <= I(U,V;Y)."""
    _require(law, "causal")
    return _single(ch, law, "causal")


def eval_nostate(ch: ChannelSpec, law: FactoredLaw) -> CornerEvaluation:
    """R1 <= I(X1;Y|X2), Rc+R1 <= I(X1,X2;Y) under a joint input law."""
    _require(law, "joint-input")
    return _single(ch, law, "nostate")


def eval_indep_states(ch: ChannelSpec, law: FactoredLaw) -> IndepStatesCaps:
    """R1 <= I(X1;Y|X2,S2), R2 <= I(X2;Y|X1,S1), R1+R2 <= I(X1,X2;Y)."""
    _require(law, "product-input")
    check_law_sizes(ch, law.sizes)
    arr = corner_arrays(ch, "indep-states", law.factors)
    return IndepStatesCaps(float(arr["r1"]), float(arr["rc"]), float(arr["sum"]))


def example6_g(p: float, q2: float) -> float:
    """-p q2 log(p q2) - (1-p)(1-q2) log((1-p)(1-q2)) - (p*q2) log(p*q2), 0 log 0 = 0."""

    conv = p * (1 - q2) + q2 * (1 - p)
    return float((entr(p * q2) + entr((1 - p) * (1 - q2)) + entr(conv)) / LN2)


__all__ = [
    "BOUND_LAW_KIND",
    "CornerEvaluation",
    "IndepStatesCaps",
    "corner_arrays",
    "eval_asym_inner",
    "eval_causal",
    "eval_helper_capacity",
    "eval_indep_states",
    "eval_inner_sc",
    "eval_nostate",
    "eval_outer_sc",
    "eval_prop1",
    "example6_g",
    "is_state_deterministic",
]
