"""Closed-form Gaussian capacity expressions (bits)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
MODELS = ("remark5", "example4", "remark7", "example5")


@dataclass(frozen=True)
class GaussianParams:
    P1: float
    P2: float
    Q: float
    N: float
    rho12: float = 0.0

    def __post_init__(self):
        for name in ("P1", "P2", "Q", "N"):
            v = getattr(self, name)
            if not (v >= 0.0) or math.isnan(v):
                raise ValidationError(f"{name} must be >= 0, got {v}")
        if not abs(self.rho12) <= 1.0:
            raise ValidationError(f"|rho12| must be <= 1, got {self.rho12}")

    @property
    def sigma12(self) -> float:
        return self.rho12 * math.sqrt(self.P1 * self.P2)


def _half_log(x: float) -> float:
    return 0.5 * math.log2(x) if x < math.inf else math.inf


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 0.0 if num == 0 else math.inf


def theta(P1: float, P2: float, rho: float, Q: float, N: float) -> float:
    """Sum-rate expression of the Gaussian example as a function of the input correlation.

    Returns ``math.inf`` when a zero variance makes the expression unbounded.
    """
    GaussianParams(P1, P2, Q, N, rho)
    num = (1 - rho**2) * P1 * P2 + N * ((math.sqrt(P1) + rho * math.sqrt(P2)) ** 2 + (1 - rho**2) * P2)
    first = _half_log(1 + _ratio(num, Q * (P2 + N)))
    second = _half_log(1 + _ratio(P2, N))
    return first + second


def theta_covariance(P1: float, P2: float, rho: float, Q: float, N: float) -> float:
    """Same quantity from the output covariance: 1/2 log(det Cov(Y1,Y2) / (Q N)).

    Y1 = X1 + X2 + S, Y2 = X2 + Z with S ~ N(0,Q), Z ~ N(0,N) independent of the
    inputs, so I(X1,X2;Y1,Y2) = h(Y1,Y2) - h(S,Z).
    """
    sigma = rho * math.sqrt(P1 * P2)
    v1 = P1 + P2 + 2 * sigma + Q
    c12 = P2 + sigma
    v2 = P2 + N
    det = v1 * v2 - c12 * c12
    return 0.5 * math.log2(det / (Q * N))


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximize a unimodal ``f`` on [lo, hi]; returns (argmax, max)."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    # endpoints are candidates too: the maximizer may sit on the boundary
    best = max(((f(x), x) for x in (a, b, 0.5 * (a + b), lo, hi)), key=lambda t: (t[0], -abs(t[1])))
    return best[1], best[0]


def example4_max(P1: float, P2: float, Q: float, N: float, lo: float = 0.0, hi: float = 1.0):
    """(rho_star, value) maximizing theta over rho in [lo, hi]."""
    return golden_section_max(lambda r: theta(P1, P2, r, Q, N), lo, hi)


def gaussian_capacity(model: str, params: GaussianParams | dict) -> dict:
    """Evaluate one Gaussian model; returns {"value": bits, "rho_star": float or None}."""
    if isinstance(params, dict):
        params = GaussianParams(**params)
    P1, P2, Q, N = params.P1, params.P2, params.Q, params.N
    rho_star = None
    if model == "remark5":
        value = _half_log(1 + _ratio((math.sqrt(P1) + math.sqrt(P2)) ** 2, Q))
    elif model == "remark7":
        value = _half_log(1 + _ratio(P1 + P2, Q))
    elif model == "example5":
        value = _half_log(1 + _ratio(P1, Q) + _ratio(P2, Q) * _ratio(N, P2 + N)) + _half_log(1 + _ratio(P2, N))
    elif model == "example4":
        rho_star, value = example4_max(P1, P2, Q, N)
    else:
        raise ValidationError(f"unknown Gaussian model {model!r}; choose from {MODELS}")
    return {"model": model, "value": value, "rho_star": rho_star}


def example4_grid_max(P1: float, P2: float, Q: float, N: float, points: int = 10**6, lo: float = 0.0,
                      hi: float = 1.0):
    """Brute-force maximum of theta on a uniform rho grid (vectorized)."""
    rho = np.linspace(lo, hi, points)
    num = (1 - rho**2) * P1 * P2 + N * ((np.sqrt(P1) + rho * np.sqrt(P2)) ** 2 + (1 - rho**2) * P2)
    vals = 0.5 * np.log2(1 + num / (Q * (P2 + N))) + 0.5 * np.log2(1 + P2 / N)
    i = int(np.argmax(vals))
    return float(rho[i]), float(vals[i])
