"""Entropies and conditional mutual informations on dense joint pmfs (bits)."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import bisect
from scipy.special import entr

from .errors import ResourceLimitError, ValidationError

LN2 = np.log(2.0)
DEFAULT_MAX_CELLS = 10**7
NORMALIZATION_TOL = 1e-9
MI_CLAMP_TOL = 1e-9


def max_cells() -> int:
    """Cell cap for dense tensors, read from ``MACREGIONS_MAX_CELLS``."""
    raw = os.environ.get("MACREGIONS_MAX_CELLS")
    if raw is None:
        return DEFAULT_MAX_CELLS
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"MACREGIONS_MAX_CELLS must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValidationError("MACREGIONS_MAX_CELLS must be positive")
    return value


def check_cells(n_cells: int, what: str = "tensor") -> None:
    cap = max_cells()
    if n_cells > cap:
        raise ResourceLimitError(f"{what} needs {n_cells} cells, cap is {cap} (MACREGIONS_MAX_CELLS)")


@dataclass(frozen=True, eq=False)
class JointPMF:
    """Dense joint pmf with one named axis per random variable."""

    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        names = tuple(self.names)
        values = np.asarray(self.values, dtype=float)
        if len(set(names)) != len(names):
            raise ValidationError(f"axis names must be unique: {names}")
        if values.ndim != len(names):
            raise ValidationError(f"{len(names)} names for a {values.ndim}-d tensor")
        check_cells(values.size, "joint pmf")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValidationError("joint pmf has negative or non-finite cells")
        total = values.sum()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"joint pmf sums to {total!r}, not 1")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    @property
    def axes(self) -> tuple[tuple[str, int], ...]:
        return tuple(zip(self.names, self.values.shape))

    def size(self, name: str) -> int:
        return self.values.shape[self._index(name)]

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown variable {name!r}; axes are {self.names}") from None

    def marginal(self, keep: Iterable[str]) -> "JointPMF":
        keep = [n for n in self.names if n in set(keep)]
        for n in keep:
            self._index(n)
        drop = tuple(i for i, n in enumerate(self.names) if n not in keep)
        return JointPMF(tuple(keep), self.values.sum(axis=drop))


def _as_names(vars_: str | Iterable[str]) -> tuple[str, ...]:
    if isinstance(vars_, str):
        return (vars_,)
    return tuple(vars_)


class InfoCalculator:
    """Cached entropy evaluation on a (possibly batched) joint tensor.

    The first ``batch_ndim`` axes of ``values`` index independent joints;
    the rest are named by ``names``. Results carry the batch shape.
    """

    def __init__(self, values: np.ndarray, names: Sequence[str], batch_ndim: int = 0):
        self.values = values
        self.names = tuple(names)
        self.batch_ndim = batch_ndim
        if values.ndim != batch_ndim + len(self.names):
            raise ValidationError("tensor rank does not match names plus batch axes")
        self._cache: dict[frozenset, np.ndarray] = {}
        self._marg: dict[frozenset, np.ndarray] = {frozenset(self.names): values}

    def _axis(self, name: str) -> int:
        try:
            return self.batch_ndim + self.names.index(name)
        except ValueError:
            raise ValidationError(f"unknown variable {name!r}; axes are {self.names}") from None

    def marginal(self, vars_: Iterable[str]) -> np.ndarray:
        """Marginal tensor over ``vars_`` (axes in ``names`` order), cached.

        Summed from the smallest cached superset rather than the full joint.
        """
        key = frozenset(vars_)
        for n in key:
            self._axis(n)
        hit = self._marg.get(key)
        if hit is not None:
            return hit
        src_key = min((k for k in self._marg if key <= k), key=len)
        src = self._marg[src_key]
        src_names = [n for n in self.names if n in src_key]
        drop = tuple(self.batch_ndim + i for i, n in enumerate(src_names) if n not in key)
        marg = src.sum(axis=drop) if drop else src
        self._marg[key] = marg
        return marg

    def entropy(self, vars_: Iterable[str]) -> np.ndarray:
        key = frozenset(vars_)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        marg = self.marginal(key)
        inner = tuple(range(self.batch_ndim, marg.ndim))
        h = entr(marg).sum(axis=inner) / LN2 if inner else np.zeros(marg.shape)
        self._cache[key] = h
        return h

    def mi(self, a: Iterable[str], b: Iterable[str], c: Iterable[str] = (), clamp: bool = True) -> np.ndarray:
        """I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)."""
        a, b, c = set(_as_names(a)), set(_as_names(b)), set(_as_names(c))
        if a & b or a & c or b & c:
            raise ValidationError(f"variable sets overlap: {sorted(a)}, {sorted(b)}, {sorted(c)}")
        if not a or not b:
            raise ValidationError("mutual information needs nonempty A and B")
        h_abc = self.entropy(a | b | c)  # largest set first so the others derive from it
        val = self.entropy(a | c) + self.entropy(b | c) - h_abc - self.entropy(c)
        if clamp:
            val = np.where((val < 0) & (val > -MI_CLAMP_TOL), 0.0, val)
        return val


def entropy(p: JointPMF, vars_: str | Iterable[str]) -> float:
    """Shannon entropy in bits of the marginal of ``p`` on ``vars_``."""
    calc = InfoCalculator(p.values, p.names)
    return float(max(calc.entropy(_as_names(vars_)), 0.0))


def cond_mutual_info(p: JointPMF, a, b, c=()) -> float:
    """I(A;B|C) in bits; tiny negative round-off is clamped to 0."""
    calc = InfoCalculator(p.values, p.names)
    return float(calc.mi(a, b, c))


def _check_prob(x: float, name: str) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ValidationError(f"{name} must lie in [0,1], got {x}")
    return x


def binary_entropy(a: float) -> float:
    a = _check_prob(a, "a")
    return float((entr(a) + entr(1.0 - a)) / LN2)


def binary_convolve(p: float, q: float) -> float:
    """p * q = p(1-q) + q(1-p)."""
    p = _check_prob(p, "p")
    q = _check_prob(q, "q")
    return p * (1.0 - q) + q * (1.0 - p)


def inverse_binary_entropy(t: float) -> float:
    """The p in [0, 1/2] with h2(p) = t, found by bisection."""
    t = float(t)
    if not (0.0 <= t <= 1.0):
        raise ValidationError(f"t must lie in [0,1], got {t}")
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return 0.5
    return float(bisect(lambda x: binary_entropy(x) - t, 0.0, 0.5, xtol=1e-14, rtol=1e-15, maxiter=200))
