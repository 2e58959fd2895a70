"""Monte Carlo simulation of the block-Markov compress-and-bin scheme and of
Shannon-strategy coding, on tiny block lengths.

Typicality is tested on the empirical joint type: a tuple of sequences is
typical when its type lies within ``epsilon`` of the reference joint law in
total-variation distance. Codebooks are regenerated for every trial. Each
trial owns an RNG stream derived from (seed, trial index), and codewords are
generated lazily from streams keyed by their codebook index, so a trial's
outcome does not depend on which codewords the decoder happens to inspect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import binomtest

from .channels import ChannelSpec, FactoredLaw, assemble_joint, check_law_sizes
from .errors import ValidationError
from .prob import InfoCalculator, check_cells
from .search import RatePoint

ALL_VARS = ("X2", "V", "X1", "Y")
EVENTS = ("covering", "cell", "common", "compression", "private")
DECISIONS = ("max-likelihood", "min-distance", "unique")
COVER_RULES = ("first", "best")


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``T``/``T_hat`` default to I(X2;Y) - delta and I(V;S|X2) + delta. The
    message and bin sizes use ``backoff`` scaled by the eta/mu constants in
    their exponents (M_c = ceil(2^{n(Rc - eta_c*backoff)}) and so on);
    ``epsilon`` is the total-variation slack of the typicality tests; when
    unset each test uses ``epsilon_scale * sqrt(k / n)`` with k the support
    size of the tested tuple, the order of the TV distance of a typical type.
    """

    n: int
    B: int = 4
    trials: int = 500
    seed: int = 0
    epsilon: float | None = None
    epsilon_scale: float = 0.6
    delta: float = 0.05
    T: float | None = None
    T_hat: float | None = None
    backoff: float = 0.0
    eta_c: float = 1.0
    eta_1: float = 1.0
    mu_c: float = 1.0
    mu_hat: float = 1.0
    decision: str = "max-likelihood"
    cover_rule: str = "first"
    law: FactoredLaw | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.B < 2:
            raise ValidationError("B must be >= 2")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValidationError("epsilon must be > 0")
        if not self.epsilon_scale > 0:
            raise ValidationError("epsilon_scale must be > 0")
        if self.delta < 0 or self.backoff < 0:
            raise ValidationError("delta and backoff must be >= 0")
        if self.decision not in DECISIONS:
            raise ValidationError(f"decision must be one of {DECISIONS}")
        if self.cover_rule not in COVER_RULES:
            raise ValidationError(f"cover_rule must be one of {COVER_RULES}")

    def eps(self, support: int) -> float:
        """Typicality slack for a test whose reference has ``support`` cells."""
        if self.epsilon is not None:
            return self.epsilon
        return min(1.0, self.epsilon_scale * math.sqrt(support / self.n))

    def to_json(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "law"}
        d["law_digest"] = self.law.digest() if self.law is not None else None
        return d


@dataclass(frozen=True)
class SimResult:
    trials: int
    errors: int
    events: Mapping[str, int]
    rate: float
    ci_low: float
    ci_high: float
    sizes: Mapping[str, int]

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "errors": self.errors,
            "events": dict(self.events),
            "error_rate": self.rate,
            "ci95": [self.ci_low, self.ci_high],
            "sizes": dict(self.sizes),
        }


def wilson_interval(k: int, n: int) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _result(trials: int, errors: int, events: dict, sizes: dict) -> SimResult:
    lo, hi = wilson_interval(errors, trials)
    return SimResult(trials, errors, events, errors / trials, lo, hi, sizes)


# ---------------------------------------------------------------- typicality

class Reference:
    """Marginals of the law's joint pmf, flattened for type comparisons."""

    def __init__(self, values: np.ndarray, names: Sequence[str]):
        self.values = values
        self.names = tuple(names)
        self._cache: dict = {}

    def get(self, vars_: tuple[str, ...]) -> tuple[np.ndarray, tuple[int, ...]]:
        if vars_ not in self._cache:
            keep = [self.names.index(v) for v in vars_]
            drop = tuple(i for i in range(len(self.names)) if i not in keep)
            m = self.values.sum(axis=drop)
            order = np.argsort(np.argsort(keep))
            m = np.transpose(m, order)
            self._cache[vars_] = (m.ravel(), m.shape)
        return self._cache[vars_]

    def support(self, vars_: tuple[str, ...]) -> int:
        return int(np.count_nonzero(self.get(vars_)[0] > 0))

    def score(self, vars_: tuple[str, ...], seqs: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        """(distance, log-likelihood) of each candidate; the last variable is
        the one tested for conditional typicality given the others."""
        ref, shape = self.get(vars_)
        return type_distance(seqs, ref, shape), log_likelihood(seqs, ref, shape)


def _codes(seqs: Sequence[np.ndarray], shape: tuple[int, ...]) -> np.ndarray:
    seqs = np.broadcast_arrays(*[np.atleast_2d(s) for s in seqs])
    return np.ravel_multi_index(tuple(seqs), shape)


def _conditional(ref: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    joint = ref.reshape(shape)
    marg = joint.sum(axis=-1, keepdims=True)
    return np.where(joint > 0, joint / np.where(marg > 0, marg, 1.0), 0.0)


def type_distance(seqs: Sequence[np.ndarray], ref: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Conditional-typicality distance of each candidate row.

    With pi the joint type of the sequences, returns the TV distance between
    pi and pi(others) * P(last | others), so only the fit of the last
    sequence to the others is measured. ``seqs`` broadcast to (C, n). A type
    with mass where ``ref`` is zero gets distance inf (strong typicality).
    """
    code = _codes(seqs, shape)
    c, n = code.shape
    cells = ref.size
    flat = code + (np.arange(c) * cells)[:, None]
    counts = np.bincount(flat.ravel(), minlength=c * cells).reshape((c,) + shape) / n
    target = counts.sum(axis=-1, keepdims=True) * _conditional(ref, shape)[None]
    dist = 0.5 * np.abs(counts - target).reshape(c, -1).sum(axis=1)
    off_support = (counts.reshape(c, -1)[:, ref <= 0] > 0).any(axis=1)
    return np.where(off_support, np.inf, dist)


def log_likelihood(seqs: Sequence[np.ndarray], ref: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """sum_i log P(last_i | others_i) under ``ref``."""
    cond = _conditional(ref, shape)
    with np.errstate(divide="ignore"):
        logc = np.log(cond)
    return logc.ravel()[_codes(seqs, shape)].sum(axis=1)


def decide(dist: np.ndarray, loglik: np.ndarray, eps: float, decision: str) -> int | None:
    """Index of the decoded candidate among the eps-typical ones, or None.

    "max-likelihood" resolves several typical candidates by the likelihood
    of the observation (a tie is a failure), "min-distance" by the type
    distance, and "unique" fails unless exactly one candidate is typical.
    """
    ok = np.flatnonzero(dist <= eps)
    if ok.size == 0:
        return None
    if decision == "unique":
        return int(ok[0]) if ok.size == 1 else None
    if decision == "min-distance":
        return int(ok[np.argmin(dist[ok])])
    ll = loglik[ok]
    best = ok[ll == ll.max()]
    return int(best[0]) if best.size == 1 else None


def _sample_rows(rng: np.random.Generator, cond: np.ndarray, count: int) -> np.ndarray:
    """Draw ``count`` sequences, position i from the row cond[i] (shape (n, k))."""
    cdf = np.cumsum(cond, axis=-1)
    cdf[:, -1] = 1.0
    u = rng.random((count, cond.shape[0]))
    return (u[..., None] > cdf[None]).sum(axis=-1)


def _channel_out(rng: np.random.Generator, ch: ChannelSpec, s, x1, x2) -> np.ndarray:
    return _sample_rows(rng, ch.w[s, x1, x2], 1)[0]


# ---------------------------------------------------------------- block Markov

class _Codebooks:
    def __init__(self, seed: int, trial: int, n: int, mc: int, k: int, khat: int, m1: int,
                 p_x2, p_v_x2, p_x1_x2):
        self.key = (seed, trial)
        rng = np.random.default_rng([seed, trial, 0])
        self.n, self.khat, self.m1 = n, khat, m1
        self.p_v_x2, self.p_x1_x2 = p_v_x2, p_x1_x2
        self.x2 = _sample_rows(rng, np.broadcast_to(p_x2, (n, p_x2.size)), mc * k).reshape(mc, k, n)
        self.cell_of = rng.integers(k, size=khat)
        self._v: dict = {}
        self._x1: dict = {}

    def v(self, wc: int, s: int) -> np.ndarray:
        if (wc, s) not in self._v:
            rng = np.random.default_rng([*self.key, 1, wc, s])
            self._v[wc, s] = _sample_rows(rng, self.p_v_x2[self.x2[wc, s]], self.khat)
        return self._v[wc, s]

    def x1(self, wc: int, s: int) -> np.ndarray:
        if (wc, s) not in self._x1:
            rng = np.random.default_rng([*self.key, 2, wc, s])
            self._x1[wc, s] = _sample_rows(rng, self.p_x1_x2[self.x2[wc, s]], self.m1)
        return self._x1[wc, s]


def scheme_sizes(ch: ChannelSpec, law: FactoredLaw, rates: RatePoint, cfg: SimConfig) -> dict:
    """Codebook sizes and the T, T_hat values used by ``run_block_markov``."""
    pmf = assemble_joint(ch, law)
    calc = InfoCalculator(pmf.values, pmf.names)
    T = cfg.T if cfg.T is not None else calc.mi("X2", "Y") - cfg.delta
    T_hat = cfg.T_hat if cfg.T_hat is not None else calc.mi("V", "S", "X2") + cfg.delta
    n, b = cfg.n, cfg.backoff
    mc = max(1, math.ceil(2 ** (n * (rates.rc - cfg.eta_c * b)) - 1e-9))
    m1 = max(1, math.ceil(2 ** (n * (rates.r1 - cfg.eta_1 * b)) - 1e-9))
    k = max(1, math.ceil(2 ** (n * (T + cfg.mu_c * b)) - 1e-9))
    khat = max(1, math.ceil(2 ** (n * (T_hat + cfg.mu_hat * b)) - 1e-9))
    return {"M_c": mc, "M_1": m1, "K": k, "K_hat": khat, "T": T, "T_hat": T_hat}


def run_block_markov(ch: ChannelSpec, rates: RatePoint, cfg: SimConfig) -> SimResult:
    """Simulate B-block transmission with Wyner-Ziv covering, cell binning and
    backward decoding (cell index, common message, cell index of the previous
    block, compression index, private message)."""
    law = cfg.law
    if law is None or law.kind != "inner-sc":
        raise ValidationError("run_block_markov needs cfg.law of kind inner-sc")
    check_law_sizes(ch, law.sizes)
    sz = scheme_sizes(ch, law, rates, cfg)
    mc, m1, k, khat = sz["M_c"], sz["M_1"], sz["K"], sz["K_hat"]
    n, B = cfg.n, cfg.B
    check_cells(mc * k * n + 2 * khat * n + m1 * n, "codebooks")
    if mc > 1:
        check_cells(mc * k * max(1, khat // k) * m1 * n, "common-message scan")

    pmf = assemble_joint(ch, law)
    ref = Reference(pmf.values, pmf.names)
    p_x2 = law.factors["X2"]
    p_x1_x2 = law.factors["X1"]
    p_v_x2 = np.einsum("s,sbv->bv", ch.q_s, law.factors["V"])

    def eps(vars_):
        return cfg.eps(ref.support(vars_))

    def score(vars_, seqs):
        return ref.score(vars_, seqs)

    events = {e: 0 for e in EVENTS}
    errors = 0
    for trial in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, trial, 3])
        cb = _Codebooks(cfg.seed, trial, n, mc, k, khat, m1, p_x2, p_v_x2, p_x1_x2)
        wc = np.concatenate([rng.integers(mc, size=B - 1), [0]])
        w1 = np.concatenate([rng.integers(m1, size=B - 1), [0]])
        states = _sample_rows(rng, np.broadcast_to(ch.q_s, (n, ch.q_s.size)), B)
        cell = np.zeros(B, dtype=int)  # cell index carried by block j
        z = np.zeros(B, dtype=int)  # compression index describing the state of block j
        hit = set()
        cell[0] = cb.cell_of[0]
        y = np.zeros((B, n), dtype=int)
        for i in range(B):
            if i >= 1:
                # cover the previous block's state, then announce its cell
                cand = cb.v(wc[i - 1], cell[i - 1])
                d, _ = score(("S", "X2", "V"), (states[i - 1][None], cb.x2[wc[i - 1], cell[i - 1]][None], cand))
                ok = np.flatnonzero(d <= eps(("S", "X2", "V")))
                if ok.size == 0:
                    hit.add("covering")
                if ok.size == 0:
                    z[i - 1] = 0
                elif cfg.cover_rule == "first":
                    z[i - 1] = int(ok[0])
                else:
                    z[i - 1] = int(ok[np.argmin(d[ok])])
                cell[i] = cb.cell_of[z[i - 1]]
            x2 = cb.x2[wc[i], cell[i]]
            x1 = cb.x1(wc[i], cell[i])[w1[i]]
            y[i] = _channel_out(rng, ch, states[i], x1, x2)

        def find_cell(wc_hat: int, block: int):
            return decide(*score(("X2", "Y"), (cb.x2[wc_hat], y[block][None])), eps(("X2", "Y")),
                          cfg.decision)

        # with one possible message pair the decoder cannot be wrong
        single = mc == 1 and m1 == 1
        failed = False
        s_next = find_cell(0, B - 1)  # the last block carries the default common message
        if s_next != cell[B - 1]:
            hit.add("cell")
        for j in range(B - 2, -1, -1):
            if s_next is None:
                failed = not single
                break
            # step (b): common message
            wc_hat = 0 if mc == 1 else _decode_common(cb, score, y[j], s_next, eps(ALL_VARS), cfg.decision,
                                                        mc, k, m1)
            if wc_hat != wc[j]:
                hit.add("common")
            if wc_hat is None:
                failed = not single
                break
            # step (c): cell index carried by this block (the first one is known)
            s_cur = int(cell[0]) if j == 0 else find_cell(wc_hat, j)
            if s_cur != cell[j]:
                hit.add("cell")
            if s_cur is None:
                failed = not single
                break
            # step (d): compression index within the announced cell
            # only the sequence matters, so indices sharing a codeword are one candidate
            members = np.flatnonzero(cb.cell_of == s_next)
            z_hat = None
            if members.size:
                vs, first = np.unique(cb.v(wc_hat, s_cur)[members], axis=0, return_index=True)
                pick = decide(*score(("V", "X2", "Y"), (vs, cb.x2[wc_hat, s_cur][None], y[j][None])),
                              eps(("V", "X2", "Y")), cfg.decision)
                z_hat = None if pick is None else int(members[first[pick]])
            if z_hat is None or wc_hat != wc[j] or s_cur != cell[j] or not np.array_equal(
                    cb.v(wc_hat, s_cur)[z_hat], cb.v(wc[j], cell[j])[z[j]]):
                hit.add("compression")
            # step (e): private message
            w1_hat = 0 if m1 == 1 else None
            if z_hat is not None and m1 > 1:
                w1_hat = decide(*score(("X2", "V", "X1", "Y"),
                                       (cb.x2[wc_hat, s_cur][None], cb.v(wc_hat, s_cur)[z_hat][None],
                                        cb.x1(wc_hat, s_cur), y[j][None])), eps(ALL_VARS), cfg.decision)
            if w1_hat != w1[j]:
                hit.add("private")
            if wc_hat != wc[j] or w1_hat != w1[j]:
                failed = True
            s_next = s_cur
        if failed:
            errors += 1
        for e in hit:
            events[e] += 1
    return _result(cfg.trials, errors, events, {k_: v for k_, v in sz.items() if k_ not in ("T", "T_hat")})


def _decode_common(cb: _Codebooks, score, yb, s_next, eps, decision, mc, k, m1):
    """Exhaustive scan over (wc, s, z in the announced cell, w1); only the
    common-message component of the decision matters."""
    if s_next is None:
        return None
    members = np.flatnonzero(cb.cell_of == s_next)
    if members.size == 0:
        return None
    dists, lls, labels = [], [], []
    for wc in range(mc):
        for s in range(k):
            v_rep = np.repeat(cb.v(wc, s)[members], m1, axis=0)
            x1_rep = np.tile(cb.x1(wc, s), (len(members), 1))
            d, ll = score(ALL_VARS, (cb.x2[wc, s][None], v_rep, x1_rep, yb[None]))
            dists.append(d)
            lls.append(ll)
            labels.append(np.full(d.shape, wc))
    dist, ll, label = np.concatenate(dists), np.concatenate(lls), np.concatenate(labels)
    ok = dist <= eps
    if not ok.any():
        return None
    if decision == "unique":
        found = np.unique(label[ok])
        return int(found[0]) if found.size == 1 else None
    if decision == "min-distance":
        return int(label[np.argmin(np.where(ok, dist, np.inf))])
    top = np.where(ok, ll, -np.inf)
    found = np.unique(label[top == top.max()])
    return int(found[0]) if found.size == 1 else None


# ---------------------------------------------------------------- Shannon strategies

def _strategy_map(factor: np.ndarray, what: str) -> np.ndarray:
    if not np.all((factor == 0) | (factor == 1)):
        raise ValidationError(f"{what} must be a deterministic strategy map")
    return factor.argmax(axis=-1)


def run_shannon_strategy(ch: ChannelSpec, rates: RatePoint, cfg: SimConfig) -> SimResult:
    """Single-block random coding over strategy letters (V, U).

    Codewords v(wc) ~ P_V and u(wc,w1) ~ P_{U|V}; letter i is sent as
    x2 = psi(v_i, s_i), x1 = phi(s_i, v_i, u_i). The decoder picks the
    jointly typical (v, u, y) pair of minimum type distance.
    """
    law = cfg.law
    if law is None or law.kind != "causal":
        raise ValidationError("run_shannon_strategy needs cfg.law of kind causal")
    check_law_sizes(ch, law.sizes)
    psi = _strategy_map(np.asarray(law.factors["X2"]), "P(X2|V,S)")
    phi = _strategy_map(np.asarray(law.factors["X1"]), "P(X1|S,V,U)")
    n = cfg.n
    mc = max(1, math.ceil(2 ** (n * (rates.rc - cfg.eta_c * cfg.backoff)) - 1e-9))
    m1 = max(1, math.ceil(2 ** (n * (rates.r1 - cfg.eta_1 * cfg.backoff)) - 1e-9))
    check_cells(mc * m1 * n, "strategy codebooks")
    pmf = assemble_joint(ch, law)
    ref = Reference(pmf.values, pmf.names)
    eps = cfg.eps(ref.support(("V", "U", "Y")))
    p_v = np.asarray(law.factors["V"])
    p_u_v = np.asarray(law.factors["U"])
    events = {e: 0 for e in EVENTS}
    errors = 0
    for trial in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, trial, 4])
        v = _sample_rows(rng, np.broadcast_to(p_v, (n, p_v.size)), mc)
        u = np.stack([_sample_rows(rng, p_u_v[v[c]], m1) for c in range(mc)])
        wc, w1 = int(rng.integers(mc)), int(rng.integers(m1))
        s = _sample_rows(rng, np.broadcast_to(ch.q_s, (n, ch.q_s.size)), 1)[0]
        x2 = psi[v[wc], s]
        x1 = phi[s, v[wc], u[wc, w1]]
        y = _channel_out(rng, ch, s, x1, x2)
        if mc * m1 == 1:
            pick = 0  # a single codeword is always the decoder's answer
        else:
            pick = decide(*ref.score(("V", "U", "Y"), (np.repeat(v, m1, axis=0), u.reshape(mc * m1, n), y[None])),
                          eps, cfg.decision)
        hit = set()
        if pick is None:
            hit.add("common")
            failed = True
        else:
            wc_hat, w1_hat = divmod(pick, m1)
            if wc_hat != wc:
                hit.add("common")
            if w1_hat != w1:
                hit.add("private")
            failed = bool(hit)
        if failed:
            errors += 1
        for e in hit:
            events[e] += 1
    return _result(cfg.trials, errors, events, {"M_c": mc, "M_1": m1})


# ---------------------------------------------------------------- witnesses

def example3_law(beta: float = 0.02) -> FactoredLaw:
    """Inner-sc witness for the additive binary helper channel: uniform
    inputs and V = S xor Bern(beta). beta > 0 makes the decodability
    constraint strictly slack."""
    flip = np.array([[1 - beta, beta], [beta, 1 - beta]])
    return FactoredLaw("inner-sc", {
        "X2": np.array([0.5, 0.5]),
        "X1": np.full((2, 2), 0.5),
        "V": np.repeat(flip[:, None, :], 2, axis=1),
    })


def identity_strategy_law(ch: ChannelSpec) -> FactoredLaw:
    """Causal law with |V| = |X2|, |U| = |X1| sending x2 = v, x1 = u
    (states ignored), uniform letters."""
    s, n1, n2 = ch.sizes["S"], ch.sizes["X1"], ch.sizes["X2"]
    x2 = np.zeros((n2, s, n2))
    for v in range(n2):
        x2[v, :, v] = 1.0
    x1 = np.zeros((s, n2, n1, n1))
    for u in range(n1):
        x1[:, :, u, u] = 1.0
    return FactoredLaw("causal", {
        "V": np.full(n2, 1.0 / n2),
        "U": np.full((n2, n1), 1.0 / n1),
        "X2": x2,
        "X1": x1,
    })
