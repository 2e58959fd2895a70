"""Channel specifications, factored laws per bound, and joint-law assembly."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .prob import JointPMF, check_cells, inverse_binary_entropy

ROW_TOL = 1e-9

# Canonical order of variables in every assembled joint.
AXIS_ORDER = ("S", "U", "V", "X1", "X2", "Y")
_LETTERS = {"S": "s", "U": "u", "V": "v", "X1": "a", "X2": "b", "Y": "y", "S1": "p", "S2": "q"}


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Finite state-dependent MAC: state law ``q_s`` and kernel ``w[s, x1, x2, y]``.

    ``state_factors`` marks a product state S=(S1,S2) flattened as
    s = s1*|S2| + s2; ``q_s`` must then be the product of its marginals.
    """

    q_s: np.ndarray
    w: np.ndarray
    name: str = "custom"
    state_factors: tuple[int, int] | None = None
    index_order: str = ""

    def __post_init__(self):
        q = np.asarray(self.q_s, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if q.ndim != 1 or w.ndim != 4:
            raise ValidationError("Q_S must be a vector and W a 4-d tensor [s][x1][x2][y]")
        if w.shape[0] != q.shape[0]:
            raise ValidationError(f"Q_S has {q.shape[0]} states but W has {w.shape[0]}")
        if min(w.shape) < 1:
            raise ValidationError("all alphabets must be nonempty")
        check_cells(w.size, "channel kernel")
        for arr, what in ((q, "Q_S"), (w, "W")):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValidationError(f"{what} has negative or non-finite entries")
        if abs(q.sum() - 1.0) > ROW_TOL:
            raise ValidationError(f"Q_S sums to {q.sum()!r}")
        if np.max(np.abs(w.sum(axis=-1) - 1.0)) > ROW_TOL:
            raise ValidationError("some W(.|s,x1,x2) row does not sum to 1")
        if self.state_factors is not None:
            n1, n2 = (int(v) for v in self.state_factors)
            if n1 * n2 != q.shape[0]:
                raise ValidationError(f"state factors {n1}x{n2} do not match |S|={q.shape[0]}")
            qq = q.reshape(n1, n2)
            if np.max(np.abs(qq - np.outer(qq.sum(1), qq.sum(0)))) > ROW_TOL:
                raise ValidationError("state factors declared but Q_S is not a product law")
            object.__setattr__(self, "state_factors", (n1, n2))
        q, w = q.copy(), w.copy()
        q.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "q_s", q)
        object.__setattr__(self, "w", w)

    @property
    def sizes(self) -> dict[str, int]:
        s, x1, x2, y = self.w.shape
        return {"S": s, "X1": x1, "X2": x2, "Y": y}

    def averaged_kernel(self) -> np.ndarray:
        """W-bar(y|x1,x2) = sum_s Q_S(s) W(y|s,x1,x2)."""
        return np.einsum("s,sxzy->xzy", self.q_s, self.w)

    def to_json(self) -> dict:
        out = {
            "sizes": self.sizes,
            "Q_S": self.q_s.tolist(),
            "W": self.w.tolist(),
            "name": self.name,
        }
        if self.state_factors is not None:
            out["state_factors"] = list(self.state_factors)
        if self.index_order:
            out["index_order"] = self.index_order
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ChannelSpec":
        if not isinstance(obj, Mapping):
            raise ValidationError("channel spec must be a JSON object")
        missing = {"sizes", "Q_S", "W"} - set(obj)
        if missing:
            raise ValidationError(f"channel spec is missing keys {sorted(missing)}")
        sizes = obj["sizes"]
        try:
            shape = tuple(int(sizes[k]) for k in ("S", "X1", "X2", "Y"))
            q = np.asarray(obj["Q_S"], dtype=float)
            w = np.asarray(obj["W"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed channel spec: {exc}") from exc
        if q.shape != (shape[0],) or w.shape != shape:
            raise ValidationError(f"declared sizes {shape} do not match Q_S {q.shape} / W {w.shape}")
        sf = obj.get("state_factors")
        return cls(q, w, name=str(obj.get("name", "custom")),
                   state_factors=tuple(sf) if sf is not None else None,
                   index_order=str(obj.get("index_order", "")))


def load_channel(path: str | Path) -> ChannelSpec:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return ChannelSpec.from_json(obj)


def save_channel(ch: ChannelSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ch.to_json(), indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------- factored laws

# kind -> tuple of (children, parents). A factor array has shape
# parents + children and is normalized over the children axes.
LAW_STRUCTURE: dict[str, tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]] = {
    "inner-sc": ((("X2",), ()), (("X1",), ("X2",)), (("V",), ("S", "X2"))),
    "outer-sc": ((("X2",), ()), (("X1",), ("X2",)), (("V",), ("S", "X1", "X2")),
                 (("U",), ("S", "X1", "X2", "V"))),
    "asym-inner": ((("U",), ()), (("X2",), ("U",)), (("X1",), ("U",)), (("V",), ("S", "U", "X2"))),
    "causal": ((("V",), ()), (("U",), ("V",)), (("X2",), ("V", "S")), (("X1",), ("S", "V", "U"))),
    "product-input": ((("X1",), ()), (("X2",), ())),
    "joint-input": ((("X1", "X2"), ()),),
}
OPTIONAL_FACTORS = {"outer-sc": {"U"}}


def factor_key(children: tuple[str, ...]) -> str:
    return ",".join(children)


def law_factors(kind: str, factors: Mapping[str, np.ndarray]):
    """(key, children, parents) for each factor present in a law of ``kind``."""
    out = []
    for children, parents in LAW_STRUCTURE[kind]:
        key = factor_key(children)
        if key in factors:
            out.append((key, children, parents))
    return out


def prop2_card_bound(sizes: Mapping[str, int]) -> int:
    return sizes["S"] * sizes["X1"] * sizes["X2"] + 2


@dataclass(frozen=True, eq=False)
class FactoredLaw:
    """Auxiliary/input distribution in the factorization required by a bound.

    ``factors`` maps the child variable(s) to a conditional pmf array whose
    leading axes are the parents in the order of ``LAW_STRUCTURE[kind]``.
    For outer-sc the U factor is P(U|S,X1,X2,V) and may be omitted.
    """

    kind: str
    factors: Mapping[str, np.ndarray]
    allow_large_card: bool = False
    sizes: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in LAW_STRUCTURE:
            raise ValidationError(f"unknown law kind {self.kind!r}; choose from {sorted(LAW_STRUCTURE)}")
        facs = {k: np.asarray(v, dtype=float) for k, v in self.factors.items()}
        expected = {factor_key(c) for c, _ in LAW_STRUCTURE[self.kind]}
        optional = OPTIONAL_FACTORS.get(self.kind, set())
        if set(facs) - expected:
            raise ValidationError(f"unexpected factors {sorted(set(facs) - expected)} for {self.kind}")
        if expected - optional - set(facs):
            raise ValidationError(f"missing factors {sorted(expected - optional - set(facs))} for {self.kind}")
        sizes: dict[str, int] = {}
        for key, children, parents in law_factors(self.kind, facs):
            arr = facs[key]
            axes = parents + children
            if arr.ndim != len(axes):
                raise ValidationError(f"factor {key} should have axes {axes}, got shape {arr.shape}")
            for name, n in zip(axes, arr.shape):
                if sizes.setdefault(name, n) != n:
                    raise ValidationError(f"inconsistent size for {name}: {sizes[name]} vs {n}")
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValidationError(f"factor {key} has negative or non-finite entries")
            rows = arr.reshape(int(np.prod(arr.shape[: len(parents)], dtype=int)), -1).sum(axis=1)
            if np.max(np.abs(rows - 1.0)) > ROW_TOL:
                raise ValidationError(f"factor {key} has rows that do not sum to 1")
            arr = arr.copy()
            arr.flags.writeable = False
            facs[key] = arr
        if self.kind in ("inner-sc", "outer-sc") and not self.allow_large_card:
            bound = prop2_card_bound(sizes)
            if sizes["V"] > bound:
                raise ValidationError(f"|V|={sizes['V']} exceeds the cardinality bound {bound}; "
                                      "pass allow_large_card=True to override")
        object.__setattr__(self, "factors", MappingProxyType(facs))
        object.__setattr__(self, "sizes", MappingProxyType(sizes))

    def has(self, key: str) -> bool:
        return key in self.factors

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256(self.kind.encode())
        for key in sorted(self.factors):
            h.update(key.encode())
            h.update(np.ascontiguousarray(np.round(self.factors[key], 12)).tobytes())
        return h.hexdigest()[:16]


def law_to_json(law: FactoredLaw) -> dict:
    return {"kind": law.kind, "factors": {k: np.asarray(v).tolist() for k, v in sorted(law.factors.items())},
            "allow_large_card": law.allow_large_card}


def law_from_json(obj: Mapping) -> FactoredLaw:
    if not isinstance(obj, Mapping) or "kind" not in obj or "factors" not in obj:
        raise ValidationError("law spec must be a JSON object with 'kind' and 'factors'")
    try:
        facs = {str(k): np.asarray(v, dtype=float) for k, v in obj["factors"].items()}
    except (AttributeError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed law spec: {exc}") from exc
    return FactoredLaw(str(obj["kind"]), facs, allow_large_card=bool(obj.get("allow_large_card", False)))


def load_law(path: str | Path) -> FactoredLaw:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return law_from_json(obj)


def check_law_sizes(ch: ChannelSpec, sizes: Mapping[str, int]) -> None:
    for name, n in ch.sizes.items():
        if name in sizes and sizes[name] != n:
            raise ValidationError(f"law has |{name}|={sizes[name]} but channel has {n}")


def joint_names(kind: str, factor_keys) -> tuple[str, ...]:
    present = {"S", "X1", "X2", "Y"}
    for key in factor_keys:
        present.update(key.split(","))
    return tuple(n for n in AXIS_ORDER if n in present)


def _expand(op: np.ndarray, letters: str, out: str) -> np.ndarray:
    """View of ``op`` (leading batch axes, then ``letters``) aligned to ``out``."""
    op = np.asarray(op)
    nb = op.ndim - len(letters)
    perm = list(range(nb)) + [nb + letters.index(ch) for ch in sorted(letters, key=out.index)]
    op = op.transpose(perm)
    shape = op.shape[:nb] + tuple(op.shape[nb + sorted(letters, key=out.index).index(ch)] if ch in letters else 1
                                  for ch in out)
    return op.reshape(shape)


def assemble_values(ch: ChannelSpec, kind: str, factors: Mapping[str, np.ndarray]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Joint tensor for possibly batched factor arrays (leading batch axes).

    No axis is summed, so the joint is a broadcast product of the factors.
    The unbatched ones are multiplied first to keep the batched work small.
    """
    names = joint_names(kind, factors.keys())
    out = "".join(_LETTERS[n] for n in names)
    operands = [(ch.q_s, "s"), (ch.w, "saby")]
    for key, children, parents in law_factors(kind, factors):
        operands.append((np.asarray(factors[key]), "".join(_LETTERS[n] for n in parents + children)))
    operands.sort(key=lambda t: np.prod(np.shape(t[0])[: np.ndim(t[0]) - len(t[1])], dtype=int))
    values = None
    for op, letters in operands:
        term = _expand(op, letters, out)
        values = term if values is None else values * term
    check_cells(values.size, "assembled joint")
    return values, names


def assemble_joint(ch: ChannelSpec, law: FactoredLaw) -> JointPMF:
    """Joint pmf over (S,[U,][V,]X1,X2,Y) = Q_S * law factors * W."""
    check_law_sizes(ch, law.sizes)
    projected = 1
    for n in joint_names(law.kind, law.factors.keys()):
        projected *= law.sizes.get(n, ch.sizes.get(n, 1))
    check_cells(projected, "assembled joint")
    values, names = assemble_values(ch, law.kind, law.factors)
    return JointPMF(names, values)


def is_state_deterministic(ch: ChannelSpec) -> bool:
    """True iff every reachable (x1,x2,y) is explained by exactly one state."""
    pos = (ch.q_s[:, None, None, None] * ch.w) > 0
    counts = pos.sum(axis=0)
    return bool(np.all(counts[counts > 0] == 1))


# ---------------------------------------------------------------- constructors

def no_state_channel(kernel: np.ndarray, name: str = "no-state") -> ChannelSpec:
    """Channel with a single (degenerate) state from W(y|x1,x2)."""
    kernel = np.asarray(kernel, dtype=float)
    return ChannelSpec(np.ones(1), kernel[None], name=name)


def random_channel(rng: np.random.Generator, sizes: Mapping[str, int], name: str = "random") -> ChannelSpec:
    s, x1, x2, y = (int(sizes[k]) for k in ("S", "X1", "X2", "Y"))
    q = rng.dirichlet(np.ones(s))
    w = rng.dirichlet(np.ones(y), size=(s, x1, x2))
    return ChannelSpec(q, w, name=name)


def _need(params: Mapping, key: str, default=None) -> float:
    if key in params:
        return float(params[key])
    if default is None:
        raise ValidationError(f"missing channel parameter {key!r}")
    return float(default)


def _prob(x: float, key: str) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"parameter {key} must lie in [0,1], got {x}")
    return x


def _switch(params):
    w = np.zeros((2, 2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            w[0, x1, x2, x1] = 1.0
            w[1, x1, x2, x2] = 1.0
    return ChannelSpec(np.array([0.5, 0.5]), w, name="switch", index_order="s=0 selects X1, s=1 selects X2")


def _mod2_selector(params):
    p = _prob(_need(params, "p", inverse_binary_entropy(0.5)), "p")
    q = np.array([(1 - p) ** 2, (1 - p) * p, p * (1 - p), p * p])
    w = np.zeros((4, 2, 2, 4))
    for s in range(4):
        comps = (s // 2, s % 2)
        for x1 in range(2):
            for x2 in range(2):
                y1 = x1 ^ comps[(x1 + x2) % 2]
                w[s, x1, x2, y1 * 2 + x2] = 1.0
    return ChannelSpec(q, w, name="mod2-selector", state_factors=(2, 2),
                       index_order="s = s0*2 + s1; y = y1*2 + y2; Y1 = X1 xor S_{X1+X2 mod 2}, Y2 = X2")


def _additive_binary_helper(params):
    p = _prob(_need(params, "p"), "p")
    sp = _prob(_need(params, "state_p", 0.5), "state_p")
    w = np.zeros((2, 2, 2, 4))
    for s in range(2):
        for x1 in range(2):
            for x2 in range(2):
                clean = x1 ^ s
                w[s, x1, x2, clean * 2 + x2] += 1 - p
                w[s, x1, x2, (1 - clean) * 2 + x2] += p
    return ChannelSpec(np.array([1 - sp, sp]), w, name="additive-binary-helper",
                       index_order="y = y1*2 + y2; Y1 = X1 xor S xor Z, Y2 = X2")


def _fading_binary(params):
    p = _prob(_need(params, "p"), "p")
    sign = (1, -1)  # symbol index 0 is +1, index 1 is -1
    y2_values = (-2, 0, 2)
    w = np.zeros((2, 2, 2, 6))
    for s in range(2):
        for x1 in range(2):
            for x2 in range(2):
                y1 = 0 if sign[s] * sign[x1] == 1 else 1
                for z, pz in ((1, p), (-1, 1 - p)):
                    y2 = y2_values.index(sign[x2] + z)
                    w[s, x1, x2, y1 * 3 + y2] += pz
    return ChannelSpec(np.array([0.5, 0.5]), w, name="fading-binary",
                       index_order="symbol 0 = +1, 1 = -1; y = y1*3 + y2 with Y2 in (-2,0,2); "
                                   "Y1 = S*X1, Y2 = X2 + Z, Pr{Z=+1} = p")


def _adder_mac(params):
    w = np.zeros((2, 2, 3))
    for x1 in range(2):
        for x2 in range(2):
            w[x1, x2, x1 + x2] = 1.0
    return no_state_channel(w, name="adder-mac")


BUILTIN_CHANNELS = {
    "switch": _switch,
    "mod2-selector": _mod2_selector,
    "additive-binary-helper": _additive_binary_helper,
    "fading-binary": _fading_binary,
    "adder-mac": _adder_mac,
}


def builtin_channel(name: str, params: Mapping | None = None) -> ChannelSpec:
    """Example channels: switch, mod2-selector, additive-binary-helper, fading-binary, adder-mac."""
    try:
        ctor = BUILTIN_CHANNELS[name]
    except KeyError:
        raise ValidationError(f"unknown builtin channel {name!r}; choose from {sorted(BUILTIN_CHANNELS)}") from None
    return ctor(dict(params or {}))


def lift_inner_to_outer(law: FactoredLaw) -> FactoredLaw:
    """Reinterpret P(V|S,X2) as P(V|S,X1,X2) that ignores X1."""
    if law.kind != "inner-sc":
        raise ValidationError("only inner-sc laws can be lifted")
    pv = law.factors["V"]
    n_x1 = law.sizes["X1"]
    lifted = np.broadcast_to(pv[:, None, :, :], (pv.shape[0], n_x1) + pv.shape[1:]).copy()
    return FactoredLaw("outer-sc", {"X2": law.factors["X2"], "X1": law.factors["X1"], "V": lifted},
                       allow_large_card=law.allow_large_card)


def warn_not_deterministic(ch: ChannelSpec) -> None:
    if not is_state_deterministic(ch):
        warnings.warn(f"channel {ch.name!r} is not state-deterministic; value is only a bound",
                      stacklevel=3)
