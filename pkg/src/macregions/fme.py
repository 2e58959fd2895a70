"""Symbolic Fourier-Motzkin elimination over rate inequalities.

Inequalities have the normalized form

    sum_v c_v * v  (<= or <)  sum_a d_a * a + const

where v are rate variables and a are mutual-information atoms treated as
symbolic constants. Coefficients are exact ``Fraction`` values.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Mapping

from .errors import ValidationError

# Variables that should render last inside an information quantity.
_TAIL_RANK = {"S": 1, "Y": 2}


def _var_key(name: str):
    return (_TAIL_RANK.get(name, 0), name)


def _group_key(group: tuple[str, ...]):
    return tuple(_var_key(n) for n in group)


_ATOM_RE = re.compile(r"^I\(([^;|()]+);([^;|()]+)(?:\|([^;|()]+))?\)$")


@dataclass(frozen=True, order=True)
class Atom:
    """Mutual information I(A;B|C) with canonically ordered variable groups."""

    a: tuple[str, ...]
    b: tuple[str, ...]
    c: tuple[str, ...] = ()
    nonnegative: bool = True

    @staticmethod
    def make(a: Iterable[str], b: Iterable[str], c: Iterable[str] = (), nonnegative: bool = True) -> "Atom":
        a, b, c = (tuple(sorted(set(g), key=_var_key)) for g in (a, b, c))
        if not a or not b:
            raise ValidationError("atom needs two nonempty groups")
        if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
            raise ValidationError(f"atom groups overlap: {a}, {b}, {c}")
        if _group_key(b) < _group_key(a):
            a, b = b, a
        return Atom(a, b, c, nonnegative)

    @staticmethod
    def parse(text: str) -> "Atom":
        m = _ATOM_RE.match(text.replace(" ", ""))
        if not m:
            raise ValidationError(f"cannot parse atom {text!r}; expected I(A;B|C)")
        groups = [tuple(x for x in (g or "").split(",") if x) for g in m.groups()]
        return Atom.make(*groups)

    @property
    def name(self) -> str:
        core = ",".join(self.a) + ";" + ",".join(self.b)
        return f"I({core}|{','.join(self.c)})" if self.c else f"I({core})"

    def __str__(self) -> str:
        return self.name


def _chain_merge(x: Atom, y: Atom) -> Atom | None:
    """I(A;C|D) + I(A;B|C,D) = I(A;B,C|D), trying every orientation."""
    for a1, b1 in ((x.a, x.b), (x.b, x.a)):
        for a2, b2 in ((y.a, y.b), (y.b, y.a)):
            if set(a1) != set(a2):
                continue
            for (bb, cc), (b_hi, c_hi) in (((b1, x.c), (b2, y.c)), ((b2, y.c), (b1, x.c))):
                # low-level term I(A;bb|cc); high-level term conditions on bb too
                if set(c_hi) == set(cc) | set(bb) and not set(b_hi) & set(c_hi):
                    return Atom.make(a1, tuple(bb) + tuple(b_hi), cc)
    return None


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(str(x))


def _fmt_coef(c: Fraction, first: bool) -> str:
    sign = "-" if c < 0 else ("" if first else "+")
    mag = abs(c)
    body = "" if mag == 1 else f"{mag} "
    if first:
        return f"{sign}{body}"
    return f" {sign} {body}"


@dataclass(frozen=True)
class Inequality:
    """sum coeffs[v] * v  (< if strict else <=)  sum atoms[a] * a + const."""

    coeffs: tuple[tuple[str, Fraction], ...]
    atoms: tuple[tuple[Atom, Fraction], ...]
    const: Fraction = Fraction(0)
    strict: bool = False

    @staticmethod
    def make(coeffs: Mapping[str, object] | None = None, atoms: Mapping[Atom | str, object] | None = None,
             const=0, sense: str = "<=") -> "Inequality":
        """Build from either sense; '>=' and '>' are negated into '<=' / '<'."""
        if sense not in ("<=", "<", ">=", ">"):
            raise ValidationError(f"unknown sense {sense!r}")
        flip = -1 if sense in (">=", ">") else 1
        cs: dict[str, Fraction] = {}
        for v, c in (coeffs or {}).items():
            cs[v] = cs.get(v, Fraction(0)) + flip * _frac(c)
        at: dict[Atom, Fraction] = {}
        for a, c in (atoms or {}).items():
            a = Atom.parse(a) if isinstance(a, str) else a
            at[a] = at.get(a, Fraction(0)) + flip * _frac(c)
        if not any(c != 0 for c in cs.values()) and not any(c != 0 for c in at.values()):
            raise ValidationError("inequality needs at least one nonzero coefficient or atom")
        return Inequality._raw(cs, at, flip * _frac(const), sense in ("<", ">"))

    @staticmethod
    def _raw(cs: Mapping[str, Fraction], at: Mapping[Atom, Fraction], const: Fraction, strict: bool) -> "Inequality":
        at = _merge_atoms(at)
        coeffs = tuple(sorted(((v, c) for v, c in cs.items() if c != 0), key=lambda t: t[0]))
        atoms = tuple(sorted(((a, c) for a, c in at.items() if c != 0), key=lambda t: t[0].name))
        return Inequality(coeffs, atoms, const, strict)

    @property
    def coeff_map(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    @property
    def atom_map(self) -> dict[Atom, Fraction]:
        return dict(self.atoms)

    def coeff(self, var: str) -> Fraction:
        return self.coeff_map.get(var, Fraction(0))

    def scaled(self, k: Fraction) -> "Inequality":
        if k <= 0:
            raise ValueError("scale must be positive")
        return Inequality(tuple((v, c * k) for v, c in self.coeffs), tuple((a, c * k) for a, c in self.atoms),
                          self.const * k, self.strict)

    def canonical(self) -> "Inequality":
        """Scale so the leading variable (or atom) coefficient has magnitude 1."""
        if self.coeffs:
            lead = abs(self.coeffs[0][1])
        elif self.atoms:
            lead = abs(self.atoms[0][1])
        else:
            lead = abs(self.const) or Fraction(1)
        return self.scaled(1 / lead)

    def is_tautology(self) -> bool:
        """No variables, no atoms, and a satisfied constant comparison."""
        if self.coeffs or self.atoms:
            return False
        return self.const > 0 if self.strict else self.const >= 0

    def key(self):
        """Sort/identity key ignoring strictness."""
        return (len(self.coeffs), tuple((v, c) for v, c in self.coeffs),
                tuple((a.name, c) for a, c in self.atoms), self.const)

    def render(self, var_order: Iterable[str] | None = None) -> str:
        order = list(var_order or [])
        rank = {v: i for i, v in enumerate(order)}
        coeffs = sorted(self.coeffs, key=lambda t: (rank.get(t[0], len(rank)), t[0]))
        atoms = list(self.atoms)
        const = self.const
        op = "<" if self.strict else "<="
        if coeffs and all(c < 0 for _, c in coeffs):
            coeffs = [(v, -c) for v, c in coeffs]
            atoms = [(a, -c) for a, c in atoms]
            const = -const
            op = ">" if self.strict else ">="
        lhs = "".join(_fmt_coef(c, i == 0) + v for i, (v, c) in enumerate(coeffs)) or "0"
        atoms.sort(key=lambda t: t[1] < 0)
        parts = [_fmt_coef(c, i == 0) + a.name for i, (a, c) in enumerate(atoms)]
        if const != 0 and parts:
            parts.append(f" {'-' if const < 0 else '+'} {abs(const)}")
        elif not parts:
            parts.append(str(const))
        return f"{lhs} {op} {''.join(parts)}"

    def to_json(self) -> dict:
        return {
            "coeffs": {v: str(c) for v, c in self.coeffs},
            "atoms": {a.name: str(c) for a, c in self.atoms},
            "constant": str(self.const),
            "sense": "<" if self.strict else "<=",
        }

    @staticmethod
    def from_json(obj: Mapping) -> "Inequality":
        if not isinstance(obj, Mapping):
            raise ValidationError("each inequality must be a JSON object")
        return Inequality.make(obj.get("coeffs", {}), obj.get("atoms", {}), obj.get("constant", 0),
                               obj.get("sense", "<="))

    def evaluate(self, var_values: Mapping[str, Fraction], atom_values: Mapping[str, Fraction]) -> bool:
        lhs = sum((c * var_values[v] for v, c in self.coeffs), Fraction(0))
        rhs = sum((c * atom_values[a.name] for a, c in self.atoms), self.const)
        return lhs < rhs if self.strict else lhs <= rhs


def _merge_atoms(at: Mapping[Atom, Fraction]) -> dict[Atom, Fraction]:
    """Repeatedly merge same-sign atom pairs that form a chain rule."""
    at = {a: c for a, c in at.items() if c != 0}
    changed = True
    while changed:
        changed = False
        items = sorted(at.items(), key=lambda t: t[0].name)
        for (x, cx), (y, cy) in product(items, items):
            if x == y or (cx > 0) != (cy > 0):
                continue
            merged = _chain_merge(x, y)
            if merged is None:
                continue
            m = min(abs(cx), abs(cy)) * (1 if cx > 0 else -1)
            at[x] -= m
            at[y] -= m
            at[merged] = at.get(merged, Fraction(0)) + m
            at = {a: c for a, c in at.items() if c != 0}
            changed = True
            break
    return at


@dataclass(frozen=True)
class Assumptions:
    """Facts used by ``simplify``.

    ``nonneg`` lists rate variables known to be >= 0; ``identities`` maps an
    atom name to the linear combination of atoms it equals (applied as a
    left-to-right rewrite).
    """

    nonneg: frozenset = frozenset()
    identities: tuple[tuple[str, tuple[tuple[str, Fraction], ...]], ...] = ()

    @staticmethod
    def make(nonneg: Iterable[str] = (), identities: Mapping[str, Mapping[str, object] | str] | None = None):
        ids = []
        for lhs, rhs in (identities or {}).items():
            lhs_name = Atom.parse(lhs).name
            if isinstance(rhs, str):
                rhs = {rhs: 1}
            combo = tuple(sorted((Atom.parse(a).name, _frac(c)) for a, c in rhs.items()))
            ids.append((lhs_name, combo))
        ids.sort()
        names = [lhs for lhs, _ in ids]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValidationError(f"contradictory assumptions: several identities for {dup}")
        a = Assumptions(frozenset(nonneg), tuple(ids))
        a._check_acyclic()
        return a

    def _check_acyclic(self) -> None:
        graph = {lhs: {name for name, _ in rhs} for lhs, rhs in self.identities}
        state: dict[str, int] = {}

        def visit(n: str) -> None:
            if state.get(n) == 1:
                raise ValidationError(f"contradictory assumptions: identity rewrites cycle through {n}")
            if state.get(n) == 2:
                return
            state[n] = 1
            for m in graph.get(n, ()):
                visit(m)
            state[n] = 2

        for n in graph:
            visit(n)

    def to_json(self) -> dict:
        return {
            "nonneg": sorted(self.nonneg),
            "identities": {lhs: {a: str(c) for a, c in rhs} for lhs, rhs in self.identities},
        }


@dataclass(frozen=True)
class SymbolicSystem:
    variables: tuple[str, ...]
    inequalities: tuple[Inequality, ...]
    assumptions: Assumptions = field(default_factory=Assumptions)

    def __post_init__(self):
        declared = set(self.variables)
        for ineq in self.inequalities:
            unknown = {v for v, _ in ineq.coeffs} - declared
            if unknown:
                raise ValidationError(f"inequality uses undeclared variables {sorted(unknown)}")

    @staticmethod
    def build(variables: Iterable[str], inequalities: Iterable[Inequality],
              assumptions: Assumptions | None = None) -> "SymbolicSystem":
        return SymbolicSystem(tuple(variables), _canonical_set(inequalities), assumptions or Assumptions())

    def render(self) -> list[str]:
        return [ineq.render(self.variables) for ineq in self.inequalities]

    def to_json(self) -> dict:
        return {
            "variables": list(self.variables),
            "inequalities": [dict(ineq.to_json(), text=ineq.render(self.variables)) for ineq in self.inequalities],
            "assumptions": self.assumptions.to_json(),
        }

    @staticmethod
    def from_json(obj: Mapping | list) -> "SymbolicSystem":
        if isinstance(obj, list):
            obj = {"inequalities": obj}
        ineqs = [Inequality.from_json(o) for o in obj.get("inequalities", [])]
        variables = obj.get("variables")
        if variables is None:
            seen: list[str] = []
            for o in obj.get("inequalities", []):
                for v in o.get("coeffs", {}):
                    if v not in seen:
                        seen.append(v)
            variables = seen
        a = obj.get("assumptions") or {}
        return SymbolicSystem.build(variables, ineqs, Assumptions.make(a.get("nonneg", ()), a.get("identities")))


def _canonical_set(ineqs: Iterable[Inequality]) -> tuple[Inequality, ...]:
    """Canonicalize, drop tautologies, merge duplicates (strict wins), sort."""
    best: dict = {}
    for ineq in ineqs:
        ineq = Inequality._raw(ineq.coeff_map, ineq.atom_map, ineq.const, ineq.strict).canonical()
        if ineq.is_tautology():
            continue
        k = ineq.key()
        if k in best:
            if ineq.strict and not best[k].strict:
                best[k] = ineq
        else:
            best[k] = ineq
    return tuple(best[k] for k in sorted(best, key=_sort_key))


def _sort_key(k):
    n_vars, coeffs, atoms, const = k
    return (n_vars, tuple(v for v, _ in coeffs), tuple(float(c) for _, c in coeffs),
            tuple(a for a, _ in atoms), tuple(float(c) for _, c in atoms), float(const))


def eliminate(sys: SymbolicSystem, var: str) -> SymbolicSystem:
    """Project ``var`` out by pairing every upper bound with every lower bound."""
    if var not in sys.variables:
        raise ValidationError(f"{var!r} is not a variable of the system")
    upper, lower, rest = [], [], []
    for ineq in sys.inequalities:
        c = ineq.coeff(var)
        (upper if c > 0 else lower if c < 0 else rest).append(ineq)
    combined = list(rest)
    for up, lo in product(upper, lower):
        a = up.scaled(1 / up.coeff(var))
        b = lo.scaled(1 / -lo.coeff(var))
        cs = a.coeff_map
        for v, c in b.coeffs:
            cs[v] = cs.get(v, Fraction(0)) + c
        cs.pop(var, None)
        at = a.atom_map
        for x, c in b.atoms:
            at[x] = at.get(x, Fraction(0)) + c
        combined.append(Inequality._raw(cs, at, a.const + b.const, a.strict or b.strict))
    variables = tuple(v for v in sys.variables if v != var)
    return SymbolicSystem.build(variables, combined, sys.assumptions)


def _rewrite(ineq: Inequality, assumptions: Assumptions) -> Inequality:
    table = {lhs: rhs for lhs, rhs in assumptions.identities}
    at = {a.name: c for a, c in ineq.atoms}
    objs = {a.name: a for a, _ in ineq.atoms}
    changed = True
    while changed:
        changed = False
        for name in sorted(at):
            if name in table and at[name] != 0:
                c = at.pop(name)
                for other, k in table[name]:
                    at[other] = at.get(other, Fraction(0)) + c * k
                    objs.setdefault(other, Atom.parse(other))
                changed = True
                break
    return Inequality._raw(ineq.coeff_map, {objs[n]: c for n, c in at.items()}, ineq.const, ineq.strict)


def _dominates(j: Inequality, i: Inequality, nonneg: frozenset) -> bool:
    """True when j (with the assumptions) syntactically implies i."""
    cj, ci = j.coeff_map, i.coeff_map
    for v in set(cj) | set(ci):
        d = cj.get(v, Fraction(0)) - ci.get(v, Fraction(0))
        if d < 0 or (d > 0 and v not in nonneg):
            return False
    diff = i.atom_map
    for a, c in j.atoms:
        diff[a] = diff.get(a, Fraction(0)) - c
    for a, c in diff.items():
        if c < 0 or (c > 0 and not a.nonnegative):
            return False
    return i.const - j.const >= 0


def simplify(sys: SymbolicSystem, assumptions: Assumptions | None = None) -> SymbolicSystem:
    """Apply identity rewrites, then drop inequalities implied by another one
    (or by the variable nonnegativity facts alone)."""
    assumptions = assumptions if assumptions is not None else sys.assumptions
    rewritten = _canonical_set(_rewrite(i, assumptions) for i in sys.inequalities)
    trivial = Inequality((), (), Fraction(0), False)
    kept: list[Inequality] = []
    for idx, ineq in enumerate(rewritten):
        others = [trivial] + [o for k, o in enumerate(rewritten) if k != idx]
        dominated = False
        for o in others:
            if _dominates(o, ineq, assumptions.nonneg):
                # mutual domination only happens between equal keys, already merged
                dominated = True
                break
        if not dominated:
            kept.append(ineq)
    return SymbolicSystem(sys.variables, _canonical_set(kept), assumptions)


def eliminate_all(sys: SymbolicSystem, variables: Iterable[str]) -> SymbolicSystem:
    for v in variables:
        sys = eliminate(sys, v)
    return sys


def same_up_to_strictness(x: SymbolicSystem, y: SymbolicSystem) -> bool:
    return [i.key() for i in x.inequalities] == [i.key() for i in y.inequalities]


# ---------------------------------------------------------------- built-in systems

def _ineq(coeffs, atoms, sense="<="):
    return Inequality.make(coeffs, atoms, 0, sense)


def appendix_e_system() -> SymbolicSystem:
    """Decodability conditions of the block-Markov Wyner-Ziv scheme, before projection."""
    ineqs = [
        _ineq({"T_hat": 1}, {"I(V;S|X2)": 1}, ">"),
        _ineq({"T": 1}, {"I(X2;Y)": 1}, "<"),
        _ineq({"T_hat": 1, "T": -1}, {"I(V;Y|X2)": 1}, "<"),
        _ineq({"Rc": 1, "R1": 1, "T_hat": 1}, {"I(V,X1,X2;Y)": 1}),
        _ineq({"R1": 1}, {"I(X1;Y|V,X2)": 1}),
    ]
    return SymbolicSystem.build(("Rc", "R1", "T", "T_hat"), ineqs, Assumptions.make(("Rc", "R1")))


def appendix_j_system() -> SymbolicSystem:
    """Decodability conditions of the asymmetric scheme with the common rate split Rc = Rc1 + Rc2."""
    ineqs = [
        _ineq({"R_hat": 1}, {"I(V;S|U,X2)": 1}, ">"),
        _ineq({"R1": 1}, {"I(X1;Y|U,V,X2)": 1}),
        _ineq({"R1": 1, "R_hat": 1}, {"I(V,X1,X2;Y|U)": 1}),
        _ineq({"Rc2": 1, "R1": 1, "R_hat": 1}, {"I(V,X1,X2;Y|U)": 1}),
        _ineq({"Rc": 1, "R1": 1, "R_hat": 1}, {"I(U,V,X1,X2;Y)": 1}),
        _ineq({"Rc2": 1}, {}, ">="),
        _ineq({"Rc2": 1, "Rc": -1}, {}, "<="),
    ]
    return SymbolicSystem.build(("Rc", "R1", "Rc2", "R_hat"), ineqs, Assumptions.make(("Rc", "R1", "Rc2")))


def _golden(variables, rows) -> SymbolicSystem:
    return SymbolicSystem.build(variables, [_ineq(c, a, s) for c, a, s in rows])


def run_builtin(name: str) -> dict:
    """Project a named system and compare each stage to its expected form."""
    if name == "appendixE":
        sys0 = appendix_e_system()
        order = ("T", "T_hat")
        stages = {"T": eliminate(sys0, "T")}
        stages["T_hat"] = eliminate(stages["T"], "T_hat")
        projected = simplify(stages["T_hat"], Assumptions.make(("Rc", "R1")))
        rewritten = simplify(projected, Assumptions.make(("Rc", "R1"), {"I(V;S|X2)": "I(V,X2;S)"}))
        golden = {
            "T": _golden(("Rc", "R1", "T_hat"), [
                ({"T_hat": 1}, {"I(V;S|X2)": 1}, ">"),
                ({"T_hat": 1}, {"I(V,X2;Y)": 1}, "<"),
                ({"Rc": 1, "R1": 1, "T_hat": 1}, {"I(V,X1,X2;Y)": 1}, "<"),
                ({"R1": 1}, {"I(X1;Y|V,X2)": 1}, "<"),
            ]),
            "projected": _golden(("Rc", "R1"), [
                ({}, {"I(V,X2;Y)": 1, "I(V;S|X2)": -1}, "<="),
                ({"R1": 1}, {"I(X1;Y|V,X2)": 1}, "<="),
                ({"Rc": 1, "R1": 1}, {"I(V,X1,X2;Y)": 1, "I(V;S|X2)": -1}, "<"),
            ]),
            "rewritten": _golden(("Rc", "R1"), [
                ({}, {"I(V,X2;Y)": 1, "I(V,X2;S)": -1}, "<="),
                ({"R1": 1}, {"I(X1;Y|V,X2)": 1}, "<="),
                ({"Rc": 1, "R1": 1}, {"I(V,X1,X2;Y)": 1, "I(V,X2;S)": -1}, "<="),
            ]),
        }
        results = {"T": stages["T"], "projected": projected, "rewritten": rewritten}
    elif name == "appendixJ":
        sys0 = appendix_j_system()
        order = ("R_hat", "Rc2")
        stage1 = eliminate(sys0, "R_hat")
        stage2 = eliminate(stage1, "Rc2")
        projected = simplify(stage2, Assumptions.make(("Rc", "R1")))
        golden = {
            "projected": _golden(("Rc", "R1"), [
                ({"R1": 1}, {"I(X1;Y|U,V,X2)": 1}, "<="),
                ({"R1": 1}, {"I(V,X1,X2;Y|U)": 1, "I(V;S|U,X2)": -1}, "<="),
                ({"Rc": 1, "R1": 1}, {"I(U,V,X1,X2;Y)": 1, "I(V;S|U,X2)": -1}, "<="),
            ]),
        }
        results = {"R_hat": stage1, "projected": projected}
    else:
        raise ValidationError(f"unknown built-in system {name!r}; choose from appendixE, appendixJ")
    stages_out = {}
    all_match = True
    for label, got in results.items():
        entry = {"system": got.to_json(), "text": got.render()}
        if label in golden:
            ok = same_up_to_strictness(got, golden[label])
            entry["expected"] = golden[label].render()
            entry["matches_expected"] = ok
            all_match &= ok
        stages_out[label] = entry
    return {
        "system": name,
        "initial": sys0.to_json(),
        "eliminated": list(order),
        "stages": stages_out,
        "golden_match": all_match,
    }


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
