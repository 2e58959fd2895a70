import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macregions.acceptance import example2_witness
from macregions.bounds import (
    eval_asym_inner,
    eval_causal,
    eval_helper_capacity,
    eval_indep_states,
    eval_inner_sc,
    eval_nostate,
    eval_outer_sc,
    eval_prop1,
    example6_g,
)
from macregions.channels import (
    ChannelSpec,
    FactoredLaw,
    assemble_joint,
    builtin_channel,
    lift_inner_to_outer,
    no_state_channel,
    random_channel,
)
from macregions.errors import ValidationError
from macregions.prob import binary_entropy, cond_mutual_info

HALF = np.full(2, 0.5)


def joint_input(p12):
    return FactoredLaw("joint-input", {"X1,X2": np.asarray(p12, dtype=float)})


def product(p1, p2):
    return FactoredLaw("product-input", {"X1": np.asarray(p1, float), "X2": np.asarray(p2, float)})


def inner_v_equals_s(ch):
    v = np.zeros((2, 2, 2))
    for s in range(2):
        v[s, :, s] = 1.0
    return FactoredLaw("inner-sc", {"X2": HALF, "X1": np.full((2, 2), 0.5), "V": v})


def test_inner_constant_v_no_state():
    ch = builtin_channel("adder-mac")
    law = FactoredLaw("inner-sc", {"X2": HALF, "X1": np.full((2, 2), 0.5), "V": np.ones((1, 2, 1))})
    ev = eval_inner_sc(ch, law)
    assert ev.sum_cap == pytest.approx(1.5)
    assert ev.r1_cap == pytest.approx(1.0)


def test_inner_additive_helper_v_equals_state():
    p = 0.1
    ch = builtin_channel("additive-binary-helper", {"p": p})
    law = inner_v_equals_s(ch)
    ev = eval_inner_sc(ch, law)
    assert ev.r1_cap == pytest.approx(1 - binary_entropy(p), abs=1e-12)  # I(X1;Y1|S)
    joint = assemble_joint(ch, law)
    # slack = I(S;Y|X2) + H(X2) - H(S), and I(S;Y|X2) = 0 under uniform X1
    assert cond_mutual_info(joint, "S", "Y", "X2") == pytest.approx(0.0, abs=1e-12)
    assert ev.constraint_slack == pytest.approx(0.0, abs=1e-12)
    assert ev.feasible
    assert eval_inner_sc(ch, law, relax_constraint=True).constraint_slack is None


def test_outer_selector_witness():
    ch = builtin_channel("mod2-selector")
    law = example2_witness()
    ev = eval_outer_sc(ch, law)
    assert ev.r1_cap == pytest.approx(1.0, abs=1e-6)
    assert ev.sum_cap == pytest.approx(1.5, abs=1e-6)
    joint = assemble_joint(ch, law)
    slack = cond_mutual_info(joint, ("V", "X2"), "Y") - cond_mutual_info(joint, ("V", "X2"), "S")
    assert ev.constraint_slack == pytest.approx(slack, abs=1e-12)


def test_prop1_switch():
    ch = builtin_channel("switch")
    ev = eval_prop1(ch, joint_input(np.full((2, 2), 0.25)))
    assert (ev.r1_cap, ev.sum_cap) == pytest.approx((0.5, 0.5))
    ev = eval_prop1(ch, joint_input(np.eye(2) / 2))
    assert (ev.r1_cap, ev.sum_cap) == pytest.approx((0.0, 1.0))
    assert ev.constraint_slack is None


def test_prop1_no_state(rng):
    ch = no_state_channel(rng.dirichlet(np.ones(3), size=(2, 2)))
    law = joint_input(rng.dirichlet(np.ones(4)).reshape(2, 2))
    assert eval_prop1(ch, law).r1_cap == pytest.approx(eval_nostate(ch, law).r1_cap, abs=1e-12)


def test_wrong_kind_rejected():
    ch = builtin_channel("switch")
    with pytest.raises(ValidationError):
        eval_prop1(ch, product(HALF, HALF))
    with pytest.raises(ValidationError):
        eval_inner_sc(ch, joint_input(np.full((2, 2), 0.25)))


def test_asym_inner_degenerate_auxiliaries(rng):
    ch = random_channel(rng, {"S": 2, "X1": 2, "X2": 2, "Y": 3})
    p1, p2 = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))
    law = FactoredLaw("asym-inner", {"U": np.ones(1), "X2": p2[None], "X1": p1[None], "V": np.ones((2, 1, 2, 1))})
    ev = eval_asym_inner(ch, law)
    ns = eval_nostate(no_state_channel(ch.averaged_kernel()), joint_input(np.outer(p1, p2)))
    assert ev.r1_caps[0] == pytest.approx(ns.r1_cap, abs=1e-12)
    assert ev.sum_cap == pytest.approx(ns.sum_cap, abs=1e-12)


def test_asym_inner_two_way(rng):
    ch = random_channel(rng, {"S": 2, "X1": 2, "X2": 2, "Y": 2})
    law = FactoredLaw("asym-inner", {
        "U": rng.dirichlet(np.ones(2)),
        "X2": rng.dirichlet(np.ones(2), size=2),
        "X1": rng.dirichlet(np.ones(2), size=2),
        "V": rng.dirichlet(np.ones(3), size=(2, 2, 2)),
    })
    ev = eval_asym_inner(ch, law)
    j = assemble_joint(ch, law)
    second = cond_mutual_info(j, ("V", "X1", "X2"), "Y", "U") - cond_mutual_info(j, "V", "S", ("U", "X2"))
    assert ev.r1_caps[1] == pytest.approx(second, abs=1e-12)
    assert ev.r1_cap == pytest.approx(min(ev.r1_caps))


def test_asym_inner_deterministic_state_reduction():
    ch = builtin_channel("additive-binary-helper", {"p": 0.0})
    v = np.zeros((2, 1, 2, 2))
    for s in range(2):
        v[s, :, :, s] = 1.0
    law = FactoredLaw("asym-inner", {"U": np.ones(1), "X2": HALF[None], "X1": HALF[None], "V": v})
    ev = eval_asym_inner(ch, law)
    ref = eval_prop1(ch, joint_input(np.full((2, 2), 0.25)))
    assert ev.sum_cap == pytest.approx(ref.sum_cap, abs=1e-12)


def test_helper_capacity_fading(rng):
    for p in (0.0, 0.1, 0.3):
        ch = builtin_channel("fading-binary", {"p": p})
        for q1, q2 in rng.random((4, 2)):
            law = product([q1, 1 - q1], [q2, 1 - q2])  # symbol 0 is +1; only the split matters
            expected = min(binary_entropy(q1), example6_g(p, q2) - binary_entropy(p))
            assert eval_helper_capacity(ch, law) == pytest.approx(expected, abs=1e-9)


def test_helper_capacity_oracles():
    ch = builtin_channel("fading-binary", {"p": 0.0})
    assert example6_g(0.0, 0.5) == pytest.approx(1.0)
    assert eval_helper_capacity(ch, product(HALF, HALF)) == pytest.approx(1.0)
    assert eval_helper_capacity(ch, product([1.0, 0.0], HALF)) == pytest.approx(0.0, abs=1e-12)


def test_helper_warns_when_not_deterministic():
    ch = builtin_channel("switch")
    with pytest.warns(UserWarning):
        eval_helper_capacity(ch, product(HALF, HALF))


def test_causal_trivial_and_strategy():
    ch = builtin_channel("adder-mac")
    law = FactoredLaw("causal", {
        "V": np.ones(1), "U": HALF[None],
        "X2": np.tile([1.0, 0.0], (1, 1, 1)),
        "X1": np.eye(2)[None, None],
    })
    ev = eval_causal(ch, law)
    joint = assemble_joint(ch, law)
    assert ev.r1_cap == pytest.approx(cond_mutual_info(joint, "X1", "Y"))
    assert ev.r1_cap == pytest.approx(1.0)


def test_causal_matches_nostate_on_inputs():
    ch = builtin_channel("adder-mac")
    law = FactoredLaw("causal", {
        "V": HALF, "U": np.full((2, 2), 0.5),
        "X2": np.eye(2)[:, None, :],
        "X1": np.broadcast_to(np.eye(2), (1, 2, 2, 2)).copy(),
    })
    ev = eval_causal(ch, law)
    ns = eval_nostate(ch, joint_input(np.full((2, 2), 0.25)))
    assert (ev.r1_cap, ev.sum_cap) == pytest.approx((ns.r1_cap, ns.sum_cap))
    assert (ns.r1_cap, ns.sum_cap) == pytest.approx((1.0, 1.5))


def test_causal_shannon_strategy_noiseless_helper():
    # |V| = |X2|^|S| = 4, |U| = |X1|^|S| = 4; strategy u sends u(s) xor s, so the
    # constant maps u in {00, 11} deliver one clean bit through Y1 = X1 xor S
    ch = builtin_channel("additive-binary-helper", {"p": 0.0})
    x2 = np.zeros((4, 2, 2))
    x1 = np.zeros((2, 4, 4, 2))
    for v in range(4):
        for s in range(2):
            x2[v, s, (v >> s) & 1] = 1.0
    for u in range(4):
        for s in range(2):
            x1[s, :, u, ((u >> s) & 1) ^ s] = 1.0
    law = FactoredLaw("causal", {"V": np.eye(4)[0], "U": np.tile([0.5, 0.0, 0.0, 0.5], (4, 1)), "X2": x2, "X1": x1})
    ev = eval_causal(ch, law)
    assert ev.sum_cap == pytest.approx(1.0)


def _two_state_channel(q1, q2):
    """Y = (X1 xor S1, X2 xor S2) with independent state components."""
    q = np.outer(q1, q2).ravel()
    w = np.zeros((4, 2, 2, 4))
    for s in range(4):
        s1, s2 = divmod(s, 2)
        for a in range(2):
            for b in range(2):
                w[s, a, b, (a ^ s1) * 2 + (b ^ s2)] = 1.0
    return ChannelSpec(q, w, state_factors=(2, 2))


def test_indep_states_symmetry():
    ch = _two_state_channel([0.8, 0.2], [0.8, 0.2])
    caps = eval_indep_states(ch, product(HALF, HALF))
    assert caps.r1_cap == pytest.approx(caps.r2_cap, abs=1e-12)


def test_indep_states_degenerate_second_component(rng):
    w = rng.dirichlet(np.ones(3), size=(2, 2, 2))
    ch = ChannelSpec(np.array([0.3, 0.7]), w, state_factors=(2, 1))
    law = product([0.4, 0.6], [0.5, 0.5])
    caps = eval_indep_states(ch, law)
    ns = eval_nostate(no_state_channel(ch.averaged_kernel()), joint_input(np.outer([0.4, 0.6], HALF)))
    assert caps.r1_cap == pytest.approx(ns.r1_cap, abs=1e-12)
    assert caps.sum_cap == pytest.approx(ns.sum_cap, abs=1e-12)


def test_indep_states_needs_factors():
    with pytest.raises(ValidationError):
        eval_indep_states(builtin_channel("switch"), product(HALF, HALF))


def _random_outer(rng, ch, nv=3, nu=2, with_u=True):
    sz = ch.sizes
    f = {
        "X2": rng.dirichlet(np.ones(sz["X2"])),
        "X1": rng.dirichlet(np.ones(sz["X1"]), size=sz["X2"]),
        "V": rng.dirichlet(np.ones(nv), size=(sz["S"], sz["X1"], sz["X2"])),
    }
    if with_u:
        f["U"] = rng.dirichlet(np.ones(nu), size=(sz["S"], sz["X1"], sz["X2"], nv))
    return f


@given(st.integers(0, 10**6))
def test_dominance_property(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, {k: int(rng.integers(2, 4)) for k in ("S", "X1", "X2", "Y")})
    f = _random_outer(rng, ch)
    with_u = eval_outer_sc(ch, FactoredLaw("outer-sc", f))
    without = eval_outer_sc(ch, FactoredLaw("outer-sc", {k: v for k, v in f.items() if k != "U"}))
    assert with_u.r1_cap <= without.r1_cap + 1e-9
    assert with_u.sum_cap <= without.sum_cap + 1e-9


@given(st.integers(0, 10**6))
def test_outer_sum_below_input_mi_property(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, {k: int(rng.integers(2, 4)) for k in ("S", "X1", "X2", "Y")})
    f = _random_outer(rng, ch, with_u=False)
    ev = eval_outer_sc(ch, FactoredLaw("outer-sc", f))
    p12 = (f["X2"][:, None] * f["X1"]).T
    assert ev.sum_cap <= eval_prop1(ch, joint_input(p12)).sum_cap + 1e-9


@given(st.integers(0, 10**6))
def test_embedding_property(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, {k: int(rng.integers(2, 4)) for k in ("S", "X1", "X2", "Y")})
    sz = ch.sizes
    law = FactoredLaw("inner-sc", {
        "X2": rng.dirichlet(np.ones(sz["X2"])),
        "X1": rng.dirichlet(np.ones(sz["X1"]), size=sz["X2"]),
        "V": rng.dirichlet(np.ones(3), size=(sz["S"], sz["X2"])),
    })
    a, b = eval_inner_sc(ch, law), eval_outer_sc(ch, lift_inner_to_outer(law))
    assert a.r1_cap == pytest.approx(b.r1_cap, abs=1e-12)
    assert a.sum_cap == pytest.approx(b.sum_cap, abs=1e-12)
    assert a.constraint_slack == pytest.approx(b.constraint_slack, abs=1e-12)


@given(st.integers(0, 10**6))
def test_relabel_invariance_property(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, {"S": 3, "X1": 2, "X2": 3, "Y": 2})
    law = joint_input(rng.dirichlet(np.ones(6)).reshape(2, 3))
    ps, p1, p2, py = (rng.permutation(n) for n in (3, 2, 3, 2))
    w = ch.w[np.ix_(ps, p1, p2, py)]
    ch2 = ChannelSpec(ch.q_s[ps], w)
    law2 = joint_input(law.factors["X1,X2"][np.ix_(p1, p2)])
    a, b = eval_prop1(ch, law), eval_prop1(ch2, law2)
    assert a.r1_cap == pytest.approx(b.r1_cap, abs=1e-12)
    assert a.sum_cap == pytest.approx(b.sum_cap, abs=1e-12)
