import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macregions.channels import (
    ChannelSpec,
    FactoredLaw,
    assemble_joint,
    builtin_channel,
    is_state_deterministic,
    law_from_json,
    law_to_json,
    lift_inner_to_outer,
    load_channel,
    no_state_channel,
    random_channel,
    save_channel,
)
from macregions.errors import ValidationError
from macregions.prob import JointPMF, cond_mutual_info, entropy, inverse_binary_entropy


def uniform_inner(ch, nv=1, rng=None):
    s, x2 = ch.sizes["S"], ch.sizes["X2"]
    v = np.full((s, x2, nv), 1.0 / nv) if rng is None else rng.dirichlet(np.ones(nv), size=(s, x2))
    return FactoredLaw("inner-sc", {
        "X2": np.full(x2, 1.0 / x2),
        "X1": np.full((x2, ch.sizes["X1"]), 1.0 / ch.sizes["X1"]),
        "V": v,
    })


def test_channel_validation():
    w = np.full((2, 2, 2, 2), 0.5)
    with pytest.raises(ValidationError):
        ChannelSpec(np.array([0.7, 0.7]), w)
    bad = w.copy()
    bad[0, 0, 0] = [0.9, 0.9]
    with pytest.raises(ValidationError):
        ChannelSpec(np.array([0.5, 0.5]), bad)
    with pytest.raises(ValidationError):
        ChannelSpec(np.array([1.0]), w)


def test_channel_json_roundtrip(tmp_path):
    ch = builtin_channel("mod2-selector")
    path = tmp_path / "ch.json"
    save_channel(ch, path)
    back = load_channel(path)
    assert np.array_equal(back.w, ch.w) and np.array_equal(back.q_s, ch.q_s)
    assert back.state_factors == (2, 2)
    obj = json.loads(path.read_text())
    obj["sizes"]["Y"] = 3
    path.write_text(json.dumps(obj))
    with pytest.raises(ValidationError):
        load_channel(path)


def test_builtin_switch():
    ch = builtin_channel("switch")
    assert ch.sizes == {"S": 2, "X1": 2, "X2": 2, "Y": 2}
    assert np.allclose(ch.q_s, 0.5)
    assert ch.w[0, 1, 0, 1] == 1.0 and ch.w[1, 1, 0, 0] == 1.0
    assert not is_state_deterministic(ch)


def test_builtin_mod2_selector_state_law():
    ch = builtin_channel("mod2-selector")
    p = inverse_binary_entropy(0.5)
    q = ch.q_s.reshape(2, 2)
    assert q.sum(axis=1)[1] == pytest.approx(p, abs=1e-9)
    assert q.sum(axis=0)[1] == pytest.approx(p, abs=1e-9)
    assert p == pytest.approx(0.110028, abs=1e-6)
    assert not is_state_deterministic(ch)


def test_builtin_helper_noiseless():
    ch = builtin_channel("additive-binary-helper", {"p": 0.0})
    for s in range(2):
        for x1 in range(2):
            for x2 in range(2):
                assert ch.w[s, x1, x2, (x1 ^ s) * 2 + x2] == 1.0
    assert is_state_deterministic(ch)
    assert not is_state_deterministic(builtin_channel("additive-binary-helper", {"p": 0.1}))


def test_builtin_errors():
    with pytest.raises(ValidationError):
        builtin_channel("nope")
    with pytest.raises(ValidationError):
        builtin_channel("fading-binary")
    with pytest.raises(ValidationError):
        builtin_channel("fading-binary", {"p": 2.0})


def test_assemble_constant_v_inputs_independent_of_state():
    ch = builtin_channel("additive-binary-helper", {"p": 0.1})
    p = assemble_joint(ch, uniform_inner(ch))
    assert p.values.sum() == pytest.approx(1.0)
    assert cond_mutual_info(p, "X1", "S") == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(p.marginal(["S"]).values, ch.q_s)


def test_assemble_outer_v_copies_state():
    ch = builtin_channel("switch")
    v = np.zeros((2, 2, 2, 2))
    for s in range(2):
        v[s, :, :, s] = 1.0
    law = FactoredLaw("outer-sc", {"X2": np.full(2, 0.5), "X1": np.full((2, 2), 0.5), "V": v})
    p = assemble_joint(ch, law)
    assert cond_mutual_info(p, "V", "S", ("X1", "X2")) == pytest.approx(entropy(p, "S"))


def test_factored_law_validation():
    with pytest.raises(ValidationError):
        FactoredLaw("inner-sc", {"X2": np.full(2, 0.5), "X1": np.full((2, 2), 0.5)})
    with pytest.raises(ValidationError):
        FactoredLaw("inner-sc", {"X2": np.full(2, 0.6), "X1": np.full((2, 2), 0.5), "V": np.ones((2, 2, 1))})
    with pytest.raises(ValidationError):
        FactoredLaw("bogus", {})
    big = np.full((2, 2, 10), 1 / 10)  # |S||X1||X2| + 2 = 10 is the largest default |V|
    FactoredLaw("inner-sc", {"X2": np.full(2, 0.5), "X1": np.full((2, 2), 0.5), "V": big})
    too_big = np.full((2, 2, 11), 1 / 11)
    with pytest.raises(ValidationError):
        FactoredLaw("inner-sc", {"X2": np.full(2, 0.5), "X1": np.full((2, 2), 0.5), "V": too_big})
    FactoredLaw("inner-sc", {"X2": np.full(2, 0.5), "X1": np.full((2, 2), 0.5), "V": too_big},
                allow_large_card=True)


def test_size_mismatch_rejected():
    ch = builtin_channel("adder-mac")
    law = uniform_inner(builtin_channel("switch"))
    with pytest.raises(ValidationError):
        assemble_joint(ch, law)


def test_law_json_roundtrip(rng):
    ch = random_channel(rng, {"S": 2, "X1": 3, "X2": 2, "Y": 2})
    law = uniform_inner(ch, nv=3, rng=rng)
    back = law_from_json(json.loads(json.dumps(law_to_json(law))))
    assert back.digest() == law.digest()


def test_no_state_channel_shape():
    ch = no_state_channel(np.full((2, 3, 4), 0.25))
    assert ch.sizes == {"S": 1, "X1": 2, "X2": 3, "Y": 4}
    assert is_state_deterministic(ch)


@given(st.integers(0, 10**6))
def test_inner_law_structure_property(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, {k: int(rng.integers(2, 4)) for k in ("S", "X1", "X2", "Y")})
    x2 = ch.sizes["X2"]
    law = FactoredLaw("inner-sc", {
        "X2": rng.dirichlet(np.ones(x2)),
        "X1": rng.dirichlet(np.ones(ch.sizes["X1"]), size=x2),
        "V": rng.dirichlet(np.ones(3), size=(ch.sizes["S"], x2)),
    })
    p = assemble_joint(ch, law)
    assert isinstance(p, JointPMF)
    assert cond_mutual_info(p, ("X1", "X2"), "S") == pytest.approx(0.0, abs=1e-9)
    direct = cond_mutual_info(p, "X1", ("V", "S"), "X2")
    chained = cond_mutual_info(p, "X1", "S", "X2") + cond_mutual_info(p, "X1", "V", ("S", "X2"))
    assert direct == pytest.approx(chained, abs=1e-9)
    # the lift into the outer-sc family gives the same joint
    lifted = assemble_joint(ch, lift_inner_to_outer(law))
    assert np.allclose(lifted.values, p.values, atol=1e-15)


@given(st.integers(0, 10**6))
def test_causal_law_independent_of_state(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, {"S": 2, "X1": 2, "X2": 2, "Y": 3})
    law = FactoredLaw("causal", {
        "V": rng.dirichlet(np.ones(2)),
        "U": rng.dirichlet(np.ones(3), size=2),
        "X2": rng.dirichlet(np.ones(2), size=(2, 2)),
        "X1": rng.dirichlet(np.ones(2), size=(2, 2, 3)),
    })
    p = assemble_joint(ch, law)
    assert cond_mutual_info(p, ("U", "V"), "S") == pytest.approx(0.0, abs=1e-9)
