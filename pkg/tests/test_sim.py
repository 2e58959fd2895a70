import numpy as np
import pytest

from macregions.channels import builtin_channel
from macregions.errors import ValidationError
from macregions.search import RatePoint
from macregions.sim import (EVENTS, SimConfig, example3_law, identity_strategy_law, run_block_markov,
                            run_shannon_strategy, scheme_sizes, type_distance, wilson_interval)
from macregions.bounds import FactoredLaw


@pytest.fixture(scope="module")
def helper():
    return builtin_channel("additive-binary-helper", {"p": 0.1})


def test_zero_rate_never_fails(helper):
    r = run_block_markov(helper, RatePoint(0, 0), SimConfig(n=6, trials=30, seed=0, law=example3_law()))
    assert r.errors == 0 and r.rate == 0.0


def test_seed_determinism(helper):
    cfg = SimConfig(n=6, trials=20, seed=5, law=example3_law())
    a = run_block_markov(helper, RatePoint(0, 0.3), cfg)
    b = run_block_markov(helper, RatePoint(0, 0.3), cfg)
    assert a == b
    c = run_block_markov(helper, RatePoint(0, 0.3), SimConfig(n=6, trials=20, seed=6, law=example3_law()))
    assert c.to_json()["sizes"] == a.to_json()["sizes"]


def test_event_accounting(helper):
    r = run_block_markov(helper, RatePoint(0, 0.5), SimConfig(n=6, trials=40, seed=1, law=example3_law()))
    assert set(r.events) == set(EVENTS)
    assert sum(r.events.values()) >= r.errors > 0
    assert r.ci_low <= r.rate <= r.ci_high


def test_covering_failures_fall_with_n(helper):
    # compression rate 0.1 bit above I(V;S|X2) = 1 - h2(0.02)
    law = example3_law()
    counts = [run_block_markov(helper, RatePoint(0, 0), SimConfig(n=n, trials=60, seed=2, law=law, T_hat=0.9586,
                                                                   T=0.99, epsilon=0.1)).events["covering"]
              for n in (6, 10, 14)]
    assert counts[0] > counts[1] > counts[2]


def test_default_sizes(helper):
    sz = scheme_sizes(helper, example3_law(), RatePoint(0, 0.5), SimConfig(n=10, law=example3_law()))
    assert sz["M_c"] == 1 and sz["M_1"] == 32
    assert sz["T"] == pytest.approx(0.95)
    assert sz["K"] == int(np.ceil(2 ** (10 * 0.95)))


def test_shannon_clean_mac_inside_pentagon():
    ch = builtin_channel("adder-mac")
    r = run_shannon_strategy(ch, RatePoint(0.3, 0.3), SimConfig(n=12, trials=200, seed=0,
                                                                 law=identity_strategy_law(ch)))
    assert r.rate < 0.05


def test_shannon_trivial_strategies_only_zero_rate():
    ch = builtin_channel("adder-mac")
    law = FactoredLaw("causal", {
        "V": np.array([1.0]),
        "U": np.array([[1.0]]),
        "X2": np.array([[[1.0, 0.0]]]),
        "X1": np.array([[[[1.0, 0.0]]]]),
    })
    zero = run_shannon_strategy(ch, RatePoint(0, 0), SimConfig(n=8, trials=50, seed=0, law=law))
    assert zero.rate == 0.0
    pos = run_shannon_strategy(ch, RatePoint(0, 0.5), SimConfig(n=8, trials=50, seed=0, law=law))
    assert pos.rate > 0.5


def test_type_distance_exact_match():
    ref = np.array([0.5, 0.0, 0.0, 0.5])  # flattened joint of two equal bits
    a = np.array([[0, 1, 0, 1]])
    assert type_distance((a, a), ref, (2, 2))[0] == pytest.approx(0.0)
    # mass off the reference support is never typical
    assert np.isinf(type_distance((a, 1 - a), ref, (2, 2))[0])


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == pytest.approx(0.0, abs=1e-12) and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi


def test_validation(helper):
    with pytest.raises(ValidationError):
        SimConfig(n=0)
    with pytest.raises(ValidationError):
        SimConfig(n=4, B=1)
    with pytest.raises(ValidationError):
        SimConfig(n=4, epsilon=0)
    with pytest.raises(ValidationError):
        SimConfig(n=4, decision="vote")
    with pytest.raises(ValidationError):
        run_block_markov(helper, RatePoint(0, 0), SimConfig(n=4, law=identity_strategy_law(helper)))
    with pytest.raises(ValidationError):
        run_shannon_strategy(helper, RatePoint(0, 0), SimConfig(n=4, law=example3_law()))
