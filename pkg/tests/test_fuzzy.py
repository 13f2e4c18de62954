import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfs_inspect.errors import ConfigurationError
from gfs_inspect.fuzzy import (N_DEFUZZ, FisParams, GaussianMF, RuleTable, VariableSpec,
                               fuzzify, infer_and_defuzzify, membership)


def random_spec(rng, lo, hi, sigma_lo=0.005, sigma_hi=0.5):
    w = hi - lo
    means = np.concatenate([[lo], np.sort(rng.uniform(lo, hi, 3)), [hi]])
    return VariableSpec(lo, hi, means, rng.uniform(sigma_lo * w, sigma_hi * w, 5))


def random_fis(rng, n_inputs=3):
    inputs = []
    for _ in range(n_inputs):
        lo = rng.uniform(-10, 5)
        inputs.append(random_spec(rng, lo, lo + rng.uniform(0.5, 20)))
    lo = rng.uniform(-2, 0)
    out = random_spec(rng, lo, lo + rng.uniform(0.5, 4))
    rules = RuleTable(rng.integers(0, 5, 5**n_inputs), (5,) * n_inputs)
    return FisParams(inputs, out, rules)


def fine_centroid(fis, x, n=100_000):
    """Mamdani product/max inference with a 1e5-point centroid, no shared code."""
    degs = []
    for spec, xi in zip(fis.inputs, x):
        xi = min(max(xi, spec.lo), spec.hi)
        degs.append(np.exp(-((xi - spec.means) ** 2) / (2 * spec.sigmas**2)))
    table = fis.rules.as_array()
    agg = np.zeros(5)
    for idx in itertools.product(range(5), repeat=len(degs)):
        s = np.prod([d[i] for d, i in zip(degs, idx)])
        k = table[idx]
        agg[k] = max(agg[k], s)
    out = fis.output
    y = np.linspace(out.lo, out.hi, n)
    curves = np.exp(-((y[None] - out.means[:, None]) ** 2) / (2 * out.sigmas[:, None] ** 2))
    mu = np.minimum(curves, agg[:, None]).max(axis=0)
    return float(np.sum(mu * y) / np.sum(mu))


def test_membership_examples():
    mf = GaussianMF(2.0, 0.5)
    assert membership(mf, 2.0) == 1.0
    assert membership(mf, 2.5) == pytest.approx(np.exp(-0.5), rel=1e-15)
    assert mf(1.5) == pytest.approx(0.60653, abs=1e-5)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(0, 10))
def test_membership_symmetric(m, s, d):
    mf = GaussianMF(m, s)
    assert membership(mf, m + d) == pytest.approx(membership(mf, m - d), rel=1e-12)
    assert 0.0 <= membership(mf, m + d) <= 1.0


def test_mf_sigma_must_be_positive():
    with pytest.raises(ConfigurationError):
        GaussianMF(0.0, 0.0)


def test_fuzzify_examples():
    spec = VariableSpec.uniform(-1.0, 1.0)
    d = fuzzify(spec, 0.0)
    assert d[2] == 1.0 and np.all((d > 0) & (d <= 1))
    below = fuzzify(spec, -5.0)
    assert np.array_equal(below, np.exp(-((-1.0 - spec.means) ** 2) / (2 * spec.sigmas**2)))


@pytest.mark.parametrize("means, sigmas", [
    ([0, 1, 2, 3], [1, 1, 1, 1]),
    ([0, 2, 1, 3, 4], [1] * 5),
    ([-1, 1, 2, 3, 4], [1] * 5),
    ([0, 1, 2, 3, 4], [1, 1, 0, 1, 1]),
])
def test_variable_spec_validation(means, sigmas):
    with pytest.raises(ConfigurationError):
        VariableSpec(0, 4, means, sigmas)


def test_rule_table_validation():
    with pytest.raises(ConfigurationError):
        RuleTable(np.full(124, 2), (5, 5, 5))
    with pytest.raises(ConfigurationError):
        RuleTable(np.full(125, 5), (5, 5, 5))
    rt = RuleTable(np.arange(125) % 5, (5, 5, 5))
    assert rt.as_array()[1, 2, 3] == (25 + 10 + 3) % 5


def test_single_consequent_gives_middle_mean():
    spec = VariableSpec.uniform(-1.0, 1.0)
    fis = FisParams([spec, spec, spec], spec, RuleTable(np.full((5, 5, 5), 2)))
    for x in ([0.3, -0.2, 0.9], [1.0, 1.0, -1.0]):
        assert fis(*x) == pytest.approx(0.0, abs=1e-12)


def test_symmetric_consequents_cancel():
    spec = VariableSpec(-1, 1, [-1, -0.5, 0, 0.5, 1], [0.1] * 5)
    rules = np.full((5, 5), 2)
    rules[1, :] = 1
    rules[3, :] = 3
    fis = FisParams([spec, spec], spec, RuleTable(rules))
    # x0 = 0 fires MF1 and MF3 equally; x1 = +/-1 leaves MF2 rules weakest
    assert fis(0.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_input_length_checked():
    fis = random_fis(np.random.default_rng(0))
    with pytest.raises(ValueError):
        infer_and_defuzzify(fis, [0.0, 1.0])


def test_defuzzification_grid_size():
    fis = random_fis(np.random.default_rng(1))
    assert fis._y.size == N_DEFUZZ


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_output_within_range(seed):
    rng = np.random.default_rng(seed)
    fis = random_fis(rng)
    x = [rng.uniform(v.lo - 5, v.hi + 5) for v in fis.inputs]
    y = fis(*x)
    assert fis.output.lo <= y <= fis.output.hi


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_continuity(seed):
    rng = np.random.default_rng(seed)
    fis = random_fis(rng)
    for _ in range(10):
        x = np.array([rng.uniform(v.lo, v.hi) for v in fis.inputs])
        dx = np.array([1e-6 * v.width for v in fis.inputs]) * rng.uniform(-1, 1, 3)
        assert abs(fis(*x) - fis(*(x + dx))) < 0.05 * fis.output.width


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permuting_identical_inputs(seed):
    rng = np.random.default_rng(seed)
    fis = random_fis(rng)
    a, c = fis.inputs[0], fis.inputs[2]
    table = fis.rules.as_array()
    f1 = FisParams([a, a, c], fis.output, RuleTable(table))
    f2 = FisParams([a, a, c], fis.output, RuleTable(np.transpose(table, (1, 0, 2))))
    x = [rng.uniform(a.lo, a.hi), rng.uniform(a.lo, a.hi), rng.uniform(c.lo, c.hi)]
    assert f1(x[0], x[1], x[2]) == pytest.approx(f2(x[1], x[0], x[2]), abs=1e-12)


def test_matches_fine_grid_centroid():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        fis = random_fis(rng)
        x = [rng.uniform(v.lo, v.hi) for v in fis.inputs]
        worst = max(worst, abs(fis(*x) - fine_centroid(fis, x)) / fis.output.width)
    assert worst < 1e-3


def test_round_trip_dict():
    fis = random_fis(np.random.default_rng(5))
    assert FisParams.from_dict(fis.to_dict()) == fis
