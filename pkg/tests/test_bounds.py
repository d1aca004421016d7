import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.special import zeta

from heavytail.bounds import (
    INDEPENDENT,
    MixingDecay,
    MomentSpec,
    block_partition,
    c_alpha,
    c_alpha_argmin,
    c_alpha_iid_finite_variance,
    deviation_threshold,
    moment_factor,
    phi_sum,
    rate_constants,
    theorem1_bound,
    theorem1_bound_raw,
    theta_star,
    truncation_level,
)

alphas = st.floats(0.05, 0.95)
finite_r = st.floats(2.05, 200.0)


def consts(alpha=0.5, alpha_prime=None, r=INDEPENDENT, C=0.0, nu=2.5, delta=0.05, c=1.0):
    ap = alpha if alpha_prime is None else alpha_prime
    return rate_constants(MixingDecay(C, r), MomentSpec(alpha, ap, nu), delta, c)


# -- phi_sum ---------------------------------------------------------------------

def test_phi_sum_independent_is_zero():
    assert phi_sum(MixingDecay(0.0, INDEPENDENT)) == 0.0
    assert phi_sum(MixingDecay(0.0, 5.0)) == 0.0


def test_phi_sum_closed_forms():
    assert phi_sum(MixingDecay(1.0, 4.0)) == pytest.approx(math.pi**2 / 6 - 1, abs=1e-12)
    assert phi_sum(MixingDecay(4.0, 4.0)) == pytest.approx(2 * (math.pi**2 / 6 - 1), abs=1e-12)


@pytest.mark.parametrize("r", [2.05, 2.1, 2.5, 3.0, 7.0, 40.0])
def test_phi_sum_matches_hurwitz_zeta(r):
    # sum_{j>=2} j^(-r/2) = zeta(r/2) - 1
    assert abs(phi_sum(MixingDecay(1.0, r)) - (zeta(r / 2) - 1)) < 1e-10


@pytest.mark.parametrize("r", [2.0, 1.5, float("nan")])
def test_decay_rejects_small_r(r):
    with pytest.raises(ValueError):
        MixingDecay(1.0, r)


def test_decay_rejects_negative_C():
    with pytest.raises(ValueError):
        MixingDecay(-1.0, 3.0)


# -- c_alpha -----------------------------------------------------------------------

def dense_grid_min(alpha, phi):
    eps = np.arange(1e-4, 100.0, 1e-4)
    vals = moment_factor(eps, alpha, phi)
    i = int(np.argmin(vals))
    return eps[i], vals[i]


@pytest.mark.parametrize(
    "alpha, phi, expected, eps_star",
    [(0.5, 0.0, 29.8, 6.1), (0.5, 0.6449341, 81.2, 11.2)],
)
def test_c_alpha_examples(alpha, phi, expected, eps_star):
    grid_eps, grid_val = dense_grid_min(alpha, phi)
    eps, val = c_alpha_argmin(alpha, phi)
    assert val == pytest.approx(grid_val, rel=1e-8)
    assert eps == pytest.approx(grid_eps, abs=2e-3)
    assert val == pytest.approx(expected, abs=0.05)
    assert eps == pytest.approx(eps_star, abs=0.05)


@pytest.mark.parametrize("alpha, phi", [(0.1, 0.0), (0.5, 2.0), (0.9, 0.3), (0.99, 10.0)])
def test_c_alpha_stationary_point(alpha, phi):
    # f(e) = 2 + e + K (1 + 1/e)^2, so f'(e) = 1 - 2K (1 + 1/e) / e^2
    K = 4 * (1 + 4 * phi) / (1 - alpha) ** 2
    root = brentq(lambda e: 1 - 2 * K * (1 + 1 / e) / e**2, 1e-6, 1e6, xtol=1e-14)
    assert c_alpha(alpha, phi) == pytest.approx(float(moment_factor(root, alpha, phi)), rel=1e-8)


def test_c_alpha_increases_with_phi():
    assert c_alpha(0.5, 1.0) > c_alpha(0.5, 0.0)


@given(alphas, st.floats(0, 20), st.floats(0, 5))
def test_c_alpha_monotone_and_above_two(alpha, phi, dphi):
    value = c_alpha(alpha, phi)
    assert value >= 2
    assert c_alpha(alpha, phi + dphi) >= value * (1 - 1e-9)
    assert c_alpha(min(alpha + 0.04, 0.99), phi) >= value * (1 - 1e-9)


@pytest.mark.parametrize("alpha", [1.0, 1.5, 0.0])
def test_c_alpha_rejects_alpha_out_of_range(alpha):
    with pytest.raises(ValueError):
        c_alpha(alpha, 0.0)


def test_c_alpha_finite_variance_constant():
    assert c_alpha_iid_finite_variance() == 0.25


# -- rate constants ------------------------------------------------------------------

def test_exponents_example():
    k = consts(alpha=0.5, r=3.0)
    assert k.beta == pytest.approx(2.5 / 6, abs=1e-15)
    assert k.gamma == pytest.approx(1 / 3, abs=1e-15)
    assert k.lambda_ == pytest.approx(1 / 3, abs=1e-15)
    assert k.kappa == pytest.approx(3.5 / 6, abs=1e-15)


@given(alphas, st.floats(0, 1), finite_r)
def test_exponent_identities(alpha, frac, r):
    k = consts(alpha=alpha, alpha_prime=alpha * frac, r=r)
    assert 2 * k.beta + k.lambda_ * (1 - alpha) == pytest.approx(1.0, abs=1e-12)
    assert k.gamma <= alpha / (1 + alpha)
    assert k.beta > alpha / (1 + alpha)
    assert k.gamma < k.beta
    for v in (k.beta, k.gamma, k.lambda_, k.kappa):
        assert 0 <= v < 1
    assert k.kappa < 1


def test_gamma_at_alpha_prime_equal_alpha():
    k = consts(alpha=0.3, r=5.0)
    assert k.gamma == 0.3 / 1.3


def test_independent_constants():
    k = consts(alpha=0.5, r=INDEPENDENT, nu=2.5, c=2.0)
    assert k.beta == k.gamma == 0.5 / 1.5
    assert k.lambda_ == 1 / 1.5
    assert k.a1 == pytest.approx(math.sqrt(3 * 2.0 * 2.5), rel=1e-15)
    assert k.A == pytest.approx(math.exp(0.25), rel=1e-15)
    assert k.A == pytest.approx(1.2840254, abs=1e-7)


def test_c0_example():
    k = rate_constants(MixingDecay(), MomentSpec(0.5, 0.5, 2.5), 0.01, None)
    assert 2 * k.A * 0.01**k.c0 == pytest.approx(0.01 / 2, rel=1e-12)
    assert k.c0 == pytest.approx(1.355, abs=5e-4)
    assert k.c == k.c0


@pytest.mark.parametrize("delta", [0.0, 1.0, 1.5, -0.1])
def test_rate_constants_rejects_delta(delta):
    with pytest.raises(ValueError):
        consts(delta=delta)


def test_rate_constants_rejects_c():
    with pytest.raises(ValueError):
        consts(c=0.0)


def test_moment_spec_validation():
    with pytest.raises(ValueError):
        MomentSpec(1.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        MomentSpec(0.5, 0.6, 1.0)
    with pytest.raises(ValueError):
        MomentSpec(0.5, 0.5, 0.0)


def test_n1_defined_only_below_alpha():
    assert consts(alpha=0.5, r=3.0).n1 is None
    k = consts(alpha=0.5, alpha_prime=0.1, r=2.5, delta=0.05)
    e = (k.alpha - k.alpha_prime) / (1 + k.r)
    f = lambda n: k.p**-k.alpha * (k.p / n) ** e
    assert f(k.n1) <= k.delta / 2 < f(k.n1 - 1)


def test_n0_is_minimal():
    for k in (consts(), consts(r=3.0, C=1.0), consts(alpha=0.2, r=2.5, C=0.3, nu=7.0, c=3.0)):
        assert k.n0 is not None
        assert theta_star(k.n0, k) <= 2 * (k.p / k.n0) ** k.kappa
        if k.n0 > 1:
            n = k.n0 - 1
            assert theta_star(n, k) > 2 * (k.p / n) ** k.kappa


def test_n0_undefined_when_condition_never_holds():
    # theta*_n / (p/n)^kappa is constant in n and equals sqrt(c / (3 nu (1+4 phi)))
    k = consts(nu=2.5, c=1000.0)
    assert k.n0 is None


def test_report_fields():
    rep = consts(r=3.0, C=75.5).report()
    assert list(rep) == [
        "beta", "gamma", "lambda", "kappa", "phi_sum", "c_alpha", "a1", "a2",
        "A_raw", "log_A", "p", "c", "c0", "n0", "n1",
    ]
    assert rep["A_raw"] is None
    assert math.isfinite(rep["log_A"])


# -- thresholds and bounds -------------------------------------------------------------

def test_truncation_level_examples():
    k = consts(alpha=0.5, r=3.0, delta=0.05)
    assert truncation_level(10_000, k) == pytest.approx((10_000 / k.p) ** (1 / 3), rel=1e-15)
    assert truncation_level(10_000, k) == pytest.approx(11.863, abs=2e-3)
    delta = math.exp(-5.0)  # p = 10
    k = consts(alpha=0.5, delta=delta)
    assert k.p == pytest.approx(10.0, rel=1e-15)
    assert truncation_level(10_000, k) == pytest.approx(100.0, rel=1e-12)
    assert truncation_level(10, k) == pytest.approx(1.0, rel=1e-12)


def test_deviation_threshold_corollary3_value():
    k = rate_constants(MixingDecay(), MomentSpec(0.5, 0.5, 2.5), 0.01, None)
    assert k.a1 == pytest.approx(3.19, abs=0.01)
    assert k.a2 == pytest.approx(35.4, abs=0.05)
    expected = (k.a1 + k.a2) * (k.p / 1e5) ** (1 / 3)
    assert deviation_threshold(100_000, k) == pytest.approx(expected, rel=1e-13)
    assert deviation_threshold(100_000, k) == pytest.approx(1.744, abs=2e-3)


def test_deviation_threshold_unit_base():
    k = consts(delta=math.exp(-5.0), r=4.0, C=1.0)
    assert deviation_threshold(10, k) == pytest.approx(k.a1 + k.a2, rel=1e-13)


@given(alphas, finite_r, st.integers(1, 10**7))
def test_deviation_threshold_decreasing(alpha, r, n):
    k = consts(alpha=alpha, alpha_prime=alpha / 2, r=r)
    assert deviation_threshold(n + 1, k) < deviation_threshold(n, k)


def test_bound_constant_in_n_when_alpha_prime_equals_alpha():
    k = consts(alpha=0.5, r=3.0, delta=0.05, c=5.0)
    values = {theorem1_bound(n, k) for n in (10, 1000, 10**6)}
    assert len(values) == 1
    assert values.pop() == pytest.approx(min(1, 2 * k.A * 0.05**5 + k.p**-0.5), rel=1e-14)


def test_bound_clamps_when_A_is_huge():
    k = consts(alpha=0.5, alpha_prime=0.2, r=4.0, C=1.0, delta=0.05, c=1.0)
    assert k.log_A == pytest.approx(0.25 + math.sqrt(math.e) * 256, rel=1e-15)
    assert theorem1_bound_raw(1000, k) > 1
    assert theorem1_bound(1000, k) == 1.0


def test_bound_small_delta_limit():
    k = consts(alpha=0.5, delta=1e-60, c=1.0)
    assert theorem1_bound(1000, k) == pytest.approx(k.p**-0.5, rel=1e-12)


@given(st.floats(0.1, 0.9), st.floats(0, 1), finite_r, st.integers(2, 10**6), st.floats(0.5, 50))
@settings(max_examples=50)
def test_bound_nonincreasing_in_n_and_c(alpha, frac, r, n, c):
    k = consts(alpha=alpha, alpha_prime=alpha * frac, r=r, c=c)
    k2 = consts(alpha=alpha, alpha_prime=alpha * frac, r=r, c=c * 1.5)
    assert theorem1_bound(n + 1, k) <= theorem1_bound(n, k)
    assert theorem1_bound(n, k2) <= theorem1_bound(n, k)


@given(alphas, finite_r, st.floats(0.1, 30), st.integers(1, 10**8))
@settings(max_examples=50)
def test_theta_star_identity(alpha, r, C, n):
    k = consts(alpha=alpha, r=r, C=C, nu=3.0, c=2.0)
    delta_n = k.a1 * (k.p / n) ** k.beta
    b = truncation_level(n, k)
    lhs = delta_n**2 * b ** -(1 - alpha)
    rhs = 6 * k.c * k.nu_alpha * (1 + 4 * k.phi_sum) * math.log(1 / k.delta) / n
    assert lhs == pytest.approx(rhs, rel=1e-9)
    assert theta_star(n + 1, k) < theta_star(n, k)


# -- blocks ---------------------------------------------------------------------------

def test_block_partition_example():
    k = consts(alpha=0.5, r=3.0, delta=0.05)
    bp = block_partition(10_000, k)
    assert bp.m_raw == pytest.approx(1.598, abs=1e-3)
    assert bp.l_raw == pytest.approx(3128.7, rel=2e-4)
    assert (bp.m, bp.l) == (2, 2500)
    assert len(bp.remainder_range) == 0


def check_partition(bp):
    covered = []
    for xi, eta in zip(bp.xi_ranges, bp.eta_ranges):
        assert len(xi) == len(eta) == bp.m
        assert xi.stop == eta.start
        covered += list(xi) + list(eta)
    covered += list(bp.remainder_range)
    assert covered == list(range(bp.n))
    assert 2 * bp.l * bp.m <= bp.n < 2 * bp.l * bp.m + 2 * bp.m


@given(alphas, finite_r, st.floats(1e-6, 0.9), st.integers(2, 50_000))
@settings(max_examples=60)
def test_block_partition_properties(alpha, r, delta, n):
    k = consts(alpha=alpha, r=r, delta=delta)
    bp = block_partition(n, k)
    assert bp.m_raw * bp.l_raw == pytest.approx(n / 2, rel=1e-12)
    check_partition(bp)


def test_block_partition_rejects_independent():
    with pytest.raises(ValueError):
        block_partition(100, consts())
    with pytest.raises(ValueError):
        block_partition(1, consts(r=3.0))
