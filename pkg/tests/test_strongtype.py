import math

import numpy as np
import pytest

from orlicap import (
    CapacityCache,
    GridFunction,
    build_domain,
    capacity_ball_radial,
    power,
    power_log,
    truncation_H,
    zero_function,
)
from orlicap.strongtype import (
    TestFunctionSpec,
    build_test_function,
    default_suite,
    derived_psi,
    dyadic_darboux_sums,
    explicit_psi,
    lhs_dyadic,
    rhs_energy,
    verify_strong_type,
)


@pytest.fixture(scope="module")
def disc():
    return build_domain(2, 1.0, 96)


@pytest.fixture(scope="module")
def t2_cache(disc):
    return CapacityCache(power(2), disc)


def test_truncation_values():
    assert truncation_H(0.25) == 0.0
    assert truncation_H(0.75) == 0.5
    assert truncation_H(3.0) == 1.0
    ts = np.linspace(-1, 2, 301)
    hs = truncation_H(ts)
    slopes = np.diff(hs) / np.diff(ts)
    assert np.all((slopes >= 0) & (slopes <= 2 + 1e-12))


def test_default_suite_has_five_shapes(disc):
    suite = default_suite()
    assert len(suite) == 5
    for fn in suite:
        u = build_test_function(fn, disc)
        assert u.max_abs() > 0


def test_lhs_of_zero(disc, t2_cache):
    rep = lhs_dyadic(zero_function(disc), power(2), derived_psi(power(2)), t2_cache)
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.k_emp == 0.0


def test_truncated_function_collapses_levels(disc, t2_cache):
    # u = lam * H(v) peaks at exactly lam, so every level at or above lam
    # is empty
    v = build_test_function(TestFunctionSpec("tent", r=0.5, amplitude=2.0), disc)
    lam = 1.0
    u = GridFunction(disc, lam * truncation_H(v.values))
    assert u.max_abs() == lam
    rep = lhs_dyadic(u, power(2), derived_psi(power(2)), t2_cache)
    for row in rep.levels:
        if row.level >= lam:
            assert row.nodes == 0 and row.capacity == 0.0


def test_rhs_zero(disc):
    assert rhs_energy(zero_function(disc), power(2)) == 0.0


def test_rhs_tent_energy(disc):
    u = build_test_function(TestFunctionSpec("tent", r=0.5), disc)
    assert rhs_energy(u, power(2)) == pytest.approx(math.pi, rel=0.05)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("lam", [0.3, 2.0, 11.0])
def test_rhs_scales_exactly_for_powers(disc, p, lam):
    u = build_test_function(TestFunctionSpec("bump", sigma=0.2), disc)
    base = rhs_energy(u, power(p))
    scaled = rhs_energy(GridFunction(disc, lam * u.values), power(p))
    assert scaled == pytest.approx(lam ** p * base, rel=1e-12)


def test_tent_lhs_against_radial_oracle():
    # oracle: same dyadic weights, capacities from the independent 1-D
    # radial solver (levels of the tent are concentric balls); the grid
    # sum must land within 15% of it.  A fine Riemann lower sum of the
    # underlying integral sits below both.
    dom = build_domain(2, 1.0, 128)
    spec = power(2)
    psi = derived_psi(spec)
    u = build_test_function(TestFunctionSpec("tent", r=0.5), dom)
    rep = lhs_dyadic(u, spec, psi, CapacityCache(spec, dom))

    def cap_oracle(t):
        rr = 0.5 * (1.0 - t)
        return capacity_ball_radial(rr, spec, 1.0, 2, nodes=2000) if rr > 0 else 0.0

    oracle = 0.0
    for k in range(rep.k_max, rep.k_min - 1, -1):
        oracle += cap_oracle(2.0 ** k) * psi.weight(2.0 ** k, 2.0 ** (k + 1))
    assert rep.lhs == pytest.approx(oracle, rel=0.15)

    ts = np.linspace(1e-4, 1.0, 401)
    caps = np.array([cap_oracle(t) for t in ts])
    lower_riemann = float(np.sum(caps[1:] * np.diff(ts ** 2)))
    assert lower_riemann <= rep.lhs


def test_level_capacities_monotone(disc, t2_cache):
    u = build_test_function(TestFunctionSpec("two_peak"), disc)
    rep = lhs_dyadic(u, power(2), derived_psi(power(2)), t2_cache)
    caps = [row.capacity for row in rep.levels]
    for lo, hi in zip(caps, caps[1:]):
        assert hi <= lo + 2e-6


def test_dyadic_darboux_sandwich(disc, t2_cache):
    spec = power(2)
    psi = derived_psi(spec)
    u = build_test_function(TestFunctionSpec("tent", r=0.5), disc)
    rep = lhs_dyadic(u, spec, psi, t2_cache)
    lower, upper = dyadic_darboux_sums(u, spec, psi, t2_cache, samples=64)
    tol = 1e-6 * max(upper, 1.0)
    assert lower <= rep.lhs + tol
    assert rep.lhs <= upper + tol
    assert lower < rep.lhs  # the inf within each octave is genuinely smaller


def test_lhs_rhs_vanish_only_at_zero(disc, t2_cache):
    psi = derived_psi(power(2))
    u = build_test_function(TestFunctionSpec("bump", sigma=0.15), disc)
    rep = lhs_dyadic(u, power(2), psi, t2_cache)
    assert rep.lhs > 0 and rep.rhs > 0


def test_homogeneous_pair_k_emp_invariant(disc):
    spec = power(2)
    reports, verdict = verify_strong_type(
        [TestFunctionSpec("tent", r=0.5)], spec, derived_psi(spec), disc,
        lambdas=[2.0 ** j for j in (-4, -2, 0, 2, 4)])
    ks = [r.k_emp for r in reports]
    assert max(ks) / min(ks) <= 1.1
    assert verdict.stable and verdict.conditions_ok and verdict.all_converged


def test_admissible_pair_verdict(disc):
    spec = power_log(2, 1)
    reports, verdict = verify_strong_type(
        [TestFunctionSpec("tent", r=0.5)], spec, derived_psi(spec), disc)
    assert math.isfinite(verdict.max_k_emp)
    assert verdict.stable
    assert verdict.conditions_ok


def test_pairing_violation_shows_lambda_growth(disc):
    # Psi carrying the same log factor as Phi: k_emp climbs monotonically
    # as the amplitude shrinks, unlike the admissible companion weight
    spec = power_log(2, 1)
    reports, verdict = verify_strong_type(
        [TestFunctionSpec("tent", r=0.5)], spec, explicit_psi(spec), disc)
    assert not verdict.conditions_ok
    ks = [r.k_emp for r in reports]  # ordered along increasing lambda
    toward_zero = ks[:4]
    assert all(a > b for a, b in zip(toward_zero, toward_zero[1:]))
    assert not verdict.stable


def test_psi_must_increase():
    from orlicap.errors import ConfigurationError
    from orlicap.strongtype import _verify_increasing
    with pytest.raises(ConfigurationError):
        _verify_increasing(lambda t: -np.asarray(t, float), "neg")
    assert explicit_psi(power_log(2, 1)).source == "explicit"
    assert derived_psi(power_log(2, 1)).source == "derived"
