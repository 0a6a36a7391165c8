import math
import warnings

import numpy as np
import pytest

from rflongevity.longevity import (
    DEFAULT_EPSILONS,
    Directional,
    LongevityResult,
    decay_crossing_directional,
    family_kind,
    longevity_analytic_directional,
    longevity_simulated,
    mrfm_estimate,
    scaling_experiment,
    success_at,
)
from rflongevity.numerics import fit_line
from rflongevity.phase import Coherent, OptimalBounded


def brute_crossing(two_j, epsilon):
    """Largest n with j/(2j+1) r^n >= 1/2 - epsilon, by plain counting."""
    j = two_j / 2
    r = 1 - 2 / (two_j + 1) ** 2
    if 1 - (0.5 + j / (two_j + 1)) > epsilon:
        return 0
    n = 0
    while 1 - (0.5 + j / (two_j + 1) * r ** (n + 1)) <= epsilon:
        n += 1
    return n


class TestSimulated:
    def test_j1_eps04(self):
        res = longevity_simulated(Directional(2), 0.4)
        assert res.n_uses == 4
        assert not res.censored and not res.initial_error_exceeds
        # (1/3)(7/9)^4 ~ 0.1206 >= 0.1 > (1/3)(7/9)^5 ~ 0.0938
        assert (7 / 9) ** 4 / 3 >= 0.1 > (7 / 9) ** 5 / 3

    @pytest.mark.parametrize("eps", [0.05, 0.2, 0.45])
    def test_phase_vacuum_flagged(self, eps):
        res = longevity_simulated(OptimalBounded(0), eps)
        assert res.n_uses == 0
        assert res.initial_error_exceeds

    def test_j20_eps01_matches_crossing(self):
        sim = longevity_simulated(Directional(40), 0.1)
        assert sim.n_uses == decay_crossing_directional(40, 0.1).n_uses == brute_crossing(40, 0.1)

    @pytest.mark.parametrize("eps", DEFAULT_EPSILONS)
    def test_all_j_up_to_128(self, eps):
        for two_j in range(1, 257):
            sim = longevity_simulated(Directional(two_j), eps)
            fast = decay_crossing_directional(two_j, eps)
            assert sim.n_uses == fast.n_uses, two_j
            assert sim.initial_error_exceeds == fast.initial_error_exceeds

    def test_brute_crossing_spot_checks(self):
        for two_j, eps in [(1, 0.3), (7, 0.05), (33, 0.2), (100, 0.1)]:
            assert decay_crossing_directional(two_j, eps).n_uses == brute_crossing(two_j, eps)

    def test_censored(self):
        res = longevity_simulated(Directional(64), 0.1, max_steps=10)
        assert res.censored and res.n_uses == 10
        res = longevity_simulated(Coherent(3.0), 0.2, max_steps=5)
        assert res.censored and res.n_uses == 5
        assert decay_crossing_directional(64, 0.1, max_steps=10).censored

    def test_deterministic(self):
        a = longevity_simulated(Coherent(2.0), 0.1)
        b = longevity_simulated(Coherent(2.0), 0.1)
        assert a == b

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
    def test_bad_epsilon(self, eps):
        with pytest.raises(ValueError):
            longevity_simulated(Directional(2), eps)

    def test_unknown_kind(self):
        with pytest.raises(TypeError):
            longevity_simulated("spin", 0.1)

    def test_result_invariants(self):
        with pytest.raises(ValueError):
            LongevityResult(Directional(2), 1.0, 0.1, -1, "simulated")
        with pytest.raises(ValueError):
            LongevityResult(Directional(2), 1.0, 1.5, 1, "simulated")


class TestMonotone:
    def test_directional(self):
        grid = np.array(
            [[longevity_simulated(Directional(tj), e).n_uses for tj in range(1, 65)] for e in DEFAULT_EPSILONS]
        )
        assert np.all(np.diff(grid, axis=0) >= 0)
        assert np.all(np.diff(grid, axis=1) >= 0)

    @pytest.mark.parametrize("family", ["phase-optimal", "phase-coherent"])
    def test_phase(self, family):
        sizes = [1, 2, 4, 6, 9, 12]
        grid = np.array(
            [[longevity_simulated(family_kind(family, s), e).n_uses for s in sizes] for e in DEFAULT_EPSILONS]
        )
        assert np.all(np.diff(grid, axis=0) >= 0)
        assert np.all(np.diff(grid, axis=1) >= 0)


class TestAnalytic:
    def test_j100(self):
        res = longevity_analytic_directional(200, 0.1)
        assert res.n_uses == 1000
        assert res.method == "analytic_directional"

    def test_tiny_epsilon(self):
        assert longevity_analytic_directional(200, 1e-9).n_uses == 0

    def test_mrfm(self):
        assert mrfm_estimate(10**6, 1e-4).n_uses == 10**8
        assert mrfm_estimate(10**6, 1e-4, convention="j=N/2").n_uses == 25_000_000
        assert mrfm_estimate(1, 0.5).n_uses <= 2
        with pytest.raises(ValueError):
            mrfm_estimate(0, 0.1)
        with pytest.raises(ValueError):
            mrfm_estimate(10, 0.1, convention="j=2N")

    def test_linearised_crossing(self):
        # initial error 1/(4j) plus slope 1/(4 j^2) per use crosses eps near
        # 4 eps j^2 - j; eps j^2 keeps the quadratic law but not the prefactor,
        # which tends to 2 ln(1/(1 - 2 eps)) / eps
        eps = 0.05
        limit = 2 * math.log(1 / (1 - 2 * eps)) / eps
        for two_j in (64, 128, 256, 1024):
            j = two_j / 2
            exact = decay_crossing_directional(two_j, eps).n_uses
            assert 1.0 < exact / (4 * eps * j * j - j) < 1.1
            rough = longevity_analytic_directional(two_j, eps).n_uses
            assert exact / rough == pytest.approx(limit, rel=0.15)


class TestScaling:
    def test_synthetic_quadratic(self):
        s = np.array([3.0, 11.0])
        fit = fit_line(np.log(s), np.log(s**2))
        assert fit.slope == pytest.approx(2.0, abs=1e-14)
        assert fit.residual_rms == pytest.approx(0.0, abs=1e-14)

    def test_directional_eps01(self):
        (res,) = scaling_experiment("direction", [0.1], [8, 16, 32, 64, 128])
        assert 1.9 <= res.loglog_fit.slope <= 2.1
        assert list(res.sizes) == [8, 16, 32, 64, 128]
        assert res.excluded_sizes == ()

    def test_coherent_eps02(self):
        (res,) = scaling_experiment("phase-coherent", [0.2], [4, 9, 16, 25, 36, 49, 64])
        assert 1.9 <= res.loglog_fit.slope <= 2.1

    def test_sorted_output_and_workers(self):
        a = scaling_experiment("direction", [0.2, 0.1], [16, 4, 8])
        b = scaling_experiment("direction", [0.1, 0.2], [4, 8, 16], workers=2)
        assert [r.epsilon for r in a] == [0.1, 0.2]
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.sizes, y.sizes)
            np.testing.assert_array_equal(x.longevities, y.longevities)
            assert x.loglog_fit == y.loglog_fit

    def test_censored_points_excluded(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            (res,) = scaling_experiment("direction", [0.1], [0.5, 8, 16, 32], max_steps=200)
        assert caught
        # j=1/2 starts above 0.1 error; j=32 runs past 200 steps
        assert res.excluded_sizes == (0.5, 32.0)
        assert res.loglog_fit.point_count == 2

    def test_too_few_points(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            (res,) = scaling_experiment("direction", [0.1], [0.5, 8])
        assert res.loglog_fit is None

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            scaling_experiment("direction", [0.1], [8, 8])
        with pytest.raises(ValueError):
            family_kind("direction", 0.3)
        with pytest.raises(ValueError):
            family_kind("phase-optimal", 0.3)
        with pytest.raises(ValueError):
            family_kind("torque", 1)


@pytest.mark.parametrize("family", ["phase-optimal", "phase-coherent"])
def test_plateau_after_nbar_squared_uses(family):
    values = [success_at(family_kind(family, nbar), math.ceil(nbar**2)) for nbar in range(3, 9)]
    assert max(values) - min(values) < 0.05


def test_success_at_directional():
    assert success_at(Directional(20), 0) == pytest.approx(1 - 1 / 42, abs=1e-15)
    r = 1 - 2 / 21**2
    assert success_at(Directional(20), 30) == pytest.approx(0.5 + 10 / 21 * r**30, abs=1e-13)
