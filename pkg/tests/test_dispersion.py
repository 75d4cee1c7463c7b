import numpy as np
import pytest
from scipy.integrate import quad

from vfpbif.dispersion import (
    ModelParams,
    c_for_growth_rate,
    d_lambda_dispersion,
    eval_dispersion,
    eval_dispersion_vlasov,
    find_root,
)
from vfpbif.errors import ComplexBranch, DomainError, NoSignChange

from _oracles import C_FOR_GAMMA01_LAM005, C_FOR_GAMMA03_LAM001


def _vlasov_quadrature(c, lam):
    # brute-force oracle for the collisionless dispersion value
    val, _ = quad(lambda s: s * np.exp(-s * s / 2.0 - lam * s), 0.0, 50.0,
                  limit=200)
    return 1.0 - (c / (2.0 * np.pi)) * val


class TestEvalDispersion:
    def test_zero_coupling_gives_one(self):
        p = ModelParams(c=0.0, gamma=0.35)
        assert eval_dispersion(p, 0.7) == 1.0

    def test_threshold_value_small_gamma(self):
        # gamma -> 0 threshold: Lambda(2 pi, 0) -> 0
        p = ModelParams(c=2.0 * np.pi, gamma=1e-6)
        assert abs(eval_dispersion(p, 0.0)) < 1e-4

    def test_root_self_consistency(self):
        p = ModelParams(c=7.0, gamma=0.1)
        root = find_root(p, (1e-6, 0.8))
        assert abs(eval_dispersion(p, root.lam)) <= 1e-12

    def test_domain_boundary(self):
        p = ModelParams(c=3.0, gamma=0.5)
        with pytest.raises(DomainError):
            eval_dispersion(p, -2.0 / 0.5)  # lam = -k^2/gamma


class TestVlasovLimit:
    def test_threshold_integral(self):
        assert eval_dispersion_vlasov(2.0 * np.pi, 0.0) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_zero_coupling(self):
        assert eval_dispersion_vlasov(0.0, 3.0) == 1.0

    @pytest.mark.parametrize("lam", [0.0, 0.13, 0.6, 2.0])
    def test_matches_quadrature_oracle(self, lam):
        c = 4.0 * np.pi
        assert eval_dispersion_vlasov(c, lam) == pytest.approx(
            _vlasov_quadrature(c, lam), abs=1e-10
        )

    def test_gamma_zero_routing(self):
        p = ModelParams(c=5.0, gamma=0.0)
        assert eval_dispersion(p, 0.2) == eval_dispersion_vlasov(5.0, 0.2)

    def test_vlasov_root_vs_small_gamma(self):
        # cross-check the continued formula against gamma = 1e-7
        c = 4.0 * np.pi
        from scipy.optimize import brentq

        lam0 = brentq(lambda x: eval_dispersion_vlasov(c, x), 0.01, 2.0)
        root = find_root(ModelParams(c=c, gamma=1e-7), (0.01, 2.0))
        assert abs(root.lam - lam0) < 1e-3


class TestDerivative:
    def test_zero_coupling(self):
        assert d_lambda_dispersion(ModelParams(c=0.0, gamma=0.2), 0.1) == 0.0

    def test_small_gamma_limit_at_zero(self):
        # dLambda/dlam(lam=0) -> c / (2 sqrt(2 pi)) as gamma -> 0
        c = 5.0
        p = ModelParams(c=c, gamma=1e-6)
        expected = c / (2.0 * np.sqrt(2.0 * np.pi))
        assert d_lambda_dispersion(p, 0.0) == pytest.approx(expected, rel=1e-3)

    @pytest.mark.parametrize("gamma,lam", [(0.1, 0.05), (0.3, 0.2), (1e-3, 0.02)])
    def test_matches_finite_differences(self, gamma, lam):
        p = ModelParams(c=7.0, gamma=gamma)
        h = 1e-5 * max(lam, 0.01)
        fd = (eval_dispersion(p, lam + h) - eval_dispersion(p, lam - h)) / (2 * h)
        assert d_lambda_dispersion(p, lam) == pytest.approx(fd, rel=1e-6)

    def test_monotone_increase_on_grid(self):
        # Lambda strictly increasing in lam at fixed (c, gamma)
        for gamma in (0.05, 0.3):
            p = ModelParams(c=6.0, gamma=gamma)
            for lam in (0.0, 0.05, 0.2, 0.5):
                assert d_lambda_dispersion(p, lam) > 0.0


class TestFindRoot:
    def test_threshold_instability(self):
        p = ModelParams(c=2.0 * np.pi * (1.0 + 1e-3), gamma=1e-6)
        root = find_root(p, (0.0, 0.1))
        assert 0.0 < root.lam < 0.01
        assert root.residual <= 1e-12

    def test_stable_raises_no_sign_change(self):
        p = ModelParams(c=2.0 * np.pi * 0.999, gamma=1e-6)
        with pytest.raises(NoSignChange):
            find_root(p, (1e-9, 0.1))

    def test_bracket_extension(self):
        # root above the supplied bracket: monotone extension finds it
        p = ModelParams(c=7.0, gamma=0.1)
        full = find_root(p, (1e-6, 0.8))
        clipped = find_root(p, (1e-6, 0.01))
        assert clipped.lam == pytest.approx(full.lam, abs=1e-12)

    def test_reports_derivative_at_root(self):
        p = ModelParams(c=7.0, gamma=0.2)
        root = find_root(p, (1e-6, 0.8))
        assert root.d_lambda == pytest.approx(
            d_lambda_dispersion(p, root.lam), rel=1e-12
        )


class TestCouplingInversion:
    def test_round_trip(self):
        c = c_for_growth_rate(0.1, 0.05)
        root = find_root(ModelParams(c=c, gamma=0.1), (1e-6, 0.5))
        assert root.lam == pytest.approx(0.05, abs=1e-10)

    def test_threshold_limit(self):
        assert c_for_growth_rate(1e-6, 1e-9) == pytest.approx(
            2.0 * np.pi, rel=1e-3
        )

    def test_frozen_oracles(self):
        assert c_for_growth_rate(0.3, 0.01) == pytest.approx(
            C_FOR_GAMMA03_LAM001, rel=1e-12
        )
        assert c_for_growth_rate(0.1, 0.05) == pytest.approx(
            C_FOR_GAMMA01_LAM005, rel=1e-12
        )


class TestModeThresholds:
    def test_k2_threshold_is_four_times_k1(self):
        gamma = 1e-4
        c1 = c_for_growth_rate(gamma, 0.0, k=1)
        c2 = c_for_growth_rate(gamma, 0.0, k=2)
        assert c2 / c1 == pytest.approx(4.0, rel=1e-6)

    def test_k1_most_unstable(self):
        gamma = 1e-4
        thresholds = [c_for_growth_rate(gamma, 0.0, k=k) for k in (1, 2, 3)]
        assert thresholds[0] < thresholds[1] < thresholds[2]


class TestStochasticStability:
    def test_monotone_convergence_to_vlasov_root(self):
        c = 4.0 * np.pi
        from scipy.optimize import brentq

        lam0 = brentq(lambda x: eval_dispersion_vlasov(c, x), 0.01, 2.0)
        errs = []
        for gamma in (1e-2, 1e-3, 1e-4, 1e-5):
            root = find_root(ModelParams(c=c, gamma=gamma), (0.01, 2.0))
            errs.append(abs(root.lam - lam0))
        assert all(b < a for a, b in zip(errs, errs[1:]))
