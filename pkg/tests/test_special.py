import math

import numpy as np
import pytest

from vfpbif.errors import DomainError, PrecisionError
from vfpbif.special import (
    eval_jn,
    eval_psi,
    jn_sequence_cached,
    log_an,
    log_jn_sequence,
)

from _oracles import LN_J3_10_M5


class TestClosedFormAnchors:
    def test_j0_at_unit_args(self):
        ev = eval_jn(0, 1.0, 0.0)
        assert ev.value == pytest.approx(np.e - 1.0, rel=1e-12)

    def test_j1_at_unit_args(self):
        assert eval_jn(1, 1.0, 0.0).value == pytest.approx(1.0, rel=1e-12)

    def test_j2_at_unit_args(self):
        assert eval_jn(2, 1.0, 0.0).value == pytest.approx(np.e - 2.0, rel=1e-12)

    def test_high_precision_oracle(self):
        # frozen 60-digit quadrature of the defining integral
        ev = eval_jn(3, 10.0, -5.0)
        assert ev.log_value == pytest.approx(LN_J3_10_M5, abs=1e-10)

    def test_error_estimate_reported(self):
        ev = eval_jn(3, 10.0, -5.0, tol=1e-10)
        assert 0.0 <= ev.quadrature_error <= 1e-10


class TestDomain:
    def test_rejects_negative_index(self):
        with pytest.raises(DomainError):
            eval_jn(-1, 1.0, 0.0)

    def test_rejects_nonpositive_y(self):
        with pytest.raises(DomainError):
            eval_jn(0, 0.0, -1.0)

    def test_rejects_nonintegrable(self):
        with pytest.raises(DomainError):
            eval_jn(0, 1.0, 1.0)  # y^2 - mu = 0

    def test_positive_everywhere_valid(self):
        # integrand is positive, so log is finite
        for (n, y, mu) in [(0, 0.7, -3.0), (5, 2.0, 1.5), (40, 30.0, -10.0)]:
            assert np.isfinite(eval_jn(n, y, mu).log_value)


def _j(n, y, mu):
    return np.exp(eval_jn(n, y, mu).log_value)


class TestRecurrence:
    # n (J_n - J_{n-1}) + y^2 J_{n+1} - mu J_n = 0, relative to max term
    @pytest.mark.parametrize("y", [0.5, 1.0, 5.0, 20.0, 100.0])
    @pytest.mark.parametrize("lam", [0.0, 0.1, 1.0])
    def test_three_term_recurrence(self, y, lam):
        mu = -lam * y
        for n in [1, 2, 3, 7, 20, 113, 200]:
            jm, j0, jp = _j(n - 1, y, mu), _j(n, y, mu), _j(n + 1, y, mu)
            resid = n * (j0 - jm) + y * y * jp - mu * j0
            scale = max(n * j0, n * jm, y * y * jp, abs(mu) * j0)
            assert abs(resid) <= 1e-10 * scale

    @pytest.mark.parametrize("y,lam", [(0.5, 0.0), (1.0, 0.1), (5.0, 1.0),
                                       (20.0, 0.1), (100.0, 0.0)])
    def test_anchor_identity(self, y, lam):
        mu = -lam * y
        assert y * y * _j(1, y, mu) - mu * _j(0, y, mu) == pytest.approx(
            1.0, abs=1e-10
        )

    def test_monotone_decay_in_n(self):
        y, mu = 3.0, -1.5
        vals = [_j(n, y, mu) for n in range(0, 40)]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        assert vals[-1] < 1e-6 * vals[0]


class TestScaledAsymptotics:
    def test_case_i_band(self):
        # a_n e^(n/2 - (n/2) ln n) -> sqrt(pi) for n^(3/2) << y, lam sqrt(n) << 1
        y, lam = 1e6, 1e-4
        for n in [20, 60, 200]:
            val = np.exp(log_an(n, y, lam) + n / 2.0 - (n / 2.0) * np.log(n))
            assert abs(val / np.sqrt(np.pi) - 1.0) < 0.02

    def test_case_ii_band(self):
        # extra e^(lam sqrt(n)) factor once lam sqrt(n) = O(1)
        n, y, lam = 50, 1e4, 0.1
        val = np.exp(
            log_an(n, y, lam) + n / 2.0 - (n / 2.0) * np.log(n)
            + lam * np.sqrt(n)
        )
        assert abs(val / np.sqrt(np.pi) - 1.0) < 0.05

    def test_case_iv_exponential_suppression(self):
        # n >> y^2: scaled magnitude decays at least like e^(-alpha n)
        n, y = 10**6, 100.0
        scaled = log_an(n, y, 0.0) + n / 2.0 - (n / 2.0) * np.log(n)
        assert scaled <= -0.5 * n

    def test_reduction_to_j0(self):
        assert log_an(0, 1.0, 0.0) == pytest.approx(np.log(np.e - 1.0), abs=1e-12)


class TestSequence:
    def test_matches_direct_quadrature_large_y(self):
        y, lam = 1e5, 1e-3
        lnJ = jn_sequence_cached(y, lam, 3000)
        for n in [2, 17, 150, 1000, 2500]:
            direct = eval_jn(n, y, -lam * y).log_value
            assert lnJ[n] == pytest.approx(direct, abs=1e-9)

    def test_matches_direct_quadrature_small_y(self):
        # past n ~ y^2 the recurrence is abandoned for quadrature internally
        y, lam = 2.0, 0.3
        lnJ = log_jn_sequence(y, lam, 60)
        for n in [2, 5, 11, 30, 55]:
            direct = eval_jn(n, y, -lam * y).log_value
            assert lnJ[n] == pytest.approx(direct, abs=1e-9)

    def test_truncates_on_dead_envelope(self):
        # at moderate gamma the scaled envelope dies long before n_max
        lnJ = log_jn_sequence(10.0 / 3.0, 1e-3, 200000)
        assert len(lnJ) < 5000


class TestPsi:
    def test_psi01_closed_form(self):
        xi, lam = 2.0, 0.3
        p = eval_psi(0, 1, xi, lam)
        expected = (1j * xi / np.sqrt(2)) * _j(1, abs(xi) / np.sqrt(2), lam)
        assert p.value == pytest.approx(expected, rel=1e-10)

    def test_psi10_closed_form(self):
        xi, lam = 1.5, 0.2
        p = eval_psi(1, 0, xi, lam)
        expected = (1j * xi / np.sqrt(2)) * _j(1, abs(xi) / np.sqrt(2), lam)
        assert p.value == pytest.approx(expected, rel=1e-10)

    def test_psi_n1_closed_form(self):
        # psi_n^1 = (1/n!) (i xi/sqrt2)^(n-1) (-lam) J_n(|xi|/sqrt2, lam)
        xi, lam, n = 3.0, 0.4, 4
        p = eval_psi(n, 1, xi, lam)
        y = abs(xi) / np.sqrt(2)
        expected = (
            (1j * xi / np.sqrt(2)) ** (n - 1) * (-lam) * _j(n, y, lam)
            / math.factorial(n)
        )
        assert p.value == pytest.approx(expected, rel=1e-9)

    def test_psi_n0_closed_form(self):
        xi, lam, n = -2.5, 0.15, 3
        p = eval_psi(n, 0, xi, lam)
        y = abs(xi) / np.sqrt(2)
        expected = (1j * xi / np.sqrt(2)) ** n * _j(n, y, lam) / math.factorial(n)
        assert p.value == pytest.approx(expected, rel=1e-9)

    def test_negative_xi_antisymmetry(self):
        a = eval_psi(0, 1, 2.0, 0.3).value
        b = eval_psi(0, 1, -2.0, 0.3).value
        assert b == pytest.approx(-a, rel=1e-12)

    def test_xi_zero_diagonal(self):
        assert eval_psi(2, 2, 0.0, -1.0).value == pytest.approx(1.0 / 3.0)
        assert eval_psi(1, 2, 0.0, -1.0).value == 0.0
