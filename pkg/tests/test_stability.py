"""Stability: characteristic roots, Hopf curve, double-zero point, classes."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from yamada_delay import (
    InvalidArgumentError,
    ModelParams,
    SingularParameterError,
    State,
    bt_point,
    char_off,
    classify_off,
    hopf_curve_off,
    jacobians,
    preset,
    roots_generic,
    roots_off,
    steady_states,
)
from yamada_delay.stability import (
    INFINITELY_MANY_UNSTABLE,
    SADDLE_FINITE_UNSTABLE,
    STABLE,
    char_off_factor,
    char_off_factor_deriv,
)

from conftest import random_params

WINDOW = (-1.0, 0.5, -10.0, 10.0)


class TestCharacteristicFunction:
    def test_matches_jacobian_determinant(self):
        # factorized closed form vs det(lambda I - M1 - M2 e^{-lambda tau})
        rng = np.random.default_rng(404)
        for _ in range(100):
            p = random_params(rng)
            lam = complex(rng.uniform(-1.0, 1.0), rng.uniform(-5.0, 5.0))
            m1, m2 = jacobians(State(p.A, p.B, 0.0), p)
            fm = lam * np.eye(3) - np.asarray(m1) - np.asarray(m2) * cmath.exp(-lam * p.tau)
            det = np.linalg.det(fm)
            scale = max(1.0, abs(det))
            assert abs(det + char_off(lam, p)) < 1e-9 * scale

    def test_factor_derivative(self):
        p = preset("figure1", kappa=0.2, tau=7.0)
        h = 1e-7
        for lam in (0.1 + 0.3j, -0.5 - 2.0j, 0.0j):
            fd = (char_off_factor(lam + h, p) - char_off_factor(lam - h, p)) / (2 * h)
            assert abs(fd - char_off_factor_deriv(lam, p)) < 1e-6


class TestRootsOff:
    def test_ode_limit_roots(self):
        # kappa = 0 removes the delay term: three explicit eigenvalues
        p = ModelParams(A=6.5, B=5.8, a=1.8, gamma_G=0.04, gamma_Q=0.07,
                        kappa=0.0, tau=5.0)
        spec = roots_off(p, WINDOW)
        expected = sorted([-0.3, -0.07, -0.04])
        assert len(spec) == 3
        got = np.sort(spec.roots.real)
        assert np.abs(spec.roots.imag).max() < 1e-12
        assert np.abs(got - expected).max() < 1e-12

    def test_roots_satisfy_char_and_window(self):
        p = preset("figure1", kappa=0.1, tau=20.0)
        spec = roots_off(p, WINDOW)
        assert len(spec) > 10
        assert np.all(spec.residuals < 1e-9)
        re, im = spec.roots.real, spec.roots.imag
        assert re.min() >= WINDOW[0] - 1e-9 and re.max() <= WINDOW[1] + 1e-9
        assert im.min() >= WINDOW[2] - 1e-9 and im.max() <= WINDOW[3] + 1e-9

    def test_conjugate_symmetry(self):
        p = preset("figure1", kappa=0.1, tau=20.0)
        spec = roots_off(p, WINDOW)
        for z in spec.roots:
            if z.imag > 1e-8:
                assert np.abs(spec.roots - z.conjugate()).min() < 1e-9

    def test_chain_spacing(self):
        # root chains stack with imaginary spacing about 2 pi / tau
        p = preset("figure1", kappa=0.1, tau=20.0)
        spec = roots_off(p, WINDOW)
        chain = np.sort(spec.roots.imag[(spec.roots.imag > 0.1) & (spec.roots.real < -0.1)])
        gaps = np.diff(chain)
        assert np.abs(gaps - 2 * math.pi / 20.0).max() < 0.05

    def test_max_real_part_sign_tracks_class(self):
        stable = preset("figure1", kappa=0.2, tau=50.0)
        unstable = preset("figure1", kappa=0.5, tau=50.0)
        assert roots_off(stable, WINDOW).max_real_part() < 0.0
        assert roots_off(unstable, WINDOW).max_real_part() > 0.0

    def test_window_validation(self):
        p = preset("figure1", kappa=0.1, tau=20.0)
        with pytest.raises(InvalidArgumentError):
            roots_off(p, (0.5, -1.0, -10.0, 10.0))
        with pytest.raises(InvalidArgumentError):
            roots_off(p, (-1.0, 0.5, -10.0, math.inf))


class TestRootsGeneric:
    def test_off_state_dual_route(self):
        # determinant route must reproduce the factorized route root-for-root
        p = preset("figure1", kappa=0.1, tau=20.0)
        a = roots_off(p, WINDOW)
        b = roots_generic(State(p.A, p.B, 0.0), p, WINDOW)
        assert len(a) == len(b)
        assert np.abs(np.sort_complex(a.roots) - np.sort_complex(b.roots)).max() < 1e-9

    def test_lasing_state_spectrum(self):
        p = preset("figure1", kappa=0.05, tau=20.0)
        ss = steady_states(p)
        spec = roots_generic(ss.q, p, WINDOW)
        assert len(spec) > 0
        assert np.all(spec.residuals < 1e-9)

    def test_rejects_non_equilibrium(self):
        p = preset("figure1", kappa=0.1, tau=20.0)
        with pytest.raises(InvalidArgumentError):
            roots_generic(State(3.0, 2.0, 1.0), p, WINDOW)


class TestHopfCurve:
    def test_points_are_roots(self):
        p = preset("figure1")
        pts = hopf_curve_off(p, np.linspace(0.05, 3.0, 50))
        assert len(pts) > 50
        for pt in pts:
            assert pt.residual < 1e-10
            q = p.replace(kappa=pt.kappa, tau=pt.tau)
            assert abs(char_off(1j * pt.omega, q)) < 1e-10

    def test_kappa_bounds(self):
        p = preset("figure1")
        c = abs(p.A - p.B - 1.0)
        pts = hopf_curve_off(p, np.linspace(0.05, 3.0, 50))
        for pt in pts:
            assert c < pt.kappa <= 1.0
            assert pt.kappa == pytest.approx(math.hypot(pt.omega, c))

    def test_branch_spacing(self):
        # branches at one frequency differ by a full winding of the delay
        p = preset("figure1")
        pts = hopf_curve_off(p, [0.3], branches=(0, 1, 2))
        taus = {pt.branch_index: pt.tau for pt in pts}
        assert taus[1] - taus[0] == pytest.approx(2 * math.pi / 0.3)
        assert taus[2] - taus[1] == pytest.approx(2 * math.pi / 0.3)

    def test_confirmed_by_root_finder(self):
        # drop a Hopf point back into the generic finder: a root sits on
        # the imaginary axis at the advertised frequency
        p = preset("figure1")
        (pt,) = hopf_curve_off(p, [0.3], branches=(1,))
        q = p.replace(kappa=pt.kappa, tau=pt.tau)
        spec = roots_off(q, (-0.3, 0.3, 0.05, 0.6))
        d = np.abs(spec.roots - 1j * pt.omega)
        assert d.min() < 1e-9

    def test_high_frequencies_filtered(self):
        p = preset("figure1")
        pts = hopf_curve_off(p, [5.0])
        assert pts == []


class TestDoubleZeroPoint:
    def test_working_point_location(self):
        bt = bt_point(6.5, 5.8)
        assert bt.tau == pytest.approx(-10.0 / 3.0, abs=1e-12)
        assert bt.kappa == pytest.approx(0.3, abs=1e-15)
        assert bt.physical

    def test_double_root_conditions(self):
        bt = bt_point(6.5, 5.8)
        p = preset("figure1", kappa=bt.kappa, tau=bt.tau)
        assert abs(char_off_factor(0.0, p)) < 1e-12
        assert abs(char_off_factor_deriv(0.0, p)) < 1e-12

    def test_root_finder_flags_multiplicity(self):
        bt = bt_point(6.5, 5.8)
        p = preset("figure1", kappa=bt.kappa, tau=bt.tau)
        spec = roots_off(p, (-0.2, 0.2, -0.2, 0.2))
        near0 = np.abs(spec.roots) < 1e-6
        assert near0.any()
        assert spec.multiple[near0].all()

    def test_nonphysical_branch(self):
        assert not bt_point(8.0, 5.8).physical

    def test_singular_pump(self):
        with pytest.raises(SingularParameterError):
            bt_point(6.8, 5.8)


class TestClassifyOff:
    @pytest.mark.parametrize(
        "kwargs, expected",
        [
            (dict(kappa=0.0, tau=0.0), STABLE),
            (dict(kappa=0.0, tau=100.0), STABLE),
            (dict(kappa=0.2, tau=0.0), STABLE),
            (dict(kappa=0.3, tau=0.0), SADDLE_FINITE_UNSTABLE),  # marginal
            (dict(kappa=0.4, tau=0.0), SADDLE_FINITE_UNSTABLE),
            (dict(kappa=0.2, tau=100.0), STABLE),
            (dict(kappa=0.3, tau=100.0), SADDLE_FINITE_UNSTABLE),  # marginal
            (dict(kappa=0.5, tau=100.0), SADDLE_FINITE_UNSTABLE),
            (dict(kappa=0.1, tau=-5.0), INFINITELY_MANY_UNSTABLE),
        ],
    )
    def test_working_point_table(self, kwargs, expected):
        assert classify_off(preset("figure1", **kwargs)) == expected

    def test_pumped_above_threshold(self):
        # A > B + 1: the off state is unstable however weak the feedback
        p = preset("figure1", A=8.0, kappa=0.05, tau=30.0)
        assert classify_off(p) == SADDLE_FINITE_UNSTABLE

    def test_agrees_with_root_finder(self):
        rng = np.random.default_rng(405)
        checked = 0
        for _ in range(40):
            p = random_params(rng)
            if p.tau < 1.0 or abs(p.kappa - abs(p.A - p.B - 1.0)) < 0.05:
                continue
            label = classify_off(p)
            # real part up to c + kappa <= 7.4 for the draw box
            m = roots_off(p, (-0.5, 8.0, -8.0, 8.0), re_step=0.2).max_real_part()
            if label == STABLE:
                assert m < 0.0
            else:
                assert m > 0.0
            checked += 1
        assert checked > 15
