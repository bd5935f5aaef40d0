"""Model definitions: parameters, right-hand side, steady states, loci."""

from __future__ import annotations


import numpy as np
import pytest

from yamada_delay import (
    InvalidArgumentError,
    ModelParams,
    SingularParameterError,
    State,
    jacobians,
    kappa_fold,
    kappa_transcritical,
    preset,
    rhs,
    steady_states,
)
from yamada_delay.model import discriminant

from conftest import random_params


class TestModelParams:
    def test_preset_working_point(self):
        p = preset("figure1")
        assert (p.A, p.B, p.a) == (6.5, 5.8, 1.8)
        assert p.gamma_G == p.gamma_Q == 0.04
        assert p.kappa == 0.0 and p.tau == 0.0

    def test_preset_overrides(self):
        p = preset("figure1", kappa=0.01, tau=100.0)
        assert p.kappa == 0.01 and p.tau == 100.0

    def test_preset_unknown_name(self):
        with pytest.raises(InvalidArgumentError):
            preset("figure99")

    @pytest.mark.parametrize("field,value", [
        ("A", -1.0), ("A", 0.0), ("B", -0.5), ("a", 0.0),
        ("gamma_G", 0.0), ("gamma_Q", -0.04),
        ("kappa", -0.1), ("kappa", 1.5),
    ])
    def test_invalid_values_rejected(self, field, value):
        fields = dict(A=6.5, B=5.8, a=1.8, gamma_G=0.04, gamma_Q=0.04)
        fields[field] = value
        with pytest.raises(InvalidArgumentError):
            ModelParams(**fields)

    def test_negative_tau_allowed(self):
        # legal for spectral formulas; only forward integration refuses it
        p = preset("figure1", tau=-5.0)
        assert p.tau == -5.0

    def test_replace(self):
        p = preset("figure1")
        q = p.replace(kappa=0.3)
        assert q.kappa == 0.3 and p.kappa == 0.0
        assert q.A == p.A


class TestRhs:
    def test_off_state_is_equilibrium(self):
        p = preset("figure1", kappa=0.2, tau=10.0)
        d = rhs((p.A, p.B, 0.0), 0.0, p)
        assert np.all(d == 0.0)

    def test_feedback_term(self):
        p = preset("figure1", kappa=0.25)
        y = (5.0, 4.0, 1.5)
        base = rhs(y, 0.0, p)
        fed = rhs(y, 2.0, p)
        assert fed[0] == base[0] and fed[1] == base[1]
        assert fed[2] == pytest.approx(base[2] + 0.25 * 2.0, rel=1e-15)

    def test_jacobians_match_finite_differences(self):
        # acceptance: FD agreement < 1e-6 relative over 100 random draws
        rng = np.random.default_rng(20240817)
        eps = 1e-6
        for _ in range(100):
            p = random_params(rng)
            y = np.array([rng.uniform(0.0, p.A + 1.0),
                          rng.uniform(0.0, p.B + 1.0),
                          rng.uniform(0.0, 3.0)])
            idel = rng.uniform(0.0, 3.0)
            m1, m2 = jacobians(y, p)
            scale = max(1.0, np.abs(m1).max())
            for j in range(3):
                step = np.zeros(3)
                step[j] = eps
                col = (rhs(y + step, idel, p) - rhs(y - step, idel, p)) / (2.0 * eps)
                assert np.abs(col - m1[:, j]).max() < 1e-6 * scale
            col = (rhs(y, idel + eps, p) - rhs(y, idel - eps, p)) / (2.0 * eps)
            assert np.abs(col - m2[:, 2]).max() < 1e-6 * scale
            assert np.abs(m2[:, :2]).max() == 0.0


class TestSteadyStates:
    def test_off_always_present(self):
        p = preset("figure1", kappa=0.1, tau=5.0)
        ss = steady_states(p)
        assert ss.off == State(6.5, 5.8, 0.0)

    def test_known_intensities_no_feedback(self):
        # hand-computed roots of the intensity quadratic at kappa = 0
        ss = steady_states(preset("figure1"))
        assert ss.p is not None and ss.q is not None
        assert ss.p.I == pytest.approx(0.1029253, abs=1e-6)
        assert ss.q.I == pytest.approx(1.6192969, abs=1e-6)
        assert ss.p.G == pytest.approx(6.5 / (1.0 + ss.p.I), rel=1e-12)
        assert ss.p.Q == pytest.approx(5.8 / (1.0 + 1.8 * ss.p.I), rel=1e-12)

    def test_residuals_vanish(self):
        # acceptance: steady-state residuals < 1e-10 across random draws
        rng = np.random.default_rng(7)
        checked_pairs = 0
        for _ in range(100):
            p = random_params(rng)
            ss = steady_states(p)
            for st in (ss.off, ss.p, ss.q):
                if st is None:
                    continue
                d = rhs((st.G, st.Q, st.I), st.I, p)
                assert np.abs(d).max() < 1e-10
                if st is not ss.off:
                    checked_pairs += 1
        assert checked_pairs > 50  # the draw box hits the lasing regime often

    def test_pair_absent_below_fold(self):
        # marginal pump: the pair only exists on the high-kappa side
        p = ModelParams(A=5.9, B=5.8, a=1.8, gamma_G=0.04, gamma_Q=0.04,
                        kappa=kappa_fold(5.9, 5.8, 1.8) - 0.01)
        ss = steady_states(p)
        assert ss.p is None and ss.q is None
        assert ss.discriminant < 0.0

    def test_ordering_and_collision(self):
        p = ModelParams(A=5.9, B=5.8, a=1.8, gamma_G=0.04, gamma_Q=0.04)
        kf = kappa_fold(p.A, p.B, p.a)
        above = steady_states(p.replace(kappa=kf + 1e-3))
        assert above.p.I < above.q.I
        at = steady_states(p.replace(kappa=kf))
        assert at.p.I == pytest.approx(at.q.I, abs=1e-6)

    def test_singular_quadratic_rejected(self):
        # a(1 - kappa) = 0 degenerates the intensity quadratic
        p = ModelParams(A=6.5, B=5.8, a=1.8, gamma_G=0.04, gamma_Q=0.04, kappa=1.0)
        with pytest.raises(SingularParameterError):
            steady_states(p)


class TestBifurcationLoci:
    def test_transcritical_value(self):
        # at the working point: 1 - (A - B) = 0.3, exactly
        assert kappa_transcritical(6.5, 5.8) == pytest.approx(0.3, abs=1e-14)

    def test_transcritical_is_off_state_exchange(self):
        # the on-state intensity crosses zero at kappa_T
        kt = kappa_transcritical(6.5, 5.8)
        p = preset("figure1")
        lo = steady_states(p.replace(kappa=kt - 1e-4))
        hi = steady_states(p.replace(kappa=kt + 1e-4))
        assert lo.p is not None and hi.p is not None
        assert lo.p.I * hi.p.I < 0.0

    def test_fold_value_near_documented_point(self):
        kf = kappa_fold(5.9, 5.8, 1.8)
        assert 0.09 <= kf <= 0.10

    def test_fold_kills_discriminant(self):
        kf = kappa_fold(5.9, 5.8, 1.8)
        p = ModelParams(A=5.9, B=5.8, a=1.8, gamma_G=0.04, gamma_Q=0.04, kappa=kf)
        assert abs(discriminant(p)) < 1e-9

    def test_fold_discriminant_sign_change(self):
        base = ModelParams(A=5.9, B=5.8, a=1.8, gamma_G=0.04, gamma_Q=0.04)
        kf = kappa_fold(5.9, 5.8, 1.8)
        assert discriminant(base.replace(kappa=kf - 1e-3)) < 0.0
        assert discriminant(base.replace(kappa=kf + 1e-3)) > 0.0

    def test_fold_singular_at_unit_ratio(self):
        with pytest.raises(SingularParameterError):
            kappa_fold(5.9, 5.8, 1.0)

    def test_loci_random_consistency(self):
        # wherever kappa_F lands in (0, 1), the discriminant vanishes there
        rng = np.random.default_rng(11)
        hits = 0
        for _ in range(100):
            A = rng.uniform(1.0, 8.0)
            B = rng.uniform(0.5, 7.0)
            a = rng.uniform(1.1, 3.0)
            kf = kappa_fold(A, B, a)
            if not 0.0 < kf < 1.0:
                continue
            p = ModelParams(A=A, B=B, a=a, gamma_G=0.04, gamma_Q=0.04, kappa=kf)
            scale = max(1.0, A * A)
            assert abs(discriminant(p)) < 1e-8 * scale
            hits += 1
        assert hits > 10
