import math

import numpy as np
import pytest

from tomobell.model import CHSH_ANGLES, BellAngles, DegenerateStateError, InvalidParameterError, NopaParams
from tomobell.oracle import (bell_closed_form, bell_exact, build_state, correlation_closed_form,
                             correlation_exact, pair_probability_exact, rotate_and_project,
                             sector_rotation, state_deficit)

SQRT2 = math.sqrt(2)


class TestBuildState:
    def test_vacuum(self):
        s12, s34 = build_state(NopaParams(0.0, 1.0), 4)
        np.testing.assert_allclose(s12.coeffs, [1, 0, 0, 0, 0])
        np.testing.assert_allclose(s34.coeffs, [1, 0, 0, 0, 0])

    def test_coefficients(self):
        s12, s34 = build_state(NopaParams(0.5, 0.0), 1)
        assert s12.coeffs[0] == pytest.approx(math.sqrt(0.75))
        assert s12.coeffs[1] == pytest.approx(0.5 * math.sqrt(0.75))
        s12, s34 = build_state(NopaParams(0.5, math.pi), 1)
        assert s34.coeffs[1] == pytest.approx(-0.5 * math.sqrt(0.75))

    def test_deficit(self):
        s12, _ = build_state(NopaParams(0.5, 0.0), 8)
        assert s12.deficit == pytest.approx(0.25 ** 9, rel=1e-6)
        assert state_deficit(build_state(NopaParams(0.5, 0.0), 8)) == pytest.approx(1 - (1 - 0.25 ** 9) ** 2)

    def test_rejects_small_nmax(self):
        with pytest.raises(InvalidParameterError):
            build_state(NopaParams(0.5), 0)


@pytest.mark.parametrize("k", range(9))
@pytest.mark.parametrize("angle", [0.0, math.pi / 8, -0.7, 2.3])
def test_rotation_paths_agree(k, angle):
    u1 = sector_rotation(k, angle, "expm")
    u2 = sector_rotation(k, angle, "binomial")
    np.testing.assert_allclose(u1, u2, atol=1e-12)
    np.testing.assert_allclose(u1 @ u1.T, np.eye(k + 1), atol=1e-12)


class TestRotateAndProject:
    def test_identity_rotation(self):
        lam = 0.4
        rp = rotate_and_project(build_state(NopaParams(lam, 0.3), 5), 0.0, 0.0)
        for n in range(4):
            for m in range(4):
                assert rp(n, n, m, m) == pytest.approx((1 - lam ** 2) ** 2 * lam ** (2 * (n + m)))
        assert rp(1, 0, 0, 1) == pytest.approx(0.0, abs=1e-15)
        assert rp(2, 1, 0, 1) == 0.0

    def test_quarter_rotation_swaps_modes(self):
        state = build_state(NopaParams(0.5, 0.7), 4)
        q0 = rotate_and_project(state, 0.0, 0.0).q
        q = rotate_and_project(state, math.pi / 2, 0.0).q
        np.testing.assert_allclose(q, q0.transpose(2, 1, 0, 3), atol=1e-14)

    def test_dual_path_at_pi_over_8(self):
        # both rotation constructions, full q table
        state = build_state(NopaParams(0.5, math.pi), 3)
        qa = rotate_and_project(state, math.pi / 8, math.pi / 8, method="expm").q
        qb = rotate_and_project(state, math.pi / 8, math.pi / 8, method="binomial").q
        np.testing.assert_allclose(qa, qb, atol=1e-14)
        assert qa.sum() <= 1.0 + 1e-12
        assert qa.min() >= 0.0

    def test_number_conservation(self):
        state = build_state(NopaParams(0.6, 1.0), 4)
        q = rotate_and_project(state, 0.37, -1.1).q
        i, l, m, n = np.indices(q.shape)
        assert np.all(q[(i + m) != (l + n)] == 0.0)

    def test_zero_angle_leaves_pair_marginal(self):
        state = build_state(NopaParams(0.6, 1.0), 4)
        q0 = rotate_and_project(state, 0.0, 0.0).q
        q = rotate_and_project(state, 0.9, 0.0).q
        # beta = 0: occupation distribution of modes (1, 3) unchanged
        np.testing.assert_allclose(q.sum(axis=(0, 2)), q0.sum(axis=(0, 2)), atol=1e-14)
        q = rotate_and_project(state, 0.0, 0.9).q
        np.testing.assert_allclose(q.sum(axis=(1, 3)), q0.sum(axis=(1, 3)), atol=1e-14)

    def test_conditionals_sum_to_one(self):
        rp = rotate_and_project(build_state(NopaParams(0.3, 2.0), 6), 0.4, 1.3)
        p = rp.conditional()
        assert p.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.all((p >= 0) & (p <= 1))


class TestCorrelation:
    @pytest.mark.parametrize("lam", [0.1, 0.5, 0.9])
    def test_maximal_setting(self, lam):
        assert correlation_exact(NopaParams(lam, math.pi), 0.0, 3 * math.pi / 8) == pytest.approx(SQRT2 / 2, abs=1e-12)

    def test_zero_angles(self):
        assert correlation_exact(NopaParams(0.42, 1.234), 0.0, 0.0) == pytest.approx(-1.0, abs=1e-14)

    def test_lambda_independent(self):
        a = correlation_exact(NopaParams(0.3, 0.8), 0.5, 1.1)
        b = correlation_exact(NopaParams(0.7, 0.8), 0.5, 1.1)
        assert a == pytest.approx(b, abs=1e-13)

    def test_degenerate_vacuum(self):
        with pytest.raises(DegenerateStateError):
            correlation_exact(NopaParams(0.0, 0.0), 0.1, 0.2)

    def test_requires_nmax_2(self):
        with pytest.raises(InvalidParameterError):
            correlation_exact(NopaParams(0.5), 0.1, 0.2, n_max=1)

    def test_grid_against_closed_form(self, rng):
        for _ in range(120):
            lam = rng.uniform(0.01, 0.95) * np.exp(1j * rng.uniform(0, 2 * math.pi))
            phi, a, b = rng.uniform(0, 2 * math.pi), *rng.uniform(-math.pi, math.pi, 2)
            params = NopaParams(lam, phi)
            deficit = state_deficit(build_state(params, 8))
            err = abs(correlation_exact(params, a, b) - correlation_closed_form(phi, a, b))
            assert err < max(10 * deficit, 1e-13)

    def test_period_pi_invariance(self):
        p = NopaParams(0.5, 0.9)
        for a, b in [(0.2, 0.7), (1.3, -0.4)]:
            c = correlation_exact(p, a, b)
            assert correlation_exact(p, a + math.pi, b) == pytest.approx(c, abs=1e-12)
            assert correlation_exact(p, a, b + math.pi) == pytest.approx(c, abs=1e-12)

    def test_pair_probability(self):
        lam = 0.5
        assert pair_probability_exact(NopaParams(lam, 1.0)) == pytest.approx(2 * (1 - lam ** 2) ** 2 * lam ** 2)


class TestBell:
    def test_tsirelson_point(self):
        assert bell_exact(NopaParams(0.5, math.pi), CHSH_ANGLES) == pytest.approx(2 * SQRT2, abs=1e-12)

    def test_no_violation_at_half_pi(self):
        assert bell_exact(NopaParams(0.5, math.pi / 2), CHSH_ANGLES) == pytest.approx(SQRT2, abs=1e-12)

    def test_all_zero_angles(self):
        assert bell_exact(NopaParams(0.5, 0.3), BellAngles(0, 0, 0, 0)) == pytest.approx(2.0, abs=1e-12)

    def test_never_exceeds_tsirelson(self, rng):
        for _ in range(300):
            angles = BellAngles(*rng.uniform(0, math.pi, 4))
            p = NopaParams(0.5, rng.uniform(0, 2 * math.pi))
            assert bell_exact(p, angles, n_max=2) <= 2 * SQRT2 + 1e-12

    def test_closed_form_matches(self):
        for phi in np.linspace(0, 2 * math.pi, 7):
            assert bell_exact(NopaParams(0.4, phi), CHSH_ANGLES) == pytest.approx(bell_closed_form(phi, CHSH_ANGLES), abs=1e-12)

    def test_beta_swap_symmetry(self):
        p = NopaParams(0.5, 2.2)
        a = BellAngles(0.3, 1.1, 0.9, 0.2)
        b = BellAngles(0.3, 0.2, 0.9, 1.1)
        assert bell_exact(p, a) == pytest.approx(bell_exact(p, b), abs=1e-14)
