import math

import numpy as np
import pytest
from scipy import integrate

from tomobell.model import InvalidParameterError, NopaParams, QuadBatch
from tomobell.sampler import (PairPdfParams, joint_pdf, read_samples, sample_event, sample_events,
                              sample_pair, write_samples)


class TestJointPdf:
    def test_vacuum_origin(self):
        assert joint_pdf(0, 0, 0.3, 1.1, 0.0, 1.0) == pytest.approx(2 / math.pi, rel=1e-14)

    def test_squeezed_origin(self):
        # d+^2 = 3, d-^2 = 1/3: the widths' product stays 1
        assert joint_pdf(0, 0, 0, 0, 0.5, 1.0) == pytest.approx(2 / math.pi, rel=1e-14)
        p = PairPdfParams.create(0, 0, 0.5, 1.0)
        assert p.d2_plus == pytest.approx(3.0)
        assert p.d2_minus == pytest.approx(1 / 3)
        assert p.var_sum == pytest.approx(1.5)

    def test_normalization_random_draws(self, rng):
        for _ in range(20):
            lam = rng.uniform(0, 0.7) * np.exp(1j * rng.uniform(0, 2 * math.pi))
            eta = rng.uniform(0.55, 1.0)
            phi_i, phi_j = rng.uniform(0, 2 * math.pi, 2)
            f = lambda y, x: joint_pdf(x, y, phi_i, phi_j, lam, eta)
            val, _ = integrate.dblquad(f, -8, 8, -8, 8, epsabs=1e-10, epsrel=1e-10)
            assert val == pytest.approx(1.0, abs=1e-6)

    def test_exchange_symmetry(self, rng):
        x, y = rng.normal(size=(2, 50))
        a = joint_pdf(x, y, 0.4, 1.9, 0.6 + 0.2j, 0.8)
        b = joint_pdf(y, x, 1.9, 0.4, 0.6 + 0.2j, 0.8)
        np.testing.assert_allclose(a, b, rtol=1e-14)

    def test_phase_covariance(self, rng):
        x, y = rng.normal(size=(2, 50))
        lam, delta = 0.55, 0.83
        a = joint_pdf(x, y, 0.4 + delta, 1.9 - delta, lam, 0.9)
        b = joint_pdf(x, y, 0.4, 1.9, lam, 0.9)
        np.testing.assert_allclose(a, b, rtol=1e-13)
        c = joint_pdf(x, y, 0.4 + delta, 1.9, lam * np.exp(1j * delta), 0.9)
        np.testing.assert_allclose(c, b, rtol=1e-13)

    def test_rejects_bad_gain(self):
        with pytest.raises(InvalidParameterError):
            joint_pdf(0, 0, 0, 0, 1.0, 1.0)
        # eta <= 1/2 is fine for the data; only the pattern functions diverge
        assert joint_pdf(0, 0, 0, 0, 0.5, 0.5) > 0


class TestSamplePair:
    def test_sum_variance(self, rng):
        xi, xj = sample_pair(rng, 0.0, 0.0, 0.5, 1.0, 10**6)
        assert np.var(xi + xj) == pytest.approx(1.5, rel=0.01)
        assert np.var(xi - xj) == pytest.approx(1 / 6, rel=0.01)

    def test_vacuum_variance(self, rng):
        xi, xj = sample_pair(rng, 0.0, 0.0, 0.0, 1.0, 10**6)
        assert abs(np.var(xi) - 0.25) < 0.001
        assert abs(np.var(xj) - 0.25) < 0.001

    def test_noise_variance(self, rng):
        xi, _ = sample_pair(rng, 0.0, 0.0, 0.0, 0.65, 10**6)
        assert np.var(xi) == pytest.approx(0.25 / 0.65, rel=0.01)

    def test_array_phases(self, rng):
        ph = rng.uniform(0, 2 * math.pi, (2, 1000))
        xi, xj = sample_pair(rng, ph[0], ph[1], 0.4, 0.9)
        assert xi.shape == xj.shape == (1000,)


class TestSampleEvents:
    def test_shapes_and_phase_range(self, rng, reference_params):
        b = sample_events(rng, reference_params, 0.85, 1000)
        assert b.x.shape == b.phase.shape == (1000, 4)
        assert b.phase.min() >= 0 and b.phase.max() < 2 * math.pi
        assert isinstance(sample_event(rng, reference_params, 0.85).x, tuple)

    def test_single_event_marginal_variance(self, rng):
        b = sample_events(rng, NopaParams(0.0), 0.65, 10**6)
        for k in range(4):
            assert np.var(b.x[:, k]) == pytest.approx(0.3846, rel=0.01)

    def test_beams_independent(self, rng):
        b = sample_events(rng, NopaParams(0.6, 0.4), 0.9, 10**6)
        # random LO phases: the only correlations sit inside a beam
        n = len(b)
        for i, j in [(0, 2), (0, 3), (1, 2), (1, 3)]:
            c = np.mean(b.x[:, i] * b.x[:, j])
            se = np.std(b.x[:, i] * b.x[:, j]) / math.sqrt(n)
            assert abs(c) < 4 * se

    def test_deterministic(self, reference_params):
        a = sample_events(np.random.default_rng(5), reference_params, 0.85, 500)
        b = sample_events(np.random.default_rng(5), reference_params, 0.85, 500)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.phase, b.phase)


@pytest.mark.parametrize("binary", [False, True])
def test_dump_round_trip(tmp_path, rng, reference_params, binary):
    b = sample_events(rng, reference_params, 0.85, 257)
    path = tmp_path / "dump"
    write_samples(b[:100], path, binary=binary)
    write_samples(b[100:], path, binary=binary, append=True)
    back = read_samples(path)
    assert isinstance(back, QuadBatch)
    np.testing.assert_array_equal(back.x, b.x)
    np.testing.assert_array_equal(back.phase, b.phase)


def test_csv_dump_header(tmp_path, rng, reference_params):
    path = tmp_path / "d.csv"
    write_samples(sample_events(rng, reference_params, 0.9, 3), path)
    assert path.read_text().splitlines()[0] == "x1,x2,x3,x4,phi1,phi2,phi3,phi4"
