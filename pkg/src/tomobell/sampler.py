"""Homodyne data from the twin-beam output state.

Each twin beam is a two-mode Gaussian state. For LO phases ``phi_i, phi_j``
the joint quadrature density is diagonal in ``s = x_i + x_j`` and
``t = x_i - x_j``, so sampling draws ``s`` and ``t`` independently. Detector
inefficiency adds independent Gaussian noise of variance ``(1 - eta)/(4 eta)``
to every quadrature.

Also here: single-mode reference states (vacuum, coherent, one-photon,
thermal) used to check the pattern functions, and the raw-sample file
format.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import (TWO_PI, VACUUM_VARIANCE, InvalidParameterError, NopaParams,
                    QuadBatch, QuadSample, check_eta, noise_variance)

#: Column order of raw sample dumps.
DUMP_COLUMNS = ("x1", "x2", "x3", "x4", "phi1", "phi2", "phi3", "phi4")
DUMP_MAGIC = b"TBQS0001"


@dataclass(frozen=True)
class PairPdfParams:
    z: complex
    d2_plus: float
    d2_minus: float
    delta2: float

    @classmethod
    def create(cls, phi_i: float, phi_j: float, lambda_eff: complex, eta: float) -> "PairPdfParams":
        z = complex(math.cos(phi_i + phi_j), -math.sin(phi_i + phi_j)) * complex(lambda_eff)
        a = 1.0 - abs(z) ** 2
        if a <= 0:
            raise InvalidParameterError(f"|lambda| must be < 1, got {abs(lambda_eff)}")
        return cls(z, abs(1 + z) ** 2 / a, abs(1 - z) ** 2 / a, noise_variance(eta))

    @property
    def var_sum(self) -> float:
        return (self.d2_plus + 4 * self.delta2) / 2

    @property
    def var_diff(self) -> float:
        return (self.d2_minus + 4 * self.delta2) / 2


def _pair_widths(phi_i, phi_j, lambda_eff, eta):
    lambda_eff = complex(lambda_eff)
    if abs(lambda_eff) >= 1:
        raise InvalidParameterError(f"|lambda| must be < 1, got {abs(lambda_eff)}")
    z = np.exp(-1j * (np.asarray(phi_i) + np.asarray(phi_j))) * lambda_eff
    a = 1.0 - abs(lambda_eff) ** 2
    d4 = 4.0 * noise_variance(eta)
    wp = np.abs(1 + z) ** 2 / a + d4
    wm = np.abs(1 - z) ** 2 / a + d4
    return wp, wm


def joint_pdf(x_i, x_j, phi_i, phi_j, lambda_eff: complex, eta: float):
    """Joint homodyne density of one twin beam at LO phases ``phi_i, phi_j``."""
    wp, wm = _pair_widths(phi_i, phi_j, lambda_eff, eta)
    s = np.asarray(x_i) + np.asarray(x_j)
    t = np.asarray(x_i) - np.asarray(x_j)
    out = 2.0 * np.exp(-s * s / wp - t * t / wm) / (np.pi * np.sqrt(wp * wm))
    return float(out) if np.ndim(out) == 0 else out


def sample_pair(rng: np.random.Generator, phi_i, phi_j, lambda_eff: complex, eta: float,
                size: int | None = None):
    """Draw ``(x_i, x_j)`` from :func:`joint_pdf`.

    Phases may be arrays (one per draw); ``size`` defaults to their length.
    """
    wp, wm = _pair_widths(phi_i, phi_j, lambda_eff, eta)
    shape = np.shape(wp) if size is None else tuple(np.atleast_1d(size))
    st = rng.standard_normal((2,) + shape)
    s = st[0] * np.sqrt(wp / 2)
    t = st[1] * np.sqrt(wm / 2)
    return (s + t) / 2, (s - t) / 2


def sample_events(rng: np.random.Generator, params: NopaParams, eta: float, size: int) -> QuadBatch:
    """``size`` detection events with independent uniform LO phases on [0, 2 pi).

    Draw order (part of the reproducibility contract): the ``(size, 4)``
    phase array, then the normals of the (0,1) beam, then of the (2,3) beam.
    """
    eta = check_eta(eta)
    phase = rng.uniform(0.0, TWO_PI, (size, 4))
    x = np.empty((size, 4))
    lam12, lam34 = params.lambda_pairs
    x[:, 0], x[:, 1] = sample_pair(rng, phase[:, 0], phase[:, 1], lam12, eta, size)
    x[:, 2], x[:, 3] = sample_pair(rng, phase[:, 2], phase[:, 3], lam34, eta, size)
    return QuadBatch(x, phase)


def sample_event(rng: np.random.Generator, params: NopaParams, eta: float) -> QuadSample:
    return sample_events(rng, params, eta, 1)[0]


# single-mode reference states --------------------------------------------------

def sample_single_mode(rng: np.random.Generator, state: str, eta: float, size: int,
                       amplitude: complex = 0.0, mean_photon: float = 0.0):
    """Homodyne data ``(x, phi)`` for a single-mode reference state.

    ``state`` is one of ``"vacuum"``, ``"coherent"`` (uses ``amplitude``),
    ``"fock1"`` or ``"thermal"`` (uses ``mean_photon``).
    """
    eta = check_eta(eta)
    phi = rng.uniform(0.0, TWO_PI, size)
    sd = math.sqrt(VACUUM_VARIANCE)
    if state == "vacuum":
        x = rng.normal(0.0, sd, size)
    elif state == "coherent":
        x = np.real(complex(amplitude) * np.exp(-1j * phi)) + rng.normal(0.0, sd, size)
    elif state == "thermal":
        x = rng.normal(0.0, sd * math.sqrt(2 * mean_photon + 1), size)
    elif state == "fock1":
        # |psi_1(x)|^2 ~ x^2 exp(-2x^2): radial law of a 3d Gaussian, with random sign
        r = np.linalg.norm(rng.normal(0.0, sd, (size, 3)), axis=1)
        x = r * rng.choice((-1.0, 1.0), size)
    else:
        raise ValueError(f"unknown reference state {state!r}")
    x = x + rng.normal(0.0, math.sqrt(noise_variance(eta)), size)
    return x, phi


def reference_elements(state: str, amplitude: complex = 0.0, mean_photon: float = 0.0):
    """Exact ``(rho_00, rho_11, rho_01)`` of a reference state."""
    if state == "vacuum":
        return 1.0, 0.0, 0j
    if state == "coherent":
        a = complex(amplitude)
        w = math.exp(-abs(a) ** 2)
        return w, w * abs(a) ** 2, w * a.conjugate()
    if state == "thermal":
        n = mean_photon
        return 1 / (1 + n), n / (1 + n) ** 2, 0j
    if state == "fock1":
        return 0.0, 1.0, 0j
    raise ValueError(f"unknown reference state {state!r}")


# raw dumps ---------------------------------------------------------------------

def write_samples(batch: QuadBatch, path, binary: bool = False, append: bool = False) -> None:
    """Write events as rows ``x1..x4, phi1..phi4`` (mode order a_V, b_H, a_H, b_V).

    Binary files start with an 8-byte magic and hold little-endian float64
    records of eight values each.
    """
    path = Path(path)
    rows = np.hstack([batch.x, batch.phase])
    if binary:
        new = not append or not path.exists() or path.stat().st_size == 0
        with open(path, "ab" if append else "wb") as fh:
            if new:
                fh.write(DUMP_MAGIC)
            fh.write(rows.astype("<f8").tobytes())
    else:
        new = not append or not path.exists() or path.stat().st_size == 0
        with open(path, "a" if append else "w", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(DUMP_COLUMNS)
            w.writerows([repr(float(v)) for v in row] for row in rows)


def read_samples(path) -> QuadBatch:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(DUMP_MAGIC))
        if head == DUMP_MAGIC:
            rows = np.frombuffer(fh.read(), dtype="<f8").reshape(-1, 8)
            return QuadBatch(rows[:, :4], rows[:, 4:])
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return QuadBatch(rows[:, :4], rows[:, 4:])
