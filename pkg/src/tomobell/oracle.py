"""Exact photon-number probabilities of the rotated four-mode state.

The polarization rotations conserve the photon number of the pair of modes
they act on, so the truncated computation is organised by photon-number
sector: in a sector with ``k`` photons shared by two modes the rotation is a
``(k+1) x (k+1)`` real orthogonal matrix. Two independent constructions of
that matrix are provided (matrix exponential of the generator, and the
binomial expansion of the rotated creation operators); they must agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .model import (BellAngles, DegenerateStateError, InvalidParameterError,
                    NopaParams, bell_combination)

DEFAULT_NMAX = 8


@dataclass(frozen=True, eq=False)
class TwinBeamAmplitudes:
    """Fock amplitudes ``c_n`` of ``sum_n c_n |n, n>``, truncated at ``n_max``."""

    lambda_eff: complex
    coeffs: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    @property
    def deficit(self) -> float:
        """Probability weight lost to truncation, ``1 - sum |c_n|^2``."""
        return max(0.0, 1.0 - float(np.sum(np.abs(self.coeffs) ** 2)))


def twin_beam(lambda_eff: complex, n_max: int) -> TwinBeamAmplitudes:
    lambda_eff = complex(lambda_eff)
    c0 = math.sqrt(1.0 - abs(lambda_eff) ** 2)
    coeffs = c0 * lambda_eff ** np.arange(n_max + 1)
    # 0**0 is 1 in numpy, so the vacuum amplitude is right even for lambda = 0
    return TwinBeamAmplitudes(lambda_eff, coeffs.astype(complex))


def build_state(params: NopaParams, n_max: int = DEFAULT_NMAX) -> tuple[TwinBeamAmplitudes, TwinBeamAmplitudes]:
    """Amplitudes of both twin beams: gain ``L`` on modes (0,1), ``L e^{i phi}`` on (2,3)."""
    if int(n_max) != n_max or n_max < 1:
        raise InvalidParameterError(f"n_max must be an integer >= 1, got {n_max}")
    lam12, lam34 = params.lambda_pairs
    return twin_beam(lam12, n_max), twin_beam(lam34, n_max)


def state_deficit(state: tuple[TwinBeamAmplitudes, TwinBeamAmplitudes]) -> float:
    """Truncation deficit of the product state."""
    w1 = 1.0 - state[0].deficit
    w2 = 1.0 - state[1].deficit
    return max(0.0, 1.0 - w1 * w2)


def _generator(k: int) -> np.ndarray:
    """``a^dag b - a b^dag`` on the sector ``|j, k-j>``, indexed by ``j``."""
    g = np.zeros((k + 1, k + 1))
    for j in range(k):
        # a^dag b |j, k-j> = sqrt(j+1) sqrt(k-j) |j+1, k-j-1>
        amp = math.sqrt((j + 1) * (k - j))
        g[j + 1, j] = amp
        g[j, j + 1] = -amp
    return g


def _rotation_expm(k: int, angle: float) -> np.ndarray:
    return expm(angle * _generator(k))


def _rotation_binomial(k: int, angle: float) -> np.ndarray:
    # exp(t G) a^dag exp(-t G) = a^dag cos t - b^dag sin t
    # exp(t G) b^dag exp(-t G) = b^dag cos t + a^dag sin t
    c, s = math.cos(angle), math.sin(angle)
    u = np.zeros((k + 1, k + 1))
    for j in range(k + 1):
        norm_in = math.sqrt(math.factorial(j) * math.factorial(k - j))
        # (a c - b s)^j (b c + a s)^(k-j), collect a^p b^(k-p)
        for r in range(j + 1):
            for t in range(k - j + 1):
                p = r + (k - j - t)
                coef = (math.comb(j, r) * c ** r * (-s) ** (j - r)
                        * math.comb(k - j, t) * c ** t * s ** (k - j - t))
                u[p, j] += coef * math.sqrt(math.factorial(p) * math.factorial(k - p)) / norm_in
    return u


@lru_cache(maxsize=4096)
def _rotation_cached(k: int, angle: float, method: str) -> np.ndarray:
    if method == "expm":
        u = _rotation_expm(k, angle)
    elif method == "binomial":
        u = _rotation_binomial(k, angle)
    else:
        raise ValueError(f"unknown rotation method {method!r}")
    u.setflags(write=False)
    return u


def sector_rotation(k: int, angle: float, method: str = "expm") -> np.ndarray:
    """Matrix of ``exp[angle (a^dag b - a b^dag)]`` on the ``k``-photon sector.

    Basis state ``j`` is ``|j, k-j>`` (``j`` photons in the first mode).
    """
    return _rotation_cached(int(k), float(angle), method)


@dataclass(frozen=True, eq=False)
class RotatedJointProbabilities:
    """Photon-number distribution ``q[i, l, m, n]`` of the rotated state.

    Indices follow the package mode order (a_V, b_H, a_H, b_V). Occupations
    run up to ``2 n_max`` because the rotation moves photons between modes.
    """

    q: np.ndarray
    alpha: float
    beta: float
    deficit: float

    def __call__(self, i: int, l: int, m: int, n: int) -> float:
        d = self.q.shape[0]
        if max(i, l, m, n) >= d or min(i, l, m, n) < 0:
            return 0.0
        return float(self.q[i, l, m, n])

    @property
    def pair_probability(self) -> float:
        """P(1,1): one photon on each side, any polarization."""
        return sum(self(n, 1 - m, 1 - n, m) for n in (0, 1) for m in (0, 1))

    def conditional(self) -> np.ndarray:
        """``p[n, m] = q(n, 1-m, 1-n, m) / P(1,1)``."""
        p11 = self.pair_probability
        if p11 <= 0.0:
            raise DegenerateStateError("no photon pairs: P(1,1) = 0")
        return np.array([[self(n, 1 - m, 1 - n, m) / p11 for m in (0, 1)] for n in (0, 1)])


def rotate_and_project(state: tuple[TwinBeamAmplitudes, TwinBeamAmplitudes],
                       alpha: float, beta: float, n_max: int | None = None,
                       method: str = "expm") -> RotatedJointProbabilities:
    """Photon-number probabilities after rotating modes (0,2) by ``alpha`` and (1,3) by ``beta``.

    The (0,2) rotation is ``exp[alpha (a_V^dag a_H - a_V a_H^dag)]``; the (1,3)
    one is ``exp[beta (b_V^dag b_H - b_V b_H^dag)]``, i.e. the same form with
    the roles of the H and V modes exchanged.
    """
    pair12, pair34 = state
    if n_max is None:
        n_max = pair12.n_max
    c = pair12.coeffs[: n_max + 1]
    d = pair34.coeffs[: n_max + 1]
    dim = 2 * n_max + 1
    q = np.zeros((dim, dim, dim, dim))
    for k in range(2 * n_max + 1):
        a_lo, a_hi = max(0, k - n_max), min(k, n_max)
        src = np.arange(a_lo, a_hi + 1)
        # source |a, a, k-a, k-a>; sector index = photons in mode 0 (resp. mode 1)
        amp = c[src] * d[k - src]
        r13 = sector_rotation(k, alpha, method)[:, src]
        # b_V plays the "first mode" role: in mode-1 indexing the angle flips sign
        r24 = sector_rotation(k, -beta, method)[:, src]
        out = (r13 * amp) @ r24.T  # out[i, l]
        prob = np.abs(out) ** 2
        i = np.arange(k + 1)
        q[i[:, None], i[None, :], (k - i)[:, None], (k - i)[None, :]] = prob
    return RotatedJointProbabilities(q, float(alpha), float(beta), state_deficit((pair12, pair34)))


def correlation_exact(params: NopaParams, alpha: float, beta: float,
                      n_max: int = DEFAULT_NMAX, method: str = "expm") -> float:
    """``C = p(1,1) + p(0,0) - p(0,1) - p(1,0)`` from the truncated state."""
    if n_max < 2:
        raise InvalidParameterError(f"n_max must be >= 2, got {n_max}")
    rp = rotate_and_project(build_state(params, n_max), alpha, beta, n_max, method)
    p = rp.conditional()
    return float(p[1, 1] + p[0, 0] - p[0, 1] - p[1, 0])


def pair_probability_exact(params: NopaParams, n_max: int = DEFAULT_NMAX) -> float:
    """P(1,1); independent of the rotation angles."""
    return rotate_and_project(build_state(params, n_max), 0.0, 0.0, n_max).pair_probability


def bell_exact(params: NopaParams, angles: BellAngles, n_max: int = DEFAULT_NMAX) -> float:
    cs = [correlation_exact(params, a, b, n_max) for a, b in angles.pairs()]
    return float(bell_combination(*cs))


def correlation_closed_form(phi: float, alpha: float, beta: float):
    """Quantum prediction ``cos(phi) sin2a sin2b - cos2a cos2b``."""
    return (np.cos(phi) * np.sin(2 * alpha) * np.sin(2 * beta)
            - np.cos(2 * alpha) * np.cos(2 * beta))


def bell_closed_form(phi: float, angles: BellAngles) -> float:
    cs = [correlation_closed_form(phi, a, b) for a, b in angles.pairs()]
    return float(bell_combination(*cs))
