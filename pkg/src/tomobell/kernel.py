"""Homodyne pattern functions for the Fock matrix elements with n, m <= 1.

For detector efficiency ``eta`` the estimator of ``|m><n|`` is

    R(x, phi) = int dk |k|/4 exp(k^2 D/2) <n| exp(i k x_phi) |m> exp(-i k x)

with ``D = (1 - eta) / (4 eta)`` and the quadrature scaled so the vacuum
variance is 1/4. The matrix elements of ``exp(i k x_phi)`` carry a factor
``exp(-k^2/8)``, so the integrand decays like ``exp(-g k^2)`` with
``g = (2 eta - 1) / (8 eta)``; ``g > 0`` requires ``eta > 1/2``.

The integrals reduce to Dawson's function ``F(y)`` with ``y = x / (2 sqrt(g))``:

    K0 = (1 - 2 y F) / (4 g)
    K1 = K0 - (1 - y^2 - F (3 y - 2 y^3)) / (16 g^2)
    K+ = exp(-i phi) (y + (1 - 2 y^2) F) / (8 g^(3/2))

``K+`` averages to ``<0|rho|1>``; the sign of its phase factor was fixed
against coherent states of known complex amplitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import dawsn

from .model import QuadBatch, QuadSample, check_eta, noise_variance

#: Sign of the LO-phase exponent in K+: K+ = exp(PHASE_SIGN * 1j * phi) * profile(x).
PHASE_SIGN = -1


def kernel_width(eta: float) -> float:
    """``g = 1/8 - D/2``, the Gaussian decay rate of the kernel integrand."""
    eta = check_eta(eta)
    return 0.125 - 0.5 * noise_variance(eta)


@dataclass(frozen=True)
class KernelValues:
    k0: float | np.ndarray
    k1: float | np.ndarray
    k_plus: complex | np.ndarray

    @property
    def k_minus(self):
        return np.conj(self.k_plus)


def _profiles(x, eta):
    g = kernel_width(eta)
    x = np.asarray(x, dtype=float)
    y = x / (2.0 * math.sqrt(g))
    f = dawsn(y)
    k0 = (1.0 - 2.0 * y * f) / (4.0 * g)
    k1 = k0 - (1.0 - y * y - f * (3.0 * y - 2.0 * y ** 3)) / (16.0 * g * g)
    r = (y + (1.0 - 2.0 * y * y) * f) / (8.0 * g ** 1.5)
    return k0, k1, r


def kernel_diag(n: int, x, eta: float):
    """Pattern function of ``|n><n|`` (n = 0 or 1); phase independent."""
    if n not in (0, 1):
        raise ValueError(f"only n = 0, 1 are supported, got {n}")
    k0, k1, _ = _profiles(x, eta)
    out = k0 if n == 0 else k1
    return float(out) if np.ndim(out) == 0 else out


def offdiag_profile(x, eta: float):
    """Real x-profile of ``K+``: ``K+(x, phi) = exp(-i phi) * offdiag_profile(x)``."""
    r = _profiles(x, eta)[2]
    return float(r) if np.ndim(r) == 0 else r


def kernel_offdiag(x, phi, eta: float):
    """``K+ = <0|K_eta(x - x_phi)|1>``; averages to ``<0|rho|1>``. Conjugate for ``K-``."""
    r = _profiles(x, eta)[2]
    out = np.exp(PHASE_SIGN * 1j * np.asarray(phi, dtype=float)) * r
    return complex(out) if np.ndim(out) == 0 else out


def kernel_event(sample: QuadSample | QuadBatch, eta: float) -> list[KernelValues]:
    """Kernel values for each of the four modes of one event (or a batch)."""
    if isinstance(sample, QuadSample):
        x, ph = np.array(sample.x), np.array(sample.phase)
        k0, k1, r = _profiles(x, eta)
        kp = np.exp(PHASE_SIGN * 1j * ph) * r
        return [KernelValues(float(k0[j]), float(k1[j]), complex(kp[j])) for j in range(4)]
    k0, k1, r = _profiles(sample.x, eta)
    kp = np.exp(PHASE_SIGN * 1j * sample.phase) * r
    return [KernelValues(k0[:, j], k1[:, j], kp[:, j]) for j in range(4)]


def kernel_by_quadrature(n: int, m: int, x: float, phi: float, eta: float) -> complex:
    """Pattern function of ``|m><n|`` by direct numerical k-integration.

    Slow; used to cross-check the closed forms. Returns the estimator of
    ``<n|rho|m>``.
    """
    g = kernel_width(eta)

    # <n| exp(i k x_phi) |m> = <n|D(a)|m> with a = i k e^{i phi} / 2, times e^{+|a|^2/2}
    # absorbed into exp(-g k^2) together with the efficiency factor
    def element(k):
        a = 0.5j * k * complex(math.cos(phi), math.sin(phi))
        if (n, m) == (0, 0):
            return 1.0
        if (n, m) == (1, 1):
            return 1.0 - abs(a) ** 2
        if (n, m) == (1, 0):
            return a
        if (n, m) == (0, 1):
            return -a.conjugate()
        raise ValueError("n, m must be 0 or 1")

    def integrand(k, part):
        v = abs(k) / 4.0 * math.exp(-g * k * k) * element(k) * complex(math.cos(k * x), -math.sin(k * x))
        return v.real if part == 0 else v.imag

    lim = math.sqrt(60.0 / g)
    re = integrate.quad(integrand, -lim, lim, args=(0,), limit=400, points=[0.0], epsabs=1e-12, epsrel=1e-10)[0]
    im = integrate.quad(integrand, -lim, lim, args=(1,), limit=400, points=[0.0], epsabs=1e-12, epsrel=1e-10)[0]
    return complex(re, im)
