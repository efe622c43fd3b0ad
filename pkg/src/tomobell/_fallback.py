"""Vectorized numpy implementation of the per-chunk accumulation.

Same contract as the compiled ``_core`` module; selected automatically when
the extension is not built.
"""
import math

import numpy as np

from .kernel import _profiles


def accumulate_chunk(x, phase, eta, cos2a, sin2a, cos2b, sin2b):
    """Sum the pair-probability integrand and one Bell-numerator integrand per angle pair.

    ``x`` and ``phase`` are ``(n, 4)`` arrays; the four angle arrays hold
    ``cos 2a, sin 2a, cos 2b, sin 2b`` for each requested ``(a, b)``.
    Returns a float64 array ``[sum_p11, sum_num_0, sum_num_1, ...]``; sums
    are correctly rounded (``math.fsum``).
    """
    x = np.asarray(x, dtype=np.float64)
    phase = np.asarray(phase, dtype=np.float64)
    k0, k1, r = _profiles(x, eta)
    p11 = (k1[:, 0] * k0[:, 2] + k0[:, 0] * k1[:, 2]) * (k1[:, 1] * k0[:, 3] + k0[:, 1] * k1[:, 3])
    diag_a = k1[:, 0] * k0[:, 2] - k0[:, 0] * k1[:, 2]
    off_a = 2.0 * r[:, 0] * r[:, 2] * np.cos(phase[:, 0] - phase[:, 2])
    diag_b = k0[:, 1] * k1[:, 3] - k1[:, 1] * k0[:, 3]
    off_b = 2.0 * r[:, 1] * r[:, 3] * np.cos(phase[:, 1] - phase[:, 3])
    out = np.empty(1 + len(cos2a))
    out[0] = math.fsum(p11)
    for k in range(len(cos2a)):
        num = (cos2a[k] * diag_a + sin2a[k] * off_a) * (cos2b[k] * diag_b + sin2b[k] * off_b)
        out[1 + k] = math.fsum(num)
    return out


def kernel_table(x, phase, eta):
    """``(k0, k1, Re K+, Im K+)`` for every entry of ``x``; shape ``x.shape + (4,)``."""
    k0, k1, r = _profiles(np.asarray(x, dtype=np.float64), eta)
    ph = np.asarray(phase, dtype=np.float64)
    return np.stack([k0, k1, r * np.cos(ph), -r * np.sin(ph)], axis=-1)
