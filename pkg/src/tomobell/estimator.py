"""Block-statistics estimation of P(1,1), C(alpha, beta) and the Bell statistic B.

Both P(1,1) and the numerator of C are plain averages of per-event
integrands built from the pattern functions of the four modes. C is their
ratio, so it is nonlinear in the data: the central value is always the
ratio of full-data averages, and the error comes from the scatter of the
same statistic recomputed on equal-sized blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backend import get_backend
from .kernel import KernelValues, kernel_event
from .model import (DEFAULT_BLOCKS, BellAngles, BlockedEstimate, ConventionError,
                    IllConditionedDenominatorError, InvalidParameterError, QuadBatch,
                    bell_combination, check_eta)

#: Events handed to the hot loop per call.
CHUNK = 1 << 16


def p11_integrand(kv: Sequence[KernelValues]):
    """``(K1^1 K0^3 + K0^1 K1^3)(K1^2 K0^4 + K0^2 K1^4)``; averages to P(1,1)."""
    m1, m2, m3, m4 = kv
    return (m1.k1 * m3.k0 + m1.k0 * m3.k1) * (m2.k1 * m4.k0 + m2.k0 * m4.k1)


def c_numerator_integrand(kv: Sequence[KernelValues], alpha: float, beta: float, rtol: float = 1e-9):
    """Integrand whose average is ``C(alpha, beta) * P(1,1)``.

    Product of the alpha bracket (modes 1, 3) and the beta bracket (modes 2, 4).
    The off-diagonal combinations ``K+ K- + K- K+`` are real for a consistent
    kernel; a residual imaginary part raises :class:`ConventionError`.
    """
    m1, m2, m3, m4 = kv
    a = (math.cos(2 * alpha) * (m1.k1 * m3.k0 - m1.k0 * m3.k1)
         + math.sin(2 * alpha) * (m1.k_plus * m3.k_minus + m1.k_minus * m3.k_plus))
    b = (math.cos(2 * beta) * (m2.k0 * m4.k1 - m2.k1 * m4.k0)
         + math.sin(2 * beta) * (m2.k_plus * m4.k_minus + m2.k_minus * m4.k_plus))
    val = a * b
    imag = np.abs(np.imag(val))
    scale = np.maximum(np.abs(a) * np.abs(b), np.finfo(float).tiny)
    if np.any(imag > rtol * scale):
        raise ConventionError("numerator integrand has an imaginary part: kernel phase convention broken")
    re = np.real(val)
    return float(re) if np.ndim(re) == 0 else re


def _angle_arrays(angle_pairs):
    a = np.array([p[0] for p in angle_pairs], dtype=float)
    b = np.array([p[1] for p in angle_pairs], dtype=float)
    return (np.ascontiguousarray(np.cos(2 * a)), np.ascontiguousarray(np.sin(2 * a)),
            np.ascontiguousarray(np.cos(2 * b)), np.ascontiguousarray(np.sin(2 * b)))


def chunk_sums(batch: QuadBatch, eta: float, angle_pairs, backend: str | None = None) -> np.ndarray:
    """Compensated sums ``[sum P11-integrand, sum numerator(a_k, b_k) ...]`` over ``batch``."""
    impl = get_backend(backend)
    return impl.accumulate_chunk(batch.x, batch.phase, float(eta), *_angle_arrays(angle_pairs))


@dataclass
class EventAccumulator:
    """Per-block partial sums of the estimator integrands.

    Block ``n_blocks`` is the remainder: it enters full-data averages but
    not the block scatter. Partial sums are combined with ``math.fsum``, so
    the totals do not depend on the order partials were added or merged.
    """

    angle_pairs: tuple[tuple[float, float], ...]
    n_blocks: int
    partials: dict[int, list[np.ndarray]] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.angle_pairs = tuple((float(a), float(b)) for a, b in self.angle_pairs)
        if self.n_blocks < 1:
            raise InvalidParameterError("n_blocks must be >= 1")

    @property
    def remainder_block(self) -> int:
        return self.n_blocks

    @property
    def count(self) -> int:
        return sum(self.counts.values())

    def add_sums(self, block: int, sums: np.ndarray, count: int) -> None:
        if not 0 <= block <= self.n_blocks:
            raise IndexError(f"block {block} out of range")
        sums = np.asarray(sums, dtype=float)
        if sums.shape != (1 + len(self.angle_pairs),):
            raise ValueError(f"expected {1 + len(self.angle_pairs)} sums, got {sums.shape}")
        self.partials.setdefault(block, []).append(sums)
        self.counts[block] = self.counts.get(block, 0) + int(count)

    def add_events(self, block: int, batch: QuadBatch, eta: float, backend: str | None = None) -> None:
        for start in range(0, len(batch), CHUNK):
            part = batch[start:start + CHUNK]
            self.add_sums(block, chunk_sums(part, eta, self.angle_pairs, backend), len(part))

    def merge(self, other: "EventAccumulator") -> "EventAccumulator":
        if other.angle_pairs != self.angle_pairs or other.n_blocks != self.n_blocks:
            raise ValueError("cannot merge accumulators with different layouts")
        out = EventAccumulator(self.angle_pairs, self.n_blocks)
        for acc in (self, other):
            for b, parts in acc.partials.items():
                for p in parts:
                    out.partials.setdefault(b, []).append(p)
            for b, c in acc.counts.items():
                out.counts[b] = out.counts.get(b, 0) + c
        return out

    def _fsum(self, parts) -> np.ndarray:
        if not parts:
            return np.zeros(1 + len(self.angle_pairs))
        stacked = np.array(parts)
        return np.array([math.fsum(stacked[:, j]) for j in range(stacked.shape[1])])

    def total_sums(self) -> np.ndarray:
        return self._fsum([p for b in sorted(self.partials) for p in self.partials[b]])

    def block_sums(self) -> tuple[np.ndarray, np.ndarray]:
        """``(sums[n_blocks, 1 + npairs], counts[n_blocks])`` of the regular blocks."""
        sums = np.array([self._fsum(self.partials.get(b, [])) for b in range(self.n_blocks)])
        counts = np.array([self.counts.get(b, 0) for b in range(self.n_blocks)])
        return sums, counts


@dataclass(frozen=True)
class CorrelationSummary:
    p11: BlockedEstimate
    correlations: tuple[BlockedEstimate, ...]
    block_correlations: np.ndarray  # (n_blocks, npairs)


def summarize(acc: EventAccumulator) -> CorrelationSummary:
    """P(1,1) and every requested C, central values from the full data."""
    n = acc.count
    if acc.n_blocks < 2:
        raise InvalidParameterError("block errors need at least 2 blocks")
    sums, counts = acc.block_sums()
    if np.any(counts == 0) or np.any(counts != counts[0]):
        raise InvalidParameterError(f"blocks must be non-empty and equal-sized, got counts {counts.tolist()}")
    total = acc.total_sums()
    nb = acc.n_blocks

    p11_full = total[0] / n
    p11_blocks = sums[:, 0] / counts
    p11_err = float(np.std(p11_blocks, ddof=1) / math.sqrt(nb))
    if not p11_full > 0 or p11_full <= p11_err:
        raise IllConditionedDenominatorError(
            f"P(1,1) estimate {p11_full:.4g} +- {p11_err:.3g} is not significantly positive; "
            "more data needed or the state has no photon pairs")

    c_full = total[1:] / total[0]
    c_blocks = sums[:, 1:] / sums[:, :1]
    c_err = np.std(c_blocks, axis=0, ddof=1) / math.sqrt(nb)
    cors = tuple(BlockedEstimate(float(v), float(e), nb, n) for v, e in zip(c_full, c_err))
    return CorrelationSummary(BlockedEstimate(float(p11_full), p11_err, nb, n), cors, c_blocks)


@dataclass(frozen=True)
class BellSummary:
    bell: BlockedEstimate
    correlations: tuple[BlockedEstimate, ...]  # in BellAngles.pairs() order
    p11: BlockedEstimate


def summarize_bell(acc: EventAccumulator) -> BellSummary:
    """B from the first four angle pairs of ``acc`` (``BellAngles.pairs()`` order)."""
    if len(acc.angle_pairs) < 4:
        raise ValueError("the accumulator must hold the four Bell angle pairs")
    cs = summarize(acc)
    full = bell_combination(*(c.value for c in cs.correlations[:4]))
    blocks = bell_combination(*(cs.block_correlations[:, k] for k in range(4)))
    err = float(np.std(blocks, ddof=1) / math.sqrt(acc.n_blocks))
    return BellSummary(BlockedEstimate(float(full), err, acc.n_blocks, acc.count),
                       cs.correlations[:4], cs.p11)


def accumulate(events: QuadBatch, angle_pairs, eta: float, n_blocks: int = DEFAULT_BLOCKS,
               backend: str | None = None) -> EventAccumulator:
    """Split ``events`` into ``n_blocks`` contiguous equal blocks (+ trailing remainder)."""
    eta = check_eta(eta)
    m = len(events)
    if n_blocks < 2 or m < n_blocks:
        raise InvalidParameterError(f"need n_blocks >= 2 and at least n_blocks events (got {m}, {n_blocks})")
    size = m // n_blocks
    acc = EventAccumulator(angle_pairs, n_blocks)
    for b in range(n_blocks):
        acc.add_events(b, events[b * size:(b + 1) * size], eta, backend)
    if m % n_blocks:
        acc.add_events(n_blocks, events[n_blocks * size:], eta, backend)
    return acc


def estimate_correlation(events: QuadBatch, alpha: float, beta: float, eta: float,
                         n_blocks: int = DEFAULT_BLOCKS) -> BlockedEstimate:
    return summarize(accumulate(events, [(alpha, beta)], eta, n_blocks)).correlations[0]


def estimate_p11(events: QuadBatch, eta: float, n_blocks: int = DEFAULT_BLOCKS) -> BlockedEstimate:
    return summarize(accumulate(events, [(0.0, 0.0)], eta, n_blocks)).p11


def estimate_bell(events: QuadBatch, angles: BellAngles, eta: float,
                  n_blocks: int = DEFAULT_BLOCKS) -> BlockedEstimate:
    """B with all four settings evaluated on every event of the same stream."""
    return summarize_bell(accumulate(events, angles.pairs(), eta, n_blocks)).bell


def integrands(events: QuadBatch, eta: float, angle_pairs) -> tuple[np.ndarray, np.ndarray]:
    """Per-event P11 and numerator integrands via the scalar-formula path (slow, for checks)."""
    kv = kernel_event(events, check_eta(eta))
    p = p11_integrand(kv)
    nums = np.stack([c_numerator_integrand(kv, a, b) for a, b in angle_pairs], axis=1)
    return p, nums
