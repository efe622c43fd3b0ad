"""Domain types, parameter conversions and run-configuration validation.

Mode ordering used everywhere in the package::

    index  0      1      2      3
    mode   a_V    b_H    a_H    b_V

Modes (0, 1) form the first twin beam, modes (2, 3) the second one. The
quadrature convention is ``x_phi = (a exp(-i phi) + a^dag exp(i phi)) / 2``,
so the vacuum quadrature variance is :data:`VACUUM_VARIANCE`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: Quadrature variance of the vacuum state.
VACUUM_VARIANCE = 0.25

#: Default number of statistical blocks.
DEFAULT_BLOCKS = 20


class TomoBellError(Exception):
    """Base class of all package errors."""


class InvalidParameterError(TomoBellError, ValueError):
    pass


class KernelDivergenceError(InvalidParameterError):
    """Efficiency at or below 1/2, where the pattern functions are unbounded."""


class ConfigError(InvalidParameterError):
    """A run configuration failed validation.

    ``errors`` holds every violation found, not just the first.
    """

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NumericalError(TomoBellError, ArithmeticError):
    pass


class DegenerateStateError(NumericalError):
    """The state carries no photon pairs, so conditional probabilities are undefined."""


class IllConditionedDenominatorError(NumericalError):
    """The estimated pair probability P(1,1) cannot be told apart from zero."""


class ConventionError(NumericalError):
    """An estimator integrand acquired an imaginary part (kernel phase bug)."""


def mean_photon_number(lam_abs: float) -> float:
    """Mean photon number per mode, ``|L|^2 / (1 - |L|^2)``."""
    r2 = float(lam_abs) ** 2
    if not r2 < 1.0:
        raise InvalidParameterError(f"|lambda| must be < 1, got {lam_abs}")
    return r2 / (1.0 - r2)


def lambda_from_mean_photon(n_mean: float) -> float:
    """Inverse of :func:`mean_photon_number`: ``sqrt(N / (1 + N))``."""
    n_mean = float(n_mean)
    if not math.isfinite(n_mean) or n_mean < 0:
        raise InvalidParameterError(f"mean photon number must be finite and >= 0, got {n_mean}")
    return math.sqrt(n_mean / (1.0 + n_mean))


def check_eta(eta: float) -> float:
    eta = float(eta)
    if not math.isfinite(eta) or eta <= 0.5:
        raise KernelDivergenceError(f"kernel divergence: eta must exceed 0.5, got {eta}")
    if eta > 1.0:
        raise InvalidParameterError(f"eta must not exceed 1, got {eta}")
    return eta


def noise_variance(eta: float) -> float:
    """Extra quadrature variance from detector inefficiency, ``(1 - eta) / (4 eta)``."""
    eta = float(eta)
    if not 0.0 < eta <= 1.0:
        raise InvalidParameterError(f"eta must lie in (0, 1], got {eta}")
    return (1.0 - eta) / (4.0 * eta)


@dataclass(frozen=True)
class NopaParams:
    """Output-state parameters of the parametric amplifier.

    ``lam`` is the complex gain of the first twin beam; the second twin beam
    carries ``lam * exp(i phi)``.
    """

    lam: complex
    phi: float = 0.0

    def __post_init__(self):
        lam = complex(self.lam)
        if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
            raise InvalidParameterError("lambda must be finite")
        if abs(lam) >= 1.0:
            raise InvalidParameterError(f"non-normalizable state: |lambda| = {abs(lam)} >= 1")
        if not math.isfinite(self.phi):
            raise InvalidParameterError("crystal phase must be finite")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "phi", float(self.phi))

    @classmethod
    def from_mean_photon(cls, n_mean: float, phi: float = 0.0) -> "NopaParams":
        return cls(lambda_from_mean_photon(n_mean), phi)

    @property
    def mean_photon(self) -> float:
        return mean_photon_number(abs(self.lam))

    @property
    def lambda_pairs(self) -> tuple[complex, complex]:
        """Effective gains of the (0, 1) and (2, 3) twin beams."""
        return self.lam, self.lam * complex(math.cos(self.phi), math.sin(self.phi))


@dataclass(frozen=True)
class BellAngles:
    alpha: float
    beta: float
    alpha_prime: float
    beta_prime: float

    def __post_init__(self):
        for name in ("alpha", "beta", "alpha_prime", "beta_prime"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    def pairs(self) -> tuple[tuple[float, float], ...]:
        """The four (alpha, beta) settings, in the order they enter B:
        ``|C(a,b) - C(a,b')| + |C(a',b') + C(a',b)|``."""
        return (
            (self.alpha, self.beta),
            (self.alpha, self.beta_prime),
            (self.alpha_prime, self.beta_prime),
            (self.alpha_prime, self.beta),
        )

    def reduced(self) -> "BellAngles":
        """Angles reduced modulo pi (rotations enter only through 2*theta)."""
        return BellAngles(*(a % math.pi for a in
                            (self.alpha, self.beta, self.alpha_prime, self.beta_prime)))


#: Standard CHSH setting: maximal violation at phi = pi.
CHSH_ANGLES = BellAngles(0.0, 3 * math.pi / 8, math.pi / 4, math.pi / 8)


def bell_combination(c_ab, c_abp, c_apbp, c_apb):
    """``|C(a,b) - C(a,b')| + |C(a',b') + C(a',b)|``; works on arrays too."""
    return np.abs(c_ab - c_abp) + np.abs(c_apbp + c_apb)


@dataclass(frozen=True)
class QuadSample:
    """One detection event: four quadrature values and their LO phases."""

    x: tuple[float, float, float, float]
    phase: tuple[float, float, float, float]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        ph = tuple(float(v) for v in self.phase)
        if len(x) != 4 or len(ph) != 4:
            raise InvalidParameterError("a sample needs exactly four (x, phase) pairs")
        if not all(math.isfinite(v) for v in x + ph):
            raise InvalidParameterError("sample values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "phase", ph)


@dataclass(frozen=True, eq=False)
class QuadBatch:
    """Many events at once, as ``(n, 4)`` float64 arrays (C-contiguous)."""

    x: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        ph = np.ascontiguousarray(self.phase, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != 4 or ph.shape != x.shape:
            raise InvalidParameterError(f"expected matching (n, 4) arrays, got {x.shape} and {ph.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "phase", ph)

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, idx) -> "QuadBatch | QuadSample":
        if isinstance(idx, (int, np.integer)):
            return QuadSample(tuple(self.x[idx]), tuple(self.phase[idx]))
        return QuadBatch(self.x[idx], self.phase[idx])

    @classmethod
    def from_samples(cls, samples: Sequence[QuadSample]) -> "QuadBatch":
        return cls(np.array([s.x for s in samples], dtype=float).reshape(-1, 4),
                   np.array([s.phase for s in samples], dtype=float).reshape(-1, 4))

    @classmethod
    def concatenate(cls, batches: Sequence["QuadBatch"]) -> "QuadBatch":
        return cls(np.concatenate([b.x for b in batches]), np.concatenate([b.phase for b in batches]))


@dataclass(frozen=True)
class BlockedEstimate:
    """Central value from the full data set, error from block-to-block scatter."""

    value: float
    std_error: float
    n_blocks: int
    n_samples: int

    def __post_init__(self):
        if not self.std_error >= 0:
            raise InvalidParameterError(f"std_error must be >= 0, got {self.std_error}")
        if self.n_blocks < 1 or self.n_samples < 1:
            raise InvalidParameterError("n_blocks and n_samples must be positive")

    def sigmas_from(self, reference: float) -> float:
        """Distance to ``reference`` in units of the standard error."""
        if self.std_error == 0:
            return math.inf if self.value != reference else 0.0
        return abs(self.value - reference) / self.std_error

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error,
                "n_blocks": self.n_blocks, "n_samples": self.n_samples}

    @classmethod
    def from_dict(cls, d: dict) -> "BlockedEstimate":
        return cls(float(d["value"]), float(d["std_error"]), int(d["n_blocks"]), int(d["n_samples"]))


@dataclass(frozen=True)
class SweepSpec:
    variable: str  # "phi" or "eta"
    values: tuple[float, ...]

    @classmethod
    def linspace(cls, variable: str, start: float, stop: float, steps: int) -> "SweepSpec":
        if steps < 1:
            raise ConfigError([f"sweep steps must be >= 1, got {steps}"])
        return cls(variable, tuple(float(v) for v in np.linspace(start, stop, steps)))

    def to_dict(self) -> dict:
        return {"variable": self.variable, "values": list(self.values)}


@dataclass(frozen=True)
class RunConfig:
    params: NopaParams
    angles: BellAngles
    eta: float
    n_samples: int
    n_blocks: int = DEFAULT_BLOCKS
    seed: int = 0
    workers: int = 1
    output_path: Optional[str] = None
    sweep: Optional[SweepSpec] = None

    def with_point(self, variable: str, value: float) -> "RunConfig":
        if variable == "phi":
            return replace(self, params=NopaParams(self.params.lam, value % TWO_PI), sweep=None)
        if variable == "eta":
            return replace(self, eta=check_eta(value), sweep=None)
        raise ConfigError([f"unknown sweep variable {variable!r}"])

    def to_dict(self) -> dict:
        lam = self.params.lam
        return {
            "lambda": [lam.real, lam.imag],
            "crystal_phase": self.params.phi,
            "mean_photon": self.params.mean_photon,
            "alpha": self.angles.alpha, "beta": self.angles.beta,
            "alpha2": self.angles.alpha_prime, "beta2": self.angles.beta_prime,
            "eta": self.eta,
            "samples": self.n_samples, "blocks": self.n_blocks,
            "seed": self.seed, "workers": self.workers,
            "out": self.output_path,
            "sweep": None if self.sweep is None else self.sweep.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        sweep = d.get("sweep")
        return cls(
            params=NopaParams(complex(*d["lambda"]), d["crystal_phase"]),
            angles=BellAngles(d["alpha"], d["beta"], d["alpha2"], d["beta2"]),
            eta=d["eta"], n_samples=d["samples"], n_blocks=d["blocks"],
            seed=d["seed"], workers=d["workers"], output_path=d.get("out"),
            sweep=None if sweep is None else SweepSpec(sweep["variable"], tuple(sweep["values"])),
        )


def validate_run_config(params, angles, eta, n_samples, n_blocks, seed, *,
                        workers: int = 1, output_path: Optional[str] = None,
                        sweep: Optional[SweepSpec] = None) -> RunConfig:
    """Check a complete run setup and return it in canonical form.

    ``params`` may be a :class:`NopaParams` or a ``(lambda, phi)`` tuple, so
    that an out-of-range gain is reported together with the other problems
    instead of failing at construction. Raises :class:`ConfigError` listing
    every violation.
    """
    errors: list[str] = []

    if isinstance(params, NopaParams):
        lam, phi = params.lam, params.phi
    else:
        lam, phi = params
    try:
        lam = complex(lam)
        phi = float(phi)
        if not (math.isfinite(lam.real) and math.isfinite(lam.imag)):
            errors.append("lambda must be finite")
        elif abs(lam) >= 1.0:
            errors.append(f"non-normalizable state: |lambda| = {abs(lam):g} must be < 1")
        if not math.isfinite(phi):
            errors.append("crystal phase must be finite")
    except (TypeError, ValueError):
        errors.append(f"cannot interpret lambda/phase {params!r}")
        lam, phi = 0j, 0.0

    if not isinstance(angles, BellAngles):
        try:
            angles = BellAngles(*angles)
        except (TypeError, ValueError) as exc:
            errors.append(f"bad angles: {exc}")
            angles = None

    try:
        eta = float(eta)
        if not math.isfinite(eta) or eta <= 0.5:
            errors.append(f"kernel divergence: eta = {eta:g} must exceed 0.5")
        elif eta > 1.0:
            errors.append(f"eta = {eta:g} must not exceed 1")
    except (TypeError, ValueError):
        errors.append(f"cannot interpret eta {eta!r}")

    ints = {}
    for name, value in (("n_samples", n_samples), ("n_blocks", n_blocks),
                        ("seed", seed), ("workers", workers)):
        if isinstance(value, bool) or int(value) != value:
            errors.append(f"{name} must be an integer, got {value!r}")
        ints[name] = int(value)
    if ints["n_blocks"] < 2:
        errors.append(f"n_blocks = {ints['n_blocks']} must be >= 2")
    if ints["n_samples"] < ints["n_blocks"]:
        errors.append(f"n_samples = {ints['n_samples']} must be >= n_blocks = {ints['n_blocks']}")
    if ints["seed"] < 0:
        errors.append("seed must be non-negative")
    if ints["workers"] < 1:
        errors.append("workers must be >= 1")

    if sweep is not None:
        if sweep.variable not in ("phi", "eta"):
            errors.append(f"unknown sweep variable {sweep.variable!r}")
        if not sweep.values:
            errors.append("sweep has no points")
        if sweep.variable == "eta":
            bad = [v for v in sweep.values if not 0.5 < v <= 1.0]
            if bad:
                errors.append(f"kernel divergence: eta sweep values {bad} outside (0.5, 1]")
        if not all(math.isfinite(v) for v in sweep.values):
            errors.append("sweep values must be finite")

    if errors:
        raise ConfigError(errors)

    return RunConfig(
        params=NopaParams(lam, phi % TWO_PI),
        angles=angles.reduced(),
        eta=eta,
        n_samples=ints["n_samples"],
        n_blocks=ints["n_blocks"],
        seed=ints["seed"],
        workers=ints["workers"],
        output_path=output_path,
        sweep=sweep,
    )
