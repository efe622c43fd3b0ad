"""Statistical self-checks: pattern-function unbiasedness and sampler goodness of fit."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .kernel import kernel_diag, kernel_offdiag
from .model import TWO_PI, noise_variance
from .sampler import joint_pdf, reference_elements, sample_pair, sample_single_mode

REFERENCE_STATES = {
    "vacuum": {},
    "coherent(0.5)": {"amplitude": 0.5},
    "coherent(0.5e^{i pi/3})": {"amplitude": 0.5 * complex(math.cos(math.pi / 3), math.sin(math.pi / 3))},
    "fock1": {},
    "twin-beam marginal": {"lam": 0.5},
}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _mode_data(rng, state: str, eta: float, n: int):
    spec = REFERENCE_STATES[state]
    if state == "twin-beam marginal":
        ph = rng.uniform(0.0, TWO_PI, (2, n))
        x, _ = sample_pair(rng, ph[0], ph[1], spec["lam"], eta, n)
        return x, ph[0]
    kind = "coherent" if state.startswith("coherent") else state
    return sample_single_mode(rng, kind, eta, n, amplitude=spec.get("amplitude", 0.0))


def exact_elements(state: str):
    """``(rho_00, rho_11, rho_01)`` of a named reference state."""
    spec = REFERENCE_STATES[state]
    if state == "twin-beam marginal":
        r2 = abs(spec["lam"]) ** 2
        return reference_elements("thermal", mean_photon=r2 / (1 - r2))
    kind = "coherent" if state.startswith("coherent") else state
    return reference_elements(kind, amplitude=spec.get("amplitude", 0.0))


def reconstruct(x, phi, eta: float):
    """Sample means and standard errors of the four kernel averages.

    Returns ``{"rho00": (mean, se), "rho11": ..., "re rho01": ..., "im rho01": ...}``.
    """
    n = len(x)
    kp = kernel_offdiag(x, phi, eta)
    out = {}
    for name, v in (("rho00", kernel_diag(0, x, eta)), ("rho11", kernel_diag(1, x, eta)),
                    ("re rho01", kp.real), ("im rho01", kp.imag)):
        out[name] = (float(np.mean(v)), float(np.std(v, ddof=1) / math.sqrt(n)))
    return out


def kernel_unbiasedness(states=("vacuum", "coherent(0.5)", "twin-beam marginal"),
                        etas=(1.0, 0.85, 0.65), n_samples: int = 10**6, seed: int = 0,
                        n_sigma: float = 3.0) -> list[Check]:
    checks = []
    ss = np.random.SeedSequence(seed)
    for state, child in zip(states, ss.spawn(len(states))):
        for eta, sub in zip(etas, child.spawn(len(etas))):
            rng = np.random.default_rng(sub)
            x, phi = _mode_data(rng, state, eta, n_samples)
            est = reconstruct(x, phi, eta)
            r00, r11, r01 = exact_elements(state)
            exact = {"rho00": r00, "rho11": r11, "re rho01": r01.real, "im rho01": r01.imag}
            for key, (mean, se) in est.items():
                dev = abs(mean - exact[key]) / se
                checks.append(Check(f"kernel {state} eta={eta:g} {key}", dev < n_sigma,
                                    f"{mean:.5f} +- {se:.5f} vs exact {exact[key]:.5f} ({dev:.2f} sigma)"))
    return checks


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(6)


def bin_probabilities(edges_i, edges_j, phi_i, phi_j, lam, eta) -> np.ndarray:
    """Probability of each rectangular bin under :func:`joint_pdf` (6x6 Gauss-Legendre per bin)."""
    def nodes(edges):
        lo, hi = edges[:-1, None], edges[1:, None]
        half = (hi - lo) / 2
        return lo + half * (_GL_NODES + 1), half * _GL_WEIGHTS

    xi, wi = nodes(np.asarray(edges_i, float))
    xj, wj = nodes(np.asarray(edges_j, float))
    # xi: (bins_i, 6), xj: (bins_j, 6)
    X = xi[:, None, :, None]
    Y = xj[None, :, None, :]
    dens = joint_pdf(X, Y, phi_i, phi_j, lam, eta)
    return np.einsum("abkl,ak,bl->ab", dens, wi, wj)


def pair_chi_square(rng, phi_i: float, phi_j: float, lam: complex, eta: float,
                    n_draws: int = 10**5, bins: int = 20, min_expected: float = 5.0):
    """2-d chi-square test of :func:`sample_pair` against :func:`joint_pdf`.

    Bins span +-4 marginal standard deviations; cells with expected count
    below ``min_expected`` are pooled with the region outside the grid.
    Returns ``(statistic, dof, p_value)``.
    """
    r2 = abs(lam) ** 2
    sd = math.sqrt(0.25 * (1 + r2) / (1 - r2) + noise_variance(eta))
    edges = np.linspace(-4 * sd, 4 * sd, bins + 1)
    probs = bin_probabilities(edges, edges, phi_i, phi_j, lam, eta)
    xi, xj = sample_pair(rng, phi_i, phi_j, lam, eta, n_draws)
    counts, _, _ = np.histogram2d(xi, xj, bins=[edges, edges])
    expected = probs * n_draws
    keep = expected >= min_expected
    pooled_exp = n_draws - expected[keep].sum()
    pooled_obs = n_draws - counts[keep].sum()
    obs = np.append(counts[keep], pooled_obs)
    exp = np.append(expected[keep], pooled_exp)
    if pooled_exp < min_expected:
        obs, exp = obs[:-1], exp[:-1]
        exp = exp * (obs.sum() / exp.sum())
    stat = float(np.sum((obs - exp) ** 2 / exp))
    dof = len(obs) - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def sampler_goodness_of_fit(n_params: int = 20, n_draws: int = 10**5, seed: int = 0,
                            p_min: float = 0.001) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for k in range(n_params):
        lam = rng.uniform(0.0, 0.8) * np.exp(1j * rng.uniform(0, TWO_PI))
        eta = rng.uniform(0.55, 1.0)
        phi_i, phi_j = rng.uniform(0, TWO_PI, 2)
        stat, dof, p = pair_chi_square(rng, phi_i, phi_j, lam, eta, n_draws)
        checks.append(Check(f"sampler chi2 #{k} |L|={abs(lam):.3f} eta={eta:.3f}", p > p_min,
                            f"chi2={stat:.1f} dof={dof} p={p:.4f}"))
    return checks


def vacuum_variance_checks(etas=(1.0, 0.85, 0.65), n_draws: int = 10**6, seed: int = 0,
                           rtol: float = 0.01) -> list[Check]:
    """Marginal variance of vacuum data equals ``1/4 + (1 - eta)/(4 eta)``."""
    rng = np.random.default_rng(seed)
    checks = []
    for eta in etas:
        ph = rng.uniform(0, TWO_PI, (2, n_draws))
        xi, xj = sample_pair(rng, ph[0], ph[1], 0.0, eta, n_draws)
        target = 0.25 + noise_variance(eta)
        for name, v in (("x_i", np.var(xi)), ("x_j", np.var(xj))):
            rel = abs(v / target - 1)
            checks.append(Check(f"vacuum variance eta={eta:g} {name}", rel < rtol,
                                f"{v:.5f} vs {target:.5f} (rel {rel:.2e})"))
    return checks
