"""Cross-check battery behind ``subray-qfi validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .photostat import prob_fisher_term, series_oracle_fisher
from .psf import (
    DEFAULT_CONFIG,
    OverlapFunctionals,
    PointSpreadFunction,
    QuadratureConfig,
    amplitude,
    delta_k2,
    functionals,
    norm_squared,
    overlap_delta,
    overlap_gamma,
)
from .qfi import qfi_exact, qfi_ideal_closed_form, qfi_noisy_closed_form

DERIVATIVE_GRID = (0.1, 0.5, 1.0, 2.0, 4.0)
ORACLE_ETA_N = (0.01, 0.1, 1.0, 5.0)
ORACLE_EPSILON = (0.0, 1e-4, 1e-2)
ORACLE_S = (0.2, 1.0, 3.0)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def tabulated_gaussian(rayleigh_length: float = 1.0, halfwidth: float = 12.0,
                       points: int = 2401) -> PointSpreadFunction:
    """Cubic-spline copy of the Gaussian PSF sampled on ``[-halfwidth, halfwidth] * x_R``."""
    ref = PointSpreadFunction.gaussian(rayleigh_length)
    x = np.linspace(-halfwidth, halfwidth, points) * rayleigh_length
    return PointSpreadFunction.from_samples(x, amplitude(ref, x), rayleigh_length)


def random_tuples(n: int, seed: int = 0, noisy: bool = True):
    """Random physical (eta_n, epsilon, functionals, x_R) drawn from Gaussian PSFs.

    Log-uniform: eta_n in [1e-3, 30], epsilon in [1e-5, 10], s / x_R in
    [1e-2, 10]; x_R uniform in [0.5, 2].
    """
    rng = np.random.default_rng(seed)
    eta_n = 10 ** rng.uniform(-3, 1.5, n)
    epsilon = 10 ** rng.uniform(-5, 1, n) if noisy else np.zeros(n)
    xr = rng.uniform(0.5, 2.0, n)
    s = 10 ** rng.uniform(-2, 1, n) * xr
    # delta_k2 varies with x_R, so it is an array here and broadcasts per tuple
    f = OverlapFunctionals(
        delta=np.exp(-s**2 / (8 * xr**2)),
        gamma=-s / (4 * xr**2) * np.exp(-s**2 / (8 * xr**2)),
        delta_k2=1.0 / (4 * xr**2),
    )
    return eta_n, epsilon, f, xr


def max_rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.abs(b)))


def check_quadrature(cfg: QuadratureConfig = DEFAULT_CONFIG) -> Check:
    psf = PointSpreadFunction.gaussian()
    s = np.array([0.0, *DERIVATIVE_GRID, 6.0])
    err_delta = np.max(np.abs(overlap_delta(psf, s, cfg, force_quadrature=True) - overlap_delta(psf, s, cfg)))
    err_dk2 = abs(delta_k2(psf, cfg, force_quadrature=True) - delta_k2(psf, cfg))
    err = max(err_delta, err_dk2)
    return Check("quadrature vs Gaussian closed forms", bool(err <= 1e-8),
                 f"max |diff| = {err:.3g} (tol 1e-8)")


def check_normalization(cfg: QuadratureConfig = DEFAULT_CONFIG) -> Check:
    errs = [abs(norm_squared(p, cfg) - 1) for p in (PointSpreadFunction.gaussian(), tabulated_gaussian())]
    return Check("PSF normalization", max(errs) <= 1e-6, f"max |int psi^2 - 1| = {max(errs):.3g} (tol 1e-6)")


def check_derivative(cfg: QuadratureConfig = DEFAULT_CONFIG) -> Check:
    """gamma against a central difference of delta with step ``cfg.fd_step``."""
    psf = PointSpreadFunction.gaussian()
    h = cfg.step(psf)
    s = np.array(DERIVATIVE_GRID)
    fd = (overlap_delta(psf, s + h, cfg) - overlap_delta(psf, np.abs(s - h), cfg)) / (2 * h)
    err_gauss = max_rel(fd, overlap_gamma(psf, s, cfg))
    table = tabulated_gaussian()
    err_table = max_rel(overlap_gamma(table, s, cfg), overlap_gamma(psf, s, cfg))
    err = max(err_gauss, err_table)
    return Check("gamma = d delta / d s", bool(err <= 1e-4),
                 f"max rel err {err:.3g} (Gaussian {err_gauss:.3g}, tabulated {err_table:.3g}; tol 1e-4)")


def check_series_oracle(cfg: QuadratureConfig = DEFAULT_CONFIG) -> Check:
    psf = PointSpreadFunction.gaussian()
    worst = 0.0
    for eta_n in ORACLE_ETA_N:
        for eps in ORACLE_EPSILON:
            for s in ORACLE_S:
                ref = series_oracle_fisher(eta_n, eps, psf, s, cfg)
                got = prob_fisher_term(eta_n, eps, functionals(psf, s, cfg))
                worst = max(worst, abs(got - ref) / abs(ref))
    n = len(ORACLE_ETA_N) * len(ORACLE_EPSILON) * len(ORACLE_S)
    return Check("probability term vs photon-number series", worst <= 1e-5,
                 f"{n} points, max rel err {worst:.3g} (tol 1e-5)")


def check_noiseless_identity(n: int = 10_000) -> Check:
    eta_n, _, f, xr = random_tuples(n, seed=1, noisy=False)
    err = max_rel(qfi_exact(eta_n, 0.0, f, xr).total, qfi_ideal_closed_form(eta_n, f))
    return Check("noiseless reduction identity", err <= 1e-12, f"{n} tuples, max rel err {err:.3g} (tol 1e-12)")


def check_noisy_identity(n: int = 10_000) -> Check:
    eta_n, eps, f, xr = random_tuples(n, seed=2)
    err = max_rel(qfi_exact(eta_n, eps, f, xr).total, qfi_noisy_closed_form(eta_n, eps, f))
    return Check("noisy closed-form identity", err <= 1e-10, f"{n} tuples, max rel err {err:.3g} (tol 1e-10)")


def check_mixed_gaussian(cfg: QuadratureConfig = DEFAULT_CONFIG) -> Check:
    """The gauss-paper preset must disagree with quadrature of its own amplitude."""
    psf = PointSpreadFunction.gaussian_mixed()
    quad_delta = overlap_delta(psf, 2.0, cfg, force_quadrature=True)
    preset = overlap_delta(psf, 2.0, cfg)
    found = abs(quad_delta - preset) > 1e-3 and abs(quad_delta - math.exp(-0.5)) <= 1e-8
    return Check("gauss-paper preset inconsistency", bool(found),
                 f"quadrature delta(s=2 x_R) = {quad_delta:.9g} (e^-0.5) vs preset {preset:.9g} (e^-1); "
                 + ("discrepancy confirmed" if found else "discrepancy NOT reproduced"))


def run_all(cfg: QuadratureConfig = DEFAULT_CONFIG) -> list[Check]:
    checks = []
    for fn in (check_quadrature, check_normalization, check_derivative, check_series_oracle,
               check_mixed_gaussian):
        try:
            checks.append(fn(cfg))
        except Exception as exc:  # report, keep going
            checks.append(Check(fn.__name__, False, f"raised {type(exc).__name__}: {exc}"))
    for fn in (check_noiseless_identity, check_noisy_identity):
        checks.append(fn())
    return checks
