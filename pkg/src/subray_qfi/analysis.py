"""Resolution cutoff, SNR scaling and figure-style parameter sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NoCrossing, QuadratureNonConvergence, DomainError
from .photostat import SourceScenario
from .psf import DEFAULT_CONFIG, PointSpreadFunction, QuadratureConfig, delta_k2, functionals
from .qfi import classical_limit, qfi_exact

# lowest-order small-s expansion: s_half^2 = 8 x_R^2 / SNR
EXPANSION_PREFACTOR = 2.0 * math.sqrt(2.0)
# constant in the commonly quoted form s_half ~ 8 x_R / sqrt(SNR)
QUOTED_PREFACTOR = 8.0

CLASSICAL_LABEL = "classical"
_SEARCH_SPAN = 10.0
_SCAN_POINTS = 256


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray


@dataclass
class SweepTable:
    parameter_label: str
    series: list[Series]
    metadata: dict = field(default_factory=dict)

    def column(self, label: str) -> np.ndarray:
        for s in self.series:
            if s.label == label:
                return s.y
        raise KeyError(label)

    @property
    def x(self) -> np.ndarray:
        return self.series[0].x


class HalfMaxResult(NamedTuple):
    s_half: float
    bracket: tuple[float, float]
    iterations: int


class ScalingFit(NamedTuple):
    exponent: float
    prefactor: float
    snr: np.ndarray
    s_half: np.ndarray


def _evaluate(psf: PointSpreadFunction, s: np.ndarray, cfg: QuadratureConfig, fn):
    """Apply ``fn`` to the functionals over ``s``; failed points become NaN."""
    try:
        return np.asarray(fn(functionals(psf, s, cfg)), dtype=float)
    except (QuadratureNonConvergence, DomainError):
        if s.ndim == 0:
            return np.asarray(np.nan)
    out = np.empty(s.shape)
    for i, v in enumerate(s):
        try:
            out[i] = fn(functionals(psf, v, cfg))
        except (QuadratureNonConvergence, DomainError):
            out[i] = np.nan
    return out


def sweep_qfi(base: SourceScenario, s_grid, variants, psf: PointSpreadFunction | None = None,
              cfg: QuadratureConfig = DEFAULT_CONFIG, include_classical: bool = True,
              parameter_label: str = "s/x_R") -> SweepTable:
    """Normalized QFI versus ``s / x_R``, one series per variant.

    ``variants`` is a sequence of ``(label, overrides)`` where ``overrides``
    may set ``eta_n`` and/or ``epsilon``. Points that fail to evaluate are
    recorded as NaN instead of aborting the sweep.
    """
    if psf is None:
        psf = PointSpreadFunction.gaussian(base.rayleigh_length)
    xr = psf.rayleigh_length
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("s_grid must be a non-empty 1D sequence")
    if np.any(np.diff(s) <= 0):
        raise ValueError("s_grid must be strictly increasing")
    x = s / xr
    f = None
    try:
        f = functionals(psf, s, cfg)
    except (QuadratureNonConvergence, DomainError):
        pass

    series = []
    for label, overrides in variants:
        eta_n = overrides.get("eta_n", base.eta_n)
        epsilon = overrides.get("epsilon", base.epsilon)

        def norm_qfi(fs, eta_n=eta_n, epsilon=epsilon):
            return qfi_exact(eta_n, epsilon, fs, xr).normalized

        y = np.asarray(norm_qfi(f), dtype=float) if f is not None else _evaluate(psf, s, cfg, norm_qfi)
        series.append(Series(label, x.copy(), np.broadcast_to(y, x.shape).copy()))
    if include_classical:
        def lim(fs):
            return classical_limit(fs) * xr**2

        y = np.asarray(lim(f), dtype=float) if f is not None else _evaluate(psf, s, cfg, lim)
        series.append(Series(CLASSICAL_LABEL, x.copy(), np.broadcast_to(y, x.shape).copy()))

    metadata = {
        "eta_n": base.eta_n,
        "epsilon": base.epsilon,
        "snr": base.eta_n / base.epsilon if base.epsilon > 0 else math.inf,
        "psf": psf.kind.value,
        "xr": xr,
    }
    return SweepTable(parameter_label, series, metadata)


def _bisect(g, lo: float, hi: float, g_lo: float, xtol: float, max_iter: int = 200):
    it = 0
    while hi - lo > xtol and it < max_iter:
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0:
            return mid, (mid, mid), it + 1
        if (g_mid < 0) == (g_lo < 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
        it += 1
    return 0.5 * (lo + hi), (lo, hi), it


def find_s_half(eta_n: float, epsilon: float, psf: PointSpreadFunction | None = None,
                cfg: QuadratureConfig = DEFAULT_CONFIG, xtol: float | None = None) -> HalfMaxResult:
    """Smallest separation where the QFI equals half its plateau ``eta_n * delta_k2``.

    Scans upward from ``s = 0`` (geometric grid for Gaussian presets, 256-point
    linear grid otherwise) to the first sign change on ``(0, 10 x_R]``, then
    bisects it down to ``xtol`` (default ``1e-10 x_R``).
    """
    if psf is None:
        psf = PointSpreadFunction.gaussian()
    if not eta_n > 0:
        raise DomainError("eta_n must be positive")
    if not epsilon >= 0:
        raise DomainError("epsilon must be non-negative")
    xr = psf.rayleigh_length
    target = eta_n * delta_k2(psf, cfg)
    if xtol is None:
        xtol = 1e-10 * xr

    def g(s):
        return float(qfi_exact(eta_n, epsilon, functionals(psf, s, cfg)).total) - target

    if psf.is_gaussian:
        grid = np.concatenate(([0.0], np.geomspace(1e-6 * xr, _SEARCH_SPAN * xr, 400)))
        values = np.asarray(qfi_exact(eta_n, epsilon, functionals(psf, grid, cfg)).total) - target
    else:
        grid = np.linspace(0.0, _SEARCH_SPAN * xr, _SCAN_POINTS + 1)
        values = np.array([g(v) for v in grid])

    neg = values < 0
    change = np.nonzero(neg[1:] != neg[:-1])[0]
    if change.size == 0:
        side = "below" if neg[0] else "at or above"
        raise NoCrossing(f"QFI stays {side} eta_n*delta_k2 on (0, {_SEARCH_SPAN:g} x_R]")
    i = int(change[0])
    s_half, bracket, iterations = _bisect(g, float(grid[i]), float(grid[i + 1]), float(values[i]), xtol)
    return HalfMaxResult(s_half, bracket, iterations)


def snr_scaling_fit(eta_n: float, snr_grid, psf: PointSpreadFunction | None = None,
                    cfg: QuadratureConfig = DEFAULT_CONFIG) -> ScalingFit:
    """Fit ``log s_half = exponent * log SNR + c`` by ordinary least squares.

    ``prefactor`` is the geometric mean of ``s_half * sqrt(SNR) / x_R``.
    """
    if psf is None:
        psf = PointSpreadFunction.gaussian()
    snr = np.asarray(snr_grid, dtype=float)
    if snr.size < 2 or np.any(snr <= 0) or not np.all(np.isfinite(snr)):
        raise ValueError("snr_grid needs at least two finite positive values")
    s_half = np.array([find_s_half(eta_n, eta_n / v, psf, cfg).s_half for v in snr])
    exponent, _ = np.polyfit(np.log(snr), np.log(s_half), 1)
    prefactor = float(np.exp(np.mean(np.log(s_half * np.sqrt(snr) / psf.rayleigh_length))))
    return ScalingFit(float(exponent), prefactor, snr, s_half)
