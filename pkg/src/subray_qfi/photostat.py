"""Photon statistics of the sum/difference image modes.

Each mode is thermal (geometric photon-number distribution). Dark counts enter
as an additive thermal background, so a mode with signal mean ``M`` and
background ``epsilon`` has total mean ``M + epsilon``.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np

from .errors import DomainError, TruncationWarning
from .psf import DEFAULT_CONFIG, OverlapFunctionals, PointSpreadFunction, QuadratureConfig, functionals


class SourceScenario(NamedTuple):
    eta_n: float
    epsilon: float
    separation: float
    rayleigh_length: float = 1.0

    def validate(self) -> SourceScenario:
        if not self.eta_n >= 0 or not self.epsilon >= 0 or not self.separation >= 0:
            raise DomainError("eta_n, epsilon and separation must be non-negative")
        if not self.rayleigh_length > 0:
            raise DomainError("rayleigh_length must be positive")
        return self

    @property
    def snr(self) -> float:
        if self.epsilon == 0:
            raise DomainError("SNR is undefined without dark counts")
        return self.eta_n / self.epsilon


class ModeMeans(NamedTuple):
    m_plus: float | np.ndarray
    m_minus: float | np.ndarray


def mode_means(eta_n, delta) -> ModeMeans:
    """Signal photon means ((1 + delta) eta_n, (1 - delta) eta_n) of the two modes."""
    delta = np.asarray(delta, dtype=float)
    if np.any(np.abs(delta) > 1):
        raise DomainError(f"|delta| must be <= 1, got {delta}")
    if np.any(np.asarray(eta_n) < 0):
        raise DomainError("eta_n must be non-negative")
    plus, minus = (1 + delta) * eta_n, (1 - delta) * eta_n
    if plus.ndim == 0:
        return ModeMeans(float(plus), float(minus))
    return ModeMeans(plus, minus)


def pmf(mean, n):
    """Geometric (thermal) probability of ``n`` photons at the given mean.

    Vectorized over both arguments; ``mean = 0`` is the vacuum.
    """
    mean = np.asarray(mean, dtype=float)
    n = np.asarray(n)
    if np.any(mean < 0):
        raise DomainError("mean must be non-negative")
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = -np.log1p(mean) + n * (np.log(mean) - np.log1p(mean))
        out = np.where(mean == 0, (n == 0).astype(float), np.exp(log_p))
    return out if out.ndim else float(out)


def prob_fisher_term(eta_n, epsilon, f: OverlapFunctionals):
    """Fisher information carried by the photon-number distributions alone.

    Sum over both modes of ``(eta_n gamma)^2 / (mu (mu + 1))`` with
    ``mu = (1 +/- delta) eta_n + epsilon``: the classical Fisher information of
    a geometric law whose mean moves at rate ``+/- eta_n gamma``.

    Edge cases at ``mu = 0`` (only reachable with ``|delta| = 1`` and no noise):
    with ``gamma = 0`` the coincident-source limit ``2 eta_n delta_k2`` is
    returned, using ``gamma^2 / (1 - |delta|) -> 2 delta_k2`` as ``s -> 0``;
    with ``gamma != 0`` the result is ``inf`` (see :func:`is_degenerate`).
    """
    eta_n = np.asarray(eta_n, dtype=float)
    epsilon = np.asarray(epsilon, dtype=float)
    if np.any(eta_n < 0) or np.any(epsilon < 0):
        raise DomainError("eta_n and epsilon must be non-negative")
    delta = np.asarray(f.delta, dtype=float)
    gamma = np.asarray(f.gamma, dtype=float)
    if np.any(np.abs(delta) > 1):
        raise DomainError("|delta| must be <= 1")
    rate2 = (eta_n * gamma) ** 2
    total = 0.0
    for factor in (1 + delta, f.complement()):
        mu = factor * eta_n + epsilon
        with np.errstate(divide="ignore", invalid="ignore"):
            regular = rate2 / (mu * (mu + 1))
        at_zero = np.where(gamma == 0, np.where(eta_n > 0, 2 * eta_n * f.delta_k2, 0.0), np.inf)
        total = total + np.where(mu > 0, regular, at_zero)
    total = np.asarray(total, dtype=float)
    return total if total.ndim else float(total)


def is_degenerate(eta_n, epsilon, f: OverlapFunctionals):
    """True where a mode has zero mean but a non-zero drift (infinite Fisher term)."""
    delta = np.asarray(f.delta, dtype=float)
    gamma = np.asarray(f.gamma, dtype=float)
    vacuum = (f.complement() == 0) | (delta == -1)
    dark = (np.asarray(epsilon) == 0) & (np.asarray(eta_n) > 0) & vacuum
    out = dark & (gamma != 0)
    return out if out.ndim else bool(out)


def series_oracle_fisher(eta_n: float, epsilon: float, psf: PointSpreadFunction, s: float,
                         cfg: QuadratureConfig = DEFAULT_CONFIG, n_max: int = 500,
                         ds: float | None = None) -> float:
    """Brute-force ``sum_n p(n) (d log p(n) / ds)^2`` over both modes.

    Builds the two photon-number distributions at ``s - ds``, ``s``, ``s + ds``
    from the PSF overlap and differentiates ``log p`` by central differences.
    Independent of :func:`prob_fisher_term`; used to validate it.
    """
    if n_max < 50:
        raise ValueError("n_max must be >= 50")
    if ds is None:
        ds = 1e-5 * psf.rayleigh_length
    if not ds > 0:
        raise ValueError("ds must be positive")
    if s - ds < 0:
        raise ValueError("s must be at least ds so the stencil stays at non-negative separations")
    n = np.arange(n_max + 1)
    deltas = [functionals(psf, v, cfg).delta for v in (s - ds, s, s + ds)]
    total = 0.0
    for sign in (1.0, -1.0):
        mus = [(1 + sign * d) * eta_n + epsilon for d in deltas]
        if mus[1] == 0:
            continue
        ratio = mus[1] / (mus[1] + 1)
        tail = ratio ** (n_max + 1)
        if tail > 1e-10:
            warnings.warn(f"tail mass {tail:.3g} beyond n_max={n_max}", TruncationWarning, stacklevel=2)
        log_p = [-math.log1p(m) + n * (math.log(m) - math.log1p(m)) if m > 0 else None for m in mus]
        if log_p[0] is None or log_p[2] is None:
            raise ValueError("a finite-difference neighbour has a vacuum mode")
        dlog = (log_p[2] - log_p[0]) / (2 * ds)
        total += float(np.sum(np.exp(log_p[1]) * dlog**2))
    return total
