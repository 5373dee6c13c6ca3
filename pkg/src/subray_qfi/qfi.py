"""Quantum Fisher information for the separation of two thermal sources.

The QFI splits into a probability term (photon statistics of the two modes,
see :mod:`subray_qfi.photostat`) and an operator term coming from the
separation dependence of the mode functions themselves::

    QFI = prob_term + 2 eta_n (delta_k2 - gamma^2 / (1 - delta^2))

:func:`qfi_exact` builds the total from that split. The closed forms
:func:`qfi_ideal_closed_form` and :func:`qfi_noisy_closed_form` are written
out independently and only serve as cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .photostat import is_degenerate, prob_fisher_term
from .psf import OverlapFunctionals


@dataclass(frozen=True)
class QfiBreakdown:
    total: float | np.ndarray
    prob_term: float | np.ndarray
    op_term: float | np.ndarray
    # QFI * x_R^2 / (2 eta_n)
    normalized: float | np.ndarray
    degenerate: bool | np.ndarray = False


def _scalarize(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def _curvature_ratio(f: OverlapFunctionals):
    """gamma^2 / (1 - delta^2), with the s -> 0 limit delta_k2 at |delta| = 1."""
    delta = np.asarray(f.delta, dtype=float)
    gamma = np.asarray(f.gamma, dtype=float)
    if np.any(np.abs(delta) > 1):
        raise DomainError("|delta| must be <= 1")
    # (1 - d)(1 + d) avoids the rounding of 1 - d^2 near |d| = 1
    one_minus_d2 = f.complement() * (1 + delta)
    coincident = one_minus_d2 == 0
    if np.any(coincident & (gamma != 0)):
        raise DomainError("|delta| = 1 with gamma != 0 has no defined limit")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = gamma**2 / one_minus_d2
    # for a real unit-norm psi: 1 - delta ~ s^2 dk2 / 2 and gamma ~ -s dk2
    return np.where(coincident, f.delta_k2, ratio)


def operator_term(eta_n, f: OverlapFunctionals):
    """2 eta_n (delta_k2 - gamma^2 / (1 - delta^2)); zero at coincident sources."""
    return _scalarize(2 * np.asarray(eta_n, dtype=float) * (f.delta_k2 - _curvature_ratio(f)))


def classical_limit(f: OverlapFunctionals):
    """Per-photon QFI ``QFI / (2 eta_n)`` in the bright-source or noise-dominated limit."""
    return _scalarize(f.delta_k2 - _curvature_ratio(f))


def qfi_exact(eta_n, epsilon, f: OverlapFunctionals, rayleigh_length: float = 1.0) -> QfiBreakdown:
    """Total QFI with its probability and operator contributions.

    Broadcasts over array-valued ``eta_n``, ``epsilon`` and functionals.
    ``normalized`` is NaN where ``eta_n = 0``.
    """
    prob = np.asarray(prob_fisher_term(eta_n, epsilon, f), dtype=float)
    op = np.asarray(operator_term(eta_n, f), dtype=float)
    total = prob + op
    eta = np.asarray(eta_n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(eta > 0, total * rayleigh_length**2 / (2 * eta), np.nan)
    return QfiBreakdown(
        total=_scalarize(total),
        prob_term=_scalarize(prob),
        op_term=_scalarize(op),
        normalized=_scalarize(normalized),
        degenerate=_scalarize(is_degenerate(eta_n, epsilon, f)),
    )


def qfi_ideal_closed_form(eta_n, f: OverlapFunctionals):
    """Noiseless QFI, 2 eta_n (dk2 - eta_n (1 + eta_n) gamma^2 / ((1 + eta_n)^2 - delta^2 eta_n^2))."""
    eta_n = np.asarray(eta_n, dtype=float)
    delta = np.asarray(f.delta, dtype=float)
    gamma = np.asarray(f.gamma, dtype=float)
    denom = (1 + eta_n) ** 2 - delta**2 * eta_n**2
    return _scalarize(2 * eta_n * (f.delta_k2 - eta_n * (1 + eta_n) * gamma**2 / denom))


def qfi_noisy_closed_form(eta_n, epsilon, f: OverlapFunctionals):
    """Noisy QFI written out term by term; requires eta_n > 0 and |delta| < 1."""
    eta_n = np.asarray(eta_n, dtype=float)
    epsilon = np.asarray(epsilon, dtype=float)
    if np.any(eta_n <= 0):
        raise DomainError("the closed form divides by eta_n")
    delta = np.asarray(f.delta, dtype=float)
    gamma = np.asarray(f.gamma, dtype=float)
    dk2 = f.delta_k2
    r = epsilon / eta_n + 1
    b = eta_n + epsilon + 1
    # differences of squares factored: each factor is free of cancellation
    gap = f.complement()
    one_minus_d2 = gap * (1 + delta)
    first = 2 * eta_n * (dk2 - gamma**2 / one_minus_d2)
    numer = r * b + delta**2 * eta_n
    r2_minus_d2 = (epsilon / eta_n + gap) * (r + delta)
    b2_minus = (epsilon + 1 + gap * eta_n) * (b + delta * eta_n)
    denom = r2_minus_d2 * b2_minus
    return _scalarize(first + 2 * eta_n * gamma**2 * numer / denom)


def cramer_rao_error(qfi: float, copies: int = 1) -> float:
    """Smallest standard deviation of an unbiased separation estimate from ``copies`` copies."""
    if copies < 1 or int(copies) != copies:
        raise DomainError("copies must be a positive integer")
    if not qfi > 0:
        raise DomainError(f"QFI = {qfi!r}: separation unresolvable at this order")
    return 1.0 / math.sqrt(copies * qfi)
