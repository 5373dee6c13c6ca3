"""Point-spread functions and their overlap functionals.

Every separation-dependent QFI formula depends on the PSF only through three
numbers evaluated at separation ``s``:

* ``delta``    -- overlap of the two shifted copies, ``int psi(x+s/2) psi(x-s/2) dx``
* ``gamma``    -- its derivative ``d delta / d s``
* ``delta_k2`` -- ``int |d psi / dx|^2 dx`` (independent of ``s``)

Gaussian presets short-circuit to closed forms. Tabulated profiles go through
adaptive quadrature over a cubic-spline interpolant.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicSpline

from .errors import QuadratureNonConvergence

_GAUSS_NORM = (2.0 * math.pi) ** -0.25
_TAIL_RATIO = 1e-8
_NORM_TOL = 1e-6


class PsfKind(enum.Enum):
    """Supported PSF families; values double as CLI tokens."""

    # delta, gamma and delta_k2 all derived from the same Gaussian amplitude
    GAUSSIAN = "gauss"
    # overlap exp(-s^2/(4 xR^2)) paired with delta_k2 = 1/(4 xR^2); not derivable
    # from a single profile, kept for side-by-side comparison
    GAUSSIAN_MIXED = "gauss-paper"
    TABULATED = "table"


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances for the quadrature and finite-difference paths.

    ``fd_step`` and ``domain_halfwidth`` are absolute lengths; ``None`` means
    ``1e-5 * x_R`` and ``12 * x_R`` respectively.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    fd_step: float | None = None
    domain_halfwidth: float | None = None
    max_subdivisions: int = 200

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "fd_step", "domain_halfwidth"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def step(self, psf: PointSpreadFunction) -> float:
        return self.fd_step if self.fd_step is not None else 1e-5 * psf.rayleigh_length

    def halfwidth(self, psf: PointSpreadFunction) -> float:
        if self.domain_halfwidth is not None:
            return self.domain_halfwidth
        return 12.0 * psf.rayleigh_length


DEFAULT_CONFIG = QuadratureConfig()


@dataclass(frozen=True)
class OverlapFunctionals:
    """The triple (delta, gamma, delta_k2) at one separation, or a grid of them.

    ``delta`` and ``gamma`` may be numpy arrays sharing a shape; ``delta_k2`` is
    a scalar because it does not depend on the separation.

    ``one_minus_delta`` optionally carries ``1 - delta`` computed without
    cancellation (the closed forms provide it); it keeps the small-``s``
    formulas accurate, and defined once ``delta`` itself rounds to 1.
    """

    delta: float | np.ndarray
    gamma: float | np.ndarray
    delta_k2: float
    one_minus_delta: float | np.ndarray | None = None

    def complement(self) -> np.ndarray:
        """``1 - delta``, accurate near coincidence when the producer supplied it."""
        if self.one_minus_delta is not None:
            return np.asarray(self.one_minus_delta, dtype=float)
        return 1 - np.asarray(self.delta, dtype=float)


@dataclass(frozen=True, eq=False)
class PointSpreadFunction:
    """A real, unit-norm 1D amplitude profile.

    Use :meth:`gaussian`, :meth:`gaussian_mixed`, :meth:`from_samples` or
    :func:`load_table` rather than the bare constructor.
    """

    kind: PsfKind
    rayleigh_length: float = 1.0
    samples: tuple[np.ndarray, np.ndarray] | None = None
    _spline: CubicSpline | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.rayleigh_length > 0:
            raise ValueError(f"rayleigh_length must be positive, got {self.rayleigh_length!r}")
        if self.kind is PsfKind.TABULATED:
            if self.samples is None:
                raise ValueError("tabulated PSF needs samples")
            x, a = (np.asarray(v, dtype=float) for v in self.samples)
            _check_samples(x, a)
            object.__setattr__(self, "samples", (x, a))
            object.__setattr__(self, "_spline", CubicSpline(x, a))
        elif self.samples is not None:
            raise ValueError(f"{self.kind.name} PSF takes no samples")

    @classmethod
    def gaussian(cls, rayleigh_length: float = 1.0) -> PointSpreadFunction:
        return cls(PsfKind.GAUSSIAN, rayleigh_length)

    @classmethod
    def gaussian_mixed(cls, rayleigh_length: float = 1.0) -> PointSpreadFunction:
        return cls(PsfKind.GAUSSIAN_MIXED, rayleigh_length)

    @classmethod
    def from_samples(cls, x, amplitude, rayleigh_length: float = 1.0,
                     normalize: bool = False) -> PointSpreadFunction:
        """Build a tabulated PSF from positions and amplitudes (absolute units).

        With ``normalize=True`` the amplitudes are rescaled to unit L2 norm;
        otherwise a norm off by more than 1e-6 is rejected.
        """
        x = np.asarray(x, dtype=float)
        a = np.asarray(amplitude, dtype=float)
        psf = cls(PsfKind.TABULATED, rayleigh_length, (x, a))
        n2 = norm_squared(psf)
        if not normalize and abs(n2 - 1.0) > _NORM_TOL:
            raise ValueError(f"tabulated PSF is not unit-norm: int psi^2 = {n2:.9g}")
        # rescale even within tolerance so that delta(0) = 1 to quadrature accuracy
        return cls(PsfKind.TABULATED, rayleigh_length, (x, a / math.sqrt(n2)))

    @property
    def is_gaussian(self) -> bool:
        return self.kind is not PsfKind.TABULATED

    def support(self, cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple[float, float]:
        if self.kind is PsfKind.TABULATED:
            x = self.samples[0]
            return float(x[0]), float(x[-1])
        h = cfg.halfwidth(self)
        return -h, h


def _check_samples(x: np.ndarray, a: np.ndarray) -> None:
    if x.ndim != 1 or x.shape != a.shape:
        raise ValueError("samples must be two 1D arrays of equal length")
    if x.size < 4:
        raise ValueError("need at least 4 samples for cubic interpolation")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(a)):
        raise ValueError("samples must be finite")
    if not np.all(np.diff(x) > 0):
        raise ValueError("sample positions must be strictly increasing")
    peak = np.max(np.abs(a))
    if peak == 0:
        raise ValueError("amplitude is identically zero")
    if abs(a[0]) >= _TAIL_RATIO * peak or abs(a[-1]) >= _TAIL_RATIO * peak:
        raise ValueError("tabulated amplitude must decay below 1e-8 * peak at both ends")


def load_table(path, rayleigh_length: float = 1.0, normalize: bool = False) -> PointSpreadFunction:
    """Read a two-column ``x amplitude`` table.

    A ``# unit: <name>`` comment declares the position unit. The default
    ``xr`` means positions (and amplitudes) are given in Rayleigh-length units
    and are rescaled by ``rayleigh_length``; any other unit name is taken to
    match the unit of ``rayleigh_length`` and positions are used as-is.
    """
    unit = "xr"
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("unit:"):
                unit = body.split(":", 1)[1].strip() or "xr"
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric row {line!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    x, a = np.array(rows).T
    if unit.lower() in ("xr", "x_r"):
        x = x * rayleigh_length
        a = a / math.sqrt(rayleigh_length)
    return PointSpreadFunction.from_samples(x, a, rayleigh_length, normalize=normalize)


def _integrate(func, lo: float, hi: float, cfg: QuadratureConfig, points=None) -> float:
    if hi <= lo:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(func, lo, hi, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                            limit=cfg.max_subdivisions, points=points)
        except IntegrationWarning as exc:
            raise QuadratureNonConvergence(str(exc).strip().splitlines()[0]) from None
    return value


def amplitude(psf: PointSpreadFunction, x):
    """psi(x); vectorized over ``x``. Tabulated PSFs are zero off their grid."""
    x = np.asarray(x, dtype=float)
    if psf.is_gaussian:
        xr = psf.rayleigh_length
        out = _GAUSS_NORM / math.sqrt(xr) * np.exp(-x**2 / (4.0 * xr**2))
    else:
        lo, hi = psf.support()
        out = np.where((x >= lo) & (x <= hi), psf._spline(x), 0.0)
    return out if out.ndim else float(out)


def amplitude_derivative(psf: PointSpreadFunction, x, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """d psi / dx: analytic for Gaussians, central difference of the interpolant otherwise."""
    x = np.asarray(x, dtype=float)
    if psf.is_gaussian:
        out = -x / (2.0 * psf.rayleigh_length**2) * amplitude(psf, x)
    else:
        h = cfg.step(psf)
        out = (amplitude(psf, x + h) - amplitude(psf, x - h)) / (2.0 * h)
    return out if np.ndim(out) else float(out)


def norm_squared(psf: PointSpreadFunction, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    lo, hi = psf.support(cfg)
    return _integrate(lambda t: amplitude(psf, t) ** 2, lo, hi, cfg)


def _delta_quad(psf: PointSpreadFunction, s: float, cfg: QuadratureConfig) -> float:
    lo, hi = psf.support(cfg)
    half = 0.5 * abs(s)
    if psf.is_gaussian:
        # integrand is centred at 0 for any s
        return _integrate(lambda t: amplitude(psf, t + half) * amplitude(psf, t - half),
                          lo, hi, cfg, points=[0.0])
    return _integrate(lambda t: amplitude(psf, t + half) * amplitude(psf, t - half),
                      lo + half, hi - half, cfg)


def _scalar_map(func, s):
    s_arr = np.asarray(s, dtype=float)
    if s_arr.ndim == 0:
        return func(float(s_arr))
    return np.array([func(v) for v in s_arr.ravel()]).reshape(s_arr.shape)


def _check_separation(s) -> np.ndarray:
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or not np.all(np.isfinite(s_arr)):
        raise ValueError("separation must be finite and non-negative")
    return s_arr


def overlap_delta(psf: PointSpreadFunction, s, cfg: QuadratureConfig = DEFAULT_CONFIG,
                  force_quadrature: bool = False):
    """Overlap between the PSF copies centred at -s/2 and +s/2."""
    s_arr = _check_separation(s)
    xr2 = psf.rayleigh_length**2
    if psf.kind is PsfKind.GAUSSIAN and not force_quadrature:
        out = np.exp(-s_arr**2 / (8.0 * xr2))
    elif psf.kind is PsfKind.GAUSSIAN_MIXED and not force_quadrature:
        out = np.exp(-s_arr**2 / (4.0 * xr2))
    else:
        return _scalar_map(lambda v: _delta_quad(psf, v, cfg), s_arr)
    return out if out.ndim else float(out)


def delta_k2(psf: PointSpreadFunction, cfg: QuadratureConfig = DEFAULT_CONFIG,
             force_quadrature: bool = False) -> float:
    """Integral of the squared spatial derivative of psi."""
    if psf.is_gaussian and not force_quadrature:
        return 1.0 / (4.0 * psf.rayleigh_length**2)
    lo, hi = psf.support(cfg)
    return _integrate(lambda t: amplitude_derivative(psf, t, cfg) ** 2, lo, hi, cfg)


def overlap_gamma(psf: PointSpreadFunction, s, cfg: QuadratureConfig = DEFAULT_CONFIG,
                  force_quadrature: bool = False):
    """d delta / d s: analytic for Gaussian presets, central difference otherwise."""
    s_arr = _check_separation(s)
    xr2 = psf.rayleigh_length**2
    if psf.kind is PsfKind.GAUSSIAN and not force_quadrature:
        out = -s_arr / (4.0 * xr2) * np.exp(-s_arr**2 / (8.0 * xr2))
    elif psf.kind is PsfKind.GAUSSIAN_MIXED and not force_quadrature:
        out = -s_arr / (2.0 * xr2) * np.exp(-s_arr**2 / (4.0 * xr2))
    else:
        h = cfg.step(psf)

        def fd(v):
            # delta is even in s, so |v - h| covers steps across the origin
            plus = _delta_quad(psf, v + h, cfg)
            minus = _delta_quad(psf, abs(v - h), cfg)
            return (plus - minus) / (2.0 * h)

        return _scalar_map(fd, s_arr)
    return out if out.ndim else float(out)


def functionals(psf: PointSpreadFunction, s, cfg: QuadratureConfig = DEFAULT_CONFIG,
                force_quadrature: bool = False) -> OverlapFunctionals:
    """Bundle delta, gamma and delta_k2 at separation(s) ``s``.

    Quadrature overshoot of ``|delta|`` beyond 1 by less than ``cfg.abs_tol``
    is clamped; larger overshoot is left in place for callers to reject.
    """
    delta = overlap_delta(psf, s, cfg, force_quadrature)
    gamma = overlap_gamma(psf, s, cfg, force_quadrature)
    dk2 = delta_k2(psf, cfg, force_quadrature)
    complement = None
    if psf.is_gaussian and not force_quadrature:
        width = 8.0 if psf.kind is PsfKind.GAUSSIAN else 4.0
        c = -np.expm1(-np.asarray(s, dtype=float) ** 2 / (width * psf.rayleigh_length**2))
        complement = c if c.ndim else float(c)
    d = np.asarray(delta, dtype=float)
    over = (np.abs(d) > 1.0) & (np.abs(d) <= 1.0 + cfg.abs_tol)
    if np.any(over):
        d = np.where(over, np.sign(d), d)
        delta = d if d.ndim else float(d)
    # s = 0 is a stationary point of the even function delta(s); where s^2
    # underflows, gamma^2 would too
    g = np.where(np.asarray(s, dtype=float) ** 2 == 0, 0.0, gamma)
    gamma = g if g.ndim else float(g)
    return OverlapFunctionals(delta, gamma, dk2, complement)
