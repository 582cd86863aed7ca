"""Special functions, quadrature and curve utilities shared by the other modules.

The special functions are thin, domain-checked wrappers around
:mod:`scipy.special`; :func:`integrate` wraps QUADPACK and turns its warnings
into :class:`QuadratureError`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import special

EULER_GAMMA = 0.5772156649015329


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error!r})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-300
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be strictly positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of log y against log x."""

    slope: float
    stderr: float
    x_range: tuple[float, float]

    def __post_init__(self):
        if not self.x_range[0] < self.x_range[1]:
            raise ValueError("x_range endpoints must be strictly ordered")
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def gamma_fn(x: float) -> float:
    """Gamma function for positive real arguments."""
    if not x > 0:
        raise ValueError(f"gamma_fn requires x > 0, got {x!r}")
    value = float(special.gamma(x))
    if math.isinf(value):
        raise OverflowError(f"gamma({x!r}) overflows double precision")
    return value


def lower_incomplete_gamma_regularized(a: float, x):
    """Regularized lower incomplete gamma ``gamma(a, x) / Gamma(a)``.

    Accepts scalar or array ``x``.
    """
    if not a > 0:
        raise ValueError(f"shape a must be positive, got {a!r}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    out = special.gammainc(a, x)
    return float(out) if out.ndim == 0 else out


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind ``K_nu(x)`` for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k requires x > 0")
    out = special.kv(nu, x)
    if np.any(np.isinf(out)):
        raise OverflowError(f"K_{nu}(x) overflows for the smallest requested x")
    return float(out) if out.ndim == 0 else out


def q_fn(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    points: Sequence[float] | None = None,
) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[lo, hi]``.

    ``hi`` may be ``math.inf``; QUADPACK then maps the half line onto (0, 1].
    ``points`` are interior breakpoints and are only honoured on finite ranges.

    Raises
    ------
    QuadratureError
        If the tolerance is not met within ``spec.max_subdivisions`` intervals.
    """
    if hi == lo:
        return 0.0
    kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=spec.max_subdivisions, full_output=1)
    if points is not None and math.isfinite(hi) and math.isfinite(lo):
        inner = sorted(p for p in points if lo < p < hi)
        if inner:
            kwargs["points"] = inner
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        res = _integrate.quad(f, lo, hi, **kwargs)
    value, err = res[0], res[1]
    if len(res) > 3:
        # ier != 0: QUADPACK reported a problem
        message = res[3]
        if abs(err) > max(spec.abs_tol, spec.rel_tol * abs(value)) or not math.isfinite(value):
            raise QuadratureError(str(message).splitlines()[0], value, err)
    return float(value)


def loglog_slope(points: Iterable[tuple[float, float]]) -> SlopeFit:
    """Fit ``log y = a + s log x`` by least squares and return the slope ``s``."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("all coordinates must be strictly positive")
    lx, ly = np.log(x), np.log(y)
    lx_c = lx - lx.mean()
    sxx = float(lx_c @ lx_c)
    if sxx == 0.0:
        raise ValueError("degenerate abscissae: all x equal")
    slope = float(lx_c @ (ly - ly.mean())) / sxx
    resid = ly - ly.mean() - slope * lx_c
    n = len(x)
    stderr = math.sqrt(float(resid @ resid) / (n - 2) / sxx)
    return SlopeFit(slope=slope, stderr=stderr, x_range=(float(x.min()), float(x.max())))


def crossing_snr(curve: Iterable[tuple[float, float]], target: float) -> float:
    """SNR (dB) where a decreasing error-rate curve crosses ``target``.

    Interpolation is linear in (dB, log10 value).
    """
    pts = sorted((float(s), float(v)) for s, v in curve)
    if len(pts) < 1:
        raise ValueError("empty curve")
    if not target > 0:
        raise ValueError("target must be positive")
    lt = math.log10(target)
    for s, v in pts:
        if v == target:
            return s
    for (s0, v0), (s1, v1) in zip(pts, pts[1:]):
        if (v0 - target) * (v1 - target) < 0:
            l0, l1 = math.log10(v0), math.log10(v1)
            return s0 + (lt - l0) * (s1 - s0) / (l1 - l0)
    lo_v = min(v for _, v in pts)
    hi_v = max(v for _, v in pts)
    raise ValueError(f"target {target:g} outside curve range [{lo_v:g}, {hi_v:g}]")


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def snr_grid(spec: str) -> np.ndarray:
    """Parse ``lo:hi:step`` (dB) into an inclusive grid."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError(f"SNR grid must be lo:hi:step, got {spec!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"invalid SNR grid {spec!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)
