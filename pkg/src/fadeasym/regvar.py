"""Variation-exponent estimation and the Tauberian consistency check.

A CDF with ``F(z) ~ z**d l(z)`` near 0 has a Laplace-Stieltjes transform
``L(s) ~ Gamma(d+1) s**-d l(1/s)`` as ``s -> inf`` and conversely.
:func:`tauberian_check` estimates ``d`` from both sides independently and
compares them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import QuadratureSpec, gamma_fn, integrate, loglog_slope

LS_QUAD = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-300, max_subdivisions=2000)


@dataclass(frozen=True)
class ExponentReport:
    estimate: float
    stderr: float
    method: str
    window: tuple[float, float]
    ratio_estimate: float = math.nan
    window_slopes: tuple[float, ...] = ()
    diagnostic: str = ""

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if math.isinf(self.estimate) and not self.diagnostic:
            raise ValueError("an infinite verdict must carry its drift diagnostic")

    @property
    def rapidly_varying(self) -> bool:
        return math.isinf(self.estimate)


def _window_values(fn, window, n):
    z = np.logspace(math.log10(window[0]), math.log10(window[1]), n)
    return z, np.array([float(fn(v)) for v in z])


def _exponent(fn: Callable, window, offset: float, method: str, tau: float, n: int, rapid_jump: float) -> ExponentReport:
    z_lo, z_hi = window
    if not 0 < z_lo < z_hi:
        raise ValueError("window must satisfy 0 < z_lo < z_hi")
    z, v = _window_values(fn, (z_lo, z_hi), n)
    if np.any(~(v > 0)):
        # widen once toward larger arguments by the window's own log-width
        span = z_hi / z_lo
        z_lo, z_hi = z_hi, z_hi * span
        z, v = _window_values(fn, (z_lo, z_hi), n)
        if np.any(~(v > 0)):
            raise ValueError(f"function vanishes on the window [{window[0]:g}, {window[1]:g}] and its widening")
    fit = loglog_slope(zip(z, v))
    ratios = []
    for zi, vi in zip(z, v):
        if zi * tau <= z_hi * (1 + 1e-12) and zi * tau >= z_lo:
            ratios.append(math.log(float(fn(zi * tau)) / vi) / math.log(tau))
    ratio = (float(np.mean(ratios)) + offset) if ratios else math.nan
    # slopes on three sub-windows, nearest to 0 last
    thirds = np.array_split(np.arange(n), 3)
    slopes = tuple(loglog_slope(zip(z[i], v[i])).slope + offset for i in reversed(thirds))
    increasing = all(b > a for a, b in zip(slopes, slopes[1:]))
    jump = slopes[-1] - slopes[0]
    if increasing and jump > rapid_jump:
        diag = f"window slopes {', '.join(f'{s:.3f}' for s in slopes)} keep growing toward 0 (jump {jump:.3f} > {rapid_jump})"
        return ExponentReport(math.inf, 0.0, method, (z_lo, z_hi), ratio, slopes, diag)
    return ExponentReport(fit.slope + offset, fit.stderr, method, (z_lo, z_hi), ratio, slopes)


def exponent_from_cdf(
    F: Callable, window: tuple[float, float] = (1e-8, 1e-5), tau: float = 2.0, n: int = 40, rapid_jump: float = 0.5
) -> ExponentReport:
    """Variation exponent at 0 of a CDF from its log-log slope on ``window``.

    The +inf verdict is issued when the slopes of three successive
    sub-windows grow monotonically toward 0 by more than ``rapid_jump``.
    """
    return _exponent(F, window, 0.0, "cdf-slope", tau, n, rapid_jump)


def exponent_from_pdf(
    f: Callable, window: tuple[float, float] = (1e-8, 1e-5), tau: float = 2.0, n: int = 40, rapid_jump: float = 0.5
) -> ExponentReport:
    """Exponent from a density: slope of ``log f`` plus one."""
    return _exponent(f, window, 1.0, "pdf-slope", tau, n, rapid_jump)


def laplace_stieltjes(F: Callable, s: float, upper: float = math.inf) -> float:
    """``int e^{-s x} dF(x) = int_0^inf e^{-u} F(u/s) du``.

    Computed in ``log u`` so that tiny ``F(u/s)`` at large ``s`` keeps its
    relative accuracy.  ``upper`` (optional) is where ``F`` reaches 1.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    t_hi = math.log(800.0)

    def integrand(t):
        u = math.exp(t)
        x = u / s
        Fx = 1.0 if x >= upper else float(F(x))
        return math.exp(t - u) * Fx

    # below u = e^-120 the integrand is at most u: negligible
    return integrate(integrand, -120.0, t_hi, LS_QUAD, points=[0.0, math.log(s)])


@dataclass(frozen=True)
class TauberianReport:
    channel: str
    passed: bool
    cdf_exponent: ExponentReport
    transform_exponent: float
    transform_stderr: float
    tolerance: float
    ratio: float | None = None
    ratio_ok: bool | None = None
    notes: list[str] = field(default_factory=list)

    def summary(self) -> str:
        lines = [
            f"channel            {self.channel}",
            f"cdf exponent       {self.cdf_exponent.estimate:.5f} +/- {self.cdf_exponent.stderr:.2e}",
            f"transform exponent {self.transform_exponent:.5f} +/- {self.transform_stderr:.2e}",
            f"tolerance          {self.tolerance}",
        ]
        if self.ratio is not None:
            lines.append(f"L(s)/(Gamma(d+1)F(1/s)) at s=1e6: {self.ratio:.6f} ({'ok' if self.ratio_ok else 'FAIL'})")
        lines += self.notes
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def tauberian_check(
    ch,
    cdf_window: tuple[float, float] = (1e-7, 1e-4),
    s_window: tuple[float, float] = (1e4, 1e7),
    n_s: int = 13,
) -> TauberianReport:
    """Compare the CDF-side exponent with minus the transform-side exponent."""
    if math.isinf(ch.exponent):
        raise ValueError(f"{ch.name}: rapidly varying channel, no finite exponent to check")
    cdf_rep = exponent_from_cdf(ch.cdf, cdf_window)
    s_grid = np.logspace(math.log10(s_window[0]), math.log10(s_window[1]), n_s)
    L = [laplace_stieltjes(ch.cdf, s, ch.upper) for s in s_grid]
    fit = loglog_slope(zip(s_grid, L))
    transform_exp = -fit.slope
    divergent = not math.isfinite(ch.slowly_varying_limit)
    nonconstant = ch.family == "gk"
    tol = 0.1 if (divergent or nonconstant) else 0.02
    agree = abs(cdf_rep.estimate - transform_exp) <= tol
    notes = []
    ratio = ratio_ok = None
    if divergent:
        notes.append("slowly varying factor diverges at 0: sharpened ratio check skipped")
    else:
        s = 1e6
        ratio = laplace_stieltjes(ch.cdf, s, ch.upper) / (gamma_fn(ch.exponent + 1.0) * float(ch.cdf(1.0 / s)))
        ratio_ok = 0.98 <= ratio <= 1.02
    passed = agree and (ratio_ok is not False)
    return TauberianReport(ch.name, passed, cdf_rep, transform_exp, fit.stderr, tol, ratio, ratio_ok, notes)
