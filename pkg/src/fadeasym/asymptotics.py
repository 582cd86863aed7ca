"""High-SNR asymptotic average error rates and their quadrature oracles.

For an exponential error rate ``beta exp(-alpha x)`` over a channel whose CDF
has variation exponent ``d`` at 0::

    Pe_avg(rho) ~ beta Gamma(d+1) F(1 / (alpha rho))

and for an exponential mixture::

    Pe_avg(rho) ~ Gamma(d+1) (int g2 g1**d dtheta) F(1 / rho)

Both have the shape ``C1 F(C2 / rho)`` (a scaled outage probability), which
:class:`AsymptoticEstimate` stores.  Signed linear combinations collapse to
``C2 = 1`` with ``C1 = sum a_j C1j C2j**d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channels import RapidVariationError
from .error_models import ErrorClass, ErrorRateModel, InvalidModelError, as_mixture
from .numerics import QuadratureSpec, SlopeFit, gamma_fn, integrate, loglog_slope

EXACT_QUAD = QuadratureSpec(rel_tol=1e-9, abs_tol=1e-300, max_subdivisions=2000)

# exp(-800) underflows; beyond x = 800 / alpha the bound makes Pe irrelevant
_X_CUT = 800.0
_LOG_SPAN = 92.0  # integrate z over [z_hi * e^-92, z_hi]


def _require_finite(ch):
    if math.isinf(ch.exponent):
        raise RapidVariationError(ch.name)


@dataclass(frozen=True, eq=False)
class AsymptoticEstimate:
    """``rho -> c1 * F(c2 / rho)`` with ``F`` the (combined) channel CDF."""

    exponent: float
    c1: float
    c2: float
    channel: object
    label: str = ""

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise InvalidModelError(f"asymptote constants must be positive (c1={self.c1}, c2={self.c2})")

    @property
    def coefficient(self) -> float:
        """``A = c1 * c2**d`` so that the estimate is ``~ A rho**-d l(1/rho)``."""
        return self.c1 * self.c2**self.exponent

    @property
    def leading_constant(self) -> float:
        """``A * l(0+)``: the constant of ``rho**-d`` when ``l`` has a finite limit."""
        return self.coefficient * self.channel.slowly_varying_limit

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = self.c1 * np.asarray(self.channel.cdf(self.c2 / rho), dtype=float)
        return float(out) if out.ndim == 0 else out

    def power_law(self, rho):
        """Leading form ``A rho**-d l(1/rho)``."""
        rho = np.asarray(rho, dtype=float)
        z = 1.0 / rho
        out = self.coefficient * z**self.exponent * np.asarray(self.channel.slowly_varying(z), dtype=float)
        return float(out) if out.ndim == 0 else out


def asymptote_exponential(model: ErrorRateModel, ch) -> AsymptoticEstimate:
    if model.kind is not ErrorClass.EXPONENTIAL:
        raise InvalidModelError(f"{model.label} is not a pure exponential error rate")
    _require_finite(ch)
    d = ch.exponent
    alpha, beta = model.exact.alpha, model.exact.beta
    return AsymptoticEstimate(d, beta * gamma_fn(d + 1.0), 1.0 / alpha, ch, model.label)


def asymptote_mixture(model: ErrorRateModel, ch) -> AsymptoticEstimate:
    if model.kind is not ErrorClass.MIXTURE:
        raise InvalidModelError(f"{model.label} is not an exponential-mixture error rate")
    _require_finite(ch)
    d = ch.exponent
    c1 = gamma_fn(d + 1.0) * model.mixture.moment(d)
    return AsymptoticEstimate(d, c1, 1.0, ch, model.label)


def asymptote_combination(model_or_terms, ch, label: str = "combination") -> AsymptoticEstimate:
    """Signed rule ``sum a_j C1j C2j**d F(1/rho)``.

    Accepts a ``COMBINATION`` model or a sequence of ``(a_j, component)``.
    """
    if isinstance(model_or_terms, ErrorRateModel):
        if model_or_terms.kind is not ErrorClass.COMBINATION:
            raise InvalidModelError(f"{model_or_terms.label} is not a linear combination")
        terms = model_or_terms.terms
        label = model_or_terms.label
    else:
        terms = tuple(model_or_terms)
    _require_finite(ch)
    parts = [a * asymptote(m, ch).coefficient for a, m in terms]
    total = math.fsum(parts)
    scale = math.fsum(abs(p) for p in parts)
    if not total > 1e-12 * scale:
        raise InvalidModelError(f"{label}: combined asymptotic coefficient {total:g} is not positive")
    return AsymptoticEstimate(ch.exponent, total, 1.0, ch, label)


def asymptote(model: ErrorRateModel, ch) -> AsymptoticEstimate:
    """Dispatch on the model class."""
    if model.kind is ErrorClass.EXPONENTIAL:
        return asymptote_exponential(model, ch)
    if model.kind is ErrorClass.MIXTURE:
        return asymptote_mixture(model, ch)
    if model.kind is ErrorClass.COMBINATION:
        return asymptote_combination(model, ch)
    raise InvalidModelError(
        f"{model.label}: only an exponential bound is known; use bounds_check or "
        "empirical_diversity_order instead of a closed-form asymptote"
    )


def _density(ch):
    if ch.pdf is not None:
        return ch.pdf
    h = 1e-4

    def pdf(z):
        return (ch.cdf(z * math.exp(h)) - ch.cdf(z * math.exp(-h))) / (z * 2.0 * math.sinh(h))

    return pdf


def gain_average(g, ch, rho: float, alpha: float, spec: QuadratureSpec = EXACT_QUAD) -> float:
    """``E[g(rho z)]`` for a nonincreasing ``g`` bounded by ``beta exp(-alpha x)``.

    Integrates in ``s = log z`` so that power-law mass near ``z = 0`` and
    the ``1/rho`` transition are both resolved; the sliver below the lower
    cutoff contributes ``g(rho z_lo) F(z_lo)``.
    """
    if not rho > 0:
        raise ValueError("rho must be positive")
    pdf = _density(ch)
    z_hi = min(ch.upper, _X_CUT / (alpha * rho))
    s_hi = math.log(z_hi)
    s_lo = s_hi - _LOG_SPAN

    def integrand(s):
        z = math.exp(s)
        return float(g(rho * z)) * float(pdf(z)) * z

    points = [-math.log(alpha * rho), 0.0, s_hi - 10.0]
    body = integrate(integrand, s_lo, s_hi, spec, points=points)
    z_lo = math.exp(s_lo)
    return body + float(g(rho * z_lo)) * float(ch.cdf(z_lo))


def exact_average(model: ErrorRateModel, ch, rho: float, spec: QuadratureSpec = EXACT_QUAD) -> float:
    """Average error rate ``E[Pe(rho z)]`` by adaptive quadrature (the oracle)."""
    return gain_average(model.pe, ch, rho, model.bound.alpha, spec)


@dataclass(frozen=True)
class Bounds:
    lower: float
    exact: float
    upper: float

    @property
    def ordered(self) -> bool:
        return self.lower <= self.exact <= self.upper

    def __iter__(self):
        return iter((self.lower, self.exact, self.upper))


def bounds_check(model: ErrorRateModel, ch, rho: float, eta: float = 1.0) -> Bounds:
    """Sandwich ``Pe(eta) F(eta/rho) <= Pe_avg(rho) <= E[beta exp(-alpha rho z)]``."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    b = model.bound
    lower = float(model.pe(np.float64(eta))) * float(ch.cdf(eta / rho))
    exact = exact_average(model, ch, rho)
    upper = gain_average(b, ch, rho, b.alpha)
    return Bounds(lower, exact, upper)


def _same_channel(a, b) -> bool:
    return a is b or getattr(a, "name", None) == getattr(b, "name", object())


def snr_offset_db(e1: AsymptoticEstimate, e2: AsymptoticEstimate) -> float:
    """Horizontal gap (dB) between two asymptotes on the same channel.

    Positive when system 1 needs more SNR than system 2 for the same error rate.
    """
    if not math.isclose(e1.exponent, e2.exponent, rel_tol=1e-12):
        raise ValueError(f"exponents differ ({e1.exponent} vs {e2.exponent}): no constant SNR offset")
    if not _same_channel(e1.channel, e2.channel):
        raise ValueError("estimates refer to different channels")
    return 10.0 / e1.exponent * math.log10(e1.coefficient / e2.coefficient)


@dataclass(frozen=True)
class WangEstimate:
    """PDF-based estimate ``(G rho)**-d`` from ``f(z) ~ a z**(d-1)``."""

    order: float
    gain: float
    prefactor: float

    def __post_init__(self):
        if not (self.order > 0 and self.gain > 0 and self.prefactor > 0):
            raise ValueError("Wang estimate fields must be positive")

    def __call__(self, rho):
        out = (self.gain * np.asarray(rho, dtype=float)) ** (-self.order)
        return float(out) if np.ndim(out) == 0 else out


def wang_estimate(a: float, d: float, alpha: float, beta: float) -> WangEstimate:
    """Array gain for ``Pe(x) = Q(sqrt(alpha x)) / beta`` (BPSK: alpha=2, beta=1)."""
    if min(a, d, alpha, beta) <= 0:
        raise ValueError("a, d, alpha, beta must be positive")
    inner = 2.0 ** (d - 1.0) * a * gamma_fn(d + 0.5) / (beta * math.sqrt(math.pi) * d)
    return WangEstimate(d, alpha * inner ** (-1.0 / d), a)


def wang_estimate_exponential(a: float, d: float, alpha: float, beta: float) -> WangEstimate:
    """Same PDF-based construction for ``Pe(x) = beta exp(-alpha x)``.

    ``int beta exp(-alpha rho z) a z**(d-1) dz = beta a Gamma(d) (alpha rho)**-d``.
    """
    if min(a, d, alpha, beta) <= 0:
        raise ValueError("a, d, alpha, beta must be positive")
    return WangEstimate(d, alpha * (beta * a * gamma_fn(d)) ** (-1.0 / d), a)


def wang_for(model: ErrorRateModel, ch) -> WangEstimate:
    """Wang-Giannakis overlay for the built-in DPSK/BPSK models."""
    _require_finite(ch)
    l0 = ch.slowly_varying_limit
    if not (math.isfinite(l0) and l0 > 0):
        raise ValueError(f"{ch.name}: pdf has no power-law leading term (l(z) diverges); PDF-based estimate not applicable")
    d = ch.exponent
    a = d * l0
    if model.kind is ErrorClass.EXPONENTIAL:
        return wang_estimate_exponential(a, d, model.exact.alpha, model.exact.beta)
    if model.label in ("bpsk", "mpsk:M=2"):
        return wang_estimate(a, d, alpha=2.0, beta=1.0)
    raise ValueError(f"no Q-function convention mapped for {model.label}")


@dataclass(frozen=True)
class DiversityEstimate:
    order: float
    stderr: float
    fit: SlopeFit
    ratio_order: float
    window_orders: tuple[float, ...]
    drift: float
    converged: bool


def empirical_diversity_order(curve: Iterable[tuple[float, float]], tau: float = 2.0, max_drift: float = 0.2) -> DiversityEstimate:
    """Diversity order from a sampled curve ``[(rho, Pe_avg), ...]`` (rho linear).

    The log-log slope gives the main estimate; the ratio estimate uses
    ``Pe(tau rho) / Pe(rho)`` with log-log interpolation.  The curve is also
    cut into three consecutive windows; a spread of window slopes above
    ``max_drift`` marks the estimate as not converged.
    """
    pts = sorted((float(r), float(p)) for r, p in curve)
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    fit = loglog_slope(pts)
    order = -fit.slope
    lr = np.log([r for r, _ in pts])
    lp = np.log([p for _, p in pts])
    ratios = [
        -(np.interp(x + math.log(tau), lr, lp) - y) / math.log(tau)
        for x, y in zip(lr, lp)
        if x + math.log(tau) <= lr[-1] + 1e-12
    ]
    ratio_order = float(np.mean(ratios)) if ratios else math.nan
    windows: tuple[float, ...] = ()
    drift = 0.0
    if len(pts) >= 9:
        chunks = np.array_split(np.arange(len(pts)), 3)
        windows = tuple(-loglog_slope([pts[i] for i in c]).slope for c in chunks)
        drift = max(windows) - min(windows)
    return DiversityEstimate(order, fit.stderr, fit, ratio_order, windows, drift, drift <= max_drift)


def exact_curve(model: ErrorRateModel, ch, snr_db: Sequence[float]) -> list[tuple[float, float]]:
    """``[(snr_db, exact_average)]`` on a dB grid."""
    return [(float(s), exact_average(model, ch, 10.0 ** (s / 10.0))) for s in snr_db]


def high_snr_window(lo_db: float, decades: int = 3, per_decade: int = 20) -> np.ndarray:
    """Linear-rho grid spanning ``decades`` decades upward from ``lo_db``."""
    return np.logspace(lo_db / 10.0, lo_db / 10.0 + decades, decades * per_decade + 1)
