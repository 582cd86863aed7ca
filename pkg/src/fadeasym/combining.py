"""Diversity combining over independent, possibly non-identical branches.

The combined gain ``z_c`` has a CDF regularly varying at 0 with exponent
``d_c = sum d_n`` for all three schemes:

* MRC  ``z_c = sum z_n``;                 ``F_c ~ prod G(d_n+1) / G(d_c+1) * prod F_n(z)``
* EGC  ``z_c = (sum sqrt z_n)**2 / N``;   ``F_c ~ prod G(2d_n+1) / G(2d_c+1) * prod F_n(N z)``
* SC   ``z_c = max z_n``;                 ``F_c = prod F_n(z)`` exactly

(``G`` is the gamma function.)  EGC keeps the literal ``/ N`` normalization,
so its combined mean power is not 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import asymptotics
from .asymptotics import AsymptoticEstimate
from .channels import ChannelModel, RapidVariationError, make_channel, sample_gain_weighted
from .error_models import ErrorClass, ErrorRateModel, as_mixture
from .montecarlo import McConfig, McResult, mc_average_error
from .numerics import QuadratureSpec, gamma_fn, integrate
from .regvar import laplace_stieltjes


class Scheme(enum.Enum):
    MRC = "mrc"
    EGC = "egc"
    SC = "sc"


def _prod(values):
    out = 1.0
    for v in values:
        out = out * v
    return out


@dataclass(frozen=True, eq=False)
class CombinedChannel:
    """Post-combining channel; usable wherever a channel with ``cdf``/``exponent`` is expected.

    ``cdf`` is the asymptotic combined CDF (exact for SC); ``pdf`` exists only
    for SC.
    """

    scheme: Scheme
    branches: tuple[ChannelModel, ...]
    exponent: float
    prefactor: float
    name: str

    @property
    def family(self) -> str:
        return self.scheme.value

    @property
    def rapidly_varying(self) -> bool:
        return False

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        arg = z * len(self.branches) if self.scheme is Scheme.EGC else z
        out = self.prefactor * _prod(np.asarray(b.cdf(arg), dtype=float) for b in self.branches)
        return float(out) if np.ndim(out) == 0 else out

    def slowly_varying(self, z):
        z = np.asarray(z, dtype=float)
        if self.scheme is Scheme.EGC:
            n = len(self.branches)
            parts = (n ** b.exponent * np.asarray(b.slowly_varying(n * z), dtype=float) for b in self.branches)
        else:
            parts = (np.asarray(b.slowly_varying(z), dtype=float) for b in self.branches)
        out = self.prefactor * _prod(parts)
        return float(out) if np.ndim(out) == 0 else out

    @property
    def slowly_varying_limit(self) -> float:
        n = len(self.branches) if self.scheme is Scheme.EGC else 1
        return self.prefactor * _prod(n**b.exponent * b.slowly_varying_limit for b in self.branches)

    @property
    def pdf(self) -> Callable | None:
        if self.scheme is not Scheme.SC:
            return None
        branches = self.branches

        def pdf(z):
            z = np.asarray(z, dtype=float)
            Fs = [np.asarray(b.cdf(z), dtype=float) for b in branches]
            fs = [np.asarray(b.pdf(z), dtype=float) for b in branches]
            out = sum(fs[i] * _prod(Fs[j] for j in range(len(branches)) if j != i) for i in range(len(branches)))
            return float(out) if np.ndim(out) == 0 else out

        return pdf

    @property
    def upper(self) -> float:
        if self.scheme is Scheme.MRC:
            return sum(b.upper for b in self.branches)
        return max(b.upper for b in self.branches) * (1.0 if self.scheme is Scheme.SC else len(self.branches))

    def _combine(self, zs: np.ndarray) -> np.ndarray:
        if self.scheme is Scheme.MRC:
            return zs.sum(axis=0)
        if self.scheme is Scheme.EGC:
            return np.sqrt(zs).sum(axis=0) ** 2 / zs.shape[0]
        return zs.max(axis=0)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self._combine(np.stack([b.sample(rng, n) for b in self.branches]))

    def sample_weighted(self, rng: np.random.Generator, n: int, shrink: float, fraction: float):
        """Branch-wise defensive mixtures; ``fraction`` is the probability that *all* branches are shrunk."""
        per_branch = fraction ** (1.0 / len(self.branches))
        draws = [sample_gain_weighted(b, rng, n, shrink, per_branch) for b in self.branches]
        z = self._combine(np.stack([d[0] for d in draws]))
        w = _prod(d[1] for d in draws)
        return z, w

    def __repr__(self):
        return f"CombinedChannel({self.name!r}, d_c={self.exponent:g})"


def combine(scheme: Scheme | str, branches: Sequence[ChannelModel | str]) -> CombinedChannel:
    scheme = Scheme(scheme.lower()) if isinstance(scheme, str) else scheme
    chans = tuple(make_channel(b) if isinstance(b, str) else b for b in branches)
    if not chans:
        raise ValueError("need at least one branch")
    for b in chans:
        if math.isinf(b.exponent):
            raise RapidVariationError(b.name)
    ds = [b.exponent for b in chans]
    dc = math.fsum(ds)
    if scheme is Scheme.MRC:
        pref = _prod(gamma_fn(d + 1.0) for d in ds) / gamma_fn(dc + 1.0)
    elif scheme is Scheme.EGC:
        pref = _prod(gamma_fn(2.0 * d + 1.0) for d in ds) / gamma_fn(2.0 * dc + 1.0)
    else:
        pref = 1.0
    name = f"{scheme.value}[{' | '.join(b.name for b in chans)}]"
    return CombinedChannel(scheme, chans, dc, pref, name)


def combined_asymptote(model: ErrorRateModel, cc: CombinedChannel) -> AsymptoticEstimate:
    return asymptotics.asymptote(model, cc)


def _mrc_transform_average(model: ErrorRateModel, cc: CombinedChannel, rho: float) -> float:
    """MRC average through the product of branch transforms.

    ``E[exp(-s z_c)] = prod L_n(s)``; a mixture integrates that over theta.
    """
    def transform(s: float) -> float:
        out = 1.0
        for b in cc.branches:
            if b.family == "nakagami":
                m = b.params["m"]
                out *= (1.0 + s / m) ** (-m)
            elif b.family == "rayleigh":
                out *= 1.0 / (1.0 + s)
            else:
                out *= laplace_stieltjes(b.cdf, s, b.upper)
        return out

    def single(m: ErrorRateModel) -> float:
        if m.kind is ErrorClass.EXPONENTIAL:
            return m.exact.beta * transform(m.exact.alpha * rho)
        mix = as_mixture(m)

        def integrand(theta):
            g1 = mix.g1(theta)
            return mix.g2(theta) * transform(rho / g1) if g1 > 0 else 0.0

        return integrate(integrand, 0.0, mix.theta_t, QuadratureSpec(rel_tol=1e-10), points=mix._points())

    if model.kind is ErrorClass.COMBINATION:
        return math.fsum(a * single(m) for a, m in model.terms)
    return single(model)


def combined_quadrature_average(model: ErrorRateModel, cc: CombinedChannel, rho: float) -> float:
    """Deterministic oracle: transform product for MRC, exact max-CDF for SC.

    EGC has no such route; use :func:`combined_exact_average`.
    """
    if cc.scheme is Scheme.MRC:
        return _mrc_transform_average(model, cc, rho)
    if cc.scheme is Scheme.SC:
        return asymptotics.exact_average(model, cc, rho)
    raise NotImplementedError("no quadrature oracle for EGC; use Monte Carlo")


@dataclass(frozen=True)
class CombinedAverage:
    mc: McResult
    quadrature: float | None

    @property
    def estimate(self) -> float:
        return self.mc.estimate

    @property
    def halfwidth(self) -> float:
        return self.mc.halfwidth


def combined_exact_average(model: ErrorRateModel, cc: CombinedChannel, rho: float, cfg: McConfig | None = None) -> CombinedAverage:
    """Conditional-error Monte Carlo over the combined channel.

    The MRC/SC quadrature oracle is attached for cross-checking where available.
    """
    cfg = cfg or McConfig()
    mc = mc_average_error(model, cc, rho, cfg)
    quad = None
    if cc.scheme is not Scheme.EGC:
        quad = combined_quadrature_average(model, cc, rho)
    return CombinedAverage(mc, quad)
