"""Fading-channel power-gain distributions.

Every model describes the channel power gain ``z`` (instantaneous SNR is
``rho * z``) through its CDF, PDF, a sampler and the regular-variation data
at the origin: the exponent ``d`` and the slowly varying factor ``l`` with
``F(z) ~ z**d * l(z)`` as ``z -> 0``.

Channel descriptors use the grammar::

    descriptor = family [ ":" param { "," param } ] ;
    param      = name "=" number ;
    family     = "rayleigh" | "nakagami" | "weibull" | "gk" | "lognormal"
               | "rician" | "hoyt" ;

for example ``nakagami:m=2.5``, ``gk:m=2,k=1``, ``lognormal:sigma_db=8``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import special, stats
from scipy.interpolate import PchipInterpolator

from .numerics import EULER_GAMMA, QuadratureSpec, integrate

TAIL = 1e-20
_LN_TAIL = -math.log(TAIL)


class InvalidChannelError(ValueError):
    pass


class RapidVariationError(ValueError):
    """The channel CDF is rapidly varying at 0 (d = infinity)."""

    def __init__(self, name: str):
        super().__init__(
            f"channel {name!r} is rapidly varying at 0 (d=inf): its CDF vanishes "
            "faster than any power law, so no power-law asymptote exists"
        )


_ALIASES = {
    "rayleigh": "rayleigh",
    "nakagami": "nakagami",
    "nakagami-m": "nakagami",
    "weibull": "weibull",
    "gk": "gk",
    "generalized-k": "gk",
    "lognormal": "lognormal",
    "rician": "rician",
    "ricean": "rician",
    "nakagami-k": "rician",
    "hoyt": "hoyt",
    "nakagami-q": "hoyt",
}

_PARAMS = {
    "rayleigh": ({}, set()),
    "nakagami": ({}, {"m"}),
    "weibull": ({}, {"k"}),
    "gk": ({}, {"m", "k"}),
    "lognormal": ({"mu_db": 0.0}, {"sigma_db"}),
    "rician": ({}, {"K"}),
    "hoyt": ({}, {"q"}),
}


@dataclass(frozen=True)
class ChannelSpec:
    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _PARAMS:
            raise InvalidChannelError(f"unknown channel family {self.family!r}")
        defaults, required = _PARAMS[self.family]
        allowed = required | set(defaults)
        missing = required - set(self.params)
        extra = set(self.params) - allowed
        if missing:
            raise InvalidChannelError(f"{self.family}: missing parameter(s) {sorted(missing)}")
        if extra:
            raise InvalidChannelError(f"{self.family}: unknown parameter(s) {sorted(extra)}")
        p = {**defaults, **self.params}
        object.__setattr__(self, "params", p)
        for key in ("m", "k", "sigma_db"):
            if key in p and not (p[key] > 0 and math.isfinite(p[key])):
                raise InvalidChannelError(f"{self.family}: {key} must be positive, got {p[key]}")
        if "K" in p and not (p["K"] >= 0 and math.isfinite(p["K"])):
            raise InvalidChannelError(f"rician: K must be >= 0, got {p['K']}")
        if "q" in p and not 0 < p["q"] <= 1:
            raise InvalidChannelError(f"hoyt: q must lie in (0, 1], got {p['q']}")

    @classmethod
    def parse(cls, text: str) -> "ChannelSpec":
        text = text.strip()
        head, _, tail = text.partition(":")
        family = _ALIASES.get(head.strip().lower())
        if family is None:
            raise InvalidChannelError(f"unknown channel family {head.strip()!r}")
        params: dict[str, float] = {}
        if tail.strip():
            for item in tail.split(","):
                key, eq, value = item.partition("=")
                if not eq:
                    raise InvalidChannelError(f"malformed parameter {item!r} in {text!r}")
                key = key.strip()
                if family != "rician":
                    key = key.lower() if key.lower() != "sigma_db" else "sigma_db"
                try:
                    params[key] = float(value)
                except ValueError:
                    raise InvalidChannelError(f"non-numeric value in {item!r}") from None
        return cls(family, params)

    def __str__(self):
        if not self.params:
            return self.family
        return self.family + ":" + ",".join(f"{k}={v:g}" for k, v in self.params.items())


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Immutable description of a channel power-gain distribution.

    ``upper`` is a point with ``P(z > upper) < 1e-20``; quadratures over the
    gain never need to look beyond it.  ``slowly_varying_limit`` is
    ``lim l(z)`` at 0 (``inf`` when ``l`` diverges, ``nan`` when ``d = inf``).
    """

    name: str
    family: str
    params: Mapping[str, float]
    cdf: Callable
    pdf: Callable | None
    sampler: Callable[[np.random.Generator, int], np.ndarray]
    exponent: float
    slowly_varying: Callable | None
    slowly_varying_limit: float
    upper: float
    mean_power: float = 1.0
    bulk_cdf: Callable | None = None

    @property
    def rapidly_varying(self) -> bool:
        return math.isinf(self.exponent)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sampler(rng, n)

    def cdf_many(self, z) -> np.ndarray:
        """CDF for large arrays (uses a cached table where the exact CDF is slow)."""
        f = self.bulk_cdf or self.cdf
        return f(z)

    def cdf_asymptote(self, z):
        return cdf_asymptote(self, z)

    def __repr__(self):
        return f"ChannelModel({self.name!r}, d={self.exponent:g})"


def _as_array(z):
    return np.asarray(z, dtype=float)


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def _rayleigh() -> ChannelModel:
    return ChannelModel(
        name="rayleigh",
        family="rayleigh",
        params={},
        cdf=lambda z: _ret(-np.expm1(-_as_array(z))),
        pdf=lambda z: _ret(np.exp(-_as_array(z))),
        sampler=lambda rng, n: rng.exponential(1.0, n),
        exponent=1.0,
        slowly_varying=lambda z: _ret(np.ones_like(_as_array(z))),
        slowly_varying_limit=1.0,
        upper=_LN_TAIL,
    )


def _nakagami(m: float) -> ChannelModel:
    # Unit mean: z ~ Gamma(shape m, scale 1/m); F(z) = P(m, m z) normalized.
    log_norm = m * math.log(m) - special.gammaln(m)

    def pdf(z):
        z = _as_array(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(log_norm + (m - 1.0) * np.log(z) - m * z)
        return _ret(np.where(z < 0, 0.0, out))

    l0 = math.exp((m - 1.0) * math.log(m) - special.gammaln(m))
    return ChannelModel(
        name=f"nakagami:m={m:g}",
        family="nakagami",
        params={"m": m},
        cdf=lambda z: _ret(special.gammainc(m, m * _as_array(z))),
        pdf=pdf,
        sampler=lambda rng, n: rng.gamma(m, 1.0 / m, n),
        exponent=m,
        # P(m, x) ~ x**m / Gamma(m + 1) gives l(z) -> m**(m-1) / Gamma(m)
        slowly_varying=lambda z: _ret(l0 * np.ones_like(_as_array(z))),
        slowly_varying_limit=l0,
        upper=float(special.gammainccinv(m, TAIL)) / m,
    )


def _weibull(k: float) -> ChannelModel:
    def pdf(z):
        z = _as_array(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = k * np.power(z, k - 1.0) * np.exp(-np.power(z, k))
        return _ret(np.where(z < 0, 0.0, out))

    return ChannelModel(
        name=f"weibull:k={k:g}",
        family="weibull",
        params={"k": k},
        cdf=lambda z: _ret(-np.expm1(-np.power(_as_array(z), k))),
        pdf=pdf,
        sampler=lambda rng, n: rng.weibull(k, n),
        exponent=k,
        slowly_varying=lambda z: _ret(np.ones_like(_as_array(z))),
        slowly_varying_limit=1.0,
        upper=_LN_TAIL ** (1.0 / k),
        mean_power=math.gamma(1.0 + 1.0 / k),
    )


def _lognormal(sigma_db: float, mu_db: float) -> ChannelModel:
    s = sigma_db * math.log(10.0) / 10.0
    mu = mu_db * math.log(10.0) / 10.0

    def cdf(z):
        z = _as_array(z)
        with np.errstate(divide="ignore"):
            return _ret(special.ndtr((np.log(z) - mu) / s))

    def pdf(z):
        z = _as_array(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            lz = np.log(z)
            out = np.exp(-0.5 * ((lz - mu) / s) ** 2 - lz) / (s * math.sqrt(2 * math.pi))
        return _ret(np.where(z > 0, out, 0.0))

    return ChannelModel(
        name=f"lognormal:sigma_db={sigma_db:g}" + (f",mu_db={mu_db:g}" if mu_db else ""),
        family="lognormal",
        params={"sigma_db": sigma_db, "mu_db": mu_db},
        cdf=cdf,
        pdf=pdf,
        sampler=lambda rng, n: np.exp(rng.normal(mu, s, n)),
        exponent=math.inf,
        slowly_varying=None,
        slowly_varying_limit=math.nan,
        upper=math.exp(mu + 9.5 * s),
        mean_power=math.exp(mu + 0.5 * s * s),
    )


def _rician(K: float) -> ChannelModel:
    if K == 0:
        ch = _rayleigh()
        return ChannelModel(**{**ch.__dict__, "name": "rician:K=0", "family": "rician", "params": {"K": 0.0}})
    nc = 2.0 * K
    scale = 2.0 * (1.0 + K)
    dist = stats.ncx2(2, nc)
    # pdf(0) = (1+K) e^{-K} I0(0), so F(z) = (1+K) e^{-K} z (1 + O(z)).
    l0 = (1.0 + K) * math.exp(-K)
    los = math.sqrt(K / (K + 1.0))
    sd = math.sqrt(1.0 / (2.0 * (K + 1.0)))

    def pdf(z):
        z = _as_array(z)
        x = 2.0 * np.sqrt(K * (1.0 + K) * np.clip(z, 0, None))
        out = (1.0 + K) * special.i0e(x) * np.exp(x - K - (1.0 + K) * z)
        return _ret(np.where(z < 0, 0.0, out))

    def sampler(rng, n):
        g = rng.standard_normal((2, n))
        return (los + sd * g[0]) ** 2 + (sd * g[1]) ** 2

    return ChannelModel(
        name=f"rician:K={K:g}",
        family="rician",
        params={"K": K},
        cdf=lambda z: _ret(dist.cdf(scale * _as_array(z))),
        pdf=pdf,
        sampler=sampler,
        exponent=1.0,
        slowly_varying=lambda z: _ret(l0 * np.ones_like(_as_array(z))),
        slowly_varying_limit=l0,
        upper=float(dist.isf(TAIL)) / scale,
    )


def _hoyt(q: float) -> ChannelModel:
    # In-phase / quadrature variances with ratio q^2 and unit total power.
    vx = 1.0 / (1.0 + q * q)
    vy = q * q / (1.0 + q * q)
    a = (1.0 / vx + 1.0 / vy) / 4.0
    b = (1.0 / vy - 1.0 / vx) / 4.0
    norm = 1.0 / (2.0 * math.sqrt(vx * vy))  # = (1 + q^2) / (2 q) = pdf(0)
    nodes = 128
    phi = (np.arange(nodes) + 0.5) * (0.5 * math.pi / nodes)
    c = np.cos(phi) ** 2 / (2 * vx) + np.sin(phi) ** 2 / (2 * vy)

    def cdf(z):
        # Polar form: F(z) = (1/(4 pi sx sy)) \int_0^{2pi} (1 - e^{-z c(phi)}) / c(phi) dphi.
        # Smooth and periodic, so the midpoint rule converges geometrically.
        z = _as_array(z)
        flat = np.clip(z.reshape(-1), 0, None)
        out = np.empty_like(flat)
        for i in range(0, flat.size, 8192):
            blk = flat[i : i + 8192, None]
            out[i : i + 8192] = (-np.expm1(-blk * c) / c).mean(axis=1)
        return _ret((out * norm).reshape(z.shape))

    def pdf(z):
        z = _as_array(z)
        zz = np.clip(z, 0, None)
        out = norm * special.i0e(b * zz) * np.exp(-(a - b) * zz)
        return _ret(np.where(z < 0, 0.0, out))

    def sampler(rng, n):
        g = rng.standard_normal((2, n))
        return vx * g[0] ** 2 + vy * g[1] ** 2

    return ChannelModel(
        name=f"hoyt:q={q:g}",
        family="hoyt",
        params={"q": q},
        cdf=cdf,
        pdf=pdf,
        sampler=sampler,
        exponent=1.0,
        slowly_varying=lambda z: _ret(norm * np.ones_like(_as_array(z))),
        slowly_varying_limit=norm,
        upper=2.0 * vx * _LN_TAIL,
    )


_GK_QUAD = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-300, max_subdivisions=400)


def _gk(m: float, k: float) -> ChannelModel:
    # z = x * y with x ~ Gamma(m, 1/m), y ~ Gamma(k, 1/k) independent, unit means.
    log_pdf_norm = math.log(2.0) + 0.5 * (k + m) * math.log(k * m) - special.gammaln(m) - special.gammaln(k)
    nu = k - m
    y_norm = k * math.log(k) - special.gammaln(k)
    t_hi = math.log((_LN_TAIL + 60.0 + 10.0 * k) / k)

    def pdf(z):
        z = _as_array(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = 2.0 * np.sqrt(k * m * z)
            out = np.exp(log_pdf_norm + 0.5 * (k + m - 2.0) * np.log(z) + np.log(special.kve(nu, x)) - x)
        return _ret(np.where(z > 0, out, 0.0))

    def cdf_scalar(z: float) -> float:
        if z <= 0:
            return 0.0
        lz = math.log(z)

        def integrand(t):
            # E_y[P(m, m z / y)] in log-y coordinates
            return special.gammainc(m, m * z * math.exp(-t)) * math.exp(y_norm + k * t - k * math.exp(t))

        lo = min(lz, 0.0) - 90.0 / k
        return min(1.0, integrate(integrand, lo, t_hi, _GK_QUAD, points=[lz, 0.0]))

    def cdf(z):
        z = _as_array(z)
        if z.ndim == 0:
            return cdf_scalar(float(z))
        return np.array([cdf_scalar(float(v)) for v in z.reshape(-1)]).reshape(z.shape)

    table: dict = {}

    def bulk_cdf(z):
        # Log-log monotone interpolation on [1e-12, 50]; exact outside.
        if "f" not in table:
            grid = np.logspace(-12, math.log10(50.0), 600)
            vals = np.array([cdf_scalar(g) for g in grid])
            table["f"] = PchipInterpolator(np.log(grid), np.log(vals))
        z = _as_array(z)
        flat = z.reshape(-1)
        out = np.empty_like(flat)
        inside = (flat >= 1e-12) & (flat <= 50.0)
        out[inside] = np.exp(table["f"](np.log(flat[inside])))
        for i in np.flatnonzero(~inside):
            out[i] = cdf_scalar(float(flat[i]))
        return _ret(np.minimum(out, 1.0).reshape(z.shape))

    a, b = min(m, k), max(m, k)
    if m == k:
        # From K_0(x) ~ -log(x/2) - gamma_em: f(z) ~ 2 m^{2m} z^{m-1}(-log(m sqrt z) - gamma_em) / Gamma(m)^2;
        # integrating gives F(z) ~ 2 m^{2m-1} z^m (-log(z)/2 - log m - gamma_em + 1/(2m)) / Gamma(m)^2.
        cst = 2.0 * m ** (2.0 * m - 1.0) / math.gamma(m) ** 2
        off = -math.log(m) - EULER_GAMMA + 0.5 / m

        def slowly_varying(z):
            return _ret(cst * (-0.5 * np.log(_as_array(z)) + off))

        l0 = math.inf
    else:
        # Smaller shape a dominates: F(z) ~ E[P(a, a z / Y)] with Y ~ Gamma(b, 1/b),
        # E[Y^-a] = b^a Gamma(b - a) / Gamma(b)  =>  l = (a b)^a Gamma(b - a) / (Gamma(a + 1) Gamma(b)).
        l0 = math.exp(a * math.log(a * b) + special.gammaln(b - a) - special.gammaln(a + 1) - special.gammaln(b))

        def slowly_varying(z):
            return _ret(l0 * np.ones_like(_as_array(z)))

    upper = (float(special.gammainccinv(m, TAIL)) / m) * (float(special.gammainccinv(k, TAIL)) / k)
    return ChannelModel(
        name=f"gk:m={m:g},k={k:g}",
        family="gk",
        params={"m": m, "k": k},
        cdf=cdf,
        pdf=pdf,
        sampler=lambda rng, n: rng.gamma(m, 1.0 / m, n) * rng.gamma(k, 1.0 / k, n),
        exponent=a,
        slowly_varying=slowly_varying,
        slowly_varying_limit=l0,
        upper=upper,
        bulk_cdf=bulk_cdf,
    )


def make_channel(spec: ChannelSpec | str) -> ChannelModel:
    """Build a :class:`ChannelModel` from a spec or descriptor string."""
    if isinstance(spec, str):
        spec = ChannelSpec.parse(spec)
    p = spec.params
    fam = spec.family
    if fam == "rayleigh":
        return _rayleigh()
    if fam == "nakagami":
        return _nakagami(p["m"])
    if fam == "weibull":
        return _weibull(p["k"])
    if fam == "gk":
        return _gk(p["m"], p["k"])
    if fam == "lognormal":
        return _lognormal(p["sigma_db"], p["mu_db"])
    if fam == "rician":
        return _rician(p["K"])
    if fam == "hoyt":
        return _hoyt(p["q"])
    raise InvalidChannelError(f"unknown channel family {fam!r}")  # pragma: no cover


def cdf_asymptote(ch: ChannelModel, z):
    """Leading small-z form ``z**d * l(z)`` of the channel CDF."""
    if ch.rapidly_varying or ch.slowly_varying is None:
        raise RapidVariationError(ch.name)
    z = _as_array(z)
    if np.any(z <= 0):
        raise ValueError("z must be positive")
    return _ret(np.power(z, ch.exponent) * ch.slowly_varying(z))


def sample_gain(ch: ChannelModel, rng: np.random.Generator, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return ch.sample(rng, n)


def sample_gain_weighted(ch: ChannelModel, rng: np.random.Generator, n: int, shrink: float, fraction: float):
    """Draws from a defensive mixture that oversamples deep fades.

    With probability ``fraction`` a draw is the channel gain multiplied by
    ``shrink`` (< 1); otherwise it is an ordinary draw.  Returns ``(z, w)``
    where ``w = f(z) / q(z)`` is the likelihood ratio against the mixture
    density ``q``, so ``mean(g(z) * w)`` is unbiased for ``E[g(z)]``.
    The weights are bounded by ``1 / (1 - fraction)``.
    """
    if ch.pdf is None:
        raise ValueError(f"{ch.name}: importance sampling needs a pdf")
    if not (0 < shrink <= 1 and 0 <= fraction < 1):
        raise ValueError("need 0 < shrink <= 1 and 0 <= fraction < 1")
    pick = rng.random(n) < fraction
    z = ch.sample(rng, n)
    if shrink == 1.0 or fraction == 0.0:
        return z, np.ones(n)
    z = np.where(pick, z * shrink, z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.asarray(ch.pdf(z / shrink), dtype=float) / (shrink * np.asarray(ch.pdf(z), dtype=float))
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    w = 1.0 / ((1.0 - fraction) + fraction * ratio)
    return z, w
