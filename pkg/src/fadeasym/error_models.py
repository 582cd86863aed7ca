"""Instantaneous error-rate models ``Pe(x)``, ``x = rho * z``.

Models are classified by how much structure they expose:

* ``BOUNDED``      only an exponential upper bound ``Pe(x) <= beta exp(-alpha x)``;
* ``EXPONENTIAL``  ``Pe(x) = beta exp(-alpha x)`` exactly;
* ``MIXTURE``      ``Pe(x) = int_0^theta_t g2(theta) exp(-x / g1(theta)) dtheta``;
* ``COMBINATION``  a signed linear combination of exponential/mixture models.

Every exponential model is a one-point mixture and every mixture obeys an
exponential bound, so each richer class also carries a bound witness.

Modulation descriptors: ``dpsk``, ``bpsk``, ``mpsk:M=8``, ``mqam:M=16``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .numerics import QuadratureSpec, integrate, q_fn

MIXTURE_QUAD = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-300, max_subdivisions=2000)


class ErrorClass(enum.Enum):
    BOUNDED = "AS1a"
    EXPONENTIAL = "AS1b"
    MIXTURE = "AS1c"
    COMBINATION = "linear-combination"


class InvalidModelError(ValueError):
    pass


@dataclass(frozen=True)
class ExpBound:
    """``beta * exp(-alpha * x)``; used both as an exact form and as a bound."""

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidModelError(f"{name} must be finite and positive, got {v!r}")

    def __call__(self, x):
        return self.beta * np.exp(-self.alpha * np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class ExpMixture:
    theta_t: float
    g1: Callable[[float], float]
    g2: Callable[[float], float]
    label: str = "mixture"
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0 < self.theta_t < math.pi:
            raise InvalidModelError(f"theta_t must lie in (0, pi), got {self.theta_t!r}")

    def _points(self):
        pts = set(self.breakpoints)
        if self.theta_t > math.pi / 2:
            pts.add(math.pi / 2)
        return sorted(p for p in pts if 0 < p < self.theta_t)

    def evaluate(self, x: float) -> float:
        """Adaptive quadrature of the mixture at a single ``x >= 0``."""
        x = float(x)

        def integrand(theta):
            g1 = self.g1(theta)
            if g1 <= 0.0:
                return 0.0
            return self.g2(theta) * math.exp(-x / g1)

        return integrate(integrand, 0.0, self.theta_t, MIXTURE_QUAD, points=self._points())

    def moment(self, d: float) -> float:
        """``int_0^theta_t g2 * g1**d dtheta``."""
        def integrand(theta):
            g1 = self.g1(theta)
            return self.g2(theta) * g1**d if g1 > 0 else 0.0

        value = integrate(integrand, 0.0, self.theta_t, MIXTURE_QUAD, points=self._points())
        if not math.isfinite(value):
            raise InvalidModelError(f"mixture constant diverges for d={d}")
        return value


@dataclass(frozen=True, eq=False)
class ErrorRateModel:
    """An instantaneous error-rate function with its structural class.

    ``pe`` is vectorized over numpy arrays.  ``bound`` is always present: it is
    the exponential witness ``Pe(x) <= beta exp(-alpha x)``.
    """

    kind: ErrorClass
    pe: Callable
    bound: ExpBound
    label: str
    exact: ExpBound | None = None
    mixture: ExpMixture | None = None
    terms: tuple[tuple[float, "ErrorRateModel"], ...] = field(default=())

    def __call__(self, x):
        out = self.pe(np.asarray(x, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def __repr__(self):
        return f"ErrorRateModel({self.label!r}, {self.kind.value})"


def as_mixture(model: ErrorRateModel) -> ExpMixture:
    """Mixture representation of an exponential or mixture model."""
    if model.kind is ErrorClass.MIXTURE:
        return model.mixture
    if model.kind is ErrorClass.EXPONENTIAL:
        alpha, beta = model.exact.alpha, model.exact.beta
        theta_t = math.pi / 2
        return ExpMixture(theta_t, lambda t: 1.0 / alpha, lambda t: beta / theta_t, label=model.label)
    raise InvalidModelError(f"{model.label}: {model.kind.value} models have no single-mixture form")


def _gl_rule(theta_t: float, split: Sequence[float], panels: int, order: int):
    """Composite Gauss-Legendre nodes/weights on [0, theta_t] with panel edges at ``split``."""
    edges = [0.0, *sorted(s for s in split if 0 < s < theta_t), theta_t]
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges, edges[1:]):
        k = max(1, round(panels * (b - a) / theta_t))
        cuts = np.linspace(a, b, k + 1)
        for lo, hi in zip(cuts, cuts[1:]):
            half = 0.5 * (hi - lo)
            nodes.append(lo + half * (x + 1.0))
            weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _vectorized_mixture(g1_nodes: np.ndarray, g2w: np.ndarray) -> Callable:
    inv_g1 = 1.0 / g1_nodes

    def pe(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.empty_like(flat)
        for i in range(0, flat.size, 4096):
            blk = flat[i : i + 4096, None]
            out[i : i + 4096] = np.exp(-blk * inv_g1) @ g2w
        return out.reshape(x.shape)

    return pe


def dpsk_ber() -> ErrorRateModel:
    exact = ExpBound(alpha=1.0, beta=0.5)
    return ErrorRateModel(
        kind=ErrorClass.EXPONENTIAL,
        pe=lambda x: 0.5 * np.exp(-x),
        bound=exact,
        label="dpsk",
        exact=exact,
    )


def exponential_model(alpha: float, beta: float, label: str = "exponential") -> ErrorRateModel:
    exact = ExpBound(alpha, beta)
    return ErrorRateModel(ErrorClass.EXPONENTIAL, exact, exact, label, exact=exact)


def _craig_q_mixture(scale: float, label: str, squared: bool = False) -> ExpMixture:
    """Craig form of Q(sqrt(x / scale')) or its square, as g1 = scale * sin^2."""
    theta_t = math.pi / 4 if squared else math.pi / 2
    return ExpMixture(theta_t, lambda t: scale * math.sin(t) ** 2, lambda t: 1.0 / math.pi, label=label)


def bpsk_ber() -> ErrorRateModel:
    # Q(sqrt(2x)) = (1/pi) int_0^{pi/2} exp(-x / sin^2 theta) dtheta;
    # Chernoff: Q(u) <= exp(-u^2/2) / 2.
    return ErrorRateModel(
        kind=ErrorClass.MIXTURE,
        pe=lambda x: 0.5 * special.erfc(np.sqrt(np.clip(x, 0, None))),
        bound=ExpBound(alpha=1.0, beta=0.5),
        label="bpsk",
        mixture=_craig_q_mixture(1.0, "bpsk"),
    )


def mpsk_ser(M: int) -> ErrorRateModel:
    """M-PSK symbol error rate in its exponential-mixture (Craig) form."""
    if int(M) != M or M < 2:
        raise InvalidModelError(f"M-PSK needs integer M >= 2, got {M!r}")
    M = int(M)
    if M == 2:
        bp = bpsk_ber()
        return ErrorRateModel(
            kind=ErrorClass.MIXTURE,
            pe=bp.pe,
            bound=bp.bound,
            label="mpsk:M=2",
            mixture=ExpMixture(math.pi / 2, bp.mixture.g1, bp.mixture.g2, label="mpsk:M=2"),
        )
    s2 = math.sin(math.pi / M) ** 2
    theta_t = (1.0 - 1.0 / M) * math.pi
    mix = ExpMixture(theta_t, lambda t: math.sin(t) ** 2 / s2, lambda t: 1.0 / math.pi, label=f"mpsk:M={M}")
    nodes, weights = _gl_rule(theta_t, [math.pi / 2], panels=48, order=20)
    return ErrorRateModel(
        kind=ErrorClass.MIXTURE,
        pe=_vectorized_mixture(np.sin(nodes) ** 2 / s2, weights / math.pi),
        # exp(-x s2 / sin^2 theta) <= exp(-x s2) and (theta_t / pi) < 1
        bound=ExpBound(alpha=s2, beta=1.0),
        label=f"mpsk:M={M}",
        mixture=mix,
    )


def mqam_ser(M: int) -> ErrorRateModel:
    """Square M-QAM SER as ``c Q(u) - c^2/4 * 4 Q(u)^2`` with ``u^2 = 3x/(M-1)``."""
    r = math.isqrt(int(M)) if int(M) == M and M > 0 else 0
    if r < 2 or r * r != M:
        raise InvalidModelError(f"square M-QAM needs M a perfect square >= 4, got {M!r}")
    M = int(M)
    a = 1.0 - 1.0 / r
    g_scale = 2.0 * (M - 1) / 3.0
    u2 = 3.0 / (M - 1)

    q_single = ErrorRateModel(
        kind=ErrorClass.MIXTURE,
        pe=lambda x: q_fn(np.sqrt(u2 * np.clip(x, 0, None))),
        bound=ExpBound(alpha=u2 / 2.0, beta=0.5),
        label=f"Q(sqrt(3x/{M - 1}))",
        mixture=_craig_q_mixture(g_scale, "Q"),
    )
    q_square = ErrorRateModel(
        kind=ErrorClass.MIXTURE,
        pe=lambda x: q_fn(np.sqrt(u2 * np.clip(x, 0, None))) ** 2,
        bound=ExpBound(alpha=u2 / 2.0, beta=0.25),
        label=f"Q^2(sqrt(3x/{M - 1}))",
        mixture=_craig_q_mixture(g_scale, "Q^2", squared=True),
    )

    def pe(x):
        q = q_fn(np.sqrt(u2 * np.clip(np.asarray(x, dtype=float), 0, None)))
        return 4.0 * a * q - 4.0 * a * a * q * q

    return ErrorRateModel(
        kind=ErrorClass.COMBINATION,
        pe=pe,
        # Pe <= 4a Q(u) <= 2a exp(-u^2/2)
        bound=ExpBound(alpha=u2 / 2.0, beta=2.0 * a),
        label=f"mqam:M={M}",
        terms=((4.0 * a, q_single), (-4.0 * a * a, q_square)),
    )


def custom_mixture(
    theta_t: float,
    g1: Callable[[float], float],
    g2: Callable[[float], float],
    exp_bound: ExpBound,
    label: str = "custom",
    breakpoints: Sequence[float] = (),
) -> ErrorRateModel:
    """User-supplied exponential mixture, evaluated by adaptive quadrature.

    ``breakpoints`` mark discontinuities of ``g2`` that the quadrature must see.
    """
    mix = ExpMixture(theta_t, g1, g2, label=label, breakpoints=tuple(breakpoints))
    probe = np.linspace(0.0, theta_t, 257)[1:-1]
    for t in probe:
        v1, v2 = g1(t), g2(t)
        if not (math.isfinite(v1) and math.isfinite(v2) and v1 >= 0 and v2 >= 0):
            raise InvalidModelError(f"g1/g2 must be finite and nonnegative on (0, theta_t); theta={t:.4g}")
    if not math.isfinite(integrate(g2, 0.0, theta_t, MIXTURE_QUAD, points=mix._points())):
        raise InvalidModelError("g2 is not integrable on (0, theta_t)")
    evaluate = np.vectorize(mix.evaluate, otypes=[float])
    return ErrorRateModel(ErrorClass.MIXTURE, evaluate, exp_bound, label, mixture=mix)


def linear_combination(terms: Sequence[tuple[float, ErrorRateModel]], bound: ExpBound, label: str = "combination") -> ErrorRateModel:
    terms = tuple((float(a), m) for a, m in terms)
    for _, m in terms:
        if m.kind not in (ErrorClass.EXPONENTIAL, ErrorClass.MIXTURE):
            raise InvalidModelError("combination components must be exponential or mixture models")

    def pe(x):
        return sum(a * m.pe(x) for a, m in terms)

    return ErrorRateModel(ErrorClass.COMBINATION, pe, bound, label, terms=terms)


def bounded_model(pe: Callable, bound: ExpBound, label: str = "bounded") -> ErrorRateModel:
    """A model known only through its values and an exponential bound."""
    return ErrorRateModel(ErrorClass.BOUNDED, pe, bound, label)


def parse_modulation(text: str) -> ErrorRateModel:
    head, _, tail = text.strip().partition(":")
    head = head.strip().lower()
    params = {}
    if tail.strip():
        for item in tail.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise InvalidModelError(f"malformed parameter {item!r} in {text!r}")
            try:
                params[key.strip().upper()] = float(value)
            except ValueError:
                raise InvalidModelError(f"non-numeric value in {item!r}") from None
    if head in ("dpsk", "bpsk"):
        if params:
            raise InvalidModelError(f"{head} takes no parameters")
        return dpsk_ber() if head == "dpsk" else bpsk_ber()
    if head in ("mpsk", "mqam"):
        if set(params) != {"M"}:
            raise InvalidModelError(f"{head} needs exactly one parameter M")
        return mpsk_ser(params["M"]) if head == "mpsk" else mqam_ser(params["M"])
    raise InvalidModelError(f"unknown modulation {head!r}")
