"""Test functions used to probe the fields as distributions.

Two families are supported: modulated, shifted Gaussians on the line
(Schwartz class, closed-form Fourier data) and trigonometric polynomials on
the torus.  The Fourier convention is phi_hat(k) = int phi(x) exp(-2 pi i k x) dx.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import erfc, wofz

from .fields import SpectralCoefficients, cis


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance within the node budget."""


@dataclass(frozen=True)
class GaussianTest:
    """phi(x) = amplitude * exp(-pi ((x - center) / width)^2) * exp(2 pi i modulation x)."""

    center: float = 0.0
    width: float = 1.0
    modulation: float = 0.0
    amplitude: complex = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        g = np.exp(-np.pi * ((x - self.center) / self.width) ** 2)
        return self.amplitude * g * cis(self.modulation * x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        slope = -2 * np.pi * (x - self.center) / self.width**2 + 2j * np.pi * self.modulation
        return slope * self(x)

    def ft(self, k):
        """Full-line transform: width * exp(-pi width^2 (k - mod)^2) exp(-2 pi i (k - mod) center)."""
        d = np.asarray(k, dtype=float) - self.modulation
        out = self.amplitude * self.width * np.exp(-np.pi * (self.width * d) ** 2) * cis(-d * self.center)
        return complex(out) if np.ndim(out) == 0 else out

    def reflected(self):
        """x -> phi(-x)."""
        return GaussianTest(-self.center, self.width, -self.modulation, self.amplitude)

    def shifted(self, a):
        """x -> phi(x + a)."""
        phase = complex(cis(self.modulation * a))
        return GaussianTest(self.center - a, self.width, self.modulation, self.amplitude * phase)

    def radius(self, eps=1e-14):
        """Half-width beyond which |phi| < eps."""
        ratio = abs(self.amplitude) / eps
        return self.width * math.sqrt(math.log(ratio) / math.pi) if ratio > 1 else 0.0

    def ft_cutoff(self, eps=1e-16):
        """Smallest N with |phi_hat(k)| < eps for all |k| > N."""
        ratio = abs(self.amplitude) * self.width / eps
        spread = math.sqrt(math.log(ratio) / math.pi) / self.width if ratio > 1 else 0.0
        return math.ceil(abs(self.modulation) + spread)

    def ft_tail(self, n_max):
        """Upper bound on sum_{|n| > n_max} |phi_hat(n)|."""
        start = n_max + 1 - abs(self.modulation)
        if start <= 0:
            return math.inf
        w = self.width
        one_side = w * math.exp(-math.pi * (w * start) ** 2) + 0.5 * erfc(math.sqrt(math.pi) * w * start)
        return 2 * abs(self.amplitude) * one_side

    def half_line_ft_closed(self, x, y=0.0):
        """int_0^inf phi(t) exp(-2 pi i x t - 2 pi y t) dt in closed form (vectorised).

        With beta = y + i (x - mod) and z = sqrt(pi) (width beta - center / width)
        the integral equals amplitude * width / 2 * exp(-pi c^2 / w^2) * erfcx(z),
        with erfcx(z) = wofz(i z).  For Re z < 0 the reflection
        erfc(z) = 2 - erfc(-z) keeps both pieces bounded.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c, w = self.center, self.width
        beta = y + 1j * (x - self.modulation)
        z = np.sqrt(np.pi) * (w * beta - c / w)
        damp = math.exp(-math.pi * (c / w) ** 2)
        out = np.empty(np.broadcast(x, y).shape, dtype=complex)
        z = np.broadcast_to(z, out.shape)
        beta = np.broadcast_to(beta, out.shape)
        right = z.real >= 0
        out[right] = damp * wofz(1j * z[right])
        zl, bl = z[~right], beta[~right]
        out[~right] = 2 * np.exp(np.pi * (w * bl) ** 2 - 2 * np.pi * c * bl) - damp * wofz(-1j * zl)
        out *= 0.5 * self.amplitude * w
        return complex(out) if out.ndim == 0 else out

    def shifted_half_line_ft(self, a, x, y=0.0):
        """int_a^inf phi(t) exp(-2 pi i x (t - a) - 2 pi y (t - a)) dt."""
        return self.shifted(a).half_line_ft_closed(x, y)

    def half_line_l1(self, a=0.0):
        """int_a^inf |phi|."""
        return abs(self.amplitude) * self.width * 0.5 * erfc(math.sqrt(math.pi) * (a - self.center) / self.width)

    def half_line_norms(self, a=0.0):
        """(sup |phi|, ||phi'||_1) over [a, inf), the constants of the integration-by-parts decay bound."""
        c = self.center - a
        sup = abs(self.amplitude) * (1.0 if c >= 0 else math.exp(-math.pi * (c / self.width) ** 2))
        end = a + max(c, 0.0) + self.radius(1e-18) + self.width
        pts = [self.center] if self.center > a else None
        l1, _ = integrate.quad(lambda t: abs(self.derivative(t)), a, end, points=pts, limit=200)
        return sup, l1


def _quad_checked(f, a, b, **kw):
    # round-off warnings only mean the tolerance is below attainable precision;
    # running out of subdivisions is the real failure
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, a, b, **kw)
    for w in caught:
        text = str(w.message)
        if "subdivisions" in text or "divergent" in text or "cycles" in text:
            raise QuadratureError(text.strip().splitlines()[0])
    return val


def half_line_ft(phi, x, y=0.0, rtol=1e-10, limit=2000):
    """int_0^inf phi(t) exp(-2 pi i x t) exp(-2 pi y t) dt by adaptive quadrature.

    The integral is cut at T where the integrand is below 1e-14; oscillatory
    parts use QUADPACK's Fourier weights.  Raises QuadratureError when the
    node budget ``limit`` is exhausted.
    """
    if y < 0:
        raise ValueError(f"decay rate y must be non-negative, got {y}")
    T = max(phi.center, 0.0) + phi.radius(1e-14)
    if T <= 0:
        return 0j

    def g(t):
        return complex(phi(t)) * math.exp(-2 * math.pi * y * t)

    kw = dict(epsabs=1e-15, epsrel=rtol, limit=limit)
    re_g = lambda t: g(t).real  # noqa: E731
    im_g = lambda t: g(t).imag  # noqa: E731
    if x == 0:
        return complex(_quad_checked(re_g, 0, T, **kw), _quad_checked(im_g, 0, T, **kw))
    omega = 2 * math.pi * x
    kw.update(wvar=omega)
    cos_re = _quad_checked(re_g, 0, T, weight="cos", **kw)
    sin_re = _quad_checked(re_g, 0, T, weight="sin", **kw)
    cos_im = _quad_checked(im_g, 0, T, weight="cos", **kw)
    sin_im = _quad_checked(im_g, 0, T, weight="sin", **kw)
    # (re + i im)(cos - i sin)
    return complex(cos_re + sin_im, cos_im - sin_re)


def ft(phi, k):
    return phi.ft(k)


@dataclass
class PeriodicTest:
    """Trigonometric polynomial sum_n coeffs[n] exp(2 pi i n x)."""

    coeffs: dict = field(default_factory=dict)

    @classmethod
    def from_triples(cls, triples):
        """Build from [[n, re, im], ...] as used in config files."""
        return cls({int(n): complex(re, im) for n, re, im in triples})

    @property
    def degree(self):
        return max((abs(n) for n in self.coeffs), default=0)

    def coeff(self, n):
        return self.coeffs.get(int(n), 0j)

    def __call__(self, x):
        n = np.array(sorted(self.coeffs), dtype=float)
        vals = np.array([self.coeffs[int(k)] for k in n], dtype=complex)
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = cis(np.multiply.outer(xs, n)) @ vals
        return complex(out[0]) if np.ndim(x) == 0 else out

    def spectral(self):
        d = self.degree
        n = np.arange(-d, d + 1)
        return SpectralCoefficients(n, [self.coeff(k) for k in n])


def periodic_coeff(phi, n):
    """The n-th Fourier coefficient int_T phi(x) exp(-2 pi i n x) dx."""
    return phi.coeff(n)


@dataclass(frozen=True)
class HsNorm:
    """Sobolev norm of a coefficient sequence.

    ``value`` is the norm of the given (finite) sequence; ``upper`` adds the
    analytic bound ``tail`` on the squared contribution of unlisted indices.
    """

    value: float
    tail: float = 0.0

    @property
    def upper(self):
        return math.sqrt(self.value**2 + self.tail)


def sobolev_tail_bound(n_max, s, modulus=2.0):
    """Bound on sum_{|n| > n_max} modulus^2 (1 + n^2)^s for s < -1/2.

    Uses (1 + n^2)^s <= n^{2s} and the integral test.
    """
    if not s < -0.5:
        raise ValueError(f"the tail is summable only for order < -1/2, got {s}")
    return 2 * modulus**2 * n_max ** (2 * s + 1) / (-2 * s - 1)


def hs_norm(coeffs, s, tail_modulus=None):
    """||f||_{H^s} = (sum_n (1 + n^2)^s |f_n|^2)^{1/2}.

    When ``tail_modulus`` is given the sequence is taken to continue beyond
    its listed indices with moduli at most ``tail_modulus``; the analytic
    tail bound is then reported, which requires s < -1/2.
    """
    n = coeffs.n.astype(float)
    total = math.fsum((1 + n * n) ** s * np.abs(coeffs.values) ** 2)
    tail = 0.0
    if tail_modulus is not None:
        tail = sobolev_tail_bound(max(coeffs.n_max, 1), s, tail_modulus)
    return HsNorm(math.sqrt(total), tail)


def parse_test_function(spec):
    """Build a test function from its config-file description."""
    kind = spec.get("type")
    if kind == "gaussian":
        return GaussianTest(
            center=float(spec.get("center", 0.0)),
            width=float(spec.get("width", 1.0)),
            modulation=float(spec.get("modulation", 0.0)),
        )
    if kind == "trigpoly":
        return PeriodicTest.from_triples(spec["coeffs"])
    raise ValueError(f"unknown test function type {kind!r}; expected 'gaussian' or 'trigpoly'")
