"""Fourier coefficients and truncated partial sums of the Schrodinger field v
and the adapted Helmholtz field w_r, plus the pointwise band estimates.

Coordinates are normalised: ``xi`` in units of the grating period and
``zeta`` in units of the Talbot distance.  The field coefficients are

* v:   exp(-i pi n^2 zeta)
* w_r: exp(-2 pi i r^2 |zeta|) exp(2 pi i r^2 sqrt(1 - (n/r)^2) |zeta|) for |n| <= r,
       exp(-2 pi i r^2 |zeta|) exp(-2 pi r^2 sqrt((n/r)^2 - 1) |zeta|) for |n| > r.
"""

import math
import numbers
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

# exp(-690) ~ 1e-300: anything smaller is dropped from decaying sums
UNDERFLOW_EXPONENT = -690.0

BANDS = ("low", "mid", "high")
FIELDS = ("v", "w")


def cis(turns):
    """exp(2 pi i t) after reducing t to [-1/2, 1/2]."""
    turns = np.asarray(turns, dtype=float)
    return np.exp(2j * np.pi * (turns - np.round(turns)))


@dataclass(frozen=True)
class MuSchedule:
    """Low-band cutoff mu(r) = floor(scale * r**alpha), at least 1."""

    alpha: float = 0.2
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 0.25:
            raise ValueError(f"alpha must lie in (0, 1/4), got {self.alpha}")
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def __call__(self, r: float) -> int:
        # the 1e-9 keeps exact powers such as 32**0.2 == 2 from flooring to 1
        return max(1, math.floor(self.scale * r**self.alpha + 1e-9))


def resolve_mu(mu, r):
    if isinstance(mu, MuSchedule):
        return mu(r)
    mu = int(mu)
    if mu < 0:
        raise ValueError(f"mu must be non-negative, got {mu}")
    return mu


@dataclass(frozen=True)
class HelmholtzParams:
    r: float
    n_max: int

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")


@dataclass(frozen=True)
class BandPartition:
    """Low |n| <= mu, mid mu < |n| <= r+1, high |n| > max(mu, r+1)."""

    r: float
    mu: int

    def band_of(self, n: int) -> str:
        n = abs(n)
        if n <= self.mu:
            return "low"
        if n <= self.r + 1:
            return "mid"
        return "high"

    def mask(self, band, n):
        a = np.abs(np.asarray(n))
        if band == "low":
            return a <= self.mu
        if band == "mid":
            return (a > self.mu) & (a <= self.r + 1)
        if band == "high":
            return (a > self.r + 1) & (a > self.mu)
        raise ValueError(f"unknown band {band!r}; expected one of {BANDS}")

    def indices(self, band, n_max):
        n = np.arange(-n_max, n_max + 1)
        return n[self.mask(band, n)]


@dataclass
class SpectralCoefficients:
    """Complex coefficients indexed by the integers in ``n`` at height ``zeta``."""

    n: np.ndarray
    values: np.ndarray
    zeta: float = 0.0

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=complex)
        if self.n.shape != self.values.shape:
            raise ValueError("index and value arrays differ in shape")

    @property
    def n_max(self):
        return int(np.abs(self.n).max()) if self.n.size else 0

    def __sub__(self, other):
        if not np.array_equal(self.n, other.n):
            raise ValueError("coefficient index sets differ")
        return SpectralCoefficients(self.n, self.values - other.values, self.zeta)


def _schrodinger_turns(n, zeta):
    n = np.asarray(n, dtype=np.int64)
    if isinstance(zeta, numbers.Rational):
        p, q = Fraction(zeta).numerator, Fraction(zeta).denominator
        two_q = 2 * q
        if two_q < 3 * 10**9:
            res = (n * n % two_q) * (p % two_q) % two_q
        else:
            res = np.array([(int(k) * int(k) * p) % two_q for k in n.ravel()], dtype=object)
            res = res.reshape(n.shape)
        return -(res.astype(float) / two_q)
    z = math.fmod(float(zeta), 2.0)
    return -0.5 * np.fmod(n.astype(float) ** 2 * z, 2.0)


def schrodinger_coeff(n, zeta):
    """exp(-i pi n^2 zeta); exact residue arithmetic when zeta is a Fraction or int."""
    out = cis(_schrodinger_turns(n, zeta))
    return complex(out) if np.ndim(out) == 0 else out


def _helmholtz_parts(n, zeta, r):
    """Return (turns, log_modulus) of the w_r coefficients."""
    n = np.asarray(n, dtype=float)
    z = abs(float(zeta))
    a = np.abs(n)
    inside = a <= r
    turns = np.empty(n.shape)
    logmod = np.zeros(n.shape)
    ni = a[inside]
    # r^2 (sqrt(1 - t^2) - 1) = -n^2 / (1 + sqrt(1 - t^2)) avoids cancellation
    turns[inside] = -(ni * ni) * z / (1.0 + np.sqrt(1.0 - (ni / r) ** 2))
    no = a[~inside]
    turns[~inside] = -math.fmod(r * r * z, 1.0)
    # r^2 sqrt((n/r)^2 - 1) = r sqrt((n - r)(n + r))
    logmod[~inside] = -2 * np.pi * r * np.sqrt((no - r) * (no + r)) * z
    return turns, logmod


def helmholtz_coeff(n, zeta, r):
    """Coefficient of exp(2 pi i n xi) in w_r(., zeta); even in zeta."""
    turns, logmod = _helmholtz_parts(n, zeta, r)
    out = np.exp(logmod) * cis(turns)
    return complex(out) if np.ndim(out) == 0 else out


def coefficients(field, zeta, n_max, r=None):
    """SpectralCoefficients of ``field`` ('v' or 'w') for |n| <= n_max."""
    n = np.arange(-n_max, n_max + 1)
    if field == "v":
        vals = schrodinger_coeff(n, zeta)
    elif field == "w":
        if r is None:
            raise ValueError("field 'w' needs r")
        vals = helmholtz_coeff(n, zeta, r)
    else:
        raise ValueError(f"unknown field {field!r}; expected one of {FIELDS}")
    return SpectralCoefficients(n, vals, float(zeta))


def synthesize(n, values, xi):
    """sum_n values[n] exp(2 pi i n xi), for scalar or array xi."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    waves = cis(np.multiply.outer(xi_arr, np.asarray(n, dtype=float)))
    out = waves @ np.asarray(values, dtype=complex)
    return complex(out[0]) if np.ndim(xi) == 0 else out.reshape(np.shape(xi))


def eval_field(field, xi, zeta, n_max, r=None):
    """Truncated partial sum over |n| <= n_max.

    v is a distribution, so the partial sums have no pointwise limit; they
    are used for rendering and for exact finite identities only.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    c = coefficients(field, zeta, n_max, r)
    return synthesize(c.n, c.values, xi)


def high_band_cutoff(r, zeta):
    """Smallest N such that every |n| > N in the high band lies below exp(-690)."""
    z = abs(float(zeta))
    if z == 0:
        raise ValueError("the high band does not decay at zeta = 0; pass n_max")
    # 2 pi r sqrt(n^2 - r^2) z > 690  <=>  n^2 > r^2 + (690 / (2 pi r z))^2
    return math.ceil(math.hypot(r, -UNDERFLOW_EXPONENT / (2 * np.pi * r * z))) + 1


def eval_band(band, xi, zeta, r, mu, n_max=None):
    """Partial sum of the w_r coefficients over one band.

    ``mu`` is a MuSchedule or an explicit integer cutoff.  The high band is
    truncated at ``n_max`` when given, otherwise where its terms underflow.
    """
    part = BandPartition(r, resolve_mu(mu, r))
    if n_max is None:
        if band == "high":
            n_max = high_band_cutoff(r, zeta)
        else:
            n_max = math.floor(r + 1) if band == "mid" else part.mu
    n = part.indices(band, n_max)
    if n.size == 0:
        return 0j if np.ndim(xi) == 0 else np.zeros(np.shape(xi), dtype=complex)
    return synthesize(n, helmholtz_coeff(n, zeta, r), xi)


def default_xi_grid(size=512):
    return np.arange(size) / size


def default_zeta_grid(size=512, zeta_max=2.0):
    return zeta_max * np.arange(1, size + 1) / size


def low_band_sup_error(r, mu, xi_grid=None, zeta_grid=None):
    """Grid maximum of |P_low w_r - P_low v| and the reference bound mu^4 / r.

    Returns ``(sup_error, bound)``.
    """
    m = resolve_mu(mu, r)
    if m > r:
        raise ValueError(f"mu(r) = {m} exceeds r = {r}")
    xi_grid = default_xi_grid() if xi_grid is None else np.asarray(xi_grid, dtype=float)
    zeta_grid = default_zeta_grid() if zeta_grid is None else np.asarray(zeta_grid, dtype=float)
    n = np.arange(-m, m + 1)
    diff = np.stack([helmholtz_coeff(n, z, r) - schrodinger_coeff(n, z) for z in zeta_grid])
    waves = cis(np.multiply.outer(n.astype(float), xi_grid))
    sup = float(np.abs(diff @ waves).max())
    return sup, m**4 / r


@dataclass(frozen=True)
class HighTail:
    """Two-sided high-band sum against its comparison integral.

    ``log_sum`` keeps the sum comparable when ``sum`` itself underflows.
    """

    r: float
    zeta: float
    sum: float
    log_sum: float
    integral: float
    n_terms: int

    @property
    def log_integral(self):
        return math.log(self.integral)

    @property
    def ratio_log(self):
        """log(sum / integral)."""
        return self.log_sum - self.log_integral


def high_tail_sup(r, zeta):
    """Sum of exp(-2 pi r^2 sqrt((n/r)^2 - 1) zeta) over |n| > r+1 and the integral
    over x > r, the latter as a z-integral after x = r y, r^2 sqrt(y^2 - 1) = z.

    Terms are accumulated in log space and dropped once they fall 690 below
    the leading term.
    """
    if not zeta > 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    n0 = math.floor(r + 1) + 1
    expo = []
    n = n0
    while True:
        e = -2 * math.pi * r * math.sqrt((n - r) * (n + r)) * zeta
        if expo and e < expo[0] + UNDERFLOW_EXPONENT:
            break
        expo.append(e)
        n += 1
    log_sum = math.log(2.0) + float(logsumexp(expo))

    scale = 16 * math.pi**2 * zeta**2 * r**3

    def integrand(u):
        # u = 4 pi zeta z
        z = u / (4 * math.pi * zeta)
        return u * math.exp(-u) / math.sqrt(1.0 + (z / r**2) ** 2)

    val, _ = integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-12, limit=200)
    return HighTail(r, zeta, math.exp(log_sum), log_sum, val / scale, len(expo))


def borderline_term(r, zeta):
    """Modulus of the n = floor(r+1) coefficient, the one excluded from the high band."""
    if not zeta > 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    if float(r).is_integer():
        raise ValueError(f"r must not be an integer, got {r}")
    n = math.floor(r + 1)
    gap = n - r  # exact for r close to n
    return math.exp(-2 * math.pi * r * math.sqrt(gap * (n + r)) * zeta)
