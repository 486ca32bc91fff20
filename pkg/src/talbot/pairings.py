"""Pairings of v and w_r with test functions along horizontal, vertical and
oblique lines, H^{-s} errors, r-sweeps and rate fits.

Every pairing is a finite sum of per-frequency terms over |n| <= n_max
together with an upper bound on the discarded terms.  Sweeps split the same
terms into the low / mid / high bands, so the decomposition

    pair(w_r) - pair(v) = low_diff + mid + high - v_tail

holds term by term.
"""

import csv
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import beta, betainc, polygamma

from .fields import (
    BandPartition,
    MuSchedule,
    cis,
    coefficients,
    helmholtz_coeff,
    high_band_cutoff,
    resolve_mu,
    schrodinger_coeff,
)
from .testfns import GaussianTest, HsNorm, PeriodicTest, hs_norm

log = logging.getLogger(__name__)

LINE_KINDS = ("horizontal", "vertical", "oblique")
RESTRICTIONS = ("half", "whole")
DEFAULT_R_GRID = tuple(10 ** (1 + 0.5 * i) for i in range(7))


class ToleranceError(RuntimeError):
    """The requested accuracy cannot be certified within the n_max budget."""


class DegenerateFitError(ValueError):
    """A rate fit was asked for a column containing zeros."""


@dataclass(frozen=True)
class Pairing:
    value: complex
    tail_bound: float
    n_max: int


@dataclass(frozen=True)
class LineSpec:
    """A line in the (xi, zeta) plane.

    horizontal: zeta fixed; vertical: xi fixed; oblique: zeta = m xi - k.
    ``restriction`` selects the half line zeta > 0 or the whole line with
    the even extension in zeta.
    """

    kind: str
    zeta: Optional[float] = None
    xi: Optional[float] = None
    m: Optional[float] = None
    k: Optional[float] = None
    restriction: str = "half"

    def __post_init__(self):
        if self.kind not in LINE_KINDS:
            raise ValueError(f"unknown line kind {self.kind!r}; expected one of {LINE_KINDS}")
        if self.restriction not in RESTRICTIONS:
            raise ValueError(f"unknown restriction {self.restriction!r}")
        wanted = {"horizontal": {"zeta"}, "vertical": {"xi"}, "oblique": {"m", "k"}}[self.kind]
        given = {name for name in ("zeta", "xi", "m", "k") if getattr(self, name) is not None}
        if given != wanted:
            raise ValueError(f"{self.kind} line takes exactly {sorted(wanted)}, got {sorted(given)}")
        if self.kind == "oblique" and self.m == 0:
            raise ValueError("oblique line needs m != 0; use a horizontal line")


# -- per-frequency terms -----------------------------------------------------


def _paraxial_freq(n, r):
    """r^2 (1 - sqrt(1 - (n/r)^2)) = n^2 / (1 + sqrt(1 - (n/r)^2)), for |n| <= r."""
    n = np.asarray(n, dtype=float)
    return n * n / (1.0 + np.sqrt(1.0 - (n / r) ** 2))


def _evanescent_rate(n, r):
    """r^2 sqrt((n/r)^2 - 1) = r sqrt((|n| - r)(|n| + r)), for |n| > r."""
    a = np.abs(np.asarray(n, dtype=float))
    return r * np.sqrt((a - r) * (a + r))


def _horizontal_weights(phi, n):
    """<exp(2 pi i n xi), phi>: phi_hat(-n) on the line, phi_hat_{-n} on the torus."""
    if isinstance(phi, PeriodicTest):
        return np.array([phi.coeff(-k) for k in n], dtype=complex)
    return np.atleast_1d(phi.ft(-np.asarray(n, dtype=float)))


def _horizontal_tail(phi, n_max):
    if isinstance(phi, PeriodicTest):
        return 0.0 if n_max >= phi.degree else sum(abs(c) for k, c in phi.coeffs.items() if abs(k) > n_max)
    return phi.ft_tail(n_max)


def _horizontal_terms(field, zeta, phi, n, r):
    coef = schrodinger_coeff(n, abs(zeta)) if field == "v" else helmholtz_coeff(n, zeta, r)
    return np.atleast_1d(coef) * _horizontal_weights(phi, n)


def _line_freqs(field, n, r, slope):
    """Frequency x and decay rate y of each term along zeta = slope * t, t > 0.

    Each term is then a half-line transform Phi(x, y); on the vertical line
    slope = 1 and there is no xi frequency to subtract.
    """
    nf = np.asarray(n, dtype=float)
    x = np.empty(nf.shape)
    y = np.zeros(nf.shape)
    if field == "v":
        x[:] = slope * nf * nf / 2
    else:
        inside = np.abs(nf) <= r
        x[inside] = slope * _paraxial_freq(nf[inside], r)
        x[~inside] = slope * r * r
        y[~inside] = slope * _evanescent_rate(nf[~inside], r)
    return x, y


def _vertical_half_terms(field, xi, phi, n, r):
    x, y = _line_freqs(field, n, r, 1.0)
    return cis(np.asarray(n, dtype=float) * xi) * phi.half_line_ft_closed(x, y)


def _oblique_positive(field, m, k, phi, n, r):
    """Terms along zeta = m xi - k over xi > k/m for m > 0, via t = xi - k/m."""
    shift = k / m
    nf = np.asarray(n, dtype=float)
    x, y = _line_freqs(field, n, r, m)
    return cis(nf * shift) * phi.shifted(shift).half_line_ft_closed(x - nf, y)


def _oblique_half(field, m, k, phi, n, r):
    if m > 0:
        return _oblique_positive(field, m, k, phi, n, r)
    # xi -> -xi carries the side xi < k/m of a negative slope onto slope -m,
    # with frequency n becoming -n
    return _oblique_positive(field, -m, k, phi.reflected(), -np.asarray(n), r)


def _oblique_terms(field, m, k, phi, n, r, restriction):
    terms = _oblique_half(field, m, k, phi, n, r)
    if restriction == "whole":
        # the complementary side carries |m xi - k| = (-m) xi - (-k)
        terms = terms + _oblique_half(field, -m, -k, phi, n, r)
    return terms


def _require_gaussian(phi):
    if not isinstance(phi, GaussianTest):
        raise TypeError("vertical and oblique pairings need a Schwartz test function (GaussianTest)")


def _check_field(field, r):
    if field not in ("v", "w"):
        raise ValueError(f"unknown field {field!r}; expected 'v' or 'w'")
    if field == "w" and r is None:
        raise ValueError("field 'w' needs r")


def line_terms(line, field, phi, n, r=None):
    """Per-frequency pairing terms for the indices ``n`` along ``line``."""
    _check_field(field, r)
    n = np.asarray(n)
    if line.kind == "horizontal":
        return _horizontal_terms(field, line.zeta, phi, n, r)
    _require_gaussian(phi)
    if line.kind == "vertical":
        terms = _vertical_half_terms(field, line.xi, phi, n, r)
        if line.restriction == "whole":
            terms = terms + _vertical_half_terms(field, line.xi, phi.reflected(), n, r)
        return terms
    return _oblique_terms(field, line.m, line.k, phi, n, r, line.restriction)


def _half_sides(line, phi):
    """(test function, left end, slope, xi-frequency sign) for each half-line piece."""
    if line.kind == "vertical":
        sides = [(phi, 0.0, 1.0, 0.0)]
        if line.restriction == "whole":
            sides.append((phi.reflected(), 0.0, 1.0, 0.0))
        return sides
    sides = []
    for mm, kk in [(line.m, line.k)] + ([(-line.m, -line.k)] if line.restriction == "whole" else []):
        g = phi if mm > 0 else phi.reflected()
        sides.append((g, kk / abs(mm), abs(mm), 1.0 if mm > 0 else -1.0))
    return sides


# -- tail bounds ------------------------------------------------------------


def _decay_constant(phi, a):
    sup, l1 = phi.half_line_norms(a)
    return sup + l1


def _inverse_square_tail(n_max):
    """sum_{n > n_max} 1/n^2."""
    return float(polygamma(1, n_max + 1))


def decay_bounds(line, field, phi, n, r=None):
    """Per-term bounds min(C / (2 pi |x + i y|), ||phi||_1) on the half-line transforms.

    C = sup|phi| + ||phi'||_1 over the half line, from one integration by parts.
    """
    nf = np.asarray(n, dtype=float)
    total = np.zeros(nf.shape)
    for g, a, slope, sign in _half_sides(line, phi):
        x, y = _line_freqs(field, n, r, slope)
        x = x - sign * nf
        c = _decay_constant(g, a)
        with np.errstate(divide="ignore"):
            b = c / (2 * np.pi * np.hypot(x, y))
        total += np.minimum(b, g.half_line_l1(a))
    return total


def line_tail(line, field, phi, n_max):
    """Bound on the discarded terms |n| > n_max.

    On vertical and oblique lines the w_r terms beyond r decay only like
    1/(r |n|), so their tail bound is infinite; v has a summable 1/n^2 tail.
    """
    if line.kind == "horizontal":
        return _horizontal_tail(phi, n_max)
    if field == "w":
        return math.inf
    total = 0.0
    for g, a, slope, _ in _half_sides(line, phi):
        c = _decay_constant(g, a)
        if line.kind == "vertical":
            # |x| = n^2 / 2
            total += 2 * c / math.pi * _inverse_square_tail(n_max)
        else:
            # |slope n^2 / 2 -+ n| >= slope n^2 / 4 once n >= 4 / slope
            if n_max + 1 < 4 / slope:
                return math.inf
            total += 4 * c / (math.pi * slope) * _inverse_square_tail(n_max)
    return total


def _finish(terms, tail, n_max, tol):
    if tol is not None and tail > tol:
        raise ToleranceError(f"tail bound {tail:.3g} exceeds tolerance {tol:.3g} at n_max={n_max}")
    return Pairing(complex(math.fsum(terms.real) + 1j * math.fsum(terms.imag)), tail, n_max)


def default_n_max(line, phi, r=None):
    """Truncation covering the whole oscillatory range |n| <= r plus two."""
    base = 0 if r is None else math.ceil(r) + 2
    if line.kind == "horizontal":
        if isinstance(phi, PeriodicTest):
            return max(base, phi.degree, 1)
        return max(base, phi.ft_cutoff(1e-16), 1)
    return max(base, 64)


def pair_line(line, field, phi, n_max=None, r=None, tol=None):
    _check_field(field, r)
    if n_max is None:
        n_max = default_n_max(line, phi, r)
    n = np.arange(-n_max, n_max + 1)
    terms = line_terms(line, field, phi, n, r)
    return _finish(terms, line_tail(line, field, phi, n_max), n_max, tol)


def pair_horizontal(field, zeta, phi, n_max=None, r=None, tol=None):
    """sum_{|n| <= n_max} coeff(n, |zeta|) <exp(2 pi i n xi), phi>."""
    return pair_line(LineSpec("horizontal", zeta=zeta), field, phi, n_max, r, tol)


def pair_vertical(field, xi, phi, restriction="half", n_max=None, r=None, tol=None):
    """Pairing in zeta at fixed xi against phi 1_{(0, inf)} (or the even extension)."""
    return pair_line(LineSpec("vertical", xi=xi, restriction=restriction), field, phi, n_max, r, tol)


def pair_oblique(field, m, k, phi, restriction="half", n_max=None, r=None, tol=None):
    """Pairing in xi along zeta = m xi - k on the side where zeta > 0 (or both sides)."""
    if m == 0:
        raise ValueError("m = 0 is a horizontal line; use pair_horizontal")
    return pair_line(LineSpec("oblique", m=m, k=k, restriction=restriction), field, phi, n_max, r, tol)


# -- Sobolev error ----------------------------------------------------------


def _weight_integral(a, s):
    """int_a^inf (1 + x^2)^-s dx; with u = 1/(1 + x^2) it is an incomplete beta function."""
    u = 1.0 / (1.0 + a * a)
    return 0.5 * beta(s - 0.5, 0.5) * betainc(s - 0.5, 0.5, u)


def sobolev_weight_sum(start, s, explicit=10**5):
    """sum_{k >= start} (1 + k^2)^-s for s > 1/2.

    The first ``explicit`` terms are summed directly, the rest by
    Euler-Maclaurin with two end corrections.
    """
    k = np.arange(start, start + explicit, dtype=float)
    head = math.fsum((1 + k * k) ** -s)
    b = float(start + explicit)
    f = (1 + b * b) ** -s
    df = -2 * s * b * (1 + b * b) ** (-s - 1)
    return head + _weight_integral(b, s) + f / 2 - df / 12


def hs_error(r, zeta, s, n_max=None):
    """||w_r(., |zeta|) - v(., |zeta|)||_{H^{-s}(T)} for s > 1/2.

    Coefficients are summed up to n_max (default: where the w_r coefficients
    underflow).  Beyond that |w_n - v_n| = 1 to double precision, so the rest
    of the series is added exactly; ``tail`` reports the generic bound for
    differences of modulus <= 2.
    """
    if not s > 0.5:
        raise ValueError(f"H^-s convergence needs s > 1/2, got {s}")
    z = abs(float(zeta))
    if z == 0:
        return HsNorm(0.0, 0.0)
    if n_max is None:
        n_max = high_band_cutoff(r, z)
    vz = abs(zeta)
    diff = coefficients("w", z, n_max, r) - coefficients("v", vz, n_max)
    finite = hs_norm(diff, -s, tail_modulus=2.0)
    rest = 2 * sobolev_weight_sum(n_max + 1, s)
    return HsNorm(math.sqrt(finite.value**2 + rest), finite.tail)


# -- sweeps -----------------------------------------------------------------


@dataclass
class SweepRecord:
    r: float
    mu: int
    err_pair: float
    err_low: float
    err_mid: float
    err_high: float
    err_tail_v: float
    err_hs: Optional[float] = None
    # diagnostics, not written to CSV
    mid_bound: float = math.nan
    residual: float = 0.0
    integer_r: bool = False

    CSV_COLUMNS = ("r", "mu", "err_pair", "err_low", "err_mid", "err_high", "err_tail_v", "err_hs")

    def triangle_ok(self, atol=1e-12):
        rhs = self.err_low + self.err_mid + self.err_high + self.err_tail_v
        return self.err_pair <= rhs + atol


def _csum(x):
    return complex(math.fsum(x.real), math.fsum(x.imag))


def _mid_bound(line, phi, n, r):
    """Bound on |mid| from the test function's transform decay alone."""
    if line.kind == "horizontal":
        return float(np.abs(_horizontal_weights(phi, n)).sum())
    return float(decay_bounds(line, "w", phi, n, r).sum())


def sweep_row(line, phi, r, mu=MuSchedule(), s=None, n_max=None):
    m = resolve_mu(mu, r)
    if n_max is None:
        n_max = default_n_max(line, phi, r)
    n = np.arange(-n_max, n_max + 1)
    tw = line_terms(line, "w", phi, n, r)
    tv = line_terms(line, "v", phi, n, r)
    part = BandPartition(r, m)
    low, mid, high = (part.mask(b, n) for b in ("low", "mid", "high"))
    pair_w, pair_v = _csum(tw), _csum(tv)
    # summing the differences avoids cancelling two O(1) totals
    d_pair = _csum(tw - tv)
    d_low = _csum(tw[low] - tv[low])
    d_mid = _csum(tw[mid])
    d_high = _csum(tw[high])
    v_tail = _csum(tv[~low])
    residual = abs((pair_w - pair_v) - (d_low + d_mid + d_high - v_tail))
    err_hs = None
    if s is not None and line.kind == "horizontal":
        err_hs = hs_error(r, line.zeta, s).value
    integer_r = float(r).is_integer()
    if integer_r:
        log.info("r = %g is an integer: the mid band ends at |n| = r + 1 on the decaying branch", r)
    return SweepRecord(
        r=float(r),
        mu=m,
        err_pair=abs(d_pair),
        err_low=abs(d_low),
        err_mid=abs(d_mid),
        err_high=abs(d_high),
        err_tail_v=abs(v_tail),
        err_hs=err_hs,
        mid_bound=_mid_bound(line, phi, n[mid], r),
        residual=residual,
        integer_r=integer_r,
    )


def sweep(line, phi, r_grid=DEFAULT_R_GRID, mu=MuSchedule(), s=None, executor=None):
    """One SweepRecord per r, in the order of ``r_grid``.

    Rows are independent; pass a ``concurrent.futures`` executor to compute
    them in parallel.
    """
    r_grid = [float(r) for r in r_grid]
    if any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be strictly increasing")

    def row(r):
        try:
            return sweep_row(line, phi, r, mu, s)
        except ToleranceError as exc:
            raise ToleranceError(f"r = {r}: {exc}") from exc

    if executor is None:
        return [row(r) for r in r_grid]
    return list(executor.map(row, r_grid))


def column(records, name):
    if name not in SweepRecord.CSV_COLUMNS[2:]:
        raise ValueError(f"unknown column {name!r}")
    return np.array([getattr(rec, name) for rec in records], dtype=float)


def rate_fit(records, column_name):
    """Least-squares slope of log(err) against log(r)."""
    if len(records) < 3:
        raise ValueError("rate_fit needs at least 3 records")
    err = column(records, column_name)
    if np.any(err == 0) or np.any(~np.isfinite(err)):
        raise DegenerateFitError(f"column {column_name!r} has zero or missing values; not fitted")
    r = np.array([rec.r for rec in records], dtype=float)
    slope, _ = np.polyfit(np.log(r), np.log(err), 1)
    return float(slope)


def eventually_decreasing(values, count=3):
    """Last ``count`` values strictly decreasing: the empirical proxy for a limit of zero."""
    tail = list(values)[-count:]
    return len(tail) == count and all(b < a for a, b in zip(tail, tail[1:]))


def _fmt(x):
    return "" if x is None else format(x, ".17g")


def write_csv(records, fh):
    """Write records with the fixed header, numbers at 17 significant digits."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(SweepRecord.CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, c)) if c != "mu" else str(rec.mu) for c in SweepRecord.CSV_COLUMNS])


def read_csv(fh):
    rows = []
    for row in csv.DictReader(fh):
        vals = {c: (float(row[c]) if row[c] != "" else None) for c in SweepRecord.CSV_COLUMNS}
        vals["mu"] = int(vals["mu"])
        rows.append(SweepRecord(**vals))
    return rows
