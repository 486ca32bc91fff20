"""Talbot carpets and the revival combs at rational heights.

At zeta = p/q the Schrodinger field is a comb of q deltas at
(p mod 2)/2 + m/q with weights Gamma(p, q; m)/q.  ``smoothed_comb_check``
turns that distributional identity into a pointwise one by mollifying both
sides with the same periodic Gaussian.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fields import coefficients, schrodinger_coeff, synthesize
from .gauss import check_coprime, gamma_sum


@dataclass(frozen=True)
class DeltaComb:
    p: int
    q: int
    shift: float
    weights: np.ndarray

    @property
    def locations(self):
        return np.mod(self.shift + np.arange(self.q) / self.q, 1.0)


def revival_comb(p, q):
    """The comb describing v(., p/q)."""
    check_coprime(p, q)
    weights = np.array([gamma_sum(p, q, m) for m in range(q)]) / q
    return DeltaComb(p, q, 0.5 * (p % 2), weights)


def periodic_gaussian(x, sigma):
    """(1/sigma) sum_k exp(-pi (x - k)^2 / sigma^2), whose Fourier coefficients are exp(-pi sigma^2 n^2)."""
    x = np.asarray(x, dtype=float)
    u = x - np.floor(x + 0.5)
    reach = int(math.ceil(6 * sigma)) + 1
    k = np.arange(-reach, reach + 1)
    return np.exp(-np.pi * (np.subtract.outer(u, k) / sigma) ** 2).sum(axis=-1) / sigma


def mollified_coefficients(field, zeta, n_max, sigma, r=None):
    c = coefficients(field, zeta, n_max, r)
    return c.n, c.values * np.exp(-np.pi * (sigma * c.n) ** 2)


def fft_synthesize(n, values, width):
    """sum_n values[n] exp(2 pi i n j / width) at j = 0..width-1, folding n mod width."""
    bins = np.mod(n, width)
    folded = np.bincount(bins, weights=values.real, minlength=width) + 1j * np.bincount(
        bins, weights=values.imag, minlength=width
    )
    return np.fft.ifft(folded) * width


@dataclass(frozen=True)
class CombReport:
    p: int
    q: int
    sigma: float
    n_max: int
    max_error: float
    peak_ratios: np.ndarray
    expected_ratio: float

    @property
    def worst_ratio_error(self):
        return float(np.max(np.abs(self.peak_ratios / self.expected_ratio - 1)))

    def passed(self, max_error=1e-6, ratio_rtol=0.02):
        return self.max_error < max_error and self.worst_ratio_error <= ratio_rtol


def smoothed_comb_check(p, q, sigma, n_max, grid_size=2048):
    """Compare the mollified truncated series for v(., p/q) with the mollified comb.

    A is the spectral sum with multiplier exp(-pi sigma^2 n^2); B places the
    periodic Gaussian (built in space) at each tooth with weight Gamma/q.
    Peak ratios are |A| at the teeth over the height of a single unit tooth.
    """
    check_coprime(p, q)
    if not 0 < sigma <= 1 / (8 * q):
        raise ValueError(f"sigma must lie in (0, 1/(8q)] = (0, {1 / (8 * q):.6g}], got {sigma}")
    if n_max < 10 / sigma - 1e-9:
        raise ValueError(f"n_max must be >= 10/sigma = {10 / sigma:.6g}, got {n_max}")
    zeta = Fraction(p, q)
    n, a_coef = mollified_coefficients("v", zeta, n_max, sigma)
    xi = np.arange(grid_size) / grid_size
    a_grid = fft_synthesize(n, a_coef, grid_size)

    comb = revival_comb(p, q)
    b_grid = sum(w * periodic_gaussian(xi - loc, sigma) for w, loc in zip(comb.weights, comb.locations))
    max_error = float(np.max(np.abs(a_grid - b_grid)))

    a_peaks = synthesize(n, a_coef, comb.locations)
    unit = float(periodic_gaussian(0.0, sigma))
    return CombReport(p, q, sigma, n_max, max_error, np.abs(a_peaks) / unit, 1 / math.sqrt(q))


@dataclass
class IntensityGrid:
    """|field|^2 on a (height x width) grid; row i is zeta_range[0] + i * dzeta."""

    values: np.ndarray
    xi_range: tuple = (0.0, 1.0)
    zeta_range: tuple = (0.0, 2.0)

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def zetas(self):
        z0, z1 = self.zeta_range
        return z0 + (z1 - z0) * np.arange(self.height) / self.height

    @property
    def xis(self):
        return np.arange(self.width) / self.width


def render(field, width=1024, height=1024, sigma=0.005, n_max=4096, r=None, zeta_range=(0.0, 2.0), threads=1):
    """Intensity |sum_n c_n exp(-pi sigma^2 n^2) exp(2 pi i n xi)|^2 over [0,1) x zeta_range.

    Rows are independent; ``threads > 1`` renders them on a thread pool.
    """
    if field == "v" and not sigma > 0:
        raise ValueError("the Schrodinger field needs sigma > 0: its partial sums have no pointwise limit")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if field == "w" and r is None:
        raise ValueError("field 'w' needs r")
    grid = IntensityGrid(np.empty((height, width)), (0.0, 1.0), tuple(zeta_range))

    def row(z):
        n, c = mollified_coefficients(field, float(z), n_max, sigma, r)
        return np.abs(fft_synthesize(n, c, width)) ** 2

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(row, grid.zetas))
    else:
        rows = [row(z) for z in grid.zetas]
    grid.values[:] = rows
    return grid


def to_pgm(grid):
    """Binary 16-bit PGM (P5), values mapped linearly from [0, max] to [0, 65535]."""
    top = float(grid.values.max())
    scaled = np.zeros(grid.values.shape) if top == 0 else grid.values / top * 65535
    pixels = np.rint(scaled).astype(">u2")
    header = f"P5\n{grid.width} {grid.height}\n65535\n".encode("ascii")
    return header + pixels.tobytes()


def read_pgm(data):
    """Inverse of :func:`to_pgm` for the header layout it writes."""
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P5":
        raise ValueError("not a binary PGM")
    w, h = (int(t) for t in dims.split())
    dtype = ">u2" if int(maxval) > 255 else "u1"
    return np.frombuffer(body, dtype=dtype).reshape(h, w)


def row_csv(grid, index):
    lines = ["xi,intensity"]
    lines += [f"{x:.17g},{v:.17g}" for x, v in zip(grid.xis, grid.values[index])]
    return "\n".join(lines) + "\n"


def schrodinger_row(xi, zeta, n_max, sigma):
    """Mollified v at a single height, evaluated directly (no FFT)."""
    n = np.arange(-n_max, n_max + 1)
    c = schrodinger_coeff(n, zeta) * np.exp(-np.pi * (sigma * n) ** 2)
    return synthesize(n, c, xi)
