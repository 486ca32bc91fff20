"""Numerical Talbot effect: the Schrodinger field v, the Helmholtz field w_r,
Gauss-sum revivals, Talbot carpets and distributional pairings."""

from .carpet import DeltaComb, IntensityGrid, render, revival_comb, smoothed_comb_check
from .fields import (
    BandPartition,
    HelmholtzParams,
    MuSchedule,
    SpectralCoefficients,
    borderline_term,
    coefficients,
    eval_band,
    eval_field,
    helmholtz_coeff,
    high_tail_sup,
    low_band_sup_error,
    schrodinger_coeff,
)
from .gauss import NotCoprimeError, gamma_sum, gamma_via_cases, gauss_sum, gauss_sums
from .pairings import (
    LineSpec,
    SweepRecord,
    ToleranceError,
    hs_error,
    pair_horizontal,
    pair_oblique,
    pair_vertical,
    rate_fit,
    sweep,
)
from .testfns import GaussianTest, PeriodicTest, QuadratureError, half_line_ft, hs_norm

__version__ = "0.1.0"
