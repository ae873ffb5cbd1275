"""palmstat: mark-distribution inference for stationary marked point processes.

The package simulates planar marked point processes with directional marks,
estimates the distribution of the typical mark and the asymptotic covariance
of its empirical deviations, and runs chi-square goodness-of-fit tests
against hypothesized mark distributions.
"""

__version__ = "0.1.0"

from .estimators import (Bandwidth, BandwidthConditionWarning,
                         CovarianceEstimate, EmptyPatternError, KernelSpec,
                         PalmEstimate, analytic_independent_covariance,
                         bandwidth, deviation_vector,
                         edge_corrected_covariance, monte_carlo_covariance,
                         naive_covariance, palm_estimate, smoothed_covariance,
                         smoothed_covariance_curve)
from .geometry import (DIM, ObservationWindow, check_covariance_inequalities,
                       set_covariance, window_for_expected_points)
from .gof import (SingularCovarianceError, TestReport, chi2_quantile, chi2_sf,
                  invert_spd, mgm_test, tmd_test)
from .marks import (AngularBinSet, GaussCovariance2, HypotheticalMarkLaw,
                    axial_fold, axial_pn2_bin_probs, pn2_density,
                    uniform_bin_probs)
from .models import (BooleanCoxConfig, BoundaryArcs, MamConfig,
                     MarkedPointPattern, boolean_boundary_arcs, mam_realize,
                     realize, sample_cox_on_boundary, sample_poisson)
from .rng import child_seed, substream
from .study import ErrorRow, ErrorTable, StudyConfig, power_curve, run_study

__all__ = [
    "__version__",
    "AngularBinSet", "Bandwidth", "BandwidthConditionWarning",
    "BooleanCoxConfig", "BoundaryArcs", "CovarianceEstimate", "DIM",
    "EmptyPatternError", "ErrorRow", "ErrorTable", "GaussCovariance2",
    "HypotheticalMarkLaw", "KernelSpec", "MamConfig", "MarkedPointPattern",
    "ObservationWindow", "PalmEstimate", "SingularCovarianceError",
    "StudyConfig", "TestReport",
    "analytic_independent_covariance", "axial_fold", "axial_pn2_bin_probs",
    "bandwidth", "boolean_boundary_arcs", "check_covariance_inequalities",
    "chi2_quantile", "chi2_sf", "child_seed", "deviation_vector",
    "edge_corrected_covariance", "invert_spd", "mam_realize", "mgm_test",
    "monte_carlo_covariance", "naive_covariance", "palm_estimate",
    "pn2_density", "power_curve", "realize", "run_study",
    "sample_cox_on_boundary", "sample_poisson", "set_covariance",
    "smoothed_covariance", "smoothed_covariance_curve", "substream",
    "tmd_test", "uniform_bin_probs", "window_for_expected_points",
]
