"""Anisotropic local constant smoothing for change-point regression.

The isotropic local constant (Nadaraya-Watson) fit averages outcomes by
regressor proximity only; the anisotropic variant adds a range kernel on
pilot-estimate differences so that observations across an abrupt change
stop borrowing strength from each other. The package bundles the
estimators, data-driven bandwidth selection, a Monte Carlo harness over
synthetic change-point processes, and per-channel image smoothing.
"""

from .bandwidth import (
    BandwidthPlan,
    ResolvedBandwidths,
    SelectionFailureError,
    aicc_criterion,
    default_grid,
    default_range_bandwidth,
    pilot_range_bandwidth,
    rate_rule_bandwidths,
    resolve_bandwidths,
    scale_for_alc,
    select_aicc,
    select_lscv,
)
from .estimators import (
    Dataset,
    EstimatorKind,
    EstimatorSpec,
    FitResult,
    IsotropicPilot,
    OraclePilot,
    PilotPolicy,
    SuppliedPilot,
    alc_fit,
    fit,
    lc_fit,
    read_dataset_csv,
    read_fit_csv,
    write_dataset_csv,
    write_fit_csv,
)
from .imaging import ImageFrame, load_image, save_image, smooth_channel, smooth_image
from .kernels import Bandwidths, KernelFamily, eval_kernel, product_kernel
from .simulation import (
    DgpFamily,
    DgpSpec,
    FireReplicate,
    McConfig,
    McTable,
    RateReport,
    dgp_eval,
    fire_experiment,
    fire_region_masks,
    mese,
    rate_check,
    run_monte_carlo,
    simulate_dataset,
    simulate_fire_frames,
    truth_fn,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthPlan",
    "Bandwidths",
    "Dataset",
    "DgpFamily",
    "DgpSpec",
    "EstimatorKind",
    "EstimatorSpec",
    "FireReplicate",
    "FitResult",
    "ImageFrame",
    "IsotropicPilot",
    "KernelFamily",
    "McConfig",
    "McTable",
    "OraclePilot",
    "PilotPolicy",
    "RateReport",
    "ResolvedBandwidths",
    "SelectionFailureError",
    "SuppliedPilot",
    "aicc_criterion",
    "alc_fit",
    "default_grid",
    "default_range_bandwidth",
    "pilot_range_bandwidth",
    "dgp_eval",
    "eval_kernel",
    "fire_experiment",
    "fire_region_masks",
    "fit",
    "lc_fit",
    "load_image",
    "mese",
    "product_kernel",
    "rate_check",
    "rate_rule_bandwidths",
    "read_dataset_csv",
    "read_fit_csv",
    "resolve_bandwidths",
    "run_monte_carlo",
    "save_image",
    "scale_for_alc",
    "select_aicc",
    "select_lscv",
    "simulate_dataset",
    "simulate_fire_frames",
    "smooth_channel",
    "smooth_image",
    "truth_fn",
    "write_dataset_csv",
    "write_fit_csv",
    "__version__",
]
