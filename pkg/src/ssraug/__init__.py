"""Soft segmented randomization augmentation for radar intensity images."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .augment import (
    AugmentMeta,
    KernelDeltas,
    add_noise,
    adjust_kernels,
    augment_batch,
    augment_image,
    draw_deltas,
    histogram_match,
    sample_mixture,
    ssr_augment,
)
from .clutter import (
    RegionMasks,
    baseline_segment,
    clutter_region_means,
    hard_seg_variant1,
    hard_seg_variant2,
    merge_clutter,
    random_clutter_crop,
)
from .config import PRESETS, SsrConfig
from .gmm import (
    GaussianKernel,
    GmmParams,
    fit_gmm,
    gaussian_pdf,
    mixture_cdf,
    mixture_density,
    negative_log_likelihood,
    posterior,
)
from .imaging import (
    Histogram,
    compute_histogram,
    log_map,
    min_max_normalize,
)
from .seeding import GENERATOR, derive_rng
from .stats import (
    ImageStats,
    PopulationReport,
    image_stats,
    nll_kernel_sweep,
    population_report,
)

__all__ = [
    "KERNEL_BACKEND",
    "AugmentMeta",
    "KernelDeltas",
    "add_noise",
    "adjust_kernels",
    "augment_batch",
    "augment_image",
    "draw_deltas",
    "histogram_match",
    "sample_mixture",
    "ssr_augment",
    "RegionMasks",
    "baseline_segment",
    "clutter_region_means",
    "hard_seg_variant1",
    "hard_seg_variant2",
    "merge_clutter",
    "random_clutter_crop",
    "PRESETS",
    "SsrConfig",
    "GaussianKernel",
    "GmmParams",
    "fit_gmm",
    "gaussian_pdf",
    "mixture_cdf",
    "mixture_density",
    "negative_log_likelihood",
    "posterior",
    "Histogram",
    "compute_histogram",
    "log_map",
    "min_max_normalize",
    "GENERATOR",
    "derive_rng",
    "ImageStats",
    "PopulationReport",
    "image_stats",
    "nll_kernel_sweep",
    "population_report",
]
