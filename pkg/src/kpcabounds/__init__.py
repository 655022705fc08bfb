"""Kernel PCA with finite-sample bounds on projection and residual error.

The package fits kernel PCA on a sample and evaluates, for every cut
dimension k, rigorous upper and lower bounds on the expected squared
projection onto (and residual from) the learned k-dimensional subspace:
scan-based spectral bounds, sample-splitting bounds, and
exponential-moment bounds with a tunable exponent.  A Monte Carlo oracle
estimates the true means for synthetic distributions so bound coverage
can be validated empirically.
"""

from .bounds import (
    BoundConfig,
    BoundReport,
    BoundRow,
    build_report,
    pb_penalty,
    pb_projection_upper,
    pb_residual_lower,
    resolve_alpha,
    split_penalty,
    split_projection_lower,
    split_residual_upper,
    st2005_projection_lower,
    st2005_residual_upper,
)
from .data import (
    Dataset,
    SyntheticSpec,
    default_experiment1_spec,
    derive_seed,
    load_csv,
    sample,
    split,
    stream,
)
from .errors import (
    InputError,
    InvalidKernelError,
    KpcaBoundsError,
    NumericalError,
    ParseError,
    UnsupportedError,
)
from .kernels import (
    GramMatrix,
    KernelSpec,
    diagonal_values,
    evaluate,
    gram,
    kernel_matrix,
    psd_spot_check,
)
from .kpca import (
    KpcaModel,
    empirical_projection_mean,
    empirical_residual_mean,
    fit,
    pointwise_curves,
    projection_profiles,
    projection_sq_norm,
    residual_sq_norm,
)
from .runner import (
    COVERAGE_BOUNDS,
    COVERAGE_COLUMNS,
    REPORT_COLUMNS,
    CoverageResult,
    CoverageRow,
    CsvSource,
    ExperimentConfig,
    SyntheticSource,
    mc_oracle,
    read_report_csv,
    run,
    run_coverage,
    run_experiment1,
    run_experiment2,
    run_single,
    write_report,
)
from .spectrum import (
    EigenSpectrum,
    eigendecompose,
    initial_sum,
    jacobi_eigh,
    tail_sum,
    tie_split,
)

__version__ = "0.1.0"

__all__ = [
    "COVERAGE_BOUNDS",
    "COVERAGE_COLUMNS",
    "REPORT_COLUMNS",
    "BoundConfig",
    "BoundReport",
    "BoundRow",
    "CoverageResult",
    "CoverageRow",
    "CsvSource",
    "Dataset",
    "EigenSpectrum",
    "ExperimentConfig",
    "GramMatrix",
    "InputError",
    "InvalidKernelError",
    "KernelSpec",
    "KpcaBoundsError",
    "KpcaModel",
    "NumericalError",
    "ParseError",
    "SyntheticSource",
    "SyntheticSpec",
    "UnsupportedError",
    "build_report",
    "default_experiment1_spec",
    "derive_seed",
    "diagonal_values",
    "eigendecompose",
    "empirical_projection_mean",
    "empirical_residual_mean",
    "evaluate",
    "fit",
    "gram",
    "initial_sum",
    "jacobi_eigh",
    "kernel_matrix",
    "load_csv",
    "mc_oracle",
    "pb_penalty",
    "pb_projection_upper",
    "pb_residual_lower",
    "pointwise_curves",
    "projection_profiles",
    "projection_sq_norm",
    "psd_spot_check",
    "read_report_csv",
    "resolve_alpha",
    "residual_sq_norm",
    "run",
    "run_coverage",
    "run_experiment1",
    "run_experiment2",
    "run_single",
    "sample",
    "split",
    "split_penalty",
    "split_projection_lower",
    "split_residual_upper",
    "st2005_projection_lower",
    "st2005_residual_upper",
    "stream",
    "tail_sum",
    "tie_split",
    "write_report",
]
