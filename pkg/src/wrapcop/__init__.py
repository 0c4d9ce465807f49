"""Wrapped-sum copulas: dependence through addition modulo one.

A copula in this class is specified by a density ``f`` on ``[0, 1]`` (the
*generator*) and a bit vector ``s`` (the *signature*); its density is
``c(u) = f((sum_j u~_j) mod 1)`` with ``u~_j = u_j`` or ``1 - u_j`` according
to ``s_j``.

Submodules
----------
generator
    Generator families, moments, Fourier coefficients, star products.
copula
    Density, sampling, distribution function, partial derivatives,
    characteristic function and tail ratios.
concordance
    Closed-form and brute-force Spearman's rho, Kendall's tau and xi.
inference
    Pseudo-observations, signature selection, maximum likelihood, KDE.
experiments
    Seeded simulation studies and the bivariate angular-data pipeline.
cli
    The ``wrapcop`` command.
"""

from wrapcop.concordance import (
    ConcordanceReport,
    chatterjee_xi,
    closed_form_concordance,
    dss_xi,
    kendall_tau,
    oracle_concordance,
    sample_concordance,
    spearman_rho,
)
from wrapcop.copula import CopulaModel, Signature, linear_wrap, wrapped_sum
from wrapcop.exceptions import (
    BoundaryError,
    BoundaryWarning,
    DataError,
    DegenerateMarginError,
    DomainError,
    InvalidParameterError,
    NumericError,
    SchemaError,
    ShapeError,
    SingularGeneratorError,
    TiesWarning,
    UnsupportedDimensionError,
    UnsupportedInputError,
    WrapcopError,
)
from wrapcop.experiments import (
    PipelineResult,
    StudyConfig,
    StudyResult,
    run_data_pipeline,
    run_kde_mise_study,
    run_rmse_study,
    run_signature_study,
    run_study,
)
from wrapcop.generator import (
    Beta,
    GeneratorMoments,
    GeneratorSpec,
    Kumaraswamy,
    LogitNormal,
    Mixture,
    PiecewiseConstant,
    Reflected,
    Rotated,
    Tabulated,
    Triangular,
    TruncNormal,
    Uniform,
    VonMises,
    frac,
    generator_from_dict,
    generator_to_dict,
    partial_sum_generator,
    reflect,
    rotate,
    star_product,
)
from wrapcop.inference import (
    FitReport,
    KdeEstimate,
    PseudoObservations,
    SignatureSelectionReport,
    empirical_beta_density,
    empirical_copula,
    fit_kde,
    fit_parametric,
    pseudo_observations,
    select_signature,
    wrapped_sums,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
