"""Finite-sample bounds on expected squared projection and residual.

Six bound evaluators, in three pairs:

* ``st2005_*`` — eigenvalue/Rademacher bounds computed from one sample's
  spectrum and diagonal, with an inner scan over the cut position.
* ``split_*`` — sample-splitting bounds: an empirical mean on held-out
  data plus or minus a distribution-free penalty.
* ``pb_*`` — bounds derived from an exponential-moment argument with a
  tunable exponent alpha; ``resolve_alpha`` supplies the
  penalty-minimizing value when alpha is left automatic.

All formulas use natural logarithms and are reported unclipped: lower
bounds may be negative and upper bounds may exceed the mean kernel
diagonal.  Clipping is applied only in report serialization and plots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import InputError
from .kernels import GramMatrix
from .kpca import KpcaModel, projection_profiles
from .spectrum import EigenSpectrum, initial_sum, tail_sum, tie_split


@dataclass(frozen=True)
class BoundConfig:
    """Shared parameters of the bound formulas.

    Attributes
    ----------
    delta : float
        Confidence level parameter in (0, 1].
    m : int
        Sample size the bound is evaluated at.  For split bounds this is
        the size of the held-out half; for the others it is the size of
        the sample whose spectrum is used.
    r_squared : float
        Uniform upper bound R^2 on kappa(x, x).
    alpha : float or None
        Exponent for the pb bounds; None selects the optimal value via
        :func:`resolve_alpha`.
    """

    delta: float
    m: int
    r_squared: float
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.delta) and 0.0 < self.delta <= 1.0):
            raise InputError(f"delta must be in (0, 1], got {self.delta!r}")
        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)):
            raise InputError(f"m must be an integer, got {self.m!r}")
        if self.m < 1:
            raise InputError(f"m must be >= 1, got {self.m}")
        if not (np.isfinite(self.r_squared) and self.r_squared > 0.0):
            raise InputError(f"r_squared must be > 0, got {self.r_squared!r}")
        if self.alpha is not None and not (
            isinstance(self.alpha, (int, float, np.floating)) and np.isfinite(self.alpha)
        ):
            raise InputError(f"alpha must be a finite real or None, got {self.alpha!r}")


def resolve_alpha(cfg: BoundConfig) -> float:
    """The exponent used by the pb bounds under ``cfg``.

    An explicit alpha is returned unchanged (any finite real is legal).
    When alpha is automatic the penalty-minimizing value

        alpha_0 = 1/2 + ln(2 ln(1/delta) / R^4) / (2 ln m)

    is returned; it requires m >= 2 and delta < 1.
    """
    if cfg.alpha is not None:
        return float(cfg.alpha)
    if cfg.delta >= 1.0:
        raise InputError("automatic alpha is undefined at delta = 1 (ln 0)")
    if cfg.m < 2:
        raise InputError("automatic alpha requires m >= 2 (ln m > 0)")
    r4 = cfg.r_squared**2
    return 0.5 + math.log(2.0 * math.log(1.0 / cfg.delta) / r4) / (
        2.0 * math.log(cfg.m)
    )


def _check_bound_k(cfg: BoundConfig, k: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise InputError(f"k must be an integer, got {k!r}")
    if not 1 <= k <= cfg.m:
        raise InputError(f"k must be in [1, {cfg.m}], got {k}")
    return int(k)


def _check_same_sample(
    spectrum: EigenSpectrum, g: GramMatrix | None, cfg: BoundConfig
) -> None:
    if g is not None and g.size != spectrum.source_dim:
        raise InputError(
            f"spectrum is from an m={spectrum.source_dim} sample but the Gram "
            f"matrix has m={g.size}"
        )
    if cfg.m != spectrum.source_dim:
        raise InputError(
            f"cfg.m={cfg.m} does not match the spectrum sample size "
            f"{spectrum.source_dim}"
        )


def st2005_residual_upper(
    spectrum: EigenSpectrum, g: GramMatrix, cfg: BoundConfig, k: int
) -> float:
    """Upper bound on the expected squared residual at cut k.

    Scans every cut position l <= k, combining the spectral tail beyond l
    with a Rademacher-style term, and adds a confidence term:

        min_{1<=l<=k} [ tail(l)/m + ((1+sqrt(l))/sqrt(m)) * sqrt((2/m) sum_i kappa(x_i,x_i)^2) ]
          + R^2 sqrt((18/m) ln(2m/delta))
    """
    _check_same_sample(spectrum, g, cfg)
    k = _check_bound_k(cfg, k)
    m = cfg.m
    rad = math.sqrt(2.0 * g.diag_sq_sum / m)
    best = math.inf
    for ell in range(1, k + 1):
        term = tail_sum(spectrum, ell) / m + (1.0 + math.sqrt(ell)) / math.sqrt(m) * rad
        if term < best:
            best = term
    conf = cfg.r_squared * math.sqrt(18.0 / m * math.log(2.0 * m / cfg.delta))
    return best + conf


def st2005_projection_lower(
    spectrum: EigenSpectrum, g: GramMatrix, cfg: BoundConfig, k: int
) -> float:
    """Lower bound on the expected squared projection at cut k.

    Mirror image of :func:`st2005_residual_upper`: maximizes the initial
    sum minus the Rademacher-style term over cuts l <= k, then subtracts
    the confidence term ``R^2 sqrt((19/m) ln(2(m+1)/delta))``.
    """
    _check_same_sample(spectrum, g, cfg)
    k = _check_bound_k(cfg, k)
    m = cfg.m
    rad = math.sqrt(2.0 * g.diag_sq_sum / m)
    best = -math.inf
    for ell in range(1, k + 1):
        term = (
            initial_sum(spectrum, ell) / m
            - (1.0 + math.sqrt(ell)) / math.sqrt(m) * rad
        )
        if term > best:
            best = term
    conf = cfg.r_squared * math.sqrt(19.0 / m * math.log(2.0 * (m + 1) / cfg.delta))
    return best - conf


def split_penalty(cfg: BoundConfig) -> float:
    """The additive penalty of the split bounds: R^2 sqrt((2/m) ln(1/delta))."""
    return cfg.r_squared * math.sqrt(2.0 / cfg.m * math.log(1.0 / cfg.delta))


def _check_test_mean(test_mean: float) -> float:
    if not (np.isfinite(test_mean) and test_mean >= 0.0):
        raise InputError(f"test_mean must be finite and >= 0, got {test_mean!r}")
    return float(test_mean)


def split_projection_lower(test_mean: float, cfg: BoundConfig) -> float:
    """Lower bound on the expected squared projection from held-out data.

    ``cfg.m`` must be the size of the held-out half that produced
    ``test_mean``.  The bound is reported unclipped and may be negative.
    """
    return _check_test_mean(test_mean) - split_penalty(cfg)


def split_residual_upper(test_mean: float, cfg: BoundConfig) -> float:
    """Upper bound on the expected squared residual from held-out data."""
    return _check_test_mean(test_mean) + split_penalty(cfg)


def pb_penalty(cfg: BoundConfig) -> float:
    """The additive penalty of the pb bounds at the resolved alpha."""
    alpha = resolve_alpha(cfg)
    m = cfg.m
    return math.log(1.0 / cfg.delta) / m**alpha + cfg.r_squared**2 / (
        2.0 * m ** (1.0 - alpha)
    )


def pb_projection_upper(spectrum: EigenSpectrum, cfg: BoundConfig, k: int) -> float:
    """Upper bound on the expected squared projection at cut k.

        initial(k)/m + ln(1/delta)/m^alpha + R^4/(2 m^(1-alpha))
    """
    _check_same_sample(spectrum, None, cfg)
    k = _check_bound_k(cfg, k)
    return initial_sum(spectrum, k) / cfg.m + pb_penalty(cfg)


def pb_residual_lower(spectrum: EigenSpectrum, cfg: BoundConfig, k: int) -> float:
    """Lower bound on the expected squared residual at cut k.

        tail(k)/m - ln(1/delta)/m^alpha - R^4/(2 m^(1-alpha))
    """
    _check_same_sample(spectrum, None, cfg)
    k = _check_bound_k(cfg, k)
    return tail_sum(spectrum, k) / cfg.m - pb_penalty(cfg)


@dataclass(frozen=True)
class BoundRow:
    """All quantities evaluated at one cut dimension k.

    ``split_*`` fields are None when no held-out sample was supplied;
    ``oracle_*`` fields are None unless a Monte Carlo oracle ran.
    """

    k: int
    emp_proj_mean: float
    emp_resid_mean: float
    st_proj_lower: float
    st_resid_upper: float
    split_proj_lower: Optional[float]
    split_resid_upper: Optional[float]
    pb_proj_upper: float
    pb_resid_lower: float
    tie_split_flag: bool
    eig_proj_mean: float
    eig_resid_mean: float
    pb_proj_upper_half: float
    pb_resid_lower_half: float
    oracle_proj_mean: Optional[float] = None
    oracle_proj_se: Optional[float] = None
    oracle_resid_mean: Optional[float] = None
    oracle_resid_se: Optional[float] = None


@dataclass(frozen=True)
class BoundReport:
    """Per-k bound rows plus the metadata needed to reproduce them."""

    rows: tuple[BoundRow, ...]
    metadata: dict


def build_report(
    model: KpcaModel,
    test,
    cfg: BoundConfig,
    k_max: int,
    *,
    st_spectrum: EigenSpectrum | None = None,
    st_gram: GramMatrix | None = None,
    oracle_curves: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> BoundReport:
    """Evaluate every bound for k = 1..k_max on one fitted model.

    Parameters
    ----------
    model : KpcaModel
    test : array-like of shape (n, d) or None
        Held-out points.  When given, empirical means are computed on
        them and the split bounds are filled in; when None, empirical
        means fall back to the training sample and split columns are
        None.
    cfg : BoundConfig
        ``cfg.m`` must equal the training-sample size; per-bound sizes
        (held-out half, alternative spectrum sample) are derived here.
    k_max : int
        Rows are emitted for k = 1..k_max; requires k_max <= m.
    st_spectrum, st_gram : optional
        Alternative sample (for example the full sample before
        splitting) for the scan-based bounds; both or neither.
    oracle_curves : optional
        Arrays (proj_mean, proj_se, resid_mean, resid_se), each of
        length k_max, attached verbatim to the rows.
    """
    m_fit = model.m
    if cfg.m != m_fit:
        raise InputError(f"cfg.m={cfg.m} does not match the fit sample size {m_fit}")
    if isinstance(k_max, bool) or not isinstance(k_max, (int, np.integer)):
        raise InputError(f"k_max must be an integer, got {k_max!r}")
    if not 1 <= k_max <= m_fit:
        raise InputError(f"k_max must be in [1, {m_fit}], got {k_max}")
    k_max = int(k_max)
    if (st_spectrum is None) != (st_gram is None):
        raise InputError("st_spectrum and st_gram must be supplied together")
    if st_spectrum is None:
        st_spectrum, st_gram = model.spectrum, model.gram
    if k_max > st_spectrum.source_dim:
        raise InputError(
            f"k_max={k_max} exceeds the scan-bound sample size "
            f"{st_spectrum.source_dim}"
        )
    if oracle_curves is not None:
        oracle_curves = tuple(np.asarray(c, dtype=float) for c in oracle_curves)
        if len(oracle_curves) != 4 or any(c.shape != (k_max,) for c in oracle_curves):
            raise InputError("oracle_curves must be four arrays of length k_max")

    alpha_resolved = resolve_alpha(cfg)
    pb_cfg = replace(cfg, alpha=alpha_resolved)
    pb_cfg_half = replace(cfg, alpha=0.5)
    st_cfg = replace(cfg, m=st_spectrum.source_dim)

    if test is not None:
        test_arr = np.asarray(test, dtype=float)
        proj_prof, resid_prof = projection_profiles(model, test_arr, k_max)
        split_cfg = replace(cfg, m=test_arr.shape[0])
        m_test = test_arr.shape[0]
    else:
        proj_prof, resid_prof = projection_profiles(model, model.train, k_max)
        split_cfg = None
        m_test = None

    rows = []
    for i, k in enumerate(range(1, k_max + 1)):
        if split_cfg is not None:
            s_lo = split_projection_lower(float(proj_prof[i]), split_cfg)
            s_up = split_residual_upper(float(resid_prof[i]), split_cfg)
        else:
            s_lo = None
            s_up = None
        oracle = (
            tuple(float(c[i]) for c in oracle_curves)
            if oracle_curves is not None
            else (None, None, None, None)
        )
        rows.append(
            BoundRow(
                k=k,
                emp_proj_mean=float(proj_prof[i]),
                emp_resid_mean=float(resid_prof[i]),
                st_proj_lower=st2005_projection_lower(st_spectrum, st_gram, st_cfg, k),
                st_resid_upper=st2005_residual_upper(st_spectrum, st_gram, st_cfg, k),
                split_proj_lower=s_lo,
                split_resid_upper=s_up,
                pb_proj_upper=pb_projection_upper(model.spectrum, pb_cfg, k),
                pb_resid_lower=pb_residual_lower(model.spectrum, pb_cfg, k),
                tie_split_flag=tie_split(model.spectrum, k),
                eig_proj_mean=initial_sum(model.spectrum, k) / m_fit,
                eig_resid_mean=tail_sum(model.spectrum, k) / m_fit,
                pb_proj_upper_half=pb_projection_upper(model.spectrum, pb_cfg_half, k),
                pb_resid_lower_half=pb_residual_lower(model.spectrum, pb_cfg_half, k),
                oracle_proj_mean=oracle[0],
                oracle_proj_se=oracle[1],
                oracle_resid_mean=oracle[2],
                oracle_resid_se=oracle[3],
            )
        )

    metadata = {
        "kernel": model.kernel.describe(),
        "m_fit": m_fit,
        "m_test": m_test,
        "st_sample_size": st_spectrum.source_dim,
        "delta": cfg.delta,
        "alpha_requested": "auto" if cfg.alpha is None else float(cfg.alpha),
        "alpha_resolved": alpha_resolved,
        "r_squared": cfg.r_squared,
        "k_max": k_max,
        "fit_trace_mean": model.gram.trace / m_fit,
    }
    return BoundReport(rows=tuple(rows), metadata=metadata)
