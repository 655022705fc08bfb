"""Experiment orchestration: model fitting, bound curves, coverage trials,
and report serialization.

Four run modes mirror the CLI subcommands:

* ``experiment1`` — split the data in half, fit on the first half,
  evaluate the split bounds on the second half and the scan bounds on
  the full sample's spectrum.
* ``experiment2`` — same split protocol, but the scan bounds use the
  fit sample and the focus is the two pb curves (optimal and naive
  alpha).
* ``coverage`` — repeated resample/refit trials counting how often each
  bound contradicts a Monte Carlo estimate of the true mean.
* ``single`` — fit on everything, no split.

Reports serialize to CSV (17 significant digits, fixed header) with a
``.meta`` JSON sidecar holding the full configuration and resolved
parameters.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np

from .bounds import (
    BoundConfig,
    BoundReport,
    build_report,
    pb_projection_upper,
    pb_residual_lower,
    resolve_alpha,
    split_projection_lower,
    split_residual_upper,
)
from .data import (
    STREAM_ORACLE,
    STREAM_SPLITTING,
    STREAM_TRIALS,
    Dataset,
    SyntheticSpec,
    derive_seed,
    draw_points,
    load_csv,
    sample,
    split,
    stream,
)
from .errors import InputError, UnsupportedError
from .kernels import KernelSpec, diagonal_values, gram
from .kpca import KpcaModel, fit, pointwise_curves, projection_profiles
from .spectrum import eigendecompose

#: Bounds checked by the coverage harness, in reporting order.
COVERAGE_BOUNDS = (
    "split_proj_lower",
    "split_resid_upper",
    "pb_proj_upper",
    "pb_resid_lower",
)

#: Fixed CSV header for bound reports.
REPORT_COLUMNS = (
    "k",
    "emp_proj_mean",
    "emp_resid_mean",
    "st_proj_lower",
    "st_resid_upper",
    "split_proj_lower",
    "split_resid_upper",
    "pb_proj_upper",
    "pb_resid_lower",
    "tie_split_flag",
    "eig_proj_mean",
    "eig_resid_mean",
    "pb_proj_upper_half",
    "pb_resid_lower_half",
    "oracle_proj_mean",
    "oracle_proj_se",
    "oracle_resid_mean",
    "oracle_resid_se",
    "st_proj_lower_clipped",
    "st_resid_upper_clipped",
    "split_proj_lower_clipped",
    "split_resid_upper_clipped",
    "pb_proj_upper_clipped",
    "pb_resid_lower_clipped",
)

#: Fixed CSV header for coverage results.
COVERAGE_COLUMNS = (
    "bound",
    "k",
    "violation_count",
    "trials",
    "violation_rate",
    "oracle_mean",
    "oracle_se",
)

_CLIPPED = {
    "st_proj_lower_clipped": "st_proj_lower",
    "st_resid_upper_clipped": "st_resid_upper",
    "split_proj_lower_clipped": "split_proj_lower",
    "split_resid_upper_clipped": "split_resid_upper",
    "pb_proj_upper_clipped": "pb_proj_upper",
    "pb_resid_lower_clipped": "pb_resid_lower",
}


@dataclass(frozen=True)
class CsvSource:
    """Points loaded from a delimited text file."""

    path: str


@dataclass(frozen=True)
class SyntheticSource:
    """n points drawn from a seeded synthetic distribution."""

    spec: SyntheticSpec
    n: int

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise InputError(f"n must be an integer, got {self.n!r}")
        if self.n < 1:
            raise InputError(f"n must be >= 1, got {self.n}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run depends on; identical configs give identical bytes.

    ``seed`` drives splitting, oracle draws, and coverage trials; the
    synthetic sampling seed lives inside the SyntheticSpec (the CLI sets
    both from one flag).  ``oracle_n = 0`` disables the oracle.
    """

    mode: Literal["experiment1", "experiment2", "coverage", "single"]
    source: Union[CsvSource, SyntheticSource]
    kernel: KernelSpec
    delta: float = 0.05
    alpha: Optional[float] = None
    r_squared: Optional[float] = None
    k_max: int = 100
    split_ratio: float = 0.5
    trials: int = 200
    oracle_n: int = 100_000
    seed: int = 0
    normalization: Literal["raw", "trace"] = "raw"
    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.mode not in ("experiment1", "experiment2", "coverage", "single"):
            raise InputError(f"unknown mode: {self.mode!r}")
        if not isinstance(self.source, (CsvSource, SyntheticSource)):
            raise InputError(f"unknown source type: {type(self.source).__name__}")
        if not (np.isfinite(self.delta) and 0.0 < self.delta <= 1.0):
            raise InputError(f"delta must be in (0, 1], got {self.delta!r}")
        if self.alpha is not None and not np.isfinite(self.alpha):
            raise InputError(f"alpha must be finite or None, got {self.alpha!r}")
        if self.r_squared is not None and not (
            np.isfinite(self.r_squared) and self.r_squared > 0
        ):
            raise InputError(f"r_squared must be > 0 or None, got {self.r_squared!r}")
        if isinstance(self.k_max, bool) or not isinstance(
            self.k_max, (int, np.integer)
        ):
            raise InputError(f"k_max must be an integer, got {self.k_max!r}")
        if self.k_max < 1:
            raise InputError(f"k_max must be >= 1, got {self.k_max}")
        if not (np.isfinite(self.split_ratio) and 0.0 < self.split_ratio < 1.0):
            raise InputError(
                f"split_ratio must be in (0, 1), got {self.split_ratio!r}"
            )
        if self.mode == "coverage" and self.trials < 1:
            raise InputError(f"trials must be >= 1 in coverage mode, got {self.trials}")
        if self.oracle_n != 0 and self.oracle_n < 1000:
            raise InputError(
                f"oracle_n must be 0 (disabled) or >= 1000, got {self.oracle_n}"
            )
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InputError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.normalization not in ("raw", "trace"):
            raise InputError(f"unknown normalization: {self.normalization!r}")


@dataclass(frozen=True)
class CoverageRow:
    """Violation tally for one bound, either at one k or aggregated.

    ``k`` is None for the aggregate row counting trials where the bound
    failed at any k.  ``oracle_mean``/``oracle_se`` average the per-trial
    oracle estimate of the bound's target quantity (aggregate rows leave
    them None).
    """

    bound: str
    k: Optional[int]
    violation_count: int
    trials: int
    violation_rate: float
    oracle_mean: Optional[float]
    oracle_se: Optional[float]


@dataclass(frozen=True)
class CoverageResult:
    rows: tuple[CoverageRow, ...]
    metadata: dict


def _load_dataset(cfg: ExperimentConfig) -> Dataset:
    if isinstance(cfg.source, CsvSource):
        return load_csv(cfg.source.path)
    return sample(cfg.source.spec, cfg.source.n)


def _resolve_r_squared(cfg: ExperimentConfig, ds: Dataset) -> float:
    """Explicit override, or the max kernel diagonal over all loaded data."""
    if cfg.r_squared is not None:
        return float(cfg.r_squared)
    return float(np.max(diagonal_values(cfg.kernel, ds.points)))


def _oracle_curves(
    model: KpcaModel, spec: SyntheticSpec, k_max: int, n: int, seed: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Monte Carlo means and standard errors for k = 1..k_max.

    Draws n fresh points from ``spec`` in chunks, accumulating first and
    second moments of the per-point projection and residual curves.
    """
    if not isinstance(spec, SyntheticSpec):
        raise UnsupportedError(
            "the Monte Carlo oracle requires a synthetic source (the sampling "
            "distribution of csv data is unknown)"
        )
    if spec.dim != model.dim:
        raise InputError(
            f"oracle spec has dimension {spec.dim}, model expects {model.dim}"
        )
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise InputError(f"n must be an integer, got {n!r}")
    if n < 1000:
        raise InputError(f"oracle n must be >= 1000, got {n}")
    rng = stream(seed, STREAM_ORACLE)
    chunk = min(20_000, max(1000, 4_000_000 // max(1, model.m)))
    s1p = np.zeros(k_max)
    s2p = np.zeros(k_max)
    s1r = np.zeros(k_max)
    s2r = np.zeros(k_max)
    remaining = int(n)
    while remaining > 0:
        c = min(chunk, remaining)
        pts = draw_points(spec, c, rng)
        proj, resid = pointwise_curves(model, pts, k_max)
        s1p += proj.sum(axis=1)
        s2p += (proj * proj).sum(axis=1)
        s1r += resid.sum(axis=1)
        s2r += (resid * resid).sum(axis=1)
        remaining -= c
    n = float(n)
    mean_p = s1p / n
    mean_r = s1r / n
    var_p = np.maximum(s2p - n * mean_p**2, 0.0) / (n - 1.0)
    var_r = np.maximum(s2r - n * mean_r**2, 0.0) / (n - 1.0)
    return mean_p, np.sqrt(var_p / n), mean_r, np.sqrt(var_r / n)


def mc_oracle(
    model: KpcaModel, spec: SyntheticSpec, k: int, n: int, seed: int
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Estimate the expected squared projection and residual at one k.

    Returns ``((proj_mean, proj_se), (resid_mean, resid_se))`` over n
    fresh draws from ``spec``.  Identical arguments reuse identical
    draws, so the estimate at k agrees with the k-th entry of a longer
    curve under the same seed.
    """
    mean_p, se_p, mean_r, se_r = _oracle_curves(model, spec, k, n, seed)
    return (float(mean_p[k - 1]), float(se_p[k - 1])), (
        float(mean_r[k - 1]),
        float(se_r[k - 1]),
    )


def _require_mode(cfg: ExperimentConfig, mode: str) -> None:
    if cfg.mode != mode:
        raise InputError(f"config mode is {cfg.mode!r}, expected {mode!r}")


def _maybe_oracle(
    cfg: ExperimentConfig, model: KpcaModel
) -> Optional[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    if cfg.oracle_n == 0 or not isinstance(cfg.source, SyntheticSource):
        return None
    return _oracle_curves(model, cfg.source.spec, cfg.k_max, cfg.oracle_n, cfg.seed)


def _split_experiment(cfg: ExperimentConfig, full_sample_scan: bool) -> BoundReport:
    """Shared protocol of the two experiment modes.

    From N loaded points, half become the working sample S (so the fit
    size is m = N/4 at the default ratio); S is then split into a fit
    half and a held-out half.  The scan bounds optionally use the
    spectrum of all of S rather than the fit half.
    """
    ds = _load_dataset(cfg)
    if ds.n < 4:
        raise InputError(
            f"experiment modes need at least 4 points, got {ds.n}"
        )
    working, _unused = split(ds, 0.5, cfg.seed)
    first, second = split(
        working, cfg.split_ratio, derive_seed(cfg.seed, STREAM_SPLITTING)
    )
    r2 = _resolve_r_squared(cfg, working)
    model = fit(cfg.kernel, first.points, r_squared=r2)
    bcfg = BoundConfig(delta=cfg.delta, m=model.m, r_squared=r2, alpha=cfg.alpha)
    if full_sample_scan:
        full_gram = gram(cfg.kernel, working.points)
        st_spectrum, st_gram = eigendecompose(full_gram), full_gram
    else:
        st_spectrum = st_gram = None
    report = build_report(
        model,
        second.points,
        bcfg,
        cfg.k_max,
        st_spectrum=st_spectrum,
        st_gram=st_gram,
        oracle_curves=_maybe_oracle(cfg, model),
    )
    report.metadata.update(_run_metadata(cfg, n_total=ds.n))
    report.metadata["protocol_sample_size"] = working.n
    return report


def run_experiment1(cfg: ExperimentConfig) -> BoundReport:
    """Split protocol with the scan bounds on the full sample's spectrum."""
    _require_mode(cfg, "experiment1")
    return _split_experiment(cfg, full_sample_scan=True)


def run_experiment2(cfg: ExperimentConfig) -> BoundReport:
    """Split protocol; every spectrum-based bound uses the fit sample."""
    _require_mode(cfg, "experiment2")
    return _split_experiment(cfg, full_sample_scan=False)


def run_single(cfg: ExperimentConfig) -> BoundReport:
    """Fit on the whole dataset; no held-out half, no split bounds."""
    _require_mode(cfg, "single")
    ds = _load_dataset(cfg)
    r2 = _resolve_r_squared(cfg, ds)
    model = fit(cfg.kernel, ds.points, r_squared=r2)
    bcfg = BoundConfig(delta=cfg.delta, m=model.m, r_squared=r2, alpha=cfg.alpha)
    report = build_report(
        model, None, bcfg, cfg.k_max, oracle_curves=_maybe_oracle(cfg, model)
    )
    report.metadata.update(_run_metadata(cfg, n_total=ds.n))
    return report


def run_coverage(cfg: ExperimentConfig) -> CoverageResult:
    """Repeated trials counting bound violations against the oracle.

    Each trial draws a fresh dataset, splits it, fits on the first half,
    evaluates the four data-dependent bounds for every k, and estimates
    the true means with ``oracle_n`` fresh draws.  A lower bound counts
    as violated when it exceeds the oracle mean plus two standard
    errors; an upper bound when it falls below the mean minus two.
    """
    _require_mode(cfg, "coverage")
    if not isinstance(cfg.source, SyntheticSource):
        raise UnsupportedError(
            "coverage requires a synthetic source (the true distribution must "
            "be drawable)"
        )
    if cfg.oracle_n == 0:
        raise InputError("coverage requires the oracle; oracle_n must be >= 1000")
    spec, n_total = cfg.source.spec, cfg.source.n
    k_max = cfg.k_max
    counts = np.zeros((len(COVERAGE_BOUNDS), k_max), dtype=np.int64)
    any_k = np.zeros(len(COVERAGE_BOUNDS), dtype=np.int64)
    oracle_mean_sums = np.zeros((2, k_max))
    oracle_se_sums = np.zeros((2, k_max))
    for t in range(cfg.trials):
        seed_t = derive_seed(cfg.seed, STREAM_TRIALS, t)
        ds = sample(replace(spec, seed=seed_t), n_total)
        first, second = split(ds, cfg.split_ratio, seed_t)
        r2 = _resolve_r_squared(cfg, ds)
        model = fit(cfg.kernel, first.points, r_squared=r2)
        if k_max > model.m:
            raise InputError(
                f"k_max={k_max} exceeds the per-trial fit sample size {model.m}"
            )
        proj_mean, proj_se, resid_mean, resid_se = _oracle_curves(
            model, spec, k_max, cfg.oracle_n, seed_t
        )
        oracle_mean_sums[0] += proj_mean
        oracle_mean_sums[1] += resid_mean
        oracle_se_sums[0] += proj_se
        oracle_se_sums[1] += resid_se
        split_cfg = BoundConfig(
            delta=cfg.delta, m=second.n, r_squared=r2, alpha=cfg.alpha
        )
        pb_cfg = BoundConfig(delta=cfg.delta, m=model.m, r_squared=r2, alpha=cfg.alpha)
        proj_prof, resid_prof = projection_profiles(model, second.points, k_max)
        violated = np.zeros((len(COVERAGE_BOUNDS), k_max), dtype=bool)
        for i, k in enumerate(range(1, k_max + 1)):
            lo_split = split_projection_lower(float(proj_prof[i]), split_cfg)
            up_split = split_residual_upper(float(resid_prof[i]), split_cfg)
            up_pb = pb_projection_upper(model.spectrum, pb_cfg, k)
            lo_pb = pb_residual_lower(model.spectrum, pb_cfg, k)
            violated[0, i] = lo_split > proj_mean[i] + 2.0 * proj_se[i]
            violated[1, i] = up_split < resid_mean[i] - 2.0 * resid_se[i]
            violated[2, i] = up_pb < proj_mean[i] - 2.0 * proj_se[i]
            violated[3, i] = lo_pb > resid_mean[i] + 2.0 * resid_se[i]
        counts += violated
        any_k += violated.any(axis=1)

    trials = cfg.trials
    # Each bound targets either the projection mean (rows 0, 2) or the
    # residual mean (rows 1, 3) of the oracle.
    target = (0, 1, 0, 1)
    rows = []
    for b, name in enumerate(COVERAGE_BOUNDS):
        for i, k in enumerate(range(1, k_max + 1)):
            rows.append(
                CoverageRow(
                    bound=name,
                    k=k,
                    violation_count=int(counts[b, i]),
                    trials=trials,
                    violation_rate=int(counts[b, i]) / trials,
                    oracle_mean=float(oracle_mean_sums[target[b], i] / trials),
                    oracle_se=float(oracle_se_sums[target[b], i] / trials),
                )
            )
        rows.append(
            CoverageRow(
                bound=name,
                k=None,
                violation_count=int(any_k[b]),
                trials=trials,
                violation_rate=int(any_k[b]) / trials,
                oracle_mean=None,
                oracle_se=None,
            )
        )
    metadata = _run_metadata(cfg, n_total=n_total)
    metadata.update(
        {
            "k_max": k_max,
            "delta": cfg.delta,
            "bounds": list(COVERAGE_BOUNDS),
        }
    )
    return CoverageResult(rows=tuple(rows), metadata=metadata)


def _run_metadata(cfg: ExperimentConfig, n_total: int) -> dict:
    if isinstance(cfg.source, CsvSource):
        source_desc = f"csv:{cfg.source.path}"
    else:
        source_desc = f"synthetic:{cfg.source.spec.family}(n={cfg.source.n})"
    return {
        "mode": cfg.mode,
        "source": source_desc,
        "seed": cfg.seed,
        "n_total": n_total,
        "normalization": cfg.normalization,
        "oracle_n": cfg.oracle_n if isinstance(cfg.source, SyntheticSource) else 0,
    }


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _report_table(report: BoundReport) -> list[list[str]]:
    """Rows of the report CSV, normalization and clipping applied."""
    normalization = report.metadata.get("normalization", "raw")
    scale = report.metadata.get("fit_trace_mean", None)
    divisor = float(scale) if (normalization == "trace" and scale) else 1.0
    hi = float(scale) / divisor if scale is not None else math.inf
    plain = (
        "emp_proj_mean",
        "emp_resid_mean",
        "st_proj_lower",
        "st_resid_upper",
        "split_proj_lower",
        "split_resid_upper",
        "pb_proj_upper",
        "pb_resid_lower",
        "eig_proj_mean",
        "eig_resid_mean",
        "pb_proj_upper_half",
        "pb_resid_lower_half",
        "oracle_proj_mean",
        "oracle_proj_se",
        "oracle_resid_mean",
        "oracle_resid_se",
    )
    table = []
    for row in report.rows:
        values = {"k": row.k, "tie_split_flag": row.tie_split_flag}
        for name in plain:
            raw = getattr(row, name)
            values[name] = None if raw is None else raw / divisor
        for clipped, source in _CLIPPED.items():
            raw = values[source]
            values[clipped] = (
                None if raw is None else min(max(raw, 0.0), hi)
            )
        table.append([_format_value(values[c]) for c in REPORT_COLUMNS])
    return table


def _coverage_table(result: CoverageResult) -> list[list[str]]:
    table = []
    for row in result.rows:
        table.append(
            [
                row.bound,
                "all" if row.k is None else str(row.k),
                str(row.violation_count),
                str(row.trials),
                _format_value(row.violation_rate),
                _format_value(row.oracle_mean),
                _format_value(row.oracle_se),
            ]
        )
    return table


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["source_type"] = "csv" if isinstance(cfg.source, CsvSource) else "synthetic"
    return d


def write_report(
    obj: Union[BoundReport, CoverageResult], path, cfg: ExperimentConfig | None = None
) -> None:
    """Serialize a report or coverage result to CSV plus a .meta sidecar.

    The CSV has a fixed header and 17-significant-digit values; the
    sidecar (same basename, ``.meta`` suffix) is JSON holding the run
    metadata, the full configuration when given, and resolved
    alpha/R^2.
    """
    path = Path(path)
    if isinstance(obj, BoundReport):
        header, table = REPORT_COLUMNS, _report_table(obj)
    elif isinstance(obj, CoverageResult):
        header, table = COVERAGE_COLUMNS, _coverage_table(obj)
    else:
        raise InputError(f"cannot serialize {type(obj).__name__}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(table)
    meta = {"metadata": obj.metadata}
    if cfg is not None:
        meta["config"] = _config_dict(cfg)
    meta["resolved"] = {
        "alpha": obj.metadata.get("alpha_resolved"),
        "r_squared": obj.metadata.get("r_squared"),
        "normalization_constant": obj.metadata.get("fit_trace_mean"),
    }
    with open(path.with_suffix(".meta"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report_csv(path) -> tuple[tuple[str, ...], list[list[Optional[float]]]]:
    """Parse a report CSV back into floats (None for empty cells).

    The ``bound`` column of coverage files and the ``all`` aggregate
    marker are returned as-is (strings).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        rows = []
        for cells in reader:
            parsed = []
            for cell in cells:
                if cell == "":
                    parsed.append(None)
                else:
                    try:
                        parsed.append(float(cell))
                    except ValueError:
                        parsed.append(cell)
            rows.append(parsed)
    return header, rows


def run(cfg: ExperimentConfig) -> Union[BoundReport, CoverageResult]:
    """Dispatch on ``cfg.mode``; write outputs when ``cfg.out`` is set.

    When an output path is given this writes the CSV, the ``.meta``
    sidecar, and a rendered figure with the same basename and a ``.png``
    suffix.
    """
    runners = {
        "experiment1": run_experiment1,
        "experiment2": run_experiment2,
        "coverage": run_coverage,
        "single": run_single,
    }
    result = runners[cfg.mode](cfg)
    if cfg.out is not None:
        out = Path(cfg.out)
        write_report(result, out, cfg=cfg)
        from .figures import render_coverage_figure, render_report_figure

        if isinstance(result, BoundReport):
            render_report_figure(result, out.with_suffix(".png"))
        else:
            render_coverage_figure(result, out.with_suffix(".png"))
    return result
