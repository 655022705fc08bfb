"""Command-line interface.

Subcommands: ``experiment1``, ``experiment2``, ``coverage``, ``single``.
Every run is deterministic given its flags; with ``--out`` the report
CSV, a ``.meta`` sidecar, and a ``.png`` figure are written alongside
each other.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .data import SyntheticSpec, default_experiment1_spec
from .errors import InputError, KpcaBoundsError
from .kernels import KernelSpec
from .runner import (
    BoundReport,
    CsvSource,
    ExperimentConfig,
    SyntheticSource,
    _coverage_table,
    _report_table,
    COVERAGE_COLUMNS,
    REPORT_COLUMNS,
    run,
)


def parse_kernel(text: str) -> KernelSpec:
    """Parse ``--kernel`` values: ``linear``, ``rbf:sigma=V``,
    ``poly:degree=N,r=V``."""
    name, _, params = text.partition(":")
    name = name.strip().lower()
    opts = _parse_options(params, f"kernel {name!r}")
    if name == "linear":
        if opts:
            raise InputError("linear kernel takes no parameters")
        return KernelSpec.linear()
    if name in ("rbf", "gaussian"):
        sigma = _pop_float(opts, "sigma", default=1.0)
        _reject_extra(opts, name)
        return KernelSpec.gaussian(sigma=sigma)
    if name in ("poly", "polynomial"):
        degree = _pop_float(opts, "degree", default=None)
        if degree is None:
            raise InputError("poly kernel requires degree=N")
        if degree != int(degree):
            raise InputError(f"poly degree must be an integer, got {degree:g}")
        offset = _pop_float(opts, "r", default=0.0)
        _reject_extra(opts, name)
        return KernelSpec.polynomial(degree=int(degree), offset=offset)
    raise InputError(f"unknown kernel {name!r} (expected linear, rbf, or poly)")


def _parse_options(params: str, what: str) -> dict[str, str]:
    opts: dict[str, str] = {}
    if not params.strip():
        return opts
    for item in params.split(","):
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise InputError(f"malformed parameter {item!r} for {what}")
        opts[key.strip().lower()] = value.strip()
    return opts


def _pop_float(opts: dict[str, str], key: str, default):
    if key not in opts:
        return default
    raw = opts.pop(key)
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"parameter {key}={raw!r} is not a number") from None


def _reject_extra(opts: dict[str, str], what: str) -> None:
    if opts:
        raise InputError(f"unknown parameter(s) for {what}: {', '.join(sorted(opts))}")


def _parse_vector_list(raw: str, what: str) -> list[list[float]]:
    """Lists use ``|`` between items and ``~`` between coordinates."""
    out = []
    for item in raw.split("|"):
        try:
            out.append([float(c) for c in item.split("~")])
        except ValueError:
            raise InputError(f"malformed {what} entry {item!r}") from None
    return out


def parse_synthetic(text: str, seed: int) -> SyntheticSource:
    """Parse ``--synthetic`` values.

    ``default`` is the built-in 696-point mixture protocol.  Explicit
    families take ``key=value`` parameters separated by commas, with
    ``|``-separated list values and ``~``-separated vector coordinates,
    plus a required point count ``n``:

    * ``gaussian_mixture:means=0~0|2~1,scales=1|0.5,weights=0.6|0.4,n=200``
    * ``uniform_cube:dim=2,half_width=1,n=500``
    * ``ring:dim=3,r_inner=0.5,r_outer=1,n=400``
    """
    name, _, params = text.partition(":")
    name = name.strip().lower()
    if name == "default":
        if params.strip():
            raise InputError("default synthetic source takes no parameters")
        spec, n = default_experiment1_spec()
        return SyntheticSource(spec=replace(spec, seed=seed), n=n)
    opts = _parse_options(params, f"synthetic family {name!r}")
    n = _pop_float(opts, "n", default=None)
    if n is None or n != int(n) or int(n) < 1:
        raise InputError("synthetic sources require an integer point count n=N")
    n = int(n)
    if name == "gaussian_mixture":
        for key in ("means", "scales", "weights"):
            if key not in opts:
                raise InputError(f"gaussian_mixture requires {key}=...")
        means = _parse_vector_list(opts.pop("means"), "means")
        scales = [s[0] for s in _parse_vector_list(opts.pop("scales"), "scales")]
        weights = [w[0] for w in _parse_vector_list(opts.pop("weights"), "weights")]
        _reject_extra(opts, name)
        spec = SyntheticSpec.gaussian_mixture(means, scales, weights, seed=seed)
    elif name == "uniform_cube":
        dim = _pop_float(opts, "dim", default=None)
        half_width = _pop_float(opts, "half_width", default=1.0)
        if dim is None or dim != int(dim):
            raise InputError("uniform_cube requires an integer dim=N")
        _reject_extra(opts, name)
        spec = SyntheticSpec.uniform_cube(int(dim), half_width, seed=seed)
    elif name == "ring":
        dim = _pop_float(opts, "dim", default=None)
        r_inner = _pop_float(opts, "r_inner", default=0.5)
        r_outer = _pop_float(opts, "r_outer", default=1.0)
        if dim is None or dim != int(dim):
            raise InputError("ring requires an integer dim=N")
        _reject_extra(opts, name)
        spec = SyntheticSpec.ring(int(dim), r_inner, r_outer, seed=seed)
    else:
        raise InputError(
            f"unknown synthetic family {name!r} "
            "(expected default, gaussian_mixture, uniform_cube, or ring)"
        )
    return SyntheticSource(spec=spec, n=n)


def _auto_or_float(raw: str, flag: str) -> float | None:
    if raw.strip().lower() == "auto":
        return None
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"{flag} must be 'auto' or a number, got {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpcabounds",
        description=(
            "Kernel PCA with finite-sample bounds on expected squared "
            "projection and residual."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--data", metavar="PATH", help="CSV file of points")
    src.add_argument(
        "--synthetic",
        metavar="FAMILY:params",
        default="default",
        help=(
            "synthetic source: default | gaussian_mixture:... | "
            "uniform_cube:dim=N,half_width=V,n=N | "
            "ring:dim=N,r_inner=V,r_outer=V,n=N "
            "(list values use '|', vector coordinates use '~')"
        ),
    )
    common.add_argument(
        "--kernel",
        default="rbf:sigma=1",
        help="linear | rbf:sigma=V | poly:degree=N,r=V (default rbf:sigma=1)",
    )
    common.add_argument("--delta", type=float, default=0.05, help="confidence delta")
    common.add_argument("--alpha", default="auto", help="pb exponent, 'auto' or real")
    common.add_argument(
        "--r2", default="auto", help="kappa(x,x) upper bound, 'auto' or real"
    )
    common.add_argument("--k-max", type=int, default=100, help="largest cut dimension")
    common.add_argument(
        "--split-ratio", type=float, default=0.5, help="fit fraction of the split"
    )
    common.add_argument(
        "--trials", type=int, default=200, help="coverage trial count"
    )
    common.add_argument(
        "--oracle-n",
        type=int,
        default=100_000,
        help="Monte Carlo oracle draws (0 disables)",
    )
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument(
        "--normalize",
        choices=("raw", "trace"),
        default="raw",
        help="report raw values or divide by the mean kernel diagonal",
    )
    common.add_argument("--out", metavar="PATH", help="report CSV path")

    sub = parser.add_subparsers(dest="mode", required=True)
    sub.add_parser(
        "experiment1",
        parents=[common],
        help="split protocol; scan bounds from the full sample",
    )
    sub.add_parser(
        "experiment2",
        parents=[common],
        help="split protocol; pb bounds at optimal and naive alpha",
    )
    sub.add_parser(
        "coverage", parents=[common], help="bound violation rates over trials"
    )
    sub.add_parser("single", parents=[common], help="fit and bound one sample")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.data is not None:
        source: CsvSource | SyntheticSource = CsvSource(path=args.data)
    else:
        source = parse_synthetic(args.synthetic, seed=args.seed)
    return ExperimentConfig(
        mode=args.mode,
        source=source,
        kernel=parse_kernel(args.kernel),
        delta=args.delta,
        alpha=_auto_or_float(args.alpha, "--alpha"),
        r_squared=_auto_or_float(args.r2, "--r2"),
        k_max=args.k_max,
        split_ratio=args.split_ratio,
        trials=args.trials,
        oracle_n=args.oracle_n,
        seed=args.seed,
        normalization=args.normalize,
        out=args.out,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        result = run(cfg)
    except KpcaBoundsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.out is not None:
        print(f"wrote {cfg.out} (+ .meta, .png)")
    else:
        if isinstance(result, BoundReport):
            header, table = REPORT_COLUMNS, _report_table(result)
        else:
            header, table = COVERAGE_COLUMNS, _coverage_table(result)
        print(",".join(header))
        for row in table:
            print(",".join(row))
    return 0


if __name__ == "__main__":
    sys.exit(main())
