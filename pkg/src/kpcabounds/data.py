"""Dataset ingestion, synthetic samplers, and deterministic splitting.

All randomness flows through numpy's 64-bit PCG64 generator seeded via
``SeedSequence``.  Every consumer gets its own stream, derived from the
user seed plus an integer purpose tag (and, for coverage trials, the
trial index), so adding a new consumer never perturbs existing draws.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import InputError, ParseError

# Stream purpose tags.  Appending a tag to the seed path isolates each
# random consumer from the others.
STREAM_SAMPLING = 0
STREAM_SPLITTING = 1
STREAM_COEFFICIENTS = 2
STREAM_ORACLE = 3
STREAM_TRIALS = 4


def stream(*path: int) -> np.random.Generator:
    """Deterministic generator for the given seed path.

    The first element is the user seed; later elements are purpose tags
    or trial indices.  Identical paths yield identical generators.
    """
    return np.random.default_rng(np.random.SeedSequence(list(path)))


def derive_seed(*path: int) -> int:
    """Collapse a seed path to a single 64-bit integer seed."""
    ss = np.random.SeedSequence(list(path))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Dataset:
    """An ordered sample of points sharing one dimension."""

    points: np.ndarray
    source: str
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise InputError(
                f"dataset points must form a nonempty 2-d array, got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise InputError("dataset contains non-finite coordinates")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SyntheticSpec:
    """A seeded synthetic distribution.

    Families
    --------
    gaussian_mixture
        Isotropic components at ``means`` with per-component ``scales``
        and ``weights``.
    uniform_cube
        Uniform on ``[-half_width, half_width]^dim``.
    ring
        Radius uniform on ``[r_inner, r_outer]``, direction uniform on
        the sphere.
    """

    family: Literal["gaussian_mixture", "uniform_cube", "ring"]
    dim: int
    seed: int
    means: Optional[tuple[tuple[float, ...], ...]] = None
    scales: Optional[tuple[float, ...]] = None
    weights: Optional[tuple[float, ...]] = None
    half_width: Optional[float] = None
    r_inner: Optional[float] = None
    r_outer: Optional[float] = None

    def __post_init__(self) -> None:
        if self.family not in ("gaussian_mixture", "uniform_cube", "ring"):
            raise InputError(f"unknown synthetic family: {self.family!r}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InputError(f"dim must be an integer >= 1, got {self.dim!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise InputError(f"seed must be a nonnegative integer, got {self.seed!r}")
        if self.family == "gaussian_mixture":
            if not self.means:
                raise InputError("gaussian_mixture requires at least one mean")
            means = tuple(tuple(float(c) for c in mu) for mu in self.means)
            if any(len(mu) != self.dim for mu in means):
                raise InputError("every mixture mean must have length dim")
            if not all(math.isfinite(c) for mu in means for c in mu):
                raise InputError("mixture means must be finite")
            ncomp = len(means)
            scales = tuple(float(s) for s in (self.scales or ()))
            weights = tuple(float(w) for w in (self.weights or ()))
            if len(scales) != ncomp or len(weights) != ncomp:
                raise InputError(
                    "means, scales and weights must have equal lengths"
                )
            if any(not math.isfinite(s) or s <= 0 for s in scales):
                raise InputError("mixture scales must be finite and > 0")
            if any(not math.isfinite(w) or w <= 0 for w in weights):
                raise InputError("mixture weights must be finite and > 0")
            if abs(sum(weights) - 1.0) > 1e-12:
                raise InputError(
                    f"mixture weights must sum to 1 within 1e-12, got {sum(weights)!r}"
                )
            object.__setattr__(self, "means", means)
            object.__setattr__(self, "scales", scales)
            object.__setattr__(self, "weights", weights)
        elif self.family == "uniform_cube":
            if self.half_width is None or not math.isfinite(self.half_width):
                raise InputError("uniform_cube requires a finite half_width")
            if self.half_width <= 0:
                raise InputError(f"half_width must be > 0, got {self.half_width!r}")
            object.__setattr__(self, "half_width", float(self.half_width))
        else:
            if self.r_inner is None or self.r_outer is None:
                raise InputError("ring requires r_inner and r_outer")
            r_in, r_out = float(self.r_inner), float(self.r_outer)
            if not (math.isfinite(r_in) and math.isfinite(r_out)):
                raise InputError("ring radii must be finite")
            if not 0.0 <= r_in < r_out:
                raise InputError(
                    f"ring radii must satisfy 0 <= r_inner < r_outer, got "
                    f"({r_in!r}, {r_out!r})"
                )
            object.__setattr__(self, "r_inner", r_in)
            object.__setattr__(self, "r_outer", r_out)

    @staticmethod
    def gaussian_mixture(means, scales, weights, seed: int) -> "SyntheticSpec":
        means = tuple(tuple(float(c) for c in mu) for mu in means)
        if not means:
            raise InputError("gaussian_mixture requires at least one mean")
        return SyntheticSpec(
            family="gaussian_mixture",
            dim=len(means[0]),
            seed=seed,
            means=means,
            scales=tuple(float(s) for s in scales),
            weights=tuple(float(w) for w in weights),
        )

    @staticmethod
    def uniform_cube(dim: int, half_width: float, seed: int) -> "SyntheticSpec":
        return SyntheticSpec(
            family="uniform_cube", dim=dim, seed=seed, half_width=float(half_width)
        )

    @staticmethod
    def ring(dim: int, r_inner: float, r_outer: float, seed: int) -> "SyntheticSpec":
        return SyntheticSpec(
            family="ring",
            dim=dim,
            seed=seed,
            r_inner=float(r_inner),
            r_outer=float(r_outer),
        )


def draw_points(spec: SyntheticSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points from ``spec`` using ``rng`` (fixed draw order)."""
    if spec.family == "gaussian_mixture":
        weights = np.asarray(spec.weights)
        comps = rng.choice(len(spec.means), size=n, p=weights / weights.sum())
        normals = rng.standard_normal((n, spec.dim))
        means = np.asarray(spec.means)
        scales = np.asarray(spec.scales)
        return means[comps] + scales[comps, None] * normals
    if spec.family == "uniform_cube":
        h = spec.half_width
        return rng.uniform(-h, h, size=(n, spec.dim))
    radii = rng.uniform(spec.r_inner, spec.r_outer, size=n)
    normals = rng.standard_normal((n, spec.dim))
    norms = np.sqrt(np.einsum("ij,ij->i", normals, normals))
    norms = np.where(norms == 0.0, 1.0, norms)
    return radii[:, None] * (normals / norms[:, None])


def sample(spec: SyntheticSpec, n: int) -> Dataset:
    """n iid draws from ``spec``; identical (spec, n) give identical bits."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise InputError(f"n must be an integer, got {n!r}")
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    rng = stream(spec.seed, STREAM_SAMPLING)
    pts = draw_points(spec, int(n), rng)
    return Dataset(points=pts, source=f"synthetic:{spec.family}", seed=spec.seed)


def split(ds: Dataset, ratio: float, seed: int) -> tuple[Dataset, Dataset]:
    """Shuffle and partition a dataset into two nonempty halves.

    The first half receives ``floor(n * ratio)`` points, clamped so both
    halves are nonempty; datasets with fewer than two points cannot be
    split.  The union of the halves equals the input as a multiset.
    """
    if not (np.isfinite(ratio) and 0.0 < ratio < 1.0):
        raise InputError(f"ratio must be in (0, 1), got {ratio!r}")
    if ds.n < 2:
        raise InputError(
            f"cannot split {ds.n} point(s) into two nonempty halves"
        )
    n_first = min(max(math.floor(ds.n * ratio), 1), ds.n - 1)
    perm = stream(seed, STREAM_SPLITTING).permutation(ds.n)
    first = Dataset(points=ds.points[perm[:n_first]], source=ds.source, seed=seed)
    second = Dataset(points=ds.points[perm[n_first:]], source=ds.source, seed=seed)
    return first, second


def load_csv(path) -> Dataset:
    """Load points from a comma-separated text file.

    One point per row, decimal numbers, optional single header row
    (detected by any non-numeric cell in the first row).  Blank lines
    are skipped.  Ragged or non-numeric rows raise :class:`ParseError`
    with the 1-based row number.
    """
    rows: list[list[float]] = []
    width: Optional[int] = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row_no, cells in enumerate(reader, start=1):
            if not cells:
                continue
            parsed: list[float] = []
            ok = True
            for cell in cells:
                try:
                    parsed.append(float(cell.strip()))
                except ValueError:
                    ok = False
                    break
            if not ok:
                if row_no == 1 and not rows:
                    continue  # header row
                raise ParseError("non-numeric cell", row=row_no)
            if any(not math.isfinite(v) for v in parsed):
                raise ParseError("non-finite value", row=row_no)
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise ParseError(
                    f"expected {width} columns, got {len(parsed)}", row=row_no
                )
            rows.append(parsed)
    if not rows:
        raise InputError(f"no data rows in {path}")
    return Dataset(points=np.array(rows, dtype=float), source=str(path), seed=None)


def default_experiment1_spec() -> tuple[SyntheticSpec, int]:
    """The default synthetic protocol: 696 points from a seeded
    3-component gaussian mixture in R^5."""
    spec = SyntheticSpec.gaussian_mixture(
        means=((0.0, 0.0, 0.0, 0.0, 0.0),
               (2.5, 0.0, 0.0, 0.0, 0.0),
               (0.0, 2.5, 0.0, 0.0, 0.0)),
        scales=(1.0, 0.8, 0.6),
        weights=(0.5, 0.3, 0.2),
        seed=0,
    )
    return spec, 696
