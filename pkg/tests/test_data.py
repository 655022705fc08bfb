"""Tests for dataset loading, synthetic samplers, and splitting."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from kpcabounds import (
    Dataset,
    InputError,
    ParseError,
    SyntheticSpec,
    default_experiment1_spec,
    derive_seed,
    load_csv,
    sample,
    split,
    stream,
)


class TestDataset:
    def test_properties(self):
        ds = Dataset(points=np.ones((4, 2)), source="unit")
        assert ds.n == 4 and ds.dim == 2 and ds.seed is None

    def test_points_copied_and_frozen(self):
        pts = np.zeros((3, 2))
        ds = Dataset(points=pts, source="unit")
        pts[0, 0] = 9.0
        assert ds.points[0, 0] == 0.0
        with pytest.raises(ValueError):
            ds.points[0, 0] = 1.0

    @pytest.mark.parametrize(
        "pts", [np.ones(3), np.ones((0, 2)), np.ones((2, 0)), np.ones((2, 2, 2))]
    )
    def test_bad_shapes(self, pts):
        with pytest.raises(InputError):
            Dataset(points=pts, source="unit")

    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            Dataset(points=np.array([[1.0, np.nan]]), source="unit")


class TestLoadCsv:
    def write(self, tmp_path, text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text)
        return p

    def test_plain_numbers(self, tmp_path):
        p = self.write(tmp_path, "1.0,2.0\n3.5,-4.0\n")
        ds = load_csv(p)
        assert np.array_equal(ds.points, [[1.0, 2.0], [3.5, -4.0]])
        assert ds.source == str(p)

    def test_header_row_skipped(self, tmp_path):
        p = self.write(tmp_path, "x,y\n1,2\n3,4\n")
        assert np.array_equal(load_csv(p).points, [[1.0, 2.0], [3.0, 4.0]])

    def test_blank_lines_skipped(self, tmp_path):
        p = self.write(tmp_path, "1,2\n\n3,4\n\n")
        assert load_csv(p).n == 2

    def test_scientific_notation_and_whitespace(self, tmp_path):
        p = self.write(tmp_path, " 1e-3 , 2.5E2 \n")
        assert_allclose(load_csv(p).points, [[1e-3, 250.0]])

    def test_single_column(self, tmp_path):
        p = self.write(tmp_path, "v\n1\n2\n3\n")
        assert load_csv(p).points.shape == (3, 1)

    def test_non_numeric_mid_file(self, tmp_path):
        p = self.write(tmp_path, "1,2\n3,oops\n")
        with pytest.raises(ParseError, match="row 2"):
            load_csv(p)

    def test_ragged_row(self, tmp_path):
        p = self.write(tmp_path, "1,2\n3,4,5\n")
        with pytest.raises(ParseError, match="row 2"):
            load_csv(p)

    def test_ragged_row_number_counts_header(self, tmp_path):
        p = self.write(tmp_path, "x,y\n1,2\n3\n")
        with pytest.raises(ParseError, match="row 3"):
            load_csv(p)

    def test_non_finite_value(self, tmp_path):
        p = self.write(tmp_path, "1,2\n3,inf\n")
        with pytest.raises(ParseError, match="row 2"):
            load_csv(p)

    def test_header_only(self, tmp_path):
        p = self.write(tmp_path, "x,y\n")
        with pytest.raises(InputError, match="no data rows"):
            load_csv(p)

    def test_empty_file(self, tmp_path):
        p = self.write(tmp_path, "")
        with pytest.raises(InputError, match="no data rows"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "absent.csv")


class TestSyntheticSpecValidation:
    def test_unknown_family(self):
        with pytest.raises(InputError):
            SyntheticSpec(family="lattice", dim=2, seed=0, half_width=1.0)

    def test_mixture_requires_matching_lengths(self):
        with pytest.raises(InputError):
            SyntheticSpec.gaussian_mixture(
                means=((0.0,), (1.0,)), scales=(1.0,), weights=(0.5, 0.5), seed=0
            )

    def test_mixture_mean_dimension_consistent(self):
        with pytest.raises(InputError):
            SyntheticSpec.gaussian_mixture(
                means=((0.0, 0.0), (1.0,)),
                scales=(1.0, 1.0),
                weights=(0.5, 0.5),
                seed=0,
            )

    def test_mixture_weights_must_sum_to_one(self):
        with pytest.raises(InputError):
            SyntheticSpec.gaussian_mixture(
                means=((0.0,), (1.0,)), scales=(1.0, 1.0), weights=(0.5, 0.6), seed=0
            )

    @pytest.mark.parametrize("scale", [0.0, -1.0])
    def test_mixture_scales_positive(self, scale):
        with pytest.raises(InputError):
            SyntheticSpec.gaussian_mixture(
                means=((0.0,),), scales=(scale,), weights=(1.0,), seed=0
            )

    @pytest.mark.parametrize("hw", [0.0, -2.0, np.inf])
    def test_cube_half_width(self, hw):
        with pytest.raises(InputError):
            SyntheticSpec.uniform_cube(dim=2, half_width=hw, seed=0)

    @pytest.mark.parametrize("radii", [(1.0, 1.0), (2.0, 1.0), (-0.5, 1.0)])
    def test_ring_radii_ordered(self, radii):
        with pytest.raises(InputError):
            SyntheticSpec.ring(dim=3, r_inner=radii[0], r_outer=radii[1], seed=0)

    def test_negative_seed(self):
        with pytest.raises(InputError):
            SyntheticSpec.uniform_cube(dim=2, half_width=1.0, seed=-1)


class TestSamplers:
    def test_shapes_and_sources(self):
        specs = [
            SyntheticSpec.gaussian_mixture(((0.0, 0.0),), (1.0,), (1.0,), seed=1),
            SyntheticSpec.uniform_cube(dim=3, half_width=2.0, seed=1),
            SyntheticSpec.ring(dim=4, r_inner=0.5, r_outer=1.0, seed=1),
        ]
        for spec in specs:
            ds = sample(spec, 50)
            assert ds.points.shape == (50, spec.dim)
            assert ds.source == f"synthetic:{spec.family}"
            assert ds.seed == spec.seed

    def test_same_spec_same_bits(self):
        spec = SyntheticSpec.uniform_cube(dim=2, half_width=1.0, seed=7)
        assert np.array_equal(sample(spec, 100).points, sample(spec, 100).points)

    def test_different_seeds_differ(self):
        a = sample(SyntheticSpec.uniform_cube(2, 1.0, seed=1), 10)
        b = sample(SyntheticSpec.uniform_cube(2, 1.0, seed=2), 10)
        assert not np.array_equal(a.points, b.points)

    def test_prefix_property_not_required_but_n_matters(self):
        # Different n re-draws; only (spec, n) pairs are reproducible.
        spec = SyntheticSpec.uniform_cube(2, 1.0, seed=3)
        a = sample(spec, 20).points
        b = sample(spec, 10).points
        assert np.array_equal(a[:10], b)  # single uniform block, so prefix holds

    def test_cube_support_and_mean(self):
        ds = sample(SyntheticSpec.uniform_cube(3, half_width=1.0, seed=5), 100_000)
        assert np.all(np.abs(ds.points) <= 1.0)
        # sd of the mean is sqrt(1/3/1e5) ~ 0.0018; 0.02 is ~11 sigma.
        assert np.all(np.abs(ds.points.mean(axis=0)) < 0.02)

    def test_single_component_moments(self):
        spec = SyntheticSpec.gaussian_mixture(
            means=((1.0, -2.0),), scales=(0.7,), weights=(1.0,), seed=6
        )
        ds = sample(spec, 100_000)
        assert_allclose(ds.points.mean(axis=0), [1.0, -2.0], atol=0.02)
        assert_allclose(ds.points.var(axis=0), 0.49, rtol=0.03)

    def test_mixture_component_proportions(self):
        spec = SyntheticSpec.gaussian_mixture(
            means=((-40.0,), (40.0,)),  # far apart: assignment is unambiguous
            scales=(1.0, 1.0),
            weights=(0.3, 0.7),
            seed=7,
        )
        ds = sample(spec, 50_000)
        frac_high = np.mean(ds.points[:, 0] > 0.0)
        assert abs(frac_high - 0.7) < 0.02

    def test_ring_radii_in_band(self):
        ds = sample(SyntheticSpec.ring(3, r_inner=0.5, r_outer=1.5, seed=8), 20_000)
        radii = np.linalg.norm(ds.points, axis=1)
        assert radii.min() >= 0.5 - 1e-12
        assert radii.max() <= 1.5 + 1e-12
        # Radii are uniform on [0.5, 1.5]: mean 1.0.
        assert abs(radii.mean() - 1.0) < 0.01

    def test_bad_n(self):
        spec = SyntheticSpec.uniform_cube(2, 1.0, seed=0)
        for n in (0, -5, 2.0, True):
            with pytest.raises(InputError):
                sample(spec, n)


class TestSplit:
    def ds(self, n, dim=2):
        pts = np.arange(float(n * dim)).reshape(n, dim)
        return Dataset(points=pts, source="unit")

    def test_even_split(self):
        first, second = split(self.ds(10), 0.5, seed=0)
        assert first.n == 5 and second.n == 5

    def test_floor_behavior(self):
        first, second = split(self.ds(9), 0.5, seed=0)
        assert first.n == 4 and second.n == 5

    def test_extreme_ratio_keeps_halves_nonempty(self):
        first, second = split(self.ds(10), 0.999, seed=0)
        assert first.n == 9 and second.n == 1
        first, second = split(self.ds(10), 0.0001, seed=0)
        assert first.n == 1 and second.n == 9

    def test_multiset_preserved(self):
        ds = self.ds(13)
        first, second = split(ds, 0.4, seed=3)
        merged = np.vstack([first.points, second.points])
        key = np.lexsort(merged.T)
        orig_key = np.lexsort(ds.points.T)
        assert np.array_equal(merged[key], ds.points[orig_key])

    def test_deterministic(self):
        ds = self.ds(20)
        a = split(ds, 0.5, seed=11)
        b = split(ds, 0.5, seed=11)
        assert np.array_equal(a[0].points, b[0].points)
        assert np.array_equal(a[1].points, b[1].points)

    def test_seed_changes_partition(self):
        ds = self.ds(20)
        a, _ = split(ds, 0.5, seed=1)
        b, _ = split(ds, 0.5, seed=2)
        assert not np.array_equal(a.points, b.points)

    def test_actually_shuffles(self):
        # With 20 points the identity permutation is vanishingly unlikely.
        ds = self.ds(20)
        first, second = split(ds, 0.5, seed=0)
        assert not np.array_equal(np.vstack([first.points, second.points]), ds.points)

    @pytest.mark.parametrize("ratio", [0.0, 1.0, -0.2, np.nan])
    def test_bad_ratio(self, ratio):
        with pytest.raises(InputError):
            split(self.ds(10), ratio, seed=0)

    def test_too_small(self):
        with pytest.raises(InputError):
            split(self.ds(1), 0.5, seed=0)

    @settings(max_examples=30, deadline=None)
    @given(
        n=st.integers(2, 40),
        ratio=st.floats(0.01, 0.99),
        seed=st.integers(0, 2**20),
    )
    def test_halves_partition_everything(self, n, ratio, seed):
        pts = np.random.default_rng(seed).normal(size=(n, 2))
        ds = Dataset(points=pts, source="unit")
        first, second = split(ds, ratio, seed)
        assert first.n + second.n == n
        assert first.n >= 1 and second.n >= 1
        merged = np.vstack([first.points, second.points])
        assert_allclose(np.sort(merged, axis=0), np.sort(pts, axis=0))


class TestStreams:
    def test_stream_deterministic(self):
        a = stream(5, 1).normal(size=4)
        b = stream(5, 1).normal(size=4)
        assert np.array_equal(a, b)

    def test_purpose_tags_isolate(self):
        a = stream(5, 0).normal(size=4)
        b = stream(5, 1).normal(size=4)
        assert not np.array_equal(a, b)

    def test_derive_seed_deterministic_and_distinct(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        seen = {derive_seed(0, 4, t) for t in range(100)}
        assert len(seen) == 100
        assert all(0 <= s < 2**64 for s in seen)


class TestDefaultSpec:
    def test_shape_of_default(self):
        spec, n = default_experiment1_spec()
        assert n == 696
        assert spec.family == "gaussian_mixture"
        assert spec.dim == 5
        assert len(spec.means) == 3
        assert abs(sum(spec.weights) - 1.0) < 1e-15
        assert spec.seed == 0

    def test_default_sample_reproducible(self):
        spec, n = default_experiment1_spec()
        assert np.array_equal(sample(spec, n).points, sample(spec, n).points)
