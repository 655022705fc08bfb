"""Tests for kernel PCA fitting and squared projection norms."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kpcabounds import (
    InputError,
    KernelSpec,
    empirical_projection_mean,
    empirical_residual_mean,
    fit,
    initial_sum,
    pointwise_curves,
    projection_profiles,
    projection_sq_norm,
    residual_sq_norm,
)

KERNELS = [
    KernelSpec.linear(),
    KernelSpec.polynomial(degree=2, offset=1.0),
    KernelSpec.gaussian(sigma=1.0),
]


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(100)
    return rng.normal(size=(25, 3))


@pytest.fixture(scope="module")
def svd_setup():
    rng = np.random.default_rng(200)
    train = rng.normal(size=(20, 4)) * np.array([3.0, 2.0, 1.0, 0.5])
    model = fit(KernelSpec.linear(), train)
    _, s, vh = np.linalg.svd(train, full_matrices=False)
    assert np.min(np.abs(np.diff(s))) > 1e-3  # distinct, so order is fixed
    return model, vh


@pytest.fixture(scope="module")
def geometry_setup():
    rng = np.random.default_rng(300)
    model = fit(KernelSpec.gaussian(1.2), rng.normal(size=(15, 2)))
    return model, rng.normal(size=(8, 2))


@pytest.fixture(scope="module")
def gaussian_model(cloud):
    return fit(KernelSpec.gaussian(1.0), cloud)


@pytest.fixture(scope="module")
def linear_model(cloud):
    return fit(KernelSpec.linear(), cloud)


class TestFit:
    def test_basic_attributes(self, cloud):
        model = fit(KernelSpec.gaussian(1.0), cloud)
        assert model.m == 25
        assert model.dim == 3
        assert model.rank == 25  # distinct points, gaussian Gram is full rank
        assert model.r_squared == 1.0

    def test_low_rank_detected(self):
        # 10 points on a line: linear Gram has rank 1.
        line = np.outer(np.linspace(1.0, 2.0, 10), [3.0, 4.0])
        model = fit(KernelSpec.linear(), line)
        assert model.rank == 1

    def test_default_r_squared_is_diagonal_max(self, cloud):
        model = fit(KernelSpec.linear(), cloud)
        assert model.r_squared == float(np.max(model.gram.diag))
        assert_allclose(
            model.r_squared, np.max(np.sum(cloud**2, axis=1)), rtol=1e-14
        )

    def test_r_squared_override_accepted(self, cloud):
        model = fit(KernelSpec.gaussian(1.0), cloud, r_squared=4.0)
        assert model.r_squared == 4.0

    def test_r_squared_below_observed_rejected(self, cloud):
        with pytest.raises(InputError):
            fit(KernelSpec.gaussian(1.0), cloud, r_squared=0.5)

    @pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf])
    def test_r_squared_invalid(self, cloud, bad):
        with pytest.raises(InputError):
            fit(KernelSpec.gaussian(1.0), cloud, r_squared=bad)

    def test_train_is_copied_and_frozen(self, cloud):
        pts = cloud.copy()
        model = fit(KernelSpec.linear(), pts)
        pts[0, 0] += 100.0  # mutating the caller's array must not leak in
        assert model.train[0, 0] == cloud[0, 0]
        with pytest.raises(ValueError):
            model.train[0, 0] = 0.0

    def test_empty_sample_rejected(self):
        with pytest.raises(InputError):
            fit(KernelSpec.linear(), np.zeros((0, 3)))


class TestLinearKernelOracle:
    """With the linear kernel the principal directions are the right
    singular vectors of the data matrix, so projections have a closed
    form checkable against LAPACK's SVD."""

    def test_projection_matches_svd(self, svd_setup):
        model, vh = svd_setup
        rng = np.random.default_rng(201)
        for x in rng.normal(size=(10, 4)):
            for k in (1, 2, 3, 4):
                expected = float(np.sum((vh[:k] @ x) ** 2))
                assert_allclose(
                    projection_sq_norm(model, x, k), expected, rtol=1e-10
                )

    def test_residual_matches_svd(self, svd_setup):
        model, vh = svd_setup
        x = np.array([1.0, -2.0, 0.5, 3.0])
        for k in (1, 3):
            expected = float(x @ x - np.sum((vh[:k] @ x) ** 2))
            assert_allclose(residual_sq_norm(model, x, k), expected, rtol=1e-9)

    def test_projection_beyond_data_rank_is_full_norm(self, svd_setup):
        model, _ = svd_setup
        x = np.array([0.3, 0.1, -0.7, 0.9])
        # The span of 20 generic points covers R^4, so k = m recovers x.
        assert_allclose(projection_sq_norm(model, x, model.m), x @ x, rtol=1e-10)


class TestTiedSpectrum:
    def test_projection_under_tie_is_one_of_the_orderings(self):
        # Orthonormal training pair: both eigenvalues equal 1, so the
        # solver may pick either axis first.
        model = fit(KernelSpec.linear(), np.eye(2))
        x = np.array([0.6, 0.8])
        p1 = projection_sq_norm(model, x, 1)
        assert np.isclose(p1, 0.36) or np.isclose(p1, 0.64)
        assert_allclose(projection_sq_norm(model, x, 2), 1.0, rtol=1e-12)


class TestTrainingMeanIdentity:
    """The training average of the squared projection at cut-off k equals
    the sum of the top-k Gram eigenvalues divided by m."""

    @pytest.mark.parametrize("kernel", KERNELS, ids=lambda k: k.describe())
    def test_identity(self, kernel, cloud):
        model = fit(kernel, cloud)
        for k in (1, 2, 5, 10, 25):
            lhs = empirical_projection_mean(model, cloud, k)
            rhs = initial_sum(model.spectrum, min(k, model.rank)) / model.m
            assert_allclose(lhs, rhs, rtol=1e-12)

    def test_identity_pointwise_route(self, cloud):
        model = fit(KernelSpec.gaussian(0.9), cloud)
        proj, _ = pointwise_curves(model, cloud, model.m)
        for k in (1, 7, 25):
            assert_allclose(
                np.mean(proj[k - 1]),
                initial_sum(model.spectrum, k) / model.m,
                rtol=1e-12,
            )


class TestProjectionGeometry:
    def test_pythagoras(self, geometry_setup):
        model, pts = geometry_setup
        for x in pts:
            for k in (1, 5, 15):
                total = projection_sq_norm(model, x, k) + residual_sq_norm(
                    model, x, k
                )
                assert_allclose(total, 1.0, rtol=1e-12)  # gaussian kappa(x,x)=1

    def test_monotone_in_k(self, geometry_setup):
        model, pts = geometry_setup
        proj, resid = pointwise_curves(model, pts, model.m)
        assert np.all(np.diff(proj, axis=0) >= -1e-15)
        assert np.all(np.diff(resid, axis=0) <= 1e-15)

    def test_range_bounds(self, geometry_setup):
        model, pts = geometry_setup
        proj, resid = pointwise_curves(model, pts, model.m)
        assert np.all(proj >= 0.0)
        assert np.all(proj <= 1.0 + 1e-12)
        assert np.all(resid >= 0.0)

    def test_training_point_fully_recovered(self, geometry_setup):
        model, _ = geometry_setup
        # A training point lies in the span of the training images.
        assert_allclose(
            projection_sq_norm(model, model.train[3], model.m), 1.0, rtol=1e-10
        )
        assert residual_sq_norm(model, model.train[3], model.m) <= 1e-10


class TestSubspaceOptimality:
    """Among all k-dimensional subspaces, the principal one maximizes the
    training-set mean squared projection.  Checked against 500 random
    orthonormal competitors in a 3-dimensional linear feature space."""

    @pytest.mark.parametrize("k", [1, 2])
    def test_no_random_subspace_beats_pca(self, k):
        rng = np.random.default_rng(400)
        train = rng.normal(size=(30, 3)) * np.array([2.0, 1.0, 0.4])
        model = fit(KernelSpec.linear(), train)
        best = empirical_projection_mean(model, train, k)
        for _ in range(500):
            q, _ = np.linalg.qr(rng.normal(size=(3, k)))
            competitor = float(np.mean(np.sum((train @ q) ** 2, axis=1)))
            assert competitor <= best + 1e-10


class TestTruncation:
    def test_k_beyond_rank_truncates(self):
        line = np.outer(np.linspace(1.0, 2.0, 8), [1.0, 1.0])
        model = fit(KernelSpec.linear(), line)
        assert model.rank == 1
        x = np.array([2.0, -1.0])
        at_rank = projection_sq_norm(model, x, 1)
        for k in (2, 5, 8):
            assert projection_sq_norm(model, x, k) == at_rank

    def test_pointwise_curves_flatten_past_rank(self):
        line = np.outer(np.linspace(1.0, 2.0, 8), [1.0, 1.0])
        model = fit(KernelSpec.linear(), line)
        proj, _ = pointwise_curves(model, np.array([[2.0, -1.0]]), 8)
        assert np.all(proj[1:] == proj[0])


class TestAggregation:
    def test_profiles_match_pointwise_means(self, gaussian_model):
        rng = np.random.default_rng(500)
        pts = rng.normal(size=(12, 3))
        proj, resid = pointwise_curves(gaussian_model, pts, 10)
        proj_mean, resid_mean = projection_profiles(gaussian_model, pts, 10)
        assert_allclose(proj_mean, proj.mean(axis=1), rtol=1e-15)
        assert_allclose(resid_mean, resid.mean(axis=1), rtol=1e-15)

    def test_empirical_means_match_scalar_loops(self, gaussian_model):
        rng = np.random.default_rng(501)
        pts = rng.normal(size=(6, 3))
        for k in (1, 4, 25):
            loop_p = np.mean([projection_sq_norm(gaussian_model, x, k) for x in pts])
            loop_r = np.mean([residual_sq_norm(gaussian_model, x, k) for x in pts])
            assert_allclose(empirical_projection_mean(gaussian_model, pts, k), loop_p, rtol=1e-12)
            assert_allclose(empirical_residual_mean(gaussian_model, pts, k), loop_r, rtol=1e-12)

    def test_full_rank_training_means(self, gaussian_model, cloud):
        # At k = rank every training image is reproduced exactly, so the
        # mean projection is the mean diagonal (1 for gaussian kernels).
        assert_allclose(
            empirical_projection_mean(gaussian_model, cloud, gaussian_model.m), 1.0, rtol=1e-10
        )
        assert empirical_residual_mean(gaussian_model, cloud, gaussian_model.m) <= 1e-10

    def test_proj_plus_resid_is_mean_diagonal(self, gaussian_model):
        rng = np.random.default_rng(502)
        pts = rng.normal(size=(9, 3))
        for k in (1, 3, 11):
            total = empirical_projection_mean(
                gaussian_model, pts, k
            ) + empirical_residual_mean(gaussian_model, pts, k)
            assert_allclose(total, 1.0, rtol=1e-12)


class TestArgumentChecks:
    @pytest.mark.parametrize("k", [0, -1, 26, 2.0, None])
    def test_bad_k(self, linear_model, k):
        with pytest.raises(InputError):
            projection_sq_norm(linear_model, linear_model.train[0], k)

    def test_wrong_point_dimension(self, linear_model):
        with pytest.raises(InputError):
            projection_sq_norm(linear_model, np.ones(4), 1)
        with pytest.raises(InputError):
            pointwise_curves(linear_model, np.ones((3, 4)), 1)

    def test_non_finite_point(self, linear_model):
        with pytest.raises(InputError):
            residual_sq_norm(linear_model, np.array([np.inf, 0.0, 0.0]), 1)

    def test_empty_point_set(self, linear_model):
        with pytest.raises(InputError):
            empirical_projection_mean(linear_model, np.zeros((0, 3)), 1)
