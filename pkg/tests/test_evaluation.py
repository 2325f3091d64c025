"""Tests for cross-validation, grid search and the stability index."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ckrbf import clustering as clustering_module
from ckrbf.clustering import Clustering, assign_many, kmeans_fit
from ckrbf.dataset import Dataset, FoldPlan, resubstitution_plan, stratified_kfold
from ckrbf.evaluation import (
    GridResult,
    GridSpec,
    KernelSpec,
    PfCurve,
    compare_kernels,
    cross_validate,
    cross_validate_detailed,
    dataset_diagnostics,
    default_grid,
    fixed_c_best,
    grid_search,
    limited_search_specs,
    make_kernel,
    mk_rbf_baseline,
    pf_auc,
    pf_curve,
    pf_curve_from_scores,
    win_percentage,
)


pytestmark = pytest.mark.unit


def _result(score: float, dataset: str = "d", gamma: float = 1.0) -> GridResult:
    return GridResult(
        scores=np.array([[score]]),
        spec=GridSpec((1.0,), (gamma,)),
        kernel_id="k",
        dataset_id=dataset,
        folds=3,
        seed=0,
    )


@pytest.fixture
def overlapping(blob_factory):
    """Two overlapping classes, so accuracies vary across the grid."""
    return blob_factory([(0.0, 0.0), (1.5, 1.5)], [25, 25], [-1, 1], spread=1.0, seed=3)


class TestKernelSpec:
    """Test kernel specifications."""

    @pytest.mark.parametrize(
        "family,k,label",
        [
            ("rbf", 2, "rbf"),
            ("mrbf", 2, "mrbf"),
            ("ckrbf", 3, "ckrbf(3)"),
            ("ckrbf-radial", 2, "ckrbf-radial(2)"),
            ("mkrbf", 4, "m4rbf"),
        ],
    )
    def test_labels(self, family, k, label):
        """Test report identifiers."""
        assert KernelSpec(family=family, k=k).label == label

    @pytest.mark.parametrize(
        "kwargs,message",
        [
            ({"family": "poly"}, "unknown kernel family"),
            ({"mode": "lazy"}, "unknown clustering mode"),
            ({"scaling": "strict"}, "strict scaling"),
            ({"gamma": 0.0}, "gamma"),
            ({"k": 0}, "k must be"),
            ({"family": "mkrbf", "k": 1}, "k >= 2"),
        ],
    )
    def test_invalid(self, kwargs, message):
        """Test rejected combinations."""
        with pytest.raises(ValueError, match=message):
            KernelSpec(**kwargs)

    def test_mkrbf_has_no_single_kernel(self, two_blobs):
        """Test that the per-cluster baseline cannot be built as one kernel."""
        with pytest.raises(ValueError, match="no single kernel"):
            make_kernel(KernelSpec(family="mkrbf"), two_blobs.features)


class TestGridSpec:
    """Test grid construction."""

    @pytest.mark.parametrize(
        "c_values,gamma_values,message",
        [
            ((), (1.0,), "must not be empty"),
            ((1.0, 1.0), (1.0,), "strictly increasing"),
            ((2.0, 1.0), (1.0,), "strictly increasing"),
            ((1.0,), (0.0, 1.0), "positive"),
        ],
    )
    def test_invalid(self, c_values, gamma_values, message):
        """Test that axes must be non-empty, positive and increasing."""
        with pytest.raises(ValueError, match=message):
            GridSpec(c_values, gamma_values)

    def test_default_grid(self):
        """Test the default C and γ axes."""
        grid = default_grid()

        assert grid.c_values[0] == 2.0**-5
        assert grid.c_values[-1] == 2.0**15
        assert len(grid.c_values) == 11
        assert grid.gamma_values == pytest.approx((1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0))

    def test_limited_search_windows(self):
        """Test the six three-value γ windows at C = 1."""
        windows = limited_search_specs()

        assert len(windows) == 6
        assert all(w.c_values == (1.0,) for w in windows)
        assert windows[0].gamma_values == pytest.approx((1.0, 10.0, 100.0))
        assert windows[-1].gamma_values == pytest.approx((1e-5, 1e-4, 1e-3))


class TestCrossValidate:
    """Test cross-validated accuracy."""

    def test_separable_blobs(self, two_blobs):
        """Test perfect accuracy on well separated classes."""
        plan = stratified_kfold(two_blobs, 5, seed=0)

        assert cross_validate(two_blobs, KernelSpec(family="rbf", gamma=1.0), 1.0, plan) == 1.0

    def test_report_is_consistent(self, overlapping):
        """Test that the mean accuracy is the mean of the fold accuracies."""
        plan = stratified_kfold(overlapping, 5, seed=1)

        report = cross_validate_detailed(overlapping, KernelSpec(family="rbf"), 1.0, plan)

        assert 0.0 <= report.accuracy <= 1.0
        assert sum(f.test_size for f in report.folds) == overlapping.n
        assert report.accuracy == pytest.approx(
            np.mean([f.correct / f.test_size for f in report.folds])
        )
        assert report.skipped == []

    @pytest.mark.parametrize("family", ["rbf", "mrbf", "ckrbf", "ckrbf-radial"])
    def test_modes_agree_on_resubstitution(self, overlapping, family):
        """Test that transductive and strict clustering coincide when train = all data."""
        plan = resubstitution_plan(overlapping.n)
        transductive = KernelSpec(family=family, gamma=0.5, mode="transductive", restarts=3)
        strict = KernelSpec(family=family, gamma=0.5, mode="strict", restarts=3)

        assert cross_validate(overlapping, transductive, 2.0, plan) == cross_validate(
            overlapping, strict, 2.0, plan
        )

    def test_strict_scaling(self, two_blobs):
        """Test per-fold [0, 1] scaling."""
        spec = KernelSpec(family="rbf", gamma=10.0, mode="strict", scaling="strict")
        plan = stratified_kfold(two_blobs, 5, seed=0)

        assert cross_validate(two_blobs, spec, 1.0, plan) == 1.0

    def test_single_class_fold_is_skipped(self, two_blobs, caplog):
        """Test that a fold whose training part lacks a class is skipped with a warning."""
        negatives, positives = np.arange(20), np.arange(20, 40)
        plan = FoldPlan(
            (
                (positives, negatives[:10]),
                (np.concatenate([negatives[10:], positives[:10]]), negatives[:10]),
            )
        )

        with caplog.at_level(logging.WARNING):
            report = cross_validate_detailed(two_blobs, KernelSpec(family="rbf"), 1.0, plan)

        assert report.skipped == [0]
        assert report.folds[0].accuracy is None
        assert report.accuracy == report.folds[1].accuracy
        assert "single-class" in caplog.text

    def test_every_fold_skipped(self, two_blobs):
        """Test the error when no fold can be trained."""
        plan = FoldPlan(((np.arange(20, 40), np.arange(20)),))

        with pytest.raises(ValueError, match="every fold was skipped"):
            cross_validate(two_blobs, KernelSpec(family="rbf"), 1.0, plan)

    def test_non_positive_c(self, two_blobs):
        """Test that C must be positive."""
        plan = stratified_kfold(two_blobs, 2, seed=0)

        with pytest.raises(ValueError, match="C must be positive"):
            cross_validate(two_blobs, KernelSpec(family="rbf"), 0.0, plan)


class TestGridSearch:
    """Test the (C, γ) grid search."""

    @pytest.fixture
    def grid(self):
        return GridSpec((0.5, 4.0), (0.1, 1.0, 10.0))

    @pytest.mark.parametrize("mode", ["transductive", "strict"])
    def test_rescaling_matches_rebuilding(self, overlapping, grid, mode):
        """Test that every cell equals a cross-validation with the kernel built at that γ."""
        spec = KernelSpec(family="ckrbf", k=2, mode=mode, seed=5, restarts=3)
        plan = stratified_kfold(overlapping, 3, seed=2)

        result = grid_search(overlapping, spec, grid, plan)

        for i, C in enumerate(grid.c_values):
            for j, gamma in enumerate(grid.gamma_values):
                expected = cross_validate(overlapping, spec.with_gamma(gamma), C, plan)
                assert result.scores[i, j] == expected

    def test_jobs_do_not_change_scores(self, overlapping, grid):
        """Test that threaded evaluation gives identical scores."""
        spec = KernelSpec(family="mrbf")
        plan = stratified_kfold(overlapping, 3, seed=2)

        serial = grid_search(overlapping, spec, grid, plan, jobs=1)
        threaded = grid_search(overlapping, spec, grid, plan, jobs=3)

        np.testing.assert_array_equal(serial.scores, threaded.scores)

    @pytest.mark.parametrize("mode", ["transductive", "strict"])
    def test_jobs_reach_kmeans(self, overlapping, grid, mode, mocker):
        """Test that the worker count also runs the k-means restarts."""
        spy = mocker.spy(clustering_module, "kmeans_fit")
        spec = KernelSpec(family="ckrbf", k=2, mode=mode, seed=5, restarts=4)
        plan = stratified_kfold(overlapping, 3, seed=2)

        threaded = grid_search(overlapping, spec, grid, plan, jobs=3)

        assert spy.call_count == (1 if mode == "transductive" else 3)
        assert all(call.args[5] == 3 for call in spy.call_args_list)
        serial = grid_search(overlapping, spec, grid, plan, jobs=1)
        np.testing.assert_array_equal(serial.scores, threaded.scores)

    def test_result_metadata_and_progress(self, overlapping, grid):
        """Test identifiers, shape and the progress callback."""
        plan = stratified_kfold(overlapping, 3, seed=2)
        calls = []

        result = grid_search(
            overlapping,
            KernelSpec(family="ckrbf", k=2, seed=9, restarts=2),
            grid,
            plan,
            progress=lambda done, total: calls.append((done, total)),
        )

        assert result.scores.shape == (2, 3)
        assert result.kernel_id == "ckrbf(2)"
        assert result.dataset_id == overlapping.name
        assert result.folds == 3
        assert result.seed == 9
        assert calls == [(i, 6) for i in range(1, 7)]
        assert len(result.rows()) == 6

    def test_best_prefers_first_cell(self):
        """Test that ties go to the first cell in row-major order."""
        result = GridResult(
            scores=np.array([[0.5, 0.9], [0.9, 0.1]]),
            spec=GridSpec((1.0, 2.0), (0.1, 1.0)),
            kernel_id="rbf",
            dataset_id="d",
            folds=3,
            seed=0,
        )

        assert result.best() == (0.9, 1.0, 1.0)

    def test_result_validation(self):
        """Test that scores must match the grid and lie in [0, 1]."""
        spec = GridSpec((1.0,), (1.0, 2.0))
        with pytest.raises(ValueError, match="shape"):
            GridResult(np.zeros((2, 2)), spec, "rbf", "d", 3, 0)
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            GridResult(np.array([[0.5, 1.5]]), spec, "rbf", "d", 3, 0)

    def test_dict_form(self, overlapping, grid):
        """Test that a result restored from its dictionary is equal cell by cell."""
        plan = stratified_kfold(overlapping, 3, seed=2)
        result = grid_search(overlapping, KernelSpec(family="rbf"), grid, plan)

        restored = GridResult.from_dict(result.to_dict())

        np.testing.assert_array_equal(restored.scores, result.scores)
        assert restored.spec == result.spec
        assert restored.best() == result.best()

    def test_fixed_c_best(self, overlapping):
        """Test the γ sweep at fixed C."""
        plan = stratified_kfold(overlapping, 3, seed=2)
        gammas = (0.01, 0.1, 1.0)

        score, gamma = fixed_c_best(overlapping, KernelSpec(family="rbf"), gammas, plan)

        assert gamma in gammas
        expected = grid_search(
            overlapping, KernelSpec(family="rbf"), GridSpec((1.0,), gammas), plan
        )
        assert score == expected.scores.max()


class TestPerClusterBaseline:
    """Test the one-SVM-per-cluster baseline."""

    def test_aligned_clusters(self, two_blobs):
        """Test perfect accuracy when every cluster holds one class."""
        plan = stratified_kfold(two_blobs, 5, seed=0)

        assert mk_rbf_baseline(two_blobs, 2, 1.0, 1.0, plan) == 1.0

    def test_needs_two_clusters(self, two_blobs):
        """Test that k = 1 is rejected."""
        plan = stratified_kfold(two_blobs, 2, seed=0)

        with pytest.raises(ValueError, match="k >= 2"):
            mk_rbf_baseline(two_blobs, 1, 1.0, 1.0, plan)

    def test_cluster_order_does_not_matter(self, blob_factory):
        """Test that relabelling the clusters leaves the accuracy unchanged."""
        ds = blob_factory(
            [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)],
            [12, 12, 12, 12],
            [-1, 1, 1, -1],
            spread=0.7,
            seed=11,
        )
        plan = stratified_kfold(ds, 4, seed=0)
        clustering = kmeans_fit(ds.features, 2, restarts=5, seed=0)
        swapped = Clustering(
            clustering.centroids[::-1], 1 - clustering.assignments, clustering.inertia
        )

        first = mk_rbf_baseline(ds, 2, 1.0, 1.0, plan, clustering=clustering)
        second = mk_rbf_baseline(ds, 2, 1.0, 1.0, plan, clustering=swapped)

        assert first == second

    def test_cluster_without_training_points(self, blob_factory, caplog):
        """Test the training-majority fallback for a cluster no training point falls in."""
        ds = blob_factory(
            [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], [6, 6, 4], [-1, 1, 1], spread=0.3, seed=2
        )
        centroids = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        clustering = Clustering(centroids, np.zeros(ds.n, dtype=np.int64), 0.0)
        clustering = Clustering(centroids, assign_many(clustering, ds.features), 0.0)
        plan = FoldPlan(((np.arange(12), np.arange(12, 16)),))

        with caplog.at_level(logging.WARNING):
            accuracy = mk_rbf_baseline(ds, 3, 1.0, 1.0, plan, clustering=clustering)

        assert accuracy == 1.0
        assert "no training points" in caplog.text


class TestPfCurve:
    """Test the empirical P_f curve."""

    def test_constant_grid(self):
        """Test that a constant grid is a single step at that score."""
        curve = pf_curve_from_scores(np.full((3, 4), 0.8))

        assert curve.thresholds.tolist() == [0.8]
        assert curve.probabilities.tolist() == [1.0]
        assert curve.cells == 12

    def test_three_scores(self):
        """Test P(0.5) = 1, P(0.7) = 2/3 and P(0.9) = 1/3."""
        curve = pf_curve_from_scores(np.array([0.9, 0.5, 0.7]))

        assert curve.thresholds.tolist() == [0.5, 0.7, 0.9]
        np.testing.assert_allclose(curve.probabilities, [1.0, 2 / 3, 1 / 3])
        assert curve(0.6) == pytest.approx(2 / 3)
        assert curve(0.95) == 0.0
        assert curve(0.1) == 1.0

    @settings(max_examples=50)
    @given(
        scores=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40),
        alpha=st.floats(0.0, 1.0),
    )
    def test_matches_counting(self, scores, alpha):
        """Test P(α) against a direct count of cells scoring at least α."""
        curve = pf_curve_from_scores(np.array(scores))

        expected = sum(s >= alpha for s in scores) / len(scores)
        assert curve(alpha) == pytest.approx(expected)

    def test_from_grid_result(self):
        """Test building the curve from a grid result."""
        result = GridResult(
            np.array([[0.6, 0.8]]), GridSpec((1.0,), (1.0, 2.0)), "rbf", "d", 3, 0
        )

        assert pf_curve(result).probabilities.tolist() == [1.0, 0.5]

    def test_empty_scores(self):
        """Test that a curve needs at least one score."""
        with pytest.raises(ValueError):
            pf_curve_from_scores(np.array([]))

    def test_curve_validation(self):
        """Test that probabilities must not increase."""
        with pytest.raises(ValueError, match="non-increasing"):
            PfCurve(np.array([0.1, 0.2]), np.array([0.5, 1.0]))


class TestPfAuc:
    """Test areas under P_f curves."""

    def test_reference_pair(self):
        """Test AUCs 0.25 and 0 for scores {0.5, 1.0} and {0.5, 0.5}."""
        curves = [
            pf_curve_from_scores(np.array([0.5, 1.0])),
            pf_curve_from_scores(np.array([0.5, 0.5])),
        ]

        assert pf_auc(curves) == [pytest.approx(0.25), 0.0]

    def test_shared_lower_bound(self):
        """Test that a curve starting above α_min gets full credit up to its minimum."""
        curves = [
            pf_curve_from_scores(np.array([0.2, 0.6])),
            pf_curve_from_scores(np.array([0.4, 0.6])),
        ]

        assert pf_auc(curves) == [pytest.approx(0.2), pytest.approx(0.3)]

    def test_constant_curve_alone(self):
        """Test that a single constant curve has zero area."""
        assert pf_auc([pf_curve_from_scores(np.full(5, 0.7))]) == [0.0]

    def test_no_curves(self):
        """Test that at least one curve is needed."""
        with pytest.raises(ValueError):
            pf_auc([])

    def test_duplicated_cells(self, rng):
        """Test that repeating every cell leaves the AUC unchanged."""
        scores = rng.uniform(0.5, 1.0, size=20)
        reference = pf_curve_from_scores(np.full(3, 0.4))

        once = pf_auc([pf_curve_from_scores(scores), reference])[0]
        twice = pf_auc([pf_curve_from_scores(np.concatenate([scores, scores])), reference])[0]

        assert once == twice

    @settings(max_examples=50)
    @given(
        scores=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=30),
        extra=st.floats(0.0, 1.0),
    )
    def test_adding_a_top_cell_never_lowers_auc(self, scores, extra):
        """Test monotonicity when a cell at or above the current maximum is added."""
        top = max(max(scores), extra)
        before = pf_auc([pf_curve_from_scores(np.array(scores))])[0]
        after = pf_auc([pf_curve_from_scores(np.array(scores + [top]))])[0]

        assert after >= before - 1e-12


class TestWinPercentage:
    """Test limited-search win percentages."""

    def test_identical_results(self):
        """Test that ties never count as wins."""
        results = [_result(0.8, gamma=g) for g in (1.0, 0.1, 0.01)]

        assert win_percentage(results, results) == 0.0

    def test_dominance(self):
        """Test that strictly better everywhere gives 1."""
        a = [_result(0.9, gamma=g) for g in (1.0, 0.1)]
        b = [_result(0.7, gamma=g) for g in (1.0, 0.1)]

        assert win_percentage(a, b) == 1.0
        assert win_percentage(b, a) == 0.0

    def test_share(self):
        """Test a mixed outcome over six windows."""
        a = [_result(s, gamma=10.0**-i) for i, s in enumerate([0.9, 0.9, 0.9, 0.9, 0.5, 0.7])]
        b = [_result(0.8, gamma=10.0**-i) for i in range(6)]

        assert win_percentage(a, b) == pytest.approx(4 / 6)

    def test_unpaired(self):
        """Test that results must pair up by dataset and grid."""
        with pytest.raises(ValueError):
            win_percentage([], [])
        with pytest.raises(ValueError):
            win_percentage([_result(0.5)], [_result(0.5), _result(0.5)])
        with pytest.raises(ValueError, match="unpaired"):
            win_percentage([_result(0.5, dataset="a")], [_result(0.5, dataset="b")])


class TestDiagnostics:
    """Test dataset diagnostics."""

    def test_two_blobs(self, two_blobs):
        """Test counts and that every ratio lies in [0, 1]."""
        diagnostics = dataset_diagnostics(two_blobs, seed=0, restarts=3)

        assert (diagnostics.d, diagnostics.n_negative, diagnostics.n_positive) == (2, 20, 20)
        assert all(0.0 <= r <= 1.0 for r in diagnostics.ratios)
        assert diagnostics.to_dict()["dataset"] == two_blobs.name

    def test_equal_cluster_covariances(self, rng):
        """Test that translated copies of one cloud have a zero covariance gap."""
        cloud = rng.standard_normal((30, 2))
        X = np.vstack([cloud, cloud + 50.0])
        ds = Dataset(X, np.repeat([-1, 1], 30), "copies")

        diagnostics = dataset_diagnostics(ds, seed=0, restarts=3)

        assert diagnostics.sigma2_vs_sigma1 < 1e-10


class TestCompareKernels:
    """Test the family comparison."""

    def test_table(self, two_blobs):
        """Test AUC entries for every family and win shares against the baseline."""
        plan = stratified_kfold(two_blobs, 3, seed=0)
        specs = [KernelSpec(family="rbf"), KernelSpec(family="ckrbf", k=2, restarts=2)]

        table, grids = compare_kernels(two_blobs, specs, GridSpec((1.0,), (0.1, 1.0)), plan)

        assert set(table.auc) == {"rbf", "ckrbf(2)"}
        assert set(grids) == {"rbf", "ckrbf(2)"}
        assert list(table.wins) == [("ckrbf(2)", "rbf")]
        assert 0.0 <= table.wins[("ckrbf(2)", "rbf")] <= 1.0
        assert table.to_dict()["wins"][0]["baseline"] == "rbf"

    def test_duplicate_specs(self, two_blobs):
        """Test that each family label may appear once."""
        plan = stratified_kfold(two_blobs, 3, seed=0)
        specs = [KernelSpec(family="rbf"), KernelSpec(family="rbf", gamma=2.0)]

        with pytest.raises(ValueError, match="duplicate"):
            compare_kernels(two_blobs, specs, GridSpec((1.0,), (1.0,)), plan)
