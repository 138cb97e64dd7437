import numpy as np
import pytest

import kerndebias as kd
from kerndebias import (
    CorrectedMetric,
    DataError,
    DefiningSets,
    EmbeddingTable,
    KernelSpec,
    beta_matrix,
    beta_projection,
    build_centered_gram,
    eval_kernel,
    fit_kernel_model,
    fit_linear_subspace,
    neutralize_vector,
    unit_normalize,
)
from kerndebias.numerics import symmetric_eig
from kerndebias.rkhs import kernel_model_from_dict, kernel_model_to_dict
from conftest import planted_bias_table, random_instance
from oracles import equalized_member_inner, four_term_inner

KERNEL_ZOO = [
    KernelSpec("linear"),
    KernelSpec("cosine"),
    KernelSpec("rbf", gamma=0.8),
    KernelSpec("laplace", gamma=0.5),
    KernelSpec("polynomial", gamma=1.0, coef0=1.0, degree=3),
    KernelSpec("sigmoid", gamma=0.3, coef0=0.5),
    KernelSpec(
        "convex_combination",
        components=(
            (0.4, KernelSpec("rbf", gamma=1.2)),
            (0.35, KernelSpec("laplace", gamma=0.6)),
            (0.25, KernelSpec("cosine")),
        ),
    ),
]

NORMALIZED_KERNELS = [
    KernelSpec("rbf", gamma=0.9),
    KernelSpec("laplace", gamma=0.6),
    KernelSpec("cosine"),
]


def fitted_pair_models(rng, spec, k=2, n_pairs=4, dim=6):
    table, sets = random_instance(rng, n_pairs=n_pairs, dim=dim)
    model = fit_kernel_model(spec, table, sets, k=k)
    return table, sets, model


class TestCenteredGram:
    def test_one_pair_linear_hand_expansion(self, rng):
        a = rng.normal(size=3)
        b = rng.normal(size=3)
        spec = KernelSpec("linear")
        gram = build_centered_gram(spec, a[None, :], b[None, :])
        q = 0.5 * (
            eval_kernel(spec, a, a) - 2 * eval_kernel(spec, a, b) + eval_kernel(spec, b, b)
        )
        np.testing.assert_allclose(gram, [[q, -q], [-q, q]], atol=1e-12)
        assert np.linalg.matrix_rank(gram) == 1

    def test_identical_pair_zero_matrix(self, rng):
        a = rng.normal(size=4)
        gram = build_centered_gram(KernelSpec("rbf", gamma=1.0), a[None, :], a[None, :])
        np.testing.assert_allclose(gram, 0.0, atol=1e-15)

    def test_symmetric(self, rng):
        pa = rng.normal(size=(5, 4))
        pb = rng.normal(size=(5, 4))
        gram = build_centered_gram(KernelSpec("rbf", gamma=0.5), pa, pb)
        assert np.max(np.abs(gram - gram.T)) <= 1e-12

    def test_linear_kernel_matches_design_matrix_gram(self, rng):
        # For the linear kernel the centered Gram is twice the Gram of the
        # half-difference design rows (the known scale convention).
        table, sets = random_instance(rng, n_pairs=3, dim=5)
        design = kd.build_design_matrix(table, sets)
        pa = table.matrix[[a for a, _ in sets.pairs]]
        pb = table.matrix[[b for _, b in sets.pairs]]
        gram = build_centered_gram(KernelSpec("linear"), pa, pb)
        np.testing.assert_allclose(gram, 2.0 * design @ design.T, atol=1e-12)


class TestFit:
    def test_eigenvalues_positive_descending(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=0.5), k=3)
        assert np.all(model.eigenvalues > 0)
        assert np.all(np.diff(model.eigenvalues) <= 1e-12)

    def test_dual_normalization(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=0.5), k=3)
        gram = model.centered_gram()
        identity = model.alphas @ gram @ model.alphas.T
        np.testing.assert_allclose(identity, np.eye(model.k), atol=1e-8)

    def test_rank_exceeded_reports_rank(self, rng):
        table, sets = random_instance(rng, n_pairs=2, dim=8)
        with pytest.raises(DataError, match="rank is 2"):
            fit_kernel_model(KernelSpec("linear"), table, sets, k=5)

    def test_k_none_keeps_full_rank(self, rng):
        table, sets = random_instance(rng, n_pairs=3, dim=8)
        model = fit_kernel_model(KernelSpec("rbf", gamma=1.0), table, sets, k=None)
        assert model.k == 3

    def test_sigmoid_negative_eigenvalues_discarded(self, rng):
        found = False
        for scale in (1.0, 2.0, 3.0, 5.0):
            table, sets = random_instance(rng, n_pairs=5, dim=4)
            big = EmbeddingTable(words=table.words, matrix=table.matrix * scale)
            model = fit_kernel_model(
                KernelSpec("sigmoid", gamma=1.0, coef0=-0.5), big, sets, k=1
            )
            if model.discarded_negative > 0:
                found = True
                break
        assert found


class TestBetaProjection:
    def test_linear_proportional_to_subspace_coordinate(self, rng):
        table, sets = random_instance(rng, n_pairs=3, dim=6)
        linear = fit_linear_subspace(table, sets, 1)
        model = fit_kernel_model(KernelSpec("linear"), table, sets, k=1)
        queries = rng.normal(size=(8, 6))
        betas = np.array([beta_projection(model, q)[0] for q in queries])
        coords = queries @ linear.basis[0]
        ratios = betas / coords
        np.testing.assert_allclose(ratios, ratios[0], atol=1e-9)
        assert abs(abs(ratios[0]) - 1.0) <= 1e-9  # unit direction either sign
        assert np.argmax(np.abs(betas)) == np.argmax(np.abs(coords))

    def test_mirror_symmetric_point_has_zero_beta(self, rng):
        table, sets, u = planted_bias_table(rng, n_pairs=4, n_neutral=0, dim=5)
        model = fit_kernel_model(KernelSpec("rbf", gamma=1.0), table, sets, k=2)
        w = rng.normal(size=5)
        w[0] = 0.0  # on the mirror hyperplane: equidistant from every pair
        np.testing.assert_allclose(beta_projection(model, w), 0.0, atol=1e-12)

    def test_shape_k1(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=1.0), k=1)
        assert beta_projection(model, np.zeros(model.dim)).shape == (1,)

    def test_batch_matches_single(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("laplace", gamma=0.4), k=2)
        queries = rng.normal(size=(5, model.dim))
        batch = beta_matrix(model, queries)
        rows = np.array([beta_projection(model, q) for q in queries])
        np.testing.assert_allclose(batch, rows, atol=1e-14)


class TestLinearKernelEquivalence:
    """With a linear kernel every corrected operation must match the
    explicit subspace-projection computation."""

    def _models(self, rng, k=2, n_pairs=4, dim=6, unit=False):
        table, sets = random_instance(rng, n_pairs=n_pairs, dim=dim)
        if unit:
            table = unit_normalize(table)
        linear = fit_linear_subspace(table, sets, k)
        kernel = fit_kernel_model(KernelSpec("linear"), table, sets, k=k)
        return table, sets, linear, CorrectedMetric(kernel)

    def test_inner_product(self, rng):
        _, _, linear, metric = self._models(rng)
        for _ in range(20):
            z, w = rng.normal(size=(2, 6))
            oracle = neutralize_vector(linear, z) @ neutralize_vector(linear, w)
            assert metric.inner_product(z, w) == pytest.approx(oracle, abs=1e-9)

    def test_cosine(self, rng):
        _, _, linear, metric = self._models(rng)
        for _ in range(10):
            z, w = rng.normal(size=(2, 6))
            nz, nw = neutralize_vector(linear, z), neutralize_vector(linear, w)
            oracle = nz @ nw / (np.linalg.norm(nz) * np.linalg.norm(nw))
            assert metric.cosine(z, w) == pytest.approx(oracle, abs=1e-9)

    def test_squared_distance(self, rng):
        _, _, linear, metric = self._models(rng)
        for _ in range(10):
            z, w = rng.normal(size=(2, 6))
            diff = neutralize_vector(linear, z) - neutralize_vector(linear, w)
            assert metric.squared_distance(z, w) == pytest.approx(diff @ diff, abs=1e-9)

    def test_equalized_inner_product(self, rng):
        table, _, linear, metric = self._models(rng, unit=True)
        members = table.matrix[:3]
        w = rng.normal(size=6)
        mu = members.mean(axis=0)
        oracle = neutralize_vector(linear, w) @ neutralize_vector(linear, mu)
        assert metric.equalized_inner_product(w, members) == pytest.approx(
            oracle, abs=1e-9
        )

    def test_self_product_of_span_vector_vanishes(self, rng):
        # Full rank: any training difference lies inside the bias span.
        table, sets = random_instance(rng, n_pairs=3, dim=6)
        model = fit_kernel_model(KernelSpec("linear"), table, sets, k=None)
        metric = CorrectedMetric(model)
        a, b = sets.pairs[0]
        z = table.matrix[a] - table.matrix[b]
        assert abs(metric.inner_product(z, z)) <= 1e-8 * (z @ z)


class TestCorrectedMetricProperties:
    def test_four_term_expansion_all_kernels(self, rng):
        for spec in KERNEL_ZOO:
            table, sets, model = fitted_pair_models(rng, spec, k=2)
            metric = CorrectedMetric(model)
            for _ in range(5):
                z, w = rng.normal(size=(2, model.dim))
                simplified = metric.inner_product(z, w)
                assert simplified == pytest.approx(
                    four_term_inner(model, z, w), abs=1e-9
                ), spec.family

    def test_orthogonality_diagnostic_all_kernels(self, rng):
        for spec in KERNEL_ZOO:
            _, _, model = fitted_pair_models(rng, spec, k=2)
            metric = CorrectedMetric(model)
            for _ in range(5):
                w, z = rng.normal(size=(2, model.dim))
                assert abs(metric.orthogonality_check(w, z)) <= 1e-9, spec.family

    def test_orthogonality_diagnostic_full_rank(self, rng):
        table, sets = random_instance(rng, n_pairs=3, dim=6)
        model = fit_kernel_model(KernelSpec("rbf", gamma=0.7), table, sets, k=None)
        metric = CorrectedMetric(model)
        w, z = rng.normal(size=(2, 6))
        assert abs(metric.orthogonality_check(w, z)) <= 1e-9

    def test_symmetry(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=0.6), k=2)
        metric = CorrectedMetric(model)
        z, w = rng.normal(size=(2, model.dim))
        assert metric.inner_product(z, w) == pytest.approx(
            metric.inner_product(w, z), abs=1e-12
        )
        assert metric.cosine(z, w) == pytest.approx(metric.cosine(w, z), abs=1e-12)

    def test_self_products_nonnegative_psd_kernels(self, rng):
        for spec in KERNEL_ZOO:
            if spec.family == "sigmoid":
                continue
            table, sets, model = fitted_pair_models(rng, spec, k=2)
            metric = CorrectedMetric(model)
            values = metric.self_inner_products(rng.normal(size=(10, model.dim)))
            assert np.all(values >= -1e-9), spec.family

    def test_corrected_gram_psd(self, rng):
        for spec in [KernelSpec("rbf", gamma=0.8), KernelSpec("laplace", gamma=0.5),
                     KernelSpec("linear")]:
            table, sets, model = fitted_pair_models(rng, spec, k=2)
            metric = CorrectedMetric(model)
            queries = rng.normal(size=(8, model.dim))
            gram = metric.inner_product_matrix(queries, queries)
            eig = symmetric_eig((gram + gram.T) / 2)
            assert eig.eigenvalues[-1] >= -1e-8, spec.family

    def test_cosine_self_is_one(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=0.9), k=1)
        metric = CorrectedMetric(model)
        z = rng.normal(size=model.dim)
        assert metric.cosine(z, z) == pytest.approx(1.0, abs=1e-12)

    def test_cosine_fully_neutralized_rejected(self, rng):
        table, sets = random_instance(rng, n_pairs=3, dim=6)
        model = fit_kernel_model(KernelSpec("linear"), table, sets, k=None)
        metric = CorrectedMetric(model)
        a, b = sets.pairs[0]
        z = table.matrix[a] - table.matrix[b]  # entirely inside the span
        with pytest.raises(DataError, match="fully neutralized"):
            metric.cosine(z, rng.normal(size=6))

    def test_squared_distance_zero_on_self(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=0.5), k=2)
        metric = CorrectedMetric(model)
        z = rng.normal(size=model.dim)
        assert metric.squared_distance(z, z) == 0.0

    def test_triangle_inequality_spot_check(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=0.7), k=2)
        metric = CorrectedMetric(model)
        for _ in range(20):
            x, y, z = rng.normal(size=(3, model.dim))
            dxy = np.sqrt(metric.squared_distance(x, y))
            dyz = np.sqrt(metric.squared_distance(y, z))
            dxz = np.sqrt(metric.squared_distance(x, z))
            assert dxz <= dxy + dyz + 1e-9

    def test_distance_matrix_matches_scalar(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("laplace", gamma=0.5), k=2)
        metric = CorrectedMetric(model)
        x = rng.normal(size=(3, model.dim))
        y = rng.normal(size=(4, model.dim))
        matrix = metric.squared_distance_matrix(x, y)
        for i in range(3):
            for j in range(4):
                assert matrix[i, j] == pytest.approx(
                    metric.squared_distance(x[i], y[j]), abs=1e-12
                )


class TestEqualizeInvariance:
    def test_per_member_brute_force_identical(self, rng):
        for spec in NORMALIZED_KERNELS:
            table, sets = random_instance(rng, n_pairs=3, dim=5)
            table = unit_normalize(table)
            model = fit_kernel_model(spec, table, sets, k=2)
            metric = CorrectedMetric(model)
            members = table.matrix[[6, 7, 8]] if len(table) > 8 else table.matrix[:3]
            w = rng.normal(size=5)
            per_member = [
                equalized_member_inner(model, w, members, e) for e in range(len(members))
            ]
            spread = max(per_member) - min(per_member)
            assert spread <= 1e-9, spec.family
            assert metric.equalized_inner_product(w, members) == pytest.approx(
                per_member[0], abs=1e-9
            )

    def test_two_identical_members_reduce_to_inner_product(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("rbf", gamma=0.8), k=2)
        metric = CorrectedMetric(model)
        e = rng.normal(size=model.dim)
        w = rng.normal(size=model.dim)
        value = metric.equalized_inner_product(w, np.vstack([e, e]))
        assert value == pytest.approx(metric.inner_product(w, e), abs=1e-12)


class TestScaleAndOrderInvariance:
    def test_gram_scale_invariance(self, rng):
        for spec in KERNEL_ZOO:
            table, sets = random_instance(rng, n_pairs=4, dim=5)
            base = fit_kernel_model(spec, table, sets, k=2, gram_scale=1.0)
            doubled = fit_kernel_model(spec, table, sets, k=2, gram_scale=2.0)
            m1, m2 = CorrectedMetric(base), CorrectedMetric(doubled)
            for _ in range(5):
                z, w = rng.normal(size=(2, 5))
                assert m1.inner_product(z, w) == pytest.approx(
                    m2.inner_product(z, w), abs=1e-9
                ), spec.family

    def test_pair_permutation_invariance(self, rng):
        table, sets = random_instance(rng, n_pairs=4, dim=5)
        spec = KernelSpec("rbf", gamma=0.8)
        base = CorrectedMetric(fit_kernel_model(spec, table, sets, k=2))
        permuted_sets = DefiningSets(tuple(reversed(sets.pairs)))
        permuted = CorrectedMetric(fit_kernel_model(spec, table, permuted_sets, k=2))
        for _ in range(5):
            z, w = rng.normal(size=(2, 5))
            assert base.inner_product(z, w) == pytest.approx(
                permuted.inner_product(z, w), abs=1e-9
            )

    def test_pair_swap_invariance(self, rng):
        table, sets = random_instance(rng, n_pairs=4, dim=5)
        spec = KernelSpec("laplace", gamma=0.5)
        base = CorrectedMetric(fit_kernel_model(spec, table, sets, k=2))
        swapped_sets = DefiningSets(
            tuple((b, a) if i % 2 == 0 else (a, b) for i, (a, b) in enumerate(sets.pairs))
        )
        swapped = CorrectedMetric(fit_kernel_model(spec, table, swapped_sets, k=2))
        for _ in range(5):
            z, w = rng.normal(size=(2, 5))
            assert base.inner_product(z, w) == pytest.approx(
                swapped.inner_product(z, w), abs=1e-9
            )


class TestSerialization:
    def test_round_trip_reproduces_metric(self, rng, tmp_path):
        table, sets = random_instance(rng, n_pairs=4, dim=5)
        spec = KernelSpec(
            "convex_combination",
            components=((0.5, KernelSpec("rbf", gamma=1.0)), (0.5, KernelSpec("cosine"))),
        )
        model = fit_kernel_model(spec, table, sets, k=2)
        path = tmp_path / "model.json"
        kd.save_kernel_model(model, path)
        loaded, preimage = kd.load_kernel_model(path)
        assert preimage is None
        metric = CorrectedMetric(model)
        metric_loaded = CorrectedMetric(loaded)
        for _ in range(10):
            z, w = rng.normal(size=(2, 5))
            original = metric.inner_product(z, w)
            reloaded = metric_loaded.inner_product(z, w)
            assert abs(original - reloaded) <= 1e-12
        assert loaded.spec == model.spec
        np.testing.assert_array_equal(loaded.alphas, model.alphas)

    def test_dict_round_trip_fields(self, rng):
        _, _, model = fitted_pair_models(rng, KernelSpec("sigmoid", gamma=0.2, coef0=1.0))
        data = kernel_model_to_dict(model)
        again = kernel_model_from_dict(data)
        np.testing.assert_array_equal(again.pairs_a, model.pairs_a)
        np.testing.assert_array_equal(again.eigenvalues, model.eigenvalues)
        assert again.feature_scale == model.feature_scale
        assert again.gram_scale == model.gram_scale
