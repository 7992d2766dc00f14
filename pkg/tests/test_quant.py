"""Quantizer, pruning and weight-sharing tests."""

import numpy as np
import pytest

from nncost import interp, quant
from nncost.arch import Conv1D, Dense, VanillaRNN
from nncost.costmodel import rm_layer
from nncost.errors import DomainError, ShapeError
from nncost.quant import (APoT, FixedUniform, Float, PoT, cluster_weights,
                          effective_rm, magnitude_prune, quantize_apot,
                          quantize_pot, quantize_uniform, x_w)


class TestXw:
    def test_values(self):
        assert x_w(PoT(8)) == 0
        assert x_w(APoT(8, 2)) == 1
        assert x_w(FixedUniform(8)) == 7
        assert x_w(Float(32)) == 31

    def test_ordering(self):
        for b_w in (2, 4, 8, 16):
            for k in range(1, b_w):
                assert x_w(PoT(b_w)) <= x_w(APoT(b_w, k)) \
                    <= x_w(FixedUniform(b_w))

    def test_apot_term_bound(self):
        with pytest.raises(ValueError):
            APoT(8, 8)


class TestUniform:
    def test_all_zero_degenerates(self):
        qw = quantize_uniform(np.zeros(5), 8)
        assert np.all(qw.values == 0)
        assert np.all(qw.zero_mask)

    def test_endpoints_exact(self):
        qw = quantize_uniform([1.0, -1.0], 2)
        assert qw.scale == 1.0
        assert list(qw.codes) == [1, -1]
        np.testing.assert_array_equal(qw.values, [1.0, -1.0])

    def test_three_bit_example(self):
        qw = quantize_uniform([0.5, 0.26], 3)
        np.testing.assert_allclose(qw.scale, 0.5 / 3)
        assert list(qw.codes) == [3, 2]
        np.testing.assert_allclose(qw.values, [0.5, 1.0 / 3.0])

    def test_error_bound(self):
        rng = np.random.default_rng(0)
        w = rng.uniform(-2, 2, 500)
        qw = quantize_uniform(w, 8)
        assert np.max(np.abs(qw.values - w)) <= qw.scale / 2 + 1e-15


class TestPoT:
    def test_exact_power(self):
        qw = quantize_pot([0.5], 8)
        assert qw.values[0] == 0.5

    def test_nearest_in_linear_distance(self):
        # |0.3 - 0.25| = 0.05 beats |0.3 - 0.5| = 0.2
        qw = quantize_pot([0.3], 8)
        assert qw.values[0] == 0.25

    def test_zero_stays_zero(self):
        qw = quantize_pot([0.0, 0.4], 8)
        assert qw.values[0] == 0.0
        assert qw.zero_mask[0] and not qw.zero_mask[1]

    def test_tie_goes_to_larger_magnitude(self):
        qw = quantize_pot([0.75, -0.75], 8)
        np.testing.assert_array_equal(qw.values, [1.0, -1.0])

    def test_relative_error_bound(self):
        rng = np.random.default_rng(1)
        w = rng.uniform(1e-6, 1e3, 2000) * rng.choice([-1.0, 1.0], 2000)
        qw = quantize_pot(w, 8)
        assert np.all(np.abs(qw.values - w) <= np.abs(w) / 3 + 1e-12)

    def test_normalization_recorded_for_large_weights(self):
        qw = quantize_pot([4.0, 2.0], 8)
        assert qw.scale == 4.0
        np.testing.assert_array_equal(qw.values, [4.0, 2.0])


class TestAPoT:
    def test_two_terms_exact(self):
        qw = quantize_apot([0.75], 8, 2)
        assert qw.values[0] == 0.75
        assert qw.terms[0] == (-1, -2)

    def test_second_term_unused_when_exact(self):
        qw = quantize_apot([0.5], 8, 2)
        assert qw.values[0] == 0.5
        assert qw.terms[0] == (-1,)

    def test_k1_reduces_to_pot(self):
        rng = np.random.default_rng(2)
        w = rng.uniform(-1, 1, 500)
        np.testing.assert_array_equal(quantize_apot(w, 8, 1).values,
                                      quantize_pot(w, 8).values)

    def test_error_never_exceeds_pot(self):
        rng = np.random.default_rng(3)
        w = rng.uniform(-1, 1, 2000)
        for k in (1, 2, 3):
            apot_err = np.abs(quantize_apot(w, 8, k).values - w)
            pot_err = np.abs(quantize_pot(w, 8).values - w)
            assert np.all(apot_err <= pot_err + 1e-15)


class TestPrune:
    def test_keeps_two_largest(self):
        mask = magnitude_prune([0.1, -0.5, 0.05, 0.9], 0.5)
        assert list(mask.keep) == [False, True, False, True]
        assert mask.sparsity == 0.5

    def test_zero_sparsity_keeps_all(self):
        mask = magnitude_prune([0.3, 0.1], 0.0)
        assert mask.keep.all()

    def test_tie_prunes_lower_index(self):
        mask = magnitude_prune([0.2, -0.2, 0.3], 1.0 / 3.0)
        assert list(mask.keep) == [False, True, True]

    def test_domain(self):
        with pytest.raises(DomainError):
            magnitude_prune([1.0], 1.0)
        with pytest.raises(DomainError):
            magnitude_prune([1.0], -0.1)

    def test_kept_min_at_least_pruned_max(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            w = rng.normal(size=int(rng.integers(2, 40)))
            s = float(rng.uniform(0, 0.95))
            mask = magnitude_prune(w, s)
            pruned = np.abs(w[~mask.keep])
            kept = np.abs(w[mask.keep])
            if pruned.size and kept.size:
                assert kept.min() >= pruned.max() - 1e-15


class TestCluster:
    def test_exact_when_clusters_cover_values(self):
        w = np.array([0.3, -0.7, 0.1, 0.9])
        shared = cluster_weights(w, 4)
        assert shared.distortion(w) == 0.0
        np.testing.assert_array_equal(np.sort(shared.centroids), np.sort(w))

    def test_single_cluster_is_mean(self):
        w = np.array([1.0, 2.0, 6.0])
        shared = cluster_weights(w, 1)
        np.testing.assert_allclose(shared.centroids, [3.0])

    def test_two_cluster_example(self):
        w = np.array([0.0, 0.1, 0.9, 1.0])
        shared = cluster_weights(w, 2)
        np.testing.assert_allclose(np.sort(shared.centroids), [0.05, 0.95])
        assert list(shared.assignments) == [0, 0, 1, 1]

    def test_distinct_values_bounded_by_c(self):
        rng = np.random.default_rng(5)
        w = rng.normal(size=60)
        for c in (1, 2, 5, 10):
            shared = cluster_weights(w, c)
            assert np.unique(shared.centroids[shared.assignments]).size <= c

    def test_objective_not_above_initial_assignment(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            w = rng.normal(size=40)
            c = int(rng.integers(2, 8))
            init = np.linspace(w.min(), w.max(), c)
            first = np.argmin(np.abs(w[:, None] - init[None, :]), axis=1)
            initial_obj = float(np.sum((w - init[first]) ** 2))
            shared = cluster_weights(w, c)
            assert shared.distortion(w) <= initial_obj + 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            cluster_weights([1.0, 2.0], 3)
        with pytest.raises(DomainError):
            cluster_weights([1.0], 0)


class TestSerialization:
    def test_quantized_weights_json(self):
        for qw in (quantize_uniform([0.5, -0.2, 0.0], 8),
                   quantize_pot([0.5, -0.2, 0.0], 8),
                   quantize_apot([0.5, -0.2, 0.0], 8, 2)):
            payload = qw.to_json()
            assert payload["values"][2] == 0.0
            assert payload["zero_mask"] == [False, False, True]

    def test_prune_mask_json(self):
        mask = magnitude_prune([0.1, 0.9], 0.5)
        assert mask.to_json() == {"keep": [False, True], "sparsity": 0.5}


class TestEffectiveRM:
    def test_no_pruning_equals_rm(self):
        layer = Dense(4, 6)
        mask = magnitude_prune(np.ones(24), 0.0)
        assert effective_rm(layer, mask) == rm_layer(layer)

    def test_half_pruned_dense(self):
        layer = Dense(1, 4)
        mask = magnitude_prune([0.1, 0.9, 0.05, 0.8], 0.5)
        assert effective_rm(layer, mask) == 2

    def test_shape_error(self):
        layer = Dense(2, 3)
        with pytest.raises(ShapeError):
            effective_rm(layer, magnitude_prune(np.ones(5), 0.0))

    @pytest.mark.parametrize("layer", [
        Dense(5, 7),
        Conv1D(n_f=2, n_i=3, n_k=3, n_s=10),
        VanillaRNN(3, 4, 5),
    ])
    def test_matches_zero_skipping_interpreter(self, layer):
        rng = np.random.default_rng(8)
        weights = interp.random_weights(layer, rng)
        n = quant.multiplicative_weight_count(layer)
        mask = magnitude_prune(rng.uniform(-1, 1, n), 0.4)
        pruned = interp.apply_prune_mask(weights, mask)
        x = interp._nominal_input(layer, rng)
        _, counters = interp.run_layer(layer, pruned, x)
        assert counters.mults == effective_rm(layer, mask)
