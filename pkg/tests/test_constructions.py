import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal

from reluapprox.constructions import (
    Interp1dSpec,
    MaxConvSpec,
    interp1d_net,
    l1_norm_net,
    max_convolution,
    max_convolution_net,
    max_net,
)
from reluapprox.errors import DimensionMismatch, InvalidParameter
from reluapprox.network import RECTIFIER, arch, flatten, realize

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestL1Norm:
    def test_example(self):
        assert realize(l1_norm_net(3), RECTIFIER, [1.0, -2.0, 3.0])[0] == 6.0

    def test_zero(self):
        assert realize(l1_norm_net(4), RECTIFIER, np.zeros(4))[0] == 0.0

    def test_one_dimensional(self):
        assert arch(l1_norm_net(1)).dims == (1, 2, 1)
        assert realize(l1_norm_net(1), RECTIFIER, [-2.5])[0] == 2.5

    @pytest.mark.parametrize("d", [0, -1, 1.5])
    def test_invalid(self, d):
        with pytest.raises(InvalidParameter):
            l1_norm_net(d)

    @given(st.integers(1, 12).flatmap(lambda d: arrays(np.float64, d, elements=finite)))
    def test_matches_norm(self, x):
        got = realize(l1_norm_net(x.size), RECTIFIER, x)[0]
        assert got == pytest.approx(np.abs(x).sum(), rel=1e-12, abs=1e-12)


class TestMax:
    def test_two_structure(self):
        net = max_net(2)
        assert_array_equal(net.weights(1), [[1, -1], [0, 1], [0, -1]])
        assert_array_equal(net.weights(2), [[1, 1, -1]])

    def test_example(self):
        assert realize(max_net(5), RECTIFIER, [3.0, -1.0, 7.0, 7.0, 2.0])[0] == 7.0

    @pytest.mark.parametrize("d, dims", [(2, (2, 3, 1)), (3, (3, 5, 3, 1)), (4, (4, 6, 3, 1)), (5, (5, 8, 5, 3, 1))])
    def test_shapes(self, d, dims):
        assert arch(max_net(d)).dims == dims

    def test_all_equal(self):
        assert realize(max_net(7), RECTIFIER, np.full(7, -4.25))[0] == -4.25

    def test_invalid(self):
        with pytest.raises(InvalidParameter):
            max_net(1)

    @given(st.integers(2, 20).flatmap(lambda d: arrays(np.float64, d, elements=finite)))
    def test_matches_max(self, x):
        got = realize(max_net(x.size), RECTIFIER, x)[0]
        assert got == pytest.approx(x.max(), rel=1e-12, abs=1e-9)

    @pytest.mark.parametrize("d", [2, 3, 9, 16, 33])
    def test_hidden_depth(self, d):
        assert arch(max_net(d)).hidden_depth == math.ceil(math.log2(d))


class TestMaxConvolution:
    def test_direct_formula(self):
        spec = MaxConvSpec(2.0, [[0.0], [1.0]], [1.0, 0.0])
        assert_array_equal(max_convolution(spec, [[0.0], [1.0], [0.25]]), [1.0, 0.0, 0.5])

    def test_spec_validation(self):
        with pytest.raises(InvalidParameter):
            MaxConvSpec(1.0, [[0.0]], [1.0])
        with pytest.raises(DimensionMismatch):
            MaxConvSpec(1.0, [[0.0], [1.0]], [1.0])
        with pytest.raises(InvalidParameter):
            MaxConvSpec(-1.0, [[0.0], [1.0]], [1.0, 2.0])

    def test_interpolates_lipschitz_data(self, rng):
        X = rng.uniform(0, 1, size=(12, 2))
        y = np.abs(X - 0.5).sum(axis=1)
        net = max_convolution_net(MaxConvSpec(1.0, X, y))
        assert_allclose(realize(net, RECTIFIER, X)[:, 0], y, rtol=0, atol=1e-12)

    def test_weight_bound(self, rng):
        spec = MaxConvSpec(0.3, rng.uniform(-5, 5, size=(6, 3)), rng.uniform(-1, 1, size=6))
        assert flatten(max_convolution_net(spec)).sup_norm() <= spec.weight_bound()

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_specs(self, seed):
        rng = np.random.default_rng(seed)
        d, K = int(rng.integers(1, 4)), int(rng.integers(2, 12))
        spec = MaxConvSpec(float(rng.uniform(0, 2)), rng.normal(size=(K, d)), rng.normal(size=K))
        net = max_convolution_net(spec)
        X = rng.normal(size=(50, d))
        assert_allclose(realize(net, RECTIFIER, X)[:, 0], max_convolution(spec, X), rtol=0, atol=1e-10)
        assert arch(net).dims[1] == 2 * d * K
        assert arch(net).hidden_depth == math.ceil(math.log2(K)) + 1


class TestInterp1d:
    def test_shape(self):
        spec = Interp1dSpec.from_function(np.sin, 0.0, 1.0, 8)
        assert arch(interp1d_net(spec)).dims == (1, 9, 1)

    def test_non_integer_resolution(self):
        spec = Interp1dSpec.from_function(np.cos, 0.0, 2.0, 2.5)
        assert spec.n_cells == 3
        assert_allclose(spec.nodes, [0.0, 2 / 3, 4 / 3, 2.0])

    def test_nodes_exact(self):
        spec = Interp1dSpec.from_function(lambda r: np.abs(r - 0.3), 0.0, 1.0, 10)
        got = realize(interp1d_net(spec), RECTIFIER, spec.nodes[:, None])[:, 0]
        assert_allclose(got, spec.node_values, rtol=0, atol=1e-12)

    def test_linear_between_nodes(self):
        spec = Interp1dSpec(0.0, 1.0, 2, [0.0, 1.0, 0.0])
        x = np.array([[0.25], [0.75]])
        assert_allclose(realize(interp1d_net(spec), RECTIFIER, x)[:, 0], [0.5, 0.5], atol=1e-15)

    def test_single_cell(self):
        spec = Interp1dSpec(-1.0, 1.0, 0.5, [2.0, 4.0])
        assert_allclose(realize(interp1d_net(spec), RECTIFIER, [[0.0]])[0, 0], 3.0)

    def test_wrong_value_count(self):
        with pytest.raises(DimensionMismatch):
            Interp1dSpec(0.0, 1.0, 4, np.zeros(4))

    @pytest.mark.parametrize("a, b, res", [(1.0, 1.0, 2), (0.0, 1.0, 0.0)])
    def test_invalid(self, a, b, res):
        with pytest.raises(InvalidParameter):
            Interp1dSpec(a, b, res, [0.0, 0.0])

    @settings(max_examples=30)
    @given(st.integers(1, 30), st.integers(0, 2**32 - 1))
    def test_matches_numpy_interp(self, n, seed):
        rng = np.random.default_rng(seed)
        spec = Interp1dSpec(0.0, 2.0, n, rng.normal(size=n + 1))
        x = rng.uniform(0, 2, size=100)
        want = np.interp(x, spec.nodes, spec.node_values)
        assert_allclose(realize(interp1d_net(spec), RECTIFIER, x[:, None])[:, 0], want, rtol=0, atol=1e-9)
