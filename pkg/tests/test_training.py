import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from reluapprox.approximation import HypercubeDomain
from reluapprox.errors import DataSourceExhausted, DimensionMismatch, InvalidParameter
from reluapprox.network import Architecture, ClipBounds, realize_clipped
from reluapprox.targets import make_target
from reluapprox.training import (
    FiniteSource,
    RestartTable,
    SampleSet,
    SyntheticSource,
    TrainConfig,
    empirical_risk,
    l2_error_estimate,
    mc_identity_check,
    restart_rng,
    risk_gradient,
    select_best,
    selection_samples,
    sgd_restarts,
)
from reluapprox.verification import draw_safe_point, finite_difference_gradient

UNIT1 = HypercubeDomain(0.0, 1.0, 1)


def _table(params, steps=(0,), arch=(1, 1)):
    params = np.asarray(params, dtype=np.float64)
    return RestartTable(params, tuple(steps), Architecture(arch), 0, tuple((k,) for k in range(1, params.shape[0] + 1)))


class TestSamples:
    def test_shapes(self):
        s = SampleSet([0.1, 0.2], [1.0, 2.0])
        assert s.X.shape == (2, 1) and len(s) == 2 and s.dim == 1

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            SampleSet([[0.1], [0.2]], [1.0])

    def test_validate(self):
        with pytest.raises(InvalidParameter):
            SampleSet([[2.0]], [0.5]).validate(UNIT1, ClipBounds(0, 1))
        with pytest.raises(InvalidParameter):
            SampleSet([[0.5]], [1.5]).validate(UNIT1, ClipBounds(0, 1))
        SampleSet([[0.5]], [0.5]).validate(UNIT1, ClipBounds(0, 1))

    def test_synthetic_noise_range(self, rng):
        src = SyntheticSource(make_target("constant", UNIT1, value=0.5), UNIT1, noise=0.1)
        batch = src.draw(rng, 500)
        assert src.label_range == (0.4, 0.6)
        assert np.all(np.abs(batch.Y - 0.5) <= 0.1)

    def test_finite_without_replacement(self, rng):
        src = FiniteSource(SampleSet(np.arange(5.0), np.zeros(5)), replace=False)
        assert_array_equal(src.draw(rng, 3).X[:, 0], [0.0, 1.0, 2.0])
        with pytest.raises(DataSourceExhausted):
            src.draw(rng, 3)

    def test_full_batch(self, rng):
        samples = SampleSet(np.arange(5.0), np.zeros(5))
        assert FiniteSource(samples, full_batch=True).draw(rng, 2) is samples


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"init_radius": 0.5},
            {"init_radius": 2.0, "selection_radius": 1.5},
            {"eligible_steps": (1,), "n_steps": 2},
            {"eligible_steps": (0, 3), "n_steps": 2},
            {"n_restarts": 0},
            {"n_params": 1},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(InvalidParameter):
            TrainConfig(architecture=(1, 2, 1), **kwargs)

    def test_vector_output_rejected(self):
        with pytest.raises(InvalidParameter):
            TrainConfig(architecture=(1, 2))

    def test_schedules(self):
        cfg = TrainConfig((1, 1), n_steps=3, eligible_steps=(0, 3), learning_rate=[0.1, 0.2, 0.3], batch_size=lambda n: n)
        assert cfg.step_size(2) == 0.2 and cfg.batch(3) == 3
        assert cfg.selection_radius == 1.0 and cfg.n_params == 2


class TestRiskAndGradient:
    def test_risk_example(self):
        # net(x) = 2x + 1 clipped to [0, 2]
        samples = SampleSet([[0.0], [1.0]], [0.0, 0.0])
        assert empirical_risk([2.0, 1.0], (1, 1), ClipBounds(0, 2), samples) == pytest.approx(2.5)

    def test_gradient_example(self):
        samples = SampleSet([[0.5]], [0.0])
        # net = 2*0.5 + 0 = 1 inside (-inf, inf): d/dw (w x + b)^2 = 2 * 1 * 0.5
        assert_allclose(risk_gradient([2.0, 0.0], (1, 1), ClipBounds(), samples), [1.0, 2.0])

    def test_clip_blocks_gradient(self):
        samples = SampleSet([[1.0]], [0.0])
        assert_array_equal(risk_gradient([5.0, 0.0], (1, 1), ClipBounds(0, 1), samples), [0.0, 0.0])

    def test_surplus_entries_get_zero(self):
        samples = SampleSet([[0.5]], [0.0])
        grad = risk_gradient([2.0, 0.0, 9.0], (1, 1), ClipBounds(), samples)
        assert grad[2] == 0.0

    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            empirical_risk(np.zeros(3), (2, 1), ClipBounds(), SampleSet([[0.5]], [0.0]))
        with pytest.raises(DimensionMismatch):
            risk_gradient(np.zeros(2), (2, 1), ClipBounds(), SampleSet([[0.5, 0.5]], [0.0]))

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 3, 1), (2, 4, 1), (2, 3, 3, 1)]))
    def test_matches_finite_differences(self, seed, dims):
        rng = np.random.default_rng(seed)
        arch = Architecture(dims)
        theta, samples = draw_safe_point(rng, arch, ClipBounds(-3, 3), 4)
        g = risk_gradient(theta, arch, ClipBounds(-3, 3), samples)
        fd = finite_difference_gradient(theta, arch, ClipBounds(-3, 3), samples)
        scale = np.maximum(np.abs(g), np.abs(fd))
        keep = scale > 1e-8
        assert np.all(np.abs(g - fd)[keep] <= 1e-5 * scale[keep])


class TestRestarts:
    def _config(self, **kw):
        base = dict(architecture=(1, 4, 1), n_restarts=5, n_steps=3, eligible_steps=(0, 1, 3),
                    learning_rate=0.05, batch_size=8, init_radius=2.0, bounds=ClipBounds(0, 1), seed=7)
        base.update(kw)
        return TrainConfig(**base)

    def test_table_shape_and_init(self):
        cfg = self._config()
        table = sgd_restarts(cfg, SyntheticSource(make_target("abs-dist", UNIT1), UNIT1))
        assert table.params.shape == (5, 3, 13)
        assert np.abs(table.params[:, 0]).max() <= 2.0
        first = restart_rng(7, 1).uniform(-2, 2, size=13)
        assert_array_equal(table.get(1, 0).values, first)

    def test_deterministic(self):
        src = SyntheticSource(make_target("abs-dist", UNIT1), UNIT1)
        a = sgd_restarts(self._config(), src)
        b = sgd_restarts(self._config(), src)
        assert_array_equal(a.params, b.params)

    def test_restart_independent_of_count(self):
        src = SyntheticSource(make_target("abs-dist", UNIT1), UNIT1)
        few = sgd_restarts(self._config(n_restarts=2), src)
        many = sgd_restarts(self._config(n_restarts=6), src)
        assert_array_equal(few.params, many.params[:2])

    def test_zero_steps(self):
        cfg = self._config(n_steps=0, eligible_steps=(0,))
        table = sgd_restarts(cfg, SyntheticSource(make_target("abs-dist", UNIT1), UNIT1))
        assert table.params.shape == (5, 1, 13)

    def test_steps_reduce_risk_on_average(self):
        target = make_target("abs-dist", UNIT1)
        src = SyntheticSource(target, UNIT1)
        cfg = self._config(n_steps=200, eligible_steps=(0, 200), learning_rate=0.05, batch_size=32, n_restarts=8)
        table = sgd_restarts(cfg, src)
        val = selection_samples(src, 500, 7)
        before = np.mean([empirical_risk(table.get(k, 0), cfg.architecture, cfg.bounds, val) for k in range(1, 9)])
        after = np.mean([empirical_risk(table.get(k, 200), cfg.architecture, cfg.bounds, val) for k in range(1, 9)])
        assert after < before


class TestSelection:
    def test_picks_smallest_risk(self):
        table = _table([[[0.0, 0.9]], [[0.0, 0.4]], [[0.0, 0.1]]])
        cfg = TrainConfig((1, 1), n_restarts=3)
        val = SampleSet([[0.5]], [0.45])
        res = select_best(table, cfg, val)
        assert (res.k, res.n) == (2, 0)
        assert res.risk == pytest.approx(0.05**2)

    def test_tie_goes_to_first(self):
        table = _table([[[0.0, 0.5], [0.0, 0.5]], [[0.0, 0.5], [0.0, 0.5]]], steps=(0, 1))
        cfg = TrainConfig((1, 1), n_restarts=2, n_steps=1, eligible_steps=(0, 1))
        res = select_best(table, cfg, SampleSet([[0.5]], [0.0]))
        assert res.index == (1, 0)

    def test_radius_excludes(self):
        table = _table([[[0.0, 1.5]], [[0.0, 0.0]]])
        cfg = TrainConfig((1, 1), n_restarts=2, init_radius=1.0, selection_radius=1.0)
        res = select_best(table, cfg, SampleSet([[0.5]], [1.5]))
        assert res.k == 2 and res.n_eligible == 1
        assert_array_equal(res.eligible_mask[:, 0], [False, True])

    def test_none_eligible(self):
        table = _table([[[0.0, 5.0]]])
        with pytest.raises(InvalidParameter):
            select_best(table, TrainConfig((1, 1)), SampleSet([[0.5]], [0.0]))


class TestMonteCarlo:
    def test_exact_network(self):
        target = make_target("abs-dist", UNIT1)
        theta = [1.0, -1.0, -0.5, 0.5, 1.0, 1.0, 0.0]  # relu(x - 1/2) + relu(1/2 - x)
        est = l2_error_estimate(theta, (1, 2, 1), ClipBounds(0, 1), target, UNIT1, 1000)
        assert est.mean == pytest.approx(0.0, abs=1e-15)

    def test_l1_vs_l2(self, rng):
        target = make_target("abs-dist", UNIT1)
        theta = np.zeros(7)
        l1 = l2_error_estimate(theta, (1, 2, 1), ClipBounds(0, 1), target, UNIT1, 4000, q=1, rng=np.random.default_rng(1))
        l2 = l2_error_estimate(theta, (1, 2, 1), ClipBounds(0, 1), target, UNIT1, 4000, q=2, rng=np.random.default_rng(2))
        assert l1.mean == pytest.approx(0.25, abs=4 * l1.stderr)
        assert l2.mean == pytest.approx(1 / 12, abs=4 * l2.stderr)
        assert l2.mean >= l1.mean**2 - 3 * (l2.stderr + 2 * l1.mean * l1.stderr)

    def test_custom_sampler(self):
        target = make_target("abs-dist", UNIT1)
        est = l2_error_estimate(np.zeros(2), (1, 1), ClipBounds(), target, lambda rng, n: np.full((n, 1), 0.75), 10)
        assert est.mean == 0.0625 and est.stderr == 0.0

    def test_bad_q(self):
        with pytest.raises(InvalidParameter):
            l2_error_estimate(np.zeros(2), (1, 1), ClipBounds(), make_target("l1-norm", UNIT1), UNIT1, 10, q=3)


class TestEnumeration:
    def test_bernoulli_half(self):
        lhs, rhs = mc_identity_check([0.0, 1.0], [0.5, 0.5], 3)["sum_variance"]
        assert lhs == pytest.approx(0.75, abs=1e-12) and rhs == 0.75

    def test_single_draw(self):
        out = mc_identity_check([0.0, 1.0], [0.7, 0.3], 1, p=2)
        lhs, rhs = out["mean_moment"]
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_outside_unit_interval(self):
        assert mc_identity_check([-1.0, 2.0], [0.5, 0.5], 2)["bounded_moment"] is None

    @pytest.mark.parametrize(
        "values, probs, M, p, error",
        [([0.0], [0.5], 2, 2, InvalidParameter), ([0.0, 1.0], [0.5, 0.5], 2, 1.5, InvalidParameter),
         ([0.0, 1.0], [0.5], 2, 2, DimensionMismatch)],
    )
    def test_rejects(self, values, probs, M, p, error):
        with pytest.raises(error):
            mc_identity_check(values, probs, M, p)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=3), st.integers(1, 5), st.sampled_from([2, 3, 4]))
    def test_inequalities(self, values, M, p):
        probs = np.full(len(values), 1.0 / len(values))
        out = mc_identity_check(values, probs, M, p)
        lhs, rhs = out["sum_variance"]
        assert lhs == pytest.approx(rhs, abs=1e-12)
        lhs, rhs = out["mean_moment"]
        assert lhs <= rhs * (1 + 1e-9) + 1e-15
        lhs, rhs = out["bounded_moment"]
        assert lhs <= rhs + 1e-15
