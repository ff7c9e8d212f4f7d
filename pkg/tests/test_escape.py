import itertools
import math

import numpy as np
import pytest

from saddlescope.analysis.escape import (
    EscapeOutcome,
    EscapeReport,
    escape_margin,
    measure_escape,
    predict_escape_time,
)
from saddlescope.analysis.regions import AssumptionError, ClassifierParams
from saddlescope.optimizer import RunConfig, run
from saddlescope.oracles import Oracle, OracleKind
from saddlescope.problems import QuadraticModel, TwoLayerLogisticModel

SADDLE = QuadraticModel((1.0, -1.0))
PARAMS = ClassifierParams(0.01, 1.0, 0.0, 2.0, tau=1.0, pi=0.5)


class TestPrediction:
    def test_hand_arithmetic(self):
        # ceil(log(2*2*1/1 + 1) / log(1 + 2*0.01*0.4)) = ceil(201.99...) = 202
        assert predict_escape_time(2, 1.0, 1.0, 0.01, 0.4) == 202
        assert predict_escape_time(2, 2.0, 1.0, 0.01, 1.0) == 111
        assert predict_escape_time(2, 2.0, 1.0, 0.02, 1.0) == 57

    def test_floor_of_one(self):
        assert predict_escape_time(2, 1.0, math.inf, 0.01, 0.1) == 1
        assert predict_escape_time(1, 1e-12, 1.0, 0.9, 10.0) == 1

    def test_correction_term(self):
        assert predict_escape_time(2, 1.0, 1.0, 0.01, 0.4, correction=0.5) > 202

    def test_no_negative_curvature_noise(self):
        with pytest.raises(AssumptionError):
            predict_escape_time(2, 1.0, 0.0, 0.01, 0.1)

    @pytest.mark.parametrize("args", [(0, 1, 1, 0.01, 0.1), (2, 1, 1, 0.0, 0.1), (2, 1, 1, 0.01, -1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            predict_escape_time(*args)

    def test_monotonicity(self):
        grid = list(itertools.product([1, 2, 5], [0.5, 1, 4], [0.25, 1, 3], [1e-3, 1e-2], [0.1, 0.5, 1]))
        t = {g: predict_escape_time(*g) for g in grid}
        for (M, s, l, mu, tau), v in t.items():
            for M2 in (1, 2, 5):
                if M2 > M:
                    assert t[(M2, s, l, mu, tau)] >= v
            for s2 in (0.5, 1, 4):
                if s2 > s:
                    assert t[(M, s2, l, mu, tau)] >= v
            for l2 in (0.25, 1, 3):
                if l2 > l:
                    assert t[(M, s, l2, mu, tau)] <= v
            for tau2 in (0.1, 0.5, 1):
                if tau2 > tau:
                    assert t[(M, s, l, mu, tau2)] <= v

    def test_scaling_law(self):
        scaled = [mu * predict_escape_time(2, 1.0, 1.0, mu, 0.4) for mu in (1e-2, 1e-3, 1e-4)]
        assert abs(scaled[1] / scaled[2] - 1) < 0.05
        assert abs(scaled[0] / scaled[2] - 1) < 0.05
        assert scaled[2] == pytest.approx(math.log(5) / 0.8, rel=1e-3)


class TestMeasure:
    def test_escape_from_quadratic_saddle(self):
        o = Oracle(OracleKind.PERTURBED_EXACT, 1.0)
        t = run(SADDLE, o, [0.0, 0.0], RunConfig(0.01, 600, seed=3))
        out = measure_escape(t, SADDLE, PARAMS)
        assert out.anchor_index == 0
        assert not out.censored and out.escape_index >= 1
        j = out.escape_index
        assert t.cost[j] <= t.cost[0] - escape_margin(PARAMS, 2)
        assert out.basin == int(np.sign(t.final[1]))

    def test_exact_dynamics_never_escape(self):
        t = run(SADDLE, Oracle(), [0.0, 0.0], RunConfig(0.01, 1000))
        out = measure_escape(t, SADDLE, PARAMS)
        assert out.censored and out.escape_index is None and out.basin is None

    def test_explicit_anchor(self):
        o = Oracle(OracleKind.PERTURBED_EXACT, 1.0)
        t = run(SADDLE, o, [0.0, 0.0], RunConfig(0.01, 400, seed=1))
        with pytest.raises(ValueError):
            measure_escape(t, SADDLE, PARAMS, anchor_index=399)  # outside H by then
        assert measure_escape(t, SADDLE, PARAMS, anchor_index=0).anchor_index == 0

    def test_requires_h(self):
        t = run(QuadraticModel((1.0, 1.0)), Oracle(), [1.0, 1.0], RunConfig(0.1, 10))
        with pytest.raises(ValueError):
            measure_escape(t, QuadraticModel((1.0, 1.0)), PARAMS)

    def test_logistic_basin_matches_diagonal_side(self):
        m = TwoLayerLogisticModel()
        o = Oracle(OracleKind.TARGETED_STOCHASTIC, 1.0, (1.0, 1.0))
        p = ClassifierParams(0.01, m.lipschitz_grad, 1.0, 1.0, 0.1, 0.5)
        for seed in range(5):
            t = run(m, o, [0.0, 0.0], RunConfig(0.01, 2000, seed=seed))
            out = measure_escape(t, m, p)
            assert not out.censored
            assert out.basin == int(np.sign(t.final.sum()))


class TestReport:
    def test_statistics(self):
        rep = EscapeReport(10, [EscapeOutcome(s, 0, j, j is None, 100, b)
                                for s, (j, b) in enumerate([(5, 1), (7, -1), (None, None), (9, 1)])])
        np.testing.assert_array_equal(rep.escape_times, [5, 7, np.inf, 9])
        assert rep.censor_rate == 0.25
        assert rep.median == 8.0
        assert rep.quantile(1.0) == math.inf
        assert rep.basin_fraction(1) == pytest.approx(2 / 3)

    def test_empty(self):
        rep = EscapeReport(None)
        assert math.isnan(rep.median) and math.isnan(rep.censor_rate) and math.isnan(rep.basin_fraction())
