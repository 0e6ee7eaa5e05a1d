import numpy as np
import pytest
from scipy import stats

from src.models.calibration import CalibrationEvent, GridSpec, VehicleSeries
from src.models.errors import CalibrationError, ConfigError, InputError, UndefinedCorrelationError
from src.services.calibration_service import (
    baseline_metric,
    event_loss,
    evaluate_event,
    evaluate_events,
    grid_search,
    pass_metric,
    rank_with_ties,
    spearman,
    total_loss,
)
from src.services.pass_service import series_delta


def vehicle(vehicle_id, available, travel, baseline=None):
    available = np.asarray(available, dtype=float)
    return VehicleSeries(vehicle_id, available, series_delta(available), travel,
                         None if baseline is None else np.asarray(baseline, dtype=float))


def random_event(rng, event_id, n=8, ticks=40):
    vehicles = []
    for i in range(n):
        available = np.cumsum(rng.normal(0.0, 1.0, ticks)) + rng.uniform(-3.0, 3.0)
        vehicles.append(vehicle(f"{event_id}-v{i}", available, float(rng.uniform(20.0, 60.0)),
                                rng.uniform(0.0, 1.0, ticks)))
    return CalibrationEvent(event_id, vehicles)


def flat_event(event_id="E1"):
    """A > 0 and constant, so the aggregate is independent of (k1, k2)"""
    return CalibrationEvent(event_id, [
        vehicle("a", [1.0, 1.0], 10.0),
        vehicle("b", [2.0, 2.0], 20.0),
        vehicle("c", [3.0, 3.0], 30.0),
    ])


class TestRanks:
    def test_average_ties(self):
        np.testing.assert_array_equal(rank_with_ties([10.0, 20.0, 20.0, 30.0]), [1.0, 2.5, 2.5, 4.0])

    def test_empty(self):
        with pytest.raises(InputError):
            rank_with_ties([])


class TestSpearman:
    def test_perfect(self):
        assert spearman([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_reversed(self):
        assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_one_swap(self):
        assert spearman([1, 2, 3, 4, 5], [1, 2, 3, 5, 4]) == pytest.approx(0.9)

    def test_rank_only(self):
        assert spearman([1, 2, 3, 4], [1, 10, 100, 1000]) == pytest.approx(1.0)

    def test_ties_match_rank_pearson(self):
        rng = np.random.default_rng(43)
        checked = 0
        while checked < 1000:
            n = int(rng.integers(3, 15))
            x = rng.integers(0, 4, n).astype(float)
            y = rng.integers(0, 4, n).astype(float)
            if np.all(x == x[0]) or np.all(y == y[0]):
                continue
            expected = stats.spearmanr(x, y)[0]
            assert spearman(x, y) == pytest.approx(expected, abs=1e-12)
            checked += 1

    def test_constant_vector(self):
        with pytest.raises(UndefinedCorrelationError):
            spearman([1, 2, 3], [5, 5, 5])

    @pytest.mark.parametrize("x, y", [([1, 2], [1, 2, 3]), ([1], [1])])
    def test_bad_lengths(self, x, y):
        with pytest.raises(InputError):
            spearman(x, y)


class TestEventLoss:
    def test_perfect_agreement(self):
        assert event_loss(1.0) == pytest.approx(0.0)

    def test_perfect_disagreement(self):
        assert event_loss(-1.0) == pytest.approx(10.0)

    def test_shortfall(self):
        assert event_loss(0.5) == pytest.approx(3.775)

    def test_negative_always_worse(self):
        for r in np.linspace(0.05, 1.0, 20):
            assert event_loss(-r) > event_loss(r)


class TestEvaluation:
    def test_evaluate_event(self):
        evaluation = evaluate_event(flat_event(), pass_metric(-0.4, 0.7))
        assert evaluation.r == pytest.approx(1.0)
        assert evaluation.vehicle_ids == ["a", "b", "c"]
        np.testing.assert_array_equal(evaluation.travel_time_ranks, [1.0, 2.0, 3.0])

    def test_single_vehicle_event_is_excluded(self):
        warnings = []
        events = [flat_event(), CalibrationEvent("lonely", [vehicle("x", [1.0], 5.0)])]
        evaluations = evaluate_events(events, pass_metric(-0.4, 0.7), warnings)
        assert [e.event_id for e in evaluations] == ["E1"]
        assert warnings[0].source == "lonely"

    def test_constant_metric_is_excluded(self):
        warnings = []
        event = CalibrationEvent("same", [vehicle("a", [1.0], 5.0), vehicle("b", [1.0], 6.0)])
        assert evaluate_events([event], pass_metric(-0.4, 0.7), warnings) == []
        assert len(warnings) == 1

    def test_constant_travel_time_is_excluded(self):
        warnings = []
        event = CalibrationEvent("tied", [vehicle("a", [1.0], 5.0), vehicle("b", [2.0], 5.0)])
        assert evaluate_events([event], pass_metric(-0.4, 0.7), warnings) == []
        assert "constant travel" in warnings[0].message

    def test_baseline_metric(self):
        assert baseline_metric(vehicle("a", [1.0, 2.0], 5.0, baseline=[0.2, 0.4])) == pytest.approx(0.3)
        with pytest.raises(InputError):
            baseline_metric(vehicle("a", [1.0], 5.0))

    def test_total_loss(self):
        assert total_loss(-0.4, 0.7, [flat_event("E1"), flat_event("E2")]) == pytest.approx(0.0)

    def test_total_loss_needs_signed_scalings(self):
        with pytest.raises(InputError):
            total_loss(0.1, 0.7, [flat_event()])


class TestGridSearch:
    def test_flat_surface_ties_to_smallest_scalings(self):
        result = grid_search([flat_event()])
        assert (result.best_k1, result.best_k2) == (-0.01, 0.01)
        assert result.loss == pytest.approx(0.0)
        assert result.grid.shape == (100 * 100, 3)
        assert result.mean_r2 == pytest.approx(1.0)

    def test_coarse_rescan(self):
        result = grid_search([flat_event()], GridSpec(step=0.1))
        assert result.grid.shape == (100, 3)
        np.testing.assert_allclose(np.unique(result.grid[:, 0]), np.round(np.arange(-10, 0) / 10.0, 12))

    def test_surface_matches_direct_loss(self):
        rng = np.random.default_rng(41)
        dataset = [random_event(rng, f"E{i}") for i in range(3)]
        result = grid_search(dataset, GridSpec(step=0.1))
        for k1, k2, loss in result.grid[::7]:
            assert loss == pytest.approx(total_loss(k1, k2, dataset), abs=1e-9)
        assert result.loss == pytest.approx(result.grid[:, 2].min())
        assert result.loss == pytest.approx(total_loss(result.best_k1, result.best_k2, dataset), abs=1e-9)

    def test_fine_grid_spot_check(self):
        rng = np.random.default_rng(42)
        dataset = [random_event(rng, f"E{i}") for i in range(3)]
        result = grid_search(dataset)
        k1s, k2s = GridSpec().k1_values, GridSpec().k2_values
        for _ in range(50):
            k1, k2 = float(rng.choice(k1s)), float(rng.choice(k2s))
            assert result.loss <= total_loss(k1, k2, dataset) + 1e-9

    def test_deterministic(self):
        rng = np.random.default_rng(44)
        dataset = [random_event(rng, f"E{i}") for i in range(2)]
        first = grid_search(dataset, GridSpec(step=0.1))
        second = grid_search(dataset, GridSpec(step=0.1))
        assert (first.best_k1, first.best_k2, first.loss) == (second.best_k1, second.best_k2, second.loss)

    def test_no_usable_events(self):
        with pytest.raises(CalibrationError):
            grid_search([CalibrationEvent("lonely", [vehicle("x", [1.0], 5.0)])])

    def test_constant_metric_costs_as_much_as_no_correlation(self):
        same = CalibrationEvent("same", [vehicle("a", [1.0, 1.0], 5.0), vehicle("b", [1.0, 1.0], 6.0)])
        result = grid_search([flat_event(), same], GridSpec(step=0.5))
        assert result.loss == pytest.approx(event_loss(0.0))
        np.testing.assert_allclose(result.grid[:, 2], event_loss(0.0))
        assert total_loss(-0.5, 0.5, [flat_event(), same]) == pytest.approx(event_loss(0.0))
        assert [e.event_id for e in result.per_event] == ["E1"]

    def test_excluded_event_adds_the_zero_correlation_loss_everywhere(self):
        rng = np.random.default_rng(45)
        dataset = [random_event(rng, "E1"), CalibrationEvent("same", [
            vehicle("a", [2.0, 2.0, 2.0], 5.0), vehicle("b", [2.0, 2.0, 2.0], 6.0),
        ])]
        result = grid_search(dataset, GridSpec(step=0.1))
        for k1, k2, loss in result.grid[::5]:
            assert loss == pytest.approx(total_loss(k1, k2, dataset[:1]) + event_loss(0.0), abs=1e-9)

    def test_unusable_events_are_reported(self):
        result = grid_search([flat_event(), CalibrationEvent("lonely", [vehicle("x", [1.0], 5.0)])],
                             GridSpec(step=0.5))
        assert [w.source for w in result.warnings] == ["lonely"]
        assert [e.event_id for e in result.per_event] == ["E1"]

    def test_result_document(self):
        document = grid_search([flat_event()], GridSpec(step=0.5)).to_dict()
        assert document["best_k1"] == -0.5
        assert document["best_k2"] == 0.5
        assert document["grid_points"] == 4
        assert document["events"][0]["r2"] == pytest.approx(1.0)


class TestGridSpec:
    def test_default_axes_exclude_zero(self):
        grid = GridSpec()
        assert grid.k1_values[0] == -1.0
        assert grid.k1_values[-1] == -0.01
        assert grid.k2_values[0] == 0.01
        assert grid.k2_values[-1] == 1.0
        assert grid.size == 10000

    @pytest.mark.parametrize("kwargs", [
        dict(step=0.0),
        dict(k1_range=(0.0, 1.0)),
        dict(k2_range=(-1.0, 0.0)),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            GridSpec(**kwargs)
