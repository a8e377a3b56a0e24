from __future__ import annotations

import pytest

from batchrefine.errors import InvalidStep
from batchrefine.fusion import Coefficients, fit_scaling, fuse, scale_and_fuse, select
from batchrefine.tuning import (
    AXES,
    grid_numerators,
    grid_search,
    sensitivity_sweep,
    simplex_grid,
    sweep_coefficients,
)

from util import make_group


class TestSimplexGrid:
    def test_step_point_one_yields_66(self):
        grid = simplex_grid(0.1)
        assert len(grid) == 66
        assert len(set(c.as_tuple() for c in grid)) == 66

    def test_exact_integer_representation(self):
        for (a, b, c, m), coeffs in zip(grid_numerators(0.1), simplex_grid(0.1)):
            assert a + b + c == m
            assert min(a, b, c) >= 0
            assert coeffs.as_tuple() == (a / m, b / m, c / m)

    def test_step_half_enumeration(self):
        grid = {c.as_tuple() for c in simplex_grid(0.5)}
        assert grid == {
            (1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0),
            (0.0, 0.0, 1.0),
            (0.5, 0.5, 0.0),
            (0.5, 0.0, 0.5),
            (0.0, 0.5, 0.5),
        }

    def test_step_one_vertices(self):
        grid = {c.as_tuple() for c in simplex_grid(1.0)}
        assert grid == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}

    def test_invalid_step_rejected(self):
        with pytest.raises(InvalidStep):
            simplex_grid(0.3)
        with pytest.raises(InvalidStep):
            simplex_grid(0.0)
        with pytest.raises(InvalidStep):
            simplex_grid(2.0)


class TestGridSearch:
    def test_returns_verified_maximizer(self):
        # only the beta axis correlates with the fake metric
        def evaluate(c: Coefficients) -> float:
            return c.beta

        best, table = grid_search(evaluate, 0.1, "fake")
        assert best.coefficients.as_tuple() == (0.0, 1.0, 0.0)
        assert len(table) == 66
        assert all(best.metric_value >= p.metric_value for p in table)

    def test_all_ties_resolve_to_lexicographic_smallest(self):
        best, _ = grid_search(lambda c: 1.0, 0.1, "const")
        assert best.coefficients.as_tuple() == (0.0, 0.0, 1.0)

    def test_three_vertices(self):
        best, table = grid_search(lambda c: c.gamma, 1.0, "g")
        assert len(table) == 3
        assert best.coefficients.as_tuple() == (0.0, 0.0, 1.0)

    def test_deterministic_under_reruns(self):
        def evaluate(c):
            return round(c.alpha * c.beta, 6)

        first, _ = grid_search(evaluate, 0.1)
        second, _ = grid_search(evaluate, 0.1)
        assert first == second

    def test_entailment_correlated_dataset_selects_pure_beta(self):
        """Dataset where only the entailment score tracks correctness and
        the other two dimensions are adversarial: anchors have wide
        entailment margins, sentinels have tiny ones, so every mixture
        with nonzero alpha or gamma loses at least one sample and the
        unique maximizer is the (0, 1, 0) vertex."""
        samples = []
        for i in range(8):  # anchors
            group = make_group(["right", "wrong"], sample_id=f"anchor{i}")
            triples = [(-1.0, 5.0, -1.0), (0.0, -5.0, 0.0)]
            samples.append((group, triples, [True, False]))
        for i in range(2):  # sentinels
            group = make_group(["right", "wrong"], sample_id=f"sentinel{i}")
            triples = [(-8.0, 0.001, -8.0), (0.0, 0.0, 0.0)]
            samples.append((group, triples, [True, False]))

        scaling = fit_scaling([t for _, triples, _ in samples for t in triples])

        def evaluate(coefficients):
            hits = 0
            for group, triples, correct in samples:
                finals = [
                    scale_and_fuse(t, scaling, coefficients).final for t in triples
                ]
                hits += correct[select(group.candidates, finals)]
            return 100.0 * hits / len(samples)

        best, table = grid_search(evaluate, 0.1, "hit_rate")
        assert best.coefficients.as_tuple() == (0.0, 1.0, 0.0)
        assert best.metric_value == 100.0
        # the vertex is the unique maximizer, not a tie-break artifact
        others = [p for p in table if p.coefficients.as_tuple() != (0.0, 1.0, 0.0)]
        assert all(p.metric_value < 100.0 for p in others)


class TestSensitivitySweep:
    def test_axis_endpoint_is_vertex(self):
        assert sweep_coefficients("gamma", 1.0).as_tuple() == (0.0, 0.0, 1.0)
        assert sweep_coefficients("alpha", 1.0).as_tuple() == (1.0, 0.0, 0.0)

    def test_zero_endpoint_splits_rest(self):
        assert sweep_coefficients("alpha", 0.0).as_tuple() == (0.0, 0.5, 0.5)

    def test_symmetric_point(self):
        for axis in AXES:
            c = sweep_coefficients(axis, 1 / 3)
            assert c.as_tuple() == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_rows_cover_unit_interval(self):
        rows = sensitivity_sweep(lambda c: c.alpha, "alpha", 0.1, "m")
        assert [r.x for r in rows] == [i / 10 for i in range(11)]
        assert rows[-1].coefficients.as_tuple() == (1.0, 0.0, 0.0)
        assert rows[0].metric_value == 0.0
        assert rows[-1].metric_value == 1.0
