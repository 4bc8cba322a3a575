import numpy as np
import pytest

from hybridrelay.benchmarks import (ba_best_fso, ba_independent, nonba_independent, nonba_maxmin_fso,
                                    run_benchmark)
from hybridrelay.channels import CapacityMatrix, NetworkConfig, capacity_trace


def trace(fso, rf=None) -> CapacityMatrix:
    fso = np.array(fso, dtype=float)
    return CapacityMatrix(fso, np.zeros_like(fso) if rf is None else np.array(rf, dtype=float))


class TestNonBaBenchmarks:
    def test_single_relay(self):
        assert nonba_maxmin_fso(trace([[7], [3]])) == 3

    def test_hand_enumeration(self):
        assert nonba_maxmin_fso(trace([[10, 6], [3, 8]])) == 6

    def test_zero(self):
        assert nonba_maxmin_fso(trace(np.zeros((2, 3)))) == 0

    def test_rf_absent_equals_maxmin(self, rng):
        c = trace(rng.exponential(size=(100, 2, 3)))
        assert np.array_equal(nonba_independent(c), nonba_maxmin_fso(c))

    def test_rf_half_slots(self):
        assert nonba_independent(trace([[0], [0]], [[20], [20]])) == 10


class TestGreedyBa:
    def test_empty_queues_pick_best_reception(self):
        r = ba_best_fso(trace([[[3, 9], [50, 50]]]))
        assert r.arrival.tolist() == [0, 9] and r.total_out == 0

    def test_loaded_queue_transmits(self):
        r = ba_best_fso(trace([[[100, 1], [0, 0]], [[10, 10], [50, 1]]]))
        assert r.delivered.tolist() == [0, 50]

    def test_two_slot_hand_simulation(self):
        r = ba_best_fso(trace([[[5], [0]], [[0], [4]]]))
        assert r.delivered.sum() == 4 and r.final_queue[0] == 1

    def test_independent_fso_only_matches_best_fso(self, rng):
        c = trace(rng.exponential(size=(500, 2, 3)))
        assert ba_independent(c).throughput == pytest.approx(ba_best_fso(c).throughput)

    def test_independent_rf_only(self):
        z = np.zeros((2, 2, 1))
        c = CapacityMatrix(z, np.array([[[5], [0]], [[0], [4]]], dtype=float))
        assert ba_independent(c).total_out == 4

    def test_independent_two_layers_add(self):
        fso = np.array([[[5], [0]], [[0], [4]]], dtype=float)
        rf = np.array([[[2], [0]], [[0], [3]]], dtype=float)
        assert ba_independent(CapacityMatrix(fso, rf)).total_out == 4 + 2

    def test_conservation(self):
        c = capacity_trace(NetworkConfig.uniform(3), np.random.default_rng(0), 2000)
        for run in (ba_best_fso(c, qmax=5e8), ba_independent(c, qmax=5e8),
                    ba_independent(c, qmax=5e8, rf_half_slot=True)):
            assert run.total_in - run.total_out == pytest.approx(run.final_queue.sum(), rel=1e-9)
            assert (run.final_queue >= -1e-6).all()

    def test_empty_trace(self):
        z = np.zeros((0, 2, 2))
        assert run_benchmark("ba_best_fso", CapacityMatrix(z, z)) == 0
        assert run_benchmark("nonba_maxmin_fso", CapacityMatrix(z, z)) == 0
