import time

import numpy as np
import pytest

from core.exceptions import PhaseException
from optimizers.schemas import Hyperparams, TrainState
from optimizers.services import gsadmm_epoch, init_aux
from runtime.services import PhaseRuntime, epoch_timer, run_phase
from tensor.schemas import RngState


def _fail(message: str):
    def fn():
        raise RuntimeError(message)
    return fn


class TestPhases:

    def test_results_keyed_by_index(self):
        with PhaseRuntime(3) as runtime:
            results = runtime.run("square", [(i, lambda i=i: i * i) for i in range(6)])
        assert results == {i: i * i for i in range(6)}

    def test_empty_phase(self):
        with PhaseRuntime(2) as runtime:
            assert runtime.run("nothing", []) == {}

    def test_shared_slice_rejected(self):
        with PhaseRuntime(1) as runtime:
            with pytest.raises(ValueError):
                runtime.plan("w", [(0, lambda: 1), (0, lambda: 2)])

    @pytest.mark.parametrize("workers", [1, 4])
    def test_failure_reports_lowest_index(self, workers):
        tasks = [(3, _fail("three")), (0, lambda: 0), (1, _fail("one")), (2, lambda: 2)]
        with PhaseRuntime(workers) as runtime:
            with pytest.raises(PhaseException) as info:
                runtime.run("p", tasks)
        assert info.value.index == 1
        assert info.value.phase == "p"
        assert info.value.details == {"phase": "p", "index": 1}
        assert isinstance(info.value.cause, RuntimeError)

    def test_zero_workers(self):
        with pytest.raises(ValueError):
            PhaseRuntime(0)

    def test_module_level_run_phase(self):
        runtime = PhaseRuntime(2)
        plan = runtime.plan("u", [(0, lambda: "a"), (1, lambda: "b")])
        runtime.close()
        timings = run_phase(plan)
        assert plan.results == {0: "a", 1: "b"}
        assert timings.phase("u") >= 0.0


class TestParallelism:

    def test_two_workers_overlap(self):
        tasks = [(i, lambda: time.sleep(0.2)) for i in range(4)]
        with PhaseRuntime(1) as runtime:
            sequential = runtime.epoch_timer(lambda: runtime.run("w", tasks)).epoch_seconds
        with PhaseRuntime(2) as runtime:
            parallel = runtime.epoch_timer(lambda: runtime.run("w", tasks)).epoch_seconds
        assert parallel < 0.75 * sequential

    def test_worker_count_is_bit_identical(self, small_net, blobs):
        outcomes = []
        for workers in (1, 2, 4):
            with PhaseRuntime(workers) as runtime:
                net, aux, state = small_net, init_aux(small_net, blobs.inputs), TrainState.start(13, 2)
                for _ in range(3):
                    net, aux, state = gsadmm_epoch(net, aux, Hyperparams(batch_size=20), state, blobs, runtime)
            outcomes.append((net, aux))
        net_a, aux_a = outcomes[0]
        for net_b, aux_b in outcomes[1:]:
            for sub_a, sub_b in zip(net_a.subnetworks, net_b.subnetworks):
                for la, lb in zip(sub_a.layers, sub_b.layers):
                    assert np.array_equal(la.weight, lb.weight) and np.array_equal(la.bias, lb.bias)
            for a, b in zip(aux_a.p + aux_a.q + aux_a.u, aux_b.p + aux_b.q + aux_b.u):
                assert np.array_equal(a, b)


class TestTimings:

    def test_epoch_accounting(self):
        with PhaseRuntime(2) as runtime:
            def epoch():
                runtime.run("w", [(0, lambda: time.sleep(0.01)), (1, lambda: time.sleep(0.01))])
                runtime.run("p", [(0, lambda: None)])
                return "done"
            timed = runtime.timed(epoch)
        timings = timed.timings
        assert timed.result == "done"
        assert timings.phase_order == ["w", "p"]
        assert all(seconds >= 0.0 for seconds in timings.phases.values())
        assert all(seconds >= 0.0 for seconds in timings.worker_busy.values())
        assert timings.epoch_seconds >= timings.phase("w") + timings.phase("p")
        assert timings.phase("q") == 0.0

    def test_phases_never_overlap(self):
        with PhaseRuntime(3) as runtime:
            def epoch():
                for name in ("w", "p", "q", "u"):
                    runtime.run(name, [(i, lambda: np.ones((50, 50)) @ np.ones((50, 50))) for i in range(3)])
            timings = runtime.epoch_timer(epoch)
        windows = timings.phase_windows
        assert all(earlier[1] <= later[0] for earlier, later in zip(windows, windows[1:]))
        for span in timings.spans:
            start, end = windows[timings.phase_order.index(span.phase)]
            assert start <= span.start <= span.end <= end

    def test_transient_timer(self):
        rng = RngState(0)
        timings = epoch_timer(lambda: rng.normal((10,)))
        assert timings.epoch_seconds >= 0.0 and timings.phases == {}
