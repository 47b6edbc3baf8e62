import logging
import random

from iotforge.sched import analyze_core, hyperperiod, simulate
from iotforge.sched.simulate import MAX_HORIZON_US

from support import MS, random_task_set, task, task_set


def test_single_task_finishes_after_its_wcet():
    trace = simulate(task_set(task("a", 30, 200)))
    assert trace.horizon == 200 * MS
    assert [(j.release, j.finish) for j in trace.jobs] == [(0, 30 * MS)]
    # the run stops once every tracked job is done, so the idle tail is not recorded
    assert trace.segments == [(0, 30 * MS, "a")]


def test_preemption_example_over_one_second():
    ts = task_set(task("hi", 30, 200, prio=2), task("lo", 50, 500, 100, prio=1))
    trace = simulate(ts, horizon=1000 * MS)
    assert trace.worst_response() == {"hi": 30 * MS, "lo": 80 * MS}
    assert trace.misses() == {}
    assert len(trace.jobs) == 5 + 2


def test_diverged_example_misses_its_deadline():
    ts = task_set(task("hi", 60, 100, prio=2), task("lo", 90, 200, 200, prio=1))
    trace = simulate(ts)
    first = next(j for j in trace.jobs if j.task == "lo")
    # hi takes 60 of every 100 ms, so the job completes inside the third window
    assert first.finish == 270 * MS
    assert first.missed
    assert trace.misses()["lo"] >= 1


def test_unfinished_job_counts_as_miss():
    ts = task_set(task("hi", 100, 100, prio=2), task("lo", 10, 100, prio=1))
    trace = simulate(ts, drain_limit=0)
    lo = [j for j in trace.jobs if j.task == "lo"]
    assert lo[0].finish is None and lo[0].missed
    assert trace.worst_response()["lo"] is None


def test_idle_gaps_and_merged_segments():
    trace = simulate(task_set(task("a", 10, 50)), horizon=100 * MS)
    assert trace.segments == [(0, 10 * MS, "a"), (10 * MS, 50 * MS, None), (50 * MS, 60 * MS, "a")]
    # a preempted task resumes in a new segment; back-to-back runs are merged
    trace = simulate(task_set(task("hi", 10, 50, prio=2), task("lo", 60, 200, prio=1)))
    assert trace.segments[:4] == [(0, 10 * MS, "hi"), (10 * MS, 50 * MS, "lo"),
                                  (50 * MS, 60 * MS, "hi"), (60 * MS, 80 * MS, "lo")]


def test_horizon_is_capped(caplog):
    ts = task_set(task("a", 1, 999.983), task("b", 1, 999.979, prio=2))
    assert hyperperiod(ts) > MAX_HORIZON_US
    with caplog.at_level(logging.WARNING, logger="iotforge.sched.simulate"):
        trace = simulate(ts, drain_limit=0)
    assert trace.capped and trace.horizon == MAX_HORIZON_US
    assert "exceeds the cap" in caplog.text


def test_empty_set():
    trace = simulate(task_set())
    assert trace.jobs == [] and trace.segments == []


def test_rta_agrees_with_simulation_on_random_sets():
    rng = random.Random(2024)
    finite = diverged = 0
    for _ in range(150):
        ts = random_task_set(rng)
        result = analyze_core(ts)
        trace = simulate(ts)  # tracks one hyperperiod and drains for another
        worst, misses = trace.worst_response(), trace.misses()
        for r in result.tasks:
            if r.response is None:
                diverged += 1
                assert misses.get(r.task.id), r.task
            else:
                finite += 1
                assert worst[r.task.id] == r.response, r.task
    assert finite and diverged
