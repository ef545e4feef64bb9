import json
import math
import os

import pytest

import oracles
from mhorbit import (
    BallQuery,
    DEFAULT_PARAMS,
    ExactPoint,
    LogPoint,
    OrbitSpec,
    count_ball,
    enumerate_ball,
    run_partial,
    checkpoint_save,
    checkpoint_resume,
    suborbit_roots,
)
from mhorbit.engine import traverse, traverse_exact
from mhorbit.engine.traversal import Checkpoint
from mhorbit.errors import CorruptCheckpoint, DigestMismatch, PartialTraversal

ROOT = ExactPoint.make(DEFAULT_PARAMS, (2, 2, 2, 2))
SPEC = OrbitSpec(params=DEFAULT_PARAMS, base=ROOT)


def q_for(radius):
    return BallQuery.from_radius(radius)


# counts at these radii frozen from the naive big-integer oracle
ORACLE_COUNTS = {10: 5, 30: 17, 100: 29, 1000: 65, 10**6: 401}


@pytest.mark.parametrize("radius,expected", sorted(ORACLE_COUNTS.items()))
@pytest.mark.parametrize("backend", ["exact", "log"])
def test_count_matches_frozen_oracle(radius, expected, backend):
    assert oracles.count_ball((2, 2, 2, 2), radius) == expected
    assert count_ball(SPEC, q_for(radius), backend=backend).total == expected


def test_boundary_radius_inclusive():
    # points with max exactly 22 must be inside the ball of radius 22
    assert count_ball(SPEC, q_for(22)).total == oracles.count_ball((2, 2, 2, 2), 22)
    assert count_ball(SPEC, q_for(22)).total > count_ball(SPEC, q_for(21)).total


def test_by_depth_profile():
    res = count_ball(SPEC, q_for(100))
    assert res.total == 29
    assert res.by_depth[0] == 1 and sum(res.by_depth) == 29
    assert not res.truncated_by_depth_cap


def test_depth_cap_truncates():
    res = count_ball(SPEC, BallQuery.from_radius(100, depth_cap=2), backend="log")
    assert res.truncated_by_depth_cap
    assert res.total == 1 + 4 + 12


def test_enumerate_matches_oracle_words():
    expected = oracles.enumerate_ball_words((2, 2, 2, 2), 100)
    seen = {}

    def visitor(word, point):
        seen[tuple(word)] = tuple(point.coords)

    enumerate_ball(SPEC, q_for(100), visitor, backend="exact")
    assert seen == expected


def test_enumerate_log_backend_agrees_on_words():
    expected = set(oracles.enumerate_ball_words((2, 2, 2, 2), 1000))
    seen = set()
    enumerate_ball(SPEC, q_for(1000), lambda w, logs: seen.add(tuple(w)),
                   backend="log")
    assert seen == expected


def test_visitor_exception_wrapped():
    def visitor(word, point):
        if len(word) == 2:
            raise RuntimeError("boom")

    with pytest.raises(PartialTraversal) as ei:
        enumerate_ball(SPEC, q_for(100), visitor, backend="log")
    assert isinstance(ei.value.cause, RuntimeError)


def test_forbidden_first_moves():
    spec = OrbitSpec(params=DEFAULT_PARAMS, base=ROOT,
                     forbidden_first_moves=frozenset({1, 2, 3}))
    words = set()
    enumerate_ball(spec, q_for(100), lambda w, p: words.add(tuple(w)),
                   backend="log")
    assert all(not w or w[0] == 4 for w in words)
    full = oracles.enumerate_ball_words((2, 2, 2, 2), 100)
    assert words == {w for w in full if not w or w[0] == 4}


def test_real_base_counts():
    base = LogPoint.from_coords((2.0, 2.0, 2.0, 2.0))
    spec = OrbitSpec(params=DEFAULT_PARAMS, base=base)
    for radius, expected in sorted(ORACLE_COUNTS.items()):
        got = count_ball(spec, BallQuery.from_log_radius(math.log(radius))).total
        assert got == expected


def test_thread_determinism():
    thresholds = [math.log(r) for r in (10, 100, 10**4, 10**6)]
    ref = traverse(SPEC, thresholds, threads=1)
    for threads in (2, 4, 8):
        got = traverse(SPEC, thresholds, threads=threads)
        assert got.totals() == ref.totals()
        assert [list(b) for b in got.bins_by_depth] == [list(b) for b in ref.bins_by_depth]


def test_multi_threshold_matches_single_runs():
    thresholds = [math.log(r) for r in (10, 30, 100, 1000)]
    state = traverse(SPEC, thresholds)
    assert state.totals() == [5, 17, 29, 65]


def test_checkpoint_roundtrip(tmp_path):
    q = BallQuery.from_radius(10**6)
    path = str(tmp_path / "ck.json")
    state = run_partial(SPEC, q, pause_depth=4)
    assert state.frontier_words is not None
    checkpoint_save(SPEC, q, state, path)
    res = checkpoint_resume(SPEC, q, path)
    assert res.total == 401


def test_checkpoint_digest_mismatch(tmp_path):
    q = BallQuery.from_radius(100)
    path = str(tmp_path / "ck.json")
    state = run_partial(SPEC, q, pause_depth=1)
    checkpoint_save(SPEC, q, state, path)
    with pytest.raises(DigestMismatch):
        checkpoint_resume(SPEC, BallQuery.from_radius(101), path)
    other = OrbitSpec(params=DEFAULT_PARAMS, base=ROOT, k_radius=math.log(25))
    with pytest.raises(DigestMismatch):
        checkpoint_resume(other, q, path)


def test_checkpoint_corrupt(tmp_path):
    path = str(tmp_path / "ck.json")
    with open(path, "w") as fh:
        json.dump({"formatVersion": 99}, fh)
    with pytest.raises(CorruptCheckpoint):
        with open(path) as fh:
            Checkpoint.from_json(json.load(fh))


def test_suborbit_roots_examples():
    assert len(suborbit_roots(SPEC)) == 12  # k = ln 10
    assert len(suborbit_roots(SPEC, math.log(25))) == 36
    small = suborbit_roots(SPEC, math.log(2.5))
    assert [(tuple(map(int, p.coords)), j) for p, j in small] == [
        ((2, 2, 2, 6), 4), ((2, 2, 6, 2), 3), ((2, 6, 2, 2), 2), ((6, 2, 2, 2), 1)]


def test_suborbit_roots_log_backend_agrees():
    base = LogPoint.from_coords((2.0, 2.0, 2.0, 2.0))
    spec = OrbitSpec(params=DEFAULT_PARAMS, base=base)
    exact = suborbit_roots(SPEC, math.log(25))
    approx = suborbit_roots(spec, math.log(25))
    assert len(approx) == len(exact) == 36

    def key_exact(item):
        p, j = item
        return tuple(round(math.log(c), 6) for c in p.coords) + (j,)

    def key_log(item):
        p, j = item
        return tuple(round(x, 6) for x in p.float_logs()) + (j,)

    for (pe, je), (pl, jl) in zip(sorted(exact, key=key_exact),
                                  sorted(approx, key=key_log)):
        assert je == jl
        for ce, cl in zip(pe.coords, pl.float_logs()):
            assert abs(math.log(ce) - cl) < 1e-9


def test_kernels_numba_and_numpy_agree():
    import numpy as np
    from mhorbit.engine import kernels

    logs = np.log(np.array([[2.0, 2.0, 2.0, 2.0]]))
    errs = np.zeros_like(logs)
    banned = np.full(1, -1, np.int8)
    for _ in range(6):
        ref = kernels.expand_pure_numpy(logs, errs, banned, 0.0)
        got = kernels.expand_level(logs, errs, banned, 0.0)
        order_ref = np.lexsort((ref[3], ref[2]))
        order_got = np.lexsort((got[3], got[2]))
        for k in (0, 1, 4, 5, 6):
            assert np.array_equal(ref[k][order_ref], got[k][order_got])
        logs, errs, banned = ref[0], ref[1], ref[2].astype(np.int8)


def test_exact_and_log_traversals_agree_on_bins():
    thresholds = [math.log(r) for r in (10, 100, 1000)]
    se = traverse_exact(SPEC, thresholds)
    sl = traverse(SPEC, thresholds)
    assert se.totals() == sl.totals()
