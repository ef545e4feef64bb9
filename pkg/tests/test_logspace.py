import math

import pytest

from mhorbit import (
    DEFAULT_PARAMS,
    ExactPoint,
    LogPoint,
    PrecisionConfig,
    Verdict,
    apply_move,
    certified_compare,
    log_move_descent,
    log_move_outgoing,
    to_log_point,
)
from mhorbit.errors import ErrorBudgetExceeded, NotOutgoing
from mhorbit.logspace import float_log, log_point_from_json, log_point_to_json

ROOT = ExactPoint.make(DEFAULT_PARAMS, (2, 2, 2, 2))


def test_from_coords_matches_math_log():
    lp = LogPoint.from_coords((2, 3, 5, 7))
    for got, v in zip(lp.float_logs(), (2, 3, 5, 7)):
        assert abs(got - math.log(v)) < 1e-15
    assert lp.err_bound < 1e-30  # 128-bit representation error


def test_outgoing_matches_exact():
    lp = to_log_point(ROOT)
    exact = apply_move(DEFAULT_PARAMS, ROOT, 1)  # (6,2,2,2)
    moved = log_move_outgoing(DEFAULT_PARAMS, lp, 1)
    assert abs(moved.float_logs()[0] - math.log(6)) < 1e-12
    assert moved.err_bound >= lp.err_bound
    # walk out further and check against exact values
    p, q = exact, moved
    for j in (2, 1, 2, 1):
        p = apply_move(DEFAULT_PARAMS, p, j)
        q = log_move_outgoing(DEFAULT_PARAMS, q, j)
        assert abs(q.float_logs()[j - 1] - float_log(p.coords[j - 1])) < 1e-12


def test_outgoing_rejects_certified_maximum():
    lp = to_log_point(ExactPoint.make(DEFAULT_PARAMS, (6, 2, 2, 2)))
    with pytest.raises(NotOutgoing):
        log_move_outgoing(DEFAULT_PARAMS, lp, 1)


def test_descent_matches_exact():
    p = ExactPoint.make(DEFAULT_PARAMS, (82, 22, 2, 2))
    lp = to_log_point(p)
    down = log_move_descent(DEFAULT_PARAMS, lp, 1)
    assert abs(down.float_logs()[0] - math.log(6)) < 1e-12


def test_descent_error_stays_small_on_deep_word():
    # alternate way out then all the way back down: cancellation stress
    lp = to_log_point(ROOT)
    word = []
    for k in range(30):
        word.append(1 + k % 2)
    cur = lp
    for j in word:
        cur = log_move_outgoing(DEFAULT_PARAMS, cur, j)
    for j in reversed(word):
        cur = log_move_descent(DEFAULT_PARAMS, cur, j)
    for got, v in zip(cur.float_logs(), ROOT.coords):
        assert abs(got - math.log(v)) < 1e-9
    assert cur.err_bound < 1e-6


def test_error_budget_enforced():
    cfg = PrecisionConfig(working_bits=53, max_err=1e-14)
    lp = LogPoint.from_coords((2, 2, 2, 2), cfg)
    with pytest.raises(ErrorBudgetExceeded):
        cur = lp
        for _ in range(100):
            cur = log_move_outgoing(DEFAULT_PARAMS, cur, 1, cfg)
            cur = log_move_outgoing(DEFAULT_PARAMS, cur, 2, cfg)


def test_certified_compare_verdicts():
    lp = to_log_point(ROOT)
    assert certified_compare(lp, math.log(10)) is Verdict.BELOW
    assert certified_compare(lp, math.log(1.5)) is Verdict.ABOVE
    wide = LogPoint(lp.logs, 1.0, lp.bits)
    assert certified_compare(wide, math.log(2.5)) is Verdict.INDETERMINATE


def test_log_point_json_roundtrip():
    lp = to_log_point(ROOT)
    back = log_point_from_json(log_point_to_json(lp))
    assert back.bits == lp.bits
    for a, b in zip(back.float_logs(), lp.float_logs()):
        assert abs(a - b) < 1e-30 or a == b


def test_float_log_huge_integer():
    v = 7 ** 2000
    assert abs(float_log(v) - 2000 * math.log(7)) < 1e-6
