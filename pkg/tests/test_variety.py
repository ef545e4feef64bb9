import math
from fractions import Fraction

import pytest

from mhorbit import (
    DEFAULT_PARAMS,
    ExactPoint,
    VarietyParams,
    apply_move,
    apply_word,
    defect,
    normalize_word,
    solve_missing_coordinate,
)
from mhorbit.errors import (
    DimensionMismatch,
    LetterOutOfRange,
    NonPositiveResult,
    NoRealSolution,
    NotOnVariety,
)
from mhorbit.variety import coords_from_json, coords_to_json, is_reduced

ROOT = ExactPoint.make(DEFAULT_PARAMS, (2, 2, 2, 2))


def test_defect_zero_on_variety():
    assert defect(DEFAULT_PARAMS, (2, 2, 2, 2)) == 0
    assert defect(DEFAULT_PARAMS, (6, 2, 2, 2)) == 0
    assert defect(DEFAULT_PARAMS, (1, 1, 1, 1)) == 3


def test_defect_dimension_check():
    with pytest.raises(DimensionMismatch):
        defect(DEFAULT_PARAMS, (2, 2, 2))


def test_make_rejects_off_variety_and_nonpositive():
    with pytest.raises(NotOnVariety):
        ExactPoint.make(DEFAULT_PARAMS, (1, 1, 1, 1))
    with pytest.raises(NonPositiveResult):
        ExactPoint.make(DEFAULT_PARAMS, (-2, -2, 2, 2))


def test_move_is_involution():
    for j in range(1, 5):
        p = apply_move(DEFAULT_PARAMS, ROOT, j)
        assert defect(DEFAULT_PARAMS, p.coords) == 0
        back = apply_move(DEFAULT_PARAMS, p, j)
        assert back.coords == ROOT.coords


def test_move_values_from_root():
    p = apply_move(DEFAULT_PARAMS, ROOT, 1)
    assert p.coords == (6, 2, 2, 2)
    q = apply_move(DEFAULT_PARAMS, p, 2)
    assert q.coords == (6, 22, 2, 2)


def test_letter_out_of_range():
    with pytest.raises(LetterOutOfRange):
        apply_move(DEFAULT_PARAMS, ROOT, 5)
    with pytest.raises(LetterOutOfRange):
        apply_move(DEFAULT_PARAMS, ROOT, 0)


def test_apply_word_leftmost_first():
    p = apply_word(DEFAULT_PARAMS, ROOT, (1, 2, 1))
    assert p.coords == (82, 22, 2, 2)


def test_normalize_word_cancels_adjacent():
    assert normalize_word((1, 1)) == ()
    assert normalize_word((1, 2, 2, 1)) == ()
    assert normalize_word((1, 2, 3, 3, 2)) == (1,)
    assert normalize_word((3, 1, 2)) == (3, 1, 2)
    assert is_reduced((1, 2, 1)) and not is_reduced((1, 1, 2))
    with pytest.raises(LetterOutOfRange):
        normalize_word((0, 1))


def test_solve_missing_coordinate_integer_case():
    lo, hi = solve_missing_coordinate(DEFAULT_PARAMS, (2, 2, 2))
    assert (lo, hi) == (2, 6)
    lo, hi = solve_missing_coordinate(DEFAULT_PARAMS, (2, 2, 6))
    assert (lo, hi) == (2, 22)


def test_solve_missing_coordinate_irrational_case():
    lo, hi = solve_missing_coordinate(DEFAULT_PARAMS, (3, 3, 3))
    # T^2 - 27 T + 27: irrational roots, floats
    assert isinstance(lo, float) and isinstance(hi, float)
    assert abs(lo * hi - 27) < 1e-9 and abs(lo + hi - 27) < 1e-9


def test_solve_missing_negative_discriminant():
    with pytest.raises(NoRealSolution):
        solve_missing_coordinate(DEFAULT_PARAMS, (1, 1, 1))


def test_rational_parameters():
    params = VarietyParams(n=4, a=Fraction(4))
    lo, hi = solve_missing_coordinate(params, (1, 1, 1))
    assert (lo, hi) == (1, 3)
    p = ExactPoint.make(params, (1, 1, 1, hi))
    assert defect(params, p.coords) == 0
    moved = apply_move(params, p, 1)
    assert defect(params, moved.coords) == 0


def test_coords_json_roundtrip():
    coords = (2, Fraction(5, 3), 7)
    assert coords_to_json(coords) == ["2", "5/3", "7"]
    assert coords_from_json(coords_to_json(coords)) == coords
