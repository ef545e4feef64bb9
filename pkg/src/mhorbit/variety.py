"""Exact arithmetic on the variety sum(x_i^2) = a * prod(x_i).

Points are tuples of positive integers or Fractions, moves are the
coordinate involutions x_j -> a*prod(others) - x_j, and words over the move
alphabet are kept reduced (no letter immediately repeated).  Everything in
this module is exact; floating point lives in :mod:`mhorbit.logspace`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Tuple, Union

from .errors import (
    DimensionMismatch,
    LetterOutOfRange,
    NonPositiveResult,
    NoRealSolution,
    NotOnVariety,
)

Rational = Union[int, Fraction]
Coords = Tuple[Rational, ...]


@dataclass(frozen=True)
class VarietyParams:
    """Equation parameters: coordinate count n and coefficient a."""

    n: int = 4
    a: Fraction = Fraction(1)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("need n >= 3")
        a = Fraction(self.a)
        if a <= 0:
            raise ValueError("need a > 0")
        object.__setattr__(self, "a", a)


DEFAULT_PARAMS = VarietyParams()


def defect(params: VarietyParams, coords: Sequence[Rational]) -> Rational:
    """sum(x_i^2) - a*prod(x_i), exactly.  Zero iff the point is on the variety."""
    if len(coords) != params.n:
        raise DimensionMismatch(f"expected {params.n} coordinates, got {len(coords)}")
    sq = sum(c * c for c in coords)
    prod: Rational = params.a
    for c in coords:
        prod *= c
    d = sq - prod
    if isinstance(d, Fraction) and d.denominator == 1:
        return int(d)
    return d


@dataclass(frozen=True)
class ExactPoint:
    """An on-variety point with positive integer or rational coordinates."""

    params: VarietyParams
    coords: Coords

    @classmethod
    def make(cls, params: VarietyParams, coords: Iterable[Rational]) -> "ExactPoint":
        coords = tuple(Fraction(c) if not isinstance(c, int) else c for c in coords)
        if any(c <= 0 for c in coords):
            raise NonPositiveResult(f"coordinates must be positive: {coords}")
        if defect(params, coords) != 0:
            raise NotOnVariety(f"defect({coords}) = {defect(params, coords)} != 0")
        return cls(params, coords)

    @property
    def max_coord(self) -> Rational:
        return max(self.coords)

    def is_integral(self) -> bool:
        return all(isinstance(c, int) for c in self.coords)


def _check_letter(params: VarietyParams, j: int) -> None:
    if not 1 <= j <= params.n:
        raise LetterOutOfRange(f"move index {j} not in 1..{params.n}")


def moved_coordinate(params: VarietyParams, coords: Sequence[Rational], j: int) -> Rational:
    """Value that move j writes into coordinate j: a*prod(others) - x_j."""
    _check_letter(params, j)
    prod: Rational = params.a
    for i, c in enumerate(coords):
        if i != j - 1:
            prod *= c
    new = prod - coords[j - 1]
    if isinstance(new, Fraction) and new.denominator == 1:
        return int(new)
    return new


def apply_move(params: VarietyParams, p: ExactPoint, j: int) -> ExactPoint:
    """Apply the involution at coordinate j.  Result stays on the variety."""
    new = moved_coordinate(params, p.coords, j)
    if new <= 0:
        raise NonPositiveResult(f"move {j} on {p.coords} gives nonpositive {new}")
    coords = p.coords[: j - 1] + (new,) + p.coords[j:]
    # construction preserves the defining equation; skip the O(n) recheck
    return ExactPoint(params, coords)


def solve_missing_coordinate(params: VarietyParams, partial: Sequence[Rational]):
    """Both roots of T^2 - (a*prod(partial)) T + sum(partial^2).

    Returns (smaller, larger).  Exact Fractions when the discriminant is a
    rational square, floats otherwise.
    """
    if len(partial) != params.n - 1:
        raise DimensionMismatch(f"expected {params.n - 1} coordinates, got {len(partial)}")
    if any(c <= 0 for c in partial):
        raise NonPositiveResult("partial coordinates must be positive")
    s = params.a
    for c in partial:
        s *= c
    q = sum(c * c for c in partial)
    disc = Fraction(s) ** 2 - 4 * q
    if disc < 0:
        raise NoRealSolution(f"discriminant {disc} < 0 for partial {tuple(partial)}")
    root = _rational_sqrt(disc)
    if root is not None:
        lo = Fraction(Fraction(s) - root, 2)
        hi = Fraction(Fraction(s) + root, 2)
        lo = int(lo) if lo.denominator == 1 else lo
        hi = int(hi) if hi.denominator == 1 else hi
        return lo, hi
    r = math.sqrt(float(disc))
    return (float(s) - r) / 2.0, (float(s) + r) / 2.0


def _rational_sqrt(x: Fraction):
    """Exact square root of a nonnegative rational, or None if irrational."""
    x = Fraction(x)
    if x < 0:
        return None
    pn = math.isqrt(x.numerator)
    pd = math.isqrt(x.denominator)
    if pn * pn == x.numerator and pd * pd == x.denominator:
        return Fraction(pn, pd)
    return None


def normalize_word(letters: Sequence[int], n: int = 4) -> Tuple[int, ...]:
    """Reduce a word over the move alphabet: cancel adjacent equal letters."""
    out: list[int] = []
    for letter in letters:
        if not 1 <= letter <= n:
            raise LetterOutOfRange(f"letter {letter} not in 1..{n}")
        if out and out[-1] == letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def is_reduced(letters: Sequence[int]) -> bool:
    return all(a != b for a, b in zip(letters, letters[1:]))


def apply_word(params: VarietyParams, p: ExactPoint, word: Sequence[int]) -> ExactPoint:
    """Apply moves leftmost-letter-first."""
    for j in word:
        p = apply_move(params, p, j)
    return p


# --- serialization -----------------------------------------------------------

def coords_to_json(coords: Sequence[Rational]) -> list:
    """Coordinates as strings: decimal for integers, "p/q" for rationals."""
    out = []
    for c in coords:
        if isinstance(c, int) or (isinstance(c, Fraction) and c.denominator == 1):
            out.append(str(int(c)))
        else:
            out.append(f"{c.numerator}/{c.denominator}")
    return out


def coords_from_json(items: Sequence[str]) -> Coords:
    out = []
    for s in items:
        if "/" in s:
            num, den = s.split("/")
            out.append(Fraction(int(num), int(den)))
        else:
            out.append(int(s))
    return tuple(out)


def word_to_json(word: Sequence[int]) -> list:
    return [int(j) for j in word]
