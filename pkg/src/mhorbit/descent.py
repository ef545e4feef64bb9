"""Infinite descent, the three dynamical properties, orbit constants, and
fundamental-solution search.

Property A: the largest entry is unique.  Property B: the move at the
largest entry strictly shrinks the sup norm.  Property C: a move at any
other entry makes that entry the strict maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Dict, List, Optional, Sequence, Tuple

from .engine import OrbitSpec, traverse_exact
from .engine.traversal import LN10, TraversalState
from .errors import EmptyBall, NonTermination, NotOnVariety
from .logspace import float_log
from .variety import (
    ExactPoint,
    VarietyParams,
    apply_move,
    defect,
    moved_coordinate,
)


@dataclass
class PropertyReport:
    holds_a: bool
    holds_b: bool
    holds_c: bool
    max_index: int  # 1-based, lowest-index maximal coordinate
    witnesses: Dict[int, tuple] = field(default_factory=dict)

    @property
    def holds_all(self) -> bool:
        return self.holds_a and self.holds_b and self.holds_c


@dataclass
class OrbitConstants:
    """Empirical lower-region estimates for one orbit.

    ``epsilon`` is (min pairwise coordinate product) - 2 over the sampled
    ball, ``eta`` the min coordinate seen.  Estimates, not proven constants;
    ``sample_bound`` records the enumeration radius they came from.
    """

    epsilon: float
    eta: float
    sample_bound: float
    k_radius: Optional[float] = None


@dataclass
class DescentCertificate:
    root: ExactPoint
    word: Tuple[int, ...]  # moves in descent order
    steps: List  # sup norms along the descent, strictly decreasing

    def to_json(self) -> dict:
        from .variety import coords_to_json
        return {
            "root": coords_to_json(self.root.coords),
            "word": list(self.word),
            "steps": [str(s) for s in self.steps],
        }


def verify_properties(params: VarietyParams, p) -> PropertyReport:
    """Check properties A, B, C at a point (exact when coordinates are exact)."""
    coords = p.coords if isinstance(p, ExactPoint) else tuple(p)
    if not isinstance(p, ExactPoint):
        d = defect(params, coords)
        if d != 0 and (not isinstance(d, float) or abs(d) > 1e-9):
            raise NotOnVariety(f"defect {d} != 0")
        if any(c <= 0 for c in coords):
            raise NotOnVariety("coordinates must be positive")
    maxv = max(coords)
    max_idx = coords.index(maxv) + 1
    holds_a = coords.count(maxv) == 1
    witnesses: Dict[int, tuple] = {}

    moved = moved_coordinate(params, coords, max_idx)
    after_b = coords[: max_idx - 1] + (moved,) + coords[max_idx:]
    witnesses[max_idx] = after_b
    holds_b = max(after_b) < maxv

    holds_c = True
    for j in range(1, params.n + 1):
        if holds_a and j == max_idx:
            continue
        new = moved_coordinate(params, coords, j)
        after = coords[: j - 1] + (new,) + coords[j:]
        witnesses[j] = after
        if any(new <= c for i, c in enumerate(after) if i != j - 1):
            holds_c = False
    return PropertyReport(holds_a, holds_b, holds_c, max_idx, witnesses)


def reduce_to_root(params: VarietyParams, p: ExactPoint,
                   step_limit: int = 100_000) -> DescentCertificate:
    """Descend by moving at the (lowest-index) maximal coordinate while the
    sup norm strictly decreases; ties break to the lowest index."""
    current = p
    word: List[int] = []
    steps = [current.max_coord]
    for _ in range(step_limit):
        maxv = current.max_coord
        j = current.coords.index(maxv) + 1
        candidate = apply_move(params, current, j)
        if candidate.max_coord >= maxv:
            break
        current = candidate
        word.append(j)
        steps.append(current.max_coord)
    else:
        raise NonTermination(f"descent from {p.coords} did not stop in {step_limit} steps")
    return DescentCertificate(root=current, word=tuple(word), steps=steps)


def estimate_epsilon(spec: OrbitSpec, sample_log_r: float) -> OrbitConstants:
    """Min pairwise coordinate product (minus 2) and min coordinate over a ball."""
    if sample_log_r < spec.base_max_log - 1e-12:
        raise EmptyBall(f"sample radius {sample_log_r} below base max log")
    n = spec.params.n
    best = {"pair": math.inf, "eta": math.inf}

    if spec.is_exact:
        def visitor(word, point):
            coords = sorted(point.coords, key=float)
            pair = float(coords[0]) * float(coords[1])
            best["pair"] = min(best["pair"], pair)
            best["eta"] = min(best["eta"], float(coords[0]))

        traverse_exact(spec, [sample_log_r], visitor=visitor)
    else:
        from .engine import traverse

        def visitor(word, logs):
            srt = sorted(logs)
            best["pair"] = min(best["pair"], math.exp(srt[0] + srt[1]))
            best["eta"] = min(best["eta"], math.exp(srt[0]))

        traverse(spec, [sample_log_r], visitor=visitor)
    if not math.isfinite(best["pair"]):
        raise EmptyBall("no orbit points within the sample radius")
    return OrbitConstants(epsilon=best["pair"] - 2.0, eta=best["eta"],
                          sample_bound=sample_log_r)


def regularized_k_radius(consts: OrbitConstants, a: Fraction = Fraction(1)) -> float:
    """Log radius of the enlarged compact set outside which the dynamics are clean.

    Max of: the ln 10 floor; ln(10/(eta*sqrt(eps)) + 1); and the radius past
    which 3*log(1 - 2*x^(-1/3)) - 3*log 2 >= -(log x)/2.  The companion
    constraint (third-largest coordinate at least half the cube root of the
    max) holds automatically on sorted positive points when a <= 8, since the
    max is below a times the product of the other three.
    """
    if consts.epsilon <= 0 or consts.eta <= 0:
        raise ValueError("epsilon and eta must be positive")
    if Fraction(a) > 8:
        raise ValueError("regularization floor not derived for a > 8")
    k1 = math.log(10.0 / (consts.eta * math.sqrt(consts.epsilon)) + 1.0)

    def g(x):
        return 3.0 * math.log1p(-2.0 * x ** (-1.0 / 3.0)) - 3.0 * math.log(2.0) \
            + 0.5 * math.log(x)

    lo, hi = 10.0, 10.0
    while g(hi) < 0:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    step1 = math.log(hi)
    return max(LN10, k1, step1)


def find_fundamental_solutions(params: VarietyParams, box_bound: int) -> List[Tuple[int, ...]]:
    """Descent endpoints of every integer point with coordinates in [1, box].

    Iterates the first n-1 coordinates (as multisets), solves the defining
    quadratic exactly for the last, reduces each hit, and returns the sorted,
    deduplicated roots.
    """
    if box_bound < 1:
        raise ValueError("box_bound must be >= 1")
    a = params.a
    roots = set()
    for partial in combinations_with_replacement(range(1, box_bound + 1), params.n - 1):
        s = a
        for c in partial:
            s *= c
        q = sum(c * c for c in partial)
        disc = s * s - 4 * q
        if disc < 0:
            continue
        num = disc.numerator * disc.denominator
        r = math.isqrt(num)
        if r * r != num:
            continue
        sq = Fraction(r, disc.denominator)
        for root in (Fraction(s - sq, 2), Fraction(s + sq, 2)):
            if root.denominator != 1:
                continue
            t = int(root)
            if not 1 <= t <= box_bound:
                continue
            point = ExactPoint.make(params, tuple(sorted(partial + (t,))))
            cert = reduce_to_root(params, point)
            roots.add(tuple(sorted(cert.root.coords)))
    return sorted(roots)
