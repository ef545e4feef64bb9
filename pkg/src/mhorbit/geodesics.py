"""Hyperbolic-length interface: coordinate conversions and the one-sided
simple-closed-geodesic count via the orbit engine.

A hyperbolic structure enters as the coordinate tuple of four curve lengths
(coordinate = sqrt(2 sinh(length/2))); counting geodesics of length <= L
reduces to an orbit ball count at log threshold L/4 + log1p(-e^-L)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Rational
from typing import Optional, Sequence, Tuple

from .engine import BallQuery, CountResult, OrbitSpec, count_ball
from .errors import NonPositiveCoordinate, NonPositiveLength, NoRealSolution, NotOnVariety
from .logspace import LogPoint
from .variety import DEFAULT_PARAMS, ExactPoint, VarietyParams, defect, solve_missing_coordinate

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class HyperbolicStructure:
    """A point of the positive real variety, as the image of four curve lengths."""

    base_point: Tuple
    tolerance: float = DEFAULT_TOLERANCE
    params: VarietyParams = DEFAULT_PARAMS

    def __post_init__(self):
        if any(c <= 0 for c in self.base_point):
            raise NotOnVariety("coordinates must be positive")

    def is_exact(self) -> bool:
        return all(isinstance(c, Rational) for c in self.base_point)


@dataclass
class GeodesicCount:
    raw_count: int
    log_threshold: float
    # the true count differs by a bounded additive term (curves meeting the
    # compact set are not identified); always flagged
    caveat: bool
    result: Optional[CountResult] = None

    def to_json(self) -> dict:
        return {
            "formatVersion": 1,
            "rawCount": self.raw_count,
            "logThreshold": repr(self.log_threshold),
            "caveat": self.caveat,
        }


def length_to_coordinate(length: float) -> float:
    """sqrt(2 sinh(length/2)); strictly increasing."""
    if length <= 0:
        raise NonPositiveLength(f"length must be positive, got {length}")
    return math.exp(0.5 * _log_2sinh_half(length))


def log_length_to_coordinate(length: float) -> float:
    """log of the coordinate, stable for large lengths: L/4 + log1p(-e^-L)/2."""
    if length <= 0:
        raise NonPositiveLength(f"length must be positive, got {length}")
    return 0.5 * _log_2sinh_half(length)


def _log_2sinh_half(length: float) -> float:
    # log(2 sinh(L/2)) = L/2 + log(1 - exp(-L)); expm1 keeps tiny L accurate
    return 0.5 * length + math.log(-math.expm1(-length))


def coordinate_to_length(x: float) -> float:
    """2 asinh(x^2 / 2); inverse of length_to_coordinate."""
    if x <= 0:
        raise NonPositiveCoordinate(f"coordinate must be positive, got {x}")
    return 2.0 * math.asinh(0.5 * x * x)


def structure_from_lengths(lengths: Sequence[float],
                           tolerance: float = DEFAULT_TOLERANCE,
                           params: VarietyParams = DEFAULT_PARAMS) -> HyperbolicStructure:
    """Convert four curve lengths to coordinates and validate variety membership."""
    coords = tuple(length_to_coordinate(l) for l in lengths)
    return structure_from_coords(coords, tolerance, params)


def structure_from_coords(coords: Sequence,
                          tolerance: float = DEFAULT_TOLERANCE,
                          params: VarietyParams = DEFAULT_PARAMS) -> HyperbolicStructure:
    coords = tuple(coords)
    if len(coords) != params.n:
        raise NotOnVariety(f"expected {params.n} coordinates")
    if any(c <= 0 for c in coords):
        raise NotOnVariety("coordinates must be positive")
    d = float(defect(params, tuple(float(c) for c in coords)))
    sq = sum(float(c) ** 2 for c in coords)
    prod = float(params.a)
    for c in coords:
        prod *= float(c)
    scale = sq + abs(prod)
    if abs(d) > tolerance * scale:
        raise NotOnVariety(f"relative defect {abs(d) / scale:.3e} exceeds {tolerance}")
    return HyperbolicStructure(coords, tolerance, params)


def structure_from_partial(lengths: Sequence[float], root_choice: str = "Smaller",
                           params: VarietyParams = DEFAULT_PARAMS) -> HyperbolicStructure:
    """Complete three lengths to a structure by solving the defining quadratic.

    ``root_choice`` picks which of the two real roots ("Smaller"/"Larger")
    fills the missing coordinate; both are geometrically meaningful (the two
    flips of the fourth curve).
    """
    if root_choice not in ("Smaller", "Larger"):
        raise ValueError("root_choice must be 'Smaller' or 'Larger'")
    partial = tuple(length_to_coordinate(l) for l in lengths)
    lo, hi = solve_missing_coordinate(params, partial)
    chosen = lo if root_choice == "Smaller" else hi
    if chosen <= 0:
        raise NoRealSolution(f"chosen root {chosen} not positive")
    # quadratic completion is on-variety by construction
    return HyperbolicStructure(partial + (chosen,), DEFAULT_TOLERANCE, params)


def count_one_sided_geodesics(structure: HyperbolicStructure, max_length: float,
                              *, k_radius: Optional[float] = None,
                              threads: int = 1, backend: str = "auto",
                              depth_cap: Optional[int] = None) -> GeodesicCount:
    """Orbit ball count at the threshold sqrt(2 sinh(L/2)), flagged as raw.

    The returned count equals the one-sided simple-closed-geodesic count up
    to a bounded additive correction (finitely many curves near the compact
    set); the caveat flag is always set.
    """
    if max_length <= 0:
        raise NonPositiveLength(f"max_length must be positive, got {max_length}")
    log_threshold = log_length_to_coordinate(max_length)
    spec = orbit_spec_for(structure, k_radius=k_radius)
    q = BallQuery.from_log_radius(log_threshold, depth_cap=depth_cap)
    result = count_ball(spec, q, threads=threads, backend=backend)
    return GeodesicCount(raw_count=result.total, log_threshold=log_threshold,
                         caveat=True, result=result)


def orbit_spec_for(structure: HyperbolicStructure,
                   k_radius: Optional[float] = None) -> OrbitSpec:
    """Build the enumeration spec rooted at the structure's variety point."""
    kw = {} if k_radius is None else {"k_radius": k_radius}
    if structure.is_exact():
        base = ExactPoint.make(structure.params, structure.base_point)
    else:
        base = LogPoint.from_coords(
            tuple(float(c) for c in structure.base_point))
    return OrbitSpec(params=structure.params, base=base, **kw)
