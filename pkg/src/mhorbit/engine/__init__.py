"""Orbit-ball enumeration engine: counting, visiting, sub-orbit roots, checkpoints."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import mpmath as mp
import numpy as np

from ..errors import DepthCapHit, DigestMismatch, EmptyBall, PartialTraversal
from ..logspace import LogPoint, float_log
from ..variety import ExactPoint, VarietyParams, moved_coordinate
from .traversal import (
    BOUNDARY_TOL,
    DEFAULT_DEPTH_CAP,
    LN10,
    BallQuery,
    Checkpoint,
    CountResult,
    OrbitSpec,
    TraversalState,
    traverse,
)

__all__ = [
    "OrbitSpec", "BallQuery", "CountResult", "Checkpoint", "TraversalState",
    "count_ball", "enumerate_ball", "suborbit_roots", "run_partial",
    "checkpoint_save", "checkpoint_resume", "traverse", "traverse_exact",
    "LN10", "DEFAULT_DEPTH_CAP",
]

# exact backend is the default for modest radii on integer bases
_EXACT_CUTOFF_LOG = 30.0


def _below_log(value_ln_hint: float, exact_value, threshold: float,
               radius: Optional[Fraction]) -> bool:
    """Inclusive ball membership for an exact coordinate value."""
    if radius is not None:
        return exact_value <= radius
    if abs(value_ln_hint - threshold) > 1e-9:
        return value_ln_hint <= threshold
    with mp.workprec(256):
        if hasattr(exact_value, "denominator") and exact_value.denominator != 1:
            ln = mp.log(mp.mpf(exact_value.numerator)) - mp.log(mp.mpf(exact_value.denominator))
        else:
            ln = mp.log(mp.mpf(int(exact_value)))
        return ln <= mp.mpf(threshold) + BOUNDARY_TOL


def traverse_exact(spec: OrbitSpec, thresholds, *, exact_radii=None,
                   depth_cap: Optional[int] = None,
                   visitor: Optional[Callable] = None) -> TraversalState:
    """Reference traversal with exact big-integer/rational arithmetic.

    Same counting semantics and pruning rule as the vectorized log-space
    traversal, but every comparison is exact.  Intended for modest radii.
    """
    if not spec.is_exact:
        raise ValueError("exact traversal requires an exact base point")
    thresholds = [float(t) for t in thresholds]
    if exact_radii is None:
        exact_radii = [None] * len(thresholds)
    depth_cap = DEFAULT_DEPTH_CAP if depth_cap is None else depth_cap
    params = spec.params
    n_t = len(thresholds)
    bins_by_depth: List[np.ndarray] = []
    truncated = False

    def classify(maxv) -> int:
        ln = float_log(maxv)
        b = 0
        for t, r in zip(thresholds, exact_radii):
            if _below_log(ln, maxv, t, r):
                break
            b += 1
        return b

    def inside_k(maxv) -> bool:
        ln = float_log(maxv)
        if abs(ln - spec.k_radius) > 1e-9:
            return ln <= spec.k_radius
        with mp.workprec(256):
            lnm = mp.log(mp.mpf(int(maxv))) if not hasattr(maxv, "denominator") \
                or maxv.denominator == 1 else \
                mp.log(mp.mpf(maxv.numerator)) - mp.log(mp.mpf(maxv.denominator))
            return lnm <= mp.mpf(spec.k_radius) + BOUNDARY_TOL

    base = spec.base
    frontier = [(base.coords, 0, ())]  # (coords, banned letter 1-based or 0, word)
    b0 = classify(max(base.coords))
    bins_by_depth.append(np.bincount([b0], minlength=n_t + 1).astype(np.int64))
    if visitor is not None and b0 < n_t:
        _call_visitor(visitor, (), ExactPoint(params, base.coords))
    depth = 0
    while frontier:
        if depth >= depth_cap:
            truncated = True
            break
        nxt = []
        level_bins = []
        for coords, banned, word in frontier:
            for j in range(1, params.n + 1):
                if j == banned:
                    continue
                if depth == 0 and not word and j in spec.forbidden_first_moves:
                    continue
                new = moved_coordinate(params, coords, j)
                child = coords[: j - 1] + (new,) + coords[j:]
                maxv = max(child)
                b = classify(maxv)
                level_bins.append(b)
                cword = word + (j,)
                if visitor is not None and b < n_t:
                    _call_visitor(visitor, cword, ExactPoint(params, child))
                others_max = max(c for i, c in enumerate(child) if i != j - 1)
                prunable = b >= n_t and not inside_k(maxv) and new > others_max
                if not prunable:
                    nxt.append((child, j, cword))
        bins_by_depth.append(np.bincount(level_bins, minlength=n_t + 1).astype(np.int64)
                             if level_bins else np.zeros(n_t + 1, np.int64))
        frontier = nxt
        depth += 1
    return TraversalState(bins_by_depth, 0, truncated, depth, None, n_t)


def _call_visitor(visitor, word, point):
    try:
        visitor(word, point)
    except Exception as exc:
        raise PartialTraversal("visitor raised during traversal", cause=exc) from exc


def _pick_backend(spec: OrbitSpec, q: BallQuery, backend: str) -> str:
    if backend != "auto":
        return backend
    if spec.is_exact and q.log_radius <= _EXACT_CUTOFF_LOG:
        return "exact"
    return "log"


def _result_from_state(state: TraversalState) -> CountResult:
    by_depth = state.by_depth(0)
    return CountResult(
        total=sum(by_depth),
        by_depth=by_depth,
        indeterminate_resolved=state.esc_count,
        truncated_by_depth_cap=state.truncated,
    )


def count_ball(spec: OrbitSpec, q: BallQuery, *, threads: int = 1,
               backend: str = "auto") -> CountResult:
    """Count tree nodes g (reduced words, base included) with max g.o <= e^logR."""
    backend = _pick_backend(spec, q, backend)
    if backend == "exact":
        state = traverse_exact(spec, [q.log_radius], exact_radii=[q.radius],
                               depth_cap=q.depth_cap)
    else:
        state = traverse(spec, [q.log_radius], exact_radii=[q.radius],
                         depth_cap=q.depth_cap, threads=threads)
    return _result_from_state(state)


def enumerate_ball(spec: OrbitSpec, q: BallQuery, visitor: Callable, *,
                   threads: int = 1, backend: str = "auto") -> CountResult:
    """Invoke ``visitor(word, point)`` once per in-ball node.

    The exact backend passes an :class:`ExactPoint`; the log backend passes
    the node's coordinate-log array.  Visitation order is unspecified.
    """
    backend = _pick_backend(spec, q, backend)
    if backend == "exact":
        state = traverse_exact(spec, [q.log_radius], exact_radii=[q.radius],
                               depth_cap=q.depth_cap, visitor=visitor)
    else:
        state = traverse(spec, [q.log_radius], exact_radii=[q.radius],
                         depth_cap=q.depth_cap, threads=threads, visitor=visitor)
    return _result_from_state(state)


def run_partial(spec: OrbitSpec, q: BallQuery, *, pause_depth: int,
                threads: int = 1) -> TraversalState:
    """Run the log-backend traversal up to ``pause_depth`` and stop there."""
    return traverse(spec, [q.log_radius], exact_radii=[q.radius],
                    depth_cap=q.depth_cap, threads=threads, pause_depth=pause_depth)


def checkpoint_save(spec: OrbitSpec, q: BallQuery, state: TraversalState,
                    path: str) -> Checkpoint:
    ck = Checkpoint(
        frontier=state.frontier_words or [],
        spec_digest=spec.digest(),
        query_digest=q.digest(),
        bins=[list(map(int, b)) for b in state.bins_by_depth],
        esc=state.esc_count,
        depth=state.depth,
        truncated=state.truncated,
    )
    with open(path, "w") as fh:
        json.dump(ck.to_json(), fh)
    return ck


def checkpoint_resume(spec: OrbitSpec, q: BallQuery, path: str, *,
                      threads: int = 1) -> CountResult:
    with open(path) as fh:
        ck = Checkpoint.from_json(json.load(fh))
    if ck.spec_digest != spec.digest():
        raise DigestMismatch("checkpoint was written for a different orbit spec")
    if ck.query_digest != q.digest():
        raise DigestMismatch("checkpoint was written for a different query")
    resume_state = {
        "frontier": ck.frontier,
        "bins": ck.bins,
        "esc": ck.esc,
        "depth": ck.depth,
        "truncated": ck.truncated,
    }
    state = traverse(spec, [q.log_radius], exact_radii=[q.radius],
                     depth_cap=q.depth_cap, threads=threads,
                     resume_state=resume_state)
    return _result_from_state(state)


def suborbit_roots(spec: OrbitSpec, k_radius: Optional[float] = None,
                   depth_cap: int = DEFAULT_DEPTH_CAP):
    """Orbit points one move outside K, each with the move index back into K.

    The base must lie inside K.  Returns ``[(point, j0), ...]`` sorted for
    determinism; ``j0`` is the letter whose move returns the root to K.
    """
    k = spec.k_radius if k_radius is None else float(k_radius)
    if spec.is_exact:
        return _suborbit_roots_exact(spec, k, depth_cap)
    return _suborbit_roots_log(spec, k, depth_cap)


def _suborbit_roots_exact(spec: OrbitSpec, k: float, depth_cap: int):
    params = spec.params

    def inside(maxv):
        ln = float_log(maxv)
        if abs(ln - k) > 1e-9:
            return ln <= k
        with mp.workprec(256):
            lnm = mp.log(mp.mpf(int(maxv))) if not hasattr(maxv, "denominator") \
                or maxv.denominator == 1 else \
                mp.log(mp.mpf(maxv.numerator)) - mp.log(mp.mpf(maxv.denominator))
            return lnm <= mp.mpf(k) + BOUNDARY_TOL

    if not inside(max(spec.base.coords)):
        raise ValueError("base point must lie inside K")
    roots = []
    frontier = [(spec.base.coords, 0)]
    depth = 0
    while frontier:
        if depth >= depth_cap:
            raise DepthCapHit(f"K interior not exhausted within depth cap {depth_cap}")
        nxt = []
        for coords, banned in frontier:
            for j in range(1, params.n + 1):
                if j == banned:
                    continue
                new = moved_coordinate(params, coords, j)
                child = coords[: j - 1] + (new,) + coords[j:]
                if inside(max(child)):
                    nxt.append((child, j))
                else:
                    roots.append((ExactPoint(params, child), j))
        frontier = nxt
        depth += 1
    roots.sort(key=lambda item: (tuple(map(float, item[0].coords)), item[1]))
    return roots


def _suborbit_roots_log(spec: OrbitSpec, k: float, depth_cap: int):
    params = spec.params
    loga = float_log(params.a) if params.a != 1 else 0.0
    tol = 1e-9

    def move_logs(logs, j):
        others = [logs[i] for i in range(params.n) if i != j - 1]
        omax = max(others)
        if logs[j - 1] >= omax:
            m2 = 2.0 * omax
            new = m2 + math.log(sum(math.exp(2.0 * x - m2) for x in others)) - logs[j - 1]
        else:
            s = loga + sum(others)
            new = s + math.log1p(-math.exp(logs[j - 1] - s))
        return logs[: j - 1] + (new,) + logs[j:]

    base_logs = tuple(spec.base.float_logs())
    if max(base_logs) > k + tol:
        raise ValueError("base point must lie inside K")
    roots = []
    frontier = [(base_logs, 0)]
    depth = 0
    while frontier:
        if depth >= depth_cap:
            raise DepthCapHit(f"K interior not exhausted within depth cap {depth_cap}")
        nxt = []
        for logs, banned in frontier:
            for j in range(1, params.n + 1):
                if j == banned:
                    continue
                child = move_logs(logs, j)
                if max(child) <= k + tol:
                    nxt.append((child, j))
                else:
                    mp_logs = tuple(mp.mpf(x) for x in child)
                    roots.append((LogPoint(mp_logs, 1e-9, 53), j))
        frontier = nxt
        depth += 1
    roots.sort(key=lambda item: (item[0].float_logs(), item[1]))
    return roots
