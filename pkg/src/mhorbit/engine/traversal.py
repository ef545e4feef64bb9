"""Pruned breadth-first traversal of the orbit tree.

Nodes are reduced words over the move alphabet; the traversal walks the tree
level by level with the vectorized kernels from :mod:`.kernels`, counting
nodes whose max coordinate is at or below each threshold.  A subtree is
pruned only when its root is certified above every threshold, certified
outside the compact set K, and its own letter is the certified strict
maximum (so every further move is outgoing and strictly grows the max).

Near-boundary comparisons are never guessed: the node's word is replayed
from the base at higher precision (exactly, for exact bases) before the
verdict is recorded.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import mpmath as mp
import numpy as np

from ..errors import CorruptCheckpoint, DepthCapHit, DigestMismatch, ErrorBudgetExceeded, PartialTraversal
from ..logspace import KAPPA, LogPoint, float_log
from ..variety import ExactPoint, VarietyParams, apply_word, coords_to_json, moved_coordinate
from . import kernels

LN10 = math.log(10.0)
DEFAULT_DEPTH_CAP = 10_000
# thresholds mathematically equal to an orbit value should include it; log-form
# thresholds within this tolerance of the (high-precision) orbit log count as ties
BOUNDARY_TOL = 1e-12
_KAPPA_EPS = KAPPA * 2.0 ** -52
# first-order error bounds compound along deep descent chains; once a row's
# bound passes REFRESH_ERR its state is recomputed from its word at high
# precision (exactly, for exact bases), resetting the bound near ulp level
REFRESH_ERR = 1e-8

BasePoint = Union[ExactPoint, LogPoint]


@dataclass(frozen=True)
class OrbitSpec:
    """One enumeration problem: variety, base point, compact set, root bans."""

    params: VarietyParams
    base: BasePoint
    k_radius: float = LN10
    forbidden_first_moves: frozenset = frozenset()

    def __post_init__(self):
        if self.k_radius < LN10 - 1e-12:
            raise ValueError("k_radius must be at least ln 10")
        object.__setattr__(self, "forbidden_first_moves",
                           frozenset(int(j) for j in self.forbidden_first_moves))
        for j in self.forbidden_first_moves:
            if not 1 <= j <= self.params.n:
                raise ValueError(f"forbidden move {j} out of range")

    @property
    def is_exact(self) -> bool:
        return isinstance(self.base, ExactPoint)

    def base_float_state(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.is_exact:
            logs = np.array([float_log(c) for c in self.base.coords])
            errs = _KAPPA_EPS * np.maximum(np.abs(logs), 1.0)
        else:
            logs = np.array(self.base.float_logs())
            errs = np.maximum(self.base.err_bound,
                              _KAPPA_EPS * np.maximum(np.abs(logs), 1.0)) * np.ones_like(logs)
        return logs, errs

    @property
    def base_max_log(self) -> float:
        return float(np.max(self.base_float_state()[0]))

    def digest(self) -> str:
        if self.is_exact:
            base = coords_to_json(self.base.coords)
        else:
            base = [repr(float(x)) for x in self.base.logs]
        payload = {
            "n": self.params.n,
            "a": f"{self.params.a.numerator}/{self.params.a.denominator}",
            "base": base,
            "kRadius": repr(self.k_radius),
            "forbidden": sorted(self.forbidden_first_moves),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class BallQuery:
    """Ball threshold on the log of the sup norm."""

    log_radius: float
    count_only: bool = True
    depth_cap: Optional[int] = None
    radius: Optional[Fraction] = None  # exact form, when known

    @classmethod
    def from_radius(cls, r, **kw) -> "BallQuery":
        return cls(log_radius=math.log(float(r)), radius=Fraction(r), **kw)

    @classmethod
    def from_log_radius(cls, x: float, **kw) -> "BallQuery":
        return cls(log_radius=float(x), **kw)

    def __post_init__(self):
        if not math.isfinite(self.log_radius):
            raise ValueError("log_radius must be finite")

    def digest(self) -> str:
        payload = {
            "logR": repr(self.log_radius),
            "radius": None if self.radius is None
            else f"{self.radius.numerator}/{self.radius.denominator}",
            "depthCap": self.depth_cap,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


@dataclass
class CountResult:
    total: int
    by_depth: List[int]
    indeterminate_resolved: int
    truncated_by_depth_cap: bool

    def to_json(self) -> dict:
        return {
            "formatVersion": 1,
            "total": self.total,
            "byDepth": self.by_depth,
            "indeterminateResolved": self.indeterminate_resolved,
            "truncatedByDepthCap": self.truncated_by_depth_cap,
        }


class _Spine:
    """Parent/letter chains for expanded nodes, for word reconstruction."""

    def __init__(self, prefix_words: List[Tuple[int, ...]]):
        self.prefix_words = prefix_words
        self.level_parents: List[np.ndarray] = []
        self.level_letters: List[np.ndarray] = []
        self.offsets = [0, len(prefix_words)]  # gid range of each level

    def add_level(self, parents_gid: np.ndarray, letters: np.ndarray) -> int:
        self.level_parents.append(parents_gid.astype(np.int64))
        self.level_letters.append(letters.astype(np.int8))
        start = self.offsets[-1]
        self.offsets.append(start + len(parents_gid))
        return start

    def word(self, gid: int) -> Tuple[int, ...]:
        letters = []
        while gid >= self.offsets[1]:
            level = bisect.bisect_right(self.offsets, gid) - 1
            local = gid - self.offsets[level]
            letters.append(int(self.level_letters[level - 1][local]) + 1)
            gid = int(self.level_parents[level - 1][local])
        prefix = self.prefix_words[gid]
        return prefix + tuple(reversed(letters))


@dataclass
class TraversalState:
    """Result of a (possibly paused) traversal."""

    bins_by_depth: List[np.ndarray]
    esc_count: int
    truncated: bool
    depth: int
    frontier_words: Optional[List[Tuple[int, ...]]]  # None when finished
    n_thresholds: int

    @property
    def done(self) -> bool:
        return self.frontier_words is None

    def totals(self) -> List[int]:
        """Cumulative count per threshold (ascending thresholds)."""
        out = []
        for k in range(self.n_thresholds):
            out.append(int(sum(int(b[: k + 1].sum()) for b in self.bins_by_depth)))
        return out

    def by_depth(self, k: int = 0) -> List[int]:
        return [int(b[: k + 1].sum()) for b in self.bins_by_depth]


class _Escalator:
    """Resolves near-boundary ball comparisons by replaying words exactly."""

    def __init__(self, spec: OrbitSpec, thresholds: Sequence[float],
                 exact_radii: Sequence[Optional[Fraction]]):
        self.spec = spec
        self.thresholds = list(thresholds)
        self.exact_radii = list(exact_radii)
        self.count = 0

    def resolve(self, word: Tuple[int, ...]) -> Tuple[int, float]:
        """Return (bin, certified log of max coordinate) for a word."""
        self.count += 1
        if self.spec.is_exact:
            point = apply_word(self.spec.params, self.spec.base, word)
            maxv = point.max_coord
            with mp.workprec(256):
                if hasattr(maxv, "denominator") and maxv.denominator != 1:
                    lnmax = mp.log(mp.mpf(maxv.numerator)) - mp.log(mp.mpf(maxv.denominator))
                else:
                    lnmax = mp.log(mp.mpf(int(maxv)))
                lnmax_f = float(lnmax)
                bin_ = 0
                for t, r in zip(self.thresholds, self.exact_radii):
                    if r is not None:
                        below = maxv <= r
                    else:
                        below = lnmax <= mp.mpf(t) + BOUNDARY_TOL
                    if below:
                        break
                    bin_ += 1
            return bin_, lnmax_f
        return self._resolve_real(word)

    def _resolve_real(self, word: Tuple[int, ...]) -> Tuple[int, float]:
        bits = max(2 * self.spec.base.bits, 128, 64 + int(1.7 * len(word)))
        for _ in range(3):
            lnmax, err = _mp_replay_max(self.spec, word, bits)
            gaps_ok = all(
                abs(lnmax - t) <= BOUNDARY_TOL or abs(lnmax - t) > err
                for t in self.thresholds
            )
            if gaps_ok:
                bin_ = sum(1 for t in self.thresholds if lnmax > t + BOUNDARY_TOL)
                return bin_, lnmax
            bits *= 2
        raise ErrorBudgetExceeded(
            f"could not separate word {word} from thresholds at {bits // 2} bits")


def _mp_replay_max(spec: OrbitSpec, word: Sequence[int], bits: int) -> Tuple[float, float]:
    """Replay a word from the base in mpmath; max log and its error bound."""
    logs, errs = _mp_replay_state(spec, word, bits)
    idx = max(range(len(logs)), key=lambda k: logs[k])
    return logs[idx], errs[idx]


def _mp_replay_state(spec: OrbitSpec, word: Sequence[int], bits: int) -> Tuple[List[float], List[float]]:
    """Replay a word from the base in mpmath, with first-order error tracking."""
    n = spec.params.n
    eps = 2.0 ** (1 - bits)
    with mp.workprec(bits):
        loga = mp.log(mp.mpf(spec.params.a.numerator)) - mp.log(mp.mpf(spec.params.a.denominator))
        if spec.is_exact:
            logs = [mp.log(mp.mpf(c)) for c in spec.base.coords]
            errs = [eps * max(abs(float(x)), 1.0) for x in logs]
        else:
            logs = list(spec.base.logs)
            errs = [max(spec.base.err_bound, eps * max(abs(float(x)), 1.0)) for x in logs]
        for letter in word:
            j = letter - 1
            others = [logs[k] for k in range(n) if k != j]
            others_e = [errs[k] for k in range(n) if k != j]
            omax = max(others)
            if logs[j] >= omax:
                m2 = 2 * omax
                new = m2 + mp.log(mp.fsum(mp.e ** (2 * x - m2) for x in others)) - logs[j]
                e_new = 2.0 * max(others_e) + errs[j] + KAPPA * eps * max(abs(float(new)), 1.0)
            else:
                s = loga + mp.fsum(others)
                r = mp.e ** (logs[j] - s)
                rf = min(float(r), 0.9999999)
                new = s + mp.log1p(-r)
                e_new = (sum(others_e) + rf * errs[j]) / (1.0 - rf) \
                    + KAPPA * eps * max(abs(float(new)), 1.0)
            logs[j] = new
            errs[j] = e_new
        return [float(x) for x in logs], list(errs)


def _refresh_state(spec: OrbitSpec, word: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Trusted float state for a word, independent of the float path to it."""
    if spec.is_exact:
        point = apply_word(spec.params, spec.base, word)
        with mp.workprec(192):
            logs = np.array([float(mp.log(mp.mpf(c)) if not hasattr(c, "denominator")
                             or c.denominator == 1 else
                             mp.log(mp.mpf(c.numerator)) - mp.log(mp.mpf(c.denominator)))
                             for c in point.coords])
        errs = 2.0 ** -50 * np.maximum(np.abs(logs), 1.0)
        return logs, errs
    bits = 64 + int(1.7 * len(word))
    if not spec.is_exact:
        bits = max(bits, 2 * spec.base.bits)
    for _ in range(3):
        logs, errs = _mp_replay_state(spec, word, bits)
        if max(errs) < 0.5 * REFRESH_ERR:
            logs = np.array(logs)
            return logs, np.maximum(np.array(errs),
                                    2.0 ** -50 * np.maximum(np.abs(logs), 1.0))
        bits *= 2
    raise ErrorBudgetExceeded(
        f"could not refresh word of length {len(word)} below {REFRESH_ERR}")


def _refresh_rows(spec: OrbitSpec, spine: "_Spine", gid_start: int,
                  logs: np.ndarray, errs: np.ndarray) -> None:
    """Refresh (in place) every kept row whose error bound is too large."""
    stale = np.nonzero(errs.max(axis=1) > REFRESH_ERR)[0]
    for i in stale:
        word = spine.word(gid_start + int(i))
        logs[i], errs[i] = _refresh_state(spec, word)


def _replay_row(spec: OrbitSpec, word: Sequence[int], loga: float,
                base_logs: np.ndarray, base_errs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Reproduce a frontier row bit-for-bit, including any refreshes the
    original traversal applied along the way."""
    logs, errs = base_logs.copy(), base_errs.copy()
    for k, letter in enumerate(word):
        logs, errs = kernels.replay_word(logs, errs, [letter - 1], loga)
        if errs.max() > REFRESH_ERR:
            logs, errs = _refresh_state(spec, word[: k + 1])
    return logs, errs


def _expand_chunked(logs, errs, banned, loga, pool, threads):
    if pool is None or logs.shape[0] < 2 * threads:
        return kernels.expand_level(logs, errs, banned, loga)
    idx = np.array_split(np.arange(logs.shape[0]), threads)
    parts = list(pool.map(
        lambda ix: kernels.expand_level(logs[ix], errs[ix], banned[ix], loga), idx))
    out = []
    for k in range(7):
        pieces = [p[k] for p in parts]
        out.append(np.concatenate(pieces))
    # parent indices are chunk-local; shift back to frontier-local
    shift = np.concatenate([np.full(len(p[3]), ix[0], np.int64)
                            for p, ix in zip(parts, idx)])
    out[3] = out[3] + shift
    return tuple(out)


def traverse(spec: OrbitSpec, thresholds: Sequence[float], *,
             exact_radii: Optional[Sequence[Optional[Fraction]]] = None,
             depth_cap: Optional[int] = None,
             threads: int = 1,
             visitor=None,
             pause_depth: Optional[int] = None,
             resume_state: Optional[dict] = None) -> TraversalState:
    """Multi-threshold certified ball count over the orbit tree.

    ``thresholds`` must be ascending (log scale).  Each counted node lands in
    the bin of the lowest threshold that contains it.  With ``pause_depth``
    the traversal stops after that depth and reports its frontier words.
    """
    thresholds = [float(t) for t in thresholds]
    if sorted(thresholds) != thresholds:
        raise ValueError("thresholds must be ascending")
    if exact_radii is None:
        exact_radii = [None] * len(thresholds)
    depth_cap = DEFAULT_DEPTH_CAP if depth_cap is None else depth_cap
    t_arr = np.array(thresholds)
    n_t = len(thresholds)
    top = thresholds[-1]
    esc = _Escalator(spec, thresholds, exact_radii)
    loga = float_log(spec.params.a) if spec.params.a != 1 else 0.0
    base_logs, base_errs = spec.base_float_state()
    n = spec.params.n

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        if resume_state is None:
            spine = _Spine([()])
            bins_by_depth = [np.zeros(n_t + 1, np.int64)]
            # depth 0: the base itself
            base_bin, base_ln = _classify_rows(
                np.array([base_logs.max()]), np.array([base_errs.max()]),
                t_arr, esc, spine, np.array([0]), record_ln=True)
            bins_by_depth[0][base_bin[0]] += 1
            if visitor is not None and base_bin[0] < n_t:
                visitor((), base_logs.copy())
            logs = base_logs.reshape(1, -1).copy()
            errs = base_errs.reshape(1, -1).copy()
            banned = np.full(1, -1, np.int8)
            gid_start = 0
            depth = 0
            truncated = False
        else:
            words = [tuple(w) for w in resume_state["frontier"]]
            spine = _Spine(words)
            bins_by_depth = [np.array(b, np.int64) for b in resume_state["bins"]]
            esc.count = resume_state["esc"]
            depth = resume_state["depth"]
            truncated = resume_state["truncated"]
            if not words:
                return TraversalState(bins_by_depth, esc.count, truncated,
                                      depth, None, n_t)
            rows = [_replay_row(spec, word, loga, base_logs, base_errs)
                    for word in words]
            logs = np.stack([r[0] for r in rows])
            errs = np.stack([r[1] for r in rows])
            banned = np.array([(w[-1] - 1) if w else -1 for w in words], np.int8)
            gid_start = 0

        while logs.shape[0] > 0:
            if pause_depth is not None and depth >= pause_depth:
                frontier_words = [spine.word(gid_start + i) for i in range(logs.shape[0])]
                return TraversalState(bins_by_depth, esc.count, truncated,
                                      depth, frontier_words, n_t)
            if depth >= depth_cap:
                truncated = True
                break

            cl, ce, letter, parent, maxlog, maxerr, strict = _expand_chunked(
                logs, errs, banned, loga, pool, threads)
            if depth == 0 and resume_state is None and spec.forbidden_first_moves:
                allowed = ~np.isin(letter + 1, sorted(spec.forbidden_first_moves))
                cl, ce, letter, parent = cl[allowed], ce[allowed], letter[allowed], parent[allowed]
                maxlog, maxerr, strict = maxlog[allowed], maxerr[allowed], strict[allowed]

            parent_gid = parent + gid_start
            bins, ln_resolved = _classify_rows(maxlog, maxerr, t_arr, esc, spine,
                                               parent_gid, letters=letter)
            counts = np.bincount(bins, minlength=n_t + 1)
            bins_by_depth.append(counts.astype(np.int64))

            if visitor is not None:
                in_ball = np.nonzero(bins < n_t)[0]
                for i in in_ball:
                    word = spine.word(int(parent_gid[i])) + (int(letter[i]) + 1,)
                    try:
                        visitor(word, cl[i].copy())
                    except Exception as exc:
                        raise PartialTraversal(
                            "visitor raised during traversal", cause=exc) from exc

            lo = maxlog - maxerr
            if ln_resolved is not None:
                lo = lo.copy()
                for i, v in ln_resolved.items():
                    lo[i] = v
            above_top = bins >= n_t
            outside_k = lo > spec.k_radius
            keep = ~(above_top & outside_k & strict)
            kept = np.nonzero(keep)[0]
            gid_start = spine.add_level(parent_gid[kept], letter[kept])
            logs = cl[kept]
            errs = ce[kept]
            banned = letter[kept].astype(np.int8)
            _refresh_rows(spec, spine, gid_start, logs, errs)
            depth += 1

        return TraversalState(bins_by_depth, esc.count, truncated, depth, None, n_t)
    finally:
        if pool is not None:
            pool.shutdown()


def _classify_rows(maxlog, maxerr, t_arr, esc: _Escalator, spine: _Spine,
                   parent_gid, letters=None, record_ln=False):
    """Certified bin per row; escalates rows whose error band straddles a threshold."""
    lo = np.searchsorted(t_arr, maxlog - maxerr, side="left")
    hi = np.searchsorted(t_arr, maxlog + maxerr, side="left")
    bins = lo.astype(np.int64)
    unsure = np.nonzero(lo != hi)[0]
    ln_resolved = {} if (len(unsure) or record_ln) else None
    for i in unsure:
        if letters is None:
            word = spine.word(int(parent_gid[i]))
        else:
            word = spine.word(int(parent_gid[i])) + (int(letters[i]) + 1,)
        bins[i], ln = esc.resolve(word)
        ln_resolved[int(i)] = ln
    return bins, ln_resolved


# --- checkpointing -----------------------------------------------------------

CHECKPOINT_VERSION = 1


@dataclass
class Checkpoint:
    frontier: List[Tuple[int, ...]]
    spec_digest: str
    query_digest: str
    version: int = CHECKPOINT_VERSION
    bins: List[List[int]] = field(default_factory=list)
    esc: int = 0
    depth: int = 0
    truncated: bool = False

    def to_json(self) -> dict:
        return {
            "formatVersion": self.version,
            "specDigest": self.spec_digest,
            "queryDigest": self.query_digest,
            "frontier": [list(w) for w in self.frontier],
            "bins": [list(map(int, b)) for b in self.bins],
            "esc": self.esc,
            "depth": self.depth,
            "truncated": self.truncated,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Checkpoint":
        try:
            if obj["formatVersion"] != CHECKPOINT_VERSION:
                raise CorruptCheckpoint(f"unsupported version {obj['formatVersion']}")
            ck = cls(
                frontier=[tuple(int(x) for x in w) for w in obj["frontier"]],
                spec_digest=obj["specDigest"],
                query_digest=obj["queryDigest"],
                bins=obj["bins"],
                esc=int(obj["esc"]),
                depth=int(obj["depth"]),
                truncated=bool(obj["truncated"]),
            )
        except KeyError as exc:
            raise CorruptCheckpoint(f"missing field {exc}") from exc
        _check_frontier_invariant(ck.frontier)
        return ck


def _check_frontier_invariant(frontier):
    words = sorted(frontier)
    for a, b in zip(words, words[1:]):
        if b[: len(a)] == a:
            raise CorruptCheckpoint(f"frontier words {a} and {b} are prefix-comparable")
