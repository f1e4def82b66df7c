"""Velocity-model association over whole videos.

The chain objective scores a sequence of matching vectors M_0..M_{f-2}
as h1(M_0) + sum over t of h_t(M_{t-1}, M_t), where h1 scores the first
pair under a zero-prior-velocity position model and each later stage t
scores the triple of frames (t-1, t, t+1): objects chained through all
three frames pay a Gaussian on their velocity change, objects that
appeared at frame t pay a position Gaussian on their displacement, and
every appearance or disappearance pays lambda_event.

The maximizer over the full matching spaces is exponential, so the
solver works on reduced candidate spaces: for each disappearance count
d near the bipartite solution's d*, the cheapest fixed-d matching and
all its single-pair entry exchanges. A backward dynamic program over
those spaces followed by a forward walk returns the exact optimum of
the restricted problem, with ties broken toward the lexicographically
smallest sequence of matching vectors.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from math import comb, perm

import numpy as np

from .assignment import (
    BipartiteConfig,
    fixed_d_matchings,
    resolve_gate_cost,
    solve_bmcf,
)
from .core import (
    DISAPPEAR,
    CandidateSpace,
    FrameSequence,
    InvalidConfigError,
    InvalidInputError,
    MatchingVector,
    SpaceCapError,
    TrajectorySet,
    assemble_trajectories,
)

_EVALUATION_MODES = ("vectorized", "full", "incremental")


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic Gaussian noise scales plus the per-event log penalty.

    sigmas holds one value per frame pair, or a single pooled value that
    applies everywhere. lambda_event is the log penalty charged once per
    appearance and once per disappearance; it must be nonpositive.
    """

    sigmas: tuple[float, ...]
    lambda_event: float
    sigma_floor: float = 1e-6

    def __post_init__(self):
        raw = self.sigmas if isinstance(self.sigmas, (tuple, list, np.ndarray)) else (self.sigmas,)
        sig = tuple(float(s) for s in raw)
        if not sig:
            raise InvalidConfigError("at least one sigma is required")
        floor = float(self.sigma_floor)
        if not math.isfinite(floor) or floor <= 0:
            raise InvalidConfigError("sigma_floor must be positive and finite")
        for s in sig:
            if not math.isfinite(s) or s < floor:
                raise InvalidConfigError(f"sigma {s} below the floor {floor}")
        lam = float(self.lambda_event)
        if not math.isfinite(lam) or lam > 0:
            raise InvalidConfigError("lambda_event must be finite and nonpositive")
        object.__setattr__(self, "sigmas", sig)
        object.__setattr__(self, "lambda_event", lam)
        object.__setattr__(self, "sigma_floor", floor)

    @classmethod
    def pooled(cls, sigma: float, lambda_event: float, sigma_floor: float = 1e-6) -> "NoiseModel":
        return cls(sigmas=(float(sigma),), lambda_event=lambda_event, sigma_floor=sigma_floor)

    def sigma_for_pair(self, k: int) -> float:
        if len(self.sigmas) == 1:
            return self.sigmas[0]
        return self.sigmas[k]


@dataclass(frozen=True)
class ReducedSpaceConfig:
    """delta bounds how far the candidate disappearance counts stray
    from the bipartite solution's d*."""

    delta: int = 1

    def __post_init__(self):
        d = self.delta
        if int(d) != d or d < 0:
            raise InvalidConfigError("delta must be a nonnegative integer")
        object.__setattr__(self, "delta", int(d))


def _log_gauss2(d2: float, scale2: float) -> float:
    """Log density of a 2D centered isotropic Gaussian at squared radius d2."""
    return -math.log(2.0 * math.pi * scale2) - d2 / (2.0 * scale2)


def pair_log_likelihood_first(
    frame_a, frame_b, m12: MatchingVector, noise: NoiseModel, dt: float = 1.0
) -> float:
    """Score of the first frame pair under the position model.

    Objects in the first frame carry no velocity history, so each
    matched pair pays a Gaussian on its raw displacement at scale
    dt*sigma, and every appearance and disappearance pays lambda_event.
    """
    a = np.asarray(frame_a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(frame_b, dtype=np.float64).reshape(-1, 2)
    if len(m12) != a.shape[0] or m12.n_next != b.shape[0]:
        raise InvalidInputError("matching vector inconsistent with the frame pair")
    scale2 = (dt * noise.sigma_for_pair(0)) ** 2
    total = noise.lambda_event * (m12.n_disappeared + m12.n_appeared)
    for i, j in enumerate(m12.entries):
        if j == DISAPPEAR:
            continue
        dx = b[j, 0] - a[i, 0]
        dy = b[j, 1] - a[i, 1]
        total += _log_gauss2(dx * dx + dy * dy, scale2)
    return float(total)


def _triple_term_fn(prev_f, mid_f, next_f, m_prev, noise, dt, pair_index):
    """Per-object scorer for the second matching of a triple.

    term(j, target) is object j's contribution when sent to target:
    lambda_event on DISAPPEAR, a velocity Gaussian when j is chained
    from the previous frame, a position Gaussian when j appeared at the
    middle frame.
    """
    sigma = noise.sigma_for_pair(pair_index)
    v_scale2 = sigma * sigma
    p_scale2 = (dt * sigma) ** 2
    lam = noise.lambda_event
    inv = m_prev.inverse()

    def term(j: int, target: int) -> float:
        if target == DISAPPEAR:
            return lam
        disp = next_f[target] - mid_f[j]
        i = inv.get(j)
        if i is None:
            return _log_gauss2(float(disp @ disp), p_scale2)
        dv = disp / dt - (mid_f[j] - prev_f[i]) / dt
        return _log_gauss2(float(dv @ dv), v_scale2)

    return term


def triple_log_likelihood(
    frame_prev,
    frame_mid,
    frame_next,
    m_prev: MatchingVector,
    m_next: MatchingVector,
    noise: NoiseModel,
    dt: float = 1.0,
    pair_index: int = 1,
) -> float:
    """Stage score h_t(m_prev, m_next) over three consecutive frames.

    pair_index selects the sigma of the (mid, next) pair when the noise
    model carries per-pair values.
    """
    prev_f = np.asarray(frame_prev, dtype=np.float64).reshape(-1, 2)
    mid_f = np.asarray(frame_mid, dtype=np.float64).reshape(-1, 2)
    next_f = np.asarray(frame_next, dtype=np.float64).reshape(-1, 2)
    if len(m_prev) != prev_f.shape[0] or m_prev.n_next != mid_f.shape[0]:
        raise InvalidInputError("m_prev inconsistent with the first frame pair")
    if len(m_next) != mid_f.shape[0] or m_next.n_next != next_f.shape[0]:
        raise InvalidInputError("m_next inconsistent with the second frame pair")
    term = _triple_term_fn(prev_f, mid_f, next_f, m_prev, noise, dt, pair_index)
    total = noise.lambda_event * m_next.n_appeared
    for j, target in enumerate(m_next.entries):
        total += term(j, target)
    return float(total)


def incremental_triple_score(
    frame_prev,
    frame_mid,
    frame_next,
    m_prev: MatchingVector,
    base: MatchingVector,
    base_score: float,
    swap: tuple[int, int],
    noise: NoiseModel,
    dt: float = 1.0,
    pair_index: int = 1,
) -> float:
    """Stage score of base with entries swap=(i, j) exchanged.

    The exchange keeps the matched-target set, so event penalties are
    unchanged and only the two affected objects are rescored.
    """
    i, j = swap
    ti, tj = base.entries[i], base.entries[j]
    if ti == tj:
        # injectivity forces both entries DISAPPEAR: identity exchange
        return float(base_score)
    prev_f = np.asarray(frame_prev, dtype=np.float64).reshape(-1, 2)
    mid_f = np.asarray(frame_mid, dtype=np.float64).reshape(-1, 2)
    next_f = np.asarray(frame_next, dtype=np.float64).reshape(-1, 2)
    term = _triple_term_fn(prev_f, mid_f, next_f, m_prev, noise, dt, pair_index)
    delta = term(i, tj) + term(j, ti) - term(i, ti) - term(j, tj)
    return float(base_score + delta)


# ---------------------------------------------------------------------------
# Candidate spaces.
# ---------------------------------------------------------------------------


def full_space_size(n_k: int, n_next: int) -> int:
    """Closed-form size of the full matching-vector space.

    Sum over feasible disappearance counts d of C(n_k, d) choices of
    disappearing objects times n_next!/(n_next - n_k + d)! injections of
    the survivors.
    """
    if n_k < 0 or n_next < 0:
        raise InvalidInputError("object counts must be nonnegative")
    lo = max(0, n_k - n_next)
    return sum(comb(n_k, d) * perm(n_next, n_k - d) for d in range(lo, n_k + 1))


def build_full_space(n_k: int, n_next: int, cap: int = 1_000_000) -> CandidateSpace:
    """Every valid matching vector for an (n_k, n_next) frame pair.

    Refuses with SpaceCapError when the closed-form size exceeds cap;
    the space grows factorially.
    """
    size = full_space_size(n_k, n_next)
    if size > cap:
        raise SpaceCapError(f"full space has {size} candidates, cap is {cap}")
    rows: list[list[int]] = []
    cur: list[int] = []
    used = [False] * n_next

    def rec(i: int) -> None:
        if i == n_k:
            rows.append(list(cur))
            return
        cur.append(DISAPPEAR)
        rec(i + 1)
        cur.pop()
        for t in range(n_next):
            if not used[t]:
                used[t] = True
                cur.append(t)
                rec(i + 1)
                cur.pop()
                used[t] = False

    rec(0)
    mat = np.array(rows, dtype=np.int64).reshape(len(rows), n_k)
    return CandidateSpace.build(mat, n_next=n_next)


def neighborhood(d_star: int, delta: int, n_a: int, n_b: int) -> range:
    """Feasible disappearance counts within delta of d_star."""
    lo = max(max(0, n_a - n_b), d_star - delta)
    hi = min(n_a, d_star + delta)
    return range(lo, hi + 1)


def build_reduced_space(
    frame_a,
    frame_b,
    d_star: int,
    cfg: ReducedSpaceConfig | None = None,
    bipartite_cfg: BipartiteConfig | None = None,
) -> CandidateSpace:
    """Candidate space around the fixed-d bipartite optima.

    For each feasible d within delta of d_star: the cheapest matching
    with exactly d disappearances plus every vector obtained from it by
    exchanging one pair of entry positions. Exchanging two DISAPPEAR
    entries is the identity and is skipped. Blocks for different d are
    disjoint because their disappearance counts differ.
    """
    del bipartite_cfg  # fixed-d matchings need no gate
    cfg = cfg or ReducedSpaceConfig()
    a = np.asarray(frame_a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(frame_b, dtype=np.float64).reshape(-1, 2)
    n_a, n_b = a.shape[0], b.shape[0]
    if not max(0, n_a - n_b) <= d_star <= n_a:
        raise InvalidInputError(f"d*={d_star} infeasible for frame sizes ({n_a}, {n_b})")
    ds = neighborhood(d_star, cfg.delta, n_a, n_b)
    if len(ds) == 0:
        raise InvalidConfigError(f"no feasible disappearance count near d*={d_star}")
    seeds = fixed_d_matchings(a, b, ds)
    rows: list[np.ndarray] = []
    info: list[tuple[int, int, int]] = []
    for d in ds:
        seed = seeds[d].as_array()
        seed_row = len(rows)
        rows.append(seed)
        info.append((seed_row, -1, -1))
        for i in range(n_a):
            for j in range(i + 1, n_a):
                if seed[i] == DISAPPEAR and seed[j] == DISAPPEAR:
                    continue
                vec = seed.copy()
                vec[i], vec[j] = vec[j], vec[i]
                rows.append(vec)
                info.append((seed_row, i, j))
    mat = np.array(rows, dtype=np.int64).reshape(len(rows), n_a)
    return CandidateSpace.build(mat, n_next=n_b, swap_info=np.array(info, dtype=np.int64))


# ---------------------------------------------------------------------------
# Dynamic program.
# ---------------------------------------------------------------------------


def _pair_scores_vectorized(frame_a, frame_b, matrix, noise, dt) -> np.ndarray:
    """pair_log_likelihood_first for every row of a candidate matrix."""
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    n_b = b.shape[0]
    scale2 = (dt * noise.sigma_for_pair(0)) ** 2
    const = -math.log(2.0 * math.pi * scale2)
    x = matrix
    matched = x >= 0
    if n_b == 0:
        # nothing to match, every entry is DISAPPEAR
        terms = np.zeros(x.shape)
    else:
        xc = np.where(matched, x, 0)
        disp = b[xc] - a[None, :, :]
        d2 = np.einsum("rjd,rjd->rj", disp, disp)
        terms = np.where(matched, const - d2 / (2.0 * scale2), 0.0)
    n_dis = (~matched).sum(axis=1)
    n_app = n_b - (matrix.shape[1] - n_dis)
    return terms.sum(axis=1) + noise.lambda_event * (n_dis + n_app)


def _fold_stage_vectorized(
    seq, sp_prev, sp_next, g_next, noise, t, chunk=256
) -> tuple[np.ndarray, np.ndarray]:
    """One backward DP step, g_prev(x) = max_y h_t(x, y) + g_next(y).

    Stage terms are assembled per predecessor chunk from (mid, next)
    lookup tables, so the full stage matrix is never materialized. When
    the successor space carries swap provenance, each swap column is
    scored from its seed column plus the terms of the two exchanged
    entries, which drops the per-column cost from O(n_mid) to O(1).
    Returns g_prev and the argmax successor row per predecessor row.
    """
    prev_f, mid_f, next_f = seq.frames[t - 1], seq.frames[t], seq.frames[t + 1]
    dt = seq.dt
    sigma = noise.sigma_for_pair(t)
    v_scale2 = sigma * sigma
    p_scale2 = (dt * sigma) ** 2
    v_const = -math.log(2.0 * math.pi * v_scale2)
    p_const = -math.log(2.0 * math.pi * p_scale2)
    lam = noise.lambda_event
    n_mid, n_next = mid_f.shape[0], next_f.shape[0]

    x = sp_next.matrix  # (C, n_mid)
    y = sp_prev.matrix  # (R, n_prev)
    n_rows, n_cols = y.shape[0], x.shape[0]
    disp = next_f[None, :, :] - mid_f[:, None, :]  # (n_mid, n_next, 2)
    v2 = disp / dt
    q2 = np.einsum("jld,jld->jl", v2, v2)
    pos_t = p_const - np.einsum("jld,jld->jl", disp, disp) / (2.0 * p_scale2)
    xc = x + 1  # shift targets so column 0 is the DISAPPEAR penalty
    appear = lam * (n_next - (x >= 0).sum(axis=1))  # (C,)

    info = sp_next.swap_info
    if info is not None:
        seed_cols = np.flatnonzero(info[:, 1] == -1)
        seed_pos = np.empty(n_cols, dtype=np.int64)
        seed_pos[seed_cols] = np.arange(seed_cols.shape[0])
        swap_cols = np.flatnonzero(info[:, 1] >= 0)
        s_of = info[swap_cols, 0]
        i_of = info[swap_cols, 1]
        j_of = info[swap_cols, 2]
        # exchanged targets, in the swapped vector and in its seed
        xi_new = xc[swap_cols, i_of]
        xj_new = xc[swap_cols, j_of]
        xi_old = xc[s_of, i_of]
        xj_old = xc[s_of, j_of]
        base_of = seed_pos[s_of]

    g_prev = np.empty(n_rows)
    back = np.empty(n_rows, dtype=np.int64)
    for r0 in range(0, n_rows, chunk):
        yb = y[r0 : r0 + chunk]
        nb = yb.shape[0]
        has = np.zeros((nb, n_mid), dtype=bool)
        pred = np.zeros((nb, n_mid), dtype=np.int64)
        bi, pi = np.nonzero(yb >= 0)
        has[bi, yb[bi, pi]] = True
        pred[bi, yb[bi, pi]] = pi
        if prev_f.shape[0] == 0:
            # no predecessors exist; placeholder zeros, masked out below
            prev_pos = np.zeros((nb, n_mid, 2))
        else:
            prev_pos = prev_f[pred]
        v1 = (mid_f[None, :, :] - prev_pos) / dt  # (nb, n_mid, 2)
        q1 = np.einsum("bjd,bjd->bj", v1, v1)
        dot = np.einsum("bjd,jld->bjl", v1, v2)
        t_vel = v_const - (q2[None, :, :] - 2.0 * dot + q1[:, :, None]) / (2.0 * v_scale2)
        terms = np.where(has[:, :, None], t_vel, pos_t[None, :, :])
        full = np.concatenate([np.full((nb, n_mid, 1), lam), terms], axis=2)
        if info is not None:
            seeds = np.zeros((nb, seed_cols.shape[0]))
            for j in range(n_mid):
                seeds += full[:, j, xc[seed_cols, j]]
            acc = np.empty((nb, n_cols))
            acc[:, seed_cols] = seeds
            acc[:, swap_cols] = (
                seeds[:, base_of]
                + full[:, i_of, xi_new] + full[:, j_of, xj_new]
                - full[:, i_of, xi_old] - full[:, j_of, xj_old]
            )
        else:
            acc = np.zeros((nb, n_cols))
            for j in range(n_mid):
                acc += full[:, j, xc[:, j]]
        vals = acc + appear[None, :] + g_next[None, :]
        bp = np.argmax(vals, axis=1)
        back[r0 : r0 + nb] = bp
        g_prev[r0 : r0 + nb] = vals[np.arange(nb), bp]
    return g_prev, back


def _stage_matrix_loop(seq, sp_prev, sp_next, noise, t, evaluation) -> np.ndarray:
    """Dense stage matrix via per-cell scoring, full or incremental."""
    prev_f, mid_f, next_f = seq.frames[t - 1], seq.frames[t], seq.frames[t + 1]
    dt = seq.dt
    info = sp_next.swap_info
    if evaluation == "incremental" and info is None:
        raise InvalidInputError("incremental evaluation needs swap provenance")
    nexts = list(sp_next.vectors())
    h = np.empty((len(sp_prev), len(sp_next)))
    for r, m_prev in enumerate(sp_prev.vectors()):
        if evaluation == "full":
            for c, m_next in enumerate(nexts):
                h[r, c] = triple_log_likelihood(
                    prev_f, mid_f, next_f, m_prev, m_next, noise, dt=dt, pair_index=t
                )
        else:
            seed_cols = np.flatnonzero(info[:, 1] == -1)
            for c in seed_cols:
                h[r, c] = triple_log_likelihood(
                    prev_f, mid_f, next_f, m_prev, nexts[c], noise, dt=dt, pair_index=t
                )
            for c in range(len(nexts)):
                s, i, j = info[c]
                if i == -1:
                    continue
                h[r, c] = incremental_triple_score(
                    prev_f, mid_f, next_f, m_prev, nexts[s], h[r, s], (i, j),
                    noise, dt=dt, pair_index=t,
                )
    return h


def solve_dp(
    seq: FrameSequence,
    spaces: list[CandidateSpace],
    noise: NoiseModel,
    evaluation: str = "vectorized",
) -> tuple[list[MatchingVector], float]:
    """Maximize the chain score over the product of candidate spaces.

    A backward value pass computes the best continuation of every
    candidate, storing argmax successors; the forward walk from the best
    first-pair candidate then reads off the optimal sequence. Spaces are
    lexicographically sorted and np.argmax keeps the first maximizer, so
    the walk returns the lexicographically smallest optimal sequence.
    """
    if evaluation not in _EVALUATION_MODES:
        raise InvalidConfigError(f"unknown evaluation mode {evaluation!r}")
    f = len(seq)
    if f < 2:
        raise InvalidInputError("need at least 2 frames")
    if len(spaces) != f - 1:
        raise InvalidInputError(f"need {f - 1} candidate spaces, got {len(spaces)}")
    for k, sp in enumerate(spaces):
        if len(sp) == 0:
            raise InvalidInputError(f"empty candidate space at pair {k}")
        if sp.n_from != seq.n_objects(k) or sp.n_next != seq.n_objects(k + 1):
            raise InvalidInputError(f"space {k} inconsistent with frame sizes")

    n_pairs = f - 1
    g = np.zeros(len(spaces[-1]))
    backs: list[np.ndarray | None] = [None] * (n_pairs - 1)
    for t in range(n_pairs - 1, 0, -1):
        if evaluation == "vectorized":
            g, bp = _fold_stage_vectorized(seq, spaces[t - 1], spaces[t], g, noise, t)
        else:
            h = _stage_matrix_loop(seq, spaces[t - 1], spaces[t], noise, t, evaluation)
            vals = h + g[None, :]
            bp = np.argmax(vals, axis=1)
            g = vals[np.arange(vals.shape[0]), bp]
        backs[t - 1] = bp

    if evaluation == "vectorized":
        h1 = _pair_scores_vectorized(
            seq.frames[0], seq.frames[1], spaces[0].matrix, noise, seq.dt
        )
    else:
        h1 = np.array(
            [
                pair_log_likelihood_first(seq.frames[0], seq.frames[1], m, noise, dt=seq.dt)
                for m in spaces[0].vectors()
            ]
        )
    totals = h1 + g
    start = int(np.argmax(totals))
    score = float(totals[start])
    idxs = [start]
    for t in range(1, n_pairs):
        idxs.append(int(backs[t - 1][idxs[-1]]))
    matchings = [spaces[t].vector_at(r) for t, r in enumerate(idxs)]
    return matchings, score


# ---------------------------------------------------------------------------
# Sigma estimation.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaEstimate:
    """Per-pair sigma estimates plus the pooled value.

    counts[k] is the number of 3-frame chained objects that informed
    pair k; pairs with no chains (always pair 0) inherit the pooled
    value. used_fallback marks the no-chains-anywhere case where the
    caller-supplied default was used.
    """

    sigmas: tuple[float, ...]
    pooled: float
    counts: tuple[int, ...]
    used_fallback: bool


def estimate_sigma(
    seq: FrameSequence,
    matchings,
    mode: str = "per-frame",
    sigma_floor: float = 1e-6,
    default_sigma: float = 1.0,
) -> SigmaEstimate:
    """Velocity-difference noise scale from a matching sequence.

    For every object chained through frames k-1, k, k+1 the velocity
    difference contributes its x and y squares; sigma_hat_k is the root
    mean of those squares (zero-mean convention). Pooled mode, and any
    pair without chains, uses the pool over all stages. With no chains
    anywhere the default is used and a warning is emitted.
    """
    f = len(seq)
    if len(matchings) != f - 1:
        raise InvalidInputError(f"need {f - 1} matching vectors, got {len(matchings)}")
    if mode not in ("per-frame", "pooled"):
        raise InvalidConfigError(f"unknown sigma mode {mode!r}")
    ss = [0.0] * (f - 1)
    cnt = [0] * (f - 1)
    for k in range(1, f - 1):
        m_prev, m_next = matchings[k - 1], matchings[k]
        prev_f, mid_f, next_f = seq.frames[k - 1], seq.frames[k], seq.frames[k + 1]
        inv = m_prev.inverse()
        for j, target in enumerate(m_next.entries):
            if target == DISAPPEAR:
                continue
            i = inv.get(j)
            if i is None:
                continue
            dv = (next_f[target] - mid_f[j]) / seq.dt - (mid_f[j] - prev_f[i]) / seq.dt
            ss[k] += float(dv @ dv)
            cnt[k] += 1
    total_cnt = sum(cnt)
    used_fallback = total_cnt == 0
    if used_fallback:
        warnings.warn("no 3-frame chains to estimate sigma from; using the default")
        pooled = max(float(default_sigma), sigma_floor)
    else:
        pooled = max(math.sqrt(sum(ss) / (2.0 * total_cnt)), sigma_floor)
    if mode == "pooled" or used_fallback:
        sigmas = (pooled,) * (f - 1)
    else:
        sigmas = tuple(
            max(math.sqrt(ss[k] / (2.0 * cnt[k])), sigma_floor) if cnt[k] else pooled
            for k in range(f - 1)
        )
    return SigmaEstimate(sigmas=sigmas, pooled=pooled, counts=tuple(cnt), used_fallback=used_fallback)


# ---------------------------------------------------------------------------
# Pipeline.
# ---------------------------------------------------------------------------

_CONFIG_KEYS = ("delta", "sigma_mode", "sigma_floor", "lambda_event", "gate_quantile", "space_cap")


@dataclass(frozen=True)
class TrackerConfig:
    """End-to-end tracking knobs; serializable as a flat JSON object.

    sigma_mode is per-frame, pooled, or fixed:<value>. lambda_event is a
    nonpositive float or "auto", which charges events the position-model
    log density at the gate distance.
    """

    delta: int = 1
    sigma_mode: str = "per-frame"
    sigma_floor: float = 1e-6
    lambda_event: float | str = "auto"
    gate_quantile: float = 0.99
    space_cap: int = 1_000_000

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta < 0:
            raise InvalidConfigError("delta must be a nonnegative integer")
        object.__setattr__(self, "delta", int(self.delta))
        if self.fixed_sigma() is None and self.sigma_mode not in ("per-frame", "pooled"):
            raise InvalidConfigError(f"unknown sigma mode {self.sigma_mode!r}")
        floor = float(self.sigma_floor)
        if not math.isfinite(floor) or floor <= 0:
            raise InvalidConfigError("sigma_floor must be positive and finite")
        object.__setattr__(self, "sigma_floor", floor)
        if self.lambda_event != "auto":
            lam = float(self.lambda_event)
            if not math.isfinite(lam) or lam > 0:
                raise InvalidConfigError("lambda_event must be 'auto' or a nonpositive float")
            object.__setattr__(self, "lambda_event", lam)
        if not 0.0 < float(self.gate_quantile) < 1.0:
            raise InvalidConfigError("gate quantile must lie strictly between 0 and 1")
        object.__setattr__(self, "gate_quantile", float(self.gate_quantile))
        if int(self.space_cap) != self.space_cap or self.space_cap < 1:
            raise InvalidConfigError("space_cap must be a positive integer")
        object.__setattr__(self, "space_cap", int(self.space_cap))

    def fixed_sigma(self) -> float | None:
        """The fixed sigma value, or None for estimating modes."""
        if isinstance(self.sigma_mode, str) and self.sigma_mode.startswith("fixed:"):
            try:
                value = float(self.sigma_mode[len("fixed:") :])
            except ValueError:
                raise InvalidConfigError(f"bad fixed sigma in {self.sigma_mode!r}") from None
            if not math.isfinite(value) or value <= 0:
                raise InvalidConfigError("fixed sigma must be positive and finite")
            return value
        return None

    @classmethod
    def from_json(cls, path) -> "TrackerConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as e:
            raise InvalidConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise InvalidConfigError("config file must hold a JSON object")
        unknown = set(data) - set(_CONFIG_KEYS)
        if unknown:
            raise InvalidConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self, path) -> None:
        data = {k: getattr(self, k) for k in _CONFIG_KEYS}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def auto_lambda(gate_cost: float, pooled_sigma: float, dt: float = 1.0) -> float:
    """Default event penalty: position-model log density at the gate
    distance, clamped to be nonpositive."""
    scale2 = (dt * pooled_sigma) ** 2
    return min(0.0, -math.log(2.0 * math.pi * scale2) - gate_cost / (2.0 * scale2))


@dataclass(frozen=True)
class TrackDiagnostics:
    gate_cost: float
    d_star: tuple[int, ...]
    sigma: SigmaEstimate
    lambda_event: float
    space_sizes: tuple[int, ...]
    eval_count: int
    bmcf_matchings: tuple[MatchingVector, ...]


@dataclass(frozen=True)
class TrackResult:
    trajectories: TrajectorySet
    matchings: tuple[MatchingVector, ...]
    score: float
    spaces: tuple[CandidateSpace, ...]
    diagnostics: TrackDiagnostics


def evaluation_count(space_sizes) -> int:
    """Number of stage-score evaluations a DP over these spaces needs:
    |S_0| first-pair scores plus |S_{t-1}|*|S_t| per later stage."""
    sizes = list(space_sizes)
    return sizes[0] + sum(sizes[t - 1] * sizes[t] for t in range(1, len(sizes)))


def track(
    seq: FrameSequence,
    cfg: TrackerConfig | None = None,
    bipartite_cfg: BipartiteConfig | None = None,
    evaluation: str = "vectorized",
) -> TrackResult:
    """Full pipeline: bipartite seeding, sigma estimation, reduced
    spaces, dynamic program, trajectory assembly.

    The bipartite pass fixes the gate cost and each pair's d*; its
    matchings also feed the sigma estimate (unless a fixed sigma mode
    bypasses estimation).
    """
    cfg = cfg or TrackerConfig()
    if len(seq) < 2:
        raise InvalidInputError("need at least 2 frames")
    f = len(seq)
    bip = bipartite_cfg or BipartiteConfig(gate_quantile=cfg.gate_quantile)
    gate = resolve_gate_cost(seq, bip)
    gated = BipartiteConfig(gate_cost=gate)
    bmcf = [solve_bmcf(seq.frames[k], seq.frames[k + 1], gated) for k in range(f - 1)]
    d_star = [m.n_disappeared for m in bmcf]

    fixed = cfg.fixed_sigma()
    if fixed is not None:
        sig = SigmaEstimate(
            sigmas=(fixed,) * (f - 1), pooled=fixed, counts=(0,) * (f - 1), used_fallback=False
        )
    else:
        sig = estimate_sigma(seq, bmcf, mode=cfg.sigma_mode, sigma_floor=cfg.sigma_floor)
    lam = cfg.lambda_event
    if lam == "auto":
        lam = auto_lambda(gate, sig.pooled, seq.dt)
    noise = NoiseModel(sigmas=sig.sigmas, lambda_event=lam, sigma_floor=cfg.sigma_floor)

    rcfg = ReducedSpaceConfig(delta=cfg.delta)
    spaces = []
    for k in range(f - 1):
        sp = build_reduced_space(seq.frames[k], seq.frames[k + 1], d_star[k], rcfg)
        if len(sp) > cfg.space_cap:
            raise SpaceCapError(
                f"candidate space at pair {k} has {len(sp)} vectors, cap is {cfg.space_cap}"
            )
        spaces.append(sp)

    matchings, score = solve_dp(seq, spaces, noise, evaluation=evaluation)
    trajs = assemble_trajectories(seq, matchings)
    sizes = tuple(len(s) for s in spaces)
    diags = TrackDiagnostics(
        gate_cost=float(gate),
        d_star=tuple(d_star),
        sigma=sig,
        lambda_event=float(lam),
        space_sizes=sizes,
        eval_count=evaluation_count(sizes),
        bmcf_matchings=tuple(bmcf),
    )
    return TrackResult(
        trajectories=trajs,
        matchings=tuple(matchings),
        score=float(score),
        spaces=tuple(spaces),
        diagnostics=diags,
    )
