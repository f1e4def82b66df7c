"""Brute-force reference solvers for testing.

Space enumeration here is built from itertools primitives (choose the
disappearing subset, then an ordered arrangement of targets for the
survivors) and must not share code with the production constructions,
so a bug in one cannot confirm itself through the other. The likelihood
functions are shared on purpose: they are the single source of truth
for what is being maximized.
"""

from __future__ import annotations

import math
from itertools import combinations, permutations, product

import numpy as np

from .core import (
    DISAPPEAR,
    CandidateSpace,
    FrameSequence,
    InvalidInputError,
    MatchingVector,
    SpaceCapError,
)
from .tripartite import NoiseModel, pair_log_likelihood_first, triple_log_likelihood


def enumerate_space(n_k: int, n_next: int, cap: int = 100_000) -> CandidateSpace:
    """All matching vectors for an (n_k, n_next) pair, by construction.

    For each disappearance count d, each d-subset of objects disappears
    and the rest take an ordered selection of distinct targets.
    """
    if n_k < 0 or n_next < 0:
        raise InvalidInputError("object counts must be nonnegative")
    rows: list[list[int]] = []
    for d in range(max(0, n_k - n_next), n_k + 1):
        for gone in combinations(range(n_k), d):
            linked = [i for i in range(n_k) if i not in gone]
            for targets in permutations(range(n_next), len(linked)):
                row = [DISAPPEAR] * n_k
                for i, t in zip(linked, targets):
                    row[i] = t
                rows.append(row)
                if len(rows) > cap:
                    raise SpaceCapError(f"space exceeds cap {cap}")
    mat = np.array(rows, dtype=np.int64).reshape(len(rows), n_k)
    return CandidateSpace.build(mat, n_next=n_next, dedupe=True)


def exhaustive_chain_argmax(
    seq: FrameSequence,
    noise: NoiseModel,
    spaces: list[CandidateSpace] | None = None,
    cap: int = 2_000_000,
) -> tuple[list[MatchingVector], float]:
    """Global argmax of the chain score by scanning the product space.

    Candidates are visited in lexicographic order of the matching-vector
    sequence and only a strictly better score replaces the incumbent, so
    ties resolve to the lexicographically smallest sequence.
    """
    f = len(seq)
    if f < 2:
        raise InvalidInputError("need at least 2 frames")
    if spaces is None:
        spaces = [enumerate_space(seq.n_objects(k), seq.n_objects(k + 1)) for k in range(f - 1)]
    if len(spaces) != f - 1:
        raise InvalidInputError(f"need {f - 1} candidate spaces, got {len(spaces)}")
    total = 1
    for sp in spaces:
        if len(sp) == 0:
            raise InvalidInputError("empty candidate space")
        total *= len(sp)
    if total > cap:
        raise SpaceCapError(f"product space has {total} sequences, cap is {cap}")

    vectors = [list(sp.vectors()) for sp in spaces]
    h1 = [
        pair_log_likelihood_first(seq.frames[0], seq.frames[1], m, noise, dt=seq.dt)
        for m in vectors[0]
    ]
    stage: list[np.ndarray] = []
    for t in range(1, f - 1):
        h = np.empty((len(vectors[t - 1]), len(vectors[t])))
        for r, m_prev in enumerate(vectors[t - 1]):
            for c, m_next in enumerate(vectors[t]):
                h[r, c] = triple_log_likelihood(
                    seq.frames[t - 1], seq.frames[t], seq.frames[t + 1],
                    m_prev, m_next, noise, dt=seq.dt, pair_index=t,
                )
        stage.append(h)

    best_idx: tuple[int, ...] | None = None
    best = -math.inf
    for idx in product(*(range(len(v)) for v in vectors)):
        s = h1[idx[0]]
        for t in range(1, f - 1):
            s += stage[t - 1][idx[t - 1], idx[t]]
        if s > best:
            best = s
            best_idx = idx
    assert best_idx is not None
    return [vectors[t][r] for t, r in enumerate(best_idx)], float(best)


def exhaustive_bipartite_min(
    frame_a, frame_b, gate_cost: float = math.inf, d: int | None = None
) -> tuple[MatchingVector, float]:
    """Cheapest matching by enumeration, for checking the flow solver.

    Cost is the sum of matched squared distances plus gate_cost per
    unmatched object on either side. With d given, only vectors with
    exactly d disappearances compete and the reported cost is the pure
    matched-distance sum (the event term is constant there). Ties
    resolve to the lexicographically smallest vector.
    """
    a = np.asarray(frame_a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(frame_b, dtype=np.float64).reshape(-1, 2)
    n_a, n_b = a.shape[0], b.shape[0]
    fixed_d = d
    if fixed_d is None and math.isinf(gate_cost):
        # an infinite gate forces maximum cardinality
        fixed_d = n_a - min(n_a, n_b)
    best_m: MatchingVector | None = None
    best = math.inf
    for m in enumerate_space(n_a, n_b).vectors():
        if fixed_d is not None and m.n_disappeared != fixed_d:
            continue
        cost = 0.0
        for i, j in enumerate(m.entries):
            if j != DISAPPEAR:
                diff = b[j] - a[i]
                cost += float(diff @ diff)
        if fixed_d is None:
            # within a fixed d the event term is constant and left out
            cost += gate_cost * (m.n_disappeared + m.n_appeared)
        if cost < best:
            best = cost
            best_m = m
    if best_m is None:
        raise InvalidInputError("no feasible matching under the given constraints")
    return best_m, best
