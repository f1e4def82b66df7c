"""Shared domain types: frames, matching vectors, trajectories, and file IO.

A video is a FrameSequence, per-frame arrays of 2D detection positions.
The optimization variable is the MatchingVector, a per-frame-pair map
sending each object of frame k to an object of frame k+1 or to the
DISAPPEAR sentinel. One MatchingVector per consecutive pair determines
the full association; assemble_trajectories turns that into a
TrajectorySet, the engine's output.

Indices are 0-based in memory. External text formats are 1-based with
-1 for DISAPPEAR (see write_matchings / read_matchings).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

DISAPPEAR = -1


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class InvalidConfigError(ValueError):
    """A configuration value is outside its admissible range."""


class ParseError(ValueError):
    """A malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SpaceCapError(RuntimeError):
    """A candidate-space construction would exceed its size cap."""


class Position(NamedTuple):
    x: float
    y: float


class Velocity(NamedTuple):
    """Displacement over one frame interval divided by dt.

    Velocities are always derived from a pair of positions, never stored
    on their own.
    """

    vx: float
    vy: float


def velocity(p_from: Sequence[float], p_to: Sequence[float], dt: float = 1.0) -> Velocity:
    return Velocity((p_to[0] - p_from[0]) / dt, (p_to[1] - p_from[1]) / dt)


@dataclass(frozen=True)
class MatchingVector:
    """Association of the objects of frame k with those of frame k+1.

    entries[i] is the 0-based index of the target of object i in frame
    k+1, or DISAPPEAR. Non-sentinel entries are distinct, so each target
    is claimed at most once. n_next is the object count of frame k+1.
    """

    entries: tuple[int, ...]
    n_next: int

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))
        object.__setattr__(self, "n_next", int(self.n_next))
        if self.n_next < 0:
            raise InvalidInputError("n_next must be nonnegative")
        seen = set()
        for e in self.entries:
            if e == DISAPPEAR:
                continue
            if not 0 <= e < self.n_next:
                raise InvalidInputError(
                    f"target {e} out of range for n_next={self.n_next}"
                )
            if e in seen:
                raise InvalidInputError(f"target {e} claimed by two objects")
            seen.add(e)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def n_disappeared(self) -> int:
        return sum(1 for e in self.entries if e == DISAPPEAR)

    @property
    def n_matched(self) -> int:
        return len(self.entries) - self.n_disappeared

    @property
    def n_appeared(self) -> int:
        """Objects of frame k+1 that no entry claims."""
        return self.n_next - self.n_matched

    def as_array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=np.int64)

    def inverse(self) -> dict[int, int]:
        """Map from claimed target index back to source index."""
        return {e: i for i, e in enumerate(self.entries) if e != DISAPPEAR}


def matching_to_matrix(m: MatchingVector, n_next: int) -> np.ndarray:
    """Binary matrix form of a matching vector.

    Cell (i, j) is 1 iff entry i maps to target j. Row and column sums
    are at most 1 by the injectivity of the vector.
    """
    out = np.zeros((len(m), int(n_next)), dtype=np.int64)
    for i, e in enumerate(m.entries):
        if e == DISAPPEAR:
            continue
        if not 0 <= e < n_next:
            raise InvalidInputError(f"entry {e} out of range for n_next={n_next}")
        out[i, e] = 1
    return out


def matrix_to_matching(mat: np.ndarray) -> MatchingVector:
    """Inverse of matching_to_matrix."""
    a = np.asarray(mat)
    if a.ndim != 2:
        raise InvalidInputError("expected a 2D binary matrix")
    if not np.isin(a, (0, 1)).all():
        raise InvalidInputError("matrix entries must be 0 or 1")
    if (a.sum(axis=1) > 1).any() or (a.sum(axis=0) > 1).any():
        raise InvalidInputError("row and column sums must be at most 1")
    entries = []
    for row in a:
        hits = np.flatnonzero(row)
        entries.append(int(hits[0]) if hits.size else DISAPPEAR)
    return MatchingVector(tuple(entries), n_next=a.shape[1])


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Ordered frames of 2D detections plus the frame interval dt."""

    frames: tuple[np.ndarray, ...]
    dt: float = 1.0

    def __post_init__(self):
        dt = float(self.dt)
        if not math.isfinite(dt) or dt <= 0:
            raise InvalidInputError("dt must be a positive finite number")
        frames = []
        for k, f in enumerate(self.frames):
            a = np.array(f, dtype=np.float64)
            if a.size == 0:
                a = a.reshape(0, 2)
            if a.ndim != 2 or a.shape[1] != 2:
                raise InvalidInputError(f"frame {k} is not an (n, 2) array")
            if not np.isfinite(a).all():
                raise InvalidInputError(f"frame {k} contains non-finite coordinates")
            a.flags.writeable = False
            frames.append(a)
        object.__setattr__(self, "frames", tuple(frames))
        object.__setattr__(self, "dt", dt)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    def n_objects(self, k: int) -> int:
        return self.frames[k].shape[0]

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.frames)

    @property
    def total_detections(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class TrajectorySet:
    """Reconstructed paths, each a run of (frame index, object index).

    Tracks are stored in canonical sorted order, so equality of two sets
    is plain dataclass equality. Each detection belongs to at most one
    track and frame indices within a track are consecutive.
    """

    tracks: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self):
        canon = []
        used = set()
        for tr in self.tracks:
            t = tuple((int(f), int(i)) for f, i in tr)
            if not t:
                raise InvalidInputError("empty track")
            for a, b in zip(t, t[1:]):
                if b[0] != a[0] + 1:
                    raise InvalidInputError("frame indices within a track must be consecutive")
            for fo in t:
                if fo in used:
                    raise InvalidInputError(f"detection {fo} appears in more than one track")
                used.add(fo)
            canon.append(t)
        canon.sort()
        object.__setattr__(self, "tracks", tuple(canon))

    def __len__(self) -> int:
        return len(self.tracks)

    @property
    def total_length(self) -> int:
        return sum(len(t) for t in self.tracks)

    def positions(self, seq: FrameSequence) -> list[np.ndarray]:
        """Resolve each track to its (length, 2) coordinate array."""
        out = []
        for tr in self.tracks:
            out.append(np.array([seq.frames[f][i] for f, i in tr]))
        return out


def assemble_trajectories(
    seq: FrameSequence, matchings: Sequence[MatchingVector]
) -> TrajectorySet:
    """Turn per-pair matching vectors into a trajectory set.

    A track starts at every frame-0 object and at every later object no
    entry claims; it ends at a DISAPPEAR entry or at the last frame.
    Every detection ends up in exactly one track.
    """
    if len(matchings) != len(seq) - 1:
        raise InvalidInputError(
            f"need {len(seq) - 1} matching vectors for {len(seq)} frames, got {len(matchings)}"
        )
    for k, m in enumerate(matchings):
        if len(m) != seq.n_objects(k) or m.n_next != seq.n_objects(k + 1):
            raise InvalidInputError(f"matching {k} inconsistent with frame sizes")
    done: list[list[tuple[int, int]]] = []
    active = {i: [(0, i)] for i in range(seq.n_objects(0))}
    for k, m in enumerate(matchings):
        nxt: dict[int, list[tuple[int, int]]] = {}
        for i, tr in active.items():
            j = m.entries[i]
            if j == DISAPPEAR:
                done.append(tr)
            else:
                tr.append((k + 1, j))
                nxt[j] = tr
        for j in range(seq.n_objects(k + 1)):
            if j not in nxt:
                nxt[j] = [(k + 1, j)]
        active = nxt
    done.extend(active.values())
    return TrajectorySet(tuple(tuple(t) for t in done))


def matchings_from_trajectories(seq: FrameSequence, trajs: TrajectorySet) -> list[MatchingVector]:
    """Inverse of assemble_trajectories for a complete trajectory set."""
    entries = [[DISAPPEAR] * seq.n_objects(k) for k in range(len(seq) - 1)]
    for tr in trajs.tracks:
        for (f0, i0), (_, i1) in zip(tr, tr[1:]):
            entries[f0][i0] = i1
    return [
        MatchingVector(tuple(e), n_next=seq.n_objects(k + 1))
        for k, e in enumerate(entries)
    ]


@dataclass(frozen=True, eq=False)
class CandidateSpace:
    """Deduplicated set of matching vectors for one frame pair.

    matrix holds one vector per row (entries 0-based, -1 for DISAPPEAR),
    rows unique and sorted lexicographically, so the first argmax hit in
    a scan is the lexicographically smallest. swap_info, when present,
    records provenance inside a reduced space: row (seed_row, i, j)
    means the vector equals matrix[seed_row] with entry positions i and
    j exchanged; seed rows carry (own_row, -1, -1).
    """

    n_from: int
    n_next: int
    matrix: np.ndarray
    swap_info: np.ndarray | None = None

    @classmethod
    def build(
        cls,
        matrix: np.ndarray,
        n_next: int,
        swap_info: np.ndarray | None = None,
        dedupe: bool = False,
    ) -> "CandidateSpace":
        """Sort rows lexicographically and wrap them up.

        With dedupe=True duplicate rows are dropped (provenance is not
        supported in that case). Otherwise rows must already be unique.
        """
        a = np.asarray(matrix, dtype=np.int64)
        if a.ndim != 2:
            raise InvalidInputError("candidate matrix must be 2D")
        n_from = a.shape[1]
        if dedupe:
            if swap_info is not None:
                raise InvalidInputError("dedupe does not preserve swap provenance")
            a = np.unique(a, axis=0) if a.shape[0] else a
            order = np.arange(a.shape[0])
        else:
            if a.shape[0] == 0 or a.shape[1] == 0:
                order = np.arange(a.shape[0])
            else:
                # lexsort keys run last-to-first, so feed reversed columns
                order = np.lexsort(a.T[::-1])
            a = a[order]
        info = None
        if swap_info is not None:
            new_pos = np.empty(order.shape[0], dtype=np.int64)
            new_pos[order] = np.arange(order.shape[0])
            info = np.asarray(swap_info, dtype=np.int64)[order].copy()
            info[:, 0] = new_pos[info[:, 0]]
        a = a.copy()
        a.flags.writeable = False
        if info is not None:
            info.flags.writeable = False
        return cls(n_from=n_from, n_next=int(n_next), matrix=a, swap_info=info)

    @classmethod
    def from_vectors(
        cls, vectors: Iterable[MatchingVector], n_from: int, n_next: int
    ) -> "CandidateSpace":
        rows = []
        for m in vectors:
            if len(m) != n_from or m.n_next != n_next:
                raise InvalidInputError("vector inconsistent with the frame pair")
            rows.append(m.entries)
        mat = np.array(rows, dtype=np.int64).reshape(len(rows), n_from)
        return cls.build(mat, n_next=n_next, dedupe=True)

    def __post_init__(self):
        if self.matrix.shape[1] != self.n_from:
            raise InvalidInputError("matrix width inconsistent with n_from")

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {tuple(int(v) for v in row): r for r, row in enumerate(self.matrix)}

    def __contains__(self, m: MatchingVector) -> bool:
        if len(m) != self.n_from or m.n_next != self.n_next:
            return False
        return m.entries in self._index

    def index_of(self, m: MatchingVector) -> int:
        try:
            return self._index[m.entries]
        except KeyError:
            raise InvalidInputError("vector not in this candidate space") from None

    def vector_at(self, r: int) -> MatchingVector:
        return MatchingVector(tuple(int(v) for v in self.matrix[r]), n_next=self.n_next)

    def vectors(self) -> Iterator[MatchingVector]:
        for r in range(len(self)):
            yield self.vector_at(r)

    def issubset(self, other: "CandidateSpace") -> bool:
        return all(tuple(int(v) for v in row) in other._index for row in self.matrix)


# ---------------------------------------------------------------------------
# File formats. Detections: "frame_index,x,y" rows, frame indices 0-based
# ascending. Tracks: "track_id,frame_index,x,y". Matching dump: one line per
# frame pair, 1-based entries space-separated, -1 for DISAPPEAR.
# ---------------------------------------------------------------------------

_DET_HEADER = "frame_index,x,y"
_TRACK_HEADER = "track_id,frame_index,x,y"


def _parse_float(s: str, what: str, ln: int) -> float:
    try:
        v = float(s)
    except ValueError:
        raise ParseError(f"bad {what} value {s!r}", ln) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite {what} value {s!r}", ln)
    return v


def _parse_int(s: str, what: str, ln: int) -> int:
    try:
        return int(s)
    except ValueError:
        raise ParseError(f"bad {what} value {s!r}", ln) from None


def read_detections(path, dt: float = 1.0) -> FrameSequence:
    """Read the detection format into a FrameSequence.

    Rows are frame_index,x,y with 0-based non-decreasing frame indices.
    An optional header row is accepted. A skipped frame index denotes an
    empty frame. Raises ParseError naming the offending line otherwise.
    """
    by_frame: dict[int, list[tuple[float, float]]] = {}
    last = -1
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s:
                continue
            if ln == 1 and s.replace(" ", "").lower() == _DET_HEADER:
                continue
            parts = s.split(",")
            if len(parts) != 3:
                raise ParseError(f"expected 3 comma-separated fields, got {len(parts)}", ln)
            k = _parse_int(parts[0], "frame index", ln)
            if k < 0:
                raise ParseError("negative frame index", ln)
            if k < last:
                raise ParseError("frame indices must be non-decreasing", ln)
            last = k
            x = _parse_float(parts[1], "x", ln)
            y = _parse_float(parts[2], "y", ln)
            by_frame.setdefault(k, []).append((x, y))
    if not by_frame:
        raise ParseError("no detections found", 1)
    f = max(by_frame) + 1
    frames = [np.array(by_frame.get(k, []), dtype=np.float64).reshape(-1, 2) for k in range(f)]
    return FrameSequence(tuple(frames), dt=dt)


def write_detections(path, seq: FrameSequence) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_DET_HEADER + "\n")
        for k, frame in enumerate(seq.frames):
            for x, y in frame:
                # repr of a Python float round-trips exactly
                fh.write(f"{k},{float(x)!r},{float(y)!r}\n")


def write_tracks(path, trajs: TrajectorySet, seq: FrameSequence) -> None:
    """Write tracks as track_id,frame_index,x,y rows in canonical order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_TRACK_HEADER + "\n")
        for tid, tr in enumerate(trajs.tracks):
            for f, i in tr:
                x, y = seq.frames[f][i]
                fh.write(f"{tid},{f},{float(x)!r},{float(y)!r}\n")


def read_tracks(path) -> list[list[tuple[int, float, float]]]:
    """Read a track file as per-track lists of (frame, x, y).

    Rows of one track must be contiguous in frame order; tracks are
    returned sorted by their id.
    """
    by_id: dict[int, list[tuple[int, float, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            if not s:
                continue
            if ln == 1 and s.replace(" ", "").lower() == _TRACK_HEADER:
                continue
            parts = s.split(",")
            if len(parts) != 4:
                raise ParseError(f"expected 4 comma-separated fields, got {len(parts)}", ln)
            tid = _parse_int(parts[0], "track id", ln)
            k = _parse_int(parts[1], "frame index", ln)
            if k < 0:
                raise ParseError("negative frame index", ln)
            x = _parse_float(parts[2], "x", ln)
            y = _parse_float(parts[3], "y", ln)
            rows = by_id.setdefault(tid, [])
            if rows and k != rows[-1][0] + 1:
                raise ParseError(f"track {tid} frame indices not consecutive", ln)
            rows.append((k, x, y))
    return [by_id[tid] for tid in sorted(by_id)]


def write_matchings(path, matchings: Sequence[MatchingVector]) -> None:
    """Debug dump: one line per frame pair, 1-based entries, -1 sentinel."""
    with open(path, "w", encoding="utf-8") as fh:
        for m in matchings:
            fh.write(" ".join(str(e + 1 if e != DISAPPEAR else DISAPPEAR) for e in m.entries))
            fh.write("\n")


def read_matchings(path) -> list[list[int]]:
    """Read a matching dump back to 0-based entry lists (-1 kept).

    Target counts are not stored in the format, so the result is raw
    entry lists; pair them with a FrameSequence to build MatchingVector
    values.
    """
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            s = raw.strip()
            entries = []
            for tok in s.split():
                v = _parse_int(tok, "entry", ln)
                if v == 0 or v < DISAPPEAR:
                    raise ParseError(f"entry {v} is not 1-based or -1", ln)
                entries.append(DISAPPEAR if v == DISAPPEAR else v - 1)
            out.append(entries)
    return out
