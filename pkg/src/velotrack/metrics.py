"""Evaluation of predicted associations against ground truth.

Path-level scores use the strictest notion of correctness: a predicted
track counts only when it equals a truth track detection for detection.
Pair and path identity are exact-equality indicators, and coverage asks
whether the truth matching vector lies inside a candidate space at all,
which upper-bounds what any solver over that space can achieve.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

from .core import (
    CandidateSpace,
    FrameSequence,
    InvalidInputError,
    MatchingVector,
    TrajectorySet,
    assemble_trajectories,
)

CSV_COLUMNS = (
    "prefix_frames",
    "pair_index",
    "pair_precision",
    "pair_recall",
    "pair_fbeta",
    "cumulative_precision",
    "cumulative_recall",
    "cumulative_fbeta",
    "pair_identity",
    "coverage",
)


def f_beta(precision: float, recall: float, beta: float = 1.0) -> float:
    """Weighted harmonic mean of precision and recall; 0 when both are 0."""
    if not (0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0):
        raise InvalidInputError("precision and recall must lie in [0, 1]")
    if not beta > 0:
        raise InvalidInputError("beta must be positive")
    den = beta * beta * precision + recall
    if den == 0.0:
        return 0.0
    return (1.0 + beta * beta) * precision * recall / den


def path_accuracy(
    pred: TrajectorySet, truth: TrajectorySet, beta: float = 1.0
) -> tuple[float, float, float]:
    """Whole-path precision, recall, and F score.

    A predicted path is correct iff some truth path equals it exactly.
    Empty sides contribute zero rates rather than errors.
    """
    correct = len(set(pred.tracks) & set(truth.tracks))
    precision = correct / len(pred.tracks) if pred.tracks else 0.0
    recall = correct / len(truth.tracks) if truth.tracks else 0.0
    return precision, recall, f_beta(precision, recall, beta)


def cumulative_path_accuracy(
    seq: FrameSequence,
    pred_matchings: Sequence[MatchingVector],
    truth_matchings: Sequence[MatchingVector],
    beta: float = 1.0,
) -> list[tuple[float, float, float]]:
    """path_accuracy of every prefix sub-video, k = 2..f frames.

    Early mistakes keep whole prefixes wrong, so the series exposes how
    association errors accumulate along the video.
    """
    f = len(seq)
    if len(pred_matchings) != f - 1 or len(truth_matchings) != f - 1:
        raise InvalidInputError("matching sequences inconsistent with the video length")
    out = []
    for k in range(2, f + 1):
        sub = FrameSequence(seq.frames[:k], dt=seq.dt)
        pred = assemble_trajectories(sub, pred_matchings[: k - 1])
        truth = assemble_trajectories(sub, truth_matchings[: k - 1])
        out.append(path_accuracy(pred, truth, beta))
    return out


def pair_identity(pred: MatchingVector, truth: MatchingVector) -> int:
    """1 iff the two matching vectors are exactly equal."""
    return int(pred == truth)


def path_identity(pred: TrajectorySet, truth: TrajectorySet) -> int:
    """1 iff the two trajectory sets are exactly equal."""
    return int(pred == truth)


def coverage(space: CandidateSpace, truth: MatchingVector) -> int:
    """1 iff the truth matching vector lies inside the candidate space."""
    return int(truth in space)


def improvement_ratio(f1_by_delta: Sequence[float]) -> list[float | None]:
    """R(delta) = (F1(delta+1) - F1(delta)) / (F1(delta) - F1(delta-1)).

    Entry i is R at delta = i + 1 for the given consecutive-delta F1
    series; a zero denominator yields None rather than a fabricated
    number.
    """
    vals = [float(v) for v in f1_by_delta]
    out: list[float | None] = []
    for i in range(1, len(vals) - 1):
        den = vals[i] - vals[i - 1]
        num = vals[i + 1] - vals[i]
        out.append(num / den if den != 0.0 else None)
    return out


@dataclass(frozen=True)
class EvalReport:
    """Per-pair and whole-video association quality.

    pair_accuracy[t] scores the two-frame sub-video of pair t;
    cumulative[i] scores the prefix of k = i + 2 frames. coverage is
    None when no candidate spaces were supplied.
    """

    beta: float
    pair_accuracy: tuple[tuple[float, float, float], ...]
    whole_precision: float
    whole_recall: float
    whole_fbeta: float
    cumulative: tuple[tuple[float, float, float], ...]
    pair_identity: tuple[int, ...]
    path_identity: int
    coverage: tuple[int, ...] | None = None


def evaluate(
    seq: FrameSequence,
    pred_matchings: Sequence[MatchingVector],
    truth_matchings: Sequence[MatchingVector],
    beta: float = 1.0,
    spaces: Sequence[CandidateSpace] | None = None,
) -> EvalReport:
    """Full report for one video given predicted and truth matchings."""
    f = len(seq)
    if len(pred_matchings) != f - 1 or len(truth_matchings) != f - 1:
        raise InvalidInputError("matching sequences inconsistent with the video length")
    if spaces is not None and len(spaces) != f - 1:
        raise InvalidInputError("need one candidate space per frame pair")
    pair_acc = []
    identities = []
    for t in range(f - 1):
        sub = FrameSequence(seq.frames[t : t + 2], dt=seq.dt)
        pred = assemble_trajectories(sub, [pred_matchings[t]])
        truth = assemble_trajectories(sub, [truth_matchings[t]])
        pair_acc.append(path_accuracy(pred, truth, beta))
        identities.append(pair_identity(pred_matchings[t], truth_matchings[t]))
    pred_all = assemble_trajectories(seq, pred_matchings)
    truth_all = assemble_trajectories(seq, truth_matchings)
    wp, wr, wf = path_accuracy(pred_all, truth_all, beta)
    cum = cumulative_path_accuracy(seq, pred_matchings, truth_matchings, beta)
    cov = None
    if spaces is not None:
        cov = tuple(coverage(spaces[t], truth_matchings[t]) for t in range(f - 1))
    return EvalReport(
        beta=beta,
        pair_accuracy=tuple(pair_acc),
        whole_precision=wp,
        whole_recall=wr,
        whole_fbeta=wf,
        cumulative=tuple(cum),
        pair_identity=tuple(identities),
        path_identity=path_identity(pred_all, truth_all),
        coverage=cov,
    )


def write_report_csv(report: EvalReport, path) -> None:
    """One row per prefix length k = 2..f, fixed column names."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for t in range(len(report.pair_accuracy)):
            pa = report.pair_accuracy[t]
            cu = report.cumulative[t]
            cov = "" if report.coverage is None else report.coverage[t]
            writer.writerow(
                [t + 2, t, repr(float(pa[0])), repr(float(pa[1])), repr(float(pa[2])),
                 repr(float(cu[0])), repr(float(cu[1])), repr(float(cu[2])),
                 report.pair_identity[t], cov]
            )


def write_report_json(report: EvalReport, path) -> None:
    """Whole-video summary next to the per-pair CSV."""
    mean_cov = None
    if report.coverage is not None and len(report.coverage):
        mean_cov = sum(report.coverage) / len(report.coverage)
    data = {
        "beta": report.beta,
        "whole_path_precision": report.whole_precision,
        "whole_path_recall": report.whole_recall,
        "whole_path_fbeta": report.whole_fbeta,
        "path_identity": report.path_identity,
        "mean_pair_identity": (
            sum(report.pair_identity) / len(report.pair_identity)
            if report.pair_identity
            else math.nan
        ),
        "mean_coverage": mean_cov,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
