"""NSGA-II selection machinery for maximized objectives.

All objectives are maximized.  Populations may be given as sequences of
:class:`~mopo.core.ObjectiveVector` or as any ``(n, m)`` array-like of floats.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mopo.core import INF, ContractViolation, EvaluatedPrompt, ObjectiveVector


@dataclass(frozen=True)
class Front:
    rank: int
    member_indices: tuple[int, ...]


def _as_matrix(population) -> np.ndarray:
    rows = [v.scores if isinstance(v, ObjectiveVector) else v for v in population]
    if not rows:
        return np.zeros((0, 0))
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ContractViolation("objective vectors have inconsistent lengths")
    return np.asarray(rows, dtype=float)


def dominates(a, b) -> bool:
    """True iff ``a`` is at least as good as ``b`` everywhere and strictly
    better somewhere."""
    if isinstance(a, ObjectiveVector) and isinstance(b, ObjectiveVector):
        if a.objective_ids != b.objective_ids:
            raise ContractViolation("objective vectors use different objective orderings")
    a_scores = a.scores if isinstance(a, ObjectiveVector) else a
    b_scores = b.scores if isinstance(b, ObjectiveVector) else b
    if len(a_scores) != len(b_scores):
        raise ContractViolation("objective vectors differ in length")
    strictly = False
    for x, y in zip(a_scores, b_scores):
        if x < y:
            return False
        if x > y:
            strictly = True
    return strictly


def domination_matrix(points: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when point i dominates point j."""
    ge = (points[:, None, :] >= points[None, :, :]).all(axis=-1)
    gt = (points[:, None, :] > points[None, :, :]).any(axis=-1)
    return ge & gt


def fast_non_dominated_sort(population) -> list[Front]:
    """Partition ``population`` into Pareto fronts (Deb et al. counting sort).

    Members of each front are listed in ascending index order.
    """
    points = _as_matrix(population)
    n = len(points)
    if n == 0:
        raise ContractViolation("cannot sort an empty population")
    dom = domination_matrix(points)
    remaining = dom.sum(axis=0)
    current = np.flatnonzero(remaining == 0)
    fronts: list[Front] = []
    while current.size:
        fronts.append(Front(len(fronts), tuple(int(i) for i in current)))
        remaining = remaining - dom[current].sum(axis=0)
        remaining[current] = -1
        current = np.flatnonzero(remaining == 0)
    return fronts


def _distinct(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Distinct rows (lexicographic order) and each input row's position among them."""
    unique, inverse = np.unique(points, axis=0, return_inverse=True)
    return unique, np.asarray(inverse).reshape(-1)


def crowding_distance(front_objectives) -> list[float]:
    """NSGA-II crowding distance of each member of one front.

    Computed over the distinct objective vectors of the front; duplicates
    share their vector's distance, so the result does not depend on input
    order.  The extremes of each objective get ``inf``; an objective with
    zero range contributes nothing.  Fronts with at most two distinct
    vectors are all boundary.
    """
    points = _as_matrix(front_objectives)
    if len(points) == 0:
        return []
    unique, inverse = _distinct(points)
    n = len(unique)
    if n <= 2:
        return [INF] * len(points)
    dist = np.zeros(n)
    for j in range(unique.shape[1]):
        col = unique[:, j]
        span = col.max() - col.min()
        if span == 0:
            continue
        order = np.argsort(col, kind="stable")
        dist[order[0]] = dist[order[-1]] = INF
        gaps = (col[order[2:]] - col[order[:-2]]) / span
        dist[order[1:-1]] += gaps
    return [float(dist[k]) for k in inverse]


def pareto_selection(
    evaluated: Sequence[EvaluatedPrompt], G: int, top_n: int = 0
) -> list[EvaluatedPrompt]:
    """Select up to ``G`` prompts by rank then crowding, plus per-objective elites.

    Fronts are taken whole in ascending rank while they fit.  The first
    front that does not fit is truncated by descending crowding distance
    (ties by ascending prompt id), except that a second copy of an objective
    vector is only taken once every distinct vector of the front has one.
    Afterwards, for every objective, each of its ``top_n`` best scorers that
    did not make the cut is appended.
    """
    if not evaluated:
        raise ContractViolation("cannot select from an empty population")
    if G < 1:
        raise ContractViolation("G must be ≥ 1")
    points = _as_matrix([e.fitness for e in evaluated])
    fronts = fast_non_dominated_sort(points)

    rank = [0] * len(evaluated)
    crowd = [0.0] * len(evaluated)
    copy = [0] * len(evaluated)
    for front in fronts:
        members = list(front.member_indices)
        for idx, d in zip(members, crowding_distance(points[members])):
            rank[idx] = front.rank
            crowd[idx] = d
        _, inverse = _distinct(points[members])
        seen: dict[int, int] = {}
        for k in sorted(range(len(members)), key=lambda k: evaluated[members[k]].id):
            copy[members[k]] = seen.get(int(inverse[k]), 0)
            seen[int(inverse[k])] = copy[members[k]] + 1

    def order(idx: int):
        return (copy[idx], -crowd[idx], evaluated[idx].id)

    chosen: list[int] = []
    for front in fronts:
        room = G - len(chosen)
        if room <= 0:
            break
        chosen.extend(sorted(front.member_indices, key=order)[:room])

    taken = set(chosen)
    if top_n > 0:
        for j in range(points.shape[1]):
            best = sorted(range(len(evaluated)), key=lambda i: (-points[i, j], evaluated[i].id))
            for idx in best[:top_n]:
                if idx not in taken:
                    taken.add(idx)
                    chosen.append(idx)

    return [
        dataclasses.replace(evaluated[i], pareto_rank=rank[i], crowding=crowd[i]) for i in chosen
    ]


def _hv2d(points: np.ndarray, ref: np.ndarray) -> float:
    # sweep along x descending; track the highest y seen so far
    order = np.argsort(-points[:, 0], kind="stable")
    xs = points[order, 0]
    ys = points[order, 1]
    area = 0.0
    best_y = ref[1]
    for k in range(len(order)):
        best_y = max(best_y, ys[k])
        lower = xs[k + 1] if k + 1 < len(order) else ref[0]
        area += (xs[k] - lower) * (best_y - ref[1])
    return float(area)


def hypervolume(front, reference) -> float:
    """Volume dominated by ``front`` above ``reference`` (2 or 3 objectives)."""
    ref = np.asarray(reference.scores if isinstance(reference, ObjectiveVector) else reference, float)
    if len(front) == 0:
        return 0.0
    points = _as_matrix(front)
    if points.shape[1] != len(ref):
        raise ContractViolation("front and reference differ in dimension")
    if np.any(points < ref):
        raise ContractViolation("every point must dominate the reference point")
    m = points.shape[1]
    if m == 1:
        return float(points[:, 0].max() - ref[0])
    if m == 2:
        return _hv2d(points, ref)
    if m == 3:
        levels = np.unique(points[:, 2])[::-1]
        volume = 0.0
        for k, z in enumerate(levels):
            below = levels[k + 1] if k + 1 < len(levels) else ref[2]
            slab = points[points[:, 2] >= z][:, :2]
            volume += (z - below) * _hv2d(slab, ref[:2])
        return float(volume)
    raise ContractViolation("hypervolume supports at most 3 objectives")
