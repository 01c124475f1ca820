"""Three-phase backbone selection and single-phase lateral balancing."""

from __future__ import annotations

import heapq
import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Sequence

from .errors import PhaseConsistencyError
from .partition import FeederTree

PHASES = ("A", "B", "C")
THREE_PHASE = "ABC"
TERMINAL = {"A": ".1", "B": ".2", "C": ".3", THREE_PHASE: ""}

# search-node budget per branch-and-bound phase; past it the incumbent is returned
DEFAULT_NODE_LIMIT = 200_000


@dataclass(frozen=True)
class Lateral:
    lateral_id: int
    attach: str  # backbone node (or root) the lateral hangs from
    nodes: frozenset[str]
    p_mw: float


@dataclass
class BalanceResult:
    phases: tuple[str, ...]  # one label per lateral, in lateral order
    totals: dict[str, float]
    objective: float
    optimal: bool = True
    nodes_explored: int = 0


@dataclass
class PhasePlan:
    edge_phase: dict[str, str]  # keyed by child node
    laterals: list[Lateral]
    lateral_phase: dict[int, str]
    totals: dict[str, float]
    objective: float
    optimal: bool = True
    node_phase: dict[str, str] = field(default_factory=dict)

    @property
    def d(self) -> dict[str, float]:
        t = self.totals
        return {"AB": abs(t["A"] - t["B"]), "BC": abs(t["B"] - t["C"]), "CA": abs(t["C"] - t["A"])}


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def select_backbone(tree: FeederTree, S: dict[str, float], three_phase_fraction: float) -> set[str]:
    """Grow a connected three-phase subtree from the root, heaviest edge first.

    Edges are named by their child node. ``round(fraction * |edges|)`` edges are
    taken; at each step the candidate set is every edge hanging off the
    selected subtree.
    """
    if not 0.0 <= three_phase_fraction <= 1.0:
        raise ValueError("three_phase_fraction must lie in [0, 1]")
    k = _round_half_up(three_phase_fraction * (len(tree) - 1))
    kids = tree.children
    frontier = [(-S[c], c) for c in kids[tree.root]]
    heapq.heapify(frontier)
    chosen: set[str] = set()
    while frontier and len(chosen) < k:
        _, c = heapq.heappop(frontier)
        chosen.add(c)
        for gc in kids[c]:
            heapq.heappush(frontier, (-S[gc], gc))
    return chosen


def extract_laterals(tree: FeederTree, backbone: set[str], p_mw: dict[str, float]) -> list[Lateral]:
    """Each non-backbone edge leaving the root or a backbone node starts a lateral
    made of that child's whole subtree."""
    on_backbone = {tree.root} | set(backbone)
    kids = tree.children
    out = []
    for head in tree.order()[1:]:
        if head in backbone or tree.parent[head] not in on_backbone:
            continue
        members = []
        stack = [head]
        while stack:
            n = stack.pop()
            members.append(n)
            stack.extend(kids[n])
        out.append((min(members), tree.parent[head], frozenset(members)))
    out.sort(key=lambda t: t[0])
    return [
        Lateral(i, attach, members, math.fsum(p_mw.get(n, 0.0) for n in sorted(members)))
        for i, (_, attach, members) in enumerate(out)
    ]


def _exact(loads: Sequence[float]) -> tuple[list[int], int]:
    """Loads as integers over one power-of-two denominator; floats are dyadic, so this is exact."""
    fracs = [Fraction(p) for p in loads]
    den = max(f.denominator for f in fracs)
    return [f.numerator * (den // f.denominator) for f in fracs], den


def _sums(ints: Sequence[int], labels: Sequence[int]) -> list[int]:
    out = [0, 0, 0]
    for p, k in zip(ints, labels):
        out[k] += p
    return out


def _spread(sums: Sequence[int]) -> int:
    # |A-B| + |B-C| + |C-A| == 2 (max - min) for three values
    return 2 * (max(sums) - min(sums))


def _lpt(ints: Sequence[int]) -> list[int]:
    labels = [0] * len(ints)
    sums = [0, 0, 0]
    for i in sorted(range(len(ints)), key=lambda i: (-ints[i], i)):
        k = min(range(3), key=lambda k: (sums[k], k))
        labels[i] = k
        sums[k] += ints[i]
    return labels


class _Budget(Exception):
    pass


def _search(ints, order, target, strict, limit, counter):
    """Depth-first search over labels, visiting items in ``order``.

    Labels are used in first-use order (A before B before C), which removes
    the label symmetry without losing any objective value. Returns the best
    (value, labels) found: with ``strict`` only strict improvements on
    ``target`` are kept; otherwise the search stops at the first labelling,
    lexicographic over ``order``, whose value is at most ``target``. Subtrees
    are cut with a lower bound on 2 (max - min) of the final phase totals,
    evaluated in exact integer arithmetic scaled by 3.
    """
    n = len(order)
    total = sum(ints)
    suffix = [0] * (n + 1)
    for pos in range(n - 1, -1, -1):
        suffix[pos] = suffix[pos + 1] + ints[order[pos]]
    labels = [0] * len(ints)
    sums = [0, 0, 0]
    best = [3 * target, None]

    def rec(pos: int, used: int) -> bool:
        counter[0] += 1
        if counter[0] > limit:
            raise _Budget
        if pos == n:
            value = 3 * _spread(sums)
            if value < best[0] or (not strict and value <= best[0]):
                best[0], best[1] = value, list(labels)
                return not strict
            return False
        hi = max(3 * max(sums), total)
        lo = min(3 * (min(sums) + suffix[pos]), total)
        bound = 2 * (hi - lo)
        if bound > best[0] or (strict and bound >= best[0]):
            return False
        i = order[pos]
        for k in range(min(used + 1, 3)):
            labels[i] = k
            sums[k] += ints[i]
            done = rec(pos + 1, max(used, k + 1))
            sums[k] -= ints[i]
            if done:
                return True
        labels[i] = 0
        return False

    rec(0, 0)
    return best[0] // 3, best[1]


def balance_phases(loads: Sequence[float], node_limit: int = DEFAULT_NODE_LIMIT) -> BalanceResult:
    """Assign each lateral load to phase A, B or C minimising d_AB + d_BC + d_CA.

    Exact depth-first branch and bound in integer arithmetic. A first search
    over loads in descending order, seeded with the longest-processing-time
    greedy solution, finds the optimal value; a second search in the original
    order returns the lexicographically smallest labelling attaining it. If
    either search exceeds ``node_limit`` nodes the best labelling found so far
    is returned with ``optimal=False``.
    """
    loads = [float(p) for p in loads]
    if not loads:
        return BalanceResult((), {"A": 0.0, "B": 0.0, "C": 0.0}, 0.0)
    if any(p < 0 or not math.isfinite(p) for p in loads):
        raise ValueError("lateral loads must be finite and non-negative")
    ints, den = _exact(loads)
    counter = [0]
    explored = 0

    incumbent = _canonical(_lpt(ints))
    value = _spread(_sums(ints, incumbent))
    optimal = True
    descending = sorted(range(len(ints)), key=lambda i: (-ints[i], i))
    try:
        v, labels = _search(ints, descending, value, True, node_limit, counter)
        if labels is not None:
            incumbent, value = _canonical(labels), v
        explored, counter[0] = counter[0], 0
        v, labels = _search(ints, list(range(len(ints))), value, False, node_limit, counter)
        if labels is not None:
            incumbent = labels
    except _Budget:
        optimal = False
    sums = _sums(ints, incumbent)
    return BalanceResult(
        tuple(PHASES[k] for k in incumbent),
        {ph: float(Fraction(t, den)) for ph, t in zip(PHASES, sums)},
        float(Fraction(_spread(sums), den)),
        optimal,
        explored + counter[0],
    )


def _canonical(labels: Sequence[int]) -> list[int]:
    """Relabel so phases first appear in the order A, B, C."""
    remap: dict[int, int] = {}
    for k in labels:
        if k not in remap:
            remap[k] = len(remap)
    return [remap[k] for k in labels]


def apply_phases(
    tree: FeederTree,
    backbone: set[str],
    laterals: list[Lateral],
    solution: BalanceResult,
    p_mw: dict[str, float] | None = None,
) -> PhasePlan:
    edge_phase = dict.fromkeys(backbone, THREE_PHASE)
    lateral_phase = {}
    for lat, ph in zip(laterals, solution.phases, strict=True):
        lateral_phase[lat.lateral_id] = ph
        for n in lat.nodes:
            edge_phase[n] = ph
    missing = set(tree.parent) - set(edge_phase)
    if missing:
        raise PhaseConsistencyError(f"edges without a phase: {sorted(missing)[:5]}")
    totals = {
        ph: math.fsum(lat.p_mw for lat in laterals if lateral_phase[lat.lateral_id] == ph)
        for ph in PHASES
    }
    if p_mw is not None:
        from_nodes = {
            ph: math.fsum(p_mw.get(n, 0.0) for lat in laterals if lateral_phase[lat.lateral_id] == ph for n in lat.nodes)
            for ph in PHASES
        }
        for ph in PHASES:
            if not math.isclose(from_nodes[ph], totals[ph], rel_tol=1e-12, abs_tol=1e-12):
                raise PhaseConsistencyError(f"phase {ph} node loads {from_nodes[ph]} != lateral sum {totals[ph]}")
    if totals != solution.totals:
        raise PhaseConsistencyError(f"recomputed phase totals {totals} differ from solver {solution.totals}")
    node_phase = {tree.root: THREE_PHASE, **edge_phase}
    return PhasePlan(edge_phase, laterals, lateral_phase, totals, solution.objective, solution.optimal, node_phase)


def phase_feeder(tree: FeederTree, S: dict[str, float], p_mw: dict[str, float], three_phase_fraction: float,
                 node_limit: int = DEFAULT_NODE_LIMIT) -> PhasePlan:
    backbone = select_backbone(tree, S, three_phase_fraction)
    laterals = extract_laterals(tree, backbone, p_mw)
    solution = balance_phases([lat.p_mw for lat in laterals], node_limit)
    return apply_phases(tree, backbone, laterals, solution, p_mw)
