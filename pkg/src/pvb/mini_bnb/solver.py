"""Reliability strong branching inside a best-bound branch and bound.

Variable selection scans the unreliable fractional candidates in
descending pseudocost-predicted score (ties to the lower column index),
paying two child LPs per candidate, updating pseudocosts and the shared
gain sample as it goes. The scan stops on the shared session rules: the
no-improvement streak cap, the simplex-iteration budget, or (dynamic
mode, once warmed up) the expected-tree-size test. The branching choice
is then the best score overall, measured geometric-mean gains for
scanned candidates against predicted ones for reliable candidates.

Node selection is best bound so that node counts compare branching
quality rather than incumbent luck. An SB child LP that proves
infeasible doubles as a cutoff certificate: that child is never queued.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from ..distributions import DegenerateFitError, GainAccumulator
from ..gains import DEFAULT_EPSILON, GainPair, shifted_geomean
from ..lookahead import (
    CANDIDATES_EXHAUSTED,
    NO_EXPECTED_IMPROVEMENT,
    FixedLookaheadConfig,
    ProbLookaheadConfig,
    SbSession,
    should_continue,
)
from .mip import MiniMip
from .simplex import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    SolverError,
    solve_bounded_lp,
)

NODE_LIMIT = "node_limit"

# scan outcomes beyond the shared stopping vocabulary
CUTOFF_FOUND = "cutoff_found"
PSEUDOCOST_ONLY = "pseudocost"

_PRUNE_TOL = 1e-9
_MODES = ("fixed", "dynamic")


class Pseudocost:
    """Per-variable running averages of per-unit dual gains.

    Gains enter divided by the fractional distance to the branching
    bound, the usual normalization that makes histories comparable
    across fractionalities. A variable counts as reliable once both
    directions have at least `threshold` recorded observations. Every
    update is appended to `log` so a replay can audit the averages.
    """

    def __init__(self, n_cols: int, threshold: int = 2) -> None:
        if n_cols < 0:
            raise ValueError(f"n_cols must be >= 0, got {n_cols!r}")
        if threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {threshold!r}")
        self.threshold = threshold
        self.down_sum = np.zeros(n_cols)
        self.down_count = np.zeros(n_cols, dtype=np.int64)
        self.up_sum = np.zeros(n_cols)
        self.up_count = np.zeros(n_cols, dtype=np.int64)
        self.log: list[tuple[int, float | None, float | None]] = []

    def update(
        self,
        j: int,
        down_per_unit: float | None,
        up_per_unit: float | None,
    ) -> None:
        """Record per-unit gains; None skips a side (infeasible child)."""
        for value, sums, counts in (
            (down_per_unit, self.down_sum, self.down_count),
            (up_per_unit, self.up_sum, self.up_count),
        ):
            if value is None:
                continue
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"invalid per-unit gain {value!r}")
            sums[j] += value
            counts[j] += 1
        self.log.append((j, down_per_unit, up_per_unit))

    def reliable(self, j: int) -> bool:
        return min(self.down_count[j], self.up_count[j]) >= self.threshold

    def _mean(self, j: int, sums: np.ndarray, counts: np.ndarray) -> float:
        if counts[j] > 0:
            return float(sums[j] / counts[j])
        total = int(counts.sum())
        if total > 0:
            return float(sums.sum() / total)
        return 1.0

    def predicted_gains(self, j: int, frac: float) -> tuple[float, float]:
        """(down, up) gain estimates for branching at fractionality frac.

        A direction with no history for j falls back to the direction's
        average over all variables, and to a neutral 1.0 per unit before
        any observation exists at all.
        """
        down = self._mean(j, self.down_sum, self.down_count) * frac
        up = self._mean(j, self.up_sum, self.up_count) * (1.0 - frac)
        return down, up

    def predicted_score(self, j: int, frac: float, epsilon: float = DEFAULT_EPSILON) -> float:
        down, up = self.predicted_gains(j, frac)
        return shifted_geomean(GainPair(down, up), epsilon).value


@dataclass(frozen=True)
class SolverConfig:
    """Borrowed lookahead settings plus the solver's own knobs."""

    mode: str = "fixed"
    fixed: FixedLookaheadConfig = FixedLookaheadConfig()
    prob: ProbLookaheadConfig = ProbLookaheadConfig()
    epsilon: float = DEFAULT_EPSILON
    reliability_threshold: int = 2
    max_scan: int = 100
    child_iteration_limit: int = 500
    node_limit: int | None = None
    integrality_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.max_scan < 1:
            raise ValueError("max_scan must be >= 1")
        if self.child_iteration_limit < 1:
            raise ValueError("child_iteration_limit must be >= 1")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be >= 1 when set")
        if self.reliability_threshold < 0:
            raise ValueError("reliability_threshold must be >= 0")
        if not 0.0 < self.integrality_tol < 0.5:
            raise ValueError("integrality_tol must be in (0, 0.5)")


class SbEval(NamedTuple):
    """One candidate's strong-branching measurement."""

    down_gain: float
    up_gain: float
    down_bound: float
    up_bound: float
    iterations: int


class ScanOutcome(NamedTuple):
    """select_branching_variable's answer plus its accounting."""

    column: int
    reason: str
    reveals: int
    sb_lp_solves: int
    sb_iterations: int
    down_bound: float
    up_bound: float
    node_infeasible: bool


class BranchDecision(NamedTuple):
    """Trace row: what one node's scan did and chose."""

    node: int
    column: int
    reveals: int
    reason: str
    sb_iterations: int
    node_iterations: int


@dataclass(frozen=True)
class MipResult:
    status: str
    objective: float | None
    x: tuple | None
    bound: float
    nodes: int
    sb_lp_solves: int
    sb_iterations: int
    decisions: tuple[BranchDecision, ...]


def strong_branch_candidate(
    c,
    A,
    senses,
    b,
    lo,
    hi,
    j: int,
    xj: float,
    node_objective: float,
    iteration_limit: int = 500,
) -> SbEval:
    """Solve both child LPs for rounding x_j down and up.

    Gains are child-objective increases clamped at zero; an infeasible
    child reports an infinite gain, which doubles as a cutoff
    certificate for that side. A child stopped by the per-candidate
    iteration limit still contributes its reached objective to the gain
    but certifies no bound beyond the node's own.
    """
    frac = xj - math.floor(xj)
    if min(frac, 1.0 - frac) <= 1e-9:
        raise ValueError(f"candidate {j} is integral at {xj!r}")
    gains, bounds, iters = [], [], 0
    for new_lo, new_hi in (
        (None, math.floor(xj)),
        (math.ceil(xj), None),
    ):
        lo2 = np.array(lo, dtype=float).copy()
        hi2 = np.array(hi, dtype=float).copy()
        if new_hi is not None:
            hi2[j] = new_hi
        if new_lo is not None:
            lo2[j] = new_lo
        res = solve_bounded_lp(c, A, senses, b, lo2, hi2, iteration_limit=iteration_limit)
        iters += res.iterations
        if res.status == INFEASIBLE:
            gains.append(math.inf)
            bounds.append(math.inf)
        elif res.status == OPTIMAL:
            gains.append(max(res.objective - node_objective, 0.0))
            bounds.append(max(res.objective, node_objective))
        elif res.status == ITERATION_LIMIT:
            gains.append(max(res.objective - node_objective, 0.0))
            bounds.append(node_objective)
        else:
            raise SolverError("child LP unbounded under a bounded parent")
    return SbEval(gains[0], gains[1], bounds[0], bounds[1], iters)


def select_branching_variable(
    c,
    A,
    senses,
    b,
    lo,
    hi,
    x,
    node_objective: float,
    node_iterations: int,
    candidates,
    pseudocost: Pseudocost,
    samples: GainAccumulator,
    config: SolverConfig,
    gap: float | None = None,
) -> ScanOutcome:
    """Pick the branching column among the fractional candidates.

    Unreliable candidates are strong branched, at most max_scan of them,
    in descending predicted-score order; reliable ones are scored from
    pseudocosts alone. An infeasible SB child short-circuits the scan:
    branching there prunes a whole side immediately. The final choice is
    the highest score over both groups, ties to the lowest column index.

    gap is the objective distance this node's subtree is expected to
    close; a positive value arms the expected-tree-size stop in dynamic
    mode, None or nonpositive leaves only the hard caps.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no fractional candidates to select from")
    fracs = {j: float(x[j]) - math.floor(float(x[j])) for j in candidates}
    scores = {
        j: pseudocost.predicted_score(j, fracs[j], config.epsilon) for j in candidates
    }
    unreliable = [j for j in candidates if not pseudocost.reliable(j)]

    if not unreliable:
        best = min(candidates, key=lambda j: (-scores[j], j))
        return ScanOutcome(
            best, PSEUDOCOST_ONLY, 0, 0, 0, node_objective, node_objective, False
        )

    order = sorted(unreliable, key=lambda j: (-scores[j], j))[: config.max_scan]
    prob = None
    if config.mode == "dynamic" and gap is not None and gap > 0.0:
        prob = config.prob
    else:
        gap = 1.0
    fixed_cfg = replace(
        config.fixed, uninit_fraction=len(unreliable) / len(candidates)
    )
    session = SbSession(gap=gap, node_cost=float(node_iterations), samples=samples)

    measured: dict[int, float] = {}
    evaluated: dict[int, SbEval] = {}
    sb_iterations = 0
    reason = CANDIDATES_EXHAUSTED
    cutoff_j = None
    for j in order:
        ev = strong_branch_candidate(
            c, A, senses, b, lo, hi, j, float(x[j]), node_objective,
            config.child_iteration_limit,
        )
        evaluated[j] = ev
        sb_iterations += ev.iterations
        if math.isinf(ev.down_gain) or math.isinf(ev.up_gain):
            down = None if math.isinf(ev.down_gain) else ev.down_gain / fracs[j]
            up = None if math.isinf(ev.up_gain) else ev.up_gain / (1.0 - fracs[j])
            if down is not None or up is not None:
                pseudocost.update(j, down, up)
            cutoff_j = j
            reason = CUTOFF_FOUND
            break
        pseudocost.update(
            j, ev.down_gain / fracs[j], ev.up_gain / (1.0 - fracs[j])
        )
        g = shifted_geomean(GainPair(ev.down_gain, ev.up_gain), config.epsilon).value
        measured[j] = g
        session.observe(str(j), g, cost=float(ev.iterations))
        dist = None
        if prob is not None and samples.n_nonzero >= prob.min_nonzero_samples:
            try:
                dist = samples.fit(prob.family)
            except DegenerateFitError:
                dist = None
        decision = should_continue(session, fixed_cfg, prob, dist)
        if decision.stop:
            reason = decision.reason
            break
        if (
            prob is not None
            and session.d_min == 1
            and samples.n_nonzero >= prob.min_nonzero_samples
        ):
            # Best gain already covers the whole gap: one branching on it
            # finishes the node, so each further reveal buys two SB LPs
            # for a tree that cannot get smaller.
            reason = NO_EXPECTED_IMPROVEMENT
            break

    reveals = len(evaluated)
    if cutoff_j is not None:
        ev = evaluated[cutoff_j]
        both = math.isinf(ev.down_gain) and math.isinf(ev.up_gain)
        return ScanOutcome(
            cutoff_j, reason, reveals, 2 * reveals, sb_iterations,
            ev.down_bound, ev.up_bound, both,
        )

    final = dict(measured)
    for j in candidates:
        if j not in evaluated and pseudocost.reliable(j):
            final[j] = scores[j]
    best = min(final, key=lambda j: (-final[j], j))
    ev = evaluated.get(best)
    down_bound = ev.down_bound if ev is not None else node_objective
    up_bound = ev.up_bound if ev is not None else node_objective
    return ScanOutcome(
        best, reason, reveals, 2 * reveals, sb_iterations,
        down_bound, up_bound, False,
    )


def solve(mip: MiniMip, config: SolverConfig = SolverConfig()) -> MipResult:
    """Best-bound branch and bound over a MiniMip.

    Returns the proven optimum (status optimal), a proven-empty verdict
    (infeasible), unbounded when the root relaxation already is, or
    node_limit with the best bound found when the cap bites. Node count
    is the number of LP-solved nodes; SB accounting is kept separate.

    The gap handed to the probabilistic rule is the distance from the
    node objective to a target bound: the incumbent once one exists, and
    before that a best-projection estimate seeded at the first branched
    node (its objective plus the sum, over its fractional candidates, of
    the geometric mean of each one's predicted side gains).
    """
    c, A, senses, b, lo0, hi0 = mip.dense()
    int_cols = [j for j, flag in enumerate(mip.integer) if flag]
    pseudocost = Pseudocost(mip.n_cols, config.reliability_threshold)
    samples = GainAccumulator()
    tol = config.integrality_tol

    incumbent_obj: float | None = None
    incumbent_x: np.ndarray | None = None
    estimate: float | None = None
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = [
        (-math.inf, 0, lo0, hi0)
    ]
    seq = 0
    nodes = sb_lp_solves = sb_iterations = 0
    decisions: list[BranchDecision] = []
    status: str | None = None

    while heap:
        if config.node_limit is not None and nodes >= config.node_limit:
            status = NODE_LIMIT
            break
        parent_bound, _, lo, hi = heapq.heappop(heap)
        if incumbent_obj is not None and parent_bound >= incumbent_obj - _PRUNE_TOL:
            # best-bound order: every remaining node is at least as bad
            heap.clear()
            break
        res = solve_bounded_lp(c, A, senses, b, lo, hi)
        nodes += 1
        if res.status == INFEASIBLE:
            continue
        if res.status == UNBOUNDED:
            if nodes == 1:
                status = UNBOUNDED
                break
            raise SolverError("child LP unbounded under a bounded root")
        obj, x = res.objective, res.x
        if incumbent_obj is not None and obj >= incumbent_obj - _PRUNE_TOL:
            continue
        fractional = [
            j
            for j in int_cols
            if min(x[j] - math.floor(x[j]), math.ceil(x[j]) - x[j]) > tol
        ]
        if not fractional:
            incumbent_obj = obj
            snapped = x.copy()
            for j in int_cols:
                snapped[j] = round(snapped[j])
            incumbent_x = snapped
            continue
        targets = [t for t in (incumbent_obj, estimate) if t is not None]
        gap = min(targets) - obj if targets else None
        outcome = select_branching_variable(
            c, A, senses, b, lo, hi, x, obj, res.iterations,
            fractional, pseudocost, samples, config, gap,
        )
        sb_lp_solves += outcome.sb_lp_solves
        sb_iterations += outcome.sb_iterations
        if estimate is None:
            # First branched node seeds the bound-to-prove estimate: one
            # geometric-mean side gain per fractional candidate, the
            # projection that every one of them still has to move.
            total = 0.0
            for j in fractional:
                down, up = pseudocost.predicted_gains(
                    j, float(x[j]) - math.floor(float(x[j]))
                )
                total += math.sqrt(down * up)
            estimate = obj + total
        decisions.append(
            BranchDecision(
                nodes, outcome.column, outcome.reveals, outcome.reason,
                outcome.sb_iterations, res.iterations,
            )
        )
        if outcome.node_infeasible:
            continue
        j = outcome.column
        xj = float(x[j])
        for child_bound, new_lo, new_hi in (
            (outcome.down_bound, None, math.floor(xj)),
            (outcome.up_bound, math.ceil(xj), None),
        ):
            if math.isinf(child_bound):
                continue
            child_bound = max(child_bound, obj)
            if incumbent_obj is not None and child_bound >= incumbent_obj - _PRUNE_TOL:
                continue
            lo2, hi2 = lo.copy(), hi.copy()
            if new_hi is not None:
                hi2[j] = new_hi
            if new_lo is not None:
                lo2[j] = new_lo
            seq += 1
            heapq.heappush(heap, (child_bound, seq, lo2, hi2))

    if status is None:
        status = OPTIMAL if incumbent_obj is not None else INFEASIBLE

    if status == OPTIMAL:
        bound = incumbent_obj
    elif status == INFEASIBLE:
        bound = math.inf
    elif status == UNBOUNDED:
        bound = -math.inf
    else:
        open_bounds = [entry[0] for entry in heap]
        if incumbent_obj is not None:
            open_bounds.append(incumbent_obj)
        bound = min(open_bounds) if open_bounds else math.inf

    return MipResult(
        status=status,
        objective=incumbent_obj,
        x=tuple(float(v) for v in incumbent_x) if incumbent_x is not None else None,
        bound=float(bound),
        nodes=nodes,
        sb_lp_solves=sb_lp_solves,
        sb_iterations=sb_iterations,
        decisions=tuple(decisions),
    )
