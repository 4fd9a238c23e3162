"""Monte-Carlo harness comparing stopping strategies on abstract instances.

A trial reveals pool gains in a fresh uniform permutation, refits the gain
distribution after every reveal (probabilistic strategies only), and stops
when the active rule says so. The reported cost is the perfect tree of the
best depth found plus two nodes per reveal.

The probabilistic strategies here apply the expected-tree-size test at
every iteration with no streak cap: in the abstract model the criterion is
free to run SB longer than the fixed rule whenever more scanning is
expected to pay for itself, which is exactly how it escapes the fixed
rule's blowup at large gaps. The phi-gated variant with hard caps lives in
the solver's branching rule, not here.

Campaigns aggregate means per (gap, strategy) cell with one rng stream per
trial index, so results do not depend on execution order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .abstract_tree import UNBOUNDED, PvbInstance
from .distributions import DegenerateFitError
from .gains import is_zero_gain
from .lookahead import (
    CANDIDATES_EXHAUSTED,
    CONTINUE,
    NO_EXPECTED_IMPROVEMENT,
    Decision,
    FixedLookaheadConfig,
    ProbLookaheadConfig,
    SbSession,
    expected_nodes_if_continue,
    nodes_if_stop,
    should_continue,
)

STRATEGIES = ("fixed", "full", "prob-exp", "prob-mixed-exp", "prob-mixed-pareto")

_MASK64 = 0xFFFFFFFFFFFFFFFF

# Past this depth the expectation sum is pointless: stopping would cost at
# least 2**513 nodes, so the scan keeps going (and the per-reveal test stays
# O(depth) instead of chasing astronomical d_min values).
_MAX_EVAL_DEPTH = 512


class UnclosableError(RuntimeError):
    """The pool has no nonzero gain, so no finite tree can close the gap."""


@dataclass(frozen=True)
class TrialResult:
    strategy: str
    gap: float
    reveals: int
    stop_reason: str
    final_tree_nodes: int
    sb_nodes: int
    total_nodes: int

    def __post_init__(self) -> None:
        if self.sb_nodes != 2 * self.reveals:
            raise ValueError("sb_nodes must be twice the reveal count")
        if self.total_nodes != self.final_tree_nodes + self.sb_nodes:
            raise ValueError("total must be tree nodes plus SB nodes")


@dataclass(frozen=True)
class CampaignSpec:
    instance: PvbInstance
    gaps: tuple
    trials: int = 1000
    seed: int = 0
    strategies: tuple = STRATEGIES

    def __post_init__(self) -> None:
        object.__setattr__(self, "gaps", tuple(float(g) for g in self.gaps))
        object.__setattr__(self, "strategies", tuple(self.strategies))
        if not self.gaps:
            raise ValueError("at least one gap is required")
        if any(not g > 0 for g in self.gaps):
            raise ValueError("gaps must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.strategies:
            raise ValueError("at least one strategy is required")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")


@dataclass(frozen=True)
class CampaignRow:
    gap: float
    strategy: str
    mean_total_nodes: float
    mean_sb_nodes: float


def _never_stop(session: SbSession) -> Decision:
    return Decision(False, CONTINUE)


def _resolve_policy(strategy, fixed: FixedLookaheadConfig, prob: ProbLookaheadConfig):
    """Map a strategy name (or a callable session -> Decision) to a policy."""
    if callable(strategy):
        return getattr(strategy, "__name__", "custom"), strategy
    if strategy == "full":
        return strategy, _never_stop
    if strategy == "fixed":
        return strategy, lambda session: should_continue(session, fixed)
    try:
        family, mass_point = {
            "prob-exp": ("exponential", False),
            "prob-mixed-exp": ("exponential", True),
            "prob-mixed-pareto": ("pareto", True),
        }[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None

    def policy(session: SbSession) -> Decision:
        if session.d_min == UNBOUNDED:
            return Decision(False, CONTINUE)
        if session.d_min == 1:
            # the gap closes in one branching; nothing left to improve
            return Decision(True, NO_EXPECTED_IMPROVEMENT)
        if session.samples.n_nonzero < prob.min_nonzero_samples:
            return Decision(False, CONTINUE)
        if session.d_min > _MAX_EVAL_DEPTH:
            return Decision(False, CONTINUE)
        try:
            dist = session.samples.fit(family, mass_point=mass_point)
        except DegenerateFitError:
            return Decision(False, CONTINUE)
        if dist.degenerate:
            return Decision(False, CONTINUE)
        if expected_nodes_if_continue(session, dist) >= nodes_if_stop(session).total:
            return Decision(True, NO_EXPECTED_IMPROVEMENT)
        return Decision(False, CONTINUE)

    return strategy, policy


def run_trial(
    instance: PvbInstance,
    gap: float,
    strategy,
    rng: np.random.Generator,
    fixed: FixedLookaheadConfig | None = None,
    prob: ProbLookaheadConfig | None = None,
) -> TrialResult:
    """Reveal pool gains in a random permutation until the strategy stops.

    A stop with no usable candidate yet is deferred: reveals continue until
    some nonzero gain makes a tree buildable. The gap argument overrides
    the instance's base gap so one pool serves a whole gap grid.
    """
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap!r}")
    pool = instance.pool
    if not pool or all(is_zero_gain(g) for g in pool):
        raise UnclosableError("every pool gain is zero; the gap cannot be closed")
    name, policy = _resolve_policy(
        strategy, fixed or FixedLookaheadConfig(), prob or ProbLookaheadConfig()
    )
    order = rng.permutation(len(pool))
    session = SbSession(gap=gap)
    reason = None
    for idx in order:
        session.observe(str(int(idx)), pool[idx])
        if reason is None:
            decision = policy(session)
            if decision.stop:
                reason = decision.reason
        if reason is not None and session.d_min != UNBOUNDED:
            break
    if reason is None:
        reason = CANDIDATES_EXHAUSTED
    depth = int(session.d_min)
    final = (1 << (depth + 1)) - 1
    return TrialResult(
        strategy=name,
        gap=gap,
        reveals=session.iteration,
        stop_reason=reason,
        final_tree_nodes=final,
        sb_nodes=2 * session.iteration,
        total_nodes=final + 2 * session.iteration,
    )


def _cell_sums(args):
    instance, gap, strategy, seed, start, stop, fixed, prob = args
    total = sb = 0
    for t in range(start, stop):
        rng = np.random.default_rng((seed ^ t) & _MASK64)
        result = run_trial(instance, gap, strategy, rng, fixed=fixed, prob=prob)
        total += result.total_nodes
        sb += result.sb_nodes
    return total, sb


def run_campaign(
    spec: CampaignSpec,
    workers: int = 1,
    fixed: FixedLookaheadConfig | None = None,
    prob: ProbLookaheadConfig | None = None,
) -> list[CampaignRow]:
    """Mean total and SB nodes per (gap, strategy) cell over seeded trials.

    Trial t always uses the rng stream seeded by seed xor t, so every
    strategy and gap sees the same permutation in trial t and the table is
    reproducible for any worker count.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    cells = [(gap, strategy) for gap in spec.gaps for strategy in spec.strategies]
    jobs = []
    for gap, strategy in cells:
        if workers == 1:
            jobs.append([(spec.instance, gap, strategy, spec.seed, 0, spec.trials, fixed, prob)])
        else:
            step = max(1, -(-spec.trials // (workers * 4)))
            jobs.append(
                [
                    (spec.instance, gap, strategy, spec.seed, lo, min(lo + step, spec.trials), fixed, prob)
                    for lo in range(0, spec.trials, step)
                ]
            )
    flat = [chunk for job in jobs for chunk in job]
    if workers == 1:
        sums = [_cell_sums(chunk) for chunk in flat]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            sums = list(executor.map(_cell_sums, flat))
    rows = []
    pos = 0
    for (gap, strategy), job in zip(cells, jobs):
        total = sb = 0
        for _ in job:
            t, s = sums[pos]
            total += t
            sb += s
            pos += 1
        rows.append(
            CampaignRow(
                gap=gap,
                strategy=strategy,
                mean_total_nodes=total / spec.trials,
                mean_sb_nodes=sb / spec.trials,
            )
        )
    return rows
