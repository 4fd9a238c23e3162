"""Stopping criteria for a strong-branching scan.

Two rules share one session object. The fixed rule stops after L_max
consecutive non-improving evaluations or once the iteration budget
gamma_max = gamma_node + K is spent, with L_max = (1 + uninit_fraction) * L.
The probabilistic rule additionally compares, once warmed up, the cost of
stopping now,

    t_i = 2**(d_min+1) - 1 + 2*i,

against the expected cost of one more evaluation,

    E[t_{i+1}] = sum_{d=1..d_min} (2**(d+1) - 1) * p_d + 2*(i+1),

where p_d is the probability that the next revealed gain lands the best
depth at d. The p_d come from the fitted mixed gain distribution: a gain g
yields depth ceil(G/g), so p_1 is the survival at G, interior p_d are CDF
differences at G/(d-1) and G/d, and the last bucket absorbs every
non-improving outcome including zero gains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from .abstract_tree import MAX_TREE_DEPTH, UNBOUNDED, TreeCost, svb_depth
from .distributions import GainAccumulator, MixedGainDistribution, cdf, survival
from .gains import is_zero_gain

# Decision reasons, stable strings for logs and tests.
CONTINUE = "continue"
LOOKAHEAD_EXHAUSTED = "lookahead_exhausted"
BUDGET_EXHAUSTED = "budget_exhausted"
NO_EXPECTED_IMPROVEMENT = "no_expected_improvement"
CANDIDATES_EXHAUSTED = "candidates_exhausted"


class NoUsableCandidateError(RuntimeError):
    """Every gain seen so far is zero; no finite tree can be priced yet."""


class Decision(NamedTuple):
    stop: bool
    reason: str


@dataclass(frozen=True)
class FixedLookaheadConfig:
    """Hard working limits: no-improvement cap L and simplex budget K."""

    L: int = 9
    K: int = 10**6
    uninit_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L!r}")
        if self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K!r}")
        if not 0.0 <= self.uninit_fraction <= 1.0:
            raise ValueError(f"uninit_fraction must be in [0,1], got {self.uninit_fraction!r}")


@dataclass(frozen=True)
class ProbLookaheadConfig:
    """Gate and family for the expected-tree-size test."""

    phi: float = 0.6
    min_nonzero_samples: int = 5
    family: str = "pareto"

    def __post_init__(self) -> None:
        if not 0.0 < self.phi <= 1.0:
            raise ValueError(f"phi must be in (0,1], got {self.phi!r}")
        if self.min_nonzero_samples < 1:
            raise ValueError("min_nonzero_samples must be >= 1")


@dataclass
class SbSession:
    """State of one strong-branching scan at one node.

    budget_used and node_cost are in the caller's work units: revealed
    candidates cost 2 apiece in the abstract model, simplex iterations in
    the mini solver.
    """

    gap: float
    iteration: int = 0
    d_min: float = UNBOUNDED
    best_candidate: str | None = None
    best_gain: float = 0.0
    samples: GainAccumulator = field(default_factory=GainAccumulator)
    no_improvement_streak: int = 0
    node_cost: float = 0.0
    budget_used: float = 0.0

    def observe(self, candidate_id: str, gain: float, cost: float = 2.0) -> bool:
        """Record one evaluated candidate; True iff it improved the best.

        Improvement is a strictly larger gain (equivalently a depth no
        worse, with ties not counting as progress), which resets the
        no-improvement streak.
        """
        gain = float(getattr(gain, "value", gain))
        self.samples.add(gain)
        self.iteration += 1
        self.budget_used += cost
        if not is_zero_gain(gain) and gain > self.best_gain:
            self.best_gain = gain
            self.best_candidate = candidate_id
            self.d_min = svb_depth(self.gap, gain)
            self.no_improvement_streak = 0
            return True
        self.no_improvement_streak += 1
        return False


def max_lookahead(config: FixedLookaheadConfig) -> float:
    """L_max = (1 + uninit_fraction) * L."""
    return (1.0 + config.uninit_fraction) * config.L


def iteration_budget(node_lp_iters: float, K: float):
    """gamma_max = gamma_node + K."""
    if node_lp_iters < 0 or K < 0:
        raise ValueError("budget inputs must be nonnegative")
    return node_lp_iters + K


def nodes_if_stop(session: SbSession) -> TreeCost:
    """Cost of stopping now: the best candidate's SVB tree plus SB spend."""
    if session.d_min == UNBOUNDED:
        raise NoUsableCandidateError(
            "no nonzero gain revealed yet; keep sampling"
        )
    d = int(session.d_min)
    return TreeCost.after_reveals((1 << (d + 1)) - 1, session.iteration)


def improvement_probabilities(
    dist: MixedGainDistribution, gap: float, d_min: int
) -> list[float]:
    """P[next-sample depth = d] for d = 1..d_min, last bucket absorbing.

    Built from CDF differences so the vector telescopes to 1; each entry
    is clamped at 0 against last-ulp dips.
    """
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap!r}")
    if d_min == UNBOUNDED or int(d_min) < 2:
        raise ValueError(f"d_min must be a finite integer >= 2, got {d_min!r}")
    d_min = int(d_min)
    ps = [survival(dist, gap)]
    prev = cdf(dist, gap)
    for d in range(2, d_min):
        cur = cdf(dist, gap / d)
        ps.append(max(prev - cur, 0.0))
        prev = cur
    ps.append(prev)
    return ps


def expected_nodes_if_continue(session: SbSession, dist: MixedGainDistribution) -> float:
    """Eq.-style expectation of total nodes after exactly one more reveal."""
    ps = improvement_probabilities(dist, session.gap, session.d_min)
    expected_final = sum(
        (2.0 ** (d + 1) - 1.0) * p for d, p in enumerate(ps, start=1)
    )
    return expected_final + 2.0 * (session.iteration + 1)


def should_continue(
    session: SbSession,
    fixed: FixedLookaheadConfig,
    prob: ProbLookaheadConfig | None = None,
    dist: MixedGainDistribution | None = None,
) -> Decision:
    """Decide whether the scan keeps evaluating candidates.

    Hard caps come first in both modes (they mirror the fixed rule's break
    conditions); the probabilistic test only fires once the streak reaches
    phi * L_max, enough nonzero samples exist, and an improvement is
    possible at all (2 <= d_min, within the exact-size depth guard). A
    degenerate distribution silently disables the probabilistic branch.
    """
    lmax = max_lookahead(fixed)
    if session.no_improvement_streak >= lmax:
        return Decision(True, LOOKAHEAD_EXHAUSTED)
    if session.budget_used >= iteration_budget(session.node_cost, fixed.K):
        return Decision(True, BUDGET_EXHAUSTED)
    if (
        prob is not None
        and dist is not None
        and not dist.degenerate
        and session.no_improvement_streak >= prob.phi * lmax
        and session.samples.n_nonzero >= prob.min_nonzero_samples
        and session.d_min != UNBOUNDED
        and 2 <= session.d_min <= MAX_TREE_DEPTH
    ):
        stop_cost = nodes_if_stop(session).total
        if expected_nodes_if_continue(session, dist) >= stop_cost:
            return Decision(True, NO_EXPECTED_IMPROVEMENT)
    return Decision(False, CONTINUE)
