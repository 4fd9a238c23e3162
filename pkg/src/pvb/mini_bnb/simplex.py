"""Bounded-variable primal simplex for small dense LPs.

Rows become equalities with one ranged slack each (the slack's bounds
encode the sense), so the core works on M z = b with box bounds per
column. Phase 1 installs signed artificial columns only on rows whose
slack cannot absorb the initial residual and minimizes their sum; phase 2
fixes the artificials to zero and optimizes the real objective from the
phase-1 basis. Pricing is Dantzig until the objective stalls, then
Bland's rule for guaranteed termination. Every linear solve goes through
numpy; a singular basis or an exhausted safety cap raises instead of
returning a silently wrong answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

_COST_TOL = 1e-9
_FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-10
_STALL_LIMIT = 60

_BASIC, _AT_LOWER, _AT_UPPER, _FREE = 0, 1, 2, 3


class SolverError(RuntimeError):
    """Numerical failure: singular basis, lost feasibility, or a blown cap."""


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _start_value(lo: float, hi: float) -> float:
    if math.isfinite(lo):
        return lo
    if math.isfinite(hi):
        return hi
    return 0.0


def _start_state(lo: float, hi: float) -> int:
    if math.isfinite(lo):
        return _AT_LOWER
    if math.isfinite(hi):
        return _AT_UPPER
    return _FREE


class _Tableau:
    """Mutable simplex state over the extended column system."""

    def __init__(self, M, lo, hi, basis, state, z):
        self.M = M
        self.lo = lo
        self.hi = hi
        self.basis = basis
        self.state = state
        self.z = z
        self.iterations = 0

    def run(self, c, cap, bland=False):
        """Optimize c @ z in place; returns OPTIMAL/UNBOUNDED/ITERATION_LIMIT."""
        M, lo, hi, state, z = self.M, self.lo, self.hi, self.state, self.z
        stall = 0
        last_obj = math.inf
        while True:
            if self.iterations >= cap:
                return ITERATION_LIMIT
            B = M[:, self.basis]
            try:
                y = np.linalg.solve(B.T, c[self.basis])
            except np.linalg.LinAlgError as exc:
                raise SolverError("singular working basis") from exc
            d = c - M.T @ y
            can_inc = ((state == _AT_LOWER) | (state == _FREE)) & (d < -_COST_TOL)
            can_dec = ((state == _AT_UPPER) | (state == _FREE)) & (d > _COST_TOL)
            eligible = can_inc | can_dec
            if not eligible.any():
                return OPTIMAL
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            sigma = 1.0 if can_inc[j] else -1.0

            w = np.linalg.solve(B, M[:, j])
            # basics move as z_B - t*sigma*w; find the blocking bound
            t_best = math.inf
            leave = -1
            leave_state = _AT_LOWER
            for i in range(len(self.basis)):
                wi = sigma * w[i]
                vi = z[self.basis[i]]
                if wi > _PIVOT_TOL:
                    bound = lo[self.basis[i]]
                    if math.isfinite(bound):
                        t = (vi - bound) / wi
                        hit = _AT_LOWER
                    else:
                        continue
                elif wi < -_PIVOT_TOL:
                    bound = hi[self.basis[i]]
                    if math.isfinite(bound):
                        t = (vi - bound) / wi
                        hit = _AT_UPPER
                    else:
                        continue
                else:
                    continue
                if t < -_FEAS_TOL:
                    t = 0.0
                if t < t_best - 1e-12 or (
                    t < t_best + 1e-12
                    and (leave < 0 or self.basis[i] < self.basis[leave])
                ):
                    t_best, leave, leave_state = t, i, hit
            flip = hi[j] - lo[j]  # +inf unless both bounds are finite
            if t_best == math.inf and not math.isfinite(flip):
                return UNBOUNDED
            self.iterations += 1
            if math.isfinite(flip) and flip <= t_best:
                # entering variable runs to its other bound; basis unchanged
                t = flip
                for i in range(len(self.basis)):
                    z[self.basis[i]] -= t * sigma * w[i]
                z[j] = hi[j] if sigma > 0 else lo[j]
                state[j] = _AT_UPPER if sigma > 0 else _AT_LOWER
            else:
                t = max(t_best, 0.0)
                enter_value = z[j] + sigma * t
                for i in range(len(self.basis)):
                    z[self.basis[i]] -= t * sigma * w[i]
                out = self.basis[leave]
                z[out] = lo[out] if leave_state == _AT_LOWER else hi[out]
                state[out] = leave_state
                self.basis[leave] = j
                state[j] = _BASIC
                z[j] = enter_value
            obj = float(c @ z)
            if obj < last_obj - 1e-12:
                stall = 0
            else:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True
            last_obj = obj


def _extend(objective, matrix, senses, lower, upper):
    """Append one ranged slack per row; returns the equality system."""
    m, n = matrix.shape
    M = np.hstack([matrix, np.eye(m)])
    lo = np.concatenate([lower, np.zeros(m)])
    hi = np.concatenate([upper, np.zeros(m)])
    for i, sense in enumerate(senses):
        if sense == "<=":
            lo[n + i], hi[n + i] = 0.0, math.inf
        elif sense == ">=":
            lo[n + i], hi[n + i] = -math.inf, 0.0
        elif sense == "=":
            lo[n + i], hi[n + i] = 0.0, 0.0
        else:
            raise ValueError(f"unknown row sense {sense!r}")
    c = np.concatenate([objective, np.zeros(m)])
    return M, lo, hi, c


def solve_bounded_lp(
    objective,
    matrix,
    senses,
    rhs,
    lower,
    upper,
    iteration_limit: int | None = None,
) -> LpResult:
    """Minimize objective @ x subject to matrix x (senses) rhs, lower <= x <= upper.

    iteration_limit caps total simplex iterations across both phases; when
    it bites after feasibility is established, the result carries the best
    feasible objective so far with status iteration_limit. Running out
    during phase 1 is a SolverError since nothing is certified yet.
    """
    objective = np.asarray(objective, dtype=float)
    matrix = np.asarray(matrix, dtype=float).reshape(len(senses), len(objective))
    rhs = np.asarray(rhs, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, n = matrix.shape
    if np.any(lower > upper):
        return LpResult(INFEASIBLE, None, None, 0)

    M, lo, hi, c = _extend(objective, matrix, senses, lower, upper)
    z = np.array([_start_value(lo[j], hi[j]) for j in range(n + m)])
    state = np.array([_start_state(lo[j], hi[j]) for j in range(n + m)], dtype=np.int8)

    # seat the slacks; rows whose slack cannot hold the residual get a
    # signed artificial column instead
    basis = np.empty(m, dtype=np.int64)
    art_cols = []
    art_rows = []
    for i in range(m):
        target = rhs[i] - matrix[i] @ z[:n]
        s = n + i
        if lo[s] - _FEAS_TOL <= target <= hi[s] + _FEAS_TOL:
            z[s] = min(max(target, lo[s]), hi[s])
            state[s] = _BASIC
            basis[i] = s
        else:
            z[s] = lo[s] if target < lo[s] else hi[s]
            state[s] = _AT_LOWER if target < lo[s] else _AT_UPPER
            resid = target - z[s]
            col = np.zeros(m)
            col[i] = math.copysign(1.0, resid)
            art_cols.append(col)
            art_rows.append((i, abs(resid)))
    n_art = len(art_cols)
    if n_art:
        M = np.hstack([M, np.column_stack(art_cols)])
        lo = np.concatenate([lo, np.zeros(n_art)])
        hi = np.concatenate([hi, np.full(n_art, math.inf)])
        c = np.concatenate([c, np.zeros(n_art)])
        z = np.concatenate([z, np.array([v for _, v in art_rows])])
        state = np.concatenate([state, np.full(n_art, _BASIC, dtype=np.int8)])
        for k, (i, _) in enumerate(art_rows):
            basis[i] = n + m + k

    cap = iteration_limit if iteration_limit is not None else 200 * (n + m) + 2000
    tab = _Tableau(M, lo, hi, basis, state, z)

    if n_art:
        c1 = np.zeros(len(c))
        c1[n + m :] = 1.0
        status = tab.run(c1, cap)
        if status == ITERATION_LIMIT:
            raise SolverError("iteration cap exhausted before certifying feasibility")
        if status == UNBOUNDED:
            raise SolverError("phase 1 reported unbounded; artificial costs are >= 0")
        if float(c1 @ tab.z) > 1e-7:
            return LpResult(INFEASIBLE, None, None, tab.iterations)
        # artificials are pinned at zero for the real objective
        tab.lo[n + m :] = 0.0
        tab.hi[n + m :] = 0.0

    status = tab.run(c, cap)
    x = tab.z[:n].copy()
    obj = float(objective @ x)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None, tab.iterations)
    if status == ITERATION_LIMIT:
        if iteration_limit is None:
            raise SolverError("simplex failed to converge within the safety cap")
        return LpResult(ITERATION_LIMIT, x, obj, tab.iterations)
    residual = matrix @ x
    for i, sense in enumerate(senses):
        bad = (
            (sense == "<=" and residual[i] > rhs[i] + 1e-6)
            or (sense == ">=" and residual[i] < rhs[i] - 1e-6)
            or (sense == "=" and abs(residual[i] - rhs[i]) > 1e-6)
        )
        if bad:
            raise SolverError(f"optimal point violates row {i}")
    return LpResult(OPTIMAL, x, obj, tab.iterations)
