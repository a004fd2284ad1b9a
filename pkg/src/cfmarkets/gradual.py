"""Gradual liquidity decrease for linearly constrained market makers.

Each block g carries a non-increasing liquidity schedule beta_g with values
in (0, 1] and beta_g(t0) = 1. At time t the maker prices with the per-block
scaled direct-sum cost sum_g beta_g(t) C_g(q_g / beta_g(t)) wrapped in the
usual constraint-arbitrage infimum. Moving time forward applies the affine
state update

    q_new_g = alpha_g (q_g + delta*_g) - delta*_g,   alpha_g = beta_g(t_new)/beta_g(t),

which preserves prices while shrinking every block divergence by alpha_g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import ScaledCost, _as_vector
from .lcmm import ArbitrageSolution, LcmmCost
from .markets import observe_block_payoff
from .switching import DesiderataReport, check_desiderata
from .utility import util_event


@dataclass(frozen=True)
class BlockSchedule:
    kind: str = "constant"  # constant | linear-to-floor | exponential
    rate: float = 0.0
    floor: float = 1e-3

    def __post_init__(self):
        if self.kind not in ("constant", "linear-to-floor", "exponential"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")
        if not 0.0 < self.floor <= 1.0:
            raise ValueError("floor must be in (0, 1]")

    def value(self, dt: float) -> float:
        if dt < 0:
            raise ValueError("time before schedule start")
        if self.kind == "constant":
            return 1.0
        if self.kind == "linear-to-floor":
            return max(self.floor, 1.0 - self.rate * dt)
        return max(float(np.exp(-self.rate * dt)), 1e-300)


@dataclass(frozen=True)
class Schedule:
    per_block: tuple
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "per_block", tuple(self.per_block))

    def validate(self, model: LcmmCost):
        if len(self.per_block) != len(model.blocks):
            raise ValueError("need one schedule per block")
        return self

    def beta(self, g: int, t: float) -> float:
        if t < self.t0:
            raise ValueError("time before schedule start")
        return self.per_block[g].value(t - self.t0)

    def alpha(self, g: int, t: float, t_new: float) -> float:
        return self.beta(g, t_new) / self.beta(g, t)


def constant_schedule(model: LcmmCost, t0: float = 0.0) -> Schedule:
    return Schedule(tuple(BlockSchedule() for _ in model.blocks), t0)


@dataclass
class TimedState:
    q: np.ndarray
    t: float
    solution: ArbitrageSolution


def model_at(model: LcmmCost, schedule: Schedule, t: float) -> LcmmCost:
    """The LCMM in effect at time t: per-block liquidity-scaled costs under
    the same constraints."""
    schedule.validate(model)
    scaled = []
    for g, c in enumerate(model.block_costs):
        b = schedule.beta(g, t)
        scaled.append(c if b == 1.0 else ScaledCost(c, b))
    return LcmmCost(model.space, model.blocks, scaled, model.A, model.b_c,
                    solve_tol=model.solve_tol)


def time_cost(model: LcmmCost, schedule: Schedule, q, t: float,
              tol: float = 1e-9):
    """Cost value and arbitrage solution at time t."""
    m = model_at(model, schedule, t)
    sol = m.solve(q, tol=tol)
    return sol.value, sol


def new_state(model: LcmmCost, schedule: Schedule, q, t: float,
              t_new: float) -> TimedState:
    """Advance the state from time t to t_new, preserving prices."""
    if not schedule.t0 <= t <= t_new:
        raise ValueError("need t0 <= t <= t_new")
    q = _as_vector(q, model.dim, "q")
    m_t = model_at(model, schedule, t)
    sol = m_t.solve(q)
    q_new = np.empty(model.dim)
    for g, idx in enumerate(model._slices):
        a = schedule.alpha(g, t, t_new)
        q_new[idx] = a * (q[idx] + sol.delta[idx]) - sol.delta[idx]
    return TimedState(q_new, t_new, sol)


def divergence_decomposition(model: LcmmCost, schedule: Schedule, mu, q,
                             t: float, t_new: float):
    """Both sides of the time-update divergence identity.

    lhs: divergence at the advanced state under the time-t_new cost.
    rhs: sum over blocks of alpha_g times the time-t block divergence at the
    arbitrage-adjusted state, plus the constraint-slack term.
    Returns (lhs, rhs, per-block terms).
    """
    mu = _as_vector(mu, model.dim, "mu")
    q = _as_vector(q, model.dim, "q")
    ts = new_state(model, schedule, q, t, t_new)
    m_new = model_at(model, schedule, t_new)
    lhs = m_new.divergence(mu, ts.q)
    shifted = q + ts.solution.delta
    per_block = []
    rhs = (float((model.A.T @ mu - model.b_c) @ ts.solution.eta)
           if ts.solution.eta.size else 0.0)
    for g, idx in enumerate(model._slices):
        c = model.block_costs[g]
        c_t = c if schedule.beta(g, t) == 1.0 else ScaledCost(c, schedule.beta(g, t))
        term = schedule.alpha(g, t, t_new) * c_t.divergence(mu[idx], shifted[idx])
        per_block.append(term)
        rhs += term
    return lhs, rhs, per_block


@dataclass
class PartialDecreaseAudit:
    report: DesiderataReport
    drops: dict  # realization -> (measured, predicted)
    tightness: object
    alpha: float
    passed: bool


def partial_decrease_audit(model: LcmmCost, schedule: Schedule, g: int, q,
                           t: float, t_new: float, tol: float = 1e-6,
                           seed: int = 0) -> PartialDecreaseAudit:
    """Audit a single-block liquidity decrease against the update desiderata.

    Only block g's schedule may move on (t, t_new]. Conditional prices and
    excess utility for the block-payoff observation are preserved; the
    per-realization utility drop equals (1 - alpha_g) times the time-t block
    divergence from the realization to the arbitrage-adjusted block state.
    Strict decrease additionally requires a differentiable, tight block.
    """
    from .lcmm import tightness_check

    schedule.validate(model)
    for g2 in range(len(model.blocks.blocks)):
        if g2 != g and abs(schedule.beta(g2, t_new) - schedule.beta(g2, t)) > 1e-12:
            raise ValueError("only block g's schedule may change on (t, t_new]")
    q = _as_vector(q, model.dim, "q")
    obs = observe_block_payoff(model.space, model.blocks.blocks[g])
    ts = new_state(model, schedule, q, t, t_new)
    m_old = model_at(model, schedule, t)
    m_new = model_at(model, schedule, t_new)
    report = check_desiderata((m_old, q), (m_new, ts.q), obs, tol=tol,
                              seed=seed)
    alpha = schedule.alpha(g, t, t_new)
    idx = model._slices[g]
    c_t = (model.block_costs[g] if schedule.beta(g, t) == 1.0
           else ScaledCost(model.block_costs[g], schedule.beta(g, t)))
    shifted_block = (q + ts.solution.delta)[idx]
    drops = {}
    drop_ok = True
    for x in obs.realizations:
        cell = obs.cell(x)
        measured = (util_event(m_old, cell, q).value
                    - util_event(m_new, cell, ts.q).value)
        predicted = (1.0 - alpha) * c_t.divergence(np.asarray(x), shifted_block)
        drops[x] = (measured, predicted)
        if abs(measured - predicted) > tol:
            drop_ok = False
    tight = tightness_check(model, g)
    need_strict = bool(tight) and model.block_costs[g].differentiable
    rows_ok = (report.row("CONDPRICE").passed and report.row("EXUTIL").passed
               and report.row("PRICE").passed)
    if need_strict and alpha < 1.0:
        rows_ok = rows_ok and report.row("DECUTIL").passed
    return PartialDecreaseAudit(report, drops, tight, alpha,
                                rows_ok and drop_ok)
