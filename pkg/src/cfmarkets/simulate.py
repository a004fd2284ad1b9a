"""Trading protocols, scripted agents, ledgers, and loss-bound verification.

Protocol 1 (sudden revelation): trade under C, switch to the revelation cost
at the announced time, keep trading, settle. Protocol 2 (gradual decrease):
an LCMM whose state is advanced along liquidity schedules before each trade.
The worst-case maker loss for either protocol is the largest divergence from
the initial state to a payoff vertex, and settlement accounting verifies it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .costs import CostModel, _as_vector
from .gradual import Schedule, model_at, new_state
from .lcmm import LcmmCost
from .markets import Observation
from .switching import SwitchPlan, plan_switch
from .utility import optimizing_sequence, util_event


class InconsistentPlanError(RuntimeError):
    """Raised when a protocol would trade through an inconsistent switch."""

    def __init__(self, plan: SwitchPlan):
        self.plan = plan
        super().__init__(
            f"switch plan is inconsistent (worst violation "
            f"{plan.consistency.worst_violation:.6g}); pass "
            f"allow_inconsistent=True to proceed")


@dataclass
class TradeRecord:
    time: float
    trader: str
    bundle: np.ndarray
    cost: float
    state_before: np.ndarray
    state_after: np.ndarray


@dataclass
class Ledger:
    records: list = field(default_factory=list)
    events: list = field(default_factory=list)
    outcome: object = None
    payouts: dict = field(default_factory=dict)
    costs: dict = field(default_factory=dict)
    trader_pnl: dict = field(default_factory=dict)
    maker_loss: float = 0.0
    final_state: np.ndarray | None = None
    plan: SwitchPlan | None = None

    def record_trade(self, time, trader, bundle, cost, before, after):
        self.records.append(TradeRecord(time, trader, np.asarray(bundle),
                                        float(cost), np.asarray(before),
                                        np.asarray(after)))
        self.costs[trader] = self.costs.get(trader, 0.0) + float(cost)

    def settle(self, space, outcome):
        self.outcome = outcome
        rho = space.payoff_of(outcome)
        for rec in self.records:
            self.payouts[rec.trader] = (self.payouts.get(rec.trader, 0.0)
                                        + float(rec.bundle @ rho))
        traders = set(self.costs) | set(self.payouts)
        for name in traders:
            self.trader_pnl[name] = (self.payouts.get(name, 0.0)
                                     - self.costs.get(name, 0.0))
        self.maker_loss = (sum(self.payouts.values())
                           - sum(self.costs.values()))


class TraderAgent:
    kind = "agent"

    def __init__(self, name: str, times, budget: float | None = None):
        self.name = name
        self.times = tuple(sorted(float(t) for t in times))
        self.budget = budget

    def bundle(self, model: CostModel, q, t, rng) -> np.ndarray:
        raise NotImplementedError

    def _cap(self, model, q, r):
        if self.budget is None:
            return r
        c = model.trade_cost(q, r)
        if c <= self.budget:
            return r
        # shrink until affordable; convexity makes this monotone
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if model.trade_cost(q, mid * r) <= self.budget:
                lo = mid
            else:
                hi = mid
        return lo * r


class BeliefTrader(TraderAgent):
    """Risk-neutral trader moving the state to its belief's price state."""

    kind = "belief"

    def __init__(self, name, times, mu, budget=None):
        super().__init__(name, times, budget)
        self.mu = np.asarray(mu, dtype=float)

    def bundle(self, model, q, t, rng):
        q = np.asarray(q, dtype=float)
        try:
            target = model.state_with_price(self.mu)
            r = target - q
        except NotImplementedError:
            # no closed-form state inverse: maximize expected profit directly
            from scipy.optimize import minimize

            def neg_profit(r):
                return model.trade_cost(q, r) - float(self.mu @ r)

            res = minimize(neg_profit, np.zeros(model.dim), method="Powell",
                           options={"xtol": 1e-10, "ftol": 1e-12,
                                    "maxiter": 2000})
            r = res.x
        return self._cap(model, q, r)


class NoiseTrader(TraderAgent):
    """Seeded bounded random bundles."""

    kind = "noise"

    def __init__(self, name, times, scale: float = 1.0, budget=None):
        super().__init__(name, times, budget)
        self.scale = float(scale)

    def bundle(self, model, q, t, rng):
        r = rng.uniform(-self.scale, self.scale, size=model.dim)
        return self._cap(model, q, r)


class JitArbitrageur(TraderAgent):
    """Knows the realization; chases the guaranteed payoff greedily."""

    kind = "jit"

    def __init__(self, name, times, obs: Observation, x, n_steps: int = 60,
                 budget=None):
        super().__init__(name, times, budget)
        self.obs = obs
        self.x = x
        self.n_steps = n_steps

    def bundle(self, model, q, t, rng):
        cell = self.obs.cell(self.x)
        if util_event(model, cell, q).value <= 1e-12:
            return np.zeros(model.dim)
        seq = optimizing_sequence(model, cell, q, self.n_steps)
        return self._cap(model, q, seq.bundle)


def run_protocol1(model: CostModel, s_ini, obs: Observation, traders,
                  switch_time: float, outcome, seed: int = 0,
                  allow_inconsistent: bool = False,
                  switch_boundary: str = "after",
                  plan_tol: float = 1e-7) -> Ledger:
    """Sudden-revelation run: trade, switch at switch_time, trade, settle.

    Trades strictly before switch_time price under the original cost; trades
    at or after it price under the switched cost (switch_boundary="before"
    moves the boundary so that trades exactly at switch_time still price
    under the original cost).
    """
    if switch_boundary not in ("after", "before"):
        raise ValueError("switch_boundary must be 'after' or 'before'")
    obs.validate(model.space)
    x_true = obs.of(outcome)
    for tr in traders:
        if isinstance(tr, JitArbitrageur):
            if tr.x != x_true:
                raise ValueError("arbitrageur realization contradicts settlement")
            if tr.times and tr.times[0] < switch_time:
                # acting before the observation is announced is disallowed
                raise ValueError("arbitrageur may only act at/after the switch")
    rng = np.random.default_rng(seed)
    q = _as_vector(s_ini, model.dim, "s_ini")
    ledger = Ledger()
    events = sorted(((t, i, tr) for i, tr in enumerate(traders)
                     for t in tr.times), key=lambda e: (e[0], e[1]))
    current = model
    switched = False

    def maybe_switch(now: float):
        nonlocal current, switched
        due = (now >= switch_time if switch_boundary == "after"
               else now > switch_time)
        if switched or not due:
            return
        plan = plan_switch(model, obs, q, tol=plan_tol)
        ledger.plan = plan
        ledger.events.append({"time": switch_time, "event": "switch",
                              "consistent": plan.consistency.consistent})
        if not plan.consistency.consistent and not allow_inconsistent:
            raise InconsistentPlanError(plan)
        current = plan.switched
        switched = True

    for t, _, tr in events:
        maybe_switch(t)
        r = tr.bundle(current, q, t, rng)
        c = current.trade_cost(q, r)
        ledger.record_trade(t, tr.name, r, c, q, q + r)
        q = q + r
    maybe_switch(np.inf)
    ledger.final_state = q
    ledger.settle(model.space, outcome)
    return ledger


@dataclass
class TradeRequest:
    time: float
    trader: str
    bundle: np.ndarray | None = None
    agent: TraderAgent | None = None


def run_protocol2(model: LcmmCost, schedule: Schedule, s0, t0: float,
                  requests, outcome, seed: int = 0) -> Ledger:
    """Gradual-decrease run: advance the state along the schedules before
    each request, trade at the request's time, settle."""
    schedule.validate(model)
    rng = np.random.default_rng(seed)
    q = _as_vector(s0, model.dim, "s0")
    t = float(t0)
    ledger = Ledger()
    for req in requests:
        if req.time < t:
            raise ValueError("request times must be non-decreasing")
        ts = new_state(model, schedule, q, t, req.time)
        if not np.array_equal(ts.q, q):
            ledger.events.append({"time": req.time, "event": "reanchor"})
        q, t = ts.q, req.time
        m_t = model_at(model, schedule, t)
        r = (np.asarray(req.bundle, dtype=float) if req.bundle is not None
             else req.agent.bundle(m_t, q, t, rng))
        c = m_t.trade_cost(q, r)
        ledger.record_trade(t, req.trader, r, c, q, q + r)
        q = q + r
    ledger.final_state = q
    ledger.settle(model.space, outcome)
    return ledger


def wc_loss_bound(m: CostModel, s) -> float:
    """Worst-case maker loss from state s: the largest divergence to a
    payoff vertex. Finite because the conjugate is finite on the hull."""
    s = _as_vector(s, m.dim, "s")
    return max(m.divergence(m.space.payoff_of(w), s) for w in m.space.outcomes)


def verify_loss(ledger: Ledger, bound: float, tol: float = 1e-6):
    """Check the settled maker loss against a worst-case bound."""
    if ledger.outcome is None:
        raise ValueError("ledger is not settled")
    slack = bound - ledger.maker_loss
    return slack >= -tol, slack
