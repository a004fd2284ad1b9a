"""Implicit submarket closing: switched costs, consistency, desiderata audit.

When an observation's realization becomes public, the maker switches from C
to the pointwise max of per-cell restricted costs, each offset by the utility
the maker was due for that cell at the switch state. The construction zeroes
the utility of knowing the realization; whether it also preserves conditional
prices and excess utility is exactly the consistency question checked here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .costs import (CostModel, PriceSet, RestrictedCost, ShiftedCost,
                    SwitchedCost, _as_vector)
from .markets import Observation, OutcomeSpace, exposure_witness, probe_points
from .utility import conditional_price, util_event


@dataclass
class ConsistencyVerdict:
    consistent: bool
    worst_violation: float
    witness: dict | None = None

    def __bool__(self):
        return self.consistent


@dataclass
class SwitchPlan:
    observation: Observation
    switch_state: np.ndarray
    offsets: dict
    cell_models: dict
    switched: SwitchedCost
    conditional_prices: dict
    consistency: ConsistencyVerdict
    shift: np.ndarray


@dataclass
class DesiderataRow:
    name: str
    passed: bool
    worst: float
    informational: bool = False
    details: dict = field(default_factory=dict)


@dataclass
class DesiderataReport:
    rows: dict

    def row(self, name: str) -> DesiderataRow:
        return self.rows[name]

    @property
    def all_pass(self) -> bool:
        return all(r.passed for r in self.rows.values() if not r.informational)


def plan_switch(m: CostModel, obs: Observation, s, tol: float = 1e-7,
                shift=None) -> SwitchPlan:
    """Build the post-revelation cost for observation `obs` at state s.

    Offsets are b_x = C(s) - C_x(s), which equals the divergence from s to
    the cell's conditional price; the switched cost is max_x [b_x + C_x] and
    agrees with C at s. The consistency verdict reports whether the switch
    also preserves conditional prices and excess utility.
    """
    obs.validate(m.space)
    s = _as_vector(s, m.dim, "s")
    cs = m.cost(s)
    cell_models = {x: RestrictedCost(m, obs.cell(x)) for x in obs.realizations}
    offsets = {}
    for x, cm in cell_models.items():
        b = cs - cm.cost(s)
        if b < -1e-8:
            raise AssertionError(f"negative switch offset for {x!r}: {b}")
        offsets[x] = max(b, 0.0)
    switched = SwitchedCost(m, obs, s, offsets, cell_models)
    cond = {x: conditional_price(m, obs.cell(x), s)[0]
            for x in obs.realizations}
    verdict = consistency_check(m, obs, s, tol=tol)
    shift = (np.zeros(m.dim) if shift is None
             else _as_vector(shift, m.dim, "shift"))
    return SwitchPlan(obs, s, offsets, cell_models, switched, cond, verdict,
                      shift)


def consistency_check(m: CostModel, obs: Observation, s,
                      tol: float = 1e-7) -> ConsistencyVerdict:
    """Sampled check that the offset conjugates admit a consistent convex roof.

    For each probe point mu of each cell hull (vertices and pairwise
    midpoints), the cheapest convex combination of per-cell probe points
    matching mu must not undercut the cell's own offset conjugate value.
    Overlapping cell hulls make the offset conjugate ill-defined and are
    reported as inconsistent outright.
    """
    obs.validate(m.space)
    s = _as_vector(s, m.dim, "s")
    cs = m.cost(s)
    xs = obs.realizations
    cell_models = {x: RestrictedCost(m, obs.cell(x)) for x in xs}
    offsets = {x: max(cs - cell_models[x].cost(s), 0.0) for x in xs}
    for i, x in enumerate(xs):
        for y in xs[i + 1:]:
            if geometry.hulls_intersect(cell_models[x].vertices,
                                        cell_models[y].vertices, tol=1e-9):
                return ConsistencyVerdict(False, float("inf"),
                                          {"overlap": (x, y)})
    points, values, owners = [], [], []
    for x in xs:
        pts = probe_points(m.space, obs.cell(x))
        for p in pts:
            points.append(p)
            values.append(m.conjugate(p) - offsets[x])
            owners.append(x)
    points = np.vstack(points)
    values = np.array(values)
    worst = 0.0
    witness = None
    for p, v, x in zip(points, values, owners):
        out = geometry.min_weighted_value(points, values, p, tol=1e-9)
        if out is None:  # pragma: no cover - p is itself a candidate
            continue
        low, weights = out
        violation = v - low
        if violation > worst:
            worst = violation
            witness = {"mu": p.copy(), "realization": x,
                       "value": v, "roof_value": low,
                       "weights": weights.copy()}
    if worst > tol:
        return ConsistencyVerdict(False, worst, witness)
    return ConsistencyVerdict(True, worst, None)


@dataclass
class FeasibilityResult:
    status: str  # "guaranteed" | "unknown"
    witnesses: dict

    def __bool__(self):
        return self.status == "guaranteed"


def feasibility_precheck(space: OutcomeSpace, obs: Observation) -> FeasibilityResult:
    """State-independent sufficient condition for a fully consistent switch.

    Guaranteed when every cell is exposed (the argmax set of some linear
    functional of payoffs). The condition is sufficient, not necessary, so
    the negative answer is "unknown" rather than "impossible".
    """
    witnesses = exposure_witness(space, obs)
    status = ("guaranteed" if all(w is not None for w in witnesses.values())
              else "unknown")
    return FeasibilityResult(status, witnesses)


def _cell_samples(space: OutcomeSpace, cell, n_random: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Probe grid inside a cell hull: vertices, midpoints, random points."""
    pts = [probe_points(space, cell)]
    V = space.vertices(cell)
    if n_random > 0 and V.shape[0] > 1:
        w = rng.dirichlet(np.ones(V.shape[0]), size=n_random)
        pts.append(w @ V)
    return np.vstack(pts)


def check_desiderata(old, new, obs: Observation, tol: float = 1e-6,
                     n_random: int = 32, seed: int = 0,
                     price_informational: bool = False) -> DesiderataReport:
    """Audit the five update desiderata between (model, state) pairs.

    old/new are (CostModel, state) tuples over the same outcome space.
    Rows: PRICE (price sets agree), CONDPRICE (per-cell conditional prices
    agree), ZEROUTIL (no post-update utility for any realization), DECUTIL
    (utility decreased wherever it was positive), EXUTIL (divergence change
    constant on each cell, so within-cell preferences are untouched).
    """
    m_old, s_old = old
    m_new, s_new = new
    if m_old.space is not m_new.space and \
            m_old.space.outcomes != m_new.space.outcomes:
        raise ValueError("models must share an outcome space")
    obs.validate(m_old.space)
    s_old = _as_vector(s_old, m_old.dim, "old state")
    s_new = _as_vector(s_new, m_new.dim, "new state")
    rng = np.random.default_rng(seed)
    rows = {}

    p_old, p_new = m_old.price(s_old), m_new.price(s_new)
    dev = max(float(np.max(np.abs(p_old.lo - p_new.lo), initial=0.0)),
              float(np.max(np.abs(p_old.hi - p_new.hi), initial=0.0)))
    rows["PRICE"] = DesiderataRow("PRICE", dev <= tol, dev,
                                  informational=price_informational)

    cp_dev = 0.0
    zero_worst = 0.0
    dec_ok = True
    dec_worst = 0.0
    ex_dev = 0.0
    details = {}
    for x in obs.realizations:
        cell = obs.cell(x)
        cp_o, _ = conditional_price(m_old, cell, s_old)
        cp_n, _ = conditional_price(m_new, cell, s_new)
        cp_dev = max(cp_dev, float(np.max(np.abs(cp_o - cp_n), initial=0.0)))

        u_old = util_event(m_old, cell, s_old).value
        u_new = util_event(m_new, cell, s_new).value
        zero_worst = max(zero_worst, u_new)
        if u_new > u_old + tol:
            dec_ok = False
        if u_old > tol and not u_new < u_old:
            dec_ok = False
        dec_worst = max(dec_worst, u_new - u_old)

        diffs = [m_old.divergence(mu, s_old) - m_new.divergence(mu, s_new)
                 for mu in _cell_samples(m_old.space, cell, n_random, rng)]
        diffs = [d for d in diffs if np.isfinite(d)]
        if diffs:
            ex_dev = max(ex_dev, float(max(diffs) - min(diffs)))
        details[x] = {"util_old": u_old, "util_new": u_new}

    rows["CONDPRICE"] = DesiderataRow("CONDPRICE", cp_dev <= tol, cp_dev)
    rows["ZEROUTIL"] = DesiderataRow("ZEROUTIL", zero_worst <= tol, zero_worst,
                                     details=details)
    rows["DECUTIL"] = DesiderataRow("DECUTIL", dec_ok, dec_worst,
                                    details=details)
    rows["EXUTIL"] = DesiderataRow("EXUTIL", ex_dev <= tol, ex_dev)
    return DesiderataReport(rows)


def shift_state(m: CostModel, s_new, s) -> CostModel:
    """Re-anchor a model so the state s plays the role of s_new.

    The returned model satisfies C'(q) = C(q + s_new - s); every desideratum
    verdict is identical between (C, s_new) and (C', s).
    """
    s_new = _as_vector(s_new, m.dim, "s_new")
    s = _as_vector(s, m.dim, "s")
    if np.array_equal(s_new, s):
        return m
    return ShiftedCost(m, s_new - s)
