"""Cost-function market makers: potentials, conjugates, divergences, prices.

A cost model prices bundle trades through a convex potential C: moving the
outstanding-share state from q to q+r costs C(q+r) - C(q). The convex
conjugate R of C is finite exactly on the price space M (bounded loss, no
arbitrage), and the mixed Bregman divergence

    D(mu || q) = R(mu) + C(q) - q.mu

is the market maker's utility for the belief mu at state q. Prices are the
(sub)gradient of C; non-differentiable kinds report a per-coordinate interval
(the bid-ask spread).

Infinity is used as an explicit saturating sentinel: R and D return +inf
outside the price space, and comparisons treat it as maximal.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logsumexp, xlogy

from . import geometry
from ._solvers import project_onto_hull
from .markets import OutcomeSpace

INF = float("inf")

_LOG_CLIP = 1e-300  # keeps entropy gradients finite at the hull boundary
_STATE_CLIP = 120.0  # logit magnitude used when inverting boundary prices


def _as_vector(x, dim: int, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape[0] != dim:
        raise ValueError(f"{name} must have length {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass(frozen=True)
class PriceSet:
    """Per-coordinate price interval; a point when lo == hi."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1).copy()
        hi = np.asarray(self.hi, dtype=float).reshape(-1).copy()
        if lo.shape != hi.shape or np.any(hi < lo - 1e-12):
            raise ValueError("invalid price interval")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, p) -> "PriceSet":
        p = np.asarray(p, dtype=float)
        return cls(p, p)

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    @property
    def spread(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return bool(np.max(self.spread, initial=0.0) <= 1e-12)

    def contains(self, mu, tol: float = 1e-9) -> bool:
        mu = np.asarray(mu, dtype=float)
        return bool(np.all(mu >= self.lo - tol) and np.all(mu <= self.hi + tol))

    def agrees_with(self, other: "PriceSet", tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.lo - other.lo), initial=0.0) <= tol
                    and np.max(np.abs(self.hi - other.hi), initial=0.0) <= tol)


def _hull_union(sets) -> PriceSet:
    los = np.array([p.lo for p in sets])
    his = np.array([p.hi for p in sets])
    return PriceSet(los.min(axis=0), his.max(axis=0))


class CostModel:
    """Abstract convex cost over a finite-outcome market."""

    kind = "abstract"
    strictly_convex = False
    differentiable = True
    domain_tol = 1e-9

    def __init__(self, space: OutcomeSpace):
        self.space = space

    @property
    def dim(self) -> int:
        return self.space.dim

    # -- core surface ------------------------------------------------------
    def cost(self, q) -> float:
        raise NotImplementedError

    def price(self, q) -> PriceSet:
        raise NotImplementedError

    def conjugate(self, mu) -> float:
        raise NotImplementedError

    def conjugate_grad(self, mu) -> np.ndarray:
        raise NotImplementedError(f"{self.kind}: no conjugate gradient")

    def divergence(self, mu, q) -> float:
        r = self.conjugate(mu)
        if not np.isfinite(r):
            return INF
        mu = _as_vector(mu, self.dim, "mu")
        q = _as_vector(q, self.dim, "q")
        d = r + self.cost(q) - float(q @ mu)
        if -1e-9 < d < 0.0:  # roundoff below the theoretical floor
            d = 0.0
        return d

    def trade_cost(self, q, r) -> float:
        q = _as_vector(q, self.dim, "q")
        r = _as_vector(r, self.dim, "r")
        return self.cost(q + r) - self.cost(q)

    def state_with_price(self, mu) -> np.ndarray:
        """A state whose price (set) contains mu; optional per kind."""
        raise NotImplementedError(f"{self.kind}: no closed-form state inverse")


class LmsrCost(CostModel):
    """Logarithmic market scoring rule over a complete market.

    C(q) = ln sum_i exp(q_i); prices are the softmax; R is negative entropy
    on the probability simplex.
    """

    kind = "lmsr"
    strictly_convex = True
    differentiable = True

    def __init__(self, space: OutcomeSpace):
        super().__init__(space)
        if not (space.n_outcomes == space.dim
                and np.allclose(space.payoff, np.eye(space.dim), atol=1e-12)):
            raise ValueError("lmsr requires a complete (simplex) market")

    def cost(self, q) -> float:
        q = _as_vector(q, self.dim, "q")
        return float(logsumexp(q))

    def price(self, q) -> PriceSet:
        q = _as_vector(q, self.dim, "q")
        z = q - np.max(q)
        e = np.exp(z)
        return PriceSet.point(e / e.sum())

    def conjugate(self, mu) -> float:
        mu = np.asarray(mu, dtype=float).reshape(-1)
        if mu.shape[0] != self.dim:
            raise ValueError("mu dimension mismatch")
        if np.any(mu < -self.domain_tol) or abs(mu.sum() - 1.0) > self.domain_tol:
            return INF
        m = np.clip(mu, 0.0, None)
        return float(np.sum(xlogy(m, m)))

    def conjugate_grad(self, mu) -> np.ndarray:
        m = np.clip(np.asarray(mu, dtype=float), _LOG_CLIP, None)
        return np.log(m) + 1.0

    def state_with_price(self, mu) -> np.ndarray:
        m = np.clip(np.asarray(mu, dtype=float), 0.0, None)
        return np.log(np.clip(m, np.exp(-_STATE_CLIP), None))


class IndependentBinaryCost(CostModel):
    """Product of binary LMSR markets over {0,1}^K.

    C(q) = sum_i ln(1 + e^{q_i}); prices are per-coordinate sigmoids; R is a
    sum of per-coordinate binary entropies on the unit cube.
    """

    kind = "product-lmsr"
    strictly_convex = True
    differentiable = True

    def __init__(self, space: OutcomeSpace):
        super().__init__(space)
        expected = sorted(product((0, 1), repeat=space.dim))
        got = sorted(tuple(int(round(v)) for v in row) for row in space.payoff)
        ok = (space.n_outcomes == 2 ** space.dim and got == expected
              and np.allclose(space.payoff, np.round(space.payoff), atol=1e-12))
        if not ok:
            raise ValueError("product-lmsr requires the full binary cube")

    def cost(self, q) -> float:
        q = _as_vector(q, self.dim, "q")
        return float(np.sum(np.logaddexp(0.0, q)))

    def price(self, q) -> PriceSet:
        q = _as_vector(q, self.dim, "q")
        return PriceSet.point(expit(q))

    def conjugate(self, mu) -> float:
        mu = np.asarray(mu, dtype=float).reshape(-1)
        if mu.shape[0] != self.dim:
            raise ValueError("mu dimension mismatch")
        if np.any(mu < -self.domain_tol) or np.any(mu > 1.0 + self.domain_tol):
            return INF
        m = np.clip(mu, 0.0, 1.0)
        return float(np.sum(xlogy(m, m) + xlogy(1.0 - m, 1.0 - m)))

    def conjugate_grad(self, mu) -> np.ndarray:
        m = np.clip(np.asarray(mu, dtype=float), _LOG_CLIP, 1.0 - 1e-16)
        return np.log(m) - np.log1p(-m)

    def state_with_price(self, mu) -> np.ndarray:
        m = np.clip(np.asarray(mu, dtype=float), 0.0, 1.0)
        q = np.log(np.clip(m, _LOG_CLIP, None)) - np.log(np.clip(1.0 - m, _LOG_CLIP, None))
        return np.clip(q, -_STATE_CLIP, _STATE_CLIP)


class PiecewiseLinearCost(CostModel):
    """Single binary security priced by C(q) = max(0, q).

    The conjugate is the indicator of [0,1]; at q = 0 the price is the full
    bid-ask interval [0,1].
    """

    kind = "piecewise-linear"
    strictly_convex = False
    differentiable = False

    def __init__(self, space: OutcomeSpace):
        super().__init__(space)
        if space.dim != 1 or sorted(space.payoff[:, 0]) != [0.0, 1.0]:
            raise ValueError("piecewise-linear requires one 0/1 security")

    def cost(self, q) -> float:
        q = _as_vector(q, 1, "q")
        return float(max(0.0, q[0]))

    def price(self, q) -> PriceSet:
        q = _as_vector(q, 1, "q")
        if abs(q[0]) <= 1e-12:
            return PriceSet(np.array([0.0]), np.array([1.0]))
        p = 1.0 if q[0] > 0 else 0.0
        return PriceSet.point(np.array([p]))

    def conjugate(self, mu) -> float:
        mu = np.asarray(mu, dtype=float).reshape(-1)
        if mu.shape[0] != 1:
            raise ValueError("mu dimension mismatch")
        if mu[0] < -self.domain_tol or mu[0] > 1.0 + self.domain_tol:
            return INF
        return 0.0

    def conjugate_grad(self, mu) -> np.ndarray:
        return np.zeros(1)

    def state_with_price(self, mu) -> np.ndarray:
        return np.zeros(1)


class ExponentialFamilyCost(CostModel):
    """Log-partition cost over arbitrary payoff vectors.

    C(q) = ln sum_w exp(rho(w).q). Generalizes the LMSR to non-identity
    payoffs; the conjugate has no closed form and is evaluated numerically.
    """

    kind = "exp-family"
    strictly_convex = False
    differentiable = True

    def cost(self, q) -> float:
        q = _as_vector(q, self.dim, "q")
        return float(logsumexp(self.space.payoff @ q))

    def price(self, q) -> PriceSet:
        q = _as_vector(q, self.dim, "q")
        z = self.space.payoff @ q
        z -= np.max(z)
        w = np.exp(z)
        w /= w.sum()
        return PriceSet.point(w @ self.space.payoff)

    def conjugate(self, mu) -> float:
        mu = _as_vector(mu, self.dim, "mu")
        if not geometry.hull_contains(self.space.payoff, mu, self.domain_tol):
            return INF
        res = minimize(lambda q: self.cost(q) - mu @ q, np.zeros(self.dim),
                       method="BFGS", options={"gtol": 1e-12, "maxiter": 500})
        return float(-res.fun)


class RestrictedCost(CostModel):
    """Cost of the base market restricted to an event E.

    C_E(q) = sup over mu in the hull of E's payoffs of [q.mu - R(mu)].
    Bounded-loss and arbitrage-free for outcomes in E. Complete markets and
    binary-product cells have closed forms; otherwise the sup is solved by
    conditional gradient over the event's hull vertices.
    """

    kind = "restricted"

    def __init__(self, base: CostModel, outcomes):
        super().__init__(base.space)
        self.base = base
        self.event = tuple(outcomes)
        if len(self.event) == 0:
            raise ValueError("event must be nonempty")
        self.vertices = base.space.vertices(self.event)
        self.strictly_convex = base.strictly_convex
        self.differentiable = base.differentiable
        self._mode = "generic"
        self.fixed_coords: dict[int, float] = {}
        if isinstance(base, LmsrCost):
            self._mode = "simplex"
            self._coords = np.flatnonzero(self.vertices.sum(axis=0) > 0.5)
        elif isinstance(base, IndependentBinaryCost):
            fixed = {i: float(self.vertices[0, i])
                     for i in range(self.dim)
                     if np.ptp(self.vertices[:, i]) < 1e-12}
            free = [i for i in range(self.dim) if i not in fixed]
            patterns = {tuple(int(round(v)) for v in row[free])
                        for row in self.vertices}
            if len(self.event) == 2 ** len(free) and len(patterns) == len(self.event):
                self._mode = "product"
                self.fixed_coords = fixed
                self._free = np.array(free, dtype=int)
        if self._mode == "generic" and not isinstance(base, CostModel):
            raise TypeError("base must be a CostModel")

    def cost(self, q) -> float:
        q = _as_vector(q, self.dim, "q")
        if self._mode == "simplex":
            return float(logsumexp(q[self._coords]))
        if self._mode == "product":
            fixed = sum(x * q[i] for i, x in self.fixed_coords.items())
            return float(fixed + np.sum(np.logaddexp(0.0, q[self._free])))
        res = self._project(q)
        return float(q @ res.mu - self.base.conjugate(res.mu))

    def _project(self, q):
        return project_onto_hull(self.vertices, self.base.conjugate,
                                 self.base.conjugate_grad, q)

    def price(self, q) -> PriceSet:
        q = _as_vector(q, self.dim, "q")
        if self._mode == "simplex":
            p = np.zeros(self.dim)
            z = q[self._coords] - np.max(q[self._coords])
            e = np.exp(z)
            p[self._coords] = e / e.sum()
            return PriceSet.point(p)
        if self._mode == "product":
            p = np.empty(self.dim)
            p[self._free] = expit(q[self._free])
            for i, x in self.fixed_coords.items():
                p[i] = x
            return PriceSet.point(p)
        return PriceSet.point(self._project(q).mu)

    def conjugate(self, mu) -> float:
        mu = _as_vector(mu, self.dim, "mu")
        if not geometry.hull_contains(self.vertices, mu, self.domain_tol):
            return INF
        return self.base.conjugate(mu)

    def conjugate_grad(self, mu) -> np.ndarray:
        return self.base.conjugate_grad(mu)

    def state_with_price(self, mu) -> np.ndarray:
        if self._mode in ("simplex", "product"):
            q = self.base.state_with_price(mu)
            for i in self.fixed_coords:
                q[i] = 0.0
            return q
        raise NotImplementedError("no closed-form state inverse for generic events")


class SwitchedCost(CostModel):
    """Post-revelation cost: pointwise max of offset restricted costs.

    C_sw(q) = max_x [ b_x + C_x(q) ] where C_x restricts the base cost to the
    cell of realization x and b_x is the utility the maker forgoes for that
    cell at the switch state. The conjugate (the convex roof of the offset
    conjugates) is never materialized; within a cell it is R(mu) - b_x, and
    off the cells it is bounded by a sampled convex-combination program.
    """

    kind = "switched"
    strictly_convex = False
    differentiable = False

    def __init__(self, base: CostModel, observation, switch_state,
                 offsets: dict, cell_models: dict):
        super().__init__(base.space)
        self.base = base
        self.observation = observation
        self.switch_state = _as_vector(switch_state, base.space.dim, "s")
        self.offsets = dict(offsets)
        self.cell_models = dict(cell_models)
        self.realizations = observation.realizations

    def cost(self, q) -> float:
        q = _as_vector(q, self.dim, "q")
        return max(self.offsets[x] + self.cell_models[x].cost(q)
                   for x in self.realizations)

    def argmax_cells(self, q, tie_tol: float = 1e-9) -> list:
        q = _as_vector(q, self.dim, "q")
        vals = {x: self.offsets[x] + self.cell_models[x].cost(q)
                for x in self.realizations}
        top = max(vals.values())
        return [x for x in self.realizations if vals[x] >= top - tie_tol]

    def price(self, q) -> PriceSet:
        cells = self.argmax_cells(q)
        return _hull_union([self.cell_models[x].price(q) for x in cells])

    def containing_cells(self, mu, tol: float | None = None) -> list:
        tol = self.domain_tol if tol is None else tol
        mu = _as_vector(mu, self.dim, "mu")
        return [x for x in self.realizations
                if geometry.hull_contains(self.cell_models[x].vertices, mu, tol)]

    def conjugate(self, mu) -> float:
        mu = _as_vector(mu, self.dim, "mu")
        candidates = [self.base.conjugate(mu) - self.offsets[x]
                      for x in self.containing_cells(mu)]
        # convex-roof value: mixtures across cells can undercut the in-cell
        # offset conjugate exactly when the switch is inconsistent
        points, values = self._roof_samples()
        out = geometry.min_weighted_value(points, values, mu, self.domain_tol)
        if out is not None:
            candidates.append(out[0])
        if not candidates:
            return INF
        return min(candidates)

    def _roof_samples(self):
        if getattr(self, "_roof_cache", None) is None:
            from .markets import probe_points
            chunks, values = [], []
            for x in self.realizations:
                pts = probe_points(self.space, self.cell_models[x].event)
                chunks.append(pts)
                values.extend(self.base.conjugate(p) - self.offsets[x]
                              for p in pts)
            self._roof_cache = (np.vstack(chunks), np.array(values))
        return self._roof_cache

    def conjugate_grad(self, mu) -> np.ndarray:
        return self.base.conjugate_grad(mu)

    def state_with_price(self, mu) -> np.ndarray:
        mu = _as_vector(mu, self.dim, "mu")
        cells = self.containing_cells(mu)
        if not cells:
            raise ValueError("mu is not in any revelation cell")
        model = self.cell_models[cells[0]]
        q = model.state_with_price(mu)
        # push fixed coordinates past the switch state so this cell wins the max
        for i, x in model.fixed_coords.items():
            q[i] = self.switch_state[i] + (_STATE_CLIP if x > 0.5 else -_STATE_CLIP)
        return q


class ScaledCost(CostModel):
    """Liquidity-scaled cost C_a(q) = a C(q/a) for a in (0,1].

    Prices are preserved under q -> a q; the conjugate and every divergence
    scale by a, so utility for all beliefs decreases by the multiplier.
    """

    kind = "scaled"

    def __init__(self, base: CostModel, alpha: float):
        super().__init__(base.space)
        if not 0.0 < alpha <= 1.0:
            raise ValueError("liquidity multiplier must be in (0, 1]")
        self.base = base
        self.alpha = float(alpha)
        self.strictly_convex = base.strictly_convex
        self.differentiable = base.differentiable

    def cost(self, q) -> float:
        q = _as_vector(q, self.dim, "q")
        return self.alpha * self.base.cost(q / self.alpha)

    def price(self, q) -> PriceSet:
        q = _as_vector(q, self.dim, "q")
        return self.base.price(q / self.alpha)

    def conjugate(self, mu) -> float:
        return self.alpha * self.base.conjugate(mu)

    def conjugate_grad(self, mu) -> np.ndarray:
        return self.alpha * self.base.conjugate_grad(mu)

    def state_with_price(self, mu) -> np.ndarray:
        return self.alpha * self.base.state_with_price(mu)


class ShiftedCost(CostModel):
    """State-translated cost C'(q) = C(q + shift); divergences transport
    exactly: D'(mu || q) = D(mu || q + shift)."""

    kind = "shifted"

    def __init__(self, base: CostModel, shift):
        super().__init__(base.space)
        self.base = base
        self.shift = _as_vector(shift, base.space.dim, "shift")
        self.strictly_convex = base.strictly_convex
        self.differentiable = base.differentiable

    def cost(self, q) -> float:
        q = _as_vector(q, self.dim, "q")
        return self.base.cost(q + self.shift)

    def price(self, q) -> PriceSet:
        q = _as_vector(q, self.dim, "q")
        return self.base.price(q + self.shift)

    def conjugate(self, mu) -> float:
        r = self.base.conjugate(mu)
        if not np.isfinite(r):
            return INF
        mu = _as_vector(mu, self.dim, "mu")
        return r - float(self.shift @ mu)

    def conjugate_grad(self, mu) -> np.ndarray:
        return self.base.conjugate_grad(mu) - self.shift

    def state_with_price(self, mu) -> np.ndarray:
        return self.base.state_with_price(mu) - self.shift


# ---------------------------------------------------------------------------
# Functional surface


def cost(m: CostModel, q) -> float:
    return m.cost(q)


def price(m: CostModel, q) -> PriceSet:
    return m.price(q)


def conjugate(m: CostModel, mu) -> float:
    return m.conjugate(mu)


def divergence(m: CostModel, mu, q) -> float:
    return m.divergence(mu, q)


def trade_cost(m: CostModel, q, r) -> float:
    return m.trade_cost(q, r)


def restricted_cost(m: CostModel, outcomes) -> RestrictedCost:
    return RestrictedCost(m, outcomes)


def scale_liquidity(m: CostModel, alpha: float) -> ScaledCost:
    return ScaledCost(m, alpha)


def finite_difference_price(m: CostModel, q, h: float = 1e-6,
                            kink_tol: float = 1e-7) -> PriceSet:
    """One-sided finite-difference price oracle with kink detection.

    A coordinate is a kink when the one-sided slopes differ by more than
    kink_tol; the interval then spans the two slopes.
    """
    q = _as_vector(q, m.dim, "q")
    c0 = m.cost(q)
    lo = np.empty(m.dim)
    hi = np.empty(m.dim)
    for i in range(m.dim):
        e = np.zeros(m.dim)
        e[i] = h
        up = (m.cost(q + e) - c0) / h
        dn = (c0 - m.cost(q - e)) / h
        if abs(up - dn) > kink_tol:
            lo[i], hi[i] = min(dn, up), max(dn, up)
        else:
            lo[i] = hi[i] = 0.5 * (dn + up)
    return PriceSet(lo, hi)
