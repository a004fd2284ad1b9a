"""Finite outcome spaces, payoff geometry, observations, and block structure.

A market is specified by a finite outcome set and a payoff matrix: row omega
gives the payoff of each of the K securities if omega occurs. The price space M
is the convex hull of those rows; M(E) restricts the hull to an event E.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import geometry


@dataclass(frozen=True)
class OutcomeSpace:
    """Finite outcome set with a payoff vector per outcome."""

    outcomes: tuple
    payoff: np.ndarray  # (n_outcomes, K)
    security_names: tuple = ()

    def __post_init__(self):
        payoff = np.atleast_2d(np.asarray(self.payoff, dtype=float))
        if len(self.outcomes) == 0:
            raise ValueError("need at least one outcome")
        if payoff.shape[0] != len(self.outcomes):
            raise ValueError("payoff rows must match outcomes")
        if payoff.shape[1] < 1:
            raise ValueError("need at least one security")
        if not np.all(np.isfinite(payoff)):
            raise ValueError("payoff entries must be finite")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ValueError("duplicate outcome identifiers")
        payoff = payoff.copy()
        payoff.setflags(write=False)
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "payoff", payoff)
        names = tuple(self.security_names) or tuple(
            f"s{i}" for i in range(payoff.shape[1]))
        if len(names) != payoff.shape[1]:
            raise ValueError("security_names length mismatch")
        object.__setattr__(self, "security_names", names)
        object.__setattr__(self, "_index",
                           {w: i for i, w in enumerate(self.outcomes)})

    @property
    def dim(self) -> int:
        return self.payoff.shape[1]

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def index(self, outcome) -> int:
        try:
            return self._index[outcome]
        except KeyError:
            raise KeyError(f"unknown outcome {outcome!r}") from None

    def payoff_of(self, outcome) -> np.ndarray:
        return self.payoff[self.index(outcome)]

    def vertices(self, outcomes=None) -> np.ndarray:
        """Payoff rows for the given event (default: all outcomes)."""
        if outcomes is None:
            return self.payoff
        idx = [self.index(w) for w in outcomes]
        return self.payoff[idx]


@dataclass(frozen=True)
class Observation:
    """Labeling of outcomes into an exhaustive, disjoint family of cells."""

    label: dict  # outcome -> realization
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "label", dict(self.label))
        cells: dict = {}
        for outcome, x in self.label.items():
            cells.setdefault(x, []).append(outcome)
        object.__setattr__(self, "_cells",
                           {x: tuple(ws) for x, ws in cells.items()})

    @property
    def realizations(self) -> tuple:
        return tuple(sorted(self._cells, key=repr))

    def cell(self, x) -> tuple:
        try:
            return self._cells[x]
        except KeyError:
            raise KeyError(f"unknown realization {x!r}") from None

    def cells(self) -> dict:
        return dict(self._cells)

    def of(self, outcome):
        return self.label[outcome]

    def validate(self, space: OutcomeSpace):
        if set(self.label) != set(space.outcomes):
            raise ValueError("observation must label every outcome exactly")
        return self


@dataclass(frozen=True)
class BlockStructure:
    """Partition of security indices into blocks."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(int(i) for i in g) for g in self.blocks)
        if not blocks or any(len(g) == 0 for g in blocks):
            raise ValueError("blocks must be non-empty")
        flat = [i for g in blocks for i in g]
        if len(flat) != len(set(flat)):
            raise ValueError("blocks must be disjoint")
        object.__setattr__(self, "blocks", blocks)

    def validate_cover(self, dim: int):
        flat = sorted(i for g in self.blocks for i in g)
        if flat != list(range(dim)):
            raise ValueError("blocks must cover all security indices")
        return self

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self):
        return len(self.blocks)


@dataclass(frozen=True)
class ExposureWitness:
    """Linear functional whose argmax over payoffs is exactly one cell."""

    vector: np.ndarray
    margin: float

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float).copy()
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)
        if not self.margin > 0:
            raise ValueError("margin must be positive")


def conditional_outcomes(space: OutcomeSpace, obs: Observation, x) -> tuple:
    """Outcomes consistent with the realization x."""
    obs.validate(space)
    return obs.cell(x)


def membership(space: OutcomeSpace, mu, outcomes=None, tol: float = 1e-9):
    """Convex weights over the event's payoff vertices reconstructing mu.

    Returns a dict outcome -> weight, or None when mu is outside the hull
    (within the L-inf tolerance).
    """
    event = tuple(outcomes) if outcomes is not None else space.outcomes
    if len(event) == 0:
        raise ValueError("event must be nonempty")
    lam = geometry.hull_weights(space.vertices(event), mu, tol)
    if lam is None:
        return None
    return {w: float(l) for w, l in zip(event, lam)}


def probe_points(space: OutcomeSpace, outcomes=None) -> np.ndarray:
    """Vertices of an event hull plus all pairwise midpoints."""
    V = space.vertices(outcomes)
    points = [V]
    n = V.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            points.append(((V[i] + V[j]) / 2.0)[None, :])
    return np.vstack(points)


def face_check(space: OutcomeSpace, obs: Observation, x,
               tol: float = 1e-9) -> bool:
    """Whether the hull of cell x is a face of the full price space.

    Brute-force sampled check: every probe point of the cell hull must admit
    no convex decomposition over all vertices that puts more than tol weight
    outside the cell. Sound at polytope test scale (probes are vertices and
    pairwise midpoints), documented as a sampled check.
    """
    obs.validate(space)
    cell = obs.cell(x)
    inside = np.array([obs.of(w) == x for w in space.outcomes])
    for mu in probe_points(space, cell):
        outside = geometry.max_outside_weight(space.payoff, inside, mu, tol)
        if outside is None:  # numerically outside the hull; skip
            continue
        if outside > max(tol, 1e-7):
            return False
    return True


def _is_simplex_market(space: OutcomeSpace) -> bool:
    if space.n_outcomes != space.dim:
        return False
    return np.allclose(space.payoff, np.eye(space.dim), atol=1e-12)


def _binary_submarket_witness(space: OutcomeSpace, cell) -> np.ndarray | None:
    """Constructive +-1/0 witness for cells that fix a subset of binary
    payoff coordinates to a realization, leaving the rest free."""
    V = space.vertices(cell)
    if not np.all((np.abs(space.payoff) < 1e-12) |
                  (np.abs(space.payoff - 1.0) < 1e-12)):
        return None
    fixed = [i for i in range(space.dim) if np.ptp(V[:, i]) < 1e-12]
    if not fixed:
        return None
    v = np.zeros(space.dim)
    for i in fixed:
        v[i] = 1.0 if V[0, i] > 0.5 else -1.0
    return v


def exposure_witness(space: OutcomeSpace, obs: Observation,
                     margin: float = 1.0) -> dict:
    """Separating direction per cell, or None for cells that are not exposed.

    A cell is exposed when it is exactly the argmax set of some linear
    function of payoffs. Simplex markets and binary-coordinate cells have
    constructive witnesses; otherwise a linear feasibility problem decides.
    """
    obs.validate(space)
    out: dict = {}
    for x in obs.realizations:
        cell = obs.cell(x)
        cell_set = set(cell)
        others = [w for w in space.outcomes if w not in cell_set]
        candidate = None
        if _is_simplex_market(space):
            v = np.zeros(space.dim)
            for w in cell:
                v[space.index(w)] = 1.0
            candidate = v
        else:
            candidate = _binary_submarket_witness(space, cell)
        if candidate is not None and others:
            vin = space.vertices(cell) @ candidate
            vout = space.vertices(others) @ candidate
            if not (np.ptp(vin) < 1e-12 and vin.min() >= vout.max() + margin):
                candidate = None
        if candidate is None:
            found = geometry.separating_direction(
                space.vertices(cell),
                space.vertices(others) if others else np.empty((0, space.dim)),
                margin)
            candidate = None if found is None else found[0]
        out[x] = (None if candidate is None
                  else ExposureWitness(candidate, margin))
    return out


# ---------------------------------------------------------------------------
# Builders


def simplex_market(n: int, names=()) -> OutcomeSpace:
    """Complete market over n mutually exclusive outcomes (one security
    paying 1 per outcome)."""
    if n < 1:
        raise ValueError("need n >= 1")
    return OutcomeSpace(tuple(range(n)), np.eye(n), names)


def independent_binary_market(n: int) -> OutcomeSpace:
    """n binary securities over the outcome space {0,1}^n."""
    outcomes = tuple(product((0, 1), repeat=n))
    payoff = np.array(outcomes, dtype=float)
    return OutcomeSpace(outcomes, payoff)


def square_market() -> OutcomeSpace:
    """Two independent binary securities; price space is the unit square."""
    return independent_binary_market(2)


def single_binary_market() -> OutcomeSpace:
    """One binary security paying 0 or 1."""
    return OutcomeSpace((0, 1), np.array([[0.0], [1.0]]))


def single_security_market(values) -> OutcomeSpace:
    """One security paying one of the given distinct values."""
    values = tuple(values)
    return OutcomeSpace(values, np.array(values, dtype=float)[:, None])


def observe_coordinate(space: OutcomeSpace, i: int) -> Observation:
    """Observation revealing security i's payoff."""
    return Observation({w: float(space.payoff_of(w)[i]) for w in space.outcomes},
                       name=f"coordinate {i}")


def observe_sum(space: OutcomeSpace) -> Observation:
    """Observation revealing the sum of all payoffs."""
    return Observation({w: float(space.payoff_of(w).sum())
                        for w in space.outcomes}, name="sum")


def observe_identity(space: OutcomeSpace) -> Observation:
    """Observation revealing the outcome itself."""
    return Observation({w: w for w in space.outcomes}, name="identity")


def observe_partition(space: OutcomeSpace, groups) -> Observation:
    """Observation from an explicit list of outcome groups."""
    label = {}
    for x, group in enumerate(groups):
        for w in group:
            label[w] = x
    return Observation(label, name="partition").validate(space)


def trivial_observation(space: OutcomeSpace) -> Observation:
    """Single-cell observation (nothing is revealed)."""
    return Observation({w: 0 for w in space.outcomes}, name="trivial")


def observe_block_payoff(space: OutcomeSpace, block) -> Observation:
    """Observation revealing the payoffs of the securities in `block`."""
    block = tuple(block)
    return Observation(
        {w: tuple(float(v) for v in space.payoff_of(w)[list(block)])
         for w in space.outcomes},
        name=f"block {block}")
