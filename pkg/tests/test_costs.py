import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import logsumexp

from cfmarkets import (ExponentialFamilyCost, IndependentBinaryCost, LmsrCost,
                       PiecewiseLinearCost, PriceSet, RestrictedCost,
                       ScaledCost, ShiftedCost, finite_difference_price,
                       restricted_cost, scale_liquidity, simplex_market,
                       single_binary_market, single_security_market,
                       square_market)

INF = float("inf")


def lmsr():
    return LmsrCost(simplex_market(3))


def square():
    return IndependentBinaryCost(square_market())


def piecewise():
    return PiecewiseLinearCost(single_binary_market())


# ---------------------------------------------------------------------------
# PriceSet


def test_price_set_basics():
    p = PriceSet(np.array([0.0, 0.5]), np.array([1.0, 0.5]))
    assert np.allclose(p.center, [0.5, 0.5])
    assert np.allclose(p.spread, [1.0, 0.0])
    assert not p.is_point
    assert p.contains([0.3, 0.5])
    assert not p.contains([0.3, 0.6])
    assert PriceSet.point([0.5]).is_point
    with pytest.raises(ValueError):
        PriceSet(np.array([1.0]), np.array([0.0]))


# ---------------------------------------------------------------------------
# Closed forms


def test_lmsr_closed_forms():
    m = lmsr()
    q = np.array([0.3, -0.7, 1.1])
    assert m.cost(q) == pytest.approx(logsumexp(q), abs=1e-12)
    p = np.exp(q) / np.exp(q).sum()
    assert np.allclose(m.price(q).center, p, atol=1e-12)
    mu = np.array([0.2, 0.3, 0.5])
    assert m.conjugate(mu) == pytest.approx(np.sum(mu * np.log(mu)), abs=1e-12)
    assert m.conjugate(np.array([0.5, 0.6, -0.1])) == INF
    with pytest.raises(ValueError):
        LmsrCost(square_market())


def test_square_closed_forms():
    m = square()
    q = np.array([0.4, -1.2])
    assert m.cost(q) == pytest.approx(np.logaddexp(0, q).sum(), abs=1e-12)
    assert np.allclose(m.price(q).center, 1 / (1 + np.exp(-q)), atol=1e-12)
    mu = np.array([0.3, 0.8])
    ent = np.sum(mu * np.log(mu) + (1 - mu) * np.log(1 - mu))
    assert m.conjugate(mu) == pytest.approx(ent, abs=1e-12)
    assert m.conjugate(np.array([1.1, 0.5])) == INF
    with pytest.raises(ValueError):
        IndependentBinaryCost(simplex_market(3))


def test_piecewise_closed_forms():
    m = piecewise()
    assert m.cost([0.7]) == 0.7
    assert m.cost([-0.7]) == 0.0
    p = m.price([0.0])
    assert p.lo[0] == 0.0 and p.hi[0] == 1.0
    assert m.price([0.4]).center[0] == 1.0
    assert m.price([-0.4]).center[0] == 0.0
    assert m.conjugate([0.5]) == 0.0
    assert m.conjugate([1.5]) == INF
    with pytest.raises(ValueError):
        PiecewiseLinearCost(single_security_market((0, 2)))


def test_exp_family_matches_lmsr_on_simplex():
    m = ExponentialFamilyCost(simplex_market(3))
    ref = lmsr()
    q = np.array([0.2, -0.4, 0.9])
    assert m.cost(q) == pytest.approx(ref.cost(q), abs=1e-12)
    assert np.allclose(m.price(q).center, ref.price(q).center, atol=1e-12)
    mu = np.array([0.25, 0.25, 0.5])
    assert m.conjugate(mu) == pytest.approx(ref.conjugate(mu), abs=1e-7)
    assert m.conjugate(np.array([1.0, 1.0, -1.0])) == INF


# ---------------------------------------------------------------------------
# Shared invariants


@pytest.fixture(params=["lmsr", "square", "piecewise"])
def model(request):
    return {"lmsr": lmsr, "square": square, "piecewise": piecewise}[request.param]()


def test_fenchel_young_and_zero_at_price(model):
    rng = np.random.default_rng(0)
    for _ in range(20):
        q = rng.uniform(-2, 2, model.dim)
        p = model.price(q).center
        # equality case of Fenchel-Young: zero divergence at the price
        assert model.divergence(p, q) == pytest.approx(0.0, abs=1e-9)
        lam = rng.dirichlet(np.ones(model.space.n_outcomes))
        mu = lam @ model.space.payoff
        assert model.divergence(mu, q) >= -1e-12


def test_divergence_inf_outside_hull(model):
    mu = model.space.payoff.max(axis=0) + 1.0
    assert model.divergence(mu, np.zeros(model.dim)) == INF


def test_trade_cost_telescopes(model):
    rng = np.random.default_rng(1)
    q = rng.uniform(-1, 1, model.dim)
    r1 = rng.uniform(-1, 1, model.dim)
    r2 = rng.uniform(-1, 1, model.dim)
    total = model.trade_cost(q, r1 + r2)
    split = model.trade_cost(q, r1) + model.trade_cost(q + r1, r2)
    assert total == pytest.approx(split, abs=1e-12)


def test_finite_difference_price_matches(model):
    rng = np.random.default_rng(2)
    for _ in range(5):
        q = rng.uniform(-1.5, 1.5, model.dim)
        fd = finite_difference_price(model, q)
        assert fd.agrees_with(model.price(q), tol=1e-5)


def test_finite_difference_detects_kink():
    fd = finite_difference_price(piecewise(), np.zeros(1))
    assert fd.lo[0] == pytest.approx(0.0, abs=1e-6)
    assert fd.hi[0] == pytest.approx(1.0, abs=1e-6)


def test_state_with_price_inverts():
    for m, mu in ((lmsr(), np.array([0.2, 0.3, 0.5])),
                  (square(), np.array([0.35, 0.8]))):
        q = m.state_with_price(mu)
        assert np.allclose(m.price(q).center, mu, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(0.01, 0.99), min_size=2, max_size=2))
def test_square_divergence_nonnegative_property(qs, mus):
    m = square()
    assert m.divergence(np.array(mus), np.array(qs)) >= -1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_lmsr_price_sums_to_one_property(qs):
    p = lmsr().price(np.array(qs)).center
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(p >= 0)


# ---------------------------------------------------------------------------
# Restricted costs


def test_restricted_simplex_mode():
    m = lmsr()
    cell = RestrictedCost(m, (0, 1))
    assert cell._mode == "simplex"
    q = np.array([0.5, -0.3, 2.0])
    assert cell.cost(q) == pytest.approx(np.logaddexp(q[0], q[1]), abs=1e-12)
    p = cell.price(q).center
    assert p[2] == 0.0 and p.sum() == pytest.approx(1.0)
    assert cell.conjugate(np.array([0.5, 0.5, 0.0])) == pytest.approx(
        -np.log(2), abs=1e-12)
    assert cell.conjugate(np.array([0.3, 0.3, 0.4])) == INF  # outside the cell


def test_restricted_product_mode():
    m = square()
    cell = RestrictedCost(m, (((1, 0)), ((1, 1))))
    assert cell._mode == "product"
    assert cell.fixed_coords == {0: 1.0}
    q = np.array([0.7, -0.2])
    assert cell.cost(q) == pytest.approx(q[0] + np.logaddexp(0, q[1]),
                                         abs=1e-12)
    assert np.allclose(cell.price(q).center, [1.0, 1 / (1 + np.exp(0.2))],
                       atol=1e-12)
    s = cell.state_with_price(np.array([1.0, 0.25]))
    assert np.allclose(cell.price(s).center, [1.0, 0.25], atol=1e-9)


def test_restricted_generic_mode_diagonal():
    m = square()
    diag = RestrictedCost(m, (((0, 1)), ((1, 0))))
    assert diag._mode == "generic"
    q = np.array([0.5, -0.7])
    # C_E(q) = q.mu - R(mu) at the projection; must stay below the full cost
    assert diag.cost(q) <= m.cost(q) + 1e-9
    p = diag.price(q).center
    assert p.sum() == pytest.approx(1.0, abs=1e-6)  # diagonal constraint
    # supremum definition: no hull point does better
    rng = np.random.default_rng(3)
    for _ in range(20):
        t = rng.uniform()
        mu = np.array([t, 1 - t])
        assert q @ mu - m.conjugate(mu) <= diag.cost(q) + 1e-6
    with pytest.raises(NotImplementedError):
        diag.state_with_price(p)


def test_restricted_cost_helper_and_empty_event():
    m = square()
    assert isinstance(restricted_cost(m, (((1, 1)),)), RestrictedCost)
    with pytest.raises(ValueError):
        RestrictedCost(m, ())


# ---------------------------------------------------------------------------
# Scaled and shifted costs


def test_scaled_cost_properties():
    m = lmsr()
    a = 0.37
    s = scale_liquidity(m, a)
    assert isinstance(s, ScaledCost)
    q = np.array([0.4, -0.1, 0.8])
    assert s.cost(a * q) == pytest.approx(a * m.cost(q), abs=1e-12)
    assert np.allclose(s.price(a * q).center, m.price(q).center, atol=1e-12)
    mu = np.array([0.2, 0.5, 0.3])
    assert s.divergence(mu, a * q) == pytest.approx(a * m.divergence(mu, q),
                                                    abs=1e-12)
    with pytest.raises(ValueError):
        ScaledCost(m, 1.5)
    with pytest.raises(ValueError):
        ScaledCost(m, 0.0)


def test_shifted_cost_transports_divergence():
    m = square()
    shift = np.array([0.6, -0.9])
    s = ShiftedCost(m, shift)
    q = np.array([0.1, 0.2])
    mu = np.array([0.4, 0.7])
    assert s.cost(q) == pytest.approx(m.cost(q + shift), abs=1e-12)
    assert s.divergence(mu, q) == pytest.approx(m.divergence(mu, q + shift),
                                                abs=1e-12)
    assert np.allclose(s.price(s.state_with_price(mu)).center, mu, atol=1e-9)
    assert s.divergence(np.array([2.0, 0.0]), q) == INF
