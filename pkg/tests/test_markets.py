import numpy as np
import pytest

from cfmarkets import (BlockStructure, Observation, OutcomeSpace, face_check,
                       exposure_witness, independent_binary_market,
                       membership, observe_block_payoff, observe_coordinate,
                       observe_identity, observe_partition, observe_sum,
                       probe_points, simplex_market, single_binary_market,
                       single_security_market, square_market,
                       trivial_observation)


# ---------------------------------------------------------------------------
# OutcomeSpace


def test_space_basic_accessors():
    sp = square_market()
    assert sp.dim == 2
    assert sp.n_outcomes == 4
    assert sp.index((1, 0)) == sp.outcomes.index((1, 0))
    assert np.allclose(sp.payoff_of((1, 0)), [1.0, 0.0])
    assert sp.vertices(((0, 0), (1, 1))).shape == (2, 2)


def test_space_validation_errors():
    with pytest.raises(ValueError):
        OutcomeSpace((), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        OutcomeSpace(("a", "a"), np.zeros((2, 1)))
    with pytest.raises(ValueError):
        OutcomeSpace(("a", "b"), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        OutcomeSpace(("a",), np.array([[np.inf]]))
    with pytest.raises(KeyError):
        square_market().index((2, 2))


def test_builders():
    assert np.allclose(simplex_market(3).payoff, np.eye(3))
    assert independent_binary_market(3).n_outcomes == 8
    assert single_binary_market().payoff[:, 0].tolist() == [0.0, 1.0]
    sp = single_security_market((0, 1, 2))
    assert sp.payoff[:, 0].tolist() == [0.0, 1.0, 2.0]


# ---------------------------------------------------------------------------
# Observations


def test_observation_cells_and_labels():
    sp = square_market()
    obs = observe_coordinate(sp, 0)
    assert obs.realizations == (0.0, 1.0)
    assert set(obs.cell(1.0)) == {(1, 0), (1, 1)}
    assert obs.of((0, 1)) == 0.0
    obs.validate(sp)
    with pytest.raises(KeyError):
        obs.cell(2.0)


def test_observation_validate_requires_cover():
    sp = square_market()
    partial = Observation({(0, 0): 0, (1, 1): 1})
    with pytest.raises(ValueError):
        partial.validate(sp)


def test_observe_sum_and_identity_and_partition():
    sp = square_market()
    assert observe_sum(sp).realizations == (0.0, 1.0, 2.0)
    assert observe_identity(sp).cell((1, 1)) == ((1, 1),)
    obs = observe_partition(sp, [[(0, 0), (0, 1)], [(1, 0), (1, 1)]])
    assert obs.realizations == (0, 1)
    assert trivial_observation(sp).realizations == (0,)


def test_observe_block_payoff_labels_are_tuples():
    sp = independent_binary_market(2)
    obs = observe_block_payoff(sp, (0,))
    assert obs.realizations == ((0.0,), (1.0,))
    assert set(obs.cell((1.0,))) == {(1, 0), (1, 1)}


# ---------------------------------------------------------------------------
# Block structure


def test_block_structure_validation():
    bs = BlockStructure(((0,), (1, 2)))
    bs.validate_cover(3)
    assert len(bs) == 2
    assert list(bs) == [(0,), (1, 2)]
    with pytest.raises(ValueError):
        BlockStructure(((0,), (0, 1)))
    with pytest.raises(ValueError):
        BlockStructure(((0,), ()))
    with pytest.raises(ValueError):
        BlockStructure(((0,),)).validate_cover(2)


# ---------------------------------------------------------------------------
# Hull membership and probes


def test_membership_weights():
    sp = square_market()
    w = membership(sp, np.array([0.5, 0.5]))
    assert w is not None
    assert sum(w.values()) == pytest.approx(1.0)
    assert membership(sp, np.array([1.2, 0.5])) is None
    cell = ((1, 0), (1, 1))
    w = membership(sp, np.array([1.0, 0.25]), cell)
    assert w[(1, 1)] == pytest.approx(0.25, abs=1e-8)
    assert membership(sp, np.array([0.5, 0.5]), cell) is None


def test_probe_points_count():
    sp = square_market()
    pts = probe_points(sp)
    assert pts.shape == (4 + 6, 2)  # vertices plus pairwise midpoints
    pts = probe_points(sp, ((1, 0), (1, 1)))
    assert pts.shape == (3, 2)


# ---------------------------------------------------------------------------
# Faces and exposure


def test_face_check_coordinate_cells():
    sp = square_market()
    obs = observe_coordinate(sp, 0)
    assert face_check(sp, obs, 0.0)
    assert face_check(sp, obs, 1.0)


def test_face_check_rejects_interior_diagonal():
    sp = square_market()
    obs = observe_sum(sp)
    assert not face_check(sp, obs, 1.0)  # middle cell crosses the interior
    assert face_check(sp, obs, 0.0)
    assert face_check(sp, obs, 2.0)


def test_exposure_witness_coordinate_cells():
    sp = square_market()
    out = exposure_witness(sp, observe_coordinate(sp, 0))
    for x, w in out.items():
        assert w is not None
        vin = sp.vertices(tuple(o for o in sp.outcomes if o[0] == x)) @ w.vector
        vout = sp.vertices(tuple(o for o in sp.outcomes if o[0] != x)) @ w.vector
        assert np.ptp(vin) <= 1e-9
        assert vin.min() >= vout.max() + w.margin - 1e-9


def test_exposure_witness_sum_middle_cell_not_exposed():
    sp = square_market()
    out = exposure_witness(sp, observe_sum(sp))
    assert out[0.0] is not None
    assert out[2.0] is not None
    assert out[1.0] is None  # the diagonal is not an argmax set


def test_exposure_witness_simplex_partition():
    sp = simplex_market(4)
    obs = observe_partition(sp, [[0, 1], [2, 3]])
    out = exposure_witness(sp, obs)
    assert all(w is not None for w in out.values())


def test_exposure_witness_trivial_observation():
    sp = square_market()
    out = exposure_witness(sp, trivial_observation(sp))
    assert out[0] is not None  # no competing cell; trivially exposed
