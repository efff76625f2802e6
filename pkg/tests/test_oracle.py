import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from degree_engine.config import DEFAULT_CONFIG
from degree_engine.corpus import random_polynomial_map, random_target
from degree_engine.degree import degree
from degree_engine.domain import BoxDomain, boundary_gap
from degree_engine.errors import BoundaryHit, NonIntegerWinding
from degree_engine.mapdef import complex_polynomial, identity_map, parse_map
from degree_engine.oracle import degree_1d, winding_number_2d, winding_trace

SQUARE2 = BoxDomain.cube(2, 2.0)


def test_degree_1d_examples():
    iv = BoxDomain((-2.0,), (2.0,))
    assert degree_1d(parse_map("x1"), iv) == 1
    assert degree_1d(parse_map("-x1"), iv) == -1
    assert degree_1d(parse_map("x1^2"), iv, 1.0) == 0
    assert degree_1d(parse_map("x1^3 - x1"), iv) == 1
    with pytest.raises(BoundaryHit):
        degree_1d(parse_map("x1^2"), iv, 4.0)


def test_degree_1d_rejects_planar_maps():
    with pytest.raises(ValueError):
        degree_1d(identity_map(2), SQUARE2)


@pytest.mark.parametrize("n", range(1, 7))
def test_winding_of_powers(n):
    assert winding_number_2d(complex_polynomial([0] * n + [1]), SQUARE2, [0.3, 0.2]) == n
    conj = complex_polynomial([0] * n + [1], conjugate=True)
    assert winding_number_2d(conj, SQUARE2, [0.3, 0.2]) == -n


def test_winding_examples():
    assert winding_number_2d(identity_map(2), BoxDomain.cube(2, 1.0)) == 1
    assert winding_number_2d(complex_polynomial([0, 0, 0, 1]), SQUARE2) == 3
    # fold map: the target (0, 1) has two preimages of opposite index
    assert winding_number_2d(parse_map("x1; x2^2"), SQUARE2, [0.0, 1.0]) == 0
    # a target outside f(box) gives zero
    assert winding_number_2d(identity_map(2), BoxDomain.cube(2, 1.0), [5.0, 0.0]) == 0


def test_winding_boundary_hit():
    with pytest.raises(BoundaryHit):
        winding_number_2d(identity_map(2), BoxDomain.cube(2, 1.0), [1.0, 0.25])


def test_winding_refuses_to_guess():
    cfg_levels0 = DEFAULT_CONFIG.replace(winding_max_levels=0)
    with pytest.raises(NonIntegerWinding):
        winding_trace(complex_polynomial([0] * 6 + [1]), SQUARE2, None, cfg_levels0, segments=1)


def test_trace_refinement_bounds_steps():
    tr = winding_trace(complex_polynomial([0] * 5 + [1]), SQUARE2, [0.3, 0.2], segments=2)
    assert tr.max_step <= np.pi / 2
    assert tr.levels > 0
    assert tr.winding == 5
    assert tr.total_angle == pytest.approx(10 * np.pi, abs=1e-9)


@given(st.integers(min_value=0, max_value=10_000), st.floats(min_value=0.0, max_value=4.0))
def test_winding_invariances(seed, start):
    rng = np.random.default_rng(seed)
    f = random_polynomial_map(rng, 2)
    y = random_target(rng, 2, 2.0)
    if boundary_gap(f, SQUARE2, y) < 1e-3:
        return
    base = winding_trace(f, SQUARE2, y)
    assert base.max_step <= np.pi / 2
    assert winding_trace(f, SQUARE2, y, start=start).winding == base.winding
    assert winding_trace(f, SQUARE2, y, segments=512).winding == base.winding


@given(st.integers(min_value=0, max_value=10_000))
def test_product_map_degree_matches_planar_winding(seed):
    rng = np.random.default_rng(seed)
    g = random_polynomial_map(rng, 2)
    y = random_target(rng, 2, 1.5)
    if boundary_gap(g, SQUARE2, y) < 1e-2:
        return
    a, b = (c.replace("x2", "x3").replace("x1", "x2") for c in g.text().split("; "))
    prod = parse_map(f"x1; {a}; {b}")
    box3 = BoxDomain.cube(3, 2.0)
    y3 = np.array([0.1, *y])
    assert degree(prod, box3, y3).degree == winding_number_2d(g, SQUARE2, y)
