import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from degree_engine.domain import BoxDomain, boundary_gap, boundary_sample, default_density, parse_box, subdivide
from degree_engine.errors import DomainError, ParseError
from degree_engine.mapdef import identity_map, parse_map


def test_box_validation():
    with pytest.raises(ValueError):
        BoxDomain((0.0,), (0.0,))
    with pytest.raises(ValueError):
        BoxDomain((0.0, 1.0), (1.0,))
    with pytest.raises(ValueError):
        BoxDomain((0.0,), (np.inf,))
    b = BoxDomain((-1, 0), (1, 3))
    assert b.dim == 2 and b.volume == 6.0
    assert b.contains([0, 1]) and not b.contains([0, 4])


@pytest.mark.parametrize("text, lo, hi", [
    ("[-2,2]x[-2,2]", (-2, -2), (2, 2)),
    ("[0, 1]", (0,), (1,)),
    ("(-1,1) x (0.5,2.5) x [-3,3]", (-1, 0.5, -3), (1, 2.5, 3)),
])
def test_parse_box(text, lo, hi):
    b = parse_box(text)
    assert b.lo == lo and b.hi == hi
    assert parse_box(b.literal()) == b


@pytest.mark.parametrize("text", ["[1,0]", "[0,1]y[0,1]", "[a,1]", "", "[0,1]x"])
def test_parse_box_rejects(text):
    with pytest.raises(ParseError):
        parse_box(text)


def test_sample_square_density_2_and_3():
    s = boundary_sample(BoxDomain.cube(2, 0.5), 2)
    assert s.points.shape == (8, 2)
    assert len(s.distinct()) == 4           # only the corners
    s = boundary_sample(BoxDomain.cube(2, 0.5), 3)
    assert s.points.shape == (12, 2)
    assert len(s.distinct()) == 8           # corners plus edge midpoints


def test_sample_interval():
    for density in (2, 5, 64):
        s = boundary_sample(BoxDomain((-1.0,), (3.0,)), density)
        assert sorted(s.distinct()[:, 0].tolist()) == [-1.0, 3.0]


def test_sample_cube_counts():
    s = boundary_sample(BoxDomain.cube(3, 0.5), 3)
    assert s.points.shape == (54, 3)
    # lattice points of {0,1,2}^3 with some coordinate extreme: 27 - 1
    assert len(s.distinct()) == 26


def test_sample_ordering_and_faces():
    box = BoxDomain((0, 0), (1, 2))
    s = boundary_sample(box, 4)
    assert np.all(np.diff(s.face_ids) >= 0)
    for face in range(4):
        axis, side = divmod(face, 2)
        pts = s.points[s.face_ids == face]
        assert np.all(pts[:, axis] == (box.hi[axis] if side else box.lo[axis]))
        # lexicographic order within a face
        assert [tuple(p) for p in pts] == sorted(tuple(p) for p in pts)
    with pytest.raises(ValueError):
        boundary_sample(box, 1)


@given(st.integers(min_value=1, max_value=4), st.integers(min_value=2, max_value=6))
def test_samples_lie_on_boundary(k, density):
    box = BoxDomain(tuple(-np.arange(1, k + 1, dtype=float)), tuple(np.arange(1, k + 1, dtype=float)))
    pts = boundary_sample(box, density).points
    on_face = (pts == box.lo_array) | (pts == box.hi_array)
    assert np.all(on_face.any(axis=1))


def test_gap_examples():
    for k in range(1, 5):
        assert boundary_gap(identity_map(k), BoxDomain.cube(k, 1.0), np.zeros(k)) == pytest.approx(1.0)
    assert boundary_gap(parse_map("x1^2"), BoxDomain((-2.0,), (2.0,)), [1.0]) == pytest.approx(3.0)


def test_gap_example_map_against_dense_oracle():
    f = parse_map("x1^2 - 2*x2^2; x1*x2")
    box = BoxDomain.cube(2, 2.0)
    y = np.array([1.0, 0.0])
    gap = boundary_gap(f, box, y)
    dense = boundary_sample(box, 4001).points
    exact = np.min(np.linalg.norm(f.evaluate_batch(dense) - y, axis=1))
    assert gap > 0
    assert gap == pytest.approx(exact, rel=1e-3)


def test_gap_zero_on_hit_and_domain_error():
    assert boundary_gap(identity_map(2), BoxDomain.cube(2, 1.0), [1.0, 0.0]) == 0.0
    with pytest.raises(DomainError):
        boundary_gap(parse_map("log(x1)"), BoxDomain((-1.0,), (1.0,)), [0.0])


@given(st.integers(min_value=2, max_value=12), st.floats(min_value=-1.5, max_value=1.5),
       st.floats(min_value=-1.5, max_value=1.5))
def test_gap_monotone_in_nested_density(d, y1, y2):
    # density 2d - 1 contains every density-d sample
    f = parse_map("x1^3 - x2; x1*x2 + sin(x2)")
    box = BoxDomain((-1.0, -2.0), (2.0, 1.0))
    coarse = boundary_gap(f, box, [y1, y2], density=d, refine_rounds=0)
    fine = boundary_gap(f, box, [y1, y2], density=2 * d - 1, refine_rounds=0)
    assert fine <= coarse


def test_subdivide_examples():
    left, right = subdivide(BoxDomain((0.0,), (1.0,)), 0)
    assert (left.lo, left.hi, right.lo, right.hi) == ((0.0,), (0.5,), (0.5,), (1.0,))
    left, right = subdivide(BoxDomain.cube(2, 0.5, [0.5, 0.5]), 1)
    assert left.widths.tolist() == [1.0, 0.5] and right.widths.tolist() == [1.0, 0.5]
    with pytest.raises(ValueError):
        subdivide(BoxDomain.cube(2), 2)


boxes = st.integers(min_value=1, max_value=4).flatmap(
    lambda k: st.tuples(
        st.lists(st.floats(min_value=-100, max_value=100), min_size=k, max_size=k),
        st.lists(st.floats(min_value=0.01, max_value=50), min_size=k, max_size=k),
    )
).map(lambda t: BoxDomain(tuple(t[0]), tuple(a + w for a, w in zip(*t))))


@given(boxes, st.data())
def test_subdivide_preserves_volume_and_boundary(box, data):
    axis = data.draw(st.integers(min_value=0, max_value=box.dim - 1))
    left, right = subdivide(box, axis)
    assert left.volume + right.volume == pytest.approx(box.volume, rel=1e-12)
    mid = left.hi[axis]
    assert right.lo[axis] == mid
    for child in (left, right):
        pts = boundary_sample(child, 3).points
        on_parent = ((pts == box.lo_array) | (pts == box.hi_array)).any(axis=1)
        on_mid = pts[:, axis] == mid
        assert np.all(on_parent | on_mid)


def test_default_density():
    assert [default_density(k) for k in (1, 2, 3, 4, 6)] == [64, 64, 16, 8, 8]
