import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from degree_engine.config import DEFAULT_CONFIG
from degree_engine.corpus import complex_cubic_homotopy, translation_homotopy
from degree_engine.domain import BoxDomain, parse_box
from degree_engine.errors import (
    HypothesisViolated,
    Inconclusive,
    NotAdmissibleHomotopy,
    TrivialBranchViolation,
    ZeroDegree,
)
from degree_engine.mapdef import linear_map, parse_map
from degree_engine.solvers import (
    BifurcationProblem,
    bifurcation_scan,
    brouwer_fixed_point,
    continuation_solve,
    homotopy_gap,
    nontrivial_solution,
    parse_homotopy,
    verify_homotopy_invariance,
)

LAM = {"lambda": 0.0}
CONT_F = parse_map("x1 + x2; x2")
CONT_H = parse_map("lambda*(x1^3 + sin(x1*x2)); lambda*(2*cos(x1*x2) + x2^5)", params=LAM)
CONT_BOX = parse_box("[-3.5,3.5]x[-2.5,2.5]")
NONTRIVIAL = parse_map("x1 - 2*sin(x1 + x1^2 - x2^2); 2*x1 + x2 + 1 - cos(x1*x2)")
BIFURCATION = parse_map("x1 - lambda*sin(x1 + x1^2 - x2^2); 2*x1 + x2 + 1 - cos(x1*x2)", params=LAM)


# --- homotopy invariance --------------------------------------------------------

def test_translation_homotopy_is_constant():
    for y0 in ([0.4], [0.3, -0.5], [0.1, 0.2, -0.3]):
        rep = verify_homotopy_invariance(translation_homotopy(y0))
        assert rep.degrees == [1] * 11


def test_cubic_homotopy_is_constant():
    rng = np.random.default_rng(2)
    for _ in range(3):
        rep = verify_homotopy_invariance(complex_cubic_homotopy(rng))
        assert rep.degrees == [3] * 11
        assert rep.admissibility.min_gap > 0


def test_empty_homotopy_has_degree_zero():
    rep = verify_homotopy_invariance(parse_homotopy("x1", "2 + lambda", "[-1,1]"))
    assert rep.degrees == [0] * 11


def test_inadmissible_homotopy():
    # the root x = 3*lambda leaves [-1, 1] at lambda = 1/3
    with pytest.raises(NotAdmissibleHomotopy):
        verify_homotopy_invariance(parse_homotopy("x1 - 3*lambda", None, "[-1,1]"))


def test_homotopy_gap_finds_side_wall_crossings():
    h = parse_homotopy("x1 - 0.5; x2 - 3*lambda + 0.7", None, "[-1,1]x[-1,1]")
    check = homotopy_gap(h.residual, h.box)
    assert check.min_gap < 1e-6
    assert check.lambda_at_min == pytest.approx(17 / 30, abs=1e-4)


# --- continuation -----------------------------------------------------------------

def test_continuation_worked_system():
    r = continuation_solve(CONT_F, CONT_H, CONT_BOX)
    assert r.residual < 1e-9
    x, y = r.solution
    assert abs(x) <= 3.5 and abs(y) <= 2.5
    assert abs(x) <= 3 and abs(y) <= 2
    direct = np.array([x + y + x**3 + np.sin(x * y), y + 2 * np.cos(x * y) + y**5])
    assert np.linalg.norm(direct) < 1e-9
    assert r.degree0 == 1
    lams = [p[0] for p in r.path]
    assert lams[0] == 0.0 and lams[-1] == 1.0
    assert all(a < b for a, b in zip(lams, lams[1:]))


def test_continuation_refuses_inadmissible_paths():
    with pytest.raises(NotAdmissibleHomotopy):
        continuation_solve(parse_map("x1"), parse_map("lambda*5", params=LAM), parse_box("[-1,1]"))


def test_continuation_needs_trivial_start():
    with pytest.raises(HypothesisViolated):
        continuation_solve(parse_map("x1"), parse_map("0.1 + lambda", params=LAM), parse_box("[-1,1]"))


@given(st.floats(min_value=0.5, max_value=3.0), st.floats(min_value=-0.5, max_value=0.5))
def test_continuation_zero_degree(c, eps):
    # x^2 - c on a symmetric box has degree 0 and must not be solved by continuation
    with pytest.raises(ZeroDegree):
        continuation_solve(parse_map(f"x1^2 - {c!r}"), parse_map(f"lambda*{eps!r}", params=LAM),
                           BoxDomain((-2.0,), (2.0,)))


@given(st.integers(min_value=0, max_value=10_000))
def test_continuation_proper_bounded_family(seed):
    # f = A x with det A > 0, h = lambda * bounded smooth term: roots stay in a known ball
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2))
    if np.linalg.det(A) < 0:
        A[0] *= -1
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    if smin < 0.3:
        return
    b = rng.uniform(-1, 1, 2).tolist()
    f = linear_map(A)
    h = parse_map(f"lambda*({b[0]!r}*cos(x2)); lambda*({b[1]!r}*sin(x1) + {b[0]!r})", params=LAM)
    radius = (abs(b[0]) + abs(b[1]) + abs(b[0])) / smin
    box = BoxDomain.cube(2, radius + 1.0)
    r = continuation_solve(f, h, box)
    assert r.residual < 1e-9
    assert np.linalg.norm(r.solution) <= radius + 1e-9


# --- fixed points ------------------------------------------------------------------

def test_fixed_point_cosine_matches_bisection():
    r = brouwer_fixed_point(parse_map("cos(x1)"), parse_box("[-2,2]"))
    ref = brentq(lambda t: t - np.cos(t), 0.0, 1.0, xtol=1e-15)
    assert r.point[0] == pytest.approx(ref, abs=1e-12)
    assert r.degree == 1 and not r.on_boundary


def test_fixed_point_constant_map():
    r = brouwer_fixed_point(parse_map("0.3; -0.2"), BoxDomain.cube(2, 1.0))
    np.testing.assert_allclose(r.point, [0.3, -0.2], atol=1e-12)


def test_fixed_point_on_the_boundary():
    r = brouwer_fixed_point(parse_map("1; x2/2"), BoxDomain.cube(2, 1.0))
    assert r.on_boundary
    np.testing.assert_allclose(r.point, [1.0, 0.0], atol=1e-9)


def test_fixed_point_hypothesis():
    with pytest.raises(HypothesisViolated):
        brouwer_fixed_point(parse_map("2*x1; x2"), BoxDomain.cube(2, 1.0))


@given(st.integers(min_value=0, max_value=10_000))
def test_fixed_point_of_contractions_matches_iteration(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2))
    A *= rng.uniform(0.1, 0.8) / np.linalg.norm(A, np.inf)
    c = rng.uniform(-0.15, 0.15, 2)
    a, cc = A.tolist(), c.tolist()
    # max-norm: |Ax + c| <= 0.8 * 1.5 + 0.15 < 1.5, so the box is invariant
    f = parse_map(f"{a[0][0]!r}*x1 + {a[0][1]!r}*x2 + {cc[0]!r}; {a[1][0]!r}*x1 + {a[1][1]!r}*x2 + {cc[1]!r}")
    box = BoxDomain.cube(2, 1.5)
    r = brouwer_fixed_point(f, box)
    x = np.zeros(2)
    for _ in range(400):
        x = A @ x + c
    np.testing.assert_allclose(r.point, x, atol=1e-9)


# --- nontrivial zeros ------------------------------------------------------------

def test_nontrivial_worked_system():
    r = nontrivial_solution(NONTRIVIAL, parse_box("[-3,3]x[-8,8]"))
    assert r.index_at_origin == -1 and r.degree == 1
    assert np.linalg.norm(r.point) > 1e-4
    x, y = r.point
    assert abs(x - 2 * np.sin(x + x**2 - y**2)) < 1e-9
    assert abs(2 * x + y + 1 - np.cos(x * y)) < 1e-9


def test_nontrivial_scalar():
    r = nontrivial_solution(parse_map("x1^3 - x1"), parse_box("[-2,2]"))
    assert sorted(round(p[0], 12) for p in r.nontrivial_roots) == [-1.0, 1.0]


def test_nontrivial_inconclusive():
    with pytest.raises(Inconclusive):
        nontrivial_solution(parse_map("x1; x2"), BoxDomain.cube(2, 1.0))


def test_nontrivial_needs_zero_at_origin():
    with pytest.raises(HypothesisViolated):
        nontrivial_solution(parse_map("x1 + 1"), parse_box("[-2,2]"))


# --- bifurcation -----------------------------------------------------------------

def test_bifurcation_worked_problem():
    p = BifurcationProblem(BIFURCATION, 0.0, 2.0)
    rep = bifurcation_scan(p)
    hits = [b for b in rep.brackets if b.lo <= 1.0 <= b.hi]
    assert len(hits) == 1
    b = hits[0]
    assert b.hi - b.lo <= 1e-8
    # phi(lambda) = 1 - lambda here, evaluated independently of the scan
    assert np.sign(1 - b.lo) != np.sign(1 - b.hi) or 1.0 in (b.lo, b.hi)
    assert np.sign(p.phi(b.lo)) != np.sign(p.phi(b.hi)) or 0.0 in (p.phi(b.lo), p.phi(b.hi))


def test_bifurcation_without_sign_change():
    rep = bifurcation_scan(BifurcationProblem(parse_map("(lambda^2 + x1^2)*x1", params=LAM), -1.0, 1.0))
    assert rep.brackets == ()
    assert len(rep.candidates) == 1
    assert rep.candidates[0][0] == pytest.approx(0.0, abs=1e-6)


def test_bifurcation_off_grid_candidate():
    rep = bifurcation_scan(BifurcationProblem(parse_map("(lambda^2 + x1^2)*x1", params=LAM), -1.0, 2.3, 40))
    assert rep.brackets == ()
    assert rep.candidates[0][0] == pytest.approx(0.0, abs=1e-6)


@given(st.lists(st.floats(min_value=-3, max_value=3), min_size=1, max_size=3, unique=True))
def test_bifurcation_brackets_contain_sign_changes(roots):
    roots = sorted(r for r in roots if all(abs(r - s) > 0.2 for s in roots if s != r))
    poly = " * ".join(f"(lambda - {r!r})" for r in roots) or "1"
    p = BifurcationProblem(parse_map(f"({poly})*x1", params=LAM), -3.3, 3.3, 201)
    rep = bifurcation_scan(p)
    assert len(rep.brackets) == len(roots)
    for b, r in zip(rep.brackets, roots):
        assert b.lo <= r + 1e-12 and r - 1e-12 <= b.hi
        assert b.hi - b.lo <= DEFAULT_CONFIG.bif_tol
        lo_val = np.prod([b.lo - s for s in roots])
        hi_val = np.prod([b.hi - s for s in roots])
        assert lo_val * hi_val <= 0


def test_trivial_branch_required():
    with pytest.raises(TrivialBranchViolation):
        bifurcation_scan(BifurcationProblem(parse_map("x1 - lambda", params=LAM), 0.0, 1.0))


def test_bifurcation_interval_validation():
    with pytest.raises(ValueError):
        BifurcationProblem(BIFURCATION, 1.0, 1.0)


def test_fixed_point_of_the_identity_is_found_on_the_boundary():
    r = brouwer_fixed_point(parse_map("x1"), parse_box("[-1,1]"))
    assert r.on_boundary and r.degree is None
    assert abs(r.point[0]) == 1.0
