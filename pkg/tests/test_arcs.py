import csv
import dataclasses
import io

import numpy as np
import pytest

from degree_engine.arcs import pairing_check, trace_zero_set
from degree_engine.config import DEFAULT_CONFIG
from degree_engine.corpus import random_polynomial_homotopy
from degree_engine.errors import EscapedBoundary, PairingViolation
from degree_engine.report import dumps
from degree_engine.solvers import homotopy_gap, parse_homotopy

LINEAR = ("x1 - lambda", None, "[-2,2]")
FOLD = ("x1^2 - (1 - lambda)", None, "[-2,2]")
LOOP = ("x1^2 + (lambda - 0.5)^2 - 0.04", None, "[-2,2]")
CUBIC = ("x1^3 - 3*x1*x2^2; 3*x1^2*x2 - x2^3",
         "(1-lambda)*0.5 + lambda*(-0.3); (1-lambda)*0.2 + lambda*0.7", "[-2,2]x[-2,2]")


def _trace(case):
    return trace_zero_set(parse_homotopy(*case))


def _on_zero_set(rep, tol=1e-7):
    G = rep.homotopy.residual
    for c in rep.components:
        X, lam = c.points[:, :-1], c.points[:, -1]
        vals = G.evaluate_batch(X, **{"lambda": lam})
        assert np.abs(vals).max() < tol
        assert np.all(lam >= -1e-12) and np.all(lam <= 1 + 1e-12)


def _tangents_consistent(rep):
    for c in rep.components:
        t = c.tangents
        assert np.all(np.einsum("ij,ij->i", t[1:], t[:-1]) > 0)


def test_linear_arc():
    rep = _trace(LINEAR)
    assert rep.kinds() == ["arc"]
    assert [(e.face, e.sign) for e in rep.endpoints] == [(0, 1), (1, 1)]
    v = pairing_check(rep)
    assert v.sign_sums == (1, 1) == v.face_degrees
    _on_zero_set(rep)
    _tangents_consistent(rep)


def test_fold():
    rep = _trace(FOLD)
    assert rep.kinds() == ["arc"]
    ends = sorted((e.face, round(e.x[0], 9), e.sign) for e in rep.endpoints)
    assert ends == [(0, -1.0, -1), (0, 1.0, 1)]
    (p, q), = {tuple(sorted(pq)) for pq in rep.pairing.items()}
    assert rep.endpoints[p].face == rep.endpoints[q].face == 0
    # the turning point touches lambda = 1 at x = 0, where the face root is critical
    assert [f for f, _ in rep.tangencies] == [1]
    v = pairing_check(rep)
    assert v.sign_sums == (0, 0) and v.n_arcs == 1
    _on_zero_set(rep)
    _tangents_consistent(rep)


def test_loop():
    rep = _trace(LOOP)
    assert rep.kinds() == ["loop"]
    assert rep.endpoints == [] and rep.pairing == {}
    pts = rep.components[0].points
    assert np.linalg.norm(pts[0] - pts[-1]) < 0.05
    assert pairing_check(rep).n_loops == 1
    _on_zero_set(rep)


def test_planar_cubic_with_moving_target():
    rep = _trace(CUBIC)
    assert rep.kinds() == ["arc"] * 3
    assert pairing_check(rep).sign_sums == (3, 3)
    for p, q in rep.pairing.items():
        assert rep.endpoints[p].face != rep.endpoints[q].face
    _on_zero_set(rep)
    _tangents_consistent(rep)


def test_escaped_component():
    rep = _trace(("x1 - 3*lambda", None, "[-1,1]"))
    assert [c.kind for c in rep.escaped] == ["escaped"]
    assert rep.escaped[0].exit_point[0] == pytest.approx(1.0, abs=1e-6)
    assert rep.escaped[0].points[-1, -1] == pytest.approx(1 / 3, abs=1e-6)
    with pytest.raises(EscapedBoundary):
        pairing_check(rep)


def test_tampered_report_fails_pairing():
    rep = _trace(LINEAR)
    flipped = [dataclasses.replace(e, sign=-e.sign) if e.face == 1 else e for e in rep.endpoints]
    with pytest.raises(PairingViolation):
        pairing_check(dataclasses.replace(rep, endpoints=flipped))
    with pytest.raises(PairingViolation):
        pairing_check(dataclasses.replace(rep, pairing={0: 1}))
    with pytest.raises(PairingViolation):
        pairing_check(dataclasses.replace(rep, face_degrees=(2, 2)))


def test_csv_and_json():
    rep = _trace(FOLD)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["component", "kind", "step", "x1", "lambda"]
    assert len(rows) - 1 == sum(c.points.shape[0] for c in rep.components)
    assert float(rows[1][3]) == rep.components[0].points[0, 0]
    assert dumps(rep) == dumps(_trace(FOLD))


def test_random_homotopies():
    rng = np.random.default_rng(3)
    done = 0
    while done < 6:
        h = random_polynomial_homotopy(rng, 1 + done % 2)
        if homotopy_gap(h.residual, h.box, DEFAULT_CONFIG).min_gap < 1e-2:
            continue
        rep = trace_zero_set(h)
        v = pairing_check(rep)
        assert v.sign_sums == v.face_degrees
        _on_zero_set(rep, 1e-6)
        done += 1
