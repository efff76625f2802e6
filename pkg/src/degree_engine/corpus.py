"""Seeded generators of test instances (maps, boxes, targets, homotopies).

Used by the property tests and by ``verify-axioms``. Every generator takes a
``numpy.random.Generator`` so that corpora are reproducible from one seed.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .domain import BoxDomain
from .mapdef import MapDefinition, linear_map, polynomial_expr
from .solvers import LAMBDA, HomotopyDefinition


def random_monomials(rng: np.random.Generator, n_vars: int, max_terms: int = 3, max_deg: int = 3) -> dict:
    """Up to ``max_terms`` monomials with small nonzero integer coefficients."""
    terms: dict = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        while True:
            e = tuple(int(v) for v in rng.integers(0, max_deg + 1, n_vars))
            if sum(e) <= max_deg:
                break
        c = int(rng.integers(-3, 4)) or 1
        key = e if n_vars == 2 else (e[0], 0)
        terms[key] = float(c)
    return terms


def random_polynomial_map(rng: np.random.Generator, k: int, max_terms: int = 3, max_deg: int = 3) -> MapDefinition:
    """A map R^k -> R^k (k = 1 or 2) with sparse polynomial components."""
    if k not in (1, 2):
        raise ValueError("polynomial corpus covers k = 1 and k = 2")
    if k == 1:
        # dense low-degree polynomial keeps roots spread over the interval
        deg = int(rng.integers(1, max_deg + 1))
        terms = {(j, 0): float(int(rng.integers(-3, 4))) for j in range(deg)}
        terms[(deg, 0)] = float(int(rng.integers(1, 4)) * rng.choice([-1, 1]))
        return MapDefinition((polynomial_expr(terms),))
    comps = tuple(polynomial_expr(random_monomials(rng, 2, max_terms, max_deg)) for _ in range(k))
    return MapDefinition(comps)


def random_matrix(rng: np.random.Generator, k: int, min_abs_det: float = 0.1) -> np.ndarray:
    while True:
        M = rng.uniform(-2.0, 2.0, (k, k))
        if abs(np.linalg.det(M)) > min_abs_det:
            return M


def random_linear_instance(rng: np.random.Generator, k: int) -> tuple[MapDefinition, BoxDomain, np.ndarray, int]:
    """(L, box containing L^{-1} y, y, sign det L)."""
    M = random_matrix(rng, k)
    x_star = rng.uniform(-1.0, 1.0, k)
    y = M @ x_star
    box = BoxDomain.cube(k, 2.0)
    return linear_map(M), box, y, int(np.sign(np.linalg.det(M)))


def random_target(rng: np.random.Generator, k: int, scale: float = 2.0) -> np.ndarray:
    return rng.uniform(-scale, scale, k)


def random_box(rng: np.random.Generator, k: int) -> BoxDomain:
    lo = rng.uniform(-2.5, -0.5, k)
    hi = rng.uniform(0.5, 2.5, k)
    return BoxDomain(tuple(lo), tuple(hi))


def _blend(p: ex.Expr, q: ex.Expr) -> ex.Expr:
    lam = ex.Var(LAMBDA)
    return ex.BinOp("+", ex.BinOp("*", ex.BinOp("-", ex.Const(1.0), lam), p), ex.BinOp("*", lam, q))


def random_polynomial_homotopy(rng: np.random.Generator, k: int, box: BoxDomain | None = None) -> HomotopyDefinition:
    """H = (1 - lambda) P + lambda Q with a straight target path y0 -> y1."""
    P = random_polynomial_map(rng, k)
    Q = random_polynomial_map(rng, k)
    comps = tuple(_blend(p, q) for p, q in zip(P.components, Q.components))
    y0, y1 = random_target(rng, k, 1.5), random_target(rng, k, 1.5)
    alpha = tuple(_blend(ex.const(a), ex.const(b)) for a, b in zip(y0, y1))
    return HomotopyDefinition(MapDefinition(comps, {LAMBDA: 0.0}), alpha, box or BoxDomain.cube(k, 2.0))


def complex_cubic_homotopy(rng: np.random.Generator, a: complex | None = None) -> HomotopyDefinition:
    """a z^3 + lambda q(z) with deg q <= 2 and target a, on [-4, 4]^2.

    |a| >= 1 and the coefficients of q are at most 1 in modulus, so
    |a z^3| > |lambda q(z)| + |a| on the boundary and the homotopy is admissible.
    """
    from .mapdef import complex_polynomial

    if a is None:
        a = complex(rng.uniform(1.0, 2.0) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
    q = [complex(*rng.uniform(-0.7, 0.7, 2)) for _ in range(3)]
    lead = complex_polynomial([0, 0, 0, a])
    low = complex_polynomial(q)
    lam = ex.Var(LAMBDA)
    comps = tuple(ex.BinOp("+", u, ex.BinOp("*", lam, v)) for u, v in zip(lead.components, low.components))
    alpha = (ex.const(a.real), ex.const(a.imag))
    return HomotopyDefinition(MapDefinition(comps, {LAMBDA: 0.0}), alpha, BoxDomain.cube(2, 4.0))


def translation_homotopy(y0) -> HomotopyDefinition:
    """H(x, lambda) = x - lambda y0 with alpha(lambda) = (1 - lambda) y0."""
    y0 = np.asarray(y0, dtype=float)
    k = y0.size
    lam = ex.Var(LAMBDA)
    comps = tuple(ex.BinOp("-", ex.Var(f"x{i + 1}"), ex.BinOp("*", lam, ex.const(v))) for i, v in enumerate(y0))
    alpha = tuple(ex.BinOp("*", ex.BinOp("-", ex.Const(1.0), lam), ex.const(v)) for v in y0)
    return HomotopyDefinition(MapDefinition(comps, {LAMBDA: 0.0}), alpha, BoxDomain.cube(k, 2.0))


__all__ = [
    "complex_cubic_homotopy",
    "random_box",
    "random_linear_instance",
    "random_matrix",
    "random_monomials",
    "random_polynomial_homotopy",
    "random_polynomial_map",
    "random_target",
    "translation_homotopy",
]


def admissible_polynomial_homotopy(rng: np.random.Generator, k: int, min_gap: float = 1e-2,
                                   cfg=None) -> tuple[HomotopyDefinition, int]:
    """Draw random polynomial homotopies until one keeps ``min_gap`` from the side walls.

    Returns the homotopy and the number of rejected draws. A coarse pass
    rejects most draws cheaply: sampled gaps only overestimate the true
    distance, so a coarse value below ``min_gap`` is already decisive.
    """
    from .config import DEFAULT_CONFIG
    from .solvers import homotopy_gap

    cfg = cfg or DEFAULT_CONFIG
    coarse = cfg.replace(homotopy_lambdas=21)
    rejected = 0
    while True:
        h = random_polynomial_homotopy(rng, k)
        G = h.residual
        if homotopy_gap(G, h.box, coarse, max_dips=0).min_gap >= min_gap \
                and homotopy_gap(G, h.box, cfg).min_gap >= min_gap:
            return h, rejected
        rejected += 1
