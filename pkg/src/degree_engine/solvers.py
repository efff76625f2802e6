"""Existence and solving tools built on the degree.

Homotopy checks, continuation from a map of nonzero degree, fixed points
of self-maps of a box, nontrivial zeros, and bifurcation scans along a
trivial branch. All parametrised maps use the parameter name ``lambda``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import expr as ex
from .config import DEFAULT_CONFIG, DegreeConfig, parallel_map
from .degree import DegreeCertificate, degree, degree_weak, find_roots, newton_batch, polish
from .domain import BoxDomain, boundary_sample, default_density
from .errors import (
    CertificateInconsistent,
    DomainError,
    HypothesisViolated,
    Inconclusive,
    NotAdmissible,
    NotAdmissibleHomotopy,
    PathLost,
    TrivialBranchViolation,
    ZeroDegree,
)
from .mapdef import MapDefinition, compose_difference, compose_sum, identity_map, index, parse_map
from .report import envelope

log = logging.getLogger(__name__)

LAMBDA = "lambda"


def _lam(value) -> dict:
    return {LAMBDA: value}


# ---------------------------------------------------------------------------
# homotopies


@dataclass(frozen=True)
class HomotopyDefinition:
    """H(x, lambda) with a target path alpha(lambda) on a box, lambda in [0, 1]."""

    H: MapDefinition
    alpha: tuple[ex.Expr, ...]
    box: BoxDomain

    def __post_init__(self):
        alpha = tuple(ex.as_expr(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if LAMBDA not in self.H.param_dict:
            object.__setattr__(self, "H", MapDefinition(self.H.components, {**self.H.param_dict, LAMBDA: 0.0},
                                                        self.H.analytic_jacobian))
        k = self.H.dim
        if len(alpha) != k or self.box.dim != k:
            raise ValueError(f"H has {k} components, alpha {len(alpha)}, box dimension {self.box.dim}")
        allowed = set(self.H.param_dict)
        for a in alpha:
            extra = ex.free_symbols(a) - allowed
            if extra:
                raise ValueError(f"target path may only use lambda and parameters, found {sorted(extra)}")

    @property
    def dim(self) -> int:
        return self.H.dim

    @property
    def residual(self) -> MapDefinition:
        """G(x, lambda) = H(x, lambda) - alpha(lambda) as one parametrised map."""
        comps = tuple(h if a == ex.Const(0.0) else ex.BinOp("-", h, a)
                      for h, a in zip(self.H.components, self.alpha))
        return MapDefinition(comps, self.H.params)

    def alpha_at(self, lam: float) -> np.ndarray:
        env = {**self.H.param_dict, LAMBDA: float(lam)}
        return np.array([ex.evaluate(a, env) for a in self.alpha])

    def text(self) -> str:
        return self.H.text()

    def to_dict(self) -> dict:
        return {"H": self.H.text(), "alpha": [ex.to_text(a) for a in self.alpha], "box": self.box.literal()}


def parse_homotopy(H: str, alpha: str | None = None, box: BoxDomain | str | None = None,
                   params: dict | None = None) -> HomotopyDefinition:
    """``H`` uses x1..xk and lambda; ``alpha`` is k ';'-separated expressions in lambda (default 0)."""
    from .domain import parse_box

    params = {LAMBDA: 0.0, **(params or {})}
    hmap = parse_map(H, params=params)
    k = hmap.dim
    if alpha is None or not alpha.strip():
        path = tuple(ex.Const(0.0) for _ in range(k))
    else:
        parts = alpha.split(";")
        if len(parts) != k:
            raise ValueError(f"target path needs {k} component(s), got {len(parts)}")
        path = tuple(ex.parse_expr(p, set(params)) for p in parts)
    if box is None:
        raise ValueError("a homotopy needs a box")
    if isinstance(box, str):
        box = parse_box(box)
    return HomotopyDefinition(hmap, path, box)


@dataclass(frozen=True)
class AdmissibilityCheck:
    min_gap: float
    lambda_at_min: float
    samples: int

    def to_dict(self) -> dict:
        return {"min_gap": self.min_gap, "lambda_at_min": self.lambda_at_min, "samples": self.samples}


def homotopy_gap(G: MapDefinition, box: BoxDomain, cfg: DegreeConfig = DEFAULT_CONFIG,
                 y=None, max_dips: int = 8) -> AdmissibilityCheck:
    """Estimate of min |G(x, lambda) - y| over (box boundary) x [0, 1].

    The boundary grid is evaluated at every lambda sample in one batch. Each
    face then gives a profile of its smallest residual against lambda; the
    ``max_dips`` deepest local minima over all faces are polished by
    Gauss-Newton jointly in the face coordinates and lambda. A zero curve
    crossing a side wall is a regular root of that square system, so the
    polish lands on it.
    """
    n = max(cfg.homotopy_lambdas, 3)
    lams = np.linspace(0.0, 1.0, n)
    k = box.dim
    y0 = np.zeros(k) if y is None else np.asarray(y, dtype=float).reshape(k)
    sample = boundary_sample(box, cfg.density or default_density(k))
    pts, m = sample.points, sample.points.shape[0]
    vals = G.evaluate_batch(np.tile(pts, (n, 1)), **_lam(np.repeat(lams, m))) - y0
    if not np.all(np.isfinite(vals)):
        raise DomainError("map is not finite on the boundary for some lambda")
    R = np.linalg.norm(vals, axis=1).reshape(n, m)
    i, j = np.unravel_index(int(np.argmin(R)), R.shape)
    best, lam_best = float(R[i, j]), float(lams[i])
    if best < cfg.root_tol:
        return AdmissibilityCheck(0.0, lam_best, n)
    starts = []
    for face in range(2 * k):
        cols = np.flatnonzero(sample.face_ids == face)
        prof = R[:, cols].min(axis=1)
        arg = cols[R[:, cols].argmin(axis=1)]
        padded = np.concatenate([[np.inf], prof, [np.inf]])
        for t in range(n):
            if padded[t + 1] <= padded[t] and padded[t + 1] <= padded[t + 2]:
                starts.append((float(prof[t]), face, t, int(arg[t])))
    for _, face, t, p in sorted(starts)[:max_dips]:
        val, lam = _wall_polish(G, box, face, pts[p], float(lams[t]), y0)
        if val < best:
            best, lam_best = val, lam
        if best < cfg.root_tol:
            return AdmissibilityCheck(0.0, lam_best, n)
    return AdmissibilityCheck(best, lam_best, n)


def _wall_polish(G: MapDefinition, box: BoxDomain, face: int, x: np.ndarray, lam: float, y: np.ndarray,
                 iters: int = 30, h: float = 1e-7) -> tuple[float, float]:
    """Gauss-Newton on |G - y| over one face times [0, 1]; returns (residual, lambda)."""
    axis = face // 2
    free = [i for i in range(box.dim) if i != axis]
    lo = np.append(box.lo_array[free], 0.0)
    hi = np.append(box.hi_array[free], 1.0)
    base = np.array(x, dtype=float)

    def resid(z):
        xx = base.copy()
        xx[free] = z[:-1]
        return G.evaluate_batch(xx[None], **_lam(z[-1]))[0] - y, xx

    z = np.append(base[free], lam)
    r, xx = resid(z)
    best = float(np.linalg.norm(r))
    for _ in range(iters):
        Jx = G.fd_jacobian_batch(xx[None], **_lam(z[-1]))[0][:, free]
        lp, lm = min(z[-1] + h, 1.0), max(z[-1] - h, 0.0)
        dl = (resid(np.append(z[:-1], lp))[0] - resid(np.append(z[:-1], lm))[0]) / (lp - lm)
        J = np.column_stack([Jx, dl])
        if not np.all(np.isfinite(J)):
            break
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        for _ls in range(8):
            zn = np.clip(z + step, lo, hi)
            rn, xn = resid(zn)
            val = float(np.linalg.norm(rn))
            if np.isfinite(val) and val < best:
                break
            step *= 0.5
        else:
            break
        converged = best - val <= 1e-12 * max(best, 1.0)
        z, r, xx, best = zn, rn, xn, val
        if converged or best == 0.0:
            break
    return best, float(z[-1])


@dataclass(frozen=True)
class HomotopyReport:
    samples: tuple[tuple[float, int], ...]
    admissibility: AdmissibilityCheck
    homotopy: HomotopyDefinition
    seed: int
    config: dict

    @property
    def degrees(self) -> list[int]:
        return [d for _, d in self.samples]

    @property
    def constant(self) -> bool:
        return len(set(self.degrees)) <= 1

    def to_dict(self) -> dict:
        return envelope("homotopy", {
            "homotopy": self.homotopy.to_dict(),
            "constant": self.constant,
            "samples": [{"lambda": lam, "degree": d} for lam, d in self.samples],
            "admissibility": self.admissibility.to_dict(),
            "seed": self.seed,
            "config": self.config,
        })


def verify_homotopy_invariance(h: HomotopyDefinition, n_lambda: int = 11,
                               cfg: DegreeConfig = DEFAULT_CONFIG) -> HomotopyReport:
    """Degrees of (H(., lambda), box, alpha(lambda)) at ``n_lambda`` equally spaced lambdas."""
    if n_lambda < 2:
        raise ValueError("n_lambda must be at least 2")
    G = h.residual
    check = homotopy_gap(G, h.box, cfg)
    if check.min_gap <= cfg.homotopy_gap_tol:
        raise NotAdmissibleHomotopy(
            f"H(x, lambda) = alpha(lambda) on the boundary near lambda={check.lambda_at_min:.6g}")
    lams = np.linspace(0.0, 1.0, n_lambda)

    def deg_at(lam: float) -> int:
        return degree(h.H, h.box, h.alpha_at(lam), cfg, **_lam(float(lam))).degree

    degs = parallel_map(deg_at, lams)
    report = HomotopyReport(tuple((float(l), int(d)) for l, d in zip(lams, degs)), check, h,
                            cfg.seed, cfg.to_dict())
    if not report.constant:
        raise CertificateInconsistent(f"degree varies along an admissible homotopy: {report.samples}")
    return report


# ---------------------------------------------------------------------------
# continuation


@dataclass(frozen=True)
class ContinuationResult:
    solution: tuple[float, ...]
    residual: float
    degree0: int
    path: tuple[tuple[float, ...], ...]     # (lambda, x...) at accepted steps
    start_root: int | None                  # index of the root of f the path started from
    fallback: bool                          # True if found by a direct search at lambda = 1
    certificate: DegreeCertificate
    admissibility: AdmissibilityCheck
    map_text: str

    def to_dict(self) -> dict:
        return envelope("continuation", {
            "solution": list(self.solution),
            "residual": self.residual,
            "degree0": self.degree0,
            "map": self.map_text,
            "start_root": self.start_root,
            "fallback": self.fallback,
            "steps": len(self.path) - 1 if self.path else 0,
            "path": [list(p) for p in self.path],
            "admissibility": self.admissibility.to_dict(),
            "certificate": self.certificate.to_dict(),
        })


def _newton_at(F: MapDefinition, x0: np.ndarray, lam: float, cfg: DegreeConfig, box: BoxDomain,
               max_iters: int = 12) -> np.ndarray | None:
    k = x0.size
    X, conv = newton_batch(F, x0[None, :], np.zeros(k), cfg, (box.lo_array, box.hi_array),
                           max_iters=max_iters, **_lam(lam))
    if not conv[0]:
        return None
    x = polish(F, X, np.zeros(k), cfg, **_lam(lam))[0]
    if not box.contains(x):
        return None
    return x


def _follow(F: MapDefinition, x0: np.ndarray, box: BoxDomain, cfg: DegreeConfig) -> list[np.ndarray] | None:
    """Step lambda from 0 to 1 along one root branch with a tangent predictor."""
    path = [np.concatenate([[0.0], x0])]
    lam, x, step = 0.0, x0, cfg.cont_step
    jump = 0.05 * box.diameter
    while lam < 1.0:
        new_lam = min(1.0, lam + step)
        dl = new_lam - lam
        # tangent dx/dlambda = -Fx^{-1} F_lambda
        hl = cfg.fd_rel * max(1.0, abs(lam))
        Fl = (F.evaluate_batch(x[None], **_lam(lam + hl))[0] - F.evaluate_batch(x[None], **_lam(lam - hl))[0]) / (2 * hl)
        Jx = F.jacobian_batch(x[None], cfg.jacobian_mode, cfg.fd_rel, **_lam(lam))[0]
        try:
            pred = x - dl * np.linalg.solve(Jx, Fl)
        except np.linalg.LinAlgError:
            pred = x
        if not np.all(np.isfinite(pred)):
            pred = x
        xn = _newton_at(F, pred, new_lam, cfg, box)
        if xn is not None and np.linalg.norm(xn - pred) <= jump + np.linalg.norm(pred - x):
            lam, x = new_lam, xn
            path.append(np.concatenate([[lam], x]))
            step = min(2 * step, cfg.cont_step)
            continue
        step /= 2
        if step < cfg.cont_step_min:
            log.debug("path from %s lost at lambda=%.6g", x0.tolist(), lam)
            return None
    return path


def continuation_solve(f: MapDefinition, h: MapDefinition, box: BoxDomain,
                       cfg: DegreeConfig = DEFAULT_CONFIG) -> ContinuationResult:
    """A root of f + h(., 1) in ``box`` reached by deforming the roots of f.

    Needs h(x, 0) = 0 and f + h(., lambda) != 0 on the boundary for every
    lambda; the degree of f then certifies existence and is required nonzero.
    """
    k = box.dim
    if f.dim != k or h.dim != k:
        raise ValueError("f, h and box must have the same dimension")
    if LAMBDA not in h.param_dict:
        h = MapDefinition(h.components, {**h.param_dict, LAMBDA: 0.0}, h.analytic_jacobian)
    from .degree import _grid_starts

    probe = np.vstack([_grid_starts(box, cfg.default_grid(k)),
                       boundary_sample(box, 4 if k > 2 else 8).points])
    h0 = h.evaluate_batch(probe, **_lam(0.0))
    if not np.all(np.abs(h0) < cfg.root_tol):
        raise HypothesisViolated("h(x, 0) is not identically zero on the sampled points")
    F = compose_sum(f, h)
    check = homotopy_gap(F, box, cfg)
    if check.min_gap <= cfg.homotopy_gap_tol:
        raise NotAdmissibleHomotopy(
            f"f + h(., lambda) vanishes on the boundary near lambda={check.lambda_at_min:.6g}")
    cert = degree(f, box, None, cfg)
    if cert.degree == 0:
        raise ZeroDegree(f"deg(f, {box.literal()}, 0) = 0: existence is not certified")

    zero = np.zeros(k)
    starts = [np.asarray(r.point) for r in cert.root_set.roots]
    if cert.sigma > 0:
        # roots belong to the perturbed target; pull them back to 0
        starts = [p for p in (_newton_at(f, s, 0.0, cfg, box) for s in starts) if p is not None]
    for i, x0 in enumerate(starts):
        path = _follow(F, x0, box, cfg)
        if path is None:
            continue
        x = path[-1][1:]
        res = float(np.linalg.norm(F.evaluate_batch(x[None], **_lam(1.0))[0]))
        if res < cfg.root_tol:
            return ContinuationResult(tuple(float(v) for v in x), res, cert.degree,
                                      tuple(tuple(float(v) for v in p) for p in path), i, False,
                                      cert, check, F.text())
    # every path was lost; fall back to a direct search at lambda = 1
    try:
        roots = find_roots(F, box, zero, cfg, on_singular="keep", **_lam(1.0))
    except NotAdmissible:
        roots = None
    if roots is not None and len(roots):
        x = np.asarray(roots.roots[0].point)
        res = float(np.linalg.norm(F.evaluate_batch(x[None], **_lam(1.0))[0]))
        return ContinuationResult(tuple(float(v) for v in x), res, cert.degree, (), None, True,
                                  cert, check, F.text())
    raise PathLost(f"no constructive root found, although deg(f) = {cert.degree} certifies one exists",
                   cert.degree)


# ---------------------------------------------------------------------------
# fixed points


@dataclass(frozen=True)
class FixedPointResult:
    point: tuple[float, ...]
    residual: float
    degree: int | None             # deg(I - f, box, 0); None for a boundary fixed point
    on_boundary: bool
    certificate: DegreeCertificate | None
    map_text: str

    def to_dict(self) -> dict:
        return envelope("fixed_point", {
            "point": list(self.point),
            "residual": self.residual,
            "degree": self.degree,
            "on_boundary": self.on_boundary,
            "map": self.map_text,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
        })


def brouwer_fixed_point(f: MapDefinition, box: BoxDomain, cfg: DegreeConfig = DEFAULT_CONFIG) -> FixedPointResult:
    """A fixed point of f in the closed box, given f(boundary) inside the box."""
    k = box.dim
    if f.dim != k:
        raise ValueError("map and box dimensions differ")
    sample = boundary_sample(box, cfg.density or default_density(k)).points
    fx = f.evaluate_batch(sample)
    slack = cfg.root_tol
    inside = np.all(np.isfinite(fx), axis=1) & np.all(fx >= box.lo_array - slack, axis=1) \
        & np.all(fx <= box.hi_array + slack, axis=1)
    if not inside.all():
        bad = sample[np.argmin(inside)]
        raise HypothesisViolated(f"f maps the boundary point {bad.tolist()} outside {box.literal()}")
    g = compose_difference(identity_map(k), f)
    gx = np.linalg.norm(sample - fx, axis=1)
    j = int(np.argmin(gx))
    if gx[j] < cfg.root_tol:
        return FixedPointResult(tuple(float(v) for v in sample[j]), float(gx[j]), None, True, None, f.text())
    try:
        cert = degree(g, box, None, cfg)
    except NotAdmissible:
        # a fixed point between boundary samples
        X, conv = newton_batch(g, sample[j][None], np.zeros(k), cfg, (box.lo_array, box.hi_array))
        if conv[0]:
            x = polish(g, X, np.zeros(k), cfg)[0]
            res = float(np.linalg.norm(g.evaluate_batch(x[None])[0]))
            return FixedPointResult(tuple(float(v) for v in x), res, None, True, None, f.text())
        raise
    if cert.degree != 1:
        raise CertificateInconsistent(f"deg(I - f) = {cert.degree}, expected 1")
    x = np.asarray(cert.root_set.roots[0].point) if cert.root_set.roots else box.center
    for r in cert.root_set.roots:
        if r.index == 1:
            x = np.asarray(r.point)
            break
    if cert.sigma > 0:
        x = polish(g, x[None], np.zeros(k), cfg)[0]
    res = float(np.linalg.norm(g.evaluate_batch(x[None])[0]))
    return FixedPointResult(tuple(float(v) for v in x), res, cert.degree, False, cert, f.text())


# ---------------------------------------------------------------------------
# nontrivial zeros


@dataclass(frozen=True)
class NontrivialResult:
    point: tuple[float, ...]
    residual: float
    degree: int
    index_at_origin: int
    nontrivial_roots: tuple[tuple[float, ...], ...]
    certificate: DegreeCertificate
    map_text: str

    def to_dict(self) -> dict:
        return envelope("nontrivial", {
            "point": list(self.point),
            "residual": self.residual,
            "degree": self.degree,
            "index_at_origin": self.index_at_origin,
            "map": self.map_text,
            "nontrivial_roots": [list(p) for p in self.nontrivial_roots],
            "certificate": self.certificate.to_dict(),
        })


def nontrivial_solution(f: MapDefinition, box: BoxDomain, cfg: DegreeConfig = DEFAULT_CONFIG) -> NontrivialResult:
    """A zero of f away from the origin, certified by deg(f) != i(f, 0)."""
    k = box.dim
    zero = np.zeros(k)
    if not box.contains(zero, margin=cfg.interior_margin_rel * box.diameter):
        raise ValueError("the box must contain the origin in its interior")
    if np.linalg.norm(f.evaluate_batch(zero[None])[0]) >= cfg.root_tol:
        raise HypothesisViolated("f(0) != 0")
    i0 = index(f, zero, cfg.singular_tol, cfg.jacobian_mode, cfg.fd_rel)
    cert = degree_weak(f, box, None, cfg)
    if cert.degree == i0:
        raise Inconclusive(f"deg(f) = i(f, 0) = {i0}; no nontrivial zero is implied")
    tol = cfg.nontrivial_rel * box.diameter
    found = []
    for r in cert.root_set.roots:
        x = np.asarray(r.point)
        if cert.sigma > 0:
            x = polish(f, x[None], zero, cfg)[0]
        if np.linalg.norm(x) > tol and np.linalg.norm(f.evaluate_batch(x[None])[0]) < cfg.root_tol:
            found.append(x)
    if not found:
        raise CertificateInconsistent("degree and index differ but no nontrivial root was enumerated")
    x = found[0]
    res = float(np.linalg.norm(f.evaluate_batch(x[None])[0]))
    return NontrivialResult(tuple(float(v) for v in x), res, cert.degree, i0,
                            tuple(tuple(float(v) for v in p) for p in found), cert, f.text())


# ---------------------------------------------------------------------------
# bifurcation along the trivial branch


@dataclass(frozen=True)
class BifurcationProblem:
    """f(lambda, x) given as a map in x1..xk with parameter ``lambda``; f(lambda, 0) = 0."""

    f: MapDefinition
    a: float
    b: float
    grid: int = 101

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if self.grid < 2:
            raise ValueError("grid size must be at least 2")
        if LAMBDA not in self.f.param_dict:
            object.__setattr__(self, "f", MapDefinition(self.f.components, {**self.f.param_dict, LAMBDA: 0.0},
                                                        self.f.analytic_jacobian))

    def phi(self, lam: float, cfg: DegreeConfig = DEFAULT_CONFIG) -> float:
        """det of the x-Jacobian at (lam, 0)."""
        J = self.f.jacobian_batch(np.zeros((1, self.f.dim)), cfg.jacobian_mode, cfg.fd_rel, **_lam(float(lam)))[0]
        return float(np.linalg.det(J))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    phi_lo: float
    phi_hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "mid": self.mid, "phi_lo": self.phi_lo, "phi_hi": self.phi_hi}


@dataclass(frozen=True)
class BifurcationReport:
    brackets: tuple[Bracket, ...]
    candidates: tuple[tuple[float, float], ...]     # (lambda, phi) with |phi| small, no sign change
    lambdas: tuple[float, ...]
    phis: tuple[float, ...]
    map_text: str
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return envelope("bifurcation", {
            "map": self.map_text,
            "interval": [self.lambdas[0], self.lambdas[-1]],
            "grid": len(self.lambdas),
            "brackets": [b.to_dict() for b in self.brackets],
            "candidates": [{"lambda": l, "phi": p} for l, p in self.candidates],
            "config": self.config,
        })


def _bisect(phi, lo: float, hi: float, plo: float, phi_hi: float, tol: float) -> Bracket:
    """Shrink [lo, hi] keeping phi(lo) != 0 with the sign of ``plo`` and phi(hi) not of that sign."""
    s = np.sign(plo)
    while hi - lo > tol:
        m = 0.5 * (lo + hi)
        if m <= lo or m >= hi:
            break
        pm = phi(m)
        if np.sign(pm) == s:
            lo, plo = m, pm
        else:
            hi, phi_hi = m, pm
    return Bracket(lo, hi, plo, phi_hi)


def bifurcation_scan(p: BifurcationProblem, cfg: DegreeConfig = DEFAULT_CONFIG) -> BifurcationReport:
    """Sign changes of phi(lambda) = det d_x f(lambda, 0) on [a, b].

    Each sign change is bisected to width ``bif_tol`` and reported as a
    bracket. Grid neighbourhoods where |phi| dips to ``singular_tol``
    without a sign change are reported as candidates only.
    """
    k = p.f.dim
    lams = np.linspace(p.a, p.b, p.grid)
    F0 = np.array([p.f.evaluate_batch(np.zeros((1, k)), **_lam(float(l)))[0] for l in lams])
    bad = np.flatnonzero(~(np.linalg.norm(F0, axis=1) < cfg.root_tol))
    if bad.size:
        raise TrivialBranchViolation(f"f(lambda, 0) != 0 at lambda={lams[bad[0]]:.6g}")
    phi = lambda l: p.phi(l, cfg)  # noqa: E731
    phis = np.array([phi(l) for l in lams])
    signs = np.sign(phis)
    signs[np.abs(phis) <= cfg.singular_tol] = 0

    brackets: list[Bracket] = []
    in_bracket = np.zeros(p.grid, dtype=bool)
    nz = np.flatnonzero(signs != 0)
    for i, j in zip(nz[:-1], nz[1:]):
        if signs[i] != signs[j]:
            brackets.append(_bisect(phi, float(lams[i]), float(lams[j]), phis[i], phis[j], cfg.bif_tol))
            in_bracket[i:j + 1] = True

    candidates: list[tuple[float, float]] = []
    absphi = np.abs(phis)
    for i in range(p.grid):
        if in_bracket[i]:
            continue
        left = absphi[i - 1] if i > 0 else np.inf
        right = absphi[i + 1] if i < p.grid - 1 else np.inf
        if not (absphi[i] <= left and absphi[i] <= right):
            continue
        lam_c, val = float(lams[i]), float(phis[i])
        if abs(val) > cfg.singular_tol:
            lo, hi = float(lams[max(i - 1, 0)]), float(lams[min(i + 1, p.grid - 1)])
            r = minimize_scalar(lambda l: abs(phi(l)), bounds=(lo, hi), method="bounded",
                                options={"xatol": cfg.bif_tol})
            lam_c, val = float(r.x), phi(float(r.x))
        if abs(val) <= cfg.singular_tol and not any(c[0] == lam_c for c in candidates):
            candidates.append((lam_c, val))
    return BifurcationReport(tuple(brackets), tuple(candidates), tuple(float(l) for l in lams),
                             tuple(float(v) for v in phis), p.f.text(), cfg.to_dict())


__all__ = [
    "AdmissibilityCheck",
    "BifurcationProblem",
    "BifurcationReport",
    "Bracket",
    "ContinuationResult",
    "FixedPointResult",
    "HomotopyDefinition",
    "HomotopyReport",
    "NontrivialResult",
    "bifurcation_scan",
    "brouwer_fixed_point",
    "continuation_solve",
    "homotopy_gap",
    "nontrivial_solution",
    "parse_homotopy",
    "verify_homotopy_invariance",
]
