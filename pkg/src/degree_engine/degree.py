"""Brouwer degree of (f, U, y) for box domains U.

Pipeline: sampled boundary gap -> perturb y to a regular value if needed ->
multistart Newton enumeration of f^{-1}(y) in U -> sum of Jacobian signs,
cross-checked against a boundary-only computation when k <= 2.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_CONFIG, DegreeConfig
from .domain import BoxDomain, boundary_gap
from .errors import (
    MultipleRoots,
    NearSingular,
    NearSingularRoot,
    NotAdmissible,
    NotCompactlySupported,
    OracleDisagreement,
    PerturbationExhausted,
)
from .mapdef import MapDefinition, relative_det
from .report import envelope

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Root:
    point: tuple[float, ...]
    index: int          # +1 / -1; 0 only for roots kept with on_singular="keep"
    abs_det: float
    residual: float

    @property
    def singular(self) -> bool:
        return self.index == 0

    def to_dict(self) -> dict:
        return {"point": list(self.point), "index": self.index,
                "abs_det": self.abs_det, "residual": self.residual}


@dataclass(frozen=True)
class RootSet:
    roots: tuple[Root, ...]
    grid_resolution: int
    dedup_radius: float
    levels: tuple[tuple[int, int], ...] = ()   # (starts per axis, cumulative root count)
    stable: bool = True
    failed_starts: int = 0

    def __len__(self) -> int:
        return len(self.roots)

    @property
    def points(self) -> np.ndarray:
        if not self.roots:
            return np.empty((0, 0))
        return np.array([r.point for r in self.roots])

    @property
    def indices(self) -> list[int]:
        return [r.index for r in self.roots]

    def to_dict(self) -> dict:
        return {
            "roots": [r.to_dict() for r in self.roots],
            "grid_resolution": self.grid_resolution,
            "dedup_radius": self.dedup_radius,
            "levels": [list(lv) for lv in self.levels],
            "stable": self.stable,
            "failed_starts": self.failed_starts,
        }


@dataclass(frozen=True)
class OracleCheck:
    kind: str                  # "winding" | "boundary-sign" | "skipped"
    value: int | None = None
    agrees: bool | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "agrees": self.agrees}


@dataclass(frozen=True)
class DegreeCertificate:
    degree: int
    root_set: RootSet
    y: tuple[float, ...]
    y_used: tuple[float, ...]
    sigma: float
    boundary_gap: float
    oracle: OracleCheck
    seed: int
    config: dict
    box: BoxDomain
    map_text: str
    epsilon: float = 0.0
    attempts: int = 0
    method: str = field(default="degree")

    def to_dict(self) -> dict:
        return envelope(self.method, {
            "degree": self.degree,
            "map": self.map_text,
            "box": self.box.literal(),
            "y": list(self.y),
            "y_used": list(self.y_used),
            "sigma": self.sigma,
            "epsilon": self.epsilon,
            "boundary_gap": self.boundary_gap,
            "perturbation_attempts": self.attempts,
            "root_set": self.root_set.to_dict(),
            "oracle": self.oracle.to_dict(),
            "seed": self.seed,
            "config": self.config,
        })


# ---------------------------------------------------------------------------
# Newton machinery (batched over starts)


def _jac(fmap: MapDefinition, X: np.ndarray, cfg: DegreeConfig, ov: dict) -> np.ndarray:
    return fmap.jacobian_batch(X, cfg.jacobian_mode, cfg.fd_rel, **ov)


def _solve_batch(J: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Newton steps -J^{-1} F for a stack; second value flags usable rows."""
    n = J.shape[0]
    dx = np.zeros_like(F)
    ok = np.all(np.isfinite(J), axis=(1, 2)) & np.all(np.isfinite(F), axis=1)
    if ok.any():
        det = np.zeros(n)
        det[ok] = np.linalg.det(J[ok])
        ok &= np.isfinite(det) & (det != 0)
    idx = np.flatnonzero(ok)
    if idx.size:
        try:
            dx[idx] = np.linalg.solve(J[idx], -F[idx][..., None])[..., 0]
        except np.linalg.LinAlgError:
            for i in idx:
                try:
                    dx[i] = np.linalg.solve(J[i], -F[i])
                except np.linalg.LinAlgError:
                    ok[i] = False
    ok &= np.all(np.isfinite(dx), axis=1)
    return dx, ok


def _rownorm(F: np.ndarray) -> np.ndarray:
    """Row norms; runaway iterates overflow to inf, which the callers reject."""
    with np.errstate(over="ignore", invalid="ignore"):
        return np.linalg.norm(F, axis=1)


def newton_batch(fmap: MapDefinition, X0: np.ndarray, y: np.ndarray, cfg: DegreeConfig,
                 bounds: tuple[np.ndarray, np.ndarray] | None = None, max_iters: int | None = None,
                 **ov) -> tuple[np.ndarray, np.ndarray]:
    """Damped Newton from every row of ``X0``.

    Returns the final iterates and a mask of starts whose residual dropped
    below ``root_tol``. Iterates leaving ``bounds`` are abandoned.
    """
    X = np.array(X0, dtype=float, copy=True)
    n = X.shape[0]
    max_iters = cfg.max_iters if max_iters is None else max_iters
    F = fmap.evaluate_batch(X, **ov) - y
    res = _rownorm(F)
    active = np.isfinite(res)
    converged = np.zeros(n, dtype=bool)
    for _ in range(max_iters + 1):
        done = active & (res < cfg.root_tol)
        converged |= done
        active &= ~done
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Xa, Fa, ra = X[idx], F[idx], res[idx]
        dx, ok = _solve_batch(_jac(fmap, Xa, cfg, ov), Fa)
        t = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        pending = ok.copy()
        for _ls in range(12):
            if not pending.any():
                break
            p = np.flatnonzero(pending)
            Xt = Xa[p] + t[p, None] * dx[p]
            Ft = fmap.evaluate_batch(Xt, **ov) - y
            rt = _rownorm(Ft)
            good = np.isfinite(rt) & (rt < (1.0 - 1e-4 * t[p]) * ra[p])
            g = p[good]
            Xa[g], Fa[g], ra[g] = Xt[good], Ft[good], rt[good]
            accepted[g] = True
            pending[g] = False
            t[p[~good]] *= 0.5
        X[idx], F[idx], res[idx] = Xa, Fa, ra
        active[idx[~accepted]] = False
        if bounds is not None:
            lo, hi = bounds
            inside = np.all((X[idx] >= lo) & (X[idx] <= hi), axis=1)
            active[idx[~inside]] = False
    return X, converged


def polish(fmap: MapDefinition, X: np.ndarray, y: np.ndarray, cfg: DegreeConfig, **ov) -> np.ndarray:
    """Undamped Newton run to step-size exhaustion.

    Near a critical root convergence is only linear, so a long polish drives
    the iterate onto the critical point where the determinant test sees it.
    """
    X = np.array(X, dtype=float, copy=True)
    F = fmap.evaluate_batch(X, **ov) - y
    res = _rownorm(F)
    active = np.isfinite(res)
    for _ in range(cfg.polish_iters):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        dx, ok = _solve_batch(_jac(fmap, X[idx], cfg, ov), F[idx])
        Xn = X[idx] + dx
        Fn = fmap.evaluate_batch(Xn, **ov) - y
        rn = _rownorm(Fn)
        take = ok & np.isfinite(rn) & (rn <= 10 * res[idx] + 1e-300)
        t = idx[take]
        X[t], F[t], res[t] = Xn[take], Fn[take], rn[take]
        scale = np.maximum(1.0, np.abs(X[idx]).max(axis=1))
        small = np.linalg.norm(dx, axis=1) <= 1e-14 * scale
        active[idx[~take | small]] = False
    return X


def _reference_rows(fmap: MapDefinition, box: BoxDomain, cfg: DegreeConfig, ov: dict) -> np.ndarray:
    """Typical Jacobian row norms over the box (median over a coarse grid)."""
    X = _grid_starts(box, cfg.default_grid(box.dim))
    J = _jac(fmap, X, cfg, ov)
    rows = np.linalg.norm(J, axis=2)
    rows = rows[np.all(np.isfinite(rows), axis=1)]
    if rows.size == 0:
        return np.zeros(box.dim)
    return np.median(rows, axis=0)


def _is_critical(fmap: MapDefinition, x: np.ndarray, J: np.ndarray, ref_rows: np.ndarray,
                 cfg: DegreeConfig, ov: dict) -> bool:
    if not np.all(np.isfinite(J)) or relative_det(J, ref_rows) <= cfg.singular_tol:
        return True
    # the root is located only to about |J^-1| * root_tol; its index must be
    # constant over a generous multiple of that radius
    det0 = np.linalg.det(J)
    try:
        rho = cfg.stability_factor * np.linalg.norm(np.linalg.inv(J), 2) * cfg.root_tol
    except np.linalg.LinAlgError:
        return True
    k = x.size
    probes = np.repeat(x[None, :], 2 * k, axis=0)
    for i in range(k):
        probes[2 * i, i] += rho
        probes[2 * i + 1, i] -= rho
    dets = np.linalg.det(_jac(fmap, probes, cfg, ov))
    if not np.all(np.isfinite(dets)):
        return True
    ratio = dets / det0
    return bool(np.any(ratio <= 0.5) or np.any(ratio >= 1.5))


def _grid_starts(box: BoxDomain, n: int) -> np.ndarray:
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi in zip(box.lo, box.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def find_roots(fmap: MapDefinition, box: BoxDomain, y=None, cfg: DegreeConfig = DEFAULT_CONFIG,
               on_singular: str = "raise", **ov) -> RootSet:
    """Enumerate f^{-1}(y) in the open box by multistart damped Newton.

    Start grids double per axis each level; the search stops once a
    refinement adds no new root (or the start budget runs out, in which
    case ``stable`` is False). ``on_singular="keep"`` records critical roots
    with index 0 instead of raising NearSingularRoot.
    """
    k = box.dim
    if fmap.dim != k:
        raise ValueError(f"map dimension {fmap.dim} != box dimension {k}")
    y = np.zeros(k) if y is None else np.asarray(y, dtype=float).reshape(k)
    diam = box.diameter
    dedup = cfg.dedup_rel * diam
    margin = cfg.interior_margin_rel * diam
    slack = 0.25 * box.widths
    bounds = (box.lo_array - slack, box.hi_array + slack)
    ref_rows = _reference_rows(fmap, box, cfg, ov)

    roots: list[Root] = []
    pts: list[np.ndarray] = []
    levels: list[tuple[int, int]] = []
    failed = 0
    n = cfg.default_grid(k)
    stable = False
    for _level in range(cfg.max_levels):
        if n ** k > cfg.max_starts and levels:
            break
        starts = _grid_starts(box, n)
        X, conv = newton_batch(fmap, starts, y, cfg, bounds, **ov)
        failed += int((~conv).sum())
        cand = X[conv]
        if cand.size:
            # coarse first-occurrence dedup on a lattice, exact check below
            keys = np.floor((cand - box.lo_array) / max(dedup, 1e-300)).astype(np.int64)
            _, first = np.unique(keys, axis=0, return_index=True)
            cand = cand[np.sort(first)]
            cand = polish(fmap, cand, y, cfg, **ov)
            F = fmap.evaluate_batch(cand, **ov) - y
            resid = np.linalg.norm(F, axis=1)
            Js = _jac(fmap, cand, cfg, ov)
            for x, r, J in zip(cand, resid, Js):
                if not np.isfinite(r) or r >= cfg.root_tol:
                    continue
                d = float(box.interior_distance(x)[0])
                if d < 0:
                    continue
                if pts and np.min(np.linalg.norm(np.array(pts) - x, axis=1)) <= dedup:
                    continue
                if d < margin:
                    raise NotAdmissible(f"root {x.tolist()} lies on the boundary of the box")
                det = float(np.linalg.det(J))
                if _is_critical(fmap, x, J, ref_rows, cfg, ov):
                    if on_singular == "raise":
                        raise NearSingularRoot(f"critical root near {x.tolist()} (det={det:.3e})", x, det)
                    roots.append(Root(tuple(float(v) for v in x), 0, abs(det), float(r)))
                else:
                    roots.append(Root(tuple(float(v) for v in x), int(np.sign(det)), abs(det), float(r)))
                pts.append(x)
        levels.append((n, len(roots)))
        if len(levels) >= 2 and levels[-1][1] == levels[-2][1]:
            stable = True
            break
        n *= 2
    if failed:
        log.debug("%d Newton start(s) did not converge inside the box", failed)
    return RootSet(tuple(roots), levels[-1][0], dedup, tuple(levels), stable, failed)


# ---------------------------------------------------------------------------
# regular-value perturbation


def _ball_sample(rng: np.random.Generator, k: int, radius: float) -> np.ndarray:
    v = rng.standard_normal(k)
    v /= np.linalg.norm(v)
    return v * radius * rng.random() ** (1.0 / k)


def _regularize(fmap, box, y, cfg, delta, rng, **ov):
    try:
        return y, find_roots(fmap, box, y, cfg, **ov), 0
    except NearSingularRoot:
        pass
    sigma_max = delta / 4
    for attempt in range(cfg.max_retries):
        radius = min(cfg.sigma0 * cfg.sigma_growth ** attempt, sigma_max)
        y2 = y + _ball_sample(rng, y.size, radius)
        try:
            return y2, find_roots(fmap, box, y2, cfg, **ov), attempt + 1
        except NearSingularRoot:
            continue
    raise PerturbationExhausted(
        f"no regular value found within {sigma_max:.3e} of {y.tolist()} after {cfg.max_retries} draws")


def perturb_to_regular(fmap: MapDefinition, box: BoxDomain, y=None, seed: int | None = None,
                       cfg: DegreeConfig = DEFAULT_CONFIG, **ov) -> np.ndarray:
    """A regular value y' with |y' - y| < dist(y, f(boundary)) / 4 (y itself if regular)."""
    k = box.dim
    y = np.zeros(k) if y is None else np.asarray(y, dtype=float).reshape(k)
    delta = boundary_gap(fmap, box, y, cfg.density, cfg.refine_rounds, cfg.root_tol, **ov)
    if delta <= 0:
        raise NotAdmissible(f"{y.tolist()} is attained on the boundary")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    return _regularize(fmap, box, y, cfg, delta, rng, **ov)[0]


# ---------------------------------------------------------------------------
# degree


def _oracle_value(fmap, box, y, cfg, ov) -> OracleCheck:
    from . import oracle

    if box.dim == 1:
        return OracleCheck("boundary-sign", oracle.degree_1d(fmap, box, y, cfg.root_tol, **ov))
    if box.dim == 2:
        return OracleCheck("winding", oracle.winding_number_2d(fmap, box, y, cfg, **ov))
    return OracleCheck("skipped")


def degree(fmap: MapDefinition, box: BoxDomain, y=None, cfg: DegreeConfig = DEFAULT_CONFIG,
           **ov) -> DegreeCertificate:
    """Certified (to sampling resolution) deg(f, box, y)."""
    k = box.dim
    y = np.zeros(k) if y is None else np.asarray(y, dtype=float).reshape(k)
    delta = boundary_gap(fmap, box, y, cfg.density, cfg.refine_rounds, cfg.root_tol, **ov)
    if delta <= 0:
        raise NotAdmissible(f"{y.tolist()} is attained on the boundary of {box.literal()}")
    rng = np.random.default_rng(cfg.seed)
    y_used, roots, attempts = _regularize(fmap, box, y, cfg, delta, rng, **ov)
    deg = sum(r.index for r in roots.roots)

    check = OracleCheck("skipped")
    if cfg.oracle and k <= 2:
        check = _oracle_value(fmap, box, y_used, cfg, ov)
        if check.value != deg:
            # one escalation with a finer start grid before giving up
            finer = cfg.replace(grid=2 * cfg.default_grid(k), max_levels=cfg.max_levels + 2)
            try:
                roots2 = find_roots(fmap, box, y_used, finer, **ov)
            except NearSingularRoot:
                roots2 = roots
            deg2 = sum(r.index for r in roots2.roots)
            if deg2 != check.value:
                raise OracleDisagreement(
                    f"root enumeration gives {deg2}, {check.kind} oracle gives {check.value}",
                    {"enumerated": deg2, "oracle": check.value, "oracle_kind": check.kind,
                     "roots": [r.to_dict() for r in roots2.roots], "y_used": y_used.tolist()})
            roots, deg = roots2, deg2
        check = OracleCheck(check.kind, check.value, True)

    sigma = float(np.linalg.norm(y_used - y))
    return DegreeCertificate(
        degree=int(deg),
        root_set=roots,
        y=tuple(float(v) for v in y),
        y_used=tuple(float(v) for v in y_used),
        sigma=sigma,
        boundary_gap=float(delta),
        oracle=check,
        seed=cfg.seed,
        config=cfg.to_dict(),
        box=box,
        map_text=fmap.text(),
        attempts=attempts,
    )


def degree_weak(fmap: MapDefinition, outer_box: BoxDomain, y=None, cfg: DegreeConfig = DEFAULT_CONFIG,
                **ov) -> DegreeCertificate:
    """Degree over an unbounded domain realised by a box believed to hold
    the whole (compact) solution set; doubling the box must add no roots."""
    cert = degree(fmap, outer_box, y, cfg, **ov)
    big = outer_box.scaled(2.0)
    y_used = np.array(cert.y_used)
    gap = boundary_gap(fmap, big, y_used, cfg.density, cfg.refine_rounds, cfg.root_tol, **ov)
    if gap <= 0:
        raise NotCompactlySupported(f"the doubled box {big.literal()} has a root on its boundary")
    try:
        outer_roots = find_roots(fmap, big, y_used, cfg, **ov)
    except NearSingularRoot as e:
        raise NotCompactlySupported(f"critical root outside the outer box near {np.asarray(e.point).tolist()}") from e
    extra = [r for r in outer_roots.roots if not outer_box.contains(r.point)]
    if extra or len(outer_roots) > len(cert.root_set):
        where = extra[0].point if extra else None
        raise NotCompactlySupported(f"doubling the box reveals new roots (e.g. {where})")
    return dataclasses.replace(cert, method="degree_weak")


def linearization_degree(fmap: MapDefinition, box: BoxDomain, x0, y0=None,
                         cfg: DegreeConfig = DEFAULT_CONFIG) -> int:
    """sign det f'(x0) for the unique root x0 in ``box``; checked against degree()."""
    from .mapdef import evaluate, index

    x0 = np.asarray(x0, dtype=float)
    y0 = np.zeros(box.dim) if y0 is None else np.asarray(y0, dtype=float)
    if np.linalg.norm(evaluate(fmap, x0) - y0) >= cfg.root_tol:
        raise ValueError(f"f(x0) != y0 at {x0.tolist()}")
    sign = index(fmap, x0, cfg.singular_tol, cfg.jacobian_mode, cfg.fd_rel)
    cert = degree(fmap, box, y0, cfg)
    if len(cert.root_set) != 1:
        raise MultipleRoots(f"{len(cert.root_set)} roots in {box.literal()}")
    if cert.degree != sign:
        raise NearSingular(f"linearization sign {sign} differs from degree {cert.degree}", x0)
    return sign
