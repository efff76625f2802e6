"""Zero set of G(x, lambda) = H(x, lambda) - alpha(lambda) in box x [0, 1].

When 0 is a regular value the zero set is a finite union of arcs with ends
on the faces lambda = 0 and lambda = 1 and closed loops. Arcs are followed
by pseudo-arclength continuation from every face root; loops are searched
for by projecting random interior points onto the zero set. Each face root
p is paired with the other end c(p) of its arc and the determinant signs
at the two ends are compared.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_CONFIG, DegreeConfig
from .degree import degree, find_roots, newton_batch, polish
from .errors import EscapedBoundary, PairingViolation, RegularityFailure, UnmatchedEndpoint
from .report import envelope
from .solvers import LAMBDA, HomotopyDefinition

log = logging.getLogger(__name__)

FACE_EPS = 1e-7     # corrected points this far past a face count as crossings


@dataclass(frozen=True)
class Endpoint:
    id: int
    face: int                  # 0 or 1
    x: tuple[float, ...]
    sign: int                  # sign det d_x G at the endpoint
    component: int | None = None

    def to_dict(self) -> dict:
        return {"id": self.id, "face": self.face, "x": list(self.x), "sign": self.sign,
                "component": self.component}


@dataclass
class Component:
    id: int
    kind: str                  # arc | loop | escaped
    points: np.ndarray         # (N, k+1): x..., lambda
    tangents: np.ndarray       # (N, k+1) unit tangents along the trace
    endpoints: tuple[int, ...] = ()
    exit_point: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        d = {"id": self.id, "kind": self.kind, "endpoints": list(self.endpoints),
             "n_points": int(self.points.shape[0])}
        if self.exit_point is not None:
            d["exit_point"] = list(self.exit_point)
        d["points"] = self.points.tolist()
        return d


@dataclass
class ArcReport:
    components: list[Component]
    endpoints: list[Endpoint]
    pairing: dict[int, int]
    tangencies: list[tuple[int, tuple[float, ...]]]   # (face, x) of critical face roots
    face_degrees: tuple[int, int]
    homotopy: HomotopyDefinition
    seed: int
    config: dict = field(default_factory=dict)
    seed_refinements: int = 0

    def sign_sum(self, face: int) -> int:
        return sum(e.sign for e in self.endpoints if e.face == face)

    @property
    def escaped(self) -> list[Component]:
        return [c for c in self.components if c.kind == "escaped"]

    def kinds(self) -> list[str]:
        return [c.kind for c in self.components]

    def to_dict(self) -> dict:
        return envelope("trace", {
            "homotopy": self.homotopy.to_dict(),
            "components": [c.to_dict() for c in self.components],
            "endpoints": [e.to_dict() for e in self.endpoints],
            "pairing": [[p, q] for p, q in sorted(self.pairing.items())],
            "sign_sum": [self.sign_sum(0), self.sign_sum(1)],
            "face_degrees": list(self.face_degrees),
            "tangencies": [{"face": f, "x": list(x)} for f, x in self.tangencies],
            "seed_refinements": self.seed_refinements,
            "seed": self.seed,
            "config": self.config,
        })

    def to_csv(self) -> str:
        k = self.homotopy.dim
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["component", "kind", "step"] + [f"x{i + 1}" for i in range(k)] + [LAMBDA])
        for c in self.components:
            for i, p in enumerate(c.points):
                w.writerow([c.id, c.kind, i] + [format(float(v), ".17g") for v in p])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# numerics on the (k+1)-dimensional slab


class _Slab:
    def __init__(self, h: HomotopyDefinition, cfg: DegreeConfig):
        self.h = h
        self.G = h.residual
        self.k = h.dim
        self.cfg = cfg
        self.box = h.box
        self.lo, self.hi = h.box.lo_array, h.box.hi_array
        self.diag = float(np.sqrt(h.box.diameter ** 2 + 1.0))

    def value(self, P: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(P)
        return self.G.evaluate_batch(P[:, :self.k], **{LAMBDA: P[:, self.k]})

    def jacobian(self, P: np.ndarray) -> np.ndarray:
        """(N, k, k+1): x-Jacobian and the lambda column by central differences."""
        P = np.atleast_2d(P)
        k, cfg = self.k, self.cfg
        lam = P[:, k]
        Jx = self.G.jacobian_batch(P[:, :k], cfg.jacobian_mode, cfg.fd_rel, **{LAMBDA: lam})
        hl = cfg.fd_rel * np.maximum(1.0, np.abs(lam))
        Gp = self.G.evaluate_batch(P[:, :k], **{LAMBDA: lam + hl})
        Gm = self.G.evaluate_batch(P[:, :k], **{LAMBDA: lam - hl})
        Jl = (Gp - Gm) / (2 * hl)[:, None]
        return np.concatenate([Jx, Jl[:, :, None]], axis=2)

    def tangent(self, p: np.ndarray, ref: np.ndarray | None = None) -> np.ndarray:
        J = self.jacobian(p)[0]
        _, _, Vt = np.linalg.svd(J)
        t = Vt[-1]
        if ref is not None and t @ ref < 0:
            t = -t
        return t

    def correct(self, q: np.ndarray, p: np.ndarray, t: np.ndarray, s: float) -> tuple[np.ndarray, int] | None:
        """Newton on G = 0 plus the hyperplane t.(q - p) = s."""
        tol = self.cfg.root_tol
        for it in range(1, 9):
            Gq = self.value(q)[0]
            if not np.all(np.isfinite(Gq)):
                return None
            A = np.vstack([self.jacobian(q)[0], t])
            rhs = -np.concatenate([Gq, [t @ (q - p) - s]])
            try:
                dq = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                return None
            q = q + dq
            if np.linalg.norm(dq) <= 1e-12 * (1.0 + np.linalg.norm(q)):
                break
        r = np.linalg.norm(self.value(q)[0])
        if not r < tol:
            return None
        return q, it

    def project(self, q: np.ndarray, iters: int = 40) -> np.ndarray | None:
        """Minimum-norm Newton onto the zero set (for interior probes)."""
        for _ in range(iters):
            Gq = self.value(q)[0]
            if not np.all(np.isfinite(Gq)):
                return None
            if np.linalg.norm(Gq) < self.cfg.root_tol:
                return q
            dq = -np.linalg.pinv(self.jacobian(q)[0]) @ Gq
            step = np.linalg.norm(dq)
            if step > 0.25 * self.diag:
                dq *= 0.25 * self.diag / step
            q = q + dq
        return q if np.linalg.norm(self.value(q)[0]) < self.cfg.root_tol else None

    def face_root(self, x0: np.ndarray, face: int) -> np.ndarray | None:
        """Newton in x at fixed lambda = face."""
        cfg, k = self.cfg, self.k
        slack = 0.25 * self.box.widths
        X, conv = newton_batch(self.G, x0[None], np.zeros(k), cfg, (self.lo - slack, self.hi + slack),
                               **{LAMBDA: float(face)})
        if not conv[0]:
            return None
        return polish(self.G, X, np.zeros(k), cfg, **{LAMBDA: float(face)})[0]

    def face_sign(self, x: np.ndarray, face: int) -> int:
        from .mapdef import relative_det

        J = self.G.jacobian_batch(x[None], self.cfg.jacobian_mode, self.cfg.fd_rel, **{LAMBDA: float(face)})[0]
        if not relative_det(J) > self.cfg.singular_tol:
            raise RegularityFailure(f"d_x G is near singular at the endpoint x={x.tolist()}, lambda={face}")
        return int(np.sign(np.linalg.det(J)))

    def inside_x(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass
class _Trace:
    points: list[np.ndarray]
    tangents: list[np.ndarray]
    end: str                          # face | escaped | closed
    face: int | None = None
    x_end: np.ndarray | None = None


def _near_polyline(q: np.ndarray, pts: np.ndarray, closed: bool = False) -> bool:
    """True if q lies within a quarter segment length of some chord of the polyline."""
    if pts.shape[0] == 1:
        return bool(np.linalg.norm(q - pts[0]) < 1e-9)
    A, B = pts[:-1], pts[1:]
    if closed:
        A, B = np.vstack([A, pts[-1:]]), np.vstack([B, pts[:1]])
    d = B - A
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", q - A, d) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    dist = np.linalg.norm(A + t[:, None] * d - q, axis=1)
    return bool(np.any(dist <= 0.25 * np.sqrt(L2) + 1e-9))


def _wall_crossing(slab: _Slab, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Point where the chord from p (inside) to q (outside in x) meets the side wall."""
    k = slab.k
    d = q[:k] - p[:k]
    frac = 1.0
    for i in range(k):
        if q[i] > slab.hi[i] and d[i] > 0:
            frac = min(frac, (slab.hi[i] - p[i]) / d[i])
        elif q[i] < slab.lo[i] and d[i] < 0:
            frac = min(frac, (slab.lo[i] - p[i]) / d[i])
    w = p + max(frac, 0.0) * (q - p)
    w[:k] = np.clip(w[:k], slab.lo, slab.hi)
    return w


def _follow(slab: _Slab, start: np.ndarray, t0: np.ndarray, loop_start: bool = False) -> _Trace:
    cfg, k = slab.cfg, slab.k
    s_min, s_max = cfg.trace_step_min * slab.diag, cfg.trace_step_max * slab.diag
    s = cfg.trace_step * slab.diag
    p, t = start.copy(), t0 / np.linalg.norm(t0)
    pts, tans = [p], [t]
    arclen = 0.0
    for _ in range(cfg.trace_max_steps):
        out = slab.correct(p + s * t, p, t, s)
        ok = out is not None
        if ok:
            q, its = out
            tq = slab.tangent(q, t)
            chord = np.linalg.norm(q - p)
            ok = tq @ t > 0.9 and np.linalg.norm(q - (p + s * t)) <= 0.5 * s and chord > 0
        if not ok:
            s *= 0.5
            if s < s_min:
                raise UnmatchedEndpoint(f"zero-set trace stalled at x={p[:k].tolist()}, lambda={p[k]:.6g}")
            continue
        lam = q[k]
        for face, past, outward in ((0, -lam, -tq[k]), (1, lam - 1.0, tq[k])):
            if past > FACE_EPS or (past > -FACE_EPS and outward > 1e-3):
                # interpolate to the face, then solve exactly there
                frac = (face - p[k]) / (q[k] - p[k]) if q[k] != p[k] else 1.0
                x_est = p[:k] + np.clip(frac, 0.0, 1.0) * (q[:k] - p[:k])
                xe = slab.face_root(x_est, face)
                if xe is None or np.linalg.norm(xe - x_est) > 2 * chord:
                    break
                end = np.concatenate([xe, [float(face)]])
                if not slab.inside_x(xe):
                    return _Trace(pts + [end], tans + [tq], "escaped", face, xe)
                return _Trace(pts + [end], tans + [tq], "face", face, xe)
        else:
            if not slab.inside_x(q[:k]):
                w = _wall_crossing(slab, p, q)
                return _Trace(pts + [w], tans + [tq], "escaped", None, w[:k])
            if loop_start and arclen > 2 * chord and _near_polyline(start, np.vstack([p, q])) \
                    and tq @ t0 > 0:
                return _Trace(pts, tans, "closed")
            pts.append(q)
            tans.append(tq)
            arclen += chord
            p, t = q, tq
            if its <= 3:
                s = min(1.5 * s, s_max)
            elif its >= 6:
                s = max(0.5 * s, s_min)
            continue
        # face snap failed: shorten the step and retry
        s *= 0.5
        if s < s_min:
            raise UnmatchedEndpoint(f"could not land on the lambda={face} face near x={p[:k].tolist()}")
    raise UnmatchedEndpoint("zero-set trace exceeded trace_max_steps")


# ---------------------------------------------------------------------------
# driver


def _face_seeds(slab: _Slab, face: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Regular and critical roots of G(., face) = 0 in the box."""
    roots = find_roots(slab.G, slab.box, np.zeros(slab.k), slab.cfg, on_singular="keep",
                       **{LAMBDA: float(face)})
    regular = [np.asarray(r.point) for r in roots.roots if r.index != 0]
    critical = [np.asarray(r.point) for r in roots.roots if r.index == 0]
    return regular, critical


def trace_zero_set(h: HomotopyDefinition, cfg: DegreeConfig = DEFAULT_CONFIG) -> ArcReport:
    """Trace every arc from the face roots, then probe the interior for loops."""
    slab = _Slab(h, cfg)
    k = slab.k
    match_r = max(cfg.dedup_rel * slab.diag, 1e3 * cfg.root_tol)

    endpoints: list[Endpoint] = []
    tangencies: list[tuple[int, tuple[float, ...]]] = []
    for face in (0, 1):
        regular, critical = _face_seeds(slab, face)
        for x in regular:
            endpoints.append(Endpoint(len(endpoints), face, tuple(float(v) for v in x), slab.face_sign(x, face)))
        tangencies.extend((face, tuple(float(v) for v in x)) for x in critical)

    def match(face: int, x: np.ndarray) -> int | None:
        for e in endpoints:
            if e.face == face and np.linalg.norm(np.asarray(e.x) - x) <= match_r:
                return e.id
        return None

    refinements = 0

    def register(face: int, x: np.ndarray) -> int:
        nonlocal refinements
        i = match(face, x)
        if i is None:
            # the face search missed this root: refine the seed set with it
            sign = slab.face_sign(x, face)
            i = len(endpoints)
            endpoints.append(Endpoint(i, face, tuple(float(v) for v in x), sign))
            refinements += 1
            log.info("seed set refined with a root at lambda=%d, x=%s", face, x.tolist())
        return i

    components: list[Component] = []
    pairing: dict[int, int] = {}
    comp_of: dict[int, int] = {}

    def add_component(kind, pts, tans, ends=(), exit_point=None) -> int:
        cid = len(components)
        components.append(Component(cid, kind, np.array(pts), np.array(tans), tuple(ends),
                                    None if exit_point is None else tuple(float(v) for v in exit_point)))
        for e in ends:
            comp_of[e] = cid
        return cid

    i = 0
    while i < len(endpoints):
        e = endpoints[i]
        i += 1
        if e.id in comp_of:
            continue
        x = np.asarray(e.x)
        start = np.concatenate([x, [float(e.face)]])
        t0 = slab.tangent(start)
        inward = 1.0 if e.face == 0 else -1.0
        if abs(t0[k]) < 1e-12:
            raise RegularityFailure(f"zero set is tangent to the face at x={e.x}, lambda={e.face}")
        if t0[k] * inward < 0:
            t0 = -t0
        tr = _follow(slab, start, t0)
        if tr.end == "escaped":
            add_component("escaped", tr.points, tr.tangents, (e.id,), tr.x_end)
            continue
        j = register(tr.face, tr.x_end)
        if j == e.id or j in comp_of:
            raise PairingViolation(f"arc from endpoint {e.id} ends on an endpoint that is already paired",
                                   len(components))
        pairing[e.id], pairing[j] = j, e.id
        add_component("arc", tr.points, tr.tangents, (e.id, j))

    # loops are invisible from the faces: probe the interior
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.loop_probes):
        q0 = np.concatenate([rng.uniform(slab.lo, slab.hi), [rng.uniform(0.0, 1.0)]])
        q = slab.project(q0)
        if q is None or not slab.inside_x(q[:k]) or not 0.0 < q[k] < 1.0:
            continue
        if any(_near_polyline(q, c.points, c.kind == "loop") for c in components):
            continue
        t0 = slab.tangent(q)
        fwd = _follow(slab, q, t0, loop_start=True)
        if fwd.end == "closed":
            add_component("loop", fwd.points, fwd.tangents)
            continue
        back = _follow(slab, q, -t0)
        pts = back.points[::-1] + fwd.points[1:]
        tans = [-v for v in back.tangents[::-1]] + fwd.tangents[1:]
        if "escaped" in (fwd.end, back.end):
            add_component("escaped", pts, tans, (), fwd.x_end if fwd.end == "escaped" else back.x_end)
            continue
        a, b = register(back.face, back.x_end), register(fwd.face, fwd.x_end)
        if pairing.get(a) == b:
            continue
        if a in comp_of or b in comp_of:
            raise PairingViolation("probe found an arc whose ends are paired elsewhere", len(components))
        pairing[a], pairing[b] = b, a
        add_component("arc", pts, tans, (a, b))

    endpoints = [Endpoint(e.id, e.face, e.x, e.sign, comp_of.get(e.id)) for e in endpoints]
    degs = tuple(degree(slab.G, h.box, None, cfg, **{LAMBDA: float(face)}).degree for face in (0, 1))
    return ArcReport(components, endpoints, pairing, tangencies, degs, h, cfg.seed, cfg.to_dict(), refinements)


@dataclass(frozen=True)
class PairingVerdict:
    sign_sums: tuple[int, int]
    face_degrees: tuple[int, int]
    n_arcs: int
    n_loops: int

    def to_dict(self) -> dict:
        return {"sign_sums": list(self.sign_sums), "face_degrees": list(self.face_degrees),
                "arcs": self.n_arcs, "loops": self.n_loops, "ok": True}


def pairing_check(report: ArcReport) -> PairingVerdict:
    """Companion and sign rules, and sign sums against the face degrees."""
    if report.escaped:
        raise EscapedBoundary(f"component {report.escaped[0].id} leaves the box through its side")
    ends = {e.id: e for e in report.endpoints}
    for p, e in ends.items():
        if p not in report.pairing:
            raise PairingViolation(f"endpoint {p} has no companion", e.component)
        c = report.pairing[p]
        if report.pairing.get(c) != p or c == p:
            raise PairingViolation(f"pairing is not an involution at endpoint {p}", e.component)
        same_face = ends[c].face == e.face
        if same_face and e.sign != -ends[c].sign:
            raise PairingViolation(f"same-face companions {p}, {c} carry equal signs", e.component)
        if not same_face and e.sign != ends[c].sign:
            raise PairingViolation(f"cross-face companions {p}, {c} carry opposite signs", e.component)
    sums = (report.sign_sum(0), report.sign_sum(1))
    if sums[0] != sums[1]:
        raise PairingViolation(f"sign sums differ across faces: {sums}")
    if sums != tuple(report.face_degrees):
        raise PairingViolation(f"sign sums {sums} differ from the face degrees {report.face_degrees}")
    kinds = report.kinds()
    return PairingVerdict(sums, tuple(report.face_degrees), kinds.count("arc"), kinds.count("loop"))


__all__ = ["ArcReport", "Component", "Endpoint", "PairingVerdict", "pairing_check", "trace_zero_set"]
