"""Axis-aligned boxes, boundary sampling and boundary-gap estimation."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .mapdef import MapDefinition


@dataclass(frozen=True)
class BoxDomain:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must have the same positive length")
        if not all(np.isfinite(lo + hi)):
            raise ValueError("box bounds must be finite")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box: lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, k: int, half: float = 1.0, center=None) -> "BoxDomain":
        c = np.zeros(k) if center is None else np.asarray(center, dtype=float)
        return cls(tuple(c - half), tuple(c + half))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_array(self) -> np.ndarray:
        return np.array(self.lo)

    @property
    def hi_array(self) -> np.ndarray:
        return np.array(self.hi)

    @property
    def widths(self) -> np.ndarray:
        return self.hi_array - self.lo_array

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo_array + self.hi_array)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, x, margin: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo_array + margin) and np.all(x <= self.hi_array - margin))

    def interior_distance(self, X) -> np.ndarray:
        """Signed distance to the boundary along the axes (negative outside)."""
        X = np.atleast_2d(X)
        return np.minimum(X - self.lo_array, self.hi_array - X).min(axis=1)

    def scaled(self, factor: float) -> "BoxDomain":
        c, w = self.center, self.widths * factor / 2
        return BoxDomain(tuple(c - w), tuple(c + w))

    def literal(self) -> str:
        return "x".join(f"[{_num(a)},{_num(b)}]" for a, b in zip(self.lo, self.hi))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


_INTERVAL_RE = re.compile(r"\[\s*([^,\]]+?)\s*,\s*([^,\]]+?)\s*\]")


def parse_box(text: str) -> BoxDomain:
    """Parse a literal like ``[-2,2]x[-2,2]`` (parentheses are accepted too)."""
    s = text.strip().replace("(", "[").replace(")", "]")
    pos = 0
    lo, hi = [], []
    while True:
        m = _INTERVAL_RE.match(s, pos)
        if m is None:
            raise ParseError(f"bad box literal {text!r}", pos)
        try:
            lo.append(float(m.group(1)))
            hi.append(float(m.group(2)))
        except ValueError:
            raise ParseError(f"bad number in box literal {text!r}", m.start()) from None
        pos = m.end()
        rest = s[pos:].lstrip()
        if not rest:
            break
        if rest[0] not in "x×*":
            raise ParseError(f"expected 'x' between intervals in {text!r}", pos)
        pos = len(s) - len(rest) + 1
        while pos < len(s) and s[pos].isspace():
            pos += 1
    try:
        return BoxDomain(tuple(lo), tuple(hi))
    except ValueError as e:
        raise ParseError(str(e)) from None


def default_density(k: int) -> int:
    if k <= 2:
        return 64
    if k == 3:
        return 16
    return 8


@dataclass(frozen=True)
class BoundarySample:
    points: np.ndarray      # (M, k)
    face_ids: np.ndarray    # (M,), face = 2*axis + (0 for lo, 1 for hi)
    density: int

    def distinct(self) -> np.ndarray:
        return np.unique(self.points, axis=0)


def _face_grid(box: BoxDomain, face: int, axes_lo, axes_hi, density: int) -> np.ndarray:
    k = box.dim
    axis, side = divmod(face, 2)
    fixed = box.hi[axis] if side else box.lo[axis]
    free = [i for i in range(k) if i != axis]
    if not free:
        return np.array([[fixed]])
    grids = [np.linspace(axes_lo[i], axes_hi[i], density) for i in free]
    mesh = np.array(list(itertools.product(*grids)))
    pts = np.empty((mesh.shape[0], k))
    pts[:, axis] = fixed
    pts[:, free] = mesh
    return pts


def boundary_sample(box: BoxDomain, density: int) -> BoundarySample:
    """Uniform tensor grid of ``density`` points per edge on each of the 2k faces.

    Ordered by face index, then lexicographically within a face. Points on
    shared edges appear once per face they belong to.
    """
    if density < 2:
        raise ValueError("density must be at least 2")
    pts, ids = [], []
    for face in range(2 * box.dim):
        p = _face_grid(box, face, box.lo, box.hi, density)
        pts.append(p)
        ids.append(np.full(p.shape[0], face))
    return BoundarySample(np.vstack(pts), np.concatenate(ids), density)


def _residuals(fmap: MapDefinition, X: np.ndarray, y: np.ndarray, overrides=None) -> np.ndarray:
    vals = fmap.evaluate_batch(X, **(overrides or {}))
    if not np.all(np.isfinite(vals)):
        bad = X[~np.all(np.isfinite(vals), axis=1)][0]
        raise DomainError(f"map is not finite on the boundary at {bad.tolist()}")
    return np.linalg.norm(vals - y, axis=1)


def boundary_gap(fmap: MapDefinition, box: BoxDomain, y=None, density: int | None = None,
                 refine_rounds: int = 3, root_tol: float = 1e-9, polish: bool = True, **overrides) -> float:
    """Sampled lower estimate of dist(y, f(boundary)).

    After the uniform pass, ``refine_rounds`` passes resample a shrinking
    neighbourhood of the best sample on its face. Returns 0.0 when any
    sample is within ``root_tol`` of ``y``. With ``polish`` (and at least one
    refine round) a Gauss-Newton pass on the best face finishes the search.
    Keyword ``overrides`` rebind map parameters (e.g. ``lambda=0.3``).
    """
    if fmap.dim != box.dim:
        raise ValueError(f"map dimension {fmap.dim} != box dimension {box.dim}")
    k = box.dim
    y = np.zeros(k) if y is None else np.asarray(y, dtype=float).reshape(k)
    density = density or default_density(k)
    sample = boundary_sample(box, density)
    r = _residuals(fmap, sample.points, y, overrides)
    i = int(np.argmin(r))
    best = float(r[i])
    if best < root_tol:
        return 0.0
    if k == 1:
        return best
    x_best, face = sample.points[i], int(sample.face_ids[i])
    spacing = box.widths / (density - 1)
    for _ in range(refine_rounds):
        lo = np.maximum(box.lo_array, x_best - spacing)
        hi = np.minimum(box.hi_array, x_best + spacing)
        pts = _face_grid(box, face, lo, hi, density)
        rr = _residuals(fmap, pts, y, overrides)
        j = int(np.argmin(rr))
        if rr[j] < best:
            best, x_best = float(rr[j]), pts[j]
        if best < root_tol:
            return 0.0
        spacing = 2 * spacing / (density - 1)
    if polish and refine_rounds > 0:
        best = min(best, _face_polish(fmap, box, face, x_best, y, overrides))
        if best < root_tol:
            return 0.0
    return best


def _face_polish(fmap: MapDefinition, box: BoxDomain, face: int, x: np.ndarray, y: np.ndarray,
                 overrides: dict, iters: int = 8) -> float:
    """Gauss-Newton for min |f - y| over one face, started from a sample.

    Lands exactly on boundary hits that fall between grid points; otherwise
    it settles in the local least-squares minimum. Only improvements count.
    """
    axis = face // 2
    free = [i for i in range(box.dim) if i != axis]
    x = np.array(x, dtype=float)
    r = fmap.evaluate_batch(x[None], **overrides)[0] - y
    best = float(np.linalg.norm(r))
    for _ in range(iters):
        J = fmap.fd_jacobian_batch(x[None], **overrides)[0][:, free]
        if not np.all(np.isfinite(J)):
            break
        step = np.linalg.lstsq(J, -r, rcond=None)[0]
        xn = x.copy()
        xn[free] = np.clip(x[free] + step, box.lo_array[free], box.hi_array[free])
        rn = fmap.evaluate_batch(xn[None], **overrides)[0] - y
        val = float(np.linalg.norm(rn))
        if not np.isfinite(val) or val >= best:
            break
        x, r, best = xn, rn, val
    return best


def subdivide(box: BoxDomain, axis: int) -> tuple[BoxDomain, BoxDomain]:
    if not 0 <= axis < box.dim:
        raise ValueError(f"axis {axis} out of range for a {box.dim}-box")
    mid = 0.5 * (box.lo[axis] + box.hi[axis])
    left_hi = list(box.hi)
    left_hi[axis] = mid
    right_lo = list(box.lo)
    right_lo[axis] = mid
    return BoxDomain(box.lo, tuple(left_hi)), BoxDomain(tuple(right_lo), box.hi)
