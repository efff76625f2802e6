"""Boundary-only degree computations for k = 1 and k = 2.

Both depend on f restricted to the boundary of the box and nothing else,
which makes them independent of the root enumeration in ``degree``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_CONFIG, DegreeConfig
from .domain import BoxDomain
from .errors import BoundaryHit, DomainError, NonIntegerWinding
from .mapdef import MapDefinition


def degree_1d(fmap: MapDefinition, interval: BoxDomain, y=0.0, root_tol: float = 1e-9, **ov) -> int:
    """(sign(f(b) - y) - sign(f(a) - y)) / 2 on the interval (a, b)."""
    if interval.dim != 1 or fmap.dim != 1:
        raise ValueError("degree_1d needs a scalar map and an interval")
    y = float(np.asarray(y, dtype=float).reshape(-1)[0])
    vals = fmap.evaluate_batch(np.array([[interval.lo[0]], [interval.hi[0]]]), **ov)[:, 0] - y
    if not np.all(np.isfinite(vals)):
        raise DomainError("map is not finite at an endpoint")
    fa, fb = vals
    if abs(fa) < root_tol or abs(fb) < root_tol:
        raise BoundaryHit(f"an endpoint maps to {y} (f(a)-y={fa:.3e}, f(b)-y={fb:.3e})")
    return int((np.sign(fb) - np.sign(fa)) // 2)


@dataclass(frozen=True)
class WindingTrace:
    winding: int
    total_angle: float
    max_step: float      # largest |angle increment| after refinement
    n_points: int
    levels: int


def _perimeter_points(box: BoxDomain, t: np.ndarray) -> np.ndarray:
    """Counterclockwise boundary for t in [0, 4]: bottom, right, top, left."""
    (x0, y0), (x1, y1) = box.lo, box.hi
    e = np.minimum(np.floor(t).astype(int), 3)
    s = t - e
    P = np.empty((t.size, 2))
    for edge, (ax, ay, bx, by) in enumerate(((x0, y0, x1, y0), (x1, y0, x1, y1),
                                             (x1, y1, x0, y1), (x0, y1, x0, y0))):
        m = e == edge
        P[m, 0] = ax + s[m] * (bx - ax)
        P[m, 1] = ay + s[m] * (by - ay)
    return P


def winding_trace(fmap: MapDefinition, box: BoxDomain, y=None, cfg: DegreeConfig = DEFAULT_CONFIG,
                  segments: int | None = None, start: float = 0.0, **ov) -> WindingTrace:
    """Turning of arg(f - y) around the positively oriented box boundary.

    Segments whose angle increment exceeds pi/2 are bisected (up to
    ``winding_max_levels`` times) so that the branch of arg is unambiguous.
    ``start`` shifts where the traversal begins (in edge units, 0..4).
    """
    if box.dim != 2 or fmap.dim != 2:
        raise ValueError("winding number needs a planar map and a 2-box")
    y = np.zeros(2) if y is None else np.asarray(y, dtype=float).reshape(2)
    n = segments or cfg.winding_segments
    t = start + np.arange(4 * n + 1) / n

    def values(tt):
        W = fmap.evaluate_batch(_perimeter_points(box, np.mod(tt, 4.0)), **ov) - y
        if not np.all(np.isfinite(W)):
            raise DomainError("map is not finite on the boundary")
        z = W[:, 0] + 1j * W[:, 1]
        if np.any(np.abs(z) < cfg.root_tol):
            raise BoundaryHit("the target is attained on the boundary")
        return z

    z = values(t)
    level = 0
    while True:
        dtheta = np.angle(z[1:] / z[:-1])
        bad = np.abs(dtheta) > np.pi / 2
        if not bad.any():
            break
        if level >= cfg.winding_max_levels:
            raise NonIntegerWinding(
                f"angle increments still exceed pi/2 after {level} bisection levels; boundary gap too small?")
        where = np.flatnonzero(bad)
        tm = 0.5 * (t[where] + t[where + 1])
        zm = values(tm)
        t = np.insert(t, where + 1, tm)
        z = np.insert(z, where + 1, zm)
        level += 1
    total = float(dtheta.sum())
    w = total / (2 * np.pi)
    r = int(round(w))
    if abs(w - r) > cfg.winding_snap_tol:
        raise NonIntegerWinding(f"total turning {w:.9f} is not an integer")
    return WindingTrace(r, total, float(np.abs(dtheta).max()), t.size, level)


def winding_number_2d(fmap: MapDefinition, box: BoxDomain, y=None, cfg: DegreeConfig = DEFAULT_CONFIG,
                      **ov) -> int:
    return winding_trace(fmap, box, y, cfg, **ov).winding
