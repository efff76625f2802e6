"""Vector fields f: R^k -> R^k given as text, with evaluation and Jacobians."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from math import comb
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from .errors import ArityMismatch, DomainError, NearSingular, ParseError, UnknownSymbol

DEFAULT_FD_REL = 1e-6
DEFAULT_SINGULAR_TOL = 1e-10


def coordinate_names(k: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(k))


@dataclass(frozen=True)
class MapDefinition:
    """A map R^k -> R^k, one expression per component.

    ``params`` are named constants the expressions may reference (``lambda``
    for homotopies). They can be rebound with ``with_params`` without
    recompiling anything.
    """

    components: tuple[ex.Expr, ...]
    params: tuple[tuple[str, float], ...] = ()
    analytic_jacobian: tuple[tuple[ex.Expr, ...], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if isinstance(self.params, Mapping):
            object.__setattr__(self, "params", tuple(sorted((str(k), float(v)) for k, v in self.params.items())))
        k = len(self.components)
        if k == 0:
            raise ArityMismatch("a map needs at least one component")
        if self.analytic_jacobian is not None:
            jac = tuple(tuple(row) for row in self.analytic_jacobian)
            if len(jac) != k or any(len(row) != k for row in jac):
                raise ArityMismatch(f"analytic Jacobian must be {k}x{k}")
            object.__setattr__(self, "analytic_jacobian", jac)
        allowed = set(coordinate_names(k)) | set(self.param_dict)
        exprs = list(self.components)
        if self.analytic_jacobian is not None:
            exprs += [e for row in self.analytic_jacobian for e in row]
        for e in exprs:
            extra = ex.free_symbols(e) - allowed
            if extra:
                raise UnknownSymbol(f"unknown symbol(s) {sorted(extra)} in {e}")

    @property
    def dim(self) -> int:
        return len(self.components)

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    @cached_property
    def _compiled(self):
        return [ex.compile_expr(e) for e in self.components]

    @cached_property
    def _compiled_jac(self):
        if self.analytic_jacobian is None:
            return None
        return [[ex.compile_expr(e) for e in row] for row in self.analytic_jacobian]

    def _env(self, X: np.ndarray, overrides: Mapping[str, float] | None) -> dict:
        env: dict = dict(self.params)
        if overrides:
            env.update(overrides)
        for i, name in enumerate(coordinate_names(self.dim)):
            env[name] = X[:, i]
        return env

    def evaluate_batch(self, X, **overrides) -> np.ndarray:
        """Evaluate on an (N, k) array. Out-of-domain rows hold nan/inf."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        env = self._env(X, overrides)
        out = np.empty((X.shape[0], self.dim))
        with np.errstate(all="ignore"):
            for i, fn in enumerate(self._compiled):
                out[:, i] = fn(env)
        return out

    def analytic_jacobian_batch(self, X, **overrides) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        env = self._env(X, overrides)
        k = self.dim
        out = np.empty((X.shape[0], k, k))
        with np.errstate(all="ignore"):
            for i, row in enumerate(self._compiled_jac):
                for j, fn in enumerate(row):
                    out[:, i, j] = fn(env)
        return out

    def fd_jacobian_batch(self, X, fd_rel: float = DEFAULT_FD_REL, **overrides) -> np.ndarray:
        """Central differences with per-coordinate step fd_rel*max(1, |x_i|)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n, k = X.shape
        out = np.empty((n, k, k))
        for j in range(k):
            h = fd_rel * np.maximum(1.0, np.abs(X[:, j]))
            Xp = X.copy()
            Xm = X.copy()
            Xp[:, j] += h
            Xm[:, j] -= h
            # actual step after rounding keeps the quotient consistent
            hh = Xp[:, j] - Xm[:, j]
            out[:, :, j] = (self.evaluate_batch(Xp, **overrides) - self.evaluate_batch(Xm, **overrides)) / hh[:, None]
        return out

    def jacobian_batch(self, X, mode: str = "auto", fd_rel: float = DEFAULT_FD_REL, **overrides) -> np.ndarray:
        if mode == "analytic" or (mode == "auto" and self.analytic_jacobian is not None):
            if self.analytic_jacobian is None:
                raise ValueError("map has no analytic Jacobian")
            return self.analytic_jacobian_batch(X, **overrides)
        return self.fd_jacobian_batch(X, fd_rel, **overrides)

    def __call__(self, point) -> np.ndarray:
        return evaluate(self, point)

    def with_params(self, **values: float) -> "MapDefinition":
        unknown = set(values) - set(self.param_dict)
        if unknown:
            raise UnknownSymbol(f"map has no parameter(s) {sorted(unknown)}")
        p = self.param_dict
        p.update({k: float(v) for k, v in values.items()})
        return MapDefinition(self.components, p, self.analytic_jacobian)

    def translate(self, y) -> "MapDefinition":
        """The map x -> f(x) - y, built by rewriting each component."""
        y = np.asarray(y, dtype=float).reshape(-1)
        comps = tuple(ex.BinOp("-", c, ex.const(v)) for c, v in zip(self.components, y))
        return MapDefinition(comps, self.params, self.analytic_jacobian)

    def text(self) -> str:
        return "; ".join(ex.to_text(c) for c in self.components)

    def to_dict(self) -> dict:
        d = {"dimension": self.dim, "components": [ex.to_text(c) for c in self.components]}
        if self.params:
            d["params"] = self.param_dict
        if self.analytic_jacobian is not None:
            d["analytic_jacobian"] = [[ex.to_text(e) for e in row] for row in self.analytic_jacobian]
        return d


@dataclass(frozen=True)
class JacobianMatrix:
    entries: np.ndarray
    point: np.ndarray
    mode: str
    fd_step: float | None = None
    det: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "det", float(np.linalg.det(self.entries)))

    @property
    def abs_det(self) -> float:
        return abs(self.det)

    @property
    def sign(self) -> int:
        return int(np.sign(self.det))


def _split_components(text: str) -> list[tuple[str, int]]:
    parts = []
    start = 0
    for m in re.finditer(";", text):
        parts.append((text[start:m.start()], start))
        start = m.end()
    parts.append((text[start:], start))
    return parts


def parse_map(text: str, k: int | None = None, params: Mapping[str, float] | None = None,
              jacobian: str | None = None) -> MapDefinition:
    """Parse ``k`` semicolon-separated component expressions.

    ``k=None`` infers the dimension from the number of components. ``jacobian``
    optionally holds k*k semicolon-separated entries in row-major order.
    """
    params = dict(params or {})
    parts = _split_components(text)
    if k is None:
        k = len(parts)
    if len(parts) != k:
        raise ArityMismatch(f"expected {k} component(s), got {len(parts)}")
    allowed = set(coordinate_names(k)) | set(params)
    comps = []
    for chunk, off in parts:
        if not chunk.strip():
            raise ParseError("empty component", off)
        comps.append(ex.parse_expr(chunk, allowed, off))
    jac = None
    if jacobian is not None:
        jparts = _split_components(jacobian)
        if len(jparts) != k * k:
            raise ArityMismatch(f"expected {k * k} Jacobian entries, got {len(jparts)}")
        flat = [ex.parse_expr(c, allowed, o) for c, o in jparts]
        jac = tuple(tuple(flat[i * k:(i + 1) * k]) for i in range(k))
    return MapDefinition(tuple(comps), params, jac)


_PARAM_RE = re.compile(r"^\s*param\s+([A-Za-z_][A-Za-z_0-9]*)\s*=\s*(\S+)\s*$")


def parse_map_file_text(text: str, params: Mapping[str, float] | None = None) -> MapDefinition:
    """Map file: one expression per line or ';'-separated, '#' comments,
    ``param name=value`` directives."""
    bindings = dict(params or {})
    exprs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _PARAM_RE.match(line)
        if m:
            try:
                bindings[m.group(1)] = float(m.group(2))
            except ValueError:
                raise ParseError(f"line {lineno}: bad parameter value {m.group(2)!r}") from None
            continue
        if line.strip().startswith("param"):
            raise ParseError(f"line {lineno}: malformed param directive")
        exprs.extend(p.strip() for p in line.split(";") if p.strip())
    if not exprs:
        raise ParseError("map file contains no expressions")
    return parse_map("; ".join(exprs), params=bindings)


def load_map_file(path: str | Path, params: Mapping[str, float] | None = None) -> MapDefinition:
    return parse_map_file_text(Path(path).read_text(encoding="utf-8"), params)


def _as_point(fmap: MapDefinition, point) -> np.ndarray:
    x = np.asarray(point, dtype=float).reshape(-1)
    if x.shape[0] != fmap.dim:
        raise ArityMismatch(f"point has dimension {x.shape[0]}, map has {fmap.dim}")
    return x


def evaluate(fmap: MapDefinition, point) -> np.ndarray:
    """Componentwise evaluation at one point; DomainError on nan/inf."""
    x = _as_point(fmap, point)
    out = fmap.evaluate_batch(x[None, :])[0]
    if not np.all(np.isfinite(out)):
        env = fmap._env(x[None, :], None)
        for c in fmap.components:
            msg = ex._locate_domain_error(c, env)
            if msg:
                raise DomainError(msg)
        raise DomainError(f"non-finite value at {x.tolist()}")
    return out


def jacobian(fmap: MapDefinition, point, mode: str = "fd", fd_rel: float = DEFAULT_FD_REL) -> JacobianMatrix:
    """Jacobian at ``point``; ``mode`` is ``"fd"``, ``"analytic"`` or ``"auto"``."""
    x = _as_point(fmap, point)
    evaluate(fmap, x)
    if mode == "auto":
        mode = "analytic" if fmap.analytic_jacobian is not None else "fd"
    if mode == "analytic":
        if fmap.analytic_jacobian is None:
            raise ValueError("map has no analytic Jacobian")
        J = fmap.analytic_jacobian_batch(x[None, :])[0]
        step = None
    elif mode == "fd":
        J = fmap.fd_jacobian_batch(x[None, :], fd_rel)[0]
        step = fd_rel
    else:
        raise ValueError(f"unknown Jacobian mode {mode!r}")
    if not np.all(np.isfinite(J)):
        raise DomainError(f"Jacobian is not finite at {x.tolist()}")
    return JacobianMatrix(J, x, mode, step)


def relative_det(J: np.ndarray, row_scale: np.ndarray | None = None) -> np.ndarray:
    """|det J| divided by the product of row norms (floored by ``row_scale``).

    Works on a single matrix or a stack of shape (..., k, k).
    """
    rows = np.linalg.norm(J, axis=-1)
    if row_scale is not None:
        rows = np.maximum(rows, row_scale)
    denom = np.prod(rows, axis=-1)
    det = np.abs(np.linalg.det(J))
    with np.errstate(all="ignore"):
        return np.where(denom > 0, det / np.where(denom > 0, denom, 1.0), 0.0)


def index(fmap: MapDefinition, point, singular_tol: float = DEFAULT_SINGULAR_TOL,
          mode: str = "auto", fd_rel: float = DEFAULT_FD_REL) -> int:
    """sign(det f'(x)); NearSingular when the relative determinant is too small."""
    jm = jacobian(fmap, point, mode, fd_rel)
    if not relative_det(jm.entries) > singular_tol:
        raise NearSingular(f"Jacobian is near singular at {jm.point.tolist()} (det={jm.det:.3e})",
                           jm.point, jm.det)
    return jm.sign


def identity_map(k: int) -> MapDefinition:
    return MapDefinition(tuple(ex.Var(n) for n in coordinate_names(k)))


def linear_map(matrix, offset=None) -> MapDefinition:
    """x -> M x (+ offset), with its exact Jacobian attached."""
    M = np.atleast_2d(np.asarray(matrix, dtype=float))
    k = M.shape[0]
    names = coordinate_names(k)
    comps = []
    for i in range(k):
        acc: ex.Expr | None = None
        for j in range(k):
            if M[i, j] == 0:
                continue
            term = ex.BinOp("*", ex.Const(abs(M[i, j])), ex.Var(names[j]))
            if acc is None:
                acc = term if M[i, j] > 0 else ex.Neg(term)
            else:
                acc = ex.BinOp("+" if M[i, j] > 0 else "-", acc, term)
        if offset is not None and offset[i] != 0:
            c = float(offset[i])
            acc = ex.const(c) if acc is None else ex.BinOp("+" if c > 0 else "-", acc, ex.Const(abs(c)))
        comps.append(acc if acc is not None else ex.Const(0.0))
    jac = tuple(tuple(ex.const(M[i, j]) for j in range(k)) for i in range(k))
    return MapDefinition(tuple(comps), (), jac)


# ---------------------------------------------------------------------------
# complex polynomials as planar maps


def _poly_parts(coeffs: Sequence[complex], conjugate: bool) -> tuple[dict, dict]:
    """Real/imaginary parts of sum_j c_j z^j as {(p, q): coeff of x1^p x2^q}."""
    re_part: dict = {}
    im_part: dict = {}
    i_pows = [1, 1j, -1, -1j]
    for j, c in enumerate(coeffs):
        c = complex(c)
        if c == 0:
            continue
        for m in range(j + 1):
            # (x + i s y)^j term: C(j,m) x^(j-m) (i s y)^m, s = -1 for conjugate
            w = comb(j, m) * i_pows[m % 4] * ((-1) ** m if conjugate else 1) * c
            key = (j - m, m)
            if w.real:
                re_part[key] = re_part.get(key, 0.0) + w.real
            if w.imag:
                im_part[key] = im_part.get(key, 0.0) + w.imag
    return re_part, im_part


def _monomial(p: int, q: int) -> ex.Expr | None:
    factors = []
    for name, e in (("x1", p), ("x2", q)):
        if e == 1:
            factors.append(ex.Var(name))
        elif e > 1:
            factors.append(ex.BinOp("^", ex.Var(name), ex.Const(e)))
    if not factors:
        return None
    out = factors[0]
    for f in factors[1:]:
        out = ex.BinOp("*", out, f)
    return out


def polynomial_expr(terms: Mapping[tuple[int, int], float]) -> ex.Expr:
    """Sum of c * x1^p * x2^q over ``terms``, highest degree first."""
    acc: ex.Expr | None = None
    for (p, q), c in sorted(terms.items(), key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0])):
        if c == 0:
            continue
        mono = _monomial(p, q)
        a = abs(c)
        if mono is None:
            term: ex.Expr = ex.Const(a)
        elif a == 1:
            term = mono
        else:
            term = ex.BinOp("*", ex.Const(a), mono)
        if acc is None:
            acc = term if c > 0 else ex.Neg(term)
        else:
            acc = ex.BinOp("+" if c > 0 else "-", acc, term)
    return acc if acc is not None else ex.Const(0.0)


def complex_polynomial(coeffs: Sequence[complex], conjugate: bool = False) -> MapDefinition:
    """Planar map of z -> sum_j coeffs[j] z^j (ascending order).

    With ``conjugate=True`` the map is z -> p(conj z). The exact Jacobian is
    attached via the Cauchy-Riemann structure of p'.
    """
    coeffs = [complex(c) for c in coeffs]
    re_part, im_part = _poly_parts(coeffs, conjugate)
    deriv = [j * c for j, c in enumerate(coeffs)][1:] or [0j]
    du_re, du_im = _poly_parts(deriv, conjugate)
    u, v = polynomial_expr(du_re), polynomial_expr(du_im)
    if conjugate:
        jac = ((u, v), (v, ex.Neg(u)))
    else:
        jac = ((u, ex.Neg(v)), (v, u))
    return MapDefinition((polynomial_expr(re_part), polynomial_expr(im_part)), (), jac)


def compose_difference(f: MapDefinition, g: MapDefinition) -> MapDefinition:
    """x -> f(x) - g(x) by AST rewriting (params merged, g's win on clashes)."""
    if f.dim != g.dim:
        raise ArityMismatch("dimension mismatch")
    params = f.param_dict
    params.update(g.param_dict)
    comps = tuple(ex.BinOp("-", a, b) for a, b in zip(f.components, g.components))
    return MapDefinition(comps, params)


def compose_sum(f: MapDefinition, g: MapDefinition) -> MapDefinition:
    if f.dim != g.dim:
        raise ArityMismatch("dimension mismatch")
    params = f.param_dict
    params.update(g.param_dict)
    comps = tuple(ex.BinOp("+", a, b) for a, b in zip(f.components, g.components))
    return MapDefinition(comps, params)


def scale_map(f: MapDefinition, c: float) -> MapDefinition:
    comps = tuple(ex.BinOp("*", ex.const(c), e) for e in f.components)
    return MapDefinition(comps, f.params)


__all__ = [
    "MapDefinition",
    "JacobianMatrix",
    "parse_map",
    "parse_map_file_text",
    "load_map_file",
    "evaluate",
    "jacobian",
    "index",
    "relative_det",
    "identity_map",
    "linear_map",
    "complex_polynomial",
    "polynomial_expr",
    "compose_difference",
    "compose_sum",
    "scale_map",
    "coordinate_names",
]
