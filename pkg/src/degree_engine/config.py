"""Numerical knobs shared by the degree pipeline and the solvers."""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass


@dataclass(frozen=True)
class DegreeConfig:
    root_tol: float = 1e-9          # residual norm accepted as a root
    singular_tol: float = 1e-10     # relative |det J| below which a root is critical
    fd_rel: float = 1e-6
    jacobian_mode: str = "auto"     # auto | fd | analytic
    dedup_rel: float = 1e-6         # dedup radius as a fraction of box diameter
    interior_margin_rel: float = 1e-9
    density: int | None = None      # boundary samples per edge; None = by dimension
    refine_rounds: int = 3
    grid: int | None = None         # starts per axis on the first level; None = by dimension
    max_levels: int = 5
    max_starts: int = 200_000
    max_iters: int = 60
    polish_iters: int = 100
    stability_factor: float = 1e3   # radius multiplier for the index stability probe
    sigma0: float = 1e-8
    sigma_growth: float = 10.0
    max_retries: int = 8
    oracle: bool = True
    winding_segments: int = 256
    winding_max_levels: int = 16
    winding_snap_tol: float = 1e-6
    seed: int = 0
    # admissibility of homotopies
    homotopy_lambdas: int = 81      # lambda samples for the boundary check
    homotopy_gap_tol: float = 1e-6  # refined gaps below this count as a boundary crossing
    # continuation
    cont_step: float = 0.1
    cont_step_min: float = 1e-6
    # bifurcation scan
    bif_grid: int = 101
    bif_tol: float = 1e-8
    # nontrivial solutions: distance from 0 as a fraction of the box diameter
    nontrivial_rel: float = 1e-4
    # zero-set tracing, steps as fractions of the slab diagonal
    trace_step: float = 1e-2
    trace_step_min: float = 1e-5
    trace_step_max: float = 5e-2
    trace_max_steps: int = 20_000
    loop_probes: int = 32

    def replace(self, **changes) -> "DegreeConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def with_overrides(self, overrides: dict[str, str]) -> "DegreeConfig":
        """Apply ``key=value`` strings, coercing to the field's type."""
        types = {f.name: f.type for f in dataclasses.fields(self)}
        changes = {}
        for key, raw in overrides.items():
            if key not in types:
                raise KeyError(f"unknown tolerance key {key!r}")
            t = str(types[key])
            if t.startswith("bool"):
                changes[key] = raw.lower() in ("1", "true", "yes", "on")
            elif t.startswith("int"):
                changes[key] = None if raw.lower() == "none" else int(raw)
            elif t.startswith("float"):
                changes[key] = float(raw)
            else:
                changes[key] = raw
        return self.replace(**changes)

    def default_grid(self, k: int) -> int:
        if self.grid is not None:
            return self.grid
        return {1: 8, 2: 6, 3: 4}.get(k, 3)


DEFAULT_CONFIG = DegreeConfig()


def thread_count() -> int:
    """Worker cap from DEGREE_ENGINE_THREADS (default: CPU count)."""
    raw = os.environ.get("DEGREE_ENGINE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items) -> list:
    """Order-preserving map over a thread pool; results do not depend on the pool size."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
