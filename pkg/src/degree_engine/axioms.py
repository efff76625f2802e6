"""Normalization, additivity and homotopy-invariance checks over seeded corpora."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_CONFIG, DegreeConfig
from .corpus import complex_cubic_homotopy, random_box, random_polynomial_map, random_target, translation_homotopy
from .degree import degree
from .domain import BoxDomain, boundary_gap, subdivide
from .errors import DegreeError
from .mapdef import identity_map
from .report import envelope
from .solvers import verify_homotopy_invariance

AXIOMS = ("normalization", "additivity", "homotopy")


@dataclass
class AxiomTally:
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "failed": self.failed, "skipped": self.skipped,
                "failures": self.failures}


def check_normalization(cfg: DegreeConfig, rng: np.random.Generator, tally: AxiomTally) -> None:
    for k in range(1, 5):
        boxes = [BoxDomain.cube(k, 1.0), random_box(rng, k)]
        for box in boxes:
            try:
                d = degree(identity_map(k), box, None, cfg).degree
            except DegreeError as e:
                d = f"{type(e).__name__}: {e}"
            if d == 1:
                tally.passed += 1
            else:
                tally.failed += 1
                tally.failures.append({"k": k, "box": box.literal(), "degree": d})


def additivity_instance(rng: np.random.Generator, cfg: DegreeConfig):
    """A (map, box, target, axis) whose boxes and midplane are root-free at sampling resolution."""
    while True:
        k = int(rng.integers(1, 3))
        f = random_polynomial_map(rng, k)
        box = random_box(rng, k)
        y = random_target(rng, k, 1.5)
        axis = int(rng.integers(0, k))
        left, right = subdivide(box, axis)
        try:
            gaps = [boundary_gap(f, b, y, cfg.density, cfg.refine_rounds, cfg.root_tol) for b in (box, left, right)]
        except DegreeError:
            continue
        if min(gaps) > 1e-3:
            return f, box, y, axis


def check_additivity(cfg: DegreeConfig, rng: np.random.Generator, tally: AxiomTally, count: int,
                     inject_fault: bool = False) -> None:
    # the fault hook merges every root of a child box into one by inflating the
    # dedup radius, which must break additivity on some instance
    child_cfg = cfg.replace(dedup_rel=1.0, oracle=False) if inject_fault else cfg
    for i in range(count):
        f, box, y, axis = additivity_instance(rng, cfg)
        left, right = subdivide(box, axis)
        try:
            d = degree(f, box, y, cfg).degree
            dl = degree(f, left, y, child_cfg).degree
            dr = degree(f, right, y, child_cfg).degree
        except DegreeError as e:
            tally.failed += 1
            tally.failures.append({"instance": i, "map": f.text(), "error": f"{type(e).__name__}: {e}"})
            continue
        if d == dl + dr:
            tally.passed += 1
        else:
            tally.failed += 1
            tally.failures.append({"instance": i, "map": f.text(), "box": box.literal(), "y": list(y),
                                   "parent": d, "left": dl, "right": dr})


def check_homotopy(cfg: DegreeConfig, rng: np.random.Generator, tally: AxiomTally, count: int) -> None:
    cases = [translation_homotopy(rng.uniform(-1.0, 1.0, k)) for k in (1, 2, 3)]
    cases += [complex_cubic_homotopy(rng) for _ in range(count)]
    for h in cases:
        try:
            rep = verify_homotopy_invariance(h, 11, cfg)
            ok = rep.constant
        except DegreeError as e:
            ok = False
            rep = f"{type(e).__name__}: {e}"
        if ok:
            tally.passed += 1
        else:
            tally.failed += 1
            tally.failures.append({"H": h.H.text(), "result": rep if isinstance(rep, str) else rep.samples})


@dataclass
class AxiomReport:
    tallies: dict
    seed: int
    config: dict
    inject_fault: bool = False

    @property
    def ok(self) -> bool:
        return all(t.failed == 0 for t in self.tallies.values())

    def to_dict(self) -> dict:
        return envelope("verify_axioms", {
            "ok": self.ok,
            "inject_fault": self.inject_fault,
            "results": {name: t.to_dict() for name, t in self.tallies.items()},
            "seed": self.seed,
            "config": self.config,
        })


def run_axioms(cfg: DegreeConfig = DEFAULT_CONFIG, only: str | None = None, count: int = 20,
               inject_fault: bool = False) -> AxiomReport:
    names = AXIOMS if only is None else (only,)
    for n in names:
        if n not in AXIOMS:
            raise ValueError(f"unknown axiom {n!r}; choose from {', '.join(AXIOMS)}")
    tallies = {}
    for n in names:
        # one generator per axiom keeps each corpus independent of --only
        rng = np.random.default_rng([cfg.seed, AXIOMS.index(n)])
        t = AxiomTally()
        if n == "normalization":
            check_normalization(cfg, rng, t)
        elif n == "additivity":
            check_additivity(cfg, rng, t, count, inject_fault)
        else:
            check_homotopy(cfg, rng, t, max(1, count // 10))
        tallies[n] = t
    return AxiomReport(tallies, cfg.seed, cfg.to_dict(), inject_fault)
