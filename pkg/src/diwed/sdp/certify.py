"""``beta_k^L``: minimum of the certified SDP dual over partitions and a theta search.

The search works with equal angles inside each region. It evaluates the
see-saw optimum of the partition, seeded random perturbations of it, and
optionally a grid where every region uses ``(0, delta)``. A common rotation
of all angles is a symmetry, so that grid covers every uniform setting. The
relaxation is only known to be tight near the see-saw optimum, so the
metadata records exactly which settings were examined. When several restarts
reach the same see-saw value the neighbourhood with the best certificate is
used.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from diwed.core import MeasurementSettings, Partition, PibiCoefficients
from diwed.partitions import candidate_partitions
from diwed.sdp.problem import PAIR_CAP, build_relaxation
from diwed.sdp.solver import solve_sdp
from diwed.seesaw import BoundResult, SeesawOptions


MAX_TIED_SEEDS = 8
STABLE_RTOL = 1e-5


@dataclass
class ThetaSearch:
    perturbations: int = 20
    scale: float = 0.05
    grid: bool = False
    grid_step: float = math.pi / 24
    seed: int = 0
    tol: float = 1e-8
    engine: str = "auto"


@dataclass
class PartitionCertificate:
    partition: Partition
    value: float
    settings: MeasurementSettings
    seed_value: float
    evaluations: list = field(default_factory=list)


def region_settings(settings: MeasurementSettings, partition: Partition) -> MeasurementSettings:
    """Per-region angles; per-party input is reduced by a circular mean over each region."""
    if settings.mode != "per-party":
        return settings.copy()
    out = []
    for s, off in zip(partition.sizes, partition.offsets()):
        block = settings.angles[off:off + s]
        out.append(np.arctan2(np.sin(block).mean(axis=0), np.cos(block).mean(axis=0)))
    return MeasurementSettings(np.mod(np.array(out), 2 * np.pi), "per-region")


def theta_candidates(seed: MeasurementSettings, partition: Partition, search: ThetaSearch):
    """``(tag, settings)`` pairs around ``seed`` in evaluation order."""
    rng = np.random.default_rng(np.random.SeedSequence([search.seed, *partition.sizes, 1]))
    for i in range(search.perturbations):
        ang = seed.angles + search.scale * rng.standard_normal(seed.angles.shape)
        yield f"perturbation[{i}]", MeasurementSettings(ang, "per-region")
    if search.grid:
        for delta in np.arange(0.0, 2 * np.pi - 1e-12, search.grid_step):
            yield f"grid[{delta:.6f}]", MeasurementSettings(np.tile([0.0, delta], (partition.m, 1)), "per-region")


def certify_partition(coeffs: PibiCoefficients, partition: Partition, seed,
                      search: ThetaSearch | None = None, cap: int = PAIR_CAP) -> PartitionCertificate:
    """Certificate over the theta neighbourhood of a see-saw optimum.

    ``seed`` is one settings object or a list of equally good see-saw optima.
    Degenerate optima differ in how tight the relaxation is around them
    (pairwise marginals cannot see frustration), so each seed gets the full
    neighbourhood search, in order of decreasing value at the seed, and the
    best neighbourhood minimum is kept. The loop stops at the first seed whose
    neighbourhood stays within ``STABLE_RTOL`` of its value at the seed.
    """
    search = search or ThetaSearch()
    seeds = [region_settings(st, partition) for st in (seed if isinstance(seed, (list, tuple)) else [seed])]
    warm, evals = None, []

    def evaluate(tag, st):
        nonlocal warm
        sol = solve_sdp(build_relaxation(coeffs, st, partition, cap), tol=search.tol, engine=search.engine, warm=warm)
        if sol.engine == "admm":
            warm = sol.state
        evals.append({"tag": tag, "value": sol.certified_value, "primal": sol.primal_value,
                      "status": sol.status, "engine": sol.engine, "iterations": sol.iterations})
        return sol.certified_value

    tags = [f"seed[{i}]" if len(seeds) > 1 else "seed" for i in range(len(seeds))]
    at_seed = [evaluate(tag, st) for tag, st in zip(tags, seeds)]
    best = None
    for i in sorted(range(len(seeds)), key=lambda i: -at_seed[i]):
        local = (at_seed[i], seeds[i])
        for tag, st in theta_candidates(seeds[i], partition, search):
            value = evaluate(f"{tags[i]}/{tag}", st)
            if value < local[0]:
                local = (value, st)
        if best is None or local[0] > best[0]:
            best = (local[0], local[1], at_seed[i])
        if local[0] >= at_seed[i] - STABLE_RTOL * max(1.0, abs(at_seed[i])):
            break
    return PartitionCertificate(partition, best[0], best[1], best[2], evals)


def _seed_for(coeffs, partition, seeds, options):
    if seeds is not None:
        hit = seeds.get(partition.sizes) if isinstance(seeds, dict) else seeds
        if hit is not None:
            return hit
    from diwed.spin import optimize_symmetric_partition

    res = optimize_symmetric_partition(coeffs, partition, options)
    return [res.settings] + res.ties[:MAX_TIED_SEEDS]


def lower_bound(coeffs: PibiCoefficients, n: int, k: int, seeds=None, partitions="balanced",
                search: ThetaSearch | None = None, options: SeesawOptions | None = None,
                cap: int = PAIR_CAP) -> BoundResult:
    """Certified ``beta_k^L``.

    ``seeds`` is one settings object or a mapping from partition sizes to
    settings; partitions without a seed get the symmetric see-saw optimum.
    """
    search = search or ThetaSearch()
    options = options or SeesawOptions()
    parts = candidate_partitions(n, k, partitions)
    certs = [certify_partition(coeffs, p, _seed_for(coeffs, p, seeds, options), search, cap) for p in parts]
    best = min(certs, key=lambda cert: (cert.value, cert.partition.sizes))
    statuses = {}
    for cert in certs:
        for ev in cert.evaluations:
            statuses[ev["status"]] = statuses.get(ev["status"], 0) + 1
    return BoundResult(
        n=n,
        k=k,
        beta_lower=best.value,
        partition=best.partition,
        settings=best.settings,
        mode="sdp",
        metadata={
            "theta_search": asdict(search),
            "theta_evaluations": sum(len(c.evaluations) for c in certs),
            "solver_status": statuses,
            "partitions_searched": [p.label() for p in parts],
            "per_partition": {c.partition.label(): c.value for c in certs},
            "global_theta_search": False,
        },
        candidates=certs,
    )
