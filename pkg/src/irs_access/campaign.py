"""Monte Carlo driver: per-drop evaluation and percentile summaries.

Every drop owns a random stream derived from ``(master_seed, drop_index)``,
so the result does not depend on how drops are scheduled across workers.
All schemes and phase modes of one drop are evaluated on the same channel
realization (paired comparison).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .access import SCHEME_FUNCS, PhaseMode, modes_for
from .fading import SteeringGeometry, assemble_channels
from .reflect import DegenerateChannelError, random_phases
from .scenario import SCHEMES, ScenarioConfig, link_gains, place_users

log = logging.getLogger(__name__)

# campaign fails when more than this fraction of drops had to be resampled
MAX_DEGENERATE_FRACTION = 1e-3
MAX_ATTEMPTS_PER_DROP = 100


class DegenerateCampaignError(RuntimeError):
    pass


@dataclass(frozen=True)
class DropRecord:
    drop_index: int
    scheme: str
    phase_mode: str
    bits: int | None
    sum_rate: float


@dataclass(frozen=True)
class Summary:
    mean: float
    p5: float
    p50: float


@dataclass
class CampaignResult:
    records: list
    summaries: dict                 # (scheme, mode label) -> Summary
    degenerate_drops: int = 0
    schemes: tuple = SCHEMES
    modes: tuple = field(default_factory=tuple)     # PhaseMode, in output order

    def values(self, scheme, mode_label):
        return np.array([r.sum_rate for r in self.records
                         if r.scheme == scheme and r.phase_mode == mode_label])

    def p5(self, scheme, mode_label):
        return self.summaries[scheme, mode_label].p5


def drop_stream(master_seed, drop_index, attempt=0):
    """Independent generator for one drop (and resampling attempt)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(drop_index, attempt))
    return np.random.default_rng(ss)


def draw_drop(config: ScenarioConfig, rng):
    """Placement, large-scale gains, channels and the shared random reflection."""
    placement = place_users(config, rng)
    gains = link_gains(placement, config, rng)
    channels = assemble_channels(config, gains, SteeringGeometry.from_config(config), rng)
    random_refl = random_phases(config.n_elements, rng)
    return placement, gains, channels, random_refl


def evaluate_drop(config, channels, random_refl, modes, schemes=None):
    """All (scheme, mode) results on one channel set, in output order."""
    cache = {}
    out = []
    for scheme in schemes or config.schemes:
        for mode in modes:
            out.append(SCHEME_FUNCS[scheme](channels, config, mode,
                                            random_reflection=random_refl, cache=cache))
    return out


def _run_drop(config: ScenarioConfig, drop_index, modes):
    for attempt in range(MAX_ATTEMPTS_PER_DROP):
        rng = drop_stream(config.master_seed, drop_index, attempt)
        _, _, channels, random_refl = draw_drop(config, rng)
        try:
            results = evaluate_drop(config, channels, random_refl, modes)
        except DegenerateChannelError:
            log.warning("drop %d attempt %d degenerate, resampling", drop_index, attempt)
            continue
        records = [DropRecord(drop_index, r.scheme, r.phase_mode,
                              PhaseMode.parse(r.phase_mode).bits, r.sum_rate)
                   for r in results]
        return records, attempt
    raise DegenerateCampaignError(
        f"drop {drop_index} degenerate after {MAX_ATTEMPTS_PER_DROP} attempts")


def run_drop(config: ScenarioConfig, drop_index, modes=None):
    if not 0 <= drop_index < config.drops:
        raise ValueError(f"drop_index {drop_index} outside [0, {config.drops})")
    records, _ = _run_drop(config, drop_index, modes or modes_for(config))
    return records


def _drop_task(args):
    config, drop_index, modes = args
    return _run_drop(config, drop_index, modes)


def empirical_percentile(values, p):
    """Nearest-rank percentile: the ``ceil(p*n)``-th smallest value, rank clamped to [1, n]."""
    if len(values) == 0:
        raise ValueError("empty sample")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    v = np.sort(np.asarray(values, dtype=float))
    n = v.size
    # guard against p*n landing a hair above an integer (0.07*100 = 7.000000000000001)
    rank = math.ceil(round(p * n, 9))
    rank = min(max(rank, 1), n)
    return float(v[rank - 1])


def summarize(values):
    return Summary(mean=math.fsum(values) / len(values),
                   p5=empirical_percentile(values, 0.05),
                   p50=empirical_percentile(values, 0.50))


def run_campaign(config: ScenarioConfig, parallel=1, modes=None) -> CampaignResult:
    """Run ``config.drops`` drops, optionally across ``parallel`` processes."""
    modes = tuple(modes or modes_for(config))
    tasks = ((config, i, modes) for i in range(config.drops))
    per_drop = []
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            chunk = max(1, config.drops // (parallel * 8))
            for i, out in enumerate(pool.map(_drop_task, tasks, chunksize=chunk)):
                per_drop.append(out)
                if (i + 1) % 1000 == 0:
                    log.info("%d / %d drops", i + 1, config.drops)
    else:
        for i, task in enumerate(tasks):
            per_drop.append(_drop_task(task))
            if (i + 1) % 1000 == 0:
                log.info("%d / %d drops", i + 1, config.drops)

    degenerate = sum(1 for _, attempts in per_drop if attempts > 0)
    if degenerate > MAX_DEGENERATE_FRACTION * config.drops:
        raise DegenerateCampaignError(
            f"{degenerate} of {config.drops} drops were degenerate")

    return aggregate([rec for recs, _ in per_drop for rec in recs],
                     config.schemes, modes, degenerate)


def aggregate(records, schemes, modes, degenerate=0) -> CampaignResult:
    """Sort records into output order and build per-(scheme, mode) summaries."""
    scheme_rank = {s: i for i, s in enumerate(schemes)}
    mode_rank = {m.label: i for i, m in enumerate(modes)}
    records = sorted(records, key=lambda r: (scheme_rank[r.scheme], mode_rank[r.phase_mode],
                                             r.drop_index))
    groups = {}
    for r in records:
        groups.setdefault((r.scheme, r.phase_mode), []).append(r.sum_rate)
    summaries = {key: summarize(vals) for key, vals in groups.items()}
    return CampaignResult(records, summaries, degenerate, tuple(schemes), tuple(modes))
