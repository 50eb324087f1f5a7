"""Obstacle-avoiding planning pipeline.

The direct synchronized trajectory is checked against every obstacle. On a
collision, evading candidates are generated around the first obstacle hit,
each is checked against all obstacles, and the fastest collision-free one
is chosen.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple
from . import config
from .axis_planner import PartialTarget
from .axis_trajectory import AxisLimits, AxisState
from .collision import CollisionInfo, Obstacle, collides_any
from .errors import CandidateFailedError, InvalidEndpointError, NoCollisionFreeCandidateError
from .evasion import CandidateSpec, Evasion, candidate_count, enumerate_candidates, evade
from .multi_axis import MultiAxisTrajectory, plan_synchronized

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:

    vehicle_radius: float = 0.5
    margin: float = 0.1
    prune: bool = True
    parallel: bool = False
    workers: int = 4
    corner_iterations: int = 5
    corner_tolerance: float = 1e-4

    def __post_init__(self):
        assert self.vehicle_radius >= 0 and self.margin >= 0, 'Radius and margin must be non-negative'
        assert self.workers >= 1 and self.corner_iterations >= 1, 'Worker and iteration counts must be positive'

    @classmethod
    def from_config(cls, **overrides) -> 'PlannerConfig':
        """Builds the configuration from the package defaults; keyword overrides win."""
        values = {f.name: config[f.name] for f in fields(cls) if f.name in config}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def inflation(self) -> float:
        return self.vehicle_radius + self.margin


@dataclass(frozen=True)
class CandidateReport:
    """Outcome of one evading candidate."""

    candidate: CandidateSpec
    status: str  # 'collision-free', 'collides' or 'failed'
    total_time: float = math.inf
    evasion: Optional[Evasion] = None
    collision: Optional[CollisionInfo] = None
    collision_obstacle: Optional[int] = None
    error: Optional[str] = None

    @property
    def trajectory(self) -> Optional[MultiAxisTrajectory]:
        return self.evasion.trajectory if self.evasion is not None else None

    @property
    def case(self) -> Optional[str]:
        return self.evasion.case if self.evasion is not None else None


@dataclass(frozen=True)
class PlanResult:

    chosen: MultiAxisTrajectory
    direct: MultiAxisTrajectory
    candidates: Tuple[CandidateReport, ...]
    diagnostics: Dict[str, float]
    collision: Optional[CollisionInfo] = None
    collision_obstacle: Optional[int] = None

    @property
    def chosen_candidate(self) -> Optional[CandidateReport]:
        for report in self.candidates:
            if report.status == 'collision-free':
                return report
        return None


def _timed_collision(trajectory, obstacles, timings: List[float]):
    t0 = time.perf_counter()
    try:
        return collides_any(trajectory, obstacles)
    finally:
        timings.append(time.perf_counter() - t0)


def _evaluate_candidate(starts, targets, limits, direct, obstacles, hit, candidate, cfg, timings) -> CandidateReport:
    obstacle_idx, collision = hit
    try:
        evasion = evade(starts, targets, limits, direct, obstacles[obstacle_idx], collision, candidate, cfg)
    except CandidateFailedError as err:
        log.info('Candidate %s failed: %s', candidate.label, err.cause)
        return CandidateReport(candidate, 'failed', error=str(err.cause))

    total = evasion.trajectory.total_duration
    try:
        other = _timed_collision(evasion.trajectory, obstacles, timings)
    except InvalidEndpointError as err:
        return CandidateReport(candidate, 'failed', total, evasion, error=str(err))
    if other is not None:
        return CandidateReport(candidate, 'collides', total, evasion, other[1], other[0])
    return CandidateReport(candidate, 'collision-free', total, evasion)


def plan(starts: Sequence[AxisState], targets: Sequence[PartialTarget], limits: Sequence[AxisLimits],
        obstacles: Sequence[Obstacle]=(), cfg: PlannerConfig=None) -> PlanResult:
    """Plans the fastest trajectory that avoids all obstacles.

    Args:
        starts, targets, limits: one entry per axis
        obstacles: obstacles with their own inflation; cfg.inflation is added on top
        cfg: planner configuration, package defaults when omitted

    Returns:
        PlanResult with the chosen trajectory and the ranked candidate report

    Raises:
        InvalidEndpointError: start or end of the direct trajectory inside an obstacle
        NoCollisionFreeCandidateError: every candidate collides or fails
    """
    cfg = cfg or PlannerConfig.from_config()
    t_start = time.perf_counter()
    inflated = [obstacle.inflated(cfg.inflation) for obstacle in obstacles]
    timings = {}

    t0 = time.perf_counter()
    direct = plan_synchronized(starts, targets, limits, parallel=cfg.parallel, workers=cfg.workers)
    timings['direct_s'] = time.perf_counter() - t0

    t0 = time.perf_counter()
    hit = collides_any(direct, inflated)
    timings['collision_s'] = time.perf_counter() - t0

    n = len(starts)
    diagnostics = dict(timings, candidates_total=0, candidates_built=0, collision_free=0, candidates_s=0.0, candidate_collision_s=0.0)
    if hit is None:
        diagnostics['total_s'] = time.perf_counter() - t_start
        return PlanResult(direct, direct, (), diagnostics)

    obstacle_idx, collision = hit
    log.info('Direct trajectory hits obstacle %d at t=%.6g s', obstacle_idx, collision.time)
    candidates = enumerate_candidates(n, collision, cfg.prune)

    t0 = time.perf_counter()
    collision_timings = []
    evaluate = lambda candidate: _evaluate_candidate(
        starts, targets, limits, direct, inflated, hit, candidate, cfg, collision_timings)
    if cfg.parallel and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(evaluate, candidates))
    else:
        reports = [evaluate(candidate) for candidate in candidates]
    reports.sort(key=lambda r: (r.total_time, r.candidate.bound_axes, r.candidate.side))

    diagnostics.update(
        candidates_total=candidate_count(n),
        candidates_built=len(candidates),
        collision_free=sum(r.status == 'collision-free' for r in reports),
        candidates_s=time.perf_counter() - t0,
        candidate_collision_s=sum(collision_timings),
        total_s=time.perf_counter() - t_start,
    )

    chosen = next((r for r in reports if r.status == 'collision-free'), None)
    if chosen is None:
        raise NoCollisionFreeCandidateError(tuple(reports))
    return PlanResult(chosen.trajectory, direct, tuple(reports), diagnostics, collision, obstacle_idx)


def replan_step(current: Sequence[AxisState], targets: Sequence[PartialTarget], limits: Sequence[AxisLimits],
        obstacles: Sequence[Obstacle]=(), cfg: PlannerConfig=None) -> PlanResult:
    """Replans from the current (possibly moving) state; same contract as plan."""
    return plan(current, targets, limits, obstacles, cfg)
