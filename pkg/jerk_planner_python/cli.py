"""Command-line front end.

    jerk-planner plan        --scenario s.json --out results/
    jerk-planner simulate    --scenario s.json --out results/
    jerk-planner fuzz        --count 1000 --seed 7 [--case 12]
    jerk-planner bench       --scenario s.json --iterations 200
    jerk-planner sample-map  --scenario s.json --resolution 100 --out results/

Exit codes: 0 success, 2 scenario or usage error, 3 planning infeasible,
4 I/O error.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
import numpy as np
import pandas as pd
import progressbar
from typing import Dict, List, Optional, Sequence
from . import axis_planner, config, oracle, planner
from .axis_planner import Fixed, Objective, PartialTarget, TIME_OPTIMAL
from .axis_trajectory import AxisLimits, AxisState, AxisTrajectory, sample, within_limits
from .collision import clearance
from .errors import InfeasibleDurationError, PlannerError, ScenarioError
from .multi_axis import MultiAxisTrajectory, evaluate_all
from .utilities import scenarios

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

LOG_FORMAT = '[%(levelname)s] [%(name)s: %(funcName)s] %(message)s'


class _Parser(argparse.ArgumentParser):

    def error(self, message):
        raise ScenarioError(message)


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value not in ('1', '0', 'true', 'false', 'yes', 'no', 'on', 'off'):
        raise argparse.ArgumentTypeError('expected a boolean, got {!r}'.format(text))
    return value in ('1', 'true', 'yes', 'on')


# =======
# OUTPUTS
# =======

def trace_frame(traj: AxisTrajectory, dt: float) -> pd.DataFrame:
    """Samples one axis every dt seconds, always including the end time."""
    total = traj.total_duration
    times = np.arange(0.0, total, dt) if total > 0 else np.zeros(0)
    # no sample closer than dt/2 to the appended end time
    times = np.append(times[times <= total - dt / 2], total)
    rows = sample(traj, times)
    return pd.DataFrame({'t': times, 'p': rows[:, 0], 'v': rows[:, 1], 'a': rows[:, 2], 'j': rows[:, 3]})


def _trajectory_document(traj: MultiAxisTrajectory, axes: Sequence[str]) -> Dict:
    return {
        'total_duration': traj.total_duration,
        'axes': [{
            'name': name,
            'start': list(axis.start.as_tuple()),
            'phases': [[ph.duration, ph.jerk] for ph in axis.phases],
        } for name, axis in zip(axes, traj.axes)],
    }


def plan_document(result: planner.PlanResult, axes: Sequence[str]) -> Dict:
    collision = None
    if result.collision is not None:
        collision = {'time': result.collision.time, 'obstacle': result.collision_obstacle,
            'entering_axis': result.collision.entering_axis}
    return {
        'chosen': _trajectory_document(result.chosen, axes),
        'direct': _trajectory_document(result.direct, axes),
        'collision': collision,
        'candidates': [{
            'label': report.candidate.label,
            'bound_axes': list(report.candidate.bound_axes),
            'side': report.candidate.side,
            'status': report.status,
            'total_time': report.total_time if math.isfinite(report.total_time) else None,
            'case': report.case,
            'error': report.error,
        } for report in result.candidates],
    }


def plan_summary(result: planner.PlanResult) -> Dict:
    """Stable key/value summary; keys starting with timing. are wall-clock measurements."""
    summary = {
        'status': 'direct' if result.collision is None else 'evaded',
        'total_time': result.chosen.total_duration,
        'direct_time': result.direct.total_duration,
        'collision_time': result.collision.time if result.collision is not None else 'none',
        'collision_obstacle': result.collision_obstacle if result.collision_obstacle is not None else 'none',
        'candidates_total': int(result.diagnostics['candidates_total']),
        'candidates_built': int(result.diagnostics['candidates_built']),
        'candidates_collision_free': int(result.diagnostics['collision_free']),
    }
    for idx, report in enumerate(result.candidates):
        prefix = 'candidate.{}.'.format(idx)
        summary[prefix + 'label'] = report.candidate.label
        summary[prefix + 'status'] = report.status
        summary[prefix + 'total_time'] = report.total_time if math.isfinite(report.total_time) else 'none'
        summary[prefix + 'case'] = report.case or 'none'
    for key in ('direct_s', 'collision_s', 'candidates_s', 'candidate_collision_s', 'total_s'):
        summary['timing.' + key] = float(result.diagnostics.get(key, 0.0))
    return summary


def _planner_config(scenario: scenarios.Scenario, args) -> planner.PlannerConfig:
    return planner.PlannerConfig.from_config(
        vehicle_radius=scenario.vehicle_radius, margin=scenario.margin, parallel=getattr(args, 'parallel', None))


def _out_dir(args) -> str:
    out = args.out or '.'
    os.makedirs(out, exist_ok=True)
    return out


# ====
# PLAN
# ====

def cmd_plan(args) -> int:
    scenario = scenarios.load_scenario(args.scenario)
    cfg = _planner_config(scenario, args)
    result = planner.plan(scenario.starts, scenario.targets, scenario.limits, scenario.obstacles, cfg)

    out = _out_dir(args)
    summary = plan_summary(result)
    scenarios.write_atomic(os.path.join(out, 'plan.json'), json.dumps(plan_document(result, scenario.axes), indent=2) + '\n')
    scenarios.write_atomic(os.path.join(out, 'summary.txt'), scenarios.format_summary(summary))
    for name, axis in zip(scenario.axes, result.chosen.axes):
        scenarios.write_csv_atomic(os.path.join(out, 'trace_{}.csv'.format(name)), trace_frame(axis, args.trace_dt))
    print(scenarios.format_summary(summary), end='')
    return EXIT_OK


# ==========
# SIMULATION
# ==========

def simulate(scenario: scenarios.Scenario, cfg: planner.PlannerConfig, trace_dt: float, display_progress: bool=False):
    """Closed-loop flight: execute each plan for one control period, then replan.

    Obstacles join the planning problem at their reveal time. A failed
    replan keeps the previous plan. The vehicle is an ideal triple
    integrator, optionally disturbed by Gaussian noise on position and
    velocity after each period.

    Returns:
        (flight trace DataFrame, replan durations in seconds, summary dict)
    """
    sim = scenario.simulation
    if not sim.period > 0:
        raise ScenarioError('simulation.period must be positive')
    if not trace_dt > 0:
        raise ScenarioError('--trace-dt must be positive')

    rng = np.random.default_rng(sim.seed)
    physical = [obstacle.inflated(cfg.vehicle_radius) for obstacle in scenario.obstacles]
    steps = int(math.ceil(sim.duration / sim.period))
    state = list(scenario.starts)
    current, elapsed = None, 0.0
    rows, timings, failures = [], [], 0

    if display_progress:
        bar = progressbar.ProgressBar(max_value=steps)
        bar.update(0)

    t = 0.0
    for step in range(steps):
        visible = [obstacle.shifted(t) for idx, obstacle in enumerate(scenario.obstacles)
            if scenario.reveal_time(idx) <= t + 1e-12]
        t0 = time.perf_counter()
        try:
            current = planner.replan_step(state, scenario.targets, scenario.limits, visible, cfg).chosen
            elapsed = 0.0
        except PlannerError as err:
            failures += 1
            log.warning('Replanning failed at t=%.3f s: %s', t, err)
            if current is None:
                raise
        timings.append(time.perf_counter() - t0)

        horizon = current.total_duration
        for tau in np.arange(0.0, sim.period, trace_dt):
            local = min(elapsed + tau, horizon)
            states = evaluate_all(current, local)
            positions = [s.position for s in states]
            row = {'t': t + tau}
            for name, s, axis in zip(scenario.axes, states, current.axes):
                row.update({name + '_p': s.position, name + '_v': s.velocity, name + '_a': s.acceleration,
                    name + '_j': axis.jerk_at(local) if local < horizon else 0.0})
            row['clearance'] = min((clearance(positions, ob, t + tau) for ob in physical), default=math.inf)
            rows.append(row)

        elapsed += sim.period
        state = evaluate_all(current, min(elapsed, horizon))
        if sim.disturbance > 0:
            state = [AxisState(s.position + rng.normal(0.0, sim.disturbance), s.velocity + rng.normal(0.0, sim.disturbance),
                s.acceleration) for s in state]
        t += sim.period
        if display_progress:
            bar.update(1 + step)
        if elapsed >= horizon and sim.disturbance == 0:
            break

    flight = pd.DataFrame(rows)
    errors = [abs(s.position - target.position) for s, target in zip(state, scenario.targets) if target.position is not None]
    summary = {
        'steps': len(timings),
        'replan_failures': failures,
        'flight_time': t,
        'final_position_error': max(errors, default=0.0),
        'min_clearance': float(flight['clearance'].min()) if len(flight) else math.inf,
    }
    return flight, timings, summary


def replan_histogram(timings: Sequence[float], bins: int=20) -> pd.DataFrame:
    counts, edges = np.histogram(np.asarray(timings) * 1e3, bins=bins)
    return pd.DataFrame({'bin_lo_ms': edges[:-1], 'bin_hi_ms': edges[1:], 'count': counts})


def cmd_simulate(args) -> int:
    scenario = scenarios.load_scenario(args.scenario)
    cfg = _planner_config(scenario, args)
    flight, timings, summary = simulate(scenario, cfg, args.trace_dt, display_progress=args.progress)

    out = _out_dir(args)
    scenarios.write_csv_atomic(os.path.join(out, 'flight.csv'), flight)
    scenarios.write_csv_atomic(os.path.join(out, 'replan_histogram.csv'), replan_histogram(timings))
    scenarios.write_atomic(os.path.join(out, 'simulation.txt'), scenarios.format_summary(summary))
    print(scenarios.format_summary(summary), end='')
    return EXIT_OK


# ====
# FUZZ
# ====

def _random_bounds(rng, low: float, high: float, bounded: float=0.7):
    """Asymmetric (min, max) pair; each side is unbounded with probability 1 - bounded."""
    lo = -float(rng.uniform(low, high)) if rng.random() < bounded else None
    hi = float(rng.uniform(low, high)) if rng.random() < bounded else None
    return lo, hi


def random_problem(rng: np.random.Generator):
    """Random start inside its limits, random target pattern, random duration mode."""
    limits = AxisLimits(
        *_random_bounds(rng, 0.5, 5.0),
        *_random_bounds(rng, 0.5, 5.0),
        *_random_bounds(rng, 0.5, 10.0, bounded=1.0),
    )
    finite = lambda lo, hi: (max(lo, -3.0), min(hi, 3.0))

    a0 = float(rng.uniform(*finite(*limits.a_bounds)))
    v_lo, v_hi = finite(*axis_planner.velocity_bounds_for(a0, limits))
    if v_lo > v_hi:
        a0 = 0.0
        v_lo, v_hi = finite(*limits.v_bounds)
    start = AxisState(float(rng.uniform(-5.0, 5.0)), float(rng.uniform(v_lo, v_hi)), a0)

    defined = [False, False, False]
    while not any(defined):
        defined = [bool(x) for x in rng.random(3) < 0.6]
    vf = float(rng.uniform(*finite(*limits.v_bounds)))
    af = float(rng.uniform(*finite(*limits.a_bounds)))
    target = axis_planner.clamp_target(PartialTarget(
        float(rng.uniform(-10.0, 10.0)) if defined[0] else None,
        vf if defined[1] else None,
        af if defined[2] else None), limits)

    fixed = rng.random() < 0.5
    stretch = float(rng.uniform(1.0, 2.0))
    objective = [None, Objective.MAXIMIZE, Objective.MINIMIZE][int(rng.integers(3))]
    return start, target, limits, fixed, stretch, objective


def check_trajectory(traj: AxisTrajectory, target: PartialTarget, limits: AxisLimits, total: Optional[float]=None) -> Optional[str]:
    """Problem description, or None for a sound trajectory."""
    if not all(math.isfinite(ph.duration) and math.isfinite(ph.jerk) for ph in traj.phases):
        return 'non-finite phase'
    end = traj.end_state
    for name, value in zip(axis_planner.FIELDS, end.as_tuple()):
        goal = getattr(target, name)
        if goal is not None and abs(value - goal) > 1e-6 * max(1.0, abs(goal)):
            return '{} ends at {!r} instead of {!r}'.format(name, value, goal)
    if not within_limits(traj, limits, 1e-9):
        return 'limits violated'
    if total is not None and abs(traj.total_duration - total) > 1e-9 * max(1.0, total):
        return 'duration {!r} instead of {!r}'.format(traj.total_duration, total)
    if target.velocity is None or target.acceleration is None:
        lo, hi = axis_planner.velocity_bounds_for(end.acceleration, limits)
        if not lo - 1e-6 <= end.velocity <= hi + 1e-6:
            return 'free end state ({!r}, {!r}) cannot brake inside the velocity limits'.format(end.velocity, end.acceleration)
    return None


def fuzz_case(seed: int, case: int) -> Dict:
    rng = np.random.default_rng([seed, case])
    start, target, limits, fixed, stretch, objective = random_problem(rng)
    row = {'case': case, 'seed': seed, 'mode': 'time-optimal', 'status': 'ok', 'duration': math.nan, 'message': ''}
    optimal, total = math.nan, None
    try:
        traj = axis_planner.plan(start, target, limits, TIME_OPTIMAL)
        optimal = traj.total_duration
        if fixed:
            total = traj.total_duration * stretch if traj.total_duration > 0 else stretch
            row['mode'] = 'fixed-{}'.format(objective.value if objective else 'none')
            traj = axis_planner.plan(start, target, limits, Fixed(total, objective))
        row['duration'] = traj.total_duration
        problem = check_trajectory(traj, target, limits, total)
        if problem:
            row.update(status='failed', message=problem)
    except InfeasibleDurationError as err:
        # only a duration below the time-optimal one may be rejected
        status = 'failed' if total is not None and total >= optimal - 1e-9 else 'infeasible-duration'
        row.update(status=status, message='{}: {}'.format(type(err).__name__, err))
    except Exception as err:
        row.update(status='failed', message='{}: {}'.format(type(err).__name__, err))
    return row


def run_fuzz(count: int, seed: int, cases: Optional[Sequence[int]]=None, display_progress: bool=False) -> pd.DataFrame:
    cases = list(range(count)) if cases is None else list(cases)
    if display_progress:
        bar = progressbar.ProgressBar(max_value=len(cases))
        bar.update(0)
    rows = []
    for idx, case in enumerate(cases):
        rows.append(fuzz_case(seed, case))
        if display_progress:
            bar.update(1 + idx)
    return pd.DataFrame(rows, columns=['case', 'seed', 'mode', 'status', 'duration', 'message'])


def cmd_fuzz(args) -> int:
    if args.count < 1:
        raise ScenarioError('--count must be at least 1')
    report = run_fuzz(args.count, args.seed, None if args.case is None else [args.case], display_progress=args.progress)
    failed = report[report['status'] == 'failed']
    if args.out:
        scenarios.write_csv_atomic(os.path.join(_out_dir(args), 'fuzz_report.csv'), report)
    for _, row in failed.iterrows():
        print('Case {} failed (replay with --seed {} --case {}): {}'.format(row['case'], row['seed'], row['case'], row['message']))
    print('cases={}\nfailed={}\ninfeasible_duration={}'.format(
        len(report), len(failed), int((report['status'] == 'infeasible-duration').sum())))
    return EXIT_INFEASIBLE if len(failed) else EXIT_OK


# =====
# BENCH
# =====

def _latencies(scenario: scenarios.Scenario, cfg: planner.PlannerConfig, iterations: int):
    totals, shares = [], []
    for _ in range(iterations):
        t0 = time.perf_counter()
        result = planner.plan(scenario.starts, scenario.targets, scenario.limits, scenario.obstacles, cfg)
        total = time.perf_counter() - t0
        diag = result.diagnostics
        totals.append(total)
        shares.append((diag['collision_s'] + diag['candidate_collision_s']) / total if total > 0 else 0.0)
    ms = np.asarray(totals) * 1e3
    return {
        'p50_ms': float(np.percentile(ms, 50)),
        'p95_ms': float(np.percentile(ms, 95)),
        'max_ms': float(ms.max()),
        'collision_share': float(np.median(shares)),
    }


def cmd_bench(args) -> int:
    if args.iterations < 1:
        raise ScenarioError('--iterations must be at least 1')
    scenario = scenarios.load_scenario(args.scenario)
    summary = {}
    for mode, parallel in (('serial', False), ('parallel', True)):
        cfg = planner.PlannerConfig.from_config(vehicle_radius=scenario.vehicle_radius, margin=scenario.margin, parallel=parallel)
        for key, value in _latencies(scenario, cfg, args.iterations).items():
            summary['{}.{}'.format(mode, key)] = value
    text = scenarios.format_summary(summary)
    if args.out:
        scenarios.write_atomic(os.path.join(_out_dir(args), 'bench.txt'), text)
    print(text, end='')
    return EXIT_OK


# ==========
# SAMPLE MAP
# ==========

def cmd_sample_map(args) -> int:
    if args.resolution < 2:
        raise ScenarioError('--resolution must be at least 2')
    scenario = scenarios.load_scenario(args.scenario)
    cfg = _planner_config(scenario, args)
    result = planner.plan(scenario.starts, scenario.targets, scenario.limits, scenario.obstacles, cfg)
    report = result.chosen_candidate
    if report is None:
        raise ScenarioError('Scenario has no collision, nothing to map')

    pair = report.candidate.bound_axes
    via = [report.evasion.viastate.states[k].position for k in pair]
    frame = oracle.grid_viastate_time_map(
        [scenario.starts[k] for k in pair], via, [result.direct.axes[k].end_state for k in pair],
        [scenario.limits[k] for k in pair], args.resolution, display_progress=args.progress)
    path = os.path.join(_out_dir(args), 'sample_map.csv')
    scenarios.write_csv_atomic(path, frame)
    print('rows={}\nbound_axes={}\nmin_total={!r}'.format(len(frame), ','.join(scenario.axes[k] for k in pair),
        float(frame['Ttotal'].min())))
    return EXIT_OK


# ====
# MAIN
# ====

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='jerk-planner', description='Jerk-limited time-optimal trajectory planning with obstacle evasion.')
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)
    commands.required = True

    def add(name, func, help_text, scenario=True):
        sub = commands.add_parser(name, help=help_text)
        if scenario:
            sub.add_argument('--scenario', required=True, help='scenario JSON file')
        sub.add_argument('--out', default=None, help='output directory')
        sub.add_argument('--progress', action='store_true', help='display a progress bar')
        sub.set_defaults(func=func)
        return sub

    sub = add('plan', cmd_plan, 'plan once and write traces')
    sub.add_argument('--parallel', type=_bool, default=None)
    sub.add_argument('--trace-dt', type=float, default=config['trace_dt'])

    sub = add('simulate', cmd_simulate, 'closed-loop simulation with replanning')
    sub.add_argument('--parallel', type=_bool, default=None)
    sub.add_argument('--trace-dt', type=float, default=config['trace_dt'])

    sub = add('fuzz', cmd_fuzz, 'randomized single-axis planning checks', scenario=False)
    sub.add_argument('--count', type=int, default=1000)
    sub.add_argument('--seed', type=int, default=0)
    sub.add_argument('--case', type=int, default=None, help='replay a single case')

    sub = add('bench', cmd_bench, 'pipeline latency')
    sub.add_argument('--iterations', type=int, default=100)

    sub = add('sample-map', cmd_sample_map, 'viastate velocity sampling map')
    sub.add_argument('--parallel', type=_bool, default=None)
    sub.add_argument('--resolution', type=int, default=100)
    return parser


def main(argv: Optional[List[str]]=None) -> int:
    logging.basicConfig(level=config['log_level'], format=LOG_FORMAT)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ScenarioError as err:
        print('error: {}'.format(err), file=sys.stderr)
        return EXIT_USAGE
    except PlannerError as err:
        print('infeasible: {}'.format(err), file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as err:
        print('I/O error: {}'.format(err), file=sys.stderr)
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
