import dataclasses
import math
import numpy as np
import pytest
from conftest import at_rest, rest
from jerk_planner_python import axis_planner, evasion
from jerk_planner_python.axis_planner import Fixed, PartialTarget
from jerk_planner_python.axis_trajectory import AxisLimits, AxisState, evaluate
from jerk_planner_python.collision import CollisionInfo, Obstacle, first_collision
from jerk_planner_python.errors import DegenerateCandidateError, InvalidStateError, TradeoffError
from jerk_planner_python.evasion import CandidateSpec, TradeoffCurve
from jerk_planner_python.multi_axis import plan_synchronized
from jerk_planner_python.planner import PlannerConfig

CASES = {'zero', 'minimum', 'maximum', 'both-optimal', 'first-dominates', 'second-dominates', 'tradeoff', 'single-influence'}


def collision_with_speeds(*speeds):
    states = tuple(AxisState(0.0, v, 0.0) for v in speeds)
    return CollisionInfo(1.0, states, 0, ())


# ==========
# CANDIDATES
# ==========

class TestCandidates:

    @pytest.mark.parametrize('n_axes, count', [(2, 2), (3, 6), (4, 12)])
    def test_count_before_pruning(self, n_axes, count):
        assert evasion.candidate_count(n_axes) == count

    def test_pruning_keeps_pairs_with_fastest_axis(self):
        candidates = evasion.enumerate_candidates(3, collision_with_speeds(2.0, 0.1, -0.3))
        assert len(candidates) == 4
        assert all(0 in c.bound_axes for c in candidates)
        assert all(c.main_axis == 0 for c in candidates)
        assert sorted(c.side for c in candidates) == [-1, -1, 1, 1]

    def test_without_pruning(self):
        candidates = evasion.enumerate_candidates(3, collision_with_speeds(2.0, 0.1, -0.3), prune=False)
        assert len(candidates) == 6
        pair = [c for c in candidates if c.bound_axes == (1, 2)][0]
        assert pair.main_axis == 2

    def test_single_axis_cannot_evade(self):
        with pytest.raises(InvalidStateError):
            evasion.enumerate_candidates(1, collision_with_speeds(1.0))

    def test_label(self):
        assert CandidateSpec((0, 2), 0, 2, 1).label == '0/2+'
        assert CandidateSpec((0, 1), 1, 0, -1).label == '0/1-'

    def test_corner_position(self):
        obstacle = Obstacle.static([1.0, 0.0], [2.0, 1.0], inflation=0.5)
        assert evasion.corner_position(obstacle, 0, 1, 0.0) == pytest.approx(2.5 + evasion.CORNER_CLEARANCE)
        assert evasion.corner_position(obstacle, 1, -1, 0.0) == pytest.approx(-0.5 - evasion.CORNER_CLEARANCE)


# ========
# TRADEOFF
# ========

class TestTradeoff:

    def test_fit_through_three_points(self):
        curve = evasion.fit_tradeoff((0.0, 3.0), (1.0, 4.0), (2.0, 9.0))
        assert (curve.a, curve.b, curve.c) == pytest.approx((2.0, -1.0, 3.0))
        assert curve(3.0) == pytest.approx(18.0)

    def test_fit_rejects_shared_abscissa(self):
        with pytest.raises(TradeoffError):
            evasion.fit_tradeoff((1.0, 0.0), (1.0, 2.0), (3.0, 1.0))

    def test_intersection_inside_bracket(self):
        # y = x^2 and x = y^2 meet at (0, 0) and (1, 1)
        point = evasion.intersect_tradeoffs(TradeoffCurve(1.0, 0.0, 0.0), TradeoffCurve(1.0, 0.0, 0.0),
            ((0.5, 1.5), (0.5, 1.5)))
        assert point == pytest.approx((1.0, 1.0))

    def test_no_intersection_inside_bracket(self):
        with pytest.raises(TradeoffError):
            evasion.intersect_tradeoffs(TradeoffCurve(1.0, 0.0, 0.0), TradeoffCurve(1.0, 0.0, 0.0),
                ((2.0, 3.0), (2.0, 3.0)))

    def test_intersection_of_lines(self):
        # y = 1 and x = 2
        point = evasion.intersect_tradeoffs(TradeoffCurve(0.0, 0.0, 1.0), TradeoffCurve(0.0, 0.0, 2.0), ((0.0, 3.0), (0.0, 3.0)))
        assert point == pytest.approx((2.0, 1.0))


# ===============
# BOUND VELOCITY
# ===============

class TestBoundVelocity:

    @pytest.fixture
    def pair(self, quad_limits):
        return [rest(0.0), rest(0.0)], [rest(10.0), rest(0.0)], [quad_limits, quad_limits]

    def test_segments_reach_the_viastate(self, pair):
        starts, targets, limits = pair
        via = (5.0, 1.5)
        bound = evasion.optimal_bound_velocity(starts, targets, via, limits, away=(1, 1))
        assert bound.case in CASES
        assert bound.first_duration > 0 and bound.second_duration > 0
        for k in (0, 1):
            state = AxisState(via[k], bound.velocity[k], 0.0)
            lo, hi = limits[k].v_bounds
            assert lo - 1e-9 <= bound.velocity[k] <= hi + 1e-9
            first = axis_planner.plan(starts[k], PartialTarget.from_state(state), limits[k], Fixed(bound.first_duration))
            second = axis_planner.plan(state, PartialTarget.from_state(targets[k]), limits[k], Fixed(bound.second_duration))
            assert first.end_state.isclose(state, 1e-6)
            assert second.end_state.isclose(targets[k], 1e-6)

    def test_not_slower_than_a_velocity_grid(self, pair):
        from jerk_planner_python.oracle import grid_viastate_time_map
        starts, targets, limits = pair
        via = (5.0, 1.5)
        bound = evasion.optimal_bound_velocity(starts, targets, via, limits)
        grid = grid_viastate_time_map(starts, via, targets, limits, resolution=41)
        best = float(grid['Ttotal'].min())
        assert bound.first_duration + bound.second_duration <= best * 1.02

    def test_single_influence_when_one_axis_dominates_both_segments(self, pair):
        starts, targets, limits = pair
        # the long axis passes its viastate mid-flight in the direction of travel
        bound = evasion.optimal_bound_velocity(starts, targets, (5.0, 0.2), limits)
        assert bound.case in ('minimum', 'maximum', 'zero')
        assert bound.velocity[0] > 0

    def test_maximum_rule_when_moving_backwards(self, quad_limits):
        starts, targets = [rest(0.0), rest(0.0)], [rest(-10.0), rest(0.0)]
        bound = evasion.optimal_bound_velocity(starts, targets, (-5.0, 0.2), [quad_limits] * 2)
        assert bound.case == 'maximum'
        assert bound.velocity[0] < 0

    def test_minimum_rule_when_moving_forwards(self, pair):
        starts, targets, limits = pair
        bound = evasion.optimal_bound_velocity(starts, targets, (5.0, 0.2), limits)
        assert bound.case == 'minimum'

    def test_zero_rule_when_the_dominant_axis_turns_back(self, quad_limits):
        starts, targets = [rest(0.0), rest(0.0)], [rest(0.0), rest(0.5)]
        bound = evasion.optimal_bound_velocity(starts, targets, (5.0, 0.2), [quad_limits] * 2)
        assert bound.case == 'zero'
        assert bound.velocity[0] == 0.0

    def test_falls_back_to_single_influence_without_intersection(self, quad_limits, monkeypatch):
        segments = evasion.BoundSegments([rest(0.0), rest(0.0)], [rest(3.5), rest(3.5)], (3.0, 0.5), [quad_limits] * 2)
        real = evasion.build_tradeoff_points(segments, 0, 1)
        # force the fitted construction with distinct points
        forced = dataclasses.replace(real, case=4, p6=(real.p2[0] + 1.0, real.p6[1]), p8=(real.p8[0], real.p4[1] + 1.0),
            p9=real.p2, p10=real.p4)

        def no_intersection(*args):
            raise TradeoffError('no intersection')

        monkeypatch.setattr(evasion, 'build_tradeoff_points', lambda *args: forced)
        monkeypatch.setattr(evasion, 'intersect_tradeoffs', no_intersection)
        bound = evasion.optimal_bound_velocity(segments.starts, segments.targets, segments.via, segments.limits)
        assert bound.case == 'single-influence'
        assert bound.velocity in (real.p2, real.p4)
        assert bound.first_duration + bound.second_duration == pytest.approx(min(
            sum(segments.durations(real.p2)), sum(segments.durations(real.p4))))

    def test_degenerate_viastate(self, pair):
        starts, targets, limits = pair
        with pytest.raises(DegenerateCandidateError):
            evasion.optimal_bound_velocity(starts, targets, (0.0, 0.0), limits)


# =======
# EVASION
# =======

class TestEvade:

    @pytest.fixture
    def blocked(self, quad_limits):
        starts = [AxisState(0.0, 1.8, 0.5), rest(0.0), rest(1.0)]
        targets = [at_rest(10.0), at_rest(0.0), at_rest(1.0)]
        limits = [quad_limits] * 3
        obstacle = Obstacle.static([4.0, -1.0, -1.0], [5.0, 1.0, 1.4], inflation=0.25)
        direct = plan_synchronized(starts, targets, limits)
        return starts, targets, limits, obstacle, direct, first_collision(direct, obstacle)

    def test_direct_trajectory_is_blocked(self, blocked):
        *_, collision = blocked
        assert collision is not None
        assert collision.states[0].velocity > 1.0

    def test_over_the_top(self, blocked):
        starts, targets, limits, obstacle, direct, collision = blocked
        candidate = CandidateSpec((0, 2), 0, 2, 1)
        result = evasion.evade(starts, targets, limits, direct, obstacle, collision, candidate, PlannerConfig())
        traj = result.trajectory
        assert first_collision(traj, obstacle) is None
        assert traj.total_duration >= direct.total_duration - 1e-9
        for axis, target in zip(traj.axes, targets):
            assert axis.end_state.isclose(AxisState(target.position, 0.0, 0.0), 1e-6)
        # the viastate sits on the top face
        assert result.viastate.states[2].position == pytest.approx(1.65 + evasion.CORNER_CLEARANCE, abs=1e-6)
        assert result.case in CASES

    def test_free_axis_follows_its_own_target(self, blocked):
        starts, targets, limits, obstacle, direct, collision = blocked
        result = evasion.evade(starts, targets, limits, direct, obstacle, collision, CandidateSpec((0, 1), 0, 1, 1), PlannerConfig())
        z = result.trajectory.axes[2]
        assert z.end_state.position == pytest.approx(1.0, abs=1e-7)
        assert math.isclose(z.total_duration, result.trajectory.total_duration, rel_tol=1e-9)

    def test_build_evading_trajectory_matches_evade(self, blocked):
        starts, targets, limits, obstacle, direct, collision = blocked
        candidate = CandidateSpec((0, 2), 0, 2, 1)
        traj = evasion.build_evading_trajectory(starts, targets, limits, direct, obstacle, collision, candidate, PlannerConfig())
        result = evasion.evade(starts, targets, limits, direct, obstacle, collision, candidate, PlannerConfig())
        assert traj.total_duration == pytest.approx(result.trajectory.total_duration, abs=1e-12)


# ==============
# BOUND SEGMENTS
# ==============

class TestBoundSegments:

    @pytest.fixture
    def crossing(self, quad_limits):
        # axis 0 covers most distance before the viastate, axis 1 after it
        return evasion.BoundSegments([rest(0.0), rest(0.0)], [rest(3.5), rest(3.5)], (3.0, 0.5), [quad_limits] * 2)

    def test_free_component_interval_brackets_rest(self, quad_limits):
        segments = evasion.BoundSegments([rest(0.0), rest(0.0)], [rest(10.0), rest(0.0)], (5.0, 0.2), [quad_limits] * 2)
        up = evasion.free_component_interval(segments, 0, 2.0, 1)
        down = evasion.free_component_interval(segments, 0, 2.0, -1)
        assert down <= 0.0 <= up
        middle = AxisState(0.2, (up + down) / 2, 0.0)
        T1, T2 = segments.first_time(0, 2.0), segments.second_time(0, 2.0)
        first = axis_planner.plan(rest(0.0), PartialTarget.from_state(middle), quad_limits, Fixed(T1))
        second = axis_planner.plan(middle, at_rest(0.0), quad_limits, Fixed(T2))
        assert first.end_state.isclose(middle, 1e-6)
        assert second.total_duration == pytest.approx(T2)

    def test_tradeoff_points_structure(self, crossing):
        pts = evasion.build_tradeoff_points(crossing, 0, 1)
        assert pts.case in (1, 2, 3, 4)
        assert pts.p1[0] == pts.p2[0] == pytest.approx(crossing.free_first(0).end_state.velocity)
        assert pts.p3[1] == pts.p4[1] == pytest.approx(crossing.free_second(1).start.velocity)
        assert (pts.p9 is None) == (pts.case != 4)


# =========
# FREE AXES
# =========

class TestFreeAxes:

    BOUND = evasion.BoundVelocity((1.0, 0.0), 2.0, 3.0, 'zero')

    def test_no_free_axes(self):
        free = evasion.free_axis_viastates(self.BOUND, [], [], [])
        assert free.trajectories == ()
        assert (free.pass_time, free.total, free.dominant) == (2.0, 5.0, False)

    def test_idle_axis_keeps_bound_timing(self, quad_limits):
        free = evasion.free_axis_viastates(self.BOUND, [rest(1.0)], [at_rest(1.0)], [quad_limits])
        assert not free.dominant
        assert free.total == pytest.approx(5.0)
        assert free.states[0].isclose(rest(1.0), 1e-9)

    @pytest.mark.parametrize('position', [0.5, 1.0, 1.5, 2.0, 2.5, 3.0])
    def test_bound_dominant_duration_is_constant(self, quad_limits, position):
        free = evasion.free_axis_viastates(self.BOUND, [rest(0.0)], [at_rest(position)], [quad_limits])
        assert free.trajectories[0].total_duration == pytest.approx(5.0, abs=1e-9)
        assert free.trajectories[0].end_state.position == pytest.approx(position, abs=1e-6)
        assert free.states[0].isclose(evaluate(free.trajectories[0], 2.0), 1e-12)

    def test_free_dominant_scales_pass_time(self, quad_limits):
        free = evasion.free_axis_viastates(self.BOUND, [rest(0.0)], [at_rest(20.0)], [quad_limits])
        optimal = axis_planner.plan(rest(0.0), at_rest(20.0), quad_limits).total_duration
        assert free.dominant
        assert free.total == pytest.approx(optimal)
        assert free.pass_time == pytest.approx(optimal * 2.0 / 5.0)


# =======================
# RANDOMIZED BOUND VELOCITY
# =======================

def random_bound_problem(rng):
    """Two bound axes leaving a moving start for rest targets, with a viastate in between."""
    starts = [AxisState(0.0, rng.uniform(-1.0, 1.0), 0.0) for _ in range(2)]
    ends = [rng.uniform(2.0, 8.0), rng.uniform(-3.0, 3.0)]
    targets = [rest(p) for p in ends]
    via = (rng.uniform(0.2, 0.8) * ends[0], rng.uniform(-3.0, 3.0))
    return starts, targets, via


@pytest.mark.slow
def test_bound_velocity_against_sampling_map(quad_limits):
    from jerk_planner_python.oracle import grid_viastate_time_map
    rng = np.random.default_rng(11)
    limits = [quad_limits] * 2
    ratios = []
    for _ in range(50):
        starts, targets, via = random_bound_problem(rng)
        bound = evasion.optimal_bound_velocity(starts, targets, via, limits)
        grid = grid_viastate_time_map(starts, via, targets, limits, resolution=61)
        ratios.append((bound.first_duration + bound.second_duration) / float(grid['Ttotal'].min()))
    assert max(ratios) <= 1.05
    assert np.median(ratios) <= 1.01


@pytest.mark.slow
def test_every_case_occurs(quad_limits, monkeypatch):
    rng = np.random.default_rng(5)
    build = evasion.build_tradeoff_points
    cases, labels = [], []

    def recording(*args):
        pts = build(*args)
        cases.append(pts.case)
        return pts

    monkeypatch.setattr(evasion, 'build_tradeoff_points', recording)
    for _ in range(400):
        starts, targets, via = random_bound_problem(rng)
        # mirror half of the problems so both sign rules come up
        if rng.random() < 0.5:
            starts = [AxisState(0.0, -s.velocity, 0.0) for s in starts]
            targets = [rest(-t.position) for t in targets]
            via = (-via[0], -via[1])
        labels.append(evasion.optimal_bound_velocity(starts, targets, via, [quad_limits] * 2).case)
    assert set(cases) == {1, 2, 3, 4}
    assert {'minimum', 'maximum'} <= set(labels)
    assert set(labels) <= CASES
