import os
import pytest
from jerk_planner_python.axis_planner import PartialTarget
from jerk_planner_python.axis_trajectory import AxisLimits, AxisState

SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')


def rest(position: float=0.0) -> AxisState:
    return AxisState(position, 0.0, 0.0)


def at_rest(position: float) -> PartialTarget:
    return PartialTarget(position, 0.0, 0.0)


@pytest.fixture
def jerk_only():
    """Jerk bounded by 1, velocity and acceleration unbounded."""
    return AxisLimits(jerk_min=-1.0, jerk_max=1.0)


@pytest.fixture
def unit_box():
    """Velocity 2, acceleration 1 and jerk 1, symmetric."""
    return AxisLimits.symmetric(velocity=2.0, acceleration=1.0, jerk=1.0)


@pytest.fixture
def quad_limits():
    return AxisLimits.symmetric(velocity=3.0, acceleration=2.0, jerk=4.0)


@pytest.fixture
def scenario_path():
    return lambda name: os.path.join(SCENARIO_DIR, name)
