"""Scenario documents and result files.

A scenario is a JSON document (format in docs/scenario_format.md, structure
checked against scenario.schema.json). Free
target fields are written as null or "NaN", unbounded limits as null or
"Inf"/"-Inf"; bare NaN/Infinity literals are rejected.
"""

import json
import jsonschema
import logging
import math
import os
import tempfile
import pandas as pd
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple
from ..axis_planner import PartialTarget
from ..axis_trajectory import AxisLimits, AxisState
from ..collision import BoundPath, BoundPiece, Obstacle
from ..errors import PlannerError, ScenarioError

log = logging.getLogger(__name__)

_FREE_TOKENS = ('NaN', 'nan')
_UNBOUNDED_TOKENS = ('Inf', '-Inf', 'inf', '-inf')
SCHEMA_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'scenario.schema.json')


@dataclass(frozen=True)
class SimulationSettings:

    period: float = 0.1
    duration: float = 60.0
    seed: int = 0
    reveal_time: float = 0.0
    disturbance: float = 0.0


@dataclass(frozen=True)
class Scenario:
    """Planning problem read from a scenario document."""

    axes: Tuple[str, ...]
    starts: Tuple[AxisState, ...]
    targets: Tuple[PartialTarget, ...]
    limits: Tuple[AxisLimits, ...]
    obstacles: Tuple[Obstacle, ...] = ()
    reveal_times: Tuple[Optional[float], ...] = ()
    vehicle_radius: Optional[float] = None
    margin: Optional[float] = None
    simulation: SimulationSettings = field(default_factory=SimulationSettings)

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    def reveal_time(self, idx: int) -> float:
        """Simulation time at which obstacle idx becomes known."""
        override = self.reveal_times[idx] if idx < len(self.reveal_times) else None
        return self.simulation.reveal_time if override is None else override


# =======
# PARSING
# =======

@lru_cache(maxsize=None)
def _schema() -> Dict:
    with open(SCHEMA_PATH) as f:
        return json.load(f)


def validate_document(doc) -> None:
    """Checks the structure of a decoded scenario document against the JSON Schema."""
    try:
        jsonschema.validate(instance=doc, schema=_schema())
    except jsonschema.ValidationError as err:
        where = ''.join('[{}]'.format(x) if isinstance(x, int) else '.{}'.format(x) for x in err.absolute_path)
        raise ScenarioError('scenario{}: {}'.format(where, err.message)) from err


def _reject_constant(name: str):
    raise ScenarioError('Bare {} is not allowed; quote it as a token'.format(name))


def _number(value, where: str, free_tokens=(), allow_none: bool=False) -> Optional[float]:
    if value is None and allow_none:
        return None
    if isinstance(value, str) and value in free_tokens:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError('{}: expected a number, got {!r}'.format(where, value))
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError('{}: non-finite value {!r}'.format(where, value))
    return value


def _require(doc: Dict, key: str, where: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ScenarioError('{}: missing field "{}"'.format(where, key))
    return doc[key]


def _per_axis(doc: Dict, key: str, n: int) -> List:
    items = _require(doc, key, 'scenario')
    if not isinstance(items, list) or len(items) != n:
        raise ScenarioError('scenario.{}: expected a list with one entry per axis ({})'.format(key, n))
    return items


def _parse_limits(item, where: str) -> AxisLimits:
    bounds = []
    for name in ('velocity', 'acceleration', 'jerk'):
        pair = item.get(name) if isinstance(item, dict) else None
        if pair is None:
            bounds += [None, None]
            continue
        if not isinstance(pair, list) or len(pair) != 2:
            raise ScenarioError('{}.{}: expected [min, max]'.format(where, name))
        bounds += [_number(x, '{}.{}'.format(where, name), _UNBOUNDED_TOKENS, allow_none=True) for x in pair]
    return AxisLimits(*bounds)


def _parse_path(item, where: str) -> BoundPath:
    """A face path: a bare number (static) or a list of [start, duration, p, v, a, j] pieces."""
    if isinstance(item, (int, float)) and not isinstance(item, bool):
        return BoundPath.static(_number(item, where))
    if not isinstance(item, list) or not item:
        raise ScenarioError('{}: expected a number or a list of pieces'.format(where))
    pieces = []
    for idx, raw in enumerate(item):
        label = '{}[{}]'.format(where, idx)
        if not isinstance(raw, list) or len(raw) != 6:
            raise ScenarioError('{}: expected [start, duration, position, velocity, acceleration, jerk]'.format(label))
        start = _number(raw[0], label)
        duration = _number(raw[1], label, _UNBOUNDED_TOKENS, allow_none=True)
        p, v, a, j = [_number(x, label) for x in raw[2:]]
        if pieces and abs(pieces[-1][1] - start) > 1e-9:
            raise ScenarioError('{}: piece does not start where the previous one ends'.format(label))
        end = math.inf if duration is None else start + duration
        pieces.append((BoundPiece(start, p, v, a, j), end))
    return BoundPath(tuple(piece for piece, _ in pieces))


def parse_scenario(doc: Dict) -> Scenario:
    """Validates a decoded scenario document and converts it to library types."""
    validate_document(doc)
    names = _require(doc, 'axes', 'scenario')
    if not isinstance(names, list) or not names or not all(isinstance(x, str) for x in names):
        raise ScenarioError('scenario.axes: expected a non-empty list of axis names')
    n = len(names)

    try:
        starts = tuple(
            AxisState(*[_number(_require(item, name, 'scenario.start[{}]'.format(i)), 'scenario.start[{}].{}'.format(i, name))
                for name in ('position', 'velocity', 'acceleration')])
            for i, item in enumerate(_per_axis(doc, 'start', n)))
        targets = tuple(
            PartialTarget(*[_number(item.get(name) if isinstance(item, dict) else None, 'scenario.target[{}].{}'.format(i, name),
                _FREE_TOKENS, allow_none=True) for name in ('position', 'velocity', 'acceleration')])
            for i, item in enumerate(_per_axis(doc, 'target', n)))
        limits = tuple(_parse_limits(item, 'scenario.limits[{}]'.format(i)) for i, item in enumerate(_per_axis(doc, 'limits', n)))

        obstacles, reveal_times = [], []
        for i, item in enumerate(doc.get('obstacles', [])):
            where = 'scenario.obstacles[{}]'.format(i)
            lower, upper = _require(item, 'lower', where), _require(item, 'upper', where)
            if not isinstance(lower, list) or not isinstance(upper, list) or len(lower) != n or len(upper) != n:
                raise ScenarioError('{}: lower and upper need one entry per axis'.format(where))
            obstacles.append(Obstacle(
                tuple(_parse_path(x, '{}.lower[{}]'.format(where, k)) for k, x in enumerate(lower)),
                tuple(_parse_path(x, '{}.upper[{}]'.format(where, k)) for k, x in enumerate(upper)),
                _number(item.get('margin', 0.0), where + '.margin')))
            reveal_times.append(_number(item.get('reveal_time'), where + '.reveal_time', allow_none=True))

        sim = doc.get('simulation', {})
        if not isinstance(sim, dict):
            raise ScenarioError('scenario.simulation: expected an object')
        defaults = SimulationSettings()
        simulation = SimulationSettings(
            period=_number(sim.get('period', defaults.period), 'scenario.simulation.period'),
            duration=_number(sim.get('duration', defaults.duration), 'scenario.simulation.duration'),
            seed=int(_number(sim.get('seed', defaults.seed), 'scenario.simulation.seed')),
            reveal_time=_number(sim.get('reveal_time', defaults.reveal_time), 'scenario.simulation.reveal_time'),
            disturbance=_number(sim.get('disturbance', defaults.disturbance), 'scenario.simulation.disturbance'),
        )
    except ScenarioError:
        raise
    except PlannerError as err:
        # value-level checks of the library types
        raise ScenarioError(str(err)) from err

    if simulation.disturbance < 0:
        raise ScenarioError('scenario.simulation.disturbance must be >= 0')
    return Scenario(
        axes=tuple(names), starts=starts, targets=targets, limits=limits,
        obstacles=tuple(obstacles), reveal_times=tuple(reveal_times),
        vehicle_radius=_number(doc.get('vehicle_radius'), 'scenario.vehicle_radius', allow_none=True),
        margin=_number(doc.get('margin'), 'scenario.margin', allow_none=True),
        simulation=simulation,
    )


def load_scenario(path: str) -> Scenario:
    with open(path) as f:
        try:
            doc = json.load(f, parse_constant=_reject_constant)
        except json.JSONDecodeError as err:
            raise ScenarioError('{}: {}'.format(path, err)) from err
    log.debug('Loaded scenario %s', path)
    return parse_scenario(doc)


# =======
# WRITING
# =======

def write_atomic(path: str, text: str):
    """Writes text to a temporary file next to path, then renames it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.' + os.path.basename(path) + '.')
    try:
        with os.fdopen(fd, 'w') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_csv_atomic(path: str, frame: pd.DataFrame):
    write_atomic(path, frame.to_csv(index=False, float_format='%.17g', lineterminator='\n'))


def format_summary(values: Dict) -> str:
    """Key/value lines in insertion order; floats at full precision."""
    lines = []
    for key, value in values.items():
        if isinstance(value, float):
            value = repr(value)
        lines.append('{}={}'.format(key, value))
    return '\n'.join(lines) + '\n'
