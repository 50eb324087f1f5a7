import glob
from os.path import dirname, basename, isfile, join
from dotenv import dotenv_values, find_dotenv

# package defaults, overridable from a .env file
config = {
    'vehicle_radius': 0.5,
    'margin': 0.1,
    'prune': True,
    'parallel': False,
    'workers': 4,
    'corner_iterations': 5,
    'corner_tolerance': 1e-4,
    'trace_dt': 0.01,
    'log_level': 'WARNING',
}

planner_env = {'PLANNER_' + name.upper(): name for name in config.keys()}
planner_env['LOG_LEVEL'] = 'log_level'

try:
    env_values = dotenv_values(find_dotenv(usecwd=True))
except Exception:
    env_values = {}


def _coerce(value: str, default):
    """Casts an environment string to the type of the default value."""
    if isinstance(default, bool):
        return value.strip().lower() in ('1', 'true', 'yes', 'on')
    return type(default)(value)


for env_name, config_name in planner_env.items():
    if env_values.get(env_name) is not None:
        config[config_name] = _coerce(env_values[env_name], config[config_name])

# update list of all modules
modules = glob.glob(join(dirname(__file__), "*.py"))
__all__ = [basename(f)[:-3] for f in modules \
    if isfile(f) and not f.endswith('__init__.py')]
