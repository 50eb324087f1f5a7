#!/usr/bin/env python
from setuptools import setup, find_packages
from os import path
import sys

min_py_version = (3, 8)

if sys.version_info < min_py_version:
    sys.exit('jerk-planner is only supported for Python {}.{} or higher'.format(*min_py_version))

here = path.abspath(path.dirname(__file__))

with open(path.join(here, 'requirements.txt')) as f:
    requirements = f.read().split()

setup(
    name='jerk-planner',
    version='0.1.0',
    description='Jerk-limited time-optimal trajectory planning with obstacle evasion',
    packages=find_packages(exclude=['tests']),
    package_data={'jerk_planner_python.utilities': ['scenario.schema.json']},
    install_requires=requirements,
    extras_require={'test': ['pytest', 'hypothesis']},
    entry_points={'console_scripts': ['jerk-planner = jerk_planner_python.cli:main']},
    python_requires='>={}.{}'.format(*min_py_version)
)
