from pathlib import Path
from setuptools import setup

lib_dir = Path(__file__).resolve().parent

with open(lib_dir / 'VERSION.txt', "r") as f:
    VERSION = f.readline().strip()

SHORT_DESC = 'Simulator and optimizers for a cooperative cellular Internet of UAVs'
LONG_DESC = \
    '''
    This package simulates a single-cell cellular network of sensing UAVs
    that upload their sensory data either directly to the base station (U2N)
    or through a neighbouring UAV acting as a relay (U2U). It provides the
    slotted sense-and-send protocol, air-to-ground and air-to-air channel
    models, trajectory planning and speed control, and radio resource
    management (branch-and-bound subchannel allocation, DC power control).

    Supports Python >= 3.7.

    Somethings this package does well:
        - Seeded, byte-reproducible slot-level simulation
        - Exact subchannel allocation on small instances
        - Brute-force reference solvers for checking the optimizers
        - Comparison of cooperative, non-cooperative and separate schemes

    Somethings this package does not do well:
        - Multi-cell networks, massive MIMO or mmWave channels
    '''

# Package requirements: Parse from `requirements.txt`.
with open(lib_dir / 'requirements.txt', "r") as f:
    REQUIREMENTS = f.read().splitlines()

# Subpackages
PACKAGES = [
    'coopuav',
    'coopuav.cli',
    'coopuav.pylab'
]

setup(
    name='coopuav',
    version=VERSION,
    description=SHORT_DESC,
    long_description=LONG_DESC,
    python_requires='>=3.7.3',
    license='GNU',
    packages=PACKAGES,
    zip_safe=False,
    install_requires=REQUIREMENTS,
    extras_require={'test': ['pytest']},
    include_package_data=True,
    entry_points={
        'console_scripts': [
            'coopuav=coopuav.cli:main'
        ]
    }
)
