import sys
from pathlib import Path

import pytest

from spherefdn.acoustics import SphereSpec, sphere_mode_series
from spherefdn.allpass import design_targets, fit_loop

sys.path.insert(0, str(Path(__file__).parent))

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
FS = 44100.0


@pytest.fixture(scope="session")
def configs_dir():
    return CONFIGS


@pytest.fixture(scope="session")
def sphere188():
    return SphereSpec(0.188, 23.0, max_order=4, roots_per_order=8)


@pytest.fixture(scope="session")
def sphere188_designs(sphere188):
    """Orders 0-4, three pole pairs, default radius."""
    return [fit_loop(design_targets(s, FS, 4000.0, 4), 3) for s in sphere_mode_series(sphere188)]
