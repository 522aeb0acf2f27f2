import numpy as np
import pytest

from rydkerr.blockade import BlockadeMode
from rydkerr.config import default_config

# The series Rydberg energy, dielectric constant, LT splitting, coherence
# radius and linewidth scale are free inputs; these values give a cleanly
# resolved series up to n = 14 with realistic optical densities.
BASE = dict(rydberg_energy=0.092, epsilon_b=7.5, delta_lt=2e-6,
            coherence_radius=0.5, gamma0=0.010)

# Saturation scale chosen so I_sat(5) = 100 mW/mm^2 under the n^-7 law.
ISAT_SCALE = 100.0 * (5 - 0.34) ** 7


@pytest.fixture(scope="session")
def cfg():
    return default_config(**BASE)


@pytest.fixture(scope="session")
def sat_mode():
    return BlockadeMode.saturable(isat_scale=ISAT_SCALE)


@pytest.fixture(scope="session")
def single_line_cfg():
    """One isolated resonance with unit oscillator strength (r0 = 0, n = 2)."""
    return default_config(rydberg_energy=4 * (2.1721 - 2.17), epsilon_b=7.5,
                          delta_lt=1e-3, coherence_radius=0.0,
                          quantum_defect=0.0, n_min=2, n_max=2,
                          base_linewidths={2: 1e-4}, extra_broadening=0.0)


def write_config(path, blockade=None, **overrides):
    """Write a BASE-derived config JSON for CLI tests."""
    import json

    data = dict(BASE)
    data.update(dict(gap_energy=2.1721, quantum_defect=0.34, bohr_radius=1.1,
                     extra_broadening=21e-6, n_min=2, n_max=14,
                     chi3_0=0.6e-11, coupling_a=4.53, coupling_b=3.41,
                     gamma_exp=1.8, beta_exp=1.62, crystal_length=50.0,
                     vacuum_impedance=376.73))
    data.update(overrides)
    if blockade is not None:
        data["blockade"] = blockade
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
    return path
