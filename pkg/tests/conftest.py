"""Pytest configuration and fixtures for the sucs tests."""

import json
import shutil
import sys
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from sucs.services.algebra import RepresentationSpec, build_generators


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    temp_path = Path(tempfile.mkdtemp())
    yield temp_path
    shutil.rmtree(temp_path)


@pytest.fixture
def rng():
    """Seeded generator so every random case is reproducible."""
    return np.random.default_rng(20240611)


@pytest.fixture
def su2():
    return RepresentationSpec(n=2)


@pytest.fixture
def su3():
    return RepresentationSpec(n=3)


@pytest.fixture
def gen2(su2):
    return build_generators(su2)


@pytest.fixture
def gen3(su3):
    return build_generators(su3)


@pytest.fixture
def precession_run():
    """Spin-1/2 in a unit field along z, started on the equator."""
    return {
        "initial": {"n": 2, "psi_re": [1.0], "psi_im": [0.0]},
        "hamiltonian": {"terms": [{"coeff": 1.0, "ops": ["Sz"]}]},
        "t_span": [0.0, 6.283185307179586],
    }


@pytest.fixture
def sample_hamiltonian_file(temp_dir):
    """Hamiltonian JSON with a quadratic term."""
    data = {"terms": [{"coeff": 1.0, "ops": ["Sx"]}, {"coeff": 0.3, "ops": ["Sz", "Sz"]}]}
    path = temp_dir / "hamiltonian.json"
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def sample_chain_model():
    """Two-site spin-1 chain with bilinear and biquadratic exchange."""
    return {"sites": 2, "n": 3, "bilinear": 1.0, "biquadratic": 0.5, "boundary": "open"}


@pytest.fixture
def sample_config_file(temp_dir):
    """Config file shaped like the project's config.json."""
    data = {
        "mcp_server": {"name": "sucs"},
        "docker": {"image": "sucs:latest"},
        "defaults": {"log_level": "WARNING", "seed": 7, "tolerance": 1e-9},
    }
    path = temp_dir / "config.json"
    path.write_text(json.dumps(data))
    return path
