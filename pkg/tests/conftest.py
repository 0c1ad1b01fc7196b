import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dsisd import (BPSK, Position2D, SceneModel, Wavelength, make_frame, make_ula,
                   star_with_fusion, synthesize)
from dsisd.harness import load_config
from dsisd.harness.config import default_config_path

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def small_instance(n_base=2, m=3, k_tx=2, k_rx=3, t=6, graph=None, snr_db=math.inf, seed=0,
                   data_seed=1):
    """Tiny random geometry for solver unit tests."""
    lam = Wavelength(0.125)
    gen = np.random.default_rng(seed)
    tx = make_ula(k_tx, 0.0625, Position2D(-1.0, 0.2), 80.0)
    rx = [make_ula(k_rx, 0.0625, Position2D(-1.5 * math.cos(a), -1.5 * math.sin(a)), 90 + 40 * i)
          for i, a in enumerate(gen.uniform(-1, 1, n_base))]
    pts = gen.uniform(-0.4, 0.4, (m, 2))
    scene = SceneModel(tuple(Position2D(*p) for p in pts),
                       np.exp(2j * np.pi * gen.uniform(size=m)))
    frame = make_frame(BPSK, k_tx, t, seed=data_seed)
    g = star_with_fusion(n_base) if graph is None else graph
    return synthesize(tx, rx, scene, lam, frame, snr_db, seed, g)


@pytest.fixture(scope="session")
def star3_cfg():
    return load_config(default_config_path())
