import os
import sys

import numpy as np
import pytest

# Add repository root to Python path (same layout main.py relies on)
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.codes.ensemble import load_ensemble
from src.codes.graphgen import build_structured


@pytest.fixture(scope='session')
def ldpc_ensemble():
    return load_ensemble('ldpc-rate-0.1')


@pytest.fixture(scope='session')
def tldpc_ensemble():
    return load_ensemble('tldpc-rate-0.1')


@pytest.fixture(scope='session')
def structured_625(tldpc_ensemble):
    return build_structured(tldpc_ensemble, 625, seed=42)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
