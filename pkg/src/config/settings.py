"""
FEC Laboratory Configuration Settings
"""

import os
import logging

import yaml

# Base code construction and exact component computations
BASECODE = {
    'max_component_length': 24,            # bits per component code
    'max_erasure_enumeration_length': 16,  # 2^L erasure patterns per component
    'max_enumeration_dim': 24,             # enumerate_codewords hard limit
    'llr_saturation': 38.0                 # natural-log LLR clip before exponentiation
}

# Instance construction
CONSTRUCTION = {
    'collision_retries': 100,  # resampling rounds for parallel-edge collisions
    'max_restarts': 32,        # seed+1 restarts after retries are exhausted
    'cluster_size': 4          # degree->1 positions per block-TLDPC cluster
}

# Graph of codewords of partial weight 2
WT2GRAPH = {
    'enumeration_budget_log2': 20  # generic cluster discovery: max component dimension
}

# EXIT charts, density evolution and degree optimization
EXIT_ANALYSIS = {
    'samples': 512,               # uniform grid points per curve
    'threshold_tolerance': 1e-4,  # bisection width on p
    'de_max_iterations': 100000,
    'de_convergence': 1e-10,      # erasure fraction counted as converged
    'de_stagnation': 1e-15,       # per-step decrease below this means a fixed point
    'lp_margin': 1e-4,            # relative safety margin on grid constraints
    'lp_retightening_rounds': 8
}

# Iterative decoder
DECODER = {
    'max_iterations': 200,
    'stop_on_valid': True,
    'llr_clip': 38.0,
    'erasure_tolerance': 1e-6   # |a-posteriori LLR| below this counts as erased
}

# Monte Carlo harness
SIMULATION = {
    'min_frame_errors': 100,
    'max_frames': 1000000,
    'batch_frames': 64,  # frames per work unit, fixed so results ignore worker count
    'threads': int(os.environ.get('FECLAB_THREADS', os.cpu_count() or 1)),
    'max_encoder_length': 10000
}

# Channel capacity numerics
CAPACITY = {
    'hermite_nodes': 128,
    'search_range_db': (-3.0, 10.0),
    'tolerance_db': 0.001
}

# Application logging
LOGGING = {
    'log_dir': 'logs',
    'file_prefix': 'feclab_',
    'max_bytes': 10 * 1024 * 1024,  # 10MB
    'backup_count': 5,
    'retention_days': 30
}

# Output locations
OUTPUT = {
    'runs_dir': 'runs'
}

# Reference ensembles of the rate-1/10 design study
REFERENCE_ENSEMBLES = {
    'ldpc-rate-0.1': {
        'lambda': {'2': '0.486', '3': '0.165', '4': '0.037', '5': '0.15', '11': '0.132', '12': '0.03'},
        'base': {'kind': 'ldpc', 'rho': {'2': '1/10', '3': '1/2', '4': '2/5'}},
        'reference_threshold': 0.8933
    },
    'tldpc-rate-0.1': {
        'lambda_1': '1/3',
        'tilde_lambda': {'2': '0.4', '3': '0.264209', '5': '0.090866', '9': '0.236716', '10': '0.008209'},
        'base': {'kind': 'block-tldpc'},
        'reference_threshold': 0.896
    }
}

_SECTIONS = {
    'BASECODE': BASECODE,
    'CONSTRUCTION': CONSTRUCTION,
    'WT2GRAPH': WT2GRAPH,
    'EXIT_ANALYSIS': EXIT_ANALYSIS,
    'DECODER': DECODER,
    'SIMULATION': SIMULATION,
    'CAPACITY': CAPACITY,
    'LOGGING': LOGGING,
    'OUTPUT': OUTPUT
}


def load_overrides(path: str) -> dict:
    """Merge a YAML override file into the settings dictionaries

    The file maps section names (case-insensitive) to partial dictionaries:

        DECODER:
          max_iterations: 400
        simulation:
          batch_frames: 128

    Args:
        path: YAML file path

    Returns:
        Dictionary of the sections that were updated
    """
    logger = logging.getLogger(__name__)
    with open(path, 'r') as f:
        data = yaml.safe_load(f) or {}

    applied = {}
    for name, values in data.items():
        section = _SECTIONS.get(str(name).upper())
        if section is None or not isinstance(values, dict):
            logger.warning(f"Ignoring unknown settings section: {name}")
            continue
        section.update(values)
        applied[str(name).upper()] = dict(values)
        logger.info(f"Applied {len(values)} override(s) to {str(name).upper()} from {path}")

    if 'FECLAB_THREADS' in os.environ:
        SIMULATION['threads'] = int(os.environ['FECLAB_THREADS'])
    return applied
