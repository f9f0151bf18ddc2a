"""
Code instance construction

A CodeInstance is the bipartite graph between n variable nodes and the m
positions of a base code. Every base position has exactly one edge, so the
whole graph is the vector position_node (position -> variable node).
"""

import itertools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from src.codes import gf2
from src.codes.basecode import (
    BaseCodeSpec,
    base_from_dict,
    base_to_dict,
    component_from_dict,
    make_block_tldpc_base,
    make_ldpc_base,
    make_user_base,
    parity_check_matrix,
)
from src.codes.ensemble import (
    BaseKind,
    DegreeDistribution,
    EnsembleSpec,
    node_perspective,
    normalize_over_degree_one,
    parse_fraction,
)
from src.codes.exceptions import ConstructionError
from src.config.settings import CONSTRUCTION

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class CodeInstance:
    """Concrete sparse-graph code: base code plus the graph V -- W"""
    n: int
    base: BaseCodeSpec
    position_node: np.ndarray
    seed: Optional[int] = None
    cluster_index: Optional[np.ndarray] = None
    name: str = 'instance'

    def __post_init__(self):
        self.position_node = np.asarray(self.position_node, dtype=np.int64)
        if self.position_node.size != self.base.m:
            raise ConstructionError(f"{self.position_node.size} edges for {self.base.m} base positions")
        if self.position_node.size and (self.position_node.min() < 0 or self.position_node.max() >= self.n):
            raise ConstructionError("Edge endpoint outside the variable nodes")
        if (self.variable_degrees == 0).any():
            raise ConstructionError("Every variable node needs at least one edge")
        if self.cluster_index is not None:
            self.cluster_index = np.asarray(self.cluster_index, dtype=np.int64)

    @property
    def m(self) -> int:
        return self.base.m

    @cached_property
    def variable_degrees(self) -> np.ndarray:
        return np.bincount(self.position_node, minlength=self.n)

    @property
    def edges(self) -> List[tuple]:
        """(variable node, base position) pairs ordered by position"""
        return [(int(v), w) for w, v in enumerate(self.position_node)]

    @cached_property
    def node_positions(self) -> List[np.ndarray]:
        order = np.argsort(self.position_node, kind='stable')
        bounds = np.cumsum(np.concatenate([[0], self.variable_degrees]))
        return [order[bounds[v]:bounds[v + 1]] for v in range(self.n)]

    def degree_histogram(self) -> Dict[int, int]:
        degrees, counts = np.unique(self.variable_degrees, return_counts=True)
        return {int(d): int(c) for d, c in zip(degrees, counts)}

    def degree_one_consistent(self) -> bool:
        """Degree-1 variable nodes sit exactly on the degree-1 base positions"""
        on_degree_one = self.variable_degrees[self.position_node] == 1
        return bool(np.array_equal(on_degree_one, self.base.degree_one_mask))

    @property
    def nominal_rate(self) -> float:
        """1 - (number of base constraints) / n, the rate before rank deficiencies"""
        return 1.0 - (self.base.m - self.base.dimension) / self.n


@dataclass(frozen=True)
class ClusterArrangement:
    """Decomposition of the cluster graph into stars, twigs, chains and isolated clusters"""
    M: int
    a: tuple
    stars: int
    twigs: int
    chains: int
    isolated: int
    chain_lengths: List[int] = field(default_factory=list)

    @property
    def cluster_counts(self) -> List[int]:
        return [int(f * self.M) for f in self.a]

    @property
    def total_edges(self) -> int:
        return 12 * self.stars + 5 * self.twigs + sum(k + 1 for k in self.chain_lengths)

    @property
    def consumption(self) -> Dict[str, Dict[str, int]]:
        """Clusters of each degree consumed by each component type"""
        return {
            'stars': {'degree1': 8 * self.stars, 'degree3': 4 * self.stars, 'degree4': self.stars},
            'twigs': {'degree1': 4 * self.twigs, 'degree3': 2 * self.twigs},
            'chains': {'degree1': 2 * self.chains, 'degree2': sum(self.chain_lengths)},
        }


def expected_cluster_fractions(tilde_lambda_2, cluster_size: int) -> List[Fraction]:
    """Binomial fractions of clusters with i degree-2 edges, i = 0..cluster_size"""
    lam = parse_fraction(tilde_lambda_2)
    if not 0 <= lam <= 1 or cluster_size < 1:
        raise ConstructionError(f"Invalid cluster parameters: lambda2={lam}, size={cluster_size}")
    return [comb(cluster_size, i) * lam ** i * (1 - lam) ** (cluster_size - i)
            for i in range(cluster_size + 1)]


def plan_arrangement(M: int, a: Sequence) -> ClusterArrangement:
    """Stars, twigs and chains realizing the cluster-degree fractions a (cluster size 4)"""
    a = tuple(parse_fraction(f) for f in a)
    if len(a) != 5:
        raise ConstructionError(f"Arrangement needs five fractions a0..a4, got {len(a)}")
    if sum(a) != 1:
        raise ConstructionError(f"Cluster fractions sum to {float(sum(a))}, expected 1")
    scaled = [f * M for f in a]
    if any(s.denominator != 1 for s in scaled):
        raise ConstructionError(f"M={M} does not make every a_i*M an integer")
    n0, n1, n2, n3, n4 = (int(s) for s in scaled)

    twig_clusters = n3 - 4 * n4
    endpoints = n1 - 2 * n3
    if twig_clusters < 0 or endpoints < 0:
        raise ConstructionError(f"Negative arrangement entry: a3-4a4={twig_clusters}, a1-2a3={endpoints}")
    if twig_clusters % 2 or endpoints % 2:
        raise ConstructionError("Twig clusters and chain endpoints must both be even")
    chains = endpoints // 2
    if chains == 0 and n2 > 0:
        raise ConstructionError(f"{n2} degree-2 clusters but no chain to hold them")

    base_len, extra = divmod(n2, chains) if chains else (0, 0)
    lengths = [base_len + 1] * extra + [base_len] * (chains - extra)
    plan = ClusterArrangement(M=M, a=a, stars=n4, twigs=twig_clusters // 2, chains=chains,
                              isolated=n0, chain_lengths=lengths)
    logger.debug(f"Arrangement for M={M}: {plan.stars} stars, {plan.twigs} twigs, "
                 f"{plan.chains} chains, {plan.isolated} isolated, {plan.total_edges} edges")
    return plan


def _largest_remainder(targets: Dict[int, float], total: int) -> Dict[int, int]:
    counts = {d: int(np.floor(t)) for d, t in targets.items()}
    order = sorted(targets, key=lambda d: (-(targets[d] - counts[d]), d))
    for d in order[:max(0, total - sum(counts.values()))]:
        counts[d] += 1
    return counts


def round_exact_edges(targets: Dict[int, float], num_edges: int, min_degree: int = 2) -> Dict[int, int]:
    """Integer node counts near targets with sum(d * count) == num_edges exactly

    Tries every floor/ceil combination first; otherwise repairs largest-remainder
    counts by moving nodes of the most populous degree.
    """
    degrees = sorted(d for d, t in targets.items() if t > 0)
    if not degrees:
        if num_edges == 0:
            return {}
        raise ConstructionError(f"No degrees available for {num_edges} edges")

    best = None
    if len(degrees) <= 16:
        options = [sorted({int(np.floor(targets[d])), int(np.ceil(targets[d]))}) for d in degrees]
        for combo in itertools.product(*options):
            if sum(d * c for d, c in zip(degrees, combo)) != num_edges:
                continue
            cost = sum(abs(c - targets[d]) for d, c in zip(degrees, combo))
            if best is None or cost < best[0] - 1e-12:
                best = (cost, combo)
    if best is not None:
        return {d: c for d, c in zip(degrees, best[1]) if c > 0}

    counts = _largest_remainder({d: targets[d] for d in degrees},
                                int(np.floor(sum(targets[d] for d in degrees) + 0.5)))
    delta = num_edges - sum(d * c for d, c in counts.items())
    logger.warning(f"No floor/ceil rounding hits {num_edges} edges; repairing by {delta}")
    while delta != 0:
        movable = [d for d in counts if counts[d] > 0 and max(min_degree, d + delta) != d]
        if not movable:
            raise ConstructionError(f"Cannot realize {num_edges} edges with degrees >= {min_degree}")
        populous = max(movable, key=lambda d: (counts[d], d))
        new = max(min_degree, populous + delta)
        counts[populous] -= 1
        counts[new] = counts.get(new, 0) + 1
        delta -= new - populous
    return {d: c for d, c in sorted(counts.items()) if c > 0}


def _match_sockets(socket_nodes: np.ndarray, positions: np.ndarray, component_of: np.ndarray,
                   rng: np.random.Generator) -> Optional[np.ndarray]:
    """Random socket -> position matching with no node twice in one component

    Returns the matched positions, or None once the resampling rounds run out.
    """
    targets = rng.permutation(positions)
    if targets.size == 0:
        return targets
    num_components = int(component_of.max()) + 1
    retries = CONSTRUCTION['collision_retries']
    for attempt in range(retries + 1):
        key = socket_nodes * num_components + component_of[targets]
        order = np.argsort(key, kind='stable')
        repeated = order[1:][key[order][1:] == key[order][:-1]]
        if repeated.size == 0:
            return targets
        if attempt == retries:
            break
        partners = rng.integers(0, targets.size, size=repeated.size)
        for s, t in zip(repeated, partners):
            targets[s], targets[t] = targets[t], targets[s]
    return None


def _sockets(first_node: int, counts: Dict[int, int]) -> np.ndarray:
    degrees = [d for d, c in sorted(counts.items()) for _ in range(c)]
    return np.repeat(np.arange(first_node, first_node + len(degrees)), degrees)


def _with_restarts(build, seed: Optional[int], label: str):
    base_seed = 0 if seed is None else int(seed)
    for restart in range(CONSTRUCTION['max_restarts']):
        result = build(np.random.default_rng(base_seed + restart))
        if result is not None:
            if restart:
                logger.warning(f"{label}: collisions resolved after {restart} restart(s)")
            return result
        logger.warning(f"{label}: collision resampling exhausted, restarting with seed {base_seed + restart + 1}")
    raise ConstructionError(f"{label}: no collision-free matching after {CONSTRUCTION['max_restarts']} restarts")


def _higher_degree_targets(tilde: Dict[int, Fraction], num_positions: int, min_degree: int) -> Dict[int, float]:
    mass = sum((v for d, v in tilde.items() if d >= min_degree), Fraction(0))
    if mass == 0:
        return {}
    return {d: float(num_positions * (v / mass) / d) for d, v in tilde.items() if d >= min_degree}


def build_structured(spec: EnsembleSpec, M: int, seed: Optional[int] = None) -> CodeInstance:
    """Block-TLDPC instance whose cluster graph is the planned forest of stars, twigs and chains

    Args:
        spec: block-tldpc ensemble; only its tilde_lambda shapes the graph
        M: number of six-bit blocks (clusters)
        seed: restart seed; the same seed always yields the same instance

    Returns:
        CodeInstance carrying the cluster index of every base position
    """
    if spec.base_kind != BaseKind.BLOCK_TLDPC:
        raise ConstructionError(f"Structured construction needs a block-tldpc base, got {spec.base_kind.value}")
    cluster_size = CONSTRUCTION['cluster_size']
    tilde = normalize_over_degree_one(spec.distribution).tilde_lambda
    plan = plan_arrangement(M, expected_cluster_fractions(tilde.get(2, 0), cluster_size))
    base = make_block_tldpc_base(M)
    if spec.distribution.lambda_1 != base.degree_one_fraction:
        logger.warning(f"Ensemble lambda_1={spec.distribution.lambda_1} differs from the base's "
                       f"degree-1 fraction {base.degree_one_fraction}; the base wins")

    # degree>1 slots, one row per block; a G-edge takes one slot in each of its blocks
    high = np.nonzero(~base.degree_one_mask)[0].reshape(M, cluster_size)
    low = np.nonzero(base.degree_one_mask)[0]
    remaining = cluster_size * M - 2 * plan.total_edges
    counts = round_exact_edges(_higher_degree_targets(tilde, remaining, 3), remaining, min_degree=3)

    def build(rng: np.random.Generator) -> Optional[CodeInstance]:
        n1, n2, n3, n4 = plan.cluster_counts[1:]
        pools = np.split(rng.permutation(M), np.cumsum([plan.isolated, n1, n2, n3]))
        leaves, interiors, branches, centers = (list(p) for p in pools[1:])

        # G-edges of the forest: stars, then twigs, then chains
        g_edges = []
        for center in centers:
            for _ in range(4):
                branch = branches.pop()
                g_edges.append((center, branch))
                g_edges.extend((branch, leaves.pop()) for _ in range(2))
        for _ in range(plan.twigs):
            left, right = branches.pop(), branches.pop()
            g_edges.append((left, right))
            for end in (left, right):
                g_edges.extend((end, leaves.pop()) for _ in range(2))
        for length in plan.chain_lengths:
            path = [leaves.pop()] + [interiors.pop() for _ in range(length)] + [leaves.pop()]
            g_edges.extend(zip(path[:-1], path[1:]))

        # one degree-2 node per G-edge, on a free slot at each end
        free = {c: list(rng.permutation(high[c])) for c in range(M)}
        position_node = np.full(base.m, -1, dtype=np.int64)
        position_node[low] = np.arange(low.size)
        node = low.size
        for ci, cj in g_edges:
            position_node[free[ci].pop()] = node
            position_node[free[cj].pop()] = node
            node += 1

        # leftover slots go to degree>=3 nodes
        rest = np.concatenate([np.asarray(p, dtype=np.int64) for p in free.values()])
        sockets = _sockets(node, counts)
        matched = _match_sockets(sockets, np.sort(rest), base.component_of, rng)
        if matched is None:
            return None
        position_node[matched] = sockets
        cluster_index = np.where(base.degree_one_mask, -1, base.component_of)
        return CodeInstance(n=int(sockets.max(initial=node - 1)) + 1, base=base,
                            position_node=position_node, seed=seed, cluster_index=cluster_index,
                            name=f"{spec.name}-M{M}")

    instance = _with_restarts(build, seed, f"structured M={M}")
    logger.info(f"Structured instance: n={instance.n}, m={instance.m}, "
                f"G-edges={plan.total_edges}, degrees={instance.degree_histogram()}")
    return instance


def build_random_ldpc(distribution: DegreeDistribution, rho: Dict, n: int,
                      seed: Optional[int] = None) -> CodeInstance:
    """Configuration-model LDPC instance with n variable nodes"""
    if distribution.lambda_1 > 0:
        raise ConstructionError("LDPC instances cannot carry degree-1 variable nodes")
    if n < 1:
        raise ConstructionError(f"n must be positive, got {n}")
    fractions = node_perspective(distribution)
    counts = _largest_remainder({d: float(f * n) for d, f in fractions.items()}, n)
    counts = {d: c for d, c in counts.items() if c > 0}
    num_edges = sum(d * c for d, c in counts.items())
    base = make_ldpc_base(rho, num_edges=num_edges)
    sockets = _sockets(0, counts)

    def build(rng: np.random.Generator) -> Optional[CodeInstance]:
        matched = _match_sockets(sockets, np.arange(base.m), base.component_of, rng)
        if matched is None:
            return None
        position_node = np.empty(base.m, dtype=np.int64)
        position_node[matched] = sockets
        return CodeInstance(n=n, base=base, position_node=position_node, seed=seed,
                            cluster_index=base.component_of.copy(), name=f"ldpc-n{n}")

    instance = _with_restarts(build, seed, f"LDPC n={n}")
    logger.info(f"Random LDPC instance: n={n}, edges={num_edges}, checks={base.num_components}")
    return instance


def build_random_instance(spec: EnsembleSpec, num_blocks: int, seed: Optional[int] = None) -> CodeInstance:
    """Unstructured instance over a block base: every degree->1 edge drawn at random"""
    if spec.base_kind == BaseKind.BLOCK_TLDPC:
        base = make_block_tldpc_base(num_blocks)
    elif spec.base_kind == BaseKind.USER_DEFINED:
        code, degree_one = component_from_dict(spec.component)
        base = make_user_base(code, degree_one, num_blocks)
    else:
        raise ConstructionError("Use build_random_ldpc for LDPC ensembles")

    tilde = normalize_over_degree_one(spec.distribution).tilde_lambda
    high = np.nonzero(~base.degree_one_mask)[0]
    low = np.nonzero(base.degree_one_mask)[0]
    counts = round_exact_edges(_higher_degree_targets(tilde, high.size, 2), high.size)
    sockets = _sockets(low.size, counts)

    def build(rng: np.random.Generator) -> Optional[CodeInstance]:
        matched = _match_sockets(sockets, high, base.component_of, rng)
        if matched is None:
            return None
        position_node = np.empty(base.m, dtype=np.int64)
        position_node[low] = np.arange(low.size)
        position_node[matched] = sockets
        cluster_index = None
        if base.kind == BaseKind.BLOCK_TLDPC:
            cluster_index = np.where(base.degree_one_mask, -1, base.component_of)
        return CodeInstance(n=low.size + len(set(sockets.tolist())), base=base,
                            position_node=position_node, seed=seed, cluster_index=cluster_index,
                            name=f"{spec.name}-B{num_blocks}")

    return _with_restarts(build, seed, f"random block instance B={num_blocks}")


def identity_instance(base: BaseCodeSpec) -> CodeInstance:
    """One degree-1 variable node per base position"""
    cluster_index = base.component_of.copy() if base.kind == BaseKind.LDPC else None
    return CodeInstance(n=base.m, base=base, position_node=np.arange(base.m), cluster_index=cluster_index,
                        name='identity')


def extract_parity_matrix(instance: CodeInstance) -> sp.csr_matrix:
    """Parity-check matrix over the n variable nodes (rows: component dual bases)"""
    base_checks = parity_check_matrix(instance.base).astype(np.int64)
    incidence = sp.csr_matrix(
        (np.ones(instance.m, dtype=np.int64), (np.arange(instance.m), instance.position_node)),
        shape=(instance.m, instance.n))
    H = (base_checks @ incidence).tocsr()
    H.data %= 2
    H.eliminate_zeros()
    return H.astype(np.uint8)


def realized_rate(instance: CodeInstance) -> float:
    """1 - rank(H)/n"""
    return 1.0 - gf2.rank(extract_parity_matrix(instance)) / instance.n


def instance_to_dict(instance: CodeInstance) -> Dict:
    return {
        'name': instance.name,
        'n': instance.n,
        'seed': instance.seed,
        'base': base_to_dict(instance.base),
        'edges': [[v, w] for v, w in instance.edges],
        'variable_degrees': instance.variable_degrees.tolist(),
        'cluster_index': None if instance.cluster_index is None else instance.cluster_index.tolist(),
    }


def instance_from_dict(data: Dict) -> CodeInstance:
    base = base_from_dict(data['base'])
    position_node = np.full(base.m, -1, dtype=np.int64)
    for v, w in data['edges']:
        position_node[w] = v
    if (position_node < 0).any():
        raise ConstructionError("Instance file leaves base positions without an edge")
    cluster_index = data.get('cluster_index')
    return CodeInstance(n=int(data['n']), base=base, position_node=position_node, seed=data.get('seed'),
                        cluster_index=None if cluster_index is None else np.asarray(cluster_index),
                        name=data.get('name', 'instance'))


def save_instance(instance: CodeInstance, path: str) -> None:
    with open(path, 'w') as f:
        json.dump(instance_to_dict(instance), f)
    logger.info(f"Saved instance {instance.name} (n={instance.n}) to {path}")


def load_instance(path: str) -> CodeInstance:
    with open(path, 'r') as f:
        instance = instance_from_dict(json.load(f))
    logger.info(f"Loaded instance {instance.name} (n={instance.n}, m={instance.m}) from {path}")
    return instance


def save_parity_alist(instance: CodeInstance, path: str) -> None:
    gf2.write_alist(extract_parity_matrix(instance), path)
    logger.info(f"Wrote parity-check matrix of {instance.name} to {path}")
