"""
Graph of codewords of partial weight 2

Clusters are sets of degree->1 base positions linked pairwise by base codewords
whose support outside the degree-1 positions is exactly two positions. Degree-2
variable nodes joining two clusters are the edges. Cycles of this graph induce
low-weight codewords of the sparse-graph code, which bounds its minimum distance.
"""

import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from networkx.utils import UnionFind

from src.codes.basecode import ComponentCode
from src.codes.ensemble import BaseKind
from src.codes.exceptions import (
    EnumerationBudgetError,
    NodeWeightError,
    StructuralError,
)
from src.codes.graphgen import CodeInstance, extract_parity_matrix
from src.config.settings import WT2GRAPH

logger = logging.getLogger(__name__)

PairTable = Dict[Tuple[int, int], Tuple[int, Tuple[int, ...]]]


@lru_cache(maxsize=None)
def pair_table(code: ComponentCode, degree_one: Tuple[int, ...]) -> PairTable:
    """Minimal degree-1 completion of every degree->1 pair of one component

    Returns:
        {(i, j): (node weight, local degree-1 positions of the completion)}, i < j
    """
    high = [i for i in range(code.length) if i not in degree_one]
    if code.single_parity and not degree_one:
        return {(i, j): (0, ()) for i in high for j in high if i < j}
    if code.dimension > WT2GRAPH['enumeration_budget_log2']:
        raise EnumerationBudgetError(
            f"{code.name}: 2^{code.dimension} codewords exceed the cluster-discovery budget")

    words = code.codewords.astype(bool)
    high_support = words[:, high]
    high_weight = high_support.sum(axis=1)
    if (high_weight == 1).any():
        raise StructuralError(f"{code.name} has codewords of partial weight 1")

    low = np.asarray(degree_one, dtype=np.int64)
    table: PairTable = {}
    for word in words[high_weight == 2]:
        i, j = np.nonzero(word[high])[0]
        key = (high[i], high[j])
        completion = tuple(int(p) for p in low[word[low]]) if low.size else ()
        if key not in table or len(completion) < table[key][0]:
            table[key] = (len(completion), completion)
    return table


@dataclass(frozen=True)
class GEdge:
    """Degree-2 variable node joining two clusters"""
    u: int
    v: int
    pos_u: int
    pos_v: int
    node: int


@dataclass(frozen=True)
class CycleInfo:
    girth: int
    edges: Tuple[int, ...]
    visits: Tuple[Tuple[int, int, int], ...]  # (cluster, entry position, exit position)
    weight: int


@dataclass(eq=False)
class ClusterGraph:
    """Clusters as vertices, degree-2 variable nodes as edges"""
    instance: CodeInstance
    clusters: List[np.ndarray]
    cluster_of: np.ndarray
    edges: List[GEdge]
    node_weight: Dict[Tuple[int, int, int], int]
    node_weight_bound: int

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    def pair_entry(self, a: int, b: int) -> Tuple[int, np.ndarray]:
        """Node weight and global degree-1 completion for base positions a, b of one cluster"""
        base = self.instance.base
        comp = int(base.component_of[a])
        if comp != int(base.component_of[b]):
            raise NodeWeightError(f"Positions {a} and {b} lie in different components")
        code, positions = base.components[comp]
        degree_one = tuple(int(i) for i in np.nonzero(base.degree_one_mask[positions])[0])
        i, j = sorted((int(base.local_index[a]), int(base.local_index[b])))
        entry = pair_table(code, degree_one).get((i, j))
        if entry is None:
            raise NodeWeightError(f"No partial-weight-2 codeword on positions {a}, {b}")
        weight, completion = entry
        return weight, positions[list(completion)]

    def weight(self, cluster: int, a: int, b: int) -> int:
        key = (cluster, min(a, b), max(a, b))
        if key not in self.node_weight:
            self.node_weight[key] = self.pair_entry(a, b)[0]
        return self.node_weight[key]

    def adjacency(self) -> List[List[Tuple[int, int]]]:
        adj: List[List[Tuple[int, int]]] = [[] for _ in self.clusters]
        for e, edge in enumerate(self.edges):
            adj[edge.u].append((edge.v, e))
            adj[edge.v].append((edge.u, e))
        return adj

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        for c, positions in enumerate(self.clusters):
            graph.add_node(c, size=int(positions.size))
        for e, edge in enumerate(self.edges):
            graph.add_edge(edge.u, edge.v, key=e, node=edge.node, positions=(edge.pos_u, edge.pos_v))
        return graph


def _generic_clusters(instance: CodeInstance) -> List[np.ndarray]:
    base = instance.base
    found = []
    for group in base.groups:
        table = pair_table(group.code, group.degree_one)
        union = UnionFind()
        for i, j in table:
            union.union(i, j)
        local_sets = [sorted(s) for s in union.to_sets()]
        for positions in group.positions:
            found.extend(positions[s] for s in local_sets)
    return sorted(found, key=lambda c: int(c.min()))


def find_clusters(instance: CodeInstance, method: str = 'auto') -> List[np.ndarray]:
    """Cluster position sets of an instance's base code

    Args:
        instance: code instance
        method: 'auto' uses the closed forms of the known base kinds,
            'generic' always enumerates partial-weight-2 codewords
    """
    base = instance.base
    if method == 'auto' and base.kind == BaseKind.LDPC:
        return [positions.copy() for _, positions in base.components]
    if method == 'auto' and base.kind == BaseKind.BLOCK_TLDPC:
        return [positions[~base.degree_one_mask[positions]] for _, positions in base.components]
    return _generic_clusters(instance)


def build_graph2(instance: CodeInstance, clusters: Optional[List[np.ndarray]] = None) -> ClusterGraph:
    """Graph of codewords of partial weight 2 of an instance

    Vertices are clusters; every degree-2 variable node is one edge between the
    clusters of its two base positions.

    Args:
        instance: code instance
        clusters: precomputed cluster position sets (find_clusters by default)

    Returns:
        ClusterGraph with the pair weights of every edge end already tabulated
    """
    clusters = find_clusters(instance) if clusters is None else clusters
    cluster_of = np.full(instance.m, -1, dtype=np.int64)
    for c, positions in enumerate(clusters):
        cluster_of[positions] = c

    edges = []
    for node in np.nonzero(instance.variable_degrees == 2)[0]:
        a, b = (int(p) for p in instance.node_positions[node])
        u, v = int(cluster_of[a]), int(cluster_of[b])
        if u < 0 or v < 0:
            raise StructuralError(f"Degree-2 node {node} touches a position outside every cluster")
        if u == v:
            raise StructuralError(f"Degree-2 node {node} joins cluster {u} to itself")
        edges.append(GEdge(u, v, a, b, int(node)))

    # heaviest degree-1 completion any single cluster visit can cost
    bound = 0
    for group in instance.base.groups:
        table = pair_table(group.code, group.degree_one)
        bound = max([bound] + [w for w, _ in table.values()])

    graph = ClusterGraph(instance, clusters, cluster_of, edges, {}, bound)
    # fill the pair-weight cache for every pair of edges meeting at a cluster
    at_cluster: Dict[int, List[int]] = {}
    for edge in edges:
        at_cluster.setdefault(edge.u, []).append(edge.pos_u)
        at_cluster.setdefault(edge.v, []).append(edge.pos_v)
    for c, positions in at_cluster.items():
        for i, a in enumerate(positions):
            for b in positions[i + 1:]:
                graph.weight(c, a, b)
    logger.info(f"Cluster graph: {len(clusters)} clusters, {len(edges)} edges, node-weight bound {bound}")
    return graph


def average_degree(G: ClusterGraph) -> float:
    """2|E| / |V~|"""
    if G.num_clusters == 0:
        raise StructuralError("Cluster graph has no clusters")
    return 2.0 * len(G.edges) / G.num_clusters


def is_forest(G: ClusterGraph) -> bool:
    """Forest test counting parallel edges as cycles"""
    graph = G.to_networkx()
    return graph.number_of_edges() == graph.number_of_nodes() - nx.number_connected_components(graph)


def _two_core(G: ClusterGraph) -> np.ndarray:
    """Clusters that can lie on a cycle"""
    degree = np.zeros(G.num_clusters, dtype=np.int64)
    for edge in G.edges:
        degree[edge.u] += 1
        degree[edge.v] += 1
    adj = G.adjacency()
    alive = np.ones(G.num_clusters, dtype=bool)
    stack = [c for c in range(G.num_clusters) if degree[c] <= 1]
    while stack:
        c = stack.pop()
        if not alive[c]:
            continue
        alive[c] = False
        for other, _ in adj[c]:
            if alive[other]:
                degree[other] -= 1
                if degree[other] <= 1:
                    stack.append(other)
    return alive


def girth(G: ClusterGraph) -> Optional[int]:
    """Shortest cycle length by BFS from every cluster of the 2-core; None for forests"""
    alive = _two_core(G)
    adj = G.adjacency()
    best = math.inf
    for root in np.nonzero(alive)[0]:
        dist = {int(root): 0}
        via = {int(root): -1}
        queue = deque([int(root)])
        while queue:
            u = queue.popleft()
            if 2 * dist[u] >= best:
                break
            for v, e in adj[u]:
                if e == via[u] or not alive[v]:
                    continue
                if v not in dist:
                    dist[v] = dist[u] + 1
                    via[v] = e
                    queue.append(v)
                else:
                    best = min(best, dist[u] + dist[v] + 1)
    return None if best == math.inf else int(best)


def _visit_weight(G: ClusterGraph, edges: List[int], clusters: List[int]) -> Tuple[int, tuple]:
    """Cycle weight and visits for edges[k] leaving clusters[k] toward clusters[k+1]"""
    visits = []
    total = len(edges)
    for k, c in enumerate(clusters):
        entry = G.edges[edges[k - 1]]
        leave = G.edges[edges[k]]
        a = entry.pos_u if entry.u == c else entry.pos_v
        b = leave.pos_u if leave.u == c else leave.pos_v
        total += G.weight(c, a, b)
        visits.append((c, a, b))
    return total, tuple(visits)


def min_weight_cycle(G: ClusterGraph) -> Optional[CycleInfo]:
    """Minimum-weight cycle among those of girth length; None on forests"""
    g = girth(G)
    if g is None:
        return None

    best: Optional[CycleInfo] = None
    if g == 2:
        parallel: Dict[Tuple[int, int], List[int]] = {}
        for e, edge in enumerate(G.edges):
            parallel.setdefault((min(edge.u, edge.v), max(edge.u, edge.v)), []).append(e)
        for (u, v), group in parallel.items():
            for i, e1 in enumerate(group):
                for e2 in group[i + 1:]:
                    weight, visits = _visit_weight(G, [e2, e1], [u, v])
                    if best is None or weight < best.weight:
                        best = CycleInfo(2, (e1, e2), visits, weight)
        return best

    # g > 2 so no parallel edges survive into the simple graph
    simple = nx.Graph()
    alive = _two_core(G)
    for e, edge in enumerate(G.edges):
        if alive[edge.u] and alive[edge.v]:
            simple.add_edge(edge.u, edge.v, id=e)
    for cycle in nx.simple_cycles(simple, length_bound=g):
        if len(cycle) != g:
            continue
        edges = [simple.edges[cycle[k], cycle[(k + 1) % g]]['id'] for k in range(g)]
        weight, visits = _visit_weight(G, edges, cycle)
        if best is None or weight < best.weight:
            best = CycleInfo(g, tuple(edges), visits, weight)
    return best


def cycle_to_codeword(G: ClusterGraph, cycle: CycleInfo, instance: Optional[CodeInstance] = None) -> np.ndarray:
    """Codeword of the sparse-graph code induced by a cycle of G

    Raises:
        NodeWeightError: the induced word is not a codeword or its weight differs from the cycle weight
    """
    instance = G.instance if instance is None else instance
    word = np.zeros(instance.n, dtype=np.uint8)
    for e in cycle.edges:
        word[G.edges[e].node] ^= 1
    for _, a, b in cycle.visits:
        _, completion = G.pair_entry(a, b)
        word[instance.position_node[completion]] ^= 1

    syndrome = (extract_parity_matrix(instance).astype(np.int64) @ word.astype(np.int64)) % 2
    if syndrome.any():
        raise NodeWeightError("Cycle completion does not satisfy the parity checks")
    if int(word.sum()) != cycle.weight:
        raise NodeWeightError(f"Induced codeword has weight {int(word.sum())}, cycle weight is {cycle.weight}")
    return word


def moore_bound(delta: float, num_clusters: int, a: int) -> float:
    """(a+1)(2 log_{delta-1}(((delta-2)/2)|V~| + 1) + 1), valid for delta > 2"""
    return (a + 1) * (2 * math.log(((delta - 2) / 2) * num_clusters + 1, delta - 1) + 1)


@dataclass(frozen=True)
class DistanceBound:
    value: float
    regime: str      # 'moore', 'girth', 'critical' or 'unbounded'
    relative: Optional[float] = None


def dmin_upper_bound(G: ClusterGraph, n: Optional[int] = None, g: Optional[int] = None) -> DistanceBound:
    """Minimum-distance upper bound from short cycles of G

    Above average degree 2 the Moore bound guarantees a cycle of logarithmic
    length; otherwise only an existing cycle gives a bound.
    """
    a = G.node_weight_bound
    delta = average_degree(G)
    g = girth(G) if g is None else g
    girth_bound = (a + 1) * g if g is not None else math.inf

    if len(G.edges) > G.num_clusters:
        moore = moore_bound(delta, G.num_clusters, a)
        value, regime = min(moore, girth_bound), 'moore' if moore <= girth_bound else 'girth'
    elif g is None:
        value, regime = math.inf, 'unbounded'
    else:
        value = girth_bound
        regime = 'critical' if len(G.edges) == G.num_clusters else 'girth'
    relative = value / n if n and math.isfinite(value) else None
    return DistanceBound(value, regime, relative)


@dataclass
class NecessaryConditionReport:
    kind: str
    num_clusters: int
    num_edges: int
    average_degree: float
    girth: Optional[int]
    min_cycle_weight: Optional[int]
    node_weight_bound: int
    is_forest: bool
    passed: bool
    distance_bound: DistanceBound
    ldpc_test: Optional[Dict] = None
    cluster_test: Optional[Dict] = None
    cycle: Optional[CycleInfo] = field(default=None, repr=False)

    @property
    def verdict(self) -> str:
        return 'PASS' if self.passed else 'FAIL'

    def to_dict(self) -> Dict:
        data = asdict(self)
        data.pop('cycle')
        data['verdict'] = self.verdict
        bound = data['distance_bound']
        if not math.isfinite(bound['value']):
            bound['value'] = None
        return data


def check_necessary_condition(instance: CodeInstance, G: Optional[ClusterGraph] = None) -> NecessaryConditionReport:
    """Average degree of G at most 2, with the closed-form LDPC and cluster tests alongside"""
    G = build_graph2(instance) if G is None else G
    g = girth(G)
    cycle = min_weight_cycle(G) if g is not None else None
    n2 = len(G.edges)
    passed = n2 <= G.num_clusters

    ldpc_test = None
    if instance.base.kind == BaseKind.LDPC:
        num_edges = instance.m
        lambda_2 = Fraction(2 * int((instance.variable_degrees == 2).sum()), num_edges)
        rho_bar = Fraction(num_edges, instance.base.num_components)
        product = lambda_2 * rho_bar
        ldpc_test = {'lambda_2': float(lambda_2), 'rho_bar': float(rho_bar),
                     'lambda_2_rho': float(product), 'passed': product <= 2}

    cluster_test = None
    sizes = {int(c.size) for c in G.clusters}
    if len(sizes) == 1:
        size = sizes.pop()
        high = int((~instance.base.degree_one_mask).sum())
        tilde_lambda_2 = Fraction(2 * n2, high) if high else Fraction(0)
        cluster_test = {'tilde_lambda_2': float(tilde_lambda_2), 'cluster_size': size,
                        'bound': 2.0 / size, 'passed': tilde_lambda_2 * size <= 2}

    report = NecessaryConditionReport(
        kind=instance.base.kind.value,
        num_clusters=G.num_clusters,
        num_edges=n2,
        average_degree=average_degree(G),
        girth=g,
        min_cycle_weight=cycle.weight if cycle else None,
        node_weight_bound=G.node_weight_bound,
        is_forest=g is None,
        passed=passed,
        distance_bound=dmin_upper_bound(G, instance.n, g),
        ldpc_test=ldpc_test,
        cluster_test=cluster_test,
        cycle=cycle,
    )
    logger.info(f"Necessary condition on {instance.name}: delta={report.average_degree:.4f} "
                f"girth={g} verdict={report.verdict}")
    return report
