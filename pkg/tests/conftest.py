import numpy as np
import pytest

from anneal_rbm.topology import build_custom, build_pegasus


def pegasus_ball(m: int, size: int, start: int | None = None):
    """Connected induced subgraph of a Pegasus graph, relabeled to 0..n-1.

    Grows a BFS ball from a high-degree qubit, which keeps the subgraph rich
    in crossings (starting from id 0 would land on a boundary wire with no
    internal couplers).
    """
    g = build_pegasus(m)
    if start is None:
        start = max(g.active_nodes, key=lambda v: (g.degree(v), -v))
    order = [start]
    seen = {start}
    for v in order:
        for nb in g.adjacency[v]:
            if nb not in seen and len(order) < size:
                seen.add(nb)
                order.append(nb)
        if len(order) >= size:
            break
    nodes = sorted(seen)
    relabel = {q: i for i, q in enumerate(nodes)}
    edges = [(relabel[a], relabel[b]) for a, b in sorted(g.active_edges)
             if a in seen and b in seen]
    return len(nodes), edges


@pytest.fixture(scope="session")
def p2_ball18():
    return pegasus_ball(2, 18)


def two_stars_graph():
    """Two K_{1,3} stars whose leaves 1 and 5 share one coupler."""
    edges = [(0, 1), (0, 2), (0, 3), (4, 5), (4, 6), (4, 7), (1, 5)]
    return build_custom(range(8), edges)


def spins(*values) -> np.ndarray:
    return np.array(values, dtype=np.int8)
