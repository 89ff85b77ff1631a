import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("tdquad", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("tdquad")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def bfs_oracle(m, source):
    """Plain-python BFS over the half-edge table, independent of the CSR kernels."""
    nbrs = {v: [] for v in range(m.vertex_count)}
    for h in range(m.n_half_edges):
        nbrs[int(m.origin[h])].append(int(m.origin[m.twin[h]]))
    dist = {int(source): 0}
    frontier = [int(source)]
    while frontier:
        nxt = []
        for v in frontier:
            for w in nbrs[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return np.array([dist.get(v, -1) for v in range(m.vertex_count)])
