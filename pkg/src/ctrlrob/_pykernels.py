"""Pure-Python graph kernels.

Reference implementations of the routines in ``_kernels.pyx``.  Both take a
graph in CSR form (``indptr``, ``indices``) over nodes ``0..n-1`` and follow
the same arithmetic order, so the two backends agree to rounding.
"""
from collections import deque

import numpy as np


def _adjacency(n, indptr, indices):
    indptr = np.asarray(indptr).tolist()
    indices = np.asarray(indices).tolist()
    return [indices[indptr[u]:indptr[u + 1]] for u in range(n)]


def max_matching(n, indptr, indices):
    """Size of a maximum matching of the bipartite split of a directed graph.

    Left vertex ``u`` is the out-copy of node ``u``, right vertex ``v`` the
    in-copy of node ``v``; every directed edge ``u -> v`` is a bipartite edge.
    Hopcroft-Karp with a greedy warm start, O(E sqrt(V)).
    """
    adj = _adjacency(n, indptr, indices)
    match_l = [-1] * n
    match_r = [-1] * n
    size = 0
    for u in range(n):
        for v in adj[u]:
            if match_r[v] == -1:
                match_l[u] = v
                match_r[v] = u
                size += 1
                break

    inf = n + 1
    while True:
        dist = [inf] * n
        queue = [u for u in range(n) if match_l[u] == -1]
        for u in queue:
            dist[u] = 0
        found = inf
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            if dist[u] >= found:
                continue
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    if found == inf:
                        found = dist[u] + 1
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if found == inf:
            return size

        ptr = [0] * n
        for root in range(n):
            if match_l[root] != -1:
                continue
            stack = [root]
            via = []
            while stack:
                u = stack[-1]
                au = adj[u]
                moved = False
                while ptr[u] < len(au):
                    v = au[ptr[u]]
                    ptr[u] += 1
                    w = match_r[v]
                    if w == -1:
                        if dist[u] + 1 == found:
                            via.append(v)
                            for uu, vv in zip(stack, via):
                                match_l[uu] = vv
                                match_r[vv] = uu
                            size += 1
                            stack = []
                            moved = True
                            break
                    elif dist[w] == dist[u] + 1:
                        via.append(v)
                        stack.append(w)
                        moved = True
                        break
                if not moved:
                    dist[u] = inf
                    stack.pop()
                    if via:
                        via.pop()


def betweenness(n, indptr, indices):
    """Directed, unweighted, unnormalised node betweenness (Brandes)."""
    adj = _adjacency(n, indptr, indices)
    cb = [0.0] * n
    for s in range(n):
        dist = [-1] * n
        sigma = [0.0] * n
        delta = [0.0] * n
        dist[s] = 0
        sigma[s] = 1.0
        order = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            dv = dist[v] + 1
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dv
                    queue.append(w)
                    order.append(w)
                if dist[w] == dv:
                    sigma[w] += sigma[v]
        for v in reversed(order):
            dv = dist[v] + 1
            acc = 0.0
            for w in adj[v]:
                if dist[w] == dv:
                    acc += sigma[v] / sigma[w] * (1.0 + delta[w])
            delta[v] = acc
            if v != s:
                cb[v] += acc
    return np.array(cb, dtype=np.float64)
