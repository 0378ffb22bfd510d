# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph kernels; same contracts and arithmetic order as ``_pykernels``."""
import numpy as np


ctypedef long long idx_t


def max_matching(idx_t n, indptr, indices):
    cdef const idx_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const idx_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef idx_t[::1] match_l = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] match_r = np.full(n, -1, dtype=np.int64)
    cdef idx_t[::1] dist = np.empty(n, dtype=np.int64)
    cdef idx_t[::1] queue = np.empty(n, dtype=np.int64)
    cdef idx_t[::1] ptr = np.empty(n, dtype=np.int64)
    cdef idx_t[::1] stack = np.empty(n + 1, dtype=np.int64)
    cdef idx_t[::1] via = np.empty(n + 1, dtype=np.int64)
    cdef idx_t u, v, w, k, e, root, head, tail, top, found, size = 0
    cdef idx_t inf = n + 1
    cdef bint moved

    for u in range(n):
        for e in range(ip[u], ip[u + 1]):
            v = ix[e]
            if match_r[v] == -1:
                match_l[u] = v
                match_r[v] = u
                size += 1
                break

    while True:
        tail = 0
        for u in range(n):
            if match_l[u] == -1:
                dist[u] = 0
                queue[tail] = u
                tail += 1
            else:
                dist[u] = inf
        found = inf
        head = 0
        while head < tail:
            u = queue[head]
            head += 1
            if dist[u] >= found:
                continue
            for e in range(ip[u], ip[u + 1]):
                w = match_r[ix[e]]
                if w == -1:
                    if found == inf:
                        found = dist[u] + 1
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue[tail] = w
                    tail += 1
        if found == inf:
            return size

        for u in range(n):
            ptr[u] = ip[u]
        for root in range(n):
            if match_l[root] != -1:
                continue
            top = 0
            stack[0] = root
            while top >= 0:
                u = stack[top]
                moved = False
                while ptr[u] < ip[u + 1]:
                    v = ix[ptr[u]]
                    ptr[u] += 1
                    w = match_r[v]
                    if w == -1:
                        if dist[u] + 1 == found:
                            via[top] = v
                            for k in range(top + 1):
                                match_l[stack[k]] = via[k]
                                match_r[via[k]] = stack[k]
                            size += 1
                            top = -1
                            moved = True
                            break
                    elif dist[w] == dist[u] + 1:
                        via[top] = v
                        top += 1
                        stack[top] = w
                        moved = True
                        break
                if not moved:
                    dist[u] = inf
                    top -= 1


def betweenness(idx_t n, indptr, indices):
    cdef const idx_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const idx_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] cb = out
    cdef double[::1] sigma = np.empty(n, dtype=np.float64)
    cdef double[::1] delta = np.empty(n, dtype=np.float64)
    cdef idx_t[::1] dist = np.empty(n, dtype=np.int64)
    cdef idx_t[::1] order = np.empty(n, dtype=np.int64)
    cdef idx_t s, v, w, e, k, head, tail, dv
    cdef double acc

    for s in range(n):
        for v in range(n):
            dist[v] = -1
            sigma[v] = 0.0
            delta[v] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v] + 1
            for e in range(ip[v], ip[v + 1]):
                w = ix[e]
                if dist[w] < 0:
                    dist[w] = dv
                    order[tail] = w
                    tail += 1
                if dist[w] == dv:
                    sigma[w] += sigma[v]
        for k in range(tail - 1, -1, -1):
            v = order[k]
            dv = dist[v] + 1
            acc = 0.0
            for e in range(ip[v], ip[v + 1]):
                w = ix[e]
                if dist[w] == dv:
                    acc += sigma[v] / sigma[w] * (1.0 + delta[w])
            delta[v] = acc
            if v != s:
                cb[v] += acc
    return out
