"""Numba kernels for the loops that dominate run time on large maps."""
import numpy as np
from numba import njit


@njit(cache=True)
def cycle_decomposition(perm):
    """Cycles of a permutation, labelled in order of their smallest element.

    Returns (label, order, offsets): cycle c is order[offsets[c]:offsets[c+1]],
    listed by iterating perm from its smallest element.
    """
    n = perm.shape[0]
    label = np.full(n, -1, np.int64)
    order = np.empty(n, np.int64)
    offsets = np.empty(n + 1, np.int64)
    offsets[0] = 0
    pos = 0
    c = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        e = s
        while label[e] < 0:
            label[e] = c
            order[pos] = e
            pos += 1
            e = perm[e]
        c += 1
        offsets[c] = pos
    return label, order, offsets[: c + 1]


@njit(cache=True)
def bfs_csr(offsets, nbrs, sources, n):
    """Multi-source BFS on a CSR graph; -1 marks unreachable vertices."""
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    head = 0
    tail = 0
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v] + 1
        for i in range(offsets[v], offsets[v + 1]):
            w = nbrs[i]
            if dist[w] < 0:
                dist[w] = dv
                queue[tail] = w
                tail += 1
    return dist


@njit(cache=True)
def bfs_csr_masked(offsets, nbrs, sources, allowed, n):
    """BFS restricted to vertices with allowed[v] true."""
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    head = 0
    tail = 0
    for s in sources:
        if allowed[s] and dist[s] < 0:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v] + 1
        for i in range(offsets[v], offsets[v + 1]):
            w = nbrs[i]
            if allowed[w] and dist[w] < 0:
                dist[w] = dv
                queue[tail] = w
                tail += 1
    return dist


@njit(cache=True)
def canonical_relabel(twin, nxt, root):
    """Relabel half-edges in discovery order of a search from the root.

    Each discovered half-edge h enqueues twin(h) then nxt(h). Returns the
    new-id array (old -> new); unreachable half-edges keep -1.
    """
    n = twin.shape[0]
    new = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    if n == 0:
        return new
    new[root] = 0
    queue[0] = root
    head = 0
    tail = 1
    while head < tail:
        h = queue[head]
        head += 1
        for g in (twin[h], nxt[h]):
            if new[g] < 0:
                new[g] = tail
                queue[tail] = g
                tail += 1
    return new


@njit(cache=True)
def closure_successors(labels):
    """Successor of every corner in a cyclic label sequence.

    The successor of corner i is the first corner after i (cyclically) whose
    label is labels[i] - 1; corners carrying the minimum label get -1.
    Labels must change by at most one between consecutive corners, up to
    the wrap, which is what the labelled-mobile closure guarantees.
    """
    n = labels.shape[0]
    lo = labels.min()
    span = labels.max() - lo + 2
    nxt = np.full(span, -1, np.int64)
    succ = np.full(n, -1, np.int64)
    # two backward sweeps; the first only primes nxt with the wrap-around
    for sweep in range(2):
        for i in range(n - 1, -1, -1):
            lab = labels[i] - lo
            if sweep == 1 and lab > 0:
                succ[i] = nxt[lab - 1]
            nxt[lab] = i
    return succ


@njit(cache=True)
def contour_to_parent(c):
    """Parent array of the tree coded by a contour, vertices in preorder.

    Also returns the vertex visited at each contour time.
    """
    n = c.shape[0]
    k = (n - 1) // 2
    parent = np.full(k + 1, -1, np.int64)
    visit = np.empty(n, np.int64)
    stack = np.empty(k + 1, np.int64)
    depth = 0
    stack[0] = 0
    visit[0] = 0
    nv = 1
    for t in range(1, n):
        if c[t] > c[t - 1]:
            parent[nv] = stack[depth]
            depth += 1
            stack[depth] = nv
            nv += 1
        else:
            depth -= 1
        visit[t] = stack[depth]
    return parent, visit


@njit(cache=True)
def match_steps(c):
    """Partner of each contour step (step i goes from time i to i+1)."""
    n = c.shape[0] - 1
    partner = np.empty(n, np.int64)
    stack = np.empty(n, np.int64)
    top = 0
    for i in range(n):
        if c[i + 1] > c[i]:
            stack[top] = i
            top += 1
        else:
            top -= 1
            j = stack[top]
            partner[i] = j
            partner[j] = i
    return partner


@njit(cache=True)
def inherit_from_parent(parent, value):
    """Fill entries equal to -2 with the parent's value (preorder vertices)."""
    out = value.copy()
    for v in range(out.shape[0]):
        if out[v] == -2:
            out[v] = out[parent[v]]
    return out


@njit(cache=True)
def conditioned_walk(u):
    """Walk from 0 with P(up from x) = (x+2)/(2(x+1)), driven by uniforms u."""
    n = u.shape[0]
    z = np.empty(n + 1, np.int64)
    z[0] = 0
    for t in range(n):
        x = z[t]
        if u[t] * 2.0 * (x + 1) < x + 2:
            z[t + 1] = x + 1
        else:
            z[t + 1] = x - 1
    return z


@njit(cache=True)
def accumulate_from_parent(parent, inc):
    """value[v] = value[parent[v]] + inc[v] over preorder vertices; roots keep inc."""
    out = inc.copy()
    for v in range(out.shape[0]):
        if parent[v] >= 0:
            out[v] += out[parent[v]]
    return out


@njit(cache=True)
def forest_from_steps(steps):
    """Decode a forest from its contour steps.

    Each tree's contour is followed by one extra down-step reaching a new
    minimum. Returns (parent, visit, tree_id) with vertices in preorder;
    visit[t] is the vertex at corner t for t < len(steps).
    """
    n = steps.shape[0]
    parent = np.full(n, -1, np.int64)
    tree_id = np.zeros(n, np.int64)
    visit = np.empty(n, np.int64)
    stack = np.empty(n + 1, np.int64)
    depth = 0
    stack[0] = 0
    nv = 1
    tid = 0
    for t in range(n):
        visit[t] = stack[depth]
        if steps[t] > 0:
            parent[nv] = stack[depth]
            tree_id[nv] = tid
            depth += 1
            stack[depth] = nv
            nv += 1
        elif depth > 0:
            depth -= 1
        elif t < n - 1:
            # separator step: start the next tree
            tid += 1
            tree_id[nv] = tid
            stack[0] = nv
            nv += 1
    return parent[:nv], visit, tree_id[:nv]


@njit(cache=True)
def rotation_from_sorted(order, vertex):
    """next_at_vertex from half-edges sorted by (vertex, position)."""
    n = order.shape[0]
    nxt = np.empty(n, np.int64)
    start = 0
    for i in range(n):
        last = i == n - 1 or vertex[order[i + 1]] != vertex[order[i]]
        if last:
            nxt[order[i]] = order[start]
            start = i + 1
        else:
            nxt[order[i]] = order[i + 1]
    return nxt


@njit(cache=True)
def dyck_max(u, k):
    """Height of a uniform Dyck path with 2k steps, from 2k+1 uniforms.

    Steps are drawn as a uniform arrangement of k ups and k+1 downs
    (sequential sampling), then rotated to start after the first minimum
    (cycle lemma); the maximum of the rotated walk is returned.
    """
    n = 2 * k + 1
    s = np.empty(n + 1, np.int64)
    s[0] = 0
    ups = k
    for i in range(n):
        if u[i] * (n - i) < ups:
            s[i + 1] = s[i] + 1
            ups -= 1
        else:
            s[i + 1] = s[i] - 1
    m = 0
    for i in range(1, n + 1):
        if s[i] < s[m]:
            m = i
    # after index m the walk is s - s[m]; before it, s - s[m] - 1 (wrap by the total -1)
    best = 0
    for i in range(m, n + 1):
        if s[i] - s[m] > best:
            best = s[i] - s[m]
    for i in range(0, m):
        if s[i] - s[m] - 1 > best:
            best = s[i] - s[m] - 1
    return best
