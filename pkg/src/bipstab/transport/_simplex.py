"""Primal network simplex for the dense transportation problem.

Node layout: sources 0..n-1, sinks n..n+m-1, artificial root n+m.
Arc layout: real arc e < n*m joins source e // m to sink n + e % m; arc
n*m + u is the artificial arc between node u and the root.

The spanning tree is stored with parent / thread / reverse-thread /
successor-count / last-successor arrays and kept strongly feasible, which
rules out cycling under degeneracy. Entering arcs are chosen by block
search over the real arcs in index order, so runs are deterministic.
Potentials satisfy cost + pi[source] - pi[target] = 0 on tree arcs.
"""

import numpy as np
from numba import njit

STATE_TREE = 0
STATE_LOWER = 1
DIR_UP = 1
DIR_DOWN = -1

OPTIMAL = 0
INFEASIBLE = 1
MAX_ITER = 2


@njit(cache=True)
def _arc_source(e, n, m, nm, art_src):
    if e < nm:
        return e // m
    return art_src[e - nm]


@njit(cache=True)
def _arc_target(e, n, m, nm, art_tgt):
    if e < nm:
        return n + e % m
    return art_tgt[e - nm]


@njit(cache=True)
def _arc_cost(e, C, m, nm, art_cost):
    if e < nm:
        return C[e // m, e % m]
    return art_cost[e - nm]


@njit(cache=True)
def network_simplex(a, b, C, max_iter, block_size):
    n = a.shape[0]
    m = b.shape[0]
    nm = n * m
    node_num = n + m
    root = node_num
    all_arcs = nm + node_num
    INF = np.inf

    supply = np.empty(node_num + 1)
    supply[:n] = a
    supply[n:node_num] = -b
    supply[root] = 0.0

    cmax = 0.0
    for i in range(n):
        for j in range(m):
            v = abs(C[i, j])
            if v > cmax:
                cmax = v
    art_c = (cmax + 1.0) * node_num
    tol = 1e-13 * (cmax + 1.0)

    flow = np.zeros(all_arcs)
    state = np.ones(all_arcs, dtype=np.int8)  # real arcs start at lower bound
    art_src = np.empty(node_num, dtype=np.int64)
    art_tgt = np.empty(node_num, dtype=np.int64)
    art_cost = np.empty(node_num)

    parent = np.empty(node_num + 1, dtype=np.int64)
    pred = np.empty(node_num + 1, dtype=np.int64)
    thread = np.empty(node_num + 1, dtype=np.int64)
    rev_thread = np.empty(node_num + 1, dtype=np.int64)
    succ_num = np.empty(node_num + 1, dtype=np.int64)
    last_succ = np.empty(node_num + 1, dtype=np.int64)
    pred_dir = np.empty(node_num + 1, dtype=np.int8)
    pi = np.empty(node_num + 1)
    dirty = np.empty(node_num + 1, dtype=np.int64)

    parent[root] = -1
    pred[root] = -1
    thread[root] = 0
    rev_thread[0] = root
    succ_num[root] = node_num + 1
    last_succ[root] = root - 1
    pi[root] = 0.0
    for u in range(node_num):
        e = nm + u
        parent[u] = root
        pred[u] = e
        thread[u] = u + 1
        rev_thread[u + 1] = u
        succ_num[u] = 1
        last_succ[u] = u
        state[e] = STATE_TREE
        if supply[u] >= 0:
            pred_dir[u] = DIR_UP
            pi[u] = 0.0
            art_src[u] = u
            art_tgt[u] = root
            flow[e] = supply[u]
            art_cost[u] = 0.0
        else:
            pred_dir[u] = DIR_DOWN
            pi[u] = art_c
            art_src[u] = root
            art_tgt[u] = u
            flow[e] = -supply[u]
            art_cost[u] = art_c

    next_arc = 0
    it = 0
    status = OPTIMAL
    while True:
        # block search for an entering arc among the real arcs
        in_arc = -1
        min_rc = -tol
        cnt = block_size
        e = next_arc
        found = False
        for _k in range(nm):
            if state[e] == STATE_LOWER:
                rc = C[e // m, e % m] + pi[e // m] - pi[n + e % m]
                if rc < min_rc:
                    min_rc = rc
                    in_arc = e
            e += 1
            if e == nm:
                e = 0
            cnt -= 1
            if cnt == 0:
                if in_arc >= 0:
                    found = True
                    break
                cnt = block_size
        if in_arc < 0:
            break
        if not found:
            e = in_arc + 1 if in_arc + 1 < nm else 0
        next_arc = e

        it += 1
        if it > max_iter:
            status = MAX_ITER
            break

        # join node of the cycle
        u_src = in_arc // m
        u_tgt = n + in_arc % m
        u = u_src
        v = u_tgt
        while u != v:
            if succ_num[u] < succ_num[v]:
                u = parent[u]
            else:
                v = parent[v]
        join = u

        # leaving arc, strongly feasible rule (in_arc is at its lower bound)
        first = u_src
        second = u_tgt
        delta = INF
        u_out = -1
        result = 0
        u = first
        while u != join:
            ea = pred[u]
            d = flow[ea] if pred_dir[u] == DIR_UP else INF
            if d < delta:
                delta = d
                u_out = u
                result = 1
            u = parent[u]
        u = second
        while u != join:
            ea = pred[u]
            d = flow[ea] if pred_dir[u] == DIR_DOWN else INF
            if d <= delta:
                delta = d
                u_out = u
                result = 2
            u = parent[u]
        if result == 0:
            status = INFEASIBLE  # unbounded; cannot happen with finite supplies
            break
        if result == 1:
            u_in = first
            v_in = second
        else:
            u_in = second
            v_in = first

        # augment along the cycle
        if delta > 0:
            flow[in_arc] += delta
            u = u_src
            while u != join:
                flow[pred[u]] -= pred_dir[u] * delta
                u = parent[u]
            u = u_tgt
            while u != join:
                flow[pred[u]] += pred_dir[u] * delta
                u = parent[u]
        state[in_arc] = STATE_TREE
        out_arc = pred[u_out]
        state[out_arc] = STATE_LOWER
        flow[out_arc] = 0.0

        # update the spanning tree
        old_rev_thread = rev_thread[u_out]
        old_succ_num = succ_num[u_out]
        old_last_succ = last_succ[u_out]
        v_out = parent[u_out]

        if u_in == u_out:
            parent[u_in] = v_in
            pred[u_in] = in_arc
            pred_dir[u_in] = DIR_UP if u_in == u_src else DIR_DOWN
            if thread[v_in] != u_out:
                after = thread[old_last_succ]
                thread[old_rev_thread] = after
                rev_thread[after] = old_rev_thread
                after = thread[v_in]
                thread[v_in] = u_out
                rev_thread[u_out] = v_in
                thread[old_last_succ] = after
                rev_thread[after] = old_last_succ
        else:
            thread_continue = thread[old_last_succ] if old_rev_thread == v_in else thread[v_in]
            stem = u_in
            par_stem = v_in
            last = last_succ[u_in]
            after = thread[last]
            thread[v_in] = u_in
            nd = 0
            dirty[nd] = v_in
            nd += 1
            while stem != u_out:
                next_stem = parent[stem]
                thread[last] = next_stem
                dirty[nd] = last
                nd += 1
                before = rev_thread[stem]
                thread[before] = after
                rev_thread[after] = before
                parent[stem] = par_stem
                par_stem = stem
                stem = next_stem
                if last_succ[stem] == last_succ[par_stem]:
                    last = rev_thread[par_stem]
                else:
                    last = last_succ[stem]
                after = thread[last]
            parent[u_out] = par_stem
            thread[last] = thread_continue
            rev_thread[thread_continue] = last
            last_succ[u_out] = last

            if old_rev_thread != v_in:
                thread[old_rev_thread] = after
                rev_thread[after] = old_rev_thread

            for k in range(nd):
                w = dirty[k]
                rev_thread[thread[w]] = w

            tmp_sc = 0
            tmp_ls = last_succ[u_out]
            u = u_out
            p = parent[u]
            while u != u_in:
                pred[u] = pred[p]
                pred_dir[u] = -pred_dir[p]
                tmp_sc += succ_num[u] - succ_num[p]
                succ_num[u] = tmp_sc
                last_succ[p] = tmp_ls
                u = p
                p = parent[u]
            pred[u_in] = in_arc
            pred_dir[u_in] = DIR_UP if u_in == u_src else DIR_DOWN
            succ_num[u_in] = old_succ_num

        up_limit_out = join if last_succ[join] == v_in else -1
        last_succ_out = last_succ[u_out]
        u = v_in
        while u != -1 and last_succ[u] == v_in:
            last_succ[u] = last_succ_out
            u = parent[u]

        if join != old_rev_thread and v_in != old_rev_thread:
            u = v_out
            while u != up_limit_out and last_succ[u] == old_last_succ:
                last_succ[u] = old_rev_thread
                u = parent[u]
        elif last_succ_out != old_last_succ:
            u = v_out
            while u != up_limit_out and last_succ[u] == old_last_succ:
                last_succ[u] = last_succ_out
                u = parent[u]

        u = v_in
        while u != join:
            succ_num[u] += old_succ_num
            u = parent[u]
        u = v_out
        while u != join:
            succ_num[u] -= old_succ_num
            u = parent[u]

        # shift potentials of the re-hung subtree
        if u_in == u_src:
            sigma = pi[v_in] - pi[u_in] - C[in_arc // m, in_arc % m]
        else:
            sigma = pi[v_in] - pi[u_in] + C[in_arc // m, in_arc % m]
        end = thread[last_succ[u_in]]
        u = u_in
        while u != end:
            pi[u] += sigma
            u = thread[u]

    if status == OPTIMAL:
        art_mass = 0.0
        for u in range(node_num):
            art_mass += flow[nm + u]
        if art_mass > 1e-9 * (1.0 + np.sum(a)):
            status = INFEASIBLE

    plan = flow[:nm].reshape(n, m).copy()
    return plan, pi[:node_num].copy(), status, it
