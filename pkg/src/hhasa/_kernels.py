"""Inner-loop kernels on giant-tour arrays.

A tour is a 1-D int64 array of canonical node ids that starts and ends with the
depot 0; inner zeros delimit routes.  Node ``v`` is a customer when
``1 <= v <= n_c`` and a station when ``v > n_c``.

Every kernel is pure (returns new arrays) and takes all randomness as
pre-drawn uniforms, so the numba and pure-Python paths give identical results.
Status codes: 0 ok, 1 load repair failed, 2 station insertion failed.
"""
import numpy as np

from ._jit import njit

OK = 0
LOAD_FAIL = 1
ENERGY_FAIL = 2

SWAP = 0
REVERSION = 1
TWO_OPT = 2
INSERTION = 3

# slack for accumulated float error in battery levels
EPS = 1e-9


@njit
def tour_length(seq, dist):
    total = 0.0
    for i in range(seq.shape[0] - 1):
        total += dist[seq[i], seq[i + 1]]
    return total


@njit
def _find(seq, node):
    for i in range(seq.shape[0]):
        if seq[i] == node:
            return i
    return -1


@njit
def apply_operator(seq, op, c1, c2):
    p1 = _find(seq, c1)
    p2 = _find(seq, c2)
    if p1 < 0 or p2 < 0:
        raise ValueError("operator customer not found in tour")
    out = seq.copy()
    if op == INSERTION:
        n = seq.shape[0]
        k = 0
        for i in range(n):
            if i == p1:
                continue
            out[k] = seq[i]
            k += 1
            if i == p2:
                out[k] = c1
                k += 1
        return out
    if p1 > p2:
        p1, p2 = p2, p1
    if op == SWAP:
        out[p1] = seq[p2]
        out[p2] = seq[p1]
    elif op == REVERSION:
        for i in range(p2 - p1 + 1):
            out[p1 + i] = seq[p2 - i]
    elif op == TWO_OPT:
        lo = p1 + 1
        for i in range(p2 - lo + 1):
            out[lo + i] = seq[p2 - i]
    else:
        raise ValueError("unknown operator")
    return out


@njit
def normalize(seq, dist, n_c):
    """Drop empty routes and redundant station visits.

    A run of consecutive stations collapses to the one with the cheapest
    detour between its neighbours; a station run right after the depot is
    dropped.  Station insertion may put one back there when it lets the
    vehicle reach the first customer with more charge.
    """
    n = seq.shape[0]
    out = np.empty(n, dtype=np.int64)
    k = 0
    i = 0
    while i < n:
        v = seq[i]
        if v > n_c:
            j = i
            while j < n and seq[j] > n_c:
                j += 1
            prev = out[k - 1] if k > 0 else 0
            nxt = seq[j] if j < n else 0
            if k > 0 and prev != 0:
                best = seq[i]
                best_cost = dist[prev, best] + dist[best, nxt]
                for t in range(i + 1, j):
                    s = seq[t]
                    c = dist[prev, s] + dist[s, nxt]
                    if c < best_cost:
                        best = s
                        best_cost = c
                out[k] = best
                k += 1
            i = j
            continue
        if v == 0 and k > 0 and out[k - 1] == 0:
            i += 1
            continue
        out[k] = v
        k += 1
        i += 1
    if k == 0 or out[0] != 0:
        # cannot happen for well-formed input; keep the depot at the front
        res = np.empty(k + 1, dtype=np.int64)
        res[0] = 0
        res[1:] = out[:k]
        out = res
        k += 1
    if out[k - 1] != 0:
        res = np.empty(k + 1, dtype=np.int64)
        res[:k] = out[:k]
        res[k] = 0
        return res
    return out[:k].copy()


@njit
def count_routes(seq):
    z = 0
    for i in range(seq.shape[0]):
        if seq[i] == 0:
            z += 1
    return z - 1


@njit
def load_feasible(seq, demand, max_load):
    load = 0.0
    for i in range(1, seq.shape[0]):
        v = seq[i]
        if v == 0:
            if load > max_load:
                return False
            load = 0.0
        else:
            load += demand[v]
    return True


@njit
def repair_load(seq, demand, max_load, dist, n_c):
    """Move overflow customers into routes with spare capacity.

    In each overloaded route, the customer at which the running load first
    exceeds capacity is removed (repeatedly, until the route fits).  Each
    removed customer is then inserted beside its nearest customer among the
    routes that can take its demand, on whichever side adds less distance.
    Returns ``(tour, status)``.
    """
    n = seq.shape[0]
    keep = np.empty(n, dtype=np.int64)
    removed = np.empty(n, dtype=np.int64)
    k = 0
    n_rem = 0
    load = 0.0
    for i in range(n):
        v = seq[i]
        if v == 0:
            load = 0.0
        elif v <= n_c:
            if load + demand[v] > max_load:
                removed[n_rem] = v
                n_rem += 1
                continue
            load += demand[v]
        keep[k] = v
        k += 1
    if n_rem == 0:
        return seq.copy(), OK

    cur = np.empty(n, dtype=np.int64)
    cur[:k] = keep[:k]
    m = k
    route_of = np.empty(n, dtype=np.int64)
    for r in range(n_rem):
        x = removed[r]
        qx = demand[x]
        # route index per position and residual capacity per route
        n_routes = 0
        for i in range(m):
            if cur[i] == 0 and i < m - 1:
                n_routes += 1
            route_of[i] = n_routes - 1
        loads = np.zeros(n_routes + 1)
        for i in range(1, m - 1):
            v = cur[i]
            if 0 < v <= n_c:
                loads[route_of[i]] += demand[v]
        best_pos = -1
        best_d = np.inf
        for i in range(1, m - 1):
            y = cur[i]
            if y == 0 or y > n_c:
                continue
            if loads[route_of[i]] + qx > max_load:
                continue
            if dist[x, y] < best_d:
                best_d = dist[x, y]
                best_pos = i
        if best_pos < 0:
            return seq.copy(), LOAD_FAIL
        y = cur[best_pos]
        prev = cur[best_pos - 1]
        nxt = cur[best_pos + 1]
        before = dist[prev, x] + dist[x, y] - dist[prev, y]
        after = dist[y, x] + dist[x, nxt] - dist[y, nxt]
        at = best_pos if before < after else best_pos + 1
        for i in range(m, at, -1):
            cur[i] = cur[i - 1]
        cur[at] = x
        m += 1
    return cur[:m].copy(), OK


@njit
def _route_energy_ok(route, energy, max_energy, n_c):
    battery = max_energy
    for i in range(route.shape[0] - 1):
        battery -= energy[route[i], route[i + 1]]
        if battery < -EPS:
            return False
        nxt = route[i + 1]
        if nxt == 0 or nxt > n_c:
            battery = max_energy
    return True


@njit
def energy_feasible(seq, energy, max_energy, n_c):
    return _route_energy_ok(seq, energy, max_energy, n_c)


@njit
def _insert_stations_route(route, dist, energy, max_energy, n_c, n_nodes):
    """Make a single depot-to-depot route energy feasible.

    At the first arc that would drain the battery, insert the reachable
    recharge point with the smallest detour from which the arc's head is
    reachable.  Recharge points are the stations and, last in tie order, the
    depot: a depot visit splits the route in two, which is how the search
    gains routes when one long route cannot be charged cheaply.
    If no station works on that arc, earlier arcs back to the last recharge
    point are tried.  Returns ``(route, ok)``.
    """
    cur = route.copy()
    levels = np.empty(route.shape[0] + 64)
    cands = np.empty(n_nodes - n_c, dtype=np.int64)
    cands[:-1] = np.arange(n_c + 1, n_nodes)
    cands[-1] = 0
    for _ in range(4 * route.shape[0] + 8):
        m = cur.shape[0]
        if levels.shape[0] < m:
            levels = np.empty(2 * m)
        battery = max_energy
        last = 0
        fail = -1
        levels[0] = battery
        for i in range(m - 1):
            battery -= energy[cur[i], cur[i + 1]]
            if battery < -EPS:
                fail = i
                break
            nxt = cur[i + 1]
            if nxt == 0 or nxt > n_c:
                battery = max_energy
                last = i + 1
            levels[i + 1] = battery
        if fail < 0:
            return cur, True
        v_idx = fail + 1
        best_s = -1
        best_j = -1
        for j in range(fail, last - 1, -1):
            a = cur[j]
            b = cur[j + 1]
            best_cost = np.inf
            for s in cands:
                if s == a or s == b:
                    continue
                if levels[j] - energy[a, s] < -EPS:
                    continue
                # from a full battery at s, walk to the failing arc's head
                bat = max_energy - energy[s, b]
                ok = bat >= -EPS
                t = j + 1
                while ok and t < v_idx:
                    bat -= energy[cur[t], cur[t + 1]]
                    ok = bat >= -EPS
                    t += 1
                if not ok:
                    continue
                cost = dist[a, s] + dist[s, b] - dist[a, b]
                if cost < best_cost:
                    best_cost = cost
                    best_s = s
            if best_s >= 0:
                best_j = j
                break
        if best_s < 0:
            # no single stop bridges the failing arc: take the stop that most
            # shrinks the shortfall (arc energy minus charge available before
            # it), so a later stop or a chain of stations can finish the job
            a_f = cur[fail]
            b_f = cur[fail + 1]
            best_gap = energy[a_f, b_f] - levels[fail] - EPS
            for j in range(fail, last - 1, -1):
                a = cur[j]
                b = cur[j + 1]
                for s in cands:
                    if s == a or s == b:
                        continue
                    if levels[j] - energy[a, s] < -EPS:
                        continue
                    if j == fail:
                        gap = energy[s, b] - max_energy
                    else:
                        lvl = max_energy - energy[s, b]
                        t = j + 1
                        while lvl >= -EPS and t < fail:
                            lvl -= energy[cur[t], cur[t + 1]]
                            t += 1
                        if lvl < -EPS:
                            continue
                        gap = energy[a_f, b_f] - lvl
                    if gap < best_gap:
                        best_gap = gap
                        best_s = s
                        best_j = j
            if best_s < 0:
                return cur, False
        nxt_route = np.empty(m + 1, dtype=np.int64)
        nxt_route[:best_j + 1] = cur[:best_j + 1]
        nxt_route[best_j + 1] = best_s
        nxt_route[best_j + 2:] = cur[best_j + 1:]
        cur = nxt_route
    return cur, False


@njit
def tidy(seq, n_c):
    """Drop routes without customers and repeated visits to the same station.

    Both edits can only shorten a route and never lower the charge at any
    later node, so feasibility is preserved.
    """
    n = seq.shape[0]
    out = np.empty(n, dtype=np.int64)
    out[0] = 0
    k = 1
    start = 0
    for i in range(1, n):
        if seq[i] != 0:
            continue
        has_customer = False
        for t in range(start + 1, i):
            if seq[t] <= n_c:
                has_customer = True
                break
        if has_customer:
            for t in range(start + 1, i):
                if seq[t] > n_c and seq[t] == out[k - 1]:
                    continue
                out[k] = seq[t]
                k += 1
            out[k] = 0
            k += 1
        start = i
    if k == 1:
        out[1] = 0
        k = 2
    return out[:k].copy()


@njit
def insert_stations(seq, dist, energy, max_energy, n_c, n_nodes):
    """Apply station insertion route by route.  Returns ``(tour, status)``."""
    n = seq.shape[0]
    out = np.empty(2 * n + 8, dtype=np.int64)
    k = 0
    start = 0
    out[k] = 0
    k += 1
    for i in range(1, n):
        if seq[i] != 0:
            continue
        route = seq[start:i + 1].copy()
        start = i
        if not _route_energy_ok(route, energy, max_energy, n_c):
            route, ok = _insert_stations_route(route, dist, energy, max_energy, n_c, n_nodes)
            if not ok:
                return seq.copy(), ENERGY_FAIL
        need = k + route.shape[0] - 1
        if need > out.shape[0]:
            grown = np.empty(2 * need, dtype=np.int64)
            grown[:k] = out[:k]
            out = grown
        out[k:need] = route[1:]
        k = need
    return tidy(out[:k], n_c), OK


@njit
def adjust_stations(seq, rand, memory, p_move, dist, energy, max_energy, n_c, n_nodes):
    """Per route: repair if energy infeasible, else maybe move/eliminate a station.

    ``rand`` holds four uniforms per route: gate, move-vs-eliminate roulette,
    which station visit, which target arc.
    """
    n = seq.shape[0]
    out = np.empty(2 * n + 8, dtype=np.int64)
    k = 0
    out[k] = 0
    k += 1
    start = 0
    r = 0
    for i in range(1, n):
        if seq[i] != 0:
            continue
        route = seq[start:i + 1].copy()
        start = i
        u = rand[r]
        r += 1
        if _route_energy_ok(route, energy, max_energy, n_c):
            if u[0] > memory:
                n_st = 0
                for t in range(1, route.shape[0] - 1):
                    if route[t] > n_c:
                        n_st += 1
                if n_st > 0:
                    pick = min(int(u[2] * n_st), n_st - 1)
                    pos = -1
                    c = 0
                    for t in range(1, route.shape[0] - 1):
                        if route[t] > n_c:
                            if c == pick:
                                pos = t
                                break
                            c += 1
                    station = route[pos]
                    reduced = np.empty(route.shape[0] - 1, dtype=np.int64)
                    reduced[:pos] = route[:pos]
                    reduced[pos:] = route[pos + 1:]
                    if u[1] < p_move:
                        # arcs of the reduced route, minus the one the station sat on
                        n_arcs = reduced.shape[0] - 1
                        a = min(int(u[3] * (n_arcs - 1)), n_arcs - 2)
                        if a >= pos - 1:
                            a += 1
                        moved = np.empty(route.shape[0], dtype=np.int64)
                        moved[:a + 1] = reduced[:a + 1]
                        moved[a + 1] = station
                        moved[a + 2:] = reduced[a + 1:]
                        route = moved
                    else:
                        route = reduced
        if not _route_energy_ok(route, energy, max_energy, n_c):
            route, ok = _insert_stations_route(route, dist, energy, max_energy, n_c, n_nodes)
            if not ok:
                return seq.copy(), ENERGY_FAIL
        need = k + route.shape[0] - 1
        if need > out.shape[0]:
            grown = np.empty(2 * need, dtype=np.int64)
            grown[:k] = out[:k]
            out = grown
        out[k:need] = route[1:]
        k = need
    return tidy(out[:k], n_c), OK


@njit
def propose(seq, op, c1, c2, rand, memory, p_move, demand, max_load,
            dist, energy, max_energy, n_c, n_nodes):
    """Generate -> repair load -> adjust stations -> evaluate, fused.

    ``c2 < 0`` skips the perturbation (single-customer instances).
    Returns ``(candidate, status, length)``; length is only valid on status 0.
    """
    if c2 >= 0:
        cand = normalize(apply_operator(seq, op, c1, c2), dist, n_c)
    else:
        cand = seq.copy()
    if not load_feasible(cand, demand, max_load):
        cand, status = repair_load(cand, demand, max_load, dist, n_c)
        if status != OK:
            return cand, status, np.inf
    cand, status = adjust_stations(cand, rand, memory, p_move, dist, energy,
                                   max_energy, n_c, n_nodes)
    if status != OK:
        return cand, status, np.inf
    return cand, OK, tour_length(cand, dist)
