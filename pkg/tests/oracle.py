"""Exhaustive reference solver for tiny instances.

Shares nothing with the search code: distances are recomputed from raw
coordinates and every customer subset, every visiting order and every way of
threading charging stations between consecutive stops is enumerated.
"""
from __future__ import annotations

import itertools
import math

EPS = 1e-9


def _d(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


class BruteForce:
    def __init__(self, coords, demand, n_c, n_s, max_load, max_energy, h):
        self.coords = [tuple(map(float, c)) for c in coords]
        self.demand = list(map(float, demand))
        self.n_c, self.n_s = n_c, n_s
        self.Q, self.C, self.h = float(max_energy), float(max_load), float(h)
        n = 1 + n_c + n_s
        self.D = [[_d(self.coords[i], self.coords[j]) for j in range(n)] for i in range(n)]
        stations = list(range(n_c + 1, n))
        # station detours usable inside one gap: every ordered sequence of distinct stations
        self.chains = [()]
        for k in range(1, n_s + 1):
            self.chains += list(itertools.permutations(stations, k))

    @classmethod
    def from_instance(cls, inst):
        return cls(inst.coords.tolist(), inst.demand.tolist(), inst.n_c, inst.n_s,
                   inst.max_load, inst.max_energy, inst.h)

    def _gap(self, a, b, battery):
        """(extra path, cost, battery on arrival at b) for every viable way from a to b."""
        out = []
        for chain in self.chains:
            path = (a, *chain, b)
            level, cost, ok = battery, 0.0, True
            for u, v in zip(path, path[1:]):
                step = self.D[u][v]
                level -= self.h * step
                cost += step
                if level < -EPS:
                    ok = False
                    break
                if v != b:  # every intermediate node is a station
                    level = self.Q
            if ok:
                out.append((cost, level, chain))
        return out

    def route_cost(self, order):
        """Cheapest way to serve ``order`` as one route with optimal charging stops."""
        stops = [0, *order, 0]
        # Pareto front of (cost, battery, nodes visited so far)
        front = [(0.0, self.Q, (0,))]
        for a, b in zip(stops, stops[1:]):
            nxt = []
            for cost, level, seq in front:
                for c, lv, chain in self._gap(a, b, level):
                    nxt.append((cost + c, lv, seq + chain + (b,)))
            if not nxt:
                return math.inf, None
            nxt.sort(key=lambda t: (t[0], -t[1]))
            front = []
            best_level = -math.inf
            for item in nxt:
                if item[1] > best_level + EPS:
                    front.append(item)
                    best_level = item[1]
        cost, _, seq = min(front, key=lambda t: t[0])
        return cost, list(seq)

    def best_route(self, subset):
        best, best_seq = math.inf, None
        for perm in itertools.permutations(subset):
            if perm[0] > perm[-1]:
                continue  # a reversed order costs the same only without stations
            for order in (perm, perm[::-1]):
                c, seq = self.route_cost(order)
                if c < best:
                    best, best_seq = c, seq
        return best, best_seq

    def solve(self):
        """Optimal total distance and one giant tour that attains it."""
        custs = list(range(1, self.n_c + 1))
        full = (1 << self.n_c) - 1
        route = {}
        for mask in range(1, full + 1):
            subset = [c for i, c in enumerate(custs) if mask >> i & 1]
            if sum(self.demand[c] for c in subset) > self.C + EPS:
                route[mask] = (math.inf, None)
            else:
                route[mask] = self.best_route(subset)
        best = [math.inf] * (full + 1)
        choice = [0] * (full + 1)
        best[0] = 0.0
        for mask in range(1, full + 1):
            low = mask & -mask  # the lowest customer left anchors its route
            sub = mask
            while sub:
                if sub & low and route[sub][0] < math.inf:
                    v = best[mask ^ sub] + route[sub][0]
                    if v < best[mask]:
                        best[mask], choice[mask] = v, sub
                sub = (sub - 1) & mask
        if best[full] == math.inf:
            return math.inf, None
        tour, mask = [0], full
        while mask:
            tour += route[choice[mask]][1][1:]
            mask ^= choice[mask]
        return best[full], tour
