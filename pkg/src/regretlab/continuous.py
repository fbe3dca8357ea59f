"""Splittable routing games on graphs with convex quadratic edge latencies.

Players divide a fixed flow amount across explicitly enumerated simple paths;
costs are edge latency integrals c_i(w) = sum_e f_{i,e} * latency_e(f_e), and
the per-path gradient is grad_{i,p} = sum_{e in p} [latency_e(f_e) +
f_{i,e} * latency_e'(f_e)].  The dynamics are a linearized regularized-leader
update on the scaled simplex (costs are minimized, hence the negated
exponent); the certificate bounds the sum of linearized regrets, which
dominates every player's true regret by convexity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .learners import Certificate
from .regularizers import softmax

__all__ = [
    "CongestionNetwork",
    "LipschitzBundle",
    "ContinuousTrace",
    "parse_network",
    "gradient",
    "player_cost",
    "lipschitz_constant",
    "run_continuous",
    "linearized_regret",
    "true_regret",
    "certify_total_regret",
]

PATH_CAP = 64


@dataclass
class CongestionNetwork:
    """Directed graph with latency a*x^2 + b*x + c per edge and one
    (source, sink, flow) commodity per player.  Path sets are enumerated at
    construction; instances exceeding PATH_CAP paths per player are rejected.
    """

    edges: list  # (u, v, a, b, c) with a, b, c >= 0
    players: list  # (source, sink, flow)
    paths: list = field(init=False)  # per player: list of edge-index tuples

    def __post_init__(self):
        self.edges = [(str(u), str(v), float(a), float(b), float(c))
                      for (u, v, a, b, c) in self.edges]
        for (u, v, a, b, c) in self.edges:
            if a < 0 or b < 0 or c < 0:
                raise ValueError(f"latency coefficients must be nonnegative on {u}->{v}")
        self.players = [(str(s), str(t), float(f)) for (s, t, f) in self.players]
        for (s, t, f) in self.players:
            if f <= 0:
                raise ValueError(f"flow amount must be positive for {s}->{t}")
        out: dict[str, list[int]] = {}
        for idx, (u, v, *_rest) in enumerate(self.edges):
            out.setdefault(u, []).append(idx)
        self.paths = []
        for (s, t, _f) in self.players:
            found: list[tuple[int, ...]] = []
            self._dfs(s, t, out, [], {s}, found)
            if not found:
                raise ValueError(f"no path from {s} to {t}")
            if len(found) > PATH_CAP:
                raise ValueError(
                    f"{len(found)} paths from {s} to {t} exceed the cap {PATH_CAP}"
                )
            self.paths.append(sorted(found))

    def _dfs(self, node, t, out, acc, seen, found):
        if node == t:
            found.append(tuple(acc))
            return
        for eidx in out.get(node, ()):
            v = self.edges[eidx][1]
            if v in seen:
                continue
            acc.append(eidx)
            seen.add(v)
            self._dfs(v, t, out, acc, seen, found)
            seen.discard(v)
            acc.pop()

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def m(self) -> int:
        return len(self.edges)

    def latency(self, eidx: int, x: float) -> float:
        _, _, a, b, c = self.edges[eidx]
        return a * x * x + b * x + c

    def latency_slope(self, eidx: int, x: float) -> float:
        _, _, a, b, _ = self.edges[eidx]
        return 2.0 * a * x + b

    def check_feasible(self, i: int, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        f = self.players[i][2]
        if w.shape != (len(self.paths[i]),):
            raise ValueError(
                f"player {i}: flow vector has shape {w.shape}, "
                f"expected ({len(self.paths[i])},)"
            )
        if np.any(w < -1e-9) or abs(w.sum() - f) > 1e-9:
            raise ValueError(f"player {i}: path flows must be >= 0 and sum to {f}")
        return w

    def edge_loads(self, profile) -> tuple[np.ndarray, np.ndarray]:
        """(per-player (n, m) edge flows, total (m,) edge flow)."""
        per = np.zeros((self.n, self.m))
        for i, w in enumerate(profile):
            w = self.check_feasible(i, w)
            for p_idx, path in enumerate(self.paths[i]):
                for e in path:
                    per[i, e] += w[p_idx]
        return per, per.sum(axis=0)


def parse_network(text: str) -> CongestionNetwork:
    """Line format: ``edge u v a b c`` and ``player s t flow``; ``#`` comments."""
    edges, players = [], []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "edge" and len(parts) == 6:
                edges.append((parts[1], parts[2], float(parts[3]),
                              float(parts[4]), float(parts[5])))
            elif parts[0] == "player" and len(parts) == 4:
                players.append((parts[1], parts[2], float(parts[3])))
            else:
                raise ValueError
        except ValueError:
            raise ValueError(f"line {ln}: cannot parse {raw!r}") from None
    if not edges or not players:
        raise ValueError("network needs at least one edge and one player")
    return CongestionNetwork(edges, players)


def gradient(network: CongestionNetwork, profile, i: int) -> np.ndarray:
    """Exact gradient of player i's cost in its own path flows."""
    per, total = network.edge_loads(profile)
    out = np.empty(len(network.paths[i]))
    for p_idx, path in enumerate(network.paths[i]):
        out[p_idx] = sum(
            network.latency(e, total[e]) + per[i, e] * network.latency_slope(e, total[e])
            for e in path
        )
    return out


def player_cost(network: CongestionNetwork, profile, i: int) -> float:
    per, total = network.edge_loads(profile)
    return float(sum(per[i, e] * network.latency(e, total[e]) for e in range(network.m)))


@dataclass
class LipschitzBundle:
    """K bounds both the latency slope and the slope's own rate of change on
    the feasible range [0, total flow]; L is reported under the two published
    derivations and certificates use the larger one."""

    K: float
    L_paper: float
    L_derived: float

    @property
    def L(self) -> float:
        return max(self.L_paper, self.L_derived)


def lipschitz_constant(network: CongestionNetwork) -> LipschitzBundle:
    F = sum(f for (_s, _t, f) in network.players)
    B = max(f for (_s, _t, f) in network.players)
    K = 0.0
    for e in range(network.m):
        _, _, a, b, _ = network.edges[e]
        K = max(K, 2.0 * a * F + b, 2.0 * a)
    m = network.m
    return LipschitzBundle(K=K, L_paper=2.0 * K * m, L_derived=K * (1.0 + B) * m)


@dataclass
class ContinuousTrace:
    """Per round: flows[i] (T, |P_i|), grads[i] (T, |P_i|), total_cost (T,)."""

    network: CongestionNetwork
    eta: float
    flows: list
    grads: list
    total_cost: np.ndarray

    @property
    def T(self) -> int:
        return len(self.total_cost)


def run_continuous(network: CongestionNetwork, eta: float, T: int) -> ContinuousTrace:
    """Linearized leader dynamics: each round every player plays
    f_i * softmax(-eta * (sum of past gradients + last gradient)) over its
    paths, starting from the uniform split."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    n = network.n
    sizes = [len(p) for p in network.paths]
    cum = [np.zeros(k) for k in sizes]
    last = [np.zeros(k) for k in sizes]
    flows = [np.empty((T, k)) for k in sizes]
    grads = [np.empty((T, k)) for k in sizes]
    total_cost = np.empty(T)
    for t in range(T):
        profile = [
            network.players[i][2] * softmax(-eta * (cum[i] + last[i]))
            for i in range(n)
        ]
        gs = [gradient(network, profile, i) for i in range(n)]
        per, total = network.edge_loads(profile)
        total_cost[t] = float(sum(
            total[e] * network.latency(e, total[e]) for e in range(network.m)
        ))
        for i in range(n):
            flows[i][t] = profile[i]
            grads[i][t] = gs[i]
            cum[i] = cum[i] + gs[i]
            last[i] = gs[i]
    return ContinuousTrace(network, eta, flows, grads, total_cost)


def linearized_regret(trace: ContinuousTrace, i: int) -> float:
    """max over path vertices w* of sum_t <w_i^t - w*, grad_i^t>; an upper
    bound on the true regret because costs are convex in own flow."""
    g = trace.grads[i]
    realized = float(np.sum(trace.flows[i] * g))
    f = trace.network.players[i][2]
    best = f * float(g.sum(axis=0).min())
    return realized - best


def true_regret(trace: ContinuousTrace, i: int) -> float:
    """sum_t c_i(w^t) - min_w sum_t c_i(w, w_-i^t), the min taken over the
    scaled simplex (convex program, solved to high accuracy)."""
    net = trace.network
    T = trace.T
    k = len(net.paths[i])
    f = net.players[i][2]
    # opponents' per-edge loads each round
    others = np.zeros((T, net.m))
    for j in range(net.n):
        if j == i:
            continue
        for p_idx, path in enumerate(net.paths[j]):
            for e in path:
                others[:, e] += trace.flows[j][:, p_idx]
    # path -> edge incidence for player i
    inc = np.zeros((k, net.m))
    for p_idx, path in enumerate(net.paths[i]):
        for e in path:
            inc[p_idx, e] += 1.0
    abc = np.array([[a, b, c] for (_u, _v, a, b, c) in net.edges])

    def cum_cost(w):
        mine = w @ inc  # (m,) edge flows of player i
        tot = others + mine[None, :]
        lat = abc[:, 0] * tot**2 + abc[:, 1] * tot + abc[:, 2]
        return float(np.sum(lat @ mine))

    def cum_grad(w):
        mine = w @ inc
        tot = others + mine[None, :]
        lat = abc[:, 0] * tot**2 + abc[:, 1] * tot + abc[:, 2]
        slope = 2.0 * abc[:, 0] * tot + abc[:, 1]
        per_edge = lat.sum(axis=0) + (slope.sum(axis=0) * mine)
        return inc @ per_edge

    realized = sum(player_cost(net, [trace.flows[j][t] for j in range(net.n)], i)
                   for t in range(T))
    best = None
    starts = [np.full(k, f / k)]
    starts += [f * np.eye(k)[p] * (1 - 1e-9) + (f * 1e-9 / k) for p in range(k)]
    for x0 in starts:
        res = minimize(
            cum_cost, x0, jac=cum_grad, method="SLSQP",
            bounds=[(0.0, f)] * k,
            constraints=[{"type": "eq", "fun": lambda w: w.sum() - f,
                          "jac": lambda w: np.ones(k)}],
            options={"maxiter": 200, "ftol": 1e-12},
        )
        val = cum_cost(res.x) if res.x is not None else math.inf
        if best is None or val < best:
            best = val
    return float(realized - best)


def certify_total_regret(trace: ContinuousTrace, bundle: LipschitzBundle,
                         tol: float = 1e-6) -> Certificate:
    """Sum of linearized regrets <= n*R/eta at the prescribed step size
    eta = 1/(2 L n), with R = max_i f_i * ln |P_i|."""
    net = trace.network
    n = net.n
    eta_req = 1.0 / (2.0 * bundle.L * n)
    if abs(trace.eta - eta_req) > 1e-12 * max(1.0, eta_req):
        raise ValueError(
            f"trace was run with eta={trace.eta}, bundle prescribes {eta_req}"
        )
    R = max(net.players[i][2] * math.log(len(net.paths[i])) for i in range(n))
    total = sum(linearized_regret(trace, i) for i in range(n))
    rhs = n * R / trace.eta
    return Certificate(
        "total_linearized_regret", bool(total <= rhs + tol), total, rhs,
        {"L": bundle.L, "R": R, "eta": trace.eta},
    )
