"""Repeated simultaneous play with exact expected-utility feedback.

``run`` drives T rounds, records every mixed strategy, utility vector
(normalized units), raw welfare, and the per-player variation sums; ``report``
turns a trace into regrets plus every certificate the trace's metadata
supports.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .games import NormalFormGame, SmoothnessCertificate, poa_welfare_bound
from .learners import (
    BestResponseLearner,
    Certificate,
    LearnerSpec,
    OnlineLearner,
    VariationBound,
    certify_stability,
    certify_variation_bound,
    declared_variation_bound,
    make_learner,
)

__all__ = [
    "Trace",
    "RegretReport",
    "run",
    "regret",
    "regret_series",
    "variation_terms",
    "coupling_margin",
    "report",
    "write_trace_csv",
    "read_trace_csv",
]


@dataclass
class Trace:
    """Full record of one run.

    plays[i] and utilities[i] are (T, d_i) arrays (normalized units);
    welfare is (T,) in raw units; du2_cum / dw2_cum are (n, T) running sums of
    ||u^t - u^{t-1}||_inf^2 (u^0 = 0) and ||w^t - w^{t-1}||_1^2 (w^0 = w^1).
    """

    plays: list
    utilities: list
    welfare: np.ndarray
    du2_cum: np.ndarray
    dw2_cum: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.plays)

    @property
    def T(self) -> int:
        return len(self.welfare)


def _build_learners(game: NormalFormGame, specs):
    """Instantiate learners; best-response players get a per-round oracle slot
    the engine fills before asking them to play."""
    learners: list[OnlineLearner] = []
    slots: list[list] = []
    for i, spec in enumerate(specs):
        if isinstance(spec, OnlineLearner):
            learners.append(spec)
            slots.append(None)
        elif spec.algorithm == "bestresponse":
            slot = [np.zeros(game.dims[i])]
            learners.append(make_learner(spec, game.dims[i], utility_source=lambda s=slot: s[0]))
            slots.append(slot)
        else:
            learners.append(make_learner(spec, game.dims[i]))
            slots.append(None)
    return learners, slots


def run(game: NormalFormGame, specs, T: int, mode: str = "utility") -> Trace:
    """Play T rounds.  ``specs`` holds one LearnerSpec or prebuilt learner per
    player.  In cost mode the game's oracle is read as costs; learners that
    maximize utility receive 1 - c while cost-native learners see c directly.

    Best-response players respond to the current round's strategies of every
    distribution player (and the previous round's strategies of any other
    responder), so the dynamics stay simultaneous and well defined.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if len(specs) != game.n:
        raise ValueError(f"{len(specs)} learner specs for {game.n} players")
    if mode not in ("utility", "cost"):
        raise ValueError(f"mode must be 'utility' or 'cost', got {mode!r}")
    learners, slots = _build_learners(game, specs)
    n = game.n
    responders = [i for i, L in enumerate(learners) if isinstance(L, BestResponseLearner)]
    dist_players = [i for i in range(n) if i not in responders]

    plays = [np.empty((T, game.dims[i])) for i in range(n)]
    utilities = [np.empty((T, game.dims[i])) for i in range(n)]
    welfare = np.empty(T)
    du2 = np.zeros((n, T))
    dw2 = np.zeros((n, T))
    prev_u = [np.zeros(game.dims[i]) for i in range(n)]
    prev_w = [None] * n

    profile = [np.full(game.dims[i], 1.0 / game.dims[i]) for i in range(n)]
    for t in range(T):
        current = list(profile)  # responders: previous round (uniform at t=0)
        for i in dist_players:
            current[i] = learners[i].play()
        for i in responders:
            ref = list(current)
            for j in responders:
                if j != i:
                    ref[j] = profile[j]
            u_now = game.expected_utilities(i, ref)
            if mode == "cost":
                u_now = 1.0 - u_now
            slots[i][0] = u_now
            current[i] = learners[i].play()

        raws = [game.expected_utilities(i, current) for i in range(n)]
        for i in range(n):
            utilities[i][t] = 1.0 - raws[i] if mode == "cost" else raws[i]
            plays[i][t] = current[i]
        welfare[t] = game.welfare_mixed(current)

        for i in range(n):
            u = utilities[i][t]
            if getattr(learners[i], "feedback", "utility") == "cost":
                # cost-native learners get the costs themselves: the raw
                # oracle value in cost mode, the exact complement otherwise
                feed = raws[i] if mode == "cost" else 1.0 - u
            else:
                feed = u
            learners[i].observe(feed)
            pw = current[i] if prev_w[i] is None else prev_w[i]
            step_u = float(np.abs(u - prev_u[i]).max()) ** 2
            step_w = float(np.abs(current[i] - pw).sum()) ** 2
            du2[i, t] = (du2[i, t - 1] if t else 0.0) + step_u
            dw2[i, t] = (dw2[i, t - 1] if t else 0.0) + step_w
            prev_u[i] = u
            prev_w[i] = current[i]
        profile = current

    meta = {
        "game": game.describe(),
        "learners": [_spec_dict(s) for s in specs],
        "T": T,
        "mode": mode,
    }
    return Trace(plays, utilities, welfare, du2, dw2, meta)


def _spec_dict(s) -> dict:
    if isinstance(s, LearnerSpec):
        return s.to_dict()
    sp = getattr(s, "spec", None)
    if sp is not None:
        return sp.to_dict()
    return {"algorithm": type(s).__name__}


# ---------------------------------------------------------------------------
# regret machinery


def regret(trace: Trace, i: int) -> float:
    """max over pure strategies of the comparator gain, normalized units."""
    u = trace.utilities[i]
    best = float(u.sum(axis=0).max())
    realized = float(np.sum(trace.plays[i] * u))
    return best - realized


def regret_series(trace: Trace, i: int) -> np.ndarray:
    """r_i(t) for every prefix t = 1..T (normalized units)."""
    u = trace.utilities[i]
    cum = np.cumsum(u, axis=0)
    realized = np.cumsum(np.sum(trace.plays[i] * u, axis=1))
    return cum.max(axis=1) - realized


def variation_terms(trace: Trace, i: int) -> tuple[float, float]:
    """(sum ||du_i||_inf^2, sum ||dw_i||_1^2) over the whole trace."""
    return float(trace.du2_cum[i, -1]), float(trace.dw2_cum[i, -1])


def coupling_margin(trace: Trace) -> float:
    """min over players and rounds t >= 2 of
    sum_{j != i} ||dw_j||_1 - ||du_i||_inf  (nonnegative when the coupling
    between utility variation and opponent strategy variation holds)."""
    n, T = trace.n, trace.T
    if T < 2:
        return 0.0
    dw = np.stack([
        np.sum(np.abs(np.diff(trace.plays[j], axis=0)), axis=1) for j in range(n)
    ])  # (n, T-1), rounds 2..T
    margin = np.inf
    for i in range(n):
        du = np.max(np.abs(np.diff(trace.utilities[i], axis=0)), axis=1)
        others = dw.sum(axis=0) - dw[i]
        margin = min(margin, float((others - du).min()))
    return margin


@dataclass
class RegretReport:
    regrets: list  # normalized units
    regrets_raw: list
    sum_regret: float
    max_regret: float
    cce_gap: float
    avg_welfare: float  # raw units
    certificates: list
    extras: dict = field(default_factory=dict)

    def failed(self) -> list:
        return [c for c in self.certificates if c.passed is False]


def _bound_from_dict(d: dict | None) -> VariationBound | None:
    if not d:
        return None
    return VariationBound(d["alpha"], d["beta"], d["gamma"], d.get("norm_pair", "l1_linf"))


def report(trace: Trace, smoothness: SmoothnessCertificate | None = None,
           tol: float = 1e-9) -> RegretReport:
    """Compute regrets and evaluate every certificate the trace supports.

    Certificates are attached when their preconditions hold: the per-player
    variation bound whenever a learner declares constants; the sum-regret
    bound when every player declares constants with beta <= gamma/(n-1)^2
    (beta <= gamma/(d (n-1)^2) for l2 constants); the individual T^{1/4} rate
    when eta matches its tuning; play stability for optimistic-FTRL players;
    the welfare floor when a verified smoothness certificate is supplied.
    """
    n, T = trace.n, trace.T
    scale = trace.meta.get("game", {}).get("scale", 1.0)
    regrets = [regret(trace, i) for i in range(n)]
    regrets_raw = [r * scale for r in regrets]
    certificates: list[Certificate] = []
    extras: dict = {}

    specs = [LearnerSpec.from_dict(s) if s and "eta" in s else None
             for s in trace.meta.get("learners", [None] * n)]
    bounds = [declared_variation_bound(s, trace.plays[i].shape[1]) if s else None
              for i, s in enumerate(specs)]

    for i, b in enumerate(bounds):
        if b is None:
            continue
        cert = certify_variation_bound(trace.utilities[i], trace.plays[i], b, tol=tol)
        cert.name = f"variation_bound[{i}]"
        certificates.append(cert)

    # constant sum-of-regrets bound
    if all(b is not None for b in bounds) and n >= 2:
        ok = all(
            b.beta <= b.gamma / (((trace.plays[i].shape[1] if b.norm_pair == "l2_l2" else 1))
                                 * (n - 1) ** 2) + 1e-12
            for i, b in enumerate(bounds)
        )
        if ok:
            alpha = max(b.alpha for b in bounds)
            certificates.append(Certificate(
                "sum_regret_bound", bool(sum(regrets) <= n * alpha + tol),
                float(sum(regrets)), n * alpha, {"alpha": alpha},
            ))

    # per-player stability and the T^{1/4} individual rate
    for i, s in enumerate(specs):
        if s is None:
            continue
        rs = s.resolved()
        if rs.algorithm != "ftrl" or rs.eta is None:
            continue
        certificates.append(_renamed(certify_stability(trace.plays[i], rs.eta, tol),
                                     f"play_stability[{i}]"))
        b = bounds[i]
        if b is not None:
            kappa = 2.0 * rs.eta
            certificates.append(Certificate(
                f"regret_vs_stability[{i}]",
                bool(regrets[i] <= b.alpha + b.beta * kappa**2 * (n - 1) ** 2 * T + tol),
                regrets[i], b.alpha + b.beta * kappa**2 * (n - 1) ** 2 * T,
                {"kappa": kappa},
            ))
            eta_rate = (n - 1) ** -0.5 * T ** -0.25 if n >= 2 else None
            if eta_rate is not None and abs(rs.eta - eta_rate) <= 1e-9 * max(1.0, eta_rate):
                from .regularizers import get_regularizer

                R = get_regularizer(rs.regularizer).r_ftrl(trace.plays[i].shape[1])
                rhs = (R + 4.0) * math.sqrt(n - 1) * T**0.25
                certificates.append(Certificate(
                    f"individual_rate[{i}]", bool(regrets[i] <= rhs + tol),
                    regrets[i], rhs, {"eta": rs.eta},
                ))

    # mirror-descent players: report the largest play step (informational)
    for i, s in enumerate(specs):
        if s is not None and s.resolved().algorithm == "omd" and T >= 2:
            steps = np.sum(np.abs(np.diff(trace.plays[i], axis=0)), axis=1)
            extras[f"omd_max_step[{i}]"] = float(steps.max())

    avg_welfare = float(trace.welfare.mean())
    if smoothness is not None:
        if not smoothness.verified:
            raise ValueError("welfare floor requires a verified smoothness certificate")
        floor = poa_welfare_bound(smoothness.lam, smoothness.mu, smoothness.opt,
                                  regrets_raw, T)
        certificates.append(Certificate(
            "welfare_floor", bool(avg_welfare >= floor - tol), floor, avg_welfare,
            {"lambda": smoothness.lam, "mu": smoothness.mu, "opt": smoothness.opt},
        ))

    return RegretReport(
        regrets=regrets, regrets_raw=regrets_raw,
        sum_regret=float(sum(regrets)), max_regret=float(max(regrets)),
        cce_gap=float(max(regrets)) / T, avg_welfare=avg_welfare,
        certificates=certificates, extras=extras,
    )


def _renamed(cert: Certificate, name: str) -> Certificate:
    cert.name = name
    return cert


# ---------------------------------------------------------------------------
# trace CSV interchange


def write_trace_csv(trace: Trace, path=None) -> str:
    """Serialize a trace.  First line carries the metadata as a JSON comment;
    then one row per (round, player) with the pinned column layout.  Floats go
    through repr so reruns are byte-identical."""
    out = io.StringIO()
    out.write("# meta=" + json.dumps(trace.meta, sort_keys=True) + "\n")
    max_d = max(p.shape[1] for p in trace.plays)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["t", "player", "regret_to_date", "welfare", "du2_cum", "dw2_cum"]
        + [f"strategy_{k}" for k in range(max_d)]
    )
    series = [regret_series(trace, i) for i in range(trace.n)]
    for t in range(trace.T):
        for i in range(trace.n):
            row = [t + 1, i, repr(float(series[i][t])), repr(float(trace.welfare[t])),
                   repr(float(trace.du2_cum[i, t])), repr(float(trace.dw2_cum[i, t]))]
            row += [repr(float(x)) for x in trace.plays[i][t]]
            row += [""] * (max_d - trace.plays[i].shape[1])
            writer.writerow(row)
    text = out.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def read_trace_csv(text_or_path) -> Trace:
    """Rebuild a trace from its CSV.  Utilities are recomputed exactly from
    the stored strategies through the game described in the metadata line, so
    every report quantity is recoverable from the file alone."""
    if isinstance(text_or_path, str) and "\n" not in text_or_path:
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = text_or_path
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# meta="):
        raise ValueError("trace file is missing its metadata line")
    meta = json.loads(lines[0][len("# meta="):])
    from .library import build_game

    game = build_game(meta["game"])
    mode = meta.get("mode", "utility")
    rows = list(csv.reader(lines[1:]))
    header, data = rows[0], rows[1:]
    n = game.n
    T = meta["T"]
    if len(data) != n * T:
        raise ValueError(f"expected {n * T} data rows, found {len(data)}")
    plays = [np.empty((T, game.dims[i])) for i in range(n)]
    stored_regret = np.empty((n, T))
    welfare = np.empty(T)
    du2 = np.empty((n, T))
    dw2 = np.empty((n, T))
    for row in data:
        t, i = int(row[0]) - 1, int(row[1])
        stored_regret[i, t] = float(row[2])
        welfare[t] = float(row[3])
        du2[i, t] = float(row[4])
        dw2[i, t] = float(row[5])
        plays[i][t] = [float(x) for x in row[6 : 6 + game.dims[i]]]
    utilities = [np.empty((T, game.dims[i])) for i in range(n)]
    for t in range(T):
        profile = [plays[i][t] for i in range(n)]
        for i in range(n):
            u = game.expected_utilities(i, profile)
            utilities[i][t] = 1.0 - u if mode == "cost" else u
    trace = Trace(plays, utilities, welfare, du2, dw2, meta)
    trace.meta["stored_regret_series"] = stored_regret.tolist()
    return trace
