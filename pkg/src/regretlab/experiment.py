"""Config-driven experiment runner.

``run_experiment`` executes a parsed ExperimentSpec end to end: build the
game, run the main arm (and the optional baseline arm), evaluate every
certificate the config claims, and write the artifacts — trace CSVs, report
CSVs, SVG plots, and a manifest.json.  Everything in a report CSV is
recomputable from the matching trace CSV alone; ``full_report`` does exactly
that for the CLI's ``report`` subcommand.

Artifacts land under ``$REGRETLAB_OUT`` (default: the current directory) in
the subdirectory named by [outputs] dir.
"""

from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from .auctions import AuctionGame, AuctionSpec, masked_values, uniform_values
from .config import ExperimentSpec
from .costmode import (
    certify_cost_welfare,
    fit_first_order_constants,
    verify_cost_smoothness,
)
from .dynamics import (
    RegretReport,
    Trace,
    regret,
    regret_series,
    report,
    run,
    write_trace_csv,
)
from .games import load_dense_csv, search_smoothness, verify_smoothness
from .learners import Certificate
from .library import build_game, make_matrix_game, make_random_game
from .robust import certify_robust, parametric_constants, wrap_doubling
from .svgplot import line_plot, write_svg

__all__ = [
    "OUTPUT_ROOT_ENV",
    "build_game_from_config",
    "run_experiment",
    "full_report",
    "write_report_csv",
    "bid_trajectory",
    "mean_bid_oscillation",
    "regret_plot",
    "bids_plot",
]

OUTPUT_ROOT_ENV = "REGRETLAB_OUT"


def build_game_from_config(game: dict):
    """Instantiate the game a config's [game] section describes."""
    gtype = game["type"]
    if gtype == "auction":
        if game.get("value_mask_seed") is not None:
            values = masked_values(game["bidders"], game["items"], game["value"],
                                   game["value_mask_seed"])
        else:
            values = uniform_values(game["bidders"], game["items"], game["value"])
        return AuctionGame(AuctionSpec(game["bidders"], game["items"], values,
                                       np.asarray(game["bids"], dtype=float)))
    if gtype == "matrix":
        return make_matrix_game(np.asarray(game["matrix"], dtype=float))
    if gtype == "random":
        return make_random_game(game["players"], game["dims"], game["seed"])
    if gtype == "dense_csv":
        return load_dense_csv(game["path"])
    raise ValueError(f"unknown game type {gtype!r}")


def _declares_bound(spec) -> bool:
    rs = spec.resolved()
    return (rs.algorithm == "ftrl" and rs.predictor in ("last", "window", "geometric")) \
        or (rs.algorithm == "omd" and rs.predictor == "last")


def _arm_players(game, specs, robust):
    """Per-player learner list for the engine; wrapped when [robust] asks and
    the player's family declares variation-bound constants."""
    if robust is None:
        return list(specs)
    players = []
    for i, s in enumerate(specs):
        if _declares_bound(s):
            players.append(wrap_doubling(s, game.dims[i], robust.eta_star,
                                         robust.alpha))
        else:
            players.append(s)
    return players


# ---------------------------------------------------------------------------
# reporting (trace-only, so the CLI can redo it from the CSV)


def full_report(trace: Trace, tol: float = 1e-9) -> RegretReport:
    """dynamics.report plus every certificate the trace's metadata claims:
    the smoothness claim itself, the welfare floor (utility mode) or the
    first-order cost-welfare bound (cost mode), and the wrapped-learner dual
    bound for doubling-wrapped players."""
    mode = trace.meta.get("mode", "utility")
    claim = trace.meta.get("smoothness")
    smooth_cert = None
    claim_cert = None
    if claim:
        game = build_game(trace.meta["game"])
        lam, mu = claim["lambda"], claim["mu"]
        s_star = claim.get("s_star")
        if mode == "cost":
            if s_star is None:
                raise ValueError("cost-mode smoothness claims need game.s_star")
            smooth_cert = verify_cost_smoothness(game, lam, mu, tuple(s_star))
        elif s_star is not None:
            smooth_cert = verify_smoothness(game, lam, mu, tuple(s_star))
        else:
            smooth_cert = search_smoothness(game, lam, mu)
        claim_cert = Certificate(
            "smoothness_claim", bool(smooth_cert.verified),
            smooth_cert.slack, 0.0,
            {"lambda": lam, "mu": mu, "s_star": list(smooth_cert.s_star),
             "worst_profile": list(smooth_cert.worst_profile),
             "opt": smooth_cert.opt},
        )

    rep = report(trace,
                 smoothness=smooth_cert
                 if (smooth_cert is not None and smooth_cert.verified
                     and mode == "utility") else None,
                 tol=tol)
    if claim_cert is not None:
        rep.certificates.append(claim_cert)

    if mode == "cost" and smooth_cert is not None and smooth_cert.verified \
            and 0.0 < smooth_cert.mu < 1.0:
        constants = _fit_cost_constants(trace)
        rep.certificates.append(certify_cost_welfare(trace, smooth_cert, constants,
                                                     tol=tol))
        rep.extras["first_order_A1"] = constants.A1
        rep.extras["first_order_A2"] = constants.A2

    for i, ls in enumerate(trace.meta.get("learners", [])):
        if not isinstance(ls, dict) or ls.get("algorithm") != "robust":
            continue
        from .learners import LearnerSpec

        inner = LearnerSpec.from_dict(ls["inner"])
        _, beta, gamma, pair = parametric_constants(inner, trace.plays[i].shape[1])
        cert = certify_robust(trace.utilities[i], trace.plays[i], ls["alpha"],
                              beta, gamma, ls["eta_star"], tol=tol, norm_pair=pair)
        cert.name = f"robust_bound[{i}]"
        rep.certificates.append(cert)
    return rep


def _fit_cost_constants(trace: Trace):
    observations = []
    for i in range(trace.n):
        costs = 1.0 - trace.utilities[i]
        best = float(costs.sum(axis=0).min())
        observations.append((trace.plays[i].shape[1], best, regret(trace, i)))
    return fit_first_order_constants(observations)


def write_report_csv(rep: RegretReport, path=None) -> str:
    """Stable five-column summary: kind,name,value,value2,status."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["kind", "name", "value", "value2", "status"])
    for i, (r_norm, r_raw) in enumerate(zip(rep.regrets, rep.regrets_raw)):
        writer.writerow(["regret", f"player_{i}", repr(r_norm), repr(r_raw), ""])
    for name, value in (("sum_regret", rep.sum_regret),
                        ("max_regret", rep.max_regret),
                        ("cce_gap", rep.cce_gap),
                        ("avg_welfare", rep.avg_welfare)):
        writer.writerow(["summary", name, repr(value), "", ""])
    for cert in rep.certificates:
        status = "vacuous" if cert.passed is None else ("pass" if cert.passed else "fail")
        writer.writerow(["certificate", cert.name, repr(float(cert.lhs)),
                         repr(float(cert.rhs)), status])
    for key in sorted(rep.extras):
        writer.writerow(["extra", key, repr(float(rep.extras[key])), "", ""])
    text = out.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# auction trajectories (Figure-2-style diagnostics)


def _auction_layout(trace: Trace):
    game = trace.meta.get("game", {})
    if game.get("kind") != "auction":
        raise ValueError("bid trajectories need an auction trace")
    levels = np.asarray(game["bid_levels"], dtype=float)
    return int(game["m"]), levels


def bid_trajectory(trace: Trace, player: int, item: int):
    """Per-round (prob_on_item, conditional_expected_bid) for one player/item.

    prob = total strategy mass on the item; the conditional bid is the
    mass-weighted bid level given the item was chosen (0 where prob is 0)."""
    m, levels = _auction_layout(trace)
    nb = len(levels)
    if not 0 <= player < trace.n:
        raise ValueError(f"player index {player} out of range for {trace.n} players")
    if not 0 <= item < m:
        raise ValueError(f"item index {item} out of range for {m} items")
    block = trace.plays[player][:, item * nb:(item + 1) * nb]
    prob = block.sum(axis=1)
    weighted = block @ levels
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(prob > 0.0, weighted / np.where(prob > 0.0, prob, 1.0), 0.0)
    return prob, cond


def mean_bid_oscillation(trace: Trace, player: int) -> float:
    """Mean over rounds of the L1 change in the player's unconditional
    expected-bid-per-item vector — the sawtooth size."""
    m, levels = _auction_layout(trace)
    nb = len(levels)
    w = trace.plays[player]
    expected = np.stack([w[:, j * nb:(j + 1) * nb] @ levels for j in range(m)], axis=1)
    if len(expected) < 2:
        return 0.0
    return float(np.mean(np.sum(np.abs(np.diff(expected, axis=0)), axis=1)))


# ---------------------------------------------------------------------------
# plots


def regret_plot(traces: dict) -> str:
    """Sum-of-regrets and max-individual-regret vs t, one pair of polylines
    per arm.  ``traces`` maps arm label -> Trace."""
    series = []
    for label, trace in traces.items():
        per_player = np.stack([regret_series(trace, i) for i in range(trace.n)])
        ts = list(range(1, trace.T + 1))
        series.append((f"{label}: sum of regrets", ts, per_player.sum(axis=0)))
        series.append((f"{label}: max regret", ts, per_player.max(axis=0)))
    return line_plot(series, title="Regret growth", xlabel="round",
                     ylabel="cumulative regret (normalized)")


def bids_plot(trace: Trace) -> str:
    """Per-player conditional expected bid on the player's modal item, plus
    per-round raw expected utility."""
    m, levels = _auction_layout(trace)
    nb = len(levels)
    game = trace.meta["game"]
    scale, shift = float(game.get("scale", 1.0)), float(game.get("shift", 0.0))
    ts = list(range(1, trace.T + 1))
    series = []
    for i in range(trace.n):
        w = trace.plays[i]
        mass = np.array([w[:, j * nb:(j + 1) * nb].sum() for j in range(m)])
        item = int(np.argmax(mass))
        _prob, cond = bid_trajectory(trace, i, item)
        series.append((f"p{i} bid on item {item}", ts, cond))
        realized = shift + scale * np.sum(trace.plays[i] * trace.utilities[i], axis=1)
        series.append((f"p{i} utility", ts, realized))
    return line_plot(series, title="Bids and per-round utility", xlabel="round",
                     ylabel="bid level / raw utility")


# ---------------------------------------------------------------------------
# the runner


def _out_dir(spec: ExperimentSpec) -> str:
    root = os.environ.get(OUTPUT_ROOT_ENV, ".")
    return os.path.join(root, spec.outputs.get("dir") or "experiment")


def run_experiment(spec: ExperimentSpec, out_dir: str | None = None) -> dict:
    """Execute a validated spec and write all artifacts.

    Returns the manifest (also written as manifest.json).  The manifest's
    exit_code is 0 on success and 2 when any claimed certificate fails;
    artifacts are written either way."""
    if spec.game["type"] == "network":
        return _run_network_experiment(spec, out_dir)
    game = build_game_from_config(spec.game)
    n = game.n
    problems = [f"[learner.{i}] refers to player {i} but the game has {n} players"
                for i in spec.overrides if i >= n]
    if spec.smoothness and spec.smoothness.get("s_star") is not None:
        s_star = spec.smoothness["s_star"]
        if len(s_star) != n:
            problems.append(f"game.s_star names {len(s_star)} strategies for "
                            f"{n} players")
        elif any(x >= d for x, d in zip(s_star, game.dims)):
            problems.append("game.s_star has an out-of-range strategy index")
    if spec.mode == "cost" and spec.smoothness \
            and spec.smoothness.get("s_star") is None:
        problems.append("cost-mode smoothness claims need game.s_star")
    if problems:
        raise ValueError("; ".join(problems))

    out = out_dir or _out_dir(spec)
    os.makedirs(out, exist_ok=True)

    specs = spec.specs_for(n)
    trace = run(game, _arm_players(game, specs, spec.robust), spec.T, spec.mode)
    trace.meta["seed"] = spec.seed
    if spec.smoothness:
        trace.meta["smoothness"] = spec.smoothness
    rep = full_report(trace)

    artifacts = {"trace": os.path.join(out, "trace.csv"),
                 "report": os.path.join(out, "report.csv")}
    write_trace_csv(trace, artifacts["trace"])
    write_report_csv(rep, artifacts["report"])

    arms = {"main": trace}
    baseline_rep = None
    if spec.baseline is not None:
        baseline_trace = run(game, [spec.baseline] * n, spec.T, spec.mode)
        baseline_trace.meta["seed"] = spec.seed
        if spec.smoothness:
            baseline_trace.meta["smoothness"] = spec.smoothness
        baseline_rep = full_report(baseline_trace)
        artifacts["trace_baseline"] = os.path.join(out, "trace_baseline.csv")
        artifacts["report_baseline"] = os.path.join(out, "report_baseline.csv")
        write_trace_csv(baseline_trace, artifacts["trace_baseline"])
        write_report_csv(baseline_rep, artifacts["report_baseline"])
        arms["baseline"] = baseline_trace

    artifacts["regret_svg"] = os.path.join(out, "regret.svg")
    write_svg(regret_plot(arms), artifacts["regret_svg"])
    if spec.game["type"] == "auction":
        artifacts["bids_svg"] = os.path.join(out, "bids.svg")
        write_svg(bids_plot(trace), artifacts["bids_svg"])

    def _cert_status(r):
        return {c.name: ("vacuous" if c.passed is None
                         else ("pass" if c.passed else "fail"))
                for c in r.certificates}

    failed = bool(rep.failed()) or bool(baseline_rep and baseline_rep.failed())
    manifest = {
        "out_dir": out,
        "artifacts": artifacts,
        "summary": {
            "T": spec.T,
            "mode": spec.mode,
            "regrets": rep.regrets,
            "sum_regret": rep.sum_regret,
            "max_regret": rep.max_regret,
            "cce_gap": rep.cce_gap,
            "avg_welfare": rep.avg_welfare,
            "certificates": _cert_status(rep),
        },
        "exit_code": 2 if failed else 0,
    }
    if baseline_rep is not None:
        manifest["baseline_summary"] = {
            "regrets": baseline_rep.regrets,
            "sum_regret": baseline_rep.sum_regret,
            "certificates": _cert_status(baseline_rep),
        }
    artifacts["manifest"] = os.path.join(out, "manifest.json")
    with open(artifacts["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# splittable-routing experiments


def _run_network_experiment(spec: ExperimentSpec, out_dir: str | None) -> dict:
    from .continuous import (
        certify_total_regret,
        linearized_regret,
        lipschitz_constant,
        parse_network,
        player_cost,
        run_continuous,
        true_regret,
    )

    with open(spec.game["path"], "r", encoding="utf-8") as fh:
        network = parse_network(fh.read())
    bundle = lipschitz_constant(network)
    eta_tuned = 1.0 / (2.0 * bundle.L * network.n)
    eta = spec.learner.eta if spec.learner.eta is not None else eta_tuned
    trace = run_continuous(network, eta, spec.T)

    out = out_dir or _out_dir(spec)
    os.makedirs(out, exist_ok=True)
    n = network.n
    linearized = [linearized_regret(trace, i) for i in range(n)]
    true = [true_regret(trace, i) for i in range(n)]
    cert = None
    if abs(eta - eta_tuned) <= 1e-12 * max(1.0, eta_tuned):
        cert = certify_total_regret(trace, bundle)

    costs = np.empty((n, spec.T))
    for t in range(spec.T):
        profile = [trace.flows[i][t] for i in range(n)]
        for i in range(n):
            costs[i, t] = player_cost(network, profile, i)

    meta = {"game": {"kind": "network", "path": spec.game["path"],
                     "players": n, "paths": [len(p) for p in network.paths]},
            "eta": eta, "T": spec.T, "seed": spec.seed, "mode": "routing"}
    artifacts = {"trace": os.path.join(out, "flows.csv"),
                 "report": os.path.join(out, "report.csv"),
                 "costs_svg": os.path.join(out, "costs.svg")}
    max_k = max(len(p) for p in network.paths)
    buf = io.StringIO()
    buf.write("# meta=" + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "player", "cost", "total_cost"]
                    + [f"flow_{k}" for k in range(max_k)])
    for t in range(spec.T):
        for i in range(n):
            row = [t + 1, i, repr(float(costs[i, t])), repr(float(trace.total_cost[t]))]
            row += [repr(float(x)) for x in trace.flows[i][t]]
            row += [""] * (max_k - len(network.paths[i]))
            writer.writerow(row)
    with open(artifacts["trace"], "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())

    rbuf = io.StringIO()
    writer = csv.writer(rbuf, lineterminator="\n")
    writer.writerow(["kind", "name", "value", "value2", "status"])
    for i in range(n):
        writer.writerow(["regret", f"player_{i}", repr(linearized[i]),
                         repr(true[i]), ""])
    writer.writerow(["summary", "sum_linearized_regret", repr(float(sum(linearized))),
                     "", ""])
    writer.writerow(["summary", "avg_total_cost",
                     repr(float(trace.total_cost.mean())), "", ""])
    writer.writerow(["summary", "lipschitz_L", repr(bundle.L), "", ""])
    writer.writerow(["summary", "eta", repr(float(eta)), "", ""])
    if cert is not None:
        writer.writerow(["certificate", cert.name, repr(float(cert.lhs)),
                         repr(float(cert.rhs)), "pass" if cert.passed else "fail"])
    with open(artifacts["report"], "w", encoding="utf-8") as fh:
        fh.write(rbuf.getvalue())

    ts = list(range(1, spec.T + 1))
    series = [(f"player {i} cost", ts, costs[i]) for i in range(n)]
    series.append(("total cost", ts, trace.total_cost))
    write_svg(line_plot(series, title="Routing costs", xlabel="round",
                        ylabel="cost"), artifacts["costs_svg"])

    manifest = {
        "out_dir": out,
        "artifacts": artifacts,
        "summary": {
            "T": spec.T, "mode": "routing", "eta": eta,
            "linearized_regrets": linearized, "true_regrets": true,
            "sum_linearized_regret": float(sum(linearized)),
            "avg_total_cost": float(trace.total_cost.mean()),
            "certificates": {} if cert is None else
            {cert.name: "pass" if cert.passed else "fail"},
        },
        "exit_code": 2 if (cert is not None and cert.passed is False) else 0,
    }
    artifacts["manifest"] = os.path.join(out, "manifest.json")
    with open(artifacts["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
