"""Cost-minimization games and first-order regret machinery.

A cost game is a dense game whose oracle values are per-player costs in
[0, 1]; the dynamics engine feeds utility-maximizing learners 1 - c, while
``FirstOrderHedge`` is cost-native: exponential weights on cumulative cost
with a doubling schedule keyed to the best strategy's cumulative cost, so its
regret scales with the best arm's total cost rather than with T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import DEFAULT_ENUM_CAP, DenseGame, SmoothnessCertificate
from .learners import Certificate, OnlineLearner
from .regularizers import softmax

__all__ = [
    "opt_min_cost",
    "verify_cost_smoothness",
    "CostHedge",
    "FirstOrderHedge",
    "FirstOrderConstants",
    "fit_first_order_constants",
    "certify_cost_welfare",
]


def opt_min_cost(game: DenseGame, cap: int = DEFAULT_ENUM_CAP):
    """Exact min total cost over pure profiles (lexicographically first argmin)."""
    w = game.welfare_tensor(cap)
    flat = int(np.argmin(w))
    return float(w.flat[flat]), tuple(int(x) for x in np.unravel_index(flat, w.shape))


def verify_cost_smoothness(
    game: DenseGame, lam: float, mu: float, s_star,
    cap: int = DEFAULT_ENUM_CAP, tol: float = 1e-9,
) -> SmoothnessCertificate:
    """Cost-game smoothness: for every pure s,
    sum_i c_i(s*_i, s_-i) <= lam * Opt' + mu * C(s)."""
    if lam <= 0 or mu < 0:
        raise ValueError(f"need lambda > 0 and mu >= 0, got ({lam}, {mu})")
    s_star = tuple(int(x) for x in s_star)
    tensors = game.utility_tensors(cap)
    total = game.welfare_tensor(cap)
    opt, _ = opt_min_cost(game, cap)
    dev = np.zeros_like(total)
    for i in range(game.n):
        dev = dev + np.expand_dims(np.take(tensors[i], s_star[i], axis=i), axis=i)
    slack = lam * opt + mu * total - dev
    flat = int(np.argmin(slack))
    worst = tuple(int(x) for x in np.unravel_index(flat, slack.shape))
    value = float(slack.flat[flat])
    return SmoothnessCertificate(
        lam=float(lam), mu=float(mu), s_star=s_star, verified=bool(value >= -tol),
        worst_profile=worst, slack=value, opt=opt,
        poa_factor=lam * (1.0 + mu) / (mu * (1.0 - mu)) if 0 < mu < 1 else math.inf,
    )


class CostHedge(OnlineLearner):
    """Fixed-step Hedge over costs.

    Implemented as the exact complement adapter around the utility-side
    entropy leader: observing cost c feeds 1 - c to the inner learner, whose
    play softmax(eta * sum(1 - c)) equals exponential weights on cumulative
    cost by the shift invariance of softmax.  Because the complement is the
    same float expression the dynamics engine applies for utility learners in
    cost mode, the two produce bit-identical iterates.
    """

    algorithm = "cost_hedge"
    feedback = "cost"

    def __init__(self, d: int, eta: float):
        super().__init__(d)
        from .learners import FtrlLearner, ZeroPredictor
        from .regularizers import NegativeEntropy

        self.eta = float(eta)
        self.inner = FtrlLearner(d, NegativeEntropy(), eta, ZeroPredictor())

    def _play(self) -> np.ndarray:
        return self.inner.play()

    def _observe(self, c: np.ndarray) -> None:
        self.inner.observe(1.0 - c)


class FirstOrderHedge(OnlineLearner):
    """Cost-native Hedge with a first-order doubling schedule.

    Weights are proportional to exp(-eta_r * cumulative epoch cost).  The
    budget L_r starts at 1 and doubles whenever the globally best strategy's
    cumulative cost exceeds it; each breach retunes eta_r = sqrt(ln d / L_r)
    and restarts the epoch sums.  On a stream with a zero-cost strategy the
    budget never breaks, so regret stays bounded independent of T.
    """

    algorithm = "first_order_hedge"
    feedback = "cost"

    def __init__(self, d: int):
        super().__init__(d)
        self.budget = 1.0
        self.global_cum = np.zeros(d)
        self.epoch_cum = np.zeros(d)
        self.epoch = 1
        self.eta = self._tuned_eta()

    def _tuned_eta(self) -> float:
        return math.sqrt(max(math.log(self.d), 1e-12) / self.budget)

    def _play(self) -> np.ndarray:
        return softmax(-self.eta * self.epoch_cum)

    def _observe(self, c: np.ndarray) -> None:
        if c.min() < -1e-12 or c.max() > 1.0 + 1e-12:
            raise ValueError(f"costs must lie in [0,1], got [{c.min()}, {c.max()}]")
        self.global_cum = self.global_cum + c
        self.epoch_cum = self.epoch_cum + c
        best = float(self.global_cum.min())
        if best > self.budget:
            while best > self.budget:
                self.budget *= 2.0
            self.epoch += 1
            self.eta = self._tuned_eta()
            self.epoch_cum = np.zeros(self.d)


@dataclass
class FirstOrderConstants:
    """Measured constants of the first-order regret shape
    r <= A1 * sqrt(ln d * best_cumulative_cost) + A2 * ln d."""

    A1: float
    A2: float

    def bound(self, d: int, best_cost: float) -> float:
        ln_d = math.log(d)
        return self.A1 * math.sqrt(max(ln_d * best_cost, 0.0)) + self.A2 * ln_d

    def welfare_constant(self, mu: float) -> float:
        """The trace-independent constant A = A1^2 mu/(1-mu)^2 + 2 A2/(1-mu)."""
        if not 0.0 < mu < 1.0:
            raise ValueError(f"mu must lie in (0,1), got {mu}")
        return self.A1**2 * mu / (1.0 - mu) ** 2 + 2.0 * self.A2 / (1.0 - mu)


def fit_first_order_constants(observations) -> FirstOrderConstants:
    """Fit (A1, A2) over (d, best_cumulative_cost, regret) observations.

    Nonnegative least squares on the two basis terms, then a minimal uniform
    inflation so the fitted curve dominates every observation — the constants
    are an honest measured envelope, not an asserted theorem.
    """
    rows, targets = [], []
    for (d, best_cost, reg) in observations:
        ln_d = math.log(d)
        rows.append([math.sqrt(max(ln_d * best_cost, 0.0)), ln_d])
        targets.append(max(float(reg), 0.0))
    A = np.asarray(rows)
    y = np.asarray(targets)
    from scipy.optimize import nnls

    coef, _ = nnls(A, y)
    a1, a2 = float(coef[0]), float(coef[1])
    if a1 == 0.0 and a2 == 0.0:
        a2 = 1e-12
    preds = A @ np.array([a1, a2])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(preds > 0, y / np.where(preds > 0, preds, 1.0), np.inf)
    ratios = ratios[y > 0]
    inflate = float(max(1.0, ratios.max())) if ratios.size else 1.0
    if not math.isfinite(inflate):
        # some observation has positive regret but zero predicted bound;
        # fall back to per-term envelopes
        a1 = max((reg / math.sqrt(math.log(d) * bc) for (d, bc, reg) in observations
                  if bc > 0 and reg > 0), default=0.0)
        a2 = max((reg / math.log(d) for (d, _bc, reg) in observations if reg > 0),
                 default=1e-12)
        return FirstOrderConstants(a1, a2)
    return FirstOrderConstants(a1 * inflate, a2 * inflate)


def certify_cost_welfare(
    trace, smoothness: SmoothnessCertificate, constants: FirstOrderConstants,
    tol: float = 1e-9,
) -> Certificate:
    """Average-cost bound for smooth cost games with mu in (0, 1):

        (1/T) sum_t C(w^t) <= lam(1+mu)/(mu(1-mu)) * Opt' + A * n * ln d / T

    The first-order precondition (each player's regret against its deviation
    strategy s*_i obeys the measured constants) is checked first; when it
    fails the certificate is reported as vacuous (passed None), not failed.
    """
    lam, mu = smoothness.lam, smoothness.mu
    if not 0.0 < mu < 1.0:
        raise ValueError(f"the cost-welfare bound needs mu in (0,1), got {mu}")
    if not smoothness.verified:
        raise ValueError("cost-welfare bound requires a verified smoothness certificate")
    from .library import build_game

    game = build_game(trace.meta["game"])
    if trace.meta.get("mode") != "cost":
        raise ValueError("cost-welfare bound applies to cost-mode traces")
    n, T = trace.n, trace.T
    s_star = smoothness.s_star
    d_max = max(p.shape[1] for p in trace.plays)

    precondition_ok = True
    details: dict = {}
    for i in range(n):
        costs = 1.0 - trace.utilities[i]  # engine stores 1 - c
        dev_costs = np.empty(T)
        for t in range(T):
            profile = [trace.plays[j][t] for j in range(n)]
            # in cost mode the game's oracle values are the costs themselves
            dev_costs[t] = game.expected_utilities(i, profile)[s_star[i]]
        realized = float(np.sum(trace.plays[i] * costs))
        r_dev = realized - float(dev_costs.sum())
        cap = constants.bound(trace.plays[i].shape[1], float(dev_costs.sum()))
        details[f"player_{i}"] = {"regret_vs_s_star": r_dev, "first_order_cap": cap}
        if r_dev > cap + tol:
            precondition_ok = False
    avg_cost = float(trace.welfare.mean())
    rhs = (lam * (1.0 + mu) / (mu * (1.0 - mu))) * smoothness.opt \
        + constants.welfare_constant(mu) * n * math.log(d_max) / T
    if not precondition_ok:
        return Certificate("cost_welfare", None, avg_cost, rhs,
                           {"vacuous": "first-order precondition failed", **details})
    return Certificate("cost_welfare", bool(avg_cost <= rhs + tol), avg_cost, rhs, details)
