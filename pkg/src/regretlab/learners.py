"""Online learners over the simplex with a uniform play/observe contract.

Each learner plays a mixed strategy once per round, then observes the exact
expected-utility vector for that round.  Instrumentation tracks the two
variation sums that every regret certificate consumes:

    sum ||u^t - u^{t-1}||_inf^2   with u^0 = 0,
    sum ||w^t - w^{t-1}||_1^2     with w^0 = w^1 (first round contributes 0).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .regularizers import NegativeEntropy, get_regularizer, softmax

__all__ = [
    "Certificate",
    "VariationBound",
    "LearnerSpec",
    "OnlineLearner",
    "FtrlLearner",
    "OmdLearner",
    "BestResponseLearner",
    "make_learner",
    "certify_variation_bound",
    "certify_stability",
    "certify_prox_inequality",
]


@dataclass
class Certificate:
    """Outcome of one mechanically checked inequality.

    ``passed`` is None when the check's precondition did not apply
    (vacuous), True/False otherwise.  ``lhs <= rhs + tol`` is the claim.
    """

    name: str
    passed: bool | None
    lhs: float
    rhs: float
    details: dict = field(default_factory=dict)


@dataclass
class VariationBound:
    """Constants (alpha, beta, gamma) of the variation-bounded regret property:

        regret <= alpha + beta * sum ||u^t - u^{t-1}||_*^2
                        - gamma * sum ||w^t - w^{t-1}||^2

    ``norm_pair`` records the primal/dual pairing the constants were derived
    under ("l1_linf" or "l2_l2").
    """

    alpha: float
    beta: float
    gamma: float
    norm_pair: str = "l1_linf"

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0 or self.gamma <= 0:
            raise ValueError(
                f"variation-bound constants must be positive, got "
                f"({self.alpha}, {self.beta}, {self.gamma})"
            )

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "norm_pair": self.norm_pair,
        }


# ---------------------------------------------------------------------------
# predictors


class ZeroPredictor:
    kind = "none"

    def predict(self, d: int) -> float:
        return 0.0

    def update(self, u: np.ndarray) -> None:
        pass


class LastUtility:
    kind = "last"

    def __init__(self):
        self._last = None

    def predict(self, d: int):
        return np.zeros(d) if self._last is None else self._last

    def update(self, u: np.ndarray) -> None:
        self._last = u


class WindowAverage:
    """Average of the last H utilities, zero-padding rounds before the start
    (the divisor is always H)."""

    kind = "window"

    def __init__(self, H: int):
        if H < 1 or int(H) != H:
            raise ValueError(f"window length must be a positive integer, got {H}")
        self.H = int(H)
        self._buf = deque(maxlen=self.H)

    def predict(self, d: int):
        if not self._buf:
            return np.zeros(d)
        return sum(self._buf) / self.H

    def update(self, u: np.ndarray) -> None:
        self._buf.append(u)


class GeometricDiscount:
    """Geometrically discounted average of all past utilities.

    M^t = sum_{tau=0}^{t-1} delta^{-tau} u^tau / sum_{tau=0}^{t-1} delta^{-tau}
    with u^0 = 0, computed through the overflow-free recurrences
    N <- delta*N + u and D <- delta*D + 1 (both sides scaled by delta^{t-1}).
    """

    kind = "geometric"

    def __init__(self, delta: float):
        if not 0.0 < delta < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {delta}")
        self.delta = float(delta)
        self._num = None  # starts at u^0 = 0
        self._den = 1.0

    def predict(self, d: int):
        if self._num is None:
            return np.zeros(d)
        return self._num / self._den

    def update(self, u: np.ndarray) -> None:
        if self._num is None:
            self._num = np.array(u, dtype=float)
        else:
            self._num = self.delta * self._num + u
        self._den = self.delta * self._den + 1.0


def _make_predictor(kind: str, param):
    if kind == "none":
        return ZeroPredictor()
    if kind == "last":
        return LastUtility()
    if kind == "window":
        return WindowAverage(int(param))
    if kind == "geometric":
        return GeometricDiscount(float(param))
    raise ValueError(f"unknown predictor kind {kind!r}")


# ---------------------------------------------------------------------------
# learners


class OnlineLearner:
    """Base class enforcing the play/observe alternation and instrumentation."""

    feedback = "utility"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError(f"strategy count must be >= 1, got {d}")
        self.d = d
        self.t = 0  # completed rounds
        self._pending = None
        self._prev_play = None
        self._prev_u = np.zeros(d)
        self.sum_du2 = 0.0
        self.sum_dw2 = 0.0
        self.declared_bound: VariationBound | None = None

    def play(self) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError(f"play() called twice in round {self.t + 1}")
        w = self._play()
        self._pending = w
        return w

    def observe(self, u) -> None:
        if self._pending is None:
            raise RuntimeError(f"observe() called before play() in round {self.t + 1}")
        u = np.asarray(u, dtype=float)
        if u.shape != (self.d,):
            raise ValueError(
                f"utility vector has shape {u.shape}, learner expects ({self.d},)"
            )
        w = self._pending
        prev_w = w if self._prev_play is None else self._prev_play
        self.sum_dw2 += float(np.abs(w - prev_w).sum()) ** 2
        self.sum_du2 += float(np.abs(u - self._prev_u).max()) ** 2
        self._observe(u)
        self._prev_play = w
        self._prev_u = u
        self._pending = None
        self.t += 1

    def _play(self) -> np.ndarray:
        raise NotImplementedError

    def _observe(self, u: np.ndarray) -> None:
        raise NotImplementedError


class FtrlLearner(OnlineLearner):
    """Optimistic follow-the-regularized-leader.

    Plays argmax_w <w, G + M^t> - R(w)/eta where G is the cumulative utility
    and M^t the predictor.  With a zero predictor this is plain Hedge (for the
    entropy regularizer) / lazy projected ascent (Euclidean).
    """

    algorithm = "ftrl"

    def __init__(self, d: int, regularizer, eta: float, predictor):
        super().__init__(d)
        if eta <= 0.0:
            raise ValueError(f"eta must be positive, got {eta}")
        self.reg = regularizer
        self.eta = float(eta)
        self.predictor = predictor
        self.cumulative = np.zeros(d)

    def _play(self) -> np.ndarray:
        return self.reg.ftrl_argmax(self.cumulative + self.predictor.predict(self.d), self.eta)

    def _observe(self, u: np.ndarray) -> None:
        self.cumulative = self.cumulative + u
        self.predictor.update(u)


class OmdLearner(OnlineLearner):
    """Optimistic mirror descent with secondary sequence g^t.

    Plays w^t = prox(M^t, g^{t-1}); updates g^t = prox(u^t, g^{t-1}).  The
    entropy instance keeps g in log space (the chained prox steps telescope to
    exponential weights), which is exactly the prox recursion but immune to
    underflow on long runs; the Euclidean instance stores g directly.

    Histories (w, g, M, u) are retained for the prox-inequality diagnostic.
    """

    algorithm = "omd"

    def __init__(self, d: int, regularizer, eta: float, predictor):
        super().__init__(d)
        if eta <= 0.0:
            raise ValueError(f"eta must be positive, got {eta}")
        self.reg = regularizer
        self.eta = float(eta)
        self.predictor = predictor
        self._entropic = isinstance(regularizer, NegativeEntropy)
        g0 = regularizer.initial_point(d)
        if self._entropic:
            self._log_g = np.log(g0)
        else:
            self._g = g0
        self.g_history = [g0]
        self.w_history: list[np.ndarray] = []
        self.m_history: list[np.ndarray] = []
        self.u_history: list[np.ndarray] = []

    @property
    def g(self) -> np.ndarray:
        return softmax(self._log_g) if self._entropic else self._g

    def _play(self) -> np.ndarray:
        m = self.predictor.predict(self.d)
        if np.isscalar(m):
            m = np.zeros(self.d)
        if self._entropic:
            w = softmax(self._log_g + self.eta * m)
        else:
            w = self.reg.prox_step(self._g, m, self.eta)
        self.m_history.append(np.asarray(m, dtype=float))
        self.w_history.append(w)
        return w

    def _observe(self, u: np.ndarray) -> None:
        if self._entropic:
            z = self._log_g + self.eta * u
            self._log_g = z - np.log(np.sum(np.exp(z - z.max()))) - z.max()
        else:
            self._g = self.reg.prox_step(self._g, u, self.eta)
        self.g_history.append(self.g)
        self.u_history.append(u)
        self.predictor.update(u)


class BestResponseLearner(OnlineLearner):
    """Plays a point mass on the strategy maximizing its current expected
    utility, supplied each round by ``utility_source`` (wired by the dynamics
    engine).  Ties break toward the lowest strategy index."""

    algorithm = "bestresponse"

    def __init__(self, d: int, utility_source):
        super().__init__(d)
        if utility_source is None:
            raise ValueError(
                "best-response learner requires an opponent-utility oracle "
                "(run it through the dynamics engine)"
            )
        self.utility_source = utility_source

    def _play(self) -> np.ndarray:
        u = np.asarray(self.utility_source(), dtype=float)
        w = np.zeros(self.d)
        w[int(np.argmax(u))] = 1.0
        return w

    def _observe(self, u: np.ndarray) -> None:
        pass


# ---------------------------------------------------------------------------
# specs and construction


@dataclass
class LearnerSpec:
    """Declarative learner description (also the config-file vocabulary).

    ``algorithm``: hedge | optimistic_hedge | oftrl | omd | bestresponse |
    first_order_hedge.  ``predictor``: none | last | window | geometric with
    ``predictor_param`` carrying H or the discount.
    """

    algorithm: str
    eta: float | None = None
    regularizer: str = "entropy"
    predictor: str = "none"
    predictor_param: float | None = None

    def resolved(self) -> "LearnerSpec":
        """Expand the hedge shortcuts into their ftrl form."""
        if self.algorithm == "hedge":
            return LearnerSpec("ftrl", self.eta, "entropy", "none", None)
        if self.algorithm == "optimistic_hedge":
            return LearnerSpec("ftrl", self.eta, "entropy", "last", None)
        if self.algorithm == "oftrl":
            return LearnerSpec("ftrl", self.eta, self.regularizer,
                               self.predictor, self.predictor_param)
        return self

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "eta": self.eta,
            "regularizer": self.regularizer,
            "predictor": self.predictor,
            "predictor_param": self.predictor_param,
        }

    @staticmethod
    def from_dict(dd: dict) -> "LearnerSpec":
        return LearnerSpec(
            dd["algorithm"], dd.get("eta"), dd.get("regularizer", "entropy"),
            dd.get("predictor", "none"), dd.get("predictor_param"),
        )


def declared_variation_bound(spec: LearnerSpec, d: int) -> VariationBound | None:
    """The (alpha, beta, gamma) constants each optimistic variant carries.

    ftrl+last:      (R_ftrl/eta, eta,              1/(4 eta))
    ftrl+window H:  (R_ftrl/eta, eta H^2,          1/(4 eta))
    ftrl+geometric: (R_ftrl/eta, eta/(1-delta)^3,  1/(8 eta))
    omd+last:       (R_omd/eta,  eta,              1/(8 eta))

    Plain (zero-predictor) learners and best response carry none.
    """
    s = spec.resolved()
    if s.eta is None or s.algorithm not in ("ftrl", "omd"):
        return None
    reg = get_regularizer(s.regularizer)
    pair = "l1_linf" if reg.primal_norm == "l1" else "l2_l2"
    eta = float(s.eta)
    if s.algorithm == "ftrl":
        if s.predictor == "last":
            return VariationBound(reg.r_ftrl(d) / eta, eta, 1.0 / (4.0 * eta), pair)
        if s.predictor == "window":
            H = int(s.predictor_param)
            return VariationBound(reg.r_ftrl(d) / eta, eta * H * H, 1.0 / (4.0 * eta), pair)
        if s.predictor == "geometric":
            delta = float(s.predictor_param)
            return VariationBound(
                reg.r_ftrl(d) / eta, eta / (1.0 - delta) ** 3, 1.0 / (8.0 * eta), pair
            )
    elif s.algorithm == "omd" and s.predictor == "last":
        return VariationBound(reg.r_omd(d) / eta, eta, 1.0 / (8.0 * eta), pair)
    return None


def make_learner(spec: LearnerSpec, d: int, utility_source=None) -> OnlineLearner:
    """Instantiate a learner from its spec; the first play is always the
    regularizer's initial (uniform) point."""
    s = spec.resolved()
    if s.algorithm == "bestresponse":
        learner = BestResponseLearner(d, utility_source)
    elif s.algorithm == "first_order_hedge":
        from .costmode import FirstOrderHedge

        learner = FirstOrderHedge(d)
    elif s.algorithm in ("ftrl", "omd"):
        if s.eta is None:
            raise ValueError(f"{spec.algorithm} requires eta")
        reg = get_regularizer(s.regularizer)
        predictor = _make_predictor(s.predictor, s.predictor_param)
        cls = FtrlLearner if s.algorithm == "ftrl" else OmdLearner
        learner = cls(d, reg, s.eta, predictor)
    else:
        raise ValueError(f"unknown algorithm {spec.algorithm!r}")
    learner.declared_bound = declared_variation_bound(spec, d)
    learner.spec = spec
    return learner


# ---------------------------------------------------------------------------
# certificates


def variation_sums(
    utilities: np.ndarray, plays: np.ndarray, norm_pair: str = "l1_linf"
) -> tuple[float, float]:
    """(sum ||du||_*^2, sum ||dw||^2) under the u^0 = 0, w^0 = w^1 conventions.

    The norms follow the constants' derivation: "l1_linf" measures du in
    l-infinity and dw in l1; "l2_l2" measures both in l2 (self-dual).
    """
    if norm_pair not in ("l1_linf", "l2_l2"):
        raise ValueError(f"unknown norm pair {norm_pair!r}")
    utilities = np.asarray(utilities, dtype=float)
    plays = np.asarray(plays, dtype=float)
    if len(utilities) == 0:
        return 0.0, 0.0
    du = np.diff(utilities, axis=0, prepend=np.zeros((1, utilities.shape[1])))
    dw = np.diff(plays, axis=0)
    if norm_pair == "l1_linf":
        sum_du2 = float(np.sum(np.max(np.abs(du), axis=1) ** 2))
        sum_dw2 = float(np.sum(np.sum(np.abs(dw), axis=1) ** 2))
    else:
        sum_du2 = float(np.sum(np.sum(du * du, axis=1)))
        sum_dw2 = float(np.sum(np.sum(dw * dw, axis=1)))
    return sum_du2, sum_dw2


def certify_variation_bound(
    utilities, plays, bound: VariationBound, comparator=None, tol: float = 1e-9
) -> Certificate:
    """Check regret <= alpha + beta*sum||du||^2 - gamma*sum||dw||^2 against a
    fixed comparator (best vertex when none is given)."""
    utilities = np.asarray(utilities, dtype=float)
    plays = np.asarray(plays, dtype=float)
    if utilities.shape != plays.shape:
        raise ValueError("utility and play sequences must have equal shapes")
    if len(utilities) == 0:
        return Certificate("variation_bound", True, 0.0, bound.alpha,
                           {"sum_du2": 0.0, "sum_dw2": 0.0, **bound.to_dict()})
    total = utilities.sum(axis=0)
    if comparator is None:
        comparator = np.zeros(utilities.shape[1])
        comparator[int(np.argmax(total))] = 1.0
    else:
        comparator = np.asarray(comparator, dtype=float)
    lhs = float(comparator @ total - np.sum(plays * utilities))
    sum_du2, sum_dw2 = variation_sums(utilities, plays, bound.norm_pair)
    rhs = bound.alpha + bound.beta * sum_du2 - bound.gamma * sum_dw2
    return Certificate(
        "variation_bound", bool(lhs <= rhs + tol), lhs, rhs,
        {"sum_du2": sum_du2, "sum_dw2": sum_dw2, **bound.to_dict()},
    )


def certify_stability(plays, eta: float, tol: float = 1e-9) -> Certificate:
    """Consecutive-play stability ||w^{t+1} - w^t||_1 <= 2*eta, every round."""
    plays = np.asarray(plays, dtype=float)
    if len(plays) < 2:
        return Certificate("play_stability", True, 0.0, 2.0 * eta, {})
    steps = np.sum(np.abs(np.diff(plays, axis=0)), axis=1)
    worst = float(steps.max())
    return Certificate(
        "play_stability", bool(worst <= 2.0 * eta + tol), worst, 2.0 * eta,
        {"argmax_round": int(steps.argmax()) + 1},
    )


def certify_prox_inequality(learner: OmdLearner, tol: float = 1e-9) -> Certificate:
    """Mirror-descent intermediate bound on the learner's own history:

        regret <= R_omd/eta + sum ||u-M||_inf ||w-g||_1
                  - (1/2eta) sum (||w-g^t||_1^2 + ||w-g^{t-1}||_1^2)
    """
    if not isinstance(learner, OmdLearner):
        raise TypeError("prox inequality applies to mirror-descent learners only")
    us = np.asarray(learner.u_history, dtype=float)
    ws = np.asarray(learner.w_history[: len(us)], dtype=float)
    ms = np.asarray(learner.m_history[: len(us)], dtype=float)
    gs = np.asarray(learner.g_history, dtype=float)  # g^0 .. g^T
    T = len(us)
    if T == 0:
        return Certificate("prox_inequality", True, 0.0,
                           learner.reg.r_omd(learner.d) / learner.eta, {})
    total = us.sum(axis=0)
    best = float(total.max())
    lhs = best - float(np.sum(ws * us))
    w_minus_g = np.sum(np.abs(ws - gs[1 : T + 1]), axis=1)
    w_minus_gprev = np.sum(np.abs(ws - gs[:T]), axis=1)
    cross = float(np.sum(np.max(np.abs(us - ms), axis=1) * w_minus_g))
    quad = float(np.sum(w_minus_g**2 + w_minus_gprev**2))
    rhs = learner.reg.r_omd(learner.d) / learner.eta + cross - quad / (2.0 * learner.eta)
    return Certificate("prox_inequality", bool(lhs <= rhs + tol), lhs, rhs,
                       {"cross_term": cross, "quadratic_term": quad})
