"""Black-box doubling wrapper: restart a parametric learner on a schedule of
variation budgets so it is simultaneously fast in self-play and safe against
adversaries.

The wrapped learner tracks the global utility variation sum (never reset);
whenever it reaches the current budget B_r the budget doubles, the step size
is retuned to min(alpha / sqrt(B_r), eta_star), and a fresh inner learner
replaces the old one (its predictor history and cumulative sums start over).
"""

from __future__ import annotations

import math

import numpy as np

from .learners import Certificate, OnlineLearner

__all__ = ["DoublingWrapper", "wrap_doubling", "parametric_constants",
           "certify_robust", "recommended_eta_star"]


class DoublingWrapper(OnlineLearner):
    """Wrap ``inner_factory(eta) -> learner`` with the doubling schedule.

    ``alpha`` is the parametric constant of the inner learner's regret bound
    (regret <= alpha/eta + ...), ``eta_star`` caps the step size.  Epoch state
    is exposed for certificates: ``epoch``, ``budget``, ``eta``,
    ``variation_total`` and the ``epoch_log`` of (round, variation_total,
    old_budget) entries at each switch.
    """

    algorithm = "robust"

    def __init__(self, inner_factory, alpha: float, eta_star: float, d: int):
        super().__init__(d)
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if eta_star <= 0:
            raise ValueError(f"eta_star must be positive, got {eta_star}")
        self.inner_factory = inner_factory
        self.alpha = float(alpha)
        self.eta_star = float(eta_star)
        self.epoch = 1
        self.budget = 1.0
        self.variation_total = 0.0
        self.epoch_log: list[dict] = []
        self.eta = self._tuned_eta()
        self.inner = inner_factory(self.eta)
        if self.inner.d != d:
            raise ValueError("inner factory produced a learner of the wrong dimension")

    def _tuned_eta(self) -> float:
        return min(self.alpha / math.sqrt(self.budget), self.eta_star)

    def _play(self) -> np.ndarray:
        return self.inner.play()

    def _observe(self, u: np.ndarray) -> None:
        self.inner.observe(u)
        # base-class instrumentation has already accumulated this round's
        # ||du||_inf^2 into sum_du2; that global sum is the trigger quantity
        self.variation_total = self.sum_du2
        if self.variation_total >= self.budget:
            self.epoch_log.append({
                "round": self.t + 1,
                "variation_total": self.variation_total,
                "budget": self.budget,
            })
            self.epoch += 1
            self.budget *= 2.0
            self.eta = self._tuned_eta()
            self.inner = self.inner_factory(self.eta)


class _RobustSpec:
    """Metadata stand-in so wrapped learners serialize without a fixed eta
    (the reporter must not treat them as constant-step learners)."""

    def __init__(self, inner, alpha, eta_star):
        self.inner = inner
        self.alpha = alpha
        self.eta_star = eta_star

    def to_dict(self) -> dict:
        return {
            "algorithm": "robust",
            "alpha": self.alpha,
            "eta_star": self.eta_star,
            "inner": self.inner.to_dict(),
        }


def parametric_constants(spec, d: int):
    """The eta-free (alpha, beta, gamma, norm_pair) of a step-size learner's
    variation bound — its declared constants evaluated at eta = 1."""
    from .learners import LearnerSpec, declared_variation_bound

    probe = spec.resolved()
    probe = LearnerSpec(probe.algorithm, 1.0, probe.regularizer,
                        probe.predictor, probe.predictor_param)
    b = declared_variation_bound(probe, d)
    if b is None:
        raise ValueError(
            f"algorithm {spec.algorithm!r} declares no variation bound to wrap")
    return b.alpha, b.beta, b.gamma, b.norm_pair


def wrap_doubling(spec, d: int, eta_star: float, alpha: float | None = None) -> DoublingWrapper:
    """Build a doubling wrapper around the learner family ``spec`` describes.

    ``spec.eta`` is ignored — the wrapper owns the step size.  ``alpha``
    defaults to the parametric regret constant (the regularizer's range).
    """
    from .learners import LearnerSpec, make_learner

    base = spec.resolved()
    if base.algorithm not in ("ftrl", "omd"):
        raise ValueError(
            f"doubling wrapper needs a step-size learner, got {spec.algorithm!r}")
    if alpha is None:
        alpha = parametric_constants(spec, d)[0]

    def factory(eta, _b=base):
        return make_learner(
            LearnerSpec(_b.algorithm, eta, _b.regularizer, _b.predictor,
                        _b.predictor_param), d)

    wrapper = DoublingWrapper(factory, alpha, eta_star, d)
    wrapper.spec = _RobustSpec(spec, float(alpha), float(eta_star))
    return wrapper


def certify_robust(
    utilities, plays, alpha: float, beta: float, gamma: float, eta_star: float,
    comparator=None, tol: float = 1e-9, norm_pair: str = "l1_linf",
) -> Certificate:
    """Dual bound for a doubling-wrapped learner: regret must not exceed the
    minimum of

        ln T * (2 + alpha/eta* + (2 + eta*·beta) * sum ||du||_*^2)
             - (gamma/eta*) * sum ||dw||^2                         (variation form)
        ln T * (1 + alpha/eta* + (1 + alpha·beta) * sqrt(2 sum ||du||_*^2))
                                                                   (sqrt-T form)

    alpha, beta, gamma are the inner learner's parametric constants (the
    eta-free ones: regret <= alpha/eta + eta*beta*sum_du - (gamma/eta)*sum_dw),
    and ``norm_pair`` picks the norms those constants were derived under.
    """
    from .learners import variation_sums

    utilities = np.asarray(utilities, dtype=float)
    plays = np.asarray(plays, dtype=float)
    T = len(utilities)
    if T < 2:
        raise ValueError("the wrapped-learner bound needs T >= 2")
    total = utilities.sum(axis=0)
    if comparator is None:
        comparator = np.zeros(utilities.shape[1])
        comparator[int(np.argmax(total))] = 1.0
    lhs = float(comparator @ total - np.sum(plays * utilities))
    sum_du2, sum_dw2 = variation_sums(utilities, plays, norm_pair)
    log_t = math.log(T)
    rhs_variation = log_t * (2.0 + alpha / eta_star + (2.0 + eta_star * beta) * sum_du2) \
        - (gamma / eta_star) * sum_dw2
    rhs_sqrt = log_t * (1.0 + alpha / eta_star
                        + (1.0 + alpha * beta) * math.sqrt(2.0 * sum_du2))
    rhs = min(rhs_variation, rhs_sqrt)
    return Certificate(
        "robust_bound", bool(lhs <= rhs + tol), lhs, rhs,
        {
            "rhs_variation": rhs_variation, "rhs_sqrt": rhs_sqrt,
            "sum_du2": sum_du2, "sum_dw2": sum_dw2,
            "alpha": alpha, "beta": beta, "gamma": gamma, "eta_star": eta_star,
        },
    )


def recommended_eta_star(mode: str, n: int, beta: float, gamma: float, T: int) -> float:
    """Step-size cap for the wrapper: 'sum_regret' keeps self-play sum of
    regrets logarithmic, 'individual' targets the T^{1/4} individual rate."""
    if n < 2:
        raise ValueError(f"need at least two players, got n={n}")
    if T < 2:
        raise ValueError(f"T must be >= 2, got {T}")
    if mode == "sum_regret":
        return gamma / ((2.0 + beta) * (n - 1) ** 2 * math.log(T))
    if mode == "individual":
        return float(T) ** -0.25
    raise ValueError(f"mode must be 'sum_regret' or 'individual', got {mode!r}")
