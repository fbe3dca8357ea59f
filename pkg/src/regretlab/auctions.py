"""Simultaneous single-unit-demand first-price auction.

Each bidder picks one item and one bid level; the highest bid on an item wins
(ties go to the lowest player index) and pays its own bid.  Strategy indices
are item-major: index = item * len(bid_levels) + bid_index.

Welfare is the expected allocation value — payments are transfers to a
strategyless seller, so they cancel out of welfare but do appear in the
smoothness residual (seller revenue).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .games import DEFAULT_ENUM_CAP, NormalFormGame, _check_profile, brute_force_opt

__all__ = ["AuctionSpec", "AuctionGame", "make_auction"]


@dataclass
class AuctionSpec:
    """n bidders, m items, values[i][j] >= 0, sorted positive bid levels."""

    n: int
    m: int
    values: np.ndarray  # (n, m)
    bid_levels: np.ndarray = field(default_factory=lambda: np.arange(1.0, 21.0))

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.bid_levels = np.asarray(self.bid_levels, dtype=float)
        if self.n < 1 or self.m < 1 or self.bid_levels.size == 0:
            raise ValueError("need n >= 1, m >= 1 and at least one bid level")
        if self.values.shape != (self.n, self.m):
            raise ValueError(
                f"values must have shape ({self.n}, {self.m}), got {self.values.shape}"
            )
        if np.any(self.values < 0):
            raise ValueError("item values must be nonnegative")
        if np.any(np.diff(self.bid_levels) <= 0) or self.bid_levels[0] <= 0:
            raise ValueError("bid levels must be sorted, positive and distinct")


def uniform_values(n: int, m: int, v: float) -> np.ndarray:
    return np.full((n, m), float(v))


def masked_values(n: int, m: int, v: float, seed: int) -> np.ndarray:
    """Player-specific item subsets: each (player, item) value is v with
    probability 1/2 else 0, from a seeded splitmix64 stream."""
    from .library import splitmix64_floats

    bits = splitmix64_floats(seed, n * m)
    return np.where(np.asarray(bits).reshape(n, m) < 0.5, float(v), 0.0)


class AuctionGame(NormalFormGame):
    kind = "auction"

    def __init__(self, spec: AuctionSpec):
        self.spec = spec
        self.m = spec.m
        self.nb = len(spec.bid_levels)
        d = self.m * self.nb
        max_v = float(spec.values.max())
        max_bid = float(spec.bid_levels[-1])
        # raw utilities live in [-max_bid, max_v] (overbidding is allowed)
        super().__init__(spec.n, [d] * spec.n, scale=max_v + max_bid, shift=-max_bid)
        self._dense_cache: dict | None = None

    # -- helpers -------------------------------------------------------------
    def decode(self, strategy_index: int) -> tuple[int, float]:
        """(item, bid) for a pure strategy index."""
        j, b = divmod(int(strategy_index), self.nb)
        return j, float(self.spec.bid_levels[b])

    def _loss_mass(self, profile, i: int):
        """For each opponent k: (m, nb) matrices of P[k bids >= level] and
        P[k bids > level] on each item; returns the win-probability matrix of
        player i over (item, bid) cells."""
        win = np.ones((self.m, self.nb))
        for k in range(self.n):
            if k == i:
                continue
            wk = profile[k].reshape(self.m, self.nb)
            at_least = np.cumsum(wk[:, ::-1], axis=1)[:, ::-1]  # P[>= level]
            if k < i:  # k would win the tie, so any bid >= ours beats us
                lose = at_least
            else:  # we win ties against higher indices
                lose = np.concatenate(
                    [at_least[:, 1:], np.zeros((self.m, 1))], axis=1
                )
            win = win * (1.0 - lose)
        return win

    # -- oracles ---------------------------------------------------------------
    def raw_expected_utilities(self, i: int, profile) -> np.ndarray:
        win = self._loss_mass(profile, i)
        payoff = self.spec.values[i][:, None] - self.spec.bid_levels[None, :]
        return (payoff * win).ravel()

    def welfare_mixed(self, profile) -> float:
        profile = _check_profile(self, profile)
        total = 0.0
        for i in range(self.n):
            win = self._loss_mass(profile, i)
            wi = profile[i].reshape(self.m, self.nb)
            total += float(np.sum(self.spec.values[i][:, None] * wi * win))
        return total

    def _resolve(self, s):
        """Winner of each item at the pure profile s; returns dict item -> (i, bid)."""
        winners: dict[int, tuple[int, float]] = {}
        for i, si in enumerate(s):
            j, bid = self.decode(si)
            if j not in winners or bid > winners[j][1]:
                winners[j] = (i, bid)  # ties keep the earlier (lower) index
        return winners

    def pure_utilities(self, s) -> np.ndarray:
        winners = self._resolve(s)
        u = np.zeros(self.n)
        for j, (i, bid) in winners.items():
            u[i] = self.spec.values[i, j] - bid
        return u

    def welfare_pure(self, s) -> float:
        winners = self._resolve(s)
        return float(sum(self.spec.values[i, j] for j, (i, _) in winners.items()))

    def _densify(self, cap: int):
        self.check_cap(cap)
        if self._dense_cache is None:
            tensors = [np.zeros(self.dims) for _ in range(self.n)]
            welfare = np.zeros(self.dims)
            for s in np.ndindex(*self.dims):
                u = self.pure_utilities(s)
                for i in range(self.n):
                    tensors[i][s] = u[i]
                welfare[s] = self.welfare_pure(s)
            self._dense_cache = {"tensors": tensors, "welfare": welfare}
        return self._dense_cache

    def utility_tensors(self, cap: int = DEFAULT_ENUM_CAP) -> list[np.ndarray]:
        return self._densify(cap)["tensors"]

    def welfare_tensor(self, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
        return self._densify(cap)["welfare"]

    # -- optimum ---------------------------------------------------------------
    def assignment_opt(self, cap: int = DEFAULT_ENUM_CAP):
        """Exact max welfare over pure profiles.

        With >= 2 bid levels (or n <= m) the optimum equals the max-weight
        bidder-item matching: winners are distinct across items, so every pure
        profile's welfare is the value of an injective partial assignment, and
        any such assignment is realizable (matched bidders at the top level,
        everyone else at the bottom level).  Degenerate single-bid-level
        crowded auctions fall back to enumeration.
        """
        if self.nb < 2 and self.n > self.m:
            return brute_force_opt(self, cap)
        rows, cols = linear_sum_assignment(self.spec.values, maximize=True)
        opt = float(self.spec.values[rows, cols].sum())
        profile = []
        assigned = dict(zip(rows.tolist(), cols.tolist()))
        for i in range(self.n):
            if i in assigned:
                profile.append(assigned[i] * self.nb + (self.nb - 1))
            else:
                profile.append(0)  # item 0 at the lowest level; never wins a tie-free item
        return opt, tuple(profile)

    def describe(self) -> dict:
        return {
            "kind": self.kind, "n": self.n, "dims": self.dims,
            "scale": self.scale, "shift": self.shift, "m": self.m,
            "values": self.spec.values.tolist(),
            "bid_levels": self.spec.bid_levels.tolist(),
        }


def make_auction(spec: AuctionSpec) -> AuctionGame:
    return AuctionGame(spec)
