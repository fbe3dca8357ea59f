"""Concrete games and named experiments.

Random games come from a splitmix64 stream so identical seeds give identical
game bytes on every platform; matrix games embed a zero-sum game into [0, 1];
``lower_bound_experiment`` runs the multiplicative-weights-versus-best-response
construction whose regret grows with sqrt(T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .auctions import AuctionGame, AuctionSpec
from .games import DenseGame, NormalFormGame, SmoothnessCertificate, search_smoothness

__all__ = [
    "splitmix64_stream",
    "splitmix64_floats",
    "make_matrix_game",
    "make_random_game",
    "make_random_smooth_game",
    "LowerBoundResult",
    "lower_bound_experiment",
    "build_game",
]

_MASK = (1 << 64) - 1


def splitmix64_stream(seed: int):
    """Infinite stream of 64-bit splitmix64 outputs."""
    state = seed & _MASK
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        yield z ^ (z >> 31)


def splitmix64_floats(seed: int, count: int) -> list[float]:
    """``count`` floats in [0, 1) using the top 53 bits of each output."""
    gen = splitmix64_stream(seed)
    return [(next(gen) >> 11) / float(1 << 53) for _ in range(count)]


def make_matrix_game(A) -> DenseGame:
    """Two-player zero-sum game in [0,1]: row gets A[r][c], column 1 - A[r][c]."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        raise ValueError("matrix must be nonempty")
    if A.min() < 0.0 or A.max() > 1.0:
        raise ValueError(f"matrix entries must lie in [0,1], got [{A.min()}, {A.max()}]")
    return DenseGame([A, 1.0 - A], meta={"kind_detail": "matrix", "matrix": A.tolist()})


def make_random_game(n: int, dims, seed: int) -> DenseGame:
    """Dense game with independent uniform [0,1) utilities from a seeded
    splitmix64 stream (player-major order)."""
    dims = [int(d) for d in dims]
    count = n * int(np.prod(dims))
    vals = splitmix64_floats(seed, count)
    per = count // n
    tensors = [np.array(vals[i * per : (i + 1) * per]).reshape(dims) for i in range(n)]
    return DenseGame(tensors, meta={"kind_detail": "random", "seed": seed})


def make_random_smooth_game(
    n: int, d: int, lam: float, mu: float, seed: int
) -> tuple[DenseGame, SmoothnessCertificate]:
    """Random game plus the first smoothness certificate found by scanning all
    pure deviation profiles (not-found comes back as an unverified certificate,
    never an exception)."""
    game = make_random_game(n, [d] * n, seed)
    return game, search_smoothness(game, lam, mu)


# ---------------------------------------------------------------------------
# the sqrt(T) lower-bound experiment


@dataclass
class LowerBoundResult:
    """Realized regrets of Hedge against a best responder, with the closed
    forms quoted for the two matrices.

    Note: on game A the dynamics are exactly solvable and the realized regret
    equals (T/2)*(1/2 - 1/(1+e^eta)) for even T -- half of ``closed_form_A``.
    Both numbers are reported; certificates built on this experiment test the
    realized dynamics.
    """

    eta: float
    T: int
    r_game_A: float
    r_game_Aprime: float
    closed_form_A: float
    closed_form_Aprime_lb: float


def lower_bound_experiment(eta: float, T: int) -> LowerBoundResult:
    """Run Hedge(eta) as the row player against a best-responding column on
    the identity matrix A and on the single-column matrix A' = (1; 0)."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if T < 1 or T % 2:
        raise ValueError(f"T must be a positive even integer, got {T}")
    from .dynamics import regret, run
    from .learners import LearnerSpec

    specs = [LearnerSpec("hedge", eta=eta), LearnerSpec("bestresponse")]
    trace_a = run(make_matrix_game(np.eye(2)), specs, T)
    trace_ap = run(make_matrix_game(np.array([[1.0], [0.0]])), specs, T)
    e = float(np.exp(eta))
    return LowerBoundResult(
        eta=eta,
        T=T,
        r_game_A=regret(trace_a, 0),
        r_game_Aprime=regret(trace_ap, 0),
        closed_form_A=(T / 2.0) * (e - 1.0) / (e + 1.0),
        closed_form_Aprime_lb=float(
            (1.0 - math.exp(-T * eta)) / (2.0 * (1.0 - math.exp(-eta)))),
    )


# ---------------------------------------------------------------------------
# reconstruction from trace metadata


def build_game(desc: dict) -> NormalFormGame:
    """Rebuild a game from ``describe()`` output (trace metadata)."""
    kind = desc.get("kind")
    if kind == "auction":
        spec = AuctionSpec(
            n=desc["n"], m=desc["m"],
            values=np.asarray(desc["values"], dtype=float),
            bid_levels=np.asarray(desc["bid_levels"], dtype=float),
        )
        return AuctionGame(spec)
    if kind == "dense":
        detail = desc.get("kind_detail")
        if detail == "matrix":
            return make_matrix_game(np.asarray(desc["matrix"], dtype=float))
        if detail == "random":
            n, dims = desc["n"], desc["dims"]
            return make_random_game(n, dims, desc["seed"])
        if detail == "dense_csv" or desc.get("source") == "dense_csv":
            from .games import load_dense_csv

            path = desc.get("path")
            if not path:
                raise ValueError("dense CSV game metadata is missing its file path")
            return load_dense_csv(path)
        if "tensors" in desc:
            return DenseGame(
                [np.asarray(t, dtype=float) for t in desc["tensors"]],
                scale=desc.get("scale", 1.0), shift=desc.get("shift", 0.0),
            )
    raise ValueError(f"cannot rebuild game from metadata {desc!r}")
