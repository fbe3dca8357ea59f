"""Finite normal-form games with exact expected-utility oracles.

Utilities are stored raw and exposed to learners in normalized [0, 1] units
through the affine map ``normalized = (raw - shift) / scale``; welfare and
the brute-force optimum stay in raw units (reports convert where needed).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "EnumerationCapError",
    "NormalFormGame",
    "DenseGame",
    "SmoothnessCertificate",
    "brute_force_opt",
    "verify_smoothness",
    "search_smoothness",
    "poa_welfare_bound",
    "load_dense_csv",
    "dump_dense_csv",
    "DEFAULT_ENUM_CAP",
]

DEFAULT_ENUM_CAP = 10**7


class EnumerationCapError(RuntimeError):
    """Raised instead of silently approximating when a brute-force scan would
    exceed the enumeration cap."""


def _check_profile(game: "NormalFormGame", profile, skip: int | None = None) -> list:
    if len(profile) != game.n:
        raise ValueError(f"profile has {len(profile)} strategies, game has {game.n} players")
    out = []
    for j, w in enumerate(profile):
        if skip is not None and j == skip:
            out.append(None)
            continue
        w = np.asarray(w, dtype=float)
        if w.shape != (game.dims[j],):
            raise ValueError(
                f"player {j}: strategy has shape {w.shape}, expected ({game.dims[j]},)"
            )
        if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"player {j}: strategy is not on the simplex")
        out.append(w)
    return out


class NormalFormGame:
    """Base interface; concrete games implement the raw-unit oracles."""

    kind = "abstract"

    def __init__(self, n: int, dims, scale: float = 1.0, shift: float = 0.0):
        self.n = int(n)
        self.dims = [int(d) for d in dims]
        if self.n < 1 or len(self.dims) != self.n or min(self.dims) < 1:
            raise ValueError(f"bad game shape: n={n}, dims={dims}")
        if scale <= 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.scale = float(scale)
        self.shift = float(shift)

    # -- raw-unit oracles (implemented by subclasses) -----------------------
    def raw_expected_utilities(self, i: int, profile) -> np.ndarray:
        raise NotImplementedError

    def welfare_mixed(self, profile) -> float:
        """Expected welfare (raw units) under the product distribution."""
        raise NotImplementedError

    def pure_utilities(self, s) -> np.ndarray:
        """Raw utility of every player at the pure profile s."""
        raise NotImplementedError

    def welfare_pure(self, s) -> float:
        raise NotImplementedError

    def utility_tensors(self, cap: int = DEFAULT_ENUM_CAP) -> list[np.ndarray]:
        """Per-player raw utility tensors over all pure profiles (capped)."""
        raise NotImplementedError

    def welfare_tensor(self, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    # -- shared machinery ----------------------------------------------------
    @property
    def profile_count(self) -> int:
        return math.prod(self.dims)

    def check_cap(self, cap: int) -> None:
        if self.profile_count > cap:
            raise EnumerationCapError(
                f"{self.profile_count} pure profiles exceed the enumeration cap {cap}; "
                f"refusing to approximate"
            )

    def normalize(self, raw):
        return (np.asarray(raw, dtype=float) - self.shift) / self.scale

    def denormalize(self, norm):
        return np.asarray(norm, dtype=float) * self.scale + self.shift

    def expected_utilities(self, i: int, profile) -> np.ndarray:
        """Exact expected utility of each of player i's strategies against the
        opponents' mixed profile (entry i ignored), normalized units."""
        if not 0 <= i < self.n:
            raise ValueError(f"player index {i} out of range for n={self.n}")
        profile = _check_profile(self, profile, skip=i)
        u = self.normalize(self.raw_expected_utilities(i, profile))
        if u.min() < -1e-12 or u.max() > 1.0 + 1e-12:
            raise AssertionError(
                f"normalized utilities escape [0,1]: [{u.min()}, {u.max()}]"
            )
        return u


class DenseGame(NormalFormGame):
    """Game given by explicit per-player utility tensors (raw units)."""

    kind = "dense"

    def __init__(self, tensors, scale: float = 1.0, shift: float = 0.0, meta: dict | None = None):
        tensors = [np.asarray(t, dtype=float) for t in tensors]
        n = len(tensors)
        dims = tensors[0].shape
        for t in tensors:
            if t.shape != dims or t.ndim != n:
                raise ValueError("all utility tensors must share the shape d_1 x ... x d_n")
        super().__init__(n, dims, scale, shift)
        lo, hi = min(t.min() for t in tensors), max(t.max() for t in tensors)
        if lo < shift - 1e-12 or hi > shift + scale + 1e-12:
            raise ValueError(
                f"raw utilities [{lo}, {hi}] escape the declared range "
                f"[{shift}, {shift + scale}]"
            )
        self.tensors = tensors
        self._welfare = sum(tensors)
        self.meta = dict(meta or {})

    def raw_expected_utilities(self, i: int, profile) -> np.ndarray:
        # contract opponent axes from the last one down so earlier axis
        # indices stay valid
        t = self.tensors[i]
        for j in range(self.n - 1, -1, -1):
            if j == i:
                continue
            t = np.tensordot(t, profile[j], axes=([j], [0]))
        return t

    def welfare_mixed(self, profile) -> float:
        profile = _check_profile(self, profile)
        t = self._welfare
        for j in range(self.n - 1, -1, -1):
            t = np.tensordot(t, profile[j], axes=([j], [0]))
        return float(t)

    def pure_utilities(self, s) -> np.ndarray:
        s = tuple(int(x) for x in s)
        return np.array([t[s] for t in self.tensors])

    def welfare_pure(self, s) -> float:
        return float(self._welfare[tuple(int(x) for x in s)])

    def utility_tensors(self, cap: int = DEFAULT_ENUM_CAP) -> list[np.ndarray]:
        self.check_cap(cap)
        return self.tensors

    def welfare_tensor(self, cap: int = DEFAULT_ENUM_CAP) -> np.ndarray:
        self.check_cap(cap)
        return self._welfare

    def describe(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "dims": self.dims,
             "scale": self.scale, "shift": self.shift}
        d.update(self.meta)
        if "kind_detail" not in d and "source" not in d:
            # no reconstruction recipe: embed the payoffs so traces stay
            # self-contained
            d["tensors"] = [t.tolist() for t in self.tensors]
        return d


@dataclass
class SmoothnessCertificate:
    """Result of checking the welfare-smoothness condition for (lam, mu, s_star):

        for every pure s:  sum_i u_i(s*_i, s_-i) + residual(s) >= lam*Opt - mu*W(s)

    where residual(s) = W(s) - sum_i u_i(s) (zero whenever welfare is exactly
    the utility sum; for auctions it is the seller's revenue).  ``slack`` is
    the minimum over s of lhs - rhs; verified iff slack >= -1e-9.
    """

    lam: float
    mu: float
    s_star: tuple | None
    verified: bool
    worst_profile: tuple | None
    slack: float
    opt: float
    poa_factor: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam, "mu": self.mu,
            "s_star": None if self.s_star is None else list(self.s_star),
            "verified": self.verified,
            "worst_profile": None if self.worst_profile is None else list(self.worst_profile),
            "slack": self.slack, "opt": self.opt, "poa_factor": self.poa_factor,
        }


def brute_force_opt(game: NormalFormGame, cap: int = DEFAULT_ENUM_CAP):
    """Exact max welfare over pure profiles (raw units) and its
    lexicographically first argmax.  Refuses above the cap."""
    w = game.welfare_tensor(cap)
    flat = int(np.argmax(w))  # first maximizer in C order = lexicographically first
    return float(w.flat[flat]), tuple(int(x) for x in np.unravel_index(flat, w.shape))


def _slack_tensor(game, tensors, welfare, lam, mu, opt, s_star):
    dev = np.zeros_like(welfare)
    for i in range(game.n):
        ti = np.take(tensors[i], int(s_star[i]), axis=i)
        dev = dev + np.expand_dims(ti, axis=i)
    residual = welfare - sum(tensors)
    return dev + residual - lam * opt + mu * welfare


def verify_smoothness(
    game: NormalFormGame, lam: float, mu: float, s_star,
    cap: int = DEFAULT_ENUM_CAP, tol: float = 1e-9,
) -> SmoothnessCertificate:
    """Brute-force check of the smoothness condition at a candidate deviation
    profile s_star (raw units)."""
    if lam <= 0 or mu < 0:
        raise ValueError(f"need lambda > 0 and mu >= 0, got ({lam}, {mu})")
    s_star = tuple(int(x) for x in s_star)
    if len(s_star) != game.n or any(not 0 <= s_star[j] < game.dims[j] for j in range(game.n)):
        raise ValueError(f"s_star {s_star} is not a pure profile of this game")
    tensors = game.utility_tensors(cap)
    welfare = game.welfare_tensor(cap)
    opt, _ = brute_force_opt(game, cap)
    slack = _slack_tensor(game, tensors, welfare, lam, mu, opt, s_star)
    flat = int(np.argmin(slack))
    worst = tuple(int(x) for x in np.unravel_index(flat, slack.shape))
    value = float(slack.flat[flat])
    return SmoothnessCertificate(
        lam=float(lam), mu=float(mu), s_star=s_star,
        verified=bool(value >= -tol), worst_profile=worst, slack=value,
        opt=opt, poa_factor=(1.0 + mu) / lam,
    )


def search_smoothness(
    game: NormalFormGame, lam: float, mu: float,
    cap: int = DEFAULT_ENUM_CAP, tol: float = 1e-9,
) -> SmoothnessCertificate:
    """Scan all pure profiles as deviation candidates (lexicographic order);
    return the first verified certificate, or a not-found certificate carrying
    the best slack seen."""
    if lam <= 0 or mu < 0:
        raise ValueError(f"need lambda > 0 and mu >= 0, got ({lam}, {mu})")
    tensors = game.utility_tensors(cap)
    welfare = game.welfare_tensor(cap)
    opt, _ = brute_force_opt(game, cap)
    best = (-np.inf, None, None)
    for s_star in np.ndindex(*game.dims):
        slack = _slack_tensor(game, tensors, welfare, lam, mu, opt, s_star)
        flat = int(np.argmin(slack))
        value = float(slack.flat[flat])
        worst = tuple(int(x) for x in np.unravel_index(flat, slack.shape))
        if value >= -tol:
            return SmoothnessCertificate(
                lam=float(lam), mu=float(mu), s_star=tuple(int(x) for x in s_star),
                verified=True, worst_profile=worst, slack=value,
                opt=opt, poa_factor=(1.0 + mu) / lam,
            )
        if value > best[0]:
            best = (value, tuple(int(x) for x in s_star), worst)
    return SmoothnessCertificate(
        lam=float(lam), mu=float(mu), s_star=None, verified=False,
        worst_profile=best[2], slack=best[0], opt=opt, poa_factor=(1.0 + mu) / lam,
    )


def poa_welfare_bound(lam: float, mu: float, opt: float, regrets, T: int) -> float:
    """Welfare floor implied by smoothness: (lam/(1+mu))*Opt - sum(r_i)/((1+mu)*T).

    ``regrets`` are raw-unit regrets so the floor is in raw welfare units.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if lam <= 0 or mu < 0:
        raise ValueError(f"need lambda > 0 and mu >= 0, got ({lam}, {mu})")
    total = float(np.sum(regrets))
    return (lam / (1.0 + mu)) * opt - total / ((1.0 + mu) * T)


# ---------------------------------------------------------------------------
# dense CSV interchange


def load_dense_csv(text_or_path) -> DenseGame:
    """Load a dense game: header line ``n,d1,...,dn`` then one row per pure
    profile ``s1,...,sn,u1,...,un`` (normalized [0,1] utilities)."""
    path = None
    if isinstance(text_or_path, str) and "\n" not in text_or_path:
        path = text_or_path
        with open(text_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = text_or_path
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(f.strip() for f in r)]
    if not rows:
        raise ValueError("empty dense-game file")
    header = [int(x) for x in rows[0]]
    n, dims = header[0], header[1:]
    if len(dims) != n:
        raise ValueError(f"header declares n={n} but lists {len(dims)} strategy counts")
    tensors = [np.full(dims, np.nan) for _ in range(n)]
    for r in rows[1:]:
        if len(r) != 2 * n:
            raise ValueError(f"row {r} should have {2 * n} fields")
        s = tuple(int(x) for x in r[:n])
        us = [float(x) for x in r[n:]]
        for i in range(n):
            tensors[i][s] = us[i]
    for i, t in enumerate(tensors):
        if np.isnan(t).any():
            raise ValueError(f"player {i}: some pure profiles are missing a utility")
        if t.min() < 0.0 or t.max() > 1.0:
            raise ValueError(f"player {i}: utilities must lie in [0,1], got "
                             f"[{t.min()}, {t.max()}]")
    meta = {"kind_detail": "dense_csv"}
    if path is not None:
        meta["path"] = path
    return DenseGame(tensors, scale=1.0, shift=0.0, meta=meta)


def dump_dense_csv(game: DenseGame) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([game.n] + list(game.dims))
    for s in np.ndindex(*game.dims):
        u = game.normalize(game.pure_utilities(s))
        w.writerow([*map(int, s), *[repr(float(x)) for x in u]])
    return out.getvalue()
