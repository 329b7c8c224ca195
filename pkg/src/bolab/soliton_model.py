"""Multisoliton parameter sets, profiles and norm identities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gamma

from .exceptions import ParameterError
from .rational_hardy import RationalHardy

DISTINCT_TOL = 1e-10


@dataclass(frozen=True)
class SolitonParams:
    """Ordered upper half-plane points ``p_1..p_N`` defining ``u0^N``.

    ``generator`` records how the points were produced (for example
    ``{"generator": "geometric", "ratio": 2.0, "count": 8}``) so that
    truncations and reports can refer back to the sequence rule.
    """

    points: tuple
    generator: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        pts = tuple(complex(p) for p in np.asarray(self.points, dtype=complex).reshape(-1))
        if not pts:
            raise ParameterError("at least one soliton parameter is required (N >= 1)")
        for j, p in enumerate(pts):
            if not (math.isfinite(p.real) and math.isfinite(p.imag)) or p.imag <= 0:
                raise ParameterError(f"p_{j + 1} = {p} must be finite with Im p > 0")
        arr = np.array(pts)
        if len(arr) > 1:
            gaps = np.abs(arr[:, None] - arr[None, :])
            np.fill_diagonal(gaps, np.inf)
            j, k = np.unravel_index(np.argmin(gaps), gaps.shape)
            if gaps[j, k] <= DISTINCT_TOL:
                raise ParameterError(
                    f"p_{j + 1} and p_{k + 1} coincide within {DISTINCT_TOL:g}; "
                    "perturb one of them, the rational basis degenerates otherwise"
                )
        object.__setattr__(self, "points", pts)

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    def truncate(self, n: int) -> "SolitonParams":
        if not 1 <= n <= self.N:
            raise ParameterError(f"cannot truncate {self.N} points to {n}")
        gen = None
        if self.generator is not None:
            gen = dict(self.generator, count=n)
        return SolitonParams(self.points[:n], gen)

    @classmethod
    def geometric(cls, ratio: float = 2.0, count: int = 8) -> "SolitonParams":
        """``p_j = i * ratio**j`` for ``j = 1..count``."""
        if ratio <= 1:
            raise ParameterError("geometric ratio must exceed 1")
        j = np.arange(1, count + 1)
        return cls(1j * float(ratio) ** j, {"generator": "geometric", "ratio": float(ratio), "count": int(count)})

    @classmethod
    def power(cls, alpha: float, count: int, shifts=None) -> "SolitonParams":
        """``p_j = a_j + i * j**alpha``; ``shifts`` gives the real parts ``a_j``."""
        j = np.arange(1, count + 1, dtype=float)
        a = np.zeros(count) if shifts is None else np.asarray(shifts, dtype=float)
        if a.shape != (count,):
            raise ParameterError("shifts must have one entry per point")
        gen = {"generator": "power", "alpha": float(alpha), "count": int(count)}
        if shifts is not None:
            gen["shifts"] = [float(v) for v in a]
        return cls(a + 1j * j**alpha, gen)

    @classmethod
    def from_dict(cls, data: dict) -> "SolitonParams":
        if "points" in data:
            extra = set(data) - {"points"}
            if extra:
                raise ParameterError(f"unknown keys in parameter block: {sorted(extra)}")
            return cls([complex(p["re"], p["im"]) for p in data["points"]])
        kind = data.get("generator")
        if kind == "geometric":
            return cls.geometric(data.get("ratio", 2.0), int(data["count"]))
        if kind == "power":
            return cls.power(data["alpha"], int(data["count"]), data.get("shifts"))
        raise ParameterError(f"parameter block needs 'points' or a known generator, got {data!r}")

    def to_dict(self) -> dict:
        if self.generator is not None:
            return dict(self.generator)
        return {"points": [{"re": p.real, "im": p.imag} for p in self.points]}

    @classmethod
    def load(cls, path) -> "SolitonParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class NormReport:
    """Partial sums behind the admissibility condition.

    ``verdict_*`` fields are heuristic labels from partial-sum stabilization
    over successive halvings of N; they never decide convergence.
    """

    N: int
    l2_pi_u0_sq: float
    condition_partial: float
    inv_im_sum: float
    l1_norm: float
    condition_increment_ratio: Optional[float] = None
    inv_im_increment_ratio: Optional[float] = None
    verdict_condition: str = "inconclusive"
    verdict_inv_im: str = "inconclusive"


def soliton_profile(p: complex, x):
    """``R_p(x) = 2 Im p / |x + p|^2``."""
    x = np.asarray(x, dtype=float)
    return 2 * p.imag / np.abs(x + p) ** 2


def profile_eval(params: SolitonParams, x):
    """``u0^N(x)``, vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    p = params.array
    return np.sum(2 * p.imag / np.abs(x[..., None] + p) ** 2, axis=-1)


def pi_profile(params: SolitonParams) -> RationalHardy:
    """``Pi u0^N = sum_j i/(x + p_j)``."""
    return RationalHardy(1j * np.ones(params.N), params.array)


def _pair_matrix(p):
    return p.imag[:, None] / np.abs(p[:, None] - p.conj()[None, :]) ** 2


def cauchy_tail(params: SolitonParams, M: int, N: int) -> float:
    """``||Pi u0^N - Pi u0^M||^2`` in closed form (indices are counts, 0 <= M <= N)."""
    if not 0 <= M <= N <= params.N:
        raise IndexError(f"need 0 <= M <= N <= {params.N}, got M={M}, N={N}")
    if M == N:
        return 0.0
    p = params.array[M:N]
    return float(4 * np.pi * _pair_matrix(p).sum())


def _increment_ratio(partial):
    n = len(partial)
    if n < 4:
        return None
    a, b, c = partial[n // 4 - 1], partial[n // 2 - 1], partial[n - 1]
    if b == a:
        return 0.0 if c == b else math.inf
    return float((c - b) / (b - a))


# Increment ratio over successive doublings of N: ~0 for geometric sequences,
# ~1 for logarithmic growth, >1 for power-law growth.
_STABLE_RATIO = 0.8
_LOG_RATIO = 1.05


def _verdict(ratio):
    if ratio is None:
        return "inconclusive"
    if ratio < _STABLE_RATIO:
        return "stabilizing"
    if ratio <= _LOG_RATIO:
        return "slowly diverging"
    return "diverging"


def condition_partial_sum(params: SolitonParams) -> NormReport:
    p = params.array
    pm = _pair_matrix(p)
    cond = np.array([pm[:n, :n].sum() for n in range(1, params.N + 1)])
    inv = np.cumsum(1 / p.imag)
    r_cond = _increment_ratio(cond) if params.generator else None
    r_inv = _increment_ratio(inv) if params.generator else None
    return NormReport(
        N=params.N,
        l2_pi_u0_sq=float(4 * np.pi * cond[-1]),
        condition_partial=float(cond[-1]),
        inv_im_sum=float(inv[-1]),
        l1_norm=2 * np.pi * params.N,
        condition_increment_ratio=r_cond,
        inv_im_increment_ratio=r_inv,
        verdict_condition=_verdict(r_cond),
        verdict_inv_im=_verdict(r_inv),
    )


def soliton_hs_norm_sq(p: complex, s: float) -> float:
    """Closed form ``pi Gamma(2s+1) / (2 Im p)**(2s+1)`` for ``||R_p||^2`` in ``H^s`` (homogeneous).

    The normalization is ``||v||^2 = (1/8pi) int |xi|^(2s) |v^(xi)|^2 dxi``,
    which is one quarter of the Plancherel-consistent norm used by
    :func:`bolab.rational_hardy.sobolev_norm`.
    """
    y = complex(p).imag
    if y <= 0:
        raise ParameterError("Im p must be positive")
    return float(np.pi * gamma(2 * s + 1) / (2 * y) ** (2 * s + 1))
