"""Explicit-formula evolution and soliton-resolution diagnostics.

On ``W`` the explicit formula becomes an N x N resolvent solve:
``Pi u(t, z) = -i * 1^T (D - 2t B - z)^{-1} 1`` because ``I_+(e_j) = 2 pi``
and ``Pi u0`` has coefficient vector ``1``.  The eigenvalues of
``M(t) = D - 2t B`` are the poles of ``Pi u(t, .)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import AlgebraError, NumericalPathologyWarning
from .lax_spectrum import LaxSystem, Spectrum
from .rational_hardy import RationalHardy, inner_product, sobolev_norm
from .soliton_model import soliton_hs_norm_sq

RESOLVENT_COND_MAX = 1e13
SINGULAR_SHIFT = 1e-8
POLE_CLUSTER_TOL = 1e-9
WINDOW_HALF_WIDTH = 50.0
WINDOW_POINTS = 2001
FAR_FIELD_POINTS = 4001


def evolution_matrix(sys: LaxSystem, t: float) -> np.ndarray:
    return sys.D - 2 * t * sys.B


def pi_u(sys: LaxSystem, t: float, z):
    """``Pi u(t, z)`` for ``Im z >= 0`` (scalar or array ``z``).

    Points where ``M(t) - z`` has condition number above ``RESOLVENT_COND_MAX``
    are re-evaluated at ``z + 1e-8 i`` with a :class:`NumericalPathologyWarning`.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag < 0):
        raise ValueError("Pi u(t, .) is evaluated on the closed upper half-plane only")
    flat = z.reshape(-1)
    n = sys.N
    A = evolution_matrix(sys, t)[None, :, :] - flat[:, None, None] * np.eye(n)[None]
    cond = np.linalg.cond(A)
    bad = ~(cond <= RESOLVENT_COND_MAX)
    if np.any(bad):
        warnings.warn(
            f"resolvent nearly singular at {int(bad.sum())} point(s); shifted by {SINGULAR_SHIFT:g}i",
            NumericalPathologyWarning,
            stacklevel=2,
        )
        A[bad] -= 1j * SINGULAR_SHIFT * np.eye(n)[None]
    w = np.linalg.solve(A, np.broadcast_to(sys.ones, (len(flat), n))[..., None])[..., 0]
    out = -1j * w.sum(axis=-1)
    return out.reshape(z.shape) if z.ndim else complex(out[0])


def u_field(sys: LaxSystem, t: float, x):
    """Real solution ``u(t, x) = 2 Re Pi u(t, x)`` by direct resolvent solves."""
    return 2 * np.real(pi_u(sys, t, np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class EvolutionState:
    """Pole/residue form ``Pi u(t, z) = sum_m w_m / (z - z_m)``.

    When the eigenvalues of ``M(t)`` cluster the decomposition is unreliable;
    ``available`` is then False and evaluation falls back to resolvent solves.
    """

    t: float
    M: np.ndarray
    poles: Optional[np.ndarray]
    residues: Optional[np.ndarray]
    as_rational: Optional[RationalHardy]
    available: bool
    system: LaxSystem = field(repr=False)

    def __call__(self, z):
        if self.available:
            return self.as_rational(np.asarray(z, dtype=complex))
        return pi_u(self.system, self.t, z)

    def u(self, x):
        return 2 * np.real(self(np.asarray(x, dtype=float)))

    def l2_norm_sq(self) -> float:
        if not self.available:
            raise AlgebraError("pole dynamics unavailable at this time")
        return inner_product(self.as_rational, self.as_rational).real


def pole_dynamics(sys: LaxSystem, t: float) -> EvolutionState:
    M = evolution_matrix(sys, t)
    mu, V = np.linalg.eig(M)
    n = len(mu)
    if n > 1:
        gaps = np.abs(mu[:, None] - mu[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < POLE_CLUSTER_TOL:
            return EvolutionState(t, M, None, None, None, False, sys)
    weights = (sys.ones @ V) * np.linalg.solve(V, sys.ones)
    order = np.lexsort((mu.imag, mu.real))
    mu, weights = mu[order], weights[order]
    if np.any(mu.imag >= 0):
        raise AlgebraError(f"pole of Pi u(t) left the lower half-plane at t={t}: {mu[mu.imag >= 0]}")
    residues = 1j * weights
    rational = RationalHardy(residues, -mu)
    return EvolutionState(t, M, mu, residues, rational, True, sys)


def omega_bound(sys: LaxSystem, z):
    """Uniform bound ``||Pi u0|| / (2 sqrt(pi Im z))`` on ``|Pi u(t, z)|``."""
    z = np.asarray(z, dtype=complex)
    return np.sqrt(sys.norm_sq().real) / (2 * np.sqrt(np.pi * z.imag))


def omega_bound_audit(sys: LaxSystem, t, z, slack: float = 1e-12) -> dict:
    """Check the bound at paired samples ``(t[i], z[i])``."""
    t = np.asarray(t, dtype=float).reshape(-1)
    z = np.asarray(z, dtype=complex).reshape(-1)
    vals = np.array([abs(pi_u(sys, ti, zi)) for ti, zi in zip(t, z)])
    bound = omega_bound(sys, z)
    excess = vals - bound
    return {
        "samples": len(t),
        "violations": int(np.sum(excess > slack)),
        "max_ratio": float(np.max(vals / bound)) if len(t) else 0.0,
        "max_excess": float(np.max(excess)) if len(t) else 0.0,
    }


def moving_frame_limit(sys: LaxSystem, spec: Spectrum, j: int, t: float, z: complex) -> tuple[complex, complex]:
    """``(Pi u(t, z - 2 t lambda_j), i/(z + p_j^inf))`` for 0-based ``j``."""
    if not complex(z).imag > 0:
        raise ValueError("moving-frame limit needs Im z > 0")
    value = pi_u(sys, t, z - 2 * t * spec.lambdas[j])
    limit = 1j / (z + spec.p_infty[j])
    return complex(value), complex(limit)


def moving_frame_study(sys: LaxSystem, spec: Spectrum, j: int, z: complex, times) -> dict:
    """Frame errors along ``times`` and their log-log slope (about -1 when O(1/t))."""
    times = np.asarray(times, dtype=float)
    errs = np.array([abs(np.subtract(*moving_frame_limit(sys, spec, j, t, z))) for t in times])
    slope = float(np.polyfit(np.log(times), np.log(errs), 1)[0]) if len(times) > 1 and np.all(errs > 0) else np.nan
    return {"times": times, "errors": errs, "slope": slope}


def soliton_sum(spec: Spectrum, n_sol: int, t: float) -> RationalHardy:
    """``sum_{j < n_sol} Pi R_{p_j^inf}(x - c_j t)`` with ``c_j = 2 |lambda_j|``."""
    q = spec.p_infty[:n_sol] - spec.velocities[:n_sol] * t
    return RationalHardy(1j * np.ones(n_sol), q)


def tail_sum(spec: Spectrum, n_sol: int) -> float:
    return float(np.sum(2 * np.pi * np.abs(spec.lambdas[n_sol:])))


@dataclass(frozen=True)
class ResolutionReport:
    """Remainder after subtracting ``n_sol`` outgoing solitons at time ``t``.

    ``l2_residual_sq`` is the Hardy-side quantity ``||Pi r||^2``;
    ``l2_residual_sq_physical = 2 ||Pi r||^2`` is ``||r||^2`` for the real
    remainder.  ``hs_residual[s]`` is the homogeneous ``H^s`` norm (not
    squared) of the real remainder.  ``fallback`` marks times where the pole
    decomposition was unavailable.
    """

    n_sol: int
    t: float
    l2_residual_sq: float
    l2_residual_sq_physical: float
    linf_residual: float
    hs_residual: dict
    tail_sum: float
    fallback: bool = False


def linf_grid(spec: Spectrum, t: float, *, half_width=WINDOW_HALF_WIDTH, n_window=WINDOW_POINTS, n_far=FAR_FIELD_POINTS):
    """Union of per-soliton windows around ``c_j t - Re p_j^inf`` and a coarse far-field grid."""
    centers = spec.velocities * t - spec.p_infty.real
    widths = half_width * spec.p_infty.imag
    pieces = [np.linspace(c - w, c + w, n_window) for c, w in zip(centers, widths)]
    lo = min(np.min(centers - widths), 0.0)
    hi = max(np.max(centers + widths), 0.0)
    span = hi - lo
    pieces.append(np.linspace(lo - span, hi + span, n_far))
    return np.unique(np.concatenate(pieces))


def _kernel_l2_residual(sys: LaxSystem, t: float, sol: RationalHardy) -> float:
    # <Pi u(t), c/(x+q)> = conj(c) 2 pi i Pi u(t, -conj q) by closing in the upper half-plane
    cross = 0j
    for c, q in zip(sol.coefs, sol.params):
        cross += np.conj(c) * 2j * np.pi * pi_u(sys, t, -np.conj(q))
    return float(sys.norm_sq().real - 2 * cross.real + inner_product(sol, sol).real)


def resolution_residual(
    sys: LaxSystem,
    spec: Spectrum,
    n_sol: int,
    t: float,
    s_values=(),
    *,
    n_window: int = WINDOW_POINTS,
    n_far: int = FAR_FIELD_POINTS,
) -> ResolutionReport:
    if not 0 <= n_sol <= spec.N:
        raise IndexError(f"n_sol must lie in 0..{spec.N}")
    state = pole_dynamics(sys, t)
    sol = soliton_sum(spec, n_sol, t)
    x = linf_grid(spec, t, n_window=n_window, n_far=n_far)
    if state.available:
        r = state.as_rational - sol
        l2 = inner_product(r, r).real
        linf = float(np.max(np.abs(2 * np.real(r(x)))))
        hs = {float(s): float(np.sqrt(max(2 * sobolev_norm(r, s), 0.0))) for s in s_values}
        fallback = False
    else:
        l2 = _kernel_l2_residual(sys, t, sol)
        linf = float(np.max(np.abs(u_field(sys, t, x) - 2 * np.real(sol(x)))))
        hs = {float(s): float("nan") for s in s_values}
        fallback = True
    l2 = max(l2, 0.0)
    return ResolutionReport(n_sol, float(t), l2, 2 * l2, linf, hs, tail_sum(spec, n_sol), fallback)


def usol_partial_sums(spec: Spectrum, s: float) -> np.ndarray:
    """Partial sums of ``||R_{p_j^inf}||`` in homogeneous ``H^s``, using ``Im p_j^inf = 1/(2|lambda_j|)``."""
    if s < 0.5:
        raise ValueError("the soliton series is only controlled for s >= 1/2")
    im = 1 / (2 * np.abs(spec.lambdas))
    norms = np.sqrt([soliton_hs_norm_sq(1j * y, s) for y in im])
    return np.cumsum(norms)


def usol_norms(spec: Spectrum, s: float, n_sol: int) -> float:
    if n_sol == 0:
        if s < 0.5:
            raise ValueError("the soliton series is only controlled for s >= 1/2")
        return 0.0
    return float(usol_partial_sums(spec, s)[n_sol - 1])


def log_time_grid(k_max: int = 16, per_decade: int = 4) -> np.ndarray:
    """``t = 10**(k/per_decade)`` for ``k = 0..k_max``."""
    return 10.0 ** (np.arange(k_max + 1) / per_decade)


def trajectory_rows(states) -> list[dict]:
    rows = []
    for st in states:
        if not st.available:
            continue
        for m, (z, w) in enumerate(zip(st.poles, st.residues)):
            rows.append(
                {
                    "t": st.t,
                    "m": m + 1,
                    "re_pole": z.real,
                    "im_pole": z.imag,
                    "re_residue": w.real,
                    "im_residue": w.imag,
                }
            )
    return rows
