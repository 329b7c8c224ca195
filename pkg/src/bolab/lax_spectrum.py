"""Lax operator, Gram form and ``X*`` on the invariant subspace ``W``.

``W`` is spanned by ``e_j(x) = i/(x + p_j)``.  A vector ``a`` of
coefficients stands for ``sum_j a_j e_j``; with ``G[k, j] = <e_j, e_k>``
the inner product of two such functions is ``b^H G a``.  ``B`` is the matrix
of ``L_{u0}`` (``L e_j = sum_m B[m, j] e_m``) and ``D = diag(-p)`` the matrix
of ``X*``.  Since ``L`` is self-adjoint, ``G B`` is Hermitian and the
spectrum comes from the pencil ``(G B, G)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np
import scipy.linalg as sla

from .exceptions import AlgebraError, IllConditionedError, SpectralError
from .rational_hardy import RationalHardy, derivative, project_szego
from .soliton_model import SolitonParams

HERMITIAN_TOL = 1e-10
PIPELINE_TOL = 1e-10
DOUBLE_POLE_TOL = 1e-10
MAX_GRAM_COND = 1e12
EIGEN_GAP_TOL = 1e-10
# Above this 2-norm condition number of G the pencil is solved in extended precision.
EXTENDED_COND = 1e5
EXTENDED_DPS = 34


@dataclass(frozen=True)
class LaxSystem:
    params: SolitonParams
    G: np.ndarray
    B: np.ndarray
    D: np.ndarray
    ones: np.ndarray

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def p(self) -> np.ndarray:
        return self.params.array

    def norm_sq(self, a=None, b=None) -> complex:
        """``b^H G a`` (defaults to the coefficient vector of ``Pi u0``)."""
        a = self.ones if a is None else a
        b = a if b is None else b
        return complex(np.conj(b) @ self.G @ a)


@dataclass(frozen=True)
class _ExtendedData:
    dps: int
    G: object
    B: object
    vecs: list
    lambdas: list


@dataclass(frozen=True)
class Spectrum:
    """Negative Lax eigenvalues (ascending) and derived soliton data.

    ``eigvecs[:, j]`` holds the coefficients of ``phi_j``, normalized so that
    ``eigvecs[:, j]^H G eigvecs[:, j] = 1`` and ``<Pi u0, phi_j>`` is real
    and positive.
    """

    lambdas: np.ndarray
    eigvecs: np.ndarray
    overlaps: np.ndarray
    p_infty: np.ndarray
    velocities: np.ndarray
    precision: str = "double"
    _extended: Optional[_ExtendedData] = field(default=None, repr=False, compare=False)

    @property
    def N(self) -> int:
        return len(self.lambdas)


def build_gram(params: SolitonParams) -> np.ndarray:
    p = params.array
    return 2j * np.pi / (p[None, :] - p.conj()[:, None])


def lax_matrix_closed_form(params: SolitonParams) -> np.ndarray:
    p = params.array
    n = len(p)
    diff = p[None, :] - p[:, None]  # diff[k, j] = p_j - p_k
    off = ~np.eye(n, dtype=bool)
    B = np.zeros((n, n), dtype=complex)
    B[off] = -1j / diff[off]
    inv = np.where(off, 1j / np.where(off, diff, 1.0), 0.0)  # inv[k, j] = i/(p_j - p_k)
    cross = 1j / (p[:, None] - p.conj()[None, :])  # cross[j, k] = i/(p_j - conj p_k)
    B[np.diag_indices(n)] = inv.sum(axis=0) - cross.sum(axis=1)
    return B


def lax_matrix_by_projection(params: SolitonParams) -> np.ndarray:
    """Apply ``-i d/dx - T_u0`` to each basis function and expand the result in the basis."""
    p = params.array
    n = len(p)
    B = np.zeros((n, n), dtype=complex)
    for j in range(n):
        e = RationalHardy([1j], [p[j]])
        Le = (-1j) * derivative(e) - project_szego(e, p)
        for c, q, m in zip(Le.coefs, Le.params, Le.mults):
            if m == 2:
                if abs(c) > DOUBLE_POLE_TOL:
                    raise AlgebraError(
                        f"double pole at {-q} survives in L e_{j + 1} with coefficient {c:.3e}"
                    )
                continue
            k = int(np.argmin(np.abs(p - q)))
            if abs(p[k] - q) > 1e-12 * max(1.0, abs(q)):
                raise AlgebraError(f"L e_{j + 1} leaves the subspace: stray pole at {-q}")
            B[k, j] += -1j * c
    return B


def build_lax_matrix(params: SolitonParams) -> np.ndarray:
    """Lax matrix from the projection pipeline, cross-checked against the closed form."""
    B_pipe = lax_matrix_by_projection(params)
    B_closed = lax_matrix_closed_form(params)
    scale = max(1.0, float(np.abs(B_closed).max()))
    gap = float(np.abs(B_pipe - B_closed).max())
    if gap > PIPELINE_TOL * scale:
        raise AlgebraError(f"Lax matrix pipeline and closed form disagree by {gap:.3e}")
    return B_closed


def gram_condition_estimate(G: np.ndarray) -> float:
    """``(max diag / min diag)**2`` of the Cholesky factor; a cheap lower bound on cond(G)."""
    try:
        C = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return np.inf
    d = np.abs(np.diag(C))
    return float((d.max() / d.min()) ** 2)


def build_system(params: SolitonParams, *, check_condition: bool = True) -> LaxSystem:
    G = build_gram(params)
    if check_condition:
        est = gram_condition_estimate(G)
        if est > MAX_GRAM_COND:
            what = "is numerically singular" if np.isinf(est) else f"condition estimate {est:.2e} exceeds {MAX_GRAM_COND:.0e}"
            raise IllConditionedError(f"Gram matrix {what}; use better separated soliton parameters")
    B = build_lax_matrix(params)
    return LaxSystem(params, G, B, np.diag(-params.array), np.ones(params.N, dtype=complex))


def hermitian_defect(sys: LaxSystem) -> float:
    """Relative anti-Hermitian part of ``G B``."""
    A = sys.G @ sys.B
    return float(np.abs(A - A.conj().T).max() / max(np.abs(A).max(), 1e-300))


def _check_eigenvalues(lam):
    if np.any(lam >= 0):
        raise SpectralError(
            f"nonnegative eigenvalue {lam.max():.3e}: an N-soliton potential has exactly N negative eigenvalues"
        )
    if len(lam) > 1:
        gap = float(np.min(np.diff(lam)))
        if gap <= EIGEN_GAP_TOL:
            k = int(np.argmin(np.diff(lam)))
            raise SpectralError(
                f"eigenvalues {k + 1} and {k + 2} collide (gap {gap:.2e}); soliton velocities must be distinct"
            )


def _solve_double(sys: LaxSystem):
    A = sys.G @ sys.B
    A = (A + A.conj().T) / 2
    C = sla.cholesky(sys.G, lower=True)
    H = sla.solve_triangular(C, sla.solve_triangular(C, A.conj().T, lower=True).conj().T, lower=True)
    lam, Y = np.linalg.eigh((H + H.conj().T) / 2)
    X = sla.solve_triangular(C.conj().T, Y, lower=False)
    ov = X.conj().T @ sys.G @ sys.ones
    X = X * (ov / np.abs(ov))
    ov = np.abs(ov)
    GDX = sys.G @ (sys.D @ X)
    p_inf = -np.einsum("ij,ij->j", X.conj(), GDX)
    return lam, X, ov, p_inf


def _mp_matrices(p, dps):
    mp = mpmath.mp
    mp.dps = dps
    pts = [mpmath.mpc(z.real, z.imag) for z in p]
    n = len(pts)
    G = mpmath.matrix(n, n)
    B = mpmath.matrix(n, n)
    for k in range(n):
        for j in range(n):
            G[k, j] = 2j * mpmath.pi / (pts[j] - mpmath.conj(pts[k]))
            if k != j:
                B[k, j] = -1j / (pts[j] - pts[k])
    for j in range(n):
        B[j, j] = sum((1j / (pts[j] - pts[k]) for k in range(n) if k != j), mpmath.mpc(0)) - sum(
            1j / (pts[j] - mpmath.conj(pts[k])) for k in range(n)
        )
    return pts, G, B


def _mp_col(X, j):
    return mpmath.matrix([X[i, j] for i in range(X.rows)])


def _mp_dot(b, G, a):
    # b^H G a
    return (b.H * (G * a))[0, 0]


def _solve_extended(sys: LaxSystem, dps: int):
    with mpmath.workdps(dps):
        pts, G, B = _mp_matrices(sys.p, dps)
        n = len(pts)
        A = G * B
        A = (A + A.H) / 2
        C = mpmath.cholesky(G)
        Ci = mpmath.inverse(C)
        H = Ci * A * Ci.H
        H = (H + H.H) / 2
        E, Q = mpmath.eigh(H)
        X = Ci.H * Q
        order = sorted(range(n), key=lambda i: E[i])
        one = mpmath.matrix([1] * n)
        vecs, lams, ovs, pinfs = [], [], [], []
        for i in order:
            x = _mp_col(X, i)
            ov = _mp_dot(x, G, one)
            x = x * (ov / abs(ov))
            Dx = mpmath.matrix([-pts[m] * x[m] for m in range(n)])
            vecs.append(x)
            lams.append(mpmath.re(E[i]))
            ovs.append(abs(ov))
            pinfs.append(-_mp_dot(x, G, Dx))
        lam = np.array([float(v) for v in lams])
        Xd = np.array([[complex(v[m]) for v in vecs] for m in range(n)])
        ov = np.array([float(v) for v in ovs])
        p_inf = np.array([complex(v) for v in pinfs])
        ext = _ExtendedData(dps, G, B, vecs, lams)
    return lam, Xd, ov, p_inf, ext


def solve_spectrum(sys: LaxSystem, precision: str = "auto") -> Spectrum:
    """Generalized Hermitian eigenproblem ``(G B) c = lambda G c`` by Cholesky reduction.

    ``precision`` is ``"double"``, ``"extended"`` (mpmath, 34 digits) or
    ``"auto"``, which switches to extended precision when ``cond(G)`` exceeds
    ``EXTENDED_COND``: Cauchy-type Gram matrices lose about ``log10 cond(G)``
    digits in double precision.
    """
    defect = hermitian_defect(sys)
    if defect > HERMITIAN_TOL:
        raise SpectralError(f"G B is not Hermitian (relative defect {defect:.2e}); L is not self-adjoint on W")
    try:
        np.linalg.cholesky(sys.G)
    except np.linalg.LinAlgError as exc:
        raise SpectralError("Gram matrix is not positive definite") from exc
    if precision == "auto":
        precision = "extended" if np.linalg.cond(sys.G) > EXTENDED_COND else "double"
    ext = None
    if precision == "double":
        lam, X, ov, p_inf = _solve_double(sys)
    elif precision == "extended":
        lam, X, ov, p_inf, ext = _solve_extended(sys, EXTENDED_DPS)
    else:
        raise ValueError(f"unknown precision {precision!r}")
    _check_eigenvalues(lam)
    return Spectrum(lam, X, ov, p_inf, 2 * np.abs(lam), precision, ext)


def wu_residuals(spec: Spectrum) -> np.ndarray:
    """Relative defect of ``|<Pi u0, phi>|^2 = 2 pi |lambda|`` per eigenpair."""
    if spec._extended is not None:
        with mpmath.workdps(spec._extended.dps):
            out = []
            for lam, x in zip(spec._extended.lambdas, spec._extended.vecs):
                one = mpmath.matrix([1] * len(x))
                ov = abs(_mp_dot(x, spec._extended.G, one))
                out.append(float(abs(ov**2 - 2 * mpmath.pi * abs(lam)) / (2 * mpmath.pi * abs(lam))))
            return np.array(out)
    target = 2 * np.pi * np.abs(spec.lambdas)
    return np.abs(spec.overlaps**2 - target) / target


def impinfty_residuals(spec: Spectrum) -> np.ndarray:
    """Relative defect of ``Im p_j^inf = 1/(2 |lambda_j|)``."""
    return np.abs(spec.p_infty.imag * 2 * np.abs(spec.lambdas) - 1)


def verify_xstarphi(sys: LaxSystem, spec: Spectrum, j: int, *, relative: bool = True) -> float:
    """G-norm of ``(B - lambda)(D c) - [-i c + i/(2 pi |lambda|) <phi, Pi u0> 1]``.

    With ``relative=True`` the residual is divided by ``||D c||_G``.
    """
    if spec._extended is not None:
        ext = spec._extended
        with mpmath.workdps(ext.dps):
            x = ext.vecs[j]
            lam = ext.lambdas[j]
            n = len(x)
            pts = [mpmath.mpc(z.real, z.imag) for z in sys.p]
            one = mpmath.matrix([1] * n)
            Dx = mpmath.matrix([-pts[m] * x[m] for m in range(n)])
            lhs = ext.B * Dx - lam * Dx
            ov = _mp_dot(one, ext.G, x)  # <phi, Pi u0>
            rhs = x * (-1j) + one * (1j * ov / (2 * mpmath.pi * abs(lam)))
            d = lhs - rhs
            res = mpmath.sqrt(abs(_mp_dot(d, ext.G, d)))
            scale = mpmath.sqrt(abs(_mp_dot(Dx, ext.G, Dx)))
            return float(res / scale) if relative else float(res)
    c = spec.eigvecs[:, j]
    lam = spec.lambdas[j]
    Dc = sys.D @ c
    lhs = sys.B @ Dc - lam * Dc
    ov = sys.ones.conj() @ sys.G @ c
    rhs = -1j * c + (1j / (2 * np.pi * abs(lam))) * ov * sys.ones
    d = lhs - rhs
    res = np.sqrt(abs(sys.norm_sq(d)))
    if relative:
        res /= np.sqrt(abs(sys.norm_sq(Dc)))
    return float(res)


def g_orthonormality_defect(sys: LaxSystem, spec: Spectrum) -> float:
    """``max |c_j^H G c_k - delta_jk|``, in the precision the spectrum was solved in."""
    if spec._extended is not None:
        ext = spec._extended
        with mpmath.workdps(ext.dps):
            n = len(ext.vecs)
            worst = mpmath.mpf(0)
            for j in range(n):
                for k in range(n):
                    worst = max(worst, abs(_mp_dot(ext.vecs[j], ext.G, ext.vecs[k]) - (1 if j == k else 0)))
            return float(worst)
    X = spec.eigvecs
    return float(np.abs(X.conj().T @ sys.G @ X - np.eye(spec.N)).max())


def verify_plancherel(params: SolitonParams, precision: str = "auto") -> tuple[float, float]:
    """``(sum_k 2 pi |lambda_k|, ||Pi u0^N||^2)``; equal for every finite N."""
    sys = build_system(params)
    spec = solve_spectrum(sys, precision)
    lhs = float(np.sum(2 * np.pi * np.abs(spec.lambdas)))
    rhs = float(sys.norm_sq().real)
    return lhs, rhs


def monotonicity_violation(params: SolitonParams, N1: int, N2: int) -> float:
    """``max_k (lambda_k^(N2) - lambda_k^(N1))`` over ``k <= N1`` (nonpositive when monotone)."""
    if not 1 <= N1 <= N2 <= params.N:
        raise IndexError(f"need 1 <= N1 <= N2 <= {params.N}")
    lam1 = solve_spectrum(build_system(params.truncate(N1))).lambdas
    lam2 = solve_spectrum(build_system(params.truncate(N2))).lambdas
    return float(np.max(lam2[:N1] - lam1))


def eigenvalue_monotonicity(params: SolitonParams, N1: int, N2: int, tol: float = 1e-10) -> bool:
    """Adding solitons lowers every eigenvalue: ``lambda_k^(N2) <= lambda_k^(N1)``."""
    return monotonicity_violation(params, N1, N2) <= tol


def spectrum_rows(sys: LaxSystem, spec: Spectrum) -> list[dict]:
    """Rows of the spectrum CSV export (``k`` is 1-based)."""
    lhs = float(np.sum(2 * np.pi * np.abs(spec.lambdas)))
    rhs = float(sys.norm_sq().real)
    wu = wu_residuals(spec)
    return [
        {
            "N": sys.N,
            "k": k + 1,
            "lambda": float(spec.lambdas[k]),
            "re_p_infty": float(spec.p_infty[k].real),
            "im_p_infty": float(spec.p_infty[k].imag),
            "velocity": float(spec.velocities[k]),
            "wu_residual": float(wu[k]),
            "plancherel_lhs": lhs,
            "plancherel_rhs": rhs,
        }
        for k in range(spec.N)
    ]
