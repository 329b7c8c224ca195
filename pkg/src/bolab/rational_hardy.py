"""Exact calculus on rational functions holomorphic in the upper half-plane.

A function is stored as a finite sum of terms ``c / (x + q)**m`` with
``m in {1, 2}``.  When ``Im q > 0`` the pole ``-q`` lies in the lower
half-plane and the term belongs to the Hardy space ``L^2_+``.  Terms with
``Im q < 0`` make up the anti-Hardy part, which the Szego projector drops.

Fourier convention: ``f^(xi) = int f(x) exp(-i x xi) dx``, so that
``i / (x + q)`` has transform ``2 pi exp(i q xi)`` on ``xi > 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gamma

from .exceptions import AlgebraError, UnsupportedMultiplicityError

POLE_TOL = 1e-12
MAX_MULTIPLICITY = 2


@dataclass(frozen=True)
class PolePoint:
    """Pole parameter ``q`` of a term ``1/(x+q)**multiplicity``, ``Im q > 0``."""

    q: complex
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "q", complex(self.q))
        if not self.q.imag > 0:
            raise ValueError(f"pole parameter must satisfy Im q > 0, got {self.q!r}")
        if not 1 <= self.multiplicity <= MAX_MULTIPLICITY:
            raise UnsupportedMultiplicityError(
                f"multiplicity {self.multiplicity} outside 1..{MAX_MULTIPLICITY}"
            )


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype).reshape(-1)
    a.flags.writeable = False
    return a


def _canonicalize(coefs, params, mults, tol=POLE_TOL):
    """Merge terms whose pole parameters agree within ``tol``; drop zeros."""
    coefs = np.asarray(coefs, dtype=complex).reshape(-1)
    params = np.asarray(params, dtype=complex).reshape(-1)
    mults = np.asarray(mults, dtype=int).reshape(-1)
    reps: list[complex] = []
    acc: dict[tuple[int, int], complex] = {}
    for c, q, m in zip(coefs, params, mults):
        if m < 1 or m > MAX_MULTIPLICITY:
            raise UnsupportedMultiplicityError(f"multiplicity {m} is not supported")
        idx = None
        for i, r in enumerate(reps):
            if abs(q - r) <= tol:
                idx = i
                break
        if idx is None:
            reps.append(q)
            idx = len(reps) - 1
        acc[(idx, int(m))] = acc.get((idx, int(m)), 0j) + c
    keys = [k for k in sorted(acc) if acc[k] != 0]
    return (
        np.array([acc[k] for k in keys], dtype=complex),
        np.array([reps[k[0]] for k in keys], dtype=complex),
        np.array([k[1] for k in keys], dtype=int),
    )


class _RationalTerms:
    """Shared storage for sums of ``c/(x+q)**m``; instances are immutable."""

    _half_plane_sign = 0

    def __init__(self, coefs=(), params=(), mults=None, *, canonical=False):
        coefs = np.asarray(coefs, dtype=complex).reshape(-1)
        params = np.asarray(params, dtype=complex).reshape(-1)
        if mults is None:
            mults = np.ones(len(coefs), dtype=int)
        if not (len(coefs) == len(params) == len(np.atleast_1d(mults))):
            raise ValueError("coefficient, pole and multiplicity arrays differ in length")
        if not canonical:
            coefs, params, mults = _canonicalize(coefs, params, mults)
        sign = self._half_plane_sign
        if sign and len(params) and not np.all(sign * params.imag > 0):
            side = "upper" if sign > 0 else "lower"
            raise ValueError(f"{type(self).__name__} needs pole parameters in the {side} half-plane")
        self._coefs = _frozen(coefs, complex)
        self._params = _frozen(params, complex)
        self._mults = _frozen(mults, int)

    @property
    def coefs(self) -> np.ndarray:
        return self._coefs

    @property
    def params(self) -> np.ndarray:
        return self._params

    @property
    def mults(self) -> np.ndarray:
        return self._mults

    def __len__(self):
        return len(self._coefs)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        for c, q, m in zip(self._coefs, self._params, self._mults):
            out += c / (z + q) ** m
        return out

    def __repr__(self):
        body = ", ".join(f"{c:.6g}/(x+{q:.6g})^{m}" for c, q, m in zip(self._coefs, self._params, self._mults))
        return f"{type(self).__name__}([{body}])"


class AntiHardyPart(_RationalTerms):
    """Terms ``c/(x+r)**m`` with ``Im r < 0``: the part annihilated by the Szego projector."""

    _half_plane_sign = -1


class RationalHardy(_RationalTerms):
    """Rational element of ``L^2_+``: a canonical sum of ``c/(x+q)**m``, ``Im q > 0``."""

    _half_plane_sign = 1

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, PolePoint]]) -> "RationalHardy":
        terms = list(terms)
        return cls(
            [c for c, _ in terms],
            [p.q for _, p in terms],
            [p.multiplicity for _, p in terms],
        )

    @classmethod
    def zero(cls) -> "RationalHardy":
        return cls()

    @property
    def terms(self) -> list[tuple[complex, PolePoint]]:
        return [(complex(c), PolePoint(q, int(m))) for c, q, m in zip(self.coefs, self.params, self.mults)]

    @property
    def is_simple(self) -> bool:
        return bool(np.all(self.mults == 1))

    def __add__(self, other):
        if not isinstance(other, RationalHardy):
            return NotImplemented
        return RationalHardy(
            np.r_[self.coefs, other.coefs],
            np.r_[self.params, other.params],
            np.r_[self.mults, other.mults],
        )

    def __neg__(self):
        return RationalHardy(-self.coefs, self.params, self.mults, canonical=True)

    def __sub__(self, other):
        if not isinstance(other, RationalHardy):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, _RationalTerms):
            return NotImplemented
        return RationalHardy(complex(scalar) * self.coefs, self.params, self.mults)

    __rmul__ = __mul__

    def shift(self, a: float) -> "RationalHardy":
        """Return ``x -> f(x - a)`` for real ``a``."""
        return RationalHardy(self.coefs, self.params - a, self.mults, canonical=True)

    def conjugate(self) -> AntiHardyPart:
        """Pointwise complex conjugate on the real line."""
        return AntiHardyPart(self.coefs.conj(), self.params.conj(), self.mults, canonical=True)

    def to_json(self) -> list[dict]:
        return [
            {"re_c": c.real, "im_c": c.imag, "re_q": q.real, "im_q": q.imag, "mult": int(m)}
            for c, q, m in zip(self.coefs, self.params, self.mults)
        ]

    @classmethod
    def from_json(cls, data) -> "RationalHardy":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            [complex(d["re_c"], d["im_c"]) for d in data],
            [complex(d["re_q"], d["im_q"]) for d in data],
            [int(d["mult"]) for d in data],
        )


def _pair_fractions(a, m1, b, m2):
    """Partial fractions of ``1/((x+a)**m1 (x+b)**m2)`` as (coef, param, mult) triples."""
    if abs(a - b) <= POLE_TOL:
        if m1 + m2 > MAX_MULTIPLICITY:
            raise UnsupportedMultiplicityError(
                f"product creates a pole of multiplicity {m1 + m2} at {-a}"
            )
        return [(1.0 + 0j, a, m1 + m2)]
    d = b - a
    if (m1, m2) == (1, 1):
        return [(1 / d, a, 1), (-1 / d, b, 1)]
    if (m1, m2) == (2, 1):
        return [(1 / d, a, 2), (-1 / d**2, a, 1), (1 / d**2, b, 1)]
    if (m1, m2) == (1, 2):
        return [(-1 / d, b, 2), (-1 / d**2, b, 1), (1 / d**2, a, 1)]
    return [(1 / d**2, a, 2), (1 / d**2, b, 2), (-2 / d**3, a, 1), (2 / d**3, b, 1)]


def _product(f: _RationalTerms, g: _RationalTerms):
    coefs, params, mults = [], [], []
    for c1, a, m1 in zip(f.coefs, f.params, f.mults):
        for c2, b, m2 in zip(g.coefs, g.params, g.mults):
            for c, q, m in _pair_fractions(a, int(m1), b, int(m2)):
                coefs.append(c1 * c2 * c)
                params.append(q)
                mults.append(m)
    return _canonicalize(coefs, params, mults)


def _split(coefs, params, mults):
    if len(params) and np.any(params.imag == 0):
        raise AlgebraError("partial fractions produced a pole on the real axis")
    up = params.imag > 0
    return (
        RationalHardy(coefs[up], params[up], mults[up], canonical=True),
        AntiHardyPart(coefs[~up], params[~up], mults[~up], canonical=True),
    )


def multiply(f: RationalHardy, g: RationalHardy) -> tuple[RationalHardy, AntiHardyPart]:
    """Pointwise product split into its Hardy and anti-Hardy parts.

    For two Hardy inputs the anti-Hardy part is always empty; it is returned
    so callers can treat all products uniformly.
    """
    return _split(*_product(f, g))


def _profile_points(profile) -> np.ndarray:
    return np.asarray(getattr(profile, "points", profile), dtype=complex).reshape(-1)


def project_szego(f: RationalHardy, profile) -> RationalHardy:
    """``Pi(u0 * f)`` where ``u0 = sum_j 2 Im p_j / |x + p_j|^2``.

    ``profile`` is a :class:`~bolab.soliton_model.SolitonParams` or a sequence
    of upper half-plane points.  Each soliton splits as
    ``i/(x+p) + conj(i/(x+p))``; products with the conjugate factor are
    expanded by partial fractions and their anti-Hardy terms discarded.
    """
    pts = _profile_points(profile)
    hardy = RationalHardy(1j * np.ones(len(pts)), pts, canonical=False)
    anti = hardy.conjugate()
    c1, q1, m1 = _product(f, hardy)
    c2, q2, m2 = _product(f, anti)
    if len(q2) and np.any(np.abs(q2.imag) <= POLE_TOL):
        raise AlgebraError("pole collision between f and the conjugated profile")
    h, _ = _split(*_canonicalize(np.r_[c1, c2], np.r_[q1, q2], np.r_[m1, m2]))
    return h


def _pairing(m, n, w):
    # int (x+q)^-m (x+conj r)^-n dx with w = q - conj(r), Im w > 0
    if m == 1 and n == 1:
        return 2j * np.pi / w
    if m == 2 and n == 1:
        return 2j * np.pi / w**2
    if m == 1 and n == 2:
        return -2j * np.pi / w**2
    return -4j * np.pi / w**3


def inner_product(f: RationalHardy, g: RationalHardy) -> complex:
    """``<f, g> = int f(x) conj(g(x)) dx`` by residues."""
    if not len(f) or not len(g):
        return 0j
    w = f.params[:, None] - g.params.conj()[None, :]
    cc = f.coefs[:, None] * g.coefs.conj()[None, :]
    total = 0j
    for m in (1, 2):
        for n in (1, 2):
            mask = (f.mults[:, None] == m) & (g.mults[None, :] == n)
            if mask.any():
                total += np.sum(cc[mask] * _pairing(m, n, w[mask]))
    return complex(total)


def l2_norm_sq(f: RationalHardy) -> float:
    return inner_product(f, f).real


def apply_xstar(f: RationalHardy) -> RationalHardy:
    """Adjoint of multiplication by ``x`` on ``L^2_+`` (``i d/dxi`` on the Fourier side)."""
    coefs, params, mults = [], [], []
    for c, q, m in zip(f.coefs, f.params, f.mults):
        if m == 1:
            coefs.append(-q * c)
            params.append(q)
            mults.append(1)
        elif m == 2:
            coefs += [c, -q * c]
            params += [q, q]
            mults += [1, 2]
        else:
            raise UnsupportedMultiplicityError(f"X* on multiplicity {m}")
    return RationalHardy(coefs, params, mults)


def derivative(f: RationalHardy) -> RationalHardy:
    """``d/dx`` on simple-pole terms (double poles would produce a triple pole)."""
    if not f.is_simple:
        raise UnsupportedMultiplicityError("derivative of a double pole exceeds the multiplicity cap")
    return RationalHardy(-f.coefs, f.params, 2 * np.ones(len(f), dtype=int), canonical=True)


def i_plus(f: RationalHardy) -> complex:
    """Boundary value ``f^(0+)`` of the Fourier transform."""
    simple = f.mults == 1
    return complex(-2j * np.pi * np.sum(f.coefs[simple]))


def fourier_transform(f: RationalHardy, xi) -> np.ndarray:
    """Closed-form ``f^(xi)``; zero for ``xi < 0``."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape, dtype=complex)
    pos = xi > 0
    x = xi[pos]
    for c, q, m in zip(f.coefs, f.params, f.mults):
        e = np.exp(1j * q * x)
        out[pos] += (-2j * np.pi * c if m == 1 else -2 * np.pi * c * x) * e
    return out


def sobolev_norm(f: RationalHardy, s: float) -> float:
    """Squared homogeneous norm ``(1/2pi) int_0^inf xi^(2s) |f^(xi)|^2 dxi``.

    With this normalization ``s = 0`` gives ``<f, f>``.  Only simple poles are
    supported.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if not f.is_simple:
        raise UnsupportedMultiplicityError("sobolev_norm supports simple poles only")
    if not len(f):
        return 0.0
    base = -1j * (f.params[:, None] - f.params.conj()[None, :])
    cc = f.coefs[:, None] * f.coefs.conj()[None, :]
    val = 2 * np.pi * gamma(2 * s + 1) * np.sum(cc / base ** (2 * s + 1))
    return float(val.real)


def evaluate(f: _RationalTerms, z):
    """Pointwise value; ``z`` may be real or in the upper half-plane."""
    z = np.asarray(z, dtype=complex)
    if isinstance(f, RationalHardy) and np.any(z.imag < 0):
        raise ValueError("RationalHardy is evaluated on the closed upper half-plane only")
    return f(z)


def dumps(f: RationalHardy) -> str:
    return json.dumps(f.to_json())


def loads(text: str) -> RationalHardy:
    return RationalHardy.from_json(text)
