"""Exact L2 algebra for sums of shifted cosine bumps.

A :class:`PiecewiseExpSum` is, on each interval between consecutive
breakpoints, a finite sum ``sum_k c_k exp(i k x)`` over integer frequencies,
and zero outside the outermost breakpoints.  Shifted bumps, their linear
combinations and their derivatives are all of this form, and so are their
pairwise products, so every L2 quantity below is computed with analytic
antiderivatives rather than quadrature.

Also holds the Parseval norms of trigonometric polynomials on a period.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import HALF_PI, _check_order, cos_power_terms, exp_integral

MIN_PIECE = 1e-14


class GapConditionError(ValueError):
    """Raised when shifts violate ``lam[n+M] - lam[n] >= pi`` or strict increase."""

    def __init__(self, message, pair):
        super().__init__(message)
        self.pair = pair


@dataclass(frozen=True)
class GapSequence:
    """Strictly increasing shifts satisfying the order-``M`` gap condition."""

    M: int
    shifts: tuple

    def __post_init__(self):
        _check_order(self.M, 1)
        shifts = tuple(float(s) for s in self.shifts)
        object.__setattr__(self, "shifts", shifts)
        if not shifts:
            raise ValueError("a gap sequence needs at least one shift")
        if not all(math.isfinite(s) for s in shifts):
            raise ValueError("shifts must be finite")
        for n in range(len(shifts) - 1):
            if not shifts[n + 1] > shifts[n]:
                raise GapConditionError(
                    f"shifts not strictly increasing at ({n}, {n + 1})", (n, n + 1)
                )
        pair = gap_violation(self.M, shifts)
        if pair is not None:
            m, n = pair
            raise GapConditionError(
                f"gap condition violated: lambda[{n}] - lambda[{m}] = "
                f"{shifts[n] - shifts[m]!r} < pi for M={self.M}",
                pair,
            )

    def __len__(self):
        return len(self.shifts)

    @property
    def array(self):
        return np.asarray(self.shifts)


def gap_violation(M, shifts):
    """First index pair ``(n, n+M)`` with ``shifts[n+M] - shifts[n] < pi``, or None."""
    for n in range(len(shifts) - M):
        if shifts[n + M] - shifts[n] < math.pi:
            return (n, n + M)
    return None


def as_coefficients(a, n):
    """Validate a coefficient vector of length ``n`` and return it as complex."""
    arr = np.asarray(a, dtype=complex).ravel()
    if arr.shape != (n,):
        raise ValueError(f"expected {n} coefficients, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficients must be finite")
    return arr


def _merge_breakpoints(*arrays):
    pts = np.unique(np.concatenate([np.asarray(a, dtype=float) for a in arrays]))
    if pts.size == 0:
        return pts
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] >= MIN_PIECE:
            keep.append(p)
    return np.asarray(keep)


@dataclass(frozen=True)
class PiecewiseExpSum:
    """Piecewise sum of complex exponentials with integer frequencies.

    ``coeffs[p, k]`` multiplies ``exp(i * freqs[k] * x)`` on
    ``[breakpoints[p], breakpoints[p + 1]]``; ``freqs`` is ``-F..F``.
    """

    breakpoints: np.ndarray
    coeffs: np.ndarray
    bound: int
    real: bool = False
    freqs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        c = np.asarray(self.coeffs, dtype=complex)
        if bp.size == 1:
            raise ValueError("need zero or at least two breakpoints")
        npieces = max(bp.size - 1, 0)
        if c.shape != (npieces, 2 * self.bound + 1):
            raise ValueError(f"coefficient array has shape {c.shape}, expected {(npieces, 2 * self.bound + 1)}")
        if npieces and np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "freqs", np.arange(-self.bound, self.bound + 1))

    @classmethod
    def zero(cls, bound=0, real=True):
        return cls(np.empty(0), np.empty((0, 2 * bound + 1)), bound, real)

    @property
    def npieces(self):
        return self.coeffs.shape[0]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.zeros(flat.shape, dtype=complex)
        if self.npieces:
            bp = self.breakpoints
            idx = np.searchsorted(bp, flat, side="right") - 1
            idx = np.where(flat == bp[-1], self.npieces - 1, idx)
            ok = (idx >= 0) & (idx < self.npieces)
            if np.any(ok):
                c = self.coeffs[idx[ok]]
                out[ok] = np.sum(c * np.exp(1j * np.outer(flat[ok], self.freqs)), axis=1)
        if self.real:
            out = out.real
        out = out.reshape(x.shape)
        return out.item() if out.ndim == 0 else out

    def with_bound(self, bound):
        """Same function with the frequency grid padded to ``-bound..bound``."""
        if bound < self.bound:
            raise ValueError("cannot shrink the frequency bound")
        pad = bound - self.bound
        c = np.pad(self.coeffs, ((0, 0), (pad, pad)))
        return PiecewiseExpSum(self.breakpoints, c, bound, self.real)

    def refine(self, breakpoints):
        """Coefficients of ``self`` on the intervals of ``breakpoints``.

        ``breakpoints`` must refine the support of ``self``; intervals outside
        the support get zero coefficients.
        """
        bp = np.asarray(breakpoints, dtype=float)
        if bp.size < 2:
            return np.empty((0, self.coeffs.shape[1]), dtype=complex)
        out = np.zeros((bp.size - 1, self.coeffs.shape[1]), dtype=complex)
        if self.npieces:
            mid = 0.5 * (bp[:-1] + bp[1:])
            idx = np.searchsorted(self.breakpoints, mid, side="right") - 1
            ok = (idx >= 0) & (idx < self.npieces)
            out[ok] = self.coeffs[idx[ok]]
        return out

    def __add__(self, other):
        if not isinstance(other, PiecewiseExpSum):
            return NotImplemented
        bound = max(self.bound, other.bound)
        f, g = self.with_bound(bound), other.with_bound(bound)
        bp = _merge_breakpoints(f.breakpoints, g.breakpoints)
        if bp.size < 2:
            return PiecewiseExpSum.zero(bound, self.real and other.real)
        return PiecewiseExpSum(bp, f.refine(bp) + g.refine(bp), bound, self.real and other.real)

    def __mul__(self, scalar):
        scalar = complex(scalar)
        return PiecewiseExpSum(
            self.breakpoints, self.coeffs * scalar, self.bound, self.real and scalar.imag == 0
        )

    __rmul__ = __mul__


def _bump_terms(M, shift):
    """Coefficient row on the ``-M..M`` grid for ``H^M(x + shift)`` inside its support."""
    f, w = cos_power_terms(M)
    row = np.zeros(2 * M + 1, dtype=complex)
    row[f + M] = w * np.exp(1j * f * shift)
    return row


def expand_bump(M, shift):
    """``H^M(x + shift)`` as a one-piece exponential sum on ``[-pi/2 - shift, pi/2 - shift]``."""
    M = _check_order(M, 1)
    shift = float(shift)
    if not math.isfinite(shift):
        raise ValueError("shift must be finite")
    bp = np.array([-HALF_PI - shift, HALF_PI - shift])
    return PiecewiseExpSum(bp, _bump_terms(M, shift)[None, :], M, real=True)


def build_G(seq, a):
    """``G(x) = sum_n a_n H^M(x + lam_n)`` as a piecewise exponential sum."""
    M = seq.M
    a = as_coefficients(a, len(seq))
    lam = seq.array
    bp = _merge_breakpoints(-lam - HALF_PI, -lam + HALF_PI)
    mid = 0.5 * (bp[:-1] + bp[1:])
    inside = np.abs(mid[:, None] + lam[None, :]) < HALF_PI
    rows = np.stack([_bump_terms(M, s) for s in lam])
    coeffs = (inside * a[None, :]) @ rows
    return PiecewiseExpSum(bp, coeffs, M, real=bool(np.all(a.imag == 0)))


def derivative(f):
    """Piecewise derivative: ``c_k exp(ikx) -> i k c_k exp(ikx)``."""
    return PiecewiseExpSum(f.breakpoints, f.coeffs * (1j * f.freqs)[None, :], f.bound, f.real)


def l2_inner(f, g):
    """Exact ``integral f(x) * conj(g(x)) dx`` over the real line."""
    bp = _merge_breakpoints(f.breakpoints, g.breakpoints)
    if bp.size < 2:
        return 0j
    cf = f.refine(bp)
    cg = g.refine(bp)
    # product of exp(i j x) and conj(exp(i k x)) has frequency j - k
    diff = f.freqs[:, None] - g.freqs[None, :]
    total = 0j
    for p in range(bp.size - 1):
        if not (np.any(cf[p]) and np.any(cg[p])):
            continue
        E = exp_integral(diff, bp[p], bp[p + 1])
        total += cf[p] @ E @ np.conj(cg[p])
    return complex(total)


def norms_G(seq, a):
    """``(integral |G|^2, integral |G'|^2)`` for ``G`` built from ``seq`` and ``a``."""
    G = build_G(seq, a)
    dG = derivative(G)
    return max(l2_inner(G, G).real, 0.0), max(l2_inner(dG, dG).real, 0.0)


def bump_correlation(M, d, derivatives=False):
    """``integral H^M(x + d) H^M(x) dx`` (or the same for ``(H^M)'``), exactly."""
    lo = max(-HALF_PI, -HALF_PI - d)
    hi = min(HALF_PI, HALF_PI - d)
    if hi - lo <= 0:
        return 0.0
    f, w = cos_power_terms(M)
    c_shift = w * np.exp(1j * f * d)
    c_base = w.astype(complex)
    if derivatives:
        c_shift = c_shift * (1j * f)
        c_base = c_base * (1j * f)
    # both factors real, so multiply without conjugating
    E = exp_integral(f[:, None] + f[None, :], lo, hi)
    return float((c_shift @ E @ c_base).real)


def gram_matrices(seq):
    """Gram matrices ``(B, A)`` with ``|G|^2 = a* B a`` and ``|G'|^2 = a* A a``.

    ``B[m, n] = <H^M(. + lam_m), H^M(. + lam_n)>`` and ``A`` is the same for
    the derivatives.  Pairs at distance ``>= pi`` have disjoint supports.
    """
    lam = seq.array
    n = lam.size
    B = np.zeros((n, n))
    A = np.zeros((n, n))
    for m in range(n):
        for k in range(m, n):
            d = lam[m] - lam[k]
            if abs(d) >= math.pi:
                continue
            B[m, k] = B[k, m] = bump_correlation(seq.M, d)
            A[m, k] = A[k, m] = bump_correlation(seq.M, d, derivatives=True)
    return B, A


@dataclass(frozen=True)
class TrigPolynomial:
    """``T(x) = sum_{k=-M}^{M} a_k exp(i k x)``; ``coefficients[k + M] = a_k``."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex).ravel()
        if c.size < 3 or c.size % 2 == 0:
            raise ValueError("need 2M+1 coefficients with M >= 1")
        object.__setattr__(self, "coefficients", c)

    @property
    def order(self):
        return (self.coefficients.size - 1) // 2

    @property
    def freqs(self):
        return np.arange(-self.order, self.order + 1)

    @classmethod
    def monomial(cls, M, k=None):
        """``exp(i k x)`` at order M; defaults to the extreme mode ``k = M``."""
        k = M if k is None else k
        c = np.zeros(2 * M + 1, dtype=complex)
        c[k + M] = 1.0
        return cls(c)

    @classmethod
    def sin_power(cls, M):
        """``sin^M x`` from ``((e^{ix} - e^{-ix}) / 2i)^M`` by the binomial theorem."""
        c = np.zeros(2 * M + 1, dtype=complex)
        scale = (2j) ** (-M)
        for j in range(M + 1):
            c[M - 2 * j + M] += scale * math.comb(M, j) * (-1) ** j
        return cls(c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, self.freqs)) @ self.coefficients

    def deriv_values(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(1j * np.multiply.outer(x, self.freqs)) @ (1j * self.freqs * self.coefficients)


def parseval_norms(T):
    """``(integral |T|^2, integral |T'|^2)`` over one period of length ``2 pi``."""
    p = np.abs(T.coefficients) ** 2
    k = T.freqs
    return 2 * math.pi * float(np.sum(p)), 2 * math.pi * float(np.sum(k**2 * p))
