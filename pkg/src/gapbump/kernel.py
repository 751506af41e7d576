"""The truncated cosine bump H^M and the correlation kernel g_M.

``H(x) = cos x`` on ``[-pi/2, pi/2]`` and zero elsewhere.  The kernel is

    g_M(lam) = integral of H^M(x + lam) * H^(M-2)(x) dx,

an even, nonnegative function supported in ``(-pi, pi)``.  Closed forms are
hard-coded for M = 2, 3, 4; any M >= 2 can be evaluated exactly by expanding
both cosine powers into complex exponentials and integrating term by term.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import MIN_NODES, gauss_legendre

HALF_PI = 0.5 * math.pi

CLOSED_FORM = "closed_form"
GENERIC_EXACT = "generic_exact"
METHODS = (CLOSED_FORM, GENERIC_EXACT)
CLOSED_FORM_ORDERS = (2, 3, 4)


def _check_order(M, minimum):
    if isinstance(M, bool) or not isinstance(M, (int, np.integer)):
        raise TypeError(f"bump order must be an integer, got {M!r}")
    if M < minimum:
        raise ValueError(f"bump order must be >= {minimum}, got {M}")
    return int(M)


def _check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _scalar_or_array(arr):
    return float(arr) if arr.ndim == 0 else arr


def bump_eval(M, x):
    """Return ``H^M(x)``: ``cos(x)**M`` on ``|x| <= pi/2``, else 0.

    ``M = 0`` gives the indicator of the closed interval ``[-pi/2, pi/2]``.
    Accepts scalars or arrays.
    """
    M = _check_order(M, 0)
    x = _check_finite(x)
    inside = np.abs(x) <= HALF_PI
    out = np.where(inside, np.cos(x) ** M, 0.0)
    return _scalar_or_array(out)


def bump_deriv(M, x):
    """Return ``(H^M)'(x) = -M cos^(M-1)(x) sin(x)`` inside the support.

    The value at ``|x| = pi/2`` is 0 for every M, including M = 1 where the
    two-sided derivative does not exist.
    """
    M = _check_order(M, 1)
    x = _check_finite(x)
    inside = np.abs(x) < HALF_PI
    out = np.where(inside, -M * np.cos(x) ** (M - 1) * np.sin(x), 0.0)
    return _scalar_or_array(out)


@lru_cache(maxsize=None)
def cos_power_terms(M):
    """Frequencies and weights with ``cos^M x = sum w_j exp(i f_j x)``.

    Returns ``(freqs, weights)`` with ``f_j = M - 2j`` and
    ``w_j = C(M, j) / 2^M`` for ``j = 0..M``.
    """
    j = np.arange(M + 1)
    freqs = M - 2 * j
    weights = np.array([math.comb(M, int(k)) for k in j], dtype=float) / 2.0**M
    freqs.setflags(write=False)
    weights.setflags(write=False)
    return freqs, weights


def exp_integral(k, lo, hi):
    """Exact ``integral_lo^hi exp(i k x) dx`` for integer (array) ``k``.

    Nonzero frequencies use ``exp(i k mid) * 2 sin(k h) / k`` with ``mid``, ``h``
    the midpoint and half-length, which equals ``(e^{ik hi} - e^{ik lo}) / (ik)``
    without the cancellation.  Frequency 0 is the interval length.
    """
    k = np.asarray(k, dtype=float)
    length = hi - lo
    mid = 0.5 * (hi + lo)
    half = 0.5 * length
    safe_k = np.where(k == 0, 1.0, k)
    osc = np.exp(1j * k * mid) * (2.0 * np.sin(k * half) / safe_k)
    return np.where(k == 0, length + 0j, osc)


def _g_closed(M, lam):
    # lam in [0, pi]; from 4 g2, 32 g3, 192 g4
    r = math.pi - lam
    if M == 2:
        return (2.0 * r + math.sin(2.0 * lam)) / 4.0
    if M == 3:
        return (12.0 * r * math.cos(lam) + 9.0 * math.sin(lam) + math.sin(3.0 * lam)) / 32.0
    return (
        36.0 * r + 24.0 * r * math.cos(2.0 * lam) + 28.0 * math.sin(2.0 * lam) + math.sin(4.0 * lam)
    ) / 192.0


def _g_generic(M, lam):
    # lam in [0, pi); overlap of supports is [-pi/2, pi/2 - lam]
    f1, w1 = cos_power_terms(M)
    f2, w2 = cos_power_terms(M - 2)
    c1 = w1 * np.exp(1j * f1 * lam)
    freq = f1[:, None] + f2[None, :]
    coef = c1[:, None] * w2[None, :]
    total = np.sum(coef * exp_integral(freq, -HALF_PI, HALF_PI - lam))
    return float(total.real)


@dataclass(frozen=True)
class KernelTable:
    """Evaluator for ``g_M``; call it like a function of ``lam``."""

    M: int
    method: str = GENERIC_EXACT

    def __post_init__(self):
        _check_order(self.M, 2)
        if self.method not in METHODS:
            raise ValueError(f"unknown kernel method {self.method!r}; expected one of {METHODS}")
        if self.method == CLOSED_FORM and self.M not in CLOSED_FORM_ORDERS:
            raise ValueError(f"closed form only available for M in {CLOSED_FORM_ORDERS}, got M={self.M}")

    @classmethod
    def best(cls, M):
        """Closed form where one exists, generic exact otherwise."""
        return cls(M, CLOSED_FORM if M in CLOSED_FORM_ORDERS else GENERIC_EXACT)

    def __call__(self, lam):
        return kernel_g(self, lam)

    @property
    def at_zero(self):
        return kernel_g(self, 0.0)


def kernel_g(table, lam):
    """Evaluate ``g_M(lam)``; exactly 0 for ``|lam| >= pi``. Scalars or arrays."""
    lam = _check_finite(lam, "lam")
    flat = np.abs(lam).ravel()
    out = np.zeros(flat.shape)
    impl = _g_closed if table.method == CLOSED_FORM else _g_generic
    for i, t in enumerate(flat):
        if t < math.pi:
            # rounding near lam = pi can dip below the true value 0
            out[i] = max(impl(table.M, float(t)), 0.0)
    return _scalar_or_array(out.reshape(lam.shape))


def kernel_g_quadrature_oracle(M, lam, nodes=64):
    """Gauss-Legendre value of ``g_M(lam)`` over the support intersection.

    Independent of the exponential-sum algebra: it evaluates the bump
    pointwise, so it serves as a cross-check for :func:`kernel_g`.
    """
    M = _check_order(M, 2)
    if nodes < MIN_NODES:
        raise ValueError(f"need at least {MIN_NODES} quadrature nodes, got {nodes}")
    lam = float(_check_finite(lam, "lam"))
    t = abs(lam)
    if t >= math.pi:
        return 0.0

    def integrand(x):
        return np.cos(x + t) ** M * np.cos(x) ** (M - 2)

    return float(gauss_legendre(integrand, -HALF_PI, HALF_PI - t, nodes))
