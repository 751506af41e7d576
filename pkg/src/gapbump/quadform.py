"""Kernel quadratic forms, the norm-defect identity and the M = 2 machinery.

For a gap sequence of order ``M >= 2`` the defect

    D = M^2 |G|^2 - |G'|^2

equals ``M (M - 1) Q`` with ``Q = sum g_M(lam_m - lam_n) a_m conj(a_n)``, so
the inequality ``D >= 0`` is equivalent to the kernel Gram matrix being
positive semidefinite.  For ``M = 2`` the quadratic form splits into two
manifestly nonnegative sums.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernel import HALF_PI, KernelTable, _check_order, cos_power_terms
from .trigsum import GapConditionError, as_coefficients, gap_violation, norms_G

IDENTITY_RTOL = 1e-9


def _table(M):
    return KernelTable.best(M)


def kernel_gram(seq, table=None):
    """Matrix of ``g_M(lam_m - lam_n)``; symmetric, diagonal ``g_M(0)``."""
    if seq.M < 2:
        raise ValueError(f"kernel Gram matrix needs M >= 2, got M={seq.M}")
    table = table or _table(seq.M)
    lam = seq.array
    n = lam.size
    K = np.zeros((n, n))
    g0 = table(0.0)
    for m in range(n):
        K[m, m] = g0
        for k in range(m + 1, n):
            K[m, k] = K[k, m] = table(lam[k] - lam[m])
    return K


def quad_form(seq, a, table=None):
    """``sum_{m,n} g(lam_m - lam_n) a_m conj(a_n)`` as an explicit double sum."""
    if seq.M < 2:
        raise ValueError(f"quadratic form needs M >= 2, got M={seq.M}")
    table = table or _table(seq.M)
    a = as_coefficients(a, len(seq))
    lam = seq.shifts
    total = 0j
    for m in range(len(lam)):
        for n in range(len(lam)):
            total += table(lam[m] - lam[n]) * a[m] * np.conj(a[n])
    return float(total.real)


def defect(seq, a):
    """``M^2 |G|^2 - |G'|^2``; nonnegative exactly when the inequality holds."""
    norm_sq, deriv_sq = norms_G(seq, a)
    return seq.M**2 * norm_sq - deriv_sq


@dataclass
class QuadFormReport:
    M: int
    kernelGram: np.ndarray
    Q: float
    normSq: float
    derivNormSq: float
    defect: float
    identityResidual: float
    minEigenvalue: float
    termScale: float = 0.0

    @property
    def scaled_Q(self):
        return self.M * (self.M - 1) * self.Q

    @property
    def passed(self):
        # relative to the summed magnitudes: cancelling coefficients inflate rounding
        return self.identityResidual <= IDENTITY_RTOL * max(1.0, abs(self.defect), self.termScale)

    def to_dict(self):
        return {
            "M": self.M,
            "normSq": self.normSq,
            "derivNormSq": self.derivNormSq,
            "defect": self.defect,
            "Q": self.Q,
            "M(M-1)Q": self.scaled_Q,
            "identityResidual": self.identityResidual,
            "minEigenvalue": self.minEigenvalue,
            "termScale": self.termScale,
        }


def check_lemma41(seq, a):
    """Compare the defect from the function norms with ``M (M - 1) Q``."""
    if seq.M < 2:
        raise ValueError(f"defect identity needs M >= 2, got M={seq.M}")
    K = kernel_gram(seq)
    Q = quad_form(seq, a)
    norm_sq, deriv_sq = norms_G(seq, a)
    D = seq.M**2 * norm_sq - deriv_sq
    mag = np.abs(np.asarray(a))
    return QuadFormReport(
        M=seq.M,
        kernelGram=K,
        Q=Q,
        normSq=norm_sq,
        derivNormSq=deriv_sq,
        defect=D,
        identityResidual=abs(D - seq.M * (seq.M - 1) * Q),
        minEigenvalue=min_eigenvalue(K),
        termScale=float(seq.M * (seq.M - 1) * (mag @ np.abs(K) @ mag)),
    )


def second_derivative_identity_residual(M, x):
    """``|(H^M)'' + M^2 H^M - M (M - 1) H^(M-2)|`` at ``x``.

    ``(H^M)''`` comes from the exponential expansion of ``cos^M``.  Rejected
    at ``|x| = pi/2`` where only one-sided derivatives exist.
    """
    M = _check_order(M, 2)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if abs(x) == HALF_PI:
        raise ValueError("identity is only one-sided at |x| = pi/2")
    if abs(x) > HALF_PI:
        return 0.0
    f, w = cos_power_terms(M)
    second = float(np.sum(-(f**2) * w * np.exp(1j * f * x)).real)
    c = math.cos(x)
    return abs(second + M**2 * c**M - M * (M - 1) * c ** (M - 2))


def decompose_m2(seq, a, table=None):
    """Split the M = 2 quadratic form into ``(pairSum, diagSum, residual)``.

    ``pairSum = sum g(lam_{n+1} - lam_n) |a_n + a_{n+1}|^2`` and
    ``diagSum = sum (g(0) - g(lam_n - lam_{n-1}) - g(lam_{n+1} - lam_n)) |a_n|^2``,
    with out-of-range neighbours contributing ``g = 0``.  ``residual`` is the
    distance of their sum from :func:`quad_form`.
    """
    if seq.M != 2:
        raise ValueError(f"decomposition is for M = 2 only, got M={seq.M}")
    pair = gap_violation(2, seq.shifts)
    if pair is not None:
        raise GapConditionError(f"gap condition violated at {pair}", pair)
    table = table or _table(2)
    a = as_coefficients(a, len(seq))
    lam = seq.shifts
    n = len(lam)
    g0 = table(0.0)
    nxt = [table(lam[k + 1] - lam[k]) for k in range(n - 1)] + [0.0]
    prv = [0.0] + nxt[:-1]
    pair_sum = sum(nxt[k] * abs(a[k] + a[k + 1]) ** 2 for k in range(n - 1))
    diag_sum = sum((g0 - prv[k] - nxt[k]) * abs(a[k]) ** 2 for k in range(n))
    Q = quad_form(seq, a, table)
    return float(pair_sum), float(diag_sum), abs(pair_sum + diag_sum - Q)


def check_g_inequality(a_gap, b_gap, table=None):
    """``g(0) - g(a) - g(b)`` for the M = 2 kernel; needs ``a, b >= 0``, ``a + b >= pi``."""
    if a_gap < 0 or b_gap < 0:
        raise ValueError("gaps must be nonnegative")
    if a_gap + b_gap < math.pi:
        raise ValueError(f"gaps must sum to at least pi, got {a_gap + b_gap!r}")
    table = table or _table(2)
    return table(0.0) - table(a_gap) - table(b_gap)


def jacobi_eigenvalues(S, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Stops when the off-diagonal Frobenius norm drops to ``tol * |S|_F``.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    scale = np.linalg.norm(A)
    if n == 1 or scale == 0:
        return np.sort(np.diag(A))
    target = tol * scale
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = A[q, p] = 0.0
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(A))


def min_eigenvalue(S):
    """Smallest eigenvalue of a symmetric matrix (Jacobi rotations)."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(S), initial=0.0)):
        raise ValueError("matrix is not symmetric")
    return float(jacobi_eigenvalues(0.5 * (S + S.T))[0])
