"""Randomised counterexample search over gap-constrained shift sequences.

Two objectives probe the same inequality:

* ``maxRatio``: the top generalized eigenvalue of the derivative/function
  Gram pencil ``(A, B)`` divided by ``M^2``.  A value above 1 violates
  ``|G'|^2 <= M^2 |G|^2`` for the corresponding coefficient vector.
* ``minEig``: the smallest eigenvalue of the kernel Gram matrix relative to
  ``g_M(0)``.  A negative value does the same through the defect identity.

The search space parameters are heuristics; nothing here certifies global
optimality.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .kernel import KernelTable, bump_deriv, bump_eval, kernel_g_quadrature_oracle
from .quadform import kernel_gram, min_eigenvalue
from .quadrature import piecewise_gauss_legendre
from .trigsum import GapSequence, as_coefficients, build_G, gram_matrices, norms_G

logger = logging.getLogger(__name__)

MAX_RATIO = "maxRatio"
MIN_EIG = "minEig"
OBJECTIVES = (MAX_RATIO, MIN_EIG)

REFUTE_TOL = 1e-9
RECHECK_NODES = 4 * 64
SINGULAR_COND = 1e10
UINT64 = 2**64


class SingularGramError(ValueError):
    """The function Gram matrix is numerically singular (colliding shifts)."""


@dataclass(frozen=True)
class SearchConfig:
    M: int
    N: int
    restarts: int = 20
    localIterations: int = 40
    seed: int = 0
    stepScale: float = 0.5

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.localIterations < 0:
            raise ValueError("localIterations must be >= 0")
        if not 0 <= self.seed < UINT64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not self.stepScale > 0:
            raise ValueError("stepScale must be positive")


@dataclass
class SearchReport:
    config: SearchConfig
    bestRatio: float
    rayleighTheta: float
    bestMinEig: float | None
    witnessShifts: GapSequence
    witnessCoeffs: np.ndarray
    minEigShifts: GapSequence | None
    evaluations: int
    refuted: bool
    ratioHistory: list = field(default_factory=list)

    def to_dict(self):
        return {
            "config": {
                "M": self.config.M,
                "N": self.config.N,
                "restarts": self.config.restarts,
                "localIterations": self.config.localIterations,
                "seed": self.config.seed,
                "stepScale": self.config.stepScale,
            },
            "bestRatio": self.bestRatio,
            "rayleighTheta": self.rayleighTheta,
            "bestMinEig": self.bestMinEig,
            "witnessShifts": list(self.witnessShifts.shifts),
            "witnessCoeffs": [[float(c.real), float(c.imag)] for c in self.witnessCoeffs],
            "minEigShifts": None if self.minEigShifts is None else list(self.minEigShifts.shifts),
            "evaluations": self.evaluations,
            "refuted": self.refuted,
        }


def max_rayleigh(seq):
    """Largest ``theta`` with ``A a = theta B a`` and its eigenvector.

    ``B`` is factored as ``L L^T``; the pencil becomes the standard symmetric
    problem ``L^-1 A L^-T``.  The returned vector satisfies ``a^T B a = 1``.
    """
    B, A = gram_matrices(seq)
    if np.linalg.cond(B) > SINGULAR_COND:
        raise SingularGramError(f"Gram matrix is numerically singular for shifts {seq.shifts}")
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(f"Gram matrix is not positive definite for shifts {seq.shifts}") from exc
    X = scipy.linalg.solve_triangular(L, A, lower=True)
    C = scipy.linalg.solve_triangular(L, X.T, lower=True)
    C = 0.5 * (C + C.T)
    w, V = np.linalg.eigh(C)
    theta = float(w[-1])
    a = scipy.linalg.solve_triangular(L.T, V[:, -1], lower=False)
    a = a / math.sqrt(a @ B @ a)
    i = int(np.argmax(np.abs(a)))
    if a[i] < 0:
        a = -a
    return theta, a.astype(complex)


def repair_increments(M, increments):
    """Scale up every window of ``M`` consecutive increments to total at least ``pi``.

    Windows are processed left to right; a window summing to zero is split
    evenly.  Later repairs only enlarge increments, so earlier windows stay
    valid.
    """
    d = np.array(increments, dtype=float)
    for n in range(max(d.size - M + 1, 0)):
        s = d[n : n + M].sum()
        if s >= math.pi:
            continue
        if s > 0:
            d[n : n + M] *= math.pi / s
        else:
            d[n : n + M] = math.pi / M
    return d


def shifts_from_increments(M, increments):
    """Cumulative shifts starting at 0, nudged upward so every window is exactly ``>= pi``."""
    lam = np.concatenate([[0.0], np.cumsum(increments)])
    for n in range(lam.size - M):
        gap = lam[n + M] - lam[n]
        if gap < math.pi:
            lam[n + M :] += math.pi - gap
            while lam[n + M] - lam[n] < math.pi:
                lam[n + M :] = np.nextafter(lam[n + M :], np.inf)
    return GapSequence(M, tuple(lam))


def sample_gap_sequence(M, N, rng, increments=None):
    """Random gap-valid shifts: increments uniform on ``(0, 2 pi / M]``, then repaired.

    ``increments`` overrides the random draw (length ``N - 1``).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if increments is None:
        high = 2 * math.pi / M
        increments = high - rng.uniform(0.0, high, size=N - 1)
    increments = np.asarray(increments, dtype=float)
    if increments.shape != (N - 1,):
        raise ValueError(f"expected {N - 1} increments")
    if np.any(increments < 0):
        raise ValueError("increments must be nonnegative")
    return shifts_from_increments(M, repair_increments(M, increments))


def objective_value(seq, objective):
    """Score to maximise: ratio ``theta / M^2`` or ``-minEig / g(0)``."""
    if objective == MAX_RATIO:
        theta, _ = max_rayleigh(seq)
        return theta / seq.M**2
    if objective == MIN_EIG:
        K = kernel_gram(seq)
        return -min_eigenvalue(K) / K[0, 0]
    raise ValueError(f"unknown objective {objective!r}")


def local_refine(seq, objective, iterations, step_scale, rng, trace=None):
    """Coordinate-wise random perturbation of the increments with step halving.

    One iteration perturbs a single increment; a sweep covers every increment
    once, and the step is halved after a sweep with no improvement.  Candidates
    are repaired to satisfy the gap condition and only strict improvements are
    accepted, so the objective is monotone.  Appends accepted values to
    ``trace`` when given.
    """
    if iterations <= 0 or len(seq) < 2:
        return seq
    best = seq
    try:
        best_val = objective_value(seq, objective)
    except SingularGramError:
        best_val = -math.inf
    if trace is not None:
        trace.append(best_val)
    d = np.diff(seq.array)
    step = step_scale
    improved = False
    for it in range(iterations):
        k = it % d.size
        trial = d.copy()
        trial[k] = abs(trial[k] + step * rng.standard_normal())
        if trial[k] == 0.0:
            trial[k] = step
        try:
            cand = sample_gap_sequence(seq.M, len(seq), rng, repair_increments(seq.M, trial))
            val = objective_value(cand, objective)
        except SingularGramError:
            val = -math.inf
        if val > best_val:
            best, best_val, d, improved = cand, val, np.diff(cand.array), True
            if trace is not None:
                trace.append(best_val)
        if k == d.size - 1:
            if not improved:
                step *= 0.5
            improved = False
    logger.debug("local_refine %s -> %.17g", objective, best_val)
    return best


def quadrature_norms(seq, a, nodes=RECHECK_NODES):
    """``(|G|^2, |G'|^2)`` by piecewise Gauss-Legendre on pointwise bump values."""
    a = as_coefficients(a, len(seq))
    lam = seq.array
    bp = build_G(seq, a).breakpoints

    def g(x):
        return sum(c * bump_eval(seq.M, x + s) for c, s in zip(a, lam))

    def dg(x):
        return sum(c * bump_deriv(seq.M, x + s) for c, s in zip(a, lam))

    norm_sq = piecewise_gauss_legendre(lambda x: np.abs(g(x)) ** 2, bp, nodes)
    deriv_sq = piecewise_gauss_legendre(lambda x: np.abs(dg(x)) ** 2, bp, nodes)
    return float(norm_sq), float(deriv_sq)


def quadrature_kernel_gram(seq, nodes=RECHECK_NODES):
    lam = seq.array
    return np.array([[kernel_g_quadrature_oracle(seq.M, lm - ln, nodes) for ln in lam] for lm in lam])


def confirm_refutation(seq, a):
    """Re-evaluate a flagged candidate with quadrature; True if it still violates.

    For ``M >= 2`` a ratio violation must show up as a negative kernel Gram
    eigenvalue at the same shifts; a mismatch is an implementation error.
    """
    norm_sq, deriv_sq = quadrature_norms(seq, a)
    ratio_bad = deriv_sq > (1 + REFUTE_TOL) * seq.M**2 * norm_sq
    if seq.M < 2:
        return bool(ratio_bad)
    K = quadrature_kernel_gram(seq)
    eig_bad = min_eigenvalue(0.5 * (K + K.T)) < -REFUTE_TOL * K[0, 0]
    if ratio_bad and not eig_bad:
        raise AssertionError(f"ratio violation without negative kernel eigenvalue at {seq.shifts}")
    return bool(ratio_bad or eig_bad)


def _well_conditioned_start(config, rng, attempts=100):
    for _ in range(attempts):
        seq = sample_gap_sequence(config.M, config.N, rng)
        try:
            max_rayleigh(seq)
        except SingularGramError:
            continue
        return seq
    raise SingularGramError("could not draw a well-conditioned starting sequence")


def _run_restart(config, restart):
    rng = np.random.default_rng((config.seed + restart) % UINT64)
    start = _well_conditioned_start(config, rng)
    trace = []
    seq = local_refine(start, MAX_RATIO, config.localIterations, config.stepScale, rng, trace)
    theta, a = max_rayleigh(seq)
    # the pencil loses accuracy like cond(B) * eps, the norms of G do not
    norm_sq, deriv_sq = norms_G(seq, a)
    result = {
        "restart": restart,
        "ratio": deriv_sq / (config.M**2 * norm_sq),
        "theta": theta / config.M**2,
        "shifts": seq,
        "coeffs": a,
        "trace": trace,
        "minEig": None,
        "minEigShifts": None,
        "evaluations": 1 + config.localIterations,
    }
    if config.M >= 2:
        eig_seq = local_refine(seq, MIN_EIG, config.localIterations, config.stepScale, rng)
        result["minEig"] = min_eigenvalue(kernel_gram(eig_seq))
        result["minEigShifts"] = eig_seq
        result["evaluations"] += 1 + config.localIterations
    return result


def search_counterexample(config, workers=1):
    """Run ``restarts`` independent sample-and-refine rounds and merge them.

    Restart ``r`` uses seed ``seed + r``; merging keeps the best objective and
    breaks ties by the lowest restart index, so ``workers > 1`` gives the same
    report as a serial run.
    """
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_restart, [config] * config.restarts, range(config.restarts)))
    else:
        results = [_run_restart(config, r) for r in range(config.restarts)]

    best = results[0]
    for r in results[1:]:
        if r["ratio"] > best["ratio"]:
            best = r
    worst_eig = None
    if config.M >= 2:
        worst_eig = results[0]
        for r in results[1:]:
            if r["minEig"] < worst_eig["minEig"]:
                worst_eig = r

    g0 = KernelTable.best(config.M).at_zero if config.M >= 2 else None
    flagged = best["ratio"] > 1 + REFUTE_TOL
    if worst_eig is not None and worst_eig["minEig"] < -REFUTE_TOL * g0:
        flagged = True
    refuted = False
    if flagged:
        logger.warning("candidate flagged; re-checking with quadrature")
        refuted = confirm_refutation(best["shifts"], best["coeffs"])
        if worst_eig is not None and not refuted:
            seq = worst_eig["minEigShifts"]
            K = kernel_gram(seq)
            w, V = np.linalg.eigh(K)
            refuted = confirm_refutation(seq, V[:, 0])

    return SearchReport(
        config=config,
        bestRatio=best["ratio"],
        rayleighTheta=best["theta"],
        bestMinEig=None if worst_eig is None else worst_eig["minEig"],
        witnessShifts=best["shifts"],
        witnessCoeffs=best["coeffs"],
        minEigShifts=None if worst_eig is None else worst_eig["minEigShifts"],
        evaluations=sum(r["evaluations"] for r in results),
        refuted=refuted,
        ratioHistory=best["trace"],
    )


def witness_ratio(report):
    """Re-evaluate ``|G'|^2 / (M^2 |G|^2)`` at the report's witness via the exact norms."""
    seq = report.witnessShifts
    norm_sq, deriv_sq = norms_G(seq, report.witnessCoeffs)
    return deriv_sq / (seq.M**2 * norm_sq)
