"""Randomised property suites behind ``gapbump verify``.

Every check returns a :class:`Check` holding the worst residual seen and the
tolerance it is judged against.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .kernel import (
    CLOSED_FORM,
    GENERIC_EXACT,
    HALF_PI,
    KernelTable,
    kernel_g_quadrature_oracle,
)
from .quadform import (
    check_g_inequality,
    check_lemma41,
    decompose_m2,
    defect,
    kernel_gram,
    min_eigenvalue,
    quad_form,
    second_derivative_identity_residual,
)
from .search import sample_gap_sequence
from .trigsum import GapSequence, TrigPolynomial, norms_G, parseval_norms

SUITES = ("kernel", "lemma41", "m1", "m2", "bernstein")


@dataclass
class Check:
    name: str
    maxResidual: float
    tolerance: float
    trials: int

    @property
    def passed(self):
        return bool(self.maxResidual <= self.tolerance)

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def random_coefficients(rng, n, complex_=True):
    """Coefficients with ``|a_n| <= 1``."""
    r = rng.uniform(0.0, 1.0, size=n)
    if not complex_:
        return r * rng.choice([-1.0, 1.0], size=n)
    return r * np.exp(1j * rng.uniform(0.0, 2 * math.pi, size=n))


def random_instance(rng, M, max_n=8):
    n = int(rng.integers(1, max_n + 1))
    seq = sample_gap_sequence(M, n, rng)
    return seq, random_coefficients(rng, n)


def wallis(k):
    """``integral_{-pi/2}^{pi/2} cos^{2k} x dx = pi C(2k, k) / 4^k``."""
    return math.pi * math.comb(2 * k, k) / 4.0**k


# -- kernel -------------------------------------------------------------------


def kernel_checks(step=1e-2, orders=(2, 3, 4), nodes=64):
    grid = np.arange(0.0, math.pi + 0.5 * step, step)
    grid[-1] = min(grid[-1], math.pi)
    checks = []
    worst_cf_ge = worst_cf_q = worst_ge_q = 0.0
    worst_even = 0.0
    min_val = math.inf
    outside = 0.0
    for M in orders:
        cf = KernelTable(M, CLOSED_FORM)
        ge = KernelTable(M, GENERIC_EXACT)
        for t in grid:
            a, b = cf(t), ge(t)
            q = kernel_g_quadrature_oracle(M, t, nodes)
            worst_cf_ge = max(worst_cf_ge, abs(a - b))
            worst_cf_q = max(worst_cf_q, abs(a - q))
            worst_ge_q = max(worst_ge_q, abs(b - q))
            worst_even = max(worst_even, abs(cf(-t) - a), abs(ge(-t) - b))
        fine = np.arange(-math.pi, math.pi, 1e-3)
        min_val = min(min_val, float(np.min(ge(fine))), float(np.min(cf(fine))))
        far = np.array([math.pi, -math.pi, 3.5, -4.0, 10.0])
        outside = max(outside, float(np.max(np.abs(ge(far)))), float(np.max(np.abs(cf(far)))))
    n = len(grid) * len(orders)
    checks.append(Check("kernel closed_form vs generic_exact", worst_cf_ge, 1e-10, n))
    checks.append(Check("kernel closed_form vs quadrature", worst_cf_q, 1e-10, n))
    checks.append(Check("kernel generic_exact vs quadrature", worst_ge_q, 1e-10, n))
    checks.append(Check("kernel evenness", worst_even, 1e-14, n))
    checks.append(Check("kernel nonnegativity (negative part)", max(-min_val, 0.0), 0.0, len(orders)))
    checks.append(Check("kernel vanishes for |lam| >= pi", outside, 0.0, len(orders)))
    g2 = KernelTable(2, CLOSED_FORM)
    comp = max(abs(g2(t) + g2(math.pi - t) - g2(0.0)) for t in grid)
    checks.append(Check("g2(x) + g2(pi - x) = g2(0)", comp, 1e-12, len(grid)))
    return checks


# -- lemma41 ------------------------------------------------------------------


def lemma41_checks(trials, rng, orders=(2, 3, 4), max_n=8):
    worst = 0.0
    for i in range(trials):
        M = orders[i % len(orders)]
        seq, a = random_instance(rng, M, max_n)
        rep = check_lemma41(seq, a)
        worst = max(worst, rep.identityResidual / max(1.0, abs(rep.defect)))
    checks = [Check("defect = M(M-1) Q (relative)", worst, 1e-9, trials)]
    anchor = check_lemma41(GapSequence(2, (0.0,)), [1.0])
    checks.append(Check("M=2 single bump defect = pi", abs(anchor.defect - math.pi), 1e-12, 1))
    checks.append(Check("M=2 single bump M(M-1)Q = pi", abs(anchor.scaled_Q - math.pi), 1e-12, 1))
    worst_sd = 0.0
    n = 0
    for M in orders:
        for x in rng.uniform(-HALF_PI, HALF_PI, size=100):
            worst_sd = max(worst_sd, second_derivative_identity_residual(M, x))
            n += 1
    checks.append(Check("(H^M)'' = -M^2 H^M + M(M-1) H^(M-2)", worst_sd, 1e-11, n))
    return checks


# -- m1 -------------------------------------------------------------------------


def m1_checks(trials, rng, max_n=8):
    worst = 0.0
    for i in range(trials):
        n = int(rng.integers(1, max_n + 1))
        seq = sample_gap_sequence(1, n, rng)
        a = random_coefficients(rng, n, complex_=bool(i % 2))
        norm_sq, deriv_sq = norms_G(seq, a)
        if norm_sq > 0:
            worst = max(worst, abs(deriv_sq - norm_sq) / norm_sq)
    return [Check("M=1 equality |G'|^2 = |G|^2 (relative)", worst, 1e-10, trials)]


# -- m2 -------------------------------------------------------------------------


def m2_checks(trials, rng, max_n=8, g_samples=200):
    table = KernelTable(2, CLOSED_FORM)
    g0 = table(0.0)
    worst_defect = worst_eig = worst_dec = worst_pair = worst_diag = 0.0
    for _ in range(trials):
        seq, a = random_instance(rng, 2, max_n)
        norm_sq, deriv_sq = norms_G(seq, a)
        D = 4 * norm_sq - deriv_sq
        if norm_sq > 0:
            worst_defect = max(worst_defect, -D / (4 * norm_sq))
        worst_eig = max(worst_eig, -min_eigenvalue(kernel_gram(seq, table)) / g0)
        pair_sum, diag_sum, residual = decompose_m2(seq, a, table)
        Q = quad_form(seq, a, table)
        scale = max(g0 * float(np.sum(np.abs(a) ** 2)), 1e-300)
        worst_dec = max(worst_dec, residual / max(1.0, abs(Q)))
        worst_pair = max(worst_pair, -pair_sum / scale)
        worst_diag = max(worst_diag, -diag_sum / scale)
    checks = [
        Check("M=2 defect >= 0 (negative part / M^2|G|^2)", max(worst_defect, 0.0), 1e-10, trials),
        Check("M=2 kernel Gram min eigenvalue >= 0 (negative part / g(0))", max(worst_eig, 0.0), 1e-10, trials),
        Check("M=2 decomposition residual", worst_dec, 1e-10, trials),
        Check("M=2 pair sum >= 0 (negative part / scale)", max(worst_pair, 0.0), 1e-12, trials),
        Check("M=2 diagonal sum >= 0 (negative part / scale)", max(worst_diag, 0.0), 1e-12, trials),
    ]
    checks.extend(g_inequality_checks(rng, g_samples, table))
    return checks


def g_inequality_checks(rng, samples, table=None):
    table = table or KernelTable(2, CLOSED_FORM)
    worst_neg = 0.0
    for _ in range(samples):
        a = rng.uniform(0.0, 2 * math.pi)
        b = rng.uniform(max(math.pi - a, 0.0), 2 * math.pi)
        if a + b < math.pi:
            b = math.pi - a
        worst_neg = max(worst_neg, -check_g_inequality(a, b, table))
    worst_eq = 0.0
    for a in np.linspace(0.0, math.pi, samples):
        worst_eq = max(worst_eq, abs(check_g_inequality(a, math.pi - a, table)))
    return [
        Check("g(0) - g(a) - g(b) >= 0 for a + b >= pi", worst_neg, 1e-12, samples),
        Check("g(a) + g(b) = g(0) on a + b = pi", worst_eq, 1e-12, samples),
    ]


# -- bernstein ------------------------------------------------------------------


def single_bump_ratio(M):
    norm_sq, deriv_sq = norms_G(GapSequence(M, (0.0,)), [1.0])
    return deriv_sq / norm_sq


def bernstein_scan(M, trials, rng):
    """Largest ``|T'|^2 / |T|^2`` over random order-M polynomials plus fixed cases."""
    cases = [("exp(iMx)", TrigPolynomial.monomial(M)), ("sin^M", TrigPolynomial.sin_power(M))]
    for i in range(trials):
        c = rng.standard_normal(2 * M + 1) + 1j * rng.standard_normal(2 * M + 1)
        cases.append((f"random[{i}]", TrigPolynomial(c)))
    best_label, best = None, -math.inf
    violations = 0
    for label, T in cases:
        norm_sq, deriv_sq = parseval_norms(T)
        r = deriv_sq / norm_sq
        if deriv_sq > M**2 * norm_sq * (1 + 1e-12):
            violations += 1
        if r > best:
            best_label, best = label, r
    return {"M": M, "maxRatio": best, "bound": M**2, "argmax": best_label,
            "violations": violations, "cases": len(cases)}


def bernstein_checks(trials, rng, orders=range(1, 9), bump_orders=range(1, 7)):
    worst_excess = 0.0
    worst_extreme = 0.0
    worst_sin = 0.0
    for M in orders:
        scan = bernstein_scan(M, trials, rng)
        worst_excess = max(worst_excess, (scan["maxRatio"] - M**2) / M**2)
        n, d = parseval_norms(TrigPolynomial.monomial(M))
        worst_extreme = max(worst_extreme, abs(d - M**2 * n))
        n, d = parseval_norms(TrigPolynomial.sin_power(M))
        worst_sin = max(worst_sin, abs(d / n - M**2 / (2 * M - 1)) / (M**2 / (2 * M - 1)))
    checks = [
        Check("|T'|^2 <= M^2 |T|^2 (relative excess)", max(worst_excess, 0.0), 1e-12, trials * len(orders)),
        Check("exp(iMx) attains equality", worst_extreme, 1e-12, len(orders)),
        Check("sin^M ratio = M^2/(2M-1)", worst_sin, 1e-12, len(orders)),
    ]
    worst_law = 0.0
    worst_wallis = 0.0
    worst_reflect = 0.0
    for M in bump_orders:
        law = M**2 / (2 * M - 1)
        worst_law = max(worst_law, abs(single_bump_ratio(M) - law) / law)
        norm_sq, deriv_sq = norms_G(GapSequence(M, (0.0,)), [1.0])
        wn = wallis(M)
        wd = M**2 * (wallis(M - 1) - wallis(M))
        worst_wallis = max(worst_wallis, abs(norm_sq - wn) / wn, abs(deriv_sq - wd) / wd)
        pn, pd = parseval_norms(TrigPolynomial.sin_power(M))
        worst_reflect = max(worst_reflect, abs(norm_sq - pn / 2) / norm_sq, abs(deriv_sq - pd / 2) / deriv_sq)
    checks.append(Check("single bump ratio = M^2/(2M-1)", worst_law, 1e-10, len(bump_orders)))
    checks.append(Check("single bump norms match Wallis integrals", worst_wallis, 1e-10, len(bump_orders)))
    checks.append(Check("bump norms = half the sin^M period norms", worst_reflect, 1e-10, len(bump_orders)))
    single_defect = defect(GapSequence(2, (0.0,)), [1.0])
    checks.append(Check("M=2 single bump defect = pi", abs(single_defect - math.pi), 1e-12, 1))
    return checks


def run_suite(name, trials, seed):
    """Run one suite (or ``all``) and return a JSON-ready report."""
    if name == "all":
        names = SUITES
    elif name in SUITES:
        names = (name,)
    else:
        raise ValueError(f"unknown suite {name!r}")
    checks = []
    for suite in names:
        rng = np.random.default_rng([seed, SUITES.index(suite)])
        if suite == "kernel":
            checks += kernel_checks()
        elif suite == "lemma41":
            checks += lemma41_checks(trials, rng)
        elif suite == "m1":
            checks += m1_checks(trials, rng)
        elif suite == "m2":
            checks += m2_checks(trials, rng)
        else:
            checks += bernstein_checks(trials, rng)
    return {
        "suite": name,
        "trials": trials,
        "seed": seed,
        "passed": all(c.passed for c in checks),
        "checks": [c.to_dict() for c in checks],
    }
