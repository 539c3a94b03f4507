"""Entire solutions of ``d_m y = A y`` built from kernel values and Jordan chains.

Each Jordan chain ``u_1 .. u_L`` of an eigenvalue ``lam`` contributes ``L``
solutions; the one of depth ``q`` is

    y(z) = sum_{i=1}^{q} Delta_{q-i} E(lam z) u_i.

Cauchy data given at ``z0`` are handled by translation: the returned
solution is ``sum_k C_k term_k(z - z0)``.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CancellationFailure, OverflowGuard, SingularFundamentalMatrix
from .kernel import EPS, EvalResult, delta_coefficients, eval_delta_h
from .moments import MomentFamily, log_moments, moment_ratios
from .spectral import JordanDecomposition, as_matrix

__all__ = [
    "SolutionTerm",
    "FundamentalSolution",
    "CauchySolution",
    "Evaluation",
    "fundamental_system",
    "solve_cauchy",
    "eval_solution",
    "eval_many",
    "oracle_eval",
    "residual_check",
    "solution_coefficients",
]


@dataclass(frozen=True)
class SolutionTerm:
    lam: complex
    chain_vectors: tuple[np.ndarray, ...]
    depth: int

    def __post_init__(self) -> None:
        if not 1 <= self.depth <= len(self.chain_vectors):
            raise ValueError(f"depth {self.depth} outside 1..{len(self.chain_vectors)}")

    def pieces(self):
        """Pairs ``(h, u)`` with the term equal to ``sum Delta_h E(lam z) u``."""
        q = self.depth
        return [(q - i, self.chain_vectors[i - 1]) for i in range(1, q + 1)]

    def value_at_origin(self) -> np.ndarray:
        # Delta_h E vanishes at 0 for h >= 1, and E(0) = 1
        return np.array(self.chain_vectors[self.depth - 1], dtype=complex)


@dataclass(frozen=True)
class FundamentalSolution:
    family: MomentFamily
    A: np.ndarray
    terms: tuple[SolutionTerm, ...]
    decomposition: JordanDecomposition | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class CauchySolution:
    fundamental: FundamentalSolution
    z0: complex
    y0: np.ndarray
    constants: np.ndarray
    residual: float = 0.0

    @property
    def family(self) -> MomentFamily:
        return self.fundamental.family

    @property
    def n(self) -> int:
        return self.fundamental.n


@dataclass(frozen=True)
class Evaluation:
    """Solution vector at one point with a componentwise absolute error bound."""

    z: complex
    value: np.ndarray
    error_bound: np.ndarray
    kernel_results: dict = field(default_factory=dict, repr=False)


def fundamental_system(dec: JordanDecomposition, family: MomentFamily) -> FundamentalSolution:
    terms = []
    for chain in dec.chains:
        vecs = tuple(np.array(v, dtype=complex) for v in chain.vectors)
        for q in range(1, chain.length + 1):
            terms.append(SolutionTerm(complex(chain.lam), vecs, q))
    if len(terms) != dec.n:
        raise ValueError(f"decomposition yields {len(terms)} terms for dimension {dec.n}")
    return FundamentalSolution(family, np.array(dec.matrix, dtype=complex), tuple(terms), dec)


def solve_cauchy(fund: FundamentalSolution, z0: complex, y0, tol: float = 1e-10) -> CauchySolution:
    """Constants ``C`` with ``sum_k C_k term_k(z - z0)`` equal to ``y0`` at ``z0``."""
    y0 = np.asarray(y0, dtype=complex).reshape(-1)
    n = fund.n
    if y0.size != n:
        raise ValueError(f"y0 has length {y0.size}, expected {n}")
    Y = np.column_stack([t.value_at_origin() for t in fund.terms])
    scale = float(np.prod(np.linalg.norm(Y, axis=0)))
    det = abs(np.linalg.det(Y))
    if not det > 1e-10 * scale:
        raise SingularFundamentalMatrix(f"|det Y(z0)| = {det:.3e} against column scale {scale:.3e}")
    C = np.linalg.solve(Y, y0)
    res = float(np.linalg.norm(Y @ C - y0))
    if res > tol * (1.0 + np.linalg.norm(y0)):
        raise SingularFundamentalMatrix(f"Cauchy residual {res:.3e} exceeds tolerance {tol:g}")
    return CauchySolution(fund, complex(z0), y0, C, res)


def _term_order(fund: FundamentalSolution) -> list[int]:
    return sorted(range(len(fund.terms)), key=lambda k: -abs(fund.terms[k].lam))


def eval_solution(sol: CauchySolution, z: complex, tol: float = 1e-14) -> Evaluation:
    """Evaluate the Cauchy solution at ``z`` with an aggregated error bound.

    Terms are visited by decreasing ``|lam|``. Kernel failures are re-raised
    with ``term_index`` set to the offending term.
    """
    fund = sol.fundamental
    zeta = complex(z) - sol.z0
    n = fund.n
    cache: dict[tuple[complex, int], EvalResult] = {}
    parts = []
    err = np.zeros(n)
    for k in _term_order(fund):
        C = sol.constants[k]
        if C == 0:
            continue
        term = fund.terms[k]
        for h, u in term.pieces():
            key = (term.lam, h)
            if key not in cache:
                try:
                    cache[key] = eval_delta_h(fund.family, term.lam, h, zeta, tol)
                except CancellationFailure as exc:
                    raise CancellationFailure(
                        f"term {k} (lambda={term.lam:.6g}, h={h}): {exc}", exc.ratio, term_index=k
                    ) from exc
            r = cache[key]
            parts.append(C * r.value * u)
            err += abs(C) * r.abs_error_bound * np.abs(u)
    if parts:
        stack = np.array(parts)
        value = np.array(
            [complex(math.fsum(stack[:, j].real), math.fsum(stack[:, j].imag)) for j in range(n)]
        )
        err += EPS * np.abs(stack).sum(axis=0)
    else:
        value = np.zeros(n, dtype=complex)
    if not np.all(np.isfinite(value)):
        raise OverflowGuard(f"solution value overflows at z={complex(z)}")
    return Evaluation(complex(z), value, err, cache)


def _workers() -> int:
    raw = os.environ.get("MOMENTFLOW_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def eval_many(sol: CauchySolution, zs, tol: float = 1e-14, threads: int | None = None) -> list[Evaluation]:
    """Evaluate over a grid. Solution objects are immutable, so points run independently."""
    zs = [complex(z) for z in zs]
    threads = threads or _workers()
    if threads == 1 or len(zs) < 2:
        return [eval_solution(sol, z, tol) for z in zs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda z: eval_solution(sol, z, tol), zs))


def oracle_eval(A, family: MomentFamily, y0, z: complex, N: int) -> np.ndarray:
    """Brute-force ``sum_{p=0}^{N} A^p y0 z^p / m(p)`` with Cauchy data at the origin.

    Each term is stored as a unit vector times ``exp(L_p)`` and the sum is
    rescaled by the largest ``L_p`` before it is formed.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    A = as_matrix(A)
    v = np.asarray(y0, dtype=complex).reshape(-1)
    z = complex(z)
    n = v.size
    if A.shape[0] != n:
        raise ValueError("y0 length does not match the matrix")
    norm = np.linalg.norm(v)
    if norm == 0:
        return np.zeros(n, dtype=complex)
    units = [v / norm]
    logs = [math.log(norm)]
    if z != 0:
        log_z, arg_z = math.log(abs(z)), cmath.phase(z)
        lm = log_moments(family, N + 1)
        # direction of A^p y0 with its log-norm tracked separately
        w = units[0]
        log_av = logs[0]
        for p in range(1, N + 1):
            w = A @ w
            s = np.linalg.norm(w)
            if s == 0:
                break
            w = w / s
            log_av += math.log(s)
            units.append(w * cmath.exp(1j * p * arg_z))
            logs.append(log_av + p * log_z - float(lm[p]))
    top = max(logs)
    stack = np.array([u * math.exp(L - top) for u, L in zip(units, logs)])
    total = np.array([complex(math.fsum(stack[:, j].real), math.fsum(stack[:, j].imag)) for j in range(n)])
    mag = np.max(np.abs(total))
    if mag > 0 and top + math.log(mag) > 709.0:
        raise OverflowGuard(f"oracle sum exceeds the double range (log size {top + math.log(mag):.1f})")
    with np.errstate(under="ignore"):
        return total * math.exp(top)


def solution_coefficients(sol: CauchySolution, N: int) -> np.ndarray:
    """Taylor coefficients about ``z0`` as an ``(N+1, n)`` array."""
    fund = sol.fundamental
    out = np.zeros((N + 1, fund.n), dtype=complex)
    memo: dict[tuple[complex, int], np.ndarray] = {}
    for C, term in zip(sol.constants, fund.terms):
        if C == 0:
            continue
        for h, u in term.pieces():
            key = (term.lam, h)
            if key not in memo:
                memo[key] = delta_coefficients(fund.family, term.lam, h, N)
            out += C * np.outer(memo[key], u)
    return out


def _eval_vec_series(coeffs: np.ndarray, zeta: complex) -> np.ndarray:
    powers = zeta ** np.arange(coeffs.shape[0])
    terms = coeffs * powers[:, None]
    return np.array(
        [complex(math.fsum(terms[:, j].real), math.fsum(terms[:, j].imag)) for j in range(coeffs.shape[1])]
    )


def residual_check(sol: CauchySolution, z_samples, N: int) -> float:
    """Max of ``|(d_m y - A y)(z)| / (1 + |A y(z)|)`` over samples and components.

    Both sides come from the order-``N`` Taylor coefficients of the closed
    form: ``d_m y`` from the moment derivative of the series, ``A y`` from
    applying ``A`` to it. Only the last coefficient is unmatched, so the
    residual measures truncation.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    c = solution_coefficients(sol, N)
    A = sol.fundamental.A
    deriv = c[1:] * moment_ratios(sol.family, N)[:, None]
    ay = c @ A.T
    worst = 0.0
    for z in z_samples:
        zeta = complex(z) - sol.z0
        d = _eval_vec_series(deriv, zeta)
        a = _eval_vec_series(ay, zeta)
        worst = max(worst, float(np.max(np.abs(d - a) / (1.0 + np.abs(a)))))
    return worst
