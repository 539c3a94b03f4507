"""Eigenvalues and Jordan chains of small dense complex matrices.

The characteristic polynomial comes from Faddeev-LeVerrier and its roots
from Aberth-Ehrlich iteration. Roots of a defective eigenvalue come back
split by roughly ``eps**(1/k)``; they are merged when the rank structure of
``A - mu I`` confirms the multiplicity. Null spaces of ``(A - mu I)^k`` are
built one level at a time (``x`` is in level ``k`` iff ``(A - mu I) x`` is in
level ``k - 1``), with every rank decided by Gaussian elimination with full
pivoting against a fixed threshold.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HintRejected, RankAmbiguity, RootFindingFailure

__all__ = [
    "EigenInfo",
    "Chain",
    "JordanDecomposition",
    "as_matrix",
    "char_poly",
    "aberth_roots",
    "eigenvalues",
    "nullity_profile",
    "jordan_chains",
    "decompose",
]

MAX_DIM = 8
MAX_SWEEPS = 500
DEFAULT_TOL = 1e-9
EPS = np.finfo(float).eps


def as_matrix(A) -> np.ndarray:
    M = np.array(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if not 1 <= M.shape[0] <= MAX_DIM:
        raise ValueError(f"dimension must be between 1 and {MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def _norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2))


def char_poly(A: np.ndarray) -> np.ndarray:
    """Coefficients ``c_0 .. c_n`` of ``det(zI - A)`` (``c_n = 1``)."""
    n = A.shape[0]
    c = np.zeros(n + 1, dtype=complex)
    c[n] = 1.0
    M = np.zeros_like(A)
    eye = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        M = A @ M + c[n - k + 1] * eye
        c[n - k] = -np.trace(A @ M) / k
    return c


def _horner(c: np.ndarray, z: complex) -> tuple[complex, complex, float]:
    """Value, derivative and running-error bound of the polynomial at ``z``."""
    p = c[-1]
    dp = 0j
    bound = abs(p)
    az = abs(z)
    for k in range(c.size - 2, -1, -1):
        dp = dp * z + p
        p = p * z + c[k]
        bound = bound * az + abs(p)
    return p, dp, bound


def aberth_roots(c: np.ndarray, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """All roots of ``sum c_k z^k`` (monic, degree >= 1) by Aberth-Ehrlich."""
    n = c.size - 1
    if n == 1:
        return np.array([-c[0] / c[1]])
    radius = 1.0 + float(np.max(np.abs(c[:-1] / c[-1])))
    # start inside the Cauchy bound, off the real axis to break symmetry
    start = 0.5 * radius
    z = np.array([start * cmath.exp(1j * (2 * math.pi * k / n + 0.4)) for k in range(n)])
    done = np.zeros(n, dtype=bool)
    for _ in range(max_sweeps):
        for i in range(n):
            if done[i]:
                continue
            p, dp, bound = _horner(c, z[i])
            if abs(p) <= 8 * n * EPS * bound:
                done[i] = True
                continue
            diffs = z[i] - np.delete(z, i)
            if np.any(diffs == 0):
                z[i] += 1e-8 * radius
                continue
            ratio = p / dp if dp != 0 else complex(radius)
            step = ratio / (1.0 - ratio * np.sum(1.0 / diffs))
            z[i] -= step
            if abs(step) <= 2 * EPS * abs(z[i]):
                done[i] = True
        if done.all():
            return z
    raise RootFindingFailure(f"Aberth iteration did not converge in {max_sweeps} sweeps")


def _rank_reveal(M: np.ndarray, thresh: float) -> tuple[int, np.ndarray, list[float], float]:
    """Full-pivot elimination of ``M``.

    Returns the rank, an orthonormal null-space basis (columns), the accepted
    pivot magnitudes and the largest entry left after the last accepted pivot.
    """
    U = np.array(M, dtype=complex)
    rows, cols = U.shape
    col_perm = np.arange(cols)
    pivots: list[float] = []
    leftover = 0.0
    rank = 0
    for k in range(min(rows, cols)):
        sub = np.abs(U[k:, k:])
        i, j = np.unravel_index(int(np.argmax(sub)), sub.shape)
        big = float(sub[i, j])
        if big <= thresh:
            leftover = big
            break
        i += k
        j += k
        U[[k, i]] = U[[i, k]]
        U[:, [k, j]] = U[:, [j, k]]
        col_perm[[k, j]] = col_perm[[j, k]]
        pivots.append(big)
        factors = U[k + 1 :, k] / U[k, k]
        U[k + 1 :, k:] -= np.outer(factors, U[k, k:])
        U[k + 1 :, k] = 0
        rank += 1
    else:
        leftover = 0.0
    free = cols - rank
    if free == 0:
        return rank, np.zeros((cols, 0), dtype=complex), pivots, leftover
    R = U[:rank, :rank]
    F = U[:rank, rank:]
    basis = np.zeros((cols, free), dtype=complex)
    if rank:
        X = -np.linalg.solve(R, F) if rank else np.zeros((0, free))
    else:
        X = np.zeros((0, free), dtype=complex)
    block = np.vstack([X, np.eye(free, dtype=complex)])
    basis[col_perm] = block
    Q, _ = np.linalg.qr(basis)
    return rank, Q, pivots, leftover


def _check_ambiguity(pivots: list[float], leftover: float, thresh: float, what: str) -> None:
    if pivots and min(pivots) < 10 * thresh:
        raise RankAmbiguity(f"{what}: pivot {min(pivots):.3e} within a factor 10 of threshold {thresh:.3e}")
    if leftover > thresh / 10:
        raise RankAmbiguity(f"{what}: residual pivot {leftover:.3e} within a factor 10 of threshold {thresh:.3e}")


def _complement(K: np.ndarray, n: int) -> np.ndarray:
    if K.shape[1] == 0:
        return np.eye(n, dtype=complex)
    Q, _ = np.linalg.qr(K, mode="complete")
    return Q[:, K.shape[1] :]


def nullity_profile(A: np.ndarray, mu: complex, tol: float = DEFAULT_TOL, strict: bool = True):
    """Nested null spaces ``ker (A - mu I)^k`` for ``k = 1, 2, ...``.

    Returns ``(dims, bases)`` with ``dims[0] = 0`` and ``bases[k]`` an
    orthonormal basis of level ``k``; stops when the dimension stabilises.
    With ``strict`` a borderline pivot raises :class:`RankAmbiguity`.
    """
    n = A.shape[0]
    B = A - mu * np.eye(n)
    thresh = tol * max(_norm(A), 1.0)
    dims = [0]
    bases = [np.zeros((n, 0), dtype=complex)]
    for _ in range(n):
        K = bases[-1]
        if K.shape[1] == n:
            break
        C = _complement(K, n).conj().T @ B
        _, N, pivots, leftover = _rank_reveal(C, thresh)
        if strict:
            _check_ambiguity(pivots, leftover, thresh, f"rank of (A - ({mu:.6g}) I) at level {len(dims)}")
        if N.shape[1] <= K.shape[1]:
            break
        dims.append(N.shape[1])
        bases.append(N)
    return dims, bases


@dataclass(frozen=True)
class EigenInfo:
    value: complex
    algebraic: int
    geometric: int


@dataclass(frozen=True)
class Chain:
    """Jordan chain ``u_1, ..., u_L`` with ``(A - lam I) u_1 = 0`` and
    ``(A - lam I) u_{i+1} = u_i``."""

    lam: complex
    vectors: tuple[np.ndarray, ...]

    @property
    def length(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class JordanDecomposition:
    matrix: np.ndarray
    eigen: tuple[EigenInfo, ...]
    chains: tuple[Chain, ...]
    tol: float = DEFAULT_TOL
    notes: tuple[str, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectrum(self) -> list[complex]:
        return [e.value for e in self.eigen]

    def chain_lengths(self, lam: complex | None = None) -> list[int]:
        return [c.length for c in self.chains if lam is None or c.lam == lam]

    def P(self) -> np.ndarray:
        """Chain vectors as columns, chain by chain."""
        return np.column_stack([v for c in self.chains for v in c.vectors])

    def J(self) -> np.ndarray:
        n = self.n
        J = np.zeros((n, n), dtype=complex)
        k = 0
        for c in self.chains:
            for i in range(c.length):
                J[k + i, k + i] = c.lam
                if i:
                    J[k + i - 1, k + i] = 1.0
            k += c.length
        return J

    def chain_residuals(self) -> list[float]:
        """Relative residuals ``|(A - lam I) u_{i+1} - u_i| / (|A| |u_{i+1}|)``."""
        A = self.matrix
        scale = max(_norm(A), 1e-300)
        out = []
        for c in self.chains:
            B = A - c.lam * np.eye(self.n)
            prev = np.zeros(self.n, dtype=complex)
            for u in c.vectors:
                out.append(float(np.linalg.norm(B @ u - prev) / (scale * np.linalg.norm(u))))
                prev = u
        return out

    def reconstruction_error(self) -> float:
        P = self.P()
        A = self.matrix
        return float(np.linalg.norm(A @ P - P @ self.J(), 2) / (max(_norm(A), 1e-300) * np.linalg.norm(P, 2)))


def _polish(c: np.ndarray, z: complex, k: int) -> complex:
    """Newton on the ``(k-1)``-th derivative, where a ``k``-fold root is simple."""
    if k == 1:
        d = c
    else:
        idx = np.arange(c.size)
        d = (c * np.array([math.perm(int(i), k - 1) for i in idx]))[k - 1 :]
    for _ in range(50):
        p, dp, _ = _horner(d, z)
        if dp == 0:
            break
        step = p / dp
        z -= step
        if abs(step) <= 2 * EPS * max(abs(z), 1.0):
            break
    return z


def _refine(A: np.ndarray, mu: complex, k: int, tol: float) -> complex:
    """Mean eigenvalue of the invariant subspace belonging to a k-fold cluster."""
    if k == 1:
        return mu
    for _ in range(2):
        dims, bases = nullity_profile(A, mu, tol, strict=False)
        if dims[-1] != k:
            break
        Q = bases[-1]
        mu = complex(np.trace(Q.conj().T @ A @ Q)) / k
    return mu


def _cluster(
    roots: np.ndarray, A: np.ndarray, tol: float, radius: float, c: np.ndarray, scale: float
) -> list[tuple[complex, int]]:
    """Group nearby roots into eigenvalues with multiplicity.

    For each unassigned root the largest group of its nearest neighbours is
    taken that either fits inside ``radius`` or is confirmed by the rank
    structure of ``A - mu I`` at the polished group centre ``mu``. ``c``
    holds the characteristic polynomial of ``A / scale``.
    """
    n = A.shape[0]
    norm = _norm(A)
    reach = 0.1 * (1.0 + norm)
    left = [complex(r) for r in roots]
    out = []
    while left:
        r = left[0]
        order = sorted(range(len(left)), key=lambda i: abs(left[i] - r))
        chosen = [0]
        for k in range(len(left), 1, -1):
            group = [left[i] for i in order[:k]]
            spread = max(abs(g - h) for g in group for h in group)
            # a k-fold root splits by about (n eps)^(1/k) relative to |A|
            allowance = min(reach, 1e4 * (n * EPS) ** (1.0 / k) * (1.0 + norm))
            if spread > allowance and spread > radius:
                continue
            if spread <= radius:
                chosen = order[:k]
                break
            mean = complex(np.mean(group))
            mu = _polish(c, mean / scale, k) * scale
            # the centre must stay inside the group, which must stand apart
            # from the remaining roots
            if abs(mu - mean) > spread:
                continue
            members = max(abs(g - mu) for g in group)
            if k < len(left) and min(abs(left[i] - mu) for i in order[k:]) <= members:
                continue
            dims, _ = nullity_profile(A, mu, tol, strict=False)
            if dims[-1] == k:
                chosen = order[:k]
                break
        group = [left[i] for i in chosen]
        k = len(group)
        mu = _polish(c, complex(np.mean(group)) / scale, k) * scale
        out.append((_refine(A, mu, k, tol), k))
        left = [x for i, x in enumerate(left) if i not in chosen]
    return out


def _order_key(lam: complex):
    return (round(abs(lam), 12), round(cmath.phase(lam), 12) if lam != 0 else 0.0)


def eigenvalues(
    A, tol: float = DEFAULT_TOL, cluster_radius: float | None = None
) -> list[tuple[complex, int]]:
    """Eigenvalues of ``A`` with algebraic multiplicity.

    Roots within ``cluster_radius`` (default ``1e-7 (1 + |A|)``) are merged
    outright; wider groups are merged only if ``A - mu I`` has a null-space
    chain of matching total dimension at the group mean ``mu``. Values within
    ``cluster_radius`` of zero are snapped to exactly zero, and real or
    imaginary parts at rounding level are dropped.
    """
    A = as_matrix(A)
    n = A.shape[0]
    normA = _norm(A)
    if cluster_radius is None:
        cluster_radius = 1e-7 * (1.0 + normA)
    if normA == 0:
        return [(0j, n)]
    c = char_poly(A / normA)
    roots = aberth_roots(c) * normA
    groups = _cluster(roots, A, tol, cluster_radius, c, normA)
    out = []
    for mu, k in groups:
        if abs(mu) <= cluster_radius:
            mu = 0j
        # drop parts that are pure rounding residue
        floor = 4 * EPS * (1.0 + normA)
        mu = complex(mu.real if abs(mu.real) > floor else 0.0, mu.imag if abs(mu.imag) > floor else 0.0)
        out.append((mu, k))
    out.sort(key=lambda t: _order_key(t[0]))
    return out


def jordan_chains(A, lam: complex, tol: float = DEFAULT_TOL) -> list[Chain]:
    """Jordan chains for eigenvalue ``lam``, longest first.

    Heads of length-``k`` chains are picked from ``ker B^k`` modulo
    ``ker B^(k-1)`` and the parts of longer chains already at level ``k``
    (``B = A - lam I``).
    """
    A = as_matrix(A)
    n = A.shape[0]
    B = A - lam * np.eye(n)
    dims, bases = nullity_profile(A, lam, tol)
    depth = len(dims) - 1
    if depth == 0:
        raise RankAmbiguity(f"{lam} is not an eigenvalue at tolerance {tol:g}")
    thresh = tol * max(_norm(A), 1.0)
    heads: list[tuple[int, np.ndarray]] = []
    for k in range(depth, 0, -1):
        count_ge_k = dims[k] - dims[k - 1]
        need = count_ge_k - len(heads)
        if need <= 0:
            continue
        # what is already present at level k
        span = [bases[k - 1]]
        for L, x in heads:
            span.append(np.linalg.matrix_power(B, L - k) @ x[:, None])
        W = np.hstack(span)
        if W.shape[1]:
            Qw, _ = np.linalg.qr(W)
            cand = bases[k] - Qw @ (Qw.conj().T @ bases[k])
        else:
            cand = bases[k]
        U, S, _ = np.linalg.svd(cand)
        if S.size < need or S[need - 1] < 10 * thresh:
            raise RankAmbiguity(f"cannot pick {need} chain heads of length {k} for {lam}")
        for i in range(need):
            heads.append((k, U[:, i]))
    chains = []
    for L, x in heads:
        vecs = [x]
        for _ in range(L - 1):
            vecs.append(B @ vecs[-1])
        vecs.reverse()
        # unit u_1 whose largest entry is real and positive
        lead = vecs[0][np.argmax(np.abs(vecs[0]))]
        scale = np.linalg.norm(vecs[0]) * lead / abs(lead)
        chains.append(Chain(lam, tuple(v / scale for v in vecs)))
    return chains


def decompose(
    A,
    tol: float = DEFAULT_TOL,
    hints: list[complex] | None = None,
    cluster_radius: float | None = None,
) -> JordanDecomposition:
    """Full Jordan structure of ``A``.

    ``hints`` replace computed eigenvalues after checking that ``A - hI`` is
    singular at the rank threshold; computed eigenvalues more than
    ``1e-3 (1 + |A|)`` away from every hint fill in the rest.
    """
    A = as_matrix(A)
    n = A.shape[0]
    notes: list[str] = []
    if hints:
        spec: list[tuple[complex, int]] = []
        for h in hints:
            h = complex(h)
            if any(abs(h - s) == 0 for s, _ in spec):
                continue
            dims, _ = nullity_profile(A, h, tol)
            if dims[-1] == 0:
                raise HintRejected(f"hint {h} is not an eigenvalue at tolerance {tol:g}")
            spec.append((h, dims[-1]))
        gap = 1e-3 * (1.0 + _norm(A))
        if sum(k for _, k in spec) < n:
            for mu, k in eigenvalues(A, tol, cluster_radius):
                if all(abs(mu - h) > gap for h, _ in spec):
                    spec.append((mu, k))
            notes.append("hints supplemented by computed eigenvalues")
        if sum(k for _, k in spec) != n:
            raise HintRejected("hints and computed eigenvalues do not account for every multiplicity")
        spec.sort(key=lambda t: _order_key(t[0]))
    else:
        spec = eigenvalues(A, tol, cluster_radius)

    eigen = []
    chains: list[Chain] = []
    for mu, alg in spec:
        found = jordan_chains(A, mu, tol)
        total = sum(c.length for c in found)
        if total != alg:
            raise RankAmbiguity(
                f"eigenvalue {mu}: root multiplicity {alg} but chains span {total} dimensions"
            )
        eigen.append(EigenInfo(mu, alg, len(found)))
        chains.extend(found)
    dec = JordanDecomposition(A, tuple(eigen), tuple(chains), tol, tuple(notes))
    P = dec.P()
    cols = P / np.linalg.norm(P, axis=0)
    smin = float(np.linalg.svd(cols, compute_uv=False)[-1])
    if smin <= tol:
        raise RankAmbiguity(f"chain vectors are not independent (smallest singular value {smin:.3e})")
    return dec
