"""Growth at infinity: order, type, indicator, decay sectors and global bounds.

Limsups are replaced by finite surrogates over the last part of the index
window (``window``, default one quarter). Indicators are normalized by the
constant order ``rho`` rather than a proximate order.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    CancellationFailure,
    FitFailure,
    InsufficientData,
    KernelError,
    OverflowGuard,
    ZeroEigenvalueWarning,
)
from .kernel import EvalResult, delta_log_coefficients
from .moments import MomentFamily, associated_M
from .solver import CauchySolution, eval_solution, solution_coefficients
from .spectral import JordanDecomposition

__all__ = [
    "MIN_COEFFS",
    "IndicatorSample",
    "BoundFit",
    "GrowthReport",
    "estimate_order",
    "estimate_type",
    "indicator_sample",
    "theoretical_indicator",
    "solution_indicator_bound",
    "decay_sectors",
    "in_sectors",
    "stability_classify",
    "solution_log_coeffs",
    "log_max_modulus",
    "fit_max_modulus_type",
    "fit_global_bound",
    "growth_report",
]

MIN_COEFFS = 100
TWO_PI = 2.0 * math.pi


def _tail(n: int, window: float) -> int:
    if not 0 < window <= 1:
        raise ValueError("window must lie in (0, 1]")
    return max(0, n - max(1, int(round(window * n))))


def _usable(log_abs) -> tuple[np.ndarray, np.ndarray]:
    la = np.asarray(log_abs, dtype=float)
    p = np.arange(la.size)
    keep = np.isfinite(la) & (p >= 2)
    return p[keep], la[keep]


def _lower_hull(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hx, hy = [], []
    for a, b in zip(x, y):
        while len(hx) >= 2 and (hy[-1] - hy[-2]) * (a - hx[-2]) >= (b - hy[-2]) * (hx[-1] - hx[-2]):
            hx.pop()
            hy.pop()
        hx.append(a)
        hy.append(b)
    return np.array(hx, dtype=float), np.array(hy, dtype=float)


def estimate_order(log_abs_coeffs, window: float = 0.25, method: str = "hull") -> float:
    """Order from ``ln|a_p|``; zero coefficients are given as ``-inf``.

    ``method="raw"`` is the literal tail max of ``p ln p / (-ln|a_p|)``. It
    converges like ``1 + O(1/ln p)``, too slowly to be useful at a few
    thousand terms. The default fits ``a p ln p + b p + c ln p + d`` to the
    lower convex hull of ``-ln|a_p|`` on the tail window and returns
    ``1/a``; the extra terms soak up the Stirling corrections.
    """
    la = np.asarray(log_abs_coeffs, dtype=float)
    start = _tail(la.size, window)
    p, vals = _usable(la)
    if la.size >= MIN_COEFFS and not np.any(np.isfinite(la[start:])):
        return 0.0  # finitely many nonzero coefficients
    if p.size < MIN_COEFFS:
        raise InsufficientData(f"need at least {MIN_COEFFS} nonzero coefficients, got {p.size}")
    neg = -vals
    if method == "raw":
        sel = p >= start
        with np.errstate(divide="ignore", invalid="ignore"):
            q = p[sel] * np.log(p[sel]) / neg[sel]
        q = q[neg[sel] > 0]
        if q.size == 0:
            return math.inf
        return float(np.max(q))
    if method != "hull":
        raise ValueError(f"unknown method {method!r}")
    hx, hy = _lower_hull(p.astype(float), neg)
    grid = np.arange(max(start, int(hx[0])), int(hx[-1]) + 1, dtype=float)
    if grid.size < 8:
        raise InsufficientData("tail window too short for the order fit")
    y = np.interp(grid, hx, hy)
    X = np.column_stack([grid * np.log(grid), grid, np.log(grid), np.ones_like(grid)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    a = float(coef[0])
    if a <= 1e-12:
        return math.inf
    return 1.0 / a


def estimate_type(log_abs_coeffs, rho: float, window: float = 0.25) -> float:
    """Type from ``(sigma e rho)^(1/rho) = limsup p^(1/rho) |a_p|^(1/p)``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    la = np.asarray(log_abs_coeffs, dtype=float)
    p, vals = _usable(la)
    if p.size < MIN_COEFFS:
        raise InsufficientData(f"need at least {MIN_COEFFS} nonzero coefficients, got {p.size}")
    start = _tail(la.size, window)
    sel = p >= start
    if not np.any(sel):
        return 0.0
    log_L = float(np.max(np.log(p[sel]) / rho + vals[sel] / p[sel]))
    return math.exp(rho * log_L) / (math.e * rho)


@dataclass
class IndicatorSample:
    theta: float
    h_hat: float
    r_used: float
    log_values: list[tuple[float, float]] = field(default_factory=list)
    monotone: bool = True
    shrunk: bool = False


def _log_abs(value) -> float:
    if isinstance(value, EvalResult):
        return value.log_abs
    arr = np.atleast_1d(np.asarray(value, dtype=complex))
    m = float(np.max(np.abs(arr)))
    return math.log(m) if m > 0 else -math.inf


def indicator_sample(
    evaluate: Callable[[complex], object],
    theta: float,
    r_grid,
    rho: float,
    shrink: bool = False,
) -> IndicatorSample:
    """``ln|f(r e^{i theta})| / r^rho`` at the largest usable radius.

    ``evaluate`` may return an ``EvalResult``, a complex number or a vector
    (its largest component is used). With ``shrink=True`` radii that raise
    ``CancellationFailure`` are dropped and the largest remaining radius is
    used; otherwise the failure propagates. Underflow gives ``-inf``.
    """
    rs = [float(r) for r in r_grid]
    if not rs or any(b <= a for a, b in zip(rs, rs[1:])) or rs[0] <= 0:
        raise ValueError("r_grid must be positive and strictly ascending")
    unit = cmath.exp(1j * theta)
    logs: list[tuple[float, float]] = []
    shrunk = False
    for r in rs:
        try:
            logs.append((r, _log_abs(evaluate(r * unit))))
        except CancellationFailure:
            if not shrink:
                raise
            shrunk = True
            break
    if not logs:
        raise CancellationFailure(f"no radius on the grid is cancellation safe at theta={theta:.4g}")
    r_used, l_used = logs[-1]
    ratios = [l / r**rho for r, l in logs]
    finite = [x for x in ratios if math.isfinite(x)]
    steps = np.diff(finite) if len(finite) > 1 else np.zeros(0)
    monotone = bool(np.all(steps >= -1e-9) or np.all(steps <= 1e-9))
    h = l_used / r_used**rho if math.isfinite(l_used) else -math.inf
    return IndicatorSample(theta, h, r_used, logs, monotone, shrunk)


def _principal(phi: float) -> float:
    phi = math.remainder(phi, TWO_PI)
    return math.pi if phi == -math.pi else phi


def theoretical_indicator(lam: complex, rho: float, theta: float) -> float:
    """Indicator of ``E(lam z)``: ``|lam|^rho cos(rho phi)`` on the central window, else 0."""
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    if not rho > 0:
        raise ValueError("rho must be positive")
    phi = _principal(theta + cmath.phase(lam))
    if abs(phi) <= min(math.pi, math.pi / (2.0 * rho)) + 1e-15:
        return abs(lam) ** rho * math.cos(rho * phi)
    return 0.0


def solution_indicator_bound(dec: JordanDecomposition, rho: float, theta: float) -> float:
    vals = [theoretical_indicator(lam, rho, theta) if lam != 0 else 0.0 for lam in dec.spectrum]
    return max(vals) if vals else 0.0


def _norm_arc(lo: float, hi: float) -> tuple[float, float]:
    shift = math.floor((lo + math.pi) / TWO_PI) * TWO_PI
    return lo - shift, hi - shift


def _intersect(arcs_a, arcs_b):
    out = []
    for a_lo, a_hi in arcs_a:
        for b_lo, b_hi in arcs_b:
            for k in (-1, 0, 1):
                lo = max(a_lo, b_lo + k * TWO_PI)
                hi = min(a_hi, b_hi + k * TWO_PI)
                if lo < hi:
                    out.append(_norm_arc(lo, hi))
    return sorted(set(out))


def decay_sectors(dec: JordanDecomposition, omega: float) -> list[tuple[float, float]]:
    """Open arcs of directions where every kernel term decays.

    Each nonzero eigenvalue contributes ``(omega pi/2 - arg lam,
    2 pi - omega pi/2 - arg lam)``; the result is their intersection with
    lower ends in ``[-pi, pi)``. Zero eigenvalues are skipped with a
    warning; with no nonzero eigenvalue the result is empty.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    lams = [complex(l) for l in dec.spectrum]
    nonzero = [l for l in lams if l != 0]
    if len(nonzero) < len(lams):
        warnings.warn(
            "zero eigenvalues give polynomial terms and were left out of the sector",
            ZeroEigenvalueWarning,
            stacklevel=2,
        )
    if not nonzero:
        return []
    half = omega * math.pi / 2.0
    arcs = None
    for lam in nonzero:
        a = cmath.phase(lam)
        lo, hi = half - a, TWO_PI - half - a
        if lo >= hi:
            return []
        mine = [_norm_arc(lo, hi)]
        arcs = mine if arcs is None else _intersect(arcs, mine)
        if not arcs:
            return []
    return arcs


def in_sectors(arcs, theta: float) -> bool:
    for lo, hi in arcs:
        t = lo + ((theta - lo) % TWO_PI)
        if lo < t < hi:
            return True
    return False


def stability_classify(dec: JordanDecomposition, omega: float, tol_angle: float = 1e-9) -> list[tuple[complex, str]]:
    edge = math.pi * omega / 2.0
    out = []
    for lam in dec.spectrum:
        lam = complex(lam)
        if lam == 0:
            out.append((lam, "boundary"))
            continue
        a = abs(cmath.phase(lam))
        label = "decaying" if a > edge + tol_angle else "growing" if a < edge - tol_angle else "boundary"
        out.append((lam, label))
    return out


def solution_log_coeffs(sol: CauchySolution, N: int) -> np.ndarray:
    """``ln max_j |c_{p,j}|`` for the Taylor coefficients about ``z0``, ``p <= N``.

    Contributions are combined in log space, so coefficients far below the
    double range are still resolved.
    """
    fund = sol.fundamental
    n = fund.n
    mags, phases, vecs = [], [], []
    for C, term in zip(sol.constants, fund.terms):
        if C == 0:
            continue
        for h, u in term.pieces():
            lm, ph = delta_log_coefficients(fund.family, term.lam, h, N)
            mags.append(lm)
            phases.append(ph)
            vecs.append(C * u)
    if not mags:
        return np.full(N + 1, -np.inf)
    L = np.array(mags)
    top = np.max(L, axis=0)
    safe_top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(under="ignore", invalid="ignore"):
        w = np.exp(L - safe_top) * np.exp(1j * np.array(phases))
    w = np.where(np.isfinite(L), w, 0.0)
    S = w.T @ np.array(vecs).reshape(len(vecs), n)
    amax = np.max(np.abs(S), axis=1)
    # contributions cancelling to rounding level count as zero
    scale = np.abs(w).T @ np.abs(np.array(vecs)).reshape(len(vecs), n)
    dead = amax <= 64 * np.finfo(float).eps * np.max(scale, axis=1)
    with np.errstate(divide="ignore"):
        out = safe_top + np.log(amax)
    out[dead | ~np.isfinite(top)] = -np.inf
    return out


def log_max_modulus(sol: CauchySolution, r: float, directions: int = 64, tol: float = 1e-14) -> float:
    """``ln max_{|z - z0| = r} max_j |y_j(z)|`` over an even fan of directions.

    Directions that fail with ``CancellationFailure`` are skipped; their
    values are far below the maximum anyway.
    """
    best = -math.inf
    for k in range(directions):
        z = sol.z0 + r * cmath.exp(2j * math.pi * k / directions)
        try:
            ev = eval_solution(sol, z, tol)
        except CancellationFailure:
            continue
        best = max(best, _log_abs(ev.value))
    if best == -math.inf:
        raise CancellationFailure(f"every direction failed at r={r}")
    return best


def fit_max_modulus_type(sol: CauchySolution, r_grid, rho: float, directions: int = 64) -> float:
    """Least-squares slope of ``ln M_f(r)`` against ``r^rho``."""
    rs = np.asarray(r_grid, dtype=float)
    ys = np.array([log_max_modulus(sol, r, directions) for r in rs])
    X = np.column_stack([rs**rho, np.ones_like(rs)])
    coef, *_ = np.linalg.lstsq(X, ys, rcond=None)
    return float(coef[0])


@dataclass
class BoundFit:
    kind: str  # "exponential" or "polynomial"
    C1: float | None = None
    C2: float | None = None
    degree: int | None = None
    C: float | None = None
    skipped_points: int = 0

    def bound(self, family: MomentFamily, r: float) -> float:
        if self.kind == "polynomial":
            return self.C * max(1.0, r) ** self.degree
        return self.C1 * math.exp(associated_M(family, self.C2 * r))


def _polynomial_fit(sol: CauchySolution) -> BoundFit:
    N = sol.n + 2
    c = solution_coefficients(sol, N)
    size = np.max(np.abs(c), axis=1)
    live = np.nonzero(size > 64 * np.finfo(float).eps * max(float(size.max()), 1e-300))[0]
    degree = int(live[-1]) if live.size else 0
    C = float(np.max(np.sum(np.abs(c), axis=0)))
    return BoundFit("polynomial", degree=degree, C=C)


def fit_global_bound(
    sol: CauchySolution, r_grid, family: MomentFamily | None = None, directions: int = 8
) -> BoundFit:
    """Constants for ``|y_j(z)| <= C1 exp(M(C2 |z|))`` on a fan of rays.

    Candidates are ``C2 = max|lam| (1 + k/40)`` up to ten times the largest
    modulus. A finite sample is always covered by a large enough ``C1``, so
    a candidate is accepted only if the gap ``ln|y| - M(C2 r)`` is no larger
    at the end of the grid than anywhere in its first half; ``C1`` is then
    ``exp`` of the largest gap. When 0 is the only eigenvalue the solution
    is a polynomial and ``|y_j| <= C max(1, |z|)^degree`` is reported
    instead, with the degree read off the coefficients.
    """
    family = family or sol.family
    spectrum = sol.fundamental.decomposition.spectrum if sol.fundamental.decomposition else []
    top = max((abs(l) for l in spectrum), default=0.0)
    if top == 0.0:
        return _polynomial_fit(sol)
    rs = np.asarray(sorted(float(r) for r in r_grid))
    if rs.size < 4:
        raise ValueError("r_grid needs at least four radii")
    logs = []
    skipped = 0
    for r in rs:
        best = -math.inf
        for k in range(directions):
            z = sol.z0 + r * cmath.exp(2j * math.pi * k / directions)
            try:
                best = max(best, _log_abs(eval_solution(sol, z).value))
            except (CancellationFailure, OverflowGuard):
                skipped += 1
        logs.append(best)
    logs = np.array(logs)
    half = rs.size // 2
    for k in range(0, 361):
        c2 = top * (1.0 + k / 40.0)
        gap = logs - np.array([associated_M(family, c2 * r) for r in rs])
        finite = np.isfinite(gap)
        if not np.any(finite):
            break
        first = gap[:half][finite[:half]]
        if first.size and gap[-1] <= first.max() + 1e-12:
            return BoundFit("exponential", C1=float(math.exp(np.max(gap[finite]))), C2=float(c2), skipped_points=skipped)
    raise FitFailure(f"no C2 up to {10 * top:g} keeps the gap from growing on the grid")


@dataclass
class GrowthReport:
    order_estimate: float
    type_estimate: float
    theoretical_order: float
    type_upper_bound: float
    indicator_samples: list[tuple[float, float, float]]
    decay_sectors: list[tuple[float, float]]
    bound_fit: BoundFit | None
    stability: list[tuple[complex, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        bf = asdict(self.bound_fit) if self.bound_fit else None
        return {
            "order": self.order_estimate,
            "type": self.type_estimate,
            "theoreticalOrder": self.theoretical_order,
            "typeUpperBound": self.type_upper_bound,
            "indicator": [{"theta": t, "hHat": h, "hTheory": ht} for t, h, ht in self.indicator_samples],
            "decaySectors": [[lo, hi] for lo, hi in self.decay_sectors],
            "stability": [{"lambda": [l.real, l.imag], "label": s} for l, s in self.stability],
            "boundFit": bf,
            "notes": list(self.notes),
        }


def growth_report(
    sol: CauchySolution,
    n_coeffs: int = 2000,
    window: float = 0.25,
    thetas=None,
    r_grid=None,
) -> GrowthReport:
    """Assemble every growth quantity for one Cauchy solution."""
    fund = sol.fundamental
    family = fund.family
    dec = fund.decomposition
    rho = family.rho
    spectrum = [complex(l) for l in dec.spectrum]
    nonzero = [l for l in spectrum if l != 0]
    theory = rho if nonzero else 0.0
    upper = max((abs(l) ** rho for l in nonzero), default=0.0)
    notes: list[str] = []

    la = solution_log_coeffs(sol, n_coeffs)
    try:
        order = estimate_order(la, window)
    except InsufficientData as exc:
        order = 0.0 if not np.any(np.isfinite(la[10:])) else math.nan
        notes.append(f"order: {exc}")
    try:
        typ = estimate_type(la, rho, window) if order > 0 else 0.0
    except InsufficientData as exc:
        typ = math.nan
        notes.append(f"type: {exc}")

    thetas = list(thetas) if thetas is not None else [2 * math.pi * k / 16 - math.pi for k in range(16)]
    r_grid = list(r_grid) if r_grid is not None else list(np.linspace(2.0, 20.0, 10))
    samples = []
    for t in thetas:
        hth = solution_indicator_bound(dec, rho, t)
        try:
            s = indicator_sample(lambda z: eval_solution(sol, sol.z0 + z).value, t, r_grid, rho, shrink=True)
            if s.shrunk:
                notes.append(f"indicator at theta={t:.4f} sampled at r={s.r_used:g}")
            samples.append((t, s.h_hat, hth))
        except KernelError as exc:
            notes.append(f"indicator at theta={t:.4f}: {exc}")
            samples.append((t, math.nan, hth))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sectors = decay_sectors(dec, family.omega)
    if caught:
        notes.append(str(caught[0].message))

    try:
        fit = fit_global_bound(sol, r_grid, family)
    except FitFailure as exc:
        fit = None
        notes.append(f"bound fit: {exc}")
    return GrowthReport(
        order, typ, theory, upper, samples, sectors, fit, stability_classify(dec, family.omega), notes
    )
