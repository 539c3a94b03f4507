"""Series engine for the kernel ``E(z) = sum z^p / m(p)`` and its relatives.

Terms are produced in log-magnitude and phase form, so neither ``z^p`` nor
``m(p)`` is formed on its own, and summed with ``math.fsum`` (exactly
rounded). Summation stops once three consecutive term ratios drop below
1/2 and the geometric tail bound is under the tolerance. For log-convex
moment sequences the ratios then keep decreasing, so the bound is a true
bound on the truncation error.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from typing import IO

import numpy as np
from scipy.special import gammaln

from .errors import CancellationFailure, EmptySeries, NoConvergence, OverflowGuard
from .moments import MomentFamily, log_moments, moment_ratios

__all__ = [
    "EvalResult",
    "TruncatedSeries",
    "eval_E",
    "eval_delta_h",
    "eval_delta_h_via_derivative",
    "delta_coefficients",
    "delta_log_coefficients",
    "eval_E_precise",
    "kernel_series",
    "moment_derivative",
    "check_delta_recursion",
    "CANCELLATION_LIMIT",
    "MAX_TERMS",
]

CANCELLATION_LIMIT = 1e12
MAX_TERMS = 100_000
EPS = np.finfo(float).eps
_CHUNK = 128


@dataclass(frozen=True)
class EvalResult:
    """A kernel value with its error accounting.

    ``log_abs`` is ``ln|value|`` computed from the scaled sum, so it stays
    finite when ``value`` itself overflows.
    """

    value: complex
    abs_error_bound: float
    terms_used: int
    cancellation_ratio: float
    log_abs: float

    def __post_init__(self) -> None:
        if self.abs_error_bound < 0:
            raise ValueError("abs_error_bound must be nonnegative")


def _log_binom(p: np.ndarray, h: int) -> np.ndarray:
    if h == 0:
        return np.zeros_like(p, dtype=float)
    return gammaln(p + 1.0) - gammaln(p - h + 1.0) - math.lgamma(h + 1.0)


def _sum_log_terms(family, log_w, arg_w, h, shift_log, shift_arg, tol, limit):
    """Sum ``C(p,h) |w|^p e^{i p arg w} / m(p) * e^{shift}`` over ``p >= h``."""
    logmags: list[np.ndarray] = []
    phases: list[np.ndarray] = []
    errs: list[np.ndarray] = []
    start = h
    stop = None
    run_scale = -math.inf
    run_sum = 0j
    prev_tail = None  # log-magnitudes of the last few terms of the previous chunk
    tail = 0.0
    while stop is None:
        end = start + _CHUNK
        if end - h > MAX_TERMS:
            raise NoConvergence(f"kernel series did not converge within {MAX_TERMS} terms")
        p = np.arange(start, end, dtype=float)
        lm = log_moments(family, end)[start:end]
        lb = _log_binom(p, h)
        logmag = lb + p * log_w - lm + shift_log
        phase = p * arg_w + shift_arg
        err = EPS * (4.0 + np.abs(p * log_w) + np.abs(lm) + lb + abs(shift_log) + np.abs(phase))

        hist = logmag if prev_tail is None else np.concatenate((prev_tail, logmag))
        offset = 0 if prev_tail is None else prev_tail.size
        ratios = np.exp(np.diff(hist))
        # running partial sum, used only for the stopping test
        top = float(np.max(logmag))
        if top > run_scale:
            run_sum *= math.exp(run_scale - top) if math.isfinite(run_scale) else 0.0
            run_scale = top
        terms = np.exp(logmag - run_scale) * np.exp(1j * phase)
        partial = run_sum + np.cumsum(terms)
        small = ratios < 0.5
        for k in range(logmag.size):
            j = k + offset - 1  # index into ratios of term k vs its predecessor
            if j < 2 or not (small[j] and small[j - 1] and small[j - 2]):
                continue
            r = max(ratios[j], ratios[j - 1], ratios[j - 2])
            tail_log = logmag[k] + math.log(r / (1.0 - r))
            mag = abs(partial[k])
            log_ref = math.log(mag) + run_scale if mag > 0 else -math.inf
            if tail_log <= math.log(tol) + float(np.logaddexp(0.0, log_ref)):
                stop = k
                tail = math.exp(tail_log) if tail_log < 700 else math.inf
                break
        if stop is None:
            logmags.append(logmag)
            phases.append(phase)
            errs.append(err)
            run_sum = complex(partial[-1])
            prev_tail = hist[-3:]
            start = end
        else:
            logmags.append(logmag[: stop + 1])
            phases.append(phase[: stop + 1])
            errs.append(err[: stop + 1])

    logmag = np.concatenate(logmags)
    phase = np.concatenate(phases)
    err = np.concatenate(errs)
    scale = float(np.max(logmag))
    mags = np.exp(logmag - scale)
    re = math.fsum(mags * np.cos(phase))
    im = math.fsum(mags * np.sin(phase))
    total = complex(re, im)
    abs_total = abs(total)
    max_term = float(np.max(mags))
    ratio = max_term / abs_total if abs_total > 0 else math.inf
    if ratio > limit:
        raise CancellationFailure(
            f"cancellation ratio {ratio:.3e} exceeds {limit:.0e}", ratio=ratio
        )
    round_err = math.fsum(mags * err) + EPS * math.fsum(mags)
    log_abs = math.log(abs_total) + scale if abs_total > 0 else -math.inf
    if scale > 709.0:
        if log_abs > 709.0:
            value = complex(math.inf, math.inf)
        else:
            value = total * math.exp(scale)
        bound = round_err * math.exp(min(scale, 709.0)) + tail
    else:
        factor = math.exp(scale)
        value = total * factor
        bound = round_err * factor + tail
    return EvalResult(value, bound, int(logmag.size), max(ratio, 1.0) if abs_total > 0 else ratio, log_abs)


def eval_E(
    family: MomentFamily, z: complex, tol: float = 1e-14, *, cancel_limit: float = CANCELLATION_LIMIT
) -> EvalResult:
    """Evaluate the kernel ``E(z) = sum_p z^p / m(p)``."""
    return eval_delta_h(family, 1.0, 0, z, tol, cancel_limit=cancel_limit)


def eval_delta_h(
    family: MomentFamily,
    lam: complex,
    h: int,
    z: complex,
    tol: float = 1e-14,
    *,
    cancel_limit: float = CANCELLATION_LIMIT,
) -> EvalResult:
    """Evaluate ``Delta_h E(lam z) = sum_{p>=h} C(p,h) lam^(p-h) z^p / m(p)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if h < 0:
        raise ValueError("h must be nonnegative")
    lam = complex(lam)
    z = complex(z)
    if z == 0:
        return EvalResult(1.0 + 0j if h == 0 else 0j, 0.0, 1, 1.0, 0.0 if h == 0 else -math.inf)
    if lam == 0:
        # only the p = h term survives: z^h / m(h)
        lm = float(log_moments(family, h + 1)[h])
        log_abs = h * math.log(abs(z)) - lm
        value = cmath.rect(math.exp(log_abs), h * cmath.phase(z)) if log_abs < 709 else complex(math.inf)
        err = abs(value) * EPS * (4 + abs(h * math.log(abs(z))) + abs(lm) + abs(h * cmath.phase(z)))
        return EvalResult(value, err, 1, 1.0, log_abs)
    w = lam * z
    # lam^(p-h) z^p = w^p / lam^h
    return _sum_log_terms(
        family,
        math.log(abs(w)),
        cmath.phase(w),
        h,
        -h * math.log(abs(lam)),
        -h * cmath.phase(lam),
        tol,
        cancel_limit,
    )


def eval_delta_h_via_derivative(
    family: MomentFamily,
    lam: complex,
    h: int,
    z: complex,
    tol: float = 1e-14,
    *,
    cancel_limit: float = CANCELLATION_LIMIT,
) -> EvalResult:
    """Cross-check route: ``w^h E^{(h)}(w) / (lam^h h!)`` at ``w = lam z``.

    The ``h``-th derivative is taken termwise and the terms are produced by
    a plain complex recurrence rather than in log space.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = complex(lam)
    if lam == 0 or h < 1:
        raise ValueError("derivative route needs lam != 0 and h >= 1")
    w = lam * complex(z)
    if w == 0:
        return EvalResult(0j, 0.0, 1, 1.0, -math.inf)
    # p!/(p-h)! w^p / m(p) at p = h
    log_first = math.lgamma(h + 1.0) + h * math.log(abs(w)) - float(log_moments(family, h + 1)[h])
    if log_first > 700:
        raise OverflowGuard("derivative route overflows at this argument")
    term = cmath.rect(math.exp(log_first), h * cmath.phase(w))
    re, im = [term.real], [term.imag]
    mags = [abs(term)]
    p = h
    small_run = 0
    tail = 0.0
    ratios = moment_ratios(family, 512)
    while True:
        if p - h > MAX_TERMS:
            raise NoConvergence(f"derivative route did not converge within {MAX_TERMS} terms")
        if p >= ratios.size:
            ratios = moment_ratios(family, 2 * ratios.size)
        new = term * w * ((p + 1) / (p + 1 - h)) / ratios[p]
        p += 1
        if not cmath.isfinite(new):
            raise OverflowGuard("derivative route overflows at this argument")
        r = abs(new) / abs(term) if term != 0 else 0.0
        small_run = small_run + 1 if r < 0.5 else 0
        term = new
        re.append(term.real)
        im.append(term.imag)
        mags.append(abs(term))
        if small_run >= 3:
            tail = abs(term) * r / (1.0 - r)
            partial = complex(math.fsum(re), math.fsum(im))
            if tail <= tol * (1.0 + abs(partial)):
                break
    scale = 1.0 / (lam**h * math.factorial(h))
    total = complex(math.fsum(re), math.fsum(im))
    value = total * scale
    max_term = max(mags)
    ratio = max_term / abs(total) if total != 0 else math.inf
    if ratio > cancel_limit:
        raise CancellationFailure(f"cancellation ratio {ratio:.3e} exceeds {cancel_limit:.0e}", ratio=ratio)
    # recurrence error grows linearly with the index
    round_err = EPS * sum(m * (4 + 2 * k) for k, m in enumerate(mags))
    bound = (round_err + tail) * abs(scale)
    log_abs = math.log(abs(value)) if value != 0 else -math.inf
    return EvalResult(value, bound, len(mags), max(ratio, 1.0) if total != 0 else ratio, log_abs)


@dataclass(frozen=True)
class TruncatedSeries:
    """Finite power series ``sum_{p<=N} c_p z^p`` tied to a moment family."""

    family: MomentFamily
    coeffs: np.ndarray
    tail_bound: float | None = None

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a nonempty 1-d sequence")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        if self.tail_bound is not None and self.tail_bound < 0:
            raise ValueError("tail_bound must be nonnegative")

    @property
    def truncation_order(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, z: complex) -> complex:
        z = complex(z)
        powers = z ** np.arange(self.coeffs.size)
        terms = self.coeffs * powers
        return complex(math.fsum(terms.real), math.fsum(terms.imag))

    def dump_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh)
        writer.writerow(["p", "re", "im"])
        for p, c in enumerate(self.coeffs):
            writer.writerow([p, repr(float(c.real)), repr(float(c.imag))])


def delta_coefficients(family: MomentFamily, lam: complex, h: int, N: int) -> np.ndarray:
    """Taylor coefficients ``c_0 .. c_N`` of ``Delta_h E(lam z)``."""
    out = np.zeros(N + 1, dtype=complex)
    if h > N:
        return out
    lm = log_moments(family, N + 1)
    lam = complex(lam)
    if lam == 0:
        out[h] = math.exp(-float(lm[h]))
        return out
    p = np.arange(h, N + 1, dtype=float)
    k = p - h
    logmag = _log_binom(p, h) + k * math.log(abs(lam)) - lm[h:]
    with np.errstate(under="ignore"):
        out[h:] = np.exp(logmag) * np.exp(1j * k * cmath.phase(lam))
    return out


def delta_log_coefficients(
    family: MomentFamily, lam: complex, h: int, N: int
) -> tuple[np.ndarray, np.ndarray]:
    """``(ln|c_p|, arg c_p)`` for ``p = 0 .. N``; no underflow at large ``p``."""
    logmag = np.full(N + 1, -np.inf)
    phase = np.zeros(N + 1)
    if h > N:
        return logmag, phase
    lm = log_moments(family, N + 1)
    lam = complex(lam)
    if lam == 0:
        logmag[h] = -float(lm[h])
        return logmag, phase
    p = np.arange(h, N + 1, dtype=float)
    k = p - h
    logmag[h:] = _log_binom(p, h) + k * math.log(abs(lam)) - lm[h:]
    phase[h:] = k * cmath.phase(lam)
    return logmag, phase


def _mp_log_moments(family: MomentFamily, n: int, mp):
    if family.kind.value == "factorial":
        return [mp.loggamma(p + 1) for p in range(n)]
    if family.kind.value == "gamma":
        s = mp.mpf(family.s)
        return [mp.loggamma(1 + s * p) for p in range(n)]
    # gevrey_log: pick, in double precision, which literal log-ratio each
    # (possibly modified) ratio equals, then redo that ratio in mp
    a, b = mp.mpf(family.alpha), mp.mpf(family.beta)
    ratios = np.diff(log_moments(family, n))
    literal = family.alpha * np.log1p(np.arange(n)) + family.beta * np.log(np.log(math.e + np.arange(n) + 1.0))
    out = [mp.mpf(0)]
    for q in range(n - 1):
        src = q
        if family.beta < 0 and abs(literal[q] - ratios[q]) > 1e-12 * (1 + abs(literal[q])):
            src = int(np.nonzero(np.abs(literal - ratios[q]) <= 1e-12 * (1 + abs(ratios[q])))[0][-1])
        out.append(out[-1] + a * mp.log(src + 1) + b * mp.log(mp.log(mp.e + src + 1)))
    return out


def eval_E_precise(family: MomentFamily, z: complex, digits: int | None = None) -> complex:
    """Kernel value in extended precision (mpmath), rounded to a double.

    Working precision is raised by the decimal size of the largest term, so
    the result keeps full double accuracy even where the double-precision
    sum is lost to cancellation.
    """
    import mpmath

    z = complex(z)
    if z == 0:
        return 1.0 + 0j
    r = abs(z)
    size = 64
    while True:
        lm = log_moments(family, size)
        vals = np.arange(size) * math.log(r) - lm
        if vals[-1] < vals.max() - 60 and vals[-1] < -60:
            break
        size *= 2
        if size > MAX_TERMS:
            raise NoConvergence(f"precise kernel needs more than {MAX_TERMS} terms")
    peak = float(vals.max())
    with mpmath.workdps(int(digits or (30 + max(peak, 0.0) / math.log(10)))):
        logs = _mp_log_moments(family, size, mpmath)
        zz = mpmath.mpc(z.real, z.imag)
        lz = mpmath.log(zz)
        total = mpmath.fsum(mpmath.exp(p * lz - logs[p]) for p in range(size))
        return complex(total)


def kernel_series(family: MomentFamily, N: int, lam: complex = 1.0, h: int = 0) -> TruncatedSeries:
    """``Delta_h E(lam z)`` truncated at order ``N`` (``E`` itself by default)."""
    return TruncatedSeries(family, delta_coefficients(family, lam, h, N))


def moment_derivative(series: TruncatedSeries) -> TruncatedSeries:
    """Apply the moment derivative: ``c_p -> c_{p+1} m(p+1)/m(p)``."""
    N = series.truncation_order
    if N == 0:
        raise EmptySeries("moment derivative needs truncation order >= 1")
    ratios = moment_ratios(series.family, N)
    return TruncatedSeries(series.family, series.coeffs[1:] * ratios)


def check_delta_recursion(family: MomentFamily, lam: complex, h: int, N: int) -> float:
    """Largest relative coefficient residual of ``(d_m - lam) Delta_h E = Delta_{h-1} E``.

    Residuals are taken coefficientwise for ``p <= N-1`` and scaled by the
    largest of the three coefficients involved at that index.
    """
    if h < 1 or N < h + 2:
        raise ValueError("need h >= 1 and N >= h + 2")
    dh = kernel_series(family, N, lam, h)
    lhs = moment_derivative(dh).coeffs
    lam_part = complex(lam) * dh.coeffs[:N]
    lower = delta_coefficients(family, lam, h - 1, N - 1)
    resid = np.abs(lhs - lam_part - lower)
    scale = np.maximum.reduce([np.abs(lhs), np.abs(lam_part), np.abs(lower)])
    live = scale > 1e-290
    if not np.any(live):
        return 0.0
    return float(np.max(resid[live] / scale[live]))
