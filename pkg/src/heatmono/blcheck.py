"""Brascamp-Lieb data behind the even-q monotonicity, checked in exact arithmetic.

For k >= 1 and d >= 1 the system has 2k maps B_j : R^{(2k-1)d} -> R^d:
coordinate-block projections for j <= 2k-1 and
B_{2k}(x) = x_1 + ... + x_k - x_{k+1} - ... - x_{2k-1}.  With A_j = I_d
and common exponent p = (2k)' = 2k/(2k-1), M = (1/p) sum_j B_j^T B_j has an
explicit inverse, and the scaling condition B_j M^{-1} B_j^T <= I_d holds with
equality for every j.  All matrices are numpy object arrays of Fractions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapExceeded, InvalidExponents
from .measure import DiscreteMeasure, Number, dual_exponent, parse_exponent
from .spectral.control import DEFAULT_CONTROL, QuadratureControl
from .spectral.routes import CONSECUTIVE_AGREEMENTS, log_heat, q_direct_power

SIZE_CAP = 10**4
JAMES_RTOL = 1e-6


def _frac_matrix(rows: int, cols: int) -> np.ndarray:
    out = np.empty((rows, cols), dtype=object)
    out[...] = Fraction(0)
    return out


def _identity(n: int) -> np.ndarray:
    out = _frac_matrix(n, n)
    for i in range(n):
        out[i, i] = Fraction(1)
    return out


def _block_pattern(k: int, diag: int, ones_sign_tl: int, ones_sign_off: int, ones_sign_br: int) -> np.ndarray:
    """(2k-1) x (2k-1) matrix [s1*1(k,k) + diag*I | s2*1(k,k-1); s2*1(k-1,k) | s3*1(k-1,k-1) + diag*I]."""
    n = 2 * k - 1
    out = _frac_matrix(n, n)
    for r in range(n):
        for c in range(n):
            top_r, top_c = r < k, c < k
            if top_r and top_c:
                v = ones_sign_tl
            elif not top_r and not top_c:
                v = ones_sign_br
            else:
                v = ones_sign_off
            out[r, c] = Fraction(v + (diag if r == c else 0))
    return out


def _kron_identity(block: np.ndarray, d: int) -> np.ndarray:
    n = block.shape[0]
    out = _frac_matrix(n * d, n * d)
    for r in range(n):
        for c in range(n):
            if block[r, c]:
                for i in range(d):
                    out[r * d + i, c * d + i] = block[r, c]
    return out


@dataclass(frozen=True, eq=False)
class BLSystem:
    k: int
    d: int
    p: Fraction
    B: tuple[np.ndarray, ...]
    M: np.ndarray
    M_inv_closed: np.ndarray

    @property
    def n(self) -> int:
        return (2 * self.k - 1) * self.d

    @property
    def m(self) -> int:
        return 2 * self.k


def build_system(k: int, d: int) -> BLSystem:
    """Assemble B_j, M = (1/p) sum_j B_j^T B_j and the closed-form inverse of M."""
    if k < 1 or d < 1:
        raise ValueError("k and d must be >= 1")
    n = (2 * k - 1) * d
    if n > SIZE_CAP:
        raise CapExceeded(f"(2k-1)d = {n} exceeds the cap {SIZE_CAP}")
    p = Fraction(2 * k, 2 * k - 1)
    B = []
    for j in range(2 * k - 1):
        Bj = _frac_matrix(d, n)
        for i in range(d):
            Bj[i, j * d + i] = Fraction(1)
        B.append(Bj)
    last = _frac_matrix(d, n)
    for j in range(2 * k - 1):
        sign = 1 if j < k else -1
        for i in range(d):
            last[i, j * d + i] = Fraction(sign)
    B.append(last)
    M = sum((Bj.T.dot(Bj) for Bj in B), start=_frac_matrix(n, n)) / p
    M_inv = _kron_identity(_block_pattern(k, 2 * k, -1, 1, -1), d) / (2 * k - 1)
    return BLSystem(k, d, p, tuple(B), M, M_inv)


def block_formula_M(k: int, d: int) -> np.ndarray:
    """(1/(2k)') [1(k,k) + I | -1(k,k-1); -1(k-1,k) | 1(k-1,k-1) + I], Kronecker I_d."""
    return _kron_identity(_block_pattern(k, 1, 1, -1, 1), d) / Fraction(2 * k, 2 * k - 1)


def _max_abs(a: np.ndarray) -> Fraction:
    return max((abs(x) for x in a.flat), default=Fraction(0))


@dataclass(frozen=True)
class Check:
    name: str
    j: int | None
    residual: Fraction

    @property
    def passed(self) -> bool:
        return self.residual == 0

    def to_dict(self) -> dict:
        return {"name": self.name, "j": self.j, "residual": str(self.residual), "pass": self.passed}


@dataclass(frozen=True)
class HypothesisReport:
    k: int
    d: int
    p: Fraction
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"k": self.k, "d": self.d, "p": str(self.p), "checks": [c.to_dict() for c in self.checks]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def verify_hypotheses(sys: BLSystem) -> HypothesisReport:
    """Exact residuals of: M against its block formula, M times the closed-form inverse against I,
    and B_j M^{-1} B_j^T against I_d for every j = 1..2k."""
    I_n = _identity(sys.n)
    I_d = _identity(sys.d)
    checks = [
        Check("M_block_formula", None, _max_abs(sys.M - block_formula_M(sys.k, sys.d))),
        Check("M_times_M_inv_closed", None, _max_abs(sys.M.dot(sys.M_inv_closed) - I_n)),
        Check("M_inv_closed_times_M", None, _max_abs(sys.M_inv_closed.dot(sys.M) - I_n)),
    ]
    for j, Bj in enumerate(sys.B, start=1):
        checks.append(Check("scaling_B_j_Minv_B_jT", j, _max_abs(Bj.dot(sys.M_inv_closed).dot(Bj.T) - I_d)))
    return HypothesisReport(sys.k, sys.d, sys.p, tuple(checks))


@dataclass(frozen=True)
class IdentityCheck:
    """Fourier side Q_{p,2k}(t)^{2k} against t^{(1/2)(1 - 2k/p')} ||(u^{1/p})^{*k}||_2^2."""

    lhs: float
    rhs: float
    k: int
    p: float
    t: float

    @property
    def rel_diff(self) -> float:
        return abs(self.lhs - self.rhs) / abs(self.lhs)

    @property
    def passed(self) -> bool:
        return self.rel_diff <= JAMES_RTOL

    def __iter__(self):
        return iter((self.lhs, self.rhs))


def _convolution_side(mu: DiscreteMeasure, p: float, k: int, t: float, ctrl: QuadratureControl) -> float:
    """||f * ... * f||_2^2 (k factors) for f = u(t,.)^{1/p}, by direct grid convolution and trapezoid."""
    locs = mu.locations[:, 0].astype(float)
    log_w = np.log(mu.weights)
    L = ctrl.log_inv_tol + max(math.log(mu.mass), 0.0)
    W = ctrl.safety * math.sqrt(p * t * L / math.pi)
    lo, hi = locs.min() - W, locs.max() + W
    h = min(0.5 * math.sqrt(math.pi * p * t / L) / ctrl.safety, (hi - lo) / ctrl.initial_panels)

    def at(step):
        npts = int(math.ceil((hi - lo) / step)) + 1
        if npts * k > ctrl.max_samples:
            raise CapExceeded(f"convolution grid needs {npts * k} samples")
        x = lo + step * np.arange(npts)
        f = np.exp(log_heat(locs, log_w, t, x) / p)
        conv = f
        for _ in range(k - 1):
            conv = step * np.convolve(conv, f)
        return step * float(np.dot(conv, conv))

    prev = at(h)
    streak = 0
    for _ in range(ctrl.max_depth):
        h /= 2
        cur = at(h)
        streak = streak + 1 if abs(cur - prev) <= ctrl.rtol * abs(cur) else 0
        prev = cur
        if streak >= CONSECUTIVE_AGREEMENTS:
            return cur
    return prev


def james_identity_check(mu: DiscreteMeasure, p: Number | str, k: int = 2, t: float = 1.0,
                         ctrl: QuadratureControl = DEFAULT_CONTROL) -> IdentityCheck:
    """Both sides of Q_{p,2k}(t)^{2k} = t^{(1/2)(1 - 2k/p')} ||(u^{1/p})^{*k}||_2^2 (d = 1).

    The left side comes from the spectral module (the Fourier-side L^{2k}
    norm); the right side from sampling u^{1/p}, convolving on the grid and
    integrating the square.  Plancherel makes them equal.
    """
    if mu.dim != 1:
        raise ValueError("james_identity_check is one-dimensional")
    if k < 1:
        raise ValueError("k must be >= 1")
    p_exact = parse_exponent(p)
    p_dual = dual_exponent(p_exact)
    if not 1 <= p_exact <= 2 or (p_dual != math.inf and 2 * k > p_dual + 1e-12):
        raise InvalidExponents(f"need 1 <= p <= 2 and 2k <= p' (p={p}, k={k})")
    pf = float(p_exact)
    lhs = q_direct_power(mu, (p_exact, 2 * k), t, ctrl)
    inv_p_dual = 0.0 if p_dual == math.inf else 1.0 / float(p_dual)
    rhs = t ** (0.5 * (1.0 - 2 * k * inv_p_dual)) * _convolution_side(mu, pf, k, t, ctrl)
    return IdentityCheck(lhs, rhs, k, pf, t)
