"""Independent numerical routes to Q_{p,q}(t) = t^{(d/2)(1/q - 1/p')} || (u(t,.)^{1/p})^ ||_q.

* series route (p = 1, integer support): Q^q = q^{-1/2} sum_n c_n exp(-pi n^2 / (q t));
* frequency route (p = 1): Q^q = t^{1/2} int exp(-q pi t xi^2) |mu_hat(xi)|^q d xi by trapezoid;
* spatial route (any p): sample u^{1/p}, transform by FFT, integrate |.|^q.

The series route also yields cancellation-free successive differences and the
analytic t-derivative, both kept in log-scaled form because for small t they
are far below the double-precision range (the leading factor is exp(-pi/(q t))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainTooWide, InvalidMeasure, NonConvergence
from ..measure import DiscreteMeasure, ExponentPair, Number, mu_hat
from .coefficients import EPS, CoeffTable, coefficient_table
from .control import DEFAULT_CONTROL, QuadratureControl

# smallest log that still exponentiates to a normal double
_LOG_TINY = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class LogReal:
    """A real number stored as sign * exp(log_abs); survives where doubles underflow."""

    sign: int
    log_abs: float

    @classmethod
    def from_float(cls, x: float) -> "LogReal":
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs) if self.log_abs > -745.2 else self.sign * 0.0

    @property
    def log10_abs(self) -> float:
        return self.log_abs / math.log(10)

    def __float__(self):
        return self.value


def _as_pair(pq: ExponentPair | tuple) -> ExponentPair:
    return pq if isinstance(pq, ExponentPair) else ExponentPair(*pq)


def _factors(mu: DiscreteMeasure) -> tuple[DiscreteMeasure, ...]:
    if mu.dim == 1:
        return (mu,)
    if mu.factors is None:
        raise InvalidMeasure("d >= 2 is only supported for tensor-product measures")
    return mu.factors


def _require_series(mu: DiscreteMeasure) -> None:
    if mu.dim != 1:
        raise InvalidMeasure("the series route is one-dimensional")
    if not mu.integer_supported:
        raise InvalidMeasure("the series route needs integer atom locations")


# -- series route --------------------------------------------------------------

def series_terms_needed(c0: float, q: float, t: float, tol: float, power: int = 0,
                        log_tol: float | None = None) -> int:
    """Smallest N with  c0 * n^power * g_N * 2 / (1 - g_{N+1}/g_N) < tol,  g_n = exp(-pi n^2/(q t)).

    Bounds every omitted term |n| >= N using |c_n| <= c0 and the geometric
    decay of the Gaussian factor.
    """
    if log_tol is None:
        log_tol = math.log(tol)
    n = 1
    while True:
        log_g = -math.pi * n * n / (q * t)
        ratio = -math.expm1(-math.pi * (2 * n + 1) / (q * t))
        growth = ((n + 1) / n) ** power * 2 if power else 1.0
        if math.log(c0 * 2 * growth) + power * math.log(n) + log_g - math.log(ratio) < log_tol:
            return n
        n += 1


def _series_table(mu: DiscreteMeasure, q: Number, t: float, ctrl: QuadratureControl,
                  power: int = 0, relative: bool = False) -> tuple[CoeffTable, int]:
    """Coefficient table and truncation index N (terms |n| >= N omitted).

    With ``relative`` the omitted tail is measured against the leading
    exp(-pi/(q t)) |c_1| term rather than against c_0, which is what the
    excess-only quantities (differences, derivative) need.
    """
    _require_series(mu)
    # c0 and the rounding of nmax up to a power of two keep the cache effective across t
    table = coefficient_table(mu, q, 1, ctrl)
    log_tol = math.log(ctrl.rtol * table.c0 * 1e-2)
    if relative:
        lead = max(abs(table[1]), 16 * EPS * table.c0)
        log_tol = math.log(ctrl.rtol * lead * 1e-2) - math.pi / (float(q) * t)
    N = series_terms_needed(table.c0, float(q), t, 0.0, power, log_tol=log_tol)
    if relative:
        N = max(N, 2)
    nmax = 1
    while nmax < N:
        nmax *= 2
    if nmax > 1:
        table = coefficient_table(mu, q, nmax, ctrl)
    return table, N


def _scaled_excess(table: CoeffTable, q: float, t: float, N: int, power: int = 0) -> float:
    """sum_{1 <= n < N} 2 n^power c_n exp(-pi (n^2 - 1)/(q t))."""
    if N <= 1:
        return 0.0
    n = np.arange(1, N)
    terms = 2.0 * n.astype(float) ** power * table.values[1:N] * np.exp(-np.pi * (n * n - 1.0) / (q * t))
    return math.fsum(terms.tolist())


def q_series_power(mu: DiscreteMeasure, q: Number, t: float, ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    """Q_{1,q}(t)^q by the Fourier-coefficient series."""
    if not t > 0:
        raise ValueError("t must be positive")
    if mu.dim > 1:
        return math.prod(q_series_power(f, q, t, ctrl) for f in _factors(mu))
    qf = float(q)
    table, N = _series_table(mu, q, t, ctrl)
    excess = math.exp(-math.pi / (qf * t)) * _scaled_excess(table, qf, t, N)
    return (table.c0 + excess) / math.sqrt(qf)


def q_series(mu: DiscreteMeasure, q: Number, t: float, ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    """Q_{1,q}(t) = (q^{-1/2} sum_n c_n exp(-pi n^2/(q t)))^{1/q}."""
    return q_series_power(mu, q, t, ctrl) ** (1.0 / float(q))


def q_derivative_scaled(mu: DiscreteMeasure, q: Number, t: float,
                        ctrl: QuadratureControl = DEFAULT_CONTROL) -> LogReal:
    """d/dt [Q_{1,q}(t)^q] = (pi / q^{3/2}) t^{-2} sum_{n != 0} n^2 c_n exp(-pi n^2/(q t)), log-scaled.

    The sum is evaluated as exp(-pi/(q t)) times a bracket whose leading
    term is c_1 + c_{-1}, so the sign is resolved even when the value itself
    is below the smallest double.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    _require_series(mu)
    qf = float(q)
    table, N = _series_table(mu, q, t, ctrl, power=2, relative=True)
    bracket = _scaled_excess(table, qf, t, N, power=2)
    if bracket == 0:
        return LogReal(0, -math.inf)
    log_abs = math.log(math.pi) - 1.5 * math.log(qf) - 2 * math.log(t) - math.pi / (qf * t) + math.log(abs(bracket))
    return LogReal(1 if bracket > 0 else -1, log_abs)


def q_derivative(mu: DiscreteMeasure, q: Number, t: float, ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    """Analytic d/dt [Q_{1,q}(t)^q] as a float (underflows to a signed zero for very small t)."""
    return q_derivative_scaled(mu, q, t, ctrl).value


def richardson_derivative(fn, t: float, rel_step: float = 1e-3) -> float:
    """Central difference at h and h/2 combined by one Richardson step (error O(h^4))."""
    h = t * rel_step

    def central(step):
        return (fn(t + step) - fn(t - step)) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


@dataclass(frozen=True)
class Difference:
    """Q(t2) - Q(t1) with a bound on its numerical noise, both log-scaled."""

    t1: float
    t2: float
    delta: LogReal
    noise: LogReal

    @property
    def value(self) -> float:
        return self.delta.value

    @property
    def resolved(self) -> bool:
        return self.delta.sign != 0 and self.delta.log_abs > self.noise.log_abs

    @property
    def resolved_negative(self) -> bool:
        return self.resolved and self.delta.sign < 0

    @property
    def resolved_positive(self) -> bool:
        return self.resolved and self.delta.sign > 0


def series_difference(mu: DiscreteMeasure, q: Number, t1: float, t2: float,
                      ctrl: QuadratureControl = DEFAULT_CONTROL) -> Difference:
    """Q_{1,q}(t2) - Q_{1,q}(t1) for t1 < t2 without subtracting nearly equal numbers.

    With S(t) = sum_{n != 0} c_n g_n(t), the difference of the excesses is
    exp(-pi/(q t2)) * R where every term of R is computed from
    g_n(t2) - g_n(t1) = g_n(t2) * (-expm1(-pi n^2 (1/t1 - 1/t2)/q)).
    The noise bound propagates the per-coefficient error estimates and the
    series truncation bound through the same expression.
    """
    if not 0 < t1 < t2:
        raise ValueError("need 0 < t1 < t2")
    _require_series(mu)
    qf = float(q)
    table, N = _series_table(mu, q, t2, ctrl, relative=True)
    n = np.arange(1, N)
    nf = n.astype(float)
    gap = 1.0 / t1 - 1.0 / t2
    factor = np.exp(-np.pi * (nf * nf - 1.0) / (qf * t2)) * -np.expm1(-np.pi * nf * nf * gap / qf)
    R = math.fsum((2.0 * table.values[1:N] * factor).tolist())
    noise_R = math.fsum((2.0 * table.errors[1:N] * factor).tolist())
    # omitted terms n >= N, bounded through |c_n| <= c0 and g_n(t2) decay
    log_trunc = (math.log(2 * table.c0) - math.pi * (N * N - 1.0) / (qf * t2)
                 - math.log(-math.expm1(-math.pi * (2 * N + 1) / (qf * t2))))

    base1 = table.c0 + math.exp(-math.pi / (qf * t1)) * _scaled_excess(table, qf, t1, N)
    log_q1 = (math.log(base1) - 0.5 * math.log(qf)) / qf
    # x = (S2 - S1)/(c0 + S1);  Q2 - Q1 = Q1 * expm1(log1p(x)/q)
    log_pref = -math.pi / (qf * t2) - math.log(base1)
    if R == 0:
        delta = LogReal(0, -math.inf)
    else:
        log_x = log_pref + math.log(abs(R))
        if log_x < -40:
            delta = LogReal(1 if R > 0 else -1, log_q1 + log_x - math.log(qf))
        else:
            x = math.copysign(math.exp(log_x), R)
            delta = LogReal.from_float(math.exp(log_q1) * math.expm1(math.log1p(x) / qf))
    log_noise_R = np.logaddexp(math.log(noise_R) if noise_R > 0 else -math.inf, log_trunc)
    noise = LogReal(1, log_q1 + log_pref + float(log_noise_R) - math.log(qf) + math.log(2.0))
    return Difference(t1, t2, delta, noise)


# -- frequency route (p = 1) ---------------------------------------------------

def _trapezoid_converged(prev: float, cur: float, rtol: float) -> bool:
    return abs(cur - prev) <= rtol * abs(cur)


# refinements must agree this many times in a row; a single agreement can be an
# aliasing coincidence when the sample spacing is commensurate with the atoms
CONSECUTIVE_AGREEMENTS = 2


def _frequency_power(mu: DiscreteMeasure, q: float, t: float, ctrl: QuadratureControl) -> float:
    """t^{1/2} int_R exp(-q pi t xi^2) |mu_hat(xi)|^q d xi by the trapezoid rule with step halving."""
    log_peak = q * math.log(mu.mass)
    L = ctrl.log_inv_tol + max(log_peak, 0.0)
    R = math.sqrt(L / (q * math.pi * t))
    R = math.sqrt((L + max(math.log(R), 0.0)) / (q * math.pi * t)) * ctrl.safety
    span = float(np.ptp(mu.locations[:, 0])) if mu.natoms > 1 else 0.0
    h = min(R / ctrl.initial_panels, 1.0 / (4.0 * (span + 1.0)))

    def integrand(xi):
        return np.exp(-q * np.pi * t * xi * xi) * np.abs(mu_hat(mu, xi)) ** q

    # trapezoid on [-R, R] for an even integrand: h * (f(0) + 2 sum_{k >= 1} f(k h))
    npts = int(math.ceil(R / h))
    if npts > ctrl.max_samples:
        raise DomainTooWide(f"frequency grid needs {npts} samples")
    xs = h * np.arange(1, npts + 1)
    total = math.fsum(integrand(xs).tolist())
    f0 = float(integrand(np.array([0.0]))[0])
    prev = h * (f0 + 2 * total)
    streak = 0
    for depth in range(ctrl.max_depth):
        mids = h * (np.arange(npts) + 0.5)
        total += math.fsum(integrand(mids).tolist())
        h /= 2
        npts *= 2
        cur = h * (f0 + 2 * total)
        streak = streak + 1 if _trapezoid_converged(prev, cur, ctrl.rtol) else 0
        if streak >= CONSECUTIVE_AGREEMENTS:
            return float(math.sqrt(t) * cur)
        if 2 * npts > ctrl.max_samples:
            break
        prev = cur
    raise NonConvergence(f"frequency-side trapezoid did not converge at t={t}", last_change=abs(cur - prev),
                         depth=depth + 1)


# -- spatial route (general p) -------------------------------------------------

def log_heat(locs: np.ndarray, log_w: np.ndarray, t: float, x: np.ndarray) -> np.ndarray:
    """log u(t, x) for u = sum_j exp(log_w_j) t^{-1/2} exp(-pi (x - x_j)^2 / t), computed stably."""
    expo = log_w[None, :] - np.pi * (x[:, None] - locs[None, :]) ** 2 / t
    return logsumexp(expo, axis=1) - 0.5 * math.log(t)


def _spatial_integral(locs: np.ndarray, weights: np.ndarray, t: float, p: float, q: float,
                      h: float, window: tuple[float, float]) -> tuple[float, int, float]:
    """Trapezoid value of int |F|^q on the DFT frequency grid, sample count, and alias indicator.

    The frequency-side trapezoid with spacing 1/(N h) aliases the lag
    function A = F^{-1}[|F|^q] at multiples of the window length.  The
    inverse DFT of the sampled |F|^q is A periodized over the window, so its
    largest value over the lags within an eighth of the window from its
    middle, relative to A(0), bounds that aliasing.  For non-even q, A has unbounded support (geometric decay
    set by how close F comes to zero), which is why a fixed padding factor is
    not enough.
    """
    a, b = window
    N = 1
    while N * h < b - a:
        N *= 2
    x = a + h * np.arange(N)
    f = np.exp(log_heat(locs, np.log(weights), t, x) / p)
    F = np.abs(np.fft.rfft(f)) * h
    dxi = 1.0 / (N * h)
    Fq = F ** q
    # full line = k = 0 plus twice the positive half (Nyquist counted once)
    s = Fq[0] + 2.0 * Fq[1:-1].sum() + Fq[-1]
    lag = np.fft.irfft(Fq, n=N)
    alias = float(np.abs(lag[3 * N // 8: 5 * N // 8]).max() / lag[0])
    return dxi * s, N, alias


def spatial_lq_power(locs, weights, t: float, p: float, q: float,
                     ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    """int_R |(u(t,.)^{1/p})^(xi)|^q d xi via a sampled DFT with step halving and window doubling.

    The window starts at the atoms plus W = safety * sqrt(p t L / pi) on each
    side (u^{1/p} is below exp(-L) beyond), padded by a factor max(q/2 + 2, 4).
    It is doubled until the alias indicator of :func:`_spatial_integral` is
    below ``rtol / 10``.  When u^{1/p} has a transform with real zeros, |F|^q
    is only finitely smooth, the indicator decays algebraically, and
    the sample cap (``DomainTooWide``) can be reached at tight tolerances.  The step starts where the Gaussian decay
    exp(-pi p t xi^2) of the transform reaches exp(-L) at the Nyquist
    frequency and is halved until two successive halvings agree.
    """
    locs = np.asarray(locs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    L = ctrl.log_inv_tol + max(math.log(weights.sum()), 0.0)
    W = ctrl.safety * math.sqrt(p * t * L / math.pi)
    lo, hi = locs.min() - W, locs.max() + W
    extent = hi - lo
    pad = max(q / 2 + 2.0, 4.0)
    centre = 0.5 * (lo + hi)
    half = 0.5 * pad * extent
    h = 0.5 * math.sqrt(math.pi * p * t / L) / ctrl.safety
    h = min(h, extent / ctrl.initial_panels)
    alias_tol = ctrl.rtol / 10

    def run(step, halfwidth):
        N = 1
        while N * step < 2 * halfwidth:
            N *= 2
        if N > ctrl.max_samples:
            raise DomainTooWide(f"spatial grid needs {N} samples (cap {ctrl.max_samples})")
        return _spatial_integral(locs, weights, t, p, q, step, (centre - halfwidth, centre + halfwidth))

    def widened(step, halfwidth):
        while True:
            val, _, alias = run(step, halfwidth)
            if alias <= alias_tol:
                return val, halfwidth
            halfwidth *= 2

    prev, half = widened(h, half)
    change = math.inf
    streak = 0
    for depth in range(ctrl.max_depth):
        h /= 2
        cur, half = widened(h, half)
        change = abs(cur - prev)
        streak = streak + 1 if _trapezoid_converged(prev, cur, ctrl.rtol) else 0
        prev = cur
        if streak >= CONSECUTIVE_AGREEMENTS:
            return float(cur)
    raise NonConvergence(f"spatial quadrature did not converge at t={t}", last_change=change,
                         depth=ctrl.max_depth)


def _time_power(pq: ExponentPair, t: float) -> float:
    """t^{(1/2)(1/q - 1/p')} for d = 1."""
    return t ** (0.5 * (1.0 / pq.qf - pq.inv_p_dual()))


def q_direct_power(mu: DiscreteMeasure, pq: ExponentPair | tuple, t: float,
                   ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    """Q_{p,q}(t)^q by direct quadrature (frequency route for p = 1, spatial otherwise)."""
    pq = _as_pair(pq)
    if not t > 0:
        raise ValueError("t must be positive")
    if mu.dim > 1:
        return math.prod(q_direct_power(f, pq, t, ctrl) for f in _factors(mu))
    q = pq.qf
    if pq.p == 1:
        return _frequency_power(mu, q, t, ctrl)
    integral = spatial_lq_power(mu.locations[:, 0], mu.weights, t, pq.pf, q, ctrl)
    return float(_time_power(pq, t) ** q * integral)


def q_direct(mu: DiscreteMeasure, pq: ExponentPair | tuple, t: float,
             ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    return q_direct_power(mu, pq, t, ctrl) ** (1.0 / _as_pair(pq).qf)


def q_value(mu: DiscreteMeasure, pq: ExponentPair | tuple, t: float,
            ctrl: QuadratureControl = DEFAULT_CONTROL) -> tuple[float, str]:
    """Q_{p,q}(t) by the best applicable route; returns (value, route name)."""
    pq = _as_pair(pq)
    if pq.p == 1 and all(f.integer_supported for f in _factors(mu)):
        return q_series(mu, pq.q, t, ctrl), "series"
    return q_direct(mu, pq, t, ctrl), "direct"


def sliding_q(mu: DiscreteMeasure, pq: ExponentPair | tuple, s: float,
              ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    """||(f(s,.)^{1/p})^||_q for f(s, x) = sum_j w_j exp(-pi |x - s x_j|^2), by spatial quadrature.

    Equal to Q_{p,q}(s^{-2}) after the substitution u(t, x) = t^{-d/2} f(t^{-1/2}, t^{-1/2} x).
    """
    pq = _as_pair(pq)
    if not s > 0:
        raise ValueError("s must be positive")
    if mu.dim > 1:
        return math.prod(sliding_q(f, pq, s, ctrl) for f in _factors(mu))
    integral = spatial_lq_power(s * mu.locations[:, 0], mu.weights, 1.0, pq.pf, pq.qf, ctrl)
    return float(integral ** (1.0 / pq.qf))


def sliding_difference(mu: DiscreteMeasure, q: Number, s1: float, s2: float,
                       ctrl: QuadratureControl = DEFAULT_CONTROL) -> Difference:
    """Q~(s2) - Q~(s1) for s1 < s2, p = 1 and integer support, via Q~(s) = Q(s^{-2}).

    For large s the change is of size exp(-pi s^2 / q), far below what two
    separate quadratures can resolve, so the resolved series difference is used.
    """
    if not 0 < s1 < s2:
        raise ValueError("need 0 < s1 < s2")
    d = series_difference(mu, q, s2 ** -2, s1 ** -2, ctrl)
    flipped = LogReal(-d.delta.sign, d.delta.log_abs)
    return Difference(s1, s2, flipped, d.noise)


def single_gaussian_q(pq: ExponentPair | tuple, d: int = 1) -> float:
    """Q_{p,q} of a unit point mass: (p^{1/2} (q p)^{-1/(2q)})^d, independent of t."""
    pq = _as_pair(pq)
    p, q = pq.pf, pq.qf
    return (math.sqrt(p) * (q * p) ** (-1.0 / (2 * q))) ** d


def large_t_asymptote(mu: DiscreteMeasure, pq: ExponentPair | tuple) -> float:
    """lim_{t -> inf} Q_{p,q}(t) = mass^{1/p} (p^{1/2} (q p)^{-1/(2q)})^d."""
    pq = _as_pair(pq)
    return mu.mass ** (1.0 / pq.pf) * single_gaussian_q(pq, mu.dim)
