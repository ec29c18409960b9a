"""Fourier coefficients of the 1-periodic function |mu_hat|^q for integer-supported mu."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import InvalidMeasure, NonConvergence
from ..measure import DiscreteMeasure, Number, is_even_integer
from .control import DEFAULT_CONTROL, QuadratureControl

EPS = np.finfo(float).eps
MIN_MODULUS_WARN = 1e-3


@dataclass(frozen=True, eq=False)
class CoeffTable:
    """c_n for 0 <= n <= nmax; c_{-n} = c_n is implied (|mu_hat| is even)."""

    q: Number
    measure: DiscreteMeasure
    values: np.ndarray
    errors: np.ndarray
    samples: int
    min_modulus: float

    @property
    def nmax(self) -> int:
        return len(self.values) - 1

    @property
    def c0(self) -> float:
        return float(self.values[0])

    def __getitem__(self, n: int) -> float:
        return float(self.values[abs(n)])

    def error(self, n: int) -> float:
        return float(self.errors[abs(n)])

    def rows(self):
        for n in range(-self.nmax, self.nmax + 1):
            yield n, self[n], self.error(n)

    def to_dict(self) -> dict:
        return {
            "q": str(self.q),
            "measure": self.measure.to_dict(),
            "samples": self.samples,
            "min_modulus": self.min_modulus,
            "coefficients": [{"n": n, "c_n": c, "err": e} for n, c, e in self.rows()],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "c_n", "err"])
        for n, c, e in self.rows():
            w.writerow([n, repr(c), repr(e)])
        return buf.getvalue()


def _modulus_samples(locs: np.ndarray, weights: np.ndarray, N: int) -> np.ndarray:
    """|mu_hat(j/N)| for j = 0..N-1, exact for integer locations."""
    coeffs = np.zeros(N, dtype=complex)
    np.add.at(coeffs, np.mod(locs, N), weights)
    # mu_hat(j/N) = sum_x w_x exp(-2 pi i x j / N) is a length-N DFT
    return np.abs(np.fft.fft(coeffs))


def _raw_coefficients(modulus: np.ndarray, q: float, nmax: int) -> np.ndarray:
    N = modulus.size
    spec = np.fft.rfft(modulus ** q).real / N
    return spec[: nmax + 1]


def coefficient_table(mu: DiscreteMeasure, q: Number, nmax: int,
                      ctrl: QuadratureControl = DEFAULT_CONTROL) -> CoeffTable:
    """Trapezoid rule on [0, 1] (equivalently a DFT of samples) with panel doubling.

    Even integer q is computed exactly instead, as a convolution power.

    Stops once every c_n, n <= nmax, moves by at most ``rtol * c_0`` under two
    successive doublings.  Each entry's error estimate is that last change plus a rounding
    floor of ``16 eps c_0``.
    """
    if mu.dim != 1:
        raise InvalidMeasure("coefficient tables need a one-dimensional measure")
    if q < 2:
        raise ValueError("q must be >= 2")
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    return _cached_table(mu, q, int(nmax), ctrl)


def _even_power_table(mu: DiscreteMeasure, q: Number, nmax: int) -> CoeffTable:
    """|mu_hat|^{2k} = (sum_d a_d e^{2 pi i d xi})^k with a the weight autocorrelation: a finite sum.

    Convolution powers of a nonnegative sequence, so structural zeros stay
    exactly zero and every entry carries only rounding error.
    """
    locs = mu.integer_locations()[:, 0]
    locs = locs - locs.min()
    dense = np.zeros(int(locs.max()) + 1)
    dense[locs] = mu.weights
    auto = np.correlate(dense, dense, mode="full")  # lags -D..D
    coeffs = np.array([1.0])
    for _ in range(int(round(float(q))) // 2):
        coeffs = np.convolve(coeffs, auto)
    centre = coeffs.size // 2
    values = np.zeros(nmax + 1)
    top = min(nmax, centre)
    values[: top + 1] = coeffs[centre: centre + top + 1]
    errors = values * (coeffs.size * float(q) * EPS)
    values.setflags(write=False)
    errors.setflags(write=False)
    modulus = _modulus_samples(locs, mu.weights, 4 * (int(locs.max()) + 1))
    return CoeffTable(q, mu, values, errors, 0, float(modulus.min()))


@lru_cache(maxsize=256)
def _cached_table(mu: DiscreteMeasure, q: Number, nmax: int, ctrl: QuadratureControl) -> CoeffTable:
    if is_even_integer(q):
        return _even_power_table(mu, q, nmax)
    locs = mu.integer_locations()[:, 0]
    locs = locs - locs.min()
    degree = int(locs.max())
    qf = float(q)
    N = ctrl.initial_panels
    while N < 4 * (degree + 1) or N < 2 * (nmax + 1):
        N *= 2
    modulus = _modulus_samples(locs, mu.weights, N)
    prev = _raw_coefficients(modulus, qf, nmax)
    change = math.inf
    streak = 0
    for depth in range(ctrl.max_depth):
        N *= 2
        if N > ctrl.max_samples:
            break
        modulus = _modulus_samples(locs, mu.weights, N)
        cur = _raw_coefficients(modulus, qf, nmax)
        diff = np.abs(cur - prev)
        change = float(diff.max())
        # two agreeing doublings in a row guard against a coincidental match
        streak = streak + 1 if change <= ctrl.rtol * cur[0] else 0
        if streak >= 2:
            min_mod = float(modulus.min())
            if min_mod < MIN_MODULUS_WARN:
                warnings.warn(
                    f"min |mu_hat| ~ {min_mod:.2e}; |mu_hat|^q may be nearly singular "
                    "and the coefficient quadrature slow to converge", RuntimeWarning, stacklevel=3)
            errors = diff + 16 * EPS * cur[0]
            cur.setflags(write=False)
            errors.setflags(write=False)
            return CoeffTable(q, mu, cur, errors, N, min_mod)
        prev = cur
    raise NonConvergence(
        f"Fourier coefficients of |mu_hat|^{q} did not settle (last change {change:.3e})",
        last_change=change, depth=ctrl.max_depth)


def fourier_coefficient(mu: DiscreteMeasure, q: Number, n: int,
                        ctrl: QuadratureControl = DEFAULT_CONTROL) -> float:
    """c_n = int_0^1 |mu_hat(xi)|^q exp(2 pi i n xi) d xi (real since |mu_hat| is even)."""
    return coefficient_table(mu, q, abs(int(n)), ctrl)[n]
