"""Finite positive atomic measures, their Fourier transforms and heat evolutions.

Conventions: the Fourier transform is ``mu_hat(xi) = sum_j w_j exp(-2 pi i x_j . xi)``
and the heat kernel is ``H_t(x) = t^(-d/2) exp(-pi |x|^2 / t)``, so that
``H_t`` has unit mass and ``(H_t)^(xi) = exp(-pi t |xi|^2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import CapExceeded, InvalidExponents, InvalidMeasure

Number = Union[int, float, Fraction]

INTEGER_SUPPORT_TOL = 1e-9
EVEN_INTEGER_TOL = 1e-12
DEFAULT_TENSOR_CAP = 10**6


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """A finite sum of weighted Dirac masses in R^d.

    ``locations`` has shape ``(natoms, dim)``; ``weights`` has shape ``(natoms,)``.
    Both arrays are made read-only on construction.  ``factors`` is set only by
    :func:`tensor_power` and records the one-dimensional factors of a product
    measure, which the quadrature routes use to reduce d > 1 to d = 1.
    """

    locations: np.ndarray
    weights: np.ndarray
    factors: tuple["DiscreteMeasure", ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        locs = np.array(self.locations, dtype=float)
        w = np.array(self.weights, dtype=float)
        if locs.ndim == 1:
            locs = locs[:, None]
        if locs.ndim != 2 or locs.shape[1] < 1:
            raise InvalidMeasure("locations must have shape (natoms, dim)")
        if w.ndim != 1 or w.shape[0] != locs.shape[0]:
            raise InvalidMeasure("need exactly one weight per atom")
        if w.size == 0:
            raise InvalidMeasure("a measure needs at least one atom")
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(w))):
            raise InvalidMeasure("locations and weights must be finite")
        if np.any(w <= 0):
            raise InvalidMeasure("weights must be strictly positive")
        if len({tuple(row) for row in locs.tolist()}) != len(locs):
            raise InvalidMeasure("atom locations must be pairwise distinct")
        locs.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[Sequence[float] | float, float]]) -> "DiscreteMeasure":
        """Build from ``(location, weight)`` pairs; scalar locations mean d = 1."""
        locs, ws = [], []
        for x, wt in atoms:
            locs.append(np.atleast_1d(np.asarray(x, dtype=float)))
            ws.append(float(wt))
        if not locs:
            raise InvalidMeasure("a measure needs at least one atom")
        if len({len(x) for x in locs}) != 1:
            raise InvalidMeasure("all atoms must live in the same dimension")
        return cls(np.vstack(locs), np.array(ws))

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    @property
    def natoms(self) -> int:
        return self.weights.shape[0]

    @property
    def mass(self) -> float:
        return float(math.fsum(self.weights.tolist()))

    @property
    def integer_supported(self) -> bool:
        return bool(np.all(np.abs(self.locations - np.round(self.locations)) <= INTEGER_SUPPORT_TOL))

    def integer_locations(self) -> np.ndarray:
        if not self.integer_supported:
            raise InvalidMeasure("measure is not supported on integers")
        return np.round(self.locations).astype(np.int64)

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (self.locations.shape == other.locations.shape
                and np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.locations.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        terms = []
        for x, w in zip(self.locations, self.weights):
            loc = f"{x[0]:g}" if self.dim == 1 else "(" + ",".join(f"{v:g}" for v in x) + ")"
            terms.append(f"{w:g}*delta[{loc}]")
        return "DiscreteMeasure(" + " + ".join(terms) + ")"

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [{"x": [float(v) for v in x], "w": float(w)}
                      for x, w in zip(self.locations, self.weights)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        try:
            dim = int(data["dim"])
            atoms = data["atoms"]
            locs = [[float(v) for v in a["x"]] for a in atoms]
            ws = [float(a["w"]) for a in atoms]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidMeasure(f"malformed measure JSON: {exc}") from exc
        if any(len(x) != dim for x in locs):
            raise InvalidMeasure("atom location length does not match 'dim'")
        if not locs:
            raise InvalidMeasure("a measure needs at least one atom")
        return cls(np.array(locs, dtype=float).reshape(len(locs), dim), np.array(ws))

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidMeasure(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "DiscreteMeasure":
        return cls.from_json(Path(path).read_text())


def three_atom_measure(m: float, n: float, r: float) -> DiscreteMeasure:
    """``delta_0 + r delta_m + r delta_n``, the shape of every counterexample here."""
    return DiscreteMeasure.from_atoms([(0.0, 1.0), (m, r), (n, r)])


# -- exponents -------------------------------------------------------------

def parse_exponent(value: Number | str) -> Fraction | float:
    """Turn user input into an exponent.

    Strings (``"3"``, ``"2.5"``, ``"4/3"``) and ints become exact Fractions;
    floats are kept as floats.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidExponents("exponent must be numeric")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidExponents(f"cannot parse exponent {value!r}") from exc
    if isinstance(value, (float, np.floating)):
        return float(value)
    raise InvalidExponents(f"unsupported exponent type {type(value).__name__}")


def is_even_integer(q: Number) -> bool:
    """Exact for rationals; floats within EVEN_INTEGER_TOL of an even integer count as even."""
    if isinstance(q, (Fraction, int)) and not isinstance(q, bool):
        q = Fraction(q)
        return q.denominator == 1 and q.numerator % 2 == 0
    q = float(q)
    nearest = 2.0 * round(q / 2.0)
    return abs(q - nearest) <= EVEN_INTEGER_TOL


def dual_exponent(p: Number) -> Fraction | float:
    if p == 1:
        return math.inf
    if isinstance(p, (Fraction, int)):
        p = Fraction(p)
        return p / (p - 1)
    return p / (p - 1.0)


@dataclass(frozen=True)
class ExponentPair:
    """Exponents (p, q) with 1 <= p <= 2 and 2 <= q <= p'."""

    p: Fraction | float
    q: Fraction | float

    def __post_init__(self):
        p = parse_exponent(self.p)
        q = parse_exponent(self.q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if not 1 <= p <= 2:
            raise InvalidExponents(f"p must lie in [1, 2], got {p}")
        if q < 2:
            raise InvalidExponents(f"q must be >= 2, got {q}")
        pd = self.p_dual
        if pd != math.inf and q > pd:
            exact = isinstance(q, Fraction) and isinstance(pd, Fraction)
            if exact or float(q) > float(pd) * (1 + EVEN_INTEGER_TOL):
                raise InvalidExponents(f"need q <= p' = {pd}, got q = {q}")

    @property
    def p_dual(self) -> Fraction | float:
        return dual_exponent(self.p)

    @property
    def q_is_even_integer(self) -> bool:
        return is_even_integer(self.q)

    @property
    def pf(self) -> float:
        return float(self.p)

    @property
    def qf(self) -> float:
        return float(self.q)

    def inv_p_dual(self) -> float:
        """1/p', which is 0 when p = 1."""
        return 1.0 - 1.0 / float(self.p)

    def __str__(self):
        return f"(p={self.p}, q={self.q})"


# -- operations --------------------------------------------------------------

def mu_hat(mu: DiscreteMeasure, xi):
    """Fourier transform ``sum_j w_j exp(-2 pi i x_j . xi)``.

    ``xi`` may be a scalar (d = 1), a d-vector, or an array of points; the
    output shape follows the input.
    """
    arr = np.asarray(xi, dtype=float)
    if mu.dim == 1:
        phase = np.multiply.outer(arr, mu.locations[:, 0])
    else:
        if arr.shape[-1] != mu.dim:
            raise ValueError(f"expected frequencies of dimension {mu.dim}")
        phase = arr @ mu.locations.T
    out = np.exp(-2j * np.pi * phase) @ mu.weights
    return complex(out) if np.ndim(out) == 0 else out


def heat_evolve(mu: DiscreteMeasure, t: float, x):
    """``u(t, x) = (H_t * mu)(x) = sum_j w_j t^(-d/2) exp(-pi |x - x_j|^2 / t)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    arr = np.asarray(x, dtype=float)
    if mu.dim == 1:
        sq = np.subtract.outer(arr, mu.locations[:, 0]) ** 2
    else:
        if arr.shape[-1] != mu.dim:
            raise ValueError(f"expected points of dimension {mu.dim}")
        diff = arr[..., None, :] - mu.locations
        sq = np.sum(diff * diff, axis=-1)
    out = t ** (-mu.dim / 2) * (np.exp(-np.pi * sq / t) @ mu.weights)
    return float(out) if np.ndim(out) == 0 else out


def tilde_measure(mu: DiscreteMeasure, p: Number) -> DiscreteMeasure:
    """Same atoms, each weight w replaced by w^(1/p)."""
    p = float(p)
    if not p > 1:
        raise InvalidExponents("tilde_measure needs p > 1")
    return DiscreteMeasure(mu.locations, mu.weights ** (1.0 / p))


def tensor_power(mu: DiscreteMeasure, d: int, cap: int = DEFAULT_TENSOR_CAP) -> DiscreteMeasure:
    """d-fold product measure of a one-dimensional measure."""
    if mu.dim != 1:
        raise InvalidMeasure("tensor_power takes a one-dimensional measure")
    if d < 1:
        raise ValueError("d must be a positive integer")
    count = mu.natoms ** d
    if d * count > cap:
        raise CapExceeded(f"tensor power would store {d * count} coordinates (cap {cap})")
    if d == 1:
        return mu
    grids = np.meshgrid(*([mu.locations[:, 0]] * d), indexing="ij")
    wgrids = np.meshgrid(*([mu.weights] * d), indexing="ij")
    locs = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return DiscreteMeasure(locs, w, factors=(mu,) * d)
