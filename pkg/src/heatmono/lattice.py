"""Binomial series, Bezout pairs and the lattice sets that control c_1 + c_{-1}.

For ``mu = delta_0 + r delta_m + r delta_n`` the sum of the first Fourier
coefficients of ``|mu_hat|^q`` expands as

    c_1 + c_{-1} = sum_{k,k'} a_k a_k' r^(k+k') sum_{Lambda_{k,k'}} C(k, j1) C(k', j1')

where ``a_k`` are the binomial coefficients of ``(1 + x)^(q/2)`` and
``Lambda_{k,k'}`` collects quadruples ``((j1, j2), (j1', j2'))`` with
``j1 + j2 = k``, ``j1' + j2' = k'`` and ``m(j1 - j1') + n(j2 - j2') = +-1``.
Choosing m, n so that every Lambda paired with a positive product a_k a_k'
is empty forces the sum to be negative.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Literal

import numpy as np

from .errors import CapExceeded, EvenIntegerQ, InconclusiveCertificate, NotCoprime
from .measure import DiscreteMeasure, Number, is_even_integer, three_atom_measure

LAMBDA_CAP = 10**7
DEFAULT_CERT_KMAX = 40

Family = Literal["A", "B", "custom"]


# -- binomial series ---------------------------------------------------------

@dataclass(frozen=True)
class BinomialSeq:
    q: Number
    coefficients: tuple[float, ...]
    exact: tuple[Fraction, ...] | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, k: int) -> float:
        return self.coefficients[k]


def binomial_seq(q: Number, K: int) -> BinomialSeq:
    """Coefficients a_0..a_K of (1 + x)^(q/2) via a_{k+1} = a_k (q/2 - k)/(k + 1).

    Exact rational arithmetic is used when ``q`` is an int or Fraction.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if q < 2:
        raise ValueError("q must be >= 2")
    if not isinstance(q, (int, Fraction)) and is_even_integer(q):
        # floats within the even-integer tolerance are treated as that even integer
        q = int(round(float(q)))
    if isinstance(q, (int, Fraction)):
        half = Fraction(q) / 2
        exact = [Fraction(1)]
        for k in range(K):
            exact.append(exact[-1] * (half - k) / (k + 1))
        coeffs = tuple(float(a) for a in exact)
        seq = BinomialSeq(q, coeffs, tuple(exact))
    else:
        half = float(q) / 2
        coeffs = [1.0]
        for k in range(K):
            coeffs.append(coeffs[-1] * (half - k) / (k + 1))
        seq = BinomialSeq(q, tuple(coeffs))
    _check_sign_pattern(seq)
    return seq


def _check_sign_pattern(seq: BinomialSeq) -> None:
    half = float(seq.q) / 2
    even = is_even_integer(seq.q)
    prev_sign = None
    for k, a in enumerate(seq.coefficients):
        if k < half + 1:
            ok = a > 0 or (even and k > half and a == 0)
            if not ok:
                raise AssertionError(f"a_{k} = {a} should be positive")
        elif even:
            if a != 0:
                raise AssertionError(f"a_{k} = {a} should vanish for even q")
        else:
            sign = 1 if a > 0 else -1 if a < 0 else 0
            if sign == 0 or sign == prev_sign:
                raise AssertionError(f"a_{k} breaks the alternating sign pattern")
        prev_sign = 1 if a > 0 else -1 if a < 0 else 0


def binomial_sup(q: Number) -> float:
    """sup_k |a_k|.  Beyond k = q/2 the ratio |q/2 - k|/(k + 1) is below 1,
    so the maximum is attained among the first ceil(q/2) + 1 terms."""
    K = max(1, math.ceil(float(q) / 2) + 1)
    return max(abs(a) for a in binomial_seq(q, K).coefficients)


# -- Bezout pairs ------------------------------------------------------------

@dataclass(frozen=True)
class BezoutPair:
    m: int
    n: int
    alpha0: int
    beta0: int

    def __post_init__(self):
        if self.alpha0 * self.m + self.beta0 * self.n != 1:
            raise ValueError("alpha0*m + beta0*n must equal 1")

    def shifted(self, N: int) -> "BezoutPair":
        """The representative (alpha0 + N n, beta0 - N m)."""
        return BezoutPair(self.m, self.n, self.alpha0 + N * self.n, self.beta0 - N * self.m)


def extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    r0, r1 = a, b
    s0, s1 = 1, 0
    t0, t1 = 0, 1
    while r1 != 0:
        quo = r0 // r1
        r0, r1 = r1, r0 - quo * r1
        s0, s1 = s1, s0 - quo * s1
        t0, t1 = t1, t0 - quo * t1
    return r0, s0, t0


def bezout(m: int, n: int) -> BezoutPair:
    """Bezout pair for coprime positive m, n, canonicalized to |alpha0| <= n/2."""
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive integers")
    g, alpha, _ = extended_gcd(m, n)
    if g != 1:
        raise NotCoprime(f"gcd({m}, {n}) = {g}")
    alpha %= n
    if 2 * alpha > n:
        alpha -= n
    beta = (1 - alpha * m) // n
    return BezoutPair(m, n, alpha, beta)


def alpha_beta_star(bp: BezoutPair) -> tuple[int, int]:
    """min |alpha0 + N n| and min |beta0 - N m| over integers N."""
    a = bp.alpha0 % bp.n
    b = bp.beta0 % bp.m
    return min(a, bp.n - a), min(b, bp.m - b)


# -- Lambda sets -------------------------------------------------------------

Quadruple = tuple[tuple[int, int], tuple[int, int]]


@dataclass(frozen=True)
class LambdaSet:
    m: int
    n: int
    k: int
    kp: int
    solutions: tuple[Quadruple, ...]

    @property
    def empty(self) -> bool:
        return not self.solutions

    def __len__(self):
        return len(self.solutions)

    def weight(self) -> int:
        """sum of C(k, j1) C(k', j1') over the set."""
        return sum(math.comb(self.k, j[0]) * math.comb(self.kp, jp[0]) for j, jp in self.solutions)


def lambda_set(m: int, n: int, k: int, kp: int, cap: int = LAMBDA_CAP) -> LambdaSet:
    """Enumerate Lambda_{k,k'} by scanning every (j1, j1') pair."""
    if k < 0 or kp < 0:
        raise ValueError("k and k' must be nonnegative")
    size = (k + 1) * (kp + 1)
    if size > cap:
        raise CapExceeded(f"Lambda scan of {size} pairs exceeds cap {cap}")
    j1 = np.arange(k + 1, dtype=np.int64)[:, None]
    j1p = np.arange(kp + 1, dtype=np.int64)[None, :]
    diff = m * (j1 - j1p) + n * ((k - j1) - (kp - j1p))
    rows, cols = np.nonzero(np.abs(diff) == 1)
    sols = tuple(((int(a), k - int(a)), (int(b), kp - int(b))) for a, b in zip(rows, cols))
    return LambdaSet(m, n, k, kp, sols)


def lambda_weight(m: int, n: int, k: int, kp: int) -> int:
    """Closed form for ``lambda_set(m, n, k, kp).weight()``.

    On Lambda the shift j1 - j1' is pinned to d = (n(k - k') -+ 1)/(n - m), and
    summing C(k, j1) C(k', j1 - d) over j1 is Vandermonde's identity.
    """
    if m == n:
        return 2 ** (k + kp) if abs(m * (k - kp)) == 1 else 0
    total = 0
    for sign in (1, -1):
        num = n * (k - kp) - sign
        if num % (n - m):
            continue
        d = num // (n - m)
        top = kp + d
        if 0 <= top <= k + kp:
            total += math.comb(k + kp, top)
    return total


# -- verification reports ----------------------------------------------------

@dataclass
class VerificationReport:
    claim: str
    parameters: dict[str, Any]
    range_checked: dict[str, Any]
    violations: list[dict[str, Any]] = field(default_factory=list)
    witness: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _check_coprime(m: int, n: int) -> None:
    g = math.gcd(m, n)
    if g != 1:
        raise NotCoprime(f"gcd({m}, {n}) = {g}")


def verify_parity_lemma(m: int, n: int, k_max: int) -> VerificationReport:
    """Brute-force: Lambda_{k,k'} is empty whenever k = k' mod 2 (needs n - m even)."""
    _check_coprime(m, n)
    if (n - m) % 2:
        raise ValueError("the parity lemma needs n - m even")
    report = VerificationReport(
        claim="Lambda_{k,k'} is empty when n - m is even and k, k' have the same parity",
        parameters={"m": m, "n": n},
        range_checked={"k_max": k_max, "pairs": 0},
    )
    checked = 0
    for k in range(k_max + 1):
        for kp in range(k % 2, k_max + 1, 2):
            lam = lambda_set(m, n, k, kp)
            checked += 1
            if not lam.empty:
                report.violations.append({"k": k, "kp": kp, "example": lam.solutions[0]})
    report.range_checked["pairs"] = checked
    return report


def verify_star_lemma(m: int, n: int, k_max: int) -> VerificationReport:
    """Brute-force: Lambda_{k,k'} is empty whenever min(k, k') < min(alpha*, beta*)."""
    bp = bezout(m, n)
    a_star, b_star = alpha_beta_star(bp)
    bound = min(a_star, b_star)
    report = VerificationReport(
        claim="Lambda_{k,k'} is empty when min(k, k') <= min(alpha*, beta*) - 1",
        parameters={"m": m, "n": n, "alpha0": bp.alpha0, "beta0": bp.beta0,
                    "alpha_star": a_star, "beta_star": b_star},
        range_checked={"k_max": k_max, "pairs": 0},
    )
    checked = 0
    smallest_nonempty = None
    for k in range(k_max + 1):
        for kp in range(k_max + 1):
            lam = lambda_set(m, n, k, kp)
            if min(k, kp) < bound:
                checked += 1
                if not lam.empty:
                    report.violations.append({"k": k, "kp": kp, "example": lam.solutions[0]})
            elif not lam.empty and (smallest_nonempty is None or min(k, kp) < smallest_nonempty[0]):
                smallest_nonempty = (min(k, kp), k, kp)
    report.range_checked["pairs"] = checked
    if smallest_nonempty is not None:
        report.witness = {"smallest_min_k_nonempty": smallest_nonempty[0],
                          "k": smallest_nonempty[1], "kp": smallest_nonempty[2]}
    return report


# -- counterexample parameters ----------------------------------------------

@dataclass(frozen=True)
class CounterexampleParams:
    q: Number
    family: Family
    k_anchor: int | None
    m: int
    n: int
    alpha_star: int
    beta_star: int
    r: float

    def measure(self) -> DiscreteMeasure:
        return three_atom_measure(self.m, self.n, self.r)

    def expected_witness(self) -> tuple[int, int]:
        """(k, k') where the construction guarantees a nonempty Lambda with a_k a_k' < 0."""
        return self.alpha_star, self.beta_star

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q"] = str(self.q) if isinstance(self.q, Fraction) else self.q
        return d


def k_of_q(q: Number) -> int:
    """Smallest integer strictly greater than q/2 + 1."""
    if isinstance(q, (int, Fraction)):
        return math.floor(Fraction(q) / 2 + 1) + 1
    return math.floor(float(q) / 2 + 1) + 1


def generate_params(q: Number, family: Family = "A", r: float | None = None,
                    k0: int | None = None, m: int | None = None,
                    n: int | None = None) -> CounterexampleParams:
    """Integers (m, n) for which every positive product a_k a_k' meets an empty Lambda.

    Family A: m = 2k(q) + 1, n = m + 2.  Family B: m = 3k0 + 1, n = 2m + 3 with
    k0 even and > q/2 + 1 (smallest such unless given).  ``family="custom"``
    takes m and n as given and promises nothing beyond what brute force shows.
    """
    if is_even_integer(q):
        raise EvenIntegerQ(f"q = {q} is an even integer; heat-flow is monotone there")
    if q < 2:
        raise ValueError("q must be >= 2")
    r = 0.4 if r is None else float(r)
    if not 0 < r < 0.5:
        raise ValueError("r must lie in (0, 1/2)")
    threshold = float(q) / 2 + 1
    if family == "A":
        anchor = k_of_q(q)
        m = 2 * anchor + 1
        n = m + 2
        # ((m+1)/2) m - ((m-1)/2) n = 1
        assert ((m + 1) // 2) * m - ((m - 1) // 2) * n == 1
        closed = (anchor + 1, anchor)
    elif family == "B":
        if k0 is None:
            anchor = k_of_q(q)
            anchor += anchor % 2
        else:
            anchor = int(k0)
            if anchor % 2 or anchor <= threshold:
                raise ValueError(f"k0 must be even and > q/2 + 1 = {threshold}")
        m = 3 * anchor + 1
        n = 2 * m + 3
        # ((2m+1)/3) m - ((m-1)/3) n = 1
        assert ((2 * m + 1) // 3) * m - ((m - 1) // 3) * n == 1
        closed = (2 * anchor + 1, anchor)
    elif family == "custom":
        if m is None or n is None:
            raise ValueError("custom family needs m and n")
        anchor, closed = None, None
    else:
        raise ValueError(f"unknown family {family!r}")

    bp = bezout(m, n)
    stars = alpha_beta_star(bp)
    brute = _stars_brute_force(bp)
    if stars != brute:
        raise AssertionError(f"alpha*/beta* {stars} disagree with brute force {brute}")
    if closed is not None:
        if stars != closed:
            raise AssertionError(f"alpha*/beta* {stars} disagree with closed form {closed}")
        if (n - m) % 2:
            raise AssertionError("n - m must be even")
    return CounterexampleParams(q, family, anchor, m, n, stars[0], stars[1], r)


def _stars_brute_force(bp: BezoutPair) -> tuple[int, int]:
    span = range(-abs(bp.alpha0) - 2, abs(bp.alpha0) + 3)
    a = min(abs(bp.alpha0 + N * bp.n) for N in span)
    span = range(-abs(bp.beta0) - 2, abs(bp.beta0) + 3)
    b = min(abs(bp.beta0 - N * bp.m) for N in span)
    return a, b


def verify_sign_structure(params: CounterexampleParams, k_cap: int = 30) -> VerificationReport:
    """Check that Lambda_{k,k'} is empty for every a_k a_k' > 0 with k, k' <= k_cap,
    and locate nonempty sets carrying a negative product."""
    seq = binomial_seq(params.q, max(k_cap, 1))
    a = seq.coefficients
    report = VerificationReport(
        claim="Lambda_{k,k'} is empty whenever a_k a_k' > 0",
        parameters=params.to_dict(),
        range_checked={"k_cap": k_cap, "positive_pairs": 0},
    )
    negatives = []
    positive_pairs = 0
    for k in range(k_cap + 1):
        for kp in range(k_cap + 1):
            prod = a[k] * a[kp]
            if prod == 0:
                continue
            lam = lambda_set(params.m, params.n, k, kp)
            if prod > 0:
                positive_pairs += 1
                if not lam.empty:
                    report.violations.append({"k": k, "kp": kp, "example": lam.solutions[0]})
            elif not lam.empty:
                negatives.append((k + kp, -k, kp, lam))
    report.range_checked["positive_pairs"] = positive_pairs
    if negatives:
        negatives.sort(key=lambda item: item[:3])
        _, negk, kp, lam = negatives[0]
        ek, ekp = params.expected_witness()
        expected = lambda_set(params.m, params.n, ek, ekp) if max(ek, ekp) <= k_cap else None
        report.witness = {
            "first_negative_nonempty": {"k": -negk, "kp": kp, "example": list(lam.solutions[0]),
                                        "size": len(lam)},
            "expected": {"k": ek, "kp": ekp,
                         "nonempty": None if expected is None else not expected.empty,
                         "product": a[ek] * a[ekp] if max(ek, ekp) <= k_cap else None},
            "negative_nonempty_count": len(negatives),
        }
    else:
        report.violations.append({"reason": "no nonempty Lambda with a negative product found"})
    return report


# -- the certificate ---------------------------------------------------------

@dataclass(frozen=True)
class CertificateResult:
    value: float
    tail_bound: float
    K_max: int
    abar: float
    q: Number
    m: int
    n: int
    r: float

    @property
    def conclusive(self) -> bool:
        return self.value + self.tail_bound < 0 or self.value - self.tail_bound > 0

    @property
    def negative(self) -> bool:
        return self.value + self.tail_bound < 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q"] = str(self.q) if isinstance(self.q, Fraction) else self.q
        d["conclusive"] = self.conclusive
        d["negative"] = self.negative
        return d


def geometric_tail(x: float, K: int) -> float:
    """sum_{s > K} (s + 1) x^s, i.e. the number of (k, k') with k + k' = s weighted by x^s."""
    if not 0 <= x < 1:
        raise ValueError("need 0 <= x < 1")
    return x ** (K + 1) * ((K + 2) - (K + 1) * x) / (1 - x) ** 2


def c1_series(q: Number, m: int, n: int, r: float, K_max: int) -> CertificateResult:
    """Truncated double sum for c_1 + c_{-1} with an a-priori bound on what was dropped.

    The dropped region {max(k, k') > K} sits inside {k + k' > K}; each term there
    is at most abar^2 (2r)^(k+k') since the inner binomial sum is <= 2^(k+k').
    For even q the series terminates and the bound is exactly zero once K >= q/2.
    """
    if not 0 < r < 0.5:
        raise ValueError("r must lie in (0, 1/2)")
    if (K_max + 1) ** 2 > LAMBDA_CAP:
        raise CapExceeded(f"K_max = {K_max} exceeds the enumeration cap")
    a = binomial_seq(q, max(K_max, 1)).coefficients
    terms = []
    for k in range(K_max + 1):
        if a[k] == 0:
            continue
        for kp in range(K_max + 1):
            if a[kp] == 0:
                continue
            w = lambda_weight(m, n, k, kp)
            if w:
                terms.append(a[k] * a[kp] * r ** (k + kp) * float(w))
    value = math.fsum(terms)
    abar = binomial_sup(q)
    if is_even_integer(q) and K_max >= float(q) / 2:
        tail = 0.0
    else:
        tail = abar * abar * geometric_tail(2 * r, K_max)
    return CertificateResult(value, tail, K_max, abar, q, m, n, r)


def c1_certificate(params: CounterexampleParams, K_max: int = DEFAULT_CERT_KMAX) -> CertificateResult:
    """Sign certificate for c_1 + c_{-1}; raises when the tail bound straddles zero."""
    res = c1_series(params.q, params.m, params.n, params.r, K_max)
    if res.value + res.tail_bound >= 0 >= res.value - res.tail_bound:
        raise InconclusiveCertificate(
            f"value {res.value:.3e} +- {res.tail_bound:.3e} does not fix the sign; raise K_max",
            value=res.value, tail_bound=res.tail_bound)
    return res


def certify_with_escalation(params: CounterexampleParams, K_start: int = DEFAULT_CERT_KMAX,
                            K_limit: int = 640) -> CertificateResult:
    """Run :func:`c1_certificate`, doubling K_max until conclusive or past ``K_limit``."""
    K = K_start
    while True:
        try:
            return c1_certificate(params, K)
        except InconclusiveCertificate:
            if 2 * K > K_limit:
                raise
            K *= 2
