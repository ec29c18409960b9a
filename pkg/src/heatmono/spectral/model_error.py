"""The Gaussian-replacement error

    E_{p,q}(t) = Q_{p,q}(t)^q - p^{q/2} t^{1/2} || (H_{pt} * mu~)^ ||_q^q      (d = 1)

where mu~ carries the weights w_j^{1/p}.  Writing u^{1/p} = m + g with the
model m = sum_j w_j^{1/p} (H_t(. - x_j))^{1/p}, whose transform B is explicit,

    E = t^{(1/2)(1 - q/p')} int (|B + G|^q - |B|^q) d xi.

For well separated atoms g is astronomically small (it lives where two heat
bumps overlap), so E is far below double precision and direct subtraction
returns rounding noise.  The split path evaluates g in the log domain and
rescales it to order one.  While g itself is representable the integrand is
formed without cancellation as |B|^q expm1((q/2) log1p(z)),
z = (2 Re(conj(B) G) + |G|^2)/|B|^2.  Once g underflows only the first-order
term q |B|^{q-2} Re(conj(B) G) is kept; what it drops is smaller by a further
factor below exp(-700).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainTooWide, InvalidExponents, NonConvergence
from ..measure import DiscreteMeasure, ExponentPair, tilde_measure
from .control import DEFAULT_CONTROL, QuadratureControl
from .routes import LogReal, _as_pair, q_direct_power

# log-scale of g below which only the first-order term is kept
FIRST_ORDER_LOG_SCALE = -700.0


@dataclass(frozen=True)
class ModelErrorResult:
    t: float
    value: float
    log_abs: float
    sign: int
    method: str  # "exact-zero", "direct" or "split"
    noise: float

    @property
    def underflow(self) -> bool:
        """The value is not representable as a normal double (it is still known in log form)."""
        return self.sign != 0 and self.log_abs < math.log(np.finfo(float).tiny)

    @property
    def below_noise(self) -> bool:
        return self.method == "direct" and abs(self.value) <= self.noise

    def to_dict(self) -> dict:
        return {"t": self.t, "value": self.value, "sign": self.sign,
                "log10_abs": self.log_abs / math.log(10) if math.isfinite(self.log_abs) else None,
                "method": self.method, "noise": self.noise, "underflow": self.underflow}


def _log_abs_g(locs: np.ndarray, log_w: np.ndarray, t: float, p: float, x: np.ndarray) -> np.ndarray:
    """log |u^{1/p} - m| on the points x, where g = u^{1/p} - m <= 0."""
    ell = log_w[None, :] - 0.5 * math.log(t) - np.pi * (x[:, None] - locs[None, :]) ** 2 / t
    J = np.argmax(ell, axis=1)
    top = ell[np.arange(x.size), J]
    delta = ell - top[:, None]
    mask = np.ones_like(delta, dtype=bool)
    mask[np.arange(x.size), J] = False
    others = np.where(mask, delta, -np.inf)
    log_rho = logsumexp(others, axis=1)
    log_sig = logsumexp(others / p, axis=1)
    # g = e^{top/p} [(1 + rho)^{1/p} - 1 - sigma] = -e^{top/p} sigma (1 - ratio),
    # ratio = ((1 + rho)^{1/p} - 1) / sigma, which lies in [0, 1)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        rho = np.exp(log_rho)
        small = log_rho < -30
        ratio = np.where(small, np.exp(log_rho - log_sig) / p,
                         np.expm1(np.log1p(rho) / p) / np.exp(log_sig))
        out = top / p + log_sig + np.log1p(-ratio)
    return np.where(np.isfinite(log_sig), out, -np.inf)


def _split(mu: DiscreteMeasure, p: float, q: float, t: float, ctrl: QuadratureControl) -> LogReal:
    locs = mu.locations[:, 0].astype(float)
    log_w = np.log(mu.weights)
    tilde_w = mu.weights ** (1.0 / p)
    L = ctrl.log_inv_tol
    W = ctrl.safety * math.sqrt(p * t * L / math.pi)
    lo, hi = locs.min() - W, locs.max() + W
    reach = max(abs(lo), abs(hi))
    Xi = ctrl.safety * math.sqrt(L / (math.pi * p * t * (q - 0.5)))
    pref_B = t ** (-0.5 / p) * math.sqrt(p * t)

    # one reference scale for every refinement level, so levels are comparable
    x_ref = np.linspace(lo, hi, 1 + 64 * int(math.ceil((hi - lo) / math.sqrt(p * t))))
    top = float(_log_abs_g(locs, log_w, t, p, x_ref).max())

    def scaled_integral(hx, hxi):
        x = np.arange(math.floor(lo / hx), math.ceil(hi / hx) + 1) * hx
        lg = _log_abs_g(locs, log_w, t, p, x)
        keep = lg > top - L - 5
        xs, amp = x[keep], np.exp(lg[keep] - top)
        nxi = int(math.ceil(Xi / hxi))
        if xs.size * (nxi + 1) > 64 * ctrl.max_samples:
            raise DomainTooWide("model-error grid too large")
        xi = hxi * np.arange(0, nxi + 1)
        # G(xi) = -h sum_x amp(x) exp(-2 pi i x xi), amp scaled by e^{-top}; G(-xi) = conj(G(xi))
        G = np.empty(xi.size, dtype=complex)
        for a in range(0, xi.size, 512):
            blk = xi[a:a + 512]
            G[a:a + 512] = -hx * (np.exp(-2j * np.pi * np.outer(blk, xs)) @ amp)
        B = pref_B * np.exp(-np.pi * p * t * xi ** 2) * (
            np.exp(-2j * np.pi * np.outer(xi, locs)) @ tilde_w)
        absB = np.abs(B)
        if top > FIRST_ORDER_LOG_SCALE:
            # exact integrand, divided by e^{top} after the cancellation-free evaluation
            Gt = G * math.exp(top)
            z = (2 * np.real(np.conj(B) * Gt) + np.abs(Gt) ** 2) / absB ** 2
            f = absB ** q * np.expm1(0.5 * q * np.log1p(z)) / math.exp(top)
        else:
            f = q * absB ** (q - 2) * np.real(np.conj(B) * G)
        # even integrand on [-Xi, Xi]
        return hxi * (f[0] + 2 * f[1:].sum())

    hx = math.sqrt(p * t) / 4
    hxi = min(1.0 / (4.0 * (reach + 1.0)), Xi / 64)
    prev = scaled_integral(hx, hxi)
    change = math.inf
    for depth in range(ctrl.max_depth):
        hx, hxi = hx / 2, hxi / 2
        cur = scaled_integral(hx, hxi)
        change = abs(cur - prev)
        if change <= ctrl.rtol * abs(cur) * 1e3:
            break
        prev = cur
    else:
        raise NonConvergence("split model-error quadrature did not converge",
                             last_change=change, depth=ctrl.max_depth)
    if cur == 0:
        return LogReal(0, -math.inf)
    log_pref = 0.5 * (1.0 - q * (1.0 - 1.0 / p)) * math.log(t)
    return LogReal(1 if cur > 0 else -1, log_pref + top + math.log(abs(cur)))


def model_error(mu: DiscreteMeasure, pq: ExponentPair | tuple, t: float,
                ctrl: QuadratureControl = DEFAULT_CONTROL, *, method: str = "auto") -> ModelErrorResult:
    """E_{p,q}(t) for a one-dimensional measure and 1 < p <= 2.

    ``method="auto"`` (or ``"split"``) uses the log-domain split described
    in the module docstring; ``"direct"`` subtracts two independent direct
    quadratures, which is only meaningful while |E| is well above their
    noise (reported in ``noise``).
    """
    pq = _as_pair(pq)
    if not pq.pf > 1:
        raise InvalidExponents("model_error needs p > 1")
    if mu.dim != 1:
        raise ValueError("model_error is implemented for d = 1")
    if not t > 0:
        raise ValueError("t must be positive")
    if method not in ("auto", "direct", "split"):
        raise ValueError(f"unknown method {method!r}")
    p, q = pq.pf, pq.qf
    if mu.natoms == 1:
        return ModelErrorResult(t, 0.0, -math.inf, 0, "exact-zero", 0.0)

    if method in ("auto", "split"):
        lr = _split(mu, p, q, t, ctrl)
        return ModelErrorResult(t, lr.value, lr.log_abs, lr.sign, "split", 0.0)

    first = q_direct_power(mu, pq, t, ctrl)
    tilde = tilde_measure(mu, pq.p)
    # p^{q/2} t^{1/2} int exp(-pi p q t xi^2) |mu~^|^q = p^{(q-1)/2} Q_{1,q}(p t; mu~)^q
    second = p ** ((q - 1) / 2) * q_direct_power(tilde, (1, pq.q), p * t, ctrl)
    value = first - second
    noise = 4 * ctrl.rtol * max(abs(first), abs(second))
    lr = LogReal.from_float(value)
    return ModelErrorResult(t, value, lr.log_abs, lr.sign, "direct", noise)


def gaussian_decay_slope(results) -> float:
    """Least-squares slope of log|E| against 1/t; negative means Gaussian-type decay as t -> 0."""
    pts = [(1.0 / r.t, r.log_abs) for r in results if r.sign != 0]
    if len(pts) < 2:
        raise ValueError("need at least two nonzero model errors")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])
