from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

TOL_ENV_VAR = "HEATMONO_TOL"
DEFAULT_RTOL = 1e-11


@dataclass(frozen=True)
class QuadratureControl:
    """Knobs shared by every quadrature in :mod:`heatmono.spectral`.

    ``rtol`` is the relative stopping tolerance for refinement by doubling,
    ``initial_panels`` the starting panel count (a power of two),
    ``max_depth`` the number of doublings allowed before giving up, and
    ``safety`` a multiplier on every a-priori truncation radius.
    """

    rtol: float = DEFAULT_RTOL
    initial_panels: int = 64
    max_depth: int = 20
    safety: float = 1.5
    max_samples: int = 2**23

    def __post_init__(self):
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")
        n = self.initial_panels
        if n < 2 or n & (n - 1):
            raise ValueError("initial_panels must be a power of two >= 2")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.safety < 1:
            raise ValueError("safety factor must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "QuadratureControl":
        raw = os.environ.get(TOL_ENV_VAR)
        if raw and "rtol" not in overrides:
            overrides["rtol"] = float(raw)
        return cls(**overrides)

    def with_rtol(self, rtol: float) -> "QuadratureControl":
        return replace(self, rtol=rtol)

    @property
    def log_inv_tol(self) -> float:
        """ln(1/rtol) plus a margin; the Gaussian-tail exponent every truncation targets."""
        return math.log(1.0 / self.rtol) + 8.0

    def monotonicity_tol(self, scale: float) -> float:
        return max(1e-9, 100.0 * self.rtol) * max(1.0, abs(scale))


DEFAULT_CONTROL = QuadratureControl()
