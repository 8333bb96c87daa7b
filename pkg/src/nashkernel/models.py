"""Reference densities rho and their closed-form Lyapunov data.

Every density is radial, ``rho(x) = exp(psi(|x|))``. Spatial computations are
one-dimensional; ``d`` only enters the Nash rate and the radial formulas for
``-AV/V`` and the Lyapunov constants, which are evaluated at ``r = |x|``.

Families
--------
cauchy     rho = (1 + x^2)^(-beta),            beta > d
expsmooth  rho = exp(-(1 + x^2)^(a/2)),        0 < a < 2
exppower   rho = exp(-|x|^a),                  a >= 2, K_cut above threshold
gauss      rho = exp(-x^2)                     sanity family
flat       rho = 1                             test hook only
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .errors import ConfigError

FAMILIES = ("cauchy", "expsmooth", "exppower", "gauss", "flat")

# |x|^a has unbounded derivatives at the origin for a < 4
_R_FLOOR = 1e-12


def exppower_threshold(a: float, d: int) -> float:
    """Smallest admissible cut radius ``(2(a+d-2)/a)^(1/a)``."""
    return (2.0 * (a + d - 2.0) / a) ** (1.0 / a)


@dataclass(frozen=True)
class ModelPointReport:
    x: float
    rho: float
    grad_log_rho: float
    V: float
    minus_AV_over_V: float
    schrodinger_U: float

    def as_row(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class DensityModel:
    family: str = "cauchy"
    beta: float = 2.0
    a: float | None = None
    d: int = 1
    K_cut: float | None = None

    def __post_init__(self):
        fam = str(self.family).lower()
        object.__setattr__(self, "family", fam)
        if fam not in FAMILIES:
            raise ConfigError(f"family: unknown density family {self.family!r}")
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"d: must be a positive integer, got {self.d!r}")
        object.__setattr__(self, "d", int(self.d))
        if fam == "cauchy":
            if not self.beta > self.d:
                raise ConfigError(f"beta: Cauchy density needs beta > d (beta={self.beta}, d={self.d})")
        if fam == "expsmooth":
            a = 1.0 if self.a is None else float(self.a)
            if not 0.0 < a < 2.0:
                raise ConfigError(f"a: expsmooth needs 0 < a < 2, got {a}")
            object.__setattr__(self, "a", a)
        if fam == "exppower":
            a = 2.0 if self.a is None else float(self.a)
            if a < 2.0:
                raise ConfigError(f"a: exppower needs a >= 2, got {a}")
            object.__setattr__(self, "a", a)
            k_min = exppower_threshold(a, self.d)
            K = k_min if self.K_cut is None else float(self.K_cut)
            # relative slack so that the threshold itself round-trips through JSON
            if K < k_min * (1.0 - 1e-12):
                raise ConfigError(f"K_cut: must be >= {k_min!r}, got {K!r}")
            object.__setattr__(self, "K_cut", K)

    @classmethod
    def from_dict(cls, cfg: dict[str, Any]) -> "DensityModel":
        allowed = {"family", "beta", "a", "d", "K_cut"}
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"model: unknown keys {sorted(unknown)}")
        return cls(**cfg)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "beta": self.beta, "a": self.a,
                "d": self.d, "K_cut": self.K_cut}

    # -- radial log-density and its derivatives --------------------------------

    def _psi(self, r):
        """Return psi, psi', psi'' of ``psi = log rho`` as functions of r >= 0."""
        r = np.asarray(r, dtype=float)
        fam = self.family
        if fam == "cauchy":
            b = self.beta
            q = 1.0 + r * r
            return -b * np.log(q), -2 * b * r / q, -2 * b * (1 - r * r) / q**2
        if fam == "expsmooth":
            a = self.a
            q = 1.0 + r * r
            p1 = -a * r * q ** (a / 2 - 1)
            p2 = -a * q ** (a / 2 - 1) - a * (a - 2) * r * r * q ** (a / 2 - 2)
            return -(q ** (a / 2)), p1, p2
        if fam == "exppower":
            a = self.a
            rc = np.maximum(r, _R_FLOOR)
            return -(r**a), -a * rc ** (a - 1), -a * (a - 1) * rc ** (a - 2)
        if fam == "gauss":
            return -r * r, -2 * r, np.full_like(r, -2.0)
        z = np.zeros_like(r)
        return z, z, z

    # -- pointwise quantities --------------------------------------------------

    def rho(self, x):
        return np.exp(self._psi(np.abs(x))[0])

    def log_rho(self, x):
        return self._psi(np.abs(x))[0]

    def grad_log_rho(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * self._psi(np.abs(x))[1] + 0.0

    def d2_log_rho(self, x):
        """Second derivative of log rho on the line."""
        return self._psi(np.abs(x))[2]

    def V(self, x):
        """Lyapunov weight ``rho^(-1/2)``."""
        return np.exp(-0.5 * self._psi(np.abs(x))[0])

    def minus_AV_over_V(self, x):
        """Closed form of ``-AV/V`` in d dimensions at radius |x|, with ``V = rho^(-1/2)``."""
        r = np.abs(np.asarray(x, dtype=float))
        d = self.d
        fam = self.family
        if fam == "cauchy":
            b = self.beta
            q = 1.0 + r * r
            return b * d / q - b * (b + 2) * r * r / q**2
        if fam == "expsmooth":
            a = self.a
            q = 1.0 + r * r
            return (0.5 * a * (a - 2) * q ** ((a - 4) / 2) * r * r
                    + 0.5 * a * d * q ** ((a - 2) / 2)
                    - 0.25 * a * a * q ** (a - 2) * r * r)
        if fam == "exppower":
            a = self.a
            rc = np.maximum(r, _R_FLOOR)
            return 0.5 * a * rc ** (2 * a - 2) * ((a + d - 2) * rc ** (-a) - 0.5 * a)
        if fam == "gauss":
            return d - r * r
        return np.zeros_like(r)

    def schrodinger_potential(self, x):
        """Potential q of ``B = -Laplacian + q``, i.e. ``q = -U`` with
        ``U = |grad rho/rho|^2/4 - (Laplacian rho)/(2 rho)``.
        """
        r = np.abs(np.asarray(x, dtype=float))
        _, p1, p2 = self._psi(r)
        rc = np.maximum(r, _R_FLOOR)
        # radial Laplacian; psi'/r -> psi''(0) at the origin
        tangential = np.where(r > _R_FLOOR, p1 / rc, p2)
        lap = p2 + (self.d - 1) * tangential
        return 0.5 * lap + 0.25 * p1 * p1

    # -- constants ---------------------------------------------------------------

    def lyapunov_constant(self) -> float:
        fam, d = self.family, self.d
        if fam == "cauchy":
            return self.beta * d
        if fam == "expsmooth":
            return 0.5 * self.a * d
        if fam == "exppower":
            a = self.a
            return 0.5 * a * (a + d - 2) * self.K_cut ** (a - 2)
        if fam == "gauss":
            return float(d)
        return 0.0

    def hessian_logrho_bound(self) -> float:
        fam = self.family
        if fam == "cauchy":
            return 4.0 * self.beta
        if fam == "expsmooth":
            return self.a * (2.0 - self.a)
        if fam == "gauss":
            return -2.0
        return 0.0

    def decay_condition_check(self, radii) -> list[tuple[float, float, float]]:
        """Return ``(r, rho^(1/2) r^(d-1), |rho'| rho^(-1/2) r^(d-1))`` per radius."""
        radii = np.asarray(radii, dtype=float)
        if np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be strictly increasing")
        psi, p1, _ = self._psi(radii)
        sqrt_rho = np.exp(0.5 * psi)
        geo = radii ** (self.d - 1)
        s1 = sqrt_rho * geo
        # |rho'| rho^(-1/2) = |psi'| rho^(1/2)
        s2 = np.abs(p1) * sqrt_rho * geo
        return [(float(r), float(a), float(b)) for r, a, b in zip(radii, s1, s2)]

    def inspect(self, x: float) -> ModelPointReport:
        return ModelPointReport(
            x=float(x),
            rho=float(self.rho(x)),
            grad_log_rho=float(self.grad_log_rho(x)),
            V=float(self.V(x)),
            minus_AV_over_V=float(self.minus_AV_over_V(x)),
            schrodinger_U=float(-self.schrodinger_potential(x)),
        )
