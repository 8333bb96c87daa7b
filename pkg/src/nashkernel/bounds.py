"""Rate functions and kernel upper bounds ``p_a(t,x,y) <= K(t)^2 e^(c^a t) V(x) V(y)``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .discretization import Grid1D
from .models import DensityModel
from .spectral import KernelMatrix, SpectralDecomposition, apply_function, power


@dataclass(frozen=True)
class RateFunctions:
    """Closed forms for the power rate ``B(x) = x^(2/d)``.

    ``U(x) = int_x^inf du / (gamma u B(gamma u)^alpha)`` and ``K = sqrt(U^-1)``.
    With ``M > 0`` the rate is only used above ``M`` and ``K`` is frozen at
    ``sqrt(M)`` for arguments ``x >= U(M)``.
    """

    alpha: float
    gamma: float
    d: int = 1
    M: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.gamma > 0 and self.d >= 1 and self.M >= 0):
            raise ValueError("need alpha > 0, gamma > 0, d >= 1, M >= 0")

    @property
    def coef(self) -> float:
        return self.d / (2 * self.alpha * self.gamma ** (1 + 2 * self.alpha / self.d))

    @property
    def C_K(self) -> float:
        return self.coef ** (self.d / (4 * self.alpha))

    def U(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("U is defined for x > 0")
        return self.coef * x ** (-2 * self.alpha / self.d)

    def K(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("K is defined for x > 0")
        k = self.C_K * x ** (-self.d / (4 * self.alpha))
        if self.M > 0:
            k = np.where(x >= self.U(self.M), math.sqrt(self.M), k)
        return k

    def U_quadrature(self, x: float) -> float:
        """Numerical evaluation of the defining integral (substitution ``u = x e^v``)."""
        if not x > 0:
            raise ValueError("U is defined for x > 0")
        g, a, d = self.gamma, self.alpha, self.d

        def integrand(v):
            # du / (g u B(g u)^a) with du = u dv, evaluated in logs to survive large v
            log_u = math.log(x) + v
            log_gu = math.log(g) + log_u
            return math.exp(log_u - log_gu - a * (2 / d) * log_gu)

        val, _ = integrate.quad(integrand, 0.0, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
        return val


def rate_U(alpha: float, gamma: float, d: int, x):
    return RateFunctions(alpha, gamma, d).U(x)


def rate_K(alpha: float, gamma: float, d: int, x, M: float = 0.0):
    return RateFunctions(alpha, gamma, d, M).K(x)


# -- kernel ratios -------------------------------------------------------------


def interior_mask(nodes, margin: float) -> np.ndarray:
    if not 0 <= margin <= 0.45:
        raise ValueError(f"interior margin must lie in [0, 0.45], got {margin!r}")
    nodes = np.asarray(nodes)
    mask = np.abs(nodes) <= (1 - margin) * np.abs(nodes).max() * (1 + 1e-14)
    if not mask.any():
        raise ValueError("empty interior")
    return mask


@dataclass(frozen=True)
class RatioResult:
    log_value: float
    i: int
    j: int
    exponent_rate: float
    branch: str

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _sup_ratio(kern: KernelMatrix, V, rate: float, margin: float, branch: str) -> RatioResult:
    V = np.asarray(V, dtype=float)
    if np.any(V <= 0):
        raise ValueError("V must be positive on the grid")
    idx = np.flatnonzero(interior_mask(kern.nodes, margin))
    Vi = V[idx]
    R = kern.values[np.ix_(idx, idx)] / np.outer(Vi, Vi)
    flat = int(np.argmax(R))
    a, b = divmod(flat, idx.size)
    # the exponential factor can underflow for large c_alpha t, so keep the log
    log_val = math.log(float(R[a, b])) - rate * kern.t
    return RatioResult(log_val, int(idx[a]), int(idx[b]), rate, branch)


def bound_ratio(kern: KernelMatrix, V, c: float, interior_margin: float = 0.25) -> float:
    """``sup p(t,x_i,x_j) / (V_i V_j e^(c^a t))`` over the interior block."""
    return _sup_ratio(kern, V, c**kern.alpha, interior_margin, "c^alpha").value


def bound_ratio_detail(kern: KernelMatrix, V, c: float, interior_margin: float = 0.25) -> RatioResult:
    return _sup_ratio(kern, V, c**kern.alpha, interior_margin, "c^alpha")


def alpha_ge1_branch(c: float, c_alpha: float, alpha: float) -> tuple[float, str]:
    if c_alpha >= c**alpha:
        return c_alpha, "c_alpha"
    return c**alpha, "c^alpha"


def bound_ratio_alpha_ge1(kern: KernelMatrix, V, c: float, c_alpha: float,
                          interior_margin: float = 0.25) -> RatioResult:
    if kern.alpha < 1:
        raise ValueError("this bound needs alpha >= 1")
    rate, branch = alpha_ge1_branch(c, c_alpha, kern.alpha)
    return _sup_ratio(kern, V, rate, interior_margin, branch)


def diagonal_sup(dec: SpectralDecomposition, t: float, alpha: float, scale, interior_margin: float = 0.25):
    """``max_i p(t,x_i,x_i) / scale_i^2`` over the interior, in O(n^2).

    For a positive semidefinite kernel ``p_ij <= sqrt(p_ii p_jj)``, so with
    ``scale > 0`` this equals the sup over all interior pairs of ``p_ij/(scale_i scale_j)``.
    """
    idx = np.flatnonzero(interior_mask(dec.nodes, interior_margin))
    decay = np.exp(-t * dec.clipped_eigenvalues**alpha)
    phi = dec.eigenfunctions[idx]
    diag = (phi * phi) @ decay
    s = np.asarray(scale, dtype=float)[idx]
    k = int(np.argmax(diag / (s * s)))
    return float(diag[k] / (s[k] * s[k])), int(idx[k])


def fit_exponent(t_list, ratios) -> tuple[float, float]:
    """Least-squares line through ``(log t, log ratio)``; returns ``(slope, exp(intercept))``."""
    t = np.asarray(t_list, dtype=float)
    r = np.asarray(ratios, dtype=float)
    if t.size < 2 or t.shape != r.shape:
        raise ValueError("need matching t and ratio arrays with at least two points")
    if np.any(t <= 0) or np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("t and ratios must be positive and finite")
    slope, intercept = np.polyfit(np.log(t), np.log(r), 1)
    return float(slope), float(math.exp(intercept))


def c_alpha_estimate(dec: SpectralDecomposition, V, alpha: float, interior_margin: float | None = None) -> float:
    """``max(0, max_i -(A^a V)_i / V_i)`` with the power applied spectrally.

    By default the max runs over every node. ``V`` does not satisfy the zero-flux
    condition, so for ``alpha > 1`` the nodes next to the truncation boundary
    carry an ``O(h^-3)`` artifact; pass ``interior_margin`` to exclude them.
    """
    if alpha < 1:
        raise ValueError("c_alpha is only used for alpha >= 1")
    V = np.asarray(V, dtype=float)
    r = -apply_function(dec, power(alpha), V) / V
    if interior_margin is not None:
        r = r[interior_mask(dec.nodes, interior_margin)]
    return max(0.0, float(np.max(r)))


def schrodinger_kernel(kern: KernelMatrix, model: DensityModel, grid: Grid1D | None = None) -> np.ndarray:
    """``sqrt(rho_i rho_j) p(t,x_i,x_j)``."""
    x = kern.nodes if grid is None else grid.nodes
    s = np.sqrt(model.rho(x))
    out = kern.values * np.outer(s, s)
    iu = np.triu_indices_from(out, 1)
    out[(iu[1], iu[0])] = out[iu]
    return out


@dataclass
class BoundReport:
    t_values: list[float]
    sup_ratio: list[float]
    fitted_exponent: float
    reference_exponent: float
    C_fit: float
    alpha: float = math.nan
    branch: str = "c^alpha"
    argmax: list[int] = field(default_factory=list)

    @property
    def relative_exponent_error(self) -> float:
        return abs(self.fitted_exponent - self.reference_exponent) / abs(self.reference_exponent)

    def rows(self) -> list[dict]:
        return [{"t": t, "sup_ratio": r, "bound_branch": self.branch}
                for t, r in zip(self.t_values, self.sup_ratio)]


def exponent_sweep(dec: SpectralDecomposition, model: DensityModel, alpha: float, t_list,
                   c: float | None = None, interior_margin: float = 0.25) -> BoundReport:
    """Interior sup of ``p/(V V e^(c^a t))`` per t, plus the log-log fit."""
    c = model.lyapunov_constant() if c is None else c
    t_list = [float(t) for t in t_list]
    V = model.V(dec.nodes)
    sups, where = [], []
    for t in t_list:
        val, i = diagonal_sup(dec, t, alpha, V, interior_margin)
        sups.append(val * math.exp(-(c**alpha) * t))
        where.append(i)
    slope, C_fit = fit_exponent(t_list, sups)
    return BoundReport(t_list, sups, slope, -model.d / (2 * alpha), C_fit, alpha, "c^alpha", where)


def schrodinger_sweep(dec_B: SpectralDecomposition, alpha: float, t_list, d: int = 1,
                      interior_margin: float = 0.25) -> BoundReport:
    """Interior sup of the flat kernel of ``exp(-t B^a)`` for the Schrodinger operator B."""
    t_list = [float(t) for t in t_list]
    ones = np.ones(dec_B.n)
    sups, where = [], []
    for t in t_list:
        val, i = diagonal_sup(dec_B, t, alpha, ones, interior_margin)
        sups.append(val)
        where.append(i)
    slope, C_fit = fit_exponent(t_list, sups)
    return BoundReport(t_list, sups, slope, -d / (2 * alpha), C_fit, alpha, "none", where)
