"""Non-spectral constructions of ``A^alpha`` and ``exp(-t A^alpha)``.

Two routes, both independent of the eigensolver except where noted:

* Balakrishnan: ``A^alpha f = sin(alpha pi)/pi * int_0^inf s^(alpha-1) (s + A)^(-1) A f ds``,
  discretized after ``s = e^u`` with composite Gauss-Legendre panels and
  evaluated on the operator by tridiagonal solves.
* Subordination: ``exp(-t lambda^alpha) = int_0^inf exp(-s lambda) mu_t(ds)`` with
  ``mu_t`` the one-sided stable law, discretized on ``s = e^v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln

from .discretization import DiscreteOperator
from .errors import NumericalDiagnostic
from .spectral import SpectralDecomposition

PANEL_ORDER = 16
TALBOT_NODES = 48
LAPLACE_TOL = 1e-6


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for ``int g(s) ds`` over ``(0, inf)``.

    ``design_range`` is the interval of spectral values the rule was built for.
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    design_range: tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")


def composite_gauss_legendre(lo: float, hi: float, panel_width: float, order: int = PANEL_ORDER):
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    npan = max(1, int(math.ceil((hi - lo) / panel_width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, npan + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def log_gauss_legendre_rule(s_min: float, s_max: float, panel_width: float = 1.0,
                            order: int = PANEL_ORDER, design_range=(0.0, math.inf)) -> QuadratureRule:
    """Rule for ``int_{s_min}^{s_max} g(s) ds`` after the substitution ``s = e^u``."""
    u, wu = composite_gauss_legendre(math.log(s_min), math.log(s_max), panel_width, order)
    s = np.exp(u)
    return QuadratureRule(s, wu * s, "log-substituted Gauss-Legendre", tuple(design_range))


def balakrishnan_rule(alpha: float, lam_range=(1e-4, 1e6), tol: float = 1e-12,
                      panel_width: float = 1.0) -> QuadratureRule:
    """Log-substituted rule sized so that both truncated tails of the
    Balakrishnan integrand are below ``tol * lambda^alpha`` on ``lam_range``.

    In ``u = log s`` the integrand behaves like ``e^(alpha u)`` as ``u -> -inf``
    and like ``lambda e^((alpha-1) u)`` as ``u -> inf``.
    """
    if not 0 < alpha < 1:
        raise ValueError("Balakrishnan formula needs 0 < alpha < 1")
    lam_lo, lam_hi = lam_range
    u_lo = math.log(lam_lo) + math.log(alpha * tol) / alpha
    u_hi = math.log(lam_hi) - math.log((1 - alpha) * tol) / (1 - alpha)
    rule = log_gauss_legendre_rule(math.exp(u_lo), math.exp(u_hi), panel_width, PANEL_ORDER,
                                   design_range=lam_range)
    return rule


def _check_design(rule: QuadratureRule, lam) -> None:
    lo, hi = rule.design_range
    lam = np.atleast_1d(lam)
    pos = lam[lam > 0]
    if pos.size and (pos.min() < lo * (1 - 1e-12) or pos.max() > hi * (1 + 1e-12)):
        raise NumericalDiagnostic(
            f"spectral values [{pos.min():.3g}, {pos.max():.3g}] outside the rule's design range "
            f"[{lo:.3g}, {hi:.3g}]; widen the node range")


def balakrishnan_scalar(lam, alpha: float, rule: QuadratureRule):
    """Quadrature of ``sin(alpha pi)/pi int s^(alpha-1) lam/(s+lam) ds`` (equals ``lam^alpha``)."""
    _check_design(rule, lam)
    lam_arr = np.asarray(lam, dtype=float)
    s = rule.nodes
    w = rule.weights * s ** (alpha - 1)
    vals = (lam_arr[..., None] / (s + lam_arr[..., None])) @ w
    return math.sin(alpha * math.pi) / math.pi * vals


@numba.njit(cache=True)
def _batched_shifted_solve(ld, lo, wts, shifts, rhs):
    """Solve ``(shift_q D + L) y_q = rhs`` for every shift by the Thomas algorithm.

    ``L`` is the symmetric tridiagonal stiffness (diagonal ``ld``, offdiagonal
    ``lo``) and ``D = diag(wts)``; the systems are strictly diagonally dominant
    M-matrices for positive shifts, so no pivoting is needed.
    """
    n = ld.shape[0]
    Q = shifts.shape[0]
    out = np.empty((Q, n))
    cp = np.empty(n)
    dp = np.empty(n)
    for q in range(Q):
        sh = shifts[q]
        b = ld[0] + sh * wts[0]
        cp[0] = lo[0] / b
        dp[0] = rhs[0] / b
        for i in range(1, n):
            b = ld[i] + sh * wts[i] - lo[i - 1] * cp[i - 1]
            if i < n - 1:
                cp[i] = lo[i] / b
            dp[i] = (rhs[i] - lo[i - 1] * dp[i - 1]) / b
        out[q, n - 1] = dp[n - 1]
        for i in range(n - 2, -1, -1):
            out[q, i] = dp[i] - cp[i] * out[q, i + 1]
    return out


def balakrishnan_apply(op: DiscreteOperator, f, alpha: float, rule: QuadratureRule,
                       shift: float = 0.0) -> np.ndarray:
    """``(A_h + shift)^alpha f`` via resolvent quadrature.

    ``(s + A_h + c)^(-1) (A_h + c) f`` is computed in the unsymmetrized frame as
    ``((s + c) D + L)^(-1) (L + c D) f``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (op.n,):
        raise ValueError("vector length does not match the operator")
    if not np.all(np.isfinite(f)):
        raise ValueError("f must be finite")
    ld, lo = op.stiffness()
    w = op.weights
    rhs = ld * f + shift * w * f
    rhs[:-1] += lo * f[1:]
    rhs[1:] += lo * f[:-1]
    Y = _batched_shifted_solve(ld, lo, w, rule.nodes + shift, rhs)
    if not np.all(np.isfinite(Y)):
        raise NumericalDiagnostic("resolvent solve produced non-finite values")
    coef = rule.weights * rule.nodes ** (alpha - 1)
    out = math.sin(alpha * math.pi) / math.pi * (coef @ Y)
    if op.bc == "neumann" and shift == 0.0:
        # near-singular solves at tiny s leak roundoff into the constant mode,
        # which the exact result never contains (1^T L = 0)
        out -= np.dot(w, out) / w.sum()
    return out


# -- subordination -------------------------------------------------------------


@dataclass(frozen=True)
class SubordinationMeasure:
    t: float
    alpha: float
    nodes: np.ndarray
    weights: np.ndarray
    max_identity_error: float = math.nan

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def laplace(self, lam):
        """``sum_q w_q exp(-s_q lam)``."""
        lam = np.asarray(lam, dtype=float)
        return np.exp(-np.multiply.outer(lam, self.nodes)) @ self.weights


def _talbot_contour(mu: float, N: int = TALBOT_NODES):
    """Optimized cotangent contour (midpoint nodes) scaled by ``mu``."""
    th = -math.pi + (np.arange(N) + 0.5) * (2 * math.pi / N)
    c = 0.6407
    z = mu * (-0.6122 + 0.5017 * th / np.tan(c * th) + 0.2645j * th)
    dz = mu * (0.5017 * (1 / np.tan(c * th) - c * th / np.sin(c * th) ** 2) + 0.2645j)
    return z, dz


def stable_density_contour(s: float, t: float, alpha: float, N: int = TALBOT_NODES) -> float:
    """Inverse Laplace transform of ``exp(-t z^alpha)`` at ``s`` on a deformed Bromwich contour.

    The contour scale is the larger of ``N/s`` and the saddle point
    ``(t alpha / s)^(1/(1-alpha))`` so that ``exp(-t z^alpha)`` stays bounded on it.
    """
    saddle = (t * alpha / s) ** (1.0 / (1.0 - alpha))
    z, dz = _talbot_contour(max(N / s, saddle), N)
    vals = np.exp(z * s - t * z**alpha) * dz
    return float((vals.sum() / (1j * N)).real)


def stable_density_series(s: float, t: float, alpha: float, kmax: int = 400) -> float:
    """Convergent large-s expansion of the same density.

    ``f(s) = -(1/pi) sum_k (-t)^k Gamma(k alpha + 1)/k! sin(k pi alpha) s^(-k alpha - 1)``.
    """
    k = np.arange(1, kmax + 1)
    logmag = gammaln(k * alpha + 1) - gammaln(k + 1) + k * math.log(t) - (k * alpha + 1) * math.log(s)
    terms = (-1.0) ** k * np.exp(logmag) * np.sin(k * math.pi * alpha)
    return float(-terms.sum() / math.pi)


def stable_density(s: float, t: float, alpha: float) -> float:
    if t * s ** (-alpha) <= 0.5:
        return stable_density_series(s, t, alpha)
    return stable_density_contour(s, t, alpha)


def _general_alpha_nodes(t: float, alpha: float, tail: float = 1e-12, panel_width: float = 0.5):
    def chernoff_exponent(s):
        lam = (t * alpha / s) ** (1 / (1 - alpha))
        return lam * s - t * lam**alpha

    v_lo = math.log(t ** (1 / alpha))
    while chernoff_exponent(math.exp(v_lo)) > -40.0:
        v_lo -= 0.5
    # mass beyond S is about t S^-alpha / Gamma(1 - alpha)
    v_hi = (math.log(t) - gammaln(1 - alpha) - math.log(tail)) / alpha
    v, wv = composite_gauss_legendre(v_lo, max(v_hi, v_lo + 1.0), panel_width)
    s = np.exp(v)
    dens = np.array([stable_density(si, t, alpha) for si in s])
    return s, wv * s * dens


def _half_alpha_nodes(t: float, panel_width: float = 0.5):
    # density t/(2 sqrt(pi)) s^(-3/2) exp(-t^2/(4s)) under s = t^2/(4u^2) becomes
    # (2/sqrt(pi)) exp(-u^2) du; integrate in w = log u
    w_lo, w_hi = -40.0, math.log(9.0)
    wn, ww = composite_gauss_legendre(w_lo, w_hi, panel_width)
    u = np.exp(wn)
    weights = ww * u * (2 / math.sqrt(math.pi)) * np.exp(-u * u)
    s = t * t / (4 * u * u)
    return s, weights


def laplace_check_grid(lam_max: float = 100.0) -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-8, math.log10(lam_max), 401)])


def subordination_measure(t: float, alpha: float, check: bool = True) -> SubordinationMeasure:
    """Discrete approximation of the measure with Laplace transform ``exp(-t lambda^alpha)``.

    Raises :class:`NumericalDiagnostic` when the Laplace identity fails by more
    than ``1e-6`` anywhere on ``[0, 100]``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not 0 < alpha < 1:
        raise ValueError("subordination needs 0 < alpha < 1")
    if alpha == 0.5:
        s, w = _half_alpha_nodes(t)
    else:
        s, w = _general_alpha_nodes(t, alpha)
    # the density is positive; clip contour roundoff in the far left tail
    w = np.maximum(w, 0.0)
    order = np.argsort(s)
    s, w = s[order], w[order]
    keep = w > 0
    s, w = s[keep], w[keep]
    meas = SubordinationMeasure(float(t), float(alpha), s, w)
    if check:
        lam = laplace_check_grid()
        err = np.abs(meas.laplace(lam) - np.exp(-t * lam**alpha))
        k = int(np.argmax(err))
        if err[k] > LAPLACE_TOL:
            raise NumericalDiagnostic(
                f"Laplace identity fails for t={t}, alpha={alpha}: error {err[k]:.3e} at lambda={lam[k]:.6g}")
        meas = SubordinationMeasure(meas.t, meas.alpha, s, w, float(err[k]))
    return meas


def subordinate_semigroup(dec: SpectralDecomposition, meas: SubordinationMeasure, f) -> np.ndarray:
    """``sum_q w_q T(s_q) f`` with ``T(s) = exp(-s A)`` applied spectrally."""
    mult = meas.laplace(dec.clipped_eigenvalues)
    return dec.synthesize(mult * dec.coefficients(f))
