"""Weighted and fractional Nash inequalities evaluated on discrete probes.

Norms are discrete: ``||f||_2^2 = sum f^2 w`` and ``||fV||_1 = sum |f| V w``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .discretization import DiscreteOperator
from .errors import NumericalDiagnostic
from .spectral import SpectralDecomposition, power, quadratic_form

GAP_RTOL = 1e-8
PROBE_COUNT = 64
L1_FLOOR = 1e-12


@dataclass(frozen=True)
class NashRate:
    """``B(x) = x^(2/d) / C``."""

    d: int = 1
    C: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if not self.C > 0:
            raise ValueError(f"Nash constant must be positive, got {self.C!r}")

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** (2.0 / self.d) / self.C

    def with_constant(self, C: float) -> "NashRate":
        return NashRate(self.d, float(C))


@dataclass(frozen=True)
class GammaCertificate:
    alpha: float
    epsilon: float
    n_steps: int
    a_n: float
    b_n: float
    gamma: float

    @property
    def alpha_n(self) -> float:
        return 2.0 ** (-self.n_steps)


def gamma_certificate(alpha: float, epsilon: float = 0.5) -> GammaCertificate:
    """Constant of the fractional Nash inequality obtained by halving the power.

    Starting from ``a_1 = sqrt(1 - eps^2)``, ``b_1 = eps``, each halving step maps
    ``a -> sqrt(1 - eps^2) sqrt(a)`` and ``b -> eps b``. After the first step with
    ``2^-n <= alpha`` the constant is ``min(a_n^(alpha/alpha_n), b_n)``.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    n = 1
    while 2.0 ** (-n) > alpha:
        n += 1
    root = math.sqrt(1.0 - epsilon * epsilon)
    a, b = root, epsilon
    for _ in range(n - 1):
        a = root * math.sqrt(a)
        b = epsilon * b
    gamma = min(a ** (alpha / 2.0 ** (-n)), b)
    return GammaCertificate(float(alpha), float(epsilon), n, a, b, gamma)


def gamma_sequence(epsilon: float, n_max: int) -> list[tuple[int, float, float]]:
    """``(k, a_k, b_k)`` for ``k = 1..n_max``."""
    root = math.sqrt(1.0 - epsilon * epsilon)
    a, b = root, epsilon
    out = [(1, a, b)]
    for k in range(2, n_max + 1):
        a, b = root * math.sqrt(a), epsilon * b
        out.append((k, a, b))
    return out


def _norms(f, weights, V) -> tuple[float, float]:
    f = np.asarray(f, dtype=float)
    if f.shape != weights.shape or np.shape(V) != weights.shape:
        raise ValueError("f, V and the weights must have the same length")
    l2 = float(np.dot(f * f, weights))
    l1 = float(np.dot(np.abs(f) * V, weights))
    if not l1 > L1_FLOOR:
        raise ValueError(f"||fV||_1 = {l1!r} is too small; the Nash ratio is undefined")
    return l2, l1


def nash_ratio(f, weights, V) -> float:
    """``||f||_2^2 / ||fV||_1^2``."""
    l2, l1 = _norms(f, weights, V)
    return l2 / (l1 * l1)


def nash_gap(op: DiscreteOperator, f, c: float, rate: NashRate, V) -> float:
    """``(A f, f) + c ||f||^2 - ||f||^2 B(||f||^2 / ||fV||_1^2)``."""
    l2, l1 = _norms(f, op.weights, V)
    return op.energy(f) + c * l2 - l2 * float(rate(l2 / (l1 * l1)))


def _gamma_of(cert) -> float:
    return cert.gamma if isinstance(cert, GammaCertificate) else float(cert)


def fractional_nash_sides(dec: SpectralDecomposition, f, alpha: float, cert, c: float,
                          rate: NashRate, V) -> tuple[float, float]:
    l2, l1 = _norms(f, dec.weights, V)
    g = _gamma_of(cert)
    lhs = g * l2 * float(rate(g * l2 / (l1 * l1))) ** alpha
    rhs = quadratic_form(dec, power(alpha), f) + c**alpha * l2
    return lhs, rhs


def fractional_nash_gap(dec: SpectralDecomposition, f, alpha: float, cert, c: float,
                        rate: NashRate, V) -> float:
    """``(A^a f, f) + c^a ||f||^2 - gamma ||f||^2 [B(gamma r)]^a``.

    ``cert`` is a :class:`GammaCertificate` or a bare gamma value.
    """
    lhs, rhs = fractional_nash_sides(dec, f, alpha, cert, c, rate, V)
    return rhs - lhs


def alpha_ge1_sides(dec: SpectralDecomposition, f, alpha: float, c: float, rate: NashRate, V):
    if alpha < 1:
        raise ValueError("this branch needs alpha >= 1")
    l2, l1 = _norms(f, dec.weights, V)
    lhs = l2 * float(rate(l2 / (l1 * l1))) ** alpha
    rhs = 2.0 ** (alpha - 1) * (quadratic_form(dec, power(alpha), f) + c**alpha * l2)
    return lhs, rhs


def alpha_ge1_gap(dec: SpectralDecomposition, f, alpha: float, c: float, rate: NashRate, V) -> float:
    """``2^(a-1) [(A^a f, f) + c^a ||f||^2] - ||f||^2 [B(r)]^a``."""
    lhs, rhs = alpha_ge1_sides(dec, f, alpha, c, rate, V)
    return rhs - lhs


def lemma_2_8_scalar(lam: float, c: float, alpha: float) -> tuple[float, float, bool]:
    """Compare ``(lam + c)^a`` with ``lam^a + c^a`` (a < 1) or ``2^(a-1)(lam^a + c^a)`` (a >= 1)."""
    lhs = (lam + c) ** alpha
    rhs = lam**alpha + c**alpha
    if alpha >= 1:
        rhs *= 2.0 ** (alpha - 1)
    return lhs, rhs, bool(lhs <= rhs + 1e-12)


def jensen_check(dec: SpectralDecomposition, f, phi: Callable) -> tuple[float, float, bool]:
    """``phi(sum lam_k p_k) <= sum phi(lam_k) p_k`` with ``p_k = <f, phi_k>^2``."""
    f = np.asarray(f, dtype=float)
    nrm = float(np.dot(f * f, dec.weights))
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError(f"f must have unit mu-norm, got ||f||^2 = {nrm!r}")
    p = dec.coefficients(f) ** 2
    lam = dec.clipped_eigenvalues
    lhs = float(phi(np.dot(lam, p)))
    rhs = float(np.dot(np.asarray(phi(lam), dtype=float), p))
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise NumericalDiagnostic("phi is not finite on the spectrum")
    return lhs, rhs, bool(lhs <= rhs + 1e-10 * max(1.0, abs(rhs)))


# -- probes --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Probe:
    probe_id: str
    f: np.ndarray


def _smooth_once(v: np.ndarray) -> np.ndarray:
    out = 2.0 * v
    out[1:] += v[:-1]
    out[:-1] += v[1:]
    # reflect at the ends so the stencil keeps weight 4
    out[0] += v[0]
    out[-1] += v[-1]
    return out / 4.0


def probe_family(dec: SpectralDecomposition, V, seed: int = 20240611) -> list[Probe]:
    """Eigenfunctions 0..7, Gaussian bumps (8 centers x 2 widths), 40 smoothed random signs.

    Every probe is scaled to unit mu-norm; probes with ``||fV||_1 <= 1e-12`` are dropped.
    """
    x, w = dec.nodes, dec.weights
    V = np.asarray(V, dtype=float)
    raw: list[tuple[str, np.ndarray]] = []
    for k in range(min(8, dec.n)):
        raw.append((f"eig{k}", dec.eigenfunctions[:, k].copy()))
    half = 0.5 * (x[-1] - x[0])
    centers = np.linspace(-0.5 * half, 0.5 * half, 8)
    for width in (0.5, 2.0):
        for j, x0 in enumerate(centers):
            raw.append((f"bump{j}-w{width:g}", np.exp(-((x - x0) / width) ** 2)))
    rng = np.random.default_rng(seed)
    for j in range(PROBE_COUNT - len(raw)):
        raw.append((f"rand{j:02d}", _smooth_once(rng.choice([-1.0, 1.0], size=dec.n))))
    probes = []
    for pid, f in raw:
        nrm = math.sqrt(float(np.dot(f * f, w)))
        if nrm == 0.0:
            continue
        f = f / nrm
        if float(np.dot(np.abs(f) * V, w)) > L1_FLOOR:
            probes.append(Probe(pid, f))
    return probes


def estimate_nash_constant(op: DiscreteOperator, probes: list[Probe], c: float, d: int, V):
    """Smallest ``C`` for which every probe satisfies the weighted Nash inequality
    with ``B(x) = x^(2/d)/C``; returns ``(C, worst probe id)``.
    """
    base = NashRate(d)
    best, worst = 0.0, ""
    for p in probes:
        l2, l1 = _norms(p.f, op.weights, V)
        ratio = l2 * float(base(l2 / (l1 * l1))) / (op.energy(p.f) + c * l2)
        if ratio > best:
            best, worst = ratio, p.probe_id
    if not best > 0:
        raise NumericalDiagnostic("could not estimate a positive Nash constant")
    return best, worst


@dataclass(frozen=True)
class NashRow:
    probe_id: str
    alpha: float
    gamma: float
    lhs: float
    rhs: float
    gap: float

    def as_row(self) -> dict:
        return asdict(self)


def fractional_sweep(dec: SpectralDecomposition, probes: list[Probe], alpha: float, c: float,
                     rate: NashRate, V, epsilon: float = 0.5) -> list[NashRow]:
    """One row per probe: Thm-style fractional gap for alpha < 1, the doubled-constant
    variant for alpha >= 1 (gamma reported as 1)."""
    rows = []
    if alpha < 1:
        cert = gamma_certificate(alpha, epsilon)
        for p in probes:
            lhs, rhs = fractional_nash_sides(dec, p.f, alpha, cert, c, rate, V)
            rows.append(NashRow(p.probe_id, alpha, cert.gamma, lhs, rhs, rhs - lhs))
    else:
        for p in probes:
            lhs, rhs = alpha_ge1_sides(dec, p.f, alpha, c, rate, V)
            rows.append(NashRow(p.probe_id, alpha, 1.0, lhs, rhs, rhs - lhs))
    return rows
