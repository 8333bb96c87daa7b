"""Spectral functional calculus for the symmetrized operator.

The eigensolver is the implicit-shift QL iteration for symmetric tridiagonal
matrices with accumulated Givens rotations. ``matrix_exponential_oracle`` is a
dense scaling-and-squaring Taylor exponential that shares no code with it.
"""
from __future__ import annotations

import hashlib
import math
import threading
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .discretization import DiscreteOperator
from .errors import NumericalDiagnostic

MAX_QL_ITER = 60
ORACLE_MAX_N = 400
_EPS = np.finfo(float).eps
# off-diagonals whose square underflows can no longer move the rotations
_SQRT_SAFMIN = math.sqrt(np.finfo(float).tiny)


@numba.njit(cache=True)
def _tql(d, e, Z, want_vectors, maxit):
    """In-place implicit QL on diagonal ``d`` and subdiagonal ``e`` (length n).

    ``e[:n-1]`` holds the subdiagonal on entry. Row ``i`` of ``Z`` is rotated
    together with row ``i+1``, so on exit ``Z[k]`` is the eigenvector for ``d[k]``.
    Returns the index of a non-converged eigenvalue, or -1.
    """
    n = d.shape[0]
    eps = 2.220446049250313e-16
    tiny = _SQRT_SAFMIN
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd or abs(e[m]) <= tiny:
                    break
                m += 1
            if m == l:
                break
            if it == maxit:
                return l
            it += 1
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            deflated = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(n):
                        f = Z[i + 1, k]
                        Z[i + 1, k] = s * Z[i, k] + c * f
                        Z[i, k] = c * Z[i, k] - s * f
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return -1


def tridiagonal_eigh(diag, sub, vectors: bool = True):
    """Eigenvalues (ascending) and optionally eigenvectors (columns) of a symmetric tridiagonal."""
    d = np.array(diag, dtype=float)
    n = d.shape[0]
    e = np.zeros(n)
    e[: n - 1] = sub
    Z = np.eye(n) if vectors else np.zeros((1, 1))
    # power-of-two scaling to unit norm is exact and keeps the absolute deflation floor meaningful
    anorm = max(np.abs(d).max(initial=0.0), np.abs(e).max(initial=0.0))
    shift = int(np.frexp(anorm)[1]) if 0.0 < anorm < np.inf else 0
    d, e = np.ldexp(d, -shift), np.ldexp(e, -shift)
    bad = _tql(d, e, Z, vectors, MAX_QL_ITER)
    d = np.ldexp(d, shift)
    if bad >= 0:
        raise NumericalDiagnostic(f"QL iteration did not converge for eigenvalue {bad} "
                                  f"within {MAX_QL_ITER} sweeps")
    order = np.argsort(d, kind="stable")
    lam = d[order]
    if not vectors:
        return lam
    U = np.ascontiguousarray(Z[order].T)
    # fix the sign so that the largest component of each vector is positive
    idx = np.argmax(np.abs(U), axis=0)
    U *= np.sign(U[idx, np.arange(n)])
    return lam, U


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    weights: np.ndarray
    nodes: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def clipped_eigenvalues(self) -> np.ndarray:
        """Eigenvalues with roundoff-level negatives set to zero."""
        return np.maximum(self.eigenvalues, 0.0)

    def coefficients(self, f) -> np.ndarray:
        """``<f, phi_k>_mu`` for all k."""
        f = np.asarray(f, dtype=float)
        if f.shape != (self.n,):
            raise ValueError(f"vector length {f.shape} does not match n={self.n}")
        return self.eigenfunctions.T @ (f * self.weights)

    def synthesize(self, coef) -> np.ndarray:
        return self.eigenfunctions @ coef


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    t: float
    alpha: float
    values: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    def apply(self, f) -> np.ndarray:
        return self.values @ (np.asarray(f, dtype=float) * self.weights)


_cache: dict[str, SpectralDecomposition] = {}
_cache_lock = threading.Lock()


def _op_key(op: DiscreteOperator) -> str:
    h = hashlib.sha1()
    for arr in (op.diag, op.sub, op.weights, op.nodes):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(op.bc.encode())
    return h.hexdigest()


def eigendecompose(op: DiscreteOperator, use_cache: bool = True) -> SpectralDecomposition:
    key = _op_key(op)
    if use_cache:
        with _cache_lock:
            hit = _cache.get(key)
        if hit is not None:
            return hit
    lam, psi = tridiagonal_eigh(op.diag, op.sub)
    phi = psi / op.sqrt_w[:, None]
    for arr in (lam, phi):
        arr.setflags(write=False)
    dec = SpectralDecomposition(lam, phi, op.weights, op.nodes)
    if use_cache:
        with _cache_lock:
            _cache.setdefault(key, dec)
    return dec


def clear_cache() -> None:
    with _cache_lock:
        _cache.clear()


def _multiplier(dec: SpectralDecomposition, g: Callable) -> np.ndarray:
    with np.errstate(all="ignore"):
        m = np.asarray(g(dec.clipped_eigenvalues), dtype=float)
    if m.shape != dec.eigenvalues.shape:
        m = np.broadcast_to(m, dec.eigenvalues.shape).astype(float)
    if not np.all(np.isfinite(m)):
        k = int(np.flatnonzero(~np.isfinite(m))[0])
        raise NumericalDiagnostic(f"spectral multiplier not finite at lambda_{k}={dec.eigenvalues[k]!r}")
    return m


def apply_function(dec: SpectralDecomposition, g: Callable, f) -> np.ndarray:
    """``g(A) f = sum_k g(lambda_k) <f, phi_k>_mu phi_k``."""
    return dec.synthesize(_multiplier(dec, g) * dec.coefficients(f))


def quadratic_form(dec: SpectralDecomposition, g: Callable, f) -> float:
    """``(g(A) f, f)_mu = sum_k g(lambda_k) <f, phi_k>_mu^2``."""
    c = dec.coefficients(f)
    return float(np.dot(_multiplier(dec, g), c * c))


def power(alpha: float) -> Callable:
    return lambda lam: lam**alpha


def kernel(dec: SpectralDecomposition, t: float, alpha: float) -> KernelMatrix:
    """Grid values of ``p_alpha(t, x_i, x_j) = sum_k exp(-t lambda_k^alpha) phi_k(x_i) phi_k(x_j)``."""
    if not (t > 0 and alpha > 0):
        raise ValueError("kernel needs t > 0 and alpha > 0")
    decay = np.exp(-t * dec.clipped_eigenvalues**alpha)
    keep = decay >= 1e-300
    G = dec.eigenfunctions[:, keep] * np.sqrt(decay[keep])
    P = G @ G.T
    # mirror the upper triangle so that symmetry is exact
    iu = np.triu_indices_from(P, 1)
    P[(iu[1], iu[0])] = P[iu]
    P.setflags(write=False)
    return KernelMatrix(float(t), float(alpha), P, dec.nodes, dec.weights)


# -- matrix exponential oracle -------------------------------------------------

_TAYLOR_DEGREE = 18


def _backward_error_theta(m: int, u: float = 2.0**-53) -> float:
    """Largest ``theta`` with relative backward error of the degree-m Taylor
    approximant of ``exp(X)`` bounded by ``u`` whenever ``||X|| <= theta``.

    ``exp(-X) T_m(X) = I + R(X)`` with ``R(x) = sum_{j>m} c_j x^j``; the backward
    error ``log(I + R)`` is bounded by ``-log(1 - sum |c_j| theta^j)``.
    """
    jmax = m + 80
    inv_fact = np.array([1.0 / math.factorial(k) for k in range(jmax + 1)])
    # coefficients of exp(-x) * T_m(x)
    c = np.zeros(jmax + 1)
    for k in range(m + 1):
        for i in range(jmax + 1 - k):
            c[i + k] += ((-1) ** i) * inv_fact[i] * inv_fact[k]
    tail = np.abs(c[m + 1:])
    powers = np.arange(m + 1, jmax + 1)

    def rel_err(th):
        r = float(np.sum(tail * th**powers))
        return -math.log1p(-r) / th if r < 1 else math.inf

    lo, hi = 1e-3, 10.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rel_err(mid) <= u:
            lo = mid
        else:
            hi = mid
    return lo


_THETA = _backward_error_theta(_TAYLOR_DEGREE)


def matrix_exponential_oracle(op: DiscreteOperator, t: float) -> np.ndarray:
    """``exp(-t S)`` by scaling and squaring of a degree-18 Taylor polynomial."""
    if op.n > ORACLE_MAX_N:
        raise ValueError(f"dense oracle limited to n <= {ORACLE_MAX_N}, got {op.n}")
    with np.errstate(over="ignore", invalid="ignore"):
        X = -float(t) * op.dense()
        norm = np.abs(X).sum(axis=0).max()
    if not math.isfinite(norm):
        raise NumericalDiagnostic("norm of -tS is not finite")
    s = 0 if norm <= _THETA else int(math.ceil(math.log2(norm / _THETA)))
    Y = X / 2.0**s
    n = op.n
    E = np.eye(n)
    for k in range(_TAYLOR_DEGREE, 0, -1):
        E = np.eye(n) + (Y @ E) / k
    for _ in range(s):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise NumericalDiagnostic("overflow while squaring")
    return E


def spectral_exponential(dec: SpectralDecomposition, t: float) -> np.ndarray:
    """``exp(-t S)`` rebuilt from the eigenpairs, in the symmetrized basis."""
    psi = dec.eigenfunctions * np.sqrt(dec.weights)[:, None]
    return (psi * np.exp(-t * dec.eigenvalues)) @ psi.T
