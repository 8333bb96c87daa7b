"""Finite-difference operators on a truncated uniform grid.

The divergence-form operator ``A f = -(rho f')'/rho`` is assembled as the
generalized pencil ``L f = lambda D f`` with a stiffness matrix ``L`` built
from midpoint fluxes and a diagonal measure ``D = diag(w)``. What is stored
is the symmetrized matrix ``S = D^(-1/2) L D^(-1/2)``, which is similar to
``A_h = D^(-1) L`` and whose spectrum is the spectrum of ``A_h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import DensityModel

BCS = ("neumann", "dirichlet")


@dataclass(frozen=True)
class Grid1D:
    L: float
    n: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 3):
            raise ConfigError(f"n: grid needs at least 3 nodes, got {self.n!r}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ConfigError(f"L: half-width must be positive, got {self.L!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        x = np.linspace(-self.L, self.L, self.n)
        # linspace hits both ends exactly; keep the middle symmetric as well
        return 0.5 * (x - x[::-1])


def build_grid(L: float, n: int) -> Grid1D:
    return Grid1D(float(L), int(n))


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Symmetric tridiagonal ``S`` together with the measure weights.

    ``A_h f = D^(-1/2) S D^(1/2) f`` and ``(f, g)_mu = sum f g w``.
    """

    sub: np.ndarray
    diag: np.ndarray
    weights: np.ndarray
    bc: str = "neumann"
    nodes: np.ndarray | None = None
    form: str = "divergence"

    def __post_init__(self):
        for name in ("sub", "diag", "weights"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.diag.shape[0]
        if self.sub.shape != (n - 1,) or self.weights.shape != (n,):
            raise ValueError("inconsistent operator array shapes")
        if not (np.all(np.isfinite(self.sub)) and np.all(np.isfinite(self.diag))):
            raise ValueError("operator entries must be finite")
        if np.any(self.weights <= 0):
            raise ValueError("measure weights must be positive")
        if self.nodes is None:
            object.__setattr__(self, "nodes", np.arange(n, dtype=float))

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    @property
    def sqrt_w(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def matvec_sym(self, g: np.ndarray) -> np.ndarray:
        out = self.diag * g
        out[:-1] += self.sub * g[1:]
        out[1:] += self.sub * g[:-1]
        return out

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``A_h f``."""
        sw = self.sqrt_w
        return self.matvec_sym(sw * np.asarray(f, dtype=float)) / sw

    def stiffness(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of ``L = D^(1/2) S D^(1/2)``."""
        w = self.weights
        return self.diag * w, self.sub * np.sqrt(w[:-1] * w[1:])

    def energy(self, f: np.ndarray, g: np.ndarray | None = None) -> float:
        """``(A_h f, g)_mu`` evaluated through the stiffness matrix."""
        f = np.asarray(f, dtype=float)
        g = f if g is None else np.asarray(g, dtype=float)
        ld, lo = self.stiffness()
        Lf = ld * f
        Lf[:-1] += lo * f[1:]
        Lf[1:] += lo * f[:-1]
        return float(np.dot(Lf, g))

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, 1) + np.diag(self.sub, -1)

    def norm_inf(self) -> float:
        """Row-sum norm of S (an upper bound for its spectral radius)."""
        r = np.abs(self.diag).copy()
        r[:-1] += np.abs(self.sub)
        r[1:] += np.abs(self.sub)
        return float(r.max())


def _checked(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise ConfigError(f"{what} is not finite on the grid")
    return values


def assemble_divergence_form(model: DensityModel, grid: Grid1D, bc: str = "neumann") -> DiscreteOperator:
    """Three-point flux discretization of ``-(rho f')'/rho``.

    Neumann drops the outward flux and halves the end weights (trapezoidal
    measure). Dirichlet extends the stencil to ghost nodes at ``+-(L+h)``
    held at zero, so every node carries a full weight.
    """
    bc = bc.lower()
    if bc not in BCS:
        raise ConfigError(f"bc: expected one of {BCS}, got {bc!r}")
    x, h = grid.nodes, grid.h
    rho = _checked(model.rho(x), "rho")
    mid = _checked(model.rho(0.5 * (x[1:] + x[:-1])), "rho at midpoints")
    w = rho * h
    ld = np.zeros(grid.n)
    ld[:-1] += mid / h
    ld[1:] += mid / h
    if bc == "neumann":
        w[0] *= 0.5
        w[-1] *= 0.5
    else:
        ghost = _checked(model.rho(np.array([x[0] - 0.5 * h, x[-1] + 0.5 * h])), "rho at ghost midpoints")
        ld[0] += ghost[0] / h
        ld[-1] += ghost[1] / h
    off = -mid / h
    sw = np.sqrt(w)
    return DiscreteOperator(sub=off / (sw[:-1] * sw[1:]), diag=ld / w, weights=w,
                            bc=bc, nodes=x, form="divergence")


def assemble_schrodinger(model: DensityModel, grid: Grid1D) -> DiscreteOperator:
    """Three-point ``-f'' + q f`` on flat L^2 with zero ghost values outside."""
    x, h = grid.nodes, grid.h
    q = _checked(model.schrodinger_potential(x), "Schrodinger potential")
    n = grid.n
    return DiscreteOperator(sub=np.full(n - 1, -1.0 / h**2), diag=2.0 / h**2 + q,
                            weights=np.full(n, h), bc="dirichlet", nodes=x, form="schrodinger")


def weighted_inner(f, g, op: DiscreteOperator) -> float:
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != (op.n,) or g.shape != (op.n,):
        raise ValueError(f"vector length mismatch: {f.shape}, {g.shape} vs n={op.n}")
    return float(np.dot(f * g, op.weights))
