"""Stationary one-dimensional Schrodinger problems on a uniform grid.

Units are hbar = m = 1 so that H = p**2/2 + V(x).  The kinetic term uses the
three-point stencil with Dirichlet walls just outside the first and last
nodes, which makes every Hamiltonian here a real symmetric tridiagonal
matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import CoverageError, GridClippingError, InvalidArgumentError, NumericalFailure

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-8
RESIDUAL_TOL = 1e-10
BISECTION_TOL = 1e-12
SUSCEPTIBILITY_RTOL = 1e-8
TRUNCATION_START = 16
TRUNCATION_CAP = 128
WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n`` nodes spanning ``[xmin, xmax]``."""

    xmin: float
    xmax: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.xmin) and math.isfinite(self.xmax)):
            raise InvalidArgumentError(f"grid bounds must be finite, got {self.xmin}, {self.xmax}")
        if not self.xmin < self.xmax:
            raise InvalidArgumentError(f"need xmin < xmax, got {self.xmin} >= {self.xmax}")
        if int(self.n) != self.n or self.n < 3:
            raise InvalidArgumentError(f"need an integer n >= 3, got {self.n}")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        nodes = self.xmin + self.dx * np.arange(self.n)
        nodes[-1] = self.xmax
        return nodes

    @property
    def is_symmetric(self) -> bool:
        return self.xmin == -self.xmax


def make_grid(xmin: float, xmax: float, n: int) -> Grid:
    if int(n) != n:
        raise InvalidArgumentError(f"need an integer n >= 3, got {n}")
    return Grid(float(xmin), float(xmax), int(n))


@dataclass(frozen=True)
class PotentialSpec:
    """A potential V(x).

    ``quartic_double_well`` is V(x) = -x**2/2 + lam*x**4/24.  ``harmonic`` is
    V(x) = omega**2 x**2/2 and exists so that Gaussian-theory checks are exact.
    ``tabulated`` interpolates ``table`` (pairs of x, V) with a cubic spline.
    """

    kind: str
    lam: float | None = None
    omega: float | None = None
    table: tuple[tuple[float, float], ...] | None = None
    _spline: CubicSpline | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "quartic_double_well":
            if self.lam is None or not self.lam > 0:
                raise InvalidArgumentError("quartic double well needs lam > 0")
        elif self.kind == "harmonic":
            if self.omega is None or not self.omega > 0:
                raise InvalidArgumentError("harmonic potential needs omega > 0")
        elif self.kind == "tabulated":
            if self.table is None or len(self.table) < 4:
                raise InvalidArgumentError("tabulated potential needs at least 4 (x, V) pairs")
            xs, vs = np.asarray(self.table, dtype=float).T
            if np.any(np.diff(xs) <= 0):
                raise InvalidArgumentError("tabulated x values must be strictly ascending")
            object.__setattr__(self, "_spline", CubicSpline(xs, vs))
        else:
            raise InvalidArgumentError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def quartic(cls, lam: float) -> "PotentialSpec":
        return cls("quartic_double_well", lam=float(lam))

    @classmethod
    def harmonic(cls, omega: float) -> "PotentialSpec":
        return cls("harmonic", omega=float(omega))

    @classmethod
    def tabulated(cls, xs: Sequence[float], vs: Sequence[float]) -> "PotentialSpec":
        return cls("tabulated", table=tuple(zip(map(float, xs), map(float, vs))))

    @property
    def is_even(self) -> bool:
        return self.kind in ("quartic_double_well", "harmonic")

    def _derivative(self, x, order):
        x = np.asarray(x, dtype=float)
        if self.kind == "quartic_double_well":
            lam = self.lam
            return [
                -0.5 * x**2 + lam * x**4 / 24.0,
                -x + lam * x**3 / 6.0,
                -1.0 + 0.5 * lam * x**2,
            ][order]
        if self.kind == "harmonic":
            w2 = self.omega**2
            return [0.5 * w2 * x**2, w2 * x, w2 * np.ones_like(x)][order]
        lo, hi = self.table[0][0], self.table[-1][0]
        if np.any(x < lo) or np.any(x > hi):
            raise CoverageError(f"tabulated potential covers [{lo}, {hi}] only")
        return self._spline(x, order)

    def value(self, x):
        return self._derivative(x, 0)

    def gradient(self, x):
        return self._derivative(x, 1)

    def curvature(self, x):
        return self._derivative(x, 2)

    def minima(self) -> list[float]:
        """Positions of the classical minima (analytic kinds only)."""
        if self.kind == "quartic_double_well":
            xm = math.sqrt(6.0 / self.lam)
            return [-xm, xm]
        if self.kind == "harmonic":
            return [0.0]
        raise InvalidArgumentError("minima are only known analytically for quartic/harmonic kinds")


class Hamiltonian(NamedTuple):
    """Symmetric tridiagonal discretization of H - J x."""

    diag: np.ndarray
    off: np.ndarray
    grid: Grid
    tilt: float

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.diag)) + 2.0 * abs(self.off[0]))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out


def assemble_hamiltonian(grid: Grid, pot: PotentialSpec, tilt: float = 0.0) -> Hamiltonian:
    x = grid.x
    inv = 1.0 / grid.dx**2
    diag = inv + pot.value(x) - tilt * x
    off = np.full(grid.n - 1, -0.5 * inv)
    return Hamiltonian(diag, off, grid, float(tilt))


@dataclass(frozen=True)
class EigenSolution:
    """Lowest eigenpairs; ``states[k]`` is normalized with weight dx."""

    energies: np.ndarray
    states: np.ndarray
    tilt: float
    grid: Grid

    def __len__(self):
        return len(self.energies)


def lowest_eigenpairs(H: Hamiltonian, m: int, strict: bool = True) -> EigenSolution:
    """The ``m`` algebraically smallest eigenpairs of ``H``.

    LAPACK's Sturm-sequence bisection (stebz) locates the eigenvalues and
    inverse iteration (stein) produces the vectors.  With ``strict`` every
    returned state must vanish at the box walls; otherwise the caller is
    responsible for checking :func:`boundary_amplitudes`.
    """
    n = H.grid.n
    if m < 1 or m >= n:
        raise InvalidArgumentError(f"need 1 <= m < n, got m={m}, n={n}")
    try:
        w, v = eigh_tridiagonal(
            H.diag, H.off, select="i", select_range=(0, m - 1),
            lapack_driver="stebz", tol=BISECTION_TOL,
        )
    except LinAlgError as exc:
        raise NumericalFailure(f"tridiagonal eigensolver failed for m={m}, n={n}: {exc}") from exc

    v = v.T.copy()
    resid = np.array([np.linalg.norm(H.matvec(vec) - e * vec) for e, vec in zip(w, v)])
    bad = resid > RESIDUAL_TOL * H.scale
    if np.any(bad):
        k = int(np.argmax(resid))
        raise NumericalFailure(
            f"eigenpair {k} residual {resid[k]:.3e} exceeds {RESIDUAL_TOL:g} x scale {H.scale:.3e}"
        )

    # deterministic sign: largest-magnitude component positive
    idx = np.argmax(np.abs(v), axis=1)
    signs = np.sign(v[np.arange(m), idx])
    v *= signs[:, None]
    v /= math.sqrt(H.grid.dx)

    sol = EigenSolution(w, v, H.tilt, H.grid)
    if strict:
        _require_inside(sol, np.ones(m, dtype=bool))
    return sol


def boundary_amplitudes(sol: EigenSolution) -> np.ndarray:
    return np.maximum(np.abs(sol.states[:, 0]), np.abs(sol.states[:, -1]))


def _require_inside(sol: EigenSolution, which: np.ndarray) -> None:
    edge = boundary_amplitudes(sol)
    bad = which & (edge >= BOUNDARY_TOL)
    if np.any(bad):
        k = int(np.argmax(bad))
        g = sol.grid
        raise GridClippingError(
            f"state {k} (E={sol.energies[k]:.6g}, tilt={sol.tilt:.6g}) has boundary amplitude "
            f"{edge[k]:.2e}; enlarge the box [{g.xmin}, {g.xmax}]"
        )


def position_moment(state: np.ndarray, grid: Grid, power: int = 1) -> float:
    state = np.asarray(state)
    if state.shape != (grid.n,):
        raise InvalidArgumentError(f"state shape {state.shape} does not match grid of {grid.n} nodes")
    return float(np.sum(grid.x**power * np.abs(state) ** 2) * grid.dx)


def transition_elements_x(sol: EigenSolution) -> np.ndarray:
    """x_{0n} for n = 1..m-1."""
    if len(sol) < 2:
        raise InvalidArgumentError("transition elements need at least two states")
    g = sol.grid
    return (sol.states[1:] @ (g.x * sol.states[0])) * g.dx


def static_susceptibility(sol: EigenSolution) -> tuple[float, float]:
    """Spectral sums chi = sum 2|x_0n|^2/dE_n and chi3 = sum 2|x_0n|^2/dE_n^3."""
    x0n = transition_elements_x(sol)
    gaps = sol.energies[1:] - sol.energies[0]
    if gaps[0] < 1e-12:
        raise NumericalFailure(f"degenerate ground state (gap {gaps[0]:.3e}); solver failure")
    w = 2.0 * x0n**2
    return float(np.sum(w / gaps)), float(np.sum(w / gaps**3))


def _weighted_states(sol: EigenSolution) -> np.ndarray:
    x0n = transition_elements_x(sol)
    gaps = sol.energies[1:] - sol.energies[0]
    w1 = 2.0 * x0n**2 / gaps
    w3 = w1 / gaps**2
    heavy = (w1 > WEIGHT_TOL * w1.sum()) | (w3 > WEIGHT_TOL * w3.sum())
    return np.concatenate([[True], heavy])


def converged_susceptibility(H: Hamiltonian) -> tuple[EigenSolution, float, float]:
    """Susceptibility sums with adaptive truncation.

    Starts from 16 states and doubles until both sums change by less than
    1e-8 relative, stopping at 128 states.  The ground state and every state
    contributing more than 1e-12 (relative) to either sum must be clear of
    the box walls; highly excited states that touch the walls but carry no
    weight are tolerated.
    """
    m = TRUNCATION_START
    while True:
        m2 = min(2 * m, TRUNCATION_CAP, H.grid.n - 1)
        sol = lowest_eigenpairs(H, m2, strict=False)
        _require_inside(sol, _weighted_states(sol))
        head = EigenSolution(sol.energies[:m], sol.states[:m], sol.tilt, sol.grid)
        chi_a, chi3_a = static_susceptibility(head)
        chi, chi3 = static_susceptibility(sol)
        if abs(chi - chi_a) <= SUSCEPTIBILITY_RTOL * chi and abs(chi3 - chi3_a) <= SUSCEPTIBILITY_RTOL * chi3:
            break
        if m2 >= TRUNCATION_CAP or m2 >= H.grid.n - 1:
            log.warning("susceptibility sums not converged at truncation cap m=%d", m2)
            break
        m = m2
    if not (chi > 0 and chi3 > 0):
        raise NumericalFailure(f"non-positive susceptibility sums chi={chi}, chi3={chi3}")
    return sol, chi, chi3
