"""Zero-temperature effective potential and its wave-function renormalization.

V_eff(x) is the minimum of <psi|H|psi> over states with <x> = x.  It is built
here through a linear source J: the ground state of H - J x has mean position
x(J), and V_eff(x(J)) = E0(J) + J x(J), with V_eff'(x) = J and
V_eff''(x) = 1/chi.  The coefficient of xdot**2/2 in the derivative expansion
of the effective action is Z_eff = chi3/chi**2, from the low-frequency
expansion of the connected two-point function in the tilted ground state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BPoly, CubicSpline

from .errors import DomainError, GridClippingError, InvalidArgumentError, NumericalFailure, RangeError
from .spectral import (
    Grid,
    PotentialSpec,
    assemble_hamiltonian,
    converged_susceptibility,
    position_moment,
)

log = logging.getLogger(__name__)

MEAN_TOL = 1e-9
MAX_NEWTON = 100
CONVEXITY_TOL = 1e-8


@dataclass(frozen=True)
class TiltedGroundResult:
    J: float
    E0: float
    x_mean: float
    chi: float
    chi3: float
    width: float

    @property
    def veff(self) -> float:
        return self.E0 + self.J * self.x_mean

    @property
    def zeff(self) -> float:
        return self.chi3 / self.chi**2


def tilted_ground(pot: PotentialSpec, grid: Grid, J: float) -> TiltedGroundResult:
    H = assemble_hamiltonian(grid, pot, J)
    sol, chi, chi3 = converged_susceptibility(H)
    psi = sol.states[0]
    xm = position_moment(psi, grid, 1)
    var = position_moment(psi, grid, 2) - xm**2
    return TiltedGroundResult(float(J), float(sol.energies[0]), xm, chi, chi3, math.sqrt(max(var, 0.0)))


def solve_tilt_for_mean(pot: PotentialSpec, grid: Grid, x_target: float,
                        J_guess: float = 0.0) -> TiltedGroundResult:
    """Find the source J whose tilted ground state has <x> = x_target.

    Newton iteration on x(J), which is strictly increasing with slope chi,
    safeguarded by bisection once a bracket is known.
    """
    res = tilted_ground(pot, grid, J_guess)
    margin = 5.0 * res.width
    if not (grid.xmin + margin < x_target < grid.xmax - margin):
        raise RangeError(
            f"x_target={x_target} not reachable in [{grid.xmin}, {grid.xmax}] with 5-sigma margin {margin:.3g}"
        )
    lo = hi = None  # J values with x(J) below / above target
    for _ in range(MAX_NEWTON):
        err = res.x_mean - x_target
        if abs(err) < MEAN_TOL:
            return res
        if err < 0:
            lo = res.J
        else:
            hi = res.J
        J_next = res.J - err / res.chi
        if lo is not None and hi is not None and not (lo < J_next < hi):
            J_next = 0.5 * (lo + hi)
        try:
            res = tilted_ground(pot, grid, J_next)
        except GridClippingError:
            # overshoot pushed the packet into the wall; back off halfway
            if err < 0:
                hi = J_next
            else:
                lo = J_next
            if lo is None or hi is None:
                raise
            res = tilted_ground(pot, grid, 0.5 * (lo + hi))
    raise NumericalFailure(
        f"tilt solve for x_target={x_target} not converged in {MAX_NEWTON} iterations "
        f"(last J={res.J:.12g}, x={res.x_mean:.12g})"
    )


@dataclass(frozen=True)
class EffectiveTable:
    """V_eff and Z_eff sampled on ascending nodes, with interpolants.

    When the exact slope (J) and curvature (1/chi) are supplied, V_eff is
    interpolated by the piecewise-quintic Hermite polynomial matching value,
    slope and curvature at every node.  Otherwise a not-a-knot cubic spline
    is used.  Z_eff always uses a not-a-knot cubic spline.
    """

    nodes: np.ndarray
    veff: np.ndarray
    zeff: np.ndarray
    provenance: str
    dveff: np.ndarray | None = None
    d2veff: np.ndarray | None = None
    _veff_interp: object = field(default=None, init=False, repr=False, compare=False)
    _zeff_interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 4:
            raise InvalidArgumentError("an effective table needs at least 4 nodes")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidArgumentError("table nodes must be strictly ascending")
        if self.provenance not in ("spectral", "rgflow"):
            raise InvalidArgumentError(f"unknown provenance {self.provenance!r}")
        for name in ("nodes", "veff", "zeff", "dveff", "d2veff"):
            val = getattr(self, name)
            if val is not None:
                arr = np.array(val, dtype=float)
                if arr.shape != nodes.shape:
                    raise InvalidArgumentError(f"{name} has shape {arr.shape}, expected {nodes.shape}")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.dveff is not None and self.d2veff is not None:
            vi = BPoly.from_derivatives(nodes, np.column_stack([self.veff, self.dveff, self.d2veff]))
        else:
            vi = CubicSpline(nodes, self.veff)
        object.__setattr__(self, "_veff_interp", vi)
        object.__setattr__(self, "_zeff_interp", CubicSpline(nodes, self.zeff))

    @property
    def x_lo(self) -> float:
        return float(self.nodes[0])

    @property
    def x_hi(self) -> float:
        return float(self.nodes[-1])

    def curvature_at_nodes(self) -> np.ndarray:
        if self.d2veff is not None:
            return self.d2veff
        return self._veff_interp(self.nodes, 2)


def eval_effective(table: EffectiveTable, x, curve: str = "veff", deriv: int = 0):
    """Value or derivative of V_eff or Z_eff; no extrapolation past the nodes."""
    if curve not in ("veff", "zeff"):
        raise InvalidArgumentError(f"curve must be 'veff' or 'zeff', got {curve!r}")
    if deriv not in (0, 1, 2):
        raise InvalidArgumentError(f"deriv must be 0, 1 or 2, got {deriv}")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < table.x_lo) or np.any(xa > table.x_hi) or np.any(~np.isfinite(xa)):
        raise DomainError(f"x={x} outside effective table range [{table.x_lo}, {table.x_hi}]")
    interp = table._veff_interp if curve == "veff" else table._zeff_interp
    out = interp(xa, deriv)
    if deriv == 0:
        values = table.veff if curve == "veff" else table.zeff
        k = np.searchsorted(table.nodes, xa)
        k = np.clip(k, 0, len(table.nodes) - 1)
        on_node = table.nodes[k] == xa
        out = np.where(on_node, values[k], out)
    return float(out) if np.ndim(out) == 0 else out


def build_effective_table(pot: PotentialSpec, grid: Grid, x_lo: float, x_hi: float,
                          n_nodes: int = 121) -> EffectiveTable:
    """Tabulate V_eff, its exact slope and curvature, and Z_eff on a node set.

    Each node is reached by its own tilt solve, warm-started from the
    neighbouring node, sweeping outward from the node closest to the
    unconstrained ground-state mean.
    """
    if n_nodes < 5:
        raise InvalidArgumentError(f"need n_nodes >= 5, got {n_nodes}")
    if not x_lo < x_hi:
        raise InvalidArgumentError(f"need x_lo < x_hi, got [{x_lo}, {x_hi}]")
    nodes = np.linspace(x_lo, x_hi, n_nodes)
    free = tilted_ground(pot, grid, 0.0)
    start = int(np.argmin(np.abs(nodes - free.x_mean)))

    results: list[TiltedGroundResult | None] = [None] * n_nodes
    results[start] = solve_tilt_for_mean(pot, grid, nodes[start], J_guess=0.0)
    for order in (range(start + 1, n_nodes), range(start - 1, -1, -1)):
        prev_idx = start
        for k in order:
            prev = results[prev_idx]
            guess = prev.J + (nodes[k] - prev.x_mean) / prev.chi
            results[k] = solve_tilt_for_mean(pot, grid, nodes[k], J_guess=guess)
            prev_idx = k

    J = np.array([r.J for r in results])
    xm = np.array([r.x_mean for r in results])
    # first-order shift from the solved mean to the exact node
    veff = np.array([r.veff for r in results]) + J * (nodes - xm)
    chi = np.array([r.chi for r in results])
    zeff = np.array([r.zeff for r in results])
    table = EffectiveTable(nodes, veff, zeff, "spectral", dveff=J, d2veff=1.0 / chi)

    dd = second_divided_differences(table)
    if dd.min() < -CONVEXITY_TOL:
        raise NumericalFailure(f"effective table not convex: min second divided difference {dd.min():.3e}")
    if zeff.min() <= 0:
        raise NumericalFailure(f"non-positive Z_eff {zeff.min():.3e} in table")
    return table


def second_divided_differences(table: EffectiveTable) -> np.ndarray:
    x, v = table.nodes, table.veff
    h0 = x[1:-1] - x[:-2]
    h1 = x[2:] - x[1:-1]
    return 2.0 * ((v[2:] - v[1:-1]) / h1 - (v[1:-1] - v[:-2]) / h0) / (h0 + h1)


def symmetry_error(table: EffectiveTable) -> tuple[float, float]:
    """Max |f(x) - f(-x)| over nodes for V_eff and Z_eff (nodes must be symmetric)."""
    if not np.allclose(table.nodes, -table.nodes[::-1], rtol=0, atol=1e-12):
        raise InvalidArgumentError("symmetry check needs a node set symmetric about 0")
    return (float(np.max(np.abs(table.veff - table.veff[::-1]))),
            float(np.max(np.abs(table.zeff - table.zeff[::-1]))))


def table_columns(table: EffectiveTable) -> dict[str, np.ndarray]:
    return {
        "x": table.nodes,
        "veff": table.veff,
        "zeff": table.zeff,
        "d2veff": table.curvature_at_nodes(),
    }
