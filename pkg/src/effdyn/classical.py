"""Classical surrogates for the packet mean position.

Three models share one RK4 integrator:

* ``bare``  -- Ehrenfest-style motion, xddot = -V'(x) in the bare potential;
* ``ea_z1`` -- stationary path of S = int(-V_eff + xdot**2/2);
* ``ea_z``  -- stationary path of S = int(-V_eff + Z_eff(x) xdot**2/2), whose
  Euler-Lagrange equation is Z xddot + Z' xdot**2/2 + V_eff' = 0.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import BPoly, PPoly

from .effective import EffectiveTable
from .errors import DomainError, EnergyDriftError, InvalidArgumentError, ModelInvariantError
from .spectral import PotentialSpec

MODES = ("bare", "ea_z1", "ea_z")
ENERGY_RTOL = 1e-7


class _Piecewise:
    """Scalar evaluation of a piecewise polynomial, faster than scipy per call."""

    def __init__(self, interp):
        pp = PPoly.from_bernstein_basis(interp) if isinstance(interp, BPoly) else PPoly(interp.c, interp.x)
        self.breaks = [float(b) for b in pp.x]
        self.lo, self.hi = self.breaks[0], self.breaks[-1]
        c = pp.c
        k = c.shape[0] - 1
        self.coef = [[float(c[j, i]) for j in range(k + 1)] for i in range(c.shape[1])]
        self.dcoef = [[(k - j) * cc[j] for j in range(k)] for cc in self.coef]
        self.ddcoef = [[(k - 1 - j) * cc[j] for j in range(k - 1)] for cc in self.dcoef]

    def _locate(self, x):
        if not self.lo <= x <= self.hi:
            raise DomainError(f"x={x:.8g} outside table range [{self.lo}, {self.hi}]")
        i = min(bisect.bisect_right(self.breaks, x) - 1, len(self.coef) - 1)
        return i, x - self.breaks[i]

    @staticmethod
    def _horner(cs, t):
        acc = 0.0
        for c in cs:
            acc = acc * t + c
        return acc

    def __call__(self, x, deriv=0):
        i, t = self._locate(x)
        cs = (self.coef, self.dcoef, self.ddcoef)[deriv][i]
        return self._horner(cs, t)


@dataclass(frozen=True)
class EAModel:
    mode: str
    table: EffectiveTable | None = None
    pot: PotentialSpec | None = None
    _veff: _Piecewise | None = field(default=None, init=False, repr=False, compare=False)
    _zeff: _Piecewise | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "bare":
            if self.pot is None:
                raise ModelInvariantError("bare dynamics needs a potential")
            return
        if self.table is None:
            raise ModelInvariantError(f"{self.mode} dynamics needs an effective table")
        if self.mode == "ea_z" and np.min(self.table.zeff) <= 0:
            raise ModelInvariantError(f"Z_eff must be positive, min is {np.min(self.table.zeff):.3e}")
        object.__setattr__(self, "_veff", _Piecewise(self.table._veff_interp))
        if self.mode == "ea_z":
            object.__setattr__(self, "_zeff", _Piecewise(self.table._zeff_interp))

    @property
    def x_range(self) -> tuple[float, float]:
        if self.mode == "bare":
            return (-math.inf, math.inf)
        return (self.table.x_lo, self.table.x_hi)


def acceleration(model: EAModel, x: float, v: float) -> float:
    if model.mode == "bare":
        return -float(model.pot.gradient(x))
    if model.mode == "ea_z1":
        return -model._veff(x, 1)
    z = model._zeff(x)
    if z <= 0:
        raise ModelInvariantError(f"Z_eff({x:.6g}) = {z:.3e} is not positive")
    return -(model._veff(x, 1) + 0.5 * model._zeff(x, 1) * v * v) / z


def ea_energy(model: EAModel, x: float, v: float) -> float:
    """First integral: Z(x) v**2/2 + V(x) with the model's Z and V."""
    if model.mode == "bare":
        return 0.5 * v * v + float(model.pot.value(x))
    z = model._zeff(x) if model.mode == "ea_z" else 1.0
    return 0.5 * z * v * v + model._veff(x)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    mode: str

    @property
    def energy_drift(self) -> float:
        e0 = self.energy[0]
        scale = abs(e0) if abs(e0) > 1e-12 else max(np.max(np.abs(self.energy)), 1e-12)
        return float(np.max(np.abs(self.energy - e0)) / scale)

    def columns(self) -> dict[str, np.ndarray]:
        return {"t": self.times, "x": self.x, "v": self.v, "energy": self.energy}


def integrate_trajectory(model: EAModel, x0: float, v0: float, dt: float, t_end: float,
                         stride: int = 1, check_energy: bool = True,
                         accel: Callable[[EAModel, float, float], float] | None = None) -> Trajectory:
    """Classical RK4 from (x0, v0) to t_end, sampled every ``stride`` steps.

    ``accel`` replaces :func:`acceleration` (used for fault-injection checks).
    Raises DomainError with the exit time if the path leaves the table, and
    EnergyDriftError if the relative energy drift exceeds 1e-7.
    """
    if not dt > 0 or not t_end > 0:
        raise InvalidArgumentError("need dt > 0 and t_end > 0")
    if stride < 1:
        raise InvalidArgumentError("stride must be >= 1")
    lo, hi = model.x_range
    if not lo <= x0 <= hi:
        raise DomainError(f"initial point x0={x0} outside table range [{lo}, {hi}]")
    acc = accel or acceleration
    n = int(math.ceil(t_end / dt - 1e-9))
    ts, xs, vs = [0.0], [x0], [v0]
    x, v = float(x0), float(v0)
    h2, h6 = dt / 2.0, dt / 6.0
    for step in range(1, n + 1):
        try:
            a1 = acc(model, x, v)
            x2, v2 = x + h2 * v, v + h2 * a1
            a2 = acc(model, x2, v2)
            x3, v3 = x + h2 * v2, v + h2 * a2
            a3 = acc(model, x3, v3)
            x4, v4 = x + dt * v3, v + dt * a3
            a4 = acc(model, x4, v4)
        except DomainError as exc:
            err = DomainError(f"{model.mode} trajectory left the table at t~{(step - 1) * dt:.6g}: {exc}")
            err.time = (step - 1) * dt
            raise err from exc
        x += h6 * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v += h6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        if step % stride == 0 or step == n:
            ts.append(step * dt)
            xs.append(x)
            vs.append(v)
    try:
        energy = np.array([ea_energy(model, xi, vi) for xi, vi in zip(xs, vs)])
    except DomainError as exc:
        raise DomainError(f"{model.mode} trajectory left the table: {exc}") from exc
    traj = Trajectory(np.array(ts), np.array(xs), np.array(vs), energy, model.mode)
    if check_energy and traj.energy_drift > ENERGY_RTOL:
        raise EnergyDriftError(
            f"{model.mode} energy drift {traj.energy_drift:.3e} exceeds {ENERGY_RTOL:g}; reduce dt",
            drift=traj.energy_drift,
        )
    return traj


def euler_lagrange_residual(model: EAModel, traj: Trajectory) -> np.ndarray:
    """d/dt(Z xdot) - Z' xdot**2/2 + V_eff' along a trajectory, by centered differences."""
    if model.mode == "bare":
        raise InvalidArgumentError("the Euler-Lagrange residual is defined for ea modes")
    t, x, v = traj.times, traj.x, traj.v
    zf = model._zeff if model.mode == "ea_z" else None
    z = np.array([zf(xi) for xi in x]) if zf else np.ones_like(x)
    dz = np.array([zf(xi, 1) for xi in x]) if zf else np.zeros_like(x)
    dv = np.array([model._veff(xi, 1) for xi in x])
    mom = z * v
    dmom = (mom[2:] - mom[:-2]) / (t[2:] - t[:-2])
    return dmom - 0.5 * dz[1:-1] * v[1:-1] ** 2 + dv[1:-1]
