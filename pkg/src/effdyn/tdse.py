"""Crank-Nicolson evolution of wave packets and observable recording."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import splu

from .errors import GridClippingError, InsufficientDataError, InvalidArgumentError, ReflectionError
from .spectral import Grid, PotentialSpec, assemble_hamiltonian

EDGE_TOL = 1e-6


@dataclass(frozen=True)
class WavePacketState:
    amplitudes: np.ndarray
    grid: Grid
    time: float = 0.0

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dx)


@dataclass(frozen=True)
class ObservableSeries:
    times: np.ndarray
    x_mean: np.ndarray
    p_mean: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    variance: np.ndarray
    force_mean: np.ndarray
    final_state: WavePacketState | None = None

    @property
    def v_mean(self) -> np.ndarray:
        return self.p_mean

    def columns(self) -> dict[str, np.ndarray]:
        return {"t": self.times, "x_mean": self.x_mean, "p_mean": self.p_mean,
                "energy": self.energy, "norm": self.norm}


def _discrete_momentum(psi: np.ndarray, dx: float) -> float:
    return float(np.imag(np.vdot(psi[1:-1], psi[2:] - psi[:-2])) / 2.0)


def gaussian_packet(grid: Grid, x0: float, omega_w: float, p0: float = 0.0) -> WavePacketState:
    """Normalized Gaussian exp(-omega_w (x - x0)**2 / 2) with mean momentum p0.

    The plane-wave factor is tuned so that the centered-difference momentum
    used by :func:`propagate` returns exactly ``p0``.
    """
    if not omega_w > 0:
        raise InvalidArgumentError(f"omega_w must be positive, got {omega_w}")
    sigma = 1.0 / math.sqrt(2.0 * omega_w)
    if not (grid.xmin + 5 * sigma <= x0 <= grid.xmax - 5 * sigma):
        raise GridClippingError(
            f"packet at x0={x0} with sigma={sigma:.3g} does not fit [{grid.xmin}, {grid.xmax}] with 5-sigma margin"
        )
    x, dx = grid.x, grid.dx
    env = np.exp(-0.5 * omega_w * (x - x0) ** 2)
    env /= math.sqrt(np.sum(env**2) * dx)
    q = 0.0
    if p0 != 0.0:
        overlap = float(np.sum(env[:-1] * env[1:]))
        s = p0 / overlap
        if abs(s) >= 1.0:
            raise InvalidArgumentError(f"p0={p0} is not resolvable at dx={dx}")
        q = math.asin(s) / dx
    psi = env * np.exp(1j * q * x)
    return WavePacketState(psi, grid, 0.0)


def _observe(psi, H, pot_grad, x, dx):
    rho = np.abs(psi) ** 2 * dx
    norm = rho.sum()
    xm = rho @ x
    return (
        xm,
        _discrete_momentum(psi, dx),
        float(np.real(np.vdot(psi, H.matvec(psi))) * dx),
        norm,
        rho @ (x - xm) ** 2,
        -(rho @ pot_grad),
    )


def propagate(state: WavePacketState, pot: PotentialSpec, dt: float, n_steps: int,
              record_every: int = 10) -> ObservableSeries:
    """Evolve with (1 + i dt H/2) psi' = (1 - i dt H/2) psi.

    Records <x>, <p>, <H>, the norm, the position variance and -<V'(x)> at
    t = 0, every ``record_every`` steps, and at the final step.
    """
    if not dt > 0:
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    if n_steps < 1 or record_every < 1:
        raise InvalidArgumentError("need n_steps >= 1 and record_every >= 1")
    grid = state.grid
    x, dx = grid.x, grid.dx
    H = assemble_hamiltonian(grid, pot, 0.0)
    half = 0.5j * dt
    A = diags([half * H.off, 1.0 + half * H.diag, half * H.off], [-1, 0, 1], format="csc")
    B = diags([-half * H.off, 1.0 - half * H.diag, -half * H.off], [-1, 0, 1], format="csr")
    lu = splu(A)
    grad = pot.gradient(x)

    psi = np.array(state.amplitudes, dtype=complex)
    rows, times = [], []
    for step in range(n_steps + 1):
        if step % record_every == 0 or step == n_steps:
            t = state.time + step * dt
            edge = max(abs(psi[0]), abs(psi[-1]))
            if edge >= EDGE_TOL:
                raise ReflectionError(
                    f"packet reached the box wall at t={t:.6g} (edge amplitude {edge:.2e})", time=t
                )
            times.append(t)
            rows.append(_observe(psi, H, grad, x, dx))
        if step < n_steps:
            psi = lu.solve(B @ psi)
    obs = np.array(rows).T
    final = WavePacketState(psi, grid, state.time + n_steps * dt)
    return ObservableSeries(np.array(times), *obs, final_state=final)


def dominant_period(series: ObservableSeries | None = None, *, times=None, values=None) -> float:
    """Mean spacing of upward zero crossings of x_mean about its time average."""
    if series is not None:
        times, values = series.times, series.x_mean
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    y = y - y.mean()
    i = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    if len(i) < 2:
        raise InsufficientDataError(f"need at least 2 upward crossings, found {len(i)}")
    tc = t[i] - y[i] * (t[i + 1] - t[i]) / (y[i + 1] - y[i])
    return float(np.mean(np.diff(tc)))
