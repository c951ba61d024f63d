"""Mean-field power control over the remaining-energy state.

The slot is discretised into ``Y`` time steps and the energy range ``[0, e0]``
into ``Z`` cells. Cell 0 is the depleted state: a UAV there does not transmit.
Energy drains at rate ``p`` with Brownian noise of strength ``nu``:

    forward (density):  dm/dt = d(p m)/de + nu^2/2 d2m/de2
    backward (value):  -du/dt = min_p [c(p) - p du/de] + nu^2/2 d2u/de2,  u(T) = 0

Both are explicit upwind schemes with zero-flux / one-sided boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class UnstableGridError(ValueError):
    pass


class InvalidDensityError(ValueError):
    pass


@dataclass(frozen=True)
class MfgGrid:
    n_time: int = 20
    n_energy: int = 50
    dt: float = 0.05
    e0: float = 1.0
    nu: float = 0.01
    legacy_diffusion: bool = False  # divide the diffusion term by de instead of de**2

    @property
    def de(self) -> float:
        return self.e0 / self.n_energy

    @property
    def horizon(self) -> float:
        return self.n_time * self.dt

    @property
    def diffusion(self) -> float:
        """Coefficient of the discrete Laplacian in one explicit step."""
        denom = self.de if self.legacy_diffusion else self.de**2
        return self.nu**2 * self.dt / (2.0 * denom)

    def courant(self, p_max: float) -> float:
        return self.dt * p_max / self.de + 2.0 * self.diffusion

    def check_stable(self, p_max: float) -> None:
        c = self.courant(p_max)
        if c > 1.0 + 1e-12:
            raise UnstableGridError(f"explicit scheme unstable: dt*p/de + nu^2*dt/de^2 = {c:.3g} > 1")

    def level_of(self, e) -> np.ndarray:
        e = np.asarray(e, dtype=float)
        return np.clip(np.floor(e / self.de).astype(int), 0, self.n_energy - 1)

    def energies(self) -> np.ndarray:
        """Cell-centre energy of every level."""
        return (np.arange(self.n_energy) + 0.5) * self.de

    def uniform_density(self) -> np.ndarray:
        return np.full(self.n_energy, 1.0 / self.e0)


@dataclass(frozen=True)
class CostParams:
    omega1: float = 1e4
    omega2: float = 1e6
    gamma_th: float = 10 ** 0.3
    sigma2: float = 1e-8
    g_direct: float = 0.0625
    i_bar_u: float = 0.0
    i_bar_j: float = 0.0

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0):
            raise ValueError("weights must be > 0")


@dataclass(frozen=True)
class MfgChannel:
    """Inputs that tie the interference mean field to the population's power."""

    n_uavs: int
    n_jammers: int
    g_bar_u: float
    g_bar_j: float
    p_j_ref: float


@dataclass
class MfgSolution:
    m: np.ndarray
    u: np.ndarray
    p: np.ndarray
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)
    repair: np.ndarray | None = None
    i_bar_u: np.ndarray | None = None
    i_bar_j: np.ndarray | None = None

    def mass(self, grid: MfgGrid) -> np.ndarray:
        return self.m.sum(axis=1) * grid.de

    def du_de(self, grid: MfgGrid) -> np.ndarray:
        return value_gradient(self.u, grid)


def cost(p, params: CostParams):
    """Per-step cost: squared SINR miss plus squared total interference."""
    interf = params.i_bar_u + params.i_bar_j
    miss = np.asarray(p, dtype=float) * params.g_direct - params.gamma_th * (interf + params.sigma2)
    return params.omega1 * miss**2 + params.omega2 * interf**2


def hamiltonian(p, du_de, params: CostParams):
    return cost(p, params) - np.asarray(p) * du_de


def optimal_power(du_de, params: CostParams, p_max: float = 0.1):
    """Minimiser of the Hamiltonian over ``[0, p_max]``."""
    g = params.g_direct
    if not g > 0:
        raise ValueError("direct-link gain must be > 0")
    interf = params.i_bar_u + params.i_bar_j
    p = params.gamma_th * (interf + params.sigma2) / g + np.asarray(du_de, dtype=float) / (2 * params.omega1 * g**2)
    return np.clip(p, 0.0, p_max)


def _laplacian_neumann(x: np.ndarray) -> np.ndarray:
    lap = np.empty_like(x)
    lap[1:-1] = x[2:] - 2 * x[1:-1] + x[:-2]
    lap[0] = x[1] - x[0]
    lap[-1] = x[-2] - x[-1]
    return lap


def fpk_step(m_row, p_row, grid: MfgGrid, *, repair: bool = True, return_repair: bool = False):
    """Advance the energy density one time step.

    Mass in cell ``z`` drains into ``z-1`` at rate ``dt/de * p[z]``; nothing
    leaves cell 0 and nothing enters the top cell, so the update conserves
    ``sum(m) * de`` exactly. With ``repair`` negative entries are zeroed and the
    row rescaled to unit mass; ``return_repair`` also returns the clipped mass.
    """
    m = np.asarray(m_row, dtype=float)
    p = np.asarray(p_row, dtype=float)
    grid.check_stable(float(np.max(p, initial=0.0)))
    out_flux = grid.dt / grid.de * m * p
    out_flux[0] = 0.0
    nxt = m - out_flux
    nxt[:-1] += out_flux[1:]
    nxt += grid.diffusion * _laplacian_neumann(m)
    clipped = 0.0
    if repair:
        neg = nxt < 0
        if np.any(neg):
            clipped = float(-nxt[neg].sum() * grid.de)
            nxt[neg] = 0.0
        total = nxt.sum() * grid.de
        if total > 0:
            nxt = nxt * ((m.sum() * grid.de) / total)
    return (nxt, clipped) if return_repair else nxt


def value_gradient(u, grid: MfgGrid) -> np.ndarray:
    """Backward difference ``(u[z] - u[z-1]) / de`` along the energy axis; 0 at cell 0."""
    u = np.asarray(u, dtype=float)
    g = np.zeros_like(u)
    g[..., 1:] = (u[..., 1:] - u[..., :-1]) / grid.de
    return g


def hjb_step_backward(u_row_next, p_row, m_row, grid: MfgGrid, cost_fn):
    """One explicit backward step of the value function.

    ``cost_fn(p_row, m_row)`` returns the running cost of every energy cell.
    """
    u = np.asarray(u_row_next, dtype=float)
    p = np.asarray(p_row, dtype=float)
    grid.check_stable(float(np.max(p, initial=0.0)))
    grad = value_gradient(u, grid)
    c = np.asarray(cost_fn(p, m_row), dtype=float)
    return u + grid.dt * (c - p * grad) + grid.diffusion * _laplacian_neumann(u)


def _mean_fields_at(m_row, p_row, grid, chan: MfgChannel | None, base: CostParams) -> tuple[float, float]:
    if chan is None:
        return base.i_bar_u, base.i_bar_j
    p_bar = float(np.sum(m_row * p_row) * grid.de)
    return (chan.n_uavs - 2) * p_bar * chan.g_bar_u, chan.n_jammers * chan.p_j_ref * chan.g_bar_j


def solve_mfg(initial_m, grid: MfgGrid, channel: MfgChannel | None, cost_params: CostParams, *,
              max_iter: int = 200, tol: float = 1e-6, p_max: float = 0.1, initial_p=None) -> MfgSolution:
    """Fixed-point iteration between the forward density and backward value sweeps.

    With ``channel`` given, the inter-UAV mean field at each time step follows
    the average power ``sum(m * p) * de`` of the current iterate; otherwise
    the fixed fields in ``cost_params`` are used.
    """
    m0 = np.asarray(initial_m, dtype=float)
    if m0.shape != (grid.n_energy,) or np.any(m0 < 0) or abs(m0.sum() * grid.de - 1.0) > 1e-6:
        raise InvalidDensityError("initial mean field must be a non-negative unit-mass density")
    grid.check_stable(p_max)
    Y, Z = grid.n_time, grid.n_energy

    if initial_p is None:
        p = np.broadcast_to(optimal_power(0.0, cost_params, p_max), (Y, Z)).copy()
    else:
        p = np.array(initial_p, dtype=float).reshape(Y, Z)
    p[:, 0] = 0.0

    m = np.empty((Y + 1, Z))
    u = np.zeros((Y + 1, Z))
    repair = np.zeros(Y)
    i_u = np.zeros(Y)
    i_j = np.zeros(Y)
    history: list[float] = []
    converged = False
    k = 0

    def forward(pol):
        m[0] = m0
        for t in range(Y):
            m[t + 1], repair[t] = fpk_step(m[t], pol[t], grid, return_repair=True)

    for k in range(1, max_iter + 1):
        forward(p)
        p_new = np.empty_like(p)
        u[Y] = 0.0
        for t in range(Y - 1, -1, -1):
            i_u[t], i_j[t] = _mean_fields_at(m[t], p[t], grid, channel, cost_params)
            params_t = replace(cost_params, i_bar_u=i_u[t], i_bar_j=i_j[t])
            row = optimal_power(value_gradient(u[t + 1], grid), params_t, p_max)
            row[0] = 0.0
            p_new[t] = row
            u[t] = hjb_step_backward(u[t + 1], row, m[t], grid, lambda pp, mm, pr=params_t: cost(pp, pr))
        change = float(np.max(np.abs(p_new - p)))
        history.append(change)
        p = p_new
        if change < tol:
            converged = True
            break
    forward(p)
    return MfgSolution(m=m.copy(), u=u.copy(), p=p, iterations=k, converged=converged,
                       history=history, repair=repair.copy(), i_bar_u=i_u.copy(), i_bar_j=i_j.copy())


def energy_sde_step(e, p, dt: float, nu: float, rng: np.random.Generator, e0: float = 1.0):
    """Euler-Maruyama step of ``de = -p dt + nu dW`` clamped to ``[0, e0]``; 0 is absorbing."""
    e = np.asarray(e, dtype=float)
    p = np.asarray(p, dtype=float)
    xi = rng.standard_normal(e.shape)
    nxt = np.clip(e - p * dt + nu * np.sqrt(dt) * xi, 0.0, e0)
    nxt = np.where(e <= 0.0, 0.0, nxt)
    return nxt if nxt.ndim else float(nxt)


def fractional_power(g_direct, tau: float, p0: float, p_max: float = 0.1):
    """Open-loop fractional channel inversion, ``min(p_max, p0 * g**-tau)``."""
    return np.minimum(p_max, p0 * np.asarray(g_direct, dtype=float) ** (-tau))


def uniform_power(e0: float, slot_T: float, p_max: float = 0.1) -> float:
    return min(p_max, e0 / slot_T)
