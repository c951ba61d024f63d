"""Path-loss/fading channel, SINR, interference sums and two-probe mean-gain estimation."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


class CoincidentPositionsError(ValueError):
    pass


class SingularProbeError(ValueError):
    pass


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ChannelParams:
    alpha: float = 4.0
    nakagami_m: float = 3.0
    noise_power: float = 1e-8
    p_max_uav: float = 0.1
    p_max_jam: float = 0.4
    gamma_th: float = db_to_linear(3.0)
    probe1: tuple[float, float] = (0.05, 0.2)
    probe2: tuple[float, float] = (0.1, 0.1)
    resample_fading: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.nakagami_m >= 0.5:
            raise ValueError("nakagami_m must be >= 0.5")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be > 0")
        if not self.gamma_th > 0:
            raise ValueError("gamma_th must be > 0")


@dataclass(frozen=True)
class MeanFieldGains:
    g_bar_uav: float
    g_bar_jam: float
    i_bar_uav: float
    i_bar_jam: float


def nakagami_power_fading(rng: np.random.Generator, m: float, size, spread: float = 1.0) -> np.ndarray:
    """Power gain |h|^2 of Nakagami-m fading: Gamma(m, spread/m), mean ``spread``."""
    return rng.gamma(m, spread / m, size=size)


def channel_gain(tx, rx, fading_sample: float, alpha: float) -> float:
    d = float(np.linalg.norm(np.asarray(tx, dtype=float) - np.asarray(rx, dtype=float)))
    if d == 0.0:
        raise CoincidentPositionsError("transmitter and receiver coincide")
    if not fading_sample > 0:
        raise ValueError("fading sample must be > 0")
    return fading_sample * d ** (-alpha)


@dataclass
class LinkGains:
    """``uu[n, r]`` is the gain from UAV n to UAV r; ``ju[m, r]`` from jammer m to UAV r."""

    uu: np.ndarray
    ju: np.ndarray


def link_gains(positions, jammer_positions, alpha: float, fading_uu=None, fading_ju=None) -> LinkGains:
    x = np.asarray(positions, dtype=float)
    j = np.asarray(jammer_positions, dtype=float).reshape(-1, 3)
    d_uu = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    off = ~np.eye(len(x), dtype=bool)
    if np.any(d_uu[off] == 0):
        raise CoincidentPositionsError("two UAVs share a position")
    d_ju = np.linalg.norm(j[:, None, :] - x[None, :, :], axis=-1)
    if np.any(d_ju == 0):
        raise CoincidentPositionsError("a UAV coincides with a jammer")
    with np.errstate(divide="ignore"):
        uu = np.where(off, d_uu, np.inf) ** (-alpha)
    ju = d_ju ** (-alpha)
    if fading_uu is not None:
        uu = uu * fading_uu
    if fading_ju is not None:
        ju = ju * fading_ju
    return LinkGains(uu=uu, ju=ju)


def draw_link_gains(positions, jammer_positions, params: ChannelParams, rng: np.random.Generator) -> LinkGains:
    n = len(positions)
    m = len(jammer_positions)
    h_uu = nakagami_power_fading(rng, params.nakagami_m, (n, n))
    h_ju = nakagami_power_fading(rng, params.nakagami_m, (m, n))
    return link_gains(positions, jammer_positions, params.alpha, h_uu, h_ju)


def aggregate_interference(i_prime: int, gains: LinkGains, powers, jam_powers, exclude=()) -> tuple[float, float]:
    """Inter-UAV and jamming power received at ``i_prime``, returned separately.

    The UAV sum runs over every transmitter except ``i_prime`` itself and the
    indices in ``exclude`` (the intended transmitter).
    """
    p = np.asarray(powers, dtype=float)
    mask = np.ones(len(p), dtype=bool)
    mask[i_prime] = False
    for k in exclude:
        mask[k] = False
    i_u = float(np.sum(p[mask] * gains.uu[mask, i_prime]))
    i_j = float(np.sum(np.asarray(jam_powers, dtype=float) * gains.ju[:, i_prime]))
    return i_u, i_j


def sinr(i: int, i_prime: int, gains: LinkGains, powers, jam_powers, noise_power: float) -> float:
    if i == i_prime:
        raise ValueError("transmitter and receiver must differ")
    i_u, i_j = aggregate_interference(i_prime, gains, powers, jam_powers, exclude=(i,))
    return float(powers[i]) * gains.uu[i, i_prime] / (i_u + i_j + noise_power)


def nearest_neighbours(positions) -> np.ndarray:
    x = np.asarray(positions, dtype=float)
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    return np.argmin(d, axis=1)


def link_metrics(gains: LinkGains, powers, jam_powers, noise_power: float, receivers) -> dict[str, np.ndarray]:
    """SINR and interference for every link ``i -> receivers[i]`` at once."""
    p = np.asarray(powers, dtype=float)
    pj = np.asarray(jam_powers, dtype=float)
    rx = np.asarray(receivers)
    idx = np.arange(len(p))
    uu = np.where(np.isinf(gains.uu), 0.0, gains.uu)
    total_u = p @ uu  # received from all UAVs at each receiver
    direct = p * uu[idx, rx]
    i_u = total_u[rx] - direct
    i_j = (pj @ gains.ju)[rx]
    return {
        "sinr": direct / (i_u + i_j + noise_power),
        "i_u": i_u,
        "i_j": i_j,
        "g_direct": uu[idx, rx],
    }


def probe_received_powers(i: int, i_prime: int, gains: LinkGains, params: ChannelParams = ChannelParams()):
    """Noiseless received power at ``i_prime`` under the two probe settings."""
    out = []
    for p_u, p_j in (params.probe1, params.probe2):
        p = np.full(gains.uu.shape[0], p_u)
        pj = np.full(gains.ju.shape[0], p_j)
        i_u, i_j = aggregate_interference(i_prime, gains, p, pj, exclude=(i,))
        out.append(p_u * gains.uu[i, i_prime] + i_u + i_j)
    return tuple(out)


def estimate_mean_gains(
    p1_u, p1_j, p2_u, p2_j, p1_r, p2_r, g_direct, n, m, *, p_u_ref=0.0, p_j_ref=0.0, clamp=True
) -> MeanFieldGains:
    """Recover the average interferer and jammer gains from two probe measurements.

    Solves the 2x2 system ``p_r = p_u*(g + (n-2)*gU) + p_j*m*gJ`` for the two
    probe settings. The interference fields of the result are evaluated at the
    reference powers ``p_u_ref`` / ``p_j_ref`` (zero unless given).
    """
    det_u = p1_u * p2_j - p2_u * p1_j
    if abs(det_u) <= 1e-12 * max(abs(p1_u * p2_j), abs(p2_u * p1_j)):
        raise SingularProbeError("probe powers are proportional; system is rank 1")
    total_u = (p1_r * p2_j - p2_r * p1_j) / det_u
    g_u = (total_u - g_direct) / (n - 2) if n > 2 else 0.0
    g_j = (p1_r * p2_u - p2_r * p1_u) / (m * (p1_j * p2_u - p2_j * p1_u))
    if clamp:
        if g_u < 0:
            log.debug("clamping negative interferer gain estimate %g", g_u)
            g_u = 0.0
        if g_j < 0:
            log.debug("clamping negative jammer gain estimate %g", g_j)
            g_j = 0.0
    i_u, i_j = mean_fields(g_u, g_j, p_u_ref, p_j_ref, n, m)
    return MeanFieldGains(float(g_u), float(g_j), float(i_u), float(i_j))


def mean_fields(g_bar_u, g_bar_j, p_u_ref, p_j_ref, n, m) -> tuple[float, float]:
    return (n - 2) * p_u_ref * g_bar_u, m * p_j_ref * g_bar_j


def estimate_all_receivers(gains: LinkGains, receivers, params: ChannelParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised two-probe estimate of (gU, gJ) at every receiver ``receivers[i]``."""
    n = gains.uu.shape[0]
    m = gains.ju.shape[0]
    rx = np.asarray(receivers)
    idx = np.arange(n)
    uu = np.where(np.isinf(gains.uu), 0.0, gains.uu)
    sum_u = uu.sum(axis=0)[rx]  # includes the direct link
    sum_j = gains.ju.sum(axis=0)[rx]
    g_dir = uu[idx, rx]
    (a_u, a_j), (b_u, b_j) = params.probe1, params.probe2
    r1 = a_u * sum_u + a_j * sum_j
    r2 = b_u * sum_u + b_j * sum_j
    g_u = np.empty(n)
    g_j = np.empty(n)
    for k in range(n):
        est = estimate_mean_gains(a_u, a_j, b_u, b_j, r1[k], r2[k], g_dir[k], n, m)
        g_u[k], g_j[k] = est.g_bar_uav, est.g_bar_jam
    return g_u, g_j
