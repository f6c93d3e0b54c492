"""Small-scale fading: Rayleigh access links and the Rician BS-IRS matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import LinkGains, ScenarioConfig


@dataclass(frozen=True)
class ChannelSet:
    """One drop.  ``H`` is (N, N_b), ``f`` is (K, N_b), ``g`` is (K, N)."""
    H: np.ndarray
    f: np.ndarray
    g: np.ndarray
    noise_power: float

    @property
    def n_users(self):
        return self.f.shape[0]

    def user(self, k):
        return self.g[k], self.H, self.f[k]


@dataclass(frozen=True)
class SteeringGeometry:
    aod_bs: float
    aoa_irs: float
    element_spacing: float = 0.5

    def __post_init__(self):
        if self.element_spacing <= 0:
            raise ValueError("element_spacing must be > 0")

    @classmethod
    def from_config(cls, config: ScenarioConfig):
        dx = config.irs_position[0] - config.bs_position[0]
        dy = config.irs_position[1] - config.bs_position[1]
        # both arrays are modelled as ULAs along the x axis
        return cls(aod_bs=math.atan2(dy, dx), aoa_irs=math.atan2(-dy, -dx),
                   element_spacing=config.element_spacing)


def draw_rayleigh_vector(length, variance, rng: np.random.Generator, size=None):
    """CN(0, variance) entries.  ``size`` prepends extra axes, e.g. one row per user."""
    variance = np.asarray(variance, dtype=float)
    if np.any(variance <= 0):
        raise ValueError("variance must be > 0")
    shape = (length,) if size is None else (*np.atleast_1d(size), length)
    z = rng.standard_normal((*shape, 2)).view(np.complex128)[..., 0]
    scale = np.sqrt(variance / 2.0)
    if size is not None and scale.ndim == 1:
        scale = scale[:, None]
    return scale * z


def steering_vector(n, angle, spacing):
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(2j * np.pi * spacing * np.arange(n) * math.sin(angle))


def los_matrix(n_elements, n_antennas, geom: SteeringGeometry):
    a_irs = steering_vector(n_elements, geom.aoa_irs, geom.element_spacing)
    a_bs = steering_vector(n_antennas, geom.aod_bs, geom.element_spacing)
    return np.outer(a_irs, a_bs.conj())


def draw_rician_matrix(config: ScenarioConfig, gains: LinkGains, geom: SteeringGeometry,
                       rng: np.random.Generator):
    gamma = config.rician_factor
    sigma_h2 = gains.sigma_h2
    if gamma < 0 or sigma_h2 <= 0:
        raise ValueError("need rician_factor >= 0 and sigma_h2 > 0")
    N, Nb = config.n_elements, config.n_antennas
    h_los = los_matrix(N, Nb, geom)
    h_nlos = draw_rayleigh_vector(Nb, 1.0, rng, size=N)
    return (math.sqrt(gamma * sigma_h2 / (gamma + 1)) * h_los
            + math.sqrt(sigma_h2 / (gamma + 1)) * h_nlos)


def assemble_channels(config: ScenarioConfig, gains: LinkGains, geom: SteeringGeometry,
                      rng: np.random.Generator) -> ChannelSet:
    K = config.n_users
    H = draw_rician_matrix(config, gains, geom, rng)
    f = draw_rayleigh_vector(config.n_antennas, gains.sigma_f2, rng, size=K)
    g = draw_rayleigh_vector(config.n_elements, gains.sigma_g2, rng, size=K)
    return ChannelSet(H=H, f=f, g=g, noise_power=gains.noise_power)
