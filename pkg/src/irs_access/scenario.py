"""Cell geometry, user drops and large-scale fading.

The BS sits at the origin, the IRS at the centre of the cell-edge area.
Half the users (rounded up) are dropped around the IRS, the rest around
the BS.  All distances are horizontal; antenna heights only enter the
COST-Hata constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

BOLTZMANN = 1.380649e-23  # J/K

SCHEMES = ("tdma", "fdma", "noma")

MAX_REJECTIONS = 1_000_000


class ConfigError(ValueError):
    """Invalid scenario parameter.  ``key`` names the offending field."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    # array sizes
    n_elements: int = 200
    n_antennas: int = 16
    n_users: int = 2

    # power / noise
    tx_power: float = 20.0          # W
    bandwidth: float = 20e6         # Hz
    noise_figure: float = 9.0       # dB
    temperature: float = 290.0      # K

    # BS-IRS link
    rician_factor: float = 5.0      # linear
    los_ref_loss: float = -30.0     # dB at 1 m
    los_exponent: float = 2.0
    element_spacing: float = 0.5    # wavelengths

    # geometry (metres)
    bs_position: tuple = (0.0, 0.0)
    irs_position: tuple = (375.0, 375.0)
    bs_height: float = 15.0
    irs_height: float = 15.0
    ue_height: float = 1.65
    center_radius: float = 200.0
    edge_radius: float = 75.0
    min_distance: float = 10.0

    # COST-Hata
    carrier_freq: float = 1900.0    # MHz
    break_near: float = 10.0        # m
    break_far: float = 50.0         # m
    shadow_sigma: float = 8.0       # dB

    # optimisation / multiple access
    phase_bits: tuple = (1, 2)
    iterations: int = 3
    rederive_mrt: bool = True
    aided_user: int | None = None   # 0-based; None picks the strongest IRS link
    noma_exponent: float = 0.5     # alpha_k ~ |rho_k|**(-2*exponent)
    schemes: tuple = SCHEMES

    # campaign
    drops: int = 10_000
    master_seed: int = 20220101

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(key, msg)

        for key in ("n_elements", "n_antennas", "n_users", "drops", "iterations"):
            need(getattr(self, key) >= 1, key, "must be >= 1")
        for key in ("tx_power", "bandwidth", "temperature", "carrier_freq",
                    "element_spacing", "edge_radius", "bs_height", "ue_height"):
            need(getattr(self, key) > 0, key, "must be > 0")
        for key in ("rician_factor", "shadow_sigma", "noma_exponent"):
            need(getattr(self, key) >= 0, key, "must be >= 0")
        need(self.min_distance > 0, "min_distance", "must be > 0")
        need(self.center_radius > self.min_distance, "center_radius",
             "must exceed min_distance")
        need(self.edge_radius > self.min_distance, "edge_radius",
             "must exceed min_distance")
        need(0 < self.break_near < self.break_far, "break_near",
             "need 0 < break_near < break_far")
        need(all(int(b) == b and b >= 1 for b in self.phase_bits), "phase_bits",
             "every entry must be an integer >= 1")
        need(len(set(self.phase_bits)) == len(self.phase_bits), "phase_bits",
             "duplicate entries")
        need(len(self.bs_position) == 2, "bs_position", "expected x,y")
        need(len(self.irs_position) == 2, "irs_position", "expected x,y")
        need(self.bs_irs_distance() >= 1.0, "irs_position",
             "BS-IRS distance must be >= 1 m")
        need(len(self.schemes) >= 1 and all(s in SCHEMES for s in self.schemes),
             "schemes", f"expected a non-empty subset of {SCHEMES}")
        need(len(set(self.schemes)) == len(self.schemes), "schemes", "duplicate entries")
        need(self.aided_user is None or 0 <= self.aided_user < self.n_users,
             "aided_user", "must be a valid 0-based user index")
        need(0 <= self.master_seed < 2**64, "master_seed", "must fit in 64 bits")

    def bs_irs_distance(self):
        return math.dist(self.bs_position, self.irs_position)

    @property
    def n_edge(self):
        return (self.n_users + 1) // 2

    @property
    def n_center(self):
        return self.n_users // 2

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class Placement:
    user_positions: np.ndarray      # (K, 2)
    user_class: tuple               # "center" | "edge" per user


@dataclass(frozen=True)
class LinkGains:
    sigma_f2: np.ndarray            # (K,) BS -> UE
    sigma_g2: np.ndarray            # (K,) IRS -> UE
    sigma_h2: float                 # BS -> IRS
    noise_power: float


def _uniform_in_annulus(center, r_max, r_min, rng):
    for _ in range(MAX_REJECTIONS):
        x, y = rng.uniform(-r_max, r_max, size=2)
        r = math.hypot(x, y)
        if r_min < r <= r_max:
            return center[0] + x, center[1] + y
    raise RuntimeError(
        f"no feasible user position after {MAX_REJECTIONS} rejections "
        f"(radius {r_max}, min distance {r_min})")


def place_users(config: ScenarioConfig, rng: np.random.Generator) -> Placement:
    """Drop center users around the BS and edge users around the IRS.

    Users ``0 .. n_center-1`` are center users, the remaining ``n_edge``
    are edge users (an odd K gives the extra user to the edge).
    """
    classes = ("center",) * config.n_center + ("edge",) * config.n_edge
    pos = np.empty((config.n_users, 2))
    for k, cls in enumerate(classes):
        if cls == "center":
            pos[k] = _uniform_in_annulus(config.bs_position, config.center_radius,
                                         config.min_distance, rng)
        else:
            pos[k] = _uniform_in_annulus(config.irs_position, config.edge_radius,
                                         config.min_distance, rng)
    return Placement(pos, classes)


def _hata_constant(config):
    logf = math.log10(config.carrier_freq)
    return (46.3 + 33.9 * logf - 13.82 * math.log10(config.bs_height)
            - (1.1 * logf - 0.7) * config.ue_height + (1.56 * logf - 0.8))


def path_loss_cost_hata(distance, config: ScenarioConfig):
    """Three-slope COST-Hata path loss in dB (returned as a negative gain).

    Slopes are -35 dB/decade beyond ``break_far``, -20 dB/decade between the
    break points and flat below ``break_near``.  Accepts scalars or arrays.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    L = _hata_constant(config)
    d_km = d / 1e3
    d0 = config.break_near / 1e3
    d1 = config.break_far / 1e3
    far = -L - 35.0 * np.log10(d_km)
    mid = -L - 15.0 * math.log10(d1) - 20.0 * np.log10(d_km)
    near = -L - 15.0 * math.log10(d1) - 20.0 * math.log10(d0)
    out = np.where(d_km > d1, far, np.where(d_km > d0, mid, near))
    return float(out) if out.ndim == 0 else out


def path_loss_los(distance, config: ScenarioConfig):
    """Distance-power law ``L0 - 10*alpha*log10(d)`` in dB, with d >= 1 m."""
    d = np.asarray(distance, dtype=float)
    if np.any(d < 1.0):
        raise ValueError("LOS path loss is defined for distance >= 1 m")
    out = config.los_ref_loss - 10.0 * config.los_exponent * np.log10(d)
    return float(out) if out.ndim == 0 else out


def shadow_fading(rng: np.random.Generator, sigma_sd, size=None):
    if sigma_sd < 0:
        raise ValueError("sigma_sd must be >= 0")
    return rng.normal(0.0, sigma_sd, size=size)


def noise_power(config: ScenarioConfig) -> float:
    """Thermal noise ``kappa * B * T0 * NF`` in watts."""
    return BOLTZMANN * config.bandwidth * config.temperature * 10 ** (config.noise_figure / 10)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db) / 10.0)


def link_gains(placement: Placement, config: ScenarioConfig,
               rng: np.random.Generator) -> LinkGains:
    pos = placement.user_positions
    d_bs = np.hypot(*(pos - np.asarray(config.bs_position)).T)
    d_irs = np.hypot(*(pos - np.asarray(config.irs_position)).T)
    # one shadowing draw per link, (f_k, g_k) interleaved per user
    shadow = shadow_fading(rng, config.shadow_sigma, size=(config.n_users, 2))
    sigma_f2 = db_to_linear(path_loss_cost_hata(d_bs, config) + shadow[:, 0])
    sigma_g2 = db_to_linear(path_loss_cost_hata(d_irs, config) + shadow[:, 1])
    sigma_h2 = float(db_to_linear(path_loss_los(config.bs_irs_distance(), config)))
    return LinkGains(np.atleast_1d(sigma_f2), np.atleast_1d(sigma_g2), sigma_h2,
                     noise_power(config))
