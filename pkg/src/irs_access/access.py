"""Sum spectral efficiency of TDMA, FDMA and power-domain NOMA for one drop.

TDMA re-optimizes the reflection in every slot, so each user gets its own
phases.  FDMA and NOMA share one reflection tuned to a single aided user;
the remaining users only adapt their MRT beam to it.  All rates are in
bit/s/Hz.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fading import ChannelSet
from .reflect import (BeamSolution, DegenerateChannelError, ReflectionState,
                      alternating_optimize, beam_for_reflection, quantize_phases)
from .scenario import ScenarioConfig


@dataclass(frozen=True)
class PhaseMode:
    kind: str                       # continuous | discrete | random
    bits: int | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "discrete", "random"):
            raise ValueError(f"unknown phase mode {self.kind!r}")
        if (self.kind == "discrete") != (self.bits is not None):
            raise ValueError("bits must be given exactly for discrete modes")
        if self.bits is not None and self.bits < 1:
            raise ValueError("bits must be >= 1")

    @property
    def label(self):
        return f"discrete_{self.bits}" if self.kind == "discrete" else self.kind

    @classmethod
    def parse(cls, label):
        label = label.strip()
        if label.startswith("discrete_"):
            return cls("discrete", int(label.split("_", 1)[1]))
        return cls(label)

    def sort_key(self):
        return {"continuous": 0, "discrete": 1, "random": 2}[self.kind], self.bits or 0


CONTINUOUS = PhaseMode("continuous")
RANDOM = PhaseMode("random")


def modes_for(config: ScenarioConfig):
    return [CONTINUOUS, *(PhaseMode("discrete", b) for b in sorted(config.phase_bits)), RANDOM]


@dataclass(frozen=True)
class SchemeResult:
    scheme: str
    phase_mode: str
    sum_rate: float
    per_user_rates: tuple
    aided_user: int | None = None
    alphas: tuple | None = None


def snr_rate(gain2, config: ScenarioConfig, noise_power):
    return np.log2(1.0 + config.tx_power * np.asarray(gain2) / noise_power)


def continuous_solution(channels: ChannelSet, k, config: ScenarioConfig, cache=None):
    """Alternating-optimization result for user ``k``, memoized in ``cache``."""
    if cache is not None and k in cache:
        return cache[k]
    sol = alternating_optimize(*channels.user(k), iterations=config.iterations)
    if cache is not None:
        cache[k] = sol
    return sol


def optimize_user(channels: ChannelSet, k, config: ScenarioConfig, mode: PhaseMode,
                  random_reflection: ReflectionState | None = None, cache=None) -> BeamSolution:
    """Reflection and beam for user ``k`` under the given phase mode.

    Discrete modes quantize the continuous optimum; the beam is then
    re-derived by MRT unless ``config.rederive_mrt`` is off.  The random mode
    uses ``random_reflection`` with MRT.
    """
    g, H, f = channels.user(k)
    if mode.kind == "random":
        if random_reflection is None:
            raise ValueError("random mode needs a random reflection")
        return beam_for_reflection(g, H, f, random_reflection)
    sol = continuous_solution(channels, k, config, cache)
    if mode.kind == "continuous":
        return sol
    q = quantize_phases(sol.reflection, mode.bits)
    return beam_for_reflection(g, H, f, q, w=None if config.rederive_mrt else sol.w)


def tdma_sum_rate(channels: ChannelSet, config: ScenarioConfig, mode: PhaseMode,
                  random_reflection=None, cache=None) -> SchemeResult:
    K = channels.n_users
    gains = np.empty(K)
    for k in range(K):
        sol = optimize_user(channels, k, config, mode, random_reflection, cache)
        gains[k] = abs(sol.effective_gain) ** 2
    rates = snr_rate(gains, config, channels.noise_power) / K
    return SchemeResult("tdma", mode.label, float(rates.sum()), tuple(rates.tolist()))


def select_aided_user(channels: ChannelSet, override=None) -> int:
    """Index of the user with the strongest IRS link (lowest index on ties)."""
    if override is not None:
        if not 0 <= override < channels.n_users:
            raise ValueError(f"aided user {override} out of range")
        return int(override)
    return int(np.argmax(np.sum(np.abs(channels.g) ** 2, axis=1)))


def shared_reflection_gains(channels: ChannelSet, config: ScenarioConfig, mode: PhaseMode,
                            random_reflection=None, cache=None):
    """Effective gains ``rho_k`` when the surface serves one aided user.

    Returns ``(aided, rho)``; non-aided users get MRT on the fixed reflection.
    """
    aided = select_aided_user(channels, config.aided_user)
    best = optimize_user(channels, aided, config, mode, random_reflection, cache)
    rho = np.empty(channels.n_users, dtype=complex)
    for k in range(channels.n_users):
        if k == aided:
            rho[k] = best.effective_gain
        else:
            rho[k] = beam_for_reflection(*channels.user(k), best.reflection).effective_gain
    return aided, rho


def fdma_sum_rate(channels: ChannelSet, config: ScenarioConfig, mode: PhaseMode,
                  random_reflection=None, cache=None) -> SchemeResult:
    # P_d/K over a 1/K band: the 1/K factors cancel inside the log
    K = channels.n_users
    aided, rho = shared_reflection_gains(channels, config, mode, random_reflection, cache)
    rates = snr_rate(np.abs(rho) ** 2, config, channels.noise_power) / K
    return SchemeResult("fdma", mode.label, float(rates.sum()), tuple(rates.tolist()),
                        aided_user=aided)


def allocate_noma_power(rho, exponent=1.0):
    """Power shares proportional to ``|rho_k|**(-2 * exponent)``, summing to one."""
    g2 = np.abs(np.asarray(rho)) ** 2
    if np.any(g2 == 0):
        raise DegenerateChannelError("zero effective gain in NOMA power allocation")
    weights = g2 ** (-exponent)
    return weights / weights.sum()


def noma_rates(rho, alphas, tx_power, noise_power):
    """Per-user SIC rates in the caller's user order.

    Users are ranked by ``|rho|^2`` (strongest first, stable on ties); user
    at rank ``r`` sees interference from the power of ranks ``0 .. r-1``,
    the weaker users' symbols having been cancelled.
    """
    g2 = np.abs(np.asarray(rho)) ** 2
    alphas = np.asarray(alphas, dtype=float)
    order = np.argsort(-g2, kind="stable")
    interference = np.concatenate(([0.0], np.cumsum(alphas[order])[:-1]))
    g_sorted = g2[order]
    sinr = g_sorted * alphas[order] * tx_power / (g_sorted * interference * tx_power + noise_power)
    rates = np.empty_like(g2)
    rates[order] = np.log2(1.0 + sinr)
    return rates


def noma_sum_rate(channels: ChannelSet, config: ScenarioConfig, mode: PhaseMode,
                  random_reflection=None, cache=None) -> SchemeResult:
    aided, rho = shared_reflection_gains(channels, config, mode, random_reflection, cache)
    alphas = allocate_noma_power(rho, config.noma_exponent)
    rates = noma_rates(rho, alphas, config.tx_power, channels.noise_power)
    return SchemeResult("noma", mode.label, float(rates.sum()), tuple(rates.tolist()),
                        aided_user=aided, alphas=tuple(alphas.tolist()))


SCHEME_FUNCS = {
    "tdma": tdma_sum_rate,
    "fdma": fdma_sum_rate,
    "noma": noma_sum_rate,
}
