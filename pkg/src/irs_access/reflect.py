"""Joint active beamforming and passive reflection for a single user.

A user is described by the triple ``(g, H, f)``: IRS->UE vector (N,),
BS->IRS matrix (N, N_b) and BS->UE vector (N_b,).  With reflection phases
``phi`` and unit-norm beamformer ``w`` the received amplitude is

    rho = (g^T diag(e^{j phi}) H + f^T) w

Alternating optimization maximizes ``|rho|`` over continuous phases
(closed-form co-phasing for fixed ``w``) and ``w`` (MRT for fixed phases).
The continuous optimum is then rounded onto the ``2**b``-level grid.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# enumeration budget for brute_force_discrete, in bits (L**N <= 2**20)
ORACLE_MAX_BITS = 20


class DegenerateChannelError(ArithmeticError):
    """Effective channel is identically zero, so no beam direction exists."""


@dataclass(frozen=True)
class ReflectionState:
    phases: np.ndarray
    mode: str = "continuous"        # continuous | discrete | random
    bits: int | None = None

    @property
    def label(self):
        return f"discrete_{self.bits}" if self.mode == "discrete" else self.mode

    @property
    def coefficients(self):
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class BeamSolution:
    w: np.ndarray
    reflection: ReflectionState
    effective_gain: complex
    history: tuple = field(default=(), compare=False)

    @property
    def objective(self):
        return abs(self.effective_gain)


def wrap_phase(theta):
    """Reduce to [0, 2pi).  ``np.mod`` can return exactly 2pi for tiny negatives."""
    out = np.mod(theta, TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def _check_dims(g, H, f):
    g = np.asarray(g)
    H = np.asarray(H)
    f = np.asarray(f)
    if H.ndim != 2 or g.shape != (H.shape[0],) or f.shape != (H.shape[1],):
        raise ValueError(
            f"dimension mismatch: g{g.shape}, H{H.shape}, f{f.shape}; "
            "expected g(N,), H(N, N_b), f(N_b,)")
    return g, H, f


def effective_channel(g, phases, H, f):
    """Row vector ``g^T diag(e^{j phases}) H + f^T`` of length N_b."""
    g, H, f = _check_dims(g, H, f)
    if isinstance(phases, ReflectionState):
        phases = phases.phases
    phases = np.asarray(phases, dtype=float)
    if phases.shape != g.shape:
        raise ValueError(f"phase vector has shape {phases.shape}, expected {g.shape}")
    return (g * np.exp(1j * phases)) @ H + f


def mrt(effective):
    """Unit-norm maximal-ratio beamformer ``effective^H / ||effective||``."""
    effective = np.asarray(effective)
    norm = np.linalg.norm(effective)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateChannelError("effective channel is zero")
    return effective.conj() / norm


def align_phases(g, H, f, w) -> ReflectionState:
    """Co-phase every reflected path with the direct path for a fixed ``w``.

    ``theta_n = arg(f^T w) - arg(g_n) - arg(h_n^T w)``, so the reflected sum
    and the direct term add in magnitude.  When ``f^T w`` is zero the
    reference phase is taken as 0.
    """
    g, H, f = _check_dims(g, H, f)
    direct = f @ w
    phi0 = np.angle(direct) if direct != 0 else 0.0
    theta = phi0 - np.angle(g) - np.angle(H @ w)
    return ReflectionState(wrap_phase(theta), "continuous")


def initial_beam(f, n_antennas):
    """MRT on the direct link, or the first canonical basis vector if ``f`` is zero."""
    f = np.asarray(f)
    if np.linalg.norm(f) > 0:
        return mrt(f)
    w = np.zeros(n_antennas, dtype=complex)
    w[0] = 1.0
    return w


def alternating_optimize(g, H, f, iterations=3) -> BeamSolution:
    """Alternate co-phasing and MRT for a fixed number of rounds.

    ``history`` records ``|rho|`` starting from zero phases with the initial
    beam, then after every half-step (phases, beam, phases, ...).  Each
    half-step maximizes the same objective over one block, so the sequence
    is non-decreasing.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    g, H, f = _check_dims(g, H, f)
    w = initial_beam(f, H.shape[1])
    history = [abs(effective_channel(g, np.zeros(g.shape), H, f) @ w)]
    for _ in range(iterations):
        refl = align_phases(g, H, f, w)
        eff = effective_channel(g, refl.phases, H, f)
        history.append(abs(eff @ w))
        w = mrt(eff)
        history.append(abs(eff @ w))
    rho = complex(eff @ w)
    return BeamSolution(w, refl, rho, tuple(history))


def quantize_phases(continuous: ReflectionState, bits) -> ReflectionState:
    """Mid-tread uniform quantizer onto ``{0, d, ..., (L-1) d}``, ``d = 2pi / 2**bits``.

    Level ``L`` (theta just below 2pi) wraps to level 0.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    theta = continuous.phases if isinstance(continuous, ReflectionState) else continuous
    L = 2 ** bits
    step = TWO_PI / L
    levels = np.floor(np.asarray(theta) / step + 0.5).astype(np.int64) % L
    return ReflectionState(levels * step, "discrete", bits)


def random_phases(n, rng: np.random.Generator) -> ReflectionState:
    if n < 1:
        raise ValueError("n must be >= 1")
    return ReflectionState(rng.uniform(0.0, TWO_PI, size=n), "random")


def beam_for_reflection(g, H, f, reflection: ReflectionState, w=None) -> BeamSolution:
    """Evaluate a fixed reflection, with MRT unless a beamformer ``w`` is supplied."""
    eff = effective_channel(g, reflection.phases, H, f)
    if w is None:
        w = mrt(eff)
    return BeamSolution(w, reflection, complex(eff @ w))


def brute_force_discrete(g, H, f, bits, chunk=1 << 14) -> BeamSolution:
    """Exhaustive search over all ``(2**bits)**N`` discrete reflections.

    MRT is applied to each candidate, so the score of a reflection is simply
    the norm of its effective channel.  Refuses when ``N * bits`` exceeds
    ``ORACLE_MAX_BITS``.
    """
    g, H, f = _check_dims(g, H, f)
    N = g.shape[0]
    if N * bits > ORACLE_MAX_BITS:
        raise ValueError(
            f"enumeration of 2**{N * bits} reflections exceeds the 2**{ORACLE_MAX_BITS} budget")
    L = 2 ** bits
    step = TWO_PI / L
    # reflected contribution of element n at level l: g_n e^{j l step} h_n^T
    unit = np.exp(1j * step * np.arange(L))
    rows = g[:, None] * H                                   # (N, N_b)
    best_val, best_idx = -1.0, None
    combos = itertools.product(range(L), repeat=N)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)),
                            dtype=np.int64)
        if block.size == 0:
            break
        block = block.reshape(-1, N)
        eff = (unit[block][:, :, None] * rows[None]).sum(axis=1) + f
        vals = np.linalg.norm(eff, axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_idx = float(vals[i]), block[i].copy()
    refl = ReflectionState(best_idx * step, "discrete", bits)
    return beam_for_reflection(g, H, f, refl)
