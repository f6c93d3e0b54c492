"""Monte Carlo simulator for IRS-aided multi-user MIMO downlink.

Compares TDMA, FDMA and NOMA sum spectral efficiency when the surface uses
continuous, b-bit discrete or random phase shifts.
"""

__version__ = "0.1.0"

from .access import (PhaseMode, SchemeResult, allocate_noma_power, fdma_sum_rate,
                     noma_sum_rate, select_aided_user, tdma_sum_rate)
from .campaign import CampaignResult, DropRecord, empirical_percentile, run_campaign, run_drop
from .fading import ChannelSet, SteeringGeometry, assemble_channels
from .reflect import (BeamSolution, DegenerateChannelError, ReflectionState,
                      align_phases, alternating_optimize, brute_force_discrete,
                      effective_channel, mrt, quantize_phases, random_phases)
from .scenario import ConfigError, LinkGains, Placement, ScenarioConfig
