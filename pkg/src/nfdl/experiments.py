"""Canned measurement scenarios.

Two experiment families, mirroring how the detector's QoS is assessed:

* accuracy - fail-free hour-long runs on a lossy, jittery network; every
  output flip away from the stable leader is a mistake, so the runs feed
  the mistake-rate and mistake-duration metrics.
* speed - crash/recover cycles of a pinned high-priority leader (it gets
  re-elected immediately after every recovery), feeding the detection and
  recovery-detection metrics.

Crash instants in the speed schedule sweep the whole heartbeat interval in
evenly spaced offsets from the send grid: detection latency depends on how
far past the last heartbeat the crash lands, so sweeping the phase probes
the full latency range instead of sampling one lucky point.
"""

from __future__ import annotations

from .protocol import ProtocolConfig
from .simnet import FaultEvent, NetworkModel, Scenario

# Operating point used throughout the measurement suite.
ETA_MS = 330
ALPHA_MS = 670
LOSS_PROB = 0.0175917
DELAY_MEAN_MS = 5.0
DELAY_VAR_MS2 = 25.3356

REQUIREMENTS = {"t_d_max": 1000, "t_mr_min": 3_600_000, "t_m_max": 1000}


def measured_network() -> NetworkModel:
    return NetworkModel(
        loss_prob=LOSS_PROB,
        delay_mean=DELAY_MEAN_MS,
        delay_var=DELAY_VAR_MS2,
        delay_dist="normal",
    )


def accuracy_scenario(seed: int, duration: int = 3_600_000, n: int = 5) -> Scenario:
    """Fail-free run; the naturally elected leader stays up throughout."""
    return Scenario(
        n_processes=n,
        config=ProtocolConfig(ETA_MS, ALPHA_MS),
        network=measured_network(),
        duration=duration,
        seed=seed,
        algorithm="nfdl",
    )


def speed_scenario(
    seed: int,
    cycles: int = 10,
    n: int = 5,
    leader: int = 2,
    downtime: int = 60_000,
    spacing: int = 60_000,
) -> Scenario:
    """Crash/recover cycles of a pinned leader, crash phases sweeping eta."""
    eta = ETA_MS
    faults = []
    at = 10_000
    for k in range(cycles):
        base = (at // eta) * eta
        phase = (k + 1) * eta // cycles
        crash = base + phase
        faults.append(FaultEvent(crash, leader, "crash"))
        faults.append(FaultEvent(crash + downtime, leader, "recover"))
        at = crash + downtime + spacing
    duration = at + 10_000
    return Scenario(
        n_processes=n,
        config=ProtocolConfig(ETA_MS, ALPHA_MS),
        network=measured_network(),
        duration=duration,
        seed=seed,
        algorithm="nfdl",
        faults=tuple(faults),
        high_priority=leader,
    )
