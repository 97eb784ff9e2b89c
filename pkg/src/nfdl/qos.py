"""Quality-of-service metrics over simulation traces.

Four metrics, computed per monitor against the true leader's fault
timeline:

* mistake rate - reciprocal of the mean gap between consecutive mistake
  timestamps (zero when fewer than two mistakes exist);
* mistake duration - mean time from a wrong output to its correction;
* detection time - crash instant to the monitor's first output away from
  the crashed leader;
* recovery detection time - recovery instant to the first output back to
  the recovered leader.

A mistake is an output that departs from the true leader while that leader
is alive; once the leader actually crashes, departures are detections, not
mistakes.  Sample pools are summarized as quartiles (linear interpolation
between order statistics).

The module also houses the requirements-driven configurator: it picks the
largest send interval eta whose detection bound eta + alpha still meets the
requested maximum, with the safety margin alpha floored at a multiple of
the delay standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .protocol import ProtocolConfig
from .simnet import EventTrace, FaultEvent, Scenario


class InfeasibleRequirementsError(ValueError):
    """No (eta, alpha) pair can satisfy the stated requirements."""


@dataclass(frozen=True, slots=True)
class QosRequirements:
    """Application bounds: max detection time, min mistake recurrence,
    max mistake duration (all ms)."""

    t_d_max: int
    t_mr_min: int
    t_m_max: int

    def __post_init__(self):
        for name in ("t_d_max", "t_mr_min", "t_m_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True, slots=True)
class MistakeRecord:
    monitor: int
    mistake_at: int
    corrected_at: int | None

    def __post_init__(self):
        if self.corrected_at is not None and self.corrected_at < self.mistake_at:
            raise ValueError("correction cannot precede the mistake")


@dataclass(frozen=True, slots=True)
class GroundTruth:
    """The designated true leader and the half-open intervals it is up."""

    leader: int
    alive: tuple[tuple[int, int], ...]

    def alive_at(self, t: int) -> bool:
        return any(lo <= t < hi for lo, hi in self.alive)


def leader_alive_intervals(
    faults: tuple[FaultEvent, ...], leader: int, duration: int
) -> tuple[tuple[int, int], ...]:
    intervals = []
    up_since = 0
    for f in sorted(faults, key=lambda f: f.at):
        if f.process != leader:
            continue
        if f.kind == "crash":
            intervals.append((up_since, f.at))
            up_since = None
        else:
            up_since = f.at
    if up_since is not None:
        intervals.append((up_since, duration))
    return tuple(intervals)


def ground_truth(scenario: Scenario, leader: int | None = None) -> GroundTruth:
    if leader is None:
        leader = scenario.high_priority
    if leader is None and scenario.faults:
        leader = scenario.faults[0].process
    if leader is None:
        raise ValueError(
            "true leader is ambiguous; pass one explicitly or set high_priority"
        )
    return GroundTruth(
        leader=leader,
        alive=leader_alive_intervals(scenario.faults, leader, scenario.duration),
    )


def infer_true_leader(trace: EventTrace) -> int:
    """True leader for metric extraction.

    The pinned high-priority process when the scenario has one, else the
    fault-injected process, else the leader every surviving process agrees
    on at the end of a fail-free run.
    """
    sc = trace.scenario
    if sc.high_priority is not None:
        return sc.high_priority
    if sc.faults:
        return sc.faults[0].process
    finals = set(trace.final_outputs.values())
    if len(finals) != 1 or not isinstance(next(iter(finals)), int):
        raise ValueError(f"no unanimous final leader: {trace.final_outputs}")
    return next(iter(finals))


def output_timeline(trace: EventTrace, pid: int) -> list[tuple[int, int | None]]:
    """(time, leader) change points for one process, initial output None."""
    timeline: list[tuple[int, int | None]] = [(0, None)]
    for ev in trace.events:
        if ev.process == pid and ev.kind == "output_change" and ev.leader is not None:
            timeline.append((ev.time, ev.leader))
    return timeline


def extract_mistakes(
    trace: EventTrace, truth: GroundTruth
) -> dict[int, list[MistakeRecord]]:
    """Per-monitor mistake records against the true leader's liveness.

    A record opens when the monitor's output leaves the alive leader and
    closes when it returns; a crash of the leader closes the books on any
    open record without a correction timestamp.
    """
    crash_times = sorted(
        f.at for f in trace.scenario.faults
        if f.process == truth.leader and f.kind == "crash"
    )
    results: dict[int, list[MistakeRecord]] = {}
    for pid in range(trace.scenario.n_processes):
        if pid == truth.leader:
            continue
        # Merge leader crashes (rank 0) ahead of same-instant output changes.
        merged = [(t, 0, None) for t in crash_times]
        merged += [(t, 1, out) for t, out in output_timeline(trace, pid)[1:]]
        merged.sort(key=lambda item: (item[0], item[1]))
        records: list[MistakeRecord] = []
        current: int | None = None
        opened: int | None = None
        for t, rank, out in merged:
            if rank == 0:
                if opened is not None:
                    records.append(MistakeRecord(pid, opened, None))
                    opened = None
                continue
            if truth.alive_at(t):
                if current == truth.leader and out != truth.leader:
                    opened = t
                elif opened is not None and out == truth.leader:
                    records.append(MistakeRecord(pid, opened, t))
                    opened = None
            current = out
        if opened is not None:
            records.append(MistakeRecord(pid, opened, None))
        results[pid] = records
    return results


def mistake_rate(timestamps: list[int]) -> float:
    """Mistakes per ms: reciprocal of the mean gap between mistakes.

    Undefined for fewer than two mistakes; reported as the best case, zero.
    """
    for a, b in zip(timestamps, timestamps[1:]):
        if b <= a:
            raise ValueError("mistake timestamps must be strictly increasing")
    if len(timestamps) < 2:
        return 0.0
    return (len(timestamps) - 1) / (timestamps[-1] - timestamps[0])


def mistake_duration(records: list[MistakeRecord]) -> float | None:
    """Mean correction time in ms; None when there were no mistakes."""
    if not records:
        return None
    if any(r.corrected_at is None for r in records):
        raise ValueError("mistake_duration requires every record corrected")
    return sum(r.corrected_at - r.mistake_at for r in records) / len(records)


@dataclass(frozen=True, slots=True)
class SpeedSamples:
    """Per-monitor detection and recovery-detection samples, one slot per
    fault cycle; None marks a monitor that never reacted inside the trace."""

    detection: dict[int, list[int | None]]
    recovery: dict[int, list[int | None]]


def detection_times(
    trace: EventTrace, faults: tuple[FaultEvent, ...], leader: int | None = None
) -> SpeedSamples:
    if leader is None:
        if not faults:
            raise ValueError("no faults to measure against")
        leader = faults[0].process
    crashes = sorted(f.at for f in faults if f.process == leader and f.kind == "crash")
    recovers = sorted(f.at for f in faults if f.process == leader and f.kind == "recover")
    detection: dict[int, list[int | None]] = {}
    recovery: dict[int, list[int | None]] = {}
    for pid in range(trace.scenario.n_processes):
        if pid == leader:
            continue
        timeline = output_timeline(trace, pid)
        d_samples: list[int | None] = []
        for t_c in crashes:
            before: int | None = None
            for t, out in timeline:
                if t < t_c:
                    before = out
                else:
                    break
            if before != leader:
                d_samples.append(None)
                continue
            t_d = next(
                (t for t, out in timeline if t >= t_c and out != leader), None
            )
            d_samples.append(None if t_d is None else t_d - t_c)
        r_samples: list[int | None] = []
        for t_r in recovers:
            t_dr = next(
                (t for t, out in timeline if t >= t_r and out == leader), None
            )
            r_samples.append(None if t_dr is None else t_dr - t_r)
        detection[pid] = d_samples
        recovery[pid] = r_samples
    return SpeedSamples(detection=detection, recovery=recovery)


def quartiles(samples: list[float]) -> tuple[float, float, float]:
    """(q1, median, q3) by linear interpolation between order statistics."""
    if not samples:
        raise ValueError("quartiles of an empty sample set are undefined")
    q1, q2, q3 = np.percentile(np.asarray(samples, dtype=float), [25, 50, 75])
    return float(q1), float(q2), float(q3)


# ---------------------------------------------------------------------------
# Configurator


def configure(
    reqs: QosRequirements,
    network,
    margin_k: float = 8.0,
    window_n: int = 100,
) -> ProtocolConfig:
    """Derive (eta, alpha) from requirements and network behavior.

    Detection of a crashed leader is bounded by eta + alpha, so that sum is
    capped at t_d_max; alpha is floored at margin_k standard deviations of
    the message delay to absorb dispersion; among feasible pairs the largest
    eta wins, since fewer heartbeats cost less.
    """
    alpha_floor = math.ceil(margin_k * math.sqrt(network.delay_var))
    eta = reqs.t_d_max - alpha_floor
    if eta < 1:
        raise InfeasibleRequirementsError(
            f"t_d_max={reqs.t_d_max} ms cannot fit any positive eta on top of "
            f"the alpha floor {alpha_floor} ms "
            f"(= {margin_k} * sqrt(delay_var {network.delay_var}))"
        )
    return ProtocolConfig(eta=eta, alpha=alpha_floor, window_n=window_n)


def validate_config(
    eta: int, alpha: int, reqs: QosRequirements
) -> tuple[bool, list[str]]:
    """Audit a raw (eta, alpha) pair against the detection bound."""
    violations = []
    if eta <= 0:
        violations.append(f"eta must be positive (got {eta})")
    if alpha < 0:
        violations.append(f"alpha must be >= 0 (got {alpha})")
    if eta + alpha > reqs.t_d_max:
        violations.append(
            f"detection bound violated: eta + alpha = {eta + alpha} ms "
            f"> t_d_max = {reqs.t_d_max} ms"
        )
    return (not violations, violations)


# ---------------------------------------------------------------------------
# Reports


def sends_per_eta(trace: EventTrace, start: int, periods: int) -> float:
    """Send events per eta inside the grid-aligned window [start, start+periods*eta)."""
    eta = trace.scenario.config.eta
    end = start + periods * eta
    count = sum(1 for ev in trace.events if ev.kind == "send" and start <= ev.time < end)
    return count / periods


@dataclass
class MonitorMetrics:
    monitor: int
    mistake_times: list[int]
    rate: float
    durations: list[int]
    mean_duration: float | None
    uncorrected: int
    detection: list[int | None]
    recovery: list[int | None]

    @property
    def detection_present(self) -> list[int]:
        return [s for s in self.detection if s is not None]

    @property
    def recovery_present(self) -> list[int]:
        return [s for s in self.recovery if s is not None]


@dataclass
class MetricsReport:
    scenario: Scenario
    true_leader: int
    monitors: list[MonitorMetrics]
    sends_by_process: dict[int, int] = field(default_factory=dict)

    @property
    def total_sends(self) -> int:
        return sum(self.sends_by_process.values())


def build_report(trace: EventTrace, true_leader: int | None = None) -> MetricsReport:
    """Extract every metric a trace supports into one report.

    Pure function of (trace, faults): re-running it yields the same report.
    """
    if true_leader is None:
        true_leader = infer_true_leader(trace)
    truth = GroundTruth(
        leader=true_leader,
        alive=leader_alive_intervals(
            trace.scenario.faults, true_leader, trace.scenario.duration
        ),
    )
    mistakes = extract_mistakes(trace, truth)
    speed = detection_times(trace, trace.scenario.faults, true_leader) if any(
        f.process == true_leader for f in trace.scenario.faults
    ) else SpeedSamples(detection={}, recovery={})
    monitors = []
    for pid in sorted(mistakes):
        records = mistakes[pid]
        corrected = [r for r in records if r.corrected_at is not None]
        durations = [r.corrected_at - r.mistake_at for r in corrected]
        monitors.append(
            MonitorMetrics(
                monitor=pid,
                mistake_times=[r.mistake_at for r in records],
                rate=mistake_rate([r.mistake_at for r in records]),
                durations=durations,
                mean_duration=mistake_duration(corrected),
                uncorrected=len(records) - len(corrected),
                detection=speed.detection.get(pid, []),
                recovery=speed.recovery.get(pid, []),
            )
        )
    return MetricsReport(
        scenario=trace.scenario,
        true_leader=true_leader,
        monitors=monitors,
        sends_by_process=dict(sorted(trace.send_counts.items())),
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


METRICS_CSV_HEADER = "metric,monitor,n,missing,value,samples"
SUMMARY_CSV_HEADER = "metric,q1,median,q3,bound"


def metrics_csv_lines(report: MetricsReport) -> list[str]:
    lines = [METRICS_CSV_HEADER]
    for m in report.monitors:
        lines.append(
            f"mistake_rate_per_ms,{m.monitor},{len(m.mistake_times)},0,"
            f"{_fmt(m.rate)},{' '.join(map(str, m.mistake_times))}"
        )
        lines.append(
            f"mistake_duration_ms,{m.monitor},{len(m.durations)},{m.uncorrected},"
            f"{_fmt(m.mean_duration)},{' '.join(map(str, m.durations))}"
        )
        det = m.detection_present
        lines.append(
            f"detection_time_ms,{m.monitor},{len(det)},"
            f"{len(m.detection) - len(det)},"
            f"{_fmt(sum(det) / len(det) if det else None)},"
            f"{' '.join(map(str, det))}"
        )
        rec = m.recovery_present
        lines.append(
            f"recovery_detection_ms,{m.monitor},{len(rec)},"
            f"{len(m.recovery) - len(rec)},"
            f"{_fmt(sum(rec) / len(rec) if rec else None)},"
            f"{' '.join(map(str, rec))}"
        )
    return lines


def pooled_samples(reports: list[MetricsReport]) -> dict[str, list[float]]:
    """Sample pools in Table shape: one rate point per monitor-run, one mean
    duration point per monitor-run, raw detection/recovery samples."""
    pools: dict[str, list[float]] = {
        "mistake_rate_per_ms": [],
        "mistake_duration_ms": [],
        "detection_time_ms": [],
        "recovery_detection_ms": [],
    }
    for report in reports:
        for m in report.monitors:
            pools["mistake_rate_per_ms"].append(m.rate)
            if m.mean_duration is not None:
                pools["mistake_duration_ms"].append(m.mean_duration)
            pools["detection_time_ms"].extend(m.detection_present)
            pools["recovery_detection_ms"].extend(m.recovery_present)
    return pools


def summary_csv_lines(
    reports: list[MetricsReport], reqs: QosRequirements | None = None
) -> list[str]:
    bounds = {
        "mistake_rate_per_ms": (1.0 / reqs.t_mr_min) if reqs else None,
        "mistake_duration_ms": reqs.t_m_max if reqs else None,
        "detection_time_ms": reqs.t_d_max if reqs else None,
        "recovery_detection_ms": reqs.t_d_max if reqs else None,
    }
    lines = [SUMMARY_CSV_HEADER]
    for metric, samples in pooled_samples(reports).items():
        if samples:
            q1, q2, q3 = quartiles(samples)
            lines.append(
                f"{metric},{_fmt(q1)},{_fmt(q2)},{_fmt(q3)},{_fmt(bounds[metric])}"
            )
        else:
            lines.append(f"{metric},,,,{_fmt(bounds[metric])}")
    return lines


def text_report_lines(
    reports: list[MetricsReport], reqs: QosRequirements | None = None
) -> list[str]:
    lines = []
    for i, report in enumerate(reports):
        sc = report.scenario
        lines.append(
            f"run {i}: algorithm={sc.algorithm} procs={sc.n_processes} "
            f"eta={sc.config.eta} alpha={sc.config.alpha} seed={sc.seed} "
            f"duration={sc.duration} true_leader={report.true_leader}"
        )
        lines.append(f"  sends total={report.total_sends} "
                     f"by_process={report.sends_by_process}")
        for m in report.monitors:
            lines.append(
                f"  monitor {m.monitor}: mistakes={len(m.mistake_times)} "
                f"rate={_fmt(m.rate)}/ms mean_duration={_fmt(m.mean_duration)}ms "
                f"uncorrected={m.uncorrected} "
                f"t_d={m.detection_present} t_dr={m.recovery_present}"
            )
            if reqs is not None:
                verdict = "ok" if m.rate <= 1.0 / reqs.t_mr_min else "exceeded"
                lines.append(
                    f"    observed rate vs 1/t_mr_min "
                    f"({_fmt(1.0 / reqs.t_mr_min)}/ms): {verdict}"
                )
    lines.append("summary (quartiles by linear interpolation):")
    lines.extend("  " + line for line in summary_csv_lines(reports, reqs))
    return lines


def write_lines(lines: list[str], path: str | Path) -> None:
    Path(path).write_text("\n".join(lines) + "\n")
