"""Deterministic discrete-event simulation of heartbeat protocols.

A single virtual clock in integer milliseconds drives every process; the
protocol machines only ever see the clock value handed to them.  Links drop
each message independently with a fixed probability and delay survivors by a
sampled, non-negative integer delay.  Every message gets its own random
sub-stream keyed by (seed, sender, seq, receiver), so traces are a pure
function of (scenario, seed) and editing one link or adding a process never
perturbs the samples on another link.

Fault injection is a scripted schedule of crash/recover events.  A crash
discards the process's volatile state and silences it; messages still in
flight toward it are dropped at their delivery instant.  Recovery re-runs
initialization against the preserved stable store with the advanced clock.

Simultaneous events are ordered by (time, process id, event kind rank) with
kind ranks crash < recover < timer < send < deliver, then by insertion
order.  Timer-before-deliver makes a heartbeat that lands exactly on the
freshness deadline count as late, matching the strict "arrived before the
deadline" reading of the monitors.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .protocol import (
    Heartbeat,
    NfdeMonitor,
    NfdlProcess,
    ProtocolConfig,
    Verdict,
)
from .stable_store import MemoryStore, load_or_create_zerotime, recover_seq

TRACE_FORMAT_VERSION = 1
SCENARIO_SCHEMA_VERSION = 1

ALGORITHMS = ("nfdl", "nfde-pair", "naive-reduction")
DELAY_DISTS = ("constant", "uniform", "normal")

# Uptime granted to a pinned high-priority leader at every initialization.
# Large enough that no honestly accumulated uptime ever competes.
PRIORITY_UPTIME_BOOST = 10**9


class ScenarioError(ValueError):
    """A scenario field failed validation; names the offending field."""

    def __init__(self, fld: str, msg: str):
        self.field = fld
        super().__init__(f"{fld}: {msg}")


class ScheduleError(ValueError):
    """Fault schedule asked for an impossible transition."""


@dataclass(frozen=True, slots=True)
class NetworkModel:
    """Per-link loss probability and delay law."""

    loss_prob: float = 0.0
    delay_mean: float = 5.0
    delay_var: float = 0.0
    delay_dist: str = "constant"

    def validate(self, fld: str = "network") -> None:
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ScenarioError(f"{fld}.loss_prob", "must be within [0, 1]")
        if self.delay_mean < 0:
            raise ScenarioError(f"{fld}.delay_mean", "must be >= 0")
        if self.delay_var < 0:
            raise ScenarioError(f"{fld}.delay_var", "must be >= 0")
        if self.delay_dist not in DELAY_DISTS:
            raise ScenarioError(
                f"{fld}.delay_dist", f"must be one of {DELAY_DISTS}"
            )
        if self.delay_dist == "constant" and self.delay_var != 0:
            raise ScenarioError(
                f"{fld}.delay_var", "constant delay requires zero variance"
            )
        if self.delay_dist == "uniform":
            half = math.sqrt(3.0 * self.delay_var)
            if self.delay_mean - half < 0:
                raise ScenarioError(
                    f"{fld}.delay_var",
                    "uniform delay support extends below zero; "
                    "reduce variance or raise the mean",
                )


@dataclass(frozen=True, slots=True)
class FaultEvent:
    at: int
    process: int
    kind: str  # "crash" | "recover"


@dataclass(frozen=True, slots=True)
class Scenario:
    """Everything a run depends on; traces are a function of this plus seed."""

    n_processes: int
    config: ProtocolConfig
    network: NetworkModel
    duration: int
    seed: int
    algorithm: str = "nfdl"
    faults: tuple[FaultEvent, ...] = ()
    high_priority: int | None = None

    def validate(self) -> None:
        if self.n_processes < 2:
            raise ScenarioError("n_processes", "must be >= 2")
        if self.algorithm not in ALGORITHMS:
            raise ScenarioError("algorithm", f"must be one of {ALGORITHMS}")
        if self.algorithm == "nfde-pair" and self.n_processes != 2:
            raise ScenarioError(
                "n_processes", "nfde-pair is a two-process arrangement"
            )
        self.network.validate()
        if self.duration < 1:
            raise ScenarioError("duration", "must be >= 1 ms")
        if self.high_priority is not None:
            if self.algorithm != "nfdl":
                raise ScenarioError(
                    "high_priority", "only meaningful for the nfdl algorithm"
                )
            if not 0 <= self.high_priority < self.n_processes:
                raise ScenarioError("high_priority", "not a valid process id")
        per_proc_down: dict[int, bool] = {}
        for i, f in enumerate(sorted(self.faults, key=lambda f: (f.at, f.process))):
            fld = f"faults[{i}]"
            if f.kind not in ("crash", "recover"):
                raise ScenarioError(f"{fld}.kind", "must be crash or recover")
            if not 0 <= f.process < self.n_processes:
                raise ScenarioError(f"{fld}.process", "not a valid process id")
            if not 0 <= f.at < self.duration:
                raise ScenarioError(
                    f"{fld}.at", "fault times must fall inside [0, duration)"
                )
            down = per_proc_down.get(f.process, False)
            if f.kind == "crash" and down:
                raise ScenarioError(f"{fld}", "process is already crashed")
            if f.kind == "recover" and not down:
                raise ScenarioError(f"{fld}", "recover without a prior crash")
            per_proc_down[f.process] = f.kind == "crash"

    def to_dict(self) -> dict:
        return {
            "version": SCENARIO_SCHEMA_VERSION,
            "n_processes": self.n_processes,
            "algorithm": self.algorithm,
            "config": {
                "eta_ms": self.config.eta,
                "alpha_ms": self.config.alpha,
                "window_n": self.config.window_n,
            },
            "network": {
                "loss_prob": self.network.loss_prob,
                "delay_mean_ms": self.network.delay_mean,
                "delay_var_ms2": self.network.delay_var,
                "delay_dist": self.network.delay_dist,
            },
            "faults": [
                {"at_ms": f.at, "process": f.process, "kind": f.kind}
                for f in self.faults
            ],
            "duration_ms": self.duration,
            "seed": self.seed,
            "high_priority": self.high_priority,
        }

    @staticmethod
    def from_dict(data: dict) -> "Scenario":
        def need(mapping, key, fld, types):
            if key not in mapping:
                raise ScenarioError(fld, "missing required field")
            value = mapping[key]
            if not isinstance(value, types) or isinstance(value, bool):
                raise ScenarioError(fld, f"expected {types}, got {value!r}")
            return value

        if not isinstance(data, dict):
            raise ScenarioError("scenario", "top level must be an object")
        version = data.get("version", SCENARIO_SCHEMA_VERSION)
        if version != SCENARIO_SCHEMA_VERSION:
            raise ScenarioError("version", f"unsupported schema version {version}")
        cfg = need(data, "config", "config", dict)
        net = need(data, "network", "network", dict)
        try:
            config = ProtocolConfig(
                eta=need(cfg, "eta_ms", "config.eta_ms", int),
                alpha=need(cfg, "alpha_ms", "config.alpha_ms", int),
                window_n=cfg.get("window_n", 100),
            )
        except ValueError as exc:
            raise ScenarioError("config", str(exc)) from exc
        network = NetworkModel(
            loss_prob=float(need(net, "loss_prob", "network.loss_prob", (int, float))),
            delay_mean=float(
                need(net, "delay_mean_ms", "network.delay_mean_ms", (int, float))
            ),
            delay_var=float(
                need(net, "delay_var_ms2", "network.delay_var_ms2", (int, float))
            ),
            delay_dist=need(net, "delay_dist", "network.delay_dist", str),
        )
        faults = []
        raw_faults = data.get("faults", [])
        if not isinstance(raw_faults, list):
            raise ScenarioError("faults", "must be a list")
        for i, rf in enumerate(raw_faults):
            fld = f"faults[{i}]"
            if not isinstance(rf, dict):
                raise ScenarioError(fld, "must be an object")
            faults.append(
                FaultEvent(
                    at=need(rf, "at_ms", f"{fld}.at_ms", int),
                    process=need(rf, "process", f"{fld}.process", int),
                    kind=need(rf, "kind", f"{fld}.kind", str),
                )
            )
        high_priority = data.get("high_priority")
        if high_priority is not None and not isinstance(high_priority, int):
            raise ScenarioError("high_priority", "must be a process id or null")
        scenario = Scenario(
            n_processes=need(data, "n_processes", "n_processes", int),
            config=config,
            network=network,
            duration=need(data, "duration_ms", "duration_ms", int),
            seed=need(data, "seed", "seed", int),
            algorithm=data.get("algorithm", "nfdl"),
            faults=tuple(faults),
            high_priority=high_priority,
        )
        scenario.validate()
        return scenario

    @staticmethod
    def load(path: str | Path) -> "Scenario":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ScenarioError("scenario", f"not valid JSON: {exc}") from exc
        return Scenario.from_dict(data)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


# ---------------------------------------------------------------------------
# Link sampling


def link_stream(seed: int, sender: int, seq: int, receiver: int) -> np.random.Generator:
    """Independent random stream for one message on one directed link."""
    ss = np.random.SeedSequence(
        entropy=seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(sender, seq, receiver)
    )
    return np.random.Generator(np.random.PCG64(ss))


def sample_delivery(
    send_time: int, network: NetworkModel, rng: np.random.Generator
) -> int | None:
    """Delivery instant for a message sent at ``send_time``, or None if lost.

    One loss draw, then one delay draw from the configured law, rounded
    half-up to whole milliseconds and floored at zero so delivery never
    precedes the send.
    """
    if rng.random() < network.loss_prob:
        return None
    if network.delay_dist == "constant":
        delay = network.delay_mean
    elif network.delay_dist == "uniform":
        half = math.sqrt(3.0 * network.delay_var)
        delay = rng.uniform(network.delay_mean - half, network.delay_mean + half)
    else:  # normal, truncated at zero by redrawing
        sigma = math.sqrt(network.delay_var)
        delay = rng.normal(network.delay_mean, sigma)
        for _ in range(100):
            if delay >= 0:
                break
            delay = rng.normal(network.delay_mean, sigma)
        else:
            delay = 0.0
    return send_time + max(0, math.floor(delay + 0.5))


# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True, slots=True)
class TraceEvent:
    time: int
    process: int
    kind: str
    sender: int | None = None
    seq: int | None = None
    uptime: int | None = None
    receiver: int | None = None
    leader: int | None = None
    verdict: str | None = None
    reason: str | None = None
    deadline: int | None = None

    def line(self) -> str:
        parts = []
        for key in ("sender", "seq", "uptime", "receiver", "leader", "verdict",
                    "reason", "deadline"):
            value = getattr(self, key)
            if value is not None:
                parts.append(f"{key}={value}")
        return f"{self.time}\t{self.process}\t{self.kind}\t{' '.join(parts)}"


@dataclass
class EventTrace:
    """Everything observable about one run: the event log plus counters."""

    scenario: Scenario
    events: list[TraceEvent] = field(default_factory=list)
    send_counts: dict[int, int] = field(default_factory=dict)
    link_sent: dict[tuple[int, int], int] = field(default_factory=dict)
    link_delivered: dict[tuple[int, int], int] = field(default_factory=dict)
    link_dropped: dict[tuple[int, int], int] = field(default_factory=dict)
    store_reads: dict[int, int] = field(default_factory=dict)
    store_writes: dict[int, int] = field(default_factory=dict)
    final_outputs: dict[int, int | str | None] = field(default_factory=dict)

    def lines(self) -> list[str]:
        header = [
            f"# trace v{TRACE_FORMAT_VERSION}",
            "# scenario " + json.dumps(self.scenario.to_dict(), sort_keys=True),
            "# columns time_ms\tprocess\tevent\tpayload",
        ]
        return header + [ev.line() for ev in self.events]

    def write(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")


# ---------------------------------------------------------------------------
# The simulator

_CRASH, _RECOVER, _TIMER, _TICK, _DELIVER = range(5)


class _NfdePairNode:
    """Two-process baseline: process 0 always sends, process 1 monitors."""

    def __init__(self, pid: int, config: ProtocolConfig, store, now: int):
        self.pid = pid
        self.config = config
        self.zerotime = load_or_create_zerotime(store, pid, now)
        self.monitor = NfdeMonitor(config) if pid == 1 else None

    def next_send_time(self, now: int) -> int:
        return self.zerotime + recover_seq(self.zerotime, now, self.config.eta) * self.config.eta

    def tick(self, now: int) -> Heartbeat | None:
        if self.pid != 0:
            return None
        seq = (now - self.zerotime) // self.config.eta
        return Heartbeat(seq=seq, sender=self.pid, uptime=0)


class _NaiveNode:
    """All-pairs reduction: everyone sends, everyone monitors everyone."""

    def __init__(self, pid: int, n: int, config: ProtocolConfig, store, now: int):
        self.pid = pid
        self.config = config
        self.zerotime = load_or_create_zerotime(store, pid, now)
        self.monitors = {p: NfdeMonitor(config) for p in range(n) if p != pid}

    def next_send_time(self, now: int) -> int:
        return self.zerotime + recover_seq(self.zerotime, now, self.config.eta) * self.config.eta

    def tick(self, now: int) -> Heartbeat:
        seq = (now - self.zerotime) // self.config.eta
        return Heartbeat(seq=seq, sender=self.pid, uptime=0)

    def leader(self) -> int:
        trusted = [self.pid]
        trusted += [p for p, m in self.monitors.items() if m.verdict is Verdict.TRUST]
        return min(trusted)


class Simulator:
    """Single-use event loop for one scenario.

    After :meth:`run` the per-process protocol objects stay inspectable via
    :attr:`nodes` (None for processes that ended the run crashed).
    """

    def __init__(self, scenario: Scenario, store=None):
        scenario.validate()
        self.scenario = scenario
        self.store = store if store is not None else MemoryStore()
        self.nodes: list[object | None] = [None] * scenario.n_processes
        self._incarnation = [0] * scenario.n_processes
        self._heap: list[tuple] = []
        self._pushes = 0
        self._armed: dict[tuple[int, int | None], int] = {}
        self.trace = EventTrace(scenario=scenario)
        self._ran = False
        for pid in range(scenario.n_processes):
            self._start(pid, 0)

    # -- plumbing ----------------------------------------------------------

    def _push(self, time: int, pid: int, rank: int, payload) -> None:
        heapq.heappush(self._heap, (time, pid, rank, self._pushes, payload))
        self._pushes += 1

    def _log(self, ev: TraceEvent) -> None:
        self.trace.events.append(ev)

    def _alive(self, pid: int) -> bool:
        return self.nodes[pid] is not None

    # -- run ---------------------------------------------------------------

    def run(self) -> EventTrace:
        if self._ran:
            raise RuntimeError("a Simulator instance runs exactly once")
        self._ran = True
        sc = self.scenario
        for f in sc.faults:
            rank = _CRASH if f.kind == "crash" else _RECOVER
            self._push(f.at, f.process, rank, f.kind)
        while self._heap:
            time, pid, rank, _, payload = heapq.heappop(self._heap)
            if time >= sc.duration:
                break
            if rank == _CRASH:
                self._on_crash(pid, time)
            elif rank == _RECOVER:
                self._on_recover(pid, time)
            elif rank == _TIMER:
                self._on_timer(pid, time, payload)
            elif rank == _TICK:
                self._on_tick(pid, time, payload)
            else:
                self._on_deliver(pid, time, payload)
        self.trace.store_reads = dict(self.store.reads)
        self.trace.store_writes = dict(self.store.writes)
        for pid in range(sc.n_processes):
            if self._alive(pid):
                self.trace.final_outputs[pid] = self._current_output(pid)
        return self.trace

    # -- process lifecycle -------------------------------------------------

    def _start(self, pid: int, now: int) -> None:
        sc = self.scenario
        if sc.algorithm == "nfdl":
            proc = NfdlProcess(pid, sc.config, self.store, now)
            if sc.high_priority == pid:
                proc.assume_leadership(PRIORITY_UPTIME_BOOST)
            node = proc
        elif sc.algorithm == "nfde-pair":
            node = _NfdePairNode(pid, sc.config, self.store, now)
        else:
            node = _NaiveNode(pid, sc.n_processes, sc.config, self.store, now)
        self.nodes[pid] = node
        self._push(node.next_send_time(now), pid, _TICK, self._incarnation[pid])
        self._sync_timers(pid, now)

    def _current_output(self, pid: int):
        node = self.nodes[pid]
        if isinstance(node, NfdlProcess):
            return node.current_leader()
        if isinstance(node, _NfdePairNode):
            return node.monitor.verdict.value if node.monitor else None
        return node.leader()

    def inject(self, fault: FaultEvent) -> None:
        """Apply one fault right now; used by run() via the schedule."""
        if fault.kind == "crash":
            self._on_crash(fault.process, fault.at)
        else:
            self._on_recover(fault.process, fault.at)

    def _on_crash(self, pid: int, now: int) -> None:
        if not self._alive(pid):
            raise ScheduleError(f"process {pid} is already crashed at t={now}")
        self.nodes[pid] = None
        self._incarnation[pid] += 1
        for key in [k for k in self._armed if k[0] == pid]:
            del self._armed[key]
        self._log(TraceEvent(now, pid, "crash"))

    def _on_recover(self, pid: int, now: int) -> None:
        if self._alive(pid):
            raise ScheduleError(f"process {pid} recovered without a crash at t={now}")
        self._incarnation[pid] += 1
        self._log(TraceEvent(now, pid, "recover"))
        self._start(pid, now)

    # -- timers ------------------------------------------------------------

    def _deadlines(self, pid: int) -> dict[int | None, int | None]:
        node = self.nodes[pid]
        if isinstance(node, NfdlProcess):
            return {None: node.deadline}
        if isinstance(node, _NfdePairNode):
            return {0: node.monitor.deadline} if node.monitor else {}
        return {peer: mon.deadline for peer, mon in node.monitors.items()}

    def _sync_timers(self, pid: int, now: int) -> None:
        inc = self._incarnation[pid]
        for key, deadline in self._deadlines(pid).items():
            akey = (pid, key)
            if deadline is None:
                self._armed.pop(akey, None)
                continue
            if self._armed.get(akey) == deadline:
                continue
            self._armed[akey] = deadline
            self._push(max(now, deadline), pid, _TIMER, (inc, key))

    def _on_timer(self, pid: int, now: int, payload) -> None:
        inc, key = payload
        if not self._alive(pid) or inc != self._incarnation[pid]:
            return
        node = self.nodes[pid]
        if isinstance(node, NfdlProcess):
            if node.deadline is None or now < node.deadline:
                return
            deadline = node.deadline
            out = node.on_timer_fire(now)
            self._log(TraceEvent(now, pid, "timer_fire", deadline=deadline))
            if out.changed:
                self._log(TraceEvent(now, pid, "output_change", leader=out.leader))
            self._sync_timers(pid, now)
            return
        monitor = node.monitor if isinstance(node, _NfdePairNode) else node.monitors[key]
        if monitor.deadline is None or now < monitor.deadline:
            return
        deadline = monitor.deadline
        before = self._current_output(pid)
        monitor.on_timeout(now)
        self._log(TraceEvent(now, pid, "timer_fire", deadline=deadline))
        self._log_output_change(pid, now, before)
        self._sync_timers(pid, now)

    def _log_output_change(self, pid: int, now: int, before) -> None:
        after = self._current_output(pid)
        if after == before:
            return
        if isinstance(after, str):
            self._log(TraceEvent(now, pid, "output_change", verdict=after))
        else:
            self._log(TraceEvent(now, pid, "output_change", leader=after))

    # -- sending and delivery ----------------------------------------------

    def _on_tick(self, pid: int, now: int, inc: int) -> None:
        if not self._alive(pid) or inc != self._incarnation[pid]:
            return
        node = self.nodes[pid]
        self._push(now + self.scenario.config.eta, pid, _TICK, inc)
        if isinstance(node, NfdlProcess):
            hb = node.next_heartbeat(now)
            if hb is None:
                return
            self.trace.send_counts[pid] = self.trace.send_counts.get(pid, 0) + 1
            self._log(TraceEvent(now, pid, "send", seq=hb.seq, uptime=hb.uptime))
            for receiver in range(self.scenario.n_processes):
                if receiver != pid:
                    self._transmit(hb, receiver, now)
            return
        hb = node.tick(now)
        if hb is None:
            return
        for receiver in range(self.scenario.n_processes):
            if receiver == pid:
                continue
            self.trace.send_counts[pid] = self.trace.send_counts.get(pid, 0) + 1
            self._log(
                TraceEvent(now, pid, "send", seq=hb.seq, uptime=hb.uptime,
                           receiver=receiver)
            )
            self._transmit(hb, receiver, now)

    def _transmit(self, hb: Heartbeat, receiver: int, now: int) -> None:
        link = (hb.sender, receiver)
        self.trace.link_sent[link] = self.trace.link_sent.get(link, 0) + 1
        rng = link_stream(self.scenario.seed, hb.sender, hb.seq, receiver)
        at = sample_delivery(now, self.scenario.network, rng)
        if at is None:
            self.trace.link_dropped[link] = self.trace.link_dropped.get(link, 0) + 1
            self._log(
                TraceEvent(now, receiver, "drop", sender=hb.sender, seq=hb.seq,
                           reason="loss")
            )
            return
        self._push(at, receiver, _DELIVER, hb)

    def _on_deliver(self, pid: int, now: int, hb: Heartbeat) -> None:
        link = (hb.sender, pid)
        if not self._alive(pid):
            self.trace.link_dropped[link] = self.trace.link_dropped.get(link, 0) + 1
            self._log(
                TraceEvent(now, pid, "drop", sender=hb.sender, seq=hb.seq,
                           reason="down")
            )
            return
        self.trace.link_delivered[link] = self.trace.link_delivered.get(link, 0) + 1
        self._log(
            TraceEvent(now, pid, "deliver", sender=hb.sender, seq=hb.seq,
                       uptime=hb.uptime)
        )
        node = self.nodes[pid]
        if isinstance(node, NfdlProcess):
            out = node.on_heartbeat(hb, now)
            if out.changed:
                self._log(TraceEvent(now, pid, "output_change", leader=out.leader))
        elif isinstance(node, _NfdePairNode):
            if node.monitor is not None:
                before = self._current_output(pid)
                node.monitor.on_heartbeat(hb.seq, now)
                self._log_output_change(pid, now, before)
        else:
            before = self._current_output(pid)
            node.monitors[hb.sender].on_heartbeat(hb.seq, now)
            self._log_output_change(pid, now, before)
        self._sync_timers(pid, now)


def run(scenario: Scenario) -> EventTrace:
    """Run a scenario to completion and return its trace."""
    return Simulator(scenario).run()
