"""Leader election and failure detection state machines.

Three event-driven machines, all pure transitions on explicit state with an
explicit clock argument (no internal timers, no wall clock):

* ``NfdlProcess`` - single-leader election for crash-recovery processes.
  Only the process that currently believes itself leader broadcasts
  heartbeats; everyone else monitors the leader's heartbeat stream against a
  freshness deadline and self-elects when it expires.  Leadership challenges
  are settled by priority: higher uptime wins, process id breaks ties.
* ``NfdeMonitor`` - the classic two-valued trust/suspect monitor of a single
  remote heartbeat source, used standalone as a baseline and internally by
  the all-pairs reduction.
* ``naive_reduction_cost`` - the message bill of building leader election
  from all-pairs monitoring, kept as the analytic cross-check for the
  simulator's counters.

Drivers (the simulator, or any transport adapter) deliver heartbeats, fire
timers at the advertised deadlines, and call for a heartbeat at every send
instant of the process's schedule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .estimator import ArrivalWindow, freshness_point
from .stable_store import ClockRewindError, load_or_create_zerotime, recover_seq


@dataclass(frozen=True, slots=True)
class Heartbeat:
    """The only wire message: schedule label, sender id, sender uptime."""

    seq: int
    sender: int
    uptime: int

    def __post_init__(self):
        if self.seq < 1:
            raise ValueError(f"heartbeat seq must be >= 1, got {self.seq}")
        if self.uptime < 0:
            raise ValueError(f"uptime must be >= 0, got {self.uptime}")


@dataclass(frozen=True, slots=True)
class ProtocolConfig:
    """Timing parameters: send interval eta, safety margin alpha (both ms),
    and the estimator window size."""

    eta: int
    alpha: int
    window_n: int = 100

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.window_n < 1:
            raise ValueError(f"window_n must be >= 1, got {self.window_n}")


@dataclass(frozen=True, slots=True)
class Output:
    """Locally elected leader and whether this event changed it."""

    leader: int | None
    changed: bool


class Verdict(enum.Enum):
    TRUST = "trust"
    SUSPECT = "suspect"


def priority_greater(a: tuple[int, int], b: tuple[int, int] | None) -> bool:
    """True iff priority (uptime, pid) ``a`` strictly beats ``b``.

    An unknown incumbent (None) loses to everything, so the first heartbeat
    seen before any election is always adopted.
    """
    if b is None:
        return True
    return a > b


def naive_reduction_cost(n_processes: int) -> int:
    """Heartbeats per eta for the all-pairs reduction: one per directed link."""
    if n_processes < 2:
        raise ValueError(f"need at least 2 processes, got {n_processes}")
    return n_processes * n_processes - n_processes


class NfdlProcess:
    """One process's election state machine.

    State is mutated in place; every transition returns an :class:`Output`
    reporting the current leader and whether this event changed it.  The
    driver contract:

    * deliver each received heartbeat via :meth:`on_heartbeat`;
    * whenever :attr:`deadline` changes, arrange a timer and call
      :meth:`on_timer_fire` when it expires (stale timers are no-ops);
    * call :meth:`next_heartbeat` at every send instant of the process's
      schedule (``zerotime + i*eta``); non-leaders return None.

    Initialization loads the persisted zerotime (writing it exactly once on
    first startup) and arms a one-shot grace deadline of eta + alpha: a
    process that hears no leader by then elects itself.  An active leader's
    next broadcast always beats that deadline, so recoveries do not disturb
    a running system.
    """

    def __init__(self, self_id: int, config: ProtocolConfig, store, now: int):
        self.self_id = self_id
        self.config = config
        self.zerotime = load_or_create_zerotime(store, self_id, now)
        if now < self.zerotime:
            raise ClockRewindError(
                f"initialization clock {now} is earlier than stored zerotime "
                f"{self.zerotime}"
            )
        self.leader: int | None = None
        self.uptime = 0
        # Priority carried by the most recent heartbeat this process sent;
        # None until it has broadcast at least once.  Leadership defends
        # itself with this advertised value, not the live counter, so two
        # processes observing each other compare like for like.
        self.last_sent_uptime: int | None = None
        self.leader_uptime: int | None = None
        self.leader_seq = -1
        self.window = ArrivalWindow(config.window_n)
        self.deadline: int | None = now + config.eta + config.alpha

    def current_leader(self) -> int | None:
        return self.leader

    def next_send_time(self, now: int) -> int:
        """First send instant of this process's schedule strictly after now."""
        label = recover_seq(self.zerotime, now, self.config.eta)
        return self.zerotime + label * self.config.eta

    def _own_priority(self) -> tuple[int, int]:
        advertised = (
            self.last_sent_uptime if self.last_sent_uptime is not None else self.uptime
        )
        return (advertised, self.self_id)

    def _incumbent_priority(self) -> tuple[int, int] | None:
        if self.leader is None:
            return None
        if self.leader == self.self_id:
            return self._own_priority()
        # leader_uptime is cached from the most recent accepted heartbeat.
        assert self.leader_uptime is not None
        return (self.leader_uptime, self.leader)

    def on_heartbeat(self, hb: Heartbeat, now: int) -> Output:
        """Handle a delivered heartbeat.

        From the current leader: fresh labels advance the freshness deadline
        (stale ones change nothing).  From anyone else: the sender takes over
        iff its (uptime, pid) priority strictly beats the incumbent's, which
        resets the arrival window and re-arms the deadline from this first
        arrival.
        """
        if hb.sender == self.self_id:
            return Output(self.leader, False)
        if hb.sender == self.leader:
            if hb.seq > self.leader_seq:
                self.leader_seq = hb.seq
                self.leader_uptime = hb.uptime
                self.window.record(hb.seq, now)
                ea = self.window.expected_arrival(self.config.eta, hb.seq + 1)
                self.deadline = freshness_point(ea, self.config.alpha)
            return Output(self.leader, False)
        if priority_greater((hb.uptime, hb.sender), self._incumbent_priority()):
            self.leader = hb.sender
            self.leader_uptime = hb.uptime
            self.leader_seq = hb.seq
            self.window = ArrivalWindow(self.config.window_n)
            self.window.record(hb.seq, now)
            ea = self.window.expected_arrival(self.config.eta, hb.seq + 1)
            self.deadline = freshness_point(ea, self.config.alpha)
            return Output(self.leader, True)
        return Output(self.leader, False)

    def on_timer_fire(self, now: int) -> Output:
        """Freshness (or grace) deadline expiry: claim leadership.

        A timer that fires before the current deadline is stale (a fresh
        heartbeat advanced it) and is reported as unchanged.
        """
        if self.deadline is None or now < self.deadline:
            return Output(self.leader, False)
        changed = self.leader != self.self_id
        self.leader = self.self_id
        self.leader_uptime = None
        self.leader_seq = -1
        self.deadline = None
        return Output(self.leader, changed)

    def next_heartbeat(self, now: int) -> Heartbeat | None:
        """Heartbeat for the send instant ``now``, or None when not leader.

        The label is derived from the schedule, not a stored counter, so it
        is strictly increasing across the process's whole lifetime, crashes
        included.  The uptime counter advances after each send.
        """
        if self.leader != self.self_id:
            return None
        seq = (now - self.zerotime) // self.config.eta
        hb = Heartbeat(seq=seq, sender=self.self_id, uptime=self.uptime)
        self.last_sent_uptime = self.uptime
        self.uptime += 1
        return hb

    def assume_leadership(self, uptime: int = 0) -> None:
        """Measurement harness hook: install this process as leader outright.

        Skips the election discipline (grace wait and priority contest), so
        it must never be called from a protocol driver.  The experiment
        harness uses it to pin a designated high-priority leader that gets
        re-elected immediately after recovering.
        """
        self.leader = self.self_id
        self.uptime = uptime
        self.last_sent_uptime = None
        self.leader_uptime = None
        self.leader_seq = -1
        self.deadline = None


class NfdeMonitor:
    """Trust/suspect monitor of a single heartbeat source.

    Starts suspecting (nothing has been heard).  A fresh heartbeat re-arms
    the freshness deadline and restores trust iff it arrived strictly before
    its own deadline; expiry of the deadline flips back to suspect.
    """

    def __init__(self, config: ProtocolConfig):
        self.config = config
        self.window = ArrivalWindow(config.window_n)
        self.last_seq = -1
        self.deadline: int | None = None
        self.verdict = Verdict.SUSPECT

    def on_heartbeat(self, seq: int, now: int) -> Verdict:
        if seq > self.last_seq:
            self.last_seq = seq
            self.window.record(seq, now)
            ea = self.window.expected_arrival(self.config.eta, seq + 1)
            self.deadline = freshness_point(ea, self.config.alpha)
            if now < self.deadline:
                self.verdict = Verdict.TRUST
        return self.verdict

    def on_timeout(self, now: int) -> Verdict:
        if self.deadline is not None and now >= self.deadline:
            self.verdict = Verdict.SUSPECT
            self.deadline = None
        return self.verdict
