"""Write-once persistence of each process's first-startup timestamp.

A process writes its startup clock reading ("zerotime") to stable storage
exactly once, on its very first initialization.  Every later recovery reads
the value back and derives the next heartbeat label from elapsed time alone,
which keeps labels strictly increasing across crashes without persisting a
counter.  Stores therefore count reads and writes, so tests can assert the
one-write economy.

Two interchangeable backends: an in-memory map for simulations (with
injectable corruption) and a file-per-process directory layout for real use
(``<state_dir>/zerotime.<pid>``, the decimal timestamp plus a newline,
written atomically via rename).
"""

from __future__ import annotations

import os
from pathlib import Path


class StorageError(Exception):
    """Stable storage could not be read or written."""


class WriteOnceViolation(StorageError):
    """A second zerotime write was attempted for the same process."""


class ClockRewindError(ValueError):
    """The local clock reads earlier than the persisted zerotime."""


def recover_seq(zerotime: int, now: int, eta: int) -> int:
    """Next heartbeat label for a process whose schedule started at zerotime.

    Labels are pinned to the send schedule zerotime + label*eta, so the next
    one is floor((now - zerotime) / eta) + 1.  It is strictly greater than
    any label whose send instant has already passed, which is what keeps the
    emitted sequence increasing across a crash.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if now < zerotime:
        raise ClockRewindError(
            f"clock reads {now} but zerotime is {zerotime}; "
            "local clocks must keep increasing through crashes"
        )
    return (now - zerotime) // eta + 1


class MemoryStore:
    """In-memory zerotime store with the same write-once contract as disk.

    ``corrupt(pid)`` poisons a record so the next load raises StorageError,
    for exercising initialization failure paths without touching the
    filesystem.
    """

    def __init__(self):
        self._records: dict[int, int] = {}
        self._corrupt: set[int] = set()
        self.reads: dict[int, int] = {}
        self.writes: dict[int, int] = {}

    def load_zerotime(self, process: int) -> int | None:
        self.reads[process] = self.reads.get(process, 0) + 1
        if process in self._corrupt:
            raise StorageError(f"record for process {process} is corrupt")
        return self._records.get(process)

    def store_zerotime(self, process: int, t: int) -> None:
        if process in self._records:
            raise WriteOnceViolation(
                f"zerotime for process {process} already stored"
            )
        self._records[process] = t
        self.writes[process] = self.writes.get(process, 0) + 1

    def corrupt(self, process: int) -> None:
        self._corrupt.add(process)


class FileStore:
    """One ``zerotime.<pid>`` file per process under a state directory."""

    def __init__(self, state_dir: str | Path):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self.reads: dict[int, int] = {}
        self.writes: dict[int, int] = {}

    def _path(self, process: int) -> Path:
        return self.state_dir / f"zerotime.{process}"

    def load_zerotime(self, process: int) -> int | None:
        self.reads[process] = self.reads.get(process, 0) + 1
        path = self._path(process)
        try:
            raw = path.read_text()
        except FileNotFoundError:
            return None
        except OSError as exc:
            raise StorageError(f"cannot read {path}: {exc}") from exc
        line = raw.strip()
        if not raw.endswith("\n") or not line or not line.lstrip("-").isdigit():
            raise StorageError(f"corrupt zerotime record {path}: {raw!r}")
        return int(line)

    def store_zerotime(self, process: int, t: int) -> None:
        path = self._path(process)
        if path.exists():
            raise WriteOnceViolation(f"{path} already exists")
        tmp = path.with_suffix(path.suffix + ".tmp")
        try:
            tmp.write_text(f"{t}\n")
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageError(f"cannot write {path}: {exc}") from exc
        self.writes[process] = self.writes.get(process, 0) + 1


def load_or_create_zerotime(store, process: int, now: int) -> int:
    """Initialization-time zerotime fetch: read the record, write it once.

    Returns the persisted zerotime, creating it from ``now`` on the very
    first startup.  Storage failures propagate; a process that cannot reach
    its stable store must not join.
    """
    zerotime = store.load_zerotime(process)
    if zerotime is None:
        zerotime = now
        store.store_zerotime(process, zerotime)
    return zerotime
