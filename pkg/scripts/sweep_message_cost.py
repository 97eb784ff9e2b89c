#!/usr/bin/env python3
"""Steady-state heartbeat cost versus cluster size, measured and predicted.

Sweeps the process count and runs both the single-leader protocol (one
broadcast per interval regardless of size) and the all-pairs reduction
(N^2 - N unicasts per interval), writing a CSV alongside the printed table.
"""

import argparse
from pathlib import Path

from nfdl.cli import measure_cost
from nfdl.protocol import ProtocolConfig


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--min-procs", type=int, default=2)
    parser.add_argument("--max-procs", type=int, default=10)
    parser.add_argument("--duration-ms", type=int, default=15_000)
    parser.add_argument("--eta-ms", type=int, default=330)
    parser.add_argument("--alpha-ms", type=int, default=670)
    parser.add_argument("--out", type=Path, default=Path("out/message_cost.csv"))
    args = parser.parse_args()

    config = ProtocolConfig(args.eta_ms, args.alpha_ms)
    lines = ["algorithm,procs,predicted_per_eta,measured_per_eta"]
    print(f"{'algorithm':<18}{'procs':>6}{'predicted/eta':>15}{'measured/eta':>14}")
    for n in range(args.min_procs, args.max_procs + 1):
        for row in measure_cost(n, args.duration_ms, config):
            lines.append(
                f"{row['algorithm']},{row['procs']},"
                f"{row['predicted_per_eta']},{row['measured_per_eta']:g}"
            )
            print(
                f"{row['algorithm']:<18}{row['procs']:>6}"
                f"{row['predicted_per_eta']:>15}{row['measured_per_eta']:>14g}"
            )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text("\n".join(lines) + "\n")
    print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
