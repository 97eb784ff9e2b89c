"""Command-line front end: run scenarios, compare message costs, configure.

Subcommands:

* ``run`` - simulate a scenario (from a file or inline flags), write trace
  files and metric CSVs, one repetition per seed offset.
* ``compare-cost`` - measure steady-state heartbeats per interval for the
  single-leader protocol and the all-pairs baseline against their analytic
  predictions.
* ``configure`` - derive (eta, alpha) from QoS requirements, or audit a
  given pair in validation mode.

Success exits 0; every failure path names its cause on stderr and exits
nonzero (2 for validation problems, 1 for environment errors).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import qos, simnet
from .protocol import ProtocolConfig, naive_reduction_cost
from .stable_store import FileStore, StorageError


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", type=Path, help="scenario JSON file (overrides inline flags)")
    p.add_argument("--procs", type=int, default=5, help="number of processes")
    p.add_argument("--eta-ms", type=int, default=330, help="heartbeat interval")
    p.add_argument("--alpha-ms", type=int, default=670, help="safety margin")
    p.add_argument("--window-n", type=int, default=100, help="estimator window size")
    p.add_argument("--loss-prob", type=float, default=0.0, help="per-message loss probability")
    p.add_argument("--delay-mean-ms", type=float, default=5.0, help="mean link delay")
    p.add_argument("--delay-var-ms2", type=float, default=0.0, help="link delay variance")
    p.add_argument(
        "--delay-dist", choices=simnet.DELAY_DISTS, default=None,
        help="delay law (default: constant when variance is 0, else normal)",
    )
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--duration-ms", type=int, default=60_000, help="simulated time")
    p.add_argument(
        "--algo", choices=("nfdl", "nfde-pair", "naive"), default="nfdl",
        help="protocol to simulate",
    )
    p.add_argument(
        "--high-priority", type=int, default=None, metavar="PID",
        help="pin PID as a boosted leader that is re-elected right after recovery",
    )


def _scenario_from_args(args) -> simnet.Scenario:
    if args.scenario is not None:
        if not args.scenario.exists():
            raise simnet.ScenarioError("scenario", f"no such file: {args.scenario}")
        return simnet.Scenario.load(args.scenario)
    dist = args.delay_dist
    if dist is None:
        dist = "constant" if args.delay_var_ms2 == 0 else "normal"
    scenario = simnet.Scenario(
        n_processes=args.procs,
        config=ProtocolConfig(args.eta_ms, args.alpha_ms, args.window_n),
        network=simnet.NetworkModel(
            loss_prob=args.loss_prob,
            delay_mean=args.delay_mean_ms,
            delay_var=args.delay_var_ms2,
            delay_dist=dist,
        ),
        duration=args.duration_ms,
        seed=args.seed,
        algorithm={"naive": "naive-reduction"}.get(args.algo, args.algo),
        high_priority=args.high_priority,
    )
    scenario.validate()
    return scenario


def cmd_run(args) -> int:
    scenario = _scenario_from_args(args)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    reqs = None
    if args.t_d_max_ms is not None:
        reqs = qos.QosRequirements(args.t_d_max_ms, args.t_mr_min_ms, args.t_m_max_ms)
    reports = []
    for rep in range(args.reps):
        rep_scenario = replace(scenario, seed=scenario.seed + rep)
        store = FileStore(args.state_dir) if args.state_dir else None
        trace = simnet.Simulator(rep_scenario, store=store).run()
        trace.write(out / f"trace_{rep:03d}.log")
        try:
            report = qos.build_report(trace)
        except ValueError:
            report = None  # no unanimous leader and nothing designated
        if report is not None:
            reports.append(report)
            if args.format in ("csv", "both"):
                qos.write_lines(
                    qos.metrics_csv_lines(report), out / f"metrics_{rep:03d}.csv"
                )
    if reports:
        if args.format in ("csv", "both"):
            qos.write_lines(qos.summary_csv_lines(reports, reqs), out / "summary.csv")
        if args.format in ("txt", "both"):
            qos.write_lines(qos.text_report_lines(reports, reqs), out / "report.txt")
    print(f"wrote {args.reps} trace(s) and {len(reports)} metric report(s) to {out}")
    return 0


def measure_cost(
    n: int, duration: int, config: ProtocolConfig, seed: int = 0
) -> list[dict]:
    """Steady-state sends per eta for both algorithms, with predictions."""
    if n < 2:
        raise ValueError(f"need at least 2 processes, got {n}")
    network = simnet.NetworkModel(
        loss_prob=0.0, delay_mean=5.0, delay_var=0.0, delay_dist="constant"
    )
    settle = 3 * (config.eta + config.alpha)
    start = -(-settle // config.eta) * config.eta  # round up to the send grid
    periods = (duration - start) // config.eta - 1
    if periods < 1:
        raise ValueError(
            f"duration {duration} ms is too short to reach steady state; "
            f"need more than {start + 2 * config.eta} ms"
        )
    rows = []
    for algorithm, predicted in (
        ("nfdl", 1),
        ("naive-reduction", naive_reduction_cost(n)),
    ):
        scenario = simnet.Scenario(
            n_processes=n,
            config=config,
            network=network,
            duration=duration,
            seed=seed,
            algorithm=algorithm,
        )
        trace = simnet.run(scenario)
        measured = qos.sends_per_eta(trace, start, periods)
        rows.append(
            {
                "algorithm": algorithm,
                "procs": n,
                "predicted_per_eta": predicted,
                "measured_per_eta": measured,
            }
        )
    return rows


def cmd_compare_cost(args) -> int:
    config = ProtocolConfig(args.eta_ms, args.alpha_ms, args.window_n)
    rows = measure_cost(args.procs, args.duration_ms, config, args.seed)
    print(f"{'algorithm':<18}{'procs':>6}{'predicted/eta':>15}{'measured/eta':>14}")
    for row in rows:
        print(
            f"{row['algorithm']:<18}{row['procs']:>6}"
            f"{row['predicted_per_eta']:>15}{row['measured_per_eta']:>14g}"
        )
    return 0


def cmd_configure(args) -> int:
    reqs = qos.QosRequirements(args.t_d_max_ms, args.t_mr_min_ms, args.t_m_max_ms)
    network = simnet.NetworkModel(
        loss_prob=args.loss_prob,
        delay_mean=args.delay_mean_ms,
        delay_var=args.delay_var_ms2,
        delay_dist="normal" if args.delay_var_ms2 else "constant",
    )
    if (args.eta_ms is None) != (args.alpha_ms is None):
        print("error: validation mode needs both --eta-ms and --alpha-ms", file=sys.stderr)
        return 2
    if args.eta_ms is not None:
        eta, alpha = args.eta_ms, args.alpha_ms
        print(f"validating eta_ms={eta} alpha_ms={alpha}")
    else:
        config = qos.configure(reqs, network, margin_k=args.margin_k)
        eta, alpha = config.eta, config.alpha
        print(f"eta_ms={eta} alpha_ms={alpha}")
    ok, violations = qos.validate_config(eta, alpha, reqs)
    print(f"constraint audit vs t_d_max={reqs.t_d_max} ms:")
    if ok:
        print(f"  ok: eta + alpha = {eta + alpha} ms <= {reqs.t_d_max} ms, eta > 0")
        return 0
    for v in violations:
        print(f"  violated: {v}")
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfdl",
        description="leader-election simulator and QoS measurement suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write artifacts")
    _add_scenario_flags(p_run)
    p_run.add_argument("--out", type=Path, required=True, help="output directory")
    p_run.add_argument("--reps", type=int, default=1, help="repetitions (seed = base + i)")
    p_run.add_argument(
        "--format", choices=("csv", "txt", "both"), default="both",
        help="which report formats to write next to the traces",
    )
    p_run.add_argument(
        "--state-dir", type=Path, default=None,
        help="persist zerotime records on disk instead of in memory",
    )
    p_run.add_argument("--t-d-max-ms", type=int, default=None,
                       help="detection bound for report bound columns")
    p_run.add_argument("--t-mr-min-ms", type=int, default=3_600_000)
    p_run.add_argument("--t-m-max-ms", type=int, default=1000)
    p_run.set_defaults(func=cmd_run)

    p_cost = sub.add_parser(
        "compare-cost", help="measured vs predicted heartbeats per eta"
    )
    p_cost.add_argument("--procs", type=int, required=True)
    p_cost.add_argument("--duration-ms", type=int, default=30_000)
    p_cost.add_argument("--eta-ms", type=int, default=330)
    p_cost.add_argument("--alpha-ms", type=int, default=670)
    p_cost.add_argument("--window-n", type=int, default=100)
    p_cost.add_argument("--seed", type=int, default=0)
    p_cost.set_defaults(func=cmd_compare_cost)

    p_cfg = sub.add_parser(
        "configure", help="derive (eta, alpha) from requirements, or audit a pair"
    )
    p_cfg.add_argument("--t-d-max-ms", type=int, default=1000)
    p_cfg.add_argument("--t-mr-min-ms", type=int, default=3_600_000)
    p_cfg.add_argument("--t-m-max-ms", type=int, default=1000)
    p_cfg.add_argument("--loss-prob", type=float, default=0.0)
    p_cfg.add_argument("--delay-mean-ms", type=float, default=5.0)
    p_cfg.add_argument("--delay-var-ms2", type=float, default=0.0)
    p_cfg.add_argument("--margin-k", type=float, default=8.0,
                       help="alpha floor in delay standard deviations")
    p_cfg.add_argument("--eta-ms", type=int, default=None,
                       help="validation mode: audit this eta instead of deriving")
    p_cfg.add_argument("--alpha-ms", type=int, default=None,
                       help="validation mode: audit this alpha instead of deriving")
    p_cfg.set_defaults(func=cmd_configure)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (simnet.ScenarioError, qos.InfeasibleRequirementsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, StorageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
