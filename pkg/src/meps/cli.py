"""Command line entry point: ``meps run|audit|oracle|history-export``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import audit, harness, history, oracle
from .envs.maintenance import CAUSES, COMPONENTS, FIXES, SYMPTOMS
from .table import BiasKind

log = logging.getLogger("meps")


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config, seed=args.seed, out=args.out)
    if args.assert_bounds:
        cfg["assert_bounds"] = True
    result = harness.run(cfg, jobs=args.jobs)
    log.info("wrote %s", result.out)
    print(result.out)
    return 0


def audit_config(cfg: dict, sample: int = 200) -> list[audit.BoundReport]:
    """Parameter and walk-length reports for the agent a config describes.

    Walk lengths are observed over ``sample`` rounds (or episode steps) of
    ensemble member 0.
    """
    reports = []
    rng_a, rng_e = harness.agent_streams(cfg["seed"], 0)
    agent = harness.build_agent(cfg, rng_a)
    maint = cfg["environment"]["id"] == "maintenance"
    table = getattr(agent, "table", None)
    if not hasattr(table, "topology"):
        n = int(table.q.size) if table is not None else sum(int(t.q.size) for t in agent.agent.tables)
        reports.append(audit.BoundReport.check("Q-table entries", n, n, "exact"))
        return reports
    clips = table.clips
    io_set = sorted(table.io_set)
    if maint:
        sizes = (len(SYMPTOMS), len(COMPONENTS), len(CAUSES), len(FIXES))
        reports.append(audit.BoundReport.check("N_l formula", audit.nl_formula(cfg["agent"]["cutoffs"], sizes),
                                               len(table), "exact"))
        bias = BiasKind.DP
    else:
        bias = BiasKind(cfg["agent"]["bias"])
    try:
        reports.append(audit.BoundReport.check("parameter bound", audit.param_bound(io_set, len(clips)), len(table)))
    except audit.BoundOverflow:
        # the bound itself is astronomically loose here; still trivially satisfied
        reports.append(audit.BoundReport.check("parameter bound (> 2^63)", audit.UNBOUNDED, len(table)))
    env = harness.build_env(cfg, rng_e)
    longest = 0
    for _ in range(sample):
        obs = env.reset()
        choice = agent.act(obs)
        longest = max(longest, len(agent.last))
        if choice is not None:
            rewards = env.step(choice)[0]
            agent.learn(rewards)
    for name, value in audit.walk_length_bounds(bias, clips.layer_sizes(), io_set).items():
        reports.append(audit.BoundReport.check(f"walk length ({name})", value, longest))
    return reports


def _cmd_audit(args) -> int:
    cfg = harness.load_config(args.config)
    reports = audit_config(cfg, args.sample)
    print(audit.reports_to_json(reports))
    return 0 if all(r.satisfied for r in reports) else 1


def _cmd_oracle(args) -> int:
    devs = oracle.run_trials(args.trials, args.seed)
    out = {getattr(b, "value", b): d for b, d in devs.items()}
    print(json.dumps(out, indent=2))
    return 0 if max(out.values()) <= args.tol else 1


def _cmd_history_export(args) -> int:
    run_dir = Path(args.rundir)
    files = sorted((run_dir / "history").glob("agent_*.jsonl"))
    files = [f for f in files if not f.name.endswith(".glow.jsonl")]
    if not files:
        print(f"error: no history files under {run_dir / 'history'} (run with \"history\": true)", file=sys.stderr)
        return 2
    dest = Path(args.out) if args.out else run_dir / "interchange"
    dest.mkdir(parents=True, exist_ok=True)
    for f in files:
        doc = history.to_interchange(history.load(f))
        (dest / f"{f.stem}.json").write_text(json.dumps(doc))
    print(dest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="meps")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="train an ensemble and write learning curves")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--out")
    r.add_argument("--assert-bounds", action="store_true", help="check every walk against its analytic bound")
    r.set_defaults(fn=_cmd_run)

    a = sub.add_parser("audit", help="parameter counts and walk-length bounds")
    a.add_argument("--config", required=True)
    a.add_argument("--sample", type=int, default=200, help="rounds used to observe walk lengths")
    a.set_defaults(fn=_cmd_audit)

    o = sub.add_parser("oracle", help="compare many-body and induced standard step distributions")
    o.add_argument("--trials", type=int, default=200)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--tol", type=float, default=1e-12)
    o.set_defaults(fn=_cmd_oracle)

    h = sub.add_parser("history-export", help="convert recorded histories to hypergraph interchange JSON")
    h.add_argument("rundir")
    h.add_argument("--out")
    h.set_defaults(fn=_cmd_history_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (harness.ConfigError, audit.BoundOverflow, oracle.OracleRefusal, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
