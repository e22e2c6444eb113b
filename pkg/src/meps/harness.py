"""Ensemble experiments: config validation, seeding, running and aggregation."""
from __future__ import annotations

import copy
import hashlib
import json
import multiprocessing as mp
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import agents as ag
from . import history
from .envs.deception import DeceptionEnv
from .envs.distraction import DistractionEnv
from .envs.maintenance import A_MAX_INDUCTIVE, A_MAX_UNRESTRICTED, MaintenanceEnv, load_scenarios
from .learning import LearningParams
from .probability import rule_from_json
from .table import BiasKind

INVASION = {"distraction": DistractionEnv, "deception": DeceptionEnv}
ENVIRONMENTS = (*INVASION, "maintenance")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "ensemble": 50,
    "window": 100,
    "out": "runs/out",
    "assert_bounds": False,
    "history": False,
}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# config


def _need(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _num(d: dict, key: str, path: str, lo=None, hi=None, integer=False, default=None):
    if key not in d:
        _need(default is not None, f"{path}.{key}", "missing")
        return default
    v = d[key]
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    _need(ok and not isinstance(v, bool), f"{path}.{key}", "must be an integer" if integer else "must be a number")
    _need(lo is None or v >= lo, f"{path}.{key}", f"must be >= {lo}")
    _need(hi is None or v <= hi, f"{path}.{key}", f"must be <= {hi}")
    return v


def validate_config(raw: dict) -> dict:
    """Fill defaults and check every field; errors name the offending path."""
    _need(isinstance(raw, dict), "$", "config must be a JSON object")
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(raw))
    env = cfg.get("environment")
    _need(isinstance(env, dict), "environment", "must be an object with an 'id'")
    _need(env.get("id") in ENVIRONMENTS, "environment.id", f"must be one of {list(ENVIRONMENTS)}")
    env.setdefault("params", {})
    agent = cfg.get("agent")
    _need(isinstance(agent, dict), "agent", "must be an object")
    _need(agent.get("kind") in ("meps", "q"), "agent.kind", "must be 'meps' or 'q'")
    maint = env["id"] == "maintenance"

    _num(cfg, "seed", "$", lo=0, integer=True)
    _num(cfg, "ensemble", "$", lo=1, integer=True)
    _num(cfg, "window", "$", lo=1, integer=True)
    horizon = "episodes" if maint else "rounds"
    _num(cfg, horizon, "$", lo=1, integer=True)
    _need(cfg[horizon] % cfg["window"] == 0, "window", f"must divide {horizon}={cfg[horizon]}")

    if agent["kind"] == "meps":
        agent.setdefault("h_init", 1.0)
        _num(agent, "h_init", "agent")
        rule = agent.setdefault("rule", {"kind": "softmax", "beta": 0.5 if maint else 1.0})
        try:
            rule_from_json(rule)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"agent.rule: {exc}") from None
        lp = agent.setdefault("learning", {"gamma": 0.0, "eta": 1.0})
        _num(lp, "gamma", "agent.learning", 0, 1, default=0.0)
        _num(lp, "eta", "agent.learning", 0, 1, default=1.0)
        agent.setdefault("step_cap", 1000)
        _num(agent, "step_cap", "agent", lo=1, integer=True)
        if maint:
            cut = agent.setdefault("cutoffs", [2, [3, 2], [3, 2]])
            try:
                n_s, (a, b), (c, d) = cut
                ok = all(isinstance(x, int) and x >= 1 for x in (n_s, a, b, c, d))
            except (TypeError, ValueError):
                ok = False
            _need(ok, "agent.cutoffs", "must look like [n_s, [n_hc, n_c], [n_ac, n_f]] with positive integers")
            _need(agent.setdefault("domain_match", "subset") in ("subset", "exact"), "agent.domain_match",
                  "must be 'subset' or 'exact'")
        else:
            io = agent.get("io")
            _need(isinstance(io, list) and io, "agent.io", "must be a nonempty list of [i, o] pairs")
            for k, p in enumerate(io):
                _need(isinstance(p, list) and len(p) == 2 and all(isinstance(x, int) and x >= 1 for x in p),
                      f"agent.io[{k}]", "must be a pair of positive integers")
                _need(p[1] == 1, f"agent.io[{k}]", "actions are single clips, so o must be 1")
            _need(agent.setdefault("bias", "FF") in [b.value for b in BiasKind if b.layered], "agent.bias",
                  "must be FF, SF or DP")
    else:
        q = agent.setdefault("q", {})
        _num(q, "init", "agent.q", default=1.0 if maint else 0.0)
        _num(q, "alpha", "agent.q", 0, 1, default=1.0)
        _num(q, "lambda", "agent.q", 0, 1, default=0.0)
        q.setdefault("init", 1.0 if maint else 0.0)
        q.setdefault("alpha", 1.0)
        q.setdefault("lambda", 0.0)

    if maint:
        p = env["params"]
        p.setdefault("step_cap", 5000)
        _num(p, "step_cap", "environment.params", lo=1, integer=True)
        if "a_max" not in p:
            inductive = agent["kind"] == "meps" and agent.get("domain_match") == "subset"
            p["a_max"] = A_MAX_INDUCTIVE if inductive else A_MAX_UNRESTRICTED
        _num(p, "a_max", "environment.params", lo=0, integer=True)
        if "scenarios" in p:
            _need(Path(p["scenarios"]).is_file(), "environment.params.scenarios", "file not found")
    _need(isinstance(cfg["assert_bounds"], bool), "assert_bounds", "must be true or false")
    _need(isinstance(cfg["history"], bool), "history", "must be true or false")
    return cfg


def load_config(path, **overrides) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: {path} is not valid JSON ({exc})") from None
    for k, v in overrides.items():
        if v is not None:
            raw[k] = v
    return validate_config(raw)


def config_hash(cfg: dict) -> str:
    """sha256 of the canonical config, ignoring where the output goes."""
    body = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()


# --------------------------------------------------------------------------
# seeding


def agent_streams(seed: int, index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """(agent rng, environment rng) of ensemble member ``index``.

    Member k uses SeedSequence(seed, spawn_key=(k,)), the k-th child of
    SeedSequence(seed).spawn; distinct (seed, k) give distinct streams.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    a, e = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(e)


# --------------------------------------------------------------------------
# single agents


def _learning(agent_cfg: dict) -> LearningParams:
    lp = agent_cfg["learning"]
    return LearningParams(float(lp.get("gamma", 0.0)), float(lp.get("eta", 1.0)))


def build_agent(cfg: dict, rng: np.random.Generator):
    env_id, a = cfg["environment"]["id"], cfg["agent"]
    check = cfg["assert_bounds"]
    if env_id in INVASION:
        if a["kind"] == "q":
            q = a["q"]
            return ag.QInvasionAgent(env_id, rng, q["init"], q["alpha"], q["lambda"])
        return ag.MepsInvasionAgent(env_id, [tuple(p) for p in a["io"]], rng, rule_from_json(a["rule"]),
                                    _learning(a), a["h_init"], BiasKind(a["bias"]), a["step_cap"], check)
    if a["kind"] == "q":
        q = a["q"]
        return ag.QMaintenanceAgent(rng, q["init"], q["alpha"], q["lambda"])
    n_s, hid, act = a["cutoffs"]
    return ag.MepsMaintenanceAgent(rng, (n_s, tuple(hid), tuple(act)), a["domain_match"], rule_from_json(a["rule"]),
                                   _learning(a), a["h_init"], a["step_cap"], check)


def _maintenance_cutoffs(cfg: dict):
    a = cfg["agent"]
    if a["kind"] == "q":
        _, hid, act = ag.UNRESTRICTED_CUTOFFS
    else:
        _, hid, act = a["cutoffs"]
    return tuple(hid), tuple(act)


def build_env(cfg: dict, rng: np.random.Generator):
    env_id = cfg["environment"]["id"]
    if env_id in INVASION:
        return INVASION[env_id](rng)
    p = cfg["environment"]["params"]
    hid, act = _maintenance_cutoffs(cfg)
    scen = load_scenarios(p["scenarios"]) if "scenarios" in p else None
    return MaintenanceEnv(rng, scen, None, hid, act, p["a_max"], p["step_cap"])


def _history_store(agent):
    table = getattr(agent, "table", None)
    if table is None or not hasattr(table, "topology"):
        return None
    store = history.DynamicHypergraph.for_table(table)
    history.snapshot(table, 0, store)
    return store


def run_agent(cfg: dict, index: int) -> dict:
    """Train ensemble member ``index``; returns its raw log (and history)."""
    rng_a, rng_e = agent_streams(cfg["seed"], index)
    agent = build_agent(cfg, rng_a)
    env = build_env(cfg, rng_e)
    store = _history_store(agent) if cfg["history"] else None
    t = 0
    if cfg["environment"]["id"] in INVASION:
        log = np.empty(cfg["rounds"])
        for n in range(cfg["rounds"]):
            action = agent.act(env.reset())
            r = env.step(action)[0] if action is not None else 0.0
            if action is not None:
                agent.learn(r)
            log[n] = r
            t += 1
            if store is not None:
                history.snapshot(agent.table, t, store)
        return {"index": index, "log": log, "history": store}
    log = np.empty((cfg["episodes"], 3))  # mean hypothesis, mean plausibility, steps
    for n in range(cfg["episodes"]):
        obs = env.reset()
        done = False
        sums = np.zeros(2)
        while not done:
            choice = agent.act(obs)
            rewards, done, info = env.step(choice)
            if choice is not None:
                agent.learn(rewards)
            sums += rewards
            t += 1
            if store is not None:
                history.snapshot(agent.table, t, store)
        steps = info["steps"]
        log[n] = (sums[0] / steps, sums[1] / steps, steps)
    return {"index": index, "log": log, "history": store}


# --------------------------------------------------------------------------
# aggregation


def welford(rows) -> tuple[np.ndarray, np.ndarray]:
    """One-pass mean and population std over an iterable of equal-shape arrays."""
    n = 0
    mean = m2 = None
    for x in rows:
        x = np.asarray(x, dtype=np.float64)
        n += 1
        if mean is None:
            mean = np.zeros_like(x)
            m2 = np.zeros_like(x)
        d = x - mean
        mean = mean + d / n
        m2 = m2 + d * (x - mean)
    if n == 0:
        raise ValueError("no rows")
    return mean, np.sqrt(m2 / n)


def windowed(series: np.ndarray, window: int) -> np.ndarray:
    return series.reshape(-1, window).mean(axis=1)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_csv(path: Path, header_hash: str, columns: list[str], ends, *cols) -> None:
    lines = [f"# config_sha256={header_hash}", ",".join(columns)]
    for row in zip(ends, *cols):
        lines.append(",".join([str(int(row[0]))] + [_fmt(v) for v in row[1:]]))
    path.write_text("\n".join(lines) + "\n")


@dataclass
class RunResult:
    out: Path
    config: dict
    logs: list  # per agent raw arrays, ensemble order
    curves: dict

    @property
    def maintenance(self) -> bool:
        return self.config["environment"]["id"] == "maintenance"


def _pool_worker(args):
    cfg, k = args
    return run_agent(cfg, k)


def run(config: dict, jobs: int = 1, out: Optional[str] = None) -> RunResult:
    """Run the ensemble and write CSVs, raw logs, and (optionally) histories."""
    cfg = validate_config(config)
    if out is not None:
        cfg["out"] = str(out)
    out_dir = Path(cfg["out"])
    (out_dir / "raw").mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, k) for k in range(cfg["ensemble"])]
    if jobs > 1 and cfg["ensemble"] > 1:
        with mp.get_context("fork").Pool(min(jobs, cfg["ensemble"])) as pool:
            results = pool.map(_pool_worker, tasks, chunksize=1)
    else:
        results = [_pool_worker(t) for t in tasks]
    results.sort(key=lambda r: r["index"])
    h = config_hash(cfg)
    (out_dir / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    logs = [r["log"] for r in results]
    for r in results:
        np.save(out_dir / "raw" / f"agent_{r['index']:03d}.npy", r["log"], allow_pickle=False)
        if r["history"] is not None:
            (out_dir / "history").mkdir(exist_ok=True)
            history.export(r["history"], out_dir / "history" / f"agent_{r['index']:03d}.jsonl")
    w = cfg["window"]
    curves = {}
    if cfg["environment"]["id"] in INVASION:
        mean, std = welford(windowed(x, w) for x in logs)
        ends = np.arange(1, len(mean) + 1) * w
        write_csv(out_dir / "rewards.csv", h, ["window_end", "mean_reward", "std_reward"], ends, mean, std)
        curves["reward"] = (ends, mean, std)
    else:
        for col, name in enumerate(("hypothesis", "plausibility", "steps")):
            mean, std = welford(windowed(x[:, col], w) for x in logs)
            ends = np.arange(1, len(mean) + 1) * w
            heads = ["mean_steps", "std_steps"] if name == "steps" else ["mean_reward", "std_reward"]
            write_csv(out_dir / f"{name}.csv", h, ["window_end", *heads], ends, mean, std)
            curves[name] = (ends, mean, std)
        summary = {"total_steps": total_steps(logs, cfg["episodes"])}
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return RunResult(out_dir, cfg, logs, curves)


def load_logs(out_dir) -> list[np.ndarray]:
    return [np.load(p) for p in sorted(Path(out_dir, "raw").glob("agent_*.npy"))]


def total_steps(run_output, episodes: int) -> float:
    """Ensemble mean of cumulative environment steps over the first ``episodes`` episodes."""
    if isinstance(run_output, RunResult):
        logs = run_output.logs
    elif isinstance(run_output, (str, Path)):
        logs = load_logs(run_output)
    else:
        logs = list(run_output)
    sums = [float(np.asarray(x)[:episodes, 2].sum()) for x in logs]
    if not sums:
        raise ValueError("run holds no agents")
    return float(np.mean(sums))


def first_crossing(ends: np.ndarray, mean: np.ndarray, threshold: float) -> Optional[int]:
    """Round index of the first window whose mean reaches ``threshold``."""
    hit = np.flatnonzero(mean >= threshold)
    return int(ends[hit[0]]) if len(hit) else None
