"""End-to-end acceptance checks. Each test prints one PASS/FAIL line.

Criteria 4-6 train full ensembles (20 agents) and take several minutes;
criterion 6 alone runs for roughly twenty minutes on one core.
"""
import json
from pathlib import Path

import numpy as np
import pytest

from meps import BiasKind, LearningParams, Softmax, harness
from meps.agents import (
    INDUCTIVE_CUTOFFS,
    UNRESTRICTED_CUTOFFS,
    MepsInvasionAgent,
    invasion_topology,
    maintenance_q_agent,
    maintenance_topology,
)
from meps.audit import avalanche_walk, nl_formula
from meps.envs import DistractionEnv
from meps.oracle import run_trials

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
ENSEMBLE = 20
SIZES = (10, 5, 5, 4)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def ensemble_run(name, out_root, **overrides):
    cfg = harness.load_config(CONFIGS / f"{name}.json", ensemble=ENSEMBLE, **overrides)
    return harness.run(cfg, out=out_root / name)


def test_1_parameter_counts(report):
    got = {
        "distraction": [len(invasion_topology("distraction", k)) for k in (1, 2, 3)],
        "deception": [len(invasion_topology("deception", k)) for k in (1, 2, 3)],
        "nl_formula": [nl_formula(INDUCTIVE_CUTOFFS, SIZES), nl_formula(UNRESTRICTED_CUTOFFS, SIZES)],
        "built": [len(maintenance_topology(INDUCTIVE_CUTOFFS, "subset")),
                  len(maintenance_topology(UNRESTRICTED_CUTOFFS, "exact"))],
        "q": [len(maintenance_q_agent())],
    }
    want = {
        "distraction": [60, 600, 2000],
        "deception": [240, 1800, 4000],
        "nl_formula": [114375, 1429968],
        "built": [114375, 1429968],
        "q": [1429968],
    }
    assert report(1, got == want, json.dumps(got))


def test_2_equivalence(report):
    devs = run_trials(200, seed=0)
    worst = max(devs.values())
    assert report(2, worst <= 1e-12, f"max deviation {worst:.3e} over 200 instances per bias {devs}")


def test_3_walk_bounds(report, tmp_path):
    # every shipped experiment, short horizon, with the bound assertion switched on
    lengths = {}
    for path in sorted(CONFIGS.glob("*.json")):
        cfg = harness.load_config(path, ensemble=1)
        cfg["assert_bounds"] = True
        if cfg["environment"]["id"] == "maintenance":
            cfg["episodes"], cfg["window"] = 2, 1
        else:
            cfg["rounds"], cfg["window"] = 500, 100
        harness.run(cfg, out=tmp_path / path.stem)  # raises BoundViolation on any overlong walk
        lengths[path.stem] = "ok"
    aval = {(o, d): len(avalanche_walk([o] * d, o, o)) for o in (2, 3) for d in (2, 3, 4)}
    ok = all(n >= o ** (d - 1) for (o, d), n in aval.items())
    assert report(3, ok, f"{len(lengths)} configs checked; avalanche lengths {aval}")


def _crossings(runs, threshold):
    out = {}
    for name, res in runs.items():
        ends, mean, _ = res.curves["reward"]
        out[name] = (harness.first_crossing(ends, mean, threshold), float(mean[-1]))
    return out


@pytest.mark.slow
def test_4_distraction(report, tmp_path):
    runs = {n: ensemble_run(f"distraction_{n}", tmp_path) for n in ("11", "21", "31")}
    c = _crossings(runs, 0.9)
    t2, t3 = c["21"][0], c["31"][0]
    ok = t2 is not None and t3 is not None and t3 > t2 and c["11"][1] < 0
    detail = (f"(2,1) reaches 0.9 at round {t2}; (3,1) at {t3}; "
              f"(1,1) final mean {c['11'][1]:.3f}")
    assert report(4, ok, detail)


@pytest.mark.slow
def test_5_deception(report, tmp_path):
    runs = {n: ensemble_run(f"deception_{n}", tmp_path) for n in ("11", "21", "31", "q")}
    c = _crossings(runs, 1.8)
    t2 = c["21"][0]
    others = [c[n][0] for n in ("11", "31", "q")]
    fastest = t2 is not None and all(t is None or t > t2 for t in others)
    later = c["31"][0] is not None and t2 is not None and c["31"][0] > t2
    ok = fastest and later and c["11"][1] <= -5
    detail = ("crossings of 1.8: " + ", ".join(f"{n}={c[n][0]}" for n in ("11", "21", "31", "q"))
              + f"; (1,1) final mean {c['11'][1]:.3f}")
    assert report(5, ok, detail)


@pytest.fixture(scope="module")
def maintenance_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("maintenance")
    return {n: ensemble_run(f"maintenance_{n}", root) for n in ("inductive", "unrestricted", "q")}


@pytest.mark.slow
def test_6a_maintenance_ordering(report, maintenance_runs):
    tot = {n: harness.total_steps(r, 600) for n, r in maintenance_runs.items()}
    ok = tot["inductive"] < tot["unrestricted"] < tot["q"]
    assert report("6a", ok, "total steps over 600 episodes: " + ", ".join(f"{n}={v:.0f}" for n, v in tot.items()))


@pytest.mark.slow
def test_6b_maintenance_convergence(report, maintenance_runs):
    logs = maintenance_runs["inductive"].logs
    tail = float(np.mean([x[-50:, 2].mean() for x in logs]))
    assert report("6b", tail <= 3, f"inductive-bias mean steps/episode over last 50 episodes: {tail:.3f} (need <= 3)")


@pytest.mark.slow
def test_6c_maintenance_magnitude(report, maintenance_runs):
    ref = {"inductive": 16766, "unrestricted": 35817, "q": 115261}
    tot = {n: harness.total_steps(r, 600) for n, r in maintenance_runs.items()}
    within = {n: 0.5 * ref[n] <= tot[n] <= 1.5 * ref[n] for n in ref}
    detail = ", ".join(f"{n}={tot[n]:.0f} (allowed {0.5 * ref[n]:.0f}-{1.5 * ref[n]:.0f})" for n in ref)
    assert report("6c", all(within.values()), detail)


def test_7_update_identity(report):
    agent = MepsInvasionAgent("distraction", [(2, 1)], np.random.default_rng(21),
                              rule=Softmax(1.0), params=LearningParams(0.0, 1.0))
    env = DistractionEnv(np.random.default_rng(22))
    log = []
    for _ in range(2000):
        a = agent.act(env.reset())
        r = env.step(a)[0]
        agent.learn(r)
        log.append((list(agent.last.edges), r))
    # independent replay: start from h_init and add each reward to each traversed edge
    replay = {e: 1.0 for e in agent.table.edges()}
    for edges, r in log:
        for e in set(edges):
            replay[e] += r
    ok = all(replay[e] == h for e, h in zip(agent.table.edges(), agent.table.h))
    assert report(7, ok, f"2000 logged rounds, {len(replay)} edges replayed, exact equality={ok}")


def test_8_determinism(report, tmp_path):
    files = {}
    for name, cfg in {
        "distraction": harness.load_config(CONFIGS / "distraction_21.json", ensemble=4, rounds=1000, history=True),
        "maintenance": harness.load_config(CONFIGS / "maintenance_inductive.json", ensemble=2, episodes=6, window=3),
    }.items():
        for jobs in (1, 2):
            out = tmp_path / f"{name}_{jobs}"
            harness.run(cfg, jobs=jobs, out=out)
            files.setdefault(name, []).append(
                {p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*"))
                 if p.is_file() and p.suffix in (".csv", ".jsonl")}
            )
        rerun = tmp_path / f"{name}_again"
        harness.run(cfg, jobs=1, out=rerun)
        files[name].append({k: (rerun / k).read_bytes() for k in files[name][0]})
    same = all(v[0] == v[1] == v[2] and v[0] for v in files.values())
    n = sum(len(v[0]) for v in files.values())
    assert report(8, same, f"{n} CSV/history files byte-identical across reruns and --jobs 1/2")
