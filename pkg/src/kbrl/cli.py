"""kbrl command line: collect, cluster, train, tournament, inspect, play.

Every command is deterministic under --seed.  File outputs carry schema
versions and refuse to load under the wrong one.  Exit codes: 0 on
success, 2 for configuration problems (bad arguments, unparseable
inputs, schema mismatches), 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .inference import RandomResolver
from .ki import KiError, load_knowledge_base
from .microciv.fixtures import load_fixture, load_microciv_ontology, shipped_pack_dirs
from .microciv.game import FixtureError, CommandError
from .microciv.match import play_scripted_episode, write_replay
from .inference import EpisodeLimits
from .ontology import OntologyError
from .rl.clustering import ClusterModel, SchemaVersionError, fit_clusters
from .rl.features import FEATURE_NAMES, FEATURE_WEIGHTS, FeatureVector
from .rl.policy import StateActionTable, policy_params, selection_probabilities
from .rl.training import (
    RLResolver, TrainConfig, collect_dataset, epsilon_at, train,
)
from .tournament import AgentSpec, run_tournament

DATASET_SCHEMA = "kbrl-dataset-v1"
TRAIN_STATE_SCHEMA = "kbrl-train-state-v1"
CURVE_HEADER = "episode,outcome,final_turn,return,epsilon"

logger = logging.getLogger("kbrl")


class ConfigError(Exception):
    pass


def _kb_dirs(args) -> list[str]:
    return list(args.kb) if args.kb else [str(p) for p in shipped_pack_dirs()]


def _load_kb(dirs):
    return load_knowledge_base(dirs)


def _write(path: str | Path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text, encoding="utf-8")


# --- collect -------------------------------------------------------------------


def cmd_collect(args) -> int:
    if args.episodes < 1:
        raise ConfigError("--episodes must be >= 1")
    kb_dirs = _kb_dirs(args)
    kb = _load_kb(kb_dirs)
    ontology = load_microciv_ontology()
    fixture = load_fixture(args.fixture)
    rows, lengths = collect_dataset(
        kb, ontology, fixture, args.episodes, args.seed, max_turns=args.max_turns
    )
    doc = {
        "schema": DATASET_SCHEMA,
        "feature_names": list(FEATURE_NAMES),
        "weights": list(FEATURE_WEIGHTS),
        "fixture": fixture.name,
        "seed": args.seed,
        "episodes": args.episodes,
        "episode_lengths": lengths,
        "rows": [list(r) for r in rows],
    }
    _write(args.out, json.dumps(doc, sort_keys=True))
    print(f"collected {len(rows)} turn rows from {args.episodes} episodes -> {args.out}")
    return 0


def load_dataset(path: str | Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema") != DATASET_SCHEMA:
        raise SchemaVersionError(f"expected {DATASET_SCHEMA}, got {doc.get('schema')!r}")
    return doc


# --- cluster -------------------------------------------------------------------


def cmd_cluster(args) -> int:
    doc = load_dataset(args.dataset)
    vectors = [
        FeatureVector(tuple(r), tuple(doc["weights"])) for r in doc["rows"]
    ]
    model = fit_clusters(
        vectors, args.k, max_iter=args.max_iter, seed=args.seed,
        feature_names=tuple(doc["feature_names"]), weights=tuple(doc["weights"]),
    )
    model.save(args.out)
    print(f"fitted k={args.k} on {len(vectors)} rows "
          f"(inertia {model.inertia:.4f}, {model.iterations} iterations) -> {args.out}")
    return 0


# --- train ----------------------------------------------------------------------


def _curve_csv(curve) -> str:
    lines = [CURVE_HEADER]
    for row in curve:
        ret = "" if row.episode_return is None else str(row.episode_return)
        lines.append(
            f"{row.episode},{row.outcome},{row.final_turn},{ret},{row.epsilon!r}"
        )
    return "\n".join(lines) + "\n"


def _parse_curve_csv(text: str):
    from .rl.training import CurveRow

    lines = text.strip().splitlines()
    if not lines or lines[0] != CURVE_HEADER:
        raise SchemaVersionError("unrecognized curve CSV header")
    rows = []
    for line in lines[1:]:
        ep, outcome, final_turn, ret, eps = line.split(",")
        rows.append(CurveRow(int(ep), outcome, int(final_turn),
                             None if ret == "" else int(ret), float(eps)))
    return rows


def cmd_train(args) -> int:
    out = Path(args.out)
    kb_dirs = _kb_dirs(args)
    kb = _load_kb(kb_dirs)
    ontology = load_microciv_ontology()
    fixture = load_fixture(args.fixture)
    cfg = TrainConfig(
        kb_dirs=tuple(kb_dirs), fixture=fixture.name, episodes=args.episodes,
        epsilon_start=args.epsilon, epsilon_end=args.epsilon_end, k=args.k,
        seed=args.seed, wave=args.wave, max_turns=args.max_turns,
        collect_episodes=args.collect_episodes,
    )

    table = None
    curve = None
    start_episode = 0
    state_path = out / "train_state.json"
    if args.resume:
        if not state_path.exists():
            raise ConfigError(f"cannot resume: {state_path} not found")
        state = json.loads(state_path.read_text(encoding="utf-8"))
        if state.get("schema") != TRAIN_STATE_SCHEMA:
            raise SchemaVersionError(
                f"expected {TRAIN_STATE_SCHEMA}, got {state.get('schema')!r}"
            )
        start_episode = state["next_episode"]
        model = ClusterModel.load(out / "model.json")
        table = StateActionTable.load(out / "table.json")
        curve = _parse_curve_csv((out / "curve.csv").read_text(encoding="utf-8"))
        print(f"resuming at episode {start_episode}")
    elif args.model:
        model = ClusterModel.load(args.model)
    else:
        if args.dataset:
            doc = load_dataset(args.dataset)
            rows = doc["rows"]
        else:
            print(f"collecting {cfg.collect_episodes} baseline episodes for clustering")
            rows, _ = collect_dataset(
                kb, ontology, fixture, cfg.collect_episodes, cfg.seed,
                max_turns=cfg.max_turns,
            )
        vectors = [FeatureVector(tuple(r)) for r in rows]
        model = fit_clusters(
            vectors, cfg.k, max_iter=cfg.max_iter, seed=cfg.seed,
            feature_names=FEATURE_NAMES, weights=FEATURE_WEIGHTS,
        )
        print(f"clustered {len(rows)} rows into k={cfg.k}")

    def checkpoint(next_episode, model, table, curve):
        out.mkdir(parents=True, exist_ok=True)
        model.save(out / "model.json")
        table.save(out / "table.json")
        _write(out / "curve.csv", _curve_csv(curve))
        _write(out / "train_state.json", json.dumps({
            "schema": TRAIN_STATE_SCHEMA,
            "next_episode": next_episode,
            "episodes": cfg.episodes,
            "seed": cfg.seed,
            "fixture": cfg.fixture,
            "kb_dirs": list(cfg.kb_dirs),
        }, sort_keys=True))

    result = train(
        cfg, kb, ontology, fixture, model, table=table,
        start_episode=start_episode, curve=curve, checkpoint=checkpoint,
    )
    checkpoint(cfg.episodes, result.model, result.table, result.curve)
    done = [r for r in result.curve if r.episode_return is not None]
    wins = sum(1 for r in result.curve if r.outcome == "won")
    mean_ret = sum(r.episode_return for r in done) / len(done) if done else float("nan")
    print(f"trained {cfg.episodes} episodes: {wins} wins, "
          f"mean return {mean_ret:.1f} -> {out}")
    return 0


# --- tournament -------------------------------------------------------------------


def _agent_specs(args, ontology):
    specs = []
    common = args.kb_common or str(shipped_pack_dirs(("common",))[0])
    pack_dirs = []
    for name in args.agent or []:
        if "=" in name:
            agent_name, path = name.split("=", 1)
        else:
            agent_name, path = name, None
        if path is None:
            path = str(shipped_pack_dirs((agent_name,))[0])
        pack_dirs.append((agent_name, path))
    for agent_name, path in pack_dirs:
        kb = load_knowledge_base([common, path])
        specs.append(AgentSpec(agent_name, kb, RandomResolver))
    if args.trained:
        name, model_path, table_path = args.trained.split(":")
        model = ClusterModel.load(model_path)
        table = StateActionTable.load(table_path)
        kb = load_knowledge_base([common] + [p for _, p in pack_dirs])

        def factory():
            return RLResolver(model, table, epsilon=args.trained_epsilon)

        specs.append(AgentSpec(name, kb, factory))
    return specs


def cmd_tournament(args) -> int:
    if args.games < 1:
        raise ConfigError("--games must be >= 1")
    ontology = load_microciv_ontology()
    specs = _agent_specs(args, ontology)
    if len(specs) < 2:
        raise ConfigError("need at least 2 agents (--agent/--trained)")
    fixtures = args.fixture or ["twin-continents"]
    result = run_tournament(
        specs, ontology, fixtures, args.games, seed=args.seed,
        max_turns=args.max_turns,
    )
    pair_csv = result.pair_csv()
    agent_csv = result.agent_csv()
    print(pair_csv, end="")
    print(agent_csv, end="")
    if args.out:
        _write(args.out, pair_csv)
        agents_path = Path(args.out).with_name(Path(args.out).stem + "-agents.csv")
        _write(agents_path, agent_csv)
        print(f"wrote {args.out} and {agents_path}")
    return 0


# --- inspect ---------------------------------------------------------------------


def cmd_inspect(args) -> int:
    model = ClusterModel.load(args.model)
    table = StateActionTable.load(args.table)
    cluster = args.cluster
    turns = model.cluster_turns.get(cluster)
    if turns:
        print(f"cluster {cluster}: mean turn {turns[0]:.2f} over {turns[1]} runs")
    else:
        print(f"cluster {cluster}: no recorded turns")
    cv = table.clusters.get(cluster)
    if not cv or not cv.actions:
        print("no samples")
        return 0
    print(f"expected return {cv.g_mean:.2f} over {cv.g_count} samples")
    params = policy_params(table, cluster)
    actions = sorted(cv.actions)
    probs = selection_probabilities(actions, params)
    print(f"{'action':40s} {'n':>5s} {'mean':>10s} {'mu':>8s} {'sigma':>8s} {'p':>8s}")
    for action in actions:
        av = cv.actions[action]
        mu, sigma = params.mu_sigma(action)
        print(f"{action:40s} {av.n:5d} {av.mean:10.2f} {mu:8.4f} {sigma:8.4f} "
              f"{probs[action]:8.4f}")
    total = sum(probs.values())
    print(f"{'':40s} {'':5s} {'':10s} {'':8s} {'sum':>8s} {total:8.4f}")
    return 0


# --- play -------------------------------------------------------------------------


def cmd_play(args) -> int:
    kb = _load_kb(_kb_dirs(args))
    ontology = load_microciv_ontology()
    fixture = load_fixture(args.fixture)
    if args.model and args.table:
        model = ClusterModel.load(args.model)
        table = StateActionTable.load(args.table)
        resolver = RLResolver(model, table, epsilon=args.epsilon)
        mode = f"learned policy (epsilon={args.epsilon})"
    else:
        resolver = RandomResolver()
        mode = "uniform-random conflict resolution"
    journal: list | None = [] if args.replay else None
    record = play_scripted_episode(
        kb, ontology, fixture, args.seed, resolver,
        EpisodeLimits(max_turns=args.max_turns), journal=journal,
    )
    conflicts = len(record.decisions)
    print(f"fixture {fixture.name}, seed {args.seed}, {mode}")
    print(f"outcome: {record.outcome} at turn {record.final_turn}, "
          f"{conflicts} resolved conflicts, {len(record.executions)} rule firings")
    if args.record:
        _write(args.record, record.to_jsonl())
        print(f"episode record -> {args.record}")
    if args.replay:
        _write(args.replay, write_replay(journal))
        print(f"replay -> {args.replay}")
    return 0


# --- argument parsing ----------------------------------------------------------------


def _add_common(p, fixture_default="twin-continents"):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixture", default=fixture_default)
    p.add_argument("--kb", action="append", metavar="DIR",
                   help="rule pack directory (repeatable; default: shipped packs)")
    p.add_argument("--max-turns", type=int, default=400)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbrl",
        description="Multi-expert rule engine with learned conflict resolution "
                    "on the MicroCiv strategy game.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="run baseline episodes, write the clustering dataset")
    _add_common(p)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--out", default="dataset.json")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("cluster", help="fit the k-means state model from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="model.json")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("train", help="train the conflict-resolution policy")
    _add_common(p)
    p.add_argument("--episodes", type=int, default=300)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--epsilon-end", type=float, default=0.02)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--wave", type=int, default=1)
    p.add_argument("--collect-episodes", type=int, default=20)
    p.add_argument("--dataset", help="existing dataset.json for clustering")
    p.add_argument("--model", help="existing cluster model to reuse")
    p.add_argument("--resume", action="store_true",
                   help="continue from the checkpoint in --out")
    p.add_argument("--out", default="run")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tournament", help="round-robin between agents")
    p.add_argument("--agent", action="append", metavar="NAME[=DIR]",
                   help="expert agent: shipped pack name or NAME=packdir (repeatable)")
    p.add_argument("--trained", metavar="NAME:MODEL:TABLE",
                   help="add a trained agent playing greedily over all agent packs")
    p.add_argument("--trained-epsilon", type=float, default=0.0)
    p.add_argument("--kb-common", help="common pack directory (default: shipped)")
    p.add_argument("--fixture", action="append",
                   help="fixture name (repeatable; default twin-continents)")
    p.add_argument("--games", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-turns", type=int, default=400)
    p.add_argument("--out", help="write pair results CSV here")
    p.set_defaults(func=cmd_tournament)

    p = sub.add_parser("inspect", help="report one cluster's learned values")
    p.add_argument("--model", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--cluster", type=int, required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("play", help="play one episode against the scripted opponent")
    _add_common(p)
    p.add_argument("--model")
    p.add_argument("--table")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--record", help="write the episode record JSONL here")
    p.add_argument("--replay", help="write the command replay JSONL here")
    p.set_defaults(func=cmd_play)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("KBRL_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KiError, OntologyError, FixtureError, CommandError,
            SchemaVersionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        logger.exception("runtime error")
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
