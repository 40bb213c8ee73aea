"""Pipeline orchestration.

Subcommands wire layout -> graph -> transition matrix -> embeddings ->
features -> tagger, all driven by one YAML run config plus --set
overrides. Every command writes its artifacts (plus the fully resolved
config and a manifest of artifact hashes) under the configured run
directory, and reruns with the same config and seed reproduce the
artifacts byte for byte.

Exit codes: 0 success, 1 usage/config problem, 2 data problem,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, DataError, NumericError
from .geometry import LayoutMap, build_graph, complete_graph_prune, load_layout, save_graph_json, save_layout
from .graph import apg_from_ag, save_apg_json
from .embedding import (
    NodeEmbeddings,
    SkipGramConfig,
    WalkConfig,
    make_encoder,
    random_walks,
    train_skipgram,
    walk_transition_stats,
)
from .ingest import (
    SamplingConfig,
    build_features,
    chunk,
    downsample,
    label_events,
    parse_log_file,
    save_chunk_index,
    upsample_training,
)
from .model import (
    TrainConfig,
    cross_validate,
    evaluate,
    save_checkpoint,
    train,
)
from .report import consolidate_run_dir
from .simulator import SensorModel, make_fixture, simulate, write_casas_log, write_truth_csv

ENCODER_KINDS = ("none", "coordinates", "room_number", "node2vec")

_DEFAULTS: dict = {
    "seed": None,
    "run_dir": None,
    "layout": None,
    "logs": [],
    "log_year": None,
    "residents": [],
    "encoder": "node2vec",
    "rooms": {},
    "self_weight": 0.5,
    "chunk_len": 1000,
    "cv_folds": 10,
    "walks": {"num_walks_per_node": 700, "walk_length": 1000, "rng_seed": None},
    "skipgram": {
        "dimension": 256,
        "window_size": 1,
        "negative_samples": 5,
        "learning_rate": 0.025,
        "epochs": 5,
        "rng_seed": None,
        "gradient_clip": 10.0,
    },
    "sampling": {
        "downsample_interval": 60.0,
        "home_sensor_map": {},
        "upsample_factor": 8,
    },
    "train": {
        "hidden_size": 64,
        "dropout": 0.2,
        "learning_rate": 1e-3,
        "max_epochs": 100,
        "batch_size": 1,
        "rng_seed": None,
        "class_weighting": False,
        "patience": 10,
        "grad_clip": 5.0,
    },
    "simulate": {
        "fixture": "square4",
        "duration": None,
        "detection_interval": None,
        "p_fail": None,
        "master_seed": None,
    },
}


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _deep_merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {where!r}")
        if isinstance(base[key], dict) and base[key] and not key.endswith("_map") and key != "rooms":
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} must be a mapping")
            out[key] = _deep_merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _apply_override(cfg: dict, setting: str) -> None:
    if "=" not in setting:
        raise ConfigError(f"--set expects KEY=VALUE, got {setting!r}")
    key, _, raw = setting.partition("=")
    value = yaml.safe_load(raw)
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config key: {key!r}")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key: {key!r}")
    node[parts[-1]] = value


def load_config(path: str | Path, overrides: list[str] | None = None) -> dict:
    """Read the YAML run config, fill defaults and derive sub-seeds."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a YAML mapping")
    cfg = _deep_merge(_DEFAULTS, doc)
    for setting in overrides or []:
        _apply_override(cfg, setting)
    if cfg["seed"] is None:
        raise ConfigError("config must set an integer 'seed' (no wall-clock default)")
    seed = int(cfg["seed"])
    cfg["seed"] = seed
    if cfg["walks"]["rng_seed"] is None:
        cfg["walks"]["rng_seed"] = _derive_seed(seed, 1)
    if cfg["skipgram"]["rng_seed"] is None:
        cfg["skipgram"]["rng_seed"] = _derive_seed(seed, 2)
    if cfg["train"]["rng_seed"] is None:
        cfg["train"]["rng_seed"] = _derive_seed(seed, 3)
    if cfg["simulate"]["master_seed"] is None:
        cfg["simulate"]["master_seed"] = _derive_seed(seed, 5)
    encoders = cfg["encoder"]
    if isinstance(encoders, str):
        encoders = [encoders]
    for kind in encoders:
        if kind not in ENCODER_KINDS:
            raise ConfigError(f"unknown encoder {kind!r}; choose from {ENCODER_KINDS}")
    cfg["encoder"] = list(encoders)
    return cfg


def _run_dir(cfg: dict) -> Path:
    if not cfg.get("run_dir"):
        raise ConfigError("config must set 'run_dir'")
    out = Path(cfg["run_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(cfg: dict, run_dir: Path) -> Path:
    path = run_dir / "config_resolved.yaml"
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True)
    return path


def _update_manifest(run_dir: Path, paths: list[Path]) -> None:
    manifest_path = run_dir / "manifest.json"
    manifest = {"artifacts": {}}
    if manifest_path.is_file():
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    for p in paths:
        digest = hashlib.sha256(Path(p).read_bytes()).hexdigest()
        manifest["artifacts"][str(Path(p).relative_to(run_dir))] = f"sha256:{digest}"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def _load_layout(cfg: dict) -> LayoutMap:
    if not cfg.get("layout"):
        raise ConfigError("config must set 'layout'")
    path = Path(cfg["layout"])
    if not path.is_file():
        raise ConfigError(f"layout file not found: {path}")
    return load_layout(path)


def _walk_config(cfg: dict) -> WalkConfig:
    w = cfg["walks"]
    return WalkConfig(
        num_walks_per_node=int(w["num_walks_per_node"]),
        walk_length=int(w["walk_length"]),
        rng_seed=int(w["rng_seed"]),
    )


def _skipgram_config(cfg: dict) -> SkipGramConfig:
    s = cfg["skipgram"]
    return SkipGramConfig(
        dimension=int(s["dimension"]),
        window_size=int(s["window_size"]),
        negative_samples=int(s["negative_samples"]),
        learning_rate=float(s["learning_rate"]),
        epochs=int(s["epochs"]),
        rng_seed=int(s["rng_seed"]),
        gradient_clip=float(s["gradient_clip"]),
    )


def _sampling_config(cfg: dict) -> SamplingConfig:
    s = cfg["sampling"]
    return SamplingConfig(
        downsample_interval=float(s["downsample_interval"]),
        home_sensor_map=dict(s["home_sensor_map"]),
        upsample_factor=int(s["upsample_factor"]),
    )


def _train_config(cfg: dict) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        hidden_size=int(t["hidden_size"]),
        dropout=float(t["dropout"]),
        learning_rate=float(t["learning_rate"]),
        max_epochs=int(t["max_epochs"]),
        batch_size=int(t["batch_size"]),
        rng_seed=int(t["rng_seed"]),
        chunk_len=int(cfg["chunk_len"]),
        class_weighting=bool(t["class_weighting"]),
        patience=int(t["patience"]),
        grad_clip=float(t["grad_clip"]),
    )


def _build_embeddings(cfg: dict, layout: LayoutMap) -> tuple[NodeEmbeddings, dict]:
    graph = build_graph(layout)
    apg = apg_from_ag(graph, float(cfg["self_weight"]))
    walks = random_walks(apg, _walk_config(cfg))
    stats = walk_transition_stats(walks, apg)
    embeddings = train_skipgram(walks, _skipgram_config(cfg), node_ids=apg.node_ids)
    return embeddings, stats


def _encoder_for(kind: str, cfg: dict, layout: LayoutMap, embeddings: NodeEmbeddings | None):
    if kind == "node2vec":
        if embeddings is None:
            raise ConfigError("node2vec encoder requested but embeddings are missing")
        return make_encoder("node2vec", embeddings=embeddings)
    if kind == "room_number":
        return make_encoder("room_number", rooms=cfg["rooms"])
    return make_encoder(kind, layout=layout)


def _load_events(cfg: dict, layout: LayoutMap):
    if not cfg["logs"]:
        raise ConfigError("config must list at least one log file under 'logs'")
    if not cfg["residents"]:
        raise ConfigError("config must list the expected 'residents'")
    records = []
    for i, log_path in enumerate(cfg["logs"]):
        path = Path(log_path)
        if not path.is_file():
            raise ConfigError(f"log file not found: {path}")
        result = parse_log_file(path, default_year=cfg["log_year"])
        if result.errors:
            print(
                f"WARN {len(result.errors)} malformed lines in {path} "
                f"(first: line {result.errors[0][0]}: {result.errors[0][2]})",
                file=sys.stderr,
            )
        records.extend((rec.timestamp, i, j, rec) for j, rec in enumerate(result.records))
    records.sort(key=lambda r: (r[0], r[1], r[2]))  # timestamp, then file order
    ordered = [r[3] for r in records]
    labeled = label_events(ordered, cfg["residents"])
    labeled = downsample(labeled, _sampling_config(cfg), known_sensors=layout.poi_ids())
    return labeled


def _chunks_for_encoder(cfg: dict, layout: LayoutMap, labeled, encoder):
    vocab = layout.poi_ids()
    features, labels = build_features(labeled, encoder, vocab, cfg["residents"])
    return chunk(features, labels, int(cfg["chunk_len"]))


def cmd_build_graph(cfg: dict) -> int:
    run_dir = _run_dir(cfg)
    layout = _load_layout(cfg)
    graph = build_graph(layout)
    apg = apg_from_ag(graph, float(cfg["self_weight"]))
    comps = graph.components()
    ag_path = run_dir / "ag.json"
    apg_path = run_dir / "apg.json"
    summary_path = run_dir / "graph_summary.json"
    save_graph_json(graph, ag_path)
    save_apg_json(apg, apg_path)
    summary = {
        "nodes": graph.n,
        "edges": len(graph.edges()),
        "components": comps,
        "n_components": len(comps),
    }
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
    echo = _echo_config(cfg, run_dir)
    _update_manifest(run_dir, [ag_path, apg_path, summary_path, echo])
    print(f"SUMMARY nodes={graph.n} edges={len(graph.edges())} components={len(comps)}")
    if len(comps) > 1:
        print(f"WARN graph is disconnected; components: {comps}")
    return 0


def cmd_embed(cfg: dict) -> int:
    run_dir = _run_dir(cfg)
    layout = _load_layout(cfg)
    embeddings, stats = _build_embeddings(cfg, layout)
    emb_json = run_dir / "embeddings.json"
    emb_csv = run_dir / "embeddings.csv"
    stats_path = run_dir / "walk_stats.json"
    embeddings.save_json(emb_json)
    embeddings.save_csv(emb_csv)
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=1)
    echo = _echo_config(cfg, run_dir)
    _update_manifest(run_dir, [emb_json, emb_csv, stats_path, echo])
    print(
        f"SUMMARY embeddings n={len(embeddings.node_ids)} d={embeddings.dimension} "
        f"max_walk_tv={stats['max_tv']:.4f}"
    )
    return 0


def cmd_simulate(cfg: dict) -> int:
    run_dir = _run_dir(cfg)
    sim = cfg["simulate"]
    layout, run = make_fixture(sim["fixture"])
    updates = {}
    if sim["duration"] is not None:
        updates["duration"] = float(sim["duration"])
    sensor = run.sensor
    if sim["detection_interval"] is not None:
        sensor = replace(sensor, detection_interval=float(sim["detection_interval"]))
    if sim["p_fail"] is not None:
        sensor = replace(sensor, p_fail=float(sim["p_fail"]))
    updates["sensor"] = sensor
    updates["master_seed"] = int(sim["master_seed"])
    run = replace(run, **updates)
    graph = build_graph(layout)
    log = simulate(graph, run)
    log_path = run_dir / "sim_log.txt"
    truth_path = run_dir / "sim_truth.csv"
    layout_path = run_dir / "sim_layout.yaml"
    write_casas_log(log, log_path)
    write_truth_csv(log, truth_path)
    save_layout(layout, layout_path)
    echo = _echo_config(cfg, run_dir)
    _update_manifest(run_dir, [log_path, truth_path, layout_path, echo])
    residents = sorted({s.resident_id for s in run.scripts})
    print(f"SUMMARY events={len(log.records)} residents={','.join(residents)}")
    return 0


def _split_indices(n_chunks: int, seed: int) -> tuple[list[int], list[int], list[int]]:
    """75/25 train-pool/test split, then 75/25 train/validation."""
    rng = np.random.default_rng(seed)
    perm = [int(i) for i in rng.permutation(n_chunks)]
    n_test = max(1, int(round(0.25 * n_chunks))) if n_chunks > 1 else 0
    test = perm[:n_test]
    pool = perm[n_test:]
    n_train = max(1, int(round(0.75 * len(pool))))
    if len(pool) >= 2:
        n_train = min(n_train, len(pool) - 1)
    return pool[:n_train], pool[n_train:], test


def _write_eval_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "fold", "accuracy", "macro_precision", "macro_recall", "macro_f1"])
        for row in rows:
            writer.writerow(
                [
                    row["run"],
                    row["fold"],
                    row["accuracy"],
                    row["macro_precision"],
                    row["macro_recall"],
                    row["macro_f1"],
                ]
            )


def cmd_train(cfg: dict) -> int:
    run_dir = _run_dir(cfg)
    layout = _load_layout(cfg)
    labeled = _load_events(cfg, layout)
    encoders = cfg["encoder"]
    embeddings = None
    if "node2vec" in encoders:
        embeddings, _ = _build_embeddings(cfg, layout)
    train_cfg = _train_config(cfg)
    sampling = _sampling_config(cfg)
    written = []
    comparison = []
    for kind in encoders:
        encoder = _encoder_for(kind, cfg, layout, embeddings)
        chunks = _chunks_for_encoder(cfg, layout, labeled, encoder)
        if len(chunks) < 2:
            raise DataError(
                f"only {len(chunks)} chunk(s); lower chunk_len or provide more data"
            )
        train_idx, val_idx, test_idx = _split_indices(len(chunks), _derive_seed(cfg["seed"], 20))
        train_chunks = [chunks[i] for i in train_idx]
        if sampling.upsample_factor > 1:
            train_chunks = upsample_training(
                train_chunks, sampling.upsample_factor, _derive_seed(cfg["seed"], 21)
            )
        params, curve = train(
            train_chunks,
            [chunks[i] for i in val_idx],
            train_cfg,
            n_classes=len(cfg["residents"]),
        )
        report = evaluate([chunks[i] for i in test_idx], params)
        out_dir = run_dir if len(encoders) == 1 else run_dir / kind
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt = out_dir / "checkpoint.json"
        rep_json = out_dir / "train_report.json"
        rep_csv = out_dir / "train_report.csv"
        idx_csv = out_dir / "chunk_index.csv"
        save_checkpoint(params, train_cfg, ckpt)
        with open(rep_json, "w", encoding="utf-8") as fh:
            json.dump({"encoder": kind, "report": report.to_dict(), "curve": curve}, fh, indent=1)
        _write_eval_csv(rep_csv, [{"run": kind, "fold": 0, **report.to_dict()}])
        save_chunk_index(chunks, idx_csv)
        written += [ckpt, rep_json, rep_csv, idx_csv]
        comparison.append({"run": kind, "fold": 0, **report.to_dict()})
        print(
            f"SUMMARY encoder={kind} accuracy={report.accuracy:.4f} "
            f"macro_f1={report.macro_f1:.4f} events={report.n_events}"
        )
    if len(encoders) > 1:
        comp_csv = run_dir / "comparison.csv"
        _write_eval_csv(comp_csv, comparison)
        written.append(comp_csv)
    echo = _echo_config(cfg, run_dir)
    _update_manifest(run_dir, written + [echo])
    return 0


def cmd_crossval(cfg: dict, jobs: int = 1) -> int:
    run_dir = _run_dir(cfg)
    layout = _load_layout(cfg)
    labeled = _load_events(cfg, layout)
    encoders = cfg["encoder"]
    embeddings = None
    if "node2vec" in encoders:
        embeddings, _ = _build_embeddings(cfg, layout)
    train_cfg = _train_config(cfg)
    sampling = _sampling_config(cfg)
    k = int(cfg["cv_folds"])
    written = []
    comparison = []
    for kind in encoders:
        encoder = _encoder_for(kind, cfg, layout, embeddings)
        chunks = _chunks_for_encoder(cfg, layout, labeled, encoder)
        result = cross_validate(
            chunks, k, train_cfg, upsample_factor=sampling.upsample_factor, jobs=jobs
        )
        out_dir = run_dir if len(encoders) == 1 else run_dir / kind
        out_dir.mkdir(parents=True, exist_ok=True)
        rep_json = out_dir / "crossval_report.json"
        rep_csv = out_dir / "crossval_report.csv"
        with open(rep_json, "w", encoding="utf-8") as fh:
            json.dump({"encoder": kind, **result.to_dict()}, fh, indent=1)
        rows = [
            {"run": kind, "fold": i, **fold.to_dict()}
            for i, fold in enumerate(result.folds)
        ]
        _write_eval_csv(rep_csv, rows)
        written += [rep_json, rep_csv]
        comparison.append({"run": kind, "fold": "mean", **{m: result.mean[m] for m in result.mean}})
        print(
            f"SUMMARY encoder={kind} folds={k} "
            f"mean_accuracy={result.mean['accuracy']:.4f} "
            f"std_accuracy={result.std['accuracy']:.4f}"
        )
    if len(encoders) > 1:
        comp_csv = run_dir / "comparison.csv"
        with open(comp_csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["encoder", "mean_accuracy", "std_accuracy", "mean_macro_f1"])
            for kind, res in zip(encoders, comparison):
                writer.writerow(
                    [kind, res["accuracy"], res.get("std_accuracy", ""), res["macro_f1"]]
                )
        written.append(comp_csv)
    echo = _echo_config(cfg, run_dir)
    _update_manifest(run_dir, written + [echo])
    return 0


def cmd_report(run_dir: str) -> int:
    written = consolidate_run_dir(run_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="residentid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, needs_config: bool = True):
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("-c", "--config", required=True, help="run config YAML")
            p.add_argument(
                "--set",
                action="append",
                default=[],
                metavar="KEY=VALUE",
                help="override a config key (dotted path, YAML value)",
            )
        return p

    add("build-graph", "build the accessibility graph and transition matrix")
    add("embed", "train node embeddings from the layout")
    add("simulate", "emit a synthetic annotated sensor log")
    add("train", "train the tagger on a 75/25 split and evaluate")
    cv = add("crossval", "randomized k-fold cross-validation")
    cv.add_argument("--jobs", type=int, default=1, help="parallel folds")
    rep = sub.add_parser("report", help="consolidate a run directory into CSV + SVG")
    rep.add_argument("run_dir", help="directory holding earlier command outputs")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "report":
            return cmd_report(args.run_dir)
        cfg = load_config(args.config, args.set)
        if args.command == "build-graph":
            return cmd_build_graph(cfg)
        if args.command == "embed":
            return cmd_embed(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "crossval":
            return cmd_crossval(cfg, jobs=args.jobs)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
