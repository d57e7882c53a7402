"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 comparison failure.
Errors are reported as a single ``error: <Kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import classifier
from .errors import BimEnrichError
from .features import extract_features, features_from_csv, features_to_csv
from .graph import read_turtle, write_turtle
from .mesh import write_ply
from .pipeline import classify_objects, enrich, load_scene_dir, roundtrip, train_default_model
from .reconstruct import ReconstructionPlan, plan_from_graph, realize
from .records import ObjectRecord
from .relations import RelationConfig, infer_all, write_relations_csv
from .synth import SceneSpec, generate_corpus, iter_scenes, write_scene

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_COMPARE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _relation_config(args) -> RelationConfig:
    return RelationConfig(args.eps_gap, args.eps_contact, args.eps_contain)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = "--in" if name == "inp" else "--" + name.replace("_", "-")
            raise UsageError(f"{args.command} requires {flag}")


def _labels_for(scene_dir: Path) -> dict:
    meta = scene_dir / "scene.json"
    if not meta.exists():
        return {}
    with open(meta) as fh:
        return {o["id"]: o["class"] for o in json.load(fh)["objects"]}


# --- subcommands --------------------------------------------------------------


def cmd_gen(args):
    _require(args, "out")
    manifest = generate_corpus(SceneSpec(seed=args.seed), args.scenes, args.out)
    n = sum(len(s["objects"]) for s in manifest["scenes"])
    print(f"wrote {len(manifest['scenes'])} scenes, {n} objects to {args.out}")


def cmd_features(args):
    _require(args, "inp", "out")
    src = Path(args.inp)
    rows = []
    if (src / "manifest.json").exists():
        scene_dirs = sorted(p for p in src.iterdir() if (p / "scene.json").exists())
        for d in scene_dirs:
            labels = _labels_for(d)
            for obj_id, mesh in load_scene_dir(d):
                rows.append((f"{d.name}/{obj_id}", labels.get(obj_id), extract_features(mesh)))
    else:
        labels = _labels_for(src)
        for obj_id, mesh in load_scene_dir(src):
            rows.append((obj_id, labels.get(obj_id), extract_features(mesh)))
    features_to_csv(rows, args.out)
    print(f"wrote {len(rows)} feature rows to {args.out}")


def cmd_train(args):
    _require(args, "inp", "out")
    src = Path(args.inp)
    csv_path = src / "features.csv" if src.is_dir() else src
    data = classifier.LabeledDataset.from_rows(features_from_csv(csv_path))
    train, valid, test = classifier.split(data, classifier.SplitSpec(seed=args.seed))
    models = [
        ("Decision tree", classifier.train_tree(train)),
        ("Random forest", classifier.train_forest(train, seed=args.seed)),
        ("K-nearest neighbors (KNN)", classifier.train_knn(train)),
    ]
    rows = [(name, classifier.evaluate(m, valid), classifier.evaluate(m, test))
            for name, m in models]
    print(f"split {len(train)}/{len(valid)}/{len(test)} (train/valid/test)")
    print(classifier.format_accuracy_table(rows))
    classifier.save_model(models[1][1], args.out)
    print(f"wrote random forest model to {args.out}")


def cmd_classify(args):
    _require(args, "inp", "model", "out")
    model = classifier.load_model(args.model)
    records = classify_objects(load_scene_dir(args.inp), model)
    with open(args.out, "w") as fh:
        fh.write("id,class,confidence\n")
        for r in records:
            fh.write(f"{r.id},{r.object_class},{r.confidence!r}\n")
    print(f"classified {len(records)} objects into {args.out}")


def cmd_relate(args):
    _require(args, "inp", "out")
    records = [ObjectRecord(i, m) for i, m in load_scene_dir(args.inp)]
    relations = infer_all(records, _relation_config(args))
    write_relations_csv(relations, args.out)
    print(f"wrote {len(relations)} relations to {args.out}")


def cmd_enrich(args):
    _require(args, "inp", "model", "out")
    model = classifier.load_model(args.model)
    result = enrich(load_scene_dir(args.inp), model, _relation_config(args))
    write_turtle(result.graph, args.out)
    g = result.graph
    print(f"wrote graph with {len(g.nodes)} nodes and {len(g.edges)} edges to {args.out}")


def _write_realized(objects, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for obj_id, kind, mesh in objects:
        write_ply(mesh, out / f"{obj_id}.ply")
        index.append({"id": obj_id, "class": kind, "file": f"{obj_id}.ply"})
    with open(out / "realized.json", "w") as fh:
        json.dump({"units": "m", "objects": index}, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_reconstruct(args):
    _require(args, "inp", "out")
    src = Path(args.inp)
    if src.suffix == ".json":
        plan = ReconstructionPlan.from_json(src.read_text())
    else:
        plan = plan_from_graph(read_turtle(src))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "plan.json").write_text(plan.to_json())
    objects = realize(plan)
    _write_realized(objects, out)
    print(f"wrote plan with {len(plan.commands)} commands and {len(objects)} meshes to {out}")


def cmd_roundtrip(args):
    if args.model:
        model = classifier.load_model(args.model)
    else:
        model = train_default_model(seed=args.seed + 1)
    cfg = _relation_config(args)
    failures = 0
    summary = []
    for name, sub, objects, truth in iter_scenes(SceneSpec(seed=args.seed), args.scenes):
        report, result, rebuilt = roundtrip(objects, model, cfg, args.tol)
        failures += not report.passed
        print(f"{name}: {report.to_text()}")
        summary.append({"scene": name, "seed": sub.seed, **report.to_dict()})
        if args.out:
            out = Path(args.out) / name
            write_scene(args.out, name, sub.seed, objects, truth)
            write_turtle(result.graph, out / "graph.ttl")
            plan = plan_from_graph(result.graph)
            (out / "plan.json").write_text(plan.to_json())
            _write_realized(rebuilt, out / "reconstructed")
            with open(out / "report.json", "w") as fh:
                json.dump(summary[-1], fh, indent=1, sort_keys=True)
                fh.write("\n")
    print(f"{args.scenes - failures}/{args.scenes} scenes passed")
    return EXIT_COMPARE if failures else EXIT_OK


COMMANDS = {
    "gen": (cmd_gen, "generate a labeled synthetic corpus"),
    "features": (cmd_features, "extract feature vectors to CSV"),
    "train": (cmd_train, "train DT/RF/KNN and print the accuracy table"),
    "classify": (cmd_classify, "predict object classes for a scene"),
    "relate": (cmd_relate, "infer adjacency and hosting relations"),
    "enrich": (cmd_enrich, "classify, relate, attribute, and write a Turtle graph"),
    "reconstruct": (cmd_reconstruct, "plan and realize a model from a Turtle graph"),
    "roundtrip": (cmd_roundtrip, "generate, enrich, reconstruct, and compare scenes"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bimenrich", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="inp")
        p.add_argument("--out")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--model")
        p.add_argument("--eps-gap", type=float, default=RelationConfig.eps_gap)
        p.add_argument("--eps-contact", type=float, default=RelationConfig.eps_contact)
        p.add_argument("--eps-contain", type=float, default=RelationConfig.eps_contain)
        p.add_argument("--tol", type=float, default=1e-3)
        p.add_argument("--scenes", type=int, default=32 if name == "gen" else 5)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if min(args.eps_gap, args.eps_contact, args.eps_contain, args.tol) < 0:
            raise UsageError("tolerances must be >= 0")
        if args.scenes < 1:
            raise UsageError("--scenes must be >= 1")
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        status = COMMANDS[args.command][0](args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BimEnrichError, OSError, ValueError, KeyError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_DATA
    return status or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
