"""Command-line interface: train, predict, inspect, export-dot.

Every command is batch-oriented and deterministic: identical inputs give
byte-identical outputs. Failures print exactly one ``error: <cause>`` line
to stderr and exit nonzero; per-row prediction detours (unseen categories,
missing values) are warnings on stderr, not failures.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Sequence

from .core import GrowthParams
from .errors import ChaidError
from .grow import train_tree
from .ingest import DatasetSchema, load_dataset, load_schema
from .model import Tree, load_model, save_model

__all__ = ["build_parser", "main", "entrypoint"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaidkit",
        description=(
            "Classification trees via chi-squared category merging and "
            "Bonferroni-adjusted split selection."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a tree from a data file and schema")
    train.add_argument("--data", required=True, help="training data file (delimited text)")
    train.add_argument("--schema", required=True, help="schema file (JSON)")
    train.add_argument("--model", required=True, help="where to write the model document")
    defaults = GrowthParams()
    train.add_argument(
        "--alpha-merge",
        type=float,
        default=defaults.alpha_merge,
        help="significance level for category merging (default %(default)s)",
    )
    train.add_argument(
        "--alpha-split",
        type=float,
        default=defaults.alpha_split,
        help="significance level a split must reach (default %(default)s)",
    )
    train.add_argument(
        "--max-depth",
        type=int,
        default=defaults.max_depth,
        help="maximum tree depth (default %(default)s)",
    )
    train.add_argument(
        "--min-parent",
        type=int,
        default=defaults.min_parent_size,
        help="smallest node that may still split (default %(default)s)",
    )
    train.add_argument(
        "--min-child",
        type=int,
        default=defaults.min_child_size,
        help="smallest child a split may create (default %(default)s)",
    )
    train.add_argument("--verbose", action="store_true", help="extra detail on stderr")

    predict = sub.add_parser("predict", help="route records through a trained model")
    predict.add_argument("--model", required=True, help="model document to apply")
    predict.add_argument("--data", required=True, help="input records (delimited text)")
    predict.add_argument("--out", required=True, help="where to write predictions")
    predict.add_argument("--verbose", action="store_true", help="extra detail on stderr")

    inspect = sub.add_parser("inspect", help="print the tree structure")
    inspect.add_argument("--model", required=True, help="model document to read")
    inspect.add_argument("--verbose", action="store_true", help="extra detail on stderr")

    export = sub.add_parser("export-dot", help="write the tree as Graphviz DOT text")
    export.add_argument("--model", required=True, help="model document to read")
    export.add_argument("--out", help="output file (default: stdout)")
    export.add_argument("--verbose", action="store_true", help="extra detail on stderr")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "train": cmd_train,
        "predict": cmd_predict,
        "inspect": cmd_inspect,
        "export-dot": cmd_export_dot,
    }
    try:
        return handlers[args.command](args)
    except ChaidError as exc:
        _fail(str(exc))
        return 1
    except OSError as exc:
        _fail(str(exc))
        return 1


def entrypoint() -> None:
    sys.exit(main())


def _fail(message: str) -> None:
    flat = " ".join(str(message).split())
    print(f"error: {flat}", file=sys.stderr)


def _format_p(p: float) -> str:
    return f"{p:.6g}"


def cmd_train(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    dataset = load_dataset(args.data, schema)
    params = GrowthParams(
        alpha_merge=args.alpha_merge,
        alpha_split=args.alpha_split,
        max_depth=args.max_depth,
        min_parent_size=args.min_parent,
        min_child_size=args.min_child,
    )
    if args.verbose:
        print(
            "params: "
            f"alpha_merge={params.alpha_merge} alpha_split={params.alpha_split} "
            f"max_depth={params.max_depth} min_parent_size={params.min_parent_size} "
            f"min_child_size={params.min_child_size}",
            file=sys.stderr,
        )
        for name, count in dataset.missing_counts.items():
            if count:
                print(f"missing values in {name!r}: {count}", file=sys.stderr)
    tree = train_tree(dataset, params)
    save_model(tree, args.model)

    terminals = tree.terminal_nodes()
    print(f"nodes: {len(tree.nodes)}, terminal: {len(terminals)}, depth: {tree.depth}")
    first_use: list[str] = []
    for node in tree.nodes:
        if node.split is not None and node.split.predictor not in first_use:
            first_use.append(node.split.predictor)
    print(f"split variables: {', '.join(first_use) if first_use else '(none)'}")
    for node in terminals:
        dist = tree.distribution(node.id)
        body = " ".join(
            f"{cls}:{_format_p(dist.probabilities[cls])}" for cls in tree.classes
        )
        print(f"leaf {node.id}: n={dist.support} {body}")
    return 0


def _used_predictors(tree: Tree) -> set[str]:
    return {
        node.split.predictor for node in tree.nodes if node.split is not None
    }


def cmd_predict(args: argparse.Namespace) -> int:
    tree = load_model(args.model)
    if tree.schema is None:
        raise ChaidError("model carries no schema; cannot parse raw data")
    used = _used_predictors(tree)
    echo = dict(tree.schema)
    echo["columns"] = [
        col
        for col in tree.schema.get("columns", [])
        if col.get("role") != "predictor" or col.get("name") in used
    ]
    schema = DatasetSchema.from_doc(echo)
    dataset = load_dataset(args.data, schema, require_target=False, keep_raw=True)
    assert dataset.header is not None and dataset.raw_rows is not None

    out_path = Path(args.out)
    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=schema.delimiter, lineterminator="\n")
        writer.writerow(
            list(dataset.header)
            + ["leaf_id", "predicted_class"]
            + [f"p_{cls}" for cls in tree.classes]
        )
        for row_number, (raw, record) in enumerate(
            zip(dataset.raw_rows, dataset.records), start=1
        ):
            notes: list[str] = []
            leaf_id = tree.route(record, warn=notes.append)
            for note in notes:
                print(f"warning: row {row_number}: {note}", file=sys.stderr)
            dist = tree.distribution(leaf_id)
            writer.writerow(
                list(raw)
                + [str(leaf_id), dist.modal_class()]
                + [repr(dist.probabilities[cls]) for cls in tree.classes]
            )
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    tree = load_model(args.model)

    def describe(node_id: int, via: str | None) -> None:
        node = tree.node(node_id)
        indent = "  " * node.depth
        origin = f" {via}" if via else ""
        if node.split is not None:
            print(
                f"{indent}node {node.id} [n={node.size}]{origin}; "
                f"split on {node.split.predictor}"
            )
            for group, child_id in zip(node.split.partition.groups, node.children):
                label = f"{node.split.predictor} in {{{', '.join(group)}}}"
                describe(child_id, label)
        else:
            dist = tree.distribution(node.id)
            body = " ".join(
                f"{cls}:{_format_p(dist.probabilities[cls])}" for cls in tree.classes
            )
            reason = node.stop_reason.value if node.stop_reason else "?"
            print(
                f"{indent}node {node.id} [n={node.size}]{origin}; "
                f"terminal ({reason}) {body}"
            )

    describe(0, None)
    return 0


def cmd_export_dot(args: argparse.Namespace) -> int:
    tree = load_model(args.model)
    text = tree.to_dot()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0
