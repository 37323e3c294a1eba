"""Command-line surface for the disguising workflow.

Subcommands: keygen, disguise, invert, eval-visual, eval-membership,
keyspace, export.  Reports are line-oriented ``key=value`` pairs so
scripts can grep them.  Exit codes: 0 success, 1 usage error, 2 data or
format error, 3 invariant violation or other library error.

Set ``DISGUISE_LOG=error|info|debug`` to control logging verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import attack_eval, dataset_io
from .data import DISGUISED, ORIGINAL, LabeledDataset
from .errors import DisguiseError, FormatError
from .keys import generate_key, load_key, save_key
from .keyspace import log2_combined_keyspace, log2_orthogonal_count
from .transform import disguise_dataset, invert_dataset

log = logging.getLogger("imgdisguise")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3

FORMATS = ("idx", "cifar10", "dgt")


class UsageError(Exception):
    """Flag combinations argparse cannot express (missing --labels, ...)."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the CLI contract says 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dataset_flags(parser, required=True, help_noun="input dataset"):
    parser.add_argument("--input", required=required, help=f"path to the {help_noun}")
    parser.add_argument(
        "--format",
        choices=FORMATS,
        default="dgt",
        help=f"container format of the {help_noun}",
    )
    parser.add_argument(
        "--labels", help=f"label file for the {help_noun} (idx format only)"
    )


def _load_dataset(path, fmt, labels_path, class_count) -> LabeledDataset:
    data = Path(path).read_bytes()
    if fmt == "idx":
        if labels_path is None:
            raise UsageError(f"--labels is required for idx input {path}")
        labels = Path(labels_path).read_bytes()
        return dataset_io.load_idx_dataset(data, labels, class_count=class_count)
    if fmt == "cifar10":
        return dataset_io.read_cifar10_bin(data)
    return dataset_io.read_dgt(data)


# -- subcommands -------------------------------------------------------------


def cmd_keygen(args) -> int:
    key = generate_key(
        channels=args.channels,
        height=args.height,
        width=args.width,
        block_rows=args.block_rows,
        block_cols=args.block_cols,
        matrix_kind=args.matrix_kind,
        noise_level=args.noise_level,
        class_count=args.classes,
        seed=args.seed,
    )
    save_key(args.out, key)
    print(f"key_file={args.out}")
    print(f"blocks={key.block_count}")
    print(f"matrix_dim={key.block_rows}")
    print(f"matrix_kind={key.matrix_kind.name.lower()}")
    print(f"noise_level={key.noise_level:g}")
    return EXIT_OK


def cmd_disguise(args) -> int:
    key = load_key(args.key)
    dataset = _load_dataset(args.input, args.format, args.labels, key.class_count)
    start = time.perf_counter()
    disguised = disguise_dataset(dataset, key, base_seed=args.seed, jobs=args.jobs)
    elapsed = time.perf_counter() - start
    dataset_io.save_dgt(args.out, disguised)
    print(f"images={len(disguised)}")
    if len(disguised):
        print(f"mean_image_ms={1000.0 * elapsed / len(disguised):.3f}")
    print(f"out_file={args.out}")
    return EXIT_OK


def cmd_invert(args) -> int:
    key = load_key(args.key)
    dataset = dataset_io.load_dgt(args.input)
    recovered = invert_dataset(dataset, key, jobs=args.jobs)
    dataset_io.save_dgt(args.out, recovered)
    print(f"images={len(recovered)}")
    print(f"out_file={args.out}")
    return EXIT_OK


def cmd_eval_visual(args) -> int:
    key = load_key(args.key)
    train = _load_dataset(args.input, args.format, args.labels, key.class_count)
    if train.space != ORIGINAL:
        raise UsageError("the examiner must be trained on an original-space dataset")
    test = dataset_io.load_dgt(args.test)
    examiner = attack_eval.train_examiner(
        train, neighbor_count=args.knn_k, subsample=args.subsample, seed=args.seed
    )
    if test.space == DISGUISED:
        # Stored labels went through the key's label permutation; score in
        # the examiner's label space.
        unmapped = np.argsort(key.label_permutation)[test.labels]
        test = LabeledDataset(test.images, unmapped, test.class_count, ORIGINAL)
    accuracy = attack_eval.examiner_accuracy(examiner, test)
    print(f"examiner_accuracy={accuracy:.4f}")
    print(f"visual_privacy={attack_eval.visual_privacy(accuracy):.4f}")
    return EXIT_OK


def _probe_groups(examiner, args, which):
    path = getattr(args, f"{which}_probes")
    fmt = getattr(args, f"{which}_probes_format")
    labels = getattr(args, f"{which}_probes_labels")
    probes = _load_dataset(path, fmt, labels, examiner.class_count)
    predictions = attack_eval.predict(examiner, probes.images)
    return attack_eval.group_predictions(probes.labels, predictions)


def cmd_eval_membership(args) -> int:
    if args.predictions is not None:
        in_csv, out_csv = args.predictions
        in_groups = attack_eval.group_predictions(
            *attack_eval.read_predictions_csv(Path(in_csv).read_text())
        )
        out_groups = attack_eval.group_predictions(
            *attack_eval.read_predictions_csv(Path(out_csv).read_text())
        )
        class_count = args.classes
    else:
        for flag in ("input", "in_probes", "out_probes"):
            if getattr(args, flag) is None:
                raise UsageError(
                    f"--{flag.replace('_', '-')} is required without --predictions"
                )
        train = _load_dataset(args.input, args.format, args.labels, args.classes)
        examiner = attack_eval.train_examiner(
            train, neighbor_count=args.knn_k, subsample=args.subsample, seed=args.seed
        )
        in_groups = _probe_groups(examiner, args, "in")
        out_groups = _probe_groups(examiner, args, "out")
        class_count = examiner.class_count
    report = attack_eval.membership_attack_report(
        in_groups, out_groups, class_count, alpha=args.alpha
    )
    print(attack_eval.render_report(report))
    return EXIT_OK


def cmd_keyspace(args) -> int:
    print("lower-bound order-of-magnitude keyspace accounting")
    print(f"matrix_log2={log2_orthogonal_count(args.h_bits, args.matrix_dim)}")
    print(
        f"keyspace_log2={log2_combined_keyspace(args.h_bits, args.matrix_dim, args.shares)}"
    )
    return EXIT_OK


def cmd_export(args) -> int:
    dataset = _load_dataset(args.input, args.format, args.labels, args.classes)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    end = min(args.start + args.count, len(dataset))
    if args.start >= len(dataset):
        raise UsageError(
            f"--start {args.start} is beyond the dataset ({len(dataset)} images)"
        )
    suffix = "pgm" if dataset.geometry[0] == 1 else "ppm"
    for i in range(args.start, end):
        payload = dataset_io.export_pnm(dataset.images[i], normalization=args.normalize)
        path = out_dir / f"sample_{i:05d}_class{dataset.labels[i]}.{suffix}"
        path.write_bytes(payload)
        print(f"wrote={path}")
    return EXIT_OK


# -- argument wiring -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="imgdisguise", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate and save a disguising key")
    p.add_argument("--channels", type=int, default=1, choices=(1, 3))
    p.add_argument("--height", type=int, default=28)
    p.add_argument("--width", type=int, default=28)
    p.add_argument("--block-rows", type=int, default=7)
    p.add_argument("--block-cols", type=int, default=7)
    p.add_argument(
        "--matrix-kind",
        choices=("orthogonal", "projection", "identity"),
        default="orthogonal",
    )
    p.add_argument("--noise-level", type=float, default=100.0)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("disguise", help="disguise a dataset into a DGT container")
    p.add_argument("--key", required=True)
    _dataset_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_disguise)

    p = sub.add_parser("invert", help="invert a disguised DGT container")
    p.add_argument("--key", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser(
        "eval-visual",
        help="train an examiner on originals and score it on disguised images",
    )
    p.add_argument("--key", required=True)
    _dataset_flags(p, help_noun="original training set")
    p.add_argument("--test", required=True, help="disguised DGT container to score")
    p.add_argument("--knn-k", type=int, default=1)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval_visual)

    p = sub.add_parser(
        "eval-membership",
        help="class-membership attack report from probe predictions",
    )
    _dataset_flags(p, required=False, help_noun="model training set")
    p.add_argument("--in-probes", help="probe set for in-training classes")
    p.add_argument("--in-probes-format", choices=FORMATS, default="idx")
    p.add_argument("--in-probes-labels")
    p.add_argument("--out-probes", help="probe set for out-training classes")
    p.add_argument("--out-probes-format", choices=FORMATS, default="idx")
    p.add_argument("--out-probes-labels")
    p.add_argument(
        "--predictions",
        nargs=2,
        metavar=("IN_CSV", "OUT_CSV"),
        help="skip the built-in model; read external-model predictions",
    )
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--knn-k", type=int, default=1)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval_membership)

    p = sub.add_parser("keyspace", help="log2 keyspace accounting")
    p.add_argument("--h-bits", type=int, required=True)
    p.add_argument("--matrix-dim", type=int, required=True)
    p.add_argument("--shares", type=int, default=1)
    p.set_defaults(func=cmd_keyspace)

    p = sub.add_parser("export", help="dump images as PGM/PPM files")
    _dataset_flags(p)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument(
        "--normalize", choices=(dataset_io.CLAMP, dataset_io.MINMAX), default=dataset_io.CLAMP
    )
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("DISGUISE_LOG", "error").upper(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DisguiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def entry():  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
