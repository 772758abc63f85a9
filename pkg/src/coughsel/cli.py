"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .audio import load_manifest
from .errors import CoughselError, DataError, NumericError
from .features import FeatureExtractor, write_records, write_summary_csv
from .metrics import read_report_csv, render_report
from .pipeline import (
    DEFAULT_SWEEP,
    TrainConfig,
    evaluate_pipeline,
    load_model,
    predict_clip,
    save_model,
    sweep,
    train_pipeline,
)
from .selectors import write_importance_csv

log = logging.getLogger("coughsel")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(args) -> TrainConfig:
    config = TrainConfig()
    if getattr(args, "config", None):
        config = TrainConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    audio = config.audio
    if getattr(args, "sample_rate", None):
        audio = replace(audio, sample_rate=args.sample_rate)
    if getattr(args, "duration", None):
        audio = replace(audio, duration_s=args.duration)
    svm = config.svm
    if getattr(args, "svm_c", None) is not None:
        svm = replace(svm, C=args.svm_c)
    if getattr(args, "svm_tol", None) is not None:
        svm = replace(svm, tol=args.svm_tol)
    mfcc = config.mfcc
    if audio.sample_rate / 2 < mfcc.fmax:
        mfcc = replace(mfcc, fmax=audio.sample_rate / 2)
    return TrainConfig(audio, mfcc, svm, config.variance_target, config.selector_params)


def _extractor(args, config):
    return FeatureExtractor(config.audio, config.mfcc, cache_dir=getattr(args, "cache", None),
                            jobs=getattr(args, "jobs", 1))


def cmd_synth(args):
    from .synth import make_corpus
    path = make_corpus(args.out, args.n_train, args.n_test, args.sample_rate or 16000,
                       args.duration or 5.0, args.seed)
    print(f"wrote {path}")


def cmd_extract(args):
    config = _load_config(args)
    manifest = load_manifest(args.manifest)
    entries = [e for e in manifest if args.split in (None, e.split)]
    ex = _extractor(args, config)
    mats = ex.matrices([manifest.resolve(e) for e in entries], [e.path for e in entries])
    write_records(args.out, mats)
    if args.summary:
        write_summary_csv(args.summary, mats, [e.label for e in entries], [e.split for e in entries])
    print(f"wrote {len(mats)} MFCC records ({mats[0].shape[0]}x{mats[0].shape[1]}) to {args.out}")


def cmd_train(args):
    config = _load_config(args)
    manifest = load_manifest(args.manifest)
    model = train_pipeline(manifest, args.selector, args.k, config, args.seed, _extractor(args, config))
    save_model(model, args.model)
    print(f"PCA kept {model.pca.n_components_} components; SVM on {model.svm.coef_.shape[0]} features")
    if args.importance and model.selection is not None:
        write_importance_csv(args.importance, model.selection)
    print(f"saved {args.model}")


def cmd_evaluate(args):
    model = load_model(args.model)
    manifest = load_manifest(args.manifest)
    ex = FeatureExtractor(model.audio, model.mfcc, cache_dir=args.cache, jobs=args.jobs)
    cm, row = evaluate_pipeline(model, manifest, args.split, ex)
    text, csv_text = render_report([row])
    print(f"TP={cm.tp} FN={cm.fn} FP={cm.fp} TN={cm.tn}")
    print(text, end="")
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")


def cmd_predict(args):
    model = load_model(args.model)
    for path in args.wav:
        label, score = predict_clip(model, path)
        print(f"{path}\t{label}\t{score!r}")


def cmd_sweep(args):
    config = _load_config(args)
    manifest = load_manifest(args.manifest)
    rows, _ = sweep(manifest, DEFAULT_SWEEP, config, args.seed, _extractor(args, config),
                    models_out=args.models)
    text, csv_text = render_report(rows)
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8")
        (out / "report.csv").write_text(csv_text, encoding="utf-8")


def cmd_report(args):
    text, csv_text = render_report(read_report_csv(args.input))
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")


def build_parser():
    p = _Parser(prog="coughsel", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, manifest=True):
        if manifest:
            sp.add_argument("--manifest", required=True, help="CSV with path,label,split")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jobs", type=int, default=1, help="parallel feature extraction workers")
        sp.add_argument("--cache", help="directory for cached MFCC records")
        sp.add_argument("--config", help="JSON config (audio, mfcc, svm, selector_params)")
        sp.add_argument("--sample-rate", type=int)
        sp.add_argument("--duration", type=float)

    sp = sub.add_parser("synth", help="write a synthetic cough/non-cough corpus")
    sp.add_argument("--out", required=True)
    sp.add_argument("--n-train", type=int, default=200, help="per class")
    sp.add_argument("--n-test", type=int, default=60, help="per class")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--sample-rate", type=int)
    sp.add_argument("--duration", type=float)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("extract", help="dump MFCC matrices as binary records")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--split", choices=["train", "test"])
    sp.add_argument("--summary", help="optional CSV summary")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("train", help="train one detector")
    common(sp)
    sp.add_argument("--selector", choices=["none", "random_frog", "frog", "uve", "vip"], default="none")
    sp.add_argument("--k", type=int)
    sp.add_argument("--svm-c", type=float)
    sp.add_argument("--svm-tol", type=float)
    sp.add_argument("--model", required=True, help="output model JSON")
    sp.add_argument("--importance", help="write feature importance CSV")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="metrics of a model on a manifest split")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--split", choices=["train", "test"], default="test")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--cache")
    sp.add_argument("--out", help="write metrics CSV")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("predict", help="classify WAV files")
    sp.add_argument("--model", required=True)
    sp.add_argument("wav", nargs="+")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("sweep", help="train and test all 15 configurations")
    common(sp)
    sp.add_argument("--svm-c", type=float)
    sp.add_argument("--svm-tol", type=float)
    sp.add_argument("--out", help="directory for report.txt and report.csv")
    sp.add_argument("--models", help="directory to save every trained model")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="render a report CSV as a table")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "selector", "none") not in ("none", None) and getattr(args, "k", None) is None:
        parser.error("--k is required with --selector")
    try:
        args.func(args)
    except NumericError as exc:
        print(f"numeric failure{f' in {exc.stage}' if exc.stage else ''}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError, CoughselError) as exc:
        stage = getattr(exc, "stage", None)
        print(f"data error{f' in {stage}' if stage else ''}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
