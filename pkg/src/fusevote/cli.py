"""Command-line front end.

Subcommands: evaluate, select, fuse, tune, vote, run, replay-selection,
prep. Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import fit
from .classifiers.base import FAMILIES
from .data import (
    SplitSpec,
    concat_columns,
    load_feature_set,
    save_feature_set,
    split,
)
from .ensemble import (
    EvaluationTable,
    FamilyRule,
    VoteSpec,
    evaluate_feature_sets,
    normalize_family,
    select_top_k,
    vote_predict,
)
from .errors import ConfigError, DataError, FusevoteError
from .harness import parse_config, read_labels_file, replay_selection, run_pipeline
from .hpo import grid_search, stock_grid, trials_to_csv
from .imgprep import CropParams, augment_expand, crop_or_resize, read_pgm, write_pgm


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", type=Path, help="output directory or file")


def _load_sets(features_dir: Path):
    paths = sorted(Path(features_dir).glob("*.fset"))
    if not paths:
        raise ConfigError(f"no .fset files in {features_dir}")
    return [load_feature_set(p) for p in paths]


def _families_arg(raw: str | None) -> list[str]:
    if not raw:
        return list(FAMILIES)
    return [normalize_family(tok) for tok in raw.split(",") if tok.strip()]


class _Settings:
    """Effective settings for standalone subcommands: config file values
    where present, overridden by explicit flags."""

    def __init__(self, args):
        cfg = parse_config(args.config, require_paths=False) if args.config else None
        self.seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
        self.folds = getattr(args, "folds", None) or (cfg.folds if cfg else 5)
        raw = getattr(args, "families", None)
        if raw:
            self.families = _families_arg(raw)
        elif cfg:
            self.families = list(cfg.families)
        else:
            self.families = list(FAMILIES)
        self.grids = cfg.grids() if cfg else {}
        self.jobs = getattr(args, "jobs", 1)

    def grid_for(self, family: str, n_classes: int):
        return self.grids.get(family) or stock_grid(family, n_classes)


def _cmd_evaluate(args) -> int:
    settings = _Settings(args)
    sets = _load_sets(args.features_dir)
    table = evaluate_feature_sets(
        sets, settings.families, folds=settings.folds,
        seed=settings.seed, grids=settings.grids or None, n_jobs=settings.jobs)
    out = args.out or Path("evaluation.csv")
    table.to_csv(out)
    print(f"wrote {out}")
    return 0


def _cmd_select(args) -> int:
    table = EvaluationTable.from_csv(args.table)
    rule = None if args.no_family_rule else FamilyRule.for_ids(table.extractor_ids)
    for ident in select_top_k(table, args.k, rule):
        print(ident)
    return 0


def _cmd_replay(args) -> int:
    replay_selection(args.table, args.k)
    return 0


def _cmd_fuse(args) -> int:
    by_id = {ds.source_tag: ds for ds in _load_sets(args.features_dir)}
    wanted = [tok.strip() for tok in args.ids.split(",") if tok.strip()]
    missing = [i for i in wanted if i not in by_id]
    if missing:
        raise ConfigError(f"feature sets not found: {missing}")
    fused = concat_columns([by_id[i] for i in wanted])
    out = args.out or Path(f"{'_PLUS_'.join(wanted)}.fset")
    save_feature_set(fused, out)
    print(f"wrote {out} ({fused.rows}x{fused.cols})")
    return 0


def _cmd_tune(args) -> int:
    settings = _Settings(args)
    ds = load_feature_set(args.features_file)
    family = normalize_family(args.family)
    grid = settings.grid_for(family, ds.class_count)
    best, trials = grid_search(ds, grid, folds=settings.folds,
                               seed=settings.seed, n_jobs=settings.jobs)
    winner = max(t.mean for t in trials)
    print(f"{family}: best CV accuracy {winner:.4f} with {best.hyperparams}")
    if args.out:
        trials_to_csv(grid, trials, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_vote(args) -> int:
    settings = _Settings(args)
    ds = load_feature_set(args.features_file)
    families = _families_arg(args.families)
    if len(families) not in (2, 3):
        raise ConfigError("vote needs 2 or 3 families")
    seed = settings.seed
    train, test = split(ds, SplitSpec(args.train_fraction, seed, stratified=True))
    members = []
    for family in families:
        best, _ = grid_search(train, settings.grid_for(family, ds.class_count),
                              folds=settings.folds, seed=seed, n_jobs=settings.jobs)
        members.append(fit(train, best))
    pred = vote_predict(members, test.features, VoteSpec.for_members(members))
    accuracy = float(np.mean(pred == test.labels))
    print(f"vote[{'+'.join(families)}] test accuracy: {accuracy:.4f}")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write("row,true,pred\n")
            for i, (t, p) in enumerate(zip(test.labels, pred)):
                fh.write(f"{i},{int(t)},{int(p)}\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run requires --config")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    cfg = parse_config(args.config, overrides)
    report = run_pipeline(cfg)
    print(f"selected: {', '.join(report.selected_extractors)}")
    print(f"report written to {report.output_dir}")
    return 0


def _cmd_prep(args) -> int:
    in_dir, out_dir = Path(args.input), Path(args.out or "prepped")
    out_dir.mkdir(parents=True, exist_ok=True)
    params = CropParams(
        threshold=args.threshold, morph_iterations=args.morph,
        blur_radius=args.blur, target_size=(args.size, args.size))
    images = sorted(in_dir.glob("*.pgm"))
    if not images:
        raise ConfigError(f"no .pgm files in {in_dir}")
    for path in images:
        img = crop_or_resize(read_pgm(path), params)
        if args.augment:
            for i, variant in enumerate(augment_expand(img)):
                write_pgm(variant, out_dir / f"{path.stem}_aug{i}.pgm")
        else:
            write_pgm(img, out_dir / path.name)
    print(f"processed {len(images)} image(s) into {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusevote",
        description="feature-fusion + classifier-vote ensemble experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="tuned CV accuracy of every set x family")
    p.add_argument("--features-dir", type=Path, required=True)
    p.add_argument("--families", help="comma-separated family names")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("select", help="top-k rows of an evaluation table")
    p.add_argument("--table", type=Path, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--no-family-rule", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("replay-selection", help="selection with full rank trace")
    p.add_argument("--table", type=Path, required=True)
    p.add_argument("--k", type=int, default=3)
    _add_common(p)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("fuse", help="concatenate named feature sets into one file")
    p.add_argument("--features-dir", type=Path, required=True)
    p.add_argument("--ids", required=True, help="comma-separated extractor ids")
    _add_common(p)
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("tune", help="grid-search one family on one feature set")
    p.add_argument("--features-file", type=Path, required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("vote", help="tune, fit and vote 2-3 families on one set")
    p.add_argument("--features-file", type=Path, required=True)
    p.add_argument("--families", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--jobs", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_vote)

    p = sub.add_parser("run", help="full pipeline from a config file")
    _add_common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("prep", help="crop/resize (and optionally augment) PGM images")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--size", type=int, default=224)
    p.add_argument("--threshold", type=int, default=45)
    p.add_argument("--morph", type=int, default=2)
    p.add_argument("--blur", type=int, default=2)
    p.add_argument("--augment", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_prep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except FusevoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
