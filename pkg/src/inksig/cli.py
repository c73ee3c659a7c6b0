"""Command-line interface.

Subcommands: ingest, stats, render, train, eval, sweep. Every option can
also be supplied through a key=value config file (--config FILE);
explicit flags override file values, file values override built-in
defaults. Train, eval and sweep require a seed and write a JSON run
ledger describing configuration, per-epoch metrics, result tables and
artifact paths.
"""

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .cnn import PAPER_CONV_WIDTHS, PAPER_FC_UNITS, load_model, save_model
from .dataset import (Corpus, SplitSpec, load_corpus_jsonl, make_split,
                      parse_pot, save_corpus_jsonl, stroke_stats)
from .dropstroke import MODE_UNIFORM_M, DropPolicy
from .errors import ConfigError, InkError
from .evaluation import (GROUP_SIZES_DEFAULT, TOPK_DEFAULT, group_rank_table,
                         predict_corpus, write_rank_csv, write_summary_json)
from .ledger import RunLedger
from .pipeline import TrainSettings, train_writer_model
from .rasterize import export_images, render
from .signature import sig_dim
from .trajectory import normalize


# ---------------------------------------------------------------------------
# option resolution: flag > config file > default
# ---------------------------------------------------------------------------

def _to_bool(s):
    v = str(s).strip().lower()
    if v in ("on", "true", "1", "yes"):
        return True
    if v in ("off", "false", "0", "no"):
        return False
    raise ConfigError(f"expected on|off, got {s!r}")


def _to_int_list(s):
    return tuple(int(p) for p in str(s).split(",") if p.strip())


def load_config_file(path) -> dict:
    """Flat key=value file; '#' starts a comment; keys match flag names."""
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key=value, got {raw.strip()!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip().strip("\"'")
    return out


class Options:
    """Layered view over parsed args, a config file, and defaults."""

    def __init__(self, args, schema):
        self.args = vars(args)
        self.schema = schema
        self.filecfg = {}
        if self.args.get("config"):
            self.filecfg = load_config_file(self.args["config"])
        for key in self.filecfg:
            if key not in schema:
                raise ConfigError(f"unknown config key: --{key.replace('_', '-')}")

    def get(self, name):
        conv, default, required = self.schema[name]
        if self.args.get(name) is not None:
            raw = self.args[name]
        elif name in self.filecfg:
            raw = self.filecfg[name]
        else:
            if required and default is None:
                raise ConfigError(f"--{name.replace('_', '-')} is required")
            return default
        try:
            return conv(raw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad value for --{name.replace('_', '-')}: {e}") from e

    def echo(self):
        """Resolved configuration for the ledger."""
        return {name: _jsonable(self.get(name)) for name in self.schema}


def _jsonable(v):
    if isinstance(v, tuple):
        return list(v)
    return v


# schemas: dest -> (converter, default, required)
_ARCH_SCHEMA = {
    "level": (int, 3, False),
    "window": (int, 2, False),
    "widths": (_to_int_list, tuple(PAPER_CONV_WIDTHS), False),
    "fc_units": (int, PAPER_FC_UNITS, False),
}

_TRAIN_SCHEMA = {
    **_ARCH_SCHEMA,
    "split_classes": (int, None, True),
    "epochs": (int, 10, False),
    "seed": (int, None, True),
    "dropstroke": (_to_bool, True, False),
    "drop_mode": (str, MODE_UNIFORM_M, False),
    "max_drop_frac": (float, 0.5, False),
    "distort": (_to_bool, True, False),
    "quota": (int, 60, False),
    "minibatch": (int, 100, False),
    "lr": (float, 0.01, False),
    "lr_decay": (float, 0.7, False),
}

_EVAL_SCHEMA = {
    "tests_per_char": (int, 1, False),
    "group_sizes": (_to_int_list, tuple(GROUP_SIZES_DEFAULT), False),
    "topk": (_to_int_list, tuple(TOPK_DEFAULT), False),
    "window": (int, 2, False),
    "seed": (int, None, True),
    "combine": (str, "mean", False),
    "drop_mode": (str, MODE_UNIFORM_M, False),
    "max_drop_frac": (float, 0.5, False),
    "split_side": (str, "test", False),
}


def build_parser():
    p = argparse.ArgumentParser(prog="inksig", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="key=value config file; flags override it")
        return sp

    sp = add("ingest", "convert POT or JSONL ink files into one corpus.jsonl")
    sp.add_argument("--format", choices=("pot", "jsonl"), required=True)
    sp.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="PATH")
    sp.add_argument("--out", required=True)
    sp.add_argument("--swap-tag-bytes", action="store_const", const="on")
    sp.set_defaults(run=cmd_ingest)

    sp = add("stats", "stroke-count histogram, optionally after DropStroke expansion")
    sp.add_argument("--in", dest="inputs", required=True, metavar="corpus.jsonl")
    sp.add_argument("--dropstroke", nargs="?", const="on")
    sp.add_argument("--out", required=True)
    sp.set_defaults(run=cmd_stats)

    sp = add("render", "export signature feature maps as PGM images")
    sp.add_argument("--in", dest="inputs", required=True, metavar="corpus.jsonl")
    sp.add_argument("--level", type=str)
    sp.add_argument("--window", type=str)
    sp.add_argument("--equalize", nargs="?", const="on")
    sp.add_argument("--limit", type=str, help="render only the first N characters")
    sp.add_argument("--out", required=True)
    sp.set_defaults(run=cmd_render)

    sp = add("train", "train a writer-identification network")
    sp.add_argument("--in", dest="inputs", required=True, metavar="corpus.jsonl")
    sp.add_argument("--level", type=str)
    sp.add_argument("--window", type=str)
    sp.add_argument("--split-classes", type=str, help="number of character classes for training")
    sp.add_argument("--writers-file", help="optional file of writer ids to enroll")
    sp.add_argument("--epochs", type=str)
    sp.add_argument("--seed", type=str)
    sp.add_argument("--dropstroke", type=str, help="on|off")
    sp.add_argument("--drop-mode", type=str)
    sp.add_argument("--max-drop-frac", type=str)
    sp.add_argument("--distort", type=str, help="on|off")
    sp.add_argument("--quota", type=str, help="training samples per writer per epoch")
    sp.add_argument("--minibatch", type=str)
    sp.add_argument("--lr", type=str)
    sp.add_argument("--lr-decay", type=str)
    sp.add_argument("--widths", type=str, help="conv widths, comma separated")
    sp.add_argument("--fc-units", type=str)
    sp.add_argument("--out", required=True, metavar="model.bin")
    sp.set_defaults(run=cmd_train)

    sp = add("eval", "rank-table evaluation of a trained model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--in", dest="inputs", required=True, metavar="corpus.jsonl")
    sp.add_argument("--tests-per-char", type=str)
    sp.add_argument("--group-sizes", type=str)
    sp.add_argument("--topk", type=str)
    sp.add_argument("--window", type=str)
    sp.add_argument("--seed", type=str)
    sp.add_argument("--combine", type=str)
    sp.add_argument("--drop-mode", type=str)
    sp.add_argument("--max-drop-frac", type=str)
    sp.add_argument("--split-file", help="class split JSON written by train")
    sp.add_argument("--split-side", type=str, help="train|test side of --split-file")
    sp.add_argument("--out", required=True, metavar="results/")
    sp.set_defaults(run=cmd_eval)

    sp = add("sweep", "error-vs-epoch curves across signature levels and DropStroke")
    sp.add_argument("--in", dest="inputs", required=True, metavar="corpus.jsonl")
    sp.add_argument("--levels", type=str)
    sp.add_argument("--dropstroke", type=str, help="on|off|both")
    sp.add_argument("--window", type=str)
    sp.add_argument("--split-classes", type=str)
    sp.add_argument("--epochs", type=str)
    sp.add_argument("--seed", type=str)
    sp.add_argument("--quota", type=str)
    sp.add_argument("--minibatch", type=str)
    sp.add_argument("--lr", type=str)
    sp.add_argument("--lr-decay", type=str)
    sp.add_argument("--widths", type=str)
    sp.add_argument("--fc-units", type=str)
    sp.add_argument("--out", required=True, metavar="DIR")
    sp.set_defaults(run=cmd_sweep)
    return p


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ingest(args):
    chars = []
    for path in args.inputs:
        if args.format == "pot":
            with open(path, "rb") as f:
                data = f.read()
            writer = os.path.splitext(os.path.basename(path))[0]
            chars.extend(parse_pot(data, writer, swap_tag_bytes=bool(args.swap_tag_bytes)))
        else:
            chars.extend(load_corpus_jsonl(path).characters)
    save_corpus_jsonl(Corpus(chars, provenance=args.format), args.out)
    print(f"ingested {len(chars)} characters -> {args.out}")
    return 0


def cmd_stats(args):
    corpus = load_corpus_jsonl(args.inputs)
    with_ds = args.dropstroke is not None and _to_bool(args.dropstroke)
    hist, total = stroke_stats(corpus, with_dropstroke=with_ds)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["strokes", "characters"])
        for n in sorted(hist):
            w.writerow([n, hist[n]])
        w.writerow(["total", total])
    print(f"total_characters={total}")
    return 0


def cmd_render(args):
    opts = Options(args, {
        "level": (int, 3, False),
        "window": (int, 2, False),
        "limit": (int, 0, False),
    })
    corpus = load_corpus_jsonl(args.inputs)
    level, window, limit = opts.get("level"), opts.get("window"), opts.get("limit")
    equalized = args.equalize is not None and _to_bool(args.equalize)
    chars = corpus.characters[:limit] if limit else corpus.characters
    for i, ch in enumerate(chars):
        t = render(normalize(ch), level, window)
        sub = os.path.join(args.out, f"char{i:04d}_{ch.writer_id}_{ch.char_label}")
        export_images(t, sub, equalized=equalized)
    print(f"rendered {len(chars)} characters at level {level} -> {args.out}")
    return 0


def _settings_from_options(opts):
    return TrainSettings(
        seed=opts.get("seed"),
        level=opts.get("level"),
        delta=opts.get("window"),
        dropstroke=opts.get("dropstroke"),
        drop_mode=opts.get("drop_mode"),
        max_drop_fraction=opts.get("max_drop_frac"),
        distort=opts.get("distort"),
        conv_widths=opts.get("widths"),
        fc_units=opts.get("fc_units"),
        epochs=opts.get("epochs"),
        quota=opts.get("quota"),
        minibatch=opts.get("minibatch"),
        lr=opts.get("lr"),
        lr_decay=opts.get("lr_decay"),
    )


def _load_train_corpus(args, opts):
    corpus = load_corpus_jsonl(args.inputs)
    if getattr(args, "writers_file", None):
        with open(args.writers_file, "r", encoding="utf-8") as f:
            wanted = {line.strip() for line in f if line.strip()}
        corpus = Corpus([c for c in corpus.characters if c.writer_id in wanted],
                        corpus.provenance)
        if not corpus.characters:
            raise ConfigError(f"no corpus characters match writers in {args.writers_file}")
    split = SplitSpec.random(corpus.char_labels(), opts.get("split_classes"),
                             opts.get("seed"))
    return corpus, split


def cmd_train(args):
    opts = Options(args, _TRAIN_SCHEMA)
    settings = _settings_from_options(opts)
    corpus, split = _load_train_corpus(args, opts)
    train_corpus, test_corpus = make_split(corpus, split)
    t0 = time.perf_counter()
    net, rows, writers = train_writer_model(train_corpus, settings)
    seconds = time.perf_counter() - t0
    save_model(net, args.out)
    split_path = args.out + ".split.json"
    with open(split_path, "w", encoding="utf-8") as f:
        json.dump({"train": sorted(split.train_labels),
                   "test": sorted(split.test_labels),
                   "writers": writers}, f, indent=2, sort_keys=True)
    led = RunLedger(
        command="train",
        config={**opts.echo(), "in": args.inputs, "out": args.out,
                "writers": writers},
        epochs=rows,
        artifacts={"model": args.out, "split": split_path},
        timings={"train_seconds": round(seconds, 3)},
    )
    ledger_path = args.out + ".ledger.json"
    led.write(ledger_path)
    final_err = rows[-1]["top1_error"] if rows else None
    print(f"trained {len(writers)} writers on {len(train_corpus)} characters "
          f"({len(test_corpus)} held out); "
          f"final train top-1 error {final_err}; model -> {args.out}")
    return 0


def cmd_eval(args):
    opts = Options(args, _EVAL_SCHEMA)
    net = load_model(args.model)
    corpus = load_corpus_jsonl(args.inputs)
    if args.split_file:
        with open(args.split_file, "r", encoding="utf-8") as f:
            split = json.load(f)
        side = opts.get("split_side")
        if side not in ("train", "test"):
            raise ConfigError(f"--split-side must be train or test, got {side!r}")
        keep = set(split[side])
        corpus = Corpus([c for c in corpus.characters if c.char_label in keep],
                        corpus.provenance)
    writers = corpus.writers()
    level = int(np.log2(net.input_channels + 1)) - 1
    if sig_dim(level) != net.input_channels:
        raise ConfigError(f"model has {net.input_channels} channels, not a signature dimension")
    policy = DropPolicy(mode=opts.get("drop_mode"),
                        max_drop_fraction=opts.get("max_drop_frac"))
    k = opts.get("tests_per_char")
    t0 = time.perf_counter()
    probs, labels = predict_corpus(net, corpus, writers, tests_per_char=k,
                                   policy=policy, seed=opts.get("seed"),
                                   level=level, delta=opts.get("window"))
    tables = {}
    for g in opts.get("group_sizes"):
        tables[str(g)] = group_rank_table(probs, labels, g, ks=opts.get("topk"),
                                          combine=opts.get("combine"))
    seconds = time.perf_counter() - t0
    os.makedirs(args.out, exist_ok=True)
    paths = {}
    for g, table in tables.items():
        path = os.path.join(args.out, f"rank_g{int(g):03d}.csv")
        write_rank_csv(path, table)
        paths[g] = path
    summary = {"config": {**opts.echo(), "model": args.model, "in": args.inputs},
               "level": level, "writers": writers, "tables": tables,
               "n_characters": len(corpus.characters)}
    summary_path = os.path.join(args.out, "summary.json")
    write_summary_json(summary_path, summary)
    led = RunLedger(
        command="eval",
        config={**opts.echo(), "model": args.model, "in": args.inputs},
        tables=tables,
        artifacts={**paths, "summary": summary_path},
        timings={"eval_seconds": round(seconds, 3)},
    )
    led.write(os.path.join(args.out, "run_ledger.json"))
    top1 = tables.get("1", next(iter(tables.values())))
    print(f"evaluated {len(corpus.characters)} characters over {len(writers)} writers; "
          f"top-1 at g=1: {top1.get(1, float('nan')):.4f}; results -> {args.out}")
    return 0


def cmd_sweep(args):
    schema = {**_TRAIN_SCHEMA}
    del schema["dropstroke"]
    schema["levels"] = (_to_int_list, (0, 1, 2, 3), False)
    schema["dropstroke"] = (str, "both", False)
    opts = Options(args, schema)
    corpus, split = _load_train_corpus(args, opts)
    train_corpus, _ = make_split(corpus, split)
    ds_mode = opts.get("dropstroke")
    if ds_mode not in ("on", "off", "both"):
        raise ConfigError(f"--dropstroke must be on, off or both, got {ds_mode!r}")
    ds_values = {"on": (True,), "off": (False,), "both": (True, False)}[ds_mode]
    os.makedirs(args.out, exist_ok=True)
    rows_out = []
    timings = {}
    for level in opts.get("levels"):
        for ds in ds_values:
            settings = _settings_from_options(opts)
            settings.level = level
            settings.dropstroke = ds
            t0 = time.perf_counter()
            _, rows, _ = train_writer_model(train_corpus, settings)
            timings[f"level{level}_ds{'on' if ds else 'off'}_seconds"] = round(
                time.perf_counter() - t0, 3)
            for r in rows:
                rows_out.append((level, "on" if ds else "off", r["epoch"], r["top1_error"]))
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["level", "dropstroke", "epoch", "top1_error"])
        w.writerows(rows_out)
    led = RunLedger(
        command="sweep",
        config={**opts.echo(), "in": args.inputs, "out": args.out},
        epochs=[{"level": r[0], "dropstroke": r[1], "epoch": r[2], "top1_error": r[3]}
                for r in rows_out],
        artifacts={"sweep_csv": csv_path},
        timings=timings,
    )
    led.write(os.path.join(args.out, "run_ledger.json"))
    print(f"swept levels {list(opts.get('levels'))} (dropstroke {ds_mode}) -> {csv_path}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except InkError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
