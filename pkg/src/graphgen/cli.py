"""Command-line experiment runner.

Subcommands: ``canonize``, ``train``, ``generate``, ``evaluate``,
``sample-subgraphs``, ``augment``. Logs go to stderr; results go to files.
Errors print ``error: <message>`` to stderr and exit with status 1.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .canonize import format_code, min_dfs_code_with_stats
from .datagen import RwrConfig, read_dataset, rwr_sample, split_dataset, write_dataset
from .errors import GraphGenError
from .graph import InvariantSpec, augment_labels
from .metrics import EvalConfig, evaluate
from .model import (TrainConfig, generate_graphs, history_csv, load_checkpoint,
                    load_train_state, save_checkpoint, save_train_state, train)

log = logging.getLogger("graphgen")

ENV_PREFIX = "GRAPHGEN_"


class CliError(Exception):
    pass


# -- configuration -------------------------------------------------------------

@dataclass
class RunConfig:
    dataset: str = ""
    format: str = "gspan"
    ratios: tuple = (0.8, 0.1, 0.1)
    split_seed: int = 0
    invariants: InvariantSpec = field(default_factory=InvariantSpec)
    train: TrainConfig = field(default_factory=TrainConfig.desk)
    generate_count: int = 2560
    generate_max_len: int = 0
    eval: EvalConfig = field(default_factory=EvalConfig)
    output_dir: str = "run"


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(value: str, like):
    if isinstance(like, bool):
        try:
            return _BOOL[value.strip().lower()]
        except KeyError:
            raise CliError(f"expected a boolean, got {value!r}") from None
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, tuple):
        return tuple(float(x) for x in value.replace(",", " ").split())
    return value


def load_config(path: str | None, environ=None) -> RunConfig:
    """Read a sectioned ``key = value`` file, then apply
    ``GRAPHGEN_<SECTION>_<KEY>`` environment overrides."""
    environ = os.environ if environ is None else environ
    cp = configparser.ConfigParser()
    if path:
        if not Path(path).is_file():
            raise CliError(f"config file not found: {path}")
        cp.read(path, encoding="utf-8")
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if key:
            if not cp.has_section(section):
                cp.add_section(section)
            cp.set(section, key, value)

    cfg = RunConfig()
    known = {"data", "invariants", "model", "generate", "metrics", "output"}
    for sec in cp.sections():
        if sec not in known:
            raise CliError(f"unknown config section [{sec}]")

    def get(sec, key, default):
        if cp.has_option(sec, key):
            try:
                return _coerce(cp.get(sec, key), default)
            except ValueError:
                raise CliError(f"bad value for [{sec}] {key}") from None
        return default

    cfg.dataset = get("data", "path", cfg.dataset)
    cfg.format = get("data", "format", cfg.format)
    cfg.ratios = get("data", "ratios", cfg.ratios)
    cfg.split_seed = get("data", "seed", cfg.split_seed)
    inv = cfg.invariants
    cfg.invariants = InvariantSpec(get("invariants", "degree", inv.use_degree),
                                   get("invariants", "clustering", inv.use_clustering_coefficient),
                                   get("invariants", "cc_decimals", inv.cc_decimals))
    profile = get("model", "profile", "desk")
    if profile not in ("desk", "full"):
        raise CliError(f"[model] profile must be 'desk' or 'full', got {profile!r}")
    tc = TrainConfig.desk() if profile == "desk" else TrainConfig()
    updates = {}
    for f in ("epochs", "batch_size", "lr", "weight_decay", "clip_norm", "dropout",
              "embed", "hidden", "layers", "mlp_hidden", "early_stop_rel",
              "patience", "max_len", "seed"):
        updates[f] = get("model", f, getattr(tc, f))
    cfg.train = replace(tc, **updates)
    cfg.generate_count = get("generate", "count", cfg.generate_count)
    cfg.generate_max_len = get("generate", "max_len", cfg.generate_max_len)
    ev = cfg.eval
    cfg.eval = EvalConfig(runs=get("metrics", "runs", ev.runs),
                          batch=get("metrics", "batch", ev.batch),
                          sigma=get("metrics", "sigma", ev.sigma),
                          nspdk_r=get("metrics", "nspdk_r", ev.nspdk_r),
                          nspdk_d=get("metrics", "nspdk_d", ev.nspdk_d),
                          subgraph_budget=get("metrics", "subgraph_budget", ev.subgraph_budget),
                          seed=ev.seed)
    cfg.output_dir = get("output", "dir", cfg.output_dir)
    return cfg


def _read(path):
    if not Path(path).is_file():
        raise CliError(f"dataset not found: {path}")
    return read_dataset(path)


def _threads(args):
    return args.threads if args.threads else (os.cpu_count() or 1)


# -- subcommands -----------------------------------------------------------------

def cmd_canonize(args) -> int:
    graphs = _read(args.input)
    out = []
    for i, g in enumerate(graphs):
        try:
            code, stats = min_dfs_code_with_stats(g)
        except GraphGenError as exc:
            raise CliError(f"graph {i}: {exc}") from None
        out.append(f"t # {i}\n" + format_code(code))
        if args.stats:
            print(f"graph {i}: expansions={stats.expansions} "
                  f"max_frontier={stats.max_frontier}", file=sys.stderr)
    text = "".join(out)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.dataset:
        cfg.dataset = args.dataset
    if args.output:
        cfg.output_dir = args.output
    if args.seed is not None:
        cfg.train = replace(cfg.train, seed=args.seed)
        cfg.split_seed = args.seed
    if not cfg.dataset:
        raise CliError("no dataset given (config [data] path or --dataset)")
    graphs = _read(cfg.dataset)
    graphs = [augment_labels(g, cfg.invariants) for g in graphs]
    split = split_dataset(graphs, cfg.ratios, cfg.split_seed)
    valid = split.valid or split.train
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(split.train, out / "train.txt")
    write_dataset(split.valid, out / "valid.txt")
    write_dataset(split.test, out / "test.txt")

    state_path = out / "train_state.ckpt"
    resume = None
    if args.resume:
        if not state_path.is_file():
            raise CliError(f"no training state to resume at {state_path}")
        resume = load_train_state(state_path)
        log.info("resuming after epoch %d", len(resume["history"]))

    def checkpoint(epoch, state):
        save_train_state(state, state_path)

    model, history = train(split.train, valid, cfg.train, threads=_threads(args),
                           resume=resume, on_epoch=checkpoint)
    save_checkpoint(model, out / "model.ckpt")
    (out / "vocab.json").write_text(json.dumps(model.vocab.to_dict(), indent=2) + "\n")
    (out / "history.csv").write_text(history_csv(history))
    log.info("trained %d epochs; outputs in %s", len(history), out)
    return 0


def cmd_generate(args) -> int:
    if not Path(args.checkpoint).is_file():
        raise CliError(f"checkpoint not found: {args.checkpoint}")
    model = load_checkpoint(args.checkpoint)
    seed = args.seed if args.seed is not None else 0
    graphs = generate_graphs(model, args.n, args.max_len or None, seed=seed,
                             threads=_threads(args))
    write_dataset(graphs, args.output)
    return 0


def cmd_evaluate(args) -> int:
    gen = _read(args.generated)
    ref = _read(args.reference)
    trn = _read(args.training)
    if not gen:
        raise CliError("generated set is empty")
    if not ref or not trn:
        raise CliError("reference and training sets must be non-empty")
    cfg = load_config(args.config).eval
    cfg = replace(cfg, seed=args.seed if args.seed is not None else cfg.seed)
    if args.runs:
        cfg = replace(cfg, runs=args.runs)
    if args.batch:
        cfg = replace(cfg, batch=args.batch)
    report = evaluate(gen, ref, trn, cfg)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv())
    return 0


def cmd_sample_subgraphs(args) -> int:
    graphs = _read(args.input)
    if len(graphs) != 1:
        raise CliError(f"expected exactly one graph in {args.input}, found {len(graphs)}")
    cfg = RwrConfig(args.restart_prob, args.iterations, args.samples,
                    args.seed if args.seed is not None else 0)
    write_dataset(rwr_sample(graphs[0], cfg), args.output)
    return 0


def cmd_augment(args) -> int:
    spec = InvariantSpec(args.degree, args.clustering, args.cc_decimals)
    write_dataset([augment_labels(g, spec) for g in _read(args.input)], args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=0,
                        help="worker count for parallel stages (default: all cores)")
    common.add_argument("--log-level", default="INFO")

    p = argparse.ArgumentParser(prog="graphgen", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("canonize", parents=[common], help="write minimum DFS codes")
    c.add_argument("input")
    c.add_argument("-o", "--output")
    c.add_argument("--stats", action="store_true", help="print search expansions per graph")
    c.set_defaults(func=cmd_canonize)

    t = sub.add_parser("train", parents=[common], help="train a model")
    t.add_argument("--config")
    t.add_argument("--dataset")
    t.add_argument("-o", "--output", help="output directory")
    t.add_argument("--resume", action="store_true")
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("generate", parents=[common], help="sample graphs from a checkpoint")
    g.add_argument("checkpoint")
    g.add_argument("-n", type=int, default=2560)
    g.add_argument("--max-len", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", parents=[common], help="compute the metric report")
    e.add_argument("generated")
    e.add_argument("reference")
    e.add_argument("training")
    e.add_argument("-o", "--output", required=True, help="output directory")
    e.add_argument("--config")
    e.add_argument("--runs", type=int, default=0)
    e.add_argument("--batch", type=int, default=0)
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("sample-subgraphs", parents=[common],
                       help="random-walk-with-restart subgraphs of one large graph")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("-x", "--samples", type=int, default=100)
    s.add_argument("--restart-prob", type=float, default=0.15)
    s.add_argument("--iterations", type=int, default=150)
    s.set_defaults(func=cmd_sample_subgraphs)

    a = sub.add_parser("augment", parents=[common], help="prefix labels with vertex invariants")
    a.add_argument("input")
    a.add_argument("-o", "--output", required=True)
    a.add_argument("--degree", action="store_true")
    a.add_argument("--clustering", action="store_true")
    a.add_argument("--cc-decimals", type=int, default=2)
    a.set_defaults(func=cmd_augment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (CliError, GraphGenError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
