"""Command-line entry points.

Subcommands: build-graph, train, eval, serve, simulate. Every subcommand
accepts --config pointing at a JSON file of TrainConfig keys; explicit
flags override config-file values, which override the built-in defaults.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import agent, dialogue_env, evaluation, medgraph
from .agent import TrainConfig
from .corpus import CorpusError, load_corpus, tally_counts
from .medgraph import GraphError, build_adjacency, load_graph, save_graph, write_edge_tsv
from .numkit import CheckpointError, MODE_GRAPH, load_checkpoint, save_checkpoint


class CliError(Exception):
    pass


def _load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file {path}: {exc}")
    if not isinstance(data, dict):
        raise CliError(f"config file {path} must contain a JSON object")
    return data


def _merge_config(args: argparse.Namespace) -> TrainConfig:
    """defaults < config file < explicit flags."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    flag_map = {
        "seed": "seed", "epochs": "epochs", "episodes_per_epoch": "episodes_per_epoch",
        "mode": "mode", "lr": "lr", "gamma": "gamma", "epsilon": "epsilon",
        "alpha": "alpha", "batch_size": "batch_size", "buffer": "buffer_capacity",
        "max_turns": "max_turns", "hidden_dim": "hidden_dim",
        "embed_dim": "embed_dim", "num_greeting": "num_greeting",
        "repeat_penalty": "repeat_penalty",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[key] = value
    if getattr(args, "unweighted", False):
        values["weighted"] = False
    try:
        return TrainConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad configuration: {exc}")


def _add_config_flags(p: argparse.ArgumentParser, *, training: bool) -> None:
    p.add_argument("--config", help="JSON config file (TrainConfig keys)")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--num-greeting", dest="num_greeting", type=int,
                   help="number of greeting actions (default 2)")
    p.add_argument("--max-turns", dest="max_turns", type=int,
                   help="dialogue turn limit (default 22)")
    if training:
        p.add_argument("--epochs", type=int, help="training epochs")
        p.add_argument("--episodes-per-epoch", dest="episodes_per_epoch", type=int)
        p.add_argument("--mode", choices=["graph", "baseline"],
                       help="policy head: graph embeddings or plain linear")
        p.add_argument("--unweighted", action="store_true",
                       help="binarize graph edge weights")
        p.add_argument("--lr", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--buffer", type=int, help="replay buffer capacity")
        p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
        p.add_argument("--embed-dim", dest="embed_dim", type=int)
        p.add_argument("--repeat-penalty", dest="repeat_penalty", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphdx",
        description="Disease-diagnosis dialogue agent over a weighted "
                    "symptom-disease graph.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build the symptom-disease graph")
    p.add_argument("--dataset", required=True, help="goal file (JSON)")
    p.add_argument("--out", required=True, help="output graph JSON path")
    p.add_argument("--tsv-out", help="edge list TSV path (default: <out>.tsv)")
    p.add_argument("--unweighted", action="store_true")
    _add_config_flags(p, training=False)

    p = sub.add_parser("train", help="train a policy against the simulator")
    p.add_argument("--dataset", required=True, help="training goal file")
    p.add_argument("--out", default="checkpoint.json", help="checkpoint path")
    p.add_argument("--log", default=None, help="CSV training log path "
                                               "(default: <out>.log.csv)")
    p.add_argument("--graph", help="prebuilt graph JSON (default: build from dataset)")
    p.add_argument("--graph-out", help="also write the graph used to this path")
    p.add_argument("--quiet", action="store_true", help="suppress progress lines")
    _add_config_flags(p, training=True)

    p = sub.add_parser("eval", help="greedy evaluation over a test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True, help="test goal file")
    p.add_argument("--graph", help="graph JSON (required for graph-mode checkpoints)")
    p.add_argument("--out-dir", default=".", help="where report.json, confusion.csv "
                                                  "and embeddings.csv go")

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", help="graph JSON (required for graph-mode checkpoints)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--transcripts", help="append completed session transcripts "
                                         "to this JSON-lines file")
    p.add_argument("--session-ttl", type=float, default=1800.0,
                   help="idle session expiry in seconds")
    p.add_argument("--ui-dir", help="serve a static UI from this directory")

    p = sub.add_parser("simulate", help="run simulated dialogues from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--graph", help="graph JSON (required for graph-mode checkpoints)")
    p.add_argument("--out", help="episode transcript JSON-lines path")
    p.add_argument("--episodes", type=int, help="number of goals to run (default: all)")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)

    return parser


def _load_checkpoint_bundle(args):
    """Checkpoint plus (verified) graph for eval/serve/simulate."""
    ckpt = load_checkpoint(args.checkpoint)
    a_norm = None
    if args.graph:
        graph = load_graph(args.graph)
        if ckpt.graph_hash and graph.content_hash() != ckpt.graph_hash:
            raise CliError("graph file does not match checkpoint graph hash")
        if graph.vocab != ckpt.vocab:
            raise CliError("graph vocabulary differs from checkpoint vocabulary")
        a_norm = graph.normalized
    elif ckpt.net.mode == MODE_GRAPH:
        raise CliError("graph-mode checkpoint requires --graph")
    return ckpt, a_norm


def cmd_build_graph(args) -> int:
    config = _merge_config(args)
    goals, vocab = load_corpus(args.dataset, num_greeting=config.num_greeting)
    counts = tally_counts(goals, vocab)
    graph = build_adjacency(counts, vocab, weighted=not args.unweighted)
    save_graph(graph, args.out)
    tsv_path = args.tsv_out or f"{args.out}.tsv"
    write_edge_tsv(graph, tsv_path)
    print(f"graph: {graph.num_nodes} nodes "
          f"({vocab.num_diseases} diseases, {vocab.num_symptoms} symptoms, "
          f"{vocab.num_greeting} greetings) -> {args.out}, {tsv_path}")
    return 0


def cmd_train(args) -> int:
    config = _merge_config(args)
    goals, vocab = load_corpus(args.dataset, num_greeting=config.num_greeting)
    if args.graph:
        graph = load_graph(args.graph)
        if graph.vocab != vocab:
            raise CliError("graph vocabulary does not match the dataset")
    else:
        counts = tally_counts(goals, vocab)
        graph = build_adjacency(counts, vocab, weighted=config.weighted)
    if args.graph_out:
        save_graph(graph, args.graph_out)

    progress = None
    if not args.quiet:
        def progress(stats):
            print(f"epoch {stats.epoch:4d}  loss {stats.loss:10.5f}  "
                  f"success {stats.success_rate:6.3f}  "
                  f"turns {stats.avg_turns:6.3f}")
    result = agent.train(config, goals, graph, progress=progress)

    log_path = args.log or f"{args.out}.log.csv"
    agent.write_train_log(log_path, result.log)
    save_checkpoint(args.out, result.net, vocab, config.to_dict(),
                    graph.content_hash())
    print(f"checkpoint -> {args.out}; log -> {log_path}")
    return 0


def cmd_eval(args) -> int:
    ckpt, a_norm = _load_checkpoint_bundle(args)
    goals, _ = load_corpus(args.dataset,
                           num_greeting=len(ckpt.vocab.greetings))
    max_turns = int(ckpt.config.get("max_turns", dialogue_env.MAX_TURNS))
    report = evaluation.evaluate(ckpt.net, a_norm, goals, ckpt.vocab,
                                 max_turns=max_turns)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    evaluation.write_report_json(report, ckpt.vocab, out_dir / "report.json")
    evaluation.write_confusion_csv(report, ckpt.vocab, out_dir / "confusion.csv")
    rows = evaluation.export_embeddings_pca(ckpt.net, a_norm, ckpt.vocab)
    evaluation.write_embeddings_csv(rows, out_dir / "embeddings.csv")
    print(f"accuracy {report.accuracy:.4f}  avg_turns {report.avg_turns:.3f}  "
          f"episodes {len(report.records)} -> {out_dir}")
    return 0


def cmd_serve(args) -> int:
    from .service import create_app, load_serving_model

    import uvicorn

    model = load_serving_model(args.checkpoint, args.graph)
    app = create_app(model, session_ttl=args.session_ttl,
                     transcript_path=args.transcripts, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_simulate(args) -> int:
    import numpy as np

    ckpt, a_norm = _load_checkpoint_bundle(args)
    goals, _ = load_corpus(args.dataset, num_greeting=len(ckpt.vocab.greetings))
    if args.episodes is not None:
        goals = goals[:args.episodes]
    vocab = ckpt.vocab
    max_turns = int(ckpt.config.get("max_turns", dialogue_env.MAX_TURNS))
    rng = np.random.default_rng(args.seed)

    from .agent import select_action
    from .numkit import gcn_forward

    h = gcn_forward(ckpt.net, a_norm) if ckpt.net.mode == MODE_GRAPH else None
    out_fh = open(args.out, "w", encoding="utf-8") if args.out else None
    successes = 0
    turns_total = 0
    try:
        for goal in goals:
            state = dialogue_env.start_episode(goal, vocab)
            records = []
            while not state.done:
                encoded = dialogue_env.encode_state(state, vocab, max_turns)
                action = select_action(ckpt.net, a_norm, encoded, args.epsilon,
                                       rng, h=h)
                before = state
                state, outcome = dialogue_env.step(state, goal, action, vocab,
                                                   max_turns=max_turns)
                records.append(dialogue_env.transcript_record(
                    state.turn, before, action, vocab, outcome))
            successes += int(records[-1]["result"] == "success")
            turns_total += state.turn
            if out_fh:
                for rec in records:
                    out_fh.write(json.dumps({"goal_id": goal.id, **rec}) + "\n")
    finally:
        if out_fh:
            out_fh.close()
    n = len(goals)
    print(f"episodes {n}  success_rate {successes / n:.4f}  "
          f"avg_turns {turns_total / n:.3f}"
          + (f" -> {args.out}" if args.out else ""))
    return 0


_COMMANDS = {
    "build-graph": cmd_build_graph,
    "train": cmd_train,
    "eval": cmd_eval,
    "serve": cmd_serve,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (CliError, CorpusError, GraphError, CheckpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
