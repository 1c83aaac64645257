"""Command-line entry points: data generation, training, mining, evaluation, serving."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import apriori as apriori_mod
from . import bayes as bayes_mod
from . import nn
from .codes import normalize_icd
from .dataset import build_vocabs, load_claims, make_claim, save_claims, split
from .evaluate import (
    apriori_suggester,
    bayes_suggester,
    evaluate,
    nn_suggester,
    render_table,
    save_report,
)
from .rules import filter_predictions, load_rules
from .service import ServiceConfig, run_server, scan_registry
from .synthgen import SyntheticSpec, generate_synthetic, write_ground_truth, write_rules_file


def _cmd_gen_data(args) -> int:
    spec = SyntheticSpec(
        n_providers=args.providers,
        n_icds=args.icds,
        n_cpts=args.cpts,
        n_claims=args.claims,
        noise_drop=args.drop,
        noise_add=args.add,
        provider_swap=args.swap,
        seed=args.seed,
    )
    claims, truth = generate_synthetic(spec)
    out = Path(args.out)
    save_claims(claims, out)
    write_ground_truth(truth, out.with_suffix(out.suffix + ".truth"))
    write_rules_file(truth, out.with_suffix(out.suffix + ".rules"))
    print(f"wrote {len(claims)} claims to {out}")
    print(f"ground truth: {out}.truth; age/gender rules: {out}.rules")
    return 0


def _parse_hidden(text: str) -> tuple[int, int, int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--hidden needs three comma-separated sizes")
    return tuple(parts)  # type: ignore[return-value]


def _cmd_train_nn(args) -> int:
    claims = load_claims(args.data)
    if args.val_fraction > 0:
        train_claims, val_claims = split(claims, args.val_fraction, args.seed)
    else:
        train_claims, val_claims = claims, []
    vocabs = build_vocabs(train_claims, min_cpt_count=args.min_cpt_count)
    dims = nn.Dims(d_c=args.dc, d_p=args.dp, hidden=args.hidden)
    hyper = nn.TrainHyper(
        learning_rate=args.lr, batch_size=args.batch, epochs=args.epochs, seed=args.seed
    )
    print(
        f"training on {len(train_claims)} claims ({len(val_claims)} validation), "
        f"{vocabs.label_count} labels, {vocabs.provider_count} providers "
        f"[{nn.BACKEND} kernels]"
    )
    model, history = nn.train(train_claims, val_claims, vocabs, dims, hyper)
    for h in history:
        print(f"epoch {h.epoch:3d}  train {h.train_loss:.5f}  val {h.val_loss:.5f}  lr {h.lr:g}")
    nn.save_model(model, args.out)
    print(f"saved model to {args.out}")
    return 0


def _cmd_train_bayes(args) -> int:
    claims = load_claims(args.data)
    vocabs = build_vocabs(claims, min_cpt_count=args.min_cpt_count)
    model = bayes_mod.fit(claims, vocabs, alpha=args.alpha)
    bayes_mod.save_bayes(model, args.out)
    print(f"saved {model.label_count}-label count table to {args.out}")
    return 0


def _cmd_mine_rules(args) -> int:
    claims = load_claims(args.data)
    ruleset = apriori_mod.mine_rules(claims, args.min_support, args.min_confidence)
    apriori_mod.save_rules(ruleset, args.out)
    print(f"mined {len(ruleset.rules)} rules to {args.out}")
    return 0


def _load_predictor(method: str, model_path: str):
    """Returns (suggest_fn, label_space) for one trained artifact."""
    if method == "nn":
        model = nn.load_model(model_path)
        return nn_suggester(model), set(model.vocabs.cpt_labels)
    if method == "bayes":
        model = bayes_mod.load_bayes(model_path)
        return bayes_suggester(model), set(model.labels)
    ruleset = apriori_mod.load_rules(model_path)
    return apriori_suggester(ruleset), apriori_mod.consequent_codes(ruleset)


def _cmd_evaluate(args) -> int:
    claims = load_claims(args.data)
    ks = [int(p) for p in args.k.split(",")]
    rules = load_rules(args.rules) if args.rules else {}
    suggest_fn, label_space = _load_predictor(args.method, args.model)
    report = evaluate(suggest_fn, claims, ks, rules, label_space, method=args.method)
    print(render_table([report], ks))
    if args.out:
        save_report([report], ks, args.out)
        print(f"wrote report to {args.out}")
    return 0


def _cmd_suggest(args) -> int:
    if args.stdin:
        request = json.load(sys.stdin)
        provider = request["provider_id"]
        age = int(request["age"])
        gender = request["gender"]
        raw_icds = request["icds"]
        k = int(request.get("k", args.k))
    else:
        if not args.icd:
            print("error: provide --icd at least once (or use --stdin)", file=sys.stderr)
            return 2
        provider, age, gender, raw_icds, k = args.provider, args.age, args.gender, args.icd, args.k
    icds = [normalize_icd(raw) for raw in raw_icds]
    suggest_fn, _ = _load_predictor(args.method, args.model)
    rules = load_rules(args.rules) if args.rules else {}
    claim = make_claim("query", provider, age, gender, icds, [], allow_empty_cpts=True)
    raw = suggest_fn(claim, 2 * k)
    kept = filter_predictions(raw, age, gender, rules)[:k]
    json.dump(
        {"suggestions": [{"cpt": cpt, "score": score} for cpt, score in kept]},
        sys.stdout,
        indent=2,
    )
    print()
    return 0


def _cmd_serve(args) -> int:
    if args.config:
        config = ServiceConfig.from_file(args.config)
        if args.port is not None:
            config.port = args.port
        if args.registry is not None:
            config.registry_dir = Path(args.registry)
        if args.rules is not None:
            config.rules_path = Path(args.rules)
        if args.store is not None:
            config.store_path = Path(args.store)
    else:
        if args.registry is None or args.store is None:
            print("error: --registry and --store are required without --config", file=sys.stderr)
            return 2
        config = ServiceConfig(
            registry_dir=Path(args.registry),
            store_path=Path(args.store),
            rules_path=Path(args.rules) if args.rules else None,
            port=args.port if args.port is not None else 8000,
        )
    if not scan_registry(config.registry_dir):
        print(f"error: no model files in {config.registry_dir}", file=sys.stderr)
        return 1
    run_server(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cptcoder", description="Procedure-code suggestion toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic claims corpus")
    p.add_argument("--providers", type=int, required=True)
    p.add_argument("--icds", type=int, required=True)
    p.add_argument("--cpts", type=int, required=True)
    p.add_argument("--claims", type=int, required=True)
    p.add_argument("--drop", type=float, default=0.0)
    p.add_argument("--add", type=float, default=0.0)
    p.add_argument("--swap", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train-nn", help="train the neural predictor")
    p.add_argument("--data", required=True)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--dc", type=int, default=8)
    p.add_argument("--dp", type=int, default=16)
    p.add_argument("--hidden", type=_parse_hidden, default=(256, 256, 128))
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=256)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-cpt-count", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_nn)

    p = sub.add_parser("train-bayes", help="fit the count-based predictor")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--min-cpt-count", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_bayes)

    p = sub.add_parser("mine-rules", help="mine association rules")
    p.add_argument("--data", required=True)
    p.add_argument("--min-support", type=float, default=0.001)
    p.add_argument("--min-confidence", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mine_rules)

    p = sub.add_parser("evaluate", help="precision/recall@K on a claims file")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=("nn", "bayes", "apriori"), required=True)
    p.add_argument("--k", default="1,3,5")
    p.add_argument("--rules")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("suggest", help="one-shot suggestion to stdout")
    p.add_argument("--model", required=True)
    p.add_argument("--method", choices=("nn", "bayes", "apriori"), default="nn")
    p.add_argument("--rules")
    p.add_argument("--provider", default="")
    p.add_argument("--age", type=int, default=0)
    p.add_argument("--gender", choices=("M", "F"), default="F")
    p.add_argument("--icd", action="append")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--stdin", action="store_true", help="read a JSON request from stdin")
    p.set_defaults(func=_cmd_suggest)

    p = sub.add_parser("serve", help="run the suggestion HTTP service")
    p.add_argument("--port", type=int)
    p.add_argument("--registry")
    p.add_argument("--rules")
    p.add_argument("--store")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
