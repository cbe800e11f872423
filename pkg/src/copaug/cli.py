"""Command-line entry points.

Subcommands: gen-data, fit, sample, radiate, train, eval, pipeline.
Every command takes --config (JSON, all fields optional) and an optional
--seed override of the master seed.  Failures exit nonzero with a
one-line machine-readable category on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import rng
from .dataset import SchemaError, flatten, load_profiles, save_profiles
from .emulator import MLPLayout, init_mlp, load_mlp, predict_set, save_mlp, train
from .evaluation import error_metrics, write_level_quantiles
from .experiment import (
    ExperimentConfig,
    default_config_dict,
    load_config,
    make_config,
    resolve_dataset,
    run_pipeline,
    split_dataset,
)
from .multicop import fit_synth_model, load_model, sample_synth_model, save_model
from .radiation import radiate_set


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else make_config()
    if getattr(args, "seed", None) is not None:
        raw = json.loads(json.dumps(cfg.raw))
        raw["master_seed"] = args.seed
        cfg = make_config(raw)
    return cfg


def cmd_gen_data(args) -> int:
    cfg = _config_from_args(args)
    data = resolve_dataset(cfg)
    out = args.out or (cfg.data_path or "profiles.csv")
    save_profiles(out, data)
    n_cols = 3 * cfg.grid.n_full + (cfg.grid.n_half if data.fluxes is not None else 0)
    print(f"wrote {out}: {len(data)} rows, {n_cols} columns")
    return 0


def cmd_fit(args) -> int:
    cfg = _config_from_args(args)
    data = resolve_dataset(cfg)
    train_set, _, _ = split_dataset(cfg, data)
    model = fit_synth_model(train_set, cfg.copula_spec(args.kind))
    save_model(args.out, model)
    if model.kind == "vine" and model.vine is not None:
        families = {}
        for tree in model.vine.trees:
            for e in tree:
                key = e.copula.family.value
                families[key] = families.get(key, 0) + 1
        hist = ", ".join(f"{k}={v}" for k, v in sorted(families.items()))
        print(f"wrote {args.out}: vine on {model.d} features ({len(model.active)} active), edges: {hist}")
    else:
        print(f"wrote {args.out}: gaussian copula on {model.d} features ({len(model.active)} active)")
    return 0


def cmd_sample(args) -> int:
    cfg = _config_from_args(args)
    model = load_model(args.model)
    seed = rng.derive_seed(cfg.master_seed, "sample", args.case or "-")
    synth, diag = sample_synth_model(model, args.count, seed)
    save_profiles(args.out, synth)
    print(f"wrote {args.out}: {len(synth)} synthetic profiles "
          f"({diag.pressure_resorted} pressure columns re-sorted)")
    return 0


def cmd_radiate(args) -> int:
    cfg = _config_from_args(args)
    data = load_profiles(args.input, cfg.grid)
    radiated = radiate_set(data, cfg.constants)
    save_profiles(args.out, radiated)
    print(f"wrote {args.out}: {len(radiated)} profiles with fluxes")
    return 0


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    train_set = load_profiles(args.train, cfg.grid)
    val_set = load_profiles(args.val, cfg.grid)
    if train_set.fluxes is None or val_set.fluxes is None:
        raise ValueError("training and validation files must carry flux columns (run radiate first)")
    x_tr = flatten(train_set, "inputs").values
    y_tr = flatten(train_set, "outputs").values
    layout = MLPLayout(x_tr.shape[1], cfg.hidden, y_tr.shape[1])
    init_seed = rng.derive_seed(cfg.master_seed, "train-cmd", args.case or "-", "init")
    shuffle_seed = rng.derive_seed(cfg.master_seed, "train-cmd", args.case or "-", "shuffle")
    model = train(
        init_mlp(layout, init_seed),
        x_tr, y_tr,
        flatten(val_set, "inputs").values, flatten(val_set, "outputs").values,
        cfg.train_config(shuffle_seed),
    )
    save_mlp(args.out, model)
    best = min(model.history["val"])
    print(f"wrote {args.out}: best val loss {best:.6g} at epoch {model.best_epoch}, "
          f"{len(model.history['val'])} epochs run")
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    model = load_mlp(args.model)
    test_set = load_profiles(args.test, cfg.grid)
    if test_set.fluxes is None:
        raise ValueError("test file must carry flux columns (run radiate first)")
    pred = predict_set(model, test_set)
    em = error_metrics(flatten(test_set, "outputs").values, pred.values)
    case = args.case or "eval"
    out = Path(args.out)
    out.write_text(
        "case,generation,repeat,mb,mae\n"
        f"{case},-,0,{float(em.mb)!r},{float(em.mae)!r}\n",
        encoding="utf-8",
    )
    quant_path = out.with_name(out.stem + "_levels.csv")
    write_level_quantiles(quant_path, em)
    print(f"{case}: MB={em.mb:.6g} MAE={em.mae:.6g} (rows in {out}, levels in {quant_path})")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    result = run_pipeline(cfg, args.out)
    note = f", {len(result.failures)} case(s) failed" if result.failures else ""
    print(f"pipeline complete: {len(result.rows)} result rows under {args.out}{note}")
    return 0


def cmd_show_config(args) -> int:
    print(json.dumps(default_config_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copaug",
        description="Copula-based synthetic data augmentation for a longwave radiation emulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config (defaults apply per field)")
        p.add_argument("--seed", type=int, help="override the master seed")

    p = sub.add_parser("gen-data", help="write a surrogate profile file")
    common(p)
    p.add_argument("--out", help="output profile file (default: config data path)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("fit", help="fit marginals + copula on the training split")
    common(p)
    p.add_argument("--kind", choices=["gaussian", "vine"], required=True)
    p.add_argument("--out", required=True, help="model artifact path (JSON)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", help="draw synthetic profiles from a fitted model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--case", help="case label mixed into the sampling seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("radiate", help="attach toy-model fluxes to a profile file")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_radiate)

    p = sub.add_parser("train", help="train the emulator on radiated profile files")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--case", help="case label mixed into the training seeds")
    p.add_argument("--out", required=True, help="trained model path (JSON)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a trained emulator on a radiated test file")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--case", help="case label for the metrics rows")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="run the full experiment")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("show-config", help="print the default config JSON")
    p.set_defaults(func=cmd_show_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error:schema: {exc}", file=sys.stderr)
    except FileNotFoundError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error:io: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error:invalid: {exc}", file=sys.stderr)
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error:internal: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
