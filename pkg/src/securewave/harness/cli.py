"""Command line entry point: ``securewave {train,infer,sweep,baseline}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

from .. import bsa, cmlp
from .config import ConfigError, ScenarioConfig, config_from_mapping, load_config
from .scenario import (
    AXES,
    SCHEMES,
    draw_for_index,
    emit,
    run_scenario,
    sweep,
)

log = logging.getLogger("securewave")

DEFAULT_SWEEPS = {
    "P_S": [1e-3, 10**-2.5, 1e-2, 10**-1.5, 1e-1],
    "epsilon_e": [0.2, 0.3, 0.4, 0.49],
    "N": [16, 32, 64],
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="flat YAML scenario file")
    group = parser.add_argument_group("scenario overrides")
    for f in fields(ScenarioConfig):
        if f.name == "seed":
            continue
        group.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None, metavar="VALUE")


def _scenario(args) -> ScenarioConfig:
    base = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {f.name: getattr(args, f.name) for f in fields(ScenarioConfig) if getattr(args, f.name, None) is not None}
    return config_from_mapping(overrides, base)


def _parse_values(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_train(args) -> int:
    cfg = _scenario(args)
    draw = draw_for_index(cfg, args.draw)
    result = bsa.train(draw.ch_bob, draw.ch_eve, cfg.train_config(), seed=draw.init_seed)
    cmlp.save_params(result.params, args.params)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=[f.name for f in fields(bsa.TrainRecord)], lineterminator="\n")
            writer.writeheader()
            for rec in result.trace:
                writer.writerow(asdict(rec))
    last = result.trace[-1]
    print(json.dumps({"epochs": len(result.trace), "final_loss": last.loss, "sum_secrecy_rate": last.sum_secrecy_rate,
                      "min_eve_ser": last.min_eve_ser, "params": str(args.params)}))
    return 0


def cmd_infer(args) -> int:
    cfg = _scenario(args)
    params = cmlp.load_params(args.params)
    if params.n != cfg.n_subcarriers:
        raise ConfigError(f"checkpoint is for N={params.n}, config has n_subcarriers={cfg.n_subcarriers}")
    tcfg = cfg.train_config()
    rows = []
    for i in range(cfg.num_draws):
        draw = draw_for_index(cfg, i)
        res = bsa.infer(params, draw.ch_bob, draw.ch_eve, tcfg)
        m = res.metrics
        rows.append({
            "draw": i,
            "sum_secrecy_rate": m.sum_secrecy_rate,
            "min_eve_ser": m.min_eve_ser,
            "ser_bob": m.ser_bob,
            "ser_eve": m.ser_eve,
            "converged": res.allocation.converged,
            "power": res.allocation.p.tolist(),
        })
    text = json.dumps({"config": cfg.to_dict(), "draws": rows}, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_baseline(args) -> int:
    cfg = _scenario(args)
    rows = run_scenario(cfg, tuple(args.scheme))
    print(json.dumps([asdict(r) for r in rows], indent=2))
    return 0


def cmd_sweep(args) -> int:
    cfg = _scenario(args)
    values = _parse_values(args.values) if args.values else DEFAULT_SWEEPS[args.axis]
    result = sweep(cfg, args.axis, values, tuple(args.scheme))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = emit(result, out.with_suffix(".csv"), "csv")
    json_path = emit(result, out.with_suffix(".json"), "json")
    log.info("wrote %s and %s", csv_path, json_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="securewave", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a coding network on one channel draw")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--draw", type=int, default=0, help="draw index used for training")
    p.add_argument("--params", type=Path, required=True, help="checkpoint to write (.npz)")
    p.add_argument("--trace", type=Path, help="optional CSV of per-epoch records")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="run a trained network over num_draws channel draws")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--params", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("sweep", help="sweep P_S, epsilon_e or N and write CSV + JSON")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--axis", choices=tuple(AXES), required=True)
    p.add_argument("--values", help="comma-separated axis values (defaults per axis)")
    p.add_argument("--scheme", action="append", choices=SCHEMES, help="repeatable; default all")
    p.add_argument("--out", type=Path, required=True, help="output stem; .csv and .json are added")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("baseline", help="evaluate baseline schemes over num_draws draws")
    _add_config_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scheme", action="append", choices=("unencrypted", "mrt"))
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command in ("sweep", "baseline") and not args.scheme:
        args.scheme = list(SCHEMES) if args.command == "sweep" else ["unencrypted", "mrt"]
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
