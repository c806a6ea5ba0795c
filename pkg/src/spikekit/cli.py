"""Command-line experiment runner.

Subcommands reproduce the benchmark experiments and emit bit-stable CSV
files plus a rendered figure next to each one (suppress with --no-plot).
Runtimes go to the JSON summaries, never into the CSVs, so identical
seeded invocations produce byte-identical CSV bodies.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict

import numpy as np

from . import plots
from .arraycore import Rng, Tensor
from .data import load_mnist
from .encode import delta_encode, eeg_encode, latency_encode, rate_encode
from .errors import SpikekitError
from .neurons import NeuronConfig, init_state, step
from .surrogate import SurrogateSpec, smooth_gradient
from .train import ExperimentConfig, PRESETS, run_experiment

TRACE_MODELS = ("lif", "if", "alif", "synaptic", "alpha", "izhikevich:rs",
                "izhikevich:ib", "izhikevich:ch", "izhikevich:fs")
SURROGATE_KINDS = ("fast_sigmoid", "arctan", "straight_through")

# state columns reported per model family
TRACE_COLUMNS = {
    "lif": ("mem",),
    "if": ("mem",),
    "izhikevich": ("v", "u"),
    "alif": ("mem", "adapt"),
    "synaptic": ("mem", "syn"),
    "alpha": ("mem", "exc", "inh"),
}


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def default_data_dir() -> str:
    return os.environ.get("SPIKEKIT_DATA_DIR", os.path.join("data", "mnist"))


def read_config_file(path: str) -> dict:
    """key = value lines; '#' starts a comment; keys mirror flag names."""
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SpikekitError(f"{path}:{lineno}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_CONFIG_COERCE = {
    "beta": float, "hidden": int, "lr": float, "batch": int, "steps": int,
    "epochs": int, "surrogate": str, "loss": str, "seed": int,
    "data_dir": str, "out": str,
}


def assemble_train_config(args) -> tuple[ExperimentConfig, str]:
    """Merge preset < config file < explicit flags; returns (config, out dir)."""
    merged = dict(beta=0.9, hidden=128, lr=1e-3, batch=128, steps=25, epochs=25,
                  surrogate="fast_sigmoid", loss="membrane", seed=0,
                  data_dir=None, out=None)
    if args.preset:
        preset_vals = dict(PRESETS[args.preset])
        preset_vals["steps"] = preset_vals.pop("num_steps", 25)
        merged.update(preset_vals)
    if args.config:
        for key, raw in read_config_file(args.config).items():
            if key not in _CONFIG_COERCE:
                raise SpikekitError(f"unknown config key {key!r}")
            merged[key] = _CONFIG_COERCE[key](raw)
    for key in ("beta", "hidden", "lr", "batch", "steps", "epochs",
                "surrogate", "loss", "seed", "data_dir", "out"):
        flag = getattr(args, key)
        if flag is not None:
            merged[key] = flag
    if merged["data_dir"] is None:
        merged["data_dir"] = default_data_dir()
    out = merged.pop("out") or os.path.join("runs", "train")
    cfg = ExperimentConfig(
        beta=merged["beta"], hidden=merged["hidden"], lr=merged["lr"],
        batch=merged["batch"], num_steps=merged["steps"],
        epochs=merged["epochs"], surrogate=SurrogateSpec(kind=merged["surrogate"]),
        loss=merged["loss"], seed=merged["seed"], data_dir=merged["data_dir"])
    return cfg, out


def _json_config(cfg: ExperimentConfig) -> dict:
    blob = asdict(cfg)
    blob["surrogate"] = {k: v for k, v in blob["surrogate"].items()
                         if not callable(v) and v is not None}
    return blob


def cmd_train(args) -> int:
    cfg, out_dir = assemble_train_config(args)
    train_ds = load_mnist(cfg.data_dir, "train", verify=args.verify_data)
    test_ds = load_mnist(cfg.data_dir, "test", verify=args.verify_data)
    os.makedirs(out_dir, exist_ok=True)

    def on_epoch(row):
        print(f"epoch {row['epoch']:3d}  loss {row['train_loss']:.4f}  "
              f"acc {row['test_acc']*100:.2f}%  ({row['epoch_time_s']:.1f}s)",
              file=sys.stderr, flush=True)

    t0 = time.perf_counter()
    _, rows, best_acc = run_experiment(cfg, train_ds, test_ds, on_epoch)
    total = time.perf_counter() - t0
    csv_path = os.path.join(out_dir, "metrics.csv")
    write_csv(csv_path, ["epoch", "train_loss", "test_acc"],
              [[r["epoch"], r["train_loss"], r["test_acc"]] for r in rows])
    summary = {
        "best_acc": best_acc,
        "config": _json_config(cfg),
        "epoch_time_s": [r["epoch_time_s"] for r in rows],
        "total_time_s": total,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    if args.plot and rows:
        plots.training_curves(rows, os.path.join(out_dir, "training_curves.png"))
    print(f"best test accuracy {best_acc*100:.2f}% -> {csv_path}")
    return 0


def _trace_config(name: str, args) -> NeuronConfig:
    if name.startswith("izhikevich"):
        preset = name.split(":", 1)[1]
        return NeuronConfig.izhikevich(preset, dt=args.dt)
    return NeuronConfig(model=name, beta=args.beta, threshold=args.threshold,
                        reset=args.reset, alpha=args.alpha, rho=args.rho,
                        b_adapt=args.b_adapt)


def cmd_trace(args) -> int:
    family = args.model.split(":", 1)[0]
    cfg = _trace_config(args.model, args)
    current = args.input
    if current is None:
        current = 10.0 if family == "izhikevich" else 0.15
    state_keys = TRACE_COLUMNS[family]
    # CSV calls the izhikevich state v/u; internally it is mem/u
    internal = ["mem" if key == "v" else key for key in state_keys]
    st = init_state(cfg, 1, 1)
    x = Tensor([[float(current)]])
    rows = []
    for t in range(args.steps):
        spk, st = step(cfg, x, st)
        rows.append([t, current] + [st[k].item() for k in internal]
                    + [spk.item()])
    header = ["t", "input", *state_keys, "spike"]
    write_csv(args.out, header, rows)
    if args.plot:
        columns = {name: [row[i] for row in rows]
                   for i, name in enumerate(header)}
        plots.trace_figure(columns, args.model, _sibling_png(args.out))
    print(f"{args.model}: {args.steps} steps, "
          f"{int(np.sum([r[-1] for r in rows]))} spikes -> {args.out}")
    return 0


def _sibling_png(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".png"


def cmd_surrogate_curves(args) -> int:
    lo, hi = args.range
    xs = np.linspace(lo, hi, args.points)
    forward = (xs > 0.0).astype(np.float64)
    specs = {
        "backward_fast_sigmoid": SurrogateSpec(kind="fast_sigmoid", k=args.k),
        "backward_arctan": SurrogateSpec(kind="arctan", alpha=args.alpha),
        "backward_straight_through": SurrogateSpec(kind="straight_through",
                                                   s=args.slope),
    }
    grads = {name: smooth_gradient(spec, Tensor(xs)).data
             for name, spec in specs.items()}
    header = ["x", "forward", *grads]
    rows = [[xs[i], forward[i]] + [g[i] for g in grads.values()]
            for i in range(len(xs))]
    write_csv(args.out, header, rows)
    if args.plot:
        plots.surrogate_figure(
            xs, forward,
            {name.removeprefix("backward_"): g for name, g in grads.items()},
            _sibling_png(args.out))
    print(f"{args.points} samples over [{lo}, {hi}] -> {args.out}")
    return 0


def cmd_compare_surrogates(args) -> int:
    data_dir = args.data_dir or default_data_dir()
    train_ds = load_mnist(data_dir, "train", verify=args.verify_data)
    test_ds = load_mnist(data_dir, "test", verify=args.verify_data)
    os.makedirs(args.out, exist_ok=True)
    variants = [
        ("fast_sigmoid", SurrogateSpec(kind="fast_sigmoid", k=25.0)),
        ("arctan", SurrogateSpec(kind="arctan", alpha=2.0)),
        ("straight_through", SurrogateSpec(kind="straight_through", s=1.0)),
    ]
    results = []
    for name, spec in variants:
        cfg = ExperimentConfig(beta=0.95, hidden=128, lr=2e-3, batch=128,
                               num_steps=25, epochs=args.epochs, surrogate=spec,
                               loss="membrane", seed=args.seed, data_dir=data_dir)
        print(f"training with {name} surrogate ...", file=sys.stderr, flush=True)
        t0 = time.perf_counter()
        _, _, best_acc = run_experiment(cfg, train_ds, test_ds)
        results.append({"surrogate": name, "best_acc": best_acc,
                        "total_time_s": time.perf_counter() - t0})
        print(f"  {name}: {best_acc*100:.2f}%", file=sys.stderr, flush=True)
    csv_path = os.path.join(args.out, "results.csv")
    write_csv(csv_path, ["surrogate", "best_acc"],
              [[r["surrogate"], r["best_acc"]] for r in results])
    with open(os.path.join(args.out, "summary.json"), "w") as f:
        json.dump({"epochs": args.epochs, "seed": args.seed,
                   "results": results}, f, indent=2)
        f.write("\n")
    if args.plot:
        plots.compare_figure(results, os.path.join(args.out, "comparison.png"))
    print(f"3 surrogates compared -> {csv_path}")
    return 0


def _demo_image() -> Tensor:
    # 8x8 ramp covering [0, 1]; one pixel sits exactly at 1.0
    return Tensor(np.arange(64, dtype=np.float64) / 63.0)


def _demo_sine(steps: int, channels: int = 1) -> Tensor:
    t = np.arange(steps, dtype=np.float64)
    sig = np.stack([np.sin(2.0 * np.pi * (c + 1) * t / max(steps, 1))
                    for c in range(channels)], axis=1)
    return Tensor(sig if channels > 1 else sig[:, 0])


def cmd_encode_demo(args) -> int:
    rng = Rng(args.seed)
    if args.method == "rate":
        train = rate_encode(_demo_image(), args.steps, rng)
    elif args.method == "latency":
        train = latency_encode(_demo_image(), args.steps)
    elif args.method == "delta":
        train = delta_encode(_demo_sine(args.steps), 0.1)
    else:  # eeg
        train = eeg_encode(_demo_sine(args.steps, channels=3),
                           method="threshold_crossing")
    width = int(np.prod(train.data.shape[1:])) if train.data.ndim > 1 else 1
    spikes = train.data.data.reshape(train.num_steps, width)
    events = [(int(t), int(i)) for t, i in zip(*np.nonzero(spikes))]
    write_csv(args.out, ["t", "index", "spike"],
              [[t, i, 1] for t, i in events])
    if args.plot:
        plots.raster_figure(events, train.num_steps, _sibling_png(args.out))
    print(f"{args.method}: {len(events)} spike events over {train.num_steps} "
          f"steps -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikekit",
        description="Spiking network experiments: train on MNIST, trace "
                    "neuron dynamics, dump surrogate curves, demo encoders.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the benchmark MLP on MNIST")
    p_train.add_argument("--preset", choices=sorted(PRESETS),
                         help="benchmark configuration C1..C5")
    p_train.add_argument("--config", help="key = value file; flags override it")
    p_train.add_argument("--beta", type=float)
    p_train.add_argument("--hidden", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--batch", type=int)
    p_train.add_argument("--steps", type=int)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--surrogate", choices=SURROGATE_KINDS)
    p_train.add_argument("--loss", choices=("membrane", "rate_count", "mse_count"))
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--data-dir", dest="data_dir",
                         help="directory with the four MNIST IDX files "
                              "(default: $SPIKEKIT_DATA_DIR or data/mnist)")
    p_train.add_argument("--out", help="output directory (default runs/train)")
    p_train.add_argument("--no-plot", dest="plot", action="store_false")
    p_train.add_argument("--no-verify-data", dest="verify_data",
                         action="store_false",
                         help="skip SHA-256 verification of the data files")
    p_train.set_defaults(func=cmd_train)

    p_trace = sub.add_parser("trace", help="per-step state trace of one neuron")
    p_trace.add_argument("--model", choices=TRACE_MODELS, required=True)
    p_trace.add_argument("--steps", type=int, default=200)
    p_trace.add_argument("--input", type=float,
                         help="constant input current (default 0.15; "
                              "10.0 for izhikevich)")
    p_trace.add_argument("--beta", type=float, default=0.9)
    p_trace.add_argument("--threshold", type=float, default=1.0)
    p_trace.add_argument("--reset", choices=("subtract", "zero", "none"),
                         default="subtract")
    p_trace.add_argument("--alpha", type=float, default=0.5,
                         help="synaptic/alpha current decay")
    p_trace.add_argument("--rho", type=float, default=0.9)
    p_trace.add_argument("--b-adapt", dest="b_adapt", type=float, default=0.1)
    p_trace.add_argument("--dt", type=float, default=1.0)
    p_trace.add_argument("--out", default="trace.csv")
    p_trace.add_argument("--no-plot", dest="plot", action="store_false")
    p_trace.set_defaults(func=cmd_trace)

    p_sur = sub.add_parser("surrogate-curves",
                           help="hard forward vs surrogate gradients on a grid")
    p_sur.add_argument("--k", type=float, default=25.0)
    p_sur.add_argument("--alpha", type=float, default=2.0)
    p_sur.add_argument("--slope", type=float, default=1.0)
    p_sur.add_argument("--range", type=float, nargs=2, default=(-2.0, 2.0),
                       metavar=("LO", "HI"))
    p_sur.add_argument("--points", type=int, default=401)
    p_sur.add_argument("--out", default="surrogate_curves.csv")
    p_sur.add_argument("--no-plot", dest="plot", action="store_false")
    p_sur.set_defaults(func=cmd_surrogate_curves)

    p_cmp = sub.add_parser("compare-surrogates",
                           help="train once per surrogate on the C5 baseline")
    p_cmp.add_argument("--epochs", type=int, default=10)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--data-dir", dest="data_dir")
    p_cmp.add_argument("--out", default=os.path.join("runs", "compare"))
    p_cmp.add_argument("--no-plot", dest="plot", action="store_false")
    p_cmp.add_argument("--no-verify-data", dest="verify_data",
                       action="store_false")
    p_cmp.set_defaults(func=cmd_compare_surrogates)

    p_enc = sub.add_parser("encode-demo",
                           help="encode a built-in image or sine and dump a raster")
    p_enc.add_argument("--method", choices=("rate", "latency", "delta", "eeg"),
                       required=True)
    p_enc.add_argument("--steps", type=int, default=25)
    p_enc.add_argument("--seed", type=int, default=0)
    p_enc.add_argument("--out", default="encode_demo.csv")
    p_enc.add_argument("--no-plot", dest="plot", action="store_false")
    p_enc.set_defaults(func=cmd_encode_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "points", 2) < 2:
        parser.error("--points must be at least 2")
    if getattr(args, "steps", 0) is not None and getattr(args, "steps", 0) < 0:
        parser.error("--steps must be nonnegative")
    try:
        return args.func(args)
    except (SpikekitError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
