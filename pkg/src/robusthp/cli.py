"""Command-line interface: simulate, beampattern, flops, convergence."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import metrics, plots
from .simulate import (
    SystemConfig,
    convergence_traces,
    emit_beampattern,
    emit_results,
    run_experiment,
    summarize,
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int, dest="trial_count")
    parser.add_argument("--snr-min", type=float)
    parser.add_argument("--snr-max", type=float)
    parser.add_argument("--snr-step", type=float, default=5.0)
    parser.add_argument("--scheme", action="append", dest="schemes",
                        help="scheme tag, repeatable (e.g. FM-GP)")
    parser.add_argument("--no-bd", action="store_true", default=None,
                        help="disable the second-stage zero-forcing precoder")
    parser.add_argument("--es-backend", choices=("series", "quadrature"))
    parser.add_argument("--mt", type=int, dest="m_t")
    parser.add_argument("--mr", type=int, dest="m_r")
    parser.add_argument("--nrf", type=int, dest="n_rf")
    parser.add_argument("--k", type=int)
    parser.add_argument("--grid-samples", type=int)
    parser.add_argument("--delta", type=float, dest="delta_deg")
    parser.add_argument("--fixed-geometry", action="store_true", default=None)


def _build_config(args: argparse.Namespace) -> SystemConfig:
    overrides = {}
    for key in ("seed", "trial_count", "schemes", "es_backend", "m_t", "m_r",
                "n_rf", "k", "grid_samples", "delta_deg", "fixed_geometry"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "no_bd", None):
        overrides["no_bd"] = True
    if args.snr_min is not None or args.snr_max is not None:
        lo = args.snr_min if args.snr_min is not None else 0.0
        hi = args.snr_max if args.snr_max is not None else lo
        overrides["snr_db_grid"] = list(np.arange(lo, hi + args.snr_step / 2.0, args.snr_step))
    if args.config is not None:
        return SystemConfig.from_file(args.config, **overrides)
    return SystemConfig(**overrides)


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _build_config(args)
    records = run_experiment(config)
    out = emit_results(records, format=args.format, path=args.out)
    print(f"wrote {len(records)} records to {out}")
    for row in summarize(records):
        stage = "bd" if row["second_stage"] else "no-bd"
        print(
            f"{row['scheme']:>8s}  snr={row['snr_db']:6.1f} dB  [{stage}]  "
            f"mean={row['mean_sum_rate']:.3f}  std={row['std_sum_rate']:.3f}  "
            f"n={row['count']}  excluded={row['excluded']}"
        )
    if args.plot:
        figure = Path(out).with_suffix(".png")
        plots.save_rate_figure(summarize(records), figure)
        print(f"wrote figure {figure}")
    return 0


def _cmd_beampattern(args: argparse.Namespace) -> int:
    config = _build_config(args)
    out = emit_beampattern(config, args.scheme_tag, args.angle_step, args.out)
    print(f"wrote beampattern to {out}")
    if args.plot:
        angles, per_receiver = _read_beampattern_csv(out, config.k)
        figure = Path(out).with_suffix(".png")
        plots.save_beampattern_figure(angles, per_receiver, figure, title=args.scheme_tag)
        print(f"wrote figure {figure}")
    return 0


def _read_beampattern_csv(path: Path, k: int):
    data: dict[int, list[tuple[float, float]]] = {u: [] for u in range(k)}
    with Path(path).open() as handle:
        for row in csv.DictReader(handle):
            data[int(row["receiver"])].append((float(row["angle_deg"]), float(row["gain"])))
    angles = np.array([a for a, _ in data[0]])
    gains = [np.array([g for _, g in data[u]]) for u in range(k)]
    return angles, gains


def _cmd_flops(args: argparse.Namespace) -> int:
    rows = []
    for m_t in args.mt_list:
        rows.append(
            {
                "m_t": m_t,
                "mo": metrics.flops_mo(m_t, args.nrf, args.k, args.eta_ls, args.eta_max),
                "gp": metrics.flops_gp(m_t, args.nrf, args.k, args.eta_max),
                "lsp": metrics.flops_lsp(m_t, args.nrf, args.k),
            }
        )
    if args.out:
        with Path(args.out).open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=["m_t", "mo", "gp", "lsp"])
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote flop counts to {args.out}")
    for row in rows:
        print(
            f"M_t={row['m_t']:>4d}  MO={row['mo']:.3e}  GP={row['gp']:.3e}  "
            f"LSP={row['lsp']:.3e}"
        )
    return 0


def _cmd_convergence(args: argparse.Namespace) -> int:
    config = _build_config(args)
    traces = convergence_traces(config, args.scheme_tag)
    out = Path(args.out)
    with out.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["trace", "iteration", "value"])
        for name, values in traces.items():
            if isinstance(values, (list, tuple)):
                for i, value in enumerate(values):
                    writer.writerow([name, i, value])
    print(f"wrote convergence traces to {out}")
    if args.plot:
        figure = out.with_suffix(".png")
        plots.save_convergence_figure(traces, figure)
        print(f"wrote figure {figure}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robusthp",
        description="Robust hybrid precoding simulator for misaligned mmWave beams",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte-Carlo spectral-efficiency sweep")
    _add_config_flags(sim)
    sim.add_argument("--out", type=Path, default=Path("results.csv"))
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--plot", action="store_true", help="render figures next to the output")
    sim.set_defaults(func=_cmd_simulate)

    beam = sub.add_parser("beampattern", help="per-receiver angular gain sweep")
    _add_config_flags(beam)
    beam.add_argument("--out", type=Path, default=Path("beampattern.csv"))
    beam.add_argument("--angle-step", type=float, default=0.5)
    beam.add_argument("--scheme-tag", default="CDP",
                      help="family (CDP, FM, ES) or FAMILY-SOLVER tag")
    beam.add_argument("--plot", action="store_true")
    beam.set_defaults(func=_cmd_beampattern)

    flops = sub.add_parser("flops", help="closed-form analog-solver flop counts")
    flops.add_argument("--mt", type=int, nargs="+", dest="mt_list",
                       default=[128, 160, 192, 256])
    flops.add_argument("--nrf", type=int, default=6)
    flops.add_argument("--k", type=int, default=4)
    flops.add_argument("--eta-ls", type=int, default=2)
    flops.add_argument("--eta-max", type=int, default=100)
    flops.add_argument("--out", type=Path)
    flops.set_defaults(func=_cmd_flops)

    conv = sub.add_parser("convergence", help="solver objective traces")
    _add_config_flags(conv)
    conv.add_argument("--out", type=Path, default=Path("convergence.csv"))
    conv.add_argument("--scheme-tag", default="FM-GP")
    conv.add_argument("--plot", action="store_true")
    conv.set_defaults(func=_cmd_convergence)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
