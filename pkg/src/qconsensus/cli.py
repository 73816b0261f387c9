"""Command-line front end: ``run``, ``certify``, ``sweep`` and ``compare``.

Exit codes: 0 success, 1 simulation failure or I/O error, 2 usage or
configuration error, 3 parameters not certified (use ``--force``).
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from typing import Sequence

import numpy as np

from . import certify
from .config import ConfigError, PRESETS, RunSpec, dump_config, load_config, parse_config
from .engine import (NotCertifiedError, SimResult, SimulationError, recovery_gap, run,
                     run_linear_counterpart, run_many)
from .graph import spectral

log = logging.getLogger("qconsensus")

TIMESERIES_COLUMNS = ("t", "agent", "y", "s", "sbar", "xi", "u", "symbol", "bits")
METRICS_COLUMNS = ("round", "max_pairwise", "delta_norm", "saturated_count")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNCERTIFIED = 0, 1, 2, 3


def _g(v: float) -> str:
    return f"{v:.12g}"


def summary_text(result: SimResult, report: certify.CertReport | None = None) -> str:
    lines = [
        f"label                       {result.label}",
        f"mode                        {result.mode}",
        f"seed                        {result.seed}",
        f"rounds                      {result.n_rounds}",
        f"substep                     {_g(result.h)}",
        f"steady_state_disagreement   {_g(result.steady_state_disagreement())}",
    ]
    if result.n_rounds:
        lines.append(f"final_max_pairwise          {_g(result.max_pairwise[-1])}")
    bits = result.total_bits
    lines.append(f"total_bits                  {int(bits.sum())}")
    lines.append("total_bits_per_agent        " + " ".join(str(int(b)) for b in bits))
    if result.audit_clean:
        lines.append("saturation_audit            clean")
    else:
        k, j, v = result.audit[0]
        lines.append(f"saturation_audit            {len(result.audit)} events "
                     f"(first: round {k}, agent {j + 1}, |v|={_g(v)})")
    if report is not None:
        lines.append(f"certification               {report.mode.value} "
                     f"{'feasible' if report.feasible else 'infeasible'}")
        for c in report.checks:
            lines.append(f"margin.{c.name.replace(' ', '_'):<20} {_g(c.margin)}")
    return "\n".join(lines) + "\n"


def emit_csv(result: SimResult, directory: str, report: certify.CertReport | None = None) -> list[str]:
    """Write ``timeseries.csv``, ``metrics.csv`` and ``summary.txt``; return their paths."""
    try:
        os.makedirs(directory, exist_ok=True)
        ts_path = os.path.join(directory, "timeseries.csv")
        with open(ts_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(TIMESERIES_COLUMNS) + "\n")
            for k in range(result.n_rounds):
                t = _g(result.t[k])
                for i in range(result.y.shape[1]):
                    fh.write(",".join((
                        t, str(i + 1), _g(result.y[k, i]), _g(result.s[k, i]), _g(result.sbar[k, i]),
                        _g(result.xi[k, i]), _g(result.u[k, i]),
                        str(int(result.symbols[k, i])), str(int(result.bits[k, i])))) + "\n")
        m_path = os.path.join(directory, "metrics.csv")
        with open(m_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(METRICS_COLUMNS) + "\n")
            for k in range(result.n_rounds):
                fh.write(f"{k},{_g(result.max_pairwise[k])},{_g(result.delta_norm[k])},"
                         f"{int(result.saturated_count[k])}\n")
        s_path = os.path.join(directory, "summary.txt")
        with open(s_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(summary_text(result, report))
    except OSError as exc:
        raise OSError(f"cannot write results to {exc.filename or directory}: {exc.strerror}") from exc
    return [ts_path, m_path, s_path]


# --- argument handling ------------------------------------------------------------

def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qconsensus", description="Quantized output consensus simulator.")
    ap.add_argument("-v", "--verbose", action="store_true", help="progress lines on stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="configuration file")
        src.add_argument("--preset", choices=sorted(PRESETS), help="named preset")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override one parameter (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--duration", type=float)
        p.add_argument("--force", action="store_true", help="run even if not certified")

    p = sub.add_parser("run", help="simulate one configuration and write CSVs")
    common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-config", action="store_true", help="print the resolved configuration")

    p = sub.add_parser("certify", help="check parameters against the theorem conditions")
    common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--kv", action="store_true", help="also print key=value lines")
    p.add_argument("--strict", action="store_true", help="exit 3 when infeasible")

    p = sub.add_parser("sweep", help="run over lists of epsilon and/or K")
    common(p)
    p.add_argument("--epsilon", type=_float_list)
    p.add_argument("--K", type=_int_list)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output directory (one subdirectory per run)")

    p = sub.add_parser("compare", help="nonlinear run against its linear counterpart")
    common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", help="output directory")
    return ap


def _spec_from_args(args) -> RunSpec:
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"sim.seed={args.seed}")
    if args.duration is not None:
        overrides.append(f"sim.duration={args.duration!r}")
    if args.force:
        overrides.append("sim.force=true")
    if getattr(args, "out", None):
        overrides.append(f"sim.output={args.out}")
    eps = getattr(args, "epsilon", None)
    if isinstance(eps, float):
        overrides.append(f"observer.epsilon={eps!r}")
    if args.config:
        return load_config(args.config, overrides)
    return parse_config(f"preset = {args.preset}\n", overrides)


def _report(spec: RunSpec, cfg) -> certify.CertReport:
    return certify.validate(cfg.protocol, spectral(cfg.graph), spec.cert_mode,
                            epsilon=cfg.epsilon, eps0=cfg.eps0)


def _cmd_run(spec: RunSpec, args, out) -> int:
    if args.dump_config:
        out.write(dump_config(spec))
    cfg = spec.sim_config()
    report = _report(spec, cfg)
    res = run(cfg.replace(force=True) if spec["sim.force"] else cfg)
    out.write(summary_text(res, report))
    if spec.output_dir:
        emit_csv(res, spec.output_dir, report)
        with open(os.path.join(spec.output_dir, "config.txt"), "w", encoding="utf-8") as fh:
            fh.write(dump_config(spec))
        out.write(f"wrote {spec.output_dir}\n")
    return EXIT_OK


def _cmd_certify(spec: RunSpec, args, out) -> int:
    cfg = spec.sim_config()
    report = _report(spec, cfg)
    out.write(report.as_text() + "\n")
    if args.kv:
        out.write(report.as_key_values() + "\n")
    return EXIT_UNCERTIFIED if args.strict and not report.feasible else EXIT_OK


def _cmd_sweep(spec: RunSpec, args, out) -> int:
    eps_list = args.epsilon or spec.sweep_epsilon or (spec["observer.epsilon"],)
    K_list = args.K or spec.sweep_K or (spec["protocol.K"],)
    if not args.epsilon and not args.K and not spec.sweep_epsilon and not spec.sweep_K:
        raise ConfigError("sweep needs --epsilon and/or --K (or a [sweep] section)")
    combos = list(itertools.product(eps_list, K_list))
    cfgs = []
    for eps, K in combos:
        cfg = spec.sim_config(epsilon=eps, K=K, label=f"{spec['sim.label']}_eps{eps:g}_K{K}")
        if spec["sim.force"]:
            cfg = cfg.replace(force=True)
        cfgs.append(cfg)
    results = run_many(cfgs, workers=args.workers)
    out.write(f"{'epsilon':>10} {'K':>4} {'steady_disagreement':>20} {'final_pairwise':>15} "
              f"{'saturations':>11} {'total_bits':>10}\n")
    for (eps, K), cfg, res in zip(combos, cfgs, results):
        final = res.max_pairwise[-1] if res.n_rounds else float("nan")
        out.write(f"{eps:>10.6g} {K:>4d} {res.steady_state_disagreement():>20.12g} {final:>15.6g} "
                  f"{len(res.audit):>11d} {int(res.total_bits.sum()):>10d}\n")
        if spec.output_dir:
            emit_csv(res, os.path.join(spec.output_dir, f"eps{eps:g}_K{K}"), _report(spec, cfg))
    return EXIT_OK


def _cmd_compare(spec: RunSpec, args, out) -> int:
    cfg = spec.sim_config()
    if spec["sim.force"]:
        cfg = cfg.replace(force=True)
    nl = run(cfg)
    lin = run_linear_counterpart(cfg)
    gap = recovery_gap(nl, lin)
    eps = cfg.epsilon
    out.write(f"recovery_gap epsilon={'n/a' if eps is None else f'{eps:g}'} "
              f"seed={cfg.seed} gap={gap:.12g}\n")
    if spec.output_dir:
        emit_csv(nl, os.path.join(spec.output_dir, "nonlinear"))
        emit_csv(lin, os.path.join(spec.output_dir, "linear"))
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "certify": _cmd_certify, "sweep": _cmd_sweep, "compare": _cmd_compare}


def dispatch(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    err = sys.stderr
    try:
        spec = _spec_from_args(args)
        return COMMANDS[args.command](spec, args, out)
    except ConfigError as exc:
        err.write(f"configuration error: {exc}\n")
        return EXIT_USAGE
    except NotCertifiedError as exc:
        err.write(f"not certified: {exc}\n")
        return EXIT_UNCERTIFIED
    except SimulationError as exc:
        err.write(f"simulation failed: {exc}\n")
        return EXIT_FAIL
    except (OSError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_FAIL


def main() -> None:
    sys.exit(dispatch())
