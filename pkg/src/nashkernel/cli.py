"""``nkl`` command-line entry point.

Exit codes: 0 all checks pass, 1 verification failure, 2 usage error,
3 numerical diagnostic. Data goes to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time

import numpy as np

from . import bounds, nash, spectral, suite
from .config import RunConfig, parse_config
from .discretization import assemble_divergence_form
from .errors import ConfigError, NumericalDiagnostic

log = logging.getLogger("nkl")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--model", dest="family", help="density family")
    p.add_argument("--beta", type=float)
    p.add_argument("--a", type=float)
    p.add_argument("--d", type=int)
    p.add_argument("--K-cut", dest="K_cut", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--bc")
    p.add_argument("--alpha", dest="alpha_list", help="comma-separated alpha values")
    p.add_argument("--t", dest="t_list", help="comma-separated ascending times")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--margin", dest="interior_margin", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="output_dir")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nkl", description="Discrete checks of weighted and fractional Nash "
                                             "inequalities and fractional heat-kernel bounds.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("model-inspect", help="closed-form model quantities at points")
    _add_common(p)
    p.add_argument("--x", default="0", help="comma-separated evaluation points")
    for name, text in (("nash", "classical and fractional Nash gaps on the probe family"),
                       ("kernel-bound", "kernel bound ratios and the small-time exponent fit"),
                       ("fractional-check", "Balakrishnan and subordination cross-checks"),
                       ("verify-all", "run every scenario and write CSV/JSON reports")):
        _add_common(sub.add_parser(name, help=text))
    return parser


_CONFIG_KEYS = ("family", "beta", "a", "d", "K_cut", "L", "n", "bc", "alpha_list", "t_list",
                "epsilon", "interior_margin", "seed", "output_dir")


def _config(args) -> RunConfig:
    return parse_config(args.config, {k: getattr(args, k, None) for k in _CONFIG_KEYS})


def _writer():
    return csv.writer(sys.stdout, lineterminator="\r\n")


def _f(v) -> str:
    return repr(float(v))


def cmd_model_inspect(cfg: RunConfig, args) -> int:
    try:
        xs = [float(s) for s in args.x.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"x: expected comma-separated numbers, got {args.x!r}") from None
    w = _writer()
    w.writerow(["x", "rho", "grad_log_rho", "V", "minus_AV_over_V", "schrodinger_U"])
    for x in xs:
        r = cfg.model.inspect(x)
        w.writerow([_f(r.x), _f(r.rho), _f(r.grad_log_rho), _f(r.V), _f(r.minus_AV_over_V), _f(r.schrodinger_U)])
    return EXIT_OK


def cmd_nash(cfg: RunConfig, args) -> int:
    op = assemble_divergence_form(cfg.model, cfg.grid, cfg.bc)
    dec = spectral.eigendecompose(op)
    V = cfg.model.V(cfg.grid.nodes)
    c = cfg.model.lyapunov_constant()
    probes = nash.probe_family(dec, V, cfg.seed)
    C, worst = nash.estimate_nash_constant(op, probes, c, cfg.model.d, V)
    log.info("frozen Nash constant C_est=%r (attained by %s)", C, worst)
    rate = nash.NashRate(cfg.model.d, C)
    w = _writer()
    w.writerow(["probe_id", "alpha", "gamma", "lhs", "rhs", "gap"])
    ok = True
    for a in cfg.alpha_list:
        for r in nash.fractional_sweep(dec, probes, a, c, rate, V, cfg.epsilon):
            w.writerow([r.probe_id, _f(r.alpha), _f(r.gamma), _f(r.lhs), _f(r.rhs), _f(r.gap)])
            ok &= r.gap >= -nash.GAP_RTOL
    return EXIT_OK if ok else EXIT_FAIL


def cmd_kernel_bound(cfg: RunConfig, args) -> int:
    op = assemble_divergence_form(cfg.model, cfg.grid, cfg.bc)
    dec = spectral.eigendecompose(op)
    w = _writer()
    w.writerow(["kind", "alpha", "t", "sup_ratio", "bound_branch", "slope", "C_fit", "reference_exponent"])
    ok = True
    for a in cfg.alpha_list:
        rep = bounds.exponent_sweep(dec, cfg.model, a, cfg.t_list, interior_margin=cfg.interior_margin)
        for row in rep.rows():
            w.writerow(["point", _f(a), _f(row["t"]), _f(row["sup_ratio"]), row["bound_branch"], "", "", ""])
        w.writerow(["fit", _f(a), "", "", rep.branch, _f(rep.fitted_exponent), _f(rep.C_fit),
                    _f(rep.reference_exponent)])
        if suite.resolution_flag(cfg.grid.h, cfg.t_list[0], a):
            log.warning("alpha=%r: kernel width at t=%r is below two grid spacings; exponent fit degraded",
                        a, cfg.t_list[0])
        ok &= rep.relative_exponent_error <= suite.EXPONENT_RTOL
    return EXIT_OK if ok else EXIT_FAIL


def _emit_reports(reports) -> None:
    w = _writer()
    w.writerow(["scenario", "metric", "value", "tolerance", "reference", "passed", "worst"])
    for r in reports:
        for m in r.metrics:
            w.writerow([r.scenario, m.name, _f(m.value), _f(m.tolerance), _f(m.reference),
                        "true" if m.passed else "false", m.worst])


def cmd_fractional_check(cfg: RunConfig, args) -> int:
    reports = suite.run_all(cfg, ["balakrishnan", "subordination"])
    _emit_reports(reports)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_verify_all(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    reports = suite.run_all(cfg)
    path = suite.write_reports(reports, cfg.output_dir)
    w = _writer()
    w.writerow(["scenario", "status", "flags"])
    for r in reports:
        w.writerow([r.scenario, r.status, ";".join(r.flags)])
        if not r.passed:
            bad = [m for m in r.metrics if not m.passed]
            for m in bad:
                log.warning("%s: %s = %r (tolerance %r) %s", r.scenario, m.name, m.value, m.tolerance, m.worst)
    log.info("wrote %s in %.1f s", path, time.perf_counter() - t0)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


COMMANDS = {
    "model-inspect": cmd_model_inspect,
    "nash": cmd_nash,
    "kernel-bound": cmd_kernel_bound,
    "fractional-check": cmd_fractional_check,
    "verify-all": cmd_verify_all,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s", stream=sys.stderr)
    np.seterr(all="ignore")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"nkl: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalDiagnostic as exc:
        print(f"nkl: numerical diagnostic: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
