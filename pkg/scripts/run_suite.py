"""Run the verification suite and print a per-metric summary.

    python scripts/run_suite.py --L 10 --n 601 --alpha 1.0 --t 0.01,0.02,0.05,0.1
    python scripts/run_suite.py            # default configuration, about a minute

Reports are written to --out (default nkl-out/).
"""
import argparse
import time

from nashkernel import parse_config, run_all
from nashkernel.suite import write_reports


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config")
    p.add_argument("--L", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", dest="alpha_list")
    p.add_argument("--t", dest="t_list")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--only", help="comma-separated scenario names")
    args = p.parse_args(argv)

    keys = ("L", "n", "alpha_list", "t_list", "output_dir")
    cfg = parse_config(args.config, {k: getattr(args, k) for k in keys})
    names = args.only.split(",") if args.only else None
    t0 = time.perf_counter()
    reports = run_all(cfg, names)
    for r in reports:
        print(f"{r.scenario:20s} {r.status:4s} {' '.join(r.flags)}")
        for m in r.metrics:
            if not m.passed:
                print(f"    {m.name} = {m.value!r} (tolerance {m.tolerance!r}) {m.worst}")
    path = write_reports(reports, cfg.output_dir)
    print(f"wrote {path} ({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
