"""Command-line entry point: ``relboltz <subcommand> ...``."""
import argparse
import csv
import logging
import sys

import numpy as np

from . import carleman, collision_operator, diagnostics, solver, verification
from .config import ConfigError, build_initial, load_config
from .diagnostics import DiagnosticsRecord

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("relboltz")


def write_csv(path, records, norms):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DiagnosticsRecord.header(norms))
        for rec in records:
            writer.writerow(rec.row(norms))


def cmd_simulate(args):
    cfg = load_config(args.config)
    f0 = build_initial(cfg)
    records = solver.run(f0, cfg.kernel(), cfg.angular(), cfg.time_t_end, norms=cfg.norms,
                         safety=cfg.time_safety, dt_max=cfg.time_dt_max, threads=args.threads)
    write_csv(cfg.output_path, records, cfg.norms)
    first, last = records[0], records[-1]
    print(f"steps {len(records) - 1}  t {last.t:.6g}")
    for name in ("mass", "energy", "entropy"):
        a, b = getattr(first, name), getattr(last, name)
        print(f"{name:<8s} {a:.10g} -> {b:.10g}")
    print(f"wrote {cfg.output_path}")
    return EXIT_OK


def cmd_verify_kinematics(args):
    rep = verification.kinematics_ensemble(args.samples, args.seed)
    for line in rep.lines():
        print(line)
    print("PASS" if rep.passed else "FAIL: " + ", ".join(rep.failures))
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_verify_carleman(args):
    cfg = load_config(args.config)
    spec = cfg.quadrature_spec()
    rep = carleman.equivalence_battery(kernel=cfg.kernel(), spec=spec, threads=args.threads)
    for i, (d, c, r) in enumerate(zip(rep.direct, rep.carleman, rep.ratios)):
        print(f"test {i}: direct {d:.10g}  carleman {c:.10g}  ratio {r:.6f}")
    ok = rep.cv <= cfg.carleman_cv_tol and rep.max_rel_dev <= cfg.carleman_dev_tol
    print(f"kappa {rep.kappa:.6f}  cv {rep.cv:.3e}  max deviation {rep.max_rel_dev:.3e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_eval_q(args):
    cfg = load_config(args.config)
    f = build_initial(cfg)
    gain, loss, q = collision_operator.collision_Q_at(f, cfg.kernel(), cfg.angular(),
                                                      np.array(args.point), args.threads)
    print(f"Q+ {gain!r}")
    print(f"Lf {loss!r}")
    print(f"Q  {q!r}")
    return EXIT_OK


def cmd_exponents(args):
    p, eta = args.p, args.eta
    n = diagnostics.exponent_n(p)
    theta = diagnostics.exponent_theta(p)
    m = diagnostics.weight_m(p, eta)
    first, second = diagnostics.m_branches(p, eta)
    print(f"n     {n!r}")
    print(f"theta {theta!r}")
    print(f"m     {m!r}")
    print(f"m branches: (1,6] formula {first!r}, (6,inf) formula {second!r}")
    if p == diagnostics.SPLIT:
        gap = abs(first - second)
        print(f"note: p = 6 is evaluated with the (1,6] formula; |difference of formulas| = {gap:.3g}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="relboltz", description=__doc__)
    parser.add_argument("--threads", type=int, default=1, help="worker threads for kernels")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the solver and write the diagnostics CSV")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="invariant checks")
    vsub = p.add_subparsers(dest="target", required=True)
    q = vsub.add_parser("kinematics")
    q.add_argument("--samples", type=int, default=100_000)
    q.add_argument("--seed", type=int, default=7)
    q.set_defaults(func=cmd_verify_kinematics)
    q = vsub.add_parser("carleman")
    q.add_argument("config")
    q.set_defaults(func=cmd_verify_carleman)

    p = sub.add_parser("eval-q", help="print Q+, Lf and Q at one momentum")
    p.add_argument("config")
    p.add_argument("--point", type=float, nargs=3, required=True, metavar=("VX", "VY", "VZ"))
    p.set_defaults(func=cmd_eval_q)

    p = sub.add_parser("exponents", help="print n, theta and m")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--eta", type=float, required=True)
    p.set_defaults(func=cmd_exponents)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
