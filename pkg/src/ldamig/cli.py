"""Command-line entry point: ``python -m ldamig <subcommand> [options]``."""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import load_config
from .formats import FormatError, load_iq, write_iq

EXIT_ERROR = 1
EXIT_STALLED = 3
EXIT_NONCONVERGED = 4

_EPILOG = {
    "robustness": (
        "CSV columns: L,estimator,influence,se\n"
        "  L          number of injected outliers\n"
        "  estimator  scm, airm, lem, jbld or skld\n"
        "  influence  influence value ||H||_F averaged over trials\n"
        "  se         standard error of that average\n"
        "Lines starting with '#' carry the run parameters."),
    "pd-sim": (
        "CSV columns: scr_db,detector,threshold,pd,se\n"
        "  scr_db     signal-to-clutter ratio in dB\n"
        "  detector   amf, ace, mtd, mig-<measure> or lda-mig-<measure>-m<M>\n"
        "  threshold  threshold calibrated on H0 trials for the target pfa\n"
        "  pd         fraction of H1 statistics strictly above the threshold\n"
        "  se         binomial standard error of pd\n"
        "Lines starting with '#' carry the run parameters.\n"
        "lda_mig detectors read W_<measure>_M<M>.migw from projection_dir."),
    "learn": (
        "Writes W_<measure>_M<M>.migw (MIGW1 format) for every configured\n"
        "measure and target dimension into --out (default: projection_dir).\n"
        "Exits with status 3 if any line search stalled."),
    "discriminate": (
        "CSV columns: stage,scr_db,label,pc1,pc2\n"
        "  stage      original (N x N matrices) or projected (M x M)\n"
        "  scr_db     signal-to-clutter ratio of the signal class\n"
        "  label      1 clutter plus target, 0 clutter mean\n"
        "  pc1, pc2   scores on the first two principal axes of the\n"
        "             log-vectorized matrices\n"
        "The projection file comes from [discriminate] projection."),
    "ingest": (
        "Reads a MIGIQ1 file or a pulse,cell,re,im CSV and writes the cube as\n"
        "MIGIQ1 to --out; prints the cube shape and mean power."),
}


def _common(p):
    p.add_argument("--config", type=Path, help="TOML configuration file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, help="output path (stdout for CSV if omitted)")
    p.add_argument("--threads", type=int, help="worker threads for Monte Carlo trials")
    p.add_argument("--preset", choices=("desk", "paper"), default="desk",
                   help="parameter preset the config file is layered over")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ldamig",
        description="Matrix-information-geometry detectors with learned manifold projections.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "robustness": "influence values of the SCM and geometric means versus outlier count",
        "pd-sim": "detection probability versus SCR for a bank of detectors",
        "learn": "train projection matrices and save them as MIGW1 files",
        "discriminate": "PCA scatter of the two classes before and after projection",
        "ingest": "convert an IQ cube (MIGIQ1 or CSV) to MIGIQ1",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text, epilog=_EPILOG[name],
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        if name == "ingest":
            p.add_argument("input", type=Path, help="MIGIQ1 or CSV file")
        _common(p)
    return parser


def _load(args, experiment):
    overrides = {"experiment": experiment}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    return load_config(args.config, args.preset, overrides)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _ingest(args):
    cube = load_iq(args.input)
    print(f"{args.input}: {cube.shape[0]} pulses x {cube.shape[1]} cells, "
          f"mean power {np.mean(np.abs(cube) ** 2):.6g}")
    if args.out is not None:
        write_iq(cube, args.out)
        print(f"wrote {args.out}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ingest":
            return _ingest(args)
        cfg = _load(args, args.command.replace("-", "_"))
        if args.command == "robustness":
            rows, info = ex.run_robustness(cfg)
            _emit(ex.robustness_csv(cfg, rows, info), args.out)
        elif args.command == "pd-sim":
            rows, info = ex.run_pd_sim(cfg)
            _emit(ex.pd_csv(cfg, rows, info), args.out)
        elif args.command == "learn":
            outcomes = ex.run_learn(cfg, args.out)
            if any(o.stalled for o in outcomes):
                print("error: line search stalled for "
                      + ", ".join(f"{o.measure.value} M={o.M}" for o in outcomes if o.stalled),
                      file=sys.stderr)
                return EXIT_STALLED
        else:
            rows = ex.run_discriminate(cfg)
            _emit(ex.scatter_csv(cfg, rows, cfg.discriminate.projection), args.out)
    except ex.ConvergenceAbort as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ValueError, KeyError, FileNotFoundError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return 0
