"""Command-line front end.

Subcommands:

- ``bound``: evaluate both recovery-probability bounds for one (n, K)
  and one m or an m-sweep.
- ``simulate``: run the Monte Carlo experiment grid and write CSV/JSON
  (optionally SVG curve figures).
- ``validate-phi``: empirical check of the disparity condition for
  Gaussian vectors; exit 3 if the worst per-size probability falls
  below the threshold.
- ``plot-phi``: tabulate/plot the decaying-signal budget curves for
  several decay ratios.
- ``report``: merge previously written experiment CSVs into combined
  SVG figures.

Every option can also come from an INI config file (section named after
the subcommand, keys named after the long flags); explicit flags win.
The master seed falls back to the ``OMP_LAB_SEED`` environment variable,
then to 0.  Exit codes: 0 success, 1 runtime failure, 2 usage error,
3 threshold not met.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import bounds as bounds_mod
from . import output, svgplot
from ._version import __version__
from .montecarlo import (
    ExperimentConfig,
    TrialError,
    phi_for_case,
    run_experiment,
)
from .phi import PhiFunction, validate_phi_empirical
from .signals import SignalCase, StreamKey

__all__ = ["main", "run"]

SEED_ENV_VAR = "OMP_LAB_SEED"

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_THRESHOLD = 3

_CASE_TOKENS: Dict[str, SignalCase] = {
    "flat": SignalCase.flat(),
    "decay11": SignalCase.decaying(1.1),
    "decay12": SignalCase.decaying(1.2),
    "gauss": SignalCase.gaussian(1.0),
}

_ALL_FORMATS = ("csv", "json", "svg")


class UsageError(Exception):
    """Bad flags/config; reported on stderr with exit code 2."""


def _parse_positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _parse_seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _parse_sweep(text: str) -> List[int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"sweep must look like lo:step:hi, got {text!r}"
        )
    try:
        lo, step, hi = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"sweep needs integer parts, got {text!r}")
    if lo < 1 or step < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad sweep range {text!r}")
    return list(range(lo, hi + 1, step))


def _parse_formats(text: str) -> Tuple[str, ...]:
    tokens = tuple(t.strip() for t in text.split(",") if t.strip())
    if not tokens:
        raise argparse.ArgumentTypeError("need at least one output format")
    for t in tokens:
        if t not in _ALL_FORMATS:
            raise argparse.ArgumentTypeError(
                f"unknown format {t!r}; choose from {', '.join(_ALL_FORMATS)}"
            )
    return tokens


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")


def _parse_case(text: str) -> SignalCase:
    token = text.strip()
    if token not in _CASE_TOKENS:
        raise argparse.ArgumentTypeError(
            f"unknown case {token!r}; choose from {', '.join(sorted(_CASE_TOKENS))}"
        )
    return _CASE_TOKENS[token]


def _comma_list(conv: Callable[[str], object]) -> Callable[[str], List[object]]:
    def parse(text: str) -> List[object]:
        return [conv(tok.strip()) for tok in text.split(",") if tok.strip()]

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omp-lab",
        description="Sparse-recovery experiments: pursuit solver, "
        "probability bounds, Monte Carlo sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"omp-lab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="INI config file; flags override it")
        p.add_argument("--out-dir", help="output directory (default: .)")

    p_bound = sub.add_parser("bound", help="evaluate the probability bounds")
    common(p_bound)
    p_bound.add_argument("--m", action="append", type=_parse_positive_int)
    p_bound.add_argument("--m-sweep", metavar="LO:STEP:HI")
    p_bound.add_argument("--n", type=_parse_positive_int)
    p_bound.add_argument("--K", type=_parse_positive_int)
    p_bound.add_argument("--phi", choices=("cs", "decay", "gauss"))
    p_bound.add_argument("--alpha", type=_parse_float)
    p_bound.add_argument("--formats", type=_parse_formats)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo experiment")
    common(p_sim)
    p_sim.add_argument("--m", action="append", type=_parse_positive_int)
    p_sim.add_argument("--m-sweep", metavar="LO:STEP:HI")
    p_sim.add_argument("--n", type=_parse_positive_int)
    p_sim.add_argument("--K", action="append", type=_parse_positive_int)
    p_sim.add_argument(
        "--case",
        action="append",
        type=_parse_case,
        dest="cases",
        metavar="{" + "|".join(sorted(_CASE_TOKENS)) + "}",
    )
    p_sim.add_argument("--trials", type=_parse_positive_int)
    p_sim.add_argument("--seed", type=_parse_seed)
    p_sim.add_argument("--threads", type=_parse_positive_int)
    p_sim.add_argument("--formats", type=_parse_formats)

    p_phi = sub.add_parser("validate-phi", help="empirical disparity check")
    common(p_phi)
    p_phi.add_argument("--t-max", type=_parse_positive_int)
    p_phi.add_argument("--trials", type=_parse_positive_int)
    p_phi.add_argument("--seed", type=_parse_seed)
    p_phi.add_argument("--phi", choices=("cs", "decay", "gauss"))
    p_phi.add_argument("--alpha", type=_parse_float)
    p_phi.add_argument("--threshold", type=_parse_float)
    p_phi.add_argument("--threads", type=_parse_positive_int)
    p_phi.add_argument("--formats", type=_parse_formats)

    p_plot = sub.add_parser("plot-phi", help="tabulate/plot budget curves")
    common(p_plot)
    p_plot.add_argument("--alpha", action="append", type=_parse_float, dest="alphas")
    p_plot.add_argument("--t-max", type=_parse_positive_int)
    p_plot.add_argument("--formats", type=_parse_formats)

    p_rep = sub.add_parser("report", help="merge experiment CSVs into SVGs")
    common(p_rep)
    p_rep.add_argument("inputs", nargs="*", metavar="CSV")

    return parser


# Per-subcommand config-file keys and their converters.  A key applies
# only when the matching flag was not given on the command line.
_CONFIG_KEYS: Dict[str, Dict[str, Callable[[str], object]]] = {
    "bound": {
        "m": _comma_list(_parse_positive_int),
        "m_sweep": str,
        "n": _parse_positive_int,
        "K": _parse_positive_int,
        "phi": str,
        "alpha": _parse_float,
        "formats": _parse_formats,
        "out_dir": str,
    },
    "simulate": {
        "m": _comma_list(_parse_positive_int),
        "m_sweep": str,
        "n": _parse_positive_int,
        "K": _comma_list(_parse_positive_int),
        "cases": _comma_list(_parse_case),
        "trials": _parse_positive_int,
        "seed": _parse_seed,
        "threads": _parse_positive_int,
        "formats": _parse_formats,
        "out_dir": str,
    },
    "validate-phi": {
        "t_max": _parse_positive_int,
        "trials": _parse_positive_int,
        "seed": _parse_seed,
        "phi": str,
        "alpha": _parse_float,
        "threshold": _parse_float,
        "threads": _parse_positive_int,
        "formats": _parse_formats,
        "out_dir": str,
    },
    "plot-phi": {
        "alphas": _comma_list(_parse_float),
        "t_max": _parse_positive_int,
        "formats": _parse_formats,
        "out_dir": str,
    },
    "report": {
        "out_dir": str,
    },
}


def _apply_config(ns: argparse.Namespace) -> None:
    if ns.config is None:
        return
    if not os.path.isfile(ns.config):
        raise UsageError(f"config file not found: {ns.config}")
    ini = configparser.ConfigParser()
    ini.optionxform = str  # keep key case, so "K" works as written
    try:
        ini.read(ns.config)
    except configparser.Error as err:
        raise UsageError(f"cannot parse config file: {err}")
    if ns.subcommand not in ini:
        return
    section = ini[ns.subcommand]
    keys = _CONFIG_KEYS[ns.subcommand]
    for raw_key, raw_value in section.items():
        key = raw_key.replace("-", "_")
        if key == "k":
            key = "K"
        if key == "case":
            key = "cases"
        if key == "alpha" and ns.subcommand == "plot-phi":
            key = "alphas"
        if key not in keys:
            raise UsageError(
                f"unknown config key {raw_key!r} in section [{ns.subcommand}]"
            )
        if getattr(ns, key, None) is None:
            try:
                setattr(ns, key, keys[key](raw_value))
            except (argparse.ArgumentTypeError, ValueError) as err:
                raise UsageError(f"bad config value for {raw_key!r}: {err}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return _parse_seed(raw)
    except argparse.ArgumentTypeError as err:
        raise UsageError(f"bad {SEED_ENV_VAR}: {err}")


def _resolve_m_values(ns: argparse.Namespace) -> List[int]:
    if ns.m is not None and ns.m_sweep is not None:
        raise UsageError("give either --m or --m-sweep, not both")
    if ns.m_sweep is not None:
        try:
            return _parse_sweep(ns.m_sweep)
        except argparse.ArgumentTypeError as err:
            raise UsageError(str(err))
    if ns.m is not None:
        return list(ns.m)
    raise UsageError("no m values given (use --m or --m-sweep)")


def _resolve_phi(variant: Optional[str], alpha: Optional[float]) -> PhiFunction:
    variant = variant or "cs"
    if variant == "decay":
        if alpha is None:
            raise UsageError("--phi decay requires --alpha")
        if not alpha > 1.0:
            raise UsageError(f"--alpha must exceed 1, got {alpha:g}")
        return PhiFunction.strongly_decaying(alpha)
    if alpha is not None:
        raise UsageError(f"--alpha only applies to --phi decay, not {variant!r}")
    if variant == "cs":
        return PhiFunction.cauchy_schwarz()
    return PhiFunction.gaussian_empirical()


def _out_path(ns: argparse.Namespace, name: str) -> str:
    out_dir = ns.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _formats(ns: argparse.Namespace, default: Tuple[str, ...]) -> Tuple[str, ...]:
    return ns.formats if ns.formats is not None else default


def _cmd_bound(ns: argparse.Namespace) -> int:
    m_values = _resolve_m_values(ns)
    n = ns.n if ns.n is not None else 1024
    if ns.K is None:
        raise UsageError("--K is required")
    K = ns.K
    if not K < n:
        raise UsageError(f"need K < n, got K={K}, n={n}")
    phi = _resolve_phi(ns.phi, ns.alpha)
    formats = _formats(ns, ("csv",))

    rows = []
    for m in m_values:
        new = bounds_mod.disparity_bound(m, n, K, phi)
        base = bounds_mod.baseline_bound(m, n, K)
        rows.append((m, n, K, phi, "new", new))
        rows.append((m, n, K, None, "existing", base))
        eps = "-" if new.epsilon_star is None else f"{new.epsilon_star:.6f}"
        print(
            f"m={m} n={n} K={K} phi={phi.label()}  "
            f"new={new.value:.6g} (eps*={eps}, feasible={new.feasible})  "
            f"existing={base.value:.6g} (feasible={base.feasible})"
        )

    if "csv" in formats:
        output.atomic_write_text(
            _out_path(ns, "bounds.csv"), output.bound_rows_csv(rows)
        )
    if "json" in formats:
        doc = {
            "version": __version__,
            "rows": [
                {
                    "m": m,
                    "n": n_,
                    "K": k_,
                    "phi_variant": None if p is None else p.variant,
                    "phi_param": None if p is None else p.alpha,
                    "bound_name": name,
                    "value": res.value,
                    "epsilon_star": res.epsilon_star,
                    "interval_upper": res.interval_upper,
                    "feasible": res.feasible,
                }
                for m, n_, k_, p, name, res in rows
            ],
        }
        output.atomic_write_text(
            _out_path(ns, "bounds.json"), json.dumps(doc, indent=2) + "\n"
        )
    if "svg" in formats:
        new_vals = [r[5].value for r in rows if r[4] == "new"]
        base_vals = [r[5].value for r in rows if r[4] == "existing"]
        svg = svgplot.line_plot(
            [
                svgplot.Series("new bound", m_values, new_vals),
                svgplot.Series("existing bound", m_values, base_vals),
            ],
            title=f"Recovery bounds, K={K}, n={n}, phi={phi.label()}",
            x_label="m",
            y_label="probability lower bound",
            y_range=(0.0, 1.05),
        )
        output.atomic_write_text(_out_path(ns, "bounds.svg"), svg)
    return EXIT_OK


def _cmd_simulate(ns: argparse.Namespace) -> int:
    m_values = sorted(set(_resolve_m_values(ns)))
    n = ns.n if ns.n is not None else 1024
    k_values = ns.K if ns.K is not None else [15, 30]
    cases = ns.cases if ns.cases is not None else list(_CASE_TOKENS.values())
    trials = ns.trials if ns.trials is not None else 1000
    seed = ns.seed if ns.seed is not None else _default_seed()
    threads = ns.threads if ns.threads is not None else (os.cpu_count() or 1)
    formats = _formats(ns, ("csv", "json"))

    try:
        config = ExperimentConfig(
            n=n,
            m_values=tuple(m_values),
            k_values=tuple(sorted(set(k_values))),
            cases=tuple(dict.fromkeys(cases)),
            trials=trials,
            master_seed=seed,
        )
    except ValueError as err:
        raise UsageError(str(err))

    def progress(done: int, total: int, point) -> None:
        print(
            f"[{done}/{total}] m={point.m} K={point.K} case={point.case.label()} "
            f"p={point.probability:.3f}",
            file=sys.stderr,
            flush=True,
        )

    result = run_experiment(config, workers=threads, progress=progress)

    if "csv" in formats:
        output.atomic_write_text(
            _out_path(ns, "results.csv"), output.experiment_csv(result)
        )
    if "json" in formats:
        output.atomic_write_text(
            _out_path(ns, "results.json"), output.experiment_json(result)
        )
    if "svg" in formats:
        for K in config.k_values:
            for case in config.cases:
                points = [
                    p for p in result.points if p.K == K and p.case == case
                ]
                svg = svgplot.line_plot(
                    [
                        svgplot.Series(
                            "empirical", [p.m for p in points],
                            [p.probability for p in points],
                        ),
                        svgplot.Series(
                            "new bound", [p.m for p in points],
                            [p.disparity_bound_value for p in points],
                        ),
                        svgplot.Series(
                            "existing bound", [p.m for p in points],
                            [p.baseline_bound_value for p in points],
                        ),
                    ],
                    title=f"Exact recovery, K={K}, case={case.label()}, n={n}",
                    x_label="m",
                    y_label="probability",
                    y_range=(0.0, 1.05),
                )
                output.atomic_write_text(
                    _out_path(ns, f"curves_K{K}_{case.label()}.svg"), svg
                )
    return EXIT_OK


def _cmd_validate_phi(ns: argparse.Namespace) -> int:
    t_max = ns.t_max if ns.t_max is not None else 50
    trials = ns.trials if ns.trials is not None else 50000
    seed = ns.seed if ns.seed is not None else _default_seed()
    threshold = ns.threshold if ns.threshold is not None else 0.995
    phi = _resolve_phi(ns.phi if ns.phi is not None else "gauss", ns.alpha)
    formats = _formats(ns, ("csv",))
    # --threads is accepted for interface uniformity; the per-size loops
    # are vectorized and finish in seconds, so no pool is spun up, and
    # per-size substreams make the counts worker-independent anyway.

    report = validate_phi_empirical(phi, t_max, trials, StreamKey(seed))

    if "csv" in formats:
        output.atomic_write_text(
            _out_path(ns, "phi_validation.csv"), output.phi_validation_csv(report)
        )
    if "json" in formats:
        doc = {
            "version": __version__,
            "phi": phi.label(),
            "t_max": t_max,
            "trials": trials,
            "seed": seed,
            "threshold": threshold,
            "min_probability": report.min_probability,
            "rows": [
                {
                    "t": int(t),
                    "trials": trials,
                    "successes": int(s),
                    "empirical_probability": s / trials,
                }
                for t, s in zip(report.sizes, report.successes)
            ],
        }
        output.atomic_write_text(
            _out_path(ns, "phi_validation.json"), json.dumps(doc, indent=2) + "\n"
        )
    if "svg" in formats:
        svg = svgplot.line_plot(
            [
                svgplot.Series(
                    f"phi={phi.label()}", report.sizes.tolist(),
                    report.probabilities.tolist(),
                )
            ],
            title=f"Disparity condition pass rate ({trials} draws per size)",
            x_label="subset size t",
            y_label="empirical probability",
            y_range=(0.9, 1.005),
        )
        output.atomic_write_text(_out_path(ns, "phi_validation.svg"), svg)

    print(
        f"min probability {report.min_probability:.6f} at t={report.worst_size()} "
        f"(threshold {threshold:g})"
    )
    if report.min_probability < threshold:
        return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_plot_phi(ns: argparse.Namespace) -> int:
    alphas = ns.alphas if ns.alphas is not None else [1.0, 1.5, 2.0, 2.5]
    t_max = ns.t_max if ns.t_max is not None else 50
    formats = _formats(ns, ("csv", "svg"))

    t_values = list(range(1, t_max + 1))
    curves = []
    for a in alphas:
        if a == 1.0:
            # Limit of the geometric budget as the decay ratio tends to
            # 1; coincides with the Cauchy-Schwarz line t.
            values = [float(t) for t in t_values]
        elif a > 1.0:
            phi = PhiFunction.strongly_decaying(a)
            values = [phi(t) for t in t_values]
        else:
            raise UsageError(f"decay ratio must be 1 or greater than 1, got {a:g}")
        curves.append((f"alpha={a:g}", t_values, values))

    if "csv" in formats:
        output.atomic_write_text(
            _out_path(ns, "phi_curves.csv"), output.phi_curves_csv(curves)
        )
    if "json" in formats:
        doc = {
            "version": __version__,
            "curves": [
                {"label": label, "t": list(ts), "phi": list(vals)}
                for label, ts, vals in curves
            ],
        }
        output.atomic_write_text(
            _out_path(ns, "phi_curves.json"), json.dumps(doc, indent=2) + "\n"
        )
    if "svg" in formats:
        svg = svgplot.line_plot(
            [svgplot.Series(label, ts, vals) for label, ts, vals in curves],
            title="Disparity budget versus subset size",
            x_label="t",
            y_label="phi(t)",
        )
        output.atomic_write_text(_out_path(ns, "phi_curves.svg"), svg)
    return EXIT_OK


def _cmd_report(ns: argparse.Namespace) -> int:
    if not ns.inputs:
        raise UsageError("report needs at least one experiment CSV")
    needed = {"m", "K", "case", "empirical_prob", "new_bound", "existing_bound"}
    groups: Dict[Tuple[int, str], List[Tuple[int, float, float, float]]] = {}
    for path in ns.inputs:
        if not os.path.isfile(path):
            raise UsageError(f"input not found: {path}")
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
                raise UsageError(
                    f"{path} is not an experiment CSV (missing "
                    f"{sorted(needed.difference(reader.fieldnames or []))})"
                )
            for row in reader:
                try:
                    key = (int(row["K"]), row["case"])
                    groups.setdefault(key, []).append(
                        (
                            int(row["m"]),
                            float(row["empirical_prob"]),
                            float(row["new_bound"]),
                            float(row["existing_bound"]),
                        )
                    )
                except (KeyError, ValueError) as err:
                    raise UsageError(f"bad row in {path}: {err}")

    for (K, case_label), rows in sorted(groups.items()):
        rows.sort(key=lambda r: r[0])
        ms = [r[0] for r in rows]
        svg = svgplot.line_plot(
            [
                svgplot.Series("empirical", ms, [r[1] for r in rows]),
                svgplot.Series("new bound", ms, [r[2] for r in rows]),
                svgplot.Series("existing bound", ms, [r[3] for r in rows]),
            ],
            title=f"Exact recovery, K={K}, case={case_label}",
            x_label="m",
            y_label="probability",
            y_range=(0.0, 1.05),
        )
        output.atomic_write_text(
            _out_path(ns, f"combined_K{K}_{case_label}.svg"), svg
        )
        print(f"wrote combined_K{K}_{case_label}.svg ({len(rows)} points)")
    return EXIT_OK


_DISPATCH = {
    "bound": _cmd_bound,
    "simulate": _cmd_simulate,
    "validate-phi": _cmd_validate_phi,
    "plot-phi": _cmd_plot_phi,
    "report": _cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help/--version;
        # surface either as a return value so callers can test us.
        return int(exc.code or 0)
    try:
        _apply_config(ns)
        return _DISPATCH[ns.subcommand](ns)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except TrialError as err:
        print(f"trial failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as err:
        print(f"i/o failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME


def run() -> None:
    sys.exit(main())
