"""Serialization of results to CSV and JSON, and atomic file writing.

CSV floats use ``%.17g``: enough digits to round-trip any double, and a
fixed format so identical results give byte-identical files on every
platform.  Rows follow the deterministic grid order of their producers.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Optional, Sequence, Tuple

from ._version import __version__
from .bounds import BoundResult
from .montecarlo import ExperimentResult
from .phi import PhiFunction, PhiValidationReport

__all__ = [
    "format_float",
    "atomic_write_text",
    "experiment_csv",
    "experiment_json",
    "bound_rows_csv",
    "phi_validation_csv",
    "phi_curves_csv",
]

_FLOAT_FMT = "%.17g"


def format_float(value: float) -> str:
    """Round-trip decimal formatting used in every CSV cell."""
    return _FLOAT_FMT % value


def atomic_write_text(path: str, text: str) -> None:
    """Write a file via a temp sibling + rename, so readers never see a
    partial file and a crash cannot corrupt an existing one."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(
        dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def _csv_lines(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def experiment_csv(result: ExperimentResult) -> str:
    """One row per grid point, in sweep order."""
    rows = []
    for p in result.points:
        lo, hi = p.confidence_interval()
        rows.append(
            [
                str(p.m),
                str(p.n),
                str(p.K),
                p.case.label(),
                str(p.trials),
                str(p.successes),
                format_float(p.probability),
                format_float(lo),
                format_float(hi),
                format_float(p.disparity_bound_value),
                format_float(p.baseline_bound_value),
            ]
        )
    header = [
        "m",
        "n",
        "K",
        "case",
        "trials",
        "successes",
        "empirical_prob",
        "ci_low",
        "ci_high",
        "new_bound",
        "existing_bound",
    ]
    return _csv_lines(header, rows)


def _case_dict(case) -> dict:
    out = {"kind": case.kind}
    if case.alpha is not None:
        out["alpha"] = case.alpha
    if case.sigma is not None:
        out["sigma"] = case.sigma
    return out


def experiment_json(result: ExperimentResult) -> str:
    """Full provenance document: config echo, seed, version, all points."""
    config = result.config
    doc = {
        "version": __version__,
        "config": {
            "n": config.n,
            "m_values": list(config.m_values),
            "k_values": list(config.k_values),
            "cases": [_case_dict(c) for c in config.cases],
            "trials": config.trials,
            "master_seed": config.master_seed,
            "recovery_tolerance": config.recovery_tolerance,
        },
        "points": [],
    }
    for p in result.points:
        lo, hi = p.confidence_interval()
        doc["points"].append(
            {
                "m": p.m,
                "n": p.n,
                "K": p.K,
                "case": p.case.label(),
                "trials": p.trials,
                "successes": p.successes,
                "empirical_prob": p.probability,
                "ci_low": lo,
                "ci_high": hi,
                "new_bound": p.disparity_bound_value,
                "existing_bound": p.baseline_bound_value,
            }
        )
    return json.dumps(doc, indent=2) + "\n"


def bound_rows_csv(
    rows: Sequence[Tuple[int, int, int, Optional[PhiFunction], str, BoundResult]]
) -> str:
    """Serialize (m, n, K, phi, bound_name, result) tuples.

    ``phi`` is None for the baseline bound, which does not use one; its
    variant/param cells stay empty.  ``epsilon_star`` is empty when the
    feasible interval is.
    """
    header = [
        "m",
        "n",
        "K",
        "phi_variant",
        "phi_param",
        "bound_name",
        "value",
        "epsilon_star",
        "interval_upper",
        "feasible",
    ]
    out = []
    for m, n, K, phi, bound_name, result in rows:
        variant = "" if phi is None else phi.variant
        param = "" if phi is None or phi.alpha is None else format_float(phi.alpha)
        eps = "" if result.epsilon_star is None else format_float(result.epsilon_star)
        out.append(
            [
                str(m),
                str(n),
                str(K),
                variant,
                param,
                bound_name,
                format_float(result.value),
                eps,
                format_float(result.interval_upper),
                "true" if result.feasible else "false",
            ]
        )
    return _csv_lines(header, out)


def phi_validation_csv(report: PhiValidationReport) -> str:
    """Per-size empirical disparity-condition pass rates."""
    header = ["t", "trials", "successes", "empirical_probability"]
    rows = [
        [
            str(int(t)),
            str(report.trials),
            str(int(s)),
            format_float(s / report.trials),
        ]
        for t, s in zip(report.sizes, report.successes)
    ]
    return _csv_lines(header, rows)


def phi_curves_csv(
    curves: Sequence[Tuple[str, Sequence[int], Sequence[float]]]
) -> str:
    """Budget curves as (label, t values, phi values) triples."""
    header = ["curve", "t", "phi"]
    rows = []
    for label, ts, values in curves:
        if len(ts) != len(values):
            raise ValueError(f"curve {label!r} has mismatched lengths")
        for t, v in zip(ts, values):
            rows.append([label, str(int(t)), format_float(v)])
    return _csv_lines(header, rows)
