"""Deterministic CSV/JSON writers and the documented output formats.

Floats are written with 17 significant digits so repeated runs of the same
scenario produce byte-identical files.
"""

from __future__ import annotations

import io
import json
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

FORMAT_VERSION = "1"

# Column layout of every CSV the CLI writes, keyed by file kind.
COLUMNS = {
    "spectrum": ["N", "k", "lambda", "re_p_infty", "im_p_infty", "velocity", "wu_residual", "plancherel_lhs", "plancherel_rhs"],
    "monotonicity": ["N1", "N2", "max_increase", "monotone"],
    "trajectory": ["t", "m", "re_pole", "im_pole", "re_residue", "im_residue"],
    "field": ["x", "u"],
    "omega_audit": ["t", "re_z", "im_z", "abs_pi_u", "bound"],
    "residuals": ["t", "N_sol", "l2_residual_sq_pi", "tail_sum_pi", "linf_residual", "s", "hs_residual"],
    "resolution_table": ["N_sol", "t", "l2_residual_sq_pi", "tail_sum_pi", "ratio"],
    "xcheck_snapshot": ["x", "u_numeric", "u_explicit", "diff"],
    "xcheck_errors": ["t", "rel_l2_error"],
}


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v + 0.0, ".17g")  # + 0.0 maps -0.0 to 0.0
    return str(v)


def csv_text(kind: str, rows) -> str:
    cols = COLUMNS[kind]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(fmt(row[c]) for c in cols) + "\n")
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no inf/nan; keep them readable as strings
        return v if math.isfinite(v) else fmt(v)
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    return obj


def json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class OutputSet:
    """Files of one run, collected in memory and committed together.

    Nothing touches the output directory before :meth:`commit`, so a run
    that fails validation leaves no partial outputs behind.
    """

    def __init__(self):
        self.files: dict[str, str] = {}

    def csv(self, name: str, kind: str, rows):
        self.files[name] = csv_text(kind, rows)

    def json(self, name: str, obj):
        self.files[name] = json_text(obj)

    def commit(self, out_dir):
        out = Path(out_dir)
        out.parent.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".bo-stage-", dir=out.parent))
        try:
            for name, text in self.files.items():
                path = stage / name
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text)
            out.mkdir(exist_ok=True)
            for name in self.files:
                dest = out / name
                dest.parent.mkdir(parents=True, exist_ok=True)
                os.replace(stage / name, dest)
        finally:
            shutil.rmtree(stage, ignore_errors=True)
