"""CSV and JSON serialization of check reports, evaluations and probes.

Check CSV schema (fixed)::

    check_id,dim,family,lhs,rhs,margin,status,tolerance,runtime_ms

``family`` is the compact ``key=value;...`` descriptor (empty for checks that
take no field). Reals are written with 17 significant digits, so a file
re-read with :func:`read_checks_csv` reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict

from ltlab.verifier import CheckReport, ProbeReport

CHECK_HEADER = ("check_id", "dim", "family", "lhs", "rhs", "margin", "status", "tolerance",
                "runtime_ms")


def fmt_real(x: float) -> str:
    return "%.17g" % x


def _fmt_value(x) -> str:
    if isinstance(x, float):
        return fmt_real(x)
    return str(x)


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def describe_family(record: dict) -> str:
    """``key=value;...`` form of a descriptor record; reals keep 17 digits."""
    parts = []
    for key, value in record.items():
        if key == "modes":
            value = "|".join(":".join(_fmt_value(x) for x in m) for m in value)
        parts.append(f"{key}={_fmt_value(value)}")
    return ";".join(parts)


def parse_family(text: str) -> dict:
    """Inverse of :func:`describe_family`."""
    out = {}
    for item in filter(None, text.split(";")):
        key, _, value = item.partition("=")
        if key == "kind":
            out[key] = value
        elif key == "modes":
            out[key] = [[_parse_value(x) for x in m.split(":")] for m in value.split("|")]
        else:
            out[key] = _parse_value(value)
    return out


def check_rows(reports):
    for r in reports:
        yield (r.check_id, str(r.dim), describe_family(r.family_descriptor), fmt_real(r.lhs),
               fmt_real(r.rhs), fmt_real(r.margin), r.status, fmt_real(r.tolerance),
               str(r.runtime_ms))


def checks_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CHECK_HEADER)
    w.writerows(check_rows(reports))
    return buf.getvalue()


def read_checks_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CHECK_HEADER:
        raise ValueError("not a check report CSV")
    out = []
    for row in rows[1:]:
        cid, dim, fam, lhs, rhs, margin, status, tol, ms = row
        out.append(CheckReport(cid, int(dim), parse_family(fam), float(lhs), float(rhs),
                               float(margin), status, float(tol), int(ms)))
    return out


def checks_to_json(reports) -> str:
    return json.dumps({"checks": [asdict(r) for r in reports]}, indent=1)


def read_checks_json(text: str) -> list:
    return [CheckReport(**rec) for rec in json.loads(text)["checks"]]


def probe_to_json(rep: ProbeReport) -> str:
    return json.dumps(asdict(rep), indent=1)


def read_probe_json(text: str) -> ProbeReport:
    return ProbeReport(**json.loads(text))


def probe_to_csv(rep: ProbeReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("dim", "family", "beta", "alpha", "eps", "value", "overflow", "verdict"))
    for e, v, o in zip(rep.eps_grid, rep.values, rep.overflow):
        w.writerow((rep.dim, rep.family, fmt_real(rep.beta), fmt_real(rep.alpha), fmt_real(e),
                    fmt_real(v), int(o), rep.verdict))
    return buf.getvalue()


# evaluation rows: dicts with a fixed key order
EVAL_HEADER = ("functional", "dim", "family", "param", "param_value", "value", "quad_error",
               "runtime_ms")


def evals_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVAL_HEADER)
    for row in rows:
        w.writerow(tuple(fmt_real(row[k]) if isinstance(row[k], float) else row[k]
                         for k in EVAL_HEADER))
    return buf.getvalue()


def evals_to_json(rows) -> str:
    return json.dumps({"evaluations": list(rows)}, indent=1)
