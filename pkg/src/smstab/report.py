"""Analysis orchestration and report serialisation (json, csv summary, text)."""

import csv
import io
import json
import math

from . import __version__
from .single import analyze_single_equilibrium, classify_cubic_roots
from .two import analyze_two_equilibrium, solve_two_equilibria

CSV_FIELDS = ("omega_e", "delta_e", "verdict", "max_re_eig", "a0", "lyapunov_holds")


def _f(x):
    return float(x)


def _eig_list(spec):
    return [[_f(z.real), _f(z.imag)] for z in spec]


def _single_section(cfg, with_stability):
    p = cfg.params
    cs, eqs, rejected = classify_cubic_roots(p, cfg.variant, cfg.tol)
    out = {
        "cubic": {
            "coefficients": [_f(c) for c in cs.coeffs],
            "discriminant": _f(cs.discriminant),
            "class": cs.cls.value,
        },
        "rejected": [{"value": _f(r.value), "reason": r.reason} for r in rejected],
        "equilibria": [],
    }
    for e in eqs:
        item = {"omega_e": _f(e.omega_e), "i_d": _f(e.i_d_e), "i_q": _f(e.i_q_e),
                "residual": _f(e.residual_norm)}
        if with_stability:
            r = analyze_single_equilibrium(e, p)
            item["stability"] = {
                "classification": r.classification.value,
                "routh": {"a2": _f(r.routh.a2), "a1": _f(r.routh.a1), "a0": _f(r.routh.a0),
                          "conditions": [bool(c) for c in r.routh.conditions],
                          "stable": bool(r.routh.stable)},
                "lyapunov": {"rhs_currents": _f(r.lyapunov.rhs_currents),
                             "rhs_omega": _f(r.lyapunov.rhs_omega),
                             "minors": [_f(m) for m in r.lyapunov.minors],
                             "holds": bool(r.lyapunov.holds)},
                "eigenvalues": _eig_list(r.eigenvalues),
                "max_re_eig": _f(r.eigenvalues.max_real),
            }
        out["equilibria"].append(item)
    return out


def _two_eq(e):
    names = ("i_d1", "i_q1", "i_d2", "i_q2", "i_d3", "i_q3")
    return {"omega_e": _f(e.omega_e), "delta_e": _f(e.delta_e),
            "currents": {k: _f(v) for k, v in zip(names, e.currents)},
            "conditions": {"i": bool(e.cond_i), "ii": bool(e.cond_ii), "iii": bool(e.cond_iii)},
            "residual": _f(e.residual_norm)}


def _two_section(cfg, with_stability):
    p = cfg.params
    s = solve_two_equilibria(p, cfg.variant, cfg.tol, newton_grid=cfg.newton_grid,
                             seed=cfg.seed, n_random=cfg.newton_random_starts)
    out = {
        "polynomial": {"variant": s.variant, "degree": int(s.poly.degree),
                       "coefficients": [_f(c) for c in s.poly.coeffs]},
        "candidates": [_two_eq(e) for e in s.candidates],
        "rejected": [{"value": _f(getattr(r.value, "real", r.value)), "reason": r.reason}
                     for r in s.rejected],
        "newton": [{"omega_e": _f(w), "delta_e": _f(d)} for w, d in s.newton],
        "agreement": bool(s.agreement),
        "flags": list(s.flags),
        "equilibria": [],
    }
    for e in s.equilibria:
        item = _two_eq(e)
        if with_stability:
            r = analyze_two_equilibrium(e, p)
            item["stability"] = {"verdict": r.verdict.value, "eigenvalues": _eig_list(r.eigenvalues),
                                 "max_re_eig": _f(r.max_real)}
        out["equilibria"].append(item)
    return out


def run_analysis(cfg, with_stability=True):
    """Deterministic report for ``cfg``: no timestamps, equilibria ascending in omega."""
    body = (_single_section if cfg.system == "single" else _two_section)(cfg, with_stability)
    body["equilibria"].sort(key=lambda e: (e["omega_e"], e.get("delta_e", 0.0)))
    report = {"tool": "smstab", "version": __version__, "seed": cfg.seed, "system": cfg.system,
              "variant": cfg.variant, "config": cfg.to_dict()}
    report.update(body)
    return report


def summary_rows(report):
    rows = []
    for e in report["equilibria"]:
        st = e.get("stability", {})
        verdict = st.get("classification", st.get("verdict", ""))
        routh = st.get("routh", {})
        lyap = st.get("lyapunov", {})
        rows.append({
            "omega_e": e["omega_e"],
            "delta_e": e.get("delta_e", ""),
            "verdict": verdict,
            "max_re_eig": st.get("max_re_eig", ""),
            "a0": routh.get("a0", ""),
            "lyapunov_holds": lyap.get("holds", ""),
        })
    return rows


def _cell(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def to_json(report):
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n"


def to_csv(report):
    fh = io.StringIO()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in summary_rows(report):
        w.writerow([_cell(r[k]) for k in CSV_FIELDS])
    return fh.getvalue()


def _fmt(v):
    if v == "":
        return "-"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.10g}"
    return str(v)


def to_text(report):
    lines = [f"smstab {report['version']}  system={report['system']}  variant={report['variant']}"]
    p = report["config"]["params"]
    lines.append("params: " + ", ".join(f"{k}={_fmt(v)}" for k, v in p.items()))
    rows = summary_rows(report)
    lines.append(f"{len(rows)} equilibri{'um' if len(rows) == 1 else 'a'}")
    if rows:
        header = ("omega_e", "delta_e", "verdict", "max_re_eig", "a0", "lyapunov")
        table = [header] + [tuple(_fmt(r[k]) for k in CSV_FIELDS) for r in rows]
        widths = [max(len(row[i]) for row in table) for i in range(len(header))]
        for row in table:
            lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    for r in report.get("rejected", []):
        lines.append(f"rejected root {_fmt(r['value'])}: {r['reason']}")
    for f in report.get("flags", []):
        lines.append(f"flag: {f}")
    return "\n".join(lines) + "\n"


FORMATTERS = {"json": to_json, "csv": to_csv, "text": to_text}


def emit(report, fmt="json", out=None):
    """Render ``report`` and write it to ``out`` (a path) or return the text."""
    text = FORMATTERS[fmt](report)
    if out is None:
        return text
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    return text
