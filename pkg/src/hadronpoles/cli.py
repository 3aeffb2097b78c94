"""Command line front end.

    hadronpoles analyze CONFIG.json [--out DIR] [--jobs N]
    hadronpoles scan CONFIG.json --quantity Q --grid LO:HI:N [--grid-im LO:HI:N] [--sheet S] [--out FILE]

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure (all
analysis jobs failed, or a scan could not be evaluated).
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import compositeness as comp
from . import config as cfgmod
from . import lseq
from . import poles
from . import saturation as sat
from .amplitudes import AmplitudeModel, CDDModel, EREModel, phase_shift
from .core import NONRELATIVISTIC, RELATIVISTIC, SHEET_I, SheetedPoint, normalize_sheet
from .errors import ConfigurationError, HadronPolesError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NUMERIC_ERRORS = (HadronPolesError, ArithmeticError, np.linalg.LinAlgError, RuntimeError)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, complex):
        return [clean(obj.real), clean(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------- jobs


def _pole_job(cfg, model: AmplitudeModel, spec: dict) -> dict:
    tol = cfg["tolerances"]
    sheet = normalize_sheet(spec["sheet"], model.n_channels)
    start = cfgmod.pole_start(cfg, spec, model)
    starts = [start]
    if spec.get("multistart"):
        rng = np.random.default_rng(cfg["seed"])
        spread = 0.05 * max(abs(start), model.scale)
        for _ in range(int(spec["multistart"])):
            starts.append(start + spread * complex(*rng.normal(size=2)))
    found, errors = [], []
    for z0 in starts:
        try:
            cand = poles.find_pole(model, sheet, z0, xtol=tol["pole"], ftol=tol["pole_function"])
        except NUMERIC_ERRORS as exc:
            errors.append(str(exc))
            continue
        if not any(abs(cand.value - f.value) <= 1e-6 * max(abs(f.value), model.scale) for f in found):
            found.append(cand)
    if not found:
        raise poles.SearchFailedError("; ".join(errors) or "no pole found")
    found.sort(key=lambda c: abs(c.value - start))
    cand = found[0]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        coup = poles.extract_couplings(model, cand, tol["residue_method"], rank1_tol=tol["rank1"])
    report = comp.phase_normalize(comp.compositeness_sum_rule(model, cand, coup))
    out = {
        "label": spec["label"],
        "sheet": list(sheet),
        "z": _c(cand.value),
        "sqrt_s": _c(model.sqrt_s(cand.value)),
        "newton_steps": cand.newton_steps,
        "search_method": cand.method,
        "pole_function_residual": cand.det_residual,
        "other_poles_from_multistart": [_c(f.value) for f in found[1:]],
        "report": report.to_dict(),
        "X_normalized_i": [float(x.real) for x in report.X_normalized_i],
        "sum_rule_tolerance": tol["sum_rule"],
        "sum_rule_ok": None if report.sum_residual is None else bool(report.sum_residual <= tol["sum_rule"]),
        "warnings": [str(w.message) for w in caught],
    }
    if report.Z is None:
        out["notes"] = ["kernel derivative unavailable: Z not computed"]
    if report.applicable:
        widths = poles.partial_widths(model, cand, coup)
        out["partial_widths"] = widths.tolist()
    if isinstance(model, EREModel):
        k = complex(np.sqrt(2 * model.mu * complex(cand.value)))
        k = k if k.imag <= 0 else -k
        if k.real > 0 and k.imag < 0:
            e = comp.ere_compositeness(k)
            out["ere"] = {"k_R": _c(k), "X": _c(e.X), "X_abs": e.X_abs, "X_abs_alt": e.X_abs_alt, "note": e.note}
    return out


def _ere_job(cfg, model, spec) -> dict:
    k = complex(spec[0], -spec[1])
    units = cfgmod._units(cfg.get("ere", {}), cfg["units"])
    k *= cfgmod.momentum_in_mev(1.0, units)
    p = comp.ere_from_pole(k)
    e = comp.ere_compositeness(k)
    return {"k_r": k.real, "k_i": -k.imag, "a_inv_MeV": p.a, "r_inv_MeV": p.r, "r_over_a": p.r_over_a,
            "X": _c(e.X), "X_abs": e.X_abs, "X_abs_alt": e.X_abs_alt, "note": e.note}


def _cdd_job(cfg, model: CDDModel, _spec) -> dict:
    d = comp.cdd_shifts(model)
    fit = None
    if model.M_Z != 0:
        p = comp.ere_parameters_numeric(model, h=1e-3 * abs(model.M_Z))
        fit = {"a_inv_MeV": p.a, "r_inv_MeV": p.r,
               "large_negative_r_flag": comp.large_negative_r_flag(p.r, math.sqrt(2 * model.mu * abs(model.M_Z)))}
    return {"delta_a": d.delta_a, "delta_r": d.delta_r, "cdd_proximity_flag": d.cdd_proximity_flag,
            "limit": d.limit, "t_at_M_Z": _c(model.T_matrix(model.point(model.M_Z))[0, 0]), "ere_fit": fit}


def _lseq_job(cfg, pot, spec) -> dict:
    block = cfg.get("lseq", {})
    out = {"waves": list(pot.waves)}
    tol = cfg["tolerances"]["lseq"]
    if spec == "bound":
        win = block.get("window")
        state = lseq.bound_state(pot, tuple(win) if win else None)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            X = lseq.X_bound(pot, state)
        out.update(kind="bound", E=state.E.real, kappa=math.sqrt(-2 * pot.mu * state.E.real),
                   X_wave=[x.real for x in X.X_wave], X=X.X.real,
                   sum_residual=abs(X.X - 1), ok=bool(abs(X.X - 1) <= tol),
                   coupling_residual=lseq.coupling_residual(pot, state),
                   warnings=[str(w.message) for w in caught])
    else:
        start = cfgmod._complex(spec["start"], "lseq pole start")
        state = lseq.find_separable_pole(pot, start, spec.get("sheet", "II"))
        X = lseq.X_resonance(pot, state)
        out.update(kind="pole", sheet=state.sheet, E=_c(state.E),
                   k=_c(-lseq.first_sheet_momentum(pot.mu, state.E) if state.sheet != SHEET_I
                        else lseq.first_sheet_momentum(pot.mu, state.E)),
                   X_wave=[_c(x) for x in X.X_wave], boundary_wave=[_c(b) for b in X.boundary],
                   X=_c(X.X), sum_residual=abs(X.X - 1), ok=bool(abs(X.X - 1) <= tol))
    band = block.get("reference_band")
    if band:
        out["reference_band"] = list(band)
    return out


def _saturation_job(cfg, _model, _spec) -> dict:
    s = dict(cfg["saturation"])
    kw = {k: s[k] for k in ("M_R", "Gamma", "k_R_abs", "mu", "M_th")}
    for k in ("X", "branching_ratio", "epsilon", "mu1", "k_threshold", "cutoff"):
        if k in s:
            kw[k] = s[k]
    if "channel1_masses" in s:
        m1, m2 = s["channel1_masses"]
        kw["k_func"] = sat.relativistic_momentum(m1, m2)
        kw.setdefault("k_threshold", m1 + m2)
    return sat.solve_saturation(sat.SaturationSystem(**kw)).to_dict()


def _phase_job(cfg, model, _spec, out_dir: Path) -> dict:
    ps = cfg["phase_shifts"]
    w = np.linspace(float(ps["min"]), float(ps["max"]), int(ps["n"]))
    buf = io.StringIO()
    if isinstance(model, lseq.Potential):
        rows = _lseq_phase_rows(model, w)
        _write_rows(buf, ["E_MeV", "delta_deg_1", "inelasticity_1"], rows)
        unwrapped = [True]
    else:
        z = _to_model_variable(model, w)
        table = phase_shift(model, z)
        table.to_csv(buf)
        unwrapped = table.unwrapped
    atomic_write(out_dir / "phase_shifts.csv", buf.getvalue())
    return {"file": "phase_shifts.csv", "points": int(w.size), "unwrapped": unwrapped}


def _lseq_phase_rows(pot, E):
    rows, prev = [], None
    for e in E:
        S = lseq.s_matrix(pot, float(e))[0, 0]
        d = 0.5 * math.degrees(np.angle(S))
        if prev is not None:
            d = prev + ((d - prev + 90.0) % 180.0 - 90.0)
        prev = d
        rows.append([e, d, abs(S)])
    return rows


def _to_model_variable(model: AmplitudeModel, w):
    w = np.asarray(w, dtype=float)
    return w * w if model.mode == RELATIVISTIC else w - model.m_th


def build_jobs(cfg, model, out_dir: Path) -> list[tuple[str, callable]]:
    jobs = []
    analyses = cfg["analyses"]
    is_amp = isinstance(model, AmplitudeModel)
    if "sum_rule" in analyses:
        if not is_amp:
            raise ConfigurationError("sum_rule analysis needs an amplitude model (kmatrix, ere or cdd)")
        for p in cfg["poles"]:
            jobs.append((f"pole:{p['label']}", lambda p=p: _pole_job(cfg, model, p)))
    if "ere" in analyses:
        for i, k in enumerate(cfg["ere"]["poles_k"]):
            jobs.append((f"ere:{i + 1}", lambda k=k: _ere_job(cfg, model, k)))
    if "cdd" in analyses:
        jobs.append(("cdd", lambda: _cdd_job(cfg, model, None)))
    if "lseq" in analyses:
        block = cfg.get("lseq", {})
        if block.get("bound_state", True):
            jobs.append(("lseq:bound", lambda: _lseq_job(cfg, model, "bound")))
        for i, p in enumerate(block.get("poles", [])):
            jobs.append((f"lseq:pole{i + 1}", lambda p=p: _lseq_job(cfg, model, p)))
    if "saturation" in analyses:
        jobs.append(("saturation", lambda: _saturation_job(cfg, model, None)))
    if "phase_shifts" in analyses:
        jobs.append(("phase_shifts", lambda: _phase_job(cfg, model, None, out_dir)))
    return jobs


def _run_one(job):
    name, fn = job
    try:
        return {"name": name, "status": "ok", "result": fn()}
    except NUMERIC_ERRORS as exc:
        return {"name": name, "status": "failed", "error": f"{type(exc).__name__}: {exc}"}


def analyze(config_path, out: str | None = None, jobs: int = 1) -> int:
    try:
        cfg = cfgmod.load(config_path)
        if out is not None:
            cfg["output_dir"] = out
        model = cfgmod.build_model(cfg)
        out_dir = Path(cfg["output_dir"])
        job_list = build_jobs(cfg, model, out_dir)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, job_list))
    else:
        results = [_run_one(j) for j in job_list]
    report = clean({"schema_version": cfgmod.SCHEMA_VERSION, "config": cfg, "jobs": results})
    atomic_write(out_dir / "report.json", cfgmod.dumps(report))
    atomic_write(out_dir / "report.txt", render_text(report))
    failed = [r for r in results if r["status"] != "ok"]
    for r in failed:
        print(f"job {r['name']} failed: {r['error']}", file=sys.stderr)
    if results and len(failed) == len(results):
        return EXIT_NUMERIC
    return EXIT_OK


# ------------------------------------------------------------- text report


def _fc(v, digits=8) -> str:
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        re, im = v
        return f"{re:.{digits}g}{'+' if im >= 0 else '-'}{abs(im):.{digits}g}i"
    if isinstance(v, float):
        return f"{v:.{digits}g}"
    return str(v)


def render_text(report: dict) -> str:
    cfg = report["config"]
    lines = ["hadronpoles analysis report", "=" * 27,
             f"model family : {cfg['model']['family']}",
             f"kinematics   : {cfg['kinematics']}",
             f"channels     : {', '.join(c['name'] for c in cfg['channels']) or '-'}", ""]
    for job in report["jobs"]:
        lines.append(f"[{job['name']}] {job['status']}")
        if job["status"] != "ok":
            lines.append(f"  error: {job['error']}")
            lines.append("")
            continue
        r = job["result"]
        if job["name"].startswith("pole:"):
            rep = r["report"]
            lines += [f"  sheet {'/'.join(r['sheet'])}   z = {_fc(r['z'], 12)}   sqrt(s) = {_fc(r['sqrt_s'], 12)}",
                      f"  couplings ({rep['residue_method']}, rank-1 residual {rep['rank1_residual']:.2e}):"]
            for i, g in enumerate(rep["couplings"]):
                lines.append(f"    g_{i + 1} = {_fc(g)}   X_{i + 1} = {_fc(rep['X_i'][i])}   "
                             f"|X_{i + 1}| = {rep['X_abs_i'][i]:.8g}")
            lines.append(f"  X = {_fc(rep['X'])}   Z = {_fc(rep['Z']) if rep['Z'] is not None else 'unavailable'}")
            if rep["sum_residual"] is not None:
                lines.append(f"  |X + Z - 1| = {rep['sum_residual']:.3e} (requested <= {r['sum_rule_tolerance']:.1e})")
            lines.append(f"  applicability: {'ok' if rep['applicable'] else 'UNRELIABLE: ' + rep['applicability_note']}")
            if "partial_widths" in r:
                lines.append("  partial widths [MeV]: " + ", ".join(f"{x:.6g}" for x in r["partial_widths"]))
            if "ere" in r:
                e = r["ere"]
                lines.append(f"  ERE: X = {_fc(e['X'])}, |X| = {e['X_abs']:.8g}, (2r/a-1)^-1 = {e['X_abs_alt']:.8g}")
                lines.append(f"  note: {e['note']}")
            for w in r.get("warnings", []):
                lines.append(f"  warning: {w}")
            for n in r.get("notes", []):
                lines.append(f"  note: {n}")
        elif job["name"].startswith("ere:"):
            lines += [f"  k_R = {r['k_r']:.8g} - {r['k_i']:.8g}i MeV",
                      f"  a = {r['a_inv_MeV']:.8g} MeV^-1, r = {r['r_inv_MeV']:.8g} MeV^-1, r/a = {r['r_over_a']:.8g}",
                      f"  X = {_fc(r['X'])}, |X| = {r['X_abs']:.8g}, (2r/a-1)^-1 = {r['X_abs_alt']:.8g}",
                      f"  note: {r['note']}"]
        elif job["name"] == "cdd":
            lines += [f"  delta_a = {_fc(r['delta_a'])} MeV^-1, delta_r = {_fc(r['delta_r'])} MeV^-1",
                      f"  CDD proximity flag: {r['cdd_proximity_flag']}"]
            if r["limit"]:
                lines.append(f"  limit: {r['limit']} (delta_a -> 0, delta_r -> -inf)")
            lines.append(f"  t(M_Z) = {_fc(r['t_at_M_Z'])}")
        elif job["name"].startswith("lseq:"):
            if r["kind"] == "bound":
                lines.append(f"  E_B = {r['E']:.10g} MeV, kappa = {r['kappa']:.8g} MeV")
                for w, x in zip(r["waves"], r["X_wave"]):
                    lines.append(f"  X[{w}] = {x:.8f}")
                lines.append(f"  X = {r['X']:.6f}   |X - 1| = {r['sum_residual']:.2e}")
            else:
                lines.append(f"  sheet {r['sheet']}  E = {_fc(r['E'], 10)} MeV  k = {_fc(r['k'], 10)} MeV")
                for w, x, b in zip(r["waves"], r["X_wave"], r["boundary_wave"]):
                    lines.append(f"  X[{w}] = {_fc(x)}  (boundary term {_fc(b)})")
                lines.append(f"  X = {_fc(r['X'])}   |X - 1| = {r['sum_residual']:.2e}")
            if "reference_band" in r:
                lo, hi = r["reference_band"]
                lines.append(f"  reference band from config: X = {lo:g}-{hi:g}")
        elif job["name"] == "saturation":
            lines += [f"  X1 = {_fc(r['X1'])}, X2 = {_fc(r['X2'])}  feasible: {r['feasible']}",
                      f"  Gamma1 = {_fc(r['Gamma1'])} MeV, Gamma2 = {_fc(r['Gamma2'])} MeV"]
            if r["frontier"]:
                lines.append(f"  attainable Gamma at this X: [{_fc(r['frontier'][0])}, {_fc(r['frontier'][1])}] MeV")
            for n in r["notes"]:
                lines.append(f"  note: {n}")
        elif job["name"] == "phase_shifts":
            lines.append(f"  wrote {r['file']} ({r['points']} points)")
        lines.append("")
    return "\n".join(lines)


# ------------------------------------------------------------------ scan


def _parse_grid(text: str):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigurationError(f"grid must be LO:HI:N, got {text!r}") from None
    if n < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigurationError("grid needs N >= 1 and finite bounds")
    return np.linspace(lo, hi, n)


def _write_rows(fh, header, rows, note=None):
    if note:
        fh.write(f"# {note}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["nan" if isinstance(v, float) and math.isnan(v) else
                    (f"{v:.12g}" if isinstance(v, float) else v) for v in row])


def _safe(fn, n_out):
    try:
        v = fn()
        return list(v)
    except NUMERIC_ERRORS + (ZeroDivisionError, ValueError):
        return [math.nan] * n_out


def scan(config_path, quantity: str, grid: str, grid_im: str | None = None,
         sheet: str | None = None, out: str | None = None) -> int:
    try:
        cfg = cfgmod.load(config_path)
        model = cfgmod.build_model(cfg)
        w = _parse_grid(grid)
        text = _scan_text(cfg, model, quantity, w, grid_im, sheet)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if out:
        atomic_write(Path(out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _scan_text(cfg, model, quantity, w, grid_im, sheet) -> str:
    buf = io.StringIO()
    note = "nan marks points at a branch point or where the amplitude is singular"
    if isinstance(model, lseq.Potential):
        if quantity != "phase_shift":
            raise ConfigurationError("lseq models support the phase_shift scan only")
        _write_rows(buf, ["E_MeV", "delta_deg_1", "inelasticity_1"], _lseq_phase_rows(model, w))
        return buf.getvalue()
    n = model.n_channels
    var = "sqrt_s_MeV" if model.mode == RELATIVISTIC else "E_MeV"
    if quantity == "phase_shift":
        phase_shift(model, _to_model_variable(model, w)).to_csv(buf)
    elif quantity == "abs_T":
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        rows = []
        for x in w:
            z = float(_to_model_variable(model, x))
            vals = _safe(lambda: [abs(model.T_matrix(model.point(z))[i, j]) for i, j in pairs], len(pairs))
            rows.append([x] + vals)
        _write_rows(buf, [var] + [f"abs_T_{i + 1}{j + 1}" for i, j in pairs], rows, note)
    elif quantity == "im_G":
        rows = []
        for x in w:
            z = float(_to_model_variable(model, x))

            def vals():
                p = model.point(z)
                G = model.loop(p)
                rho = model.phase_space(p)
                return list(G.imag) + list(np.where(z > model.thresholds, rho.real, 0.0))
            rows.append([x] + _safe(vals, 2 * n))
        _write_rows(buf, [var] + [f"im_G_{i + 1}" for i in range(n)] + [f"rho_{i + 1}" for i in range(n)],
                    rows, note)
    elif quantity == "det_landscape":
        if grid_im is None:
            raise ConfigurationError("det_landscape needs --grid-im")
        wi = _parse_grid(grid_im)
        sh = normalize_sheet(sheet.split(",") if sheet else (SHEET_I,) * n, n)
        rows = []
        for x in w:
            for y in wi:
                c = complex(x, y)
                z = c * c if model.mode == RELATIVISTIC else c - model.m_th
                rows.append([x, y] + _safe(lambda: [abs(model.pole_function(SheetedPoint(z, sh)))], 1))
        head = [f"re_{var}", f"im_{var}", "abs_pole_function"]
        _write_rows(buf, head, rows, note + "; pole_function = det(1 + K G) on sheet " + "/".join(sh))
    else:
        raise ConfigurationError(f"unknown scan quantity {quantity!r}")
    return buf.getvalue()


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hadronpoles", description="Pole and compositeness analysis of hadronic amplitudes")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="run the analyses listed in a config")
    a.add_argument("config")
    a.add_argument("--out", help="output directory (overrides config output_dir)")
    a.add_argument("--jobs", type=int, default=1, help="concurrent analysis jobs")
    s = sub.add_parser("scan", help="emit a CSV of one quantity on a grid")
    s.add_argument("config")
    s.add_argument("--quantity", required=True, choices=["phase_shift", "abs_T", "im_G", "det_landscape"])
    s.add_argument("--grid", required=True, help="LO:HI:N in sqrt(s) (or E for nonrelativistic models)")
    s.add_argument("--grid-im", help="LO:HI:N imaginary part for det_landscape")
    s.add_argument("--sheet", help="comma-separated sheet flags for det_landscape, e.g. II,I")
    s.add_argument("--out", help="output CSV file (default stdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "analyze":
        if args.jobs < 1:
            print("configuration error: --jobs must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        return analyze(args.config, args.out, args.jobs)
    return scan(args.config, args.quantity, args.grid, args.grid_im, args.sheet, args.out)


if __name__ == "__main__":
    sys.exit(main())
