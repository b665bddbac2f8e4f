"""Command-line front end.

    ecmcurve <command> --config cfg.json [--out report.json] [--csv dir] [--threads k]

Exit codes: 0 all checks pass, 1 some check failed, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config, shipped_config
from .errors import AlignmentError, ConfigError, EcmError, ParameterError, WindowError

log = logging.getLogger("ecmcurve")

REPORT_SCHEMA = "ecmcurve-report/1"
GOLDEN_SCHEMA = "ecmcurve-golden/1"


def _cpx(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _jsonable(obj):
    if isinstance(obj, complex):
        return _cpx(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.complexfloating):
        return _cpx(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


@dataclass
class Report:
    command: str
    config: dict
    checks: list[dict] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    wall_time: float = 0.0
    csv_rows: list[list] = field(default_factory=list, repr=False)
    csv_header: list[str] = field(default_factory=list, repr=False)

    def check(self, name: str, residual: float, tolerance: float, passed: bool | None = None, **extra):
        residual = float(residual)
        ok = (residual <= tolerance) if passed is None else bool(passed)
        self.checks.append({"name": name, "max_abs_residual": residual, "tolerance": tolerance, "pass": ok, **extra})
        return ok

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "schema": REPORT_SCHEMA,
                "command": self.command,
                "version": __version__,
                "config": self.config,
                "checks": self.checks,
                "passed": self.passed,
                "data": self.data,
                "wall_time": self.wall_time,
            }
        )


# ---------------------------------------------------------------------------
# commands


def cmd_involution_check(blk: dict, rep: Report):
    from .partitions import CANCELLATION_CAP, verify_cancellation

    d_max = blk["d_max"]
    if not 0 <= d_max <= CANCELLATION_CAP:
        raise ConfigError(f"involution-check.d_max: must lie in [0, {CANCELLATION_CAP}], got {d_max}")
    res = verify_cancellation(d_max)
    rep.data.update(res.to_dict())
    for name, ok in res.checks.items():
        rep.check(name, 0.0 if ok else 1.0, 0.0, ok)
    if blk["expect_triples"] is not None:
        rep.check("triple_count", abs(res.n_triples - blk["expect_triples"]), 0)
    if blk["expect_orbits"] is not None:
        rep.check("orbit_count", abs(res.n_orbits - blk["expect_orbits"]), 0)


def cmd_curve_scan(blk: dict, rep: Report):
    from .laxcurve import LaxParams, TWO_PI_I, verify_structure
    from .specialfn import EllipticParams

    rep.csv_header = ["case", "l", "monicity_defect", "shift_law", "fit_residual", "grid_change"]
    rep.data["cases"] = []
    for i, case in enumerate(blk["cases"]):
        for key in ("nu", "p", "z"):
            if case[key] is None:
                raise ConfigError(f"curve-scan.cases[{i}].{key}: required")
        try:
            lp = LaxParams(EllipticParams(case["tau"]), case["nu"], tuple(case["p"]), tuple(case["z"]))
        except ParameterError as exc:
            raise ConfigError(f"curve-scan.cases[{i}]: {exc}") from exc
        name = case["name"]
        try:
            sr = verify_structure(lp, case["l_range"], case["M"])
        except EcmError as exc:
            rep.check(f"{name}:structure", math.inf, case["tol"], False, error=str(exc))
            continue
        rep.data["cases"].append({"name": name, **sr.to_dict()})
        rep.check(f"{name}:structure", sr.max_residual(), case["tol"])
        for row in sr.rows:
            rep.csv_rows.append(
                [name, row["l"], row["monicity_defect"], row["shift_law"], row["fit_residual"], row["grid_change"]]
            )
        if lp.nu == 0:
            want = np.sort_complex(np.array(lp.p) / TWO_PI_I)
            got = np.sort_complex(np.asarray(_sr_roots(sr), dtype=complex))
            rep.check(f"{name}:diagonal_roots", float(np.max(np.abs(want - got))), case["tol"])
        # the sum of the roots of Y is sum(p) / (2 pi i) for every nu
        trace = -sr.Y_coeffs[-1] if sr.Y_coeffs else 0
        rep.check(f"{name}:trace", abs(trace - sum(lp.p) / TWO_PI_I), case["tol"])


def _sr_roots(sr):
    from .laxcurve import MonicPoly

    return MonicPoly(tuple(sr.Y_coeffs)).roots()


def _load_golden(name: str) -> dict | None:
    path = shipped_config(name)
    if not path.exists():
        return None
    return json.loads(path.read_text())


def cmd_qcurve_solve(blk: dict, rep: Report, freeze_golden: bool = False):
    from . import qcurve as qc
    from .laxcurve import MonicPoly

    pairings = blk["pairings"]
    for p in pairings:
        if p not in ("YX", "YZ", "XZ"):
            raise ConfigError(f"qcurve-solve.pairings: unknown pairing {p!r}")
    if blk["seed_psi"] not in ("unit", "gamma"):
        raise ConfigError("qcurve-solve.seed_psi: must be 'unit' or 'gamma'")
    try:
        P = qc.QCurveParams(
            MonicPoly.from_roots(blk["Y_roots"]), blk["hbar"], blk["n"], blk["qe"], blk["D"],
            blk["w0"], blk["r"], blk["M"],
        )
    except ParameterError as exc:
        raise ConfigError(f"qcurve-solve: {exc}") from exc
    if "XZ" in pairings and P.rational_n() is None:
        raise ConfigError(
            f"qcurve-solve: the XZ pairing requires rational n = p/r with r = {P.r}; got n = {P.n}"
        )
    tol = blk["tol"]
    try:
        psi = qc.solve_psi(P, blk["seed_psi"])
        psid = qc.solve_psi_dual(P, blk["seed_psi"])
        X = qc.solve_X(P)
        Z = qc.solve_Z(P)
    except (WindowError, AlignmentError, ParameterError) as exc:
        raise ConfigError(f"qcurve-solve: {exc}") from exc
    rep.data["residuals"] = {
        "psi": psi.residual, "psi_dual": psid.residual, "X_YX": X.residual, "Z_YZ": Z.residual,
    }
    rep.data["windows"] = {k: [s.series.window(d) for d in range(P.D + 1)] for k, s in
                           (("psi", psi), ("psi_dual", psid), ("X", X), ("Z", Z))}
    rep.check("qceq_psi", max(psi.residual), tol)
    rep.check("qceq_psi_dual", max(psid.residual), tol)
    if "YX" in pairings:
        rep.check("pair_YX", max(X.residual), tol)
        # X from the dual solver at n - 1, shifted by -hbar
        alt = qc.solve_psi_dual(dataclasses.replace(P, n=P.n - 1)).series
        r = qc.star_pair("YX", P.Y, qc.shift_series(alt, -P.hbar), P)
        rep.check("pair_YX_from_psi_dual", max(r.max_relative(d) for d in range(P.D + 1)), tol)
    if "YZ" in pairings:
        rep.check("pair_YZ", max(Z.residual), tol)
    if "XZ" in pairings:
        m = qc.match_normalization(X.series, Z.series, P)
        rep.data["match"] = m.to_dict()
        rep.check("pair_XZ_order0", m.order0_residual, 1e-13)
        golden_rows = []
        for row in m.orders:
            d = row["order"]
            ratio = row["equations"] / row["constants"]
            rep.check(f"match_order{d}_overdetermination", ratio, blk["ratio_min"], ratio >= blk["ratio_min"])
            red = m.reduction(d)
            rep.check(f"match_order{d}_reduction", red, blk["reduction_min"], red >= blk["reduction_min"])
            golden_rows.append({k: row[k] for k in ("order", "equations", "constants", "rank", "pre_fit", "post_fit")})
        if blk["negative_control"] and P.D >= 1:
            Zb = Z.series.copy()
            lo, hi = Zb.window(1)
            Zb.values[1, (lo + hi) // 2 + Zb.M] *= 1.1
            bad = qc.match_normalization(X.series, Zb, P)
            red = bad.reduction(1)
            rep.data["negative_control"] = bad.to_dict()
            rep.check("negative_control_rejected", red, blk["reduction_min"], red < blk["reduction_min"])
        if blk["golden"]:
            if freeze_golden:
                path = shipped_config(blk["golden"])
                path.write_text(json.dumps({"schema": GOLDEN_SCHEMA, "orders": golden_rows}, indent=2) + "\n")
                log.warning("froze golden regression values to %s", path)
            gold = _load_golden(blk["golden"])
            if gold is None:
                rep.check("golden_regression", math.inf, 0.0, False, error=f"golden {blk['golden']} missing")
            else:
                worst = 0.0
                ok = len(gold["orders"]) == len(golden_rows)
                for g, row in zip(gold["orders"], golden_rows):
                    ok &= all(g[k] == row[k] for k in ("order", "equations", "constants", "rank"))
                    worst = max(worst, abs(row["pre_fit"] - g["pre_fit"]) / max(g["pre_fit"], 1e-300))
                    # post-fit values sit at rounding level; only their order of magnitude is frozen
                    ok &= row["post_fit"] <= 100 * max(g["post_fit"], 1e-16)
                rep.check("golden_regression", worst, 1e-6, ok and worst <= 1e-6)
    rep.csv_header = ["series", "site", "w_re", "w_im", "order", "re", "im"]
    for name, sol in (("psi", psi), ("psi_dual", psid), ("X", X), ("Z", Z)):
        s = sol.series
        for m, d, v in s.to_rows():
            w = s.w0 + s.step * m
            rep.csv_rows.append([name, m, w.real, w.imag, d, v.real, v.imag])


def cmd_toda_verify(blk: dict, rep: Report):
    from . import toda
    from .laxcurve import MonicPoly

    a = tuple(blk["a"])
    N = len(a)
    hbar = blk["hbar"]
    if len(blk["window"]) != 2:
        raise ConfigError("toda-verify.window: expected two corners")
    if len(blk["L_values"]) < 1 or any(L <= 0 for L in blk["L_values"]):
        raise ConfigError("toda-verify.L_values: need positive values of Lambda^(2N)")
    P, Pp = blk["P"], blk["Pp"]
    window = tuple(blk["window"])
    ws = blk["w_points"]
    results = []
    try:
        for L in blk["L_values"]:
            tp = toda.TodaParams(hbar, L ** (1.0 / (2 * N)), a, P=P, window=window)
            Q = toda.build_Q(tp)
            results.append((L, tp, Q))
    except ParameterError as exc:
        raise ConfigError(f"toda-verify: {exc}") from exc

    # Gamma recurrence of Q0 on 100 window points
    L0, tp0, Q0 = results[0]
    lo, hi = window
    rng = np.random.default_rng(rep.config.get("global", {}).get("seed", 0))
    pts = lo.real + 0.1 + (hi.real - lo.real - 1.2 - abs(hbar)) * rng.uniform(size=100) + 1j * (
        lo.imag + (hi.imag - lo.imag) * rng.uniform(size=100))
    pts = pts[[min(abs(((p - x) / hbar) - round(((p - x) / hbar).real)) for x in a) > 1e-3 for p in pts]]
    Y = MonicPoly.from_roots(list(a))
    gam = max(abs(Q0.q0(p + hbar) / (Y(p) * Q0.q0(p)) - 1) for p in pts)
    rep.check("gamma_recurrence", gam, 1e-12)

    tq = []
    for L, tp, Q in results:
        rel = []
        for w in ws:
            r = toda.tq_residual(Q, tp, w)
            rel.append(abs(r) / abs(Y(w) * Q(w)))
        tq.append(max(rel))
        if P == 0:
            exact = max(abs(toda.tq_residual(Q, tp, w) - tp.L * Q.q0(w - hbar)) / abs(tp.L * Q.q0(w - hbar)) for w in ws)
            rep.check(f"tq_P0_exact_value[L={L:g}]", exact, 1e-12)
        rep.check(f"tq_residual[L={L:g}]", max(rel), blk["tq_tol"])
    rep.data["tq_relative"] = dict(zip(map(str, blk["L_values"]), tq))
    if len(results) >= 2:
        (L1, *_), (L2, *_) = results[0], results[1]
        slope = math.log(tq[0] / tq[1]) / math.log(L1 / L2)
        rep.data["tq_slope"] = slope
        rep.check("tq_slope", abs(slope - (P + 1)), blk["slope_tol"])

    for L, tp, Q in results:
        Qt = toda.build_Qtilde(Q, Pp, tp)
        wr = np.array([toda.wronskian_residual(Q, Qt, tp, w) for w in ws])
        rep.check(f"wronskian_flat[L={L:g}]", float(np.max(np.abs(wr - wr[0]))), blk["flat_tol"])
        bound = 10 * abs(tp.L) ** (Pp + 1)
        rep.check(f"wronskian_unit[L={L:g}]", float(np.max(np.abs(wr))), max(bound, 1e-14))
        qt_rel = []
        for w in ws:
            r = toda.tq_residual(Qt, tp, w)
            sc = abs(Qt(w + hbar)) + abs(tp.L * Qt(w - hbar)) + abs(Y(w) * Qt(w))
            qt_rel.append(abs(r) / sc)
        rep.check(f"qtilde_tq[L={L:g}]", max(qt_rel), blk["tq_tol"])

    if blk["seeds"]:
        roots = toda.find_bethe_roots(Q0, blk["seeds"])
        rep.data["roots"] = [r.to_dict() for r in roots]
        conv = [r for r in roots if r.converged]
        rep.check("bethe_converged", len(roots) - len(conv), len(roots) - 1, bool(conv))
        if conv:
            rep.check("bethe_ratio", max(abs(r.ratio_residual) for r in conv), blk["bethe_tol"])
        if blk["expect_root"] is not None:
            tol = blk["expect_root_tol"] if blk["expect_root_tol"] is not None else 10 * L0 ** 2
            dist = min((abs(r.root - blk["expect_root"]) for r in conv), default=math.inf)
            rep.check("root_location", dist, tol)
    rep.csv_header = ["L", "w_re", "w_im", "tq_re", "tq_im", "wronskian_re", "wronskian_im"]
    for L, tp, Q in results:
        Qt = toda.build_Qtilde(Q, Pp, tp)
        for w in ws:
            r = toda.tq_residual(Q, tp, w)
            wr = toda.wronskian_residual(Q, Qt, tp, w)
            rep.csv_rows.append([L, w.real, w.imag, r.real, r.imag, wr.real, wr.imag])


def cmd_observables_eval(blk: dict, rep: Report, seed: int = 0):
    from .observables import QOracle, order0_telescoping, ratio, script_series

    if blk["q_roots"] is not None:
        roots = blk["q_roots"]
    elif blk["random_degree"] is not None:
        rng = np.random.default_rng(seed)
        k = blk["random_degree"]
        roots = list(rng.normal(size=k) + 1j * rng.normal(size=k))
    else:
        raise ConfigError("observables-eval: give q_roots or random_degree")
    if blk["grid"] is None or not blk["grid"]:
        raise ConfigError("observables-eval.grid: required")
    q = QOracle.from_roots(roots)
    hbar, n, D = blk["hbar"], blk["n"], blk["D"]
    rep.data["q_roots"] = roots
    tele, hand = 0.0, 0.0
    rep.csv_header = ["w_re", "w_im", "series", "order", "re", "im"]
    for w in blk["grid"]:
        yx, yz = order0_telescoping(q, w, hbar, n)
        tele = max(tele, yx, yz)
        for kind in ("X", "Y", "Z"):
            s = script_series(kind, q, w, D, hbar, n)
            for d, c in enumerate(s.coeffs):
                rep.csv_rows.append([w.real, w.imag, kind, d, c.real, c.imag])
            if kind == "Y" and D >= 1:
                want = ratio("Y", q, w + hbar * n, hbar, n) * ratio("Y", q, w + hbar * (1 - n), hbar, n) / ratio("Y", q, w, hbar, n)
                hand = max(hand, abs(s[1] - want) / abs(want))
    rep.check("order0_telescoping", tele, blk["telescoping_tol"])
    if D >= 1:
        rep.check("order1_Y_hand_formula", hand, blk["hand_tol"])


COMMANDS = {
    "involution-check": cmd_involution_check,
    "curve-scan": cmd_curve_scan,
    "qcurve-solve": cmd_qcurve_solve,
    "toda-verify": cmd_toda_verify,
    "observables-eval": cmd_observables_eval,
}


def run(command: str, config_path, freeze_golden: bool = False) -> Report:
    """Run one command; ConfigError propagates (exit 2), check failures are in the report."""
    doc, glob, blk = load_config(config_path, command)
    rep = Report(command, doc)
    t0 = time.perf_counter()
    try:
        if command == "qcurve-solve":
            cmd_qcurve_solve(blk, rep, freeze_golden)
        elif command == "observables-eval":
            cmd_observables_eval(blk, rep, glob["seed"])
        else:
            COMMANDS[command](blk, rep)
    except ConfigError:
        raise
    except EcmError as exc:
        # numerical failures end up as a failing check, the report is still written
        rep.check("execution", math.inf, 0.0, False, error=f"{type(exc).__name__}: {exc}")
    rep.data["threads"] = glob["threads"]
    rep.wall_time = time.perf_counter() - t0
    return rep


def _write_csv(rep: Report, directory: str):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"{rep.command}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["#schema=ecmcurve-csv/1"])
        w.writerow(rep.csv_header)
        w.writerows(rep.csv_rows)
    return path


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecmcurve", description="Quantum spectral curve verification lab.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", help="write the JSON report here (default: stdout)")
        sp.add_argument("--csv", help="directory for CSV tables")
        sp.add_argument("--threads", type=int, default=None, help="accepted; execution is single-threaded")
        if name == "qcurve-solve":
            sp.add_argument("--freeze-golden", action="store_true", help="overwrite the shipped golden file")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        rep = run(args.command, args.config, getattr(args, "freeze_golden", False))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    # ECMCURVE_THREADS takes precedence over the flag
    if args.threads is not None and "ECMCURVE_THREADS" not in os.environ:
        rep.data["threads"] = args.threads
    text = json.dumps(rep.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.csv:
        _write_csv(rep, args.csv)
    for c in rep.checks:
        if not c["pass"]:
            log.warning("check failed: %s (%.3g vs %.3g)", c["name"], c["max_abs_residual"], c["tolerance"])
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
