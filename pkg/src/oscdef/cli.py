"""Command-line harness: expressions, plans and suites wired into
reproducible runs with machine-readable outputs.

Subcommands: ``integrate``, ``moyal``, ``twisted-conv``, ``local-nc``,
``action probe``, ``action bounds``, ``verify
{integral-identities|deformation|actions|symbols|all}`` and ``bench
quadrature``.  Exit codes: 0 success/pass, 1 verification failure, 2
usage error, 3 numeric non-convergence.  A timestamp header line is the
only nondeterministic output for a fixed configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from . import actions, deform, exprdsl, oscint, symbols
from ._quadrature import set_default_threads
from .oscint import NonConvergenceError, Pairing, QuadraturePlan
from .symbols import SymbolUsageError

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    mode: str = ""
    f: str | None = None
    g: str | None = None
    psi: str | None = None
    func: str | None = None
    n: int = 1
    theta: str | None = None
    points: str | None = None
    s: str = "auto"
    radius: float = 40.0
    panels: str = "auto"
    gauss_order: int = 10
    pairing: str = "identity"
    tol: float | None = None
    oracle: str | None = None
    out: str | None = None
    format: str = "csv"
    threads: int | None = None
    seed: int = 0


_CONFIG_KEYS = {
    "f": str, "g": str, "psi": str, "func": str, "n": int, "theta": str,
    "points": str, "s": str, "radius": float, "panels": str,
    "gaussorder": int, "pairing": str, "tol": float, "oracle": str,
    "out": str, "format": str, "threads": int, "seed": int,
}

_KEY_TO_FIELD = {"gaussorder": "gauss_order"}


def load_config(path: str) -> dict:
    """Parse a ``key=value`` config file (UTF-8, ``#`` comments)."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip()
            if key not in _CONFIG_KEYS:
                known = ", ".join(sorted(_CONFIG_KEYS))
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}; known keys: {known}")
            caster = _CONFIG_KEYS[key]
            values[_KEY_TO_FIELD.get(key, key)] = caster(value.strip())
    return values


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--f", help="left factor expression")
    p.add_argument("--g", help="right factor expression")
    p.add_argument("--psi", help="module vector expression")
    p.add_argument("--func", help="(p, x) integrand expression")
    p.add_argument("--n", type=int, help="dimension n (default 1)")
    p.add_argument("--theta", help="deformation matrix, rows ';'-separated, entries ','")
    p.add_argument("--points", help="comma-separated evaluation coordinates")
    p.add_argument("--s", help="regularization order (integer or 'auto', default auto)")
    p.add_argument("--radius", type=float, help="truncation radius (default 40)")
    p.add_argument("--panels", help="panels per axis (integer or 'auto', default auto)")
    p.add_argument("--gauss-order", type=int, dest="gauss_order",
                   help="Gauss rule order per panel in [2,16] (default 10)")
    p.add_argument("--pairing", help="'identity' or 'matrix:m11,m12;m21,m22' (default identity)")
    p.add_argument("--tol", type=float, help="target tolerance for refinement checks")
    p.add_argument("--oracle", choices=["direct", "series", "cutoff"],
                   help="comparison oracle to evaluate alongside")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["csv", "jsonl"], help="output format (default csv)")
    p.add_argument("--threads", type=int, help="worker thread cap")
    p.add_argument("--config", help="key=value config file; flags override")
    p.add_argument("--seed", type=int, help="seed for sampled points (default 0)")


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="oscdef",
        description="Oscillatory-integral calculus and deformed products",
    )
    sub = top.add_subparsers(dest="command")
    for name, descr in (
        ("integrate", "one oscillatory integral of a (p, x) expression"),
        ("moyal", "deformed pointwise product under translations"),
        ("twisted-conv", "convolution against a multiplicative phase"),
        ("local-nc", "deformed product under the compactly supported action"),
        ("bench", "timing sweeps (mode: quadrature)"),
        ("action", "compact action utilities (mode: probe | bounds)"),
        ("verify", "identity suites (mode: integral-identities | deformation | actions | symbols | all)"),
    ):
        p = sub.add_parser(name, help=descr, description=descr)
        if name in ("action", "verify", "bench"):
            p.add_argument("mode", help="sub-mode")
        _add_common_flags(p)
    return top


def _merge_config(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values = load_config(ns.config) if getattr(ns, "config", None) else {}
    for key, value in file_values.items():
        setattr(cfg, key, value)
    for f in fields(RunConfig):
        flag_val = getattr(ns, f.name, None)
        if flag_val is not None:
            setattr(cfg, f.name, flag_val)
    cfg.command = ns.command or ""
    cfg.mode = getattr(ns, "mode", "") or ""
    return cfg


def _parse_theta(cfg: RunConfig) -> np.ndarray:
    if cfg.theta is None:
        return np.zeros((cfg.n, cfg.n))
    rows = [r for r in cfg.theta.split(";") if r.strip()]
    mat = np.array([[float(v) for v in row.split(",")] for row in rows])
    if mat.shape != (cfg.n, cfg.n):
        raise UsageError(f"theta shape {mat.shape} does not match n={cfg.n}")
    return mat


def _parse_pairing(cfg: RunConfig) -> Pairing:
    if cfg.pairing in (None, "identity"):
        return Pairing(cfg.n)
    if not cfg.pairing.startswith("matrix:"):
        raise UsageError("pairing must be 'identity' or 'matrix:...'")
    rows = cfg.pairing[len("matrix:"):].split(";")
    M = np.array([[float(v) for v in row.split(",")] for row in rows])
    return Pairing(cfg.n, M)


def _parse_points(cfg: RunConfig, arity: int) -> list[np.ndarray]:
    if cfg.points is None:
        raise UsageError("--points is required for this command")
    vals = [float(v) for v in cfg.points.split(",") if v.strip()]
    if arity == 1:
        return [np.array([v]) for v in vals]
    if len(vals) % arity:
        raise UsageError(f"points must come in groups of {arity}")
    return [np.array(vals[i : i + arity]) for i in range(0, len(vals), arity)]


def _plan(cfg: RunConfig) -> QuadraturePlan:
    s = cfg.s if cfg.s == "auto" else int(cfg.s)
    panels = cfg.panels if cfg.panels == "auto" else int(cfg.panels)
    return QuadraturePlan(s=s, radius=cfg.radius, panels=panels, gauss_order=cfg.gauss_order)


def _symbol_from(text: str, m: float = 0.0, decay: float | None = 8.0, n_x: int | None = None):
    e = exprdsl.parse(text)
    lay = exprdsl.VarLayout.infer(e)
    if n_x is not None:
        lay = exprdsl.VarLayout(lay.n_p, max(lay.n_x, n_x))
    return symbols.expr_symbol(e, layout=lay, m=m, rho=0.0, decay_radius=decay)


class _Writer:
    """Rows to CSV or JSON-lines with a timestamp header."""

    def __init__(self, cfg: RunConfig, columns: list[str]):
        self.fmt = cfg.format
        self.columns = columns
        self.lines: list[str] = []
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
        if self.fmt == "csv":
            self.lines.append(f"# generated {stamp}")
            self.lines.append(",".join(columns))
        else:
            self.lines.append(json.dumps({"timestamp": stamp}))
        self.path = cfg.out

    def row(self, values) -> None:
        if self.fmt == "csv":
            cells = []
            for v in values:
                cells.append(repr(v) if isinstance(v, float) else str(v))
            self.lines.append(",".join(cells))
        else:
            self.lines.append(json.dumps(dict(zip(self.columns, values))))

    def flush(self) -> None:
        text = "\n".join(self.lines) + "\n"
        if self.path:
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _cmd_integrate(cfg: RunConfig) -> int:
    if not cfg.func:
        raise UsageError("--func is required")
    F = _symbol_from(cfg.func, m=0.0, decay=None)
    if F.k != 2 * cfg.n:
        lay = exprdsl.VarLayout(cfg.n, cfg.n)
        F = symbols.expr_symbol(exprdsl.parse(cfg.func), layout=lay, m=0.0, rho=0.0)
    pairing = _parse_pairing(cfg)
    if cfg.oracle == "cutoff":
        res = oscint.cutoff_limit_integral(F, pairing=pairing)
    else:
        res = oscint.oscillatory_integral(F, _plan(cfg), pairing, tol=cfg.tol)
    w = _Writer(cfg, ["s", "radius", "panels", "value_re", "value_im", "err"])
    w.row([res.s, float(res.radius), res.panels,
           float(res.value[0].real), float(res.value[0].imag), float(res.err[0])])
    w.flush()
    return EXIT_OK


def _cmd_moyal(cfg: RunConfig) -> int:
    if not cfg.f or not cfg.g:
        raise UsageError("--f and --g are required")
    f = _symbol_from(cfg.f, n_x=cfg.n)
    g = _symbol_from(cfg.g, n_x=cfg.n)
    theta = _parse_theta(cfg)
    pts = _parse_points(cfg, cfg.n)
    columns = ["x", "value_re", "value_im", "err"]
    if cfg.oracle:
        columns += ["oracle_re", "oracle_im", "diff"]
    w = _Writer(cfg, columns)
    for x in pts:
        res = deform.moyal_product(f, g, theta, x, plan=_plan(cfg) if cfg.radius != 40.0 or cfg.s != "auto" else None,
                                   certify=False)
        row = [";".join(repr(float(v)) for v in x),
               float(res.value[0].real), float(res.value[0].imag), float(res.err[0])]
        if cfg.oracle:
            if cfg.oracle == "series":
                oracle = deform.moyal_series(f, g, float(theta[0, 0]), x)
            elif cfg.oracle == "direct":
                oracle = deform.moyal_direct(f, g, theta if cfg.n > 1 else float(theta[0, 0]), x)
            else:
                F = deform.deformed_symbol_translation(f, g, theta, x)
                oracle = oscint.cutoff_limit_integral(F, pairing=Pairing(cfg.n)).value[0]
            row += [float(np.real(oracle)), float(np.imag(oracle)),
                    float(abs(oracle - res.value[0]))]
        w.row(row)
    w.flush()
    return EXIT_OK


def _cmd_twisted(cfg: RunConfig) -> int:
    if not cfg.f or not cfg.g:
        raise UsageError("--f and --g are required")
    f = _symbol_from(cfg.f, n_x=cfg.n)
    g = _symbol_from(cfg.g, n_x=cfg.n)
    theta = _parse_theta(cfg)
    pts = _parse_points(cfg, cfg.n)
    w = _Writer(cfg, ["x", "value_re", "value_im", "err"])
    for x in pts:
        val, err = deform.twisted_convolution(f, g, theta, x, certify=False)
        w.row([";".join(repr(float(v)) for v in x), float(val.real), float(val.imag), float(err)])
    w.flush()
    return EXIT_OK


def _cmd_local_nc(cfg: RunConfig) -> int:
    if not cfg.f or not cfg.g:
        raise UsageError("--f and --g are required")
    if cfg.n != 1:
        raise UsageError("the compact instance is one-dimensional")
    f = _symbol_from(cfg.f)
    g = _symbol_from(cfg.g)
    theta = float(_parse_theta(cfg)[0, 0])
    pts = _parse_points(cfg, 1)
    w = _Writer(cfg, ["y", "value_re", "value_im", "err", "pointwise_re", "pointwise_im"])
    for y in pts:
        res = deform.local_nc_product(f, g, None, theta, y, certify=False)
        fg = complex(f(y[:, None])[0, 0] * g(y[:, None])[0, 0])
        w.row([float(y[0]), float(res.value[0].real), float(res.value[0].imag),
               float(res.err[0]), fg.real, fg.imag])
    w.flush()
    return EXIT_OK


def _cmd_action(cfg: RunConfig) -> int:
    tau = actions.CompactTau()
    if cfg.mode == "probe":
        pts = _parse_points(cfg, 2)
        cols = ["x", "y", "tau", "d_y", "d_x", "d_xy", "d_yy", "d_xx"]
        w = _Writer(cfg, cols)
        for xy in pts:
            x, y = float(xy[0]), float(xy[1])
            w.row([
                x, y, actions.tau1(x, y, tau),
                actions.tau_partials(0, 1, x, y, tau),
                actions.tau_partials(1, 0, x, y, tau),
                actions.tau_partials(1, 1, x, y, tau),
                actions.tau_partials(0, 2, x, y, tau),
                actions.tau_partials(2, 0, x, y, tau),
            ])
        w.flush()
        return EXIT_OK
    if cfg.mode == "bounds":
        mags = np.logspace(0, 2, 8)
        entries = actions.growth_table([(0, 0), (0, 1), (0, 2)], mags, tau=tau)
        text = actions.growth_report_csv(entries)
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime())
        payload = f"# generated {stamp}\n{text}"
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8") as fh:
                fh.write(payload)
        else:
            sys.stdout.write(payload)
        return EXIT_OK
    raise UsageError(f"unknown action mode {cfg.mode!r} (expected probe or bounds)")


def _verify_rows(which: str, cfg: RunConfig):
    rows = []
    if which in ("integral-identities", "all"):
        for r in oscint.verify_identities(_parse_pairing(cfg)):
            rows.append(("integral/" + r.identity, r.case, r.residual, r.tolerance, r.passed))
    if which in ("deformation", "all"):
        for r in deform.property_suite("moyal-n1", theta=0.2, quick=True):
            rows.append(("deform/" + r.identity, f"x={r.point}", r.residual, r.tolerance, r.passed))
        for r in deform.property_suite("moyal-n2-star", theta=0.5, quick=True):
            rows.append(("deform/" + r.identity, f"x={r.point}", r.residual, r.tolerance, r.passed))
    if which in ("actions", "all"):
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        for _ in range(40):
            x, xp = rng.uniform(-3, 3, 2)
            y = rng.uniform(-1.4, 1.4)
            worst = max(worst, abs(actions.tau1(x, actions.tau1(xp, y)) - actions.tau1(x + xp, y)))
        rows.append(("actions/group-law", "sampled", worst, 1e-8, worst <= 1e-8))
        ident = max(abs(actions.tau1(x, 1.3) - 1.3) for x in (-5.0, 2.0, 40.0))
        rows.append(("actions/support", "outside", ident, 0.0, ident == 0.0))
        entries = actions.growth_table([(0, 0), (0, 1)], np.logspace(0, 1.5, 6))
        for e in entries:
            cap = 0.2 if e.l == 0 else 2 * e.l + 1.3
            rows.append((f"actions/growth l={e.l}", f"fit={e.fitted_exponent:.2f}",
                         max(0.0, e.fitted_exponent - cap), cap, e.fitted_exponent <= cap))
    if which in ("symbols", "all"):
        lay = exprdsl.VarLayout(0, 1)
        fsym = symbols.expr_symbol("exp(-x1^2)", layout=lay, m=0.0, rho=0.0)
        grid = symbols.GridSpec(129, 10.0)
        lhs = symbols.seminorm_estimate(symbols.differentiate(fsym, (1,)), "abs", (0,), -0.0, 0.0, grid)
        rhs = symbols.seminorm_estimate(fsym, "abs", (1,), 0.0, 0.0, grid)
        rows.append(("symbols/derivative-identity", "gauss", abs(lhs - rhs), 0.0, lhs == rhs))
        e_tight = symbols.seminorm_estimate(fsym, "abs", (0,), 0.0, 0.0, grid)
        e_loose = symbols.seminorm_estimate(fsym, "abs", (0,), 1.0, 0.0, grid)
        rows.append(("symbols/monotone-embedding", "gauss", max(0.0, e_loose - e_tight), 0.0,
                     e_loose <= e_tight))
        flagged = any(r.diverging for r in symbols.check_symbol(
            symbols.expr_symbol("x1*x1", layout=lay, m=1.0, rho=0.0), 0, grid))
        rows.append(("symbols/divergence-flag", "x^2 at m=1", 0.0 if flagged else 1.0, 0.0, flagged))
    return rows


def _cmd_verify(cfg: RunConfig) -> int:
    which = cfg.mode
    if which not in ("integral-identities", "deformation", "actions", "symbols", "all"):
        raise UsageError(f"unknown verify suite {which!r}")
    rows = _verify_rows(which, cfg)
    w = _Writer(cfg, ["identity", "case", "residual", "tolerance", "pass"])
    ok = True
    for identity, case, residual, tolerance, passed in rows:
        ok = ok and passed
        w.row([identity, case, float(residual), float(tolerance), bool(passed)])
    w.flush()
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def _cmd_bench(cfg: RunConfig) -> int:
    if cfg.mode != "quadrature":
        raise UsageError(f"unknown bench mode {cfg.mode!r} (expected quadrature)")
    batt = oscint.battery_symbols()
    F = batt["gauss_px"]
    w = _Writer(cfg, ["s", "radius", "panels", "value_re", "value_im", "err", "seconds"])
    for s in (3, 4):
        for radius in (10.0, 14.0, 20.0):
            plan = QuadraturePlan(s=s, radius=radius)
            t0 = time.perf_counter()
            res = oscint.oscillatory_integral(F, plan, Pairing(1), threads=cfg.threads)
            dt = time.perf_counter() - t0
            w.row([res.s, radius, res.panels, float(res.value[0].real),
                   float(res.value[0].imag), float(res.err[0]), dt])
    w.flush()
    return EXIT_OK


def run(argv: list[str]) -> int:
    """Dispatch a command line; returns the process exit code."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not ns.command:
        parser.print_help()
        return EXIT_USAGE
    try:
        cfg = _merge_config(ns)
        if cfg.threads is not None:
            set_default_threads(cfg.threads)
        if cfg.command == "integrate":
            return _cmd_integrate(cfg)
        if cfg.command == "moyal":
            return _cmd_moyal(cfg)
        if cfg.command == "twisted-conv":
            return _cmd_twisted(cfg)
        if cfg.command == "local-nc":
            return _cmd_local_nc(cfg)
        if cfg.command == "action":
            return _cmd_action(cfg)
        if cfg.command == "verify":
            return _cmd_verify(cfg)
        if cfg.command == "bench":
            return _cmd_bench(cfg)
        raise UsageError(f"unknown command {cfg.command!r}")
    except (UsageError, SymbolUsageError, exprdsl.ExprParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergenceError, actions.ActionNonConvergence, exprdsl.ExprEvalError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    raise SystemExit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
