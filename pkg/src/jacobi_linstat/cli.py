"""Command-line interface: predictions, exact finite-N tables, Monte Carlo checks.

    jacobi-linstat predict   --ensemble jue --regime bulk --fn gauss
    jacobi-linstat finite-n  --ensemble jse --N 10 --fn gauss --lambdas 0,0.1 --doubling
    jacobi-linstat verify-mc --ensemble jue --N 6 --a 0 --b 0 --fn gauss --lambdas 0.1
    jacobi-linstat kernel    --ensemble jue --regime edge --N 40 --grid 0.5:20:8

Settings are resolved as defaults < config file (``--config``, one
``key = value`` per line, ``#`` comments) < flags.  Output goes to
``--output``, else to ``$JACOBI_LINSTAT_OUTDIR/<command>.<format>``, else to
stdout.  Every output embeds the resolved settings.

Exit codes: 0 ok, 2 usage, 3 numerical failure, 4 statistical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .asymptotics import predict
from .ensemble import BETA_OF_NAME, EnsembleSpec, ParameterError, make_test_function
from .kernels import KernelError, kernel_table
from .mgf import MgfError, MgfRequest, cumulants, mgf_exact, trace_log_terms
from .quadrature import QuadratureError
from .sampler import SamplerError, estimate_stats
from .specfun import SpecialFunctionError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_STATISTIC = 0, 2, 3, 4
OUTDIR_ENV = "JACOBI_LINSTAT_OUTDIR"
MC_EXACT_MAX_N = 8

DEFAULTS = dict(
    config=None, ensemble="jue", regime="bulk", a=1.0, b=1.0, N=10, fn=None, fn_params="",
    form="corrected", lambdas="0,0.05,0.1,0.2", k_max=4, doubling=False, samples=20000,
    chains=4, seed=0, burn_in=1000, thin=2, grid=None, ygrid=None, output=None,
    format="json",
)
DEFAULT_GRIDS = dict(bulk="-3:3:13", edge="0.5:20:8")
_INT_KEYS = {"N", "k_max", "samples", "chains", "seed", "burn_in", "thin"}
_FLOAT_KEYS = {"a", "b"}
_BOOL_KEYS = {"doubling"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS or key == "config":
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        out[key] = value
    return out


def _coerce(key, value):
    if value is None or not isinstance(value, str):
        return value
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError:
        raise UsageError(f"{key} must be numeric, got {value!r}") from None
    if key in _BOOL_KEYS:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{key} must be a boolean, got {value!r}")
    return value


def resolve(command: str, flags: dict) -> dict:
    cfg = dict(DEFAULTS)
    if flags.get("config"):
        cfg.update(read_config_file(flags["config"]))
    cfg.update({k: v for k, v in flags.items() if v is not None})
    cfg = {k: _coerce(k, v) for k, v in cfg.items()}
    cfg["command"] = command
    return cfg


def _parse_list(text, name):
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{name} must be a comma-separated list of numbers") from None


def _parse_grid(text, name="grid"):
    """'lo:hi:n' (linspace) or a comma-separated list."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"{name} must be lo:hi:n")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"{name} must be lo:hi:n") from None
        if n < 0:
            raise UsageError(f"{name}: n must be non-negative")
        pts = np.linspace(lo, hi, n)
    else:
        pts = np.asarray(_parse_list(text, name))
    if pts.size == 0:
        raise UsageError(f"{name} is empty")
    return pts


def _fn_params(text):
    params = {}
    for item in str(text or "").split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"test-function parameter {item!r} is not key=value")
        k, v = (s.strip() for s in item.split("=", 1))
        try:
            params[k] = float(v)
        except ValueError:
            raise UsageError(f"test-function parameter {k} must be numeric") from None
    return params


def _beta(cfg):
    name = str(cfg["ensemble"]).lower()
    if name not in BETA_OF_NAME:
        raise UsageError(f"ensemble must be one of {sorted(BETA_OF_NAME)}")
    return BETA_OF_NAME[name]


def _spec(cfg, N=None):
    return EnsembleSpec(_beta(cfg), cfg["a"], cfg["b"], cfg["N"] if N is None else N,
                        cfg["regime"])


def _test_function(cfg):
    if not cfg.get("fn"):
        raise UsageError("--fn is required")
    return make_test_function(cfg["fn"], **_fn_params(cfg["fn_params"]))


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def render(cfg, columns, rows, extra=None) -> str:
    """CSV (settings as leading '#' lines) or JSON (settings under 'config')."""
    if cfg["format"] == "csv":
        buf = io.StringIO()
        for k in sorted(cfg):
            buf.write(f"# {k} = {_fmt(cfg[k])}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()
    if cfg["format"] != "json":
        raise UsageError("format must be csv or json")
    doc = dict(config=cfg, columns=list(columns), rows=[list(r) for r in rows])
    if extra:
        doc.update(extra)
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _destination(cfg):
    if cfg.get("output"):
        return cfg["output"]
    outdir = os.environ.get(OUTDIR_ENV)
    if outdir:
        return os.path.join(outdir, f"{cfg['command']}.{cfg['format']}")
    return "-"


def _emit(cfg, text):
    dest = _destination(cfg)
    if dest == "-":
        sys.stdout.write(text)
        return
    parent = os.path.dirname(dest)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(dest, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_predict(cfg) -> int:
    F = _test_function(cfg)
    beta = _spec(cfg).beta  # validates a, b for the ensemble
    p = predict(beta, cfg["regime"], F, cfg["a"], form=cfg["form"])
    rows = [("mean", "total", p.mean)]
    rows += [("mean", k, v) for k, v in p.mean_terms.items()]
    rows += [("variance", "total", p.variance)]
    rows += [("variance", k, v) for k, v in p.variance_terms.items()]
    rows += [("quadrature_error", "total", p.quadrature_error)]
    _emit(cfg, render(cfg, ("quantity", "term", "value"), rows, dict(prediction=p.as_dict())))
    return EXIT_OK


def _prediction_or_nan(beta, cfg, F):
    try:
        return predict(beta, cfg["regime"], F, cfg["a"], form=cfg["form"])
    except (ParameterError, QuadratureError):
        return None


FINITE_N_COLUMNS = ("N", "lambda", "mgf", "log_mgf") + tuple(
    f"trace_log_{k}" for k in range(1, 7)) + (
    "mean", "variance", "pred_mean", "pred_variance", "mean_error", "variance_error")


def cmd_finite_n(cfg) -> int:
    F = _test_function(cfg)
    beta = _beta(cfg)
    lams = _parse_list(cfg["lambdas"], "lambdas")
    if not lams:
        raise UsageError("lambdas is empty")
    k_max = cfg["k_max"]
    if not 1 <= k_max <= 6:
        raise UsageError("k_max must be between 1 and 6")
    sizes = [cfg["N"], 2 * cfg["N"]] if cfg["doubling"] else [cfg["N"]]
    p = _prediction_or_nan(beta, cfg, F)
    pm, pv = (p.mean, p.variance) if p is not None else (math.nan, math.nan)
    rows = []
    for N in sizes:
        spec = _spec(cfg, N)
        st = cumulants(spec, F, "trace")
        for lam in lams:
            req = MgfRequest(spec, F, lam)
            if lam == 0.0:
                g, partial = 1.0, [0.0] * k_max
            else:
                g = mgf_exact(req)
                partial = trace_log_terms(req, k_max).partial_sums
            partial = list(partial) + [math.nan] * (6 - k_max)
            rows.append((N, lam, g, math.log(g), *partial, st.mean, st.variance, pm, pv,
                         st.mean - pm, st.variance - pv))
    _emit(cfg, render(cfg, FINITE_N_COLUMNS, rows))
    return EXIT_OK


def cmd_verify_mc(cfg) -> int:
    F = _test_function(cfg)
    beta = _beta(cfg)
    spec = _spec(cfg)
    lams = _parse_list(cfg["lambdas"], "lambdas")
    res = estimate_stats(spec, F, cfg["samples"], cfg["chains"], cfg["seed"],
                         cfg["burn_in"], cfg["thin"], lams)
    exact = None
    if spec.N <= MC_EXACT_MAX_N:
        exact = cumulants(spec, F, "trace")
    p = _prediction_or_nan(beta, cfg, F)

    def z(emp, se, target):
        return (emp - target) / se if se > 0 else (0.0 if emp == target else math.inf)

    rows = []
    for name, emp, se in (("mean", res.empirical_mean, res.stderr_mean),
                          ("variance", res.empirical_variance, res.stderr_variance)):
        if exact is not None:
            t = getattr(exact, name)
            rows.append((name, "", emp, se, "exact-N", t, z(emp, se, t)))
        if p is not None:
            t = getattr(p, name)
            rows.append((name, "", emp, se, "asymptotic", t, z(emp, se, t)))
    for lam in lams:
        emp, se = res.mgf[lam], res.mgf_stderr[lam]
        if exact is not None:
            t = mgf_exact(MgfRequest(spec, F, lam)) if lam != 0.0 else 1.0
            rows.append(("mgf", lam, emp, se, "exact-N", t, z(emp, se, t)))
        else:
            rows.append(("mgf", lam, emp, se, "none", math.nan, math.nan))
    cols = ("quantity", "lambda", "empirical", "stderr", "target_kind", "target", "z")
    _emit(cfg, render(cfg, cols, rows, dict(monte_carlo=res.as_dict())))
    if res.non_mixing:
        sys.stderr.write("chains did not mix (between-chain disagreement above 5 stderr)\n")
        return EXIT_STATISTIC
    return EXIT_OK


def cmd_kernel(cfg) -> int:
    spec = _spec(cfg)
    if cfg["grid"] is None:
        cfg["grid"] = DEFAULT_GRIDS[spec.regime]
    grid = cfg["grid"]
    xs = _parse_grid(grid, "grid")
    ys = _parse_grid(cfg["ygrid"], "ygrid") if cfg["ygrid"] is not None else xs
    if spec.regime == "edge" and (xs.min() <= 0 or ys.min() <= 0):
        raise UsageError("edge grids must be positive")
    rows = kernel_table(spec, (xs, ys))
    cols = ("x", "y", "value", "limit", "error", "kernel_id", "N", "a", "b")
    err = max(r[4] for r in rows)
    _emit(cfg, render(cfg, cols, rows, dict(max_error=err)))
    return EXIT_OK


COMMANDS = {
    "predict": cmd_predict,
    "finite-n": cmd_finite_n,
    "verify-mc": cmd_verify_mc,
    "kernel": cmd_kernel,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jacobi-linstat",
        description="Linear eigenvalue statistics of Jacobi beta-ensembles.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", default=S, help="key = value settings file")
        p.add_argument("--ensemble", default=S, choices=sorted(BETA_OF_NAME),
                       help="jue (beta 2), jse (beta 4), joe (beta 1)")
        p.add_argument("--regime", default=S, choices=("bulk", "edge"))
        p.add_argument("--a", type=float, default=S)
        p.add_argument("--b", type=float, default=S)
        p.add_argument("--output", default=S, help="output file ('-' for stdout)")
        p.add_argument("--format", default=S, choices=("csv", "json"))

    def fn(p):
        p.add_argument("--fn", default=S, help="test function name")
        p.add_argument("--fn-params", dest="fn_params", default=S,
                       help="comma-separated key=value parameters")

    p = sub.add_parser("predict", help="large-N mean and variance with per-term breakdown")
    common(p)
    fn(p)
    p.add_argument("--form", default=S, choices=("corrected", "verbatim"),
                   help="hard-edge assembly for beta = 1, 4")

    p = sub.add_parser("finite-n", help="exact finite-N MGF, trace-log sums and cumulants")
    common(p)
    fn(p)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--lambdas", default=S, help="comma-separated lambda grid")
    p.add_argument("--k-max", dest="k_max", type=int, default=S)
    p.add_argument("--doubling", action="store_true", default=S,
                   help="also tabulate 2N")
    p.add_argument("--form", default=S, choices=("corrected", "verbatim"))

    p = sub.add_parser("verify-mc", help="Monte Carlo estimates against exact and limit values")
    common(p)
    fn(p)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--lambdas", default=S)
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--chains", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=S)
    p.add_argument("--thin", type=int, default=S)
    p.add_argument("--form", default=S, choices=("corrected", "verbatim"))

    p = sub.add_parser("kernel", help="scaled finite-N kernel against its limit on a grid")
    common(p)
    p.add_argument("--N", type=int, default=S)
    p.add_argument("--grid", default=S, help="lo:hi:n or comma-separated points")
    p.add_argument("--ygrid", default=S, help="second-argument grid (default: --grid)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    flags = vars(ns)
    command = flags.pop("command")
    try:
        cfg = resolve(command, flags)
        return COMMANDS[command](cfg)
    except (UsageError, ParameterError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (QuadratureError, MgfError, KernelError, SpecialFunctionError,
            SamplerError, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
