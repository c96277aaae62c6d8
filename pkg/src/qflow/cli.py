"""Command-line driver: builds a run configuration, dispatches to the library
and writes a self-describing CSV file.

    qflow intervals --lambda 6 --a 1 --n 1 --r a --tau 10:20
    qflow backflow-opt --nmax 2,3,5,10,20 --window 0.02:0.04
    qflow --config previous_run.csv          # re-run from a result file

Options may also come from a config file of ``key = value`` lines (``#``
starts a comment); flags override the file, which overrides the defaults.
"""

import argparse
import io
import json
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .backflow import (
    assemble_backflow_matrix,
    backflow_map,
    find_backflow_intervals,
    maximize_backflow,
    verify_backflow_solution,
)
from .delta_shell import (
    converged_resonances,
    current,
    expectation_x_v,
    nonescape_P,
    psi,
    radial_rule,
    survival_S,
)
from .errors import DomainError
from .free_packet import Superposition, current_free, nonescape_free, superpose, total_norm_free
from .numerics import QuadratureSpec
from .resonances import BarrierParams

log = logging.getLogger("qflow")

SCENARIOS = ("decay", "current-trace", "current-map", "intervals", "free-evolve", "backflow-opt")

TIME_UNIT = "tau = hbar (t - t0) / 2m [length^2]"

_BARRIER = {"lambda", "a", "n", "count"}
_FREE = {"modes"}
_OPTIMUM = {"nmax", "window", "method"}
_COMMON = {"scenario", "out", "tol", "a"}
ALLOWED = {
    "decay": _COMMON | _BARRIER | {"tau", "log", "observable", "m", "r_max"},
    "current-trace": _COMMON | _BARRIER | {"tau", "log", "r"},
    "current-map": _COMMON | _BARRIER | _FREE | _OPTIMUM | {"tau", "r"},
    "intervals": _COMMON | _BARRIER | _FREE | {"tau", "r", "step"},
    "free-evolve": _COMMON | _FREE | {"tau", "log", "r", "observable"},
    "backflow-opt": _COMMON | _OPTIMUM | {"observable", "verify"},
}
OBSERVABLES = {
    "decay": ("survival", "expectation"),
    "free-evolve": ("current", "density", "psi", "nonescape", "norm"),
    "backflow-opt": ("eigen", "spectrum", "density"),
}
DEFAULTS = {
    "lambda": "6", "a": "1", "n": "1", "count": "40", "r": "a", "log": "false",
    "step": "0.0025", "method": "jacobi", "verify": "false", "r_max": "50a",
}
REQUIRED = {
    "decay": ("tau",),
    "current-trace": ("tau",),
    "current-map": ("tau", "r"),
    "intervals": ("tau",),
    "free-evolve": ("tau", "modes"),
    "backflow-opt": ("nmax", "window"),
}
KEYS = set().union(*ALLOWED.values())


class UsageError(Exception):
    """Invalid or incomplete command line or configuration."""


# ---------------------------------------------------------------- parsing

def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _float(text, name):
    try:
        v = float(text)
    except ValueError as exc:
        raise UsageError(f"{name}: expected a number, got {text!r}") from exc
    if not math.isfinite(v):
        raise UsageError(f"{name}: value must be finite")
    return v


def _int(text, name):
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"{name}: expected an integer, got {text!r}") from exc


def parse_length(text, a):
    """A length such as ``1.5``, ``a`` or ``8a`` (multiples of the radius)."""
    t = text.strip()
    if t.endswith("a"):
        head = t[:-1].strip()
        return (1.0 if head in ("", "+") else _float(head, "length")) * a
    return _float(t, "length")


def parse_range(text, name, length_a=None, default_count=None):
    """``lo:hi[:count]``; ``length_a`` enables the ``8a`` notation."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise UsageError(f"{name}: expected lo:hi[:count], got {text!r}")
    conv = (lambda s: parse_length(s, length_a)) if length_a else (lambda s: _float(s, name))
    lo, hi = conv(parts[0]), conv(parts[1])
    if not lo < hi:
        raise UsageError(f"{name}: range {text!r} is empty or reversed")
    count = _int(parts[2], name) if len(parts) == 3 else default_count
    if count is not None and count < 2:
        raise UsageError(f"{name}: count must be at least 2")
    return lo, hi, count


def parse_modes(text):
    """``"n:c,n:c,..."`` with complex c written like ``0.5+0.5i``."""
    terms = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise UsageError(f"modes: expected n:c, got {item!r}")
        n, c = item.split(":", 1)
        try:
            terms.append((int(n), complex(c.strip().replace("i", "j").replace(" ", ""))))
        except ValueError as exc:
            raise UsageError(f"modes: cannot parse {item!r}") from exc
    if not terms:
        raise UsageError("modes: no terms given")
    return terms


def _int_list(text, name):
    vals = [_int(t, name) for t in text.split(",") if t.strip()]
    if not vals:
        raise UsageError(f"{name}: empty list")
    return vals


def read_config_file(path):
    """Key/value pairs from a config file or from a previous result CSV."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    pairs = {}
    result_file = bool(lines) and lines[0].startswith("# qflow")
    for no, line in enumerate(lines, 1):
        if result_file:
            if not line.startswith("#"):
                break
            m = re.match(r"#\s*(?:config\.)?([\w-]+)\s*=\s*(.*)$", line)
            if m and not (line.startswith("# config.") or m.group(1) == "scenario"):
                continue
            if m:
                pairs[m.group(1)] = m.group(2).strip()
            continue
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"{path}:{no}: expected key = value")
        key, value = (s.strip() for s in body.split("=", 1))
        pairs[key] = value
    out = {}
    for key, value in pairs.items():
        k = key.replace("-", "_")
        if k not in KEYS:
            raise UsageError(f"{path}: unknown key {key!r}")
        out[k] = value
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="qflow", description="Exact quantum decay and backflow computations.")
    p.add_argument("scenario", nargs="?", choices=SCENARIOS)
    p.add_argument("--lambda", dest="lambda_", metavar="LAM", help="barrier strength")
    p.add_argument("--a", help="barrier / well radius")
    p.add_argument("--n", help="initial level")
    p.add_argument("--nmax", help="number of well levels, or a comma list")
    p.add_argument("--modes", help='superposition "n:c,n:c", e.g. "1:0.7071,23:0.5+0.5i"')
    p.add_argument("--r", help="monitor radius (a, 8a, 1.5) or lo:hi:count for maps")
    p.add_argument("--tau", help="time range lo:hi[:count]")
    p.add_argument("--window", help="backflow time window lo:hi")
    p.add_argument("--observable", help="quantity to tabulate")
    p.add_argument("--m", help="extra levels for survival projections, comma list")
    p.add_argument("--r-max", dest="r_max", help="outer radius for expectation values")
    p.add_argument("--count", help="initial number of resonance poles")
    p.add_argument("--step", help="scan step for sign changes of the current")
    p.add_argument("--method", help="eigen-solver: jacobi or power")
    p.add_argument("--log", action="store_const", const="true", default=None,
                   help="geometric spacing of the tau grid")
    p.add_argument("--verify", action="store_const", const="true", default=None,
                   help="re-integrate the optimal backflow independently")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--config", help="config file or previous result CSV")
    p.add_argument("--tol", help="absolute quadrature tolerance")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return p


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one run, stored as canonical text."""

    scenario: str
    options: tuple

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise UsageError(f"unknown scenario {self.scenario!r}")

    def has(self, key):
        return any(k == key for k, _ in self.options)

    def text(self, key):
        for k, v in self.options:
            if k == key:
                return v
        if key in DEFAULTS:
            return DEFAULTS[key]
        raise UsageError(f"missing required field {key!r} for {self.scenario}")

    # typed accessors
    @property
    def a(self):
        a = _float(self.text("a"), "a")
        if not a > 0:
            raise UsageError("a must be positive")
        return a

    def barrier(self):
        try:
            return BarrierParams(_float(self.text("lambda"), "lambda"), self.a, _int(self.text("n"), "n"))
        except DomainError as exc:
            raise UsageError(str(exc)) from exc

    def superposition(self):
        try:
            return Superposition.from_terms(self.a, parse_modes(self.text("modes")), normalize=True)
        except DomainError as exc:
            raise UsageError(str(exc)) from exc

    def quadrature(self):
        if not self.has("tol"):
            return QuadratureSpec()
        tol = _float(self.text("tol"), "tol")
        if not tol > 0:
            raise UsageError("tol must be positive")
        return QuadratureSpec(abs_tol=tol)

    def taus(self, default_count=201):
        lo, hi, count = parse_range(self.text("tau"), "tau", default_count=default_count)
        if lo < 0:
            raise UsageError("tau must be non-negative")
        if _bool(self.text("log")):
            if lo <= 0:
                raise UsageError("--log needs tau > 0")
            return np.geomspace(lo, hi, count)
        return np.linspace(lo, hi, count)

    def window(self, key):
        lo, hi, _ = parse_range(self.text(key), key)
        return lo, hi

    def observable(self):
        choices = OBSERVABLES[self.scenario]
        value = self.options_dict().get("observable", choices[0])
        if value not in choices:
            raise UsageError(f"observable for {self.scenario} must be one of {', '.join(choices)}")
        return value

    def options_dict(self):
        return dict(self.options)


def parse_config(argv):
    """Resolve flags, config file and defaults into a :class:`RunConfig`."""
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("config", "verbose", "scenario")}
    if "lambda_" in flags:
        flags["lambda"] = flags.pop("lambda_")
    filed = read_config_file(args.config) if args.config else {}
    scenario = args.scenario or filed.pop("scenario", None)
    filed.pop("scenario", None)
    if scenario is None:
        raise UsageError("missing required field 'scenario' (one of: " + ", ".join(SCENARIOS) + ")")
    if scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {scenario!r}")
    allowed = ALLOWED[scenario]
    for key in flags:
        if key not in allowed:
            raise UsageError(f"option --{key.replace('_', '-')} does not apply to {scenario}")
    merged = {k: v for k, v in filed.items() if k in allowed}
    stray = sorted(set(filed) - allowed - {"out"})
    if stray:
        raise UsageError(f"config keys {stray} do not apply to {scenario}")
    merged.update(flags)
    if "modes" in merged and ({"lambda", "n", "count"} & set(merged)):
        raise UsageError("--modes (free packet) conflicts with barrier options --lambda/--n/--count")
    if "modes" in merged and ({"nmax", "window"} & set(merged)):
        raise UsageError("--modes conflicts with the optimal-packet options --nmax/--window")
    for key in REQUIRED[scenario]:
        if key not in merged:
            raise UsageError(f"missing required field {key!r} for {scenario}")
    if scenario == "current-map" and ("nmax" in merged) != ("window" in merged):
        raise UsageError("current-map of the optimal packet needs both --nmax and --window")
    return RunConfig(scenario, tuple(sorted(merged.items())))


# ---------------------------------------------------------------- results

@dataclass(frozen=True)
class ResultTable:
    columns: tuple
    units: tuple
    rows: list = field(default_factory=list)
    metadata: tuple = ()
    config: tuple = ()
    scenario: str = ""
    wall_time: float = float("nan")

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise DomainError("every column needs a unit")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise DomainError("row width differs from header width")

    def __eq__(self, other):
        # wall time is not part of the table content
        return isinstance(other, ResultTable) and (
            self.columns, self.units, list(self.rows), self.metadata, self.config, self.scenario
        ) == (other.columns, other.units, list(other.rows), other.metadata, other.config, other.scenario)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def format_csv(table):
    out = io.StringIO()
    out.write(f"# qflow {__version__}\n")
    out.write(f"# scenario = {table.scenario}\n")
    for k, v in table.config:
        out.write(f"# config.{k} = {v}\n")
    for k, v in table.metadata:
        out.write(f"# meta.{k} = {v}\n")
    out.write("# units = " + ",".join(table.units) + "\n")
    out.write(",".join(table.columns) + "\n")
    for row in table.rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def emit_csv(table, path):
    """Write ``table``; ``path`` of None or '-' writes to stdout."""
    text = format_csv(table)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path!r}: {exc}") from exc


def _value(tok):
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def parse_csv(text):
    """Inverse of :func:`format_csv`."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# qflow"):
        raise DomainError("not a qflow result file")
    scenario, config, meta, units, i = "", [], [], (), 1
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        key, _, value = (s.strip() for s in body.partition("="))
        if key == "scenario":
            scenario = value
        elif key.startswith("config."):
            config.append((key[7:], value))
        elif key.startswith("meta."):
            meta.append((key[5:], value))
        elif key == "units":
            units = tuple(value.split(","))
        i += 1
    columns = tuple(lines[i].split(",")) if i < len(lines) else ()
    rows = [tuple(_value(t) for t in line.split(",")) for line in lines[i + 1:] if line]
    return ResultTable(columns, units, rows, tuple(meta), tuple(config), scenario)


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())


# ---------------------------------------------------------------- scenarios

def _radius(cfg):
    return parse_length(cfg.text("r"), cfg.a)


def _resonances(cfg, r, taus):
    params = cfg.barrier()
    count = _int(cfg.text("count"), "count")
    probe = np.array([taus.min(), taus.max()]) if np.max(taus) > 0 else np.array([0.0])
    probe = probe[probe > 0]
    if probe.size == 0:
        probe = np.array([1.0])
    res = converged_resonances(params, np.atleast_1d(r)[:, None], probe[None, :], count=count)
    log.info("using %d resonance pairs", res.truncation)
    return res


def _run_decay(cfg):
    taus = cfg.taus()
    res_r, _ = radial_rule(cfg.a, cfg.a, 128)
    res = _resonances(cfg, res_r, taus)
    meta = [("truncation", res.truncation)]
    if cfg.observable() == "expectation":
        r_max = parse_length(cfg.text("r_max"), cfg.a)
        rows = []
        for t in taus:
            if t <= 0:
                raise UsageError("expectation values need tau > 0")
            e = expectation_x_v(res, t, r_max)
            rows.append((float(t), e.x, e.v, e.flux))
        return ("tau", "x", "v", "flux"), ("T", "L", "L/T", "L/T"), rows, meta
    ms = _int_list(cfg.text("m"), "m") if cfg.has("m") else []
    n = res.params.n
    P = nonescape_P(res, taus)
    cols = [P, survival_S(res, n, taus)] + [survival_S(res, m, taus) for m in ms]
    names = ("tau", "P", f"S{n}") + tuple(f"S{m}" for m in ms)
    rows = [tuple([float(t)] + [float(c[i]) for c in cols]) for i, t in enumerate(taus)]
    return names, ("T",) + ("1",) * (len(names) - 1), rows, meta


def _run_current_trace(cfg):
    taus = cfg.taus()
    r = _radius(cfg)
    res = _resonances(cfg, np.array([r]), taus)
    p = psi(res, r, taus)
    j = current(res, r, taus)
    rows = [(float(t), float(jj), float(abs(pp) ** 2), float(pp.real), float(pp.imag))
            for t, jj, pp in zip(taus, j, p)]
    return (("tau", "j", "rho", "re_psi", "im_psi"), ("T", "L^-2", "L^-1", "L^-1/2", "L^-1/2"),
            rows, [("truncation", res.truncation), ("r", repr(r))])


def _optimal_superposition(cfg):
    nmax = _int_list(cfg.text("nmax"), "nmax")
    if len(nmax) != 1:
        raise UsageError("a single --nmax is needed here")
    lo, hi = cfg.window("window")
    problem = assemble_backflow_matrix(cfg.a, nmax[0], lo, hi, cfg.quadrature())
    highest, _ = maximize_backflow(problem, method=cfg.text("method"))
    return Superposition.from_vector(cfg.a, highest.vector), highest.value


def _run_current_map(cfg):
    a = cfg.a
    r0, r1, nr = parse_range(cfg.text("r"), "r", length_a=a, default_count=101)
    t0, t1, nt = parse_range(cfg.text("tau"), "tau", default_count=101)
    meta = []
    if cfg.has("modes") or cfg.has("nmax"):
        if cfg.has("modes"):
            sup = cfg.superposition()
        else:
            sup, value = _optimal_superposition(cfg)
            meta.append(("lambda_high", repr(value)))

        def source(r, tau):
            return current_free(sup, r, tau)
        meta.append(("source", "free"))
    else:
        taus = np.linspace(t0, t1, nt)
        res = _resonances(cfg, np.linspace(r0, r1, nr), taus)

        def source(r, tau):
            return current(res, r, tau)
        meta += [("source", "delta-shell"), ("truncation", res.truncation)]
    grid = backflow_map(source, (r0, r1), (t0, t1), (nr, nt))
    meta += [("grid", f"{nr}x{nt}"), ("negative_cells", len(grid.cells()))]
    return ("r", "tau", "log10_neg_j"), ("L", "T", "log10(L^-2)"), grid.cells(), meta


def _run_intervals(cfg):
    lo, hi, _ = parse_range(cfg.text("tau"), "tau")
    r = _radius(cfg)
    step = _float(cfg.text("step"), "step")
    spec = cfg.quadrature()
    if cfg.has("modes"):
        sup = cfg.superposition()
        meta = [("source", "free")]

        def j(t):
            return current_free(sup, r, t)

        def P(t):
            return nonescape_free(sup, t, r_max=r)
    else:
        res = _resonances(cfg, np.array([r]), np.array([max(lo, 1e-3), hi]))
        meta = [("source", "delta-shell"), ("truncation", res.truncation)]

        def j(t):
            return current(res, r, t)

        def P(t):
            return nonescape_P(res, t, r_max=r)
    found = find_backflow_intervals(j, (lo, hi), P, location=r, step=step, spec=spec)
    rows = [(i, iv.tau_start, iv.tau_end, iv.p_at_start, iv.delta) for i, iv in enumerate(found, 1)]
    meta += [("r", repr(r)), ("intervals", len(rows))]
    return ("i", "tau_start", "tau_end", "P", "delta"), ("1", "T", "T", "1", "1"), rows, meta


def _run_free_evolve(cfg):
    sup = cfg.superposition()
    taus = cfg.taus()
    r = _radius(cfg)
    obs = cfg.observable()
    meta = [("r", repr(r)), ("norm_coefficients", repr(float(np.sum(np.abs(sup.coefficients) ** 2))))]
    if obs == "current":
        v = current_free(sup, r, taus)
        return ("tau", "j"), ("T", "L^-2"), [(float(t), float(x)) for t, x in zip(taus, v)], meta
    if obs == "density":
        p, _ = superpose(sup, r, taus)
        return ("tau", "rho"), ("T", "L^-1"), [(float(t), float(abs(x) ** 2)) for t, x in zip(taus, p)], meta
    if obs == "psi":
        p, _ = superpose(sup, r, taus)
        return (("tau", "re_psi", "im_psi"), ("T", "L^-1/2", "L^-1/2"),
                [(float(t), float(x.real), float(x.imag)) for t, x in zip(taus, p)], meta)
    if obs == "nonescape":
        v = nonescape_free(sup, taus, r_max=r)
        return ("tau", "P"), ("T", "1"), [(float(t), float(x)) for t, x in zip(taus, v)], meta
    rows = [(float(t), total_norm_free(sup, float(t))) for t in taus]
    return ("tau", "norm"), ("T", "1"), rows, meta


def _run_backflow_opt(cfg):
    nmax = _int_list(cfg.text("nmax"), "nmax")
    lo, hi = cfg.window("window")
    spec = cfg.quadrature()
    method = cfg.text("method")
    obs = cfg.observable()
    if obs != "eigen" and len(nmax) != 1:
        raise UsageError(f"observable {obs} needs a single --nmax")
    verify = _bool(cfg.text("verify"))
    rows, meta, positives = [], [], []
    for N in nmax:
        problem = assemble_backflow_matrix(cfg.a, N, lo, hi, spec)
        highest, lowest = maximize_backflow(problem, method=method)
        # eigenvalues within roundoff of zero are not counted as positive
        ev = np.linalg.eigvalsh(problem.matrix)
        positives.append(f"{N}:{int(np.sum(ev > 1e-12 * np.max(np.abs(ev))))}")
        meta.append((f"hermiticity_{N}", repr(problem.hermiticity)))
        if verify:
            rep = verify_backflow_solution(problem, highest)
            meta.append((f"delta_direct_{N}", repr(rep.delta_direct)))
        log.info("n_max=%d: lowest %.6g highest %.6g", N, lowest.value, highest.value)
        if obs == "eigen":
            rows.append((N, lowest.value, lowest.residual, highest.value, highest.residual))
        elif obs == "spectrum":
            rows = [(i + 1, float(abs(h) ** 2), float(abs(l) ** 2))
                    for i, (h, l) in enumerate(zip(highest.vector, lowest.vector))]
        else:
            r = np.linspace(0.0, cfg.a, 401)
            ph, _ = superpose(Superposition.from_vector(cfg.a, highest.vector), r, 0.0)
            pl, _ = superpose(Superposition.from_vector(cfg.a, lowest.vector), r, 0.0)
            rows = [(float(x), float(abs(u) ** 2), float(abs(v) ** 2)) for x, u, v in zip(r, ph, pl)]
    meta.append(("positive_eigenvalues_above_1e-12_norm", ",".join(positives)))
    if obs == "eigen":
        return (("n", "lambda_low", "e1_low", "lambda_high", "e1_high"), ("1",) * 5, rows, meta)
    if obs == "spectrum":
        return ("n", "c2_high", "c2_low"), ("1", "1", "1"), rows, meta
    return ("r", "rho_high", "rho_low"), ("L", "L^-1", "L^-1"), rows, meta


_DISPATCH = {
    "decay": _run_decay,
    "current-trace": _run_current_trace,
    "current-map": _run_current_map,
    "intervals": _run_intervals,
    "free-evolve": _run_free_evolve,
    "backflow-opt": _run_backflow_opt,
}


class ScenarioError(RuntimeError):
    def __init__(self, scenario, exc):
        super().__init__(f"{scenario}: {exc}")
        self.scenario = scenario
        self.cause = exc


def run(cfg):
    """Execute a configuration and return its :class:`ResultTable`."""
    start = time.perf_counter()
    try:
        columns, units, rows, meta = _DISPATCH[cfg.scenario](cfg)
    except UsageError:
        raise
    except Exception as exc:
        raise ScenarioError(cfg.scenario, exc) from exc
    meta = [("time_unit", TIME_UNIT)] + list(meta)
    config = tuple((k, v) for k, v in cfg.options if k != "out")
    return ResultTable(tuple(columns), tuple(units), rows, tuple((k, str(v)) for k, v in meta),
                       config, cfg.scenario, time.perf_counter() - start)


def _error_record(kind, message, scenario=None):
    rec = {"error": kind, "message": message}
    if scenario:
        rec["scenario"] = scenario
    return json.dumps(rec, sort_keys=True)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.INFO if "--verbose" in argv else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if not argv:
        build_parser().print_usage(sys.stderr)
        print(_error_record("UsageError", "no scenario given"), file=sys.stderr)
        return 2
    try:
        cfg = parse_config(argv)
        table = run(cfg)
        log.info("wall time %.3f s", table.wall_time)
        emit_csv(table, cfg.options_dict().get("out"))
    except UsageError as exc:
        print(_error_record("UsageError", str(exc)), file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(_error_record(type(exc.cause).__name__, str(exc.cause), exc.scenario), file=sys.stderr)
        return 1
    except OSError as exc:
        print(_error_record("OSError", str(exc)), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
