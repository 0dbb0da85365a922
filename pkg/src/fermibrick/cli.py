"""Command-line entry point: ``fermibrick <command> [flags]``.

Every run can be driven by a flat config file (``--config run.ini``) holding a
``[run]`` section of ``key = value`` lines; explicit flags override it.
Exit codes: 0 success, 1 invalid input, 2 failed internal-consistency check.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import gate_core, graded_dense, hamiltonian_limit, quench_dynamics, spectral_ubw, topology
from .gate_core import GateDomainError, GateParams

COMMANDS = (
    "gate-check",
    "dispersion-h",
    "dispersion-u",
    "phase-diagram",
    "theta-critical",
    "quench",
    "gge",
    "verify",
)

EXIT_OK, EXIT_INVALID, EXIT_CHECK_FAILED = 0, 1, 2


class UsageError(Exception):
    pass


class ConsistencyError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    alpha: float = 1.0
    gamma: float = 0.0
    theta: float = 0.5
    t_a: float = 1.0
    L: int = 10
    layers: int = 20
    boundary: str = "PBC"
    points: int = 200
    grid: int = 256
    mode: str = topology.EPS_EQUAL
    delta_min: float = 0.0
    delta_max: float = 0.0
    delta_n: int = 1
    eps_min: float = -1.0
    eps_max: float = 1.0
    eps_n: int = 41
    initial: str = ""
    seed_site: int = -1
    route: str = "covariance"
    trace: bool = False
    signed: bool = False
    level: str = "quick"
    seed: int = 0
    threads: int = 0
    out: str = ""
    format: str = "csv"

    @property
    def params(self) -> GateParams:
        return GateParams(self.alpha, self.gamma, self.theta)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name, value):
    kind = _FIELD_TYPES[name]
    if kind in ("bool", bool):
        if isinstance(value, bool):
            return value
        v = str(value).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{name}: expected a boolean, got {value!r}")
    try:
        if kind in ("int", int):
            return int(value)
        if kind in ("float", float):
            return float(value)
    except ValueError as exc:
        raise UsageError(f"{name}: {exc}") from None
    return str(value)


def read_config(path) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path!r}")
    if "run" not in cp:
        raise UsageError(f"config file {path!r} has no [run] section")
    out = {}
    for key, value in cp["run"].items():
        if key not in _FIELD_TYPES:
            raise UsageError(f"unknown config key {key!r}")
        out[key] = _coerce(key, value)
    return out


def write_config(cfg: RunConfig, path):
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["run"] = {k: (repr(v) if isinstance(v, float) else str(v)) for k, v in asdict(cfg).items()}
    buf = io.StringIO()
    cp.write(buf)
    atomic_write(path, buf.getvalue())


def atomic_write(path, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def emit(cfg: RunConfig, header, rows, meta=None, stdout=None):
    stdout = stdout or sys.stdout
    if cfg.format == "json":
        text = json.dumps(
            _jsonable({"command": cfg.command, "meta": meta or {}, "columns": list(header), "rows": rows}),
            indent=1,
        ) + "\n"
    else:
        text = to_csv(header, rows)
    if cfg.out:
        atomic_write(cfg.out, text)
        if meta is not None and cfg.format == "csv":
            atomic_write(cfg.out + ".json", json.dumps(_jsonable(meta), indent=1) + "\n")
    else:
        stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _meta(cfg, **extra):
    m = {"alpha": cfg.alpha, "gamma": cfg.gamma, "theta": cfg.theta}
    m.update(extra)
    return m


def cmd_gate_check(cfg, out):
    p = cfg.params
    S = gate_core.build_smatrix(p)
    res = gate_core.verify_gate_exponential(p)
    uni = gate_core.unitarity_residual(S)
    gap = gate_core.matchgate_decompose(S).det_gap
    emit(cfg, ["alpha", "gamma", "theta", "exp_residual", "unitarity_residual", "det_gap"],
         [[p.alpha, p.gamma, p.theta, res, uni, gap]], stdout=out)
    if max(res, uni, gap) > 1e-9:
        raise ConsistencyError(f"gate check failed: exp {res:.3g}, unitarity {uni:.3g}, det gap {gap:.3g}")


def cmd_dispersion_h(cfg, out):
    if cfg.points < 2:
        raise UsageError("points must be >= 2")
    ks = np.linspace(-np.pi / 2, np.pi / 2, cfg.points)
    e1, e2 = hamiltonian_limit.dispersion_hgamma(cfg.alpha, cfg.gamma, ks)
    emit(cfg, ["k", "eps1", "eps2"], list(zip(ks, e1, e2)),
         meta={"alpha": cfg.alpha, "gamma": cfg.gamma}, stdout=out)


def cmd_dispersion_u(cfg, out):
    if cfg.points < 1:
        raise UsageError("points must be >= 1")
    ks = np.linspace(0, np.pi / 2, cfg.points + 2)[1:-1]
    scan = spectral_ubw.quasi_energy_scan(cfg.params, ks, cfg.t_a)
    header = ["k", "eps1", "eps2", "eps3", "eps4"]
    rows = [[k, *e] for k, e in zip(ks, scan)]
    if cfg.signed:
        header += ["neg_eps1", "neg_eps2", "neg_eps3", "neg_eps4"]
        rows = [r + [-x for x in r[1:]] for r in rows]
    emit(cfg, header, rows, meta=_meta(cfg, t_a=cfg.t_a), stdout=out)


def cmd_phase_diagram(cfg, out):
    deltas = np.linspace(cfg.delta_min, cfg.delta_max, cfg.delta_n)
    epss = np.linspace(cfg.eps_min, cfg.eps_max, cfg.eps_n)
    rows = topology.phase_scan(cfg.alpha, cfg.gamma, deltas, epss, cfg.mode, cfg.grid,
                               threads=cfg.threads or None)
    emit(cfg, ["delta", "eps1", "eps2", "W", "min_gap"],
         [[r.delta, r.eps1, r.eps2, r.w, r.min_gap] for r in rows],
         meta={"alpha": cfg.alpha, "gamma": cfg.gamma, "mode": cfg.mode, "grid": cfg.grid}, stdout=out)


def cmd_theta_critical(cfg, out):
    tc = spectral_ubw.theta_critical(cfg.alpha, cfg.gamma)
    if cfg.format == "json" or cfg.out:
        emit(cfg, ["alpha", "gamma", "theta_c"], [[cfg.alpha, cfg.gamma, tc]], stdout=out)
    else:
        out.write(("none" if tc is None else _fmt(tc)) + "\n")


def _initial_bits(cfg):
    if cfg.initial and cfg.seed_site >= 0:
        raise UsageError("give either initial or seed_site, not both")
    if cfg.seed_site >= 0:
        if cfg.seed_site >= cfg.L:
            raise UsageError(f"seed_site must be < L = {cfg.L}")
        return quench_dynamics.seed_bits(cfg.L, cfg.seed_site)
    if cfg.initial:
        return quench_dynamics._parse_bits(cfg.initial, cfg.L)
    return np.zeros(cfg.L, dtype=int)


def cmd_quench(cfg, out):
    bits = _initial_bits(cfg)
    if cfg.route == "covariance":
        tr = quench_dynamics.covariance_evolve(cfg.params, cfg.L, bits, cfg.layers, cfg.boundary)
    elif cfg.route == "momentum":
        if bits.any() or cfg.boundary != "PBC":
            raise UsageError("the momentum route only handles the all-0 state with PBC")
        tr = quench_dynamics.momentum_block_evolve_allzero(cfg.params, cfg.L, cfg.layers)
    else:
        raise UsageError(f"route must be covariance or momentum, got {cfg.route!r}")
    meta = _meta(cfg, L=cfg.L, layers=cfg.layers, boundary=cfg.boundary, route=cfg.route,
                 initial=tr.initial, seed_site=cfg.seed_site if cfg.seed_site >= 0 else None)
    if cfg.trace:
        emit(cfg, ["layer", "sz_even", "sz_odd"],
             [[t, e, o] for t, (e, o) in enumerate(zip(tr.sz_even, tr.sz_odd))], meta=meta, stdout=out)
    else:
        emit(cfg, ["layer"] + [f"s{j}" for j in range(cfg.L)],
             [[t, *row] for t, row in enumerate(tr.sz)], meta=meta, stdout=out)


def cmd_gge(cfg, out):
    e, o = quench_dynamics.gge_equilibrium(cfg.params, cfg.L)
    emit(cfg, ["alpha", "gamma", "theta", "L", "sz_even", "sz_odd"],
         [[cfg.alpha, cfg.gamma, cfg.theta, cfg.L, e, o]], stdout=out)


def run_verify(level="quick", L=8, seed=0):
    """List of (name, value, tolerance, passed) for the oracle checks."""
    if level not in ("quick", "full"):
        raise UsageError(f"level must be quick or full, got {level!r}")
    if L % 2 or L < 4 or L > graded_dense.DENSE_MAX_L:
        raise UsageError(f"L must be even and within [4, {graded_dense.DENSE_MAX_L}]")
    rng = np.random.default_rng(seed)
    out = []

    def rand_params(n):
        return [GateParams(rng.uniform(0.2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(n)]

    def add(name, value, tol):
        out.append((name, float(value), tol, bool(value < tol)))

    add("gate_exponential", max(gate_core.verify_gate_exponential(p) for p in rand_params(50)), 1e-9)
    p0 = rand_params(1)[0]
    add("yang_baxter", max(graded_dense.verify_yang_baxter(p0, *rng.uniform(-2, 2, 3)) for _ in range(10)), 1e-10)
    tc = spectral_ubw.theta_critical(1.0, 1.0)
    add("theta_critical", abs(tc - 0.700109), 1e-5)
    gi = [hamiltonian_limit.gaplessness_identity(rng.uniform(0.1, 10), rng.uniform(-4, 4)) for _ in range(20)]
    add("gaplessness_identity", max(max(abs(a - c), abs(b - c)) / c for a, b, c in gi), 1e-10)
    add("zero_mode", hamiltonian_limit.zero_mode_check(rng.uniform(0.3, 3), rng.uniform(-2, 2)), 1e-10)
    w_in = topology.winding_number(1.0, 0.0, topology.Perturbation(0, -0.5, -0.5)).w
    w_out = topology.winding_number(1.0, 0.0, topology.Perturbation(0, 0.5, 0.5)).w
    add("kitaev_winding", abs(abs(w_in) - 1) + abs(w_out), 0.5)
    Lq = 4 if level == "quick" else L
    for p in rand_params(2):
        U = graded_dense.build_ubw(p, Lq)
        q = graded_dense.build_supercharges(p, Lq)
        add(f"supercharges_L{Lq}", max(graded_dense.commutator_norm(U, q.qL), graded_dense.commutator_norm(U, q.qR)), 1e-10)
    if level == "full":
        p = rand_params(1)[0]
        U = graded_dense.build_ubw(p, L).entries
        ph = np.angle(np.linalg.eigvals(U))
        add(f"spectral_oracle_L{L}", spectral_ubw.phase_multiset_distance(ph, spectral_ubw.predicted_phases(p, L)), 1e-8)
        bits = rng.integers(0, 2, L)
        for bc in ("PBC", "OBC"):
            d = graded_dense.dense_sz_trace(p, bits, 10, bc)
            c = quench_dynamics.covariance_evolve(p, L, bits, 10, bc).sz
            add(f"covariance_vs_dense_{bc}_L{L}", np.abs(d - c).max(), 1e-9)
        if L % 4 == 2:
            m = quench_dynamics.momentum_block_evolve_allzero(p, L, 10).sz
            d = graded_dense.dense_sz_trace(p, np.zeros(L, dtype=int), 10)
            add(f"momentum_vs_dense_L{L}", np.abs(m - d).max(), 1e-9)
        u, v = rng.uniform(-1, 1, 2)
        t_u = graded_dense.build_transfer_matrix(u, p, 4).entries
        t_v = graded_dense.build_transfer_matrix(v, p, 4).entries
        U4 = graded_dense.build_ubw(p, 4).entries
        add("transfer_commutes_UF", graded_dense.commutator_norm(t_u, U4), 1e-9)
        add("transfer_commutes_t", graded_dense.commutator_norm(t_u, t_v), 1e-9)
        a, g = rng.uniform(0.5, 2), rng.uniform(-1.5, 1.5)
        add(f"hgamma_supercharges_L{min(L, 8)}", max(hamiltonian_limit.supercharge_commutators(a, g, min(L, 8))), 1e-9)
        r = topology.symmetry_relations_check(a, g, topology.Perturbation(0.1, -0.2, 0.3))
        add("bdi_symmetries", max(r), 1e-12)
    return out


def cmd_verify(cfg, out):
    results = run_verify(cfg.level, cfg.L, cfg.seed)
    emit(cfg, ["check", "value", "tolerance", "passed"], results,
         meta={"level": cfg.level, "L": cfg.L, "seed": cfg.seed}, stdout=out)
    failed = [r[0] for r in results if not r[3]]
    if failed:
        raise ConsistencyError("failed checks: " + ", ".join(failed))


HANDLERS = {
    "gate-check": cmd_gate_check,
    "dispersion-h": cmd_dispersion_h,
    "dispersion-u": cmd_dispersion_u,
    "phase-diagram": cmd_phase_diagram,
    "theta-critical": cmd_theta_critical,
    "quench": cmd_quench,
    "gge": cmd_gge,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _flag(parser, name, kind, help_):
    dest = name.replace("-", "_")
    if kind is bool:
        parser.add_argument(f"--{name}", dest=dest, action="store_const", const=True,
                            default=argparse.SUPPRESS, help=help_)
    else:
        parser.add_argument(f"--{name}", dest=dest, type=kind, default=argparse.SUPPRESS, help=help_)


_GATE = [("alpha", float, "gate alpha > 0"), ("gamma", float, "log mass ratio"), ("theta", float, "rapidity difference")]
_COMMAND_FLAGS = {
    "gate-check": _GATE,
    "dispersion-h": [("alpha", float, "alpha > 0"), ("gamma", float, "log mass ratio"), ("points", int, "number of k points")],
    "dispersion-u": _GATE + [("t-a", float, "symmetry-breaking scale on a12"), ("points", int, "number of k points"),
                             ("signed", bool, "also emit the negative branches")],
    "phase-diagram": [("alpha", float, "alpha > 0"), ("gamma", float, "log mass ratio"),
                      ("mode", str, "EPS_EQUAL or EPS_OPPOSITE"), ("grid", int, "k-grid resolution (>= 256)"),
                      ("delta-min", float, ""), ("delta-max", float, ""), ("delta-n", int, ""),
                      ("eps-min", float, ""), ("eps-max", float, ""), ("eps-n", int, "")],
    "theta-critical": [("alpha", float, "alpha > 0"), ("gamma", float, "log mass ratio")],
    "quench": _GATE + [("L", int, "chain length"), ("layers", int, "number of layers"),
                       ("boundary", str, "PBC or OBC"), ("initial", str, "bitstring initial state"),
                       ("seed-site", int, "single seed site (0-based)"), ("route", str, "covariance or momentum"),
                       ("trace", bool, "emit sublattice averages instead of the heatmap")],
    "gge": _GATE + [("L", int, "chain length, L = 4l + 2")],
    "verify": [("level", str, "quick or full"), ("L", int, "chain length for dense checks")],
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fermibrick", description="Supersymmetric free-fermion brick-wall circuit toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        for flag, kind, help_ in _COMMAND_FLAGS[name]:
            _flag(sp, flag, kind, help_)
        _flag(sp, "config", str, "config file with a [run] section")
        _flag(sp, "out", str, "output path (default: stdout)")
        _flag(sp, "format", str, "csv or json")
        _flag(sp, "threads", int, "worker threads (default: FERMIBRICK_THREADS or all cores)")
        _flag(sp, "seed", int, "seed for sampled checks (default 0)")
    return parser


def resolve_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command", None)
    if command is None:
        raise UsageError("missing command; choose one of: " + ", ".join(COMMANDS))
    values = {}
    path = ns.pop("config", None)
    if path:
        values.update(read_config(path))
        values.pop("command", None)
    values.update(ns)
    if not values.get("threads"):
        env = os.environ.get("FERMIBRICK_THREADS")
        if env:
            values["threads"] = _coerce("threads", env)
    cfg = RunConfig(command=command, **values)
    if cfg.format not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.threads < 0:
        raise UsageError("threads must be >= 0")
    return cfg


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        HANDLERS[cfg.command](cfg, stdout)
    except (UsageError, GateDomainError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (ConsistencyError, ArithmeticError) as exc:
        stderr.write(f"check failed: {exc}\n")
        return EXIT_CHECK_FAILED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
