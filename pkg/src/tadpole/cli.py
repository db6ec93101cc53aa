"""Command-line front end.

Exit codes: 0 success, 2 domain outcome (no damped spectrum, root mismatch),
3 numerical failure, 64 usage error, 66 missing input file.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import DampingParameter, GraphFunction, StateVector, TadpoleGeometry, as_damping, norm_H
from .errors import NearSpectrumError, ParameterError, SchemeFailureError, StabilityError, TadpoleError
from .manufactured import random_vertex_function
from .resolvent import estimate_function, resolvent_apply
from .riesz import frame_bounds, gram_matrix
from .roots import Rectangle
from .simulator import (
    DampedEigenfunction,
    EmbeddedEigenfunction,
    GaussianPulse,
    SimulationConfig,
    check_energy_identity,
    fit_decay_rate,
    run,
)
from .spectrum import (
    char_det_minus,
    char_det_plus,
    damped_eigenvalues,
    embedded_eigenvalues,
    find_roots,
    spectral_abscissa,
)

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

ROOT_TOL = 1e-10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonneg(s: str) -> float:
    v = float(s)
    if not (math.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be a finite number >= 0, got {s}")
    return v


def _pos(s: str) -> float:
    v = float(s)
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be a finite number > 0, got {s}")
    return v


def _posint(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be an integer >= 1, got {s}")
    return v


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "0+unknown"


def fmt(x) -> str:
    """17 significant digits, fixed across platforms."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    _write_text(path, buf.getvalue())


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _write_json(path: str, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


@dataclass
class RunManifest:
    command: str
    params: dict
    outputs: list = field(default_factory=list)
    timestamp: str = ""
    tool_version: str = ""

    def finalize(self) -> dict:
        for p in self.outputs:
            if not (os.path.isfile(p) and os.path.getsize(p) > 0):
                raise TadpoleError(f"output {p} missing or empty")
        self.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat()
        self.tool_version = _version()
        return asdict(self)


def _record(manifest: RunManifest, path: str) -> None:
    if path != "-":
        manifest.outputs.append(path)


# -- spectrum --------------------------------------------------------------


def cmd_spectrum(args, manifest: RunManifest) -> int:
    a = as_damping(args.alpha)
    L = args.length
    emb = embedded_eigenvalues(L, args.n_min, args.n_max)
    dmp = damped_eigenvalues(a, L, args.n_min, args.n_max)
    header = ["n", "kind", "re_z", "im_z", "det_residual"]
    rows = []
    for ev in emb:
        rows.append([ev.n, "embedded", ev.z.real, ev.z.imag, abs(char_det_plus(ev.z, a, L, form="matrix"))])
    status = EXIT_OK
    found = None
    if args.verify_roots and dmp:
        s = spectral_abscissa(a, L)
        pad = math.pi / L
        region = Rectangle(
            min(-6.0, s - 1.0),
            -0.01 if s < -0.01 else 0.5 * s,
            min(ev.z.imag for ev in dmp) - pad,
            max(ev.z.imag for ev in dmp) + pad,
        )
        found = find_roots(a, L, region, tol=1e-12)
        if len(found) != len(dmp):
            status = EXIT_DOMAIN
    for ev in dmp:
        if found is not None:
            near = min(found, key=lambda w: abs(w - ev.z), default=None)
            dist = math.inf if near is None else abs(near - ev.z)
            if dist > ROOT_TOL:
                status = EXIT_DOMAIN
            res = abs(char_det_minus(near, a, L, form="matrix")) if near is not None else math.inf
            rows.append([ev.n, "damped", ev.z.real, ev.z.imag, res])
        else:
            rows.append([ev.n, "damped", ev.z.real, ev.z.imag, abs(char_det_minus(ev.z, a, L, form="matrix"))])
    if args.verify_roots and not dmp:
        region = Rectangle(-6.0, -0.01, -(abs(args.n_min) + 1) * 2 * math.pi / L, (abs(args.n_max) + 1) * 2 * math.pi / L)
        if find_roots(a, L, region):
            status = EXIT_DOMAIN
    write_csv(args.output, header, rows)
    _record(manifest, args.output)
    if status == EXIT_DOMAIN:
        print("closed-form eigenvalues and root finder disagree", file=sys.stderr)
    return status


# -- resolvent -------------------------------------------------------------


def cmd_resolvent(args, manifest: RunManifest) -> int:
    a = as_damping(args.alpha)
    L = args.length
    if args.re_max >= 0:
        raise UsageError("--re-max must be < 0")
    geo = TadpoleGeometry.uniform(L, args.halfline, args.h)
    rng = np.random.default_rng(args.seed)
    f1, f2 = random_vertex_function(rng, L)
    h1, h2 = random_vertex_function(rng, L)
    F = StateVector(
        GraphFunction(geo, f1(geo.x1), f2(geo.x2), f1(geo.x1, 1), f2(geo.x2, 1)),
        GraphFunction(geo, h1(geo.x1), h2(geo.x2)),
    )
    res = np.linspace(args.re_min, args.re_max, args.n_re)
    ims = np.linspace(args.im_min, args.im_max, args.n_im)
    rows = []
    for x in res:
        for y in ims:
            z = complex(x, y)
            H = estimate_function(z, a, L)
            try:
                sol = resolvent_apply(z, a, F)
                rows.append([x, y, H, norm_H(sol.state), sol.residual_pde, sol.residual_transmission])
            except NearSpectrumError:
                rows.append([x, y, H, math.nan, math.nan, math.nan])
    write_csv(args.output, ["re_z", "im_z", "H_alpha", "solution_norm", "residual_pde", "residual_transmission"], rows)
    _record(manifest, args.output)
    return EXIT_OK


# -- simulate --------------------------------------------------------------


def _parse_init(text: str):
    kind, _, rest = text.partition(":")
    if kind == "damped":
        return DampedEigenfunction(int(rest or 0))
    if kind == "embedded":
        return EmbeddedEigenfunction(int(rest or 1))
    if kind == "pulse":
        parts = rest.split(",")
        if len(parts) < 2:
            raise UsageError("pulse needs center,width[,edge[,direction]]")
        return GaussianPulse(float(parts[0]), float(parts[1]), *(parts[2:4]))
    raise UsageError(f"unknown --init {text!r}")


def _simulation_config(args) -> SimulationConfig:
    if args.config:
        if not os.path.isfile(args.config):
            raise FileNotFoundError(args.config)
        try:
            with open(args.config) as fh:
                data = json.load(fh)
            return SimulationConfig.from_dict(data)
        except (json.JSONDecodeError, KeyError, TypeError) as err:
            raise UsageError(f"invalid config: {err}") from err
    if args.alpha is None or args.length is None:
        raise UsageError("give --config or both --alpha and --length")
    return SimulationConfig.default(
        args.alpha, args.length, args.h, args.t_final, _parse_init(args.init),
        cfl=args.cfl, record_stride=args.stride,
    )


def simulation_summary(cfg: SimulationConfig, trace, fit_start=None, fit_end=None) -> dict:
    t0 = cfg.t_final / 6.0 if fit_start is None else fit_start
    t1 = cfg.t_final if fit_end is None else fit_end
    try:
        omega = fit_decay_rate(trace, t0, t1)
    except TadpoleError:
        omega = None
    return {
        "alpha": cfg.alpha.alpha,
        "E0": float(trace.energies[0]),
        "E_final": float(trace.energies[-1]),
        "omega_est": omega,
        "energy_identity_deviation": check_energy_identity(trace),
    }


def cmd_simulate(args, manifest: RunManifest) -> int:
    cfg = _simulation_config(args)
    trace = run(cfg)
    rows = zip(trace.times, trace.energies, trace.dissipation, trace.vertex_velocity.real, trace.vertex_velocity.imag)
    write_csv(args.output, ["t", "E", "D", "vertex_velocity_re", "vertex_velocity_im"], rows)
    _record(manifest, args.output)
    summary = simulation_summary(cfg, trace, args.fit_start, args.fit_end)
    if args.summary:
        _write_json(args.summary, summary)
        _record(manifest, args.summary)
    else:
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_OK


# -- gram ------------------------------------------------------------------


def cmd_gram(args, manifest: RunManifest) -> int:
    a = as_damping(args.alpha)
    if not a.has_damped_spectrum:
        print(f"alpha = {a.alpha}: no damped spectrum", file=sys.stderr)
        return EXIT_DOMAIN
    G = gram_matrix(a, args.length, args.N, h=args.h)
    idx = G.indices
    rows = [[int(n), int(m), G.entries[i, j].real, G.entries[i, j].imag]
            for i, n in enumerate(idx) for j, m in enumerate(idx)]
    write_csv(args.output, ["n", "m", "re", "im"], rows)
    _record(manifest, args.output)
    lo, hi = frame_bounds(G)
    gap = np.abs(idx[:, None] - idx[None, :])
    off = gap > 0
    worst = float(np.max(np.abs(G.entries[off]) * gap[off])) if off.any() else 0.0
    bounds = {"N": args.N, "A_lower": lo, "B_upper": hi, "max_offdiag_times_gap": worst}
    if args.bounds:
        _write_json(args.bounds, bounds)
        _record(manifest, args.bounds)
    else:
        print(json.dumps(bounds, sort_keys=True), file=sys.stderr)
    return EXIT_OK


# -- decay sweep -----------------------------------------------------------


def _sweep_one(job):
    alpha, L, h, t_final = job
    cfg = SimulationConfig.default(alpha, L, h, t_final, DampedEigenfunction(0))
    trace = run(cfg)
    omega = fit_decay_rate(trace, t_final / 6.0, t_final)
    exact = -spectral_abscissa(alpha, L)
    return alpha, exact, omega, abs(omega - exact) / exact, check_energy_identity(trace)


def sweep_workers() -> int:
    try:
        return max(1, int(os.environ.get("TADPOLE_THREADS", "1")))
    except ValueError:
        return 1


def cmd_decay_sweep(args, manifest: RunManifest) -> int:
    alphas = [float(s) for s in args.alphas.split(",") if s.strip()]
    bad = [x for x in alphas if not DampingParameter(x).has_damped_spectrum]
    if bad:
        print(f"no damped spectrum for alpha in {bad}", file=sys.stderr)
        return EXIT_DOMAIN
    jobs = [(x, args.length, args.h, args.t_final) for x in alphas]
    n = sweep_workers()
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    write_csv(args.output, ["alpha", "omega_exact", "omega_est", "rel_error", "energy_identity_deviation"], results)
    _record(manifest, args.output)
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tadpole", description="Damped wave operator on the tadpole graph.")
    p.add_argument("--version", action="version", version=_version())
    p.add_argument("--manifest", help="write a JSON run manifest to this path")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser(
        "spectrum",
        help="eigenvalue table",
        description="Point spectrum: embedded eigenvalues 2*pi*i*n/L and damped eigenvalues "
        "solving e^{zL} = (3-alpha)/(1+alpha), optionally cross-checked by the argument-principle root finder.",
    )
    s.add_argument("--alpha", type=_nonneg, required=True)
    s.add_argument("--length", type=_pos, required=True)
    s.add_argument("--n-min", type=int, default=-2)
    s.add_argument("--n-max", type=int, default=2)
    s.add_argument("--verify-roots", action="store_true")
    s.add_argument("--output", default="-")
    s.set_defaults(func=cmd_spectrum)

    r = sub.add_parser(
        "resolvent",
        help="resolvent sweep over a z-grid",
        description="Explicit left half-plane resolvent (Green-kernel convolutions plus a 3x3 vertex solve) "
        "applied to a fixed random datum on a grid of z, with the estimate function H_alpha(z).",
    )
    r.add_argument("--alpha", type=_nonneg, required=True)
    r.add_argument("--length", type=_pos, required=True)
    r.add_argument("--re-min", type=float, default=-3.0)
    r.add_argument("--re-max", type=float, default=-0.5)
    r.add_argument("--im-min", type=float, default=-5.0)
    r.add_argument("--im-max", type=float, default=5.0)
    r.add_argument("--n-re", type=_posint, default=6)
    r.add_argument("--n-im", type=_posint, default=6)
    r.add_argument("--h", type=_pos, default=1e-2)
    r.add_argument("--halfline", type=_pos, default=30.0, help="half-line truncation R_max")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--output", default="-")
    r.set_defaults(func=cmd_resolvent)

    m = sub.add_parser(
        "simulate",
        help="time-domain energy trace",
        description="Leapfrog simulation of the damped wave equation with the energy identity "
        "2E(t) - 2E(0) = -2 alpha int |u_t(0)|^2 and the optimal decay rate -Re z.",
    )
    m.add_argument("--config", help="JSON file mirroring SimulationConfig")
    m.add_argument("--alpha", type=_nonneg)
    m.add_argument("--length", type=_pos)
    m.add_argument("--h", type=_pos, default=1e-2)
    m.add_argument("--t-final", type=_pos, default=3.0)
    m.add_argument("--cfl", type=_pos, default=0.5)
    m.add_argument("--stride", type=_posint, default=10)
    m.add_argument("--init", default="damped:0", help="damped:N, embedded:N or pulse:center,width[,edge[,direction]]")
    m.add_argument("--fit-start", type=float)
    m.add_argument("--fit-end", type=float)
    m.add_argument("--output", default="-")
    m.add_argument("--summary", help="JSON summary path (default: stderr)")
    m.set_defaults(func=cmd_simulate)

    g = sub.add_parser(
        "gram",
        help="Gram matrix and frame bounds",
        description="Gram matrix of normalized damped eigenfunctions and its extreme eigenvalues "
        "(Riesz-basis frame bounds).",
    )
    g.add_argument("--alpha", type=_nonneg, required=True)
    g.add_argument("--length", type=_pos, required=True)
    g.add_argument("--N", type=int, default=16)
    g.add_argument("--h", type=_pos, default=1e-3)
    g.add_argument("--output", default="-")
    g.add_argument("--bounds", help="JSON frame-bound path (default: stderr)")
    g.set_defaults(func=cmd_gram)

    d = sub.add_parser(
        "decay-sweep",
        help="decay rate over several alpha",
        description="Fitted energy decay rate against the spectral abscissa for eigenfunction data, "
        "one independent run per alpha (TADPOLE_THREADS workers).",
    )
    d.add_argument("--alphas", default="1.5,2,2.5,3.5,5")
    d.add_argument("--length", type=_pos, default=1.0)
    d.add_argument("--h", type=_pos, default=1e-2)
    d.add_argument("--t-final", type=_pos, default=2.0)
    d.add_argument("--output", default="-")
    d.set_defaults(func=cmd_decay_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "N", 0) is not None and getattr(args, "N", 0) < 0:
        parser.error("--N must be >= 0")
    params = {k: v for k, v in vars(args).items() if k not in ("func", "manifest")}
    manifest = RunManifest(args.command, params)
    try:
        code = args.func(args, manifest)
    except UsageError as err:
        parser.error(str(err))
    except FileNotFoundError as err:
        print(f"tadpole: no such file: {err}", file=sys.stderr)
        return EXIT_NOINPUT
    except (ParameterError, ValueError) as err:
        print(f"tadpole: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemeFailureError, StabilityError, TadpoleError) as err:
        print(f"tadpole: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    if args.manifest and code == EXIT_OK:
        _write_json(args.manifest, manifest.finalize())
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
