"""Command-line front end: reproducible CSV/JSON pipelines over the engine.

Every output embeds the fully resolved configuration and the engine version
as a header, numbers are printed with 12 significant digits, and rerunning
the same command yields byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .emitter import EmitterSpec, kerr_spec, spec_from_dict, superradiant_spec
from .modes import ExpMode, ladder_family
from .correlators import (
    CorrelatorCache,
    CorrelatorRequest,
    build_cache,
    correlator,
    fingerprint,
    overlap_amplitude,
    photon_number,
)
from .states import OccupationAmplitudes, build_basis, project, variance_sigma
from .interferometer import (
    cfi,
    cfi_details,
    lossy_distribution,
    noon_two_mode_arm,
    pure_qfi,
    qfi_from_occupations,
    twin_fock_arm,
    uniform_two_mode_arm,
)
from . import oracle


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Resolved invocation: subcommand plus everything it needs."""

    command: str
    spec: EmitterSpec | None = None
    D: int = 8
    d: int = 2
    omega0: float | None = None
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    occupation: list = field(default_factory=list)
    gamma: float | None = None
    omega: float = 0.0
    phi: float = 0.0
    eta: float = 1.0
    phi_grid: list = field(default_factory=list)
    eta_list: list = field(default_factory=list)
    granularity: str = "nr"
    state_a: str | None = None
    state_b: str | None = None
    preset_state: tuple | None = None
    cache_path: str | None = None
    save_state: str | None = None
    max_order: int = 2
    use_oracle: bool = False
    out: str | None = None
    fmt: str = "csv"
    jobs: int = 1
    max_photons: int = 12


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, complex):
        return f"{x.real:.12g}{x.imag:+.12g}j"
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def _resolved_config(cfg: RunConfig) -> dict:
    out = {"command": cfg.command, "version": __version__}
    if cfg.spec is not None:
        out["spec"] = cfg.spec.to_dict()
    for key in (
        "D", "d", "omega0", "gamma", "omega", "phi", "eta", "granularity",
        "phi_grid", "eta_list", "occupation", "max_order", "use_oracle", "fmt",
    ):
        val = getattr(cfg, key)
        if val not in (None, [], ()):
            out[key] = val
    if cfg.left:
        out["left"] = [[m.gamma, m.omega] for m in cfg.left]
    if cfg.right:
        out["right"] = [[m.gamma, m.omega] for m in cfg.right]
    if cfg.modes:
        out["modes"] = [[m.gamma, m.omega] for m in cfg.modes]
    if cfg.preset_state:
        out["state"] = list(cfg.preset_state)
    return out


def _emit(cfg: RunConfig, colnames, rows, extra_meta=None):
    """Write rows deterministically as CSV (comment header) or JSON."""
    meta = _resolved_config(cfg)
    if extra_meta:
        meta.update(extra_meta)
    if cfg.fmt == "csv":
        lines = [f"# wgfock {__version__}", f"# config: {json.dumps(meta, sort_keys=True)}"]
        lines.append(",".join(colnames))
        for row in rows:
            lines.append(",".join(_fmt(v) for v in row))
        text = "\n".join(lines) + "\n"
    else:
        payload = {"_meta": meta, "columns": list(colnames),
                   "rows": [[(v if isinstance(v, str) else _json_num(v)) for v in row] for row in rows]}
        text = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_num(v):
    if isinstance(v, complex):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (int, np.integer)):
        return int(v)
    return float(_fmt(v))  # round-trip through the 12-digit form for determinism


def _parse_modes(text: str) -> list:
    """'gamma:omega,gamma:omega,...' -> [ExpMode]"""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) == 1:
            out.append(ExpMode(float(bits[0]), 0.0))
        elif len(bits) == 2:
            out.append(ExpMode(float(bits[0]), float(bits[1])))
        else:
            raise ConfigError(f"cannot parse mode {part!r}; expected 'gamma[:omega]'")
    if not out:
        raise ConfigError("empty mode list")
    return out


def _parse_grid(text: str) -> list:
    """'start:stop:num[:log]' -> list of floats."""
    bits = text.split(":")
    if len(bits) not in (3, 4):
        raise ConfigError(f"grid spec {text!r} must be start:stop:num[:log]")
    start, stop, num = float(bits[0]), float(bits[1]), int(bits[2])
    if num < 1:
        raise ConfigError(f"grid needs at least one point, got {num}")
    if len(bits) == 4 and bits[3] == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError("log grid needs positive endpoints")
        return list(np.exp(np.linspace(math.log(start), math.log(stop), num)))
    return list(np.linspace(start, stop, num))


def _spec_from_args(args) -> EmitterSpec | None:
    if getattr(args, "spec_json", None):
        with open(args.spec_json) as fh:
            return spec_from_dict(json.load(fh))
    preset = getattr(args, "preset", None)
    if preset is None:
        return None
    if getattr(args, "N", None) is None:
        raise ConfigError("--preset requires --N")
    if preset == "superradiant":
        return superradiant_spec(args.N, args.Gamma1d, args.omega0)
    if preset == "kerr":
        return kerr_spec(args.N, args.Gamma1d, args.omega_a, args.U)
    raise ConfigError(f"unknown preset {preset!r}")


def _load_arm(cfg: RunConfig, which: str) -> OccupationAmplitudes:
    path = cfg.state_a if which == "a" else cfg.state_b
    if path:
        with open(path) as fh:
            # saved projections carry their fidelity as squared norm; the
            # interferometer input is the normalized state
            return OccupationAmplitudes.from_dict(json.load(fh)).normalized()
    if cfg.preset_state:
        kind, value = cfg.preset_state
        if kind == "twin-fock":
            return twin_fock_arm(int(value))
        if kind == "psi1":
            return uniform_two_mode_arm(int(value))
        if kind == "psi2":
            return noon_two_mode_arm(int(value))
        if kind == "twin-superradiant":
            N = int(value)
            if N % 2:
                raise ConfigError("twin superradiant input needs an even total photon number")
            spec = superradiant_spec(N // 2)
            basis = build_basis(spec, cfg.D)
            return project(spec, basis, cfg.d, max_photons=cfg.max_photons).normalized()
    raise ConfigError("no input state: use --state-a/--state-b, or a named preset state")


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _run_characterize(cfg: RunConfig):
    spec = cfg.spec
    basis = build_basis(spec, cfg.D, cfg.omega0)
    rows = []
    C = 0.0
    for k in range(min(cfg.d, basis.n_modes)):
        lam = float(basis.lambdas[k])
        C += lam / spec.N
        rows.append([k + 1, lam, C])
    _emit(cfg, ["d", "lambda_d", "C_d"], rows,
          {"n_deflated": basis.n_deflated, "orthonormality_defect": basis.defect})


def _run_ratios(cfg: RunConfig):
    spec = cfg.spec
    basis = build_basis(spec, cfg.D, cfg.omega0)
    csum = np.cumsum(basis.lambdas[: cfg.d]) / spec.N
    rows = [[k + 1, float(c)] for k, c in enumerate(csum)]
    _emit(cfg, ["d", "C_d"], rows)


def _run_photon_number(cfg: RunConfig):
    spec = cfg.spec
    if cfg.gamma is not None:
        grid = [cfg.gamma]
    elif cfg.phi_grid:
        grid = cfg.phi_grid  # reused as the gamma grid
    else:
        raise ConfigError("photon-number needs --gamma or --gamma-grid")
    rows = []
    for g in grid:
        mode = ExpMode(float(g), cfg.omega)
        val = photon_number(spec, mode)
        row = [g, cfg.omega, val]
        if cfg.use_oracle:
            ora = oracle.correlator_direct(CorrelatorRequest(spec, (mode,), (mode,)))
            ora = float(np.real(ora - 1.0))
            row += [ora, abs(val - ora)]
        rows.append(row)
    cols = ["gamma", "omega", "n"] + (["n_oracle", "abs_diff"] if cfg.use_oracle else [])
    _emit(cfg, cols, rows)


def _run_correlator(cfg: RunConfig):
    req = CorrelatorRequest(cfg.spec, tuple(cfg.left), tuple(cfg.right))
    val = correlator(req)
    rows = [[req.n, val.real, val.imag]]
    cols = ["n", "re", "im"]
    if cfg.use_oracle:
        ora = oracle.correlator_direct(req)
        rows[0] += [ora.real, ora.imag, abs(val - ora)]
        cols += ["re_oracle", "im_oracle", "abs_diff"]
    _emit(cfg, cols, rows)


def _run_overlap(cfg: RunConfig):
    spec = cfg.spec
    occ = tuple(int(k) for k in cfg.occupation)
    val = overlap_amplitude(spec, cfg.modes, occ)
    rows = [[";".join(map(str, occ)), val.real, val.imag]]
    cols = ["occupation", "re", "im"]
    if cfg.use_oracle:
        ora = oracle.overlap_direct(spec, cfg.modes, occ)
        rows[0] += [ora.real, ora.imag, abs(val - ora)]
        cols += ["re_oracle", "im_oracle", "abs_diff"]
    _emit(cfg, cols, rows)


def _run_variance(cfg: RunConfig):
    spec = cfg.spec
    basis = build_basis(spec, cfg.D, cfg.omega0)
    fp = fingerprint(spec, basis.base)
    cache = build_cache(spec, basis.base, max_order=2, cache_path=cfg.cache_path)
    rows = [[d, variance_sigma(spec, basis, d, cache)] for d in range(1, cfg.d + 1)]
    _emit(cfg, ["d", "sigma_n_d"], rows, {"cache_fingerprint": fp})


def _run_effective_state(cfg: RunConfig):
    spec = cfg.spec
    basis = build_basis(spec, cfg.D, cfg.omega0)
    state = project(spec, basis, cfg.d, max_photons=cfg.max_photons)
    if cfg.save_state:
        with open(cfg.save_state, "w") as fh:
            fh.write(state.to_json())
    rows = [
        [";".join(map(str, key)), amp.real, amp.imag, abs(amp) ** 2]
        for key, amp in state.sorted_items()
    ]
    _emit(cfg, ["occupation", "re", "im", "prob"], rows, {"fidelity": state.fidelity})


def _run_qfi(cfg: RunConfig):
    arm_a = _load_arm(cfg, "a")
    arm_b = _load_arm(cfg, "b") if cfg.state_b else arm_a
    q_formula = qfi_from_occupations(arm_a.occupations(), arm_b.occupations())
    q_pure = pure_qfi(arm_a, arm_b)
    _emit(cfg, ["qfi_occupations", "qfi_pure", "snl"],
          [[q_formula, q_pure, float(arm_a.N + arm_b.N)]])


def _run_cfi(cfg: RunConfig):
    arm_a = _load_arm(cfg, "a")
    arm_b = _load_arm(cfg, "b") if cfg.state_b else arm_a
    dist = lossy_distribution(arm_a, arm_b, cfg.phi, cfg.eta, cfg.granularity)
    res = cfi_details(dist)
    if res.dropped_mass:
        print(f"# dropped outcome mass below floor: {res.dropped_mass:.3e}", file=sys.stderr)
    _emit(cfg, ["phi", "eta", "granularity", "cfi", "qfi", "snl"],
          [[cfg.phi, cfg.eta, cfg.granularity, res.value,
            pure_qfi(arm_a, arm_b), float(arm_a.N + arm_b.N)]])


def _scan_point(payload):
    arm_a, arm_b, phi, eta, granularity = payload
    dist = lossy_distribution(arm_a, arm_b, phi, eta, granularity)
    return cfi(dist)


def _run_cfi_scan(cfg: RunConfig):
    arm_a = _load_arm(cfg, "a")
    arm_b = _load_arm(cfg, "b") if cfg.state_b else arm_a
    if not cfg.phi_grid or not cfg.eta_list:
        raise ConfigError("cfi-scan needs --phi-grid and --eta-list")
    q = pure_qfi(arm_a, arm_b)
    snl = float(arm_a.N + arm_b.N)
    points = [(arm_a, arm_b, float(p), float(e), cfg.granularity)
              for p in cfg.phi_grid for e in cfg.eta_list]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            values = list(pool.map(_scan_point, points))
    else:
        values = [_scan_point(p) for p in points]
    rows = [
        [pt[2], pt[3], cfg.granularity, val, q, snl] for pt, val in zip(points, values)
    ]
    _emit(cfg, ["phi", "eta", "granularity", "cfi", "qfi", "snl"], rows)


def _run_cache(cfg: RunConfig):
    if cfg.command == "cache-build":
        spec = cfg.spec
        base = cfg.modes or ladder_family(spec.N, cfg.D, cfg.omega0 if cfg.omega0 is not None else spec.omega[1])
        if cfg.cache_path is None:
            raise ConfigError("cache build needs --cache PATH")
        cache = build_cache(spec, base, max_order=cfg.max_order, cache_path=cfg.cache_path)
        _emit(cfg, ["fingerprint", "entries", "max_order"],
              [[cache.fp, cache.n_entries, cache.max_order]])
    else:
        cache = CorrelatorCache.load(cfg.cache_path)
        _emit(cfg, ["fingerprint", "entries", "max_order", "D"],
              [[cache.fp, cache.n_entries, cache.max_order, cache.D]])


_DISPATCH = {
    "characterize": _run_characterize,
    "ratios": _run_ratios,
    "photon-number": _run_photon_number,
    "correlator": _run_correlator,
    "overlap": _run_overlap,
    "variance": _run_variance,
    "effective-state": _run_effective_state,
    "qfi": _run_qfi,
    "cfi": _run_cfi,
    "cfi-scan": _run_cfi_scan,
    "cache-build": _run_cache,
    "cache-inspect": _run_cache,
}


def run(cfg: RunConfig) -> int:
    """Execute one resolved configuration; returns the process exit status."""
    import time

    t0 = time.monotonic()
    try:
        _DISPATCH[cfg.command](cfg)
        print(f"# {cfg.command}: {time.monotonic() - t0:.3f} s", file=sys.stderr)
        return 0
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


def _add_spec_args(p):
    p.add_argument("--spec-json", help="EmitterSpec JSON file")
    p.add_argument("--preset", choices=["superradiant", "kerr"])
    p.add_argument("--N", type=int)
    p.add_argument("--Gamma1d", type=float, default=1.0)
    p.add_argument("--omega0", type=float, default=0.0)
    p.add_argument("--omega-a", dest="omega_a", type=float, default=0.0)
    p.add_argument("--U", type=float, default=0.0)


def _add_out_args(p):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")


def _add_state_args(p):
    p.add_argument("--state-a", help="arm A occupation-amplitude JSON")
    p.add_argument("--state-b", help="arm B occupation-amplitude JSON")
    p.add_argument("--twin-fock", type=int, help="twin Fock input with this total photon number")
    p.add_argument("--psi1", type=int, help="uniform two-mode superposition with n photons per arm")
    p.add_argument("--psi2", type=int, help="two-mode bunched superposition with n photons per arm")
    p.add_argument("--twin-superradiant", type=int,
                   help="effective two-mode description of a twin emitted state, total N photons")
    p.add_argument("--D", type=int, default=8)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--max-photons", type=int, default=12)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wgfock",
        description="multimode emitted-photon states: correlators, modes, interferometry",
    )
    ap.add_argument("--version", action="version", version=f"wgfock {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("characterize", help="orthonormal-mode photon content table")
    _add_spec_args(p); _add_out_args(p)
    p.add_argument("--D", type=int, default=10)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--ladder-omega0", dest="ladder_omega0", type=float)

    p = sub.add_parser("ratios", help="cumulative photon fractions C_d")
    _add_spec_args(p); _add_out_args(p)
    p.add_argument("--D", type=int, default=10)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--ladder-omega0", dest="ladder_omega0", type=float)

    p = sub.add_parser("photon-number", help="mean photon number in one exponential mode")
    _add_spec_args(p); _add_out_args(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--gamma-grid", dest="gamma_grid", help="start:stop:num[:log]")
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--oracle", action="store_true")

    p = sub.add_parser("correlator", help="general n-pair correlator")
    _add_spec_args(p); _add_out_args(p)
    p.add_argument("--left", required=True, help="annihilator modes 'g:w,g:w,...'")
    p.add_argument("--right", required=True, help="creator modes 'g:w,g:w,...'")
    p.add_argument("--oracle", action="store_true")

    p = sub.add_parser("overlap", help="vacuum overlap against mode monomial")
    _add_spec_args(p); _add_out_args(p)
    p.add_argument("--modes", required=True, help="base modes 'g:w,...'")
    p.add_argument("--occ", required=True, help="occupation 'k1,k2,...'")
    p.add_argument("--oracle", action="store_true")

    p = sub.add_parser("variance", help="photon-count spread of the leading modes")
    _add_spec_args(p); _add_out_args(p)
    p.add_argument("--D", type=int, default=8)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--ladder-omega0", dest="ladder_omega0", type=float)
    p.add_argument("--cache", dest="cache_path")

    p = sub.add_parser("effective-state", help="occupation amplitudes in the leading modes")
    _add_spec_args(p); _add_out_args(p)
    p.add_argument("--D", type=int, default=8)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--ladder-omega0", dest="ladder_omega0", type=float)
    p.add_argument("--max-photons", type=int, default=12)
    p.add_argument("--save-state", dest="save_state",
                   help="also write the amplitudes as reusable arm-state JSON")

    p = sub.add_parser("qfi", help="quantum Fisher information of a two-arm input")
    _add_state_args(p); _add_out_args(p)

    p = sub.add_parser("cfi", help="classical Fisher information at one (phi, eta)")
    _add_state_args(p); _add_out_args(p)
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--granularity", choices=["mnr", "nr"], default="nr")

    p = sub.add_parser("cfi-scan", help="CFI over a (phi, eta) grid")
    _add_state_args(p); _add_out_args(p)
    p.add_argument("--phi-grid", dest="phi_grid", required=True, help="start:stop:num")
    p.add_argument("--eta-list", dest="eta_list", required=True, help="comma-separated")
    p.add_argument("--granularity", choices=["mnr", "nr"], default="nr")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("cache", help="build or inspect a correlator cache")
    cache_sub = p.add_subparsers(dest="cache_command", required=True)
    pb = cache_sub.add_parser("build")
    _add_spec_args(pb)
    _add_out_args(pb)
    pb.add_argument("--D", type=int, default=8)
    pb.add_argument("--ladder-omega0", dest="ladder_omega0", type=float)
    pb.add_argument("--modes", help="explicit base modes 'g:w,...'")
    pb.add_argument("--max-order", dest="max_order", type=int, default=2)
    pb.add_argument("--cache", dest="cache_path", required=True)
    pi = cache_sub.add_parser("inspect")
    _add_out_args(pi)
    pi.add_argument("cache_path")
    return ap


def config_from_args(args) -> RunConfig:
    command = args.command
    if command == "cache":
        command = f"cache-{args.cache_command}"
    cfg = RunConfig(command=command)
    cfg.spec = _spec_from_args(args)
    for name in ("D", "d", "phi", "eta", "granularity", "max_order", "jobs", "cache_path", "out", "fmt"):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "max_photons", None):
        cfg.max_photons = args.max_photons
    if getattr(args, "ladder_omega0", None) is not None:
        cfg.omega0 = args.ladder_omega0
    if getattr(args, "oracle", False):
        cfg.use_oracle = True
    if getattr(args, "gamma", None) is not None:
        cfg.gamma = args.gamma
    if getattr(args, "omega", None) is not None:
        cfg.omega = args.omega
    if getattr(args, "gamma_grid", None):
        cfg.phi_grid = _parse_grid(args.gamma_grid)
    if getattr(args, "phi_grid", None) and args.command == "cfi-scan":
        cfg.phi_grid = _parse_grid(args.phi_grid)
    if getattr(args, "eta_list", None):
        cfg.eta_list = [float(x) for x in args.eta_list.split(",")]
    if getattr(args, "left", None):
        cfg.left = _parse_modes(args.left)
    if getattr(args, "right", None):
        cfg.right = _parse_modes(args.right)
    if getattr(args, "modes", None):
        cfg.modes = _parse_modes(args.modes)
    if getattr(args, "occ", None):
        cfg.occupation = [int(x) for x in args.occ.split(",")]
    for name, key in (("twin_fock", "twin-fock"), ("psi1", "psi1"), ("psi2", "psi2"),
                      ("twin_superradiant", "twin-superradiant")):
        if getattr(args, name, None) is not None:
            cfg.preset_state = (key, getattr(args, name))
    if getattr(args, "save_state", None):
        cfg.save_state = args.save_state
    if getattr(args, "state_a", None):
        cfg.state_a = args.state_a
    if getattr(args, "state_b", None):
        cfg.state_b = args.state_b

    needs_spec = command in {
        "characterize", "ratios", "photon-number", "correlator", "overlap",
        "variance", "effective-state", "cache-build",
    }
    if needs_spec and cfg.spec is None:
        raise ConfigError(f"{command} needs an emitter: --spec-json or --preset ... --N ...")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
