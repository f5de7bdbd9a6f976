"""Command-line front end.

Every subcommand reads an optional JSON run config (``--config``),
applies flag overrides, runs one computation, and writes deterministic
data files named ``<command>-<content-hash>.<ext>`` plus a
``manifest.json`` into the output directory.  Exit codes: 0 success,
2 configuration error, 3 numerical failure.

Thread caps (``--threads`` or the DICEHALDANE_THREADS environment
variable) are applied before the numerical libraries load, so they take
effect on the BLAS pools.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
import time

COMMANDS = ("bands", "ep-scan", "rigidity", "phase-diagram", "chern",
            "ribbon-bands", "ldos", "ipr-sweep", "spectral-area", "winding",
            "disorder-sweep")

PARAM_KEYS = ("t", "t2", "phi", "m", "delta", "gamma")
NAMED_POINTS = ("G", "Gamma", "K", "K'", "M")


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def parse_angle(text: str) -> float:
    """Float parser that also accepts multiples of pi like 'pi/2',
    '-2pi/3', or '0.5*pi'."""
    text = str(text).strip().replace(" ", "")
    try:
        return float(text)
    except ValueError:
        pass
    m = re.fullmatch(r"(-?)(\d+(?:\.\d+)?)?\*?pi(?:/(\d+(?:\.\d+)?))?", text)
    if not m:
        raise ConfigError(f"cannot parse angle {text!r}")
    sign = -1.0 if m.group(1) else 1.0
    num = float(m.group(2)) if m.group(2) else 1.0
    den = float(m.group(3)) if m.group(3) else 1.0
    return sign * num * math.pi / den


def _named_point(name: str):
    from .model import GAMMA_POINT, K_POINT, K_PRIME_POINT, M_POINT, MomentumPoint
    table = {"G": GAMMA_POINT, "Gamma": GAMMA_POINT, "K": K_POINT,
             "K'": K_PRIME_POINT, "M": M_POINT}
    if name in table:
        return table[name]
    parts = name.split(",")
    if len(parts) == 2:
        try:
            return MomentumPoint(float(parts[0]), float(parts[1]))
        except ValueError:
            pass
    raise ConfigError(f"unknown momentum point {name!r}")


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _merge(args, cfg, option_keys):
    """Flag value if given, else config value, else parser default.
    Unknown config keys are rejected."""
    allowed = set(option_keys) | {"params", "command", "output_dir", "seed"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {}
    for key in option_keys:
        flag_val = getattr(args, key.replace("-", "_"), None)
        merged[key] = flag_val if flag_val is not None else cfg.get(key)
    return merged


def _model_params(args, cfg):
    from .model import ModelParams, T_DEFAULT
    raw = dict(cfg.get("params", {}))
    unknown = set(raw) - set(PARAM_KEYS)
    if unknown:
        raise ConfigError(f"unknown model parameter keys: {sorted(unknown)}")
    for key in PARAM_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            raw[key] = flag
    if "phi" in raw:
        raw["phi"] = parse_angle(raw["phi"])
    for key, val in raw.items():
        if isinstance(val, str):
            raw[key] = float(val)
    raw.setdefault("t", T_DEFAULT)
    try:
        return ModelParams(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_output(outdir, command, payload: str, ext: str):
    os.makedirs(outdir, exist_ok=True)
    digest = hashlib.sha256(payload.encode()).hexdigest()[:12]
    name = f"{command}-{digest}.{ext}"
    path = os.path.join(outdir, name)
    with open(path, "w") as fh:
        fh.write(payload)
    return name


def _json_payload(obj) -> str:
    def default(o):
        import numpy as np
        if isinstance(o, complex) or isinstance(o, getattr(np, "complexfloating", ())):
            return {"re": float(o.real), "im": float(o.imag)}
        if hasattr(o, "tolist"):
            return o.tolist()
        return str(o)
    return json.dumps(obj, sort_keys=True, indent=1, default=default) + "\n"


def _csv_payload(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _cmd_bands(args, cfg, p):
    from .model import KPath, bands_csv, bands_on_path
    opts = _merge(args, cfg, ("path", "samples"))
    path_text = opts["path"] or "G,K,M,K',G"
    samples = int(opts["samples"] or 200)
    sep = ";" if ";" in path_text else ","
    points = [_named_point(s.strip()) for s in path_text.split(sep) if s.strip()]
    path = KPath(tuple(points), samples_per_segment=samples)
    payload = bands_csv(bands_on_path(p, path))
    return [(payload, "csv")], {"path": path_text, "samples": samples}


def _cmd_ep_scan(args, cfg, p):
    import numpy as np
    from .errors import NoEPInBracket
    from .model import bloch_hamiltonian
    from .spectra import find_ep, min_rigidity
    opts = _merge(args, cfg, ("k", "param", "start", "stop", "samples"))
    k = _named_point(opts["k"] or "M")
    kind = opts["param"] or "delta"
    start = float(opts["start"] if opts["start"] is not None else 0.0)
    stop = float(opts["stop"] if opts["stop"] is not None else 2.0)
    samples = int(opts["samples"] or 100)
    values = np.linspace(start, stop, samples)
    rigs = []
    for v in values:
        q = p.replace(**{kind: float(v)})
        rigs.append(min_rigidity(bloch_hamiltonian(q, k)))
    rigs = np.array(rigs)
    result = {"param": kind,
              "values": [float(v) for v in values],
              "min_rigidity": [float(r) for r in rigs]}
    i = int(np.argmin(rigs))
    lo = values[max(i - 1, 0)]
    hi = values[min(i + 1, samples - 1)]
    try:
        ep_value, order = find_ep(p, k, kind, (float(lo), float(hi)))
        result["ep"] = {"value": ep_value, "order": order}
    except NoEPInBracket:
        result["ep"] = None
    return [(_json_payload(result), "json")], {
        "k": opts["k"] or "M", "param": kind, "start": start, "stop": stop,
        "samples": samples}


def _cmd_rigidity(args, cfg, p):
    from .spectra import rigidity_scaling_fit
    opts = _merge(args, cfg, ("k", "param", "ep-value", "samples"))
    k = _named_point(opts["k"] or "M")
    kind = opts["param"] or "delta"
    if opts["ep-value"] is None:
        raise ConfigError("rigidity requires an ep-value")
    ep_value = float(opts["ep-value"])
    samples = int(opts["samples"] or 40)
    slope, stderr = rigidity_scaling_fit(p, k, kind, ep_value,
                                         n_samples=samples)
    order = int(round(2.0 * slope + 1.0))
    result = {"slope": slope, "stderr": stderr, "order": order,
              "ep_value": ep_value, "param": kind}
    return [(_json_payload(result), "json")], {
        "k": opts["k"] or "M", "param": kind, "ep-value": ep_value,
        "samples": samples}


def _cmd_phase_diagram(args, cfg, p):
    from .ep import ep_phase_diagram
    opts = _merge(args, cfg, ("k", "delta-min", "delta-max", "ratio-min",
                              "ratio-max", "resolution"))
    k = _named_point(opts["k"] or "M")
    d_lo = float(opts["delta-min"] if opts["delta-min"] is not None else 0.0)
    d_hi = float(opts["delta-max"] if opts["delta-max"] is not None else 2.0)
    r_lo = float(opts["ratio-min"] if opts["ratio-min"] is not None else 0.0)
    r_hi = float(opts["ratio-max"] if opts["ratio-max"] is not None else 6.0)
    res = int(opts["resolution"] or 40)
    grid = ep_phase_diagram(k, (d_lo, d_hi), (r_lo, r_hi), p.t2, p.phi,
                            resolution=(res, res), t=p.t)
    rows = []
    for i, d in enumerate(grid.delta_axis):
        for j, r in enumerate(grid.mass_ratio_axis):
            rows.append((float(d), float(r), float(grid.rigidity[i, j])))
    payload = _csv_payload(("delta", "mass_ratio", "rigidity"), rows)
    return [(payload, "csv")], {"k": opts["k"] or "M",
                                "delta-min": d_lo, "delta-max": d_hi,
                                "ratio-min": r_lo, "ratio-max": r_hi,
                                "resolution": res}


def _cmd_chern(args, cfg, p):
    from .ep import chern_number
    opts = _merge(args, cfg, ("grid-n",))
    grid_n = int(opts["grid-n"] or 48)
    result = {"chern": [chern_number(p, band, grid_n) for band in range(3)],
              "grid_n": grid_n}
    return [(_json_payload(result), "json")], {"grid-n": grid_n}


def _cmd_ribbon_bands(args, cfg, p):
    from .ribbon import ribbon_bands_kx
    opts = _merge(args, cfg, ("ny", "n-k"))
    ny = int(opts["ny"] or 24)
    n_k = int(opts["n-k"] or 101)
    kxs, energies = ribbon_bands_kx(p, ny, n_k)
    rows = []
    for i, kx in enumerate(kxs):
        for j, e in enumerate(energies[i]):
            rows.append((float(kx), j, float(e.real), float(e.imag)))
    payload = _csv_payload(("kx", "index", "reE", "imE"), rows)
    return [(payload, "csv")], {"ny": ny, "n-k": n_k}


def _geometry_and_disorder(args, cfg):
    from .ribbon import DisorderSpec, RibbonGeometry
    opts = _merge(args, cfg, ("nx", "ny", "bc-x", "bc-y", "region",
                              "disorder-strength", "disorder-kind",
                              "x-edge", "n-realizations"))
    nx = int(opts["nx"] or 24)
    ny = int(opts["ny"] or 12)
    geom = RibbonGeometry(nx=nx, ny=ny, bc_x=opts["bc-x"] or "open",
                          bc_y=opts["bc-y"] or "open")
    region = opts["region"] or "bulk"
    strength = float(opts["disorder-strength"] or 0.0)
    seed = int(cfg.get("seed", getattr(args, "seed", None) or 0))
    dis = None
    if strength > 0.0:
        dis = DisorderSpec(strength=strength,
                           kind=opts["disorder-kind"] or "real", seed=seed)
    x_edge = int(opts["x-edge"] or 5)
    n_real = int(opts["n-realizations"] or 100)
    meta = {"nx": nx, "ny": ny, "bc-x": geom.bc_x, "bc-y": geom.bc_y,
            "region": region, "disorder-strength": strength,
            "disorder-kind": dis.kind if dis else None, "seed": seed,
            "x-edge": x_edge, "n-realizations": n_real}
    return geom, dis, region, x_edge, n_real, meta


def _cmd_ldos(args, cfg, p):
    from .nhse import skin_diagnostics
    geom, dis, region, x_edge, _, meta = _geometry_and_disorder(args, cfg)
    diag = skin_diagnostics(geom, p, dis, region, x_edge)
    rows = []
    for sid, subl, x, y in geom.site_table():
        rows.append((sid, subl, x, y, float(diag.ldos[sid])))
    payload = _csv_payload(("id", "sublattice", "x", "y", "ldos"), rows)
    return [(payload, "csv")], meta


def _cmd_ipr_sweep(args, cfg, p):
    from .nhse import skin_diagnostics
    geom, dis, region, x_edge, _, meta = _geometry_and_disorder(args, cfg)
    diag = skin_diagnostics(geom, p, dis, region, x_edge)
    rows = [(i, float(e.real), float(e.imag), float(diag.ipr[i]),
             float(diag.edge_prob[i]))
            for i, e in enumerate(diag.energies)]
    payload = _csv_payload(("state", "reE", "imE", "ipr", "edge_prob"), rows)
    return [(payload, "csv")], meta


def _cmd_spectral_area(args, cfg, p):
    from .nhse import spectral_area, torus_spectrum
    opts = _merge(args, cfg, ("mesh-n", "resolution", "min-pixels"))
    mesh_n = int(opts["mesh-n"] or 120)
    resolution = int(opts["resolution"] or 512)
    min_pixels = int(opts["min-pixels"] or 16)
    result = spectral_area(torus_spectrum(p, mesh_n), resolution, min_pixels)
    payload = _json_payload({
        "area": result.area, "occupied_pixels": result.occupied_pixels,
        "interior_pixels": result.interior_pixels,
        "resolution": result.resolution,
        "bounding_box": list(result.bounding_box), "mesh_n": mesh_n})
    return [(payload, "json")], {"mesh-n": mesh_n, "resolution": resolution,
                                 "min-pixels": min_pixels}


def _cmd_winding(args, cfg, p):
    from .nhse import spectral_winding, winding_report
    opts = _merge(args, cfg, ("geometry", "n-open", "n-k", "e-ref-re",
                              "e-ref-im"))
    geometry = opts["geometry"] or "pbc_y_obc_x"
    n_open = int(opts["n-open"] or 24)
    n_k = int(opts["n-k"] or 600)
    if opts["e-ref-re"] is not None or opts["e-ref-im"] is not None:
        e_ref = complex(float(opts["e-ref-re"] or 0.0),
                        float(opts["e-ref-im"] or 0.0))
        w = spectral_winding(p, geometry, e_ref, n_k=n_k, n_open=n_open)
        result = {"geometry": geometry, "e_ref": e_ref, "winding": w, "W": abs(w)}
    else:
        result = winding_report(p, geometry, n_open=n_open, n_k=n_k)
        result["geometry"] = geometry
    return [(_json_payload(result), "json")], {
        "geometry": geometry, "n-open": n_open, "n-k": n_k,
        "e-ref-re": opts["e-ref-re"], "e-ref-im": opts["e-ref-im"]}


def _cmd_disorder_sweep(args, cfg, p):
    import numpy as np
    from .nhse import disorder_sweep
    from .ribbon import DisorderSpec
    geom, dis, region, x_edge, n_real, meta = _geometry_and_disorder(args, cfg)
    if dis is None:
        dis = DisorderSpec(strength=0.0, kind="real",
                           seed=int(cfg.get("seed", getattr(args, "seed", None) or 0)))
    diag = disorder_sweep(geom, p, dis, n_real, region, x_edge)
    rows = [(i, float(e.real), float(e.imag), float(diag.ipr[i]),
             float(diag.edge_prob[i]))
            for i, e in enumerate(diag.energies)]
    state_csv = _csv_payload(("state", "reE", "imE", "ipr", "edge_prob"), rows)
    summary = _json_payload({
        "mean_edge_prob": float(np.mean(diag.edge_prob)),
        "median_ipr": float(np.median(diag.ipr)),
        "n_realizations": n_real})
    return [(state_csv, "csv"), (summary, "json")], meta


HANDLERS = {
    "bands": _cmd_bands,
    "ep-scan": _cmd_ep_scan,
    "rigidity": _cmd_rigidity,
    "phase-diagram": _cmd_phase_diagram,
    "chern": _cmd_chern,
    "ribbon-bands": _cmd_ribbon_bands,
    "ldos": _cmd_ldos,
    "ipr-sweep": _cmd_ipr_sweep,
    "spectral-area": _cmd_spectral_area,
    "winding": _cmd_winding,
    "disorder-sweep": _cmd_disorder_sweep,
}

COMMAND_OPTIONS = {
    "bands": ("path", "samples"),
    "ep-scan": ("k", "param", "start", "stop", "samples"),
    "rigidity": ("k", "param", "ep-value", "samples"),
    "phase-diagram": ("k", "delta-min", "delta-max", "ratio-min",
                      "ratio-max", "resolution"),
    "chern": ("grid-n",),
    "ribbon-bands": ("ny", "n-k"),
    "ldos": ("nx", "ny", "bc-x", "bc-y", "region", "disorder-strength",
             "disorder-kind", "x-edge", "n-realizations"),
    "ipr-sweep": ("nx", "ny", "bc-x", "bc-y", "region", "disorder-strength",
                  "disorder-kind", "x-edge", "n-realizations"),
    "spectral-area": ("mesh-n", "resolution", "min-pixels"),
    "winding": ("geometry", "n-open", "n-k", "e-ref-re", "e-ref-im"),
    "disorder-sweep": ("nx", "ny", "bc-x", "bc-y", "region",
                       "disorder-strength", "disorder-kind", "x-edge",
                       "n-realizations"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dicehaldane",
        description="Dice-Haldane lattice: exceptional points and the "
                    "non-Hermitian skin effect.")
    sub = parser.add_subparsers(dest="command")
    for command in COMMANDS:
        cp = sub.add_parser(command)
        cp.add_argument("--config", default=None)
        cp.add_argument("--output-dir", default=None)
        cp.add_argument("--threads", type=int, default=None)
        cp.add_argument("--seed", type=int, default=None)
        for key in PARAM_KEYS:
            cp.add_argument(f"--{key}", default=None)
        for key in COMMAND_OPTIONS[command]:
            cp.add_argument(f"--{key}", default=None,
                            dest=key.replace("-", "_"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    threads = args.threads or os.environ.get("DICEHALDANE_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
    try:
        cfg = _load_config(args.config)
        if "command" in cfg and cfg["command"] != args.command:
            raise ConfigError(
                f"config is for {cfg['command']!r}, not {args.command!r}")
        p = _model_params(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    outdir = args.output_dir or cfg.get("output_dir") or "."
    start = time.monotonic()
    try:
        outputs, options = HANDLERS[args.command](args, cfg, p)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        from .errors import DiceHaldaneError
        import numpy as np
        if isinstance(exc, (DiceHaldaneError, np.linalg.LinAlgError,
                            ValueError)):
            print(f"numerical failure: {exc}", file=sys.stderr)
            return 3
        raise
    elapsed = time.monotonic() - start
    from . import __version__
    names = [_write_output(outdir, args.command, payload, ext)
             for payload, ext in outputs]
    manifest = {
        "command": args.command,
        "version": __version__,
        "wall_time_s": elapsed,
        "params": {k: getattr(p, k) for k in PARAM_KEYS},
        "options": options,
        "outputs": names,
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    for name in names:
        print(os.path.join(outdir, name))
    return 0


if __name__ == "__main__":
    sys.exit(main())
