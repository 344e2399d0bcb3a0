"""Experiment configuration, dispatch and artifact writing for the CLI.

A run is described by ``key: value`` pairs (config file and/or -p flags),
resolved against per-kind option tables with all defaults materialized.
Each run writes its resolved configuration, a manifest (seed, version,
wall time, warnings) and one or more data tables into the output
directory; identical configuration and seed reproduce the tables byte for
byte.
"""

from __future__ import annotations

import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .core import (
    ModelParams,
    TWO_PI,
    derive_constants,
    disorder,
    incoherent_packet,
    landau_packet_1d,
)
from .io import emit_table, write_json


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


_REQUIRED = object()

_MODEL_KEYS = {
    "Jx": (float, 1.0),
    "Jy": (float, 1.0),
    "alpha": (float, 0.0),
    "F": (float, 0.0),
    "eps": (float, 0.0),
    "seed": (int, 0),
}

_COMMON_KEYS = {
    "kind": (str, _REQUIRED),
    "out": (str, "out"),
    "format": (str, "csv"),
    "threads": (int, None),
}

_KIND_KEYS: dict[str, dict[str, tuple[type, object]]] = {
    "evolve1d": {
        "kappa": (float, 0.0),
        "t_end": (float, 50.0),
        "dt_max": (float, 0.05),
        "packet": (str, "landau"),
        "center": (int, 0),
        "sigma_x": (float, 20.0),
        "realization": (int, 0),
        "sample_dt": (float, 1.0),
        "density_samples": (int, 9),
    },
    "evolve2d": {
        "gauge": (str, "static"),
        "t_end": (float, 50.0),
        "dt_max": (float, 0.05),
        "sigma_x": (float, 10.0),
        "sigma_y": (float, 4.0),
        "realization": (int, 0),
        "sample_dt": (float, 1.0),
        "density_samples": (int, 9),
    },
    "spectrum": {
        "kappa_points": (int, 64),
        "window_half": (int, None),
        "kappa": (float, 0.1),
        "compare_harmonic": (bool, False),
        "extremum_site": (int, 0),
    },
    "transport": {
        "n_kappa": (int, 256),
        "detect": (str, "extremum"),
        "extremum_site": (int, 0),
        "extremum_kind": (str, "min"),
        "slope_min": (float, -0.6),
        "slope_max": (float, 0.6),
        "family_index": (int, 0),
        "duration": (float, None),
        "window_half": (int, None),
    },
    "classical-map": {
        "n_periods": (int, 200),
        "seeds_per_axis": (int, 16),
        "strobe_period": (float, None),
        "dt": (float, None),
        "probe_island": (bool, True),
    },
    "ensemble": {
        "dim": (int, 1),
        "sigma_x": (float, 20.0),
        "sigma_y": (float, 4.0),
        "kappa": (float, 0.0),
        "t_end": (float, 200.0),
        "n_phase": (int, 32),
        "n_disorder": (int, 8),
        "dt_max": (float, 0.1),
        "sample_dt": (float, 2.0),
        "gauge": (str, "static"),
        "density_samples": (int, 9),
        "fit_time": (float, None),
        "keep_final_2d": (bool, False),
    },
    "compare": {
        "sigma_x": (float, 20.0),
        "sigma_y": (float, 4.0),
        "kappa": (float, 0.0),
        "t_end": (float, 200.0),
        "n_phase": (int, 16),
        "n_disorder": (int, 4),
        "dt_max": (float, 0.1),
        "sample_dt": (float, 2.0),
        "gauge": (str, "static"),
        "density_samples": (int, 5),
        "n_boot": (int, 4000),
    },
}

KINDS = tuple(_KIND_KEYS)


@dataclass
class ExperimentConfig:
    """Fully resolved experiment description."""

    kind: str
    params: ModelParams
    options: dict
    out: str
    fmt: str
    threads: int | None
    warnings: list[str] = field(default_factory=list)

    def resolved_items(self) -> list[tuple[str, object]]:
        items = {
            "kind": self.kind,
            "Jx": self.params.Jx,
            "Jy": self.params.Jy,
            "alpha": self.params.alpha,
            "F": self.params.F,
            "eps": self.params.eps,
            "seed": self.params.seed,
            "format": self.fmt,
            "out": self.out,
        }
        items.update(self.options)
        return sorted(items.items())


def _convert(key: str, typ: type, raw, where: str):
    if raw is None or (isinstance(raw, str) and raw.lower() in ("none", "")):
        return None
    if isinstance(raw, typ) and not (typ is int and isinstance(raw, bool)):
        return raw
    s = str(raw).strip()
    try:
        if typ is bool:
            if s.lower() in ("true", "1", "yes"):
                return True
            if s.lower() in ("false", "0", "no"):
                return False
            raise ValueError(s)
        if typ is int:
            return int(s)
        if typ is float:
            return float(s)
        return s
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {key}={raw!r} as {typ.__name__}") from exc


def parse_config_text(text: str) -> dict[str, tuple[str, str]]:
    """Parse ``key: value`` lines; returns {key: (raw_value, where)}."""
    out: dict[str, tuple[str, str]] = {}
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        sep = ":" if ":" in stripped else ("=" if "=" in stripped else None)
        if sep is None:
            raise ConfigError(f"line {ln}: expected 'key: value', got {line.strip()!r}")
        key, _, value = stripped.partition(sep)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"line {ln}: expected 'key: value', got {line.strip()!r}")
        out[key] = (value, f"line {ln}")
    return out


def parse_config(
    text: str | None = None, overrides: dict | None = None
) -> ExperimentConfig:
    """Resolve a configuration from file text plus overriding flag values.

    Unknown keys are rejected; every default is materialized. alpha outside
    (-1/2, 1/2] is accepted, reduced, and noted in the warnings list.
    """
    raw: dict[str, tuple[object, str]] = {}
    if text is not None:
        raw.update(parse_config_text(text))
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = (v, "flag")
    if "kind" not in raw:
        raise ConfigError("missing required key 'kind'")
    kind = str(raw["kind"][0])
    if kind not in _KIND_KEYS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    tables = {**_MODEL_KEYS, **_COMMON_KEYS, **_KIND_KEYS[kind]}
    for key, (_, where) in raw.items():
        if key not in tables:
            raise ConfigError(f"{where}: unknown key {key!r} for kind {kind!r}")
    values: dict[str, object] = {}
    for key, (typ, default) in tables.items():
        if key in raw:
            values[key] = _convert(key, typ, raw[key][0], raw[key][1])
        elif default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        else:
            values[key] = default
    warnings: list[str] = []
    alpha_in = float(values["alpha"])
    try:
        params = ModelParams(
            Jx=float(values["Jx"]),
            Jy=float(values["Jy"]),
            alpha=alpha_in,
            F=float(values["F"]),
            eps=float(values["eps"]),
            seed=int(values["seed"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if params.alpha != alpha_in:
        warnings.append(f"alpha reduced from {alpha_in} to {params.alpha}")
    out_dir = values["out"] or os.environ.get("LATTICEDRIFT_OUT", "out")
    fmt = str(values["format"])
    if fmt not in ("csv", "ndjson"):
        raise ConfigError(f"format must be csv or ndjson, got {fmt!r}")
    options = {k: values[k] for k in _KIND_KEYS[kind]}
    return ExperimentConfig(
        kind=kind,
        params=params,
        options=options,
        out=str(out_dir),
        fmt=fmt,
        threads=values["threads"],
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# dispatch


def _density_sample_indices(n_times: int, wanted: int) -> np.ndarray:
    wanted = max(1, min(wanted, n_times))
    return np.unique(np.round(np.linspace(0, n_times - 1, wanted)).astype(int))


def _series_rows(series) -> list[tuple]:
    return [
        (
            float(series.times[i]),
            float(series.sigma[i]),
            float(series.sigma_centered[i]),
            float(series.mean_x[i]),
            float(series.edge_norm[i]),
        )
        for i in range(series.times.size)
    ]


_SERIES_HEADER = ("t", "sigma", "sigma_centered", "mean_x", "edge_norm")


def _run_evolve1d(cfg: ExperimentConfig, outdir: str) -> list[str]:
    from .propagate import PropagationConfig, evolve_1d

    o = cfg.options
    p = cfg.params
    if o["packet"] == "landau":
        b = landau_packet_1d(p, center_l=o["center"])
    elif o["packet"] == "incoherent":
        b = incoherent_packet(p, o["sigma_x"], None, o["realization"])
    else:
        raise ConfigError(f"unknown packet {o['packet']!r}")
    dis = disorder(p, o["realization"], ndim=1) if p.eps > 0 else None
    n_steps = max(1, math.ceil(o["t_end"] / o["dt_max"]))
    stride = max(1, round(o["sample_dt"] / (o["t_end"] / n_steps)))
    pcfg = PropagationConfig(
        t_end=o["t_end"], dt_max=o["dt_max"], observer_stride=stride
    )
    rows: list[tuple[float, int, np.ndarray]] = []

    def keep_density(t, f) -> None:
        rows.append((t, f.offset, f.density()))

    final, series = evolve_1d(b, p, o["kappa"], dis, cfg=pcfg, observers=[keep_density])
    paths = [
        emit_table(os.path.join(outdir, "series." + cfg.fmt), _SERIES_HEADER,
                   _series_rows(series), cfg.fmt)
    ]
    idx = _density_sample_indices(len(rows), o["density_samples"])
    drows = []
    for i in idx:
        t, off, dens = rows[i]
        for j, val in enumerate(dens):
            drows.append((float(t), int(off + j), float(val)))
    paths.append(
        emit_table(os.path.join(outdir, "density." + cfg.fmt), ("t", "l", "P"),
                   drows, cfg.fmt)
    )
    return paths


def _run_evolve2d(cfg: ExperimentConfig, outdir: str) -> list[str]:
    from .propagate import PropagationConfig, evolve_2d_staticgauge, evolve_2d_timegauge

    o = cfg.options
    p = cfg.params
    psi = incoherent_packet(p, o["sigma_x"], o["sigma_y"], o["realization"])
    dis = disorder(p, o["realization"], ndim=2) if p.eps > 0 else None
    n_steps = max(1, math.ceil(o["t_end"] / o["dt_max"]))
    stride = max(1, round(o["sample_dt"] / (o["t_end"] / n_steps)))
    pcfg = PropagationConfig(
        t_end=o["t_end"], dt_max=o["dt_max"], observer_stride=stride
    )
    rows: list[tuple[float, int, np.ndarray]] = []

    def keep_density(t, f) -> None:
        rows.append((t, f.offset_l, f.density_x()))

    evolve = evolve_2d_staticgauge if o["gauge"] == "static" else evolve_2d_timegauge
    final, series = evolve(psi, p, dis, cfg=pcfg, observers=[keep_density])
    paths = [
        emit_table(os.path.join(outdir, "series." + cfg.fmt), _SERIES_HEADER,
                   _series_rows(series), cfg.fmt)
    ]
    idx = _density_sample_indices(len(rows), o["density_samples"])
    drows = []
    for i in idx:
        t, off, dens = rows[i]
        for j, val in enumerate(dens):
            drows.append((float(t), int(off + j), float(val)))
    paths.append(
        emit_table(os.path.join(outdir, "density_x." + cfg.fmt), ("t", "l", "P"),
                   drows, cfg.fmt)
    )
    dens2 = final.density()
    d2rows = []
    for i, l in enumerate(final.sites_l()):
        for j, m in enumerate(final.sites_m()):
            d2rows.append((int(l), int(m), float(dens2[i, j])))
    paths.append(
        emit_table(os.path.join(outdir, "final_density2d." + cfg.fmt),
                   ("l", "m", "P"), d2rows, cfg.fmt)
    )
    return paths


def _run_spectrum(cfg: ExperimentConfig, outdir: str) -> list[str]:
    from .spectral import (
        band_scan,
        default_window,
        localization_length_y,
        mathieu_state,
        solve_slice,
        sum_rule,
    )

    o = cfg.options
    p = cfg.params
    window = None
    if o["window_half"] is not None:
        window = (-o["window_half"], o["window_half"])
    kappas = np.arange(o["kappa_points"]) * TWO_PI / o["kappa_points"]
    scan = band_scan(p, kappas, window)
    brows, srows = [], []
    for sl in scan.slices:
        interior = sl.interior_mask()
        srows.append((float(sl.kappa), float(sum_rule(sl))))
        for nu in range(sl.n_states):
            brows.append(
                (
                    float(sl.kappa),
                    int(nu),
                    float(sl.energies[nu]),
                    float(sl.currents[nu]),
                    bool(interior[nu]),
                )
            )
    paths = [
        emit_table(os.path.join(outdir, "bands." + cfg.fmt),
                   ("kappa", "nu", "E", "v", "interior"), brows, cfg.fmt),
        emit_table(os.path.join(outdir, "sumrule." + cfg.fmt),
                   ("kappa", "total_current"), srows, cfg.fmt),
    ]
    y = localization_length_y(p)
    paths.append(
        emit_table(
            os.path.join(outdir, "ylocalization." + cfg.fmt),
            ("regime", "L", "L_max", "L_min", "advisory"),
            [(y.regime, y.L, y.L_max, y.L_min, "; ".join(y.advisory))],
            cfg.fmt,
        )
    )
    if o["compare_harmonic"]:
        hm = mathieu_state(p, o["kappa"], o["extremum_site"])
        w = default_window(p, hm.center)
        hm = mathieu_state(p, o["kappa"], o["extremum_site"], window=w)
        sl = solve_slice(p, o["kappa"], window=w)
        ov = np.abs(sl.vectors.T @ hm.vector)
        j = int(np.argmax(ov))
        hrows = [
            (int(m), float(abs(sl.vectors[i, j])), float(abs(hm.vector[i])))
            for i, m in enumerate(range(w[0], w[1] + 1))
        ]
        paths.append(
            emit_table(os.path.join(outdir, "harmonic_profile." + cfg.fmt),
                       ("m", "c_exact_abs", "c_harmonic_abs"), hrows, cfg.fmt)
        )
        paths.append(
            emit_table(
                os.path.join(outdir, "harmonic_stats." + cfg.fmt),
                ("kappa", "overlap_sq", "E_exact", "E_harmonic"),
                [(float(o["kappa"]), float(ov[j] ** 2), float(sl.energies[j]),
                  float(hm.energy))],
                cfg.fmt,
            )
        )
    return paths


def _run_transport(cfg: ExperimentConfig, outdir: str) -> list[str]:
    from .spectral import band_scan
    from .transport import (
        build_transporting_state,
        find_linear_families,
        track_family,
        verify_drift,
    )

    o = cfg.options
    p = cfg.params
    cons = derive_constants(p)
    window = None
    if o["window_half"] is not None:
        window = (-o["window_half"], o["window_half"])
    kappas = np.arange(o["n_kappa"]) * TWO_PI / o["n_kappa"]
    scan = band_scan(p, kappas, window)
    paths = []
    if o["detect"] == "extremum":
        fam = track_family(scan, o["extremum_site"], o["extremum_kind"])
    elif o["detect"] == "lines":
        fams = find_linear_families(scan, (o["slope_min"], o["slope_max"]))
        if not fams:
            raise RuntimeError("no straight-line families detected in the slope range")
        frows = [(float(f.slope), float(f.linearity)) for f in fams]
        paths.append(
            emit_table(os.path.join(outdir, "families." + cfg.fmt),
                       ("slope", "linearity"), frows, cfg.fmt)
        )
        fam = fams[min(o["family_index"], len(fams) - 1)]
    else:
        raise ConfigError(f"unknown detect mode {o['detect']!r}")
    paths.append(
        emit_table(
            os.path.join(outdir, "family." + cfg.fmt),
            ("kappa", "E"),
            [(float(k), float(e)) for k, e in zip(fam.kappas, fam.energies)],
            cfg.fmt,
        )
    )
    state = build_transporting_state(fam)
    f = state.field
    dens = f.density()
    drows = []
    for i, l in enumerate(f.sites_l()):
        for j, m in enumerate(f.sites_m()):
            drows.append((int(l), int(m), float(dens[i, j])))
    paths.append(
        emit_table(os.path.join(outdir, "state_density." + cfg.fmt),
                   ("l", "m", "P"), drows, cfg.fmt)
    )
    duration = o["duration"]
    if duration is None:
        duration = cons.T_B if cons.T_B is not None else 50.0
    rep = verify_drift(state, p, duration)
    paths.append(
        emit_table(
            os.path.join(outdir, "drift." + cfg.fmt),
            ("slope", "v_measured", "displacement", "shape_fidelity",
             "backscatter_norm", "duration"),
            [(float(fam.slope), rep.v_measured, rep.displacement,
              rep.shape_fidelity, rep.backscatter_norm, rep.duration)],
            cfg.fmt,
        )
    )
    return paths


def _run_classical(cfg: ExperimentConfig, outdir: str) -> list[str]:
    from .classical import island_exists, strobe_map

    o = cfg.options
    p = cfg.params
    pts = strobe_map(
        o["seeds_per_axis"] if o["seeds_per_axis"] else 16,
        p,
        o["n_periods"],
        strobe_period=o["strobe_period"],
        dt=o["dt"],
    )
    rows = []
    for s in range(pts.shape[0]):
        for k in range(pts.shape[1]):
            rows.append((int(s), int(k), float(pts[s, k, 0]), float(pts[s, k, 1])))
    paths = [
        emit_table(os.path.join(outdir, "sections." + cfg.fmt),
                   ("seed", "strobe", "x", "p"), rows, cfg.fmt)
    ]
    if o["probe_island"]:
        rep = island_exists(
            p, o["seeds_per_axis"], o["n_periods"], strobe_period=o["strobe_period"]
        )
        paths.append(
            emit_table(
                os.path.join(outdir, "island." + cfg.fmt),
                ("exists", "trapped_fraction", "n_seeds", "n_periods"),
                [(rep.exists, rep.trapped_fraction, rep.n_seeds, rep.n_periods)],
                cfg.fmt,
            )
        )
    return paths


def _density_rows(density, indices) -> list[tuple]:
    sites = density.sites()
    rows = []
    for i in indices:
        t = float(density.times[i])
        for j, l in enumerate(sites):
            rows.append((t, int(l), float(density.P[i, j])))
    return rows


def _ensemble_spec(cfg: ExperimentConfig, dim: int):
    from .ensemble import EnsembleSpec

    o = cfg.options
    return EnsembleSpec(
        params=cfg.params,
        dim=dim,
        sigma_x=o["sigma_x"],
        sigma_y=o["sigma_y"],
        kappa=o["kappa"],
        t_end=o["t_end"],
        n_phase=o["n_phase"],
        n_disorder=o["n_disorder"],
        dt_max=o["dt_max"],
        sample_dt=o["sample_dt"],
        gauge=o["gauge"],
        keep_final_2d=bool(o.get("keep_final_2d", False)),
    )


def _run_ensemble_kind(cfg: ExperimentConfig, outdir: str) -> list[str]:
    from .ensemble import (
        InsufficientPointsError,
        fit_diffusive,
        fit_exponential_tail,
        local_exponent,
        run_ensemble,
    )

    o = cfg.options
    res = run_ensemble(_ensemble_spec(cfg, o["dim"]))
    paths = [
        emit_table(os.path.join(outdir, "series." + cfg.fmt), _SERIES_HEADER,
                   _series_rows(res.series), cfg.fmt)
    ]
    nu = local_exponent(res.series)
    paths.append(
        emit_table(os.path.join(outdir, "exponents." + cfg.fmt), ("t", "nu"),
                   [(float(t), float(v)) for t, v in zip(nu.times, nu.nu)], cfg.fmt)
    )
    idx = _density_sample_indices(res.density.times.size, o["density_samples"])
    paths.append(
        emit_table(os.path.join(outdir, "density." + cfg.fmt), ("t", "l", "P"),
                   _density_rows(res.density, idx), cfg.fmt)
    )
    fit_t = o["fit_time"] if o["fit_time"] is not None else o["t_end"]
    frow = [float(fit_t), None, None, None, None, None, None]
    try:
        fe = fit_exponential_tail(res.density, fit_t)
        frow[1:4] = [fe.L, fe.r2, fe.ok]
    except InsufficientPointsError:
        pass
    try:
        fd = fit_diffusive(res.density, fit_t)
        frow[4:7] = [fd.D, fd.r2, fd.ok]
    except InsufficientPointsError:
        pass
    paths.append(
        emit_table(
            os.path.join(outdir, "fits." + cfg.fmt),
            ("t", "L_exp", "r2_exp", "ok_exp", "D_diff", "r2_diff", "ok_diff"),
            [tuple(frow)],
            cfg.fmt,
        )
    )
    if res.final_density_2d is not None:
        off_l, off_m, dens = res.final_density_2d
        rows = []
        for i in range(dens.shape[0]):
            for j in range(dens.shape[1]):
                rows.append((int(off_l + i), int(off_m + j), float(dens[i, j])))
        paths.append(
            emit_table(os.path.join(outdir, "final_density2d." + cfg.fmt),
                       ("l", "m", "P"), rows, cfg.fmt)
        )
    return paths


def _run_compare(cfg: ExperimentConfig, outdir: str) -> list[str]:
    from .ensemble import bootstrap_mean_greater, compare_1d_2d

    o = cfg.options
    res1, res2 = compare_1d_2d(_ensemble_spec(cfg, 2))
    paths = [
        emit_table(os.path.join(outdir, "series_1d." + cfg.fmt), _SERIES_HEADER,
                   _series_rows(res1.series), cfg.fmt),
        emit_table(os.path.join(outdir, "series_2d." + cfg.fmt), _SERIES_HEADER,
                   _series_rows(res2.series), cfg.fmt),
    ]
    n = min(res1.times.size, res2.times.size)
    crows = [
        (float(res1.times[i]), float(res1.sigma[i]), float(res2.sigma[i]),
         float(res2.sigma[i] - res1.sigma[i]))
        for i in range(n)
    ]
    paths.append(
        emit_table(os.path.join(outdir, "compare." + cfg.fmt),
                   ("t", "sigma_1d", "sigma_2d", "diff"), crows, cfg.fmt)
    )
    prob = bootstrap_mean_greater(
        res2.sigma2_per_realization[:, -1],
        res1.sigma2_per_realization[:, -1],
        n_boot=o["n_boot"],
        seed=cfg.params.seed,
    )
    paths.append(
        emit_table(
            os.path.join(outdir, "stats." + cfg.fmt),
            ("t", "p_sigma2d_greater", "n_boot"),
            [(float(res1.times[n - 1]), float(prob), int(o["n_boot"]))],
            cfg.fmt,
        )
    )
    for label, res in (("1d", res1), ("2d", res2)):
        idx = _density_sample_indices(res.density.times.size, o["density_samples"])
        paths.append(
            emit_table(os.path.join(outdir, f"density_{label}." + cfg.fmt),
                       ("t", "l", "P"), _density_rows(res.density, idx), cfg.fmt)
        )
    return paths


_DISPATCH = {
    "evolve1d": _run_evolve1d,
    "evolve2d": _run_evolve2d,
    "spectrum": _run_spectrum,
    "transport": _run_transport,
    "classical-map": _run_classical,
    "ensemble": _run_ensemble_kind,
    "compare": _run_compare,
}


def run(cfg: ExperimentConfig, outdir: str | None = None) -> list[str]:
    """Execute one resolved configuration; returns the written paths.

    Writes the resolved config and a manifest beside the data tables.
    """
    outdir = outdir or cfg.out
    os.makedirs(outdir, exist_ok=True)
    t0 = time.time()
    tables = _DISPATCH[cfg.kind](cfg, outdir)
    resolved = os.path.join(outdir, "config.resolved.txt")
    with open(resolved, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in cfg.resolved_items():
            fh.write(f"{k}: {v}\n")
    manifest = write_json(
        os.path.join(outdir, "manifest.json"),
        {
            "version": __version__,
            "kind": cfg.kind,
            "seed": cfg.params.seed,
            "wall_time_s": round(time.time() - t0, 3),
            "warnings": cfg.warnings,
            "tables": [os.path.basename(t) for t in tables],
            "threads": cfg.threads,
        },
    )
    return tables + [resolved, manifest]


# ---------------------------------------------------------------------------
# figure presets: parameter sets reproducing the documented artifact classes


PRESETS: dict[str, dict[str, list[tuple[str, dict]]]] = {
    "classical-map": {
        # drive strengths around the critical field at alpha=1/10 (undocumented
        # alpha; the sections are qualitative)
        "island-panels": [
            ("f0", {"alpha": 0.1, "F": 0.0, "strobe_period": 10.0}),
            ("fsmall", {"alpha": 0.1, "F": 0.05}),
            ("fbelow", {"alpha": 0.1, "F": 0.4}),
            ("fabove", {"alpha": 0.1, "F": 0.7}),
        ],
    },
    "evolve1d": {
        "landau-drift-panels": [
            ("f0", {"alpha": 0.05, "F": 0.0, "t_end": 60.0}),
            ("f05", {"alpha": 0.05, "F": 0.5, "t_end": 37.7}),
            ("f01", {"alpha": 0.05, "F": 0.1, "t_end": 188.5}),
        ],
    },
    "spectrum": {
        "ladder-strongfield": [("", {"alpha": 0.1, "F": 1.0})],
        "ladder-weakfield": [("", {"alpha": 0.1, "F": 0.3})],
        "state-currents": [
            ("rational", {"alpha": 0.1, "F": 0.3, "kappa_points": 1}),
            ("irrational", {"alpha": 1.0 / 10.1417, "F": 0.3, "kappa_points": 1}),
        ],
        "harmonic-vs-exact": [
            ("", {"alpha": 0.1, "F": 0.3, "compare_harmonic": True, "kappa_points": 1}),
        ],
    },
    "transport": {
        "carrier-state-a10": [("", {"alpha": 0.1, "F": 0.1})],
        "carrier-state-a20": [("", {"alpha": 0.05, "F": 0.1})],
        "reversed-carrier": [
            ("", {"alpha": 1.0 / 2.2, "F": 0.1, "detect": "lines",
                  "n_kappa": 512, "slope_min": -0.45, "slope_max": 0.45}),
        ],
    },
    "ensemble": {
        "spread-strongfield": [
            ("e00", {"alpha": 0.1, "F": 3.0, "eps": 0.0, "n_disorder": 1}),
            ("e05", {"alpha": 0.1, "F": 3.0, "eps": 0.5}),
            ("e10", {"alpha": 0.1, "F": 3.0, "eps": 1.0}),
        ],
        "spread-weakfield": [
            ("e00", {"alpha": 0.1, "F": 0.3, "eps": 0.0, "n_disorder": 1}),
            ("e05", {"alpha": 0.1, "F": 0.3, "eps": 0.5}),
        ],
        "projected-profile": [
            ("", {"alpha": 0.1, "F": 0.3, "eps": 0.0, "dim": 2, "n_phase": 8,
                  "n_disorder": 1, "sigma_y": 3.0, "t_end": 600.0,
                  "sample_dt": 5.0, "keep_final_2d": True}),
        ],
    },
    "compare": {
        "dim-compare-strongfield": [
            ("", {"alpha": 0.1, "F": 3.0, "eps": 0.3, "t_end": 150.0})
        ],
        "dim-compare-weakfield": [
            ("", {"alpha": 0.1, "F": 0.3, "eps": 0.3, "t_end": 300.0})
        ],
    },
}


def preset_runs(kind: str, name: str) -> list[tuple[str, dict]]:
    try:
        return PRESETS[kind][name]
    except KeyError:
        known = ", ".join(sorted(PRESETS.get(kind, {})))
        raise ConfigError(
            f"unknown figure preset {name!r} for kind {kind!r}"
            + (f"; known: {known}" if known else "")
        ) from None


def execute(args) -> int:
    """CLI entry: resolve configuration(s) and run them."""
    overrides: dict[str, object] = {"kind": args.kind}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.format is not None:
        overrides["format"] = args.format
    if args.threads is not None:
        overrides["threads"] = args.threads
    for pair in args.param or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"-p expects key=value, got {pair!r}")
        overrides[key.strip()] = value.strip()
    text = None
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    if args.figure:
        written: list[str] = []
        for label, preset in preset_runs(args.kind, args.figure):
            merged = dict(preset)
            merged.update({k: v for k, v in overrides.items() if v is not None})
            cfg = parse_config(text, merged)
            sub = os.path.join(cfg.out, label) if label else cfg.out
            written += run(cfg, sub)
        for pth in written:
            print(pth)
        return 0
    cfg = parse_config(text, overrides)
    for pth in run(cfg):
        print(pth)
    return 0
