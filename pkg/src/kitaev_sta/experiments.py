"""Configuration-driven sweeps over drive duration or pairing strength.

A config is a JSON object (fields of :class:`ExperimentConfig`; the README lists them).
``run_experiment`` evaluates every sweep point on a bounded thread pool,
reduces results in a fixed order and writes:

``results.csv`` / ``results.json``
    one row per sweep point (columns depend on ``study``)
``work_atoms.csv``
    work studies only: long table of (kind, parity, omega_tau, W, p)
``protocol_<kind>_N<N>.csv``
    the drive sampled at the longest duration (t, mu, dmu_dt)
``manifest.json``
    config echo, package version, step counts, runtimes and failures
"""
import csv
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from . import bulk, ed
from ._stepping import default_n_steps
from .model import Boundary, ChainParams
from .protocols import LinearRamp, MinimalActionRamp, TwoPlateauRamp
from .work import moments, tpm_distribution

STUDIES = ("fidelity", "delta_sweep", "work")
KINDS = ("LR", "MA", "2pMA")
BACKENDS = ("bulk", "ed", "both")
THREADS_ENV = "KITAEV_STA_THREADS"


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    study: str = "fidelity"
    n_sites: List[int] = field(default_factory=lambda: [20])
    omega: float = 1.0
    delta: float = 1.0
    boundary: str = "PBC"
    mu_0: float = -3.0
    mu_f: float = 3.0
    kinds: List[str] = field(default_factory=lambda: ["2pMA", "LR"])
    k_target_units: Optional[float] = None
    tau_values: List[float] = field(default_factory=lambda: [10.0])
    delta_values: Optional[List[float]] = None
    backend: str = "bulk"
    parities: List[str] = field(default_factory=lambda: ["even"])
    n_steps: Optional[int] = None
    ed_cap: int = ed.BUILD_CAP
    dense_cap: int = ed.DENSE_CAP
    odd_target: str = "manifold"
    merge_tol: float = 1e-9
    bin_width: Optional[float] = None
    format: str = "csv"
    preset: Optional[str] = None
    description: str = ""

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.study in STUDIES, f"study must be one of {STUDIES}")
        need(self.backend in BACKENDS, f"backend must be one of {BACKENDS}")
        need(self.format in ("csv", "json"), "format must be csv or json")
        need(len(self.n_sites) > 0, "n_sites must be non-empty")
        need(len(self.tau_values) > 0, "tau_values must be non-empty")
        need(all(t > 0 for t in self.tau_values), "tau_values must be > 0")
        need(len(self.kinds) > 0 and set(self.kinds) <= set(KINDS), f"kinds must be a subset of {KINDS}")
        need(len(self.parities) > 0 and set(self.parities) <= {"even", "odd"},
             "parities must be a non-empty subset of {even, odd}")
        need(self.boundary in ("PBC", "OBC"), "boundary must be PBC or OBC")
        need(self.n_steps is None or self.n_steps >= 1, "n_steps must be >= 1")
        need(self.odd_target in ("manifold", "bogoliubov"), "odd_target must be manifold or bogoliubov")
        if self.study == "delta_sweep":
            need(bool(self.delta_values), "delta_sweep needs a non-empty delta_values")
        if self.study == "work":
            need(self.backend != "both", "work studies take backend bulk or ed")
        try:
            for n in self.n_sites:
                ChainParams(n, self.omega, self.delta, boundary=self.boundary)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.backend in ("ed", "both"):
            need(max(self.n_sites) <= self.ed_cap,
                 f"backend {self.backend!r} needs N <= {self.ed_cap} (got {max(self.n_sites)})")
            if self.study == "work":
                need(max(self.n_sites) <= self.dense_cap,
                     f"ED work statistics need N <= dense cap {self.dense_cap}")


def _fig_taus(stop, start=1):
    return [float(t) for t in range(start, stop + 1)]


PRESETS = {
    "fig2": ("Two-plateau MA vs linear ramp, N = 20/50/80, mu: -3 -> 3",
             dict(n_sites=[20, 50, 80], mu_0=-3.0, mu_f=3.0, kinds=["2pMA", "LR"],
                  tau_values=_fig_taus(120))),
    "fig3": ("Single- vs two-plateau MA vs linear ramp, N = 30, mu: 3 -> -3",
             dict(n_sites=[30], mu_0=3.0, mu_f=-3.0, kinds=["2pMA", "MA", "LR"],
                  tau_values=_fig_taus(120))),
    "fig4a": ("Even/odd fidelities, MA targeting k = pi/N, N = 60, mu: 0 -> -3",
              dict(n_sites=[60], mu_0=0.0, mu_f=-3.0, kinds=["MA", "LR"], k_target_units=1.0,
                   parities=["even", "odd"], tau_values=_fig_taus(120))),
    "fig4b": ("Even/odd fidelities, MA targeting k = 2 pi/N, N = 60, mu: 0 -> -3",
              dict(n_sites=[60], mu_0=0.0, mu_f=-3.0, kinds=["MA", "LR"], k_target_units=2.0,
                   parities=["even", "odd"], tau_values=_fig_taus(120))),
    "fig5": ("Bulk vs exact diagonalization, N = 14 (OBC), mu: 0 -> -3",
             dict(n_sites=[14], boundary="OBC", mu_0=0.0, mu_f=-3.0, kinds=["MA", "LR"],
                  k_target_units=1.0, parities=["even", "odd"], backend="both",
                  tau_values=[1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])),
    "fig6": ("Work distributions and moments by exact diagonalization, N = 12 (OBC), mu: 0 -> -3",
             dict(study="work", n_sites=[12], boundary="OBC", mu_0=0.0, mu_f=-3.0,
                  kinds=["MA", "LR"], k_target_units=1.0, parities=["even", "odd"], backend="ed",
                  bin_width=0.05,
                  tau_values=[0.01, 0.03, 0.1, 0.3, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])),
    "appA": ("MA vs linear ramp across pairing strength, N = 60, omega tau = 60, mu: -3 -> 0",
             dict(study="delta_sweep", n_sites=[60], mu_0=-3.0, mu_f=0.0, kinds=["MA", "LR"],
                  k_target_units=1.0, tau_values=[60.0],
                  delta_values=[round(0.1 + 0.01 * i, 2) for i in range(91)])),
}


def list_presets():
    return {name: desc for name, (desc, _) in PRESETS.items()}


def preset_config(name, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    desc, data = PRESETS[name]
    data = dict(data, preset=name, description=desc)
    data.update(overrides)
    return ExperimentConfig.from_dict(data)


def build_protocol(kind, cfg: ExperimentConfig, params: ChainParams, tau):
    """Fitted protocol for a kind label; MA targets ``k_target_units * pi / N``.

    Without ``k_target_units`` the single-plateau drive avoids the closure
    nearest to mu_0 (k = pi/N for mu_0 <= 0, (N-1) pi/N otherwise).
    """
    if kind == "LR":
        return LinearRamp(cfg.mu_0, cfg.mu_f, tau).fit()
    if kind == "2pMA":
        return TwoPlateauRamp(cfg.mu_0, cfg.mu_f, tau).fit(params)
    n = params.n_sites
    if cfg.k_target_units is not None:
        k = cfg.k_target_units * math.pi / n
    else:
        k = math.pi / n if cfg.mu_0 <= 0 else (n - 1) * math.pi / n
    return MinimalActionRamp(cfg.mu_0, cfg.mu_f, tau, k_target=k).fit(params)


def _steps(cfg, tau, omega):
    return cfg.n_steps if cfg.n_steps is not None else default_n_steps(tau, omega)


def _fidelity_point(cfg, params, tau):
    row = {"n_sites": params.n_sites, "delta": params.delta, "omega_tau": tau * params.omega}
    n_steps = _steps(cfg, tau, params.omega)
    for kind in cfg.kinds:
        prot = build_protocol(kind, cfg, params, tau)
        for parity in cfg.parities:
            if cfg.backend in ("bulk", "both"):
                if parity == "even":
                    f = bulk.fidelity_even(prot, params, n_steps).value
                else:
                    f = bulk.fidelity_odd(prot, params, n_steps, target=cfg.odd_target).value
                row[f"F_{parity}_{kind}"] = f
            if cfg.backend in ("ed", "both"):
                row[f"F_{parity}_{kind}_ed"] = ed.ed_fidelity(prot, params, parity, n_steps,
                                                               cap=cfg.ed_cap)
    return row, n_steps


def _work_point(cfg, params, tau, cache):
    rows, atoms = [], []
    n_steps = _steps(cfg, tau, params.omega)
    for kind in cfg.kinds:
        prot = build_protocol(kind, cfg, params, tau)
        for parity in cfg.parities:
            if cfg.backend == "bulk":
                dist = bulk.bulk_work_distribution(prot, params, n_steps, parity,
                                                   merge_tol=cfg.merge_tol)
            else:
                start, e0 = cache["start"][parity]
                psi = ed.propagate(start, prot, params, n_steps, cap=cfg.ed_cap)
                dist = tpm_distribution(psi, cache["spectrum"][parity], e0, cfg.merge_tol)
            m = moments(dist)
            rows.append({"kind": kind, "parity": parity, "omega_tau": tau * params.omega,
                         "mean": m.mean, "variance": m.variance,
                         "third_moment": m.third_central, "skewness_std": m.skewness_std,
                         "pruned_mass": dist.pruned_mass})
            if cfg.bin_width:
                w, p = dist.histogram(cfg.bin_width)
            else:
                w, p = dist.work, dist.prob
            atoms += [(kind, parity, tau * params.omega, wi, pi) for wi, pi in zip(w, p)]
    return rows, atoms, n_steps


def _ed_work_cache(cfg, params):
    e_even, s_even, e_odd, s_odd = ed.lowest_states(cfg.mu_0, params, cfg.ed_cap)
    spectra = {p: ed.full_spectrum(cfg.mu_f, params, parity=p, dense_cap=cfg.dense_cap)
               for p in cfg.parities}
    return {"start": {"even": (s_even, e_even), "odd": (s_odd, e_odd)}, "spectrum": spectra}


def _write_table(path, rows, fmt):
    if fmt == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps(rows, indent=1, default=float))
        return path
    path = path.with_suffix(".csv")
    cols = []
    for r in rows:
        cols += [c for c in r if c not in cols]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                             for k, v in r.items()})
    return path


def resolve_threads(threads=None):
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else min(8, os.cpu_count() or 1)
    return max(1, int(threads))


def run_experiment(config: ExperimentConfig, out_dir, threads=None):
    """Run every sweep point of ``config`` and write results under ``out_dir``.

    Returns the manifest dict. Raises :class:`NumericalFailure` after writing
    partial results if any sweep point failed.
    """
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    threads = resolve_threads(threads)

    jobs = []
    deltas = config.delta_values if config.study == "delta_sweep" else [config.delta]
    for n in config.n_sites:
        for d in deltas:
            params = ChainParams(n, config.omega, d, boundary=Boundary(config.boundary))
            for tau in config.tau_values:
                jobs.append((params, float(tau) / config.omega))

    # fail fast on drives that cannot be built for these endpoints
    for params in {p for p, _ in jobs}:
        for kind in config.kinds:
            try:
                build_protocol(kind, config, params, max(config.tau_values) / config.omega)
            except ValueError as exc:
                raise ConfigError(f"{kind} at N={params.n_sites}, delta={params.delta}: {exc}") from exc

    caches = {}
    if config.study == "work" and config.backend == "ed":
        for params in {p for p, _ in jobs}:
            caches[params] = _ed_work_cache(config, params)

    def run(job):
        params, tau = job
        t0 = time.perf_counter()
        try:
            if config.study == "work":
                rows, atoms, steps = _work_point(config, params, tau, caches.get(params))
            else:
                row, steps = _fidelity_point(config, params, tau)
                rows, atoms = [row], []
            return dict(rows=rows, atoms=atoms, n_steps=steps, error=None,
                        runtime=time.perf_counter() - t0)
        except Exception as exc:  # reported per point, never aborts the sweep
            return dict(rows=[], atoms=[], n_steps=None, error=f"{type(exc).__name__}: {exc}",
                        runtime=time.perf_counter() - t0)

    t_start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(run, jobs))

    rows, atoms, points, failures = [], [], [], []
    for (params, tau), res in zip(jobs, results):
        rows += res["rows"]
        atoms += res["atoms"]
        point = {"n_sites": params.n_sites, "delta": params.delta, "omega_tau": tau * params.omega,
                 "n_steps": res["n_steps"], "runtime_s": res["runtime"]}
        points.append(point)
        if res["error"]:
            failures.append(dict(point, error=res["error"]))

    files = [str(_write_table(out / "results", rows, config.format).name)]
    if atoms:
        atom_rows = [dict(zip(("kind", "parity", "omega_tau", "W", "p"), a)) for a in atoms]
        files.append(str(_write_table(out / "work_atoms", atom_rows, config.format).name))
    tau_max = max(config.tau_values) / config.omega
    for n in config.n_sites:
        params = ChainParams(n, config.omega, deltas[-1], boundary=Boundary(config.boundary))
        for kind in config.kinds:
            name = f"protocol_{kind}_N{n}.csv"
            build_protocol(kind, config, params, tau_max).to_csv(out / name)
            files.append(name)

    manifest = {
        "package": "kitaev_sta",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": asdict(config),
        "threads": threads,
        "files": files,
        "points": points,
        "failures": failures,
        "total_runtime_s": time.perf_counter() - t_start,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, default=str))
    if failures:
        raise NumericalFailure(f"{len(failures)} of {len(jobs)} sweep points failed; see manifest")
    return manifest
