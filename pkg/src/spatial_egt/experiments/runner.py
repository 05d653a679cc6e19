"""Experiment orchestration: run a config, write outputs and a manifest."""

from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__, stability
from ..game import coordination_params, lipschitz_estimate, rate_bound
from ..grid import DensityField
from ..ide import Dynamic, IntegrationLog, integrate, stable_dt
from ..kernels import fourier_coeffs
from ..meanfield import deviation_harness, solve_ode
from . import io, metrics
from .build import initial_field, initial_profile, make_grid, make_kernel, make_rule, make_system
from .config import RunConfig
from .harness import lumpability_test, micro_meso_convergence

log = logging.getLogger(__name__)

TRACE_POINTS = 200
_REDUCED = (Dynamic.REDUCED_LOGIT, Dynamic.REDUCED_REPLICATOR, Dynamic.LOGIT, Dynamic.IMITATIVE_REPLICATOR)


@dataclass
class RunManifest:
    """What a run did: config echo, measured constants, headline results and the file index."""

    name: str
    kind: str
    config: dict
    version: str
    seed: int
    constants: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    out_dir: str = ""

    def add_file(self, path: Path) -> None:
        rel = str(Path(path).relative_to(self.out_dir))
        self.files[rel] = io.sha256(path)

    def write(self) -> Path:
        return io.write_json(Path(self.out_dir) / "manifest.json", dataclasses.asdict(self))


def run_experiment(cfg: RunConfig, out_dir=None, seed: int | None = None,
                   threads: int | None = None) -> RunManifest:
    """Execute ``cfg`` and write its outputs under ``out_dir`` (default ``cfg.output``)."""
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if seed is None else int(seed)
    threads = cfg.threads if threads is None else int(threads)
    man = RunManifest(cfg.name, cfg.kind, cfg.echo(), __version__, seed, out_dir=str(out))
    t0 = time.perf_counter()
    _common_constants(cfg, man)
    dispatch = {"ide": _run_ide, "dispersion": _run_dispersion, "convergence": _run_convergence,
                "deviation": _run_deviation, "lumpability": _run_lumpability}
    dispatch[cfg.kind](cfg, out, seed, threads, man)
    man.wall_clock = time.perf_counter() - t0
    man.write()
    return man


def _common_constants(cfg: RunConfig, man: RunManifest) -> None:
    c = man.constants
    try:
        params = coordination_params(cfg.game)
        c["zeta"], c["beta"] = params.zeta, params.beta
        c["beta_C"] = stability.critical_beta(params.zeta)
    except ValueError:
        pass
    if cfg.kernel is not None:
        c["J2"] = make_kernel(cfg).second_moment()
    for br in cfg.branches:
        rule = make_rule(br)
        c[f"{br.name}.rate_bound_M"] = rate_bound(rule, cfg.game)
        c[f"{br.name}.lipschitz_L"] = lipschitz_estimate(rule, cfg.game)
    if cfg.time is not None and cfg.time.caption_dt:
        man.notes.append(f"caption time step {cfg.time.caption_dt} recorded; "
                         f"run uses dt = {cfg.time.dt_text}")


def _run_ide(cfg: RunConfig, out: Path, seed: int, threads: int, man: RunManifest) -> None:
    grid = make_grid(cfg)
    T = cfg.time.t_end
    snap_times = set(cfg.time.snapshot_times) | {T}
    trace = set(np.round(np.linspace(0.0, T, TRACE_POINTS + 1), 12))
    all_times = sorted(trace | snap_times)
    avg_rows, iface_rows, pattern_rows, front_rows = [], [], [], []
    fields = {}
    for br in cfg.branches:
        system = make_system(cfg, br, grid)
        dt = cfg.time.dt if cfg.time.dt is not None else stable_dt(system)
        f0 = initial_field(cfg, grid, seed)
        stats = IntegrationLog()
        traj = [f0] + integrate(system, f0, T, dt, [t for t in all_times if t > 0], stats)
        fields[br.name] = traj
        man.constants[f"{br.name}.dt"] = dt
        man.constants[f"{br.name}.steps"] = stats.steps
        man.constants[f"{br.name}.max_simplex_drift"] = stats.max_drift
        man.constants[f"{br.name}.projections"] = stats.projections
        snapdir = out / "snapshots" / br.name
        snapdir.mkdir(parents=True, exist_ok=True)
        for f in traj:
            avg = f.spatial_average()
            avg_rows.append([br.name, f.time, *avg])
            if any(abs(f.time - s) < 1e-9 for s in snap_times):
                man.add_file(io.write_snapshot(snapdir / f"t{f.time:012.6f}.txt", f))
            var = metrics.pattern_variance(f)
            mode = metrics.dominant_mode(f) if grid.periodic_bc else ()
            pattern_rows.append([br.name, f.time, var, metrics.pattern_contrast(f),
                                 " ".join(map(str, mode))])
            if grid.ndim == 1 and f.num_strategies == 2:
                for j, (pos, width) in enumerate(_interfaces(f)):
                    iface_rows.append([br.name, f.time, j, pos, width])
        variances = [r[2] for r in pattern_rows if r[0] == br.name]
        final = traj[-1]
        summ = {"final_average": final.spatial_average().tolist(),
                "initial_variance": variances[0], "final_variance": variances[-1],
                "variance_ratio": variances[-1] / variances[0] if variances[0] > 0 else float("inf"),
                "persists": metrics.persists(variances),
                "final_contrast": metrics.pattern_contrast(final)}
        if grid.periodic_bc:
            summ["dominant_mode"] = list(metrics.dominant_mode(final))
        ifs = [r for r in iface_rows if r[0] == br.name]
        if ifs:
            last = [r for r in ifs if r[1] == final.time]
            summ["final_interfaces"] = [[r[3], r[4]] for r in last]
            single = [r for r in ifs if r[2] == 0 and sum(1 for q in ifs if q[1] == r[1]) == 1]
            if not grid.periodic_bc and len(single) >= 4:
                fit = metrics.front_speed([r[1] for r in single], [r[3] for r in single])
                front_rows.append([br.name, fit.speed, fit.intercept, fit.residual])
                summ["front_speed"] = fit.speed
                summ["front_residual"] = fit.residual
        if cfg.meanfield:
            rho0 = f0.spatial_average()
            ode = solve_ode(rho0, make_rule(br), cfg.game, T)
            for t in sorted(trace):
                avg_rows.append([f"meanfield:{br.name}", t, *ode(t)])
            summ["meanfield_initial"] = rho0.tolist()
            summ["meanfield_final"] = ode(T).tolist()
        if cfg.dispersion and br.dynamic in _REDUCED and grid.periodic_bc:
            summ["dispersion"] = _dispersion_for(cfg, br, grid, out, man)
        man.summary[br.name] = summ
    S = cfg.game.num_strategies
    man.add_file(io.write_csv(out / "averages.csv", ["branch", "time"] + [f"mean_f{i + 1}" for i in range(S)],
                              avg_rows))
    man.add_file(io.write_csv(out / "pattern.csv", ["branch", "time", "variance", "contrast", "dominant_mode"],
                              pattern_rows))
    if iface_rows:
        man.add_file(io.write_csv(out / "interfaces.csv", ["branch", "time", "index", "position", "width"],
                                  iface_rows))
    if front_rows:
        man.add_file(io.write_csv(out / "fronts.csv", ["branch", "speed", "intercept", "residual"], front_rows))
    if cfg.plots:
        from . import plots
        for path in plots.ide_figures(fields, out, man.summary):
            man.add_file(path)


def _interfaces(f: DensityField) -> list:
    """All transitions of a 1-D field, one window per half-level crossing."""
    x = f.grid.axes()[0]
    cross = metrics._crossings(x, f.p, 0.5)
    if cross.size == 0:
        return []
    cuts = np.concatenate([[x[0]], 0.5 * (cross[1:] + cross[:-1]), [x[-1]]])
    out = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        try:
            out.append(metrics.interface_metrics(f, (lo, hi)))
        except metrics.InterfaceError:
            continue
    return out


def _dispersion_for(cfg, br, grid, out, man) -> dict:
    params = coordination_params(cfg.game)
    spec = cfg.dispersion
    p0 = params.zeta if spec["p0"] == "zeta" else float(spec["p0"])
    if spec["transform"] == "grid":
        jhat = fourier_coeffs(make_system(cfg, br, grid).weights, grid)
    else:
        jhat = make_kernel(cfg)
    K = spec["K"]
    if K is None and spec["transform"] == "continuous":
        K = grid.shape[0] // 2
    tab = stability.dispersion(br.dynamic, p0, params, br.kappa, jhat, K)
    path = out / f"dispersion_{br.name}.csv"
    tab.to_csv(path)
    man.add_file(path)
    if tab.outside_hypothesis:
        man.notes.extend(tab.notes)
    return {"p0": p0, "M": tab.M, "N": tab.N, "stable": tab.stable,
            "unstable_modes": tab.unstable_modes.tolist(), "max_growth": tab.max_growth()}


def _run_dispersion(cfg: RunConfig, out: Path, seed: int, threads: int, man: RunManifest) -> None:
    grid = make_grid(cfg)
    if not cfg.dispersion:
        cfg.dispersion = {"p0": "zeta", "K": None, "transform": "continuous"}
    for br in cfg.branches:
        man.summary[br.name] = {"dispersion": _dispersion_for(cfg, br, grid, out, man)}
        params = coordination_params(cfg.game)
        rep = stability.stationary_homogeneous(br.dynamic, params, br.kappa)
        man.summary[br.name]["stationary_roots"] = rep.roots.tolist()
    if cfg.plots:
        from . import plots
        for path in plots.dispersion_figures(out, [b.name for b in cfg.branches]):
            man.add_file(path)


def _run_convergence(cfg: RunConfig, out: Path, seed: int, threads: int, man: RunManifest) -> None:
    c = cfg.convergence
    br = cfg.branches[0]
    grid = make_grid(cfg, c["ide_nodes"])
    if not grid.periodic_bc:
        raise ValueError("the convergence harness runs on periodic domains")
    system = make_system(cfg, br, grid)
    rows = micro_meso_convergence(cfg.game, make_rule(br), system, initial_profile(cfg), c["gammas"],
                                  c["coarse_cells"], c["t_end"], c["replicas"], seed, threads)
    man.add_file(io.write_csv(out / "convergence.csv", ["gamma", "sites", "mean_l1", "std_l1", "replicas"],
                              [[r.gamma, r.sites, r.mean_l1, r.std_l1, r.replicas] for r in rows]))
    l1 = [r.mean_l1 for r in rows]
    man.summary[br.name] = {"mean_l1": l1, "gammas": [r.gamma for r in rows],
                            "monotone_decreasing": bool(np.all(np.diff(l1) < 0))}


def _run_deviation(cfg: RunConfig, out: Path, seed: int, threads: int, man: RunManifest) -> None:
    d = cfg.deviation
    br = cfg.branches[0]
    tab = deviation_harness(make_rule(br), cfg.game, d["rho0"], d["n_list"], d["T"], d["eps"],
                            d["replicas"], seed, dim=cfg.domain.dim)
    path = out / "deviation.csv"
    tab.to_csv(path)
    man.add_file(path)
    frac = [r.exceedance for r in tab.rows]
    man.summary[br.name] = {"exceedance": frac, "mean_sup_deviation": [r.mean_sup_deviation for r in tab.rows],
                            "slope": tab.slope, "tail_slope": tab.tail_slope,
                            "strictly_decreasing": bool(np.all(np.diff(frac) < 0))}


def _run_lumpability(cfg: RunConfig, out: Path, seed: int, threads: int, man: RunManifest) -> None:
    d = cfg.lumpability
    br = cfg.branches[0]
    res = lumpability_test(cfg.game, make_rule(br), d["sites"], d["rho0"], d["t_end"], d["replicas"],
                           seed, threads)
    rows = [[r, a, b] for r, (a, b) in enumerate(zip(res.micro_eta, res.lumped_eta))]
    man.add_file(io.write_csv(out / "lumpability.csv", ["replica", "lattice_eta1", "lumped_eta1"], rows))
    man.summary[br.name] = {"ks_statistic": res.statistic, "ks_pvalue": res.pvalue}
