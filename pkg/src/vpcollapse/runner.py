"""Drive a full run: sample, step, record the field history, diagnose."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import dump_config
from .diagnostics import (
    SERIES_COLUMNS,
    DiagnosticsReport,
    core_agreement_D,
    kinetic_energy,
    potential_energy,
    rho_inf_estimate,
    sup_m_over_r,
)
from .dust import make_core_boundary
from .errors import ConfigError, NumericError
from .initial_data import make_initial_data, sample_ensemble
from .io import write_ensemble_csv, write_field_csv, write_series_csv, write_times
from .simulation import FieldHistory, ParticleEnsemble, Simulator

__all__ = ["RunResult", "setup", "run", "write_outputs", "dump_keep", "time_grid"]


@dataclass
class RunResult:
    config: object
    initial_data: object
    core: object
    history: FieldHistory
    reports: list
    ensemble: ParticleEnsemble
    snapshots: dict = field(default_factory=dict)

    @property
    def t_end(self):
        return self.config.t_end_fraction * self.core.T_eps

    def series(self):
        return np.array([r.row() for r in self.reports], dtype=float).reshape(-1, len(SERIES_COLUMNS))


def setup(config):
    """Initial data and core boundary for ``config``."""
    d = make_initial_data(config.epsilon, config.a0)
    core = make_core_boundary(config.epsilon, d.M_eps, config.a0)
    return d, core


def time_grid(t_end, dt):
    """Step end times ``k dt`` up to ``t_end``, with a shortened last step if needed."""
    n_full = int(math.floor(t_end / dt + 1e-9))
    times = [k * dt for k in range(1, n_full + 1)]
    if t_end - n_full * dt > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    elif times:
        times[-1] = t_end
    return times


def _report(sim, history, d, core, t, config, with_core):
    ens = sim.ensemble
    e_kin = kinetic_energy(ens, config.thread_count)
    e_pot = potential_energy(sim.field, config.thread_count)
    if with_core and config.n_probes > 0:
        D = core_agreement_D(history, d, core, t, n_samples=config.n_probes, seed=config.seed,
                             dt_char=config.dt_char, threads=config.thread_count)
    elif t == 0:
        D = 0.0
    else:
        D = math.nan
    return DiagnosticsReport(
        t=t,
        E_kin=e_kin,
        E_pot=e_pot,
        E_tot=e_kin + e_pot,
        rho_inf=rho_inf_estimate(ens, config.rho_bin * config.a0),
        sup_m_over_r=sup_m_over_r(sim.field),
        r_eps=float(core.r(t)),
        a=float(d.homog.dust.a(t)),
        D_core=D,
    )


def run(config, progress=None, keep=None):
    """Run the simulation described by ``config``.

    ``keep`` lists snapshot indices whose particle ensembles are retained in
    ``RunResult.snapshots`` (``-1`` is the final one), or is ``"all"``.
    ``progress`` is called as ``progress(step, t)`` after each step.
    """
    d, core = setup(config)
    t_end = config.t_end_fraction * core.T_eps
    if not t_end < core.T_eps:
        raise ConfigError("t_end_fraction", "run must end before the core collapse time")
    sampled = sample_ensemble(d, config.N, config.seed, config.thread_count)
    ens = ParticleEnsemble.from_sampled(sampled)
    sim = Simulator(ens, softening=config.softening, threads=config.thread_count)
    history = FieldHistory(config.N, config.dt_hist)
    history.append(0.0, sim.field)
    keep_all = keep == "all"
    keep = set() if keep_all else set(keep or ())
    snapshots = {}
    if keep_all or 0 in keep:
        snapshots[0] = ens.copy()
    reports = [_report(sim, history, d, core, 0.0, config, True)]

    times = time_grid(t_end, config.dt)
    every = config.hist_every
    t_prev = 0.0
    for step, t in enumerate(times, 1):
        sim.step(t - t_prev, t_new=t)
        t_prev = t
        if not (np.isfinite(ens.positions).all() and np.isfinite(ens.velocities).all()):
            raise NumericError(f"non-finite particle state at t={t:.17g}", step=step)
        if progress is not None:
            progress(step, t)
        if step % every == 0 or step == len(times):
            history.append(t, sim.field)
            k = len(history) - 1
            with_core = (k % config.core_every == 0) or step == len(times)
            reports.append(_report(sim, history, d, core, t, config, with_core))
            if keep_all or k in keep:
                snapshots[k] = ens.copy()
    if -1 in keep:
        snapshots[len(history) - 1] = ens.copy()
    return RunResult(config, d, core, history, reports, ens, snapshots)


def dump_keep(config):
    """Snapshot indices :func:`run` must retain for :func:`write_outputs`."""
    return {"all": "all", "ends": (0,), "none": ()}[config.snapshot_dumps]


def write_outputs(result, out_dir=None):
    """Write series, history index, manifest and snapshot dumps.

    Particle dumps are written for the snapshots retained by the run.
    """
    cfg = result.config
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series_csv(out / "series.csv", SERIES_COLUMNS, [r.row() for r in result.reports])
    write_times(out / "times.txt", result.history.times)
    header = (f"vpcollapse {__version__}", f"seed {cfg.seed}", f"T_eps {result.core.T_eps!r}")
    (out / "manifest.txt").write_text(dump_config(cfg, header))
    n = len(result.history)
    if cfg.snapshot_dumps == "all":
        which = range(n)
    elif cfg.snapshot_dumps == "ends":
        which = sorted({0, n - 1})
    else:
        which = ()
    for k in which:
        snap_dir = out / "snapshots" / f"{k:05d}"
        snap_dir.mkdir(parents=True, exist_ok=True)
        f = result.history.snapshot(k)
        write_field_csv(snap_dir / "field.csv", f.radii, f.cum_mass)
        ens = result.snapshots.get(k)
        if ens is None and k == n - 1:
            ens = result.ensemble
        if ens is not None:
            write_ensemble_csv(snap_dir / "ensemble.csv", ens)
    return out
