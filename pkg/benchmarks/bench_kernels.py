"""Time the numpy and compiled kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py --n 100000 --repeat 5
"""
import argparse
import time

import numpy as np

from vpcollapse.diagnostics import core_probes
from vpcollapse.dust import make_core_boundary
from vpcollapse.initial_data import make_initial_data, sample_ensemble
from vpcollapse.kernels import available_backends, get_backend
from vpcollapse.simulation import FieldHistory, ParticleEnsemble, Simulator, compute_field


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(name, sampled, hist, probes, t_probe, repeat):
    kern = get_backend(name)
    ens = ParticleEnsemble.from_sampled(sampled)
    n = len(ens)
    r = np.empty(n)
    m = np.full(n, 0.5)
    vel = ens.velocities.copy()
    sim = Simulator(ens.copy(), backend=name)
    times, radii, mass, count = hist.arrays()
    x, v = probes
    n_steps = int(np.ceil(t_probe / 1e-3))

    def backtrace():
        kern.history_backtrace(times, radii, mass, count, x.copy(), v.copy(), t_probe, n_steps,
                               0.0)

    return {
        "radii": best_of(lambda: kern.radii(ens.positions, r), repeat),
        "kick": best_of(lambda: kern.kick(vel, ens.positions, m, 1e-3, 0.0), repeat),
        "drift": best_of(lambda: kern.drift(vel.copy(), ens.velocities, 1e-3), repeat),
        "field": best_of(lambda: compute_field(ens, 1, kern), repeat),
        "step": best_of(lambda: sim.step(1e-3), repeat),
        "backtrace": best_of(backtrace, repeat),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000, help="particles")
    p.add_argument("--probes", type=int, default=200, help="backtraced probes")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    d = make_initial_data(0.2)
    core = make_core_boundary(0.2, d.M_eps)
    sampled = sample_ensemble(d, args.n, args.seed)
    sim = Simulator(ParticleEnsemble.from_sampled(sampled))
    hist = FieldHistory(args.n, 1e-2)
    hist.append(0.0, sim.field)
    for k in range(1, 31):
        sim.step(1e-3, t_new=k * 1e-3)
        if k % 10 == 0:
            hist.append(k * 1e-3, sim.field)
    t_probe = hist.last_time
    probes = core_probes(d, core, t_probe, args.probes, args.seed)

    names = available_backends()
    results = {nm: bench(nm, sampled, hist, probes, t_probe, args.repeat) for nm in names}
    print(f"N={args.n}, probes={args.probes}, best of {args.repeat} (ms)")
    print(f"{'kernel':<10}" + "".join(f"{nm:>12}" for nm in names)
          + ("    speedup" if len(names) > 1 else ""))
    for key in results[names[0]]:
        row = f"{key:<10}" + "".join(f"{1e3 * results[nm][key]:12.3f}" for nm in names)
        if len(names) > 1:
            row += f"{results['python'][key] / results['cython'][key]:10.1f}x"
        print(row)


if __name__ == "__main__":
    main()
