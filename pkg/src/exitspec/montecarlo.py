"""Independent probabilistic oracle: Brownian paths, first exit times,
moment/survival/Laplace estimators.

Increments are sqrt(dt) * standard normal per coordinate, so the generator
is (1/2) Delta. A path terminates at the first step that lands outside the
domain and tau is recorded at that step; there is no sub-step interpolation,
which leaves a documented O(sqrt(dt)) positive bias on exit times.

Reproducibility contract: path i draws from a Philox stream keyed
(base_seed, i), consumed in simulation order (start-point rejection draws
first where applicable, then dim normals per step); estimator reductions
run in fixed path-index order. Worker count and block sizes
cannot change any estimate bit-for-bit.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geometry import Disk, DomainSpec, Interval, Polygon, Rectangle
from .moments import MomentSequence

STEP_CAP = 10 ** 8


class McError(RuntimeError):
    pass


class SimConfig:
    """Domain, start point (None for uniform starts), paths, dt, seed."""

    def __init__(self, spec: DomainSpec, x0, paths: int, dt: float, seed: int):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if paths < 1:
            raise ValueError("need at least one path")
        if x0 is not None:
            pt = np.atleast_2d(np.asarray(x0, dtype=float))
            if not bool(np.all(spec.contains(pt if spec.dim > 1 else pt[0]))):
                raise ValueError(f"x0={x0} is not strictly interior")
        self.spec = spec
        self.x0 = None if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
        self.paths = int(paths)
        self.dt = float(dt)
        self.seed = int(seed)

    def describe(self):
        return {
            "domain": repr(self.spec),
            "x0": None if self.x0 is None else list(map(float, self.x0)),
            "paths": self.paths,
            "dt": self.dt,
            "seed": self.seed,
            "stream_rule": "philox key=(seed, path_index)",
        }


class ExitSamples:
    """Per-path exit times; NaN marks paths cut by the step cap."""

    def __init__(self, cfg: SimConfig, taus):
        self.cfg = cfg
        self.taus = np.asarray(taus, dtype=float)
        self.excluded = int(np.count_nonzero(np.isnan(self.taus)))

    def finite(self):
        return self.taus[~np.isnan(self.taus)]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("path_index,tau\n")
            for i, t in enumerate(self.taus):
                fh.write(f"{i},{t:.17g}\n")


class McEstimate:
    def __init__(self, value, stderr, paths, dt, tag):
        self.value = float(value)
        self.stderr = float(stderr)
        self.paths = int(paths)
        self.dt = float(dt)
        self.tag = tag

    def to_dict(self, cfg=None):
        d = {"value": self.value, "stderr": self.stderr, "paths": self.paths,
             "dt": self.dt, "estimator": self.tag}
        if cfg is not None:
            d["config"] = cfg.describe()
        return d

    def __repr__(self):
        return f"McEstimate({self.tag}: {self.value:.6g} +- {self.stderr:.2g})"


def _outside_mask(spec, pos):
    """pos is (rows, L, dim) or (rows, L) in 1D; True where pos is not in D."""
    if isinstance(spec, Interval):
        return (pos <= spec.a) | (pos >= spec.b)
    if isinstance(spec, Rectangle):
        return ((pos[..., 0] <= 0) | (pos[..., 0] >= spec.Lx) |
                (pos[..., 1] <= 0) | (pos[..., 1] >= spec.Ly))
    if isinstance(spec, Disk):
        return pos[..., 0] ** 2 + pos[..., 1] ** 2 >= spec.R ** 2
    if isinstance(spec, Polygon):
        shape = pos.shape[:-1]
        flat = pos.reshape(-1, 2)
        return ~spec.crossing_parity(flat).reshape(shape)
    raise McError(f"unsupported domain {spec!r}")


def _draw_start(spec, gen):
    """One uniform interior start point from the path's own stream."""
    if isinstance(spec, Interval):
        return np.array([spec.a + gen.random() * (spec.b - spec.a)])
    if isinstance(spec, Rectangle):
        return np.array([gen.random() * spec.Lx, gen.random() * spec.Ly])
    # rejection from the bounding box
    if isinstance(spec, Disk):
        lo = np.array([-spec.R, -spec.R])
        side = np.array([2 * spec.R, 2 * spec.R])
    elif isinstance(spec, Polygon):
        v = np.asarray(spec.vertices)
        lo = v.min(axis=0)
        side = v.max(axis=0) - lo
    else:
        raise McError(f"unsupported domain {spec!r}")
    for _ in range(10000):
        pt = lo + gen.random(2) * side
        if bool(np.all(spec.contains(pt[None, :]))):
            return pt
    raise McError("start-point rejection sampling failed")


def _run_chunk(cfg, lo, hi, block_steps, taus):
    """Simulate paths [lo, hi); writes into the shared taus slice."""
    spec = cfg.spec
    dim = spec.dim
    dt = cfg.dt
    sqdt = math.sqrt(dt)
    count = hi - lo
    gens = [np.random.Generator(np.random.Philox(key=[cfg.seed, lo + i]))
            for i in range(count)]
    if cfg.x0 is None:
        pos = np.stack([_draw_start(spec, g) for g in gens])
    else:
        pos = np.tile(cfg.x0.astype(float), (count, 1))
    alive = np.arange(count)
    steps_done = np.zeros(count, dtype=np.int64)
    out = np.full(count, np.nan)
    L = block_steps
    while len(alive):
        k = len(alive)
        if dim == 1:
            Z = np.empty((k, L))
            for r, idx in enumerate(alive):
                gens[idx].standard_normal(out=Z[r])
            traj = pos[alive, 0][:, None] + sqdt * np.cumsum(Z, axis=1)
            outside = _outside_mask(spec, traj)
        else:
            Z = np.empty((k, L, dim))
            for r, idx in enumerate(alive):
                gens[idx].standard_normal(out=Z[r])
            traj = pos[alive][:, None, :] + sqdt * np.cumsum(Z, axis=1)
            outside = _outside_mask(spec, traj)
        exited = outside.any(axis=1)
        first = np.argmax(outside, axis=1)
        for r in np.nonzero(exited)[0]:
            idx = alive[r]
            out[idx] = (steps_done[idx] + first[r] + 1) * dt
        survivors = np.nonzero(~exited)[0]
        if len(survivors):
            steps_done[alive[survivors]] += L
            if dim == 1:
                pos[alive[survivors], 0] = traj[survivors, -1]
            else:
                pos[alive[survivors]] = traj[survivors, -1]
            capped = steps_done[alive[survivors]] >= STEP_CAP
            keep = survivors[~capped]
            alive = alive[keep] if len(keep) < len(survivors) else alive[survivors]
        else:
            alive = alive[:0]
    taus[lo:hi] = out


def simulate_exit_times(cfg: SimConfig, workers: int = 1,
                        block_steps: int = 4096, chunk_paths: int = 1024):
    """One exit time per path. Results do not depend on workers, block_steps,
    or chunk_paths; those only schedule the work."""
    taus = np.full(cfg.paths, np.nan)
    spans = [(lo, min(lo + chunk_paths, cfg.paths))
             for lo in range(0, cfg.paths, chunk_paths)]
    if workers <= 1:
        for lo, hi in spans:
            _run_chunk(cfg, lo, hi, block_steps, taus)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_run_chunk, cfg, lo, hi, block_steps, taus)
                    for lo, hi in spans]
            for f in futs:
                f.result()
    return ExitSamples(cfg, taus)


def _mean_se(values):
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((values - mean) ** 2) / (n - 1) if n > 1 else 0.0
    return mean, math.sqrt(var / n)


def mc_moments(samples: ExitSamples, n_max: int) -> MomentSequence:
    """Moment estimates from exit samples.

    Uniform-start samples estimate the invariants A_n = vol * E[tau^n];
    fixed-start samples estimate E^{x0}[tau^n] (A_0 is then 1, not the
    volume). Variance of tau^n explodes with n, so n_max <= 4.
    """
    if n_max > 4:
        raise McError("n_max > 4: tau^n variance is uninformative")
    taus = samples.finite()
    if samples.excluded:
        raise McError(f"{samples.excluded} paths hit the step cap")
    scale = samples.cfg.spec.volume() if samples.cfg.x0 is None else 1.0
    A = [scale]
    se = [0.0]
    for n in range(1, n_max + 1):
        mean, s = _mean_se(taus ** n)
        if mean > 0 and s / mean > 0.2:
            raise McError(f"relative standard error {s/mean:.2f} > 20% "
                          f"for n={n}; need more paths")
        A.append(scale * mean)
        se.append(scale * s)
    return MomentSequence(A, "montecarlo", stderr=se)


def mc_survival(cfg: SimConfig, t: float, samples: ExitSamples = None) -> McEstimate:
    """P^{x0}(tau > t) with binomial standard error."""
    if t <= 0:
        raise ValueError("t must be positive")
    if samples is None:
        samples = simulate_exit_times(cfg)
    taus = samples.finite()
    n = len(taus)
    phat = float(np.count_nonzero(taus > t)) / n
    se = math.sqrt(max(phat * (1.0 - phat), 0.0) / n)
    return McEstimate(phat, se, n, cfg.dt, f"survival(t={t:g})")


def mc_laplace(cfg: SimConfig, s: float, samples: ExitSamples = None) -> McEstimate:
    """E^{x0}[exp(-s tau)], the Laplace transform at s."""
    if s < 0:
        raise ValueError("s must be >= 0")
    if samples is None:
        samples = simulate_exit_times(cfg)
    taus = samples.finite()
    vals = np.exp(-s * taus)
    mean, se = _mean_se(vals)
    return McEstimate(mean, se, len(taus), cfg.dt, f"laplace(s={s:g})")


def estimates_to_json(path, cfg: SimConfig, estimates):
    with open(path, "w") as fh:
        json.dump([e.to_dict(cfg) for e in estimates], fh, indent=2)
        fh.write("\n")
