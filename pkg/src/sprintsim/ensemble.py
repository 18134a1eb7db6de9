"""Ensembles over the random atom-resonator coupling.

Each draw gets its own counter-based stream keyed by (seed, draw index), and
draws are integrated in fixed index chunks. Chunk composition never depends
on the worker count and the reduction runs over the full per-draw array in
index order, so a result is bit-identical for any ``workers``.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from . import __version__
from .analytic import DesignPoint, optimal_detuned_approx
from .branching import branching_matrix
from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, ConservationError, integrate_batch, steady_state_response
from .generator import build_generator
from .levels import LevelScheme, rb87
from .outcomes import OutcomeTable, classification_matrices
from .params import DEFAULT_PARAMS, SystemParams
from .pulses import Schedule, gaussian_schedule

log = logging.getLogger(__name__)

CHUNK = 128


@dataclass(frozen=True)
class CouplingDistribution:
    mean: float = 16.0
    std: float = 6.0
    g_min: float = 7.0
    g_max: float = 28.0

    def __post_init__(self):
        if not 0 <= self.g_min < self.g_max:
            raise ValueError(f"need 0 <= g_min < g_max (got {self.g_min}, {self.g_max})")
        if self.mean <= 0 or self.std < 0:
            raise ValueError("mean must be > 0 and std >= 0")
        if self.std == 0 and not self.g_min <= self.mean <= self.g_max:
            raise ValueError("a zero-width distribution needs its mean inside the bounds")


def draw_rng(seed, index):
    """Independent generator for draw ``index`` of master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def sample_coupling(dist: CouplingDistribution, rng):
    """(g_mag, g_phase): truncated-normal magnitude by rejection, uniform phase."""
    if dist.std == 0:
        g = dist.mean
    else:
        while True:
            g = rng.normal(dist.mean, dist.std)
            if dist.g_min <= g <= dist.g_max:
                break
    return float(g), float(rng.uniform(0.0, 2.0 * math.pi))


@dataclass(frozen=True)
class EnsembleConfig:
    params: SystemParams = DEFAULT_PARAMS
    scheme: LevelScheme = field(default_factory=rb87)
    schedule: Schedule | None = None
    n: int = 10_000
    seed: int = 0
    distribution: CouplingDistribution = CouplingDistribution()
    workers: int = 1
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    pulse_fwhm: float = 53.0
    random_phase: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.schedule is None:
            object.__setattr__(self, "schedule", gaussian_schedule(self.pulse_fwhm))

    @property
    def initial_ground(self):
        return self.scheme.initial_ground

    def metadata(self):
        return {
            "version": __version__,
            "params": self.params.to_dict(),
            "scheme": self.scheme.name,
            "initial_ground": self.initial_ground,
            "seed": self.seed,
            "n": self.n,
            "distribution": asdict(self.distribution),
            "pulse": {"kind": self.schedule.kind, "t_end_ns": self.schedule.t_end,
                      "fwhm_ns": self.pulse_fwhm if self.schedule.kind == "tabulated" else None,
                      "rate_mhz": self.schedule.rate if self.schedule.kind == "constant" else None},
            "rtol": self.rtol,
            "atol": self.atol,
            "random_phase": self.random_phase,
        }


def draw_params(cfg: EnsembleConfig, index):
    g, phase = sample_coupling(cfg.distribution, draw_rng(cfg.seed, index))
    return cfg.params.replace(g_mag=g, g_phase=phase if cfg.random_phase else cfg.params.g_phase)


def _run_chunk(cfg, start, stop, Wf, Wp):
    gens = [build_generator(draw_params(cfg, i), cfg.scheme) for i in range(start, stop)]
    try:
        psi, flux, _, _ = integrate_batch(gens, cfg.schedule, rtol=cfg.rtol, atol=cfg.atol)
    except ConservationError as exc:
        raise ConservationError(
            f"draws {start}..{stop - 1} (seed {cfg.seed}, spawn keys = draw index): {exc}") from exc
    pop = np.abs(psi) ** 2
    return flux @ Wf + pop @ Wp, pop.sum(axis=1)


def run_draws(cfg: EnsembleConfig):
    """Per-draw joint tables, shape (n, 9), and residual norms, shape (n,)."""
    B = branching_matrix(cfg.scheme)
    Wf, Wp = classification_matrices(cfg.scheme, B)
    bounds = [(s, min(s + CHUNK, cfg.n)) for s in range(0, cfg.n, CHUNK)]
    if cfg.workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda b: _run_chunk(cfg, b[0], b[1], Wf, Wp), bounds))
    else:
        parts = [_run_chunk(cfg, s, e, Wf, Wp) for s, e in bounds]
    joints = np.concatenate([p[0] for p in parts])
    residual = np.concatenate([p[1] for p in parts])
    return joints, residual


def run_ensemble(cfg: EnsembleConfig) -> OutcomeTable:
    joints, residual = run_draws(cfg)
    n = cfg.n
    mean = joints.sum(axis=0) / n
    stderr = joints.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(9)
    return OutcomeTable(mean.reshape(3, 3), float(residual.sum() / n), n,
                        stderr.reshape(3, 3), cfg.metadata())


SWEEP_AXES = ("kappa_ex", "delta_C", "g", "pulse_fwhm")


def _at(cfg, axis, value):
    if axis in ("kappa_ex", "delta_C"):
        return replace(cfg, params=cfg.params.replace(**{axis: float(value)}))
    if axis == "g":
        return replace(cfg, distribution=replace(cfg.distribution, mean=float(value)))
    if axis == "pulse_fwhm":
        return replace(cfg, pulse_fwhm=float(value), schedule=gaussian_schedule(float(value)))
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def sweep(cfg: EnsembleConfig, axis, grid):
    """One ensemble per grid value, all with the same seed (common random numbers)."""
    grid = list(grid)
    if not grid:
        raise ValueError("empty sweep grid")
    out = []
    for v in grid:
        c = _at(cfg, axis, v)
        table = run_ensemble(c)
        tot = table.photon_totals
        out.append({
            "axis": axis, "value": float(v),
            "kappa_ex": c.params.kappa_ex, "delta_C": c.params.delta_C,
            "T": tot["T"], "R": tot["R"], "L": tot["L"],
            "fidelity": table.fidelity, "efficiency": tot["R"],
            "toggle_given_R": table.toggle_given_R,
        })
    return out


def analytic_objective(params: SystemParams, scheme: LevelScheme):
    """1 - R/(R+T) of the steady-state (long-pulse) response; no sampling."""

    def f(kappa_ex, delta_C):
        gen = build_generator(params.replace(kappa_ex=kappa_ex, delta_C=delta_C), scheme)
        t, r = steady_state_response(gen)
        T = sum(abs(v) ** 2 for v in t.values())
        R = sum(abs(v) ** 2 for v in r.values())
        return T / (R + T), T, R

    return f


def optimize(cfg: EnsembleConfig, free=("kappa_ex", "delta_C"), x0=None, analytic=False,
             xatol=1e-3, fatol=1e-9, max_evals=400):
    """Maximize routing fidelity over the free parameters with a Nelder-Mead simplex.

    With ``analytic=True`` the objective is the steady-state response of
    ``cfg.params`` and ``cfg.scheme``; otherwise it is the ensemble fidelity
    at fixed seed, which makes the objective deterministic.
    """
    free = tuple(free)
    for name in free:
        if name not in ("kappa_ex", "delta_C"):
            raise ValueError(f"cannot optimize {name!r}")
    if x0 is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            seed_pt = optimal_detuned_approx(cfg.params)
        start = {"kappa_ex": seed_pt.kappa_ex, "delta_C": seed_pt.delta_C}
        x0 = [start[n] for n in free]

    fixed = {"kappa_ex": cfg.params.kappa_ex, "delta_C": cfg.params.delta_C}
    if analytic:
        obj = analytic_objective(cfg.params, cfg.scheme)
    cache = {}

    def evaluate(x):
        vals = dict(fixed)
        vals.update(zip(free, (float(v) for v in x)))
        if vals["kappa_ex"] <= 0:
            return 1.0, math.nan, math.nan
        key = (vals["kappa_ex"], vals["delta_C"])
        if key not in cache:
            if analytic:
                cache[key] = obj(*key)
            else:
                table = run_ensemble(replace(cfg, params=cfg.params.replace(**vals)))
                tot = table.photon_totals
                cache[key] = (1.0 - table.fidelity, tot["T"], tot["R"])
            log.info("kappa_ex=%.4f delta_C=%.4f infidelity=%.3e", *key, cache[key][0])
        return cache[key]

    res = minimize(lambda x: evaluate(x)[0], np.asarray(x0, dtype=float), method="Nelder-Mead",
                   options={"xatol": xatol, "fatol": fatol, "maxfev": max_evals,
                            "initial_simplex": _simplex(np.asarray(x0, dtype=float))})
    vals = dict(fixed)
    vals.update(zip(free, (float(v) for v in res.x)))
    _, T, R = evaluate(res.x)
    return DesignPoint(vals["kappa_ex"], vals["delta_C"], float(T), float(R))


def _simplex(x0):
    pts = [x0]
    for j in range(len(x0)):
        p = x0.copy()
        p[j] += max(0.1 * abs(x0[j]), 1.0)
        pts.append(p)
    return np.array(pts)
