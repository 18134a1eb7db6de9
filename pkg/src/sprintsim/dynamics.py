"""No-jump evolution of the single-excitation state with channel bookkeeping.

With one excitation in the system, every photon detection or spontaneous
emission ends the dynamics, so the deterministic non-Hermitian evolution
plus the probability flux into each decay channel gives the exact outcome
probabilities. The fluxes are integrated alongside the amplitudes so they
share the step-size control:

    T_k  = int |sqrt(2 ks) c_s [k = init] + sqrt(2 kex) alpha_k|^2
    R_k  = int 2 kex |beta_k|^2
    Li_k = int 2 ki (|alpha_k|^2 + |beta_k|^2)
    sp_E = int 2 gamma_E |xi_E|^2

The integrator is a Dormand-Prince 5(4) pair working on a batch of
generators at once with a common step size, so that a batch result depends
only on its members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .generator import Generator
from .params import angular
from .pulses import Schedule

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
CONSERVATION_TOL = 1e-8

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


class IntegrationError(RuntimeError):
    pass


class ConservationError(IntegrationError):
    pass


@dataclass
class StateVector:
    amplitudes: np.ndarray
    t: float

    @property
    def norm2(self):
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass
class Trajectory:
    final_state: StateVector
    flux_T: dict
    flux_R: dict
    flux_Li: dict
    flux_sp: dict
    residual_norm: float
    n_steps: int = 0
    trace: np.ndarray | None = field(default=None, repr=False)
    trace_columns: tuple = ()
    scheme: object = field(default=None, repr=False)

    @property
    def T(self):
        return sum(self.flux_T.values())

    @property
    def R(self):
        return sum(self.flux_R.values())

    @property
    def L(self):
        return sum(self.flux_Li.values()) + sum(self.flux_sp.values()) + self.residual_norm

    def total(self):
        return (self.T + self.R + sum(self.flux_Li.values()) + sum(self.flux_sp.values())
                + self.residual_norm)

    def residual_by_ground(self, gen):
        """Residual population resolved by atomic ground state (excited slots excluded)."""
        psi = self.final_state.amplitudes
        p = np.abs(psi) ** 2
        out = {}
        for k in gen.scheme.grounds:
            out[k] = p[gen.basis_index[f"a:{k}"]] + p[gen.basis_index[f"b:{k}"]]
        out[gen.scheme.initial_ground] += p[0]
        return out

    def residual_excited(self, gen):
        p = np.abs(self.final_state.amplitudes) ** 2
        return {e: p[gen.basis_index[e]] for e in gen.scheme.excited_labels}


class _Batch:
    """Stacked generators sharing a level scheme and a schedule."""

    def __init__(self, gens, sched):
        first = gens[0]
        for g in gens[1:]:
            if g.scheme != first.scheme or g.input_mode != first.input_mode:
                raise ValueError("all generators in a batch must share the level scheme and input mode")
        self.gens = gens
        self.sched = sched
        self.static = np.stack([g.static for g in gens])
        self.drive = np.stack([g.drive_unit for g in gens])
        # a: forward (transmission) slots, b: backward (reflection) slots
        fwd, bwd = first.output_modes
        self.a = first.slots(fwd)
        self.b = first.slots(bwd)
        self.e = first.excited_slots
        self.init = first.scheme.grounds.index(first.scheme.initial_ground)
        self.kex = np.array([angular(g.params.kappa_ex) for g in gens])[:, None]
        self.ki = np.array([angular(g.params.kappa_i) for g in gens])[:, None]
        self.gam = np.stack([g.excited_decay() for g in gens])
        self.sqrt2kex = np.sqrt(2.0 * self.kex)
        self.ng = len(self.a)
        self.nflux = 3 * self.ng + len(self.e)

    def rhs(self, t, y):
        ks = self.sched.angular(t)
        dy = np.matmul(self.static, y[:, :, None])[:, :, 0]
        if ks:
            src = y[:, 0]
            dy[:, 0] -= ks * src
            dy += math.sqrt(ks) * self.drive * src[:, None]
        return dy

    def rates(self, t, y):
        ks = self.sched.angular(t)
        alpha = y[:, self.a]
        beta = y[:, self.b]
        xi = y[:, self.e]
        amp = self.sqrt2kex * alpha
        if ks:
            amp[:, self.init] += math.sqrt(2.0 * ks) * y[:, 0]
        pa = alpha.real ** 2 + alpha.imag ** 2
        pb = beta.real ** 2 + beta.imag ** 2
        return np.concatenate([
            amp.real ** 2 + amp.imag ** 2,
            2.0 * self.kex * pb,
            2.0 * self.ki * (pa + pb),
            2.0 * self.gam * (xi.real ** 2 + xi.imag ** 2),
        ], axis=1)


def _error_norm(err_y, err_f, y0, y1, f0, f1, rtol, atol):
    sy = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    sf = atol + rtol * np.maximum(np.abs(f0), np.abs(f1))
    n = y0.shape[1] + f0.shape[1]
    per = (np.sum(np.abs(err_y / sy) ** 2, axis=1) + np.sum((err_f / sf) ** 2, axis=1)) / n
    return math.sqrt(float(np.max(per)))


def _hermite(t0, t1, y0, y1, d0, d1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = 2 * s ** 3 - 3 * s ** 2 + 1
    h10 = s ** 3 - 2 * s ** 2 + s
    h01 = -2 * s ** 3 + 3 * s ** 2
    h11 = s ** 3 - s ** 2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


def integrate_batch(gens, sched: Schedule, t_end=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                    trace_stride=None, max_steps=5_000_000, check_conservation=True):
    """Integrate every generator in ``gens`` from the source state to ``t_end`` (ns).

    Returns ``(psi, flux, n_steps, traces)`` with ``psi`` of shape (B, dim) and
    ``flux`` of shape (B, 3 * n_grounds + n_excited); see ``flux_layout``.
    """
    batch = _Batch(list(gens), sched)
    if t_end is None:
        t_end = default_t_end(gens[0], sched)
    nb, dim = batch.static.shape[:2]
    y = np.zeros((nb, dim), dtype=complex)
    y[:, 0] = 1.0
    fl = np.zeros((nb, batch.nflux))

    stops = sorted({float(b) for b in sched.breakpoints if 0 < b < t_end} | {float(t_end)})
    t = 0.0
    k1 = batch.rhs(t, y)
    r1 = batch.rates(t, y)
    scale = np.max(np.abs(batch.static).sum(axis=2)) + sched.cap * angular(1.0)
    h = min(0.05 / max(scale, 1e-12), t_end)
    n_steps = 0
    traces = [] if trace_stride else None
    next_sample = 0.0
    if traces is not None:
        traces.append((0.0, np.abs(y) ** 2, fl.copy(), r1))
        next_sample = trace_stride

    for stop in stops:
        while t < stop:
            if n_steps >= max_steps:
                raise IntegrationError(f"exceeded {max_steps} steps at t = {t:.6g} ns")
            h = min(h, stop - t)
            if h < 1e-12 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t = {t:.6g} ns")
            ks_y = [k1]
            ks_r = [r1]
            for i in range(1, 6):
                yi = y + h * sum(a * kk for a, kk in zip(_A[i], ks_y))
                ti = t + _C[i] * h
                ks_y.append(batch.rhs(ti, yi))
                ks_r.append(batch.rates(ti, yi))
            y_new = y + h * sum(b * kk for b, kk in zip(_B, ks_y) if b)
            f_new = fl + h * sum(b * rr for b, rr in zip(_B, ks_r) if b)
            t_new = t + h
            k7 = batch.rhs(t_new, y_new)
            r7 = batch.rates(t_new, y_new)
            err_y = h * sum(e * kk for e, kk in zip(_E, ks_y + [k7]) if e)
            err_f = h * sum(e * rr for e, rr in zip(_E, ks_r + [r7]) if e)
            err = _error_norm(err_y, err_f, y, y_new, fl, f_new, rtol, atol)
            if err <= 1.0:
                if traces is not None:
                    while next_sample <= t_new:
                        ys = _hermite(t, t_new, y, y_new, k1, k7, next_sample)
                        fs = _hermite(t, t_new, fl, f_new, r1, r7, next_sample)
                        traces.append((next_sample, np.abs(ys) ** 2, fs, batch.rates(next_sample, ys)))
                        next_sample += trace_stride
                t, y, fl, k1, r1 = t_new, y_new, f_new, k7, r7
                n_steps += 1
                factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
            else:
                factor = max(0.2, 0.9 * err ** -0.2)
            h *= factor
        # the schedule may jump at a breakpoint; restart derivatives from the right
        t_right = math.nextafter(t, math.inf)
        k1 = batch.rhs(t_right, y)
        r1 = batch.rates(t_right, y)

    if check_conservation:
        total = fl.sum(axis=1) + np.sum(np.abs(y) ** 2, axis=1)
        bad = np.abs(total - 1.0)
        limit = 10.0 * CONSERVATION_TOL
        if np.any(bad > limit):
            i = int(np.argmax(bad))
            raise ConservationError(
                f"probability not conserved for batch member {i}: |sum - 1| = {bad[i]:.3e}")
    return y, fl, n_steps, traces


def flux_layout(scheme):
    """Column labels of the flux array: T/R/Li per ground, then sp per excited state."""
    cols = []
    for chan in ("T", "R", "Li"):
        cols += [(chan, k) for k in scheme.grounds]
    cols += [("sp", e) for e in scheme.excited_labels]
    return cols


def default_t_end(gen: Generator, sched: Schedule):
    """Pulse window plus ten resonator field lifetimes of ring-down."""
    return sched.t_end + 10.0 / angular(gen.params.kappa)


def to_trajectory(gen, psi, flux, t_end, n_steps=0, trace=None):
    cols = flux_layout(gen.scheme)
    buckets = {"T": {}, "R": {}, "Li": {}, "sp": {}}
    for (chan, lab), v in zip(cols, flux):
        buckets[chan][lab] = float(v)
    residual = float(np.sum(np.abs(psi) ** 2))
    trace_arr, trace_cols = None, ()
    if trace is not None:
        labels = sorted(gen.basis_index, key=gen.basis_index.get)
        trace_cols = (("t_ns",) + tuple(f"pop[{lab}]" for lab in labels)
                      + tuple(f"cum_{c}[{lab}]" for c, lab in cols)
                      + tuple(f"rate_{c}[{lab}]" for c, lab in cols))
        trace_arr = np.array([np.concatenate(([ts], pop[0], fs[0], rs[0])) for ts, pop, fs, rs in trace])
    return Trajectory(StateVector(psi.copy(), float(t_end)), buckets["T"], buckets["R"],
                      buckets["Li"], buckets["sp"], residual, n_steps, trace_arr, trace_cols, gen.scheme)


def integrate(gen: Generator, sched: Schedule, initial_ground=None, tol=(DEFAULT_RTOL, DEFAULT_ATOL),
              t_end=None, trace_stride=None):
    """Integrate a single trajectory; see ``integrate_batch``."""
    if initial_ground is not None and initial_ground != gen.scheme.initial_ground:
        raise ValueError(
            f"generator was built for initial ground {gen.scheme.initial_ground!r}, not {initial_ground!r}")
    rtol, atol = tol
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    if t_end is None:
        t_end = default_t_end(gen, sched)
    if t_end < sched.t_end:
        raise ValueError(f"t_end = {t_end} ns ends before the pulse window ({sched.t_end} ns)")
    psi, flux, n, traces = integrate_batch([gen], sched, t_end, rtol, atol, trace_stride)
    return to_trajectory(gen, psi[0], flux[0], t_end, n, traces)


def matrix_exponential_reference(gen: Generator, kappa_s, t, initial_ground=None):
    """psi(t) for a constant source rate (MHz), by scaling-and-squaring Pade exponentiation."""
    if initial_ground is not None and initial_ground != gen.scheme.initial_ground:
        raise ValueError("initial ground does not match the generator")
    if isinstance(kappa_s, Schedule):
        if not kappa_s.is_constant:
            raise ValueError("the matrix-exponential reference needs a constant schedule")
        if t > kappa_s.t_end:
            raise ValueError("reference is only valid inside the constant-rate window")
        kappa_s = kappa_s.rate
    m = gen.at_rate(angular(kappa_s))
    return StateVector(expm(m * t)[:, 0].copy(), float(t))


def instantaneous_rates(state: StateVector, gen: Generator, sched: Schedule, t=None):
    """Per-channel probability flux rates (1/ns) for one state, keyed like ``flux_layout``."""
    t = state.t if t is None else t
    batch = _Batch([gen], sched)
    r = batch.rates(t, state.amplitudes[None, :])[0]
    return dict(zip(flux_layout(gen.scheme), r.tolist()))


def write_trace(traj: Trajectory, path):
    if traj.trace is None:
        raise ValueError("trajectory was integrated without a trace")
    header = "\t".join(traj.trace_columns)
    np.savetxt(path, traj.trace, delimiter="\t", header=header, comments="", fmt="%.10e")


def steady_state_response(gen: Generator, omega=0.0):
    """Per-ground transmission and reflection amplitudes for a CW input.

    Solves the generator's non-source block for a unit-flux monochromatic
    input detuned by ``omega`` (MHz) from the drive frame. This is the
    kappa_s -> 0 limit of ``integrate`` computed without time stepping.
    """
    m = gen.static[1:, 1:] + 1j * angular(omega) * np.eye(gen.dim - 1)
    # unit input flux drives alpha_init with -sqrt(2 kex)
    src = -gen.drive_unit[1:] / math.sqrt(2.0)
    x = np.linalg.solve(m, src)
    sqrt2kex = math.sqrt(2.0 * angular(gen.params.kappa_ex))
    fwd, bwd = gen.output_modes
    t = {}
    r = {}
    for k in gen.scheme.grounds:
        t[k] = sqrt2kex * x[gen.basis_index[f"{fwd}:{k}"] - 1]
        r[k] = sqrt2kex * x[gen.basis_index[f"{bwd}:{k}"] - 1]
    t[gen.scheme.initial_ground] += 1.0
    return t, r
