"""Source-cavity decay schedules kappa_s(t).

A source cavity holding one photon and decaying at kappa_s(t) emits the
field amplitude f(t) = sqrt(2 kappa_s(t)) c_s(t) with dc_s/dt = -kappa_s c_s.
Inverting this for a target envelope gives

    kappa_s(t) = |f(t)|^2 / (2 (1 - int_0^t |f|^2)).

Schedules expose rates in MHz (linear) like every other input; the
``angular`` helpers return rad/ns for the integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import erf

from .params import RATE_UNIT

DEFAULT_CAP = 500.0  # MHz
DEFAULT_HEADROOM = 1e-4
DEFAULT_STEP = 0.02  # ns


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Piecewise description of kappa_s(t) on [0, t_end], zero afterwards.

    ``kind == "constant"`` keeps ``rate`` on all of [0, t_end]. For
    ``"tabulated"`` the rate is linear between the nodes ``grid``/``values``.
    """

    kind: str
    t_end: float
    cap: float = DEFAULT_CAP
    rate: float = 0.0
    grid: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("constant", "tabulated"):
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "tabulated":
            if np.any(self.values < 0) or np.any(self.values > self.cap * (1 + 1e-12)):
                raise ScheduleError("tabulated rates must lie in [0, cap]")
        elif self.rate < 0:
            raise ScheduleError("rate must be >= 0")

    @property
    def is_constant(self):
        return self.kind == "constant"

    @property
    def breakpoints(self):
        return (self.t_end,)

    def kappa_s(self, t):
        """Rate in MHz at time(s) ``t`` in ns."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = np.where((t >= 0) & (t <= self.t_end), self.rate, 0.0)
        else:
            out = np.interp(t, self.grid, self.values, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def angular(self, t):
        return self.kappa_s(t) * RATE_UNIT

    def integral(self, t):
        """int_0^t kappa_s dt' in rad (angular units), exact for the interpolant."""
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = self.rate * RATE_UNIT * np.clip(t, 0.0, self.t_end)
            return out if out.ndim else float(out)
        cum = self._cumulative()
        tc = np.clip(t, self.grid[0], self.grid[-1])
        i = np.clip(np.searchsorted(self.grid, tc, side="right") - 1, 0, len(self.grid) - 2)
        dt = tc - self.grid[i]
        slope = (self.values[i + 1] - self.values[i]) / (self.grid[i + 1] - self.grid[i])
        out = cum[i] + RATE_UNIT * (self.values[i] * dt + 0.5 * slope * dt * dt)
        return out if out.ndim else float(out)

    def _cumulative(self):
        cached = getattr(self, "_cum", None)
        if cached is None:
            cached = np.concatenate(([0.0], np.cumsum(
                0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.grid)))) * RATE_UNIT
            object.__setattr__(self, "_cum", cached)
        return cached

    def residual_norm(self):
        """Probability still in the source cavity after t_end."""
        return math.exp(-2.0 * self.integral(self.t_end))


def exponential_schedule(kappa_s, t_end):
    if not kappa_s > 0:
        raise ScheduleError(f"kappa_s must be > 0 (got {kappa_s})")
    return Schedule("constant", t_end=float(t_end), rate=float(kappa_s), cap=max(DEFAULT_CAP, kappa_s))


def exponential_window(kappa_s, residual=1e-10):
    """t_end (ns) after which exp(-2 kappa_s t) has dropped to ``residual``."""
    return -math.log(residual) / (2.0 * kappa_s * RATE_UNIT)


def shaped_schedule(envelope, t_end, cap=DEFAULT_CAP, headroom=DEFAULT_HEADROOM, step=DEFAULT_STEP):
    """Tabulated schedule whose source emits the real envelope ``envelope(t)``.

    ``envelope`` maps time in ns to an amplitude in ns^-1/2 on [0, t_end].
    """
    n = max(2, int(math.ceil(t_end / step)) + 1)
    grid = np.linspace(0.0, t_end, n)
    f2 = np.abs(np.asarray(envelope(grid), dtype=float)) ** 2
    emitted = cumulative_trapezoid(f2, grid, initial=0.0)
    # small slack for the quadrature of an envelope normalized to exactly 1 - headroom
    if emitted[-1] > 1.0 - headroom + 1e-9:
        raise ScheduleError(
            f"envelope norm {emitted[-1]:.6g} exceeds 1 - headroom = {1.0 - headroom:.6g}")
    remaining = 1.0 - emitted
    if np.any(remaining <= 0):
        raise ScheduleError("source population would become negative")
    rates = f2 / (2.0 * remaining) / RATE_UNIT
    return Schedule("tabulated", t_end=float(t_end), cap=float(cap),
                    grid=grid, values=np.minimum(rates, cap))


def emitted_envelope(schedule):
    """Amplitude the source actually emits: t -> sqrt(2 kappa_s) exp(-int kappa_s)."""

    def f(t):
        return np.sqrt(2.0 * schedule.angular(t)) * np.exp(-schedule.integral(t))

    return f


def gaussian_envelope(fwhm, n_sigma=3.0, headroom=DEFAULT_HEADROOM, fwhm_of="intensity"):
    """Truncated Gaussian amplitude envelope and its window length (ns).

    ``fwhm_of`` says whether ``fwhm`` refers to |f|^2 (default) or to f.
    The window spans +-n_sigma amplitude standard deviations around the peak
    and the envelope is scaled to carry 1 - headroom of the photon.
    """
    if fwhm_of == "intensity":
        sigma = math.sqrt(2.0) * fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    elif fwhm_of == "amplitude":
        sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    else:
        raise ValueError(f"fwhm_of must be 'intensity' or 'amplitude' (got {fwhm_of!r})")
    t0 = n_sigma * sigma
    window = 2.0 * t0
    # |f|^2 = A exp(-(t-t0)^2 / sigma^2): a normal density with std sigma/sqrt(2)
    mass = math.sqrt(math.pi) * sigma * erf(n_sigma)
    amp2 = (1.0 - headroom) / mass

    def f(t):
        t = np.asarray(t, dtype=float)
        out = math.sqrt(amp2) * np.exp(-0.5 * ((t - t0) / sigma) ** 2)
        return np.where((t >= 0) & (t <= window), out, 0.0)

    return f, window


def gaussian_schedule(fwhm=53.0, **kwargs):
    step = kwargs.pop("step", DEFAULT_STEP)
    cap = kwargs.pop("cap", DEFAULT_CAP)
    f, window = gaussian_envelope(fwhm, **kwargs)
    return shaped_schedule(f, window, cap=cap, headroom=kwargs.get("headroom", DEFAULT_HEADROOM),
                           step=step)


def load_envelope(path):
    """Read a two-column (t_ns, amplitude) text file into an interpolating envelope."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise ScheduleError(f"{path}: expected two columns, found {data.shape[1]}")
    t, amp = data[:, 0], data[:, 1]
    if np.any(np.diff(t) <= 0):
        raise ScheduleError(f"{path}: time column must be strictly increasing")

    def f(x):
        return np.interp(x, t, amp, left=0.0, right=0.0)

    return f, float(t[-1])
