"""Closed-form steady-state results and design equations.

Everything here works in linear MHz: the formulas only involve ratios of
rates, so the 2 pi factor cancels. Cavity and atomic detunings enter as
complex rates kappa + i delta_C and gamma + i delta_a, which is the same
substitution that turns the resonant formulas into detuned ones.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import SystemParams


class DesignError(RuntimeError):
    """No physical operating point was found."""


@dataclass(frozen=True)
class Cooperativities:
    C_tot: complex
    C_tot_prime: complex
    C_i: float
    C_i_prime: complex
    C_1: complex
    C_2_prime: complex


@dataclass(frozen=True)
class DesignPoint:
    kappa_ex: float
    delta_C: float
    predicted_T: float
    predicted_R: float

    @property
    def fidelity(self):
        total = self.predicted_R + self.predicted_T
        return self.predicted_R / total if total > 0 else float("nan")

    @property
    def efficiency(self):
        return self.predicted_R


def _cavity(p: SystemParams, delta_C=None):
    dc = p.delta_C if delta_C is None else delta_C
    kc = p.kappa + 1j * dc
    if kc == 0:
        raise ZeroDivisionError("kappa + i delta_C must be nonzero")
    return kc


def bare_transmission(p: SystemParams, delta_C=None):
    """t0: forward transmission amplitude of the empty resonator."""
    kc = _cavity(p, delta_C)
    return 1.0 - 2.0 * p.kappa_ex / kc


def cooperativities(p: SystemParams, g1=None, g2=None, g1p=None, g2p=None, delta_C=None):
    g1 = p.g if g1 is None else g1
    g2 = p.g if g2 is None else g2
    g1p = p.g_prime if g1p is None else g1p
    g2p = -p.g_prime if g2p is None else g2p
    kc = _cavity(p, delta_C)
    gam = p.gamma + 1j * p.delta_a
    gamp = p.gamma_prime + 1j * p.delta_a_prime
    gm = abs(p.g)
    # guard the products: tiny factors can underflow to zero together
    den_i = p.kappa_i * p.gamma
    den_ip = p.kappa_i * p.delta_a_prime
    return Cooperativities(
        C_tot=(abs(g1) ** 2 + abs(g2) ** 2) / (2 * kc * gam),
        C_tot_prime=(abs(g1p) ** 2 + abs(g2p) ** 2) / (2 * kc * gamp) if gamp != 0 else complex("inf"),
        C_i=gm ** 2 / den_i if den_i > 0 else math.inf,
        C_i_prime=abs(p.g_prime) ** 2 / den_ip if den_ip != 0 else complex("inf"),
        C_1=abs(g1) ** 2 / (2 * kc * gam),
        C_2_prime=abs(g2p) ** 2 / (2 * kc * gamp) if gamp != 0 else complex("inf"),
    )


def steady_state_amplitudes(p: SystemParams, kappa_s=1.0, g1=None, g2=None):
    """Prefactors of exp(-kappa_s t) for (alpha, beta, xi) in the long-pulse limit.

    Three-level system with couplings g1 (mode a) and g2 (mode b).
    """
    if p.kappa == 0:
        raise ZeroDivisionError("kappa = 0: the resonator has no decay")
    g1 = p.g if g1 is None else g1
    g2 = p.g if g2 is None else g2
    kc = _cavity(p)
    gam = p.gamma + 1j * p.delta_a
    G2 = abs(g1) ** 2 + abs(g2) ** 2
    pre = 2 * math.sqrt(kappa_s * p.kappa_ex)
    if G2 == 0:
        return -pre / kc, 0j, 0j
    C = G2 / (2 * kc * gam)
    frac = 2 * C / (1 + 2 * C)
    alpha = -pre / kc * (1 - abs(g1) ** 2 / G2 * frac)
    beta = pre / kc * g1 * g2 / G2 * frac
    xi = 2j * math.sqrt(kappa_s * p.kappa_ex) * g1 / G2 * frac
    return alpha, beta, xi


def three_level_amplitudes(p: SystemParams, g1=None, g2=None, delta_C=None, kappa_ex=None):
    """Complex transmission and reflection amplitudes of the Lambda system."""
    if kappa_ex is not None:
        p = p.replace(kappa_ex=kappa_ex)
    g1 = p.g if g1 is None else g1
    g2 = p.g if g2 is None else g2
    kc = _cavity(p, delta_C)
    t0 = bare_transmission(p, delta_C)
    G2 = abs(g1) ** 2 + abs(g2) ** 2
    if G2 == 0:
        return t0, 0j
    C = G2 / (2 * kc * (p.gamma + 1j * p.delta_a))
    frac = 2 * C / (1 + 2 * C)
    scale = 2 * p.kappa_ex / kc
    t = scale * abs(g1) ** 2 / G2 * frac + t0
    r = scale * g1 * g2 / G2 * frac
    return t, r


def three_level_TR(p: SystemParams, g1=None, g2=None):
    t, r = three_level_amplitudes(p, g1, g2)
    return abs(t) ** 2, abs(r) ** 2


def critical_coupling(g, kappa_i, gamma):
    """Fiber coupling kappa_ex that nulls transmission for a symmetric Lambda atom."""
    C_i = abs(g) ** 2 / (kappa_i * gamma)
    return kappa_i * math.sqrt(1 + 2 * C_i)


def four_level_amplitudes(p: SystemParams, s=-1, eta=None, delta_C=None, kappa_ex=None):
    """Transmission / reflection amplitudes with a second excited state.

    Couplings are g1 = g2 = g on e and g1' = eta g, g2' = s eta g on e'.
    ``eta`` defaults to ``p.g_prime_ratio``.
    """
    if s not in (1, -1):
        raise ValueError(f"s must be +1 or -1 (got {s})")
    if kappa_ex is not None:
        p = p.replace(kappa_ex=kappa_ex)
    eta = p.g_prime_ratio if eta is None else eta
    g1 = g2 = p.g
    g1p, g2p = eta * g1, s * eta * g2
    kc = _cavity(p, delta_C)
    t0 = bare_transmission(p, delta_C)
    G2 = abs(g1) ** 2 + abs(g2) ** 2
    if G2 == 0:
        return t0, 0j
    gamp = p.gamma_prime + 1j * p.delta_a_prime
    c = cooperativities(p, g1, g2, g1p, g2p, delta_C)
    Ct = c.C_tot
    Ctp = c.C_tot_prime if (eta != 0 and gamp != 0) else 0j
    C1 = c.C_1
    C2p = c.C_2_prime if (eta != 0 and gamp != 0) else 0j
    scale = 2 * p.kappa_ex / kc
    if s == 1:
        frac = 2 * (Ct + Ctp) / (1 + 2 * (Ct + Ctp))
        return (scale * abs(g1) ** 2 / G2 * frac + t0,
                scale * g1 * g2 / G2 * frac)
    den = 1 + 2 * (Ct + Ctp) + 16 * C1 * C2p
    t = scale * abs(g1) ** 2 / G2 * (2 * (Ct + Ctp) + 16 * G2 / abs(g1) ** 2 * C1 * C2p) / den + t0
    r = scale * g1 * g2 / G2 * 2 * (Ct - Ctp) / den
    return t, r


def four_level_TR(p: SystemParams, s=-1, eta=None, delta_C=None):
    t, r = four_level_amplitudes(p, s, eta, delta_C)
    return abs(t) ** 2, abs(r) ** 2


def optimal_detuned_approx(p: SystemParams, warn_ratio=0.2):
    """Closed-form (kappa_ex, delta_C) for a far-detuned second excited state."""
    ratio = p.gamma_prime / p.delta_a_prime
    if abs(ratio) > warn_ratio:
        warnings.warn(f"|gamma'/delta_a'| = {abs(ratio):.3g} is not small; approximation unreliable",
                      stacklevel=2)
    C_i = abs(p.g) ** 2 / (p.kappa_i * p.gamma)
    C_ip = abs(p.g_prime) ** 2 / (p.kappa_i * p.delta_a_prime)
    delta_C = p.kappa_i * C_ip * (1 + 2 * C_i) / (1 + C_i)
    kappa_ex = p.kappa_i * math.sqrt((1 + 2 * C_ip * ratio + C_ip ** 2 / (1 + C_i) ** 2) * (1 + 2 * C_i))
    return _design(p, kappa_ex, delta_C)


def _design(p, kappa_ex, delta_C):
    t, r = four_level_amplitudes(p, -1, delta_C=delta_C, kappa_ex=kappa_ex)
    return DesignPoint(float(kappa_ex), float(delta_C), abs(t) ** 2, abs(r) ** 2)


def optimal_detuned_exact(p: SystemParams, tol=1e-13, max_iter=100, seed=None):
    """Null the s = -1 transmission amplitude by damped Newton in (kappa_ex, delta_C)."""
    if seed is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            seed = optimal_detuned_approx(p)
        x = np.array([seed.kappa_ex, seed.delta_C])
    else:
        x = np.asarray(seed, dtype=float)

    def residual(v):
        t, _ = four_level_amplitudes(p, -1, delta_C=v[1], kappa_ex=v[0])
        return np.array([t.real, t.imag])

    scale = max(p.kappa_i, abs(p.delta_a_prime), 1.0)
    f = residual(x)
    for _ in range(max_iter):
        if np.max(np.abs(f)) < tol:
            break
        jac = np.empty((2, 2))
        for j in range(2):
            d = 1e-6 * max(abs(x[j]), scale)
            e = np.zeros(2)
            e[j] = d
            jac[:, j] = (residual(x + e) - residual(x - e)) / (2 * d)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            raise DesignError("singular Jacobian in the (kappa_ex, delta_C) solve") from None
        lam = 1.0
        fn = np.linalg.norm(f)
        while lam > 1e-6:
            trial = x + lam * step
            if trial[0] > 0:
                ft = residual(trial)
                if np.linalg.norm(ft) < fn:
                    break
            lam *= 0.5
        else:
            raise DesignError("damped Newton stalled; no root found near the seed")
        x, f = trial, ft
    else:
        raise DesignError(f"no convergence after {max_iter} iterations (|T amp| = {np.max(np.abs(f)):.3g})")
    if x[0] <= 0:
        raise DesignError(f"root at unphysical kappa_ex = {x[0]:.6g}")
    return _design(p, x[0], x[1])
