import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import quad

from sprintsim.dynamics import (ConservationError, StateVector, integrate, instantaneous_rates,
                                matrix_exponential_reference, steady_state_response, write_trace)
from sprintsim.generator import build_generator
from sprintsim.levels import four_level, preset, rb87, three_level
from sprintsim.params import RATE_UNIT, SystemParams
from sprintsim.pulses import exponential_schedule, exponential_window, gaussian_schedule

from conftest import ideal, random_params


def steady_TR(gen, omega=0.0):
    t, r = steady_state_response(gen, omega)
    return sum(abs(v) ** 2 for v in t.values()), sum(abs(v) ** 2 for v in r.values())


def spectral_TR(gen, ks):
    """(T, R) for an exponential pulse from its Lorentzian spectrum, omega = ks tan(theta)."""
    out = []
    for which in (0, 1):
        val, _ = quad(lambda th: steady_TR(gen, ks * math.tan(th))[which], -math.pi / 2, math.pi / 2,
                      limit=500, epsabs=1e-13, epsrel=1e-10)
        out.append(val / math.pi)
    return tuple(out)


SCHEMES = [three_level(), four_level(1), four_level(-1), rb87(), rb87().with_initial("G2")]


@pytest.mark.parametrize("scheme", SCHEMES, ids=lambda s: f"{s.name}-{s.initial_ground}")
def test_conservation(scheme, rng):
    for _ in range(4):
        p = random_params(rng)
        ks = rng.uniform(0.5, 5.0)
        sched = exponential_schedule(ks, exponential_window(ks, 1e-6))
        traj = integrate(build_generator(p, scheme), sched)
        assert abs(traj.total() - 1.0) < 1e-8


def test_conservation_shaped_pulse():
    traj = integrate(build_generator(SystemParams(), rb87()), gaussian_schedule(20.0))
    assert abs(traj.total() - 1.0) < 1e-8
    # headroom left in the source plus ring-down tail
    assert traj.residual_norm == pytest.approx(1e-4, rel=0.05)


def test_matches_matrix_exponential(rng):
    worst = 0.0
    for _ in range(100):
        p = random_params(rng, impurities=False)
        ks = rng.uniform(0.5, 5.0)
        t = 3.0 / (ks * RATE_UNIT)
        gen = build_generator(p, three_level())
        traj = integrate(gen, exponential_schedule(ks, t), t_end=t)
        ref = matrix_exponential_reference(gen, ks, t)
        worst = max(worst, np.max(np.abs(traj.final_state.amplitudes - ref.amplitudes)))
    assert worst < 1e-8


def test_matrix_exponential_reference_at_zero():
    gen = build_generator(SystemParams(), rb87())
    psi = matrix_exponential_reference(gen, 1.0, 0.0)
    assert np.array_equal(psi.amplitudes, gen.initial_state())


def test_reference_rejects_shaped_schedule():
    gen = build_generator(SystemParams(), rb87())
    with pytest.raises(ValueError):
        matrix_exponential_reference(gen, gaussian_schedule(20.0), 1.0)


@pytest.mark.parametrize("method", ["integrate", "expm"])
def test_empty_cavity_two_pole(method):
    # alpha' = -2 sqrt(ks kex) e^{-ks t} - kappa alpha  =>  closed form below
    p = ideal(g_mag=0.0, kappa_i=0.0, kappa_ex=20.0)
    ks_mhz = 3.0
    ks, kap, kex = ks_mhz * RATE_UNIT, p.kappa * RATE_UNIT, p.kappa_ex * RATE_UNIT
    t = 40.0
    gen = build_generator(p, three_level())
    if method == "integrate":
        psi = integrate(gen, exponential_schedule(ks_mhz, t), t_end=t).final_state.amplitudes
    else:
        psi = matrix_exponential_reference(gen, ks_mhz, t).amplitudes
    alpha = -2 * math.sqrt(ks * kex) * (math.exp(-ks * t) - math.exp(-kap * t)) / (kap - ks)
    assert psi[gen.basis_index["a:G1"]] == pytest.approx(alpha, abs=1e-8)
    assert psi[0] == pytest.approx(math.exp(-ks * t), abs=1e-8)


def test_exponential_pulse_matches_spectral_oracle():
    p = ideal(kappa_ex=30, kappa_i=6, gamma=3, g_mag=16)
    gen = build_generator(p, three_level())
    ks = 0.5
    traj = integrate(gen, exponential_schedule(ks, exponential_window(ks, 1e-13)))
    T, R = spectral_TR(gen, ks)
    assert traj.T == pytest.approx(T, rel=1e-6)
    assert traj.R == pytest.approx(R, rel=1e-6)


def test_long_pulse_first_order_convergence():
    p = ideal(kappa_ex=30, kappa_i=6, gamma=3, g_mag=16)
    gen = build_generator(p, three_level())
    T0, R0 = steady_TR(gen)
    errs = []
    for ks in (0.08, 0.04):
        traj = integrate(gen, exponential_schedule(ks, exponential_window(ks, 1e-12)))
        errs.append((traj.T - T0, traj.R - R0))
    assert errs[0][0] / errs[1][0] == pytest.approx(2.0, rel=0.02)
    assert errs[0][1] / errs[1][1] == pytest.approx(2.0, rel=0.02)


def test_bare_critical_coupling():
    p = ideal(g_mag=0.0, kappa_ex=6.0, kappa_i=6.0)
    gen = build_generator(p, three_level())
    T, R = steady_TR(gen)
    assert T == pytest.approx(0.0, abs=1e-30)
    assert R == 0.0
    ks = 0.05
    traj = integrate(gen, exponential_schedule(ks, exponential_window(ks, 1e-10)))
    # only the pulse bandwidth leaks past the critically coupled resonator
    assert traj.R == pytest.approx(0.0, abs=1e-15)
    assert traj.T == pytest.approx(spectral_TR(gen, ks)[0], rel=1e-5)
    assert traj.T < 2 * ks / p.kappa
    assert sum(traj.flux_Li.values()) == pytest.approx(1.0 - traj.T - traj.residual_norm, abs=1e-10)


def test_instantaneous_rates_pure_source():
    gen = build_generator(SystemParams(), rb87())
    ks = 2.0
    sched = exponential_schedule(ks, 100.0)
    rates = instantaneous_rates(StateVector(gen.initial_state(), 1.0), gen, sched)
    assert rates.pop(("T", "G1")) == pytest.approx(2 * ks * RATE_UNIT)
    assert all(v == 0 for v in rates.values())


def test_instantaneous_rates_pure_backward():
    p = SystemParams()
    gen = build_generator(p, rb87())
    psi = np.zeros(gen.dim, complex)
    psi[gen.basis_index["b:G2"]] = 1.0
    rates = instantaneous_rates(StateVector(psi, 0.0), gen, exponential_schedule(1.0, 10.0))
    assert rates.pop(("R", "G2")) == pytest.approx(2 * p.kappa_ex * RATE_UNIT)
    assert rates.pop(("Li", "G2")) == pytest.approx(2 * p.kappa_i * RATE_UNIT)
    assert all(v == 0 for v in rates.values())


def test_trace_rates_are_flux_derivatives(tmp_path):
    gen = build_generator(SystemParams(), rb87())
    sched = gaussian_schedule(30.0)
    traj = integrate(gen, sched, trace_stride=0.05)
    cols = traj.trace_columns
    tr = traj.trace
    t = tr[:, 0]
    mid = np.argmin(np.abs(t - sched.t_end / 2))
    for chan in ("T[G1]", "R[G2]", "sp[e]"):
        cum = tr[:, cols.index(f"cum_{chan}")]
        rate = tr[:, cols.index(f"rate_{chan}")]
        fd = (cum[mid + 1] - cum[mid - 1]) / (t[mid + 1] - t[mid - 1])
        assert fd == pytest.approx(rate[mid], rel=1e-4, abs=1e-9)
    # populations plus accumulated fluxes stay normalized along the trace
    pops = tr[:, 1:1 + gen.dim].sum(axis=1)
    cums = tr[:, [i for i, c in enumerate(cols) if c.startswith("cum_")]].sum(axis=1)
    np.testing.assert_allclose(pops + cums, 1.0, atol=1e-8)

    path = tmp_path / "trace.tsv"
    write_trace(traj, path)
    header = path.read_text().splitlines()[0].split("\t")
    assert header[:2] == ["t_ns", "pop[src]"]
    back = np.loadtxt(path, skiprows=1)
    np.testing.assert_allclose(back, tr, rtol=1e-9, atol=1e-20)


def test_norm_is_nonincreasing():
    gen = build_generator(SystemParams(), rb87())
    traj = integrate(gen, gaussian_schedule(30.0), trace_stride=0.5)
    norms = traj.trace[:, 1:1 + gen.dim].sum(axis=1)
    assert np.all(np.diff(norms) <= 1e-12)


def test_mirror_symmetry():
    p = ideal(g_mag=14.0, kappa_ex=25.0, kappa_i=4.0, delta_C=-3.0, delta_a=2.0)
    sched = exponential_schedule(2.0, exponential_window(2.0, 1e-9))
    fwd = integrate(build_generator(p, three_level()), sched)
    mirrored = integrate(build_generator(p, preset("three_level", "G2"), input_mode="b"), sched)
    assert (mirrored.T, mirrored.R, mirrored.L) == pytest.approx((fwd.T, fwd.R, fwd.L), abs=1e-10)
    # toggling from G1 lands in G2 and vice versa
    assert mirrored.flux_R["G1"] == pytest.approx(fwd.flux_R["G2"], abs=1e-10)
    assert mirrored.flux_T["G2"] == pytest.approx(fwd.flux_T["G1"], abs=1e-10)


@pytest.mark.parametrize("scheme", [three_level(), rb87()], ids=lambda s: s.name)
@pytest.mark.parametrize("shaped", [False, True], ids=["exponential", "gaussian"])
def test_phase_invariance(scheme, shaped):
    base = SystemParams(r_sigma=0.0, r_pi=0.0, h=0.0)
    if shaped:
        # step sequences differ, so agreement is limited by global integration error
        sched, tol = gaussian_schedule(10.0), 1e-7
    else:
        sched, tol = exponential_schedule(2.0, exponential_window(2.0, 1e-8)), 1e-10
    ref = integrate(build_generator(base, scheme), sched)
    for phase in (0.4, 2.0, 5.5):
        traj = integrate(build_generator(base.replace(g_phase=phase), scheme), sched)
        for a, b in ((traj.flux_T, ref.flux_T), (traj.flux_R, ref.flux_R), (traj.flux_Li, ref.flux_Li),
                     (traj.flux_sp, ref.flux_sp)):
            for k in a:
                assert a[k] == pytest.approx(b[k], abs=tol)


def test_conservation_violation_detected():
    gen = build_generator(SystemParams(), three_level())
    gain = np.array(gen.static)
    gain[1, 1] = +1.0  # amplification in a:G1
    bad = dataclasses.replace(gen, static=gain)
    with pytest.raises(ConservationError):
        integrate(bad, exponential_schedule(5.0, 50.0))


def test_argument_checks():
    gen = build_generator(SystemParams(), rb87())
    sched = exponential_schedule(1.0, 100.0)
    with pytest.raises(ValueError, match="before the pulse"):
        integrate(gen, sched, t_end=50.0)
    with pytest.raises(ValueError, match="tolerances"):
        integrate(gen, sched, tol=(0.0, 1e-12))
    with pytest.raises(ValueError, match="initial ground"):
        integrate(gen, sched, initial_ground="G2")
