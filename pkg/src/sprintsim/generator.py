"""Single-excitation basis and the non-Hermitian generator.

The state is expanded on

    slot 0            photon in the source cavity, atom in the initial ground
    a:Gk              photon in mode a, atom in ground k
    b:Gk              photon in mode b, atom in ground k
    <excited label>   no photon, atom excited

and evolves as d(psi)/dt = M(t) psi, where only column 0 of M depends on
time, through the source decay rate kappa_s(t). Matrices are in rad/ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .levels import LevelScheme
from .params import SystemParams, angular

SOURCE = "src"


def build_basis(scheme: LevelScheme) -> dict:
    index = {SOURCE: 0}
    for mode in ("a", "b"):
        for k in scheme.grounds:
            index[f"{mode}:{k}"] = len(index)
    for label in scheme.excited_labels:
        if label in index:
            raise ValueError(f"excited label {label!r} collides with a photon slot")
        index[label] = len(index)
    return index


@dataclass(frozen=True)
class Generator:
    """Equations of motion for one parameter set.

    ``static`` is M with a zero source column; ``matrix`` adds the source
    column for the constant rate ``kappa_s`` given at build time.
    ``drive_unit`` is the source column per sqrt(kappa_s) (rad/ns units),
    so that column 0 of M(t) is ``-kappa_s(t) e_0 + sqrt(kappa_s(t)) drive_unit``.
    """

    params: SystemParams
    scheme: LevelScheme
    basis_index: dict
    static: np.ndarray
    drive_unit: np.ndarray
    kappa_s: float
    # mode the source feeds; "b" is the mirror image of the usual left-to-right input
    input_mode: str = "a"

    @property
    def output_modes(self):
        """(forward, backward) mode names: transmission and reflection channels."""
        return ("a", "b") if self.input_mode == "a" else ("b", "a")

    @property
    def dim(self):
        return self.static.shape[0]

    @property
    def matrix(self):
        return self.at_rate(angular(self.kappa_s))

    @property
    def drive(self):
        return math.sqrt(angular(self.kappa_s)) * self.drive_unit

    def at_rate(self, ks):
        """Full generator for an angular source rate ``ks`` (rad/ns)."""
        m = self.static.copy()
        m[:, 0] = math.sqrt(ks) * self.drive_unit
        m[0, 0] = -ks
        return m

    def slots(self, prefix):
        return np.array([self.basis_index[f"{prefix}:{k}"] for k in self.scheme.grounds])

    @property
    def excited_slots(self):
        return np.array([self.basis_index[e] for e in self.scheme.excited_labels])

    def excited_decay(self):
        """Free-space amplitude decay rate of each excited state, rad/ns."""
        p = self.params
        return np.array([
            angular(p.gamma if self.scheme.manifold(e) == "unprimed" else p.gamma_prime)
            for e in self.scheme.excited_labels
        ])

    def initial_state(self):
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi


def build_generator(params: SystemParams, scheme: LevelScheme, kappa_s: float = 0.0,
                    input_mode: str = "a") -> Generator:
    if kappa_s < 0:
        raise ValueError(f"kappa_s must be >= 0 (got {kappa_s})")
    if input_mode not in ("a", "b"):
        raise ValueError(f"input_mode must be 'a' or 'b' (got {input_mode!r})")
    index = build_basis(scheme)
    dim = len(index)
    m = np.zeros((dim, dim), dtype=complex)

    cav = angular(params.kappa) + 1j * angular(params.delta_C)
    h = angular(params.h)
    for k in scheme.grounds:
        ia, ib = index[f"a:{k}"], index[f"b:{k}"]
        m[ia, ia] = m[ib, ib] = -cav
        m[ia, ib] = m[ib, ia] = -1j * h

    couplings = {"unprimed": params.g, "primed": params.g_prime}
    for label, tag in scheme.excited:
        ie = index[label]
        if tag == "unprimed":
            m[ie, ie] = -(angular(params.gamma) + 1j * angular(params.delta_a))
        else:
            m[ie, ie] = -(angular(params.gamma_prime) + 1j * angular(params.delta_a_prime))

    for row in scheme.transitions:
        ie = index[row.excited]
        ip = index[f"{row.mode}:{row.ground}"]
        g_e = angular(couplings[scheme.manifold(row.excited)])
        c = row.coeff(params)
        # photon-creation factor is c g* on the a leg and c g on the b leg
        create = c * (g_e.conjugate() if row.mode == "a" else g_e)
        m[ip, ie] += -1j * create
        m[ie, ip] += -1j * create.conjugate()

    drive_unit = np.zeros(dim, dtype=complex)
    drive_unit[index[f"{input_mode}:{scheme.initial_ground}"]] = -2.0 * math.sqrt(angular(params.kappa_ex))

    static = m
    static.setflags(write=False)
    drive_unit.setflags(write=False)
    return Generator(params, scheme, index, static, drive_unit, float(kappa_s), input_mode)


def loss_rates(gen: Generator) -> np.ndarray:
    """Diagonal of -(M + M^dag)/2 over the non-source slots (rad/ns)."""
    rates = np.zeros(gen.dim - 1)
    kap = angular(gen.params.kappa)
    for prefix in ("a", "b"):
        rates[gen.slots(prefix) - 1] = kap
    rates[gen.excited_slots - 1] = gen.excited_decay()
    return rates
