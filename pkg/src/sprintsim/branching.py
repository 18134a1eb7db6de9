"""Spontaneous-emission branching of the excited sublevels.

Decay probabilities follow from the D2 line angular momentum algebra

    P(F, m | F', m') = (2F + 1)(2J' + 1) {J J' 1; F' F I}^2 <F m; 1 q | F' m'>^2

which sums to one over all (F, m) for every excited sublevel, so the sum rule
is a genuine check rather than a normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, sqrt

import numpy as np

CLASSES = ("G1", "G0", "G2", "F2")

# 87Rb D2: J = 1/2 -> J' = 3/2, I = 3/2
J_GROUND = Fraction(1, 2)
J_EXCITED = Fraction(3, 2)
I_NUC = Fraction(3, 2)

# level label -> (F, m)
GROUND_STATES = {"G1": (1, -1), "G0": (1, 0), "G2": (1, 1)}
EXCITED_STATES = {"e": (0, 0), "e1'": (1, -1), "e'": (1, 0), "e2'": (1, 1)}


def _f(x):
    return factorial(int(x))


def _triangle(a, b, c):
    if a + b < c or a - b > c or b - a > c:
        return None
    if (a + b + c).denominator != 1:
        return None
    return Fraction(_f(a + b - c) * _f(a - b + c) * _f(-a + b + c), _f(a + b + c + 1))


def wigner_3j(j1, j2, j3, m1, m2, m3):
    """Racah formula; arguments may be ints or half-integer Fractions."""
    j1, j2, j3, m1, m2, m3 = (Fraction(x) for x in (j1, j2, j3, m1, m2, m3))
    if m1 + m2 + m3 != 0:
        return 0.0
    if any(abs(m) > j for m, j in ((m1, j1), (m2, j2), (m3, j3))):
        return 0.0
    if any((j - m).denominator != 1 for m, j in ((m1, j1), (m2, j2), (m3, j3))):
        return 0.0
    delta = _triangle(j1, j2, j3)
    if delta is None:
        return 0.0
    pre = delta * _f(j1 + m1) * _f(j1 - m1) * _f(j2 + m2) * _f(j2 - m2) * _f(j3 + m3) * _f(j3 - m3)
    kmin = max(0, int(j2 - j3 - m1), int(j1 - j3 + m2))
    kmax = min(int(j1 + j2 - j3), int(j1 - m1), int(j2 + m2))
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (factorial(k) * _f(j1 + j2 - j3 - k) * _f(j1 - m1 - k) * _f(j2 + m2 - k)
               * _f(j3 - j2 + m1 + k) * _f(j3 - j1 - m2 + k))
        total += Fraction((-1) ** k, den)
    sign = -1 if int(j1 - j2 - m3) % 2 else 1
    return sign * sqrt(pre) * float(total)


def clebsch_gordan(j1, m1, j2, m2, J, M):
    """<j1 m1; j2 m2 | J M>."""
    j1, m1, j2, m2, J, M = (Fraction(x) for x in (j1, m1, j2, m2, J, M))
    phase = -1 if int(j1 - j2 + M) % 2 else 1
    return phase * sqrt(2 * J + 1) * wigner_3j(j1, j2, J, m1, m2, -M)


def wigner_6j(j1, j2, j3, j4, j5, j6):
    j1, j2, j3, j4, j5, j6 = (Fraction(x) for x in (j1, j2, j3, j4, j5, j6))
    triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)]
    deltas = [_triangle(*t) for t in triads]
    if any(d is None for d in deltas):
        return 0.0
    sums = [sum(t) for t in triads]
    smax_terms = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4]
    total = Fraction(0)
    for t in range(int(max(sums)), int(min(smax_terms)) + 1):
        den = 1
        for s in sums:
            den *= _f(t - s)
        for s in smax_terms:
            den *= _f(s - t)
        total += Fraction((-1) ** t * factorial(t + 1), den)
    pre = 1
    for d in deltas:
        pre *= d
    return sqrt(pre) * float(total)


def decay_probability(F, m, Fp, mp, J=J_GROUND, Jp=J_EXCITED, I=I_NUC):
    q = mp - m
    if abs(q) > 1:
        return 0.0
    six = wigner_6j(J, Jp, 1, Fp, F, I)
    cg = clebsch_gordan(F, m, 1, q, Fp, mp)
    return float((2 * F + 1) * (2 * Jp + 1)) * six ** 2 * cg ** 2


@dataclass(frozen=True)
class BranchingMatrix:
    rows: tuple  # excited labels
    cols: tuple  # final atom classes
    entries: np.ndarray

    def row(self, label):
        return self.entries[self.rows.index(label)]


def branching_matrix(scheme):
    """Decay of each excited state of ``scheme`` into the classes G1, G0, G2, F2.

    For the 87Rb scheme all channels are kept. Reduced schemes without G0 are
    closed Lambda systems: their rows keep only the scheme's own ground states
    and are renormalized, so no probability leaves the model.
    """
    entries = np.zeros((len(scheme.excited_labels), len(CLASSES)))
    for i, label in enumerate(scheme.excited_labels):
        if label not in EXCITED_STATES:
            raise ValueError(f"no branching data for excited state {label!r}")
        Fp, mp = EXCITED_STATES[label]
        for j, cls in enumerate(CLASSES):
            if cls == "F2":
                entries[i, j] = sum(decay_probability(2, m, Fp, mp) for m in range(-2, 3))
            else:
                F, m = GROUND_STATES[cls]
                entries[i, j] = decay_probability(F, m, Fp, mp)
    full = set(GROUND_STATES) <= set(scheme.grounds)
    if not full:
        keep = np.array([cls in scheme.grounds for cls in CLASSES])
        entries[:, ~keep] = 0.0
        entries /= entries.sum(axis=1, keepdims=True)
    return BranchingMatrix(scheme.excited_labels, CLASSES, entries)
