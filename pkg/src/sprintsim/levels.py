"""Atomic level schemes and their resonator-mode couplings.

A scheme is pure data: ground and excited labels plus a table of
``TransitionRow`` entries, one per (mode, ground, excited) coupling. A row's
coefficient multiplies the base coupling of the excited state's manifold
(``g`` for unprimed states, ``g_prime_ratio * g`` for primed ones).

Sign and conjugation convention, matching the written Hamiltonians: an
a-mode row contributes ``c (g_E* a^dag s_kE + g_E s_kE^dag a)`` and a b-mode
row ``c (g_E b^dag s_kE + g_E* s_kE^dag b)``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, replace

MODES = ("a", "b")
MANIFOLDS = ("unprimed", "primed")


class SchemeError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionRow:
    mode: str
    ground: str
    excited: str
    sign: float = 1.0
    # None for the nominal transitions, "sigma"/"pi" for impurity-enabled ones
    impurity: str | None = None

    def coeff(self, params):
        c = complex(self.sign)
        if self.impurity == "sigma":
            c *= params.r_sigma
        elif self.impurity == "pi":
            c *= params.r_pi
        if self.impurity is not None and params.impurity_phase:
            c *= cmath.exp(1j * params.impurity_phase)
        return c


@dataclass(frozen=True)
class LevelScheme:
    name: str
    grounds: tuple
    excited: tuple  # ((label, manifold), ...)
    transitions: tuple
    initial_ground: str = "G1"
    # which grounds count as the two SPRINT states; anything else is "atom lost"
    sprint_pair: tuple = ("G1", "G2")

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise SchemeError("; ".join(problems))

    def problems(self):
        out = []
        labels = list(self.grounds) + [lab for lab, _ in self.excited]
        if len(set(labels)) != len(labels):
            out.append(f"duplicate level labels in {labels}")
        for _, tag in self.excited:
            if tag not in MANIFOLDS:
                out.append(f"unknown manifold tag {tag!r}")
        if self.initial_ground not in self.grounds:
            out.append(f"initial ground {self.initial_ground!r} not in {self.grounds}")
        excited = {lab for lab, _ in self.excited}
        seen = set()
        for row in self.transitions:
            key = (row.mode, row.ground, row.excited)
            if row.mode not in MODES:
                out.append(f"unknown mode {row.mode!r}")
            if row.ground not in self.grounds or row.excited not in excited:
                out.append(f"row {key} references an unknown level")
            if key in seen:
                out.append(f"duplicate transition row {key}")
            seen.add(key)
        return out

    @property
    def excited_labels(self):
        return tuple(lab for lab, _ in self.excited)

    def manifold(self, label):
        return dict(self.excited)[label]

    def opposite(self, ground):
        a, b = self.sprint_pair
        if ground == a:
            return b
        if ground == b:
            return a
        raise SchemeError(f"{ground!r} is not one of the SPRINT ground states {self.sprint_pair}")

    def with_initial(self, ground):
        return replace(self, initial_ground=ground)


def three_level(initial_ground="G1"):
    """Lambda system: G1 <-> e through mode a, G2 <-> e through mode b."""
    return LevelScheme(
        name="three_level",
        grounds=("G1", "G2"),
        excited=(("e", "unprimed"),),
        transitions=(
            TransitionRow("a", "G1", "e"),
            TransitionRow("b", "G2", "e"),
        ),
        initial_ground=initial_ground,
    )


def four_level(s=-1, initial_ground="G1"):
    """Lambda system plus a second excited state e' with b-leg sign ``s``."""
    if s not in (1, -1):
        raise SchemeError(f"s must be +1 or -1 (got {s})")
    return LevelScheme(
        name=f"four_level({s:+d})",
        grounds=("G1", "G2"),
        excited=(("e", "unprimed"), ("e'", "primed")),
        transitions=(
            TransitionRow("a", "G1", "e"),
            TransitionRow("b", "G2", "e"),
            TransitionRow("a", "G1", "e'"),
            TransitionRow("b", "G2", "e'", sign=float(s)),
        ),
        initial_ground=initial_ground,
    )


def rb87(initial_ground="G1"):
    """F=1 -> F'=0 (e) and F'=1 (e1', e', e2') of the 87Rb D2 line.

    G1, G0, G2 are m = -1, 0, +1 of F=1; e1' and e2' share m with G1 and G2.
    Rows carrying r_sigma / r_pi exist only through polarization impurity.
    """
    R = TransitionRow
    rows = (
        # nominal Lambda systems through e and e'
        R("a", "G1", "e"),
        R("b", "G2", "e"),
        R("a", "G1", "e'"),
        R("b", "G2", "e'", -1.0),
        # opposite circular polarization
        R("a", "G2", "e", 1.0, "sigma"),
        R("b", "G1", "e", 1.0, "sigma"),
        R("a", "G2", "e'", -1.0, "sigma"),
        R("b", "G1", "e'", 1.0, "sigma"),
        # pi-polarized component
        R("a", "G0", "e", 1.0, "pi"),
        R("b", "G0", "e", 1.0, "pi"),
        R("a", "G1", "e1'", -1.0, "pi"),
        R("b", "G1", "e1'", -1.0, "pi"),
        R("a", "G2", "e2'", 1.0, "pi"),
        R("b", "G2", "e2'", 1.0, "pi"),
        # G0 into the outer F'=1 sublevels
        R("a", "G0", "e2'"),
        R("b", "G0", "e1'", -1.0),
        R("a", "G0", "e1'", -1.0, "sigma"),
        R("b", "G0", "e2'", 1.0, "sigma"),
    )
    return LevelScheme(
        name="rb87",
        grounds=("G1", "G0", "G2"),
        excited=(("e", "unprimed"), ("e1'", "primed"), ("e'", "primed"), ("e2'", "primed")),
        transitions=rows,
        initial_ground=initial_ground,
    )


PRESETS = {
    "three_level": three_level,
    "four_level_plus": lambda initial_ground="G1": four_level(+1, initial_ground),
    "four_level_minus": lambda initial_ground="G1": four_level(-1, initial_ground),
    "four_level": lambda initial_ground="G1": four_level(-1, initial_ground),
    "rb87": rb87,
}


def preset(name, initial_ground="G1"):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise SchemeError(f"unknown scheme {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(initial_ground=initial_ground)
