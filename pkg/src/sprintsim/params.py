"""Physical parameters of the source / resonator / atom system.

All rates and detunings are linear frequencies in MHz, the way the
experiment quotes them ("2pi x 6 MHz" is stored as 6.0). Times are in ns.
``angular`` converts a MHz rate into rad/ns for the equations of motion.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

# MHz (linear) -> rad/ns
RATE_UNIT = 2.0 * math.pi * 1e-3


def angular(rate_mhz):
    return rate_mhz * RATE_UNIT


class ParameterError(ValueError):
    """Raised when a parameter set violates its physical constraints.

    ``problems`` lists every violation, not only the first one.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class SystemParams:
    kappa_ex: float = 30.0
    kappa_i: float = 6.0
    gamma: float = 3.0
    gamma_prime: float = 3.0
    delta_C: float = -7.0
    delta_a: float = 0.0
    delta_a_prime: float = -72.0
    g_mag: float = 16.0
    g_phase: float = 0.0
    g_prime_ratio: float = math.sqrt(5.0 / 4.0)
    h: float = 1.0
    r_sigma: float = 0.18
    r_pi: float = 0.13
    # extra phase on the polarization-impurity couplings; zero unless studied
    impurity_phase: float = 0.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ParameterError(problems)

    def violations(self):
        out = []
        for name in ("kappa_ex", "kappa_i", "g_mag", "h", "gamma_prime"):
            if not getattr(self, name) >= 0:
                out.append(f"{name} must be >= 0 (got {getattr(self, name)})")
        if not self.gamma > 0:
            out.append(f"gamma must be > 0 (got {self.gamma})")
        if not self.g_prime_ratio >= 0:
            out.append(f"g_prime_ratio must be >= 0 (got {self.g_prime_ratio})")
        for name in ("r_sigma", "r_pi"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                out.append(f"{name} must lie in [0, 1) (got {v})")
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                out.append(f"{f.name} must be finite (got {v})")
        return out

    @property
    def kappa(self):
        """Total resonator field decay rate (fiber coupling plus intrinsic loss)."""
        return self.kappa_ex + self.kappa_i

    @property
    def g(self):
        """Complex base coupling |g| e^{i phase}."""
        return self.g_mag * complex(math.cos(self.g_phase), math.sin(self.g_phase))

    @property
    def g_prime(self):
        return self.g_prime_ratio * self.g

    def ideal(self):
        """Same rates with all polarization impurities and backscattering removed."""
        return replace(self, r_sigma=0.0, r_pi=0.0, h=0.0)

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


DEFAULT_PARAMS = SystemParams()
