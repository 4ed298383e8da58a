"""Two contact-interacting particles in a 1D harmonic trap.

The centre of mass is a plain oscillator; the relative coordinate feels the
contact term, which shifts only the even relative levels. The even relative
energies solve ``-g_tilde = 2 Gamma(-E/2 + 3/4) / Gamma(-E/2 + 1/4)`` (E in
units of hbar*omega), one root per interval ``(2nu + 1/2, 2nu + 3/2)``.

Natural units hbar = m = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import psi

from .special import gamma_ratio, log_gamma_ratio_pos
from .spectrum import (
    BOSONIC,
    DISTINGUISHABLE,
    Spectrum,
    Truncation,
    normalize_statistics,
)

# bisection width before polishing


class RootBracketError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrapInteraction:
    """Trap frequency and contact strength; ``g`` is the bare 1D strength."""

    omega: float
    g: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not self.g >= 0:
            raise ValueError(f"only repulsive contact interactions are supported, got g={self.g}")

    @property
    def g_tilde(self) -> float:
        # g / (sqrt(2) hbar omega a), a = sqrt(hbar / (m omega))
        return self.g / np.sqrt(2.0 * self.omega)

    @classmethod
    def from_g_tilde(cls, omega: float, g_tilde: float) -> "TrapInteraction":
        if g_tilde < 0:
            raise ValueError(f"g_tilde must be non-negative, got {g_tilde}")
        return cls(omega=omega, g=g_tilde * np.sqrt(2.0 * omega))


@dataclass(frozen=True)
class RelativeLevel:
    nu: int
    parity: str
    energy: float
    epsilon: float


def _ratio(e):
    # Gamma(-E/2 + 3/4) / Gamma(-E/2 + 1/4)
    return gamma_ratio(-0.5 * e + 0.75, -0.5 * e + 0.25)


def _log_coupling(k, eps):
    """log g_tilde at which level 2k has shift eps.

    Reflection turns the root condition into
    g_tilde = 2 tan(pi eps / 2) Gamma(k + 1 + eps/2) / Gamma(k + 1/2 + eps/2),
    which has no poles inside the bracket and increases monotonically in eps.
    """
    eps = np.asarray(eps, dtype=float)
    with np.errstate(divide="ignore"):
        lt = np.where(eps < 0.5, np.log(np.tan(0.5 * np.pi * eps)),
                      -np.log(np.tan(0.5 * np.pi * (1.0 - eps))))
    return np.log(2.0) + lt + log_gamma_ratio_pos(k + 1.0 + 0.5 * eps, k + 0.5 + 0.5 * eps)


def _eps_of_t(t):
    # inverse of t = log tan(pi eps / 2), accurate near both ends
    u = 2.0 / np.pi * np.arctan(np.exp(-np.abs(t)))
    return np.where(t < 0, u, 1.0 - u)


def transcendental_residual(energy, g_tilde):
    """Residual ``g_tilde + 2 Gamma(-E/2+3/4)/Gamma(-E/2+1/4)``; zero at a root."""
    return g_tilde + 2.0 * _ratio(np.asarray(energy, dtype=float))


def even_shifts(k_max: int, g_tilde: float) -> np.ndarray:
    """epsilon for the even relative levels 2k, k = 0..k_max (vectorised).

    Newton on the log of the reflected root condition in t = log tan(pi eps / 2).
    """
    k = np.arange(k_max + 1, dtype=float)
    if g_tilde < 0:
        raise ValueError("g_tilde must be non-negative")
    if g_tilde == 0:
        return np.zeros_like(k)
    if np.isinf(g_tilde):
        return np.ones_like(k)
    log_g = np.log(g_tilde)
    # in t = log tan(pi eps / 2) the residual has slope in [1, 1.2]: Newton is a contraction
    t = log_g - np.log(2.0) - log_gamma_ratio_pos(k + 1.0, k + 0.5)
    for _ in range(60):
        eps = _eps_of_t(t)
        h = t + np.log(2.0) + log_gamma_ratio_pos(k + 1.0 + 0.5 * eps, k + 0.5 + 0.5 * eps) - log_g
        dh = 1.0 + 0.5 * (psi(k + 1.0 + 0.5 * eps) - psi(k + 0.5 + 0.5 * eps)) * np.sin(np.pi * eps) / np.pi
        dt = h / dh
        t = t - dt
        if np.all(np.abs(dt) <= 1e-13 * np.maximum(1.0, np.abs(t))):
            break
    eps = _eps_of_t(t)
    # the ends are reached only by rounding (denormal or huge g_tilde)
    bad = ~((eps >= 0) & (eps <= 1))
    if np.any(bad):
        raise RootBracketError(f"root left its bracket for k={k[bad]} at g_tilde={g_tilde}")
    return eps


def solve_even_level(nu: int, g_tilde: float) -> RelativeLevel:
    """The nu-th even relative level (state 2nu) at rescaled coupling g_tilde."""
    if nu < 0:
        raise ValueError("nu must be non-negative")
    eps = float(even_shifts(nu, g_tilde)[nu])
    return RelativeLevel(nu=2 * nu, parity="even", energy=2 * nu + 0.5 + eps, epsilon=eps)


def odd_level(nu: int) -> RelativeLevel:
    """Odd relative state 2nu+1, blind to the contact term."""
    return RelativeLevel(nu=2 * nu + 1, parity="odd", energy=2 * nu + 1.5, epsilon=0.0)


def epsilon_to_gtilde(epsilon, nu: int = 0):
    """Invert the eigenvalue condition: the g_tilde giving shift ``epsilon``
    on even level 2nu. Closed form, so exact up to Gamma evaluation."""
    eps = np.asarray(epsilon, dtype=float)
    if np.any((eps < 0) | (eps >= 1)):
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    with np.errstate(divide="ignore"):
        g = np.exp(_log_coupling(float(nu), eps))
    g = np.where(eps == 0, 0.0, g)
    return g[()] if g.ndim == 0 else g


def relative_shifts(nu_max: int, g_tilde: float) -> np.ndarray:
    """epsilon(nu, g_tilde) for nu = 0..nu_max (zero on odd nu)."""
    eps = np.zeros(nu_max + 1)
    eps[0::2] = even_shifts(nu_max // 2, g_tilde)
    return eps


def two_body_spectrum(ti: TrapInteraction, statistics: str, n_max: int = 60, nu_max: int = 60) -> Spectrum:
    """Levels |n, nu> with n <= n_max, nu <= nu_max; bosons keep even nu only.

    Energies are omega * (n + nu + 1 + epsilon(nu)); labels are (n, nu).
    """
    statistics = normalize_statistics(statistics)
    if n_max < 1 or nu_max < 1:
        raise ValueError("cutoffs must be >= 1")
    eps = relative_shifts(nu_max, ti.g_tilde)
    nus = np.arange(nu_max + 1)
    if statistics == BOSONIC:
        nus = nus[0::2]
    n, nu = np.meshgrid(np.arange(n_max + 1), nus, indexing="ij")
    n, nu = n.ravel(), nu.ravel()
    energies = ti.omega * (n + nu + 1.0 + eps[nu])
    return Spectrum(
        energies=energies,
        labels=np.stack([n, nu], axis=1),
        degeneracy=np.ones_like(n),
        omega=ti.omega,
        n_particles=2,
        statistics=statistics,
        truncation=Truncation("box2", ti.omega, 2, n_max=n_max, nu_max=nu_max,
                              even_only=statistics == BOSONIC),
        meta={"source": "analytic", "g_tilde": ti.g_tilde, "omega_reference": 1.0,
              "n_max": n_max, "nu_max": nu_max},
    )


__all__ = [
    "BOSONIC", "DISTINGUISHABLE", "TrapInteraction", "RelativeLevel", "RootBracketError",
    "transcendental_residual", "even_shifts", "solve_even_level", "odd_level",
    "epsilon_to_gtilde", "relative_shifts", "two_body_spectrum",
]
