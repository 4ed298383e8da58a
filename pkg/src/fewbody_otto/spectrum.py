"""Labelled spectra shared by the analytic, ED and thermodynamics layers.

A :class:`Spectrum` is a finite set of levels, each carrying an integer label
tuple that stays fixed while parameters are changed adiabatically, a
degeneracy, and an energy in natural units (hbar = m = 1). Every spectrum also
carries a :class:`Truncation` describing what was left out, so thermal sums
can bound the Boltzmann weight they are missing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement, product
from math import comb

import numpy as np

BOSONIC = "bosonic"
DISTINGUISHABLE = "distinguishable"
STATISTICS = (BOSONIC, DISTINGUISHABLE)

_STAT_ALIASES = {
    "boson": BOSONIC, "bosons": BOSONIC, "bosonic": BOSONIC, "b": BOSONIC,
    "dist": DISTINGUISHABLE, "distinguishable": DISTINGUISHABLE, "d": DISTINGUISHABLE,
}


def normalize_statistics(stat: str) -> str:
    try:
        return _STAT_ALIASES[stat.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"unknown statistics {stat!r}; use 'bosonic' or 'distinguishable'") from None


class TruncationError(RuntimeError):
    """The spectrum misses too much Boltzmann weight at the requested beta."""

    def __init__(self, message, required_quanta=None):
        super().__init__(message)
        self.required_quanta = required_quanta


@lru_cache(maxsize=None)
def _partitions_at_most(k: int, parts: int) -> int:
    # number of partitions of k into at most `parts` parts
    if k == 0:
        return 1
    if parts == 0 or k < 0:
        return 0
    return _partitions_at_most(k, parts - 1) + _partitions_at_most(k - parts, parts)


def ladder_degeneracy(k: int, n_particles: int, statistics: str) -> int:
    """Closed-form count of non-interacting N-particle states with k quanta."""
    statistics = normalize_statistics(statistics)
    if statistics == DISTINGUISHABLE:
        return comb(k + n_particles - 1, n_particles - 1)
    return _partitions_at_most(k, n_particles)


def degeneracy(energy: float, n_particles: int, statistics: str, omega: float = 1.0) -> int:
    """Degeneracy of a non-interacting level by brute-force enumeration.

    ``energy`` must be ``omega * (k + N/2)`` for some integer ``k >= 0``.
    Distinguishable particles count ordered occupation tuples, bosons count
    multisets.
    """
    statistics = normalize_statistics(statistics)
    k_float = energy / omega - 0.5 * n_particles
    k = int(round(k_float))
    if k < 0 or abs(k_float - k) > 1e-9:
        raise ValueError(f"energy {energy} is not on the non-interacting ladder omega*(k + {n_particles}/2)")
    levels = range(k + 1)
    if statistics == DISTINGUISHABLE:
        return sum(1 for t in product(levels, repeat=n_particles) if sum(t) == k)
    return sum(1 for t in combinations_with_replacement(levels, n_particles) if sum(t) == k)


def _ladder_tail(beta_omega: float, n_particles: int, first_excluded: int) -> float:
    """Bound on sum_{k >= first_excluded} C(k+N-1, N-1) exp(-beta omega k)."""
    if beta_omega <= 0:
        return np.inf
    x = np.exp(-beta_omega)
    if n_particles == 1:
        return x**first_excluded / -np.expm1(-beta_omega)
    total = 0.0
    k = first_excluded
    term = comb(k + n_particles - 1, n_particles - 1) * x**k
    while True:
        total += term
        ratio = (k + n_particles) / (k + 1) * x
        term *= ratio
        k += 1
        # ratios decrease with k, so the remainder is bounded geometrically
        if ratio < 1.0:
            rest = term / (1.0 - ratio)
            if rest < 1e-16 * total:
                return total + rest
        if term == 0.0:
            return total


@dataclass(frozen=True)
class Truncation:
    """What a finite spectrum leaves out, expressed as a Boltzmann-tail bound.

    kind:
      ``"quanta"`` -- every state whose non-interacting partner has at most
      ``max_quanta`` quanta is present; each missing state lies above the
      non-interacting energy ``omega*(k + N/2)`` with ``k > max_quanta``.
      ``"box2"`` -- two-body levels with ``n <= n_max`` and ``nu <= nu_max``.
      ``"complete"`` -- nothing missing.
    """

    kind: str
    omega: float
    n_particles: int = 1
    max_quanta: int = 0
    n_max: int = 0
    nu_max: int = 0
    even_only: bool = False

    def tail_weight(self, beta: float, e_ref: float) -> float:
        """Upper bound on sum over missing states of exp(-beta (E - e_ref))."""
        if self.kind == "complete":
            return 0.0
        bw = beta * self.omega
        if self.kind == "quanta":
            shift = self.omega * 0.5 * self.n_particles - e_ref
            tail = _ladder_tail(bw, self.n_particles, self.max_quanta + 1)
            # combine in logs: at large beta*omega the tail underflows while the shift factor overflows
            return float(np.exp(np.log(tail) - beta * shift)) if tail > 0 else 0.0
        if self.kind == "box2":
            x = np.exp(-bw)
            step = 2 if self.even_only else 1
            # relative tower sums over nu in steps of `step`
            r_all = 1.0 / (1.0 - x**step)
            r_in = (1.0 - x ** (step * (self.nu_max // step + 1))) / (1.0 - x**step)
            c_all = 1.0 / (1.0 - x)
            c_in = (1.0 - x ** (self.n_max + 1)) / (1.0 - x)
            missing = c_all * r_all - c_in * r_in
            return max(missing, 0.0) * np.exp(-beta * (self.omega - e_ref))
        raise ValueError(f"unknown truncation kind {self.kind!r}")


def quanta_for_tail(beta_omega: float, n_particles: int, max_shift: float = 0.0,
                    tol: float = 1e-9, floor: int = 4) -> int:
    """Smallest ladder cutoff K whose missing Boltzmann weight, relative to the
    kept ground level, stays below ``tol``.

    ``max_shift`` is an upper bound (in quanta) on how far interactions lift
    the kept ground level; it loosens the bound accordingly.
    """
    slack = np.exp(beta_omega * max_shift)
    if n_particles == 1 and beta_omega > 0:
        # geometric tail: x**(K+1) / (1-x) * slack < tol
        need = np.log(tol * -np.expm1(-beta_omega) / slack) / -beta_omega - 1.0
        k = max(floor, int(np.floor(need)) + 1)
        while _ladder_tail(beta_omega, 1, k + 1) * slack >= tol:
            k += 1
        if k > 100000:
            raise TruncationError(f"no finite cutoff reaches tail {tol} at beta*omega={beta_omega}")
        return k
    k = floor
    while _ladder_tail(beta_omega, n_particles, k + 1) * slack >= tol:
        k += max(1, k // 8)
        if k > 100000:
            raise TruncationError(f"no finite cutoff reaches tail {tol} at beta*omega={beta_omega}")
    return k


@dataclass
class Spectrum:
    """Finite labelled spectrum, levels sorted by energy.

    ``labels`` is an integer array of shape (levels, label_width); two spectra
    describe the same adiabatically connected states iff their label sets agree.
    """

    energies: np.ndarray
    labels: np.ndarray
    degeneracy: np.ndarray
    omega: float
    n_particles: int
    statistics: str
    truncation: Truncation
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(len(self.energies), -1)
        self.degeneracy = np.asarray(self.degeneracy, dtype=np.int64)
        order = np.argsort(self.energies, kind="stable")
        self.energies = self.energies[order]
        self.labels = self.labels[order]
        self.degeneracy = self.degeneracy[order]

    def __len__(self):
        return len(self.energies)

    def expanded_energies(self) -> np.ndarray:
        return np.repeat(self.energies, self.degeneracy)

    def label_index(self) -> dict:
        return {tuple(l): i for i, l in enumerate(self.labels.tolist())}

    def aligned_to(self, other: "Spectrum") -> np.ndarray:
        """Indices into ``self`` that put its levels in ``other``'s label order."""
        if len(self) != len(other) or self.labels.shape[1] != other.labels.shape[1]:
            raise ValueError(
                f"label sets differ in size ({len(self)} vs {len(other)}); endpoint spectra must share labels")
        mine = np.lexsort(self.labels.T[::-1])
        theirs = np.lexsort(other.labels.T[::-1])
        bad = np.any(self.labels[mine] != other.labels[theirs], axis=1)
        if np.any(bad):
            raise ValueError(f"label {tuple(other.labels[theirs][bad][0])} missing from endpoint spectrum")
        perm = np.empty(len(self), dtype=np.int64)
        perm[theirs] = mine
        if np.any(self.degeneracy[perm] != other.degeneracy):
            raise ValueError("degeneracies differ between endpoint spectra with equal labels")
        return perm


def noninteracting_spectrum(n_particles: int, statistics: str, omega: float, max_quanta: int) -> Spectrum:
    """Ideal-gas ladder omega*(k + N/2), k <= max_quanta, with exact degeneracies."""
    statistics = normalize_statistics(statistics)
    ks = np.arange(max_quanta + 1)
    deg = [ladder_degeneracy(int(k), n_particles, statistics) for k in ks]
    return Spectrum(
        energies=omega * (ks + 0.5 * n_particles),
        labels=ks[:, None],
        degeneracy=deg,
        omega=omega,
        n_particles=n_particles,
        statistics=statistics,
        truncation=Truncation("quanta", omega, n_particles, max_quanta=max_quanta),
        meta={"source": "ladder"},
    )
