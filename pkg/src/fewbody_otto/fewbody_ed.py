"""Exact diagonalization of N = 2, 3 contact-interacting particles in a trap.

Two representations are provided.

* ``method="product"``: energy-truncated product basis of single-particle
  oscillator states (total quanta <= e_cut), symmetrized for bosons, with the
  bare contact coupling. Simple and variational, but a delta interaction in an
  oscillator basis converges only like e_cut**-1/2.
* ``method="jacobi"`` (N = 3 only): centre of mass split off, the relative
  problem written in a 2D oscillator basis of Jacobi coordinates and
  block-diagonalized by the permutation symmetry. The pair interaction is
  replaced per spectator quantum number q by an effective operator:
  ``coupling="effective"`` (default) builds it from exact two-body
  eigenstates (Lee-Suzuki with symmetric orthonormalization), so the
  truncated pair problem reproduces the exact low two-body levels;
  ``coupling="running"`` only rescales the bare strength to match the
  two-body ground energy; ``coupling="bare"`` keeps the raw delta. The
  effective interaction converges orders of magnitude faster but is not
  variational. It is what the thermodynamics uses.

Energies are in units of hbar*omega; g_tilde is the trap-rescaled coupling.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from numpy.polynomial.hermite import hermgauss
from scipy.optimize import brentq

from .spectrum import (
    BOSONIC,
    DISTINGUISHABLE,
    Spectrum,
    Truncation,
    normalize_statistics,
)
from .spectrum2p import even_shifts

MAX_DIM = 20000
CACHE_VERSION = 1
CACHE_ENV = "FEWBODY_OTTO_CACHE"
GTILDE_WARN = 30.0


class ResourceError(RuntimeError):
    """Basis larger than the configured hard cap."""


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class BasisSpec:
    N: int
    e_cut: int
    statistics: str = BOSONIC
    method: str = "product"
    coupling: str = "bare"

    def __post_init__(self):
        object.__setattr__(self, "statistics", normalize_statistics(self.statistics))
        if self.N not in (2, 3):
            raise ValueError(f"N must be 2 or 3, got {self.N}")
        if self.e_cut < 4:
            raise ValueError(f"e_cut must be >= 4, got {self.e_cut}")
        if self.method not in ("product", "jacobi"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.coupling not in ("bare", "running", "effective"):
            raise ValueError(f"unknown coupling {self.coupling!r}")
        if self.method == "jacobi" and self.N != 3:
            raise ValueError("the Jacobi solver is for N = 3; N = 2 has the analytic spectrum")
        if self.method == "product" and self.coupling != "bare":
            raise ValueError("the product basis uses the bare coupling")

    @property
    def dimension(self) -> int:
        return len(product_states(self.N, self.e_cut, self.statistics)) if self.method == "product" \
            else (self.e_cut + 1) * (self.e_cut + 2) // 2

    def bumped(self, extra: int = 4) -> "BasisSpec":
        return BasisSpec(self.N, self.e_cut + extra, self.statistics, self.method, self.coupling)


@dataclass
class EdSpectrum:
    """Ascending eigenvalues with per-level change under e_cut -> e_cut + 4.

    ``convergence_estimate`` is NaN for levels that have no partner in the
    bumped run (never the case for the lowest levels).
    """

    energies: np.ndarray
    basis: BasisSpec
    g_tilde: float
    convergence_estimate: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def max_change(self, n_levels: int | None = None) -> float:
        c = self.convergence_estimate[:n_levels]
        return float(np.nanmax(np.abs(c))) if len(c) else 0.0


# ---------------------------------------------------------------- oscillator

def hermite_functions(n_max: int, x) -> np.ndarray:
    """Normalized oscillator eigenfunctions phi_0..phi_n_max at points x."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max > 0:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(2, n_max + 1):
        out[k] = np.sqrt(2.0 / k) * x * out[k - 1] - np.sqrt((k - 1) / k) * out[k - 2]
    return out


@lru_cache(maxsize=8)
def _quartic_rule(n_max: int):
    # integrand phi_a phi_b phi_c phi_d = poly(deg <= 4 n_max) * exp(-2x^2);
    # substitute x = y / sqrt(2) and use enough nodes to be exact
    y, w = hermgauss(2 * n_max + 2)
    x = y / np.sqrt(2.0)
    weights = w * np.exp(y * y) / np.sqrt(2.0)
    return hermite_functions(n_max, x), weights


def delta_matrix_element(a: int, b: int, c: int, d: int) -> float:
    """<ab| delta(x1 - x2) |cd> = int phi_a phi_b phi_c phi_d dx (oscillator units)."""
    if min(a, b, c, d) < 0:
        raise ValueError("oscillator indices must be non-negative")
    if (a + b + c + d) % 2:
        return 0.0
    phi, w = _quartic_rule(max(a, b, c, d))
    return float(np.sum(phi[a] * phi[b] * phi[c] * phi[d] * w))


# ---------------------------------------------------------- product basis

@lru_cache(maxsize=32)
def product_states(N: int, e_cut: int, statistics: str) -> tuple:
    """Occupation tuples with total quanta <= e_cut, ordered by quanta.

    Bosonic states are sorted tuples (multisets), distinguishable ones ordered.
    """
    statistics = normalize_statistics(statistics)
    states = []
    for k in range(e_cut + 1):
        if N == 2:
            cand = [(a, k - a) for a in range(k + 1)]
        else:
            cand = [(a, b, k - a - b) for a in range(k + 1) for b in range(k - a + 1)]
        if statistics == BOSONIC:
            cand = sorted({tuple(sorted(s, reverse=True)) for s in cand})
        states.extend(cand)
    return tuple(states)


def _pair_interaction_dist(N: int, e_cut: int) -> tuple[np.ndarray, list]:
    """Sum over pairs of delta(x_i - x_j) in the ordered product basis."""
    states = product_states(N, e_cut, DISTINGUISHABLE)
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    phi, w = _quartic_rule(e_cut)
    V = np.zeros((dim, dim))
    pairs = [(0, 1)] if N == 2 else [(0, 1), (0, 2), (1, 2)]
    for i, j in pairs:
        spect = [k for k in range(N) if k not in (i, j)]
        # group states by spectator occupation; the delta acts within groups
        groups: dict = {}
        for s in states:
            groups.setdefault(tuple(s[k] for k in spect), []).append(s)
        for members in groups.values():
            rows = np.array([index[s] for s in members])
            F = phi[[s[i] for s in members]] * phi[[s[j] for s in members]]
            V[np.ix_(rows, rows)] += (F * w) @ F.T
    return V, list(states)


def _symmetrizer(N: int, e_cut: int) -> np.ndarray:
    dist = product_states(N, e_cut, DISTINGUISHABLE)
    index = {s: i for i, s in enumerate(dist)}
    bos = product_states(N, e_cut, BOSONIC)
    S = np.zeros((len(dist), len(bos)))
    for col, s in enumerate(bos):
        perms = set(permutations(s))
        for p in perms:
            S[index[p], col] = 1.0 / np.sqrt(len(perms))
    return S


def build_hamiltonian(spec: BasisSpec, g_tilde: float) -> np.ndarray:
    """Dense product-basis Hamiltonian in units of hbar*omega.

    Diagonal: non-interacting energies. Interaction: sqrt(2) g_tilde times the
    summed pair delta elements (the trap-rescaled bare coupling).
    """
    if spec.method != "product":
        raise ValueError("build_hamiltonian builds the product-basis matrix")
    if g_tilde < 0:
        raise ValueError("g_tilde must be non-negative")
    dim = spec.dimension
    if dim > MAX_DIM:
        raise ResourceError(f"basis dimension {dim} exceeds the cap {MAX_DIM}; lower e_cut")
    states = product_states(spec.N, spec.e_cut, spec.statistics)
    h0 = np.array([sum(s) + 0.5 * spec.N for s in states], dtype=float)
    if g_tilde == 0:
        return np.diag(h0)
    if spec.statistics == BOSONIC:
        n_dist = len(product_states(spec.N, spec.e_cut, DISTINGUISHABLE))
        if n_dist > MAX_DIM:
            raise ResourceError(f"intermediate dimension {n_dist} exceeds the cap {MAX_DIM}")
    V, _ = _pair_interaction_dist(spec.N, spec.e_cut)
    if spec.statistics == BOSONIC:
        S = _symmetrizer(spec.N, spec.e_cut)
        V = S.T @ V @ S
    H = np.sqrt(2.0) * g_tilde * V
    H = 0.5 * (H + H.T)
    H[np.diag_indices_from(H)] += h0
    return H


# ------------------------------------------------------- Jacobi, N = 3

# symmetry sectors of the relative problem (irreps of the permutation group
# combined with parity); E-type sectors come in degenerate pairs and only the
# P12-even copy is diagonalized
SECTORS = ("A1", "B1", "E1", "E2", "A2", "B2")
_SECTOR_DEG = {BOSONIC: (1, 1, 0, 0, 0, 0), DISTINGUISHABLE: (1, 1, 2, 2, 1, 1)}
_CLASS_OF_MOD6 = {0: 0, 3: 1, 1: 2, 5: 2, 2: 3, 4: 3}


def _sector_of(m_abs: int, p12_even: bool) -> int:
    c = _CLASS_OF_MOD6[m_abs % 6]
    if p12_even:
        return c
    # odd under P12: classes 0/3 are totally antisymmetric, E copies duplicate
    return {0: 4, 1: 5}.get(c, -1)


def _shell_generator(K: int) -> np.ndarray:
    # rotation generator in shell K, basis |p, K-p>, p = 0..K
    G = np.zeros((K + 1, K + 1))
    for p in range(1, K + 1):
        G[p - 1, p] = np.sqrt(p * (K - p + 1))
    return G - G.T


@dataclass
class _SectorGeometry:
    """Interaction-independent pieces of the sector Hamiltonians at cutoff M.

    For each sector and each pair r, ``Z[s][r]`` is a sparse map from sector
    columns to rows (q, j): spectator quantum number q and even pair
    quantum number p = 2j, with p + q the column's shell.
    """

    M: int
    shells: dict
    Z: dict
    offsets: np.ndarray


def _pair_rows(M: int) -> np.ndarray:
    sizes = np.array([(M - q) // 2 + 1 for q in range(M + 1)])
    return np.concatenate([[0], np.cumsum(sizes)])


@lru_cache(maxsize=6)
def _sector_geometry(M: int) -> _SectorGeometry:
    offsets = _pair_rows(M)
    vals = {s: [[], [], []] for s in range(4)}
    rows = {s: [[], [], []] for s in range(4)}
    colid = {s: [[], [], []] for s in range(4)}
    cols: dict = {s: [] for s in range(4)}
    for K in range(M + 1):
        G = _shell_generator(K)
        rots = [np.eye(K + 1), sla.expm(np.pi / 3 * G), sla.expm(-np.pi / 3 * G)]
        even = np.arange(0, K + 1, 2)
        # -G^2 on the P12-even half has eigenvalues m^2, one per allowed |m|
        m2, vec = np.linalg.eigh(-(G @ G)[np.ix_(even, even)])
        m_abs = np.rint(np.sqrt(np.maximum(m2, 0.0))).astype(int)
        if np.max(np.abs(m2 - m_abs**2)) > 1e-6 * max(1, K * K):
            raise EigenSolverError(f"angular-momentum classification failed in shell {K}")
        U = np.zeros((K + 1, len(even)))
        U[even, :] = vec
        sec = np.array([_sector_of(int(m), True) for m in m_abs])
        p = np.arange(0, K + 1, 2)          # even pair quanta; spectator q = K - p
        r_idx = offsets[K - p] + p // 2
        for s in range(4):
            sel = sec == s
            if not np.any(sel):
                continue
            first = len(cols[s])
            n_new = int(sel.sum())
            for r, R in enumerate(rots):
                B = (R.T @ U[:, sel])[p, :]
                vals[s][r].append(B.ravel())
                rows[s][r].append(np.repeat(r_idx, n_new))
                colid[s][r].append(np.tile(np.arange(first, first + n_new), len(p)))
            cols[s].extend([K] * n_new)
    n_rows = int(offsets[-1])
    Z = {}
    for s in range(4):
        d = len(cols[s])
        Z[s] = [sp.csr_matrix((np.concatenate(vals[s][r]) if d else np.zeros(0),
                               (np.concatenate(rows[s][r]) if d else np.zeros(0, int),
                                np.concatenate(colid[s][r]) if d else np.zeros(0, int))),
                              shape=(n_rows, d)) for r in range(3)]
    shells = {s: np.array(cols[s], dtype=int) for s in range(4)}
    return _SectorGeometry(M=M, shells=shells, Z=Z, offsets=offsets)


def fermionic_shell_counts(M: int) -> dict:
    """Shell labels of the totally antisymmetric sectors (interaction-blind)."""
    out = {4: [], 5: []}
    for K in range(M + 1):
        for m in range(K % 2, K + 1, 2):
            if m == 0:
                continue
            s = _sector_of(m, False)
            if s in out:
                out[s].append(K)
    return {s: np.array(v, dtype=int) for s, v in out.items()}


def two_body_ground(g_tilde: float) -> float:
    """Exact relative ground energy of one pair, 1/2 + epsilon(0, g_tilde)."""
    return 0.5 + float(even_shifts(0, g_tilde)[0])


def running_coupling(g_tilde: float, m_max: int) -> np.ndarray:
    """Pair coupling c(m), m = 0..m_max, that makes the 1D contact problem
    truncated to m+1 oscillator states reproduce the exact ground energy."""
    if g_tilde == 0:
        return np.zeros(m_max + 1)
    e0 = two_body_ground(g_tilde)
    chi = hermite_functions(m_max, 0.0)
    nu = np.arange(m_max + 1)
    # odd nu have chi = 0; skipping them avoids 0/0 at e0 = 3/2 (g_tilde = inf)
    terms = np.zeros(m_max + 1)
    terms[0::2] = chi[0::2] ** 2 / (e0 - (nu[0::2] + 0.5))
    return 1.0 / np.cumsum(terms)


def _chi2_even(j_max: int) -> np.ndarray:
    # phi_{2j}(0)^2 = binom(2j, j) / (4^j sqrt(pi))
    j = np.arange(1, j_max + 1)
    return np.concatenate([[1.0], np.cumprod((2 * j - 1) / (2 * j))]) / np.sqrt(np.pi)


_NORM_TERMS = 200000


def exact_pair_states(g_tilde: float, j_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact even relative eigenstates k = 0..j_max of one contact pair.

    Returns (C, E): C[j, k] is the overlap with oscillator state 2j. The
    eigenvector of a contact term in the oscillator basis is proportional to
    phi_nu(0) / (E - e_nu); its norm is summed to many terms plus a tail.
    """
    E = 2.0 * np.arange(j_max + 1) + 0.5 + even_shifts(j_max, g_tilde)
    c2 = _chi2_even(_NORM_TERMS)
    e = 2.0 * np.arange(_NORM_TERMS + 1) + 0.5
    chi = hermite_functions(2 * j_max, 0.0)[0::2]
    C = np.empty((j_max + 1, j_max + 1))
    for k in range(j_max + 1):
        norm2 = np.sum(c2 / (E[k] - e) ** 2) + c2[-1] / (6.0 * _NORM_TERMS)
        C[:, k] = chi / (E[k] - e[: j_max + 1]) / np.sqrt(norm2)
    return C, E


def effective_pair_interactions(g_tilde: float, M: int) -> list:
    """Hermitian effective contact interaction on even p <= m, m = 0..M.

    Built from the exact two-body states (Okubo/Lee-Suzuki, Lowdin-orthonormalized
    projections) so the truncated pair Hamiltonian has exactly the lowest
    m//2 + 1 even two-body energies.
    """
    n = M // 2 + 1
    if g_tilde == 0:
        return [np.zeros((m // 2 + 1, m // 2 + 1)) for m in range(M + 1)]
    C, E = exact_pair_states(g_tilde, n - 1)
    out = []
    for m in range(M + 1):
        k = m // 2 + 1
        A = C[:k, :k]
        s, V = np.linalg.eigh(A.T @ A)
        if s.min() <= 0:
            raise EigenSolverError(f"singular P-space projection at m={m}, g_tilde={g_tilde}")
        Uo = A @ (V * s**-0.5) @ V.T
        h = (Uo * E[:k]) @ Uo.T
        h = 0.5 * (h + h.T)
        h[np.diag_indices(k)] -= 2.0 * np.arange(k) + 0.5
        out.append(h)
    return out


def _pair_blocks(g_tilde: float, M: int, coupling: str) -> list:
    # interaction on even p <= m for spectator budget m = M - q
    if coupling == "effective":
        return effective_pair_interactions(g_tilde, M)
    if coupling == "running":
        c = running_coupling(g_tilde, M)
    elif coupling == "bare":
        if not np.isfinite(g_tilde):
            raise ValueError("infinite coupling needs the running or effective interaction")
        c = np.full(M + 1, float(g_tilde))
    else:
        raise ValueError(f"unknown coupling {coupling!r}")
    chi = hermite_functions(M, 0.0)[0::2]
    return [c[m] * np.outer(chi[: m // 2 + 1], chi[: m // 2 + 1]) for m in range(M + 1)]


def relative_sector_energies(M: int, g_tilde: float, coupling: str = "effective",
                             sectors=(0, 1, 2, 3)) -> dict:
    """Eigenvalues (relative energy incl. zero point) and shell labels per sector."""
    if g_tilde < 0:
        raise ValueError("g_tilde must be non-negative")
    geo = _sector_geometry(M)
    W = None
    out = {}
    for s in sectors:
        if s >= 4:
            K = fermionic_shell_counts(M)[s]
            out[s] = (K + 1.0, K)
            continue
        if W is None:
            blocks = _pair_blocks(g_tilde, M, coupling)
            W = sp.block_diag([blocks[M - q] for q in range(M + 1)], format="csr")
        K = geo.shells[s]
        H = np.diag(K + 1.0)
        for Z in geo.Z[s]:
            H += (Z.T @ (W @ Z)).toarray()
        try:
            e = sla.eigh(0.5 * (H + H.T), eigvals_only=True)
        except np.linalg.LinAlgError as exc:
            raise EigenSolverError(str(exc)) from exc
        out[s] = (e, np.sort(K))
    return out


def _stat_sectors(statistics: str) -> tuple:
    deg = _SECTOR_DEG[statistics]
    return tuple(s for s in range(6) if deg[s] > 0)


def _assemble_total(rel: dict, statistics: str, quanta: int):
    """Total levels n_cm + 1/2 + E_rel with n_cm + shell <= quanta."""
    deg = _SECTOR_DEG[statistics]
    E, lab, dg = [], [], []
    for s, (e, K) in rel.items():
        for n in range(quanta + 1):
            keep = int(np.sum(K <= quanta - n))
            E.append(n + 0.5 + e[:keep])
            lab.append(np.column_stack([np.full(keep, n), np.full(keep, s), np.arange(keep)]))
            dg.append(np.full(keep, deg[s]))
    return np.concatenate(E), np.concatenate(lab), np.concatenate(dg)


def _cache_path(spec: BasisSpec, g_tilde: float, cache_dir) -> Path | None:
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    if not cache_dir:
        return None
    key = f"v{CACHE_VERSION}|{spec.N}|{spec.statistics}|{spec.e_cut}|{spec.method}|{spec.coupling}|{g_tilde!r}"
    return Path(cache_dir) / f"ed_{hashlib.sha1(key.encode()).hexdigest()[:16]}.npz"


def _eigenvalues(spec: BasisSpec, g_tilde: float) -> np.ndarray:
    if spec.method == "product":
        try:
            return sla.eigh(build_hamiltonian(spec, g_tilde), eigvals_only=True)
        except np.linalg.LinAlgError as exc:
            raise EigenSolverError(str(exc)) from exc
    rel = relative_sector_energies(spec.e_cut, g_tilde, spec.coupling, _stat_sectors(spec.statistics))
    E, _, dg = _assemble_total(rel, spec.statistics, spec.e_cut)
    return np.sort(np.repeat(E, dg))


def diagonalize(spec: BasisSpec, g_tilde: float, cache_dir=None, check: bool = True) -> EdSpectrum:
    """Full ascending spectrum; convergence estimated by re-running at e_cut + 4.

    For the Jacobi solver the total spectrum keeps states with n_cm + shell <=
    e_cut, mirroring the product-basis truncation.

    Cache files (``.npz``, keyed by N, statistics, e_cut, method, coupling and
    g_tilde) hold ``version``, ``energies`` and ``convergence``; the directory
    comes from ``cache_dir`` or the ``FEWBODY_OTTO_CACHE`` environment variable.
    """
    if g_tilde < 0:
        raise ValueError("g_tilde must be non-negative")
    path = _cache_path(spec, g_tilde, cache_dir)
    if path is not None and path.exists():
        with np.load(path) as f:
            if int(f["version"]) == CACHE_VERSION:
                return EdSpectrum(f["energies"], spec, g_tilde, f["convergence"])
    e = _eigenvalues(spec, g_tilde)
    conv = np.full(len(e), np.nan)
    if check:
        e2 = _eigenvalues(spec.bumped(4), g_tilde)
        n = min(len(e), len(e2))
        conv[:n] = e2[:n] - e[:n]
    out = EdSpectrum(energies=e, basis=spec, g_tilde=g_tilde, convergence_estimate=conv)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, version=CACHE_VERSION, energies=e, convergence=conv)
    return out


def epsilon_3p(spec: BasisSpec, g_tilde: float) -> float:
    """Three-body ground-state interaction energy E_0 - 3/2 (in [0, 3])."""
    if spec.N != 3:
        raise ValueError("epsilon_3p needs N = 3")
    if spec.method == "jacobi":
        return ground_shift_3p(g_tilde, spec.e_cut, spec.coupling)
    return float(diagonalize(spec, g_tilde, check=False).energies[0] - 1.5)


def ground_shift_3p(g_tilde: float, M: int = 80, coupling: str = "effective") -> float:
    e, _ = relative_sector_energies(M, g_tilde, coupling, sectors=(0,))[0]
    return float(e[0] - 1.0)


def gtilde_for_epsilon_3p(eps: float, M: int = 80, g_max: float = 1e6) -> float:
    """Invert epsilon_3p(g_tilde) by bracketing on log(g_tilde)."""
    if not 0 <= eps < 3:
        raise ValueError(f"epsilon_3p must lie in [0, 3), got {eps}")
    if eps == 0:
        return 0.0
    if eps >= ground_shift_3p(g_max, M):
        raise ValueError(f"epsilon_3p = {eps} needs g_tilde beyond {g_max}")
    f = lambda lg: ground_shift_3p(np.exp(lg), M) - eps
    lo = np.log(1e-8)
    return float(np.exp(brentq(f, lo, np.log(g_max), xtol=1e-12, rtol=1e-12)))


# ------------------------------------------------- thermodynamic spectra

@dataclass(frozen=True)
class ThreeBodyLevels:
    """Relative sector spectra at one coupling, cut to a fixed quanta budget."""

    g_tilde: float
    statistics: str
    quanta: int
    M: int
    rel: dict
    convergence: dict

    def spectrum(self, omega: float) -> Spectrum:
        E, lab, dg = _assemble_total(self.rel, self.statistics, self.quanta)
        return Spectrum(
            energies=omega * E, labels=lab, degeneracy=dg, omega=omega, n_particles=3,
            statistics=self.statistics,
            truncation=Truncation("quanta", omega, 3, max_quanta=self.quanta),
            meta={"source": "ed-jacobi", "g_tilde": self.g_tilde, "M": self.M,
                  "max_convergence": self.max_change()},
        )

    def max_change(self, e_window: float | None = None) -> float:
        worst = 0.0
        for s, d in self.convergence.items():
            e = self.rel[s][0][: len(d)]
            sel = slice(None) if e_window is None else e - e.min() <= e_window
            if len(d[sel]):
                worst = max(worst, float(np.max(np.abs(d[sel]))))
        return worst


def three_body_levels(g_tilde: float, statistics: str, quanta: int, M: int | None = None,
                      check: bool = True) -> ThreeBodyLevels:
    """Relative levels whose non-interacting partner has shell <= quanta.

    Within each symmetry sector the i-th level is adiabatically connected to
    the i-th non-interacting one (repulsion only lifts levels, by less than 3
    quanta), so keeping per-sector counts yields identical labels at every
    coupling.
    """
    statistics = normalize_statistics(statistics)
    M = M or max(80, quanta + 40)
    sectors = _stat_sectors(statistics)
    rel_all = relative_sector_energies(M, g_tilde, "effective", sectors)
    rel = {}
    for s, (e, K) in rel_all.items():
        keep = int(np.sum(K <= quanta))
        rel[s] = (e[:keep], K[:keep])
    conv = {}
    if check:
        rel2 = relative_sector_energies(M + 4, g_tilde, "effective", sectors)
        for s, (e, K) in rel.items():
            conv[s] = rel2[s][0][: len(e)] - e
    return ThreeBodyLevels(g_tilde, statistics, quanta, M, rel, conv)


__all__ = [
    "BasisSpec", "EdSpectrum", "ResourceError", "EigenSolverError", "MAX_DIM", "CACHE_ENV",
    "hermite_functions", "delta_matrix_element", "product_states", "build_hamiltonian",
    "diagonalize", "epsilon_3p", "ground_shift_3p", "gtilde_for_epsilon_3p", "running_coupling",
    "relative_sector_energies", "three_body_levels", "ThreeBodyLevels", "SECTORS",
]
