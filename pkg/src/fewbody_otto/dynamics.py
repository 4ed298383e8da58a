"""Finite-time compression and expansion strokes for the two-particle engine.

The centre of mass and the relative coordinate are separate 1D problems on a
uniform grid; only the relative one carries the contact term, which sits on
the grid node at the origin as a site potential c/dx with c = g/sqrt(2).
Time stepping is Crank-Nicolson with the midpoint Hamiltonian.

States that never feel the contact term (centre of mass, odd relative
states, the non-interacting protocol) evolve under the same plain oscillator
ramp, so one propagation of the oscillator eigenstates serves all of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy.linalg import eigh_tridiagonal

from .spectrum import BOSONIC
from .thermo import CycleConfig

POLYNOMIAL = "polynomial"
SCALE_INVARIANT = "scale_invariant_slave"
PROTOCOLS = ("optimal", "scale_invariant", "noninteracting")

THERMAL_CUT = 1e-6
NORM_TOL = 1e-8
LEAK_TOL = 1e-12


class AccuracyError(RuntimeError):
    """Norm drift or boundary leakage beyond the grid's accuracy bounds."""


@dataclass(frozen=True)
class RampProtocol:
    f0: float
    f_tau: float
    tau: float
    kind: str = POLYNOMIAL

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.kind not in (POLYNOMIAL, SCALE_INVARIANT):
            raise ValueError(f"unknown ramp kind {self.kind!r}")


def _smoothstep(s):
    return s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


def ramp_value(protocol: RampProtocol, t, omega_protocol: RampProtocol | None = None):
    """f(t) = f0 + df (10 s^3 - 15 s^4 + 6 s^5), s = t / tau.

    For the scale-invariant kind the value is slaved to the frequency ramp:
    f(t) = f0 * sqrt(omega(t) / omega(0)).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > protocol.tau * (1 + 1e-12)):
        raise ValueError(f"t must lie in [0, tau={protocol.tau}]")
    if protocol.kind == SCALE_INVARIANT:
        if omega_protocol is None:
            raise ValueError("a scale-invariant ramp needs the frequency protocol")
        w = ramp_value(omega_protocol, t)
        out = protocol.f0 * np.sqrt(w / omega_protocol.f0)
    else:
        out = protocol.f0 + (protocol.f_tau - protocol.f0) * _smoothstep(np.clip(t / protocol.tau, 0, 1))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class GridSpec:
    half_width: float = 12.0
    points: int = 4097
    dt: float = 1e-3

    def __post_init__(self):
        if self.points % 2 == 0 or self.points < 65:
            raise ValueError("points must be odd (node at the origin) and >= 65")
        if not (self.half_width > 0 and self.dt > 0):
            raise ValueError("half_width and dt must be positive")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    def refined(self) -> "GridSpec":
        return GridSpec(self.half_width, 2 * self.points - 1, self.dt / 2)


# ------------------------------------------------------------ grid physics

def _diagonal(grid: GridSpec, omega: float, c: float) -> np.ndarray:
    d = 1.0 / grid.dx**2 + 0.5 * omega**2 * grid.x**2
    d[grid.points // 2] += c / grid.dx
    return d


def grid_eigenstates(grid: GridSpec, omega: float, c: float, n_states: int):
    """Lowest eigenpairs of the static grid Hamiltonian; vectors normalized with dx."""
    off = np.full(grid.points - 1, -0.5 / grid.dx**2)
    e, v = eigh_tridiagonal(_diagonal(grid, omega, c), off, select="i", select_range=(0, n_states - 1))
    return e, v / np.sqrt(grid.dx)


def _parity(v: np.ndarray) -> np.ndarray:
    # +1 even, -1 odd, by overlap with the mirrored vector
    return np.sign(np.sum(v * v[::-1], axis=0)).astype(int)


def grid_energy(grid: GridSpec, psi: np.ndarray, omega: float, c: float) -> np.ndarray:
    """<psi|H|psi> per column with the grid operators."""
    d = _diagonal(grid, omega, c)
    hpsi = d[:, None] * psi
    hpsi[1:] += -0.5 / grid.dx**2 * psi[:-1]
    hpsi[:-1] += -0.5 / grid.dx**2 * psi[1:]
    return np.real(np.sum(np.conj(psi) * hpsi, axis=0)) * grid.dx


@njit(cache=True)
def _cn_steps(psi, x2, inv_dx2, dx, j0, dt, omega_mid, c_mid, edge):
    """Crank-Nicolson steps in place; returns max density near the walls."""
    m, n = psi.shape
    a = 0.5j * dt * (-0.5 * inv_dx2)          # off-diagonal of (I + i dt/2 H)
    cp = np.empty(n, dtype=np.complex128)
    dinv = np.empty(n, dtype=np.complex128)
    hd = np.empty(n, dtype=np.complex128)
    rhs = np.empty(n, dtype=np.complex128)
    leak = 0.0
    nsteps = omega_mid.shape[0]
    for step in range(nsteps):
        w2 = 0.5 * omega_mid[step] ** 2
        for j in range(n):
            hd[j] = 0.5j * dt * (inv_dx2 + w2 * x2[j])
        hd[j0] += 0.5j * dt * c_mid[step] / dx
        # factor the tridiagonal system once per step (diagonally dominant, no pivoting)
        dinv[0] = 1.0 / (1.0 + hd[0])
        cp[0] = a * dinv[0]
        for j in range(1, n):
            dinv[j] = 1.0 / (1.0 + hd[j] - a * cp[j - 1])
            cp[j] = a * dinv[j]
        for k in range(m):
            # rhs = (I - i dt/2 H) psi, fused with the forward sweep
            prev = (1.0 - hd[0]) * psi[k, 0] - a * psi[k, 1]
            prev = prev * dinv[0]
            rhs[0] = prev
            for j in range(1, n - 1):
                r = (1.0 - hd[j]) * psi[k, j] - a * (psi[k, j - 1] + psi[k, j + 1])
                prev = (r - a * prev) * dinv[j]
                rhs[j] = prev
            r = (1.0 - hd[n - 1]) * psi[k, n - 1] - a * psi[k, n - 2]
            prev = (r - a * prev) * dinv[n - 1]
            psi[k, n - 1] = prev
            for j in range(n - 2, -1, -1):
                prev = rhs[j] - cp[j] * prev
                psi[k, j] = prev
            if step % 64 == 0 or step == nsteps - 1:
                for j in (edge, n - 1 - edge):
                    dens = psi[k, j].real ** 2 + psi[k, j].imag ** 2
                    if dens > leak:
                        leak = dens
    return leak


@dataclass
class StrokeOutcome:
    energies: np.ndarray      # <H_end> of each propagated state
    norm_drift: float
    leakage: float


def propagate(grid: GridSpec, psi0: np.ndarray, omega_fn, c_fn, tau: float,
              omega_end: float, c_end: float, check: bool = True) -> StrokeOutcome:
    """Evolve the columns of psi0 over [0, tau]; energies under H(omega_end, c_end)."""
    nsteps = max(1, int(round(tau / grid.dt)))
    dt = tau / nsteps
    t_mid = (np.arange(nsteps) + 0.5) * dt
    rows = np.ascontiguousarray(np.asarray(psi0).T, dtype=np.complex128).copy()
    norm0 = np.sum(np.abs(rows) ** 2, axis=1) * grid.dx
    leak = _cn_steps(rows, grid.x**2, 1.0 / grid.dx**2, grid.dx, grid.points // 2, dt,
                     np.asarray(omega_fn(t_mid), dtype=float), np.asarray(c_fn(t_mid), dtype=float), 1)
    psi = rows.T
    norm1 = np.sum(np.abs(psi) ** 2, axis=0) * grid.dx
    drift = float(np.max(np.abs(norm1 - norm0))) if psi.shape[1] else 0.0
    if check and drift > NORM_TOL:
        raise AccuracyError(f"norm drift {drift:.2e} exceeds {NORM_TOL:g}; reduce dt")
    if check and leak > LEAK_TOL:
        raise AccuracyError(f"boundary density {leak:.2e} exceeds {LEAK_TOL:g}; enlarge half_width")
    return StrokeOutcome(grid_energy(grid, psi, omega_end, c_end) / norm1, drift, float(leak))


@dataclass
class MixedState:
    """Thermal mixture over grid eigenstates (truncated where weights are negligible)."""

    energies: np.ndarray
    vectors: np.ndarray
    populations: np.ndarray
    parity: np.ndarray

    @property
    def mean_energy(self) -> float:
        return float(np.sum(self.populations * self.energies))


def thermal_grid_state(grid: GridSpec, omega: float, c: float, beta: float, even_only: bool = False,
                       cut: float = THERMAL_CUT, n_max: int = 400) -> MixedState:
    """Gibbs mixture on the grid, keeping levels until the missing weight < cut."""
    n = 16
    while True:
        e, v = grid_eigenstates(grid, omega, c, min(n, grid.points))
        par = _parity(v)
        keep = par > 0 if even_only else np.ones(len(e), bool)
        w = np.exp(-beta * (e - e[0]))
        # bound the unseen tail by a geometric continuation of the last spacing
        gap = omega * (2.0 if even_only else 1.0)
        tail = w[-1] * np.exp(-beta * gap) / (1.0 - np.exp(-beta * gap))
        if tail < cut * np.sum(w[keep]) or n >= min(n_max, grid.points):
            break
        n *= 2
    e, v, w, par = e[keep], v[:, keep], w[keep], par[keep]
    z = np.sum(w)
    p = w / z
    need = np.searchsorted(np.cumsum(p), 1.0 - cut) + 1
    need = min(need, len(p))
    p = p[:need] / np.sum(p[:need])
    return MixedState(e[:need], v[:, :need], p, par[:need])


def adiabatic_energies(grid: GridSpec, omega: float, c: float, n: int, even_only: bool = False) -> np.ndarray:
    """Grid levels in adiabatic-label order (ordered within each parity)."""
    e, v = grid_eigenstates(grid, omega, c, min(2 * n + 2, grid.points))
    par = _parity(v)
    return e[par > 0][:n] if even_only else e[:n]


# --------------------------------------------------------------- the cycle

@dataclass
class PropagationResult:
    tau: float
    protocol: str
    W_tau: float
    W_ad: float
    W_irr: float
    Q_h: float
    eta_tau: float
    P_eff: float
    W_c: float
    W_e: float
    stroke_energies: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = {"tau": self.tau, "protocol": self.protocol, "W_tau": self.W_tau, "W_irr": self.W_irr,
               "eta_tau": self.eta_tau, "P_eff": self.P_eff, "W_ad": self.W_ad, "Q_h": self.Q_h,
               "W_c": self.W_c, "W_e": self.W_e}
        row.update({k: v for k, v in self.diagnostics.items()})
        return row


def _bare_g(g_tilde, omega):
    return g_tilde * np.sqrt(2.0 * omega)


class _CycleSetup:
    """Static pieces of a finite-time cycle for one protocol family."""

    def __init__(self, cfg: CycleConfig, protocol: str, grid: GridSpec):
        if cfg.N != 2:
            raise ValueError("finite-time strokes are implemented for N = 2")
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}; use one of {PROTOCOLS}")
        if protocol == "noninteracting":
            cfg = cfg.noninteracting()
        elif protocol == "scale_invariant":
            cfg = replace(cfg, g_tilde_f=cfg.g_tilde_i)
        self.cfg, self.protocol, self.grid = cfg, protocol, grid
        self.g_i = _bare_g(cfg.g_tilde_i, cfg.omega_i)
        self.g_f = _bare_g(cfg.g_tilde_f, cfg.omega_f)
        self.c_i, self.c_f = self.g_i / np.sqrt(2.0), self.g_f / np.sqrt(2.0)
        self.even_only = cfg.statistics == BOSONIC
        # thermal mixtures: relative (with contact) and the plain oscillator
        self.rel_cold = thermal_grid_state(grid, cfg.omega_i, self.c_i, cfg.beta_c, self.even_only)
        self.rel_hot = thermal_grid_state(grid, cfg.omega_f, self.c_f, cfg.beta_h, self.even_only)
        self.osc_cold = thermal_grid_state(grid, cfg.omega_i, 0.0, cfg.beta_c)
        self.osc_hot = thermal_grid_state(grid, cfg.omega_f, 0.0, cfg.beta_h)
        # relative states that never feel the contact, as plain oscillator level indices
        interacting = self.c_i != 0 or self.c_f != 0
        self.plain_index, self.plain_count = {}, {}
        for stroke, rel, osc, omega in (("compression", self.rel_cold, self.osc_cold, cfg.omega_i),
                                        ("expansion", self.rel_hot, self.osc_hot, cfg.omega_f)):
            mask = rel.parity < 0 if interacting else np.ones(len(rel.energies), bool)
            n = max(len(osc.energies), 2 * len(rel.energies) + 2)
            levels, _ = grid_eigenstates(grid, omega, 0.0, min(n, grid.points))
            e = rel.energies[mask]
            idx = np.array([int(np.argmin(np.abs(levels - x))) for x in e], dtype=int)
            if len(idx) and np.max(np.abs(levels[idx] - e)) > 1e-8 * max(1.0, np.max(np.abs(e))):
                raise AccuracyError("contact-free relative level does not match the plain oscillator spectrum")
            self.plain_index[stroke] = (mask, idx)
            self.plain_count[stroke] = max(len(osc.energies), int(idx.max()) + 1 if len(idx) else 0)

    def ramps(self, tau: float, compress: bool):
        cfg = self.cfg
        w0, w1 = (cfg.omega_i, cfg.omega_f) if compress else (cfg.omega_f, cfg.omega_i)
        g0, g1 = (self.g_i, self.g_f) if compress else (self.g_f, self.g_i)
        w_ramp = RampProtocol(w0, w1, tau)
        kind = SCALE_INVARIANT if self.protocol == "scale_invariant" else POLYNOMIAL
        g_ramp = RampProtocol(g0, g1, tau, kind)
        omega_fn = lambda t: ramp_value(w_ramp, t)
        c_fn = lambda t: ramp_value(g_ramp, t, w_ramp) / np.sqrt(2.0)
        return omega_fn, c_fn, w1, g1 / np.sqrt(2.0)

    def adiabatic_work(self) -> float:
        """W of the infinitely slow cycle on the same grid (label-wise transport)."""
        cfg, grid = self.cfg, self.grid
        total = 0.0
        for (cold, hot, c_i, c_f, even) in (
                (self.rel_cold, self.rel_hot, self.c_i, self.c_f, self.even_only),
                (self.osc_cold, self.osc_hot, 0.0, 0.0, False)):
            n = max(len(cold.energies), len(hot.energies))
            e_i = adiabatic_energies(grid, cfg.omega_i, c_i, n, even)
            e_f = adiabatic_energies(grid, cfg.omega_f, c_f, n, even)
            p_i = np.zeros(n)
            p_i[: len(cold.populations)] = cold.populations
            p_f = np.zeros(n)
            p_f[: len(hot.populations)] = hot.populations
            total += float(np.sum((e_f - e_i) * (p_i - p_f)))
        return total


def finite_time_cycle(cfg: CycleConfig, tau: float, protocol_kind: str = "optimal",
                      grid: GridSpec = GridSpec(), setup: _CycleSetup | None = None,
                      plain: dict | None = None) -> PropagationResult:
    """Finite-time Otto cycle with full thermalization on the isochores.

    W_tau = W_c + W_e, Q_h = E_3 - E_2, eta = -W_tau / Q_h, P = -W_tau / (2 tau),
    W_irr = W_tau - W_ad with W_ad from the grid spectra.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    s = setup or _CycleSetup(cfg, protocol_kind, grid)
    plain = plain if plain is not None else plain_oscillator_strokes(s, tau)
    diag = {"norm_drift": plain["norm_drift"], "leakage": plain["leakage"]}
    E = {}
    for stroke, start, compress in (("compression", s.rel_cold, True), ("expansion", s.rel_hot, False)):
        free, idx = s.plain_index[stroke]
        if len(plain[stroke]) < s.plain_count[stroke]:
            raise ValueError("shared oscillator strokes cover too few levels for this protocol")
        feel = ~free
        e_end = np.empty(len(start.energies))
        e_end[free] = plain[stroke][idx]
        if np.any(feel):
            omega_fn, c_fn, w_end, c_end = s.ramps(tau, compress)
            out = propagate(s.grid, start.vectors[:, feel], omega_fn, c_fn, tau, w_end, c_end)
            e_end[feel] = out.energies
            diag["norm_drift"] = max(diag["norm_drift"], out.norm_drift)
            diag["leakage"] = max(diag["leakage"], out.leakage)
        E[stroke] = float(np.sum(start.populations * e_end))
    # centre of mass: plain oscillator mixtures
    E_cm_2 = float(np.sum(s.osc_cold.populations * plain["compression"][: len(s.osc_cold.populations)]))
    E_cm_4 = float(np.sum(s.osc_hot.populations * plain["expansion"][: len(s.osc_hot.populations)]))
    E1 = s.rel_cold.mean_energy + s.osc_cold.mean_energy
    E2 = E["compression"] + E_cm_2
    E3 = s.rel_hot.mean_energy + s.osc_hot.mean_energy
    E4 = E["expansion"] + E_cm_4
    W_c, W_e = E2 - E1, E4 - E3
    W = W_c + W_e
    Q_h = E3 - E2
    W_ad = s.adiabatic_work()
    eta = -W / Q_h if (W < 0 and Q_h > 0) else float("nan")
    return PropagationResult(
        tau=tau, protocol=s.protocol, W_tau=W, W_ad=W_ad, W_irr=W - W_ad, Q_h=Q_h, eta_tau=eta,
        P_eff=-W / (2.0 * tau), W_c=W_c, W_e=W_e,
        stroke_energies={"E1": E1, "E2": E2, "E3": E3, "E4": E4}, diagnostics=diag,
    )


def plain_oscillator_strokes(s: _CycleSetup, tau: float, counts: dict | None = None) -> dict:
    """Final energies of the lowest plain oscillator eigenstates after each stroke.

    Serves the centre of mass, contact-free relative states and the
    non-interacting protocol. ``counts`` overrides how many levels to carry.
    """
    counts = counts or s.plain_count
    out = {"norm_drift": 0.0, "leakage": 0.0}
    for stroke, omega0, compress in (("compression", s.cfg.omega_i, True), ("expansion", s.cfg.omega_f, False)):
        omega_fn, _, w_end, _ = s.ramps(tau, compress)
        _, vecs = grid_eigenstates(s.grid, omega0, 0.0, counts[stroke])
        r = propagate(s.grid, vecs, omega_fn, lambda t: np.zeros_like(t), tau, w_end, 0.0)
        out[stroke] = r.energies
        out["norm_drift"] = max(out["norm_drift"], r.norm_drift)
        out["leakage"] = max(out["leakage"], r.leakage)
    return out


def _sweep_point(args):
    cfg, tau, setups, counts, grid = args
    ref = next(iter(setups.values()))
    plain = plain_oscillator_strokes(ref, tau, counts)
    return [finite_time_cycle(cfg, tau, k, grid, setup=s, plain=plain) for k, s in setups.items()]


def tau_sweep(cfg: CycleConfig, tau_list, protocol_kinds=PROTOCOLS, grid: GridSpec = GridSpec(),
              progress=None, mapper=map) -> list[PropagationResult]:
    """Finite-time cycles for every (tau, protocol); the oscillator strokes are shared.

    ``mapper`` evaluates tau points (ordered); rows come back in (tau, protocol) order.
    """
    taus = np.asarray(tau_list, dtype=float)
    if taus.size == 0 or np.any(taus <= 0) or np.any(np.diff(taus) <= 0):
        raise ValueError("tau_list must be positive and ascending")
    if not protocol_kinds:
        raise ValueError("no protocols requested")
    setups = {k: _CycleSetup(cfg, k, grid) for k in protocol_kinds}
    counts = {k: max(s.plain_count[k] for s in setups.values()) for k in ("compression", "expansion")}
    rows = []
    for j, block in enumerate(mapper(_sweep_point, [(cfg, float(t), setups, counts, grid) for t in taus])):
        rows.extend(block)
        if progress:
            progress(j + 1, len(taus))
    return rows


def grid_check(cfg: CycleConfig, tau: float, protocol_kind: str = "optimal", grid: GridSpec = GridSpec(),
               tol: float = 1e-4, raise_on_fail: bool = True) -> dict:
    """Two-resolution check: W_tau on ``grid`` and on the refined grid (2M-1 points, dt/2)."""
    coarse = finite_time_cycle(cfg, tau, protocol_kind, grid)
    fine = finite_time_cycle(cfg, tau, protocol_kind, grid.refined())
    delta = abs(fine.W_tau - coarse.W_tau)
    if raise_on_fail and delta > tol:
        raise AccuracyError(f"W_tau changes by {delta:.2e} under grid refinement (> {tol:g}); "
                            f"increase points above {grid.points} or reduce dt below {grid.dt:g}")
    return {"tau": tau, "W_coarse": coarse.W_tau, "W_fine": fine.W_tau, "delta": delta, "ok": delta <= tol}


def sudden_energy(omega_i: float, omega_f: float, n: int = 0) -> float:
    """<H(omega_f)> right after a sudden quench of oscillator eigenstate n."""
    return (n + 0.5) * (omega_f**2 + omega_i**2) / (2.0 * omega_i)


__all__ = [
    "RampProtocol", "GridSpec", "PropagationResult", "MixedState", "AccuracyError", "ramp_value",
    "grid_eigenstates", "grid_energy", "propagate", "thermal_grid_state", "finite_time_cycle",
    "tau_sweep", "plain_oscillator_strokes", "grid_check", "sudden_energy", "PROTOCOLS",
]
