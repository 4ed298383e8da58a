"""Efficiency at maximum work: maximize -W over (kappa, g_i, g_f) at fixed baths.

Search variables are (log kappa, eps_i, eps_f) with eps the ground-state
interaction energy, which flattens the fermionization plateau. Multi-start
bounded Nelder-Mead from a Latin hypercube plus an optional warm start.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import minimize
from scipy.stats import qmc

from .spectrum import Spectrum, Truncation, normalize_statistics, quanta_for_tail
from .spectrum2p import epsilon_to_gtilde, even_shifts
from .thermo import TAIL_TOL, CycleConfig, curzon_ahlborn, run_cycle, run_cycle_two_body

KAPPA_BOUNDS = (0.01, 0.99)
G_MAX = 50.0
VANISHING_W = 1e-6


@dataclass(frozen=True)
class EmwBounds:
    kappa: tuple = KAPPA_BOUNDS
    g_tilde_i: tuple = (0.0, G_MAX)
    g_tilde_f: tuple = (0.0, G_MAX)

    @classmethod
    def noninteracting(cls) -> "EmwBounds":
        return cls(g_tilde_i=(0.0, 0.0), g_tilde_f=(0.0, 0.0))


@dataclass
class EmwPoint:
    beta_c: float
    beta_h: float
    N: int
    statistics: str
    kappa: float
    g_tilde_i: float
    g_tilde_f: float
    eps_i: float
    eps_f: float
    W_max: float
    eta_at_max: float
    quality: str
    starts: list = field(default_factory=list, repr=False)

    @property
    def beta_ratio(self) -> float:
        return self.beta_h / self.beta_c

    @property
    def eta_CA(self) -> float:
        return curzon_ahlborn(self.beta_h, self.beta_c)

    def as_row(self) -> dict:
        return {"ratio": self.beta_ratio, "kappa": self.kappa, "g_tilde_i": self.g_tilde_i,
                "g_tilde_f": self.g_tilde_f, "eps_i": self.eps_i, "eps_f": self.eps_f,
                "W_max": self.W_max, "eta": self.eta_at_max, "eta_CA": self.eta_CA,
                "quality": self.quality}


class _TwoBodySource:
    """Analytic two-body spectra; eps <-> g_tilde in closed form."""

    N = 2

    def __init__(self, statistics):
        self.statistics = statistics

    def eps_of_g(self, g):
        return float(even_shifts(0, g)[0])

    def g_of_eps(self, eps):
        return float(epsilon_to_gtilde(eps)) if eps > 0 else 0.0

    def cycle(self, cfg: CycleConfig, k: int):
        return run_cycle_two_body(cfg)


class ThreeBodyTable:
    """Three-body levels tabulated on a uniform epsilon_3P grid and splined.

    Each level keeps its adiabatic label, so the spline is taken label-wise.
    """

    N = 3

    def __init__(self, statistics, quanta: int, g_max: float = G_MAX, nodes: int = 33, M: int | None = None):
        from .fewbody_ed import ground_shift_3p, gtilde_for_epsilon_3p, three_body_levels

        self.statistics = normalize_statistics(statistics)
        self.quanta = quanta
        top = ground_shift_3p(g_max)
        self.eps = np.linspace(0.0, top, nodes)
        self.g = np.array([gtilde_for_epsilon_3p(e) for e in self.eps])
        self.g[-1] = g_max
        levels = [three_body_levels(g, self.statistics, quanta, M=M, check=False) for g in self.g]
        spectra = [lv.spectrum(1.0) for lv in levels]
        ref = spectra[0]
        table = np.array([s.energies[s.aligned_to(ref)] for s in spectra])
        self.labels, self.degeneracy = ref.labels, ref.degeneracy
        self._spline = CubicSpline(self.eps, table, axis=0)
        self._g_of_eps = PchipInterpolator(self.eps, self.g)
        self._eps_of_g = PchipInterpolator(self.g, self.eps)

    def eps_of_g(self, g):
        return float(self._eps_of_g(min(g, self.g[-1])))

    def g_of_eps(self, eps):
        return float(self._g_of_eps(eps))

    def spectrum(self, omega: float, eps: float) -> Spectrum:
        return Spectrum(omega * self._spline(eps), self.labels, self.degeneracy, omega, 3, self.statistics,
                        Truncation("quanta", omega, 3, max_quanta=self.quanta), meta={"source": "ed-table"})

    def cycle(self, cfg: CycleConfig, k: int):
        return run_cycle(cfg, (self.spectrum(cfg.omega_i, self.eps_of_g(cfg.g_tilde_i)),
                               self.spectrum(cfg.omega_f, self.eps_of_g(cfg.g_tilde_f))))


def _quanta_for_box(beta_c, beta_h, N, kappa_max):
    # worst case over the kappa box is the weakest compression
    bw = min(beta_c, beta_h / kappa_max)
    return quanta_for_tail(bw, N, {2: 1.0, 3: 3.0}.get(N, 0.0), TAIL_TOL * 1e-2)


def maximize_work(beta_c: float, beta_h: float, N: int = 2, statistics: str = "distinguishable",
                  bounds: EmwBounds = EmwBounds(), seed: int = 42, n_starts: int = 8,
                  warm_start=None, source=None, xatol: float = 1e-9, fatol: float = 1e-13) -> EmwPoint:
    """Most negative W over the bounded (kappa, g_i, g_f) box at fixed baths.

    ``warm_start`` is (kappa, g_i, g_f). Every start and its final W are kept in
    ``EmwPoint.starts`` for audit.
    """
    statistics = normalize_statistics(statistics)
    if not 0 < beta_h < beta_c:
        raise ValueError(f"need 0 < beta_h < beta_c, got {beta_h}, {beta_c}")
    k_lo, k_hi = bounds.kappa
    if not (0 < k_lo <= k_hi < 1):
        raise ValueError(f"kappa bounds must lie in (0, 1), got {bounds.kappa}")
    for b in (bounds.g_tilde_i, bounds.g_tilde_f):
        if not 0 <= b[0] <= b[1] <= G_MAX:
            raise ValueError(f"g_tilde bounds must lie in [0, {G_MAX}], got {b}")
    if source is None:
        if N == 2:
            source = _TwoBodySource(statistics)
        elif N == 3:
            source = ThreeBodyTable(statistics, _quanta_for_box(beta_c, beta_h, 3, k_hi))
        else:
            raise ValueError("maximize_work supports N = 2, 3")
    k = _quanta_for_box(beta_c, beta_h, N, k_hi)

    # free coordinates: log kappa always, eps_i / eps_f unless pinned
    lo = [np.log(k_lo)]
    hi = [np.log(k_hi)]
    free = []
    for name, b in (("i", bounds.g_tilde_i), ("f", bounds.g_tilde_f)):
        e_lo, e_hi = source.eps_of_g(b[0]), source.eps_of_g(b[1])
        if e_hi > e_lo:
            free.append(name)
            lo.append(e_lo)
            hi.append(e_hi)
    pinned = {"i": source.eps_of_g(bounds.g_tilde_i[0]), "f": source.eps_of_g(bounds.g_tilde_f[0])}
    lo, hi = np.array(lo), np.array(hi)

    def unpack(z):
        z = np.clip(z, lo, hi)
        eps = dict(pinned)
        for j, name in enumerate(free):
            eps[name] = z[1 + j]
        return float(np.exp(z[0])), eps["i"], eps["f"]

    def evaluate(z):
        kappa, e_i, e_f = unpack(z)
        cfg = CycleConfig.from_kappa(kappa, beta_c=beta_c, beta_h=beta_h, N=N, statistics=statistics,
                                     g_tilde_i=source.g_of_eps(e_i), g_tilde_f=source.g_of_eps(e_f))
        return source.cycle(cfg, k)

    def objective(z):
        return evaluate(z).W

    sampler = qmc.LatinHypercube(d=len(lo), seed=seed)
    starts = list(qmc.scale(sampler.random(n_starts), lo, hi)) if np.all(hi > lo) else [lo.copy()]
    if warm_start is not None:
        kw, gi, gf = warm_start
        z0 = [np.log(np.clip(kw, k_lo, k_hi))]
        for name, g in (("i", gi), ("f", gf)):
            if name in free:
                z0.append(source.eps_of_g(g))
        starts.insert(0, np.clip(np.array(z0), lo, hi))

    runs = []
    for z0 in starts:
        opt = minimize(objective, z0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                       options={"xatol": xatol, "fatol": fatol, "maxiter": 4000, "maxfev": 8000})
        runs.append({"start": np.asarray(z0).tolist(), "x": opt.x.tolist(), "W": float(opt.fun)})
    best = min(runs, key=lambda r: r["W"])
    r = evaluate(np.array(best["x"]))
    kappa, e_i, e_f = unpack(np.array(best["x"]))
    if r.W >= 0:
        quality, eta = "no_engine", float("nan")
    else:
        eta = r.eta
        quality = "vanishing_work" if (beta_h / beta_c > 0.8 and abs(r.W) < VANISHING_W) else "ok"
    return EmwPoint(beta_c=beta_c, beta_h=beta_h, N=N, statistics=statistics, kappa=kappa,
                    g_tilde_i=source.g_of_eps(e_i), g_tilde_f=source.g_of_eps(e_f), eps_i=e_i, eps_f=e_f,
                    W_max=r.W, eta_at_max=eta, quality=quality, starts=runs)


def emw_curve(beta_c: float, ratios, N: int = 2, statistics: str = "distinguishable",
              bounds: EmwBounds = EmwBounds(), seed: int = 42, n_starts: int = 8, progress=None) -> list[EmwPoint]:
    """EMW along beta_h / beta_c, warm-starting from the previous optimum."""
    ratios = list(ratios)
    if any(not 0 < r < 1 for r in ratios):
        raise ValueError("ratios must lie in (0, 1)")
    statistics = normalize_statistics(statistics)
    source = None
    if N == 3:
        k = _quanta_for_box(beta_c, beta_c * min(ratios), 3, bounds.kappa[1])
        source = ThreeBodyTable(statistics, k)
    out, warm = [], None
    for j, ratio in enumerate(ratios):
        p = maximize_work(beta_c, beta_c * ratio, N, statistics, bounds, seed=seed, n_starts=n_starts,
                          warm_start=warm, source=source)
        out.append(p)
        if p.quality != "no_engine":
            warm = (p.kappa, p.g_tilde_i, p.g_tilde_f)
        if progress:
            progress(j + 1, len(ratios))
    return out


__all__ = ["EmwBounds", "EmwPoint", "ThreeBodyTable", "maximize_work", "emw_curve", "KAPPA_BOUNDS", "G_MAX"]
