"""Population dynamics for the replica-symmetric saddle point.

The order parameters are distributions of Gaussian-field pairs (A, H)
per module, represented by finite populations.  A sweep refreshes the
conjugate populations through the map (A, H) -> (-A/(1+A), H/(1+A))
with cross-module mixing weight gamma/(cbar p_r), then rebuilds the
cavity populations by summing c_t - 1 conjugate fields for an excess
degree c_t.  The spectral parameter phi is tuned by bisection so the
per-sweep growth factor of the H fields equals one; the Lagrange
multiplier psi is projected out each sweep to keep the complete
marginals orthogonal to the trivial mode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    BisectionFailed,
    EmptyPopulation,
    InvalidSpec,
    NonConvergence,
    UnstableField,
)
from .graphs import DegreeSpec, mean_degree

__all__ = [
    "Model",
    "PdConfig",
    "Population",
    "PdResult",
    "mixing_probability",
    "cavity_sweep",
    "run_population_dynamics",
    "evaluate_lambda2",
    "element_distribution",
]


class Model(Enum):
    REGULAR_L = "regular_L"
    GENERAL_L = "general_L"
    GENERAL_NCUT = "general_ncut"


def mixing_probability(cbar: float, p_r: float, gamma: float) -> float:
    """Probability that a module-r conjugate draws an other-module field."""
    return gamma / (cbar * p_r)


@dataclass
class Population:
    """Per-module arrays of (A, H) field pairs."""

    A: list
    H: list

    def copy(self) -> "Population":
        return Population([a.copy() for a in self.A], [h.copy() for h in self.H])


@dataclass
class PdConfig:
    model: Model
    spec: DegreeSpec
    p1: float
    gamma: float
    seed: int
    population_size: int = 100_000
    equilibration_sweeps: int = 200
    measurement_sweeps: int = 200
    phi_bisection_tolerance: float = 1e-6
    init: str = "staggered"

    def __post_init__(self):
        if self.population_size < 10**3:
            raise InvalidSpec("population_size must be at least 1e3")
        if self.phi_bisection_tolerance <= 0:
            raise InvalidSpec("phi_bisection_tolerance must be positive")
        if not 0 < self.p1 < 1:
            raise InvalidSpec("p1 must lie in (0, 1)")
        if self.gamma < 0:
            raise InvalidSpec("gamma must be nonnegative")
        if self.init not in ("staggered", "gaussian"):
            raise InvalidSpec("init must be 'staggered' or 'gaussian'")


@dataclass
class PdResult:
    phi: float
    psi: float
    lambda2: float
    marginal_population: list
    m1: np.ndarray
    m2: np.ndarray
    m1_hat: np.ndarray
    m2_hat: np.ndarray
    fraction_correct: float
    residual_orthogonality: float
    residual_normalization: float
    population: Population
    conjugate_population: Population
    config: PdConfig = field(repr=False, default=None)


class _Engine:
    """Holds the degree data and RNG for one population-dynamics run."""

    def __init__(self, config: PdConfig, rng=None):
        self.config = config
        cs, bs = config.spec.degree_classes()
        self.cs = cs.astype(np.int64)
        self.bs = bs / bs.sum()
        self.cbar = mean_degree(config.spec)
        self.excess = self.bs * self.cs / self.cbar
        self.p = (config.p1, 1.0 - config.p1)
        self.mix = tuple(
            mixing_probability(self.cbar, pr, config.gamma) for pr in self.p
        )
        if max(self.mix) > 1.0:
            raise InvalidSpec("gamma exceeds cbar * p_r: mixing weight above 1")
        self.ncut = config.model is Model.GENERAL_NCUT
        self.P = config.population_size
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)

    def initial_population(self) -> Population:
        P = self.P
        A = [np.full(P, self.cbar), np.full(P, self.cbar)]
        if self.config.init == "staggered":
            H = [np.ones(P), -np.ones(P)]
        else:
            H = [self.rng.standard_normal(P), self.rng.standard_normal(P)]
        return Population(A, H)

    def conjugates(self, pop: Population) -> Population:
        outA, outH = [], []
        for r in (0, 1):
            o = 1 - r
            take = self.rng.random(self.P) < self.mix[r]
            i_self = self.rng.integers(0, len(pop.A[r]), self.P)
            i_other = self.rng.integers(0, len(pop.A[o]), self.P)
            A = np.where(take, pop.A[o][i_other], pop.A[r][i_self])
            H = np.where(take, pop.H[o][i_other], pop.H[r][i_self])
            denom = 1.0 + A
            if np.any(denom <= 0):
                raise UnstableField("1 + A <= 0: phi outside the stable range")
            outA.append(-A / denom)
            outH.append(H / denom)
        return Population(outA, outH)

    def tuple_sums(self, hat: Population, r: int, count: int, excess: bool):
        """Draw degree c_t tuples of conjugate fields and sum them.

        excess=True draws from b_t c_t / cbar and sums c_t - 1 fields
        (cavity update); excess=False draws from b_t and sums c_t fields
        (complete marginal).
        """
        probs = self.excess if excess else self.bs
        deg = self.rng.choice(self.cs, size=count, p=probs)
        k = deg - 1 if excess else deg
        kmax = int(k.max())
        if kmax == 0:
            return deg, np.zeros(count), np.zeros(count)
        idx = self.rng.integers(0, len(hat.A[r]), (count, kmax))
        mask = np.arange(kmax)[None, :] < k[:, None]
        sumA = np.where(mask, hat.A[r][idx], 0.0).sum(axis=1)
        sumH = np.where(mask, hat.H[r][idx], 0.0).sum(axis=1)
        return deg, sumA, sumH

    def sweep(self, pop: Population, phi: float):
        """One synchronous refresh at fixed phi.

        Returns (new population, conjugates, marginal samples, growth
        factor, psi).  The growth factor is the H-norm multiplier the
        update produced before the rescale back to unit normalization.
        """
        hat = self.conjugates(pop)

        # complete marginals, needed both for the psi projection and for
        # the normalization that fixes the rescale factor
        marg = []
        for r in (0, 1):
            deg, sA, sH = self.tuple_sums(hat, r, self.P, excess=False)
            w = deg.astype(float) if self.ncut else np.ones(self.P)
            A_full = w * phi - sA
            marg.append((w, A_full, sH))

        # psi from the stationarity condition: degree-weighted
        # orthogonality of the marginal x = H/A to the uniform direction
        num = den = 0.0
        for r, (w, A_full, sH) in enumerate(marg):
            num += self.p[r] * np.mean(w * sH / A_full)
            den += self.p[r] * np.mean(w * w / A_full)
        psi_half = num / den

        newA, newH = [], []
        for r in (0, 1):
            deg, sA, sH = self.tuple_sums(hat, r, self.P, excess=True)
            w = deg.astype(float) if self.ncut else 1.0
            newA.append(w * phi - sA)
            newH.append(sH - w * psi_half)

        norm = 0.0
        H_fulls = []
        for r, (w, A_full, sH) in enumerate(marg):
            H_full = sH - w * psi_half
            H_fulls.append(H_full)
            norm += self.p[r] * np.mean(w * (H_full / A_full) ** 2)
        if self.ncut:
            norm /= self.cbar
        if not np.isfinite(norm) or norm <= 0:
            raise NonConvergence("H normalization degenerated during a sweep")
        s = math.sqrt(norm)
        for r in (0, 1):
            newH[r] /= s
        marginal = [(marg[r][1], H_fulls[r] / s, marg[r][0]) for r in (0, 1)]
        return Population(newA, newH), hat, marginal, s, 2.0 * psi_half


def cavity_sweep(pop: Population, config: PdConfig, phi: float, rng) -> Population:
    """One population refresh at fixed phi (without the rescale): the
    conjugate and cavity halves of the saddle-point update."""
    eng = _Engine(config, rng=rng)
    eng.P = len(pop.A[0])
    hat = eng.conjugates(pop)
    newA, newH = [], []
    for r in (0, 1):
        deg, sA, sH = eng.tuple_sums(hat, r, eng.P, excess=True)
        w = deg.astype(float) if eng.ncut else 1.0
        newA.append(w * phi - sA)
        newH.append(sH)
    return Population(newA, newH)


def _growth(eng: _Engine, pop: Population, phi: float, n_eq: int, n_meas: int):
    """Average growth factor at this phi, evolving pop in place.

    UnstableField is mapped to +inf: the candidate phi sits on the
    growing side of the bisection.
    """
    saved = pop.copy()
    logs = []
    try:
        for _ in range(n_eq):
            pop, _, _, _, _ = eng.sweep(pop, phi)
        for _ in range(n_meas):
            pop, _, _, s, _ = eng.sweep(pop, phi)
            logs.append(math.log(s))
    except UnstableField:
        return math.inf, saved
    g = math.exp(float(np.mean(logs)))
    # a growing candidate can leave the A population drifting toward the
    # unstable branch; hand back the snapshot so later candidates start
    # from a healthy state
    return g, (pop if g < 1.0 else saved)


def run_population_dynamics(config: PdConfig) -> PdResult:
    eng = _Engine(config)
    pop = eng.initial_population()
    n_eq = config.equilibration_sweeps
    n_meas = config.measurement_sweeps

    # bracket: growth < 1 just below phi = 0, growth >= 1 (or unstable)
    # for phi negative enough
    phi_hi = -config.phi_bisection_tolerance
    g_hi, pop = _growth(eng, pop, phi_hi, n_eq, n_meas)
    if g_hi >= 1.0:
        phi_star = phi_hi
    else:
        phi_lo = -0.25
        while True:
            g_lo, pop = _growth(eng, pop, phi_lo, n_eq, n_meas)
            if g_lo >= 1.0:
                break
            phi_lo *= 2.0
            if phi_lo < -4.0 * eng.cbar:
                raise BisectionFailed(
                    "no growth-factor sign change on the scanned phi interval"
                )
        while phi_hi - phi_lo > config.phi_bisection_tolerance:
            mid = 0.5 * (phi_lo + phi_hi)
            g_mid, pop = _growth(eng, pop, mid, n_eq, n_meas)
            if g_mid >= 1.0:
                phi_lo = mid
            else:
                phi_hi = mid
        # measure on the stable side of the bracket: at the band edge the
        # midpoint can sit where the A recursion has no fixed point
        phi_star = phi_hi

    # final equilibration and measurement at the tuned phi; back off
    # toward zero if the marginal band-edge point is still unstable
    for attempt in range(8):
        try:
            saved = pop.copy()
            for _ in range(n_eq):
                pop, _, _, _, _ = eng.sweep(pop, phi_star)
            measured = _measure(eng, pop, phi_star, n_meas)
            break
        except UnstableField:
            pop = saved
            phi_star += config.phi_bisection_tolerance
    else:
        raise NonConvergence("population unstable at the tuned phi")
    pop, hat, marginal, m1, m2, m1_hat, m2_hat, psi, f, orth, norm = measured
    # regenerate the conjugates from the final population: the per-sweep
    # rescale can leave the returned pair at mismatched H scales after a
    # heavy-tail normalization event
    hat = eng.conjugates(pop)

    return PdResult(
        phi=phi_star,
        psi=psi,
        lambda2=-phi_star,
        marginal_population=[(a, h) for a, h, _ in marginal],
        m1=m1,
        m2=m2,
        m1_hat=m1_hat,
        m2_hat=m2_hat,
        fraction_correct=max(f, 1.0 - f),
        residual_orthogonality=abs(orth),
        residual_normalization=abs(norm - 1.0),
        population=pop,
        conjugate_population=hat,
        config=config,
    )


def _measure(eng: _Engine, pop: Population, phi_star: float, n_meas: int):
    m1 = np.zeros(2)
    m2 = np.zeros(2)
    m1_hat = np.zeros(2)
    m2_hat = np.zeros(2)
    psi_acc = 0.0
    frac_acc = 0.0
    orth_acc = 0.0
    norm_acc = 0.0
    hat = marginal = None
    for _ in range(n_meas):
        pop, hat, marginal, _, psi = eng.sweep(pop, phi_star)
        psi_acc += psi
        orth = 0.0
        norm = 0.0
        frac = 0.0
        scale = eng.cbar if eng.ncut else 1.0
        for r, (A_full, H_full, w) in enumerate(marginal):
            x = H_full / A_full
            mr = float(np.mean(x))
            m1[r] += mr
            m2[r] += float(np.mean(x * x))
            m1_hat[r] += float(np.mean(hat.H[r]))
            m2_hat[r] += float(np.mean(hat.H[r] ** 2))
            # the constraints carry degree weights for the normalized
            # operator and flat weights for the unnormalized one
            orth += eng.p[r] * float(np.mean(w * x)) / scale
            norm += eng.p[r] * float(np.mean(w * x * x)) / scale
            if mr != 0.0:
                frac += eng.p[r] * float(np.mean(np.sign(x) == np.sign(mr)))
            else:
                frac += eng.p[r] * 0.5
        orth_acc += orth
        norm_acc += norm
        frac_acc += frac

    n = float(n_meas)
    return (
        pop,
        hat,
        marginal,
        m1 / n,
        m2 / n,
        m1_hat / n,
        m2_hat / n,
        psi_acc / n,
        frac_acc / n,
        orth_acc / n,
        norm_acc / n,
    )


def _xi(A, H, Ap, Hp):
    joint = ((1 + Ap) * H**2 + (1 + A) * Hp**2 + 2 * H * Hp) / (
        (1 + A) * (1 + Ap) - 1.0
    )
    return joint - H**2 / A - Hp**2 / Ap


def evaluate_lambda2(result: PdResult, n_pairs: int = 10**6, seed: int | None = None):
    """Monte Carlo value of the extremized functional at the converged
    populations.  Returns (lambda2, standard_error)."""
    cfg = result.config
    eng = _Engine(
        cfg,
        rng=np.random.default_rng(cfg.seed + 101 if seed is None else seed),
    )
    pop, hat = result.population, result.conjugate_population
    phi, psi = result.phi, result.psi
    cbar, gamma = eng.cbar, cfg.gamma
    p1, p2 = eng.p
    rng = eng.rng

    def draw(arrs, count):
        idx = rng.integers(0, len(arrs[0]), count)
        return tuple(a[idx] for a in arrs)

    mean_sq = []  # (weight, mean, var/n)

    def accumulate(weight, samples):
        mean_sq.append(
            (weight, float(np.mean(samples)), float(np.var(samples)) / len(samples))
        )

    # pair term: weighted Xi expectations over population pairs
    for (r, rp, w) in (
        (0, 0, (cbar * p1 - gamma) / 2.0),
        (1, 1, (cbar * p2 - gamma) / 2.0),
        (0, 1, gamma),
    ):
        A, H = draw((pop.A[r], pop.H[r]), n_pairs)
        Ap, Hp = draw((pop.A[rp], pop.H[rp]), n_pairs)
        accumulate(w, _xi(A, H, Ap, Hp))

    # cross term between cavity and conjugate populations
    for r, pr in ((0, p1), (1, p2)):
        A, H = draw((pop.A[r], pop.H[r]), n_pairs)
        Ah, Hh = draw((hat.A[r], hat.H[r]), n_pairs)
        accumulate(-cbar * pr, (H + Hh) ** 2 / (A - Ah) - H**2 / A)

    # complete-marginal term from fresh degree tuples
    for r, pr in ((0, p1), (1, p2)):
        deg, sA, sH = eng.tuple_sums(hat, r, n_pairs, excess=False)
        w = deg.astype(float) if eng.ncut else 1.0
        A_full = w * phi - sA
        H_full = sH - w * psi / 2.0
        accumulate(pr, H_full**2 / A_full)

    total = phi * (cbar if eng.ncut else 1.0)
    var = 0.0
    for w, m, v in mean_sq:
        total += w * m
        var += w * w * v
    lam = -total
    err = math.sqrt(var)
    if eng.ncut:
        lam /= cbar
        err /= cbar
    return lam, err


def element_distribution(result: PdResult, bins=101):
    """Per-module histograms of x = H/A from the complete marginals,
    plus the folded fraction of correctly signed elements."""
    out = {}
    frac = 0.0
    p = (result.config.p1, 1.0 - result.config.p1)
    for r, (A_full, H_full) in enumerate(result.marginal_population):
        if len(A_full) == 0:
            raise EmptyPopulation("marginal population is empty")
        x = H_full / A_full
        dens, edges = np.histogram(x, bins=bins, density=True)
        out["module_%d" % (r + 1)] = (0.5 * (edges[:-1] + edges[1:]), dens)
        mr = float(np.mean(x))
        if mr != 0.0:
            frac += p[r] * float(np.mean(np.sign(x) == np.sign(mr)))
        else:
            frac += p[r] * 0.5
    out["fraction_correct"] = max(frac, 1.0 - frac)
    return out
