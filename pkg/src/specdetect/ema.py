"""Effective-medium closed forms: lambda2 curves, thresholds, overlap.

The effective medium approximation (EMA) pins the cavity variance
distribution to a point mass, which makes the saddle point tractable.
It is exact on regular graphs; for fluctuating degrees it is the
controlled approximation whose accuracy the experiments probe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import erf

from .errors import (
    EmaClosureFailed,
    InvalidDegree,
    InvalidRegion,
    InvalidSpec,
    NewtonDiverged,
    NoRealRoot,
    UnequalModulesUnsupported,
)
from .graphs import Bimodal, DegreeSpec, mean_degree, spec_moment

__all__ = [
    "EmaSolution",
    "MomentSet",
    "ThresholdRecord",
    "regular_solution",
    "detectability_threshold",
    "ratiocut_ema",
    "ncut_ema",
    "sbm_lambda2_curve",
    "sbm_gamma_from_delta",
    "sbm_delta_from_gamma",
    "gaussian_fraction_correct",
    "appendix_c_diagnostic",
]


@dataclass(frozen=True)
class EmaSolution:
    """Saddle-point summary.  m11_sq holds the squared first moment of
    the relevant branch: the conjugate moment for the regular solution,
    the plain moment for the distributed-degree ones."""

    a: float
    a_hat: float
    phi: float
    psi: float
    m11_sq: float
    lambda2: float
    detectable: bool
    gamma_param: float


@dataclass(frozen=True)
class MomentSet:
    R1: float
    R2: float
    R3: float
    S1: float
    S2: float
    S3: float
    X1: float
    X2: float
    X3: float


@dataclass(frozen=True)
class ThresholdRecord:
    gamma_c: float
    delta_c: float
    ultimate_delta: float


def regular_solution(c: int, p1: float, gamma: float) -> EmaSolution:
    """Exact second-smallest eigenvalue of L for c-regular two-block graphs."""
    if c < 3:
        raise InvalidDegree("regular solution needs c >= 3")
    if not 0 < p1 < 1:
        raise InvalidSpec("p1 must lie in (0, 1)")
    p2 = 1.0 - p1
    if gamma < 0 or gamma > c * min(p1, p2):
        raise InvalidSpec("gamma outside [0, c * min(p1, p2)]")
    G = 1.0 - gamma / (c * p1 * p2)
    detectable = G >= 1.0 / math.sqrt(c - 1)
    if detectable:
        a = (c - 1) * G - 1.0
        a_hat = -a / (1.0 + a)
        phi = a + (c - 1) * a_hat
        lam = (1.0 - G) * (c - 1.0 - 1.0 / G)
        m11_sq = (p2 / (c * p1)) * (1.0 - 1.0 / ((c - 1) ** 2 * G * G)) * (
            (c - 1) * G * G - 1.0
        )
    else:
        a = math.sqrt(c - 1) - 1.0
        a_hat = -a / (1.0 + a)
        lam = c - 2.0 * math.sqrt(c - 1)
        phi = -lam
        m11_sq = 0.0
    return EmaSolution(
        a=a,
        a_hat=a_hat,
        phi=phi,
        psi=0.0,
        m11_sq=m11_sq,
        lambda2=lam,
        detectable=detectable,
        gamma_param=G,
    )


def detectability_threshold(
    model: str, c: float, p1: float = 0.5
) -> ThresholdRecord:
    """Threshold location for `model` in {"regular_L", "ncut", "sbm"}.

    delta_c is the c_in - c_out form, defined at p1 = 0.5; ultimate_delta
    is the information-theoretic reference 2 sqrt(cbar).
    """
    p2 = 1.0 - p1
    if model == "regular_L":
        if c < 3 or int(c) != c:
            raise InvalidDegree("regular threshold needs integer c >= 3")
        f = 1.0 - 1.0 / math.sqrt(c - 1)
        return ThresholdRecord(
            gamma_c=c * f * p1 * p2,
            delta_c=2.0 * c / math.sqrt(c - 1),
            ultimate_delta=2.0 * math.sqrt(c),
        )
    if model in ("ncut", "sbm"):
        if c <= 1:
            raise InvalidDegree("need mean degree > 1")
        gamma_c = c * p1 * p2 * (1.0 - 1.0 / math.sqrt(c - 1))
        return ThresholdRecord(
            gamma_c=gamma_c,
            delta_c=2.0 * c / math.sqrt(c - 1),
            ultimate_delta=2.0 * math.sqrt(c),
        )
    raise InvalidSpec(f"unknown threshold model {model!r}")


def _resolvent_moments(
    cs: np.ndarray, bs: np.ndarray, phi: float, a_hat: float
) -> tuple[np.ndarray, np.ndarray]:
    den = phi - cs * a_hat
    if np.any(den <= 0):
        raise EmaClosureFailed("resolvent denominator phi - c_t a_hat <= 0")
    R = np.array([np.sum(bs * cs**n / den) for n in (1, 2, 3)])
    S = np.array([np.sum(bs * cs**n / den**2) for n in (1, 2, 3)])
    return R, S


def _phi_from_a(cs, bs, cbar, a):
    """Solve the variance-sector stationarity R1 = cbar(1+a)/(a(a+2)) for phi.

    R1 is strictly decreasing in phi on the admissible region, so this
    is a clean bracketed root-find.
    """
    a_hat = -a / (1.0 + a)
    target = cbar * (1.0 + a) / (a * (a + 2.0))

    def f(phi):
        return float(np.sum(bs * cs / (phi - cs * a_hat))) - target

    lo = float(np.max(cs * a_hat)) + 1e-12
    # R1 -> +inf at lo, -> 0 at +inf
    hi = max(lo + 1.0, 1.0)
    while f(hi) > 0:
        hi = lo + 2 * (hi - lo)
        if hi > 1e12:
            raise EmaClosureFailed("no phi solves the variance stationarity")
    return brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)


def _bimodal_closed_form(spec: Bimodal, Gbar: float) -> list[tuple[float, float]]:
    """Both (a, phi) roots of the closed-form quadratic, ascending in a."""
    c1, c2, b1 = spec.c1, spec.c2, spec.b1
    cbar = mean_degree(spec)
    c2bar = spec_moment(spec, 2)
    A = cbar
    B = cbar - c2bar + c1 * c2 / (Gbar - 1.0)
    C = c1 * c2 * (1.0 - cbar) / (Gbar - 1.0)
    disc = B * B - 4 * A * C
    if disc < 0:
        raise NoRealRoot("closed-form quadratic has no real solution")
    out = []
    for sgn in (-1.0, 1.0):
        y = (-B + sgn * math.sqrt(disc)) / (2 * A)  # y = (1+a)/Gbar
        a = y * Gbar - 1.0
        phi = (
            c1 * c2 * a / (1.0 + a) * (y + 1.0 - cbar)
            / (c2bar - cbar * (1.0 + y))
        )
        out.append((a, phi))
    out.sort()
    return out


def _general_saddle(cs, bs, cbar, Gbar) -> tuple[float, float]:
    """Detectable-branch (a, phi) for an arbitrary degree distribution.

    The pair of stationarity conditions is reduced to one equation in a:
    phi follows from the variance sector (see _phi_from_a), and the
    symmetry-broken mode exists where
        cbar (1+a)^2 = Gbar a(a+2) (R2 - R1).
    The smallest positive root is the physical branch (the closed-form
    bimodal solution says to take the smaller a).
    """

    def residual(a):
        phi = _phi_from_a(cs, bs, cbar, a)
        a_hat = -a / (1.0 + a)
        R, _ = _resolvent_moments(cs, bs, phi, a_hat)
        return cbar * (1.0 + a) ** 2 - Gbar * a * (a + 2.0) * (R[1] - R[0])

    grid = np.concatenate(
        [np.linspace(1e-3, 2.0, 120), np.linspace(2.0, 20 * cbar, 400)]
    )
    vals = []
    for a in grid:
        try:
            vals.append(residual(a))
        except EmaClosureFailed:
            vals.append(np.nan)
    vals = np.asarray(vals)
    for i in range(len(grid) - 1):
        if np.isnan(vals[i]) or np.isnan(vals[i + 1]):
            continue
        if vals[i] == 0.0:
            a = grid[i]
            return a, _phi_from_a(cs, bs, cbar, a)
        if vals[i] * vals[i + 1] < 0:
            a = brentq(residual, grid[i], grid[i + 1], xtol=1e-13, rtol=8.9e-16)
            return a, _phi_from_a(cs, bs, cbar, a)
    raise NewtonDiverged("no symmetry-broken saddle found on the scan grid")


def _band_edge_general(cs, bs, cbar) -> tuple[float, float]:
    """Undetectable-branch (a, -phi): the spectral band edge, i.e. the
    extremum of -phi(a) along the variance stationarity curve."""

    def phi_of(a):
        return _phi_from_a(cs, bs, cbar, a)

    res = minimize_scalar(
        lambda a: phi_of(a), bounds=(1e-6, 10 * cbar), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(-res.fun)


def ratiocut_ema(
    spec: DegreeSpec, p1: float, gamma: float
) -> tuple[EmaSolution, MomentSet]:
    """EMA solution of the unnormalized-Laplacian saddle point.

    Bimodal specs use the closed-form quadratic; anything else solves the
    same stationarity conditions numerically.
    """
    if not 0 < p1 < 1:
        raise InvalidSpec("p1 must lie in (0, 1)")
    p2 = 1.0 - p1
    cbar = mean_degree(spec)
    if gamma < 0 or gamma > cbar * min(p1, p2):
        raise InvalidSpec("gamma outside [0, cbar * min(p1, p2)]")
    cs, bs = spec.degree_classes()
    cs = cs.astype(float)
    Gbar = 1.0 - gamma / (cbar * p1 * p2)

    def pack_moments(a, phi):
        a_hat = -a / (1.0 + a)
        R, S = _resolvent_moments(cs, bs, phi, a_hat)
        X1 = R[0] ** 2 / cbar * (a * a + 2 * a + 2)
        X2 = (p1 / p2) * (Gbar / (1.0 + a)) ** 2
        X3 = 2 * R[0] ** 2 / cbar * (p1 / p2) * Gbar / (1.0 + a)
        return R, S, MomentSet(
            R1=R[0], R2=R[1], R3=R[2], S1=S[0], S2=S[1], S3=S[2],
            X1=X1, X2=X2, X3=X3,
        )

    if len(cs) == 1:
        # degenerate to the regular case, where the EMA is exact
        sol = regular_solution(int(cs[0]), p1, gamma)
        _, _, moments = pack_moments(sol.a, sol.phi)
        return sol, moments

    detectable = False
    try:
        if isinstance(spec, Bimodal) and abs(Gbar - 1.0) > 1e-14:
            a, phi = _bimodal_closed_form(spec, Gbar)[0]
        else:
            a, phi = _general_saddle(cs, bs, cbar, Gbar)
        if 1.0 + a > 0:
            R, S, moments = pack_moments(a, phi)
            detectable = (1.0 + a) ** 2 > cbar * S[1] / R[0] ** 2 - 1.0
    except (EmaClosureFailed, NoRealRoot, NewtonDiverged):
        # symmetry-broken saddle does not exist here
        pass

    if detectable:
        m11_sq = (moments.X1 - S[1]) / (
            (S[1] - S[0]) * moments.X1 * moments.X2
            + (S[0] * S[2] - S[1] ** 2) * moments.X2
            - S[0] * moments.X3
        )
        lam = (p1 / p2) * m11_sq * (
            cbar / (a * (a + 2.0)) * Gbar
            - (R[1] - R[0]) / (1.0 + a) ** 2 * Gbar**2
        ) - phi
    else:
        a, lam = _band_edge_general(cs, bs, cbar)
        phi = -lam
        m11_sq = 0.0
        _, _, moments = pack_moments(a, phi)
    solution = EmaSolution(
        a=a, a_hat=-a / (1.0 + a), phi=phi, psi=0.0, m11_sq=m11_sq,
        lambda2=lam, detectable=detectable, gamma_param=Gbar,
    )
    return solution, moments


def ncut_ema(spec: DegreeSpec | float, p1: float, gamma: float) -> EmaSolution:
    """EMA solution for the normalized Laplacian; depends on the degree
    distribution only through its mean, so a bare mean degree is accepted
    in place of a full spec."""
    if not 0 < p1 < 1:
        raise InvalidSpec("p1 must lie in (0, 1)")
    p2 = 1.0 - p1
    cbar = float(spec) if isinstance(spec, (int, float)) else mean_degree(spec)
    if cbar <= 1:
        raise InvalidSpec("mean degree must exceed 1")
    if gamma < 0 or gamma > cbar * min(p1, p2):
        raise InvalidSpec("gamma outside [0, cbar * min(p1, p2)]")
    Gbar = 1.0 - gamma / (cbar * p1 * p2)
    detectable = Gbar >= 1.0 / math.sqrt(cbar - 1)
    if detectable:
        a = (cbar - 1.0) * Gbar - 1.0
        lam = (1.0 - Gbar) / cbar * (cbar - 1.0 - 1.0 / Gbar)
        m11_sq = (
            (cbar - 1.0) ** 2
            * (p2 / (cbar * p1))
            * (1.0 - 1.0 / ((cbar - 1.0) ** 2 * Gbar * Gbar))
            * ((cbar - 1.0) * Gbar * Gbar - 1.0)
        )
    else:
        a = math.sqrt(cbar - 1.0) - 1.0
        lam = (math.sqrt(cbar - 1.0) - 1.0) ** 2 / cbar
        m11_sq = 0.0
    a_hat = -a / (1.0 + a)
    return EmaSolution(
        a=a, a_hat=a_hat, phi=-lam, psi=0.0, m11_sq=m11_sq,
        lambda2=lam, detectable=detectable, gamma_param=Gbar,
    )


def sbm_gamma_from_delta(cbar: float, delta: float) -> float:
    """Equal modules: c_in - c_out = delta maps to gamma = (cbar - delta/2)/4."""
    return (cbar - delta / 2.0) / 4.0


def sbm_delta_from_gamma(cbar: float, gamma: float) -> float:
    return 2.0 * (cbar - 4.0 * gamma)


def sbm_lambda2_curve(cbar: float, delta: float) -> float:
    """Normalized-Laplacian lambda2 vs the degree difference c_in - c_out,
    clamped to the band-edge plateau below the detectability threshold."""
    if delta <= 0 or delta > 2 * cbar:
        raise InvalidRegion("need 0 < delta <= 2 cbar")
    thr = detectability_threshold("sbm", cbar)
    if delta <= thr.delta_c:
        return (math.sqrt(cbar - 1.0) - 1.0) ** 2 / cbar
    return 1.0 - (cbar - 1.0) / (2.0 * cbar * cbar) * delta - 2.0 / delta


def _fraction_from_moments(m: float, s2: float) -> float:
    if s2 <= 0:
        return 1.0 if m != 0 else 0.5
    return 0.5 * (1.0 + float(erf(abs(m) / math.sqrt(2.0 * s2))))


def gaussian_fraction_correct(
    model: str,
    spec_or_c,
    p1: float,
    gamma: float,
) -> float:
    """Fraction of correctly classified vertices under the Gaussian
    reading of the complete marginal.  model in {"regular_L", "ncut"};
    spec_or_c is the degree c for regular_L, a DegreeSpec for ncut.
    Exactly 0.5 below the threshold.  The combined scalar is only
    defined for equal modules.
    """
    if p1 != 0.5:
        raise UnequalModulesUnsupported(
            "combined fraction defined for p1 = 0.5 only"
        )
    p2 = 1.0 - p1
    if model == "regular_L":
        c = int(spec_or_c)
        sol = regular_solution(c, p1, gamma)
        if not sol.detectable or sol.m11_sq == 0.0:
            return 0.5
        G = sol.gamma_param
        big_g = (c - 1) * G / ((c - 1) ** 2 * G * G - 1.0)
        m_hat11_sq = sol.m11_sq
        # normalization of the marginal second moment fixes m_hat2
        m_hat2 = 1.0 / (c * big_g**2) - (c - 1.0) * (p1 / p2) * m_hat11_sq
        m = c * big_g * math.sqrt(m_hat11_sq)
        s2 = c * big_g**2 * (m_hat2 - m_hat11_sq)
        return _fraction_from_moments(m, s2)
    if model == "ncut":
        spec = spec_or_c
        cbar = mean_degree(spec)
        c2bar = spec_moment(spec, 2)
        c3bar = spec_moment(spec, 3)
        sol = ncut_ema(spec, p1, gamma)
        if not sol.detectable or sol.m11_sq == 0.0:
            return 0.5
        Gbar = sol.gamma_param
        big_g = (cbar - 1.0) * Gbar / ((cbar - 1.0) ** 2 * Gbar * Gbar - 1.0)
        m_hat11_sq = sol.m11_sq / (cbar - 1.0) ** 2
        r2 = c2bar / cbar
        r3 = (c3bar - c2bar) / cbar
        m_hat2 = (1.0 / big_g**2 - r3 * (p1 / p2) * m_hat11_sq) / r2
        m = r2 * big_g * math.sqrt(m_hat11_sq)
        s2 = big_g**2 * (r2 * m_hat2 + (r3 - r2 * r2) * m_hat11_sq)
        return _fraction_from_moments(m, s2)
    raise InvalidSpec(f"unknown model {model!r}")


def appendix_c_diagnostic(spec: DegreeSpec) -> dict[str, float]:
    """The two EMA readings of the moment relation m1 = K m_hat1.

    The saddle-point route gives K = c2bar/cbar - 1, the free-energy
    route gives K = cbar - 1; they agree only for regular degrees.
    """
    cbar = mean_degree(spec)
    c2bar = spec_moment(spec, 2)
    return {
        "ratio_saddle_ema": c2bar / cbar - 1.0,
        "ratio_free_energy_ema": cbar - 1.0,
    }
