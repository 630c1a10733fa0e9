"""Localized eigenvectors seeded by degree defects.

A defect cluster (degree c_D out to shell radius g, background degree
c_B beyond) supports an eigenvector whose shell amplitudes decay
geometrically with damping factor kappa.  When such a mode drops below
the community eigenvalue, the spectral bisection reads the defect, not
the partition.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import EmaClosureFailed, InvalidSpec
from .graphs import DegreeSpec, mean_degree, spec_moment

__all__ = [
    "Kind",
    "Uniform",
    "Ema",
    "DefectTree",
    "LocalizedMode",
    "bulk_damping_factor",
    "localized_mode_uniform",
    "localized_mode_ema",
    "localization_compare",
    "defect_degree",
]

_SCAN_POINTS = 1000
_BISECT_TOL = 1e-10
_EXTRA_SHELLS = 5


class Kind(Enum):
    L = "L"
    NCUT = "ncut"


@dataclass(frozen=True)
class Uniform:
    c_B: int


@dataclass(frozen=True)
class Ema:
    spec: DegreeSpec
    p1: float = 0.5
    gamma: float = 0.0


@dataclass(frozen=True)
class DefectTree:
    c_D: int
    g: int
    background: Uniform | Ema

    def __post_init__(self):
        if self.c_D < 1 or self.g < 0:
            raise InvalidSpec("need c_D >= 1 and g >= 0")
        if isinstance(self.background, Uniform) and self.background.c_B == self.c_D:
            raise InvalidSpec("uniform background must differ from the defect degree")


@dataclass(frozen=True)
class LocalizedMode:
    lam: float
    kappa: float
    profile: np.ndarray
    finite_norm: bool


def defect_degree(c1: int, c2: int, b1: float) -> int:
    """Which degree class plays the defect: the lower-population one, or
    the lower degree at equal populations."""
    if b1 < 0.5:
        return c1
    if b1 > 0.5:
        return c2
    return min(c1, c2)


def bulk_damping_factor(kind: Kind, c_B: float, lam: float) -> float | None:
    """The |kappa| < 1 root of the background characteristic equation,
    or None when lam sits inside (or exactly at the edge of) the band."""
    if kind is Kind.L:
        a, b, c = c_B - 1.0, -(c_B - lam), 1.0
    else:
        a, b, c = c_B - 1.0, -c_B * (1.0 - lam), 1.0
    disc = b * b - 4 * a * c
    # the double root at the band edge is "not strictly inside"; guard the
    # comparison against float noise in b*b
    if disc <= 1e-12 * max(1.0, b * b):
        return None
    roots = ((-b - math.sqrt(disc)) / (2 * a), (-b + math.sqrt(disc)) / (2 * a))
    inside = [r for r in roots if abs(r) < 1.0]
    return min(inside, key=abs) if inside else None


def _defect_shells_L(c_D: float, g: int, lam: float) -> np.ndarray:
    """V_0..V_{g+1} from the defect rows of the unnormalized eigenproblem."""
    v = np.empty(g + 2)
    v[0] = 1.0
    v[1] = (c_D - lam) / c_D
    for d in range(1, g + 1):
        v[d + 1] = ((c_D - lam) * v[d] - v[d - 1]) / (c_D - 1.0)
    return v


def _defect_shells_ncut(
    c_D: float, g: int, lam: float, c_boundary: float
) -> np.ndarray:
    """V_0..V_{g+2} for the normalized eigenproblem (g >= 1).

    The d = g row couples into the background through sqrt(c_D c_boundary)
    and the d = g+1 row carries the background degree.
    """
    v = np.empty(g + 3)
    v[0] = 1.0
    v[1] = 1.0 - lam
    for d in range(1, g):
        v[d + 1] = (c_D * (1.0 - lam) * v[d] - v[d - 1]) / (c_D - 1.0)
    root_cb = math.sqrt(c_D * c_boundary)
    v[g + 1] = root_cb * ((1.0 - lam) * v[g] - v[g - 1] / c_D) / (c_D - 1.0)
    v[g + 2] = (
        c_boundary * ((1.0 - lam) * v[g + 1] - v[g] / root_cb)
        / (c_boundary - 1.0)
    )
    return v


def _find_roots(f, lam_max):
    """Sign-change scan on (0, lam_max) followed by bisection."""
    grid = np.linspace(lam_max / _SCAN_POINTS, lam_max * (1 - 1e-9), _SCAN_POINTS)
    vals = np.array([f(x) for x in grid])
    roots = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if np.isnan(a) or np.isnan(b):
            continue
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0:
            lo, hi = grid[i], grid[i + 1]
            while hi - lo > _BISECT_TOL:
                mid = 0.5 * (lo + hi)
                fm = f(mid)
                if fm == 0.0:
                    lo = hi = mid
                elif fm * f(lo) < 0:
                    hi = mid
                else:
                    lo = mid
            roots.append(0.5 * (lo + hi))
    return roots


def _package(lam, kappa, shells, branching):
    profile = list(shells)
    for _ in range(_EXTRA_SHELLS):
        profile.append(profile[-1] * kappa)
    finite = branching * kappa * kappa < 1.0
    return LocalizedMode(
        lam=lam, kappa=kappa, profile=np.array(profile), finite_norm=finite
    )


def localized_mode_uniform(kind: Kind, tree: DefectTree) -> LocalizedMode | None:
    """Localized eigenvalue on a defect tree with uniform background.

    Returns None when no finite-norm mode exists below the bulk band.
    """
    if not isinstance(tree.background, Uniform):
        raise InvalidSpec("expected a Uniform background")
    c_B = float(tree.background.c_B)
    c_D = float(tree.c_D)
    g = tree.g
    if kind is Kind.NCUT and g == 0:
        # a single normalized-Laplacian defect forces kappa = -1
        return None
    band_edge = (
        c_B - 2.0 * math.sqrt(c_B - 1.0)
        if kind is Kind.L
        else (math.sqrt(c_B - 1.0) - 1.0) ** 2 / c_B
    )

    def mismatch(lam):
        kappa = bulk_damping_factor(kind, c_B, lam)
        if kappa is None:
            return np.nan
        if kind is Kind.L:
            v = _defect_shells_L(c_D, g, lam)
            return v[g + 1] - kappa * v[g]
        v = _defect_shells_ncut(c_D, g, lam, c_B)
        return v[g + 2] - kappa * v[g + 1]

    best = None
    for lam in _find_roots(mismatch, band_edge):
        kappa = bulk_damping_factor(kind, c_B, lam)
        if kappa is None:
            continue
        shells = (
            _defect_shells_L(c_D, g, lam)
            if kind is Kind.L
            else _defect_shells_ncut(c_D, g, lam, c_B)
        )
        mode = _package(lam, kappa, shells, c_B - 1.0)
        if mode.finite_norm and (best is None or mode.lam < best.lam):
            best = mode
    return best


def g0_closed_form_L(c_D: int, c_B: int) -> LocalizedMode | None:
    """The g = 0 unnormalized case in closed form; None when the norm
    diverges (requires c_D < c_B - 1 - sqrt(c_B - 1))."""
    if c_B - c_D - 1 <= 0:
        return None
    lam = c_D * (c_B - c_D - 2.0) / (c_B - c_D - 1.0)
    kappa = 1.0 / (c_B - c_D - 1.0)
    if not c_D < c_B - 1.0 - math.sqrt(c_B - 1.0):
        return None
    shells = _defect_shells_L(float(c_D), 0, lam)
    return _package(lam, kappa, shells, c_B - 1.0)


def _ema_damping(kind: Kind, spec: DegreeSpec, lam: float) -> float:
    """1 + a_hat at phi = -lam under the effective-medium variance closure.

    The larger root of the quadratic in u = 1 + a is the physical branch
    (it reproduces the uniform-background damping on regular specs).
    """
    cbar = mean_degree(spec)
    if kind is Kind.L:
        excess = spec_moment(spec, 2) / cbar - 1.0
        # u^2 + u(lam - excess - 1) + excess = 0
        b, c = lam - excess - 1.0, excess
    else:
        # u^2 + u cbar(lam - 1) + (cbar - 1) = 0
        b, c = cbar * (lam - 1.0), cbar - 1.0
    disc = b * b - 4 * c
    if disc <= 0:
        raise EmaClosureFailed("no real effective-medium variance at this lambda")
    u = (-b + math.sqrt(disc)) / 2.0
    return 1.0 / u  # kappa = 1 + a_hat = 1/(1 + a)


def localized_mode_ema(kind: Kind, tree: DefectTree) -> LocalizedMode | None:
    """Localized mode with the background damping taken from the EMA of
    the full degree distribution instead of a single background degree."""
    if not isinstance(tree.background, Ema):
        raise InvalidSpec("expected an Ema background")
    spec = tree.background.spec
    cbar = mean_degree(spec)
    c_D = float(tree.c_D)
    g = tree.g
    if kind is Kind.NCUT and g == 0:
        return None
    if kind is Kind.L:
        excess = spec_moment(spec, 2) / cbar - 1.0
        band_edge = (math.sqrt(excess) - 1.0) ** 2
        branching = excess
    else:
        band_edge = (math.sqrt(cbar - 1.0) - 1.0) ** 2 / cbar
        branching = cbar - 1.0

    def mismatch(lam):
        try:
            kappa = _ema_damping(kind, spec, lam)
        except EmaClosureFailed:
            return np.nan
        if kind is Kind.L:
            v = _defect_shells_L(c_D, g, lam)
            return v[g + 1] - kappa * v[g]
        v = _defect_shells_ncut(c_D, g, lam, cbar)
        return v[g + 2] - kappa * v[g + 1]

    best = None
    for lam in _find_roots(mismatch, band_edge):
        try:
            kappa = _ema_damping(kind, spec, lam)
        except EmaClosureFailed:
            continue
        shells = (
            _defect_shells_L(c_D, g, lam)
            if kind is Kind.L
            else _defect_shells_ncut(c_D, g, lam, cbar)
        )
        mode = _package(lam, kappa, shells, branching)
        if mode.finite_norm and (best is None or mode.lam < best.lam):
            best = mode
    return best


def localization_compare(
    community_lambda2: float, localized: LocalizedMode | None
) -> dict:
    """Does the localized mode preempt the community eigenvector?"""
    if (
        localized is not None
        and localized.finite_norm
        and localized.lam < community_lambda2
    ):
        return {
            "winner": "Localized",
            "gap": community_lambda2 - localized.lam,
        }
    return {"winner": "Community", "gap": 0.0}
