"""
Exact solution of the stationary homogeneous-sphere transport problem.

A sphere of radius R with constant absorption opacity kappa and constant
equilibrium level B, vacuum outside, admits a closed-form distribution

    f(r, mu) = B * (1 - exp(-kappa * s(r, mu)))

where s is the chord length of the backward ray inside the sphere.  Its
first three angular moments J, H, K follow by one-dimensional integrals
over mu, which this module evaluates with adaptive quadrature.  These
profiles are the ground truth every solver in the package is tested
against, together with their infinite-opacity limits and the geometric
flux factors they induce.

Overflow control: the inside-sphere integrands combine cosh/sinh with the
exponential as (exp(k*(r*mu - R*G)) +/- exp(-k*(r*mu + R*G))) / 2.  The
first exponent is negative for r < R (r*mu < R*G there) and the second is
always negative, so nothing overflows even at kappa*R of several hundred.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ProblemSpec, RadialField, RadialGrid
from .quadrature import integrate_batch


@dataclass(eq=False)
class MomentTriple:
    """Zeroth/first/second angular moments (energy density, flux, pressure)."""

    J: RadialField
    H: RadialField
    K: RadialField

    def flux_factors(self) -> "FluxFactors":
        """Flux ratio h = H/J and variable Eddington factor k = K/J."""
        J = self.J.values
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(J != 0.0, self.H.values / J, np.nan)
            k = np.where(J != 0.0, self.K.values / J, np.nan)
        grid = self.J.grid
        return FluxFactors(RadialField(grid, h), RadialField(grid, k))


@dataclass(eq=False)
class FluxFactors:
    h: RadialField
    k: RadialField


@dataclass(frozen=True)
class SpecialValues:
    """Closed-form boundary values of the exact moments."""

    J0: float
    JR: float
    H0: float
    HR: float


class NoNeutrinosphereError(ValueError):
    """Optical depth never reaches 2/3, so no neutrinosphere radius exists."""


def _require_bare_sphere(spec: ProblemSpec, what: str) -> None:
    if not spec.is_bare_sphere:
        raise ValueError(
            f"{what} exists only for the bare step profile "
            "(kappa_outside = 0 and kappa_s = 0)"
        )


def geometry_factor(r, mu, R: float):
    """
    G(r, mu) = sqrt(1 - (r/R)^2 (1 - mu^2)).

    Negative radicands (beyond roundoff) mean the ray misses the sphere and
    raise ValueError; callers must restrict mu for r > R.
    """
    r = np.asarray(r, dtype=float)
    mu = np.asarray(mu, dtype=float)
    rad = 1.0 - (r / R) ** 2 * (1.0 - mu**2)
    if np.any(rad < -1e-12):
        raise ValueError("geometry factor: ray does not intersect the sphere")
    out = np.sqrt(np.clip(rad, 0.0, None))
    return out if out.ndim else float(out)


def path_length(r: float, mu: float, R: float) -> float:
    """
    Chord length s(r, mu) of the backward ray inside the sphere.

    For r < R any -1 < mu < 1 is admissible and s = r*mu + R*G; for r >= R
    the ray must point into the sphere, mu > sqrt(1 - (R/r)^2), and
    s = 2*R*G.
    """
    if r < R:
        if not -1.0 < mu < 1.0:
            raise ValueError(f"mu = {mu} outside (-1, 1)")
        return float(r * mu + R * geometry_factor(r, mu, R))
    mu_min = np.sqrt(max(1.0 - (R / r) ** 2, 0.0))
    if not mu_min < mu <= 1.0:
        raise ValueError(f"mu = {mu} outside the admissible cone ({mu_min:g}, 1] at r = {r:g}")
    return float(2.0 * R * geometry_factor(r, mu, R))


def exact_distribution(r, mu, spec: ProblemSpec):
    """
    Stationary distribution f(r, mu) = B (1 - exp(-kappa s)); zero outside
    the admissible cone for r >= R (no backward ray through the sphere).
    """
    _require_bare_sphere(spec, "the exact distribution")
    r = np.asarray(r, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r_b, mu_b = np.broadcast_arrays(r, mu)
    R, kap, B = spec.R, spec.kappa, spec.B

    with np.errstate(invalid="ignore"):
        rad = 1.0 - (r_b / R) ** 2 * (1.0 - mu_b**2)
    hits = rad > 0.0
    G = np.sqrt(np.where(hits, rad, 0.0))
    s = np.where(r_b < R, r_b * mu_b + R * G, 2.0 * R * G)
    f = np.where(hits | (r_b < R), B * -np.expm1(-kap * s), 0.0)
    return f if f.ndim else float(f)


def _inside_integrals(r_in: np.ndarray, kap: float, R: float, tol: float):
    """The three mu-integrals of the inside-sphere moment formulas."""

    def make(power: int, odd: bool):
        def f(idx, mu):
            r = r_in[idx]
            G = np.sqrt(np.clip(1.0 - (r / R) ** 2 * (1.0 - mu**2), 0.0, None))
            ep = np.exp(kap * (r * mu - R * G))
            em = np.exp(-kap * (r * mu + R * G))
            core = 0.5 * (ep - em) if odd else 0.5 * (ep + em)
            return mu**power * core if power else core

        return f

    lo = np.zeros(r_in.size)
    hi = np.ones(r_in.size)
    i0 = integrate_batch(make(0, odd=False), lo, hi, tol=tol)
    i1 = integrate_batch(make(1, odd=True), lo, hi, tol=tol)
    i2 = integrate_batch(make(2, odd=False), lo, hi, tol=tol)
    return i0, i1, i2


def _outside_integrals(r_out: np.ndarray, kap: float, R: float, tol: float):
    """
    Exponential-weight integrals over the admissible cone, computed in the
    substituted variable v = sqrt(mu^2 - mu0^2), i.e. G = (r/R) v.  The
    substitution removes the sqrt behavior of G at the cone edge and turns
    the large-kappa boundary layer into a plain exponential at v = 0, which
    is additionally seeded with its own panel so no spike goes unsampled.
    """
    mu0 = np.sqrt(np.clip(1.0 - (R / r_out) ** 2, 0.0, None))
    vmax = R / r_out

    def make(power: int):
        def f(idx, v):
            r = r_out[idx]
            e = np.exp(-2.0 * kap * r * v)
            if power == 1:
                return v * e
            mu = np.sqrt(mu0[idx] ** 2 + v * v)
            if power == 0:
                return v / mu * e
            return mu * v * e

        return f

    zero = np.zeros(r_out.size)
    w = np.minimum(8.0 / (kap * r_out), 0.5 * vmax)
    parts = []
    for p in (0, 1, 2):
        f = make(p)
        parts.append(
            integrate_batch(f, zero, w, tol=tol) + integrate_batch(f, w, vmax, tol=tol)
        )
    e0, e1, e2 = parts
    return mu0, e0, e1, e2


def moments_at(radii: np.ndarray, spec: ProblemSpec, tol: float = 1e-10):
    """
    Exact J, H, K at arbitrary radii by adaptive quadrature.

    Returns three arrays aligned with ``radii``.  Radii equal to R are
    classified with the r >= R branch (both branches agree there).
    """
    _require_bare_sphere(spec, "the exact moments")
    if tol <= 0:
        raise ValueError("tol must be positive")
    radii = np.asarray(radii, dtype=float)
    R, kap, B = spec.R, spec.kappa, spec.B
    J = np.empty(radii.size)
    H = np.empty(radii.size)
    K = np.empty(radii.size)

    inside = radii < R
    if np.any(inside):
        r_in = radii[inside]
        i0, i1, i2 = _inside_integrals(r_in, kap, R, tol)
        J[inside] = B * (1.0 - i0)
        H[inside] = B * i1
        K[inside] = B * (1.0 / 3.0 - i2)
    if np.any(~inside):
        r_out = radii[~inside]
        mu0, e0, e1, e2 = _outside_integrals(r_out, kap, R, tol)
        J[~inside] = 0.5 * B * (1.0 - mu0 - e0)
        H[~inside] = 0.5 * B * (0.5 * (R / r_out) ** 2 - e1)
        K[~inside] = B / 6.0 * (1.0 - (1.0 - (R / r_out) ** 2) ** 1.5 - 3.0 * e2)
    return J, H, K


def exact_moments(grid: RadialGrid, spec: ProblemSpec, tol: float = 1e-10) -> MomentTriple:
    """Exact moments sampled at every cell center of ``grid``."""
    J, H, K = moments_at(grid.r_centers, spec, tol)
    return MomentTriple(
        J=RadialField(grid, J), H=RadialField(grid, H), K=RadialField(grid, K)
    )


def special_values(spec: ProblemSpec) -> SpecialValues:
    """Closed-form J(0), J(R), H(0), H(R) of the exact solution."""
    _require_bare_sphere(spec, "the closed-form boundary values")
    B, kap, R = spec.B, spec.kappa, spec.R
    x = 2.0 * kap * R
    J0 = B * -np.expm1(-kap * R)
    JR = 0.5 * B * (1.0 + np.expm1(-x) / x)
    HR = 0.5 * B * (0.5 + np.exp(-x) * (1.0 / x + 1.0 / x**2) - 1.0 / x**2)
    return SpecialValues(J0=float(J0), JR=float(JR), H0=0.0, HR=float(HR))


def limit_moments_infinite_kappa(grid: RadialGrid, R: float, B: float) -> MomentTriple:
    """Piecewise moments of the infinitely opaque sphere (kappa -> infinity)."""
    r = grid.r_centers
    out = r >= R
    ratio2 = np.where(out, (R / np.where(out, r, R)) ** 2, 0.0)
    s0 = np.sqrt(1.0 - ratio2)
    J = np.where(out, 0.5 * B * (1.0 - s0), B)
    H = np.where(out, 0.25 * B * ratio2, 0.0)
    K = np.where(out, B / 6.0 * (1.0 - (1.0 - ratio2) ** 1.5), B / 3.0)
    return MomentTriple(
        J=RadialField(grid, J), H=RadialField(grid, H), K=RadialField(grid, K)
    )


def flux_factors_infinite(grid: RadialGrid, R: float) -> FluxFactors:
    """Flux ratio and Eddington factor of the infinitely opaque sphere."""
    r = grid.r_centers
    out = r >= R
    ratio2 = np.where(out, (R / r) ** 2, 0.0)
    s0 = np.sqrt(1.0 - ratio2)
    h = np.where(out, 0.5 * (1.0 + s0), 0.0)
    k = np.where(out, (2.0 - ratio2 + s0) / 3.0, 1.0 / 3.0)
    return FluxFactors(h=RadialField(grid, h), k=RadialField(grid, k))


def free_streaming_flux_ratio(r, R: float):
    """
    Geometric one-moment closure of a sphere-fed streaming field:
    1/2 inside, (1 + sqrt(1 - (R/r)^2))/2 outside; tends to 1 far away.
    """
    r = np.asarray(r, dtype=float)
    out = r >= R
    ratio2 = np.where(out, (R / np.where(out, r, R)) ** 2, 0.0)
    g = np.where(out, 0.5 * (1.0 + np.sqrt(1.0 - ratio2)), 0.5)
    return g if g.ndim else float(g)


def neutrinosphere_radius(spec: ProblemSpec) -> float:
    """
    Radius where the outward optical depth of the step profile reaches 2/3:
    R - 2/(3 kappa).  Defined only when kappa * R > 2/3.
    """
    _require_bare_sphere(spec, "the neutrinosphere radius")
    if spec.kappa * spec.R <= 2.0 / 3.0:
        raise NoNeutrinosphereError(
            f"optical depth kappa*R = {spec.kappa * spec.R:g} never reaches 2/3"
        )
    return spec.R - 2.0 / (3.0 * spec.kappa)
