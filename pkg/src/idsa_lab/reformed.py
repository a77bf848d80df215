"""
Domain-split variants: the switch is replaced by an explicit interface.

Both variants evolve only the trapped component, on r < R, with an
implicit (backward Euler) tridiagonal solve, impose Jt = 0 from R outward,
reconstruct the streaming component from the trapped gradient inside, and
extend it outward divergence-free: r^2 g(r) Js constant past R.

* "old": trapped equation keeps the inward advection term (2/3) dJt/dr on
  top of diffusion + reaction; Js = -(2/(3 kappa)) dJt/dr inside, and the
  edge value -(2/(3 kappa)) dJt/dr|_R feeds the outside, uncorrected.
* "new": trapped equation is the plain diffusion limit; Js = C dJt/dr with
  C normalized so the edge value equals the exact J(R) of the
  homogeneous-sphere solution.  The stationary state of this variant has
  the closed form evaluated by ``new_idsa_stationary_closed_form``.

Boundary handling: zero flux at r = 0; the Dirichlet face sits at R
snapped to the nearest grid face (choose n_cells so R lands on a face to
avoid O(dr) interface smearing), and both the boundary flux and the edge
gradient use a one-sided second-order stencil through the zero face value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .grids import ProblemSpec, RadialField, RadialGrid
from .idsa import NegativityError, SolverConfig, TwoComponentState
from .sphere import _require_bare_sphere, free_streaming_flux_ratio, special_values


class NormalizationSingularityError(RuntimeError):
    """The trapped edge gradient vanished; the streaming scale is undefined."""


@dataclass(eq=False)
class ClosureSet:
    """Flux-factor closures for the trapped and streaming components."""

    grid: RadialGrid
    R: float
    h_t: float
    k_t: float
    h_s: np.ndarray
    k_s: np.ndarray


def closure_set(grid: RadialGrid, R: float) -> ClosureSet:
    """Trapped: h=0, k=1/3.  Streaming: the opaque-sphere geometric factors."""
    r = grid.r_centers
    out = r >= R
    ratio2 = np.where(out, (R / np.where(out, r, R)) ** 2, 0.0)
    s0 = np.sqrt(1.0 - ratio2)
    h_s = np.where(out, 0.5 * (1.0 + s0), 0.5)
    k_s = np.where(out, (2.0 - ratio2 + s0) / 3.0, 1.0 / 3.0)
    return ClosureSet(grid=grid, R=R, h_t=0.0, k_t=1.0 / 3.0, h_s=h_s, k_s=k_s)


def reconstruct_HK(state: TwoComponentState, closures: ClosureSet):
    """First and second moments from the component closures."""
    grid = state.Jt.grid
    if grid != closures.grid:
        raise ValueError("state and closures live on different grids")
    H = closures.h_t * state.Jt.values + closures.h_s * state.Js.values
    K = closures.k_t * state.Jt.values + closures.k_s * state.Js.values
    return RadialField(grid, H), RadialField(grid, K)


def reconstruct_flux_factors(state: TwoComponentState, closures: ClosureSet):
    """h = H/(Jt+Js), k = K/(Jt+Js); NaN where the total vanishes."""
    H, K = reconstruct_HK(state, closures)
    tot = state.Jt.values + state.Js.values
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where(tot > 0.0, H.values / tot, np.nan)
        k = np.where(tot > 0.0, K.values / tot, np.nan)
    grid = state.Jt.grid
    return RadialField(grid, h), RadialField(grid, k)


class ReformedScheme:
    """One domain-split variant bound to a scenario, grid and time step."""

    def __init__(self, variant: str, spec: ProblemSpec, grid: RadialGrid, cfg: SolverConfig):
        variant = variant.lower()
        if variant not in ("old", "new"):
            raise ValueError(f"variant must be 'old' or 'new', got {variant!r}")
        _require_bare_sphere(spec, "the domain-split schemes")
        self.variant = variant
        self.spec = spec
        self.grid = grid
        self.cfg = cfg

        dr = grid.dr
        m = int(round(spec.R / dr))
        if m < 2 or m > grid.n_cells:
            raise ValueError(
                f"interface face index {m} out of range; need at least two cells inside R"
            )
        self.m = m
        self.snapped_R = m * dr
        self.kappa_tot = spec.kappa + spec.kappa_s
        self.edge_value = special_values(spec).JR if variant == "new" else None
        self.closures = closure_set(grid, spec.R)

        r_in = grid.r_centers[:m]
        faces = grid.r_edges[: m + 1]
        k3 = 3.0 * self.kappa_tot
        a = faces[1:m] ** 2 / (k3 * dr**2 * r_in[: m - 1] ** 2)   # flux to right neighbor
        b = faces[1:m] ** 2 / (k3 * dr**2 * r_in[1:m] ** 2)       # flux from left neighbor
        cR = self.snapped_R**2 / (3.0 * k3 * dr**2 * r_in[-1] ** 2)

        lower = np.zeros(m)
        diag = np.zeros(m)
        upper = np.zeros(m)
        diag[0] -= a[0]
        upper[0] += a[0]
        if m > 2:
            lower[1 : m - 1] += b[: m - 2]
            diag[1 : m - 1] -= a[1:] + b[: m - 2]
            upper[1 : m - 1] += a[1:]
        lower[m - 1] += b[m - 2] + cR
        diag[m - 1] -= b[m - 2] + 9.0 * cR

        if variant == "old":
            w = 2.0 / (3.0 * dr)
            diag[: m - 1] -= w
            upper[: m - 1] += w
            diag[m - 1] -= 2.0 * w
        diag -= spec.kappa

        self._L = (lower, diag, upper)
        self._q = np.full(m, spec.kappa * spec.B)
        dt = cfg.dt
        self._M = np.zeros((3, m))
        self._M[0, 1:] = -dt * upper[:-1]
        self._M[1, :] = 1.0 - dt * diag
        self._M[2, :-1] = -dt * lower[1:]

    def _gradient(self, Jt_in: np.ndarray):
        """Second-order trapped gradient at centers, plus the face-R value."""
        m, dr = self.m, self.grid.dr
        g = np.empty(m)
        g[0] = (Jt_in[1] - Jt_in[0]) / (2.0 * dr)
        if m > 2:
            g[1 : m - 1] = (Jt_in[2:] - Jt_in[: m - 2]) / (2.0 * dr)
        g[m - 1] = -(3.0 * Jt_in[m - 1] + Jt_in[m - 2]) / (3.0 * dr)
        g_face = (Jt_in[m - 2] - 9.0 * Jt_in[m - 1]) / (3.0 * dr)
        return g, g_face

    def _streaming(self, Jt_in: np.ndarray, t: float):
        grad, grad_face = self._gradient(Jt_in)
        B = self.spec.B
        if self.variant == "old":
            scale = -2.0 / (3.0 * self.kappa_tot)
            edge = scale * grad_face
        else:
            if grad_face == 0.0:
                raise NormalizationSingularityError(
                    "trapped gradient at the interface is zero"
                )
            scale = self.edge_value / grad_face
            edge = self.edge_value
        Js_in = scale * grad
        if np.any(Js_in < -1e-12 * B):
            i = int(np.argmin(Js_in))
            raise NegativityError("streaming reconstruction", t, i, float(Js_in[i]))
        Js_in = np.maximum(Js_in, 0.0)  # snap roundoff dust only; real negativity raised above

        n = self.grid.n_cells
        Js = np.empty(n)
        Js[: self.m] = Js_in
        if self.m < n:
            r_out = self.grid.r_centers[self.m :]
            g_out = free_streaming_flux_ratio(r_out, self.spec.R)
            Js[self.m :] = edge * self.snapped_R**2 / (2.0 * r_out**2 * g_out)
        return Js

    def _assemble_state(self, Jt_in: np.ndarray, t: float) -> TwoComponentState:
        n = self.grid.n_cells
        Jt = np.zeros(n)
        Jt[: self.m] = Jt_in
        Js = self._streaming(Jt_in, t)
        return TwoComponentState(
            RadialField(self.grid, Jt), RadialField(self.grid, Js), t=t
        )

    def step(self, state: TwoComponentState) -> TwoComponentState:
        """One backward-Euler step of the trapped solve plus reconstruction."""
        Jt_in = state.Jt.values[: self.m]
        t_next = state.t + self.cfg.dt
        Jt_new = solve_banded((1, 1), self._M, Jt_in + self.cfg.dt * self._q)
        if np.any(Jt_new < -1e-12 * self.spec.B):
            i = int(np.argmin(Jt_new))
            raise NegativityError("trapped component", t_next, i, float(Jt_new[i]))
        return self._assemble_state(Jt_new, t_next)

    def run_to_stationarity(self, state: TwoComponentState | None = None):
        """
        March until the trapped update stalls below cfg.stationarity_tol
        (relative to max Jt) or cfg.t_end is reached.  Returns the final
        state and the number of steps taken.
        """
        cfg = self.cfg
        Jt = (
            state.Jt.values[: self.m].copy()
            if state is not None
            else np.zeros(self.m)
        )
        t = state.t if state is not None else 0.0
        n_steps = int(round(cfg.t_end / cfg.dt))
        steps = 0
        for k in range(1, n_steps + 1):
            Jt_new = solve_banded((1, 1), self._M, Jt + cfg.dt * self._q)
            change = np.max(np.abs(Jt_new - Jt)) / max(np.max(np.abs(Jt_new)), 1e-300)
            Jt = Jt_new
            steps = k
            if change < cfg.stationarity_tol:
                break
        return self._assemble_state(Jt, t + steps * cfg.dt), steps

    def stationary_direct(self) -> TwoComponentState:
        """Solve the stationary linear system directly (cross-check path)."""
        lower, diag, upper = self._L
        ab = np.zeros((3, self.m))
        ab[0, 1:] = -upper[:-1]
        ab[1, :] = -diag
        ab[2, :-1] = -lower[1:]
        Jt = solve_banded((1, 1), ab, self._q)
        return self._assemble_state(Jt, np.inf)


def step_old_idsa(state: TwoComponentState, scheme: ReformedScheme) -> TwoComponentState:
    if scheme.variant != "old":
        raise ValueError("scheme variant is not 'old'")
    return scheme.step(state)


def step_new_idsa(state: TwoComponentState, scheme: ReformedScheme) -> TwoComponentState:
    if scheme.variant != "new":
        raise ValueError("scheme variant is not 'new'")
    return scheme.step(state)


def _sinh_ratio(x: np.ndarray, X: float) -> np.ndarray:
    """(X/x) * sinh(x)/sinh(X), evaluated without large exponentials."""
    num = -np.expm1(-2.0 * x)
    den = -np.expm1(-2.0 * X)
    return (X / x) * np.exp(x - X) * num / den


def _edge_bracket(x: np.ndarray, X: float) -> np.ndarray:
    """(sinh(x) - x cosh(x)) / (x^2 sinh(X)), stable for small and large x."""
    small = x < 0.05
    xs = np.where(small, 1.0, x)  # placeholder to keep the general branch finite
    general = (
        np.exp(xs - X)
        * ((-np.expm1(-2.0 * xs)) - xs * (1.0 + np.exp(-2.0 * xs)))
        / (xs**2 * -np.expm1(-2.0 * X))
    )
    inv_sinh_X = 2.0 * np.exp(-X) / -np.expm1(-2.0 * X)
    series = -(x / 3.0) * (1.0 + x**2 / 10.0 + x**4 / 280.0) * inv_sinh_X
    return np.where(small, series, general)


def new_idsa_stationary_closed_form(grid: RadialGrid, spec: ProblemSpec) -> TwoComponentState:
    """
    Closed-form stationary state of the "new" variant.

    Inside: Jt = B (1 - (R/r) sinh(sqrt3 k r)/sinh(sqrt3 k R)) and
    Js = C dJt/dr with the normalization constant chosen so Js(R) equals the
    exact edge value; outside: Jt = 0 and the divergence-free extension.
    All hyperbolics are evaluated in decaying-exponential form so extreme
    kappa*R cannot overflow.
    """
    _require_bare_sphere(spec, "the closed-form stationary state")
    B, R, kap = spec.B, spec.R, spec.kappa
    X = np.sqrt(3.0) * kap * R
    q = 1.0 + np.expm1(-2.0 * kap * R) / (2.0 * kap * R)   # J(R) = B q / 2
    edge = 0.5 * B * q
    X_over_tanh = X * (1.0 + np.exp(-2.0 * X)) / -np.expm1(-2.0 * X)
    C = 0.5 * R * q / (1.0 - X_over_tanh)

    r = grid.r_centers
    inside = r < R
    Jt = np.zeros(grid.n_cells)
    Js = np.empty(grid.n_cells)

    x = np.sqrt(3.0) * kap * r[inside]
    Jt[inside] = B * (1.0 - _sinh_ratio(x, X))
    Js[inside] = C * 3.0 * kap**2 * B * R * _edge_bracket(x, X)

    r_out = r[~inside]
    s0 = np.sqrt(np.clip(1.0 - (R / r_out) ** 2, 0.0, None))
    Js[~inside] = edge * (1.0 - s0)
    return TwoComponentState(RadialField(grid, Jt), RadialField(grid, Js), t=np.inf)


def err0(kappa_R):
    """
    Closed-form relative error of the "new" stationary state at r = 0,
    (sqrt3 kR / sinh(sqrt3 kR) - exp(-kR)) / (1 - exp(-kR)).
    Vanishes for large kappa*R; order one when the sphere is translucent.
    """
    x = np.asarray(kappa_R, dtype=float)
    if np.any(x <= 0):
        raise ValueError("kappa_R must be positive")
    X = np.sqrt(3.0) * x
    ratio = 2.0 * X * np.exp(-X) / -np.expm1(-2.0 * X)
    out = (ratio - np.exp(-x)) / -np.expm1(-x)
    return out if out.ndim else float(out)
