"""
Original two-component scheme with the min-max switched diffusion source.

Per time step, the coupling source

    Sigma = min( max( -D[Jt] + kappa_a * Js, 0 ), kappa_a * B )

is evaluated from the previous step's fields (lagged; a self-consistent
fixed-point variant is available through SolverConfig.sigma_lagging), the
trapped component takes one pointwise backward-Euler step,

    Jt_new = (Jt + dt * (kappa_a * B - Sigma)) / (1 + dt * kappa_a),

and the streaming component is re-solved in its stationary limit by an
outward first-order sweep of the flux variable Phi = r^2 g Js, with the
absorption term treated implicitly cell by cell.  D is the conservative
face-flux form of the spherical diffusion operator with the total opacity
averaged arithmetically to faces (floored to keep the coefficient finite
in vacuum cells), zero flux at r = 0 and zero gradient at r_max.

Negativity is an error here, never clamped: the failure modes this module
exists to expose must not be masked.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum

import numpy as np

from .grids import ProblemSpec, RadialField, RadialGrid
from .sphere import free_streaming_flux_ratio


class Regime(IntEnum):
    REACTION = 0
    DIFFUSION = 1
    FREE_STREAMING = 2


class NegativityError(RuntimeError):
    """A component went negative: the modeling broke down."""

    def __init__(self, which: str, t: float, cell: int, value: float):
        self.which = which
        self.t = t
        self.cell = cell
        self.value = value
        super().__init__(
            f"{which} became negative at t = {t:g}, cell {cell} (value {value:.3e})"
        )


class UnboundedError(RuntimeError):
    """sup(Jt + Js) exceeded the admissible bound."""


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 0.1
    t_end: float = 1000.0
    stationarity_tol: float = 1e-8
    sigma_lagging: bool = True
    kappa_floor: float = 1e-30
    max_sigma_iters: int = 100

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.stationarity_tol > 0):
            raise ValueError(f"stationarity_tol must be positive, got {self.stationarity_tol}")
        if not (self.kappa_floor > 0):
            raise ValueError(f"kappa_floor must be positive, got {self.kappa_floor}")


@dataclass(eq=False)
class TwoComponentState:
    """Trapped and streaming zeroth moments at one time level."""

    Jt: RadialField
    Js: RadialField
    t: float = 0.0

    def total(self) -> RadialField:
        return RadialField(self.Jt.grid, self.Jt.values + self.Js.values)

    def trapped_fraction(self) -> np.ndarray:
        """Jt / (Jt + Js) per cell; 0 where both components vanish."""
        tot = self.Jt.values + self.Js.values
        return np.where(tot > 0.0, self.Jt.values / np.where(tot > 0.0, tot, 1.0), 0.0)


def zero_state(grid: RadialGrid) -> TwoComponentState:
    z = np.zeros(grid.n_cells)
    return TwoComponentState(RadialField(grid, z), RadialField(grid, z.copy()), t=0.0)


class _Kernel:
    """Precomputed per-(spec, grid) arrays for the stepping loop."""

    def __init__(self, spec: ProblemSpec, grid: RadialGrid, kappa_floor: float):
        r = grid.r_centers
        dr = grid.dr
        self.grid = grid
        self.spec = spec
        self.dr = dr
        self.r2 = r * r
        self.ka = spec.absorption(r)
        self.kaB = self.ka * spec.B
        ktot = np.maximum(spec.total_opacity(r), kappa_floor)
        self.kf = np.maximum(0.5 * (ktot[:-1] + ktot[1:]), kappa_floor)
        self.rf2 = grid.r_edges[1:-1] ** 2
        self.g = free_streaming_flux_ratio(r, spec.R)
        # Outward sweep: integration steps follow the centers, first step from r = 0.
        h = np.diff(np.concatenate(([0.0], r)))
        c = h * self.ka / self.g
        self.a = 1.0 / (1.0 + c)
        self.d = h * self.r2
        # The cumulative-product scan underflows once the total absorption depth
        # is large; fall back to a sequential sweep beyond ~400 e-folds.
        self._scan_vectorized = float(np.sum(np.log1p(c))) < 400.0
        if not self._scan_vectorized:
            self._a_list = self.a.tolist()
            self._d_list = self.d.tolist()

    def diffusion(self, Jt: np.ndarray) -> np.ndarray:
        F = np.empty(self.grid.n_cells + 1)
        F[0] = 0.0
        F[-1] = 0.0
        F[1:-1] = self.rf2 * np.diff(Jt) / (3.0 * self.kf * self.dr)
        return np.diff(F) / (self.r2 * self.dr)

    def sigma(self, Jt: np.ndarray, Js: np.ndarray):
        inner = -self.diffusion(Jt) + self.ka * Js
        S = np.minimum(np.maximum(inner, 0.0), self.kaB)
        tags = np.where(
            inner <= 0.0, Regime.REACTION,
            np.where(inner >= self.kaB, Regime.FREE_STREAMING, Regime.DIFFUSION),
        ).astype(np.int8)
        return S, tags

    def trapped_step(self, Jt: np.ndarray, S: np.ndarray, dt: float) -> np.ndarray:
        return (Jt + dt * (self.kaB - S)) / (1.0 + dt * self.ka)

    def stream(self, S: np.ndarray) -> np.ndarray:
        if self._scan_vectorized:
            P = np.cumprod(self.a)
            Phi = P * np.cumsum(self.d * S * self.a / P)
        else:
            phi = 0.0
            out = []
            for ai, di, si in zip(self._a_list, self._d_list, S.tolist()):
                phi = (phi + di * si) * ai
                out.append(phi)
            Phi = np.asarray(out)
        return Phi / (self.r2 * self.g)


def diffusion_source(
    Jt: RadialField,
    Js: RadialField,
    spec: ProblemSpec,
    grid: RadialGrid,
    kappa_floor: float = 1e-30,
):
    """
    Min-max switched coupling source and the active regime per cell.

    Sigma_i = min(max(-D_i[Jt] + kappa_a Js_i, 0), kappa_a B) with D the
    conservative discrete diffusion operator.  The tag records which branch
    clipped: REACTION when the inner max floored to 0, FREE_STREAMING when
    the outer min capped at kappa_a B, DIFFUSION otherwise.
    """
    kern = _Kernel(spec, grid, kappa_floor)
    S, tags = kern.sigma(Jt.values, Js.values)
    return RadialField(grid, S), tags


def step_trapped(
    state: TwoComponentState,
    spec: ProblemSpec,
    grid: RadialGrid,
    cfg: SolverConfig,
    sigma: RadialField | None = None,
) -> RadialField:
    """
    One pointwise backward-Euler update of the trapped component.

    The source is held fixed during the implicit solve (pass the lagged
    ``sigma``; when omitted it is evaluated from ``state``).
    """
    kern = _Kernel(spec, grid, cfg.kappa_floor)
    S = sigma.values if sigma is not None else kern.sigma(state.Jt.values, state.Js.values)[0]
    Jt = kern.trapped_step(state.Jt.values, S, cfg.dt)
    bad = Jt < -1e-12 * spec.B
    if np.any(bad):
        i = int(np.argmin(Jt))
        raise NegativityError("trapped component", state.t + cfg.dt, i, float(Jt[i]))
    return RadialField(grid, Jt)


def solve_streaming_stationary(
    source: RadialField, spec: ProblemSpec, grid: RadialGrid
) -> RadialField:
    """
    Stationary streaming field driven by ``source``.

    Outward first-order integration of Phi = r^2 g Js with Phi(0) = 0 (the
    homogeneous solution diverges at the origin and is discarded); the
    absorption sink is folded in implicitly per cell.
    """
    if np.any(source.values < 0.0):
        i = int(np.argmin(source.values))
        raise ValueError(f"source must be nonnegative (cell {i})")
    kern = _Kernel(spec, grid, 1e-30)
    Js = kern.stream(source.values)
    if np.any(Js < 0.0):
        i = int(np.argmin(Js))
        raise NegativityError("streaming component", 0.0, i, float(Js[i]))
    return RadialField(grid, Js)


@dataclass(eq=False)
class Snapshot:
    state: TwoComponentState
    tags: np.ndarray


@dataclass(eq=False)
class Trajectory:
    snapshots: list = field(default_factory=list)
    times: np.ndarray | None = None
    rel_change: np.ndarray | None = None
    sup_total: np.ndarray | None = None
    regime_counts: np.ndarray | None = None
    final: TwoComponentState | None = None
    stopped: str = "t_end"


def _advance(kern: _Kernel, cfg: SolverConfig, Jt, Js, t_next):
    """One full step: source, trapped update, streaming re-solve."""
    if cfg.sigma_lagging:
        S, tags = kern.sigma(Jt, Js)
    else:
        # Self-consistent source: damped fixed-point iteration on the switch.
        # The min-max kink can cycle, so the loop is capped, not required to
        # converge; the last iterate is used.
        S, tags = kern.sigma(Jt, Js)
        cap = np.max(kern.kaB)
        for _ in range(cfg.max_sigma_iters):
            Jt_trial = kern.trapped_step(Jt, S, cfg.dt)
            Js_trial = kern.stream(S)
            S_next, tags = kern.sigma(Jt_trial, Js_trial)
            if np.max(np.abs(S_next - S)) <= 1e-13 * max(cap, 1e-300):
                S = S_next
                break
            S = 0.5 * (S + S_next)
    Jt_new = kern.trapped_step(Jt, S, cfg.dt)
    if np.any(Jt_new < -1e-12 * kern.spec.B):
        i = int(np.argmin(Jt_new))
        raise NegativityError("trapped component", t_next, i, float(Jt_new[i]))
    Js_new = kern.stream(S)
    if np.any(Js_new < 0.0):
        i = int(np.argmin(Js_new))
        raise NegativityError("streaming component", t_next, i, float(Js_new[i]))
    return Jt_new, Js_new, tags


def run_to_time(
    spec: ProblemSpec,
    grid: RadialGrid,
    cfg: SolverConfig,
    snapshot_times: tuple = (),
) -> Trajectory:
    """
    March the coupled system from zero initial data.

    Stops at cfg.t_end or earlier once the per-step relative change
    max(|dJt|, |dJs|) / max(|Jt|, |Js|) falls below cfg.stationarity_tol.
    Snapshots are taken at the steps nearest the requested times; regime
    tag counts, sup(Jt + Js) and the relative change are recorded per step.
    """
    kern = _Kernel(spec, grid, cfg.kappa_floor)
    n_steps = int(round(cfg.t_end / cfg.dt))
    snap_steps = {max(0, int(round(ts / cfg.dt))): ts for ts in snapshot_times}

    Jt = np.zeros(grid.n_cells)
    Js = np.zeros(grid.n_cells)
    traj = Trajectory()
    if 0 in snap_steps:
        traj.snapshots.append(Snapshot(_make_state(grid, Jt, Js, 0.0), np.zeros(grid.n_cells, np.int8)))

    times, rel, sup, counts = [], [], [], []
    stopped = "t_end"
    for k in range(1, n_steps + 1):
        t = k * cfg.dt
        Jt_new, Js_new, tags = _advance(kern, cfg, Jt, Js, t)
        scale = max(Jt_new.max(initial=0.0), Js_new.max(initial=0.0), 1e-300)
        change = max(
            np.max(np.abs(Jt_new - Jt)), np.max(np.abs(Js_new - Js))
        ) / scale
        Jt, Js = Jt_new, Js_new
        times.append(t)
        rel.append(change)
        sup.append(float(np.max(Jt + Js)))
        counts.append(np.bincount(tags, minlength=3))
        if k in snap_steps:
            traj.snapshots.append(Snapshot(_make_state(grid, Jt, Js, t), tags.copy()))
        if change < cfg.stationarity_tol:
            stopped = "stationary"
            break

    traj.times = np.asarray(times)
    traj.rel_change = np.asarray(rel)
    traj.sup_total = np.asarray(sup)
    traj.regime_counts = np.asarray(counts)
    traj.final = _make_state(grid, Jt, Js, times[-1] if times else 0.0)
    traj.stopped = stopped
    return traj


def _make_state(grid, Jt, Js, t):
    return TwoComponentState(RadialField(grid, Jt.copy()), RadialField(grid, Js.copy()), t=t)


@dataclass(frozen=True)
class TakeoverRecord:
    eps: float
    time: float | None
    censored: bool


def run_spurious_trapped_experiment(
    eps_list,
    spec_base: ProblemSpec,
    grid: RadialGrid,
    cfg: SolverConfig,
    horizon: float = 1e6,
    confirm: float = 2.0,
    min_hold: float = 10.0,
) -> list[TakeoverRecord]:
    """
    Time for spurious trapped particles to take over the streaming region.

    For each eps the absorption outside the sphere is set to eps and the
    system is marched from zero data.  The takeover time is the first t at
    which the trapped fraction Jt/(Jt+Js) exceeds 1/2 on every cell r >= R,
    confirmed by holding until max(confirm * t, t + min_hold).

    The switch chatters forever at the interface cells (per-step relative
    change plateaus at ~0.05 * eps, never below any fixed tolerance), so
    sustained domination stands in for literal step-stationarity here.
    Runs that never take over within ``horizon`` are reported censored.
    """
    records = []
    for eps in eps_list:
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        spec = replace(spec_base, kappa_outside=float(eps))
        kern = _Kernel(spec, grid, cfg.kappa_floor)
        outside = grid.r_centers >= spec.R
        Jt = np.zeros(grid.n_cells)
        Js = np.zeros(grid.n_cells)
        t_first = None
        t = 0.0
        k = 0
        result = None
        while True:
            k += 1
            t = k * cfg.dt
            Jt, Js, _ = _advance(kern, cfg, Jt, Js, t)
            tot = Jt[outside] + Js[outside]
            dominated = bool(np.all(Jt[outside] > 0.5 * np.maximum(tot, 1e-300)))
            if dominated:
                if t_first is None:
                    t_first = t
                elif t >= max(confirm * t_first, t_first + min_hold):
                    result = TakeoverRecord(float(eps), t_first, censored=False)
                    break
            else:
                t_first = None
            if t > horizon:
                result = TakeoverRecord(float(eps), None, censored=True)
                break
        records.append(result)
    return records


@dataclass(frozen=True)
class InstabilitySnapshot:
    t: float
    virtual_boundary: float
    nonmonotone: bool
    sup_total: float


@dataclass(eq=False)
class InstabilityResult:
    snapshots: list
    first_nonmonotone_time: float | None
    sup_total: float
    vb_threshold: float
    final: TwoComponentState


def run_instability_experiment(
    spec: ProblemSpec,
    grid: RadialGrid,
    cfg: SolverConfig,
    snapshot_times: tuple = (10.0, 50.0, 100.0, 200.0),
    vb_threshold: float = 0.9,
    bound_margin: float = 1e-6,
) -> InstabilityResult:
    """
    Track the coupling instability at the sphere edge.

    Per snapshot: the virtual-boundary radius (largest r whose trapped value
    still exceeds vb_threshold * B, i.e. the edge of the intact plateau),
    whether the trapped profile is non-monotone inside the sphere (some
    discrete forward difference positive with both centers < R), and the
    running sup of Jt + Js.  The run fails hard with UnboundedError if that
    sup ever exceeds B * (1 + bound_margin); the instability is a modeling
    artifact and must stay bounded.
    """
    kern = _Kernel(spec, grid, cfg.kappa_floor)
    r = grid.r_centers
    inside_pair = r[1:] < spec.R
    t_stop = max(cfg.t_end, max(snapshot_times, default=0.0))
    n_steps = int(round(t_stop / cfg.dt))
    snap_steps = {int(round(ts / cfg.dt)): ts for ts in snapshot_times}
    bound = spec.B * (1.0 + bound_margin)

    Jt = np.zeros(grid.n_cells)
    Js = np.zeros(grid.n_cells)
    sup = 0.0
    first_bad = None
    snaps = []
    for k in range(1, n_steps + 1):
        t = k * cfg.dt
        Jt, Js, _ = _advance(kern, cfg, Jt, Js, t)
        sup = max(sup, float(np.max(Jt + Js)))
        if sup > bound:
            raise UnboundedError(
                f"sup(Jt + Js) = {sup:.9g} exceeds B(1 + {bound_margin:g}) at t = {t:g}"
            )
        nonmono = bool(np.any((np.diff(Jt) > 1e-10 * spec.B) & inside_pair))
        if nonmono and first_bad is None:
            first_bad = t
        if k in snap_steps:
            above = np.nonzero(Jt > vb_threshold * spec.B)[0]
            vb = float(r[above[-1]]) if above.size else 0.0
            snaps.append(InstabilitySnapshot(t, vb, nonmono, sup))
    return InstabilityResult(
        snapshots=snaps,
        first_nonmonotone_time=first_bad,
        sup_total=sup,
        vb_threshold=vb_threshold,
        final=_make_state(grid, Jt, Js, n_steps * cfg.dt),
    )
