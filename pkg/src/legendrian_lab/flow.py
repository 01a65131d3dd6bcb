"""Legendrian-constrained steepest descent of area.

The descent potential is f = div(J0 H): among the Legendrian-preserving
normal deformations V_f = f R + (1/2) J0 grad f, it gives
dA = -int f^2 <= 0, and its zeros are exactly the contact stationary
surfaces.  Three numerical safeguards wrap the raw direction; all three
keep descent intact, none moves the fixed-point set, and the
stationarity metric ||div JH||_2 is always evaluated on the raw field:

* the potential is smoothed with the symmetric positive multiplier
  (1 + gamma Q(lambda))^{-1} in the flat Fourier basis, where
  Q(lambda) = lambda(lambda - 6)/4 is the second-variation spectrum of
  the flat minimal torus (the raw flow is fourth-order parabolic and
  explicit steps would need tau ~ N^-4);
* the six Fourier modes with 0 < lambda < 6 are removed: they are the
  torus's area-lowering Legendrian saddle directions, and descending
  along their roundoff-seeded content runs away from the stationary
  set instead of certifying it;
* each step integrates the frozen-potential deformation with a midpoint
  rule and caps the node displacement, keeping the Legendrian drift per
  step at the integrator order rather than O(tau^2 |V|^2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import contact, grid_ops, grids
from .contact import dot, j_apply
from .immersions import GridSurface, variation_field_on_positions
from .report import Report

FLOW_LEGENDRIAN_ABORT = 1e-3
TAU_UNDERFLOW = 1e-12
MAX_HALVINGS = 20
DEFAULT_TAU0 = 0.03
DEFAULT_SMOOTHING = 0.02
DEFAULT_STEP_CAP = 2e-3


def variation_field(geo: grid_ops.DerivedGeometry, f):
    """Legendrian variation V_f = f R + (1/2) J0 grad_g f with alpha(V_f) = f.

    The 1/2 is forced by d(alpha) = 2 sum dx ^ dy; with it the deformation
    preserves the Legendrian condition to first order (drift is quadratic
    in the displacement).
    """
    f = np.asarray(f, dtype=float)
    r = j_apply(geo.jet.value)
    grad = grid_ops.gradient(f, geo)
    return f[..., None] * r + 0.5 * j_apply(grad)


def area_of_positions(positions, scheme):
    """Area of a repositioned grid without building full geometry."""
    xu = grids.deriv(positions, 0, scheme)
    xv = grids.deriv(positions, 1, scheme)
    det = dot(xu, xu) * dot(xv, xv) - dot(xu, xv) ** 2
    n = positions.shape[0]
    return float(np.sum(np.sqrt(det)) * grids.cell_area(n))


def first_variation_check(geo: grid_ops.DerivedGeometry, f, eps=1e-3):
    """Three independent evaluations of dA under the variation V_f.

    geometric:    -int <tr_g B, V_f> dmu  (= -2 int <H, V_f>, H the mean)
    divergence:   -int f div(J0 H) dmu
    finite diff:  [A(+eps) - A(-eps)] / (2 eps) along V_f with sphere
                  re-projection (the projection changes area only at
                  O(eps^2), symmetric in +-eps).
    """
    if eps > 1e-2 or eps <= 0:
        raise ValueError("finite-difference step eps must lie in (0, 1e-2]")
    geo.check_legendrian(what="first_variation_check")
    f = np.asarray(f, dtype=float)
    v = variation_field(geo, f)

    geometric = -2.0 * grid_ops.quadrature(dot(geo.data.Hvec, v), geo)
    div, _ = grid_ops.div_JH(geo)
    divergence = -grid_ops.quadrature(f * div, geo)
    plus = contact.normalize(geo.jet.value + eps * v)
    minus = contact.normalize(geo.jet.value - eps * v)
    fd = (area_of_positions(plus, geo.scheme) - area_of_positions(minus, geo.scheme)) / (2 * eps)
    return geometric, divergence, fd


def torus_jacobi_multiplier(n, gamma):
    """Fourier multiplier of the smoothed, saddle-filtered descent.

    lambda(m, n) = 2(m^2 - mn + n^2) is the (negative of the) flat-torus
    Laplacian spectrum; Q = lambda(lambda-6)/4 the area Hessian on
    Legendrian potentials.
    """
    k = np.fft.fftfreq(n, d=1.0 / n)
    km, kn = np.meshgrid(k, k, indexing="ij")
    lam = 2.0 * (km**2 - km * kn + kn**2)
    q = lam * (lam - 6.0) / 4.0
    mult = 1.0 / (1.0 + gamma * np.maximum(q, 0.0))
    mult[(lam > 0.0) & (lam < 6.0)] = 0.0
    return mult


def descent_potential(raw, gamma=DEFAULT_SMOOTHING):
    """Smoothed and saddle-filtered copy of the raw potential div(J0 H)."""
    raw = np.asarray(raw, dtype=float)
    if gamma == 0.0:
        return raw
    mult = torus_jacobi_multiplier(raw.shape[0], gamma)
    return np.fft.ifft2(np.fft.fft2(raw) * mult).real


@dataclass
class FlowState:
    surface: GridSurface
    step_index: int = 0
    tau: float = DEFAULT_TAU0
    tau0: float = DEFAULT_TAU0
    smoothing: float = DEFAULT_SMOOTHING
    step_cap: float = DEFAULT_STEP_CAP
    area_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)  # (divJH_l2, leg_res, el_sup)
    tau_history: list = field(default_factory=list)
    stalled: bool = False

    @property
    def area(self):
        return self.area_history[-1]


def _diagnostics(geo: grid_ops.DerivedGeometry):
    div, _ = grid_ops.div_JH(geo, legendrian_tol=FLOW_LEGENDRIAN_ABORT)
    div_l2 = float(np.sqrt(grid_ops.quadrature(div**2, geo)))
    leg = float(np.max(geo.data.legendrian_residual))
    el = float(np.max(contact.norm(grid_ops.el_residual(
        geo, legendrian_tol=FLOW_LEGENDRIAN_ABORT))))
    return div, div_l2, leg, el


def start_flow(surface: GridSurface, tau0=DEFAULT_TAU0, smoothing=DEFAULT_SMOOTHING,
               step_cap=DEFAULT_STEP_CAP) -> FlowState:
    geo = grid_ops.derived_geometry(surface)
    geo.check_legendrian(tol=1e-6, what="flow start")
    state = FlowState(surface=surface, tau=tau0, tau0=tau0, smoothing=smoothing,
                      step_cap=step_cap)
    _, div_l2, leg, el = _diagnostics(geo)
    state.area_history.append(grid_ops.surface_area(geo))
    state.residual_history.append((div_l2, leg, el))
    return state


def flow_step(state: FlowState, geo: grid_ops.DerivedGeometry | None = None) -> FlowState:
    """One accepted descent step with halving line search on the area.

    Rejected trials never enter the histories; tau regrows by 1.5x
    (capped at tau0) after acceptance so one stiff rejection does not pin
    the flow at a tiny step forever.
    """
    if geo is None:
        geo = grid_ops.derived_geometry(state.surface)
    leg = float(np.max(geo.data.legendrian_residual))
    if leg > FLOW_LEGENDRIAN_ABORT:
        raise ValueError(
            f"Legendrian residual {leg:.3e} exceeded abort threshold "
            f"{FLOW_LEGENDRIAN_ABORT:.1e} at step {state.step_index}"
        )
    raw, _ = grid_ops.div_JH(geo, legendrian_tol=FLOW_LEGENDRIAN_ABORT)
    f = descent_potential(raw, state.smoothing)
    p = geo.jet.value
    scheme = state.surface.scheme
    v1 = variation_field_on_positions(p, f, scheme)
    vmax = float(np.max(contact.norm(v1)))
    if vmax == 0.0:
        return state

    area = state.area
    tau = min(state.tau, state.step_cap / vmax)
    accepted = None
    for _ in range(MAX_HALVINGS + 1):
        if tau < TAU_UNDERFLOW:
            break
        half = contact.normalize(p + 0.5 * tau * v1)
        trial = contact.normalize(p + tau * variation_field_on_positions(half, f, scheme))
        if area_of_positions(trial, scheme) < area:
            accepted = trial
            break
        tau *= 0.5
    if accepted is None:
        state.stalled = True
        return state

    state.surface = state.surface.with_positions(accepted)
    state.step_index += 1
    state.tau = min(tau * 1.5, state.tau0)
    new_geo = grid_ops.derived_geometry(state.surface)
    _, div_l2, leg, el = _diagnostics(new_geo)
    state.area_history.append(grid_ops.surface_area(new_geo))
    state.residual_history.append((div_l2, leg, el))
    state.tau_history.append(tau)
    return state


def write_flow_csv(state: FlowState, path):
    """History CSV: one row per accepted step, header mandatory."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "tau", "area", "div_JH_l2", "legendrian_residual",
                         "el_residual_sup"])
        for i in range(1, len(state.area_history)):
            div_l2, leg, el = state.residual_history[i]
            writer.writerow([i] + [repr(float(x)) for x in (
                state.tau_history[i - 1], state.area_history[i], div_l2, leg, el)])


@dataclass
class FlowResult:
    state: FlowState
    converged: bool
    report: Report
    error: str | None = None


def run_flow(surface: GridSurface, tau0=DEFAULT_TAU0, max_steps=5000, tol=1e-4,
             smoothing=DEFAULT_SMOOTHING, step_cap=DEFAULT_STEP_CAP,
             stationary_floor=1e-10) -> FlowResult:
    """Iterate flow_step until ||div JH||_2 <= tol * initial or max_steps.

    Inputs already stationary at the absolute floor terminate at step 0
    (a purely relative target would chase roundoff).  The final report
    carries the stationarity certificates of the limit: the
    Euler-Lagrange residual, the comparison integrals I1/I2 and the
    integral-identity residual E.
    """
    if tol <= 0 or tau0 <= 0:
        raise ValueError("tol and tau0 must be positive")
    state = start_flow(surface, tau0=tau0, smoothing=smoothing, step_cap=step_cap)
    initial_div = state.residual_history[0][0]
    target = max(tol * initial_div, stationary_floor)
    converged = initial_div <= target
    error = None
    while not converged and state.step_index < max_steps and not state.stalled:
        before = state.step_index
        try:
            flow_step(state)
        except ValueError as exc:  # Legendrian abort: keep histories intact
            error = str(exc)
            break
        if state.step_index == before:  # stalled or exactly stationary
            break
        if state.residual_history[-1][0] <= target:
            converged = True

    geo = grid_ops.derived_geometry(state.surface)
    integrals = grid_ops.integral_report(geo)
    rep = Report()
    rep.set("steps", state.step_index)
    rep.set("converged", bool(converged))
    rep.set("stalled", bool(state.stalled))
    rep.set("error", error)
    rep.set("initial_area", state.area_history[0])
    rep.set("final_area", state.area_history[-1])
    rep.set("initial_div_JH_l2", initial_div)
    rep.set("final_div_JH_l2", state.residual_history[-1][0])
    rep.set("final_el_residual_sup", state.residual_history[-1][2])
    rep.set("max_legendrian_residual", max(r[1] for r in state.residual_history))
    rep.set("final_S_max_dev", float(np.max(np.abs(geo.data.S - 2.0))))
    for key in ("area", "W", "I1", "I2", "E", "Sigma_Simons"):
        rep.set("final_" + key, integrals.get(key))
    return FlowResult(state=state, converged=converged, report=rep, error=error)
