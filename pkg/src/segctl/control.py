"""The feedback layer: labeling errors, the regulating control signal, the
estimator that tracks user intent, impulsive jumps, Lyapunov monitors, and
the synchronized tick that couples them.

Sign conventions: the error xi_hat = H(phi) - H(target) is positive where
the visible segmentation overshoots the target, so the control speed is
F = -alpha^2 * xi_hat (shrink what overshoots, grow what lags).  The gain
alpha^2 = g_M + margin dominates the image-driven speed everywhere, which is
what makes the error dynamics contractive; the inequality alpha^2 >= g_M is
asserted every tick and counted, never assumed.

In oracle mode the estimator is pinned to a known reference field, which
turns the coupled loop into the pure state-feedback loop and lets one test
harness monitor both descent regimes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import natural_speed
from .errors import ImpulseSignError
from .grid import ImageVolume
from .levelset import (
    DEFAULT_EPSILON,
    LevelSetField,
    _front_mask,
    delta,
    delta_max,
    evolve_step,
    heaviside,
    reband_after_jump,
    stable_dt,
)
from .region import compose_G, g_competitor, g_region, update_stats


@dataclass(frozen=True)
class ControlParams:
    """Gain margin and the exponential-rate monitoring constants."""

    alpha_margin: float = 1.0
    nu: float = 0.0
    rho: float = DEFAULT_EPSILON
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if self.alpha_margin <= 0:
            raise ValueError("alpha_margin must be positive")
        if self.nu < 0 or self.rho <= 0 or self.epsilon <= 0:
            raise ValueError("invalid monitoring constants")


@dataclass(frozen=True)
class LyapunovSample:
    t: float
    V: float
    E: float
    Vhat: float

    def __post_init__(self) -> None:
        assert self.V >= 0 and self.E >= 0 and self.Vhat >= 0
        assert abs(self.V - (self.E + self.Vhat)) <= 1e-9 * max(1.0, self.V)


@dataclass(eq=False)
class EngineState:
    """Everything the coupled tick reads and writes.  Owned by one session."""

    img: ImageVolume
    mode: str
    epsilon: float
    labels: np.ndarray
    n_labels: int
    phi: dict[int, LevelSetField]
    est: dict[int, LevelSetField]
    U: dict[int, np.ndarray]
    gcost: np.ndarray
    g_m: np.ndarray
    alpha_sq: np.ndarray
    dists: dict[int, np.ndarray] | None = None
    oracle: dict[int, np.ndarray] | None = None
    t: float = 0.0
    alpha_violations: int = 0

    def target_values(self, label: int) -> np.ndarray:
        if self.oracle is not None:
            return self.oracle[label]
        return self.est[label].values


def label_error(phi_values, target_values, epsilon: float = DEFAULT_EPSILON):
    """xi = H(phi) - H(target), in [-1, 1]."""
    return heaviside(phi_values, epsilon) - heaviside(target_values, epsilon)


def control_signal(xi_hat, alpha_sq):
    """Regulating speed F = -alpha^2 * xi_hat."""
    return -np.asarray(alpha_sq) * xi_hat


def estimator_speed(xi_hat, U, est_values, epsilon: float = DEFAULT_EPSILON):
    """Speed of the intent estimator: chase the visible error, corrected by
    user evidence through e_U = H(est) - H(U)."""
    e_u = heaviside(est_values, epsilon) - heaviside(U, epsilon)
    return xi_hat - np.abs(U) * e_u


def intrinsic_speeds(state: EngineState) -> dict[int, np.ndarray]:
    """Image-driven speed G_i per label for the configured dynamics."""
    if state.mode == "region":
        stats = update_stats(state.img, state.labels, state.n_labels)
        g_all = {
            i: g_region(state.img, stats.means[i - 1], state.phi[i].values, state.epsilon)
            for i in state.phi
        }
        return {i: compose_G(g_all[i], g_competitor(g_all, i)) for i in g_all}
    assert state.dists is not None, "distance mode needs seed distance fields"
    return {i: natural_speed(i, state.dists, state.gcost) for i in state.phi}


def refresh_labels(phi: dict[int, LevelSetField]) -> np.ndarray:
    """Per-voxel argmax of the fields; ties go to the smallest label."""
    order = sorted(phi)
    stack = np.stack([phi[i].values for i in order])
    idx = np.argmax(stack, axis=0)
    return np.asarray(order, dtype=np.int64)[idx]


def coupled_step(state: EngineState, dt_cap: float) -> float:
    """One synchronized tick.  Returns the dt actually used.

    Order: intrinsic speeds from current stats/distances -> snapshot the
    errors -> control speeds -> evolve every visible field -> evolve every
    estimator field (unless pinned) -> refresh the label map by argmax.
    """
    labels = sorted(state.phi)
    G = intrinsic_speeds(state)
    xi_hat = {
        i: label_error(state.phi[i].values, state.target_values(i), state.epsilon)
        for i in labels
    }
    total = {i: G[i] + control_signal(xi_hat[i], state.alpha_sq) for i in labels}

    est_speeds = None
    if state.oracle is None:
        est_speeds = {
            i: estimator_speed(xi_hat[i], state.U[i], state.est[i].values, state.epsilon)
            for i in labels
        }

    # Two step-size caps.  The CFL cap bounds |dphi| to half a band width.
    # The stiffness cap keeps the per-voxel Euler map of the feedback term
    # contractive (dt * gain * delta^2 <= 1); without it the error at a
    # voxel rings around its equilibrium once the CFL cap loosens, and the
    # monitored V stops being monotone.
    max_speed = 0.0
    max_gain = 0.0
    for i in labels:
        band = state.phi[i].band
        if band.any():
            max_speed = max(max_speed, float(np.abs(total[i][band]).max()))
            max_gain = max(
                max_gain, float((state.alpha_sq[band] + state.g_m[band]).max())
            )
        if est_speeds is not None:
            eband = state.est[i].band
            if eband.any():
                max_speed = max(max_speed, float(np.abs(est_speeds[i][eband]).max()))
                max_gain = max(
                    max_gain, 2.0 * (1.0 + float(np.abs(state.U[i][eband]).max()))
                )
    dmax2 = delta_max(state.epsilon) ** 2
    dt_stiff = np.inf if max_gain <= 0.0 else 1.0 / (dmax2 * max_gain)
    dt = min(dt_cap, stable_dt(max_speed, state.epsilon), dt_stiff)

    for i in labels:
        band = state.phi[i].band
        state.alpha_violations += int((state.alpha_sq[band] < state.g_m[band]).sum())

    for i in labels:
        state.phi[i] = evolve_step(state.phi[i], total[i], dt)
    if est_speeds is not None:
        for i in labels:
            state.est[i] = evolve_step(state.est[i], est_speeds[i], dt)

    state.labels = refresh_labels(state.phi)
    state.t += dt
    return dt


def lyapunov_sample(state: EngineState) -> LyapunovSample:
    """E (user-evidence mismatch), Vhat (visible error), V = E + Vhat."""
    vol = float(np.prod(state.img.spacing))
    e_total = 0.0
    vhat_total = 0.0
    for i in sorted(state.phi):
        xi = label_error(state.phi[i].values, state.target_values(i), state.epsilon)
        vhat_total += float((xi * xi).sum())
        target = state.target_values(i)
        e_u = heaviside(target, state.epsilon) - heaviside(state.U[i], state.epsilon)
        e_total += float((np.abs(state.U[i]) * e_u * e_u).sum())
    e_total *= 0.5 * vol
    vhat_total *= 0.5 * vol
    return LyapunovSample(t=state.t, V=e_total + vhat_total, E=e_total, Vhat=vhat_total)


def rate_condition_check(state: EngineState, rho: float) -> bool:
    """True in the large-error regime: for every label, the delta^2-weighted
    error mass is at most 1/rho of the total error mass."""
    for i in sorted(state.phi):
        xi = label_error(state.phi[i].values, state.target_values(i), state.epsilon)
        d = delta(state.phi[i].values, state.epsilon)
        lhs = rho * float((d * d * xi * xi).sum())
        rhs = float((xi * xi).sum())
        if lhs > rhs:
            return False
    return True


def apply_impulse(state: EngineState, stroke_label: int, voxel_index) -> None:
    """Discontinuous jump at stroke time: on the stroked voxels the intent
    estimate and the visible field both jump to P = sign(U_i) (unit
    magnitude), and any competitor claiming those voxels is pushed just
    outside so the argmax flips and a live front exists around the stroke.

    ``voxel_index`` is a numpy index tuple covering the stroke voxels.
    Raises ImpulseSignError where the accumulated support does not actually
    back the stroked label (the caller must refresh U first).
    """
    u_at = state.U[stroke_label][voxel_index]
    if (u_at <= 0.0).any():
        raise ImpulseSignError(
            f"support for label {stroke_label} is not positive on {int((u_at <= 0).sum())} stroke voxel(s)"
        )

    for which in ("est", "phi"):
        fields: dict[int, LevelSetField] = getattr(state, which)
        if which == "est" and state.oracle is not None:
            continue
        old_fronts = {j: _front_mask(f.inside) for j, f in fields.items()}
        for j, f in fields.items():
            vals = f.values
            at = vals[voxel_index]
            if j == stroke_label:
                at[:] = 1.0
            else:
                at[at >= 0.0] = -1.0
            vals[voxel_index] = at
        for j, f in fields.items():
            fields[j] = reband_after_jump(f, old_fronts[j])

    state.labels = refresh_labels(state.phi)
