"""Differentially flat vehicle models: kinematic unicycle and dynamic bicycle.

Both models have the planar position as flat output. Each comes with the
forward endogenous map (state -> flat coordinates), the inverse maps
recovering inputs from flat coordinates, a fused flat-coordinates NR control
law, and a direct NR controller on the (dynamically extended) vehicle inputs.
Rotation helper ``_to_body`` maps world-frame vectors into the vehicle frame,
which is what every control law below needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, NumericError, SingularityError
from .trivial_flat import FlatState

# Below this speed the flat inversion is refused instead of emitting unbounded rates.
V_MIN = 1e-3
# Steering within this margin of a tangent pole is flagged as near-singular.
STEER_WARN_MARGIN = 0.05
# Steering this close to a tangent pole (delta = pi/2 + n*pi) is a hard domain error.
STEER_POLE_EPS = 1e-9


@dataclass(frozen=True)
class UnicycleState:
    """Planar unicycle with the speed promoted to a state (inputs: v_dot, omega)."""

    px: float
    py: float
    theta: float
    v: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.px, self.py, self.theta, self.v)):
            raise NumericError("unicycle state must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.theta, self.v])


@dataclass(frozen=True)
class BicycleState:
    """Rear-axle bicycle with speed and acceleration states (inputs: a_dot, omega_delta)."""

    px: float
    py: float
    theta: float
    v: float
    delta: float
    a: float
    wheelbase_l: float = 2.0

    def __post_init__(self):
        vals = (self.px, self.py, self.theta, self.v, self.delta, self.a, self.wheelbase_l)
        if not all(math.isfinite(x) for x in vals):
            raise NumericError("bicycle state must be finite")
        if not self.wheelbase_l > 0.0:
            raise DomainError(f"wheelbase must be positive, got {self.wheelbase_l}")

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.theta, self.v, self.delta, self.a])


@dataclass(frozen=True)
class EndogenousMaps:
    """Forward map to flat coordinates and the induced input-rate inverse."""

    forward: object
    inverse_rate: object


@dataclass(frozen=True)
class JacobianBlockReport:
    """Finite-difference residuals of the endogenous-transform block identities."""

    residual_inverse_identity: float
    residual_output_input_block: float
    residual_chain_rule: float
    h_fd: float

    def max_residual(self) -> float:
        return max(self.residual_inverse_identity,
                   self.residual_output_input_block,
                   self.residual_chain_rule)


def _to_body(theta: float, ex: float, ey: float) -> tuple[float, float]:
    ct, st = math.cos(theta), math.sin(theta)
    return ct * ex + st * ey, -st * ex + ct * ey


def steering_margin(delta: float) -> float:
    """Distance from ``delta`` to the nearest pole of tan (pi/2 + n*pi)."""
    return abs(abs(math.remainder(delta, math.pi)) - math.pi / 2.0)


def _check_speed(v: float, context: str):
    if abs(v) < V_MIN:
        raise SingularityError(f"velocity too small for flat inversion in {context} "
                               f"(|v|={abs(v):.3e} < {V_MIN})")


def _check_steering(delta: float):
    if steering_margin(delta) < STEER_POLE_EPS:
        raise DomainError(
            f"steering angle {delta:.6f} rad is at a tangent singularity")


# ---------------------------------------------------------------------------
# Kinematic unicycle (flat chain length k = 0)
# ---------------------------------------------------------------------------

def unicycle_forward(s: UnicycleState) -> FlatState:
    """Flat coordinates of the unicycle: y = position, nu = y_dot = v*(cos, sin)."""
    return FlatState(np.array([[s.px, s.py]]),
                     np.array([s.v * math.cos(s.theta), s.v * math.sin(s.theta)]))


def unicycle_inverse_rate(f: FlatState, nu_dot) -> tuple[float, float]:
    """Recover (v_dot, omega) from flat coordinates and the commanded nu_dot.

    v_dot = (nu . nu_dot)/|nu|, omega = (nu_dot_y*nu_x - nu_y*nu_dot_x)/|nu|^2.
    """
    nu = f.nu
    nu_dot = np.asarray(nu_dot, dtype=float).reshape(2)
    speed_sq = float(nu[0] ** 2 + nu[1] ** 2)
    speed = math.sqrt(speed_sq)
    _check_speed(speed, "unicycle_inverse_rate")
    v_dot = (nu[0] * nu_dot[0] + nu[1] * nu_dot[1]) / speed
    omega = (nu_dot[1] * nu[0] - nu[1] * nu_dot[0]) / speed_sq
    return float(v_dot), float(omega)


def unicycle_flat_control(s: UnicycleState, r_future, alpha: float,
                          horizon: float) -> tuple[float, float]:
    """Fused unicycle NR law: (alpha/T) * diag(1, 1/v) * body(e_pred).

    ``e_pred = r(t+T) - (p + T*p_dot)``; algebraically identical to applying
    the flow in flat coordinates and mapping the rate through the inverse.
    """
    _check_speed(s.v, "unicycle_flat_control")
    r_future = np.asarray(r_future, dtype=float).reshape(2)
    ct, st = math.cos(s.theta), math.sin(s.theta)
    n1, n2 = s.v * ct, s.v * st
    e1 = r_future[0] - s.px - horizon * n1
    e2 = r_future[1] - s.py - horizon * n2
    b1, b2 = _to_body(s.theta, e1, e2)
    v_dot = alpha / horizon * b1
    omega = alpha / horizon * b2 / s.v
    return float(v_dot), float(omega)


def unicycle_predict(s: UnicycleState, horizon: float) -> np.ndarray:
    """Constant-input position prediction p + T*v*(cos theta, sin theta)."""
    return np.array([s.px + horizon * s.v * math.cos(s.theta),
                     s.py + horizon * s.v * math.sin(s.theta)])


def unicycle_direct_nr(s: UnicycleState, r_future, alpha: float,
                       horizon: float) -> tuple[float, float]:
    """NR controller on the extended inputs (theta, v): u_dot = alpha*J^-1*e_pred.

    J is the predictor Jacobian [[-T v sin, T cos], [T v cos, T sin]]; returns
    (v_dot, omega). For the unicycle the inverse map has no dependence on the
    flat output itself, so this coincides with the fused law exactly.
    """
    _check_speed(s.v, "unicycle_direct_nr")
    if not horizon > 0.0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    r_future = np.asarray(r_future, dtype=float).reshape(2)
    ct, st = math.cos(s.theta), math.sin(s.theta)
    jac = np.array([[-horizon * s.v * st, horizon * ct],
                    [horizon * s.v * ct, horizon * st]])
    err = r_future - unicycle_predict(s, horizon)
    try:
        u_dot = alpha * np.linalg.solve(jac, err)  # (theta_dot, v_dot)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"unicycle predictor Jacobian is singular: {exc}") from exc
    return float(u_dot[1]), float(u_dot[0])


def unicycle_psi(z) -> np.ndarray:
    """Endogenous forward map (px, py, theta, v) -> (y, nu)."""
    z = np.asarray(z, dtype=float).reshape(4)
    return np.array([z[0], z[1], z[3] * math.cos(z[2]), z[3] * math.sin(z[2])])


def unicycle_phi(w) -> np.ndarray:
    """Endogenous inverse map (y, nu) -> (px, py, theta, v)."""
    w = np.asarray(w, dtype=float).reshape(4)
    speed = math.hypot(w[2], w[3])
    _check_speed(speed, "unicycle_phi")
    return np.array([w[0], w[1], math.atan2(w[3], w[2]), speed])


def unicycle_maps() -> EndogenousMaps:
    return EndogenousMaps(forward=unicycle_forward, inverse_rate=unicycle_inverse_rate)


# ---------------------------------------------------------------------------
# Dynamic bicycle (flat chain length k = 1)
# ---------------------------------------------------------------------------

def bicycle_forward(s: BicycleState) -> FlatState:
    """Flat coordinates of the bicycle: y = position, y_dot = v*(cos, sin),
    nu = y_ddot = (a cos - v^2/l sin tan(delta), a sin + v^2/l cos tan(delta))."""
    _check_steering(s.delta)
    ct, st = math.cos(s.theta), math.sin(s.theta)
    tan_d = math.tan(s.delta)
    curv = s.v * s.v / s.wheelbase_l * tan_d
    return FlatState(
        np.array([[s.px, s.py], [s.v * ct, s.v * st]]),
        np.array([s.a * ct - curv * st, s.a * st + curv * ct]))


def bicycle_inverse(f: FlatState, nu_dot, wheelbase_l: float) -> tuple[float, float]:
    """Recover (a, omega_delta) from flat coordinates and the commanded nu_dot.

    a = (y_dot . nu)/|y_dot|; with q = nu_y*y_dot_x - nu_x*y_dot_y and
    q_dot built from nu_dot, omega_delta = l*v*(q_dot*v^2 - 3*q*a*v)/(v^6 + l^2 q^2).
    """
    dy = f.y_stack[1]
    nu = f.nu
    nu_dot = np.asarray(nu_dot, dtype=float).reshape(2)
    speed = math.hypot(dy[0], dy[1])
    _check_speed(speed, "bicycle_inverse")
    accel = (dy[0] * nu[0] + dy[1] * nu[1]) / speed
    q = nu[1] * dy[0] - nu[0] * dy[1]
    q_dot = nu_dot[1] * dy[0] - nu_dot[0] * dy[1]
    l = wheelbase_l
    omega_delta = l * speed * (q_dot * speed ** 2 - 3.0 * q * accel * speed) \
        / (speed ** 6 + l * l * q * q)
    return float(accel), float(omega_delta)


def bicycle_inverse_rate(f: FlatState, nu_dot, wheelbase_l: float) -> tuple[float, float]:
    """Extended-input rates (a_dot, omega_delta) for the commanded nu_dot.

    omega_delta as in ``bicycle_inverse``; the acceleration slot is
    differentiated once more: a_dot = (|nu|^2 + y_dot . nu_dot - a^2)/v.
    """
    dy = f.y_stack[1]
    nu = f.nu
    nu_dot = np.asarray(nu_dot, dtype=float).reshape(2)
    speed = math.hypot(dy[0], dy[1])
    _check_speed(speed, "bicycle_inverse_rate")
    accel, omega_delta = bicycle_inverse(f, nu_dot, wheelbase_l)
    a_dot = (nu[0] ** 2 + nu[1] ** 2 + dy[0] * nu_dot[0] + dy[1] * nu_dot[1]
             - accel * accel) / speed
    return float(a_dot), float(omega_delta)


def bicycle_predict(s: BicycleState, horizon: float) -> np.ndarray:
    """Constant-input position prediction p + T*y_dot + T^2/2*y_ddot."""
    f = bicycle_forward(s)
    return (f.y_stack[0] + horizon * f.y_stack[1] + 0.5 * horizon * horizon * f.nu)


def bicycle_flat_control(s: BicycleState, r_future, alpha: float,
                         horizon: float) -> tuple[float, float]:
    """Fused bicycle NR law returning (a_dot, omega_delta).

    a_dot       = (2a/T^2) * body(e_pred)_x + v^3 tan^2(delta)/l^2
    omega_delta = (2a/T^2) * (l cos^2(delta)/v^2) * body(e_pred)_y
                  - 3 (a/v) sin(delta) cos(delta)
    with e_pred = r(t+T) - (p + T p_dot + T^2/2 p_ddot); identical to running
    the flow in flat coordinates and mapping through the inverse rates.
    """
    _check_speed(s.v, "bicycle_flat_control")
    _check_steering(s.delta)
    r_future = np.asarray(r_future, dtype=float).reshape(2)
    l = s.wheelbase_l
    ct, st = math.cos(s.theta), math.sin(s.theta)
    tan_d = math.tan(s.delta)
    cos_d = math.cos(s.delta)
    dy1, dy2 = s.v * ct, s.v * st
    curv = s.v * s.v / l * tan_d
    nu1, nu2 = s.a * ct - curv * st, s.a * st + curv * ct
    half_t2 = 0.5 * horizon * horizon
    e1 = r_future[0] - s.px - horizon * dy1 - half_t2 * nu1
    e2 = r_future[1] - s.py - horizon * dy2 - half_t2 * nu2
    b1, b2 = _to_body(s.theta, e1, e2)
    gain = 2.0 * alpha / (horizon * horizon)
    a_dot = gain * b1 + s.v ** 3 * tan_d * tan_d / (l * l)
    omega_delta = gain * (l * cos_d * cos_d / (s.v * s.v)) * b2 \
        - 3.0 * (s.a / s.v) * math.sin(s.delta) * cos_d
    return float(a_dot), float(omega_delta)


def bicycle_direct_nr(s: BicycleState, r_future, alpha: float,
                      horizon: float) -> tuple[float, float]:
    """NR controller on the extended inputs (delta, a): u_dot = alpha*J^-1*e_pred.

    Returns (a_dot, omega_delta). Differs from the fused law exactly by the
    state-motion drift of the inverse map, which carries no gain factor.
    """
    _check_speed(s.v, "bicycle_direct_nr")
    _check_steering(s.delta)
    if not horizon > 0.0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    r_future = np.asarray(r_future, dtype=float).reshape(2)
    ct, st = math.cos(s.theta), math.sin(s.theta)
    sec_sq = 1.0 / math.cos(s.delta) ** 2
    half_t2 = 0.5 * horizon * horizon
    scale = half_t2 * s.v * s.v / s.wheelbase_l * sec_sq
    jac = np.array([[-scale * st, half_t2 * ct],
                    [scale * ct, half_t2 * st]])
    err = r_future - bicycle_predict(s, horizon)
    try:
        u_dot = alpha * np.linalg.solve(jac, err)  # (delta_dot, a_dot)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"bicycle predictor Jacobian is singular: {exc}") from exc
    return float(u_dot[1]), float(u_dot[0])


def bicycle_drift(s: BicycleState) -> tuple[float, float]:
    """State-motion drift (a_dot, omega_delta) separating fused and direct laws."""
    tan_d = math.tan(s.delta)
    return (s.v ** 3 * tan_d * tan_d / (s.wheelbase_l ** 2),
            -3.0 * (s.a / s.v) * math.sin(s.delta) * math.cos(s.delta))


def bicycle_psi(z, wheelbase_l: float) -> np.ndarray:
    """Endogenous forward map (px, py, theta, v, delta, a) -> (y, y_dot, nu)."""
    z = np.asarray(z, dtype=float).reshape(6)
    s = BicycleState(*z, wheelbase_l=wheelbase_l)
    f = bicycle_forward(s)
    return f.to_vector()


def bicycle_phi(w, wheelbase_l: float) -> np.ndarray:
    """Endogenous inverse map (y, y_dot, nu) -> (px, py, theta, v, delta, a)."""
    w = np.asarray(w, dtype=float).reshape(6)
    dy1, dy2, nu1, nu2 = w[2], w[3], w[4], w[5]
    speed = math.hypot(dy1, dy2)
    _check_speed(speed, "bicycle_phi")
    theta = math.atan2(dy2, dy1)
    q = nu2 * dy1 - nu1 * dy2
    delta = math.atan(wheelbase_l * q / speed ** 3)
    accel = (dy1 * nu1 + dy2 * nu2) / speed
    return np.array([w[0], w[1], theta, speed, delta, accel])


def bicycle_phi_inputs(ytilde, nu, wheelbase_l: float) -> np.ndarray:
    """The (delta, a) slots of the inverse map as a function of (ytilde, nu)."""
    ytilde = np.asarray(ytilde, dtype=float).reshape(4)
    nu = np.asarray(nu, dtype=float).reshape(2)
    full = bicycle_phi(np.concatenate([ytilde, nu]), wheelbase_l)
    return full[4:6]


def bicycle_maps(wheelbase_l: float = 2.0) -> EndogenousMaps:
    return EndogenousMaps(
        forward=bicycle_forward,
        inverse_rate=lambda f, nu_dot: bicycle_inverse_rate(f, nu_dot, wheelbase_l))


# ---------------------------------------------------------------------------
# Block-structure verification of the endogenous transforms
# ---------------------------------------------------------------------------

def _fd_jacobian(func, x, h: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.shape[0]):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((np.asarray(func(xp)) - np.asarray(func(xm))) / (2.0 * h))
    return np.stack(cols, axis=1)


def jacobian_block_check(model: str, state, horizon: float = 0.5,
                         h_fd: float = 1e-6) -> JacobianBlockReport:
    """Verify the block identities of the endogenous transform at a state.

    Central finite differences of the forward/inverse maps check that
    (i) the Jacobians are mutual inverses, (ii) the flat-state block has no
    input dependence, and (iii) the predictor's input sensitivity factors
    through the chain rule. The report carries the residuals; nothing raises.
    """
    if model == "unicycle":
        z = state.as_array()
        psi = unicycle_psi
        phi = unicycle_phi
        n_x, n_u = 2, 2
        gain_nu = horizon  # predictor sensitivity to nu

        def predictor(zv):
            return unicycle_predict(UnicycleState(*zv), horizon)
    elif model == "bicycle":
        z = state.as_array()
        l = state.wheelbase_l
        psi = lambda zv: bicycle_psi(zv, l)  # noqa: E731
        phi = lambda wv: bicycle_phi(wv, l)  # noqa: E731
        n_x, n_u = 4, 2
        gain_nu = 0.5 * horizon * horizon

        def predictor(zv):
            return bicycle_predict(BicycleState(*zv, wheelbase_l=l), horizon)
    else:
        raise DimensionError(f"unknown model {model!r}")

    w = psi(z)
    jac_psi = _fd_jacobian(psi, z, h_fd)
    jac_phi = _fd_jacobian(phi, w, h_fd)
    identity_residual = float(np.max(np.abs(jac_psi @ jac_phi - np.eye(len(z)))))
    # Flat-state rows must not respond to the (extended) input columns.
    output_block = jac_psi[:n_x, n_x:n_x + n_u]
    output_residual = float(np.max(np.abs(output_block)) / max(1.0, np.max(np.abs(jac_psi))))
    # Predictor chain rule: d(ghat)/du == d(ghat)/d(nu) * d(nu)/du.
    jac_pred = _fd_jacobian(predictor, z, h_fd)[:, n_x:]
    chain = gain_nu * jac_psi[n_x:, n_x:]
    chain_residual = float(np.max(np.abs(jac_pred - chain)) / max(1.0, np.max(np.abs(jac_pred))))
    return JacobianBlockReport(
        residual_inverse_identity=identity_residual,
        residual_output_input_block=output_residual,
        residual_chain_rule=chain_residual,
        h_fd=h_fd)
