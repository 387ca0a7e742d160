"""Integrator-chain flat dynamics and their Newton-Raphson flow controllers.

State is the stack of flat-output derivatives 0..k plus the chain input
(derivative k+1). Controllers return the rate of that input; ``step_trivial``
advances the chain one forward-Euler step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, NumericError
from .stability import TrivialFlatSpec


@dataclass(frozen=True)
class FlatState:
    """Derivative stack ``y_stack[i] = y^(i)`` (rows 0..k, each length m) and input ``nu``."""

    y_stack: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        stack = np.atleast_2d(np.asarray(self.y_stack, dtype=float))
        nu = np.asarray(self.nu, dtype=float).reshape(-1)
        if stack.shape[1] != nu.shape[0]:
            raise DimensionError(
                f"y_stack rows have length {stack.shape[1]} but nu has length {nu.shape[0]}")
        if not (np.all(np.isfinite(stack)) and np.all(np.isfinite(nu))):
            raise NumericError("flat state entries must be finite")
        object.__setattr__(self, "y_stack", stack)
        object.__setattr__(self, "nu", nu)

    @property
    def k(self) -> int:
        return self.y_stack.shape[0] - 1

    @property
    def m(self) -> int:
        return self.y_stack.shape[1]

    @classmethod
    def zeros(cls, m: int, k: int) -> "FlatState":
        return cls(np.zeros((k + 1, m)), np.zeros(m))

    @classmethod
    def from_vector(cls, vec, m: int, k: int) -> "FlatState":
        vec = np.asarray(vec, dtype=float).reshape(-1)
        if vec.shape[0] != m * (k + 2):
            raise DimensionError(
                f"expected {m * (k + 2)} entries for m={m}, k={k}, got {vec.shape[0]}")
        return cls(vec[: m * (k + 1)].reshape(k + 1, m), vec[m * (k + 1):])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.y_stack.reshape(-1), self.nu])


@dataclass(frozen=True)
class PredictionError:
    """Future-reference tracking error r(t+T) - yhat(t+T) at a given horizon."""

    e: np.ndarray
    horizon_T: float

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float).reshape(-1)
        if not self.horizon_T > 0.0:
            raise DomainError(f"horizon must be positive, got {self.horizon_T}")
        object.__setattr__(self, "e", e)


def _check_dims(state: FlatState, spec: TrivialFlatSpec):
    if state.m != spec.m or state.k != spec.k:
        raise DimensionError(
            f"state has (m={state.m}, k={state.k}) but spec expects (m={spec.m}, k={spec.k})")


def trivial_predict(state: FlatState, spec: TrivialFlatSpec) -> np.ndarray:
    """Taylor-step output prediction sum_{i=0..k+1} T^i/i! * y^(i) (with y^(k+1) = nu)."""
    _check_dims(state, spec)
    horizon = spec.T
    acc = np.zeros(state.m)
    term = 1.0
    for i in range(state.k + 1):
        acc += term * state.y_stack[i]
        term *= horizon / (i + 1)
    acc += term * state.nu
    return acc


def nr_flat_rate(state: FlatState, r_future: np.ndarray, spec: TrivialFlatSpec) -> np.ndarray:
    """NR flow input rate alpha * (k+1)!/T^(k+1) * (r(t+T) - yhat(t+T)).

    The constant gain is the inverse of the chain's predictor sensitivity to
    the input, so this is Newton's method run as a flow on the predicted error.
    """
    _check_dims(state, spec)
    r_future = np.asarray(r_future, dtype=float).reshape(state.m)
    gain = spec.alpha * math.factorial(spec.k + 1) / spec.T ** (spec.k + 1)
    return gain * (r_future - trivial_predict(state, spec))


def _predictor_drift(state: FlatState, horizon: float) -> np.ndarray:
    # d/dt of the prediction due to state motion: sum_{i=0..k-1} T^i/i! y^(i+1) + T^k/k! nu.
    acc = np.zeros(state.m)
    term = 1.0
    for i in range(state.k):
        acc += term * state.y_stack[i + 1]
        term *= horizon / (i + 1)
    acc += term * state.nu
    return acc


def modified_flat_rate(state: FlatState, r_future: np.ndarray, spec: TrivialFlatSpec) -> np.ndarray:
    """Drift-compensated variant whose prediction error decays exactly at rate alpha.

    Subtracts the predictor's state-motion drift before applying the gain, so
    for a constant reference the squared error is an exact Lyapunov function
    with decay rate 2*alpha.
    """
    _check_dims(state, spec)
    r_future = np.asarray(r_future, dtype=float).reshape(state.m)
    err = r_future - trivial_predict(state, spec)
    gain = math.factorial(spec.k + 1) / spec.T ** (spec.k + 1)
    return gain * (spec.alpha * err - _predictor_drift(state, spec.T))


def step_trivial(state: FlatState, nu_dot: np.ndarray, dt: float) -> FlatState:
    """One forward-Euler step of the chain: y^(i) += dt*y^(i+1), nu += dt*nu_dot."""
    if not dt > 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    nu_dot = np.asarray(nu_dot, dtype=float).reshape(state.m)
    stack = state.y_stack.copy()
    stack[:-1] += dt * state.y_stack[1:]
    stack[-1] += dt * state.nu
    return FlatState(stack, state.nu + dt * nu_dot)
