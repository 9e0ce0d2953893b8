"""Comparison controllers: periodic/state-triggered PID and a static Riccati gain.

All three baselines are channel-oblivious by construction: no operation in
this module accepts an instantaneous channel argument, so their decisions
are measurable with respect to state history only. Gains are tuned offline
against the static all-ones channel.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .swarm import SwarmTopology


class DareConvergenceError(RuntimeError):
    """Fixed-point Riccati iteration failed to reach the residual tolerance."""

    def __init__(self, residual: float, trace):
        self.residual = residual
        self.trace = list(trace)
        super().__init__(
            f"DARE iteration did not converge: final residual {residual:.3e} "
            f"after {len(self.trace)} iterations")


@dataclass(frozen=True)
class GareGain:
    """Solution of a discrete algebraic Riccati equation.

    p is the fixed point, gain the (k, n) feedback gain for u = -gain @ x,
    residual the equation residual at p.
    """

    p: np.ndarray
    gain: np.ndarray
    residual: float
    iterations: int


@dataclass
class PidGains:
    """Per-agent PID gain triples acting on the global error vector.

    k_p/k_i/k_d have shape (M, n_tx, dM) and already carry the negative
    feedback sign, so controllers apply them as u = K @ e directly.
    a_scale records any plant-matrix regularization used during tuning.
    """

    k_p: np.ndarray
    k_i: np.ndarray
    k_d: np.ndarray
    a_scale: float = 1.0


@dataclass
class TriggerConfig:
    """Communication triggering constants for the baseline schemes."""

    period: int
    sigma: np.ndarray          # (M,) per-agent trigger constants
    inverted: bool = False


def default_trigger_config(m_agents: int) -> TriggerConfig:
    """Period ceil(M/2) and per-agent constants sigma_m = m (1-based)."""
    return TriggerConfig(period=max(1, math.ceil(m_agents / 2)),
                         sigma=np.arange(1, m_agents + 1, dtype=float))


def periodic_trigger(t: int, period: int) -> bool:
    return t % period == 0


def state_trigger(e, e_last_trigger, sigma_m: float,
                  inverted: bool = False) -> bool:
    """Error-deviation trigger ||e - e_last||^2 <= sigma_m ||e||^2.

    The printed rule fires on *small* deviation from the last transmitted
    error; inverted=True gives the conventional event-triggering reading
    with >= instead.
    """
    e = np.asarray(e, dtype=float)
    e_last = np.asarray(e_last_trigger, dtype=float)
    lhs = float(np.sum((e - e_last) ** 2))
    rhs = sigma_m * float(np.sum(e ** 2))
    if inverted:
        return lhs >= rhs
    return lhs <= rhs


def solve_dare(a, b, q, r, max_iter: int = 10000, tol: float = 1e-8) -> GareGain:
    """Discrete algebraic Riccati equation by fixed-point iteration.

    Iterates P <- A^T P A - A^T P B (R + B^T P B)^{-1} B^T P A + Q from
    P = Q until the equation residual drops below tol, then returns the
    gain (R + B^T P B)^{-1} B^T P A. Raises DareConvergenceError with the
    residual trace when the iteration fails (typical for unstabilizable
    systems).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q = np.asarray(q, dtype=float)
    r = np.asarray(r, dtype=float)
    p = q.copy()
    trace = []
    for it in range(1, max_iter + 1):
        btp = b.T @ p
        gain = np.linalg.solve(r + btp @ b, btp @ a)
        p_next = a.T @ p @ a - a.T @ p @ b @ gain + q
        p_next = 0.5 * (p_next + p_next.T)
        if not np.all(np.isfinite(p_next)):
            raise DareConvergenceError(float("inf"), trace)
        residual = float(np.max(np.abs(p_next - p)))  # equation residual at p
        trace.append(residual)
        if residual < tol:
            return GareGain(p=p, gain=gain, residual=residual, iterations=it)
        p = p_next
    raise DareConvergenceError(trace[-1], trace)


def static_channel_input(topology: SwarmTopology) -> np.ndarray:
    """Aggregate input map under the all-ones static channel.

    Column block m is Bhat_m @ 1_{n_rx x n_tx}; shape (dM, M * n_tx).
    """
    ones = np.ones((topology.n_rx, topology.n_tx))
    cols = [topology.bhat(m) @ ones for m in range(topology.m_agents)]
    return np.hstack(cols)


def tune_pid(topology: SwarmTopology, kappa_i: float = 0.05,
             kappa_d: float = 0.1, a_scale: float = 1.0,
             max_iter: int = 10000, tol: float = 1e-8) -> PidGains:
    """Offline PID tuning from the static-channel LQR gain.

    The proportional gain is the DARE gain for (a_scale * A, B_eff, I, I)
    with negative feedback sign applied; integral and derivative gains are
    kappa_i / kappa_d multiples of it. a_scale < 1 regularizes tuning when
    the raw system is unstabilizable under the static channel.
    """
    b_eff = static_channel_input(topology)
    sol = solve_dare(a_scale * topology.a_global, b_eff,
                     np.eye(topology.global_dim),
                     np.eye(b_eff.shape[1]), max_iter=max_iter, tol=tol)
    k_p = -_split_rows(sol.gain, topology)
    return PidGains(k_p=k_p, k_i=kappa_i * k_p, k_d=kappa_d * k_p,
                    a_scale=a_scale)


def tune_gare(topology: SwarmTopology, a_scale: float = 1.0,
              max_iter: int = 10000, tol: float = 1e-8):
    """Static per-agent Riccati gains under the all-ones channel.

    Returns (gains, solution) where gains has shape (M, n_tx, dM) with the
    negative feedback sign applied.
    """
    b_eff = static_channel_input(topology)
    sol = solve_dare(a_scale * topology.a_global, b_eff,
                     np.eye(topology.global_dim),
                     np.eye(b_eff.shape[1]), max_iter=max_iter, tol=tol)
    return -_split_rows(sol.gain, topology), sol


def _split_rows(gain: np.ndarray, topology: SwarmTopology) -> np.ndarray:
    n_tx = topology.n_tx
    return np.array([gain[m * n_tx:(m + 1) * n_tx] for m in range(topology.m_agents)])


def pid_control(k_p, k_i, k_d, e, accumulator, prev_e) -> np.ndarray:
    """One PID control vector from the global error and its running sums.

    accumulator must already include the current error (sum over i <= t of
    e(i)); prev_e is the error at the previous slot, with prev_e = e at
    t = 0 so the first derivative term vanishes.
    """
    e = np.asarray(e, dtype=float)
    return k_p @ e + k_i @ np.asarray(accumulator, dtype=float) \
        + k_d @ (e - np.asarray(prev_e, dtype=float))
