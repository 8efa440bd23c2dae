"""The N-body flow dz_k/dt = (1/N) sum_l K(z_k, z_l), integrated with fixed-step RK4.

States are numpy arrays of shape ``(N, d)``. Every routine also accepts a
batch of independent systems with shape ``(..., N, d)``; the batch axes are
carried through untouched, so integrating a batch gives the same numbers as
integrating each system on its own.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalBlowUpError
from .kernels import require_vlasov


@dataclass(frozen=True)
class FlowParams:
    t_final: float = 1.0
    dt: float | None = None
    method: str = "rk4"

    def step_for(self, kernel):
        if self.dt is not None:
            if not self.dt > 0:
                raise ValueError("dt must be positive")
            return float(self.dt)
        return default_dt(kernel)

    def with_t(self, t_final):
        return FlowParams(t_final=t_final, dt=self.dt, method=self.method)


def default_dt(kernel):
    return min(1e-3, 0.05 / max(kernel.lipschitz, 1.0))


def _check_state(kernel, state):
    state = np.asarray(state, dtype=float)
    if state.ndim < 2 or state.shape[-1] != kernel.dim:
        raise DimensionError(f"state shape {state.shape} incompatible with kernel dimension {kernel.dim}")
    if state.shape[-2] < 1:
        raise ValueError("need at least one particle")
    return state


def nbody_rhs(kernel, state, weights=None):
    """Velocities (1/N) sum_l K(z_k, z_l); with ``weights``, sum_l w_l K(z_k, z_l)."""
    state = _check_state(kernel, state)
    return kernel.field(state, weights)


def _rk4_step(kernel, z, h, weights):
    k1 = kernel.field(z, weights)
    k2 = kernel.field(z + (0.5 * h) * k1, weights)
    k3 = kernel.field(z + (0.5 * h) * k2, weights)
    k4 = kernel.field(z + h * k3, weights)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_schedule(t_final, dt):
    """Signed step sizes reaching ``t_final``: full steps, then one shortened step if needed."""
    t_final = float(t_final)
    if t_final == 0.0:
        return []
    sign = 1.0 if t_final > 0 else -1.0
    span = abs(t_final)
    ratio = span / dt
    n = round(ratio)
    if n >= 1 and abs(ratio - n) <= 1e-12 * max(1.0, ratio):
        return [sign * span / n] * n
    n = math.floor(ratio)
    steps = [sign * dt] * n
    steps.append(sign * (span - n * dt))
    return steps


def _blowup_sample(z):
    bad = ~np.isfinite(z)
    if z.ndim <= 2:
        return None
    flat = bad.reshape(-1, *z.shape[-2:]).any(axis=(1, 2))
    return int(np.flatnonzero(flat)[0])


def integrate_flow(kernel, initial, params, weights=None, record_every=None):
    """Approximate T^N_t applied to ``initial`` at ``t = params.t_final``.

    With ``record_every=k`` also returns the times and states after every
    k-th step (and the initial and final states) as ``(final, times, states)``.
    Negative ``t_final`` integrates backward.
    """
    z = _check_state(kernel, initial).copy()
    if params.method.lower() != "rk4":
        raise ValueError(f"unsupported method {params.method!r}")
    steps = step_schedule(params.t_final, params.step_for(kernel))
    times, states = [0.0], [z.copy()]
    t = 0.0
    for i, h in enumerate(steps, start=1):
        # overflow is reported below as NumericalBlowUpError
        with np.errstate(over="ignore", invalid="ignore"):
            z = _rk4_step(kernel, z, h, weights)
        if not np.isfinite(z).all():
            raise NumericalBlowUpError(i, _blowup_sample(z))
        t += h
        if record_every and (i % record_every == 0 or i == len(steps)):
            times.append(t if i < len(steps) else float(params.t_final))
            states.append(z.copy())
    if record_every:
        return z, np.array(times), np.stack(states)
    return z


def energy(kernel, state):
    """Kinetic plus pair energy (1/2) sum |xi_k|^2 + (1/(2N)) sum_{k,l} V(x_k - x_l).

    The 1/(2N) prefactor makes the N-body ODE the Hamiltonian flow of this
    function.
    """
    require_vlasov(kernel)
    state = _check_state(kernel, state)
    x, xi = kernel.split(state)
    n = state.shape[-2]
    kinetic = 0.5 * np.sum(xi * xi, axis=(-2, -1))
    pair = kernel.potential(x[..., :, None, :] - x[..., None, :, :])
    return kinetic + np.sum(pair, axis=(-2, -1)) / (2.0 * n)


def flow_jacobian_fd(kernel, initial, t, h=None, dt=None):
    """Central-difference Jacobian of T^N_t at ``initial``.

    Returns ``a`` with shape ``(N, N, d, d)``: ``a[l, k]`` is the d x d block
    d z_l(t) / d z_k(0). Column (k, j) uses the step
    ``h * (1 + |z_k|)`` (default h = 1e-5); all 2Nd perturbed systems are
    integrated together as one batch. A batch of configurations with shape
    ``(B, N, d)`` gives Jacobians of shape ``(B, N, N, d, d)``.
    """
    z0 = _check_state(kernel, initial)
    if z0.ndim > 3:
        raise DimensionError("flow_jacobian_fd takes one configuration or a flat batch")
    single = z0.ndim == 2
    if single:
        z0 = z0[None]
    b, n, d = z0.shape
    h = 1e-5 if h is None else float(h)
    if not h > 0:
        raise ValueError("h must be positive")
    steps = h * (1.0 + np.linalg.norm(z0, axis=2))  # (B, N)
    batch = np.repeat(z0[:, None], 2 * n * d, axis=1).reshape(b, 2, n, d, n, d)
    for k in range(n):
        for j in range(d):
            batch[:, 0, k, j, k, j] += steps[:, k]
            batch[:, 1, k, j, k, j] -= steps[:, k]
    params = FlowParams(t_final=t, dt=dt)
    out = integrate_flow(kernel, batch.reshape(b * 2 * n * d, n, d), params).reshape(b, 2, n, d, n, d)
    # out[b, ., k, j, l, i] -> a[b, l, k, i, j]
    diff = (out[:, 0] - out[:, 1]) / (2.0 * steps[:, :, None, None, None])
    a = np.transpose(diff, (0, 3, 1, 4, 2))
    return a[0] if single else a


def block_norms(a):
    """Spectral norms of the d x d blocks of a Jacobian from :func:`flow_jacobian_fd`."""
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


def barycenter(state, weights=None):
    state = np.asarray(state, dtype=float)
    if weights is None:
        return state.mean(axis=-2)
    return np.sum(state * weights[..., None], axis=-2)


def empirical_moment(state, r):
    """(1/N) sum_k |z_k|^r."""
    return np.mean(np.linalg.norm(state, axis=-1) ** r, axis=-1)


def write_trajectory_csv(path, times, states):
    """Dump a recorded trajectory as rows ``t, particle_index, z_1..z_d``."""
    states = np.asarray(states)
    d = states.shape[-1]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["t", "particle_index"] + [f"z_{i + 1}" for i in range(d)])
        for t, snap in zip(times, states):
            for k, z in enumerate(snap):
                out.writerow([repr(float(t)), k] + [repr(float(v)) for v in z])


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = np.array([[float(v) for v in r] for r in rows[1:]])
    times = np.unique(body[:, 0])
    n = int(body[:, 1].max()) + 1
    return times, body[:, 2:].reshape(len(times), n, -1)
