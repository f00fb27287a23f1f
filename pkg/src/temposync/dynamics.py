"""Continuous-time network simulation with normalised (sign-type) coupling.

Node ``i`` follows ``dx_i/dt = f(x_i) - c * g_i(X)`` where ``g_i`` is the
unit vector along ``sum_j L_ij x_j`` for the active snapshot's Laplacian.
Pinned nodes either start on the reference (``ideal``) or are driven to it
by ``kappa * u`` with ``u = -(x - s)/||x - s||`` during a pre-phase
(``controlled``). Both discontinuous terms switch off inside a dead zone of
radius ``dead_zone_eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from ._jit import njit
from .graph import TemporalNetwork, laplacian, propagation_depth


class DynamicsError(RuntimeError):
    pass


class StepTooLarge(DynamicsError, ValueError):
    pass


class DegenerateBox(DynamicsError, ValueError):
    pass


class NonFiniteState(DynamicsError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


# -- models -------------------------------------------------------------------


@dataclass(frozen=True)
class OscillatorModel:
    """Node dynamics.

    ``vector_field`` maps one state to its derivative. ``batch_field`` maps a
    stack of states ``(m, n)`` to derivatives. ``jit_field``, when present, is
    a numba function ``(x, out) -> None`` used by the compiled integrator.
    """

    name: str
    state_dim: int
    vector_field: Callable[[np.ndarray], np.ndarray]
    batch_field: Callable[[np.ndarray], np.ndarray] | None = None
    jit_field: Callable | None = None

    def __post_init__(self):
        if self.batch_field is None:
            f = self.vector_field
            object.__setattr__(self, "batch_field", lambda X: np.array([f(x) for x in X]))

    def __call__(self, x):
        return self.vector_field(np.asarray(x, dtype=float))


def vdp_field(state) -> np.ndarray:
    p, q = state
    return np.array([q, (1.0 - p * p) * q - p])


def _vdp_batch(X):
    p = X[:, 0]
    q = X[:, 1]
    return np.column_stack((q, (1.0 - p * p) * q - p))


@njit(cache=True)
def _vdp_jit(x, out):
    out[0] = x[1]
    out[1] = (1.0 - x[0] * x[0]) * x[1] - x[0]


VAN_DER_POL = OscillatorModel("vdp", 2, vdp_field, _vdp_batch, _vdp_jit)


def linear_model(A, name="linear") -> OscillatorModel:
    A = np.array(A, dtype=float)
    return OscillatorModel(name, A.shape[0], lambda x: A @ x, lambda X: X @ A.T)


def constant_model(c0, name="constant") -> OscillatorModel:
    c0 = np.array(c0, dtype=float)
    return OscillatorModel(name, c0.size, lambda x: c0.copy(), lambda X: np.tile(c0, (X.shape[0], 1)))


MODELS = {"vdp": VAN_DER_POL}


# -- the two discontinuous terms ----------------------------------------------


def coupling_term(i: int, X, L, eps: float) -> np.ndarray:
    """Normalised coupling ``v/||v||`` with ``v = sum_j L[i, j] x_j`` (1-based ``i``).

    ``X`` is ``(N, n)``. Returns zeros when ``||v|| <= eps``.
    """
    X = np.asarray(X, dtype=float)
    v = np.asarray(L)[i - 1] @ X
    nrm = np.linalg.norm(v)
    if nrm > eps:
        return v / nrm
    return np.zeros_like(v)


def pinning_input(x, s_ref, eps: float) -> np.ndarray:
    """Unit vector from ``x`` towards ``s_ref``; zero inside the dead zone."""
    e = np.asarray(x, dtype=float) - np.asarray(s_ref, dtype=float)
    nrm = np.linalg.norm(e)
    if nrm > eps:
        return -e / nrm
    return np.zeros_like(e)


# -- coupling-strength guideline ------------------------------------------------


@dataclass(frozen=True)
class QuadBound:
    """One-sided Lipschitz bound ``(x-y)^T (f(x)-f(y)) <= (x-y)^T (delta - omega I) (x-y)``.

    ``lambda_max_q`` is the largest eigenvalue of ``delta - omega I``.
    ``margin`` is the safety factor applied by :meth:`guarded`.
    """

    delta: np.ndarray
    omega: float
    lambda_max_q: float
    jacobian_estimate: float = math.nan
    pair_estimate: float = math.nan
    margin: float = 1.1

    def __post_init__(self):
        d = np.asarray(self.delta, dtype=float)
        if not np.allclose(d, d.T, atol=1e-12, rtol=0):
            raise ValueError("delta must be symmetric")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")
        lam = float(np.linalg.eigvalsh(d - self.omega * np.eye(d.shape[0]))[-1])
        if abs(lam - self.lambda_max_q) > 1e-9 * max(1.0, abs(lam)):
            raise ValueError(f"lambda_max_q={self.lambda_max_q} inconsistent with delta/omega ({lam})")

    @property
    def guarded(self) -> float:
        """``lambda_max_q`` inflated by the safety margin (for positive values)."""
        lam = self.lambda_max_q
        return lam * self.margin if lam > 0 else lam


def _box_array(box):
    box = np.asarray(box, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2:
        raise ValueError("box must be a sequence of (low, high) pairs")
    if np.any(box[:, 1] - box[:, 0] <= 0):
        raise DegenerateBox(f"box has a zero-width interval: {box.tolist()}")
    return box


def numerical_jacobian(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    n = x.size
    J = np.empty((n, n))
    for k in range(n):
        dx = np.zeros(n)
        dx[k] = h * max(1.0, abs(x[k]))
        J[:, k] = (f(x + dx) - f(x - dx)) / (2 * dx[k])
    return J


def estimate_quad_bound(model: OscillatorModel, box, samples: int = 2000, seed=0) -> QuadBound:
    """Estimate the smallest ``lam`` with ``(x-y)^T (f(x)-f(y)) <= lam ||x-y||^2`` on ``box``.

    Two estimates are taken: the largest eigenvalue of the symmetrised
    finite-difference Jacobian over sampled points (plus the box corners), and
    the largest Rayleigh-type quotient over sampled point pairs. The bound
    is their maximum; it is returned as ``delta = lam * I``, ``omega = 0``.
    """
    box = _box_array(box)
    n = box.shape[0]
    rng = np.random.default_rng(seed)
    lo, hi = box[:, 0], box[:, 1]
    pts = lo + (hi - lo) * rng.random((samples, n))
    corners = np.array(np.meshgrid(*box, indexing="ij")).reshape(n, -1).T
    f = model.vector_field

    jac = -np.inf
    for x in np.vstack([pts, corners]):
        J = numerical_jacobian(f, x)
        jac = max(jac, float(np.linalg.eigvalsh(0.5 * (J + J.T))[-1]))

    ys = lo + (hi - lo) * rng.random((samples, n))
    fx = model.batch_field(pts)
    fy = model.batch_field(ys)
    d = pts - ys
    dd = np.einsum("ij,ij->i", d, d)
    ok = dd > 1e-12
    pair = float(np.max(np.einsum("ij,ij->i", d, fx - fy)[ok] / dd[ok]))

    lam = max(jac, pair)
    if abs(lam) < 1e-9:
        lam = 0.0
    return QuadBound(lam * np.eye(n), 0.0, lam, jac, pair)


def min_coupling(qb, e0_bound: float, theta: float) -> float:
    """Coupling strength sufficient to null an error of ``e0_bound`` within ``theta``.

    ``qb`` is a :class:`QuadBound` or a bare ``lambda_max_q``. For
    non-positive ``lambda_max_q`` the exponential bound degenerates; the
    returned value is then ``e0_bound / theta`` (constant-rate descent).
    """
    lam = qb.lambda_max_q if isinstance(qb, QuadBound) else float(qb)
    if theta <= 0:
        raise ValueError("theta must be positive")
    if e0_bound < 0:
        raise ValueError("e0_bound must be non-negative")
    if lam <= 0:
        return e0_bound / theta
    return lam * e0_bound / (-math.expm1(-lam * theta))


def controlled_gain(model: OscillatorModel, x0, ref0, pins, pre_phase: float = 1.0, factor: float = 1.5) -> float:
    """Pinning gain ``factor * lam * e0`` for the controlled pre-phase.

    ``lam`` is estimated on the bounding box of the initial states and the
    reference (padded by 1) and ``e0`` is the largest initial pinned error.
    The gain is raised to ``2 * e0 / pre_phase`` if needed so the descent
    finishes inside the pre-phase.
    """
    x0 = np.asarray(x0, dtype=float)
    ref0 = np.asarray(ref0, dtype=float)
    idx = np.array(sorted(pins), dtype=np.int64) - 1
    if idx.size == 0:
        return 1.0
    e0 = float(np.max(np.linalg.norm(x0[idx] - ref0, axis=1)))
    pts = np.vstack([x0, ref0[None]])
    box = np.column_stack([pts.min(axis=0) - 1.0, pts.max(axis=0) + 1.0])
    lam = estimate_quad_bound(model, box, samples=500).lambda_max_q
    return max(factor * lam * e0, 2.0 * e0 / pre_phase, 1e-3)


def theta_budget(tn: TemporalNetwork) -> float:
    """Per-hop time allowance: ``tau`` over the deepest snapshot (depth at least 1)."""
    return tn.tau / max(max(propagation_depth(g), 1) for g in tn.snapshots)


# -- simulation ---------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``step_h=None`` picks ``min(tau / 1000, sync_tol / (10 * max(c, kappa)))``:
    a fixed-step scheme applied to the sign-type coupling chatters with an
    amplitude of about ``c * h``, which must stay well below ``sync_tol``.
    """

    coupling_c: float = 225.0
    pin_gain: float = 1.0
    tau: float = 1.0
    step_h: float | None = None
    dead_zone_eps: float = 1e-6
    sync_tol: float = 1e-2
    pin_mode: str = "ideal"  # "ideal" | "controlled"
    pre_phase: float = 1.0
    decimation: int = 100

    def resolved_step(self) -> float:
        if self.step_h is not None:
            return float(self.step_h)
        gain = max(self.coupling_c, self.pin_gain if self.pin_mode == "controlled" else 0.0, 1e-12)
        return min(self.tau / 1000.0, self.sync_tol / (10.0 * gain))

    def check(self) -> None:
        h = self.resolved_step()
        if not h > 0:
            raise StepTooLarge(f"step must be positive, got {h}")
        if h > self.tau / 100.0:
            raise StepTooLarge(f"step {h} exceeds tau/100 = {self.tau / 100.0}")
        if self.coupling_c < 0:
            raise ValueError("coupling_c must be non-negative")
        if not self.pin_gain > 0:
            raise ValueError("pin_gain must be positive")
        if not 0 < self.dead_zone_eps < self.sync_tol:
            raise ValueError("need 0 < dead_zone_eps < sync_tol")
        if self.pin_mode not in ("ideal", "controlled"):
            raise ValueError(f"unknown pin_mode {self.pin_mode!r}")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")


@dataclass(frozen=True)
class SimRun:
    times: np.ndarray  # (R,)
    reference: np.ndarray  # (R, n)
    states: np.ndarray  # (R, N, n)
    error_norms: np.ndarray  # (R, N)
    boundary_times: np.ndarray  # (T+1,) = k * tau
    boundary_errors: np.ndarray  # (T+1, N) errors at k * tau
    sync_tol: float
    pins: frozenset = field(default_factory=frozenset)
    completed: bool = True

    @property
    def num_nodes(self) -> int:
        return self.error_norms.shape[1]

    @property
    def final_errors(self) -> np.ndarray:
        return self.error_norms[-1]

    def synced_at(self, k: int) -> frozenset[int]:
        """Nodes whose error at ``k * tau`` is below ``sync_tol``."""
        return frozenset(int(i) + 1 for i in np.flatnonzero(self.boundary_errors[k] < self.sync_tol))

    @property
    def sync_times(self) -> list[float | None]:
        """Per node, the first recorded time after which the error stays below ``sync_tol``."""
        out = []
        below = self.error_norms < self.sync_tol
        for i in range(self.num_nodes):
            col = below[:, i]
            if not col[-1]:
                out.append(None)
                continue
            bad = np.flatnonzero(~col)
            out.append(float(self.times[0] if bad.size == 0 else self.times[bad[-1] + 1]))
        return out

    def lyapunov(self) -> np.ndarray:
        """``0.5 * ||e_i||^2`` per record and node."""
        return 0.5 * self.error_norms**2

    def to_csv(self, path_or_buf, decimation: int = 1) -> None:
        """Columns ``t, s_1..s_n, x_1_1..x_N_n, err_1..err_N``."""
        n = self.reference.shape[1]
        N = self.num_nodes
        header = (
            ["t"]
            + [f"s_{d}" for d in range(1, n + 1)]
            + [f"x_{i}_{d}" for i in range(1, N + 1) for d in range(1, n + 1)]
            + [f"err_{i}" for i in range(1, N + 1)]
        )
        idx = np.arange(0, self.times.size, decimation)
        if idx[-1] != self.times.size - 1:
            idx = np.append(idx, self.times.size - 1)
        table = np.column_stack(
            [
                self.times[idx],
                self.reference[idx],
                self.states[idx].reshape(idx.size, N * n),
                self.error_norms[idx],
            ]
        )
        close = False
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            path_or_buf = open(path_or_buf, "w", newline="")
            close = True
        try:
            path_or_buf.write(",".join(header) + "\n")
            np.savetxt(path_or_buf, table, delimiter=",", fmt="%.12g")
        finally:
            if close:
                path_or_buf.close()


def read_trajectory_csv(path_or_buf) -> tuple[list[str], np.ndarray]:
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf) as fh:
            text = fh.read()
    lines = text.splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:] if ln], dtype=float)
    return header, data.reshape(-1, len(header))


def limit_cycle_point(model: OscillatorModel = VAN_DER_POL, start=(2.0, 0.0), duration=100.0, h=1e-3):
    """State reached after integrating the bare model from ``start``."""
    Y = np.array([start], dtype=float)
    steps = int(round(duration / h))
    _, _ = kernels.integrate(
        Y, model, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64), 0.0, 0.0,
        np.zeros(0, dtype=bool), 1e-6, h, steps, steps,
    )
    return Y[0].copy()


VDP5_INITIAL_STATES = np.array([[-2.0, 0.0], [-2.0, 0.0], [-3.0, -3.0], [3.0, 0.0], [0.0, 0.0]])


def _csr(g):
    ptr = [0]
    idx = []
    for v in g.nodes:
        idx.extend(u - 1 for u in g.in_neighbors[v])
        ptr.append(len(idx))
    return np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)


def simulate(
    tn: TemporalNetwork,
    pins,
    model: OscillatorModel,
    x0,
    ref0,
    cfg: SimConfig = SimConfig(),
    backend=None,
) -> SimRun:
    """Integrate the reference and the network over ``[0, T * tau]``.

    Snapshot ``k`` (1-based) is active on ``[(k-1) tau, k tau)``. In
    controlled mode a pre-phase of ``cfg.pre_phase`` precedes it, during which
    nodes are uncoupled and only pinned nodes receive input.
    """
    cfg.check()
    if abs(cfg.tau - tn.tau) > 1e-12 * max(1.0, tn.tau):
        tn = TemporalNetwork(tn.num_nodes, tn.snapshots, cfg.tau)
    N, T = tn.num_nodes, tn.T
    pins = frozenset(pins)
    if not pins <= frozenset(tn.nodes):
        raise ValueError(f"pins {sorted(pins)} not all in 1..{N}")
    x0 = np.array(x0, dtype=float).reshape(N, -1)
    n = x0.shape[1]
    if n != model.state_dim:
        raise ValueError(f"state dimension {n} does not match model ({model.state_dim})")
    ref0 = np.asarray(ref0, dtype=float).reshape(n)

    Y = np.empty((N + 1, n))
    Y[0] = ref0
    Y[1:] = x0
    pin_idx = np.array(sorted(pins), dtype=np.int64) - 1
    if cfg.pin_mode == "ideal":
        Y[1 + pin_idx] = ref0

    h_target = cfg.resolved_step()
    steps = max(1, int(math.ceil(cfg.tau / h_target - 1e-9)))
    h = cfg.tau / steps
    decim = cfg.decimation

    seg_times = []
    seg_states = []
    boundary = []
    fail_at = []

    def run_segment(t0, nsteps, ptr, idx, c, kappa, ctrl):
        done, rec = kernels.integrate(
            Y, model, ptr, idx, c, kappa, ctrl, cfg.dead_zone_eps, h, nsteps, decim, backend
        )
        nrec = done // decim if done < nsteps else rec.shape[0]
        step_ids = np.arange(1, nsteps + 1)
        rec_steps = step_ids[(step_ids % decim == 0) | (step_ids == nsteps)]
        seg_times.append(t0 + rec_steps[:nrec] * h)
        seg_states.append(rec[:nrec])
        if done < nsteps:
            fail_at.append(t0 + (done + 1) * h)
        return done == nsteps

    empty_ptr = np.zeros(N + 1, dtype=np.int64)
    empty_idx = np.zeros(0, dtype=np.int64)
    no_ctrl = np.zeros(N, dtype=bool)
    t_start = 0.0
    ok = True

    if cfg.pin_mode == "controlled" and cfg.pre_phase > 0:
        t_start = -cfg.pre_phase
        ctrl = np.zeros(N, dtype=bool)
        ctrl[pin_idx] = True
        pre_steps = max(1, int(math.ceil(cfg.pre_phase / h - 1e-9)))
        h_pre = cfg.pre_phase / pre_steps
        seg_times.append(np.array([t_start]))
        seg_states.append(Y[None].copy())
        h_saved, h = h, h_pre
        ok = run_segment(t_start, pre_steps, empty_ptr, empty_idx, 0.0, cfg.pin_gain, ctrl)
        h = h_saved
        seg_times[-1][-1] = 0.0 if ok else seg_times[-1][-1]
    else:
        seg_times.append(np.array([0.0]))
        seg_states.append(Y[None].copy())

    if ok:
        boundary.append(Y.copy())
        for k, g in enumerate(tn.snapshots):
            ptr, idx = _csr(g)
            ok = run_segment(k * cfg.tau, steps, ptr, idx, cfg.coupling_c, 0.0, no_ctrl)
            if not ok:
                break
            seg_times[-1][-1] = (k + 1) * cfg.tau
            boundary.append(Y.copy())

    times = np.concatenate(seg_times)
    states = np.concatenate(seg_states)
    ref = states[:, 0, :]
    xs = states[:, 1:, :]
    with np.errstate(over="ignore"):
        err = np.linalg.norm(xs - ref[:, None, :], axis=2)
        b = np.array(boundary) if boundary else np.empty((0, N + 1, n))
        berr = np.linalg.norm(b[:, 1:, :] - b[:, :1, :], axis=2)
    run = SimRun(
        times, ref, xs, err,
        cfg.tau * np.arange(len(boundary)), berr, cfg.sync_tol, pins, ok,
    )
    if not ok:
        raise NonFiniteState(f"state became non-finite at t={fail_at[0]:.6g}", run)
    return run


def vdp5_setup(pins=(1, 2), c=225.0, tau=1.0, **cfg_kwargs):
    """Network, initial states, reference point and config for the benchmark run."""
    from .graph import vdp5_network

    tn = vdp5_network(tau)
    cfg = SimConfig(coupling_c=c, tau=tau, **cfg_kwargs)
    return tn, set(pins), VDP5_INITIAL_STATES.copy(), limit_cycle_point(), cfg
