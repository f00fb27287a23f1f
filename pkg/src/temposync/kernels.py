"""Hot loops, each in a numba flavour and a vectorised numpy flavour.

The public dispatchers take ``backend=None`` (environment default, see
:mod:`temposync._jit`), ``"numba"`` or ``"numpy"``. Both flavours share a
signature and are tested against each other.
"""

from __future__ import annotations

from itertools import combinations
from math import comb

import numpy as np

from ._jit import njit, resolve_backend

MAX_MASK_NODES = 62


# -- batched bitmask propagation ---------------------------------------------


def compile_network(tn):
    """Arrays consumed by :func:`propagate_batch` (0-based node indices).

    Returns ``(order, pred, is_root)`` each shaped ``(T, N)``: a topological
    order per snapshot, the in-neighbour bitmask of every node, and the root flags.
    """
    from .graph import topological_order

    N, T = tn.num_nodes, tn.T
    if N > MAX_MASK_NODES:
        raise ValueError(f"bitmask kernels support at most {MAX_MASK_NODES} nodes, got {N}")
    order = np.empty((T, N), dtype=np.int64)
    pred = np.zeros((T, N), dtype=np.int64)
    is_root = np.zeros((T, N), dtype=np.bool_)
    for k, g in enumerate(tn.snapshots):
        order[k] = np.array(topological_order(g)) - 1
        for v in g.nodes:
            m = 0
            for u in g.in_neighbors[v]:
                m |= 1 << (u - 1)
            pred[k, v - 1] = m
            is_root[k, v - 1] = m == 0
    return order, pred, is_root


@njit(cache=True)
def _propagate_batch_jit(masks, order, pred, is_root):
    T, N = order.shape
    out = np.empty_like(masks)
    one = np.int64(1)
    for b in range(masks.size):
        s = masks[b]
        for k in range(T):
            new = np.int64(0)
            for t in range(N):
                v = order[k, t]
                bit = one << v
                if is_root[k, v]:
                    new |= s & bit
                elif (new & pred[k, v]) == pred[k, v]:
                    new |= bit
            s = new
        out[b] = s
    return out


def _propagate_batch_numpy(masks, order, pred, is_root):
    T, N = order.shape
    s = masks.astype(np.int64, copy=True)
    for k in range(T):
        new = np.zeros_like(s)
        for v in order[k]:
            bit = np.int64(1) << np.int64(v)
            if is_root[k, v]:
                new |= s & bit
            else:
                p = pred[k, v]
                new |= np.where((new & p) == p, bit, np.int64(0))
        s = new
    return s


def propagate_batch(masks, order, pred, is_root, backend=None):
    """Final synchronised mask for every initial mask in ``masks``."""
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    if resolve_backend(backend) == "numba":
        return _propagate_batch_jit(masks, order, pred, is_root)
    return _propagate_batch_numpy(masks, order, pred, is_root)


def popcount(masks) -> np.ndarray:
    return np.bitwise_count(np.asarray(masks, dtype=np.int64)).astype(np.int64)


def count_subsets(n: int, p: int) -> int:
    return sum(comb(n, r) for r in range(min(p, n) + 1))


def subset_masks(n: int, p: int) -> np.ndarray:
    """All masks of at most ``p`` of ``n`` bits, by size then lexicographically."""
    out = np.empty(count_subsets(n, p), dtype=np.int64)
    idx = 0
    for r in range(min(p, n) + 1):
        for c in combinations(range(n), r):
            m = 0
            for v in c:
                m |= 1 << v
            out[idx] = m
            idx += 1
    return out


# -- network RK4 --------------------------------------------------------------
#
# State layout: Y[0] is the reference trajectory, Y[1:] the N node states.
# ``nbr_ptr``/``nbr_idx`` is the CSR list of in-neighbours (0-based node ids)
# of the active snapshot. ``ctrl`` flags nodes receiving the pinning input
# with gain ``kappa``; coupling uses gain ``c``.


@njit(cache=False)
def _rhs_jit(Y, field, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, out):
    N = Y.shape[0] - 1
    n = Y.shape[1]
    field(Y[0], out[0])
    v = np.empty(n)
    for i in range(N):
        xi = Y[i + 1]
        oi = out[i + 1]
        field(xi, oi)
        lo = nbr_ptr[i]
        hi = nbr_ptr[i + 1]
        if c != 0.0 and hi > lo:
            deg = hi - lo
            for d in range(n):
                v[d] = deg * xi[d]
            for e in range(lo, hi):
                xj = Y[nbr_idx[e] + 1]
                for d in range(n):
                    v[d] -= xj[d]
            nrm = 0.0
            for d in range(n):
                nrm += v[d] * v[d]
            nrm = np.sqrt(nrm)
            if nrm > eps:
                for d in range(n):
                    oi[d] -= c * v[d] / nrm
        if ctrl[i]:
            nrm = 0.0
            for d in range(n):
                w = xi[d] - Y[0, d]
                nrm += w * w
            nrm = np.sqrt(nrm)
            if nrm > eps:
                for d in range(n):
                    oi[d] -= kappa * (xi[d] - Y[0, d]) / nrm


@njit(cache=False)
def _integrate_jit(Y, field, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, h, nsteps, decim, rec):
    """Advance ``Y`` in place; store every ``decim``-th state (and the last)
    into ``rec``. Returns the number of steps taken before a non-finite state
    (``nsteps`` on success)."""
    k1 = np.empty_like(Y)
    k2 = np.empty_like(Y)
    k3 = np.empty_like(Y)
    k4 = np.empty_like(Y)
    tmp = np.empty_like(Y)
    r = 0
    for step in range(nsteps):
        _rhs_jit(Y, field, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, k1)
        for a in range(Y.shape[0]):
            for d in range(Y.shape[1]):
                tmp[a, d] = Y[a, d] + 0.5 * h * k1[a, d]
        _rhs_jit(tmp, field, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, k2)
        for a in range(Y.shape[0]):
            for d in range(Y.shape[1]):
                tmp[a, d] = Y[a, d] + 0.5 * h * k2[a, d]
        _rhs_jit(tmp, field, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, k3)
        for a in range(Y.shape[0]):
            for d in range(Y.shape[1]):
                tmp[a, d] = Y[a, d] + h * k3[a, d]
        _rhs_jit(tmp, field, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, k4)
        finite = True
        for a in range(Y.shape[0]):
            for d in range(Y.shape[1]):
                Y[a, d] += h / 6.0 * (k1[a, d] + 2.0 * k2[a, d] + 2.0 * k3[a, d] + k4[a, d])
                if not np.isfinite(Y[a, d]):
                    finite = False
        if not finite:
            return step
        if (step + 1) % decim == 0 or step + 1 == nsteps:
            rec[r] = Y
            r += 1
    return nsteps


def _rhs_numpy(Y, batch_field, L, deg_mask, c, kappa, ctrl, eps):
    out = batch_field(Y)
    X = Y[1:]
    if c != 0.0 and deg_mask.any():
        v = L @ X
        nrm = np.sqrt(np.einsum("ij,ij->i", v, v))
        live = nrm > eps
        out[1:][live] -= c * v[live] / nrm[live, None]
    if ctrl.any():
        e = X - Y[0]
        nrm = np.sqrt(np.einsum("ij,ij->i", e, e))
        live = ctrl & (nrm > eps)
        out[1:][live] -= kappa * e[live] / nrm[live, None]
    return out


def _integrate_numpy(Y, batch_field, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, h, nsteps, decim, rec):
    N = Y.shape[0] - 1
    L = np.zeros((N, N))
    for i in range(N):
        for e in range(nbr_ptr[i], nbr_ptr[i + 1]):
            L[i, nbr_idx[e]] -= 1.0
            L[i, i] += 1.0
    deg_mask = np.diff(nbr_ptr) > 0
    args = (batch_field, L, deg_mask, c, kappa, ctrl, eps)
    r = 0
    for step in range(nsteps):
        k1 = _rhs_numpy(Y, *args)
        k2 = _rhs_numpy(Y + 0.5 * h * k1, *args)
        k3 = _rhs_numpy(Y + 0.5 * h * k2, *args)
        k4 = _rhs_numpy(Y + h * k3, *args)
        Y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(Y)):
            return step
        if (step + 1) % decim == 0 or step + 1 == nsteps:
            rec[r] = Y
            r += 1
    return nsteps


def num_records(nsteps: int, decim: int) -> int:
    return nsteps // decim + (1 if nsteps % decim else 0)


def integrate(Y, model, nbr_ptr, nbr_idx, c, kappa, ctrl, eps, h, nsteps, decim, backend=None):
    """Fixed-step classical RK4 over one constant-topology segment.

    Returns ``(steps_done, records)``; ``Y`` is advanced in place.
    """
    rec = np.empty((num_records(nsteps, decim),) + Y.shape)
    nbr_ptr = np.ascontiguousarray(nbr_ptr, dtype=np.int64)
    nbr_idx = np.ascontiguousarray(nbr_idx, dtype=np.int64)
    ctrl = np.ascontiguousarray(ctrl, dtype=np.bool_)
    if resolve_backend(backend) == "numba" and model.jit_field is not None:
        done = _integrate_jit(
            Y, model.jit_field, nbr_ptr, nbr_idx, float(c), float(kappa), ctrl,
            float(eps), float(h), int(nsteps), int(decim), rec,
        )
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            done = _integrate_numpy(
                Y, model.batch_field, nbr_ptr, nbr_idx, float(c), float(kappa), ctrl,
                float(eps), float(h), int(nsteps), int(decim), rec,
            )
    return int(done), rec
