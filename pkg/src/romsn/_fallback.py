"""Pure numpy implementations of the sweep kernels.

Used when the compiled extension is missing or ``ROMSN_PURE_PYTHON=1``. Each
function has the same signature and arithmetic as its compiled twin; the loops
are vectorized across ordinates (and across cells on a sweep front in 2-D).
"""

import numpy as np


def _rows(emission, idx):
    if emission.shape[0] > 1:
        return emission[idx]
    return np.broadcast_to(emission, (idx.size,) + emission.shape[1:])


def slab_sweep_dd(mu, emission, sigma_mid, dx, inflow, psi):
    I = sigma_mid.shape[0]
    hs = 0.5 * sigma_mid
    pos = np.flatnonzero(mu > 0)
    neg = np.flatnonzero(mu <= 0)
    if pos.size:
        a = mu[pos] / dx
        em = _rows(emission, pos)
        cur = np.array(inflow[pos], dtype=float)
        psi[pos, 0] = cur
        for i in range(I):
            cur = (em[:, i] + (a - hs[i]) * cur) / (a + hs[i])
            psi[pos, i + 1] = cur
    if neg.size:
        a = -mu[neg] / dx
        em = _rows(emission, neg)
        cur = np.array(inflow[neg], dtype=float)
        psi[neg, I] = cur
        for i in range(I - 1, -1, -1):
            cur = (em[:, i] + (a - hs[i]) * cur) / (a + hs[i])
            psi[neg, i] = cur


def slab_sweep_lc(mu, emission, decay, c0, c1, inflow, psi):
    I = decay.shape[1]
    pos = np.flatnonzero(mu > 0)
    neg = np.flatnonzero(mu <= 0)
    if pos.size:
        em = _rows(emission, pos)
        E, a0, a1 = decay[pos], c0[pos], c1[pos]
        cur = np.array(inflow[pos], dtype=float)
        psi[pos, 0] = cur
        for i in range(I):
            cur = cur * E[:, i] + em[:, i] * a0[:, i] + (em[:, i + 1] - em[:, i]) * a1[:, i]
            psi[pos, i + 1] = cur
    if neg.size:
        em = _rows(emission, neg)
        E, a0, a1 = decay[neg], c0[neg], c1[neg]
        cur = np.array(inflow[neg], dtype=float)
        psi[neg, I] = cur
        for i in range(I - 1, -1, -1):
            cur = cur * E[:, i] + em[:, i + 1] * a0[:, i] + (em[:, i] - em[:, i + 1]) * a1[:, i]
            psi[neg, i] = cur


def sweep_fronts(nx, ny):
    """Anti-diagonal wavefronts ``(j, i)`` in the order a positive-direction sweep visits them."""
    fronts = []
    for d in range(nx + ny - 1):
        j = np.arange(max(0, d - nx + 1), min(d, ny - 1) + 1)
        fronts.append((j, d - j))
    return fronts


def dd_sweep(c, s, w, emission, sigma, dx, dy, inflow_x, inflow_y, psi, phi, store_psi):
    L = c.shape[0]
    ny, nx = sigma.shape
    out = np.empty((L, ny, nx))
    fronts = sweep_fronts(nx, ny)
    for sx in (1, -1):
        for sy in (1, -1):
            idx = np.flatnonzero(((c > 0) == (sx > 0)) & ((s > 0) == (sy > 0)))
            if not idx.size:
                continue
            ax = (2.0 * np.abs(c[idx]) / dx)[:, None]
            ay = (2.0 * np.abs(s[idx]) / dy)[:, None]
            # flip so that every sweep in this quadrant runs toward increasing indices
            em = np.ascontiguousarray(emission[idx][:, ::sy, ::sx])
            sig = np.ascontiguousarray(sigma[::sy, ::sx])
            ex = np.empty((idx.size, ny, nx + 1))
            ey = np.empty((idx.size, ny + 1, nx))
            ex[:, :, 0] = inflow_x[idx][:, ::sy]
            ey[:, 0, :] = inflow_y[idx][:, ::sx]
            res = np.empty((idx.size, ny, nx))
            for j, i in fronts:
                px = ex[:, j, i]
                py = ey[:, j, i]
                val = (ax * px + ay * py + em[:, j, i]) / (sig[j, i] + ax + ay)
                ex[:, j, i + 1] = 2.0 * val - px
                ey[:, j + 1, i] = 2.0 * val - py
                res[:, j, i] = val
            out[idx] = res[:, ::sy, ::sx]
    for l in range(L):
        phi += w[l] * out[l]
    if store_psi:
        psi[...] = out


def linear_recurrence(decay, forcing, out):
    for p in range(decay.shape[1]):
        out[:, p + 1] = decay[:, p] * out[:, p] + forcing[:, p]
