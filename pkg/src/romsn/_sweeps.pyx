# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transport sweeps. Signatures mirror :mod:`romsn._fallback`."""

import numpy as np

from libc.math cimport fabs


def slab_sweep_dd(const double[:] mu, const double[:, :] emission, const double[:] sigma_mid,
                  double dx, const double[:] inflow, double[:, :] psi):
    cdef Py_ssize_t L = mu.shape[0]
    cdef Py_ssize_t I = sigma_mid.shape[0]
    cdef Py_ssize_t l, i
    cdef double a, hs
    with nogil:
        for l in range(L):
            if mu[l] > 0:
                a = mu[l] / dx
                psi[l, 0] = inflow[l]
                for i in range(I):
                    hs = 0.5 * sigma_mid[i]
                    psi[l, i + 1] = (emission[l, i] + (a - hs) * psi[l, i]) / (a + hs)
            else:
                a = -mu[l] / dx
                psi[l, I] = inflow[l]
                for i in range(I - 1, -1, -1):
                    hs = 0.5 * sigma_mid[i]
                    psi[l, i] = (emission[l, i] + (a - hs) * psi[l, i + 1]) / (a + hs)


def slab_sweep_lc(const double[:] mu, const double[:, :] emission, const double[:, :] decay,
                  const double[:, :] c0, const double[:, :] c1, const double[:] inflow,
                  double[:, :] psi):
    cdef Py_ssize_t L = mu.shape[0]
    cdef Py_ssize_t I = decay.shape[1]
    cdef Py_ssize_t l, i
    with nogil:
        for l in range(L):
            if mu[l] > 0:
                psi[l, 0] = inflow[l]
                for i in range(I):
                    psi[l, i + 1] = (psi[l, i] * decay[l, i] + emission[l, i] * c0[l, i]
                                     + (emission[l, i + 1] - emission[l, i]) * c1[l, i])
            else:
                psi[l, I] = inflow[l]
                for i in range(I - 1, -1, -1):
                    psi[l, i] = (psi[l, i + 1] * decay[l, i] + emission[l, i + 1] * c0[l, i]
                                 + (emission[l, i] - emission[l, i + 1]) * c1[l, i])


def dd_sweep(const double[:] c, const double[:] s, const double[:] w,
             const double[:, :, :] emission, const double[:, :] sigma,
             double dx, double dy,
             const double[:, :] inflow_x, const double[:, :] inflow_y,
             double[:, :, :] psi, double[:, :] phi, bint store_psi):
    cdef Py_ssize_t L = c.shape[0]
    cdef Py_ssize_t ny = sigma.shape[0]
    cdef Py_ssize_t nx = sigma.shape[1]
    cdef Py_ssize_t l, ii, jj, i, j
    cdef double ax, ay, val, px
    cdef double[:] edge = np.empty(nx)
    with nogil:
        for l in range(L):
            ax = 2.0 * fabs(c[l]) / dx
            ay = 2.0 * fabs(s[l]) / dy
            for i in range(nx):
                edge[i] = inflow_y[l, i]
            for jj in range(ny):
                j = jj if s[l] > 0 else ny - 1 - jj
                px = inflow_x[l, j]
                for ii in range(nx):
                    i = ii if c[l] > 0 else nx - 1 - ii
                    val = (ax * px + ay * edge[i] + emission[l, j, i]) / (sigma[j, i] + ax + ay)
                    px = 2.0 * val - px
                    edge[i] = 2.0 * val - edge[i]
                    if store_psi:
                        psi[l, j, i] = val
                    phi[j, i] += w[l] * val


def linear_recurrence(const double[:, :] decay, const double[:, :] forcing, double[:, :] out):
    cdef Py_ssize_t K = decay.shape[0]
    cdef Py_ssize_t P = decay.shape[1]
    cdef Py_ssize_t k, p
    with nogil:
        for k in range(K):
            for p in range(P):
                out[k, p + 1] = decay[k, p] * out[k, p] + forcing[k, p]
