# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for the simulation engine.

Accumulation order is strict left-to-right per path; this must match
``fallback.weighted_state_update`` bit for bit (no reassociation, no FMA
contraction assumptions beyond IEEE double adds/multiplies).
"""


def weighted_state_update(const double[::1] w_mu, const double[::1] w_sig,
                          const double[:, ::1] mu_vals,
                          const double[:, ::1] sd_vals,
                          Py_ssize_t j, double base, double[::1] out):
    """out[p] = (base + sum_{i<j} w_mu[i]*mu_vals[p,i]) + sum_{i<j} w_sig[i]*sd_vals[p,i]"""
    cdef Py_ssize_t p, i
    cdef Py_ssize_t n_paths = mu_vals.shape[0]
    cdef double drift, diff
    with nogil:
        for p in range(n_paths):
            drift = 0.0
            diff = 0.0
            for i in range(j):
                drift = drift + w_mu[i] * mu_vals[p, i]
                diff = diff + w_sig[i] * sd_vals[p, i]
            out[p] = (base + drift) + diff
