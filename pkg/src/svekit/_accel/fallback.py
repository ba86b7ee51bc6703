"""Pure-numpy implementation of the hot inner loop.

Summation must be sequential left-to-right per path so that results are
bit-identical to the compiled core (and to prefix-sum based references).
``np.add.accumulate`` guarantees that order; plain ``np.sum`` does not
(pairwise summation).
"""

import numpy as np


def weighted_state_update(w_mu, w_sig, mu_vals, sd_vals, j, base, out):
    """out[p] = (base + sum_i w_mu[i]*mu_vals[p,i]) + sum_i w_sig[i]*sd_vals[p,i]

    Both sums run over i < j in strict left-to-right order.
    """
    if j == 0:
        out[:] = base
        return
    drift = np.add.accumulate(mu_vals[:, :j] * w_mu[:j], axis=1)[:, -1]
    diff = np.add.accumulate(sd_vals[:, :j] * w_sig[:j], axis=1)[:, -1]
    np.add((base + drift), diff, out=out)
