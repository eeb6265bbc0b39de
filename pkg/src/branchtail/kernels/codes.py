"""Integer tags and the flat model layout consumed by the kernels."""
from typing import NamedTuple

import numpy as np

# scalar distributions: params row = [kind, p1, p2, p3, p4, p5]
CONST = 0        # value
PARETO = 1       # alpha, xm, b
PARETO_INT = 2   # alpha, xm, b (floor of the continuous draw)
EXPONENTIAL = 3  # rate
POISSON = 4      # mean
BERNOULLI = 5    # p
EMPIRICAL = 6    # pool offset, length
DIST_WIDTH = 6

# joint models, one per type
INDEPENDENT = 0
MG1 = 1
LINKED = 2
ATOMIC = 3
TABLE = 4

# inversion below this Poisson mean, PTRS above
POISSON_INVERSION_MAX = 10.0


class PackedModel(NamedTuple):
    """K-type model flattened into arrays.

    ``qd[t]`` holds the Q law (the radial law for ATOMIC), ``nd[t, k]`` the
    law of the type-k offspring count (or noise for LINKED), ``coef[t, k]`` the
    Poisson rate (MG1) or slope (LINKED).  ATOMIC atoms live in ``pool`` as
    rows ``[cumulative weight, theta_0, ..., theta_K]`` starting at
    ``aoff[t]``; TABLE rows ``[q, n_1, ..., n_K]`` start at ``toff[t]``.
    """

    K: int
    jkind: np.ndarray
    qd: np.ndarray
    nd: np.ndarray
    coef: np.ndarray
    aoff: np.ndarray
    an: np.ndarray
    toff: np.ndarray
    tn: np.ndarray
    pool: np.ndarray


def empty_packed(K):
    return PackedModel(
        K=int(K),
        jkind=np.zeros(K, dtype=np.int64),
        qd=np.zeros((K, DIST_WIDTH)),
        nd=np.zeros((K, K, DIST_WIDTH)),
        coef=np.zeros((K, K)),
        aoff=np.zeros(K, dtype=np.int64),
        an=np.zeros(K, dtype=np.int64),
        toff=np.zeros(K, dtype=np.int64),
        tn=np.zeros(K, dtype=np.int64),
        pool=np.zeros(1),
    )
