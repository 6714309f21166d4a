"""
Numba kernels for the secrecy outage simulator.
"""

import numpy as np
from numba import jit

# Tally slots
OUTAGE = 0
H1_EVENT = 1
H2_EVENT = 2
ZERO_SECRECY = 3
POSITIVE_SECRECY = 4
TALLY_SIZE = 5


@jit(nopython=True, nogil=True)
def tally_events(gamma_sr, gamma_rd, gamma_re, theta, threshold):
    """Count the secrecy events of one batch of SNR triples.

    Cs > 0 exactly when min(γ_SR, γ_RE) < min(γ_SR, γ_RD); the outage test
    Cs ≤ Rs is 1 + γ_eq,D ≤ Θ(1 + γ_eq,E). Outages with Cs > 0 go to H1
    when the R-D hop is the bottleneck and to H2 otherwise.
    """
    counts = np.zeros(TALLY_SIZE, dtype=np.int64)
    for i in range(gamma_sr.shape[0]):
        sr = gamma_sr[i]
        rd = gamma_rd[i]
        re = gamma_re[i]
        eq_d = min(sr, rd)
        eq_e = min(sr, re)
        if eq_e < eq_d:
            counts[POSITIVE_SECRECY] += 1
            if eq_d <= theta * eq_e + threshold:
                counts[OUTAGE] += 1
                if rd < sr:
                    counts[H1_EVENT] += 1
                else:
                    counts[H2_EVENT] += 1
        else:
            # otherwise branch: Cs = 0
            counts[ZERO_SECRECY] += 1
            counts[OUTAGE] += 1
    return counts
