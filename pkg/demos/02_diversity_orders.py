"""Effective diversity of each user from its error probability curve.

The l-th weakest user rides the l-th order statistic of the channel
magnitudes, so its high-SNR error slope approaches l.  This script
builds quadrature PEP curves, estimates the slope two ways, and shows
the exponential upper bound next to the exact curve.
"""

import numpy as np

from noma_pep import (
    ChannelModel,
    PepCurve,
    PepPoint,
    average_pep,
    chernoff_average,
    effective_diversity,
    pep_upper_bound,
    qpsk_constellation,
)

ALPHA = (0.7, 0.2, 0.1)
QPSK = qpsk_constellation(1.0)
SNRS = [20.0, 25.0, 30.0, 35.0, 40.0]
PAIRS = [(a, b) for a in range(4) for b in range(4) if a != b]

channel = ChannelModel(num_users=3, sigma_h_sq=0.5)

print("Finite-difference and ratio-form effective diversity")
for user in (1, 2, 3):
    peps = []
    for snr in SNRS:
        model = channel.with_noise(10 ** (-snr / 10))
        peps.append(float(np.mean([
            average_pep(user, 3, a, b, ALPHA, 1.0, model, QPSK)
            for a, b in PAIRS
        ])))
    curve = PepCurve(user=user, points=tuple(
        PepPoint(s, p, "quadrature") for s, p in zip(SNRS, peps)))
    fd = effective_diversity(curve, "finite_difference")
    ratio = effective_diversity(curve, "ratio_form")
    print(f"user {user}: pep(40dB) = {peps[-1]:.3e}")
    print(f"  finite difference: "
          + "  ".join(f"{e.snr_db:.0f}dB:{e.d_eff:.3f}" for e in fd))
    print(f"  ratio form:        "
          + "  ".join(f"{e.snr_db:.0f}dB:{e.d_eff:.3f}" for e in ratio))

print()
print("High-SNR bound vs exact exponential average (user 3, beta from")
print("the strongest user's own signal, adjacent pair)")
beta = float(np.sqrt(ALPHA[2])) * 2.0
dsq = 2.0
for snr in (20.0, 30.0, 40.0):
    gbar = 10 ** (snr / 10)
    print(f"  {snr:.0f} dB: double-sum bound "
          f"{pep_upper_bound(3, 3, gbar, beta, dsq):.4e}   exact average "
          f"{chernoff_average(3, 3, gbar, beta, dsq):.4e}")
