"""High-SNR bounds and effective diversity estimation.

The conditional pairwise error probability Q(|h| beta / upsilon) is
bounded by exp(-gamma beta^2 / (4 |dlt|^2)) with gamma = |h|^2/sigma_n^2,
and averaging that bound over the ordered SNR density gives a closed
expression whose leading power of 1/gamma_bar is the user's diversity
order.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .pep import PepCurve

__all__ = [
    "DiversityEstimate",
    "chernoff_conditional",
    "chernoff_average",
    "pep_upper_bound",
    "effective_diversity",
]


@dataclass(frozen=True)
class DiversityEstimate:
    """Effective diversity (log-log slope) at one SNR point."""

    snr_db: float
    d_eff: float
    method: str  # "ratio_form" or "finite_difference"

    def __post_init__(self):
        if not math.isfinite(self.d_eff):
            raise ValueError(f"d_eff must be finite, got {self.d_eff}")


def chernoff_conditional(gamma: float, beta: float, delta_abs_sq: float):
    """Exponential bound exp(-gamma * beta^2 / (4 * delta_abs_sq)).

    Dominates Q(|h| beta / upsilon) for beta >= 0; for negative beta the
    Gaussian tail exceeds 1/2 and the exponential no longer bounds it.
    """
    if delta_abs_sq <= 0:
        raise ValueError(f"delta_abs_sq must be positive, got {delta_abs_sq}")
    g = np.asarray(gamma, dtype=float)
    out = np.exp(-g * beta**2 / (4.0 * delta_abs_sq))
    return out if out.ndim else float(out)


def _check_args(l: int, L: int, gamma_bar: float):
    if not 1 <= l <= L:
        raise ValueError(f"user index {l} out of range 1..{L}")
    if gamma_bar <= 0:
        raise ValueError(f"gamma_bar must be positive, got {gamma_bar}")


def chernoff_average(
    l: int, L: int, gamma_bar: float, beta: float, delta_abs_sq: float
) -> float:
    """Exact average of the exponential bound over the ordered SNR density.

    Equals A_l * sum_j C(l-1,j) (-1)^j / (z + gamma_bar*b) with
    z = j+L-l+1 and b = beta^2/(4*delta_abs_sq); each exponential term
    integrates in closed form.  Upper-bounds the true unconditional PEP
    for beta >= 0.
    """
    _check_args(l, L, gamma_bar)
    if delta_abs_sq <= 0:
        raise ValueError(f"delta_abs_sq must be positive, got {delta_abs_sq}")
    b = beta**2 / (4.0 * delta_abs_sq)
    a_l = math.factorial(L) / (math.factorial(l - 1) * math.factorial(L - l))
    total = 0.0
    for j in range(l):
        z = j + L - l + 1
        total += math.comb(l - 1, j) * (-1.0) ** j / (z + gamma_bar * b)
    return a_l * total


def pep_upper_bound(
    l: int,
    L: int,
    gamma_bar: float,
    beta: float,
    delta_abs_sq: float,
    form: str = "rederived",
) -> float:
    """High-SNR double-sum bound on the unconditional PEP.

    Both variants replace exp(-gamma/gamma_bar) by (1 - gamma/gamma_bar)
    before integrating term by term; the linearization is only meaningful
    for gamma << gamma_bar, i.e. at high average SNR.

      rederived  each term carries (4*delta_abs_sq/beta^2)^(z-k+1), which
                 is what term-by-term integration produces; use this one
                 for diversity statements
      verbatim   the same sum with the factor (4*delta_abs_sq/beta^2)
                 unexponentiated, kept for reference; dimensionally
                 inconsistent across k

    Cross-check against chernoff_average, which integrates the bound
    without the linearization.
    """
    _check_args(l, L, gamma_bar)
    if form not in ("rederived", "verbatim"):
        raise ValueError(f"unknown form {form!r}")
    if beta == 0:
        raise ValueError("beta must be nonzero for the high-SNR bound")
    if delta_abs_sq <= 0:
        raise ValueError(f"delta_abs_sq must be positive, got {delta_abs_sq}")
    inv_b = 4.0 * delta_abs_sq / beta**2
    a_l = math.factorial(L) / (math.factorial(l - 1) * math.factorial(L - l))
    total = 0.0
    for j in range(l):
        z = j + L - l + 1
        for k in range(z + 1):
            sign = (-1.0) ** (j + z + k)
            term = (
                math.comb(l - 1, j)
                * math.comb(z, k)
                * sign
                * gamma_bar ** (-z + k)
                * math.gamma(z - k + 1)
            )
            if form == "rederived":
                term *= inv_b ** (z - k + 1)
            else:
                term *= inv_b
            total += term
    return a_l / gamma_bar * total


def effective_diversity(
    curve: PepCurve, method: str = "finite_difference"
) -> list[DiversityEstimate]:
    """Effective diversity estimates along a PEP curve.

    ratio_form         -log(pep) / log(gamma_bar) at each point, with
                       gamma_bar the linear-scale average SNR
    finite_difference  -dlog(pep)/dlog(gamma_bar) between consecutive
                       points, reported at the right endpoint

    Points with pep = 0 (or gamma_bar = 1, where the ratio form is
    undefined) are skipped with a warning.
    """
    if method not in ("ratio_form", "finite_difference"):
        raise ValueError(f"unknown method {method!r}")
    snr = curve.snr_db()
    pep = curve.pep()
    keep = pep > 0
    if np.any(~keep):
        warnings.warn(
            f"skipping {int(np.sum(~keep))} zero-PEP point(s) in diversity estimate"
        )
    snr, pep = snr[keep], pep[keep]
    if snr.size < 2:
        raise ValueError("need at least two positive-PEP points")
    gbar = 10.0 ** (snr / 10.0)
    log_g = np.log(gbar)
    log_p = np.log(pep)
    out = []
    if method == "ratio_form":
        for s, lg, lp in zip(snr, log_g, log_p):
            if lg == 0.0:
                warnings.warn("skipping gamma_bar = 1 point in ratio-form estimate")
                continue
            out.append(DiversityEstimate(float(s), float(-lp / lg), "ratio_form"))
    else:
        slopes = -np.diff(log_p) / np.diff(log_g)
        for s, d in zip(snr[1:], slopes):
            out.append(DiversityEstimate(float(s), float(d), "finite_difference"))
    return out
