"""Monte Carlo link simulator for downlink NOMA with imperfect SIC.

Each trial superposes the users' symbols with power-domain weights,
passes the sum through each user's ordered Rayleigh channel plus AWGN, and
runs the sequential minimum-distance SIC receiver at every user.  SIC
decision errors propagate; there is no genie correction.

Counters are plain integers so that merging partial runs is exact
component-wise addition: a run split into batches gives byte-identical
results for any worker count, because batch i always draws from seed+i.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel
from .constellation import Constellation

__all__ = [
    "SystemConfig",
    "SimStats",
    "PepEstimate",
    "simulate",
    "sic_detect",
    "superposed_signal",
    "empirical_pep",
    "empirical_detection_prob",
    "bit_error_rate",
    "sic_delta_weights",
    "stats_rows",
]

DEFAULT_BATCH_SIZE = 1_000_000
MIN_WEIGHT_TRIALS = 100_000


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one downlink NOMA system.

    alpha          power allocation coefficients, strictly descending,
                   summing to 1 (user 1 = weakest channel, most power)
    P              total transmit power
    channel        fading model; channel.num_users must equal len(alpha)
    constellation  shared symbol alphabet
    snr_grid_db    optional SNR grid for sweep recipes
    symbol_mode    "uniform_random" or "fixed"
    fixed_symbols  symbol indices per user when symbol_mode == "fixed"
    """

    alpha: tuple[float, ...]
    P: float
    channel: ChannelModel
    constellation: Constellation
    snr_grid_db: tuple[float, ...] = ()
    symbol_mode: str = "uniform_random"
    fixed_symbols: tuple[int, ...] | None = None

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("alpha must be a non-empty vector")
        if abs(a.sum() - 1.0) > 1e-12:
            raise ValueError(f"power coefficients must sum to 1, got {a.sum()!r}")
        if np.any(a <= 0):
            raise ValueError("power coefficients must be positive")
        if np.any(np.diff(a) >= 0):
            raise ValueError("power coefficients must be strictly descending")
        if self.channel.num_users != a.size:
            raise ValueError(
                f"channel has {self.channel.num_users} users, alpha has {a.size}"
            )
        if self.P <= 0:
            raise ValueError(f"total power must be positive, got {self.P}")
        if self.symbol_mode not in ("uniform_random", "fixed"):
            raise ValueError(f"unknown symbol_mode {self.symbol_mode!r}")
        if self.symbol_mode == "fixed":
            if self.fixed_symbols is None or len(self.fixed_symbols) != a.size:
                raise ValueError("fixed mode needs one symbol index per user")
            m = self.constellation.size
            if any(not 0 <= i < m for i in self.fixed_symbols):
                raise ValueError("fixed symbol index out of range")

    @property
    def num_users(self) -> int:
        return len(self.alpha)

    def noise_var_for_snr(self, snr_db: float) -> float:
        """SNR convention: snr_db = 10*log10(P / sigma_n^2)."""
        return self.P / 10.0 ** (snr_db / 10.0)


@dataclass
class SimStats:
    """Accumulated counters of one simulation run.

    detected_counts[u, a, b]  trials where user u+1 sent symbol a and the
                              full SIC detector output b (rows sum to the
                              per-symbol transmit counts)
    pairwise_counts[u, a, b]  trials where hypothesis b beat the true
                              symbol a in the binary metric comparison at
                              user u+1 (b != a; not mutually exclusive
                              across b, so rows do not sum to trials)
    delta_pattern_counts[u]   map from an encoded (own symbol, SIC stage
                              decisions) key at user u+1 to its count;
                              keyed by the user's own transmitted symbol
                              because SIC error directions correlate
                              with it through the uncancelled own signal
    """

    num_users: int
    m: int
    snr_db: float
    trials: int
    tx_counts: np.ndarray
    detected_counts: np.ndarray
    pairwise_counts: np.ndarray
    bit_errors: np.ndarray
    symbol_errors: np.ndarray
    delta_pattern_counts: list[dict[int, int]] = field(default_factory=list)

    @staticmethod
    def zeros(num_users: int, m: int, snr_db: float) -> "SimStats":
        return SimStats(
            num_users=num_users,
            m=m,
            snr_db=snr_db,
            trials=0,
            tx_counts=np.zeros((num_users, m), dtype=np.int64),
            detected_counts=np.zeros((num_users, m, m), dtype=np.int64),
            pairwise_counts=np.zeros((num_users, m, m), dtype=np.int64),
            bit_errors=np.zeros(num_users, dtype=np.int64),
            symbol_errors=np.zeros(num_users, dtype=np.int64),
            delta_pattern_counts=[{} for _ in range(num_users)],
        )

    def merge(self, other: "SimStats") -> "SimStats":
        if (self.num_users, self.m, self.snr_db) != (
            other.num_users,
            other.m,
            other.snr_db,
        ):
            raise ValueError("cannot merge stats from different configurations")
        merged = SimStats.zeros(self.num_users, self.m, self.snr_db)
        merged.trials = self.trials + other.trials
        merged.tx_counts = self.tx_counts + other.tx_counts
        merged.detected_counts = self.detected_counts + other.detected_counts
        merged.pairwise_counts = self.pairwise_counts + other.pairwise_counts
        merged.bit_errors = self.bit_errors + other.bit_errors
        merged.symbol_errors = self.symbol_errors + other.symbol_errors
        for u in range(self.num_users):
            d = dict(self.delta_pattern_counts[u])
            for code, cnt in other.delta_pattern_counts[u].items():
                d[code] = d.get(code, 0) + cnt
            merged.delta_pattern_counts[u] = d
        return merged


@dataclass(frozen=True)
class PepEstimate:
    """Empirical pairwise error rate with a 95% Wald half-width."""

    pep: float
    ci_half_width: float
    error_events: int
    conditioning_trials: int
    low_confidence: bool


def superposed_signal(cfg: SystemConfig, symbol_indices: np.ndarray) -> np.ndarray:
    """Power-weighted superposition sum_l sqrt(alpha_l P) x_l per trial.

    symbol_indices has shape (n, L); returns a complex (n,) vector.
    """
    pts = cfg.constellation.points_array()
    coeff = np.sqrt(np.asarray(cfg.alpha) * cfg.P)
    return pts[np.asarray(symbol_indices)] @ coeff


def _decision_metrics(residual, scale, pts):
    """Squared distances |residual - scale * point|^2 up to a common term.

    Dropping |residual|^2 leaves the ordering and all pairwise metric
    differences unchanged.
    """
    w = residual * np.conj(scale)
    return -2.0 * np.real(w[:, None] * np.conj(pts)[None, :]) + (
        np.abs(scale) ** 2
    )[:, None] * (np.abs(pts) ** 2)[None, :]


def _run_batch(
    cfg: SystemConfig, snr_db: float, sigma_n_sq: float, n: int, seed: int
) -> SimStats:
    rng = np.random.default_rng(seed)
    L = cfg.num_users
    pts = cfg.constellation.points_array()
    m = pts.size
    std_h = math.sqrt(cfg.channel.sigma_h_sq)
    std_n = math.sqrt(sigma_n_sq / 2.0)
    coeff = np.sqrt(np.asarray(cfg.alpha) * cfg.P)

    # Draw order is fixed (gains, symbols, noise) so a batch is a pure
    # function of (cfg, sigma_n_sq, n, seed).
    h = rng.normal(scale=std_h, size=(n, L)) + 1j * rng.normal(
        scale=std_h, size=(n, L)
    )
    order = np.argsort(np.abs(h), axis=1, kind="stable")
    h = np.take_along_axis(h, order, axis=1)
    if cfg.symbol_mode == "fixed":
        tx_idx = np.broadcast_to(
            np.asarray(cfg.fixed_symbols, dtype=np.int64), (n, L)
        ).copy()
    else:
        tx_idx = rng.integers(0, m, size=(n, L))
    noise = rng.normal(scale=std_n, size=(n, L)) + 1j * rng.normal(
        scale=std_n, size=(n, L)
    )

    s = pts[tx_idx] @ coeff
    stats = SimStats.zeros(L, m, snr_db)
    stats.trials = n
    rows = np.arange(n)

    for u in range(L):
        hu = h[:, u]
        residual = hu * s + noise[:, u]
        det = np.empty((n, u + 1), dtype=np.int64)
        for k in range(u):
            metrics = _decision_metrics(residual, coeff[k] * hu, pts)
            dk = np.argmin(metrics, axis=1)
            residual = residual - coeff[k] * hu * pts[dk]
            det[:, k] = dk
        metrics = _decision_metrics(residual, coeff[u] * hu, pts)
        du = np.argmin(metrics, axis=1)
        det[:, u] = du

        txu = tx_idx[:, u]
        stats.tx_counts[u] = np.bincount(txu, minlength=m)
        stats.detected_counts[u] = np.bincount(
            txu * m + du, minlength=m * m
        ).reshape(m, m)
        stats.symbol_errors[u] = int(np.sum(du != txu))
        stats.bit_errors[u] = int(cfg.constellation._bit_diff[txu, du].sum())

        m_true = metrics[rows, txu]
        for b in range(m):
            ev = (metrics[:, b] <= m_true) & (txu != b)
            stats.pairwise_counts[u, :, b] = np.bincount(txu[ev], minlength=m)

        # Key: own transmitted symbol in the lowest base-m digit, then one
        # base-m^2 digit per SIC stage for the (tx, detected) index pair.
        code = txu.astype(np.int64).copy()
        mult = m
        for k in range(u):
            code += (tx_idx[:, k] * m + det[:, k]) * mult
            mult *= m * m
        counts = np.bincount(code)
        nz = np.nonzero(counts)[0]
        stats.delta_pattern_counts[u] = {int(c): int(counts[c]) for c in nz}
    return stats


def simulate(
    cfg: SystemConfig,
    snr_db: float,
    trials: int,
    seed: int,
    workers: int = 1,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> SimStats:
    """Run `trials` independent superposition/SIC trials at one SNR.

    Deterministic for fixed (cfg, snr_db, trials, seed, batch_size):
    trials are split into fixed batches and batch i is seeded seed+i, so
    the result is independent of the worker count.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    sigma_n_sq = cfg.noise_var_for_snr(snr_db)
    sizes = []
    left = trials
    while left > 0:
        sizes.append(min(batch_size, left))
        left -= batch_size
    args = [(cfg, snr_db, sigma_n_sq, nb, seed + i) for i, nb in enumerate(sizes)]

    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch_star, args))
    else:
        parts = [_run_batch(*a) for a in args]

    total = parts[0]
    for p in parts[1:]:
        total = total.merge(p)
    return total


def _run_batch_star(args):
    return _run_batch(*args)


def sic_detect(r: complex, h: complex, cfg: SystemConfig, l: int):
    """Sequential SIC detection of one received sample at user l.

    Detects users 1..l-1 in power order by minimum distance against the
    power-scaled alphabet, subtracting each decision before the next
    stage, then detects user l's own symbol.  Returns the pair
    (detected_index, prior_decision_indices).
    """
    if not 1 <= l <= cfg.num_users:
        raise ValueError(f"user index {l} out of range 1..{cfg.num_users}")
    pts = cfg.constellation.points_array()
    coeff = np.sqrt(np.asarray(cfg.alpha) * cfg.P)
    residual = np.array([complex(r)])
    hv = np.array([complex(h)])
    priors = []
    for k in range(l - 1):
        metrics = _decision_metrics(residual, coeff[k] * hv, pts)
        dk = int(np.argmin(metrics[0]))
        residual = residual - coeff[k] * hv * pts[dk]
        priors.append(dk)
    metrics = _decision_metrics(residual, coeff[l - 1] * hv, pts)
    return int(np.argmin(metrics[0])), tuple(priors)


def empirical_pep(stats: SimStats, l: int, tx: int, rx: int) -> PepEstimate:
    """Pairwise error rate of the (tx -> rx) hypothesis at user l.

    Counts trials where the rx hypothesis beat the transmitted symbol in
    the binary decision metric, conditioned on tx being sent.  The 95%
    half-width is the Wald interval; with zero observed events it falls
    back to the rule-of-three upper bound 3/n so the estimate still
    carries an honest uncertainty.
    """
    if stats.trials == 0:
        raise ValueError("stats contain no trials")
    if tx == rx:
        raise ValueError("tx and rx coincide; not a pairwise error event")
    u = l - 1
    n = int(stats.tx_counts[u, tx])
    if n == 0:
        raise ValueError(f"no trials with symbol {tx} transmitted by user {l}")
    k = int(stats.pairwise_counts[u, tx, rx])
    p = k / n
    if k == 0:
        half = 3.0 / n
    else:
        half = 1.959963984540054 * math.sqrt(p * (1.0 - p) / n)
    return PepEstimate(
        pep=p,
        ci_half_width=half,
        error_events=k,
        conditioning_trials=n,
        low_confidence=k < 100,
    )


def empirical_detection_prob(stats: SimStats, l: int, tx: int, rx: int) -> float:
    """Probability that the full detector outputs rx when tx was sent."""
    u = l - 1
    n = int(stats.tx_counts[u, tx])
    if n == 0:
        raise ValueError(f"no trials with symbol {tx} transmitted by user {l}")
    return int(stats.detected_counts[u, tx, rx]) / n


def bit_error_rate(stats: SimStats, l: int, bits_per_symbol: int) -> float:
    return int(stats.bit_errors[l - 1]) / (stats.trials * bits_per_symbol)


def decode_delta_pattern(
    code: int, stages: int, constellation: Constellation
) -> tuple[int, tuple[complex, ...]]:
    """Expand an encoded key into (own symbol index, delta values)."""
    pts = constellation.points_array()
    m = constellation.size
    own = code % m
    code //= m
    deltas = []
    for _ in range(stages):
        pair = code % (m * m)
        code //= m * m
        tx, det = divmod(pair, m)
        deltas.append(complex(pts[tx] - pts[det]))
    return own, tuple(deltas)


def sic_delta_weights(
    stats: SimStats, l: int, constellation: Constellation, tx: int | None = None
):
    """Normalized weights of the prior-delta patterns observed at user l.

    With tx given, weights are conditioned on user l having transmitted
    that symbol; SIC error directions correlate strongly with the own
    symbol, so hypothesis averaging should use the table conditioned on
    the pair's transmitted symbol.  With tx=None the marginal table over
    all transmitted symbols is returned.

    Patterns that differ only in which symbol pair produced the same
    delta value are aggregated, since the error statistic depends on the
    delta alone.  Weights sum to 1.
    """
    if stats.trials < MIN_WEIGHT_TRIALS:
        raise ValueError(
            f"need at least {MIN_WEIGHT_TRIALS} trials for weight estimation, "
            f"got {stats.trials}"
        )
    u = l - 1
    table: dict[tuple[complex, ...], float] = {}
    for code, cnt in stats.delta_pattern_counts[u].items():
        own, pattern = decode_delta_pattern(code, u, constellation)
        if tx is not None and own != tx:
            continue
        table[pattern] = table.get(pattern, 0.0) + cnt
    total = sum(table.values())
    if total == 0:
        raise ValueError(f"no trials with symbol {tx} transmitted by user {l}")
    return {pat: cnt / total for pat, cnt in table.items()}


def stats_rows(stats: SimStats, bits_per_symbol: int) -> list[dict]:
    """Flatten a SimStats into CSV-ready rows.

    Columns: snr_db, user, metric, value, ci_half_width, trials.  Metrics
    are ber, ser and pep_{tx}to{rx} for every ordered symbol pair.
    """
    rows = []
    for u in range(stats.num_users):
        l = u + 1
        nbits = stats.trials * bits_per_symbol
        ber = int(stats.bit_errors[u]) / nbits
        ber_half = 1.959963984540054 * math.sqrt(max(ber * (1 - ber), 0.0) / nbits)
        rows.append(
            {
                "snr_db": stats.snr_db,
                "user": l,
                "metric": "ber",
                "value": ber,
                "ci_half_width": ber_half,
                "trials": stats.trials,
            }
        )
        ser = int(stats.symbol_errors[u]) / stats.trials
        ser_half = 1.959963984540054 * math.sqrt(
            max(ser * (1 - ser), 0.0) / stats.trials
        )
        rows.append(
            {
                "snr_db": stats.snr_db,
                "user": l,
                "metric": "ser",
                "value": ser,
                "ci_half_width": ser_half,
                "trials": stats.trials,
            }
        )
        for a in range(stats.m):
            for b in range(stats.m):
                if a == b or stats.tx_counts[u, a] == 0:
                    continue
                est = empirical_pep(stats, l, a, b)
                rows.append(
                    {
                        "snr_db": stats.snr_db,
                        "user": l,
                        "metric": f"pep_{a}to{b}",
                        "value": est.pep,
                        "ci_half_width": est.ci_half_width,
                        "trials": est.conditioning_trials,
                    }
                )
    return rows
