"""Command-line front end: curve generation, simulation, optimization.

Subcommands
    pep        analytic pairwise error probability curves (quadrature)
    simulate   Monte Carlo counters as CSV
    diversity  effective diversity tables from quadrature curves
    bound      high-SNR bound values (re-derived and verbatim forms)
    optimize   constrained power-allocation grid search
    fig2       canned 3-user analytic-vs-simulated PEP recipe
    fig3       canned 3-user diversity recipe
    fig4       canned 2-user power sweep recipe

Every run writes CSV files plus a manifest.json recording the command
line, the resolved configuration, the seed and the output list, which is
enough to reproduce the CSV bodies byte-identically.

Conventions: snr_db means 10*log10(P / sigma_n^2); the default channel
has sigma_h_sq = 0.5 so that E[|h|^2] = 1 and the average SNR equals
P / sigma_n^2.  The fig4 recipe pins sigma_h_sq = 1.0, which reproduces
the reference two-user feasibility window at 30 dB.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 infeasible optimization.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotic import chernoff_average, effective_diversity, pep_upper_bound
from .channel import ChannelModel
from .constellation import qpsk_constellation
from .optimize import OptimizationProblem, solve
from .pep import (
    EnumerationCapError,
    NumericalError,
    PepCurve,
    PepPoint,
    average_pep,
)
from .simulate import (
    SystemConfig,
    empirical_pep,
    sic_delta_weights,
    simulate,
    stats_rows,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_INFEASIBLE = 4

FIG2_ALPHA = (0.7, 0.2, 0.1)
FIG2_SNR_GRID = tuple(float(s) for s in range(0, 45, 5))
DESIGNATED_PAIR = (0, 1)  # adjacent Gray pair used for per-user curves


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run's CSV bodies byte-exactly."""

    command_line: list[str]
    config: dict
    seed: int | None
    tool_version: str
    outputs: list[str]
    duration_seconds: float


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def parse_config_file(path: str) -> dict:
    """Flat `key = value` per line; blank lines and # comments ignored."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def parse_snr_list(text: str) -> list[float]:
    """Accept '0,5,10' or 'start:stop:step' (stop inclusive)."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValueError(f"bad SNR range {text!r}, expected start:stop:step")
        start, stop, step = parts
        grid = np.arange(start, stop + step / 2, step)
        return [float(s) for s in grid]
    return [float(p) for p in text.split(",")]


def parse_alpha(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


def parse_deltas(text: str) -> tuple[complex, ...]:
    """Comma-separated complex literals, e.g. '1.414+0j,0j'."""
    return tuple(complex(p) for p in text.split(","))


class _Resolver:
    """Flag value if given, else config-file value, else default."""

    def __init__(self, args):
        self.args = args
        self.file_cfg = (
            parse_config_file(args.config) if getattr(args, "config", None) else {}
        )
        self.resolved: dict = {}

    def get(self, key: str, default, cast):
        flag = getattr(self.args, key, None)
        if flag is not None:
            value = flag if not isinstance(flag, str) else cast(flag)
        elif key in self.file_cfg:
            value = cast(self.file_cfg[key])
        else:
            value = default
        self.resolved[key] = value
        return value


def _default_alpha(num_users: int) -> tuple[float, ...]:
    if num_users == 1:
        return (1.0,)
    if num_users == 2:
        return (0.8, 0.2)
    if num_users == 3:
        return FIG2_ALPHA
    # Descending geometric weights, normalized.
    w = np.array([2.0 ** (num_users - i) for i in range(num_users)])
    return tuple(w / w.sum())


def _system(res: _Resolver, default_users=3, default_alpha=None,
            default_sigma=0.5, symbol_mode="uniform_random"):
    users = res.get("users", default_users, int)
    alpha = res.get(
        "alpha", default_alpha or _default_alpha(users), parse_alpha
    )
    if len(alpha) != users:
        raise ValueError(f"--alpha has {len(alpha)} entries for {users} users")
    power = res.get("power", 1.0, float)
    sigma = res.get("sigma_h_sq", default_sigma, float)
    channel = ChannelModel(num_users=users, sigma_h_sq=sigma, noise_var=1.0)
    cfg = SystemConfig(
        alpha=tuple(alpha),
        P=power,
        channel=channel,
        constellation=qpsk_constellation(power),
        symbol_mode=symbol_mode,
    )
    return cfg


def _weights_for(cfg, snr_db, trials, seed):
    """Per (user, transmitted symbol) SIC residual weight tables."""
    stats = simulate(cfg, snr_db, trials, seed)
    m = cfg.constellation.size
    return {
        (l, tx): sic_delta_weights(stats, l, cfg.constellation, tx=tx)
        for l in range(1, cfg.num_users + 1)
        for tx in range(m)
    }


def _analytic_pep(cfg, l, tx, rx, snr_db, sic_mode, weights=None,
                  prior_deltas=None):
    model = cfg.channel.with_noise(cfg.noise_var_for_snr(snr_db))
    dw = weights[(l, tx)] if weights else None
    pd = prior_deltas[: l - 1] if prior_deltas is not None else None
    return average_pep(
        l, cfg.num_users, tx, rx, cfg.alpha, cfg.P, model, cfg.constellation,
        sic_mode=sic_mode, delta_weights=dw, prior_deltas=pd,
    )


# ---------------------------------------------------------------- subcommands


def cmd_pep(args, res: _Resolver, out: Path) -> list[str]:
    cfg = _system(res)
    snrs = res.get("snr_db", [10.0], parse_snr_list)
    sic_mode = res.get("sic_mode", "perfect", str)
    seed = res.get("seed", 1, int)
    trials = res.get("trials", 200_000, int)
    deltas = res.get("prior_deltas", None, parse_deltas)
    if sic_mode == "pattern":
        if deltas is None or len(deltas) < cfg.num_users - 1:
            raise ValueError(
                "pattern mode needs --prior-deltas with at least "
                f"{cfg.num_users - 1} complex values"
            )
    m = cfg.constellation.size
    rows = []
    for snr in snrs:
        weights = (
            _weights_for(cfg, snr, trials, seed) if sic_mode == "weighted" else None
        )
        for l in range(1, cfg.num_users + 1):
            for tx in range(m):
                for rx in range(m):
                    if tx == rx:
                        continue
                    pep = _analytic_pep(cfg, l, tx, rx, snr, sic_mode,
                                        weights, deltas)
                    rows.append([snr, l, tx, rx, pep, "quadrature"])
    write_csv(
        out / "pep.csv",
        ["snr_db", "user", "tx", "rx", "pep", "method"],
        rows,
    )
    return ["pep.csv"]


def cmd_simulate(args, res: _Resolver, out: Path) -> list[str]:
    cfg = _system(res)
    snrs = res.get("snr_db", [10.0], parse_snr_list)
    trials = res.get("trials", 1_000_000, int)
    seed = res.get("seed", 1, int)
    workers = res.get("workers", 1, int)
    bits = cfg.constellation.bits_per_symbol
    rows = []
    for snr in snrs:
        stats = simulate(cfg, snr, trials, seed, workers=workers)
        for r in stats_rows(stats, bits):
            rows.append(
                [r["snr_db"], r["user"], r["metric"], r["value"],
                 r["ci_half_width"], r["trials"]]
            )
    write_csv(
        out / "simulate.csv",
        ["snr_db", "user", "metric", "value", "ci_half_width", "trials"],
        rows,
    )
    return ["simulate.csv"]


def _pair_averaged_curves(cfg, snrs, sic_mode="perfect"):
    """Per-user quadrature PEP averaged over all ordered symbol pairs."""
    m = cfg.constellation.size
    pairs = [(a, b) for a in range(m) for b in range(m) if a != b]
    curves = {}
    for l in range(1, cfg.num_users + 1):
        points = []
        for snr in snrs:
            pep = float(
                np.mean(
                    [_analytic_pep(cfg, l, a, b, snr, sic_mode) for a, b in pairs]
                )
            )
            points.append(PepPoint(snr_db=snr, pep=pep, method="quadrature"))
        curves[l] = PepCurve(user=l, points=tuple(points))
    return curves


def cmd_diversity(args, res: _Resolver, out: Path) -> list[str]:
    cfg = _system(res)
    snrs = res.get("snr_db", list(FIG2_SNR_GRID), parse_snr_list)
    curves = _pair_averaged_curves(cfg, snrs)
    rows = []
    for l, curve in curves.items():
        ratio = {e.snr_db: e.d_eff for e in effective_diversity(curve, "ratio_form")}
        fd = {
            e.snr_db: e.d_eff
            for e in effective_diversity(curve, "finite_difference")
        }
        for p in curve.points:
            rows.append(
                [p.snr_db, l, p.pep, ratio.get(p.snr_db, float("nan")),
                 fd.get(p.snr_db, float("nan"))]
            )
    write_csv(
        out / "diversity.csv",
        ["snr_db", "user", "pep", "d_eff_ratio", "d_eff_finite_diff"],
        rows,
    )
    return ["diversity.csv"]


def cmd_bound(args, res: _Resolver, out: Path) -> list[str]:
    cfg = _system(res)
    snrs = res.get("snr_db", list(FIG2_SNR_GRID), parse_snr_list)
    tx, rx = DESIGNATED_PAIR
    pts = cfg.constellation.points_array()
    delta_sq = abs(pts[tx] - pts[rx]) ** 2
    rows = []
    for snr in snrs:
        # average instantaneous SNR E[|h|^2]/sigma_n^2 with
        # sigma_n^2 = P/10^(snr/10)
        gamma_bar = 2.0 * cfg.channel.sigma_h_sq * 10.0 ** (snr / 10.0) / cfg.P
        for l in range(1, cfg.num_users + 1):
            beta = float(np.sqrt(cfg.alpha[l - 1] * cfg.P)) * delta_sq
            rows.append(
                [snr, l, "rederived",
                 pep_upper_bound(l, cfg.num_users, gamma_bar, beta, delta_sq)]
            )
            rows.append(
                [snr, l, "verbatim",
                 pep_upper_bound(l, cfg.num_users, gamma_bar, beta, delta_sq,
                                 form="verbatim")]
            )
            rows.append(
                [snr, l, "exact_average",
                 chernoff_average(l, cfg.num_users, gamma_bar, beta, delta_sq)]
            )
    write_csv(out / "bound.csv", ["snr_db", "user", "form", "value"], rows)
    return ["bound.csv"]


def _optimize_common(res: _Resolver, out: Path, prefix: str,
                     default_sigma=0.5):
    cfg = _system(res, default_users=2, default_sigma=default_sigma)
    snr = res.get("snr_db_single", 30.0, float)
    p_th = res.get("pth", 1e-3, float)
    grid_step = res.get("grid_step", 1e-3, float)
    sic_mode = res.get("sic_mode", "weighted", str)
    weights_trials = res.get("weights_trials", 1_000_000, int)
    seed = res.get("seed", 20_000, int)
    deltas = res.get("prior_deltas", None, parse_deltas)
    if sic_mode == "pattern" and (
        deltas is None or len(deltas) < cfg.num_users - 1
    ):
        raise ValueError(
            "pattern mode needs --prior-deltas with at least "
            f"{cfg.num_users - 1} complex values"
        )
    problem = OptimizationProblem(
        cfg=cfg,
        snr_db=snr,
        p_th=p_th,
        grid_step=grid_step,
        sic_mode=sic_mode,
        prior_deltas=deltas,
        weights_trials=weights_trials,
        weights_seed=seed,
    )
    result = solve(problem)
    L = cfg.num_users
    header = (
        [f"alpha_{i + 1}" for i in range(L)]
        + ["psi"]
        + [f"pep_user_{i + 1}" for i in range(L)]
        + ["feasible"]
    )
    rows = [
        list(e.alpha) + [e.psi] + list(e.pep_per_user) + [e.feasible]
        for e in result.sweep
    ]
    write_csv(out / f"{prefix}_sweep.csv", header, rows)
    summary_rows = []
    if result.infeasible:
        summary_rows.append(["infeasible", ""] + [""] * L)
    else:
        summary_rows.append(
            ["minimizer", result.best_objective] + list(result.best_alpha)
        )
        feas = result.feasible_set
        summary_rows.append(["window_low", "", feas[-1].alpha[0]] + [""] * (L - 1))
        summary_rows.append(["window_high", "", feas[0].alpha[0]] + [""] * (L - 1))
    write_csv(
        out / f"{prefix}_summary.csv",
        ["record", "psi"] + [f"alpha_{i + 1}" for i in range(L)],
        summary_rows,
    )
    files = [f"{prefix}_sweep.csv", f"{prefix}_summary.csv"]
    return files, (EXIT_INFEASIBLE if result.infeasible else EXIT_OK)


def cmd_optimize(args, res: _Resolver, out: Path):
    return _optimize_common(res, out, "optimize")


def cmd_fig2(args, res: _Resolver, out: Path) -> list[str]:
    cfg = _system(res, default_users=3, default_alpha=FIG2_ALPHA)
    snrs = res.get("snr_db", list(FIG2_SNR_GRID), parse_snr_list)
    trials = res.get("trials", 1_000_000, int)
    seed = res.get("seed", 7, int)
    workers = res.get("workers", 1, int)
    tx, rx = DESIGNATED_PAIR
    per_user_rows = {l: [] for l in range(1, cfg.num_users + 1)}
    for snr in snrs:
        stats = simulate(cfg, snr, trials, seed, workers=workers)
        weights = {
            (l, tx): sic_delta_weights(stats, l, cfg.constellation, tx=tx)
            for l in range(1, cfg.num_users + 1)
        }
        for l in range(1, cfg.num_users + 1):
            analytic = _analytic_pep(cfg, l, tx, rx, snr, "weighted", weights)
            emp = empirical_pep(stats, l, tx, rx)
            per_user_rows[l].append(
                [snr, analytic, emp.pep, emp.ci_half_width,
                 emp.conditioning_trials]
            )
    files = []
    for l, rows in per_user_rows.items():
        name = f"fig2_user{l}.csv"
        write_csv(
            out / name,
            ["snr_db", "pep_analytic", "pep_simulated", "ci_half_width", "trials"],
            rows,
        )
        files.append(name)
    return files


def cmd_fig3(args, res: _Resolver, out: Path) -> list[str]:
    cfg = _system(res, default_users=3, default_alpha=FIG2_ALPHA)
    snrs = res.get("snr_db", list(FIG2_SNR_GRID), parse_snr_list)
    curves = _pair_averaged_curves(cfg, snrs)
    rows = []
    for l, curve in curves.items():
        ratio = {e.snr_db: e.d_eff for e in effective_diversity(curve, "ratio_form")}
        fd = {
            e.snr_db: e.d_eff
            for e in effective_diversity(curve, "finite_difference")
        }
        for p in curve.points:
            rows.append(
                [p.snr_db, l, p.pep, ratio.get(p.snr_db, float("nan")),
                 fd.get(p.snr_db, float("nan"))]
            )
    write_csv(
        out / "fig3_diversity.csv",
        ["snr_db", "user", "pep", "d_eff_ratio", "d_eff_finite_diff"],
        rows,
    )
    return ["fig3_diversity.csv"]


def cmd_fig4(args, res: _Resolver, out: Path):
    # sigma_h_sq = 1.0 reproduces the reference feasibility window.
    return _optimize_common(res, out, "fig4", default_sigma=1.0)


# -------------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-pep",
        description="Pairwise error probability analysis for downlink NOMA "
                    "with imperfect SIC",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--users", type=int)
        p.add_argument("--alpha", help="comma-separated power coefficients")
        p.add_argument("--power", type=float, help="total transmit power P")
        p.add_argument("--sigma-h-sq", dest="sigma_h_sq", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument(
            "--sic-mode", dest="sic_mode",
            choices=["perfect", "pattern", "weighted"],
        )
        p.add_argument(
            "--prior-deltas", dest="prior_deltas",
            help="comma-separated complex residuals for pattern mode, "
                 "e.g. '1.414+0j,0j'",
        )

    for name, fn in [
        ("pep", cmd_pep),
        ("simulate", cmd_simulate),
        ("diversity", cmd_diversity),
        ("bound", cmd_bound),
        ("fig2", cmd_fig2),
        ("fig3", cmd_fig3),
    ]:
        p = sub.add_parser(name)
        add_common(p)
        p.add_argument("--snr-db", dest="snr_db",
                       help="comma list or start:stop:step")
        p.set_defaults(func=fn)

    for name, fn in [("optimize", cmd_optimize), ("fig4", cmd_fig4)]:
        p = sub.add_parser(name)
        add_common(p)
        p.add_argument("--snr-db", dest="snr_db_single", type=float)
        p.add_argument("--pth", type=float)
        p.add_argument("--grid-step", dest="grid_step", type=float)
        p.add_argument("--weights-trials", dest="weights_trials", type=int)
        p.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        res = _Resolver(args)
        out = Path(res.get("out", ".", str))
        out.mkdir(parents=True, exist_ok=True)
        result = args.func(args, res, out)
    except (ValueError, EnumerationCapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    if isinstance(result, tuple):
        files, code = result
    else:
        files, code = result, EXIT_OK
    manifest = RunManifest(
        command_line=["noma-pep"] + argv,
        config={k: _fmt(v) if isinstance(v, float) else v
                for k, v in sorted(res.resolved.items())
                if not isinstance(v, (list, tuple)) or len(v) < 100},
        seed=res.resolved.get("seed"),
        tool_version=__version__,
        outputs=files,
        duration_seconds=round(time.time() - started, 3),
    )
    (out / "manifest.json").write_text(
        json.dumps(asdict(manifest), indent=2, default=str)
    )
    if code == EXIT_INFEASIBLE:
        print("no feasible power allocation for the given threshold",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
