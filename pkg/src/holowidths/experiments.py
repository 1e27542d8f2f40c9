"""Convergence studies, width tables and the impossibility demonstration.

Every pipeline returns a :class:`Table` (header plus rows) and, when an
output directory is configured, writes it as CSV. Floats are written with
17 significant digits so repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .anisotropy import make_algebraic_b, make_flat_b, make_log_b
from .legendre import l2_distance, order_one_test_function
from .multiindex import hyperbolic_cross
from .recovery import basis_pursuit_block
from .sampling import (choose_set_known, cross_size_for, known_sample, unknown_sample)
from .widths import (WidthQuery, gelfand_lower_bound, known_constant, log_b_rhs,
                     measure_moments, stesin_width, theta_lower_bound_known,
                     theta_lower_bound_unknown)

log = logging.getLogger(__name__)

PIPELINES = ("known", "unknown", "widths", "impossibility")


@dataclass
class ExperimentConfig:
    pipeline: str = "known"
    m_grid: list = field(default_factory=lambda: [8, 16, 32, 64, 128, 256, 512])
    p_star: float = 0.5
    K: int = 1
    dims: int = 10_000
    trials: int = 1
    seed: int = 0
    quad_order: int = 2
    output_dir: Optional[str] = None
    c_const: float = 1.0
    # set selection for the known pipeline: "order_one" or "holomorphic"
    family: str = "order_one"
    bp_tol: float = 1e-9
    bp_max_iter: Optional[int] = None

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValueError(f"pipeline must be one of {PIPELINES}")
        grid = [int(m) for m in self.m_grid]
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("m_grid must be nonempty and strictly increasing")
        if self.pipeline in ("unknown", "impossibility") and grid[0] < 3:
            raise ValueError("m_grid entries must be >= 3 for sketch pipelines")
        if grid[0] < 1:
            raise ValueError("m_grid entries must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.K < 1 or self.dims < 1:
            raise ValueError("K and dims must be >= 1")
        self.m_grid = grid

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points: tuple
    dropped: int = 0

    def predict(self, m) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(m, dtype=float) ** self.slope


def fit_rate(points: Iterable[tuple]) -> RateFit:
    """Least-squares line through ``(log x, log error)``.

    Points with a non-positive error are dropped with a warning; at least
    three must remain.
    """
    pts = [(float(x), float(e)) for x, e in points]
    keep = [(x, e) for x, e in pts if e > 0 and x > 0]
    dropped = len(pts) - len(keep)
    if dropped:
        warnings.warn(f"fit_rate dropped {dropped} point(s) with non-positive values", RuntimeWarning)
    if len(keep) < 3:
        raise ValueError(f"need at least 3 positive points, got {len(keep)}")
    X = np.log([x for x, _ in keep])
    Y = np.log([e for _, e in keep])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return RateFit(float(slope), float(intercept), r2, tuple(keep), dropped)


@dataclass
class Table:
    name: str
    header: list
    rows: list
    fits: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def fits_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fit", "slope", "intercept", "r_squared", "points", "dropped"])
        for key in sorted(self.fits):
            f = self.fits[key]
            w.writerow([key, _fmt(f.slope), _fmt(f.intercept), _fmt(f.r_squared), len(f.points), f.dropped])
        return buf.getvalue()

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{self.name}.csv"]
        paths[0].write_text(self.to_csv())
        if self.fits:
            paths.append(out / f"{self.name}_fits.csv")
            paths[1].write_text(self.fits_csv())
        return paths


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def worker_count() -> int:
    env = os.environ.get("HOLOWIDTHS_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def run_pool(fn: Callable, tasks: Sequence, key: Callable = lambda r: r) -> list:
    """Map ``fn`` over ``tasks`` in a thread pool; results are sorted by ``key``."""
    n = worker_count()
    if n == 1 or len(tasks) <= 1:
        results = [fn(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(fn, tasks))
    return sorted(results, key=key)


def trial_seed(seed: int, m: int, trial: int) -> int:
    """Independent 63-bit seed for one (m, trial) cell."""
    state = np.random.SeedSequence([int(seed), int(m), int(trial)]).generate_state(1, np.uint64)[0]
    return int(state) >> 1


def _unit_v(K: int) -> np.ndarray:
    return np.ones(K) / math.sqrt(K)


def _maybe_write(cfg: ExperimentConfig, table: Table) -> Table:
    if cfg.output_dir:
        table.write(cfg.output_dir)
    return table


# ---------------------------------------------------------------------------

def run_known_convergence(cfg: ExperimentConfig) -> Table:
    """Known-anisotropy pipeline on the order-one family ``c_i = i**(-1/p_star)``.

    For each ``m`` the set ``S`` of size ``m`` comes from
    :func:`choose_set_known`, the coefficients on ``S`` are sampled by
    quadrature, and the ``L2`` error is evaluated by Parseval. The
    ``tail`` column is the closed-form error ``(sum_{i not in S} c_i**2)**(1/2)``.
    """
    b = make_algebraic_b(cfg.p_star, 1.0, cfg.dims)
    moments = measure_moments("uniform")
    f = order_one_test_function(b.head, _unit_v(cfg.K), moments, anisotropy=b)
    c = np.asarray(b.head)

    def one(m):
        S = choose_set_known(b, m, cfg.family)
        coeffs = known_sample(f, S, cfg.quad_order)
        err = l2_distance(coeffs, f.truth_coeffs)
        picked = np.zeros(len(c), bool)
        for nu in S:
            j = nu.unit_dim()
            if j is not None and j <= len(c):
                picked[j - 1] = True
        tail = float(np.sqrt(np.sum(c[~picked] ** 2)))
        log.info("known m=%d |S|=%d error=%.3e", m, len(S), err)
        return (m, len(S), err, tail)

    rows = run_pool(one, cfg.m_grid, key=lambda r: r[0])
    table = Table("known_convergence", ["m", "set_size", "error", "tail"], [list(r) for r in rows])
    pts = [(r[0], r[2]) for r in rows]
    if sum(e > 0 for _, e in pts) >= 3:
        table.fits["error_vs_m"] = fit_rate(pts)
    return _maybe_write(cfg, table)


def run_unknown_convergence(cfg: ExperimentConfig) -> Table:
    """Unknown-anisotropy pipeline: Gaussian sketch on the hyperbolic cross plus block BP.

    Each (m, trial) cell draws its own sketch seed from ``(seed, m, trial)``.
    Per-trial rows carry the error and the sanity ceiling
    ``||f|| + ||z||_2``; summary fits use the per-m mean error against
    both ``m / log(m)**2`` and ``m``.
    """
    b = make_algebraic_b(cfg.p_star, 1.0, cfg.dims)
    f = order_one_test_function(b.head, _unit_v(cfg.K), measure_moments("uniform"), anisotropy=b)
    fnorm = f.l2_norm()
    tasks = [(m, t) for m in cfg.m_grid for t in range(cfg.trials)]

    def one(task):
        m, t = task
        meas, A, Lam = unknown_sample(f, m, trial_seed(cfg.seed, m, t), cfg.quad_order)
        sol = basis_pursuit_block(A, meas, tol=cfg.bp_tol, max_iter=cfg.bp_max_iter)
        err = l2_distance(sol.coefficients(Lam), f.truth_coeffs)
        ceiling = fnorm + float(np.linalg.norm(sol.blocks))
        log.info("unknown m=%d trial=%d N=%d error=%.3e converged=%s", m, t, len(Lam), err, sol.converged)
        return (m, t, cross_size_for(m), len(Lam), err, ceiling, sol.converged, sol.iterations)

    rows = run_pool(one, tasks, key=lambda r: (r[0], r[1]))
    table = Table("unknown_convergence",
                  ["m", "trial", "n", "N", "error", "ceiling", "converged", "iterations"],
                  [list(r) for r in rows])
    summary = unknown_summary(table)
    means = [(m, mean) for m, mean, _ in summary]
    if sum(e > 0 for _, e in means) >= 3:
        table.fits["mean_vs_m_over_log2m"] = fit_rate([(m / math.log(m) ** 2, e) for m, e in means])
        table.fits["mean_vs_m"] = fit_rate(means)
    return _maybe_write(cfg, table)


def unknown_summary(table: Table) -> list[tuple]:
    """``(m, mean error, worst error)`` per grid point."""
    by_m: dict = {}
    for m, err in zip(table.column("m"), table.column("error")):
        by_m.setdefault(m, []).append(err)
    return [(m, float(np.mean(v)), float(np.max(v))) for m, v in sorted(by_m.items())]


def run_width_tables(cfg: ExperimentConfig, known_fit: Optional[RateFit] = None) -> Table:
    """Lower-bound formulas over ``m_grid`` for the flat, log and algebraic families.

    Columns: ``stesin`` is the closed-form width for the weights given by
    the top ``N = 2m`` entries of ``b`` with ``(p, q) = (2, 1)``, which
    equals ``sigma_m`` of those entries; ``gelfand_lb`` is the unweighted ℓp-ball
    bound for ``(N, m, p, 2)``; ``rate_rhs`` is the family-specific closed
    form (empty for the algebraic family) and ``upper_fit`` the fitted
    upper curve of the known-anisotropy run when one is supplied.
    """
    p = cfg.p_star
    u = measure_moments("uniform")
    unk = theta_lower_bound_unknown(p, u)
    logb = make_log_b(p, "log2")
    alg = make_algebraic_b(p, 1.0, cfg.dims)

    def one(task):
        fam, m = task
        N = 2 * m
        b = {"flat": lambda: make_flat_b(m, p), "log": lambda: logb, "algebraic": lambda: alg}[fam]()
        top = np.sort(b.entries(max(N, b.head_len)))[::-1][:N]
        st = None
        if len(top) == N and top[-1] > 0:
            st = stesin_width(WidthQuery(tuple(top), m, 2.0, 1.0))
        gl = gelfand_lower_bound(N, m, p, 2.0)
        tk = theta_lower_bound_known(b, m, u)
        if fam == "flat":
            rhs = known_constant(b, u, 1.0) * 2.0 ** (-1.0 / p) * m ** (0.5 - 1.0 / p)
        elif fam == "log":
            rhs = log_b_rhs(p, "log2", m, u)
        else:
            rhs = None
        up = float(known_fit.predict(m)) if (known_fit is not None and fam == "algebraic") else None
        return (fam, m, N, p, 2.0, st, gl, tk, unk, rhs, up)

    order = {"flat": 0, "log": 1, "algebraic": 2}
    tasks = [(fam, m) for fam in order for m in cfg.m_grid]
    rows = run_pool(one, tasks, key=lambda r: (order[r[0]], r[1]))
    header = ["family", "m", "N", "p", "q", "stesin", "gelfand_lb", "theta_lb_known",
              "theta_lb_unknown", "rate_rhs", "upper_fit"]
    return _maybe_write(cfg, Table("width_table", header, [list(r) for r in rows]))


def run_impossibility_demo(cfg: ExperimentConfig) -> Table:
    """Functions living on a coordinate outside the search space.

    ``J`` is the largest dimension of the hyperbolic cross for the biggest
    ``m``. Each trial draws ``j`` uniformly from ``J+1 .. J+100`` and uses
    ``f = v Psi_{e_j}``; its coefficients on every cross vanish, so the
    measurements are zero, BP returns zero and the error equals ``||f||``.
    The control uses ``j = J`` and is recovered once ``e_J`` enters the
    cross.
    """
    J = hyperbolic_cross(cross_size_for(cfg.m_grid[-1])).max_dim
    v = _unit_v(cfg.K)
    moments = measure_moments("uniform")
    tasks = [(m, t, kind) for m in cfg.m_grid for t in range(cfg.trials) for kind in ("control", "out_of_range")]

    def one(task):
        m, t, kind = task
        rng = np.random.default_rng([cfg.seed, m, t, 1])
        j = J if kind == "control" else int(rng.integers(J + 1, J + 101))
        c = np.zeros(j)
        c[-1] = 1.0
        f = order_one_test_function(c, v, moments)
        meas, A, Lam = unknown_sample(f, m, trial_seed(cfg.seed, m, t), cfg.quad_order)
        sol = basis_pursuit_block(A, meas, tol=cfg.bp_tol, max_iter=cfg.bp_max_iter)
        err = l2_distance(sol.coefficients(Lam), f.truth_coeffs)
        norm = f.l2_norm()
        return (m, t, kind, j, Lam.max_dim, err, norm, abs(err - norm))

    order = {"control": 0, "out_of_range": 1}
    rows = run_pool(one, tasks, key=lambda r: (r[0], r[1], order[r[2]]))
    header = ["m", "trial", "kind", "j", "cross_max_dim", "error", "f_norm", "deficit"]
    return _maybe_write(cfg, Table("impossibility", header, [list(r) for r in rows]))


def impossibility_summary(table: Table) -> dict:
    """Per kind, per m: mean error."""
    out: dict = {}
    for m, kind, err in zip(table.column("m"), table.column("kind"), table.column("error")):
        out.setdefault(kind, {}).setdefault(m, []).append(err)
    return {k: {m: float(np.mean(v)) for m, v in d.items()} for k, d in out.items()}


RUNNERS = {
    "known": run_known_convergence,
    "unknown": run_unknown_convergence,
    "widths": run_width_tables,
    "impossibility": run_impossibility_demo,
}


def run(cfg: ExperimentConfig) -> Table:
    return RUNNERS[cfg.pipeline](cfg)


# ---------------------------------------------------------------------------
# plots

def plot_table(table: Table, path) -> Optional[Path]:
    """Static log-log SVG of a table's error curve(s)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "holowidths"
    fig, ax = plt.subplots(figsize=(5, 4))
    if table.name == "known_convergence":
        ax.loglog(table.column("m"), table.column("error"), "o-", label="error")
    elif table.name == "unknown_convergence":
        summ = unknown_summary(table)
        ax.loglog([s[0] for s in summ], [s[1] for s in summ], "o-", label="mean error")
        ax.loglog([s[0] for s in summ], [s[2] for s in summ], "s--", label="worst error")
    elif table.name == "width_table":
        for fam in ("flat", "log", "algebraic"):
            rows = [r for r in table.rows if r[0] == fam]
            ax.loglog([r[1] for r in rows], [r[7] for r in rows], "o-", label=f"{fam} known lb")
    elif table.name == "impossibility":
        summ = impossibility_summary(table)
        for kind, d in sorted(summ.items()):
            ms = sorted(d)
            ax.loglog(ms, [max(d[m], 1e-16) for m in ms], "o-", label=kind)
    else:
        plt.close(fig)
        return None
    ax.set_xlabel("m")
    ax.set_ylabel("error")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------

def selftest_configs(seed: int) -> list[ExperimentConfig]:
    """Small versions of all four pipelines, for smoke and determinism checks."""
    return [
        ExperimentConfig(pipeline="known", m_grid=[4, 8, 16, 32], dims=200, seed=seed),
        ExperimentConfig(pipeline="unknown", m_grid=[16, 32, 64], dims=50, trials=2, seed=seed),
        ExperimentConfig(pipeline="widths", m_grid=[2, 4, 8], dims=100, seed=seed),
        ExperimentConfig(pipeline="impossibility", m_grid=[16, 64], trials=2, seed=seed),
    ]


def selftest(seed: int, out_dir, plots: bool = True) -> list[Path]:
    out = Path(out_dir)
    written: list[Path] = []
    for cfg in selftest_configs(seed):
        table = run(cfg)
        written += table.write(out)
        if plots:
            p = plot_table(table, out / f"{table.name}.svg")
            if p is not None:
                written.append(p)
    return written
