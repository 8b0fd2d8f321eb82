"""Seeded RMSE/runtime sweeps plus real-data helpers (CSV tables, whitening, TC).

Every trial draws its data from ``(seed, trial)`` alone, so a sweep gives
identical estimates whether trials run serially or in a process pool.
"""

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import knn, modelsel, pss, synthetic
from .errors import ConfigError, DegenerateDataError, InvalidInputError, ParseError, PssError
from .grid import as_dataset

ESTIMATORS = ("pss", "kl", "ksg")
POLICIES = ("oracle", "fixed", "cv")
DEFAULT_KS = (1, 2, 3, 4, 5, 6, 8, 10, 15, 20)


@dataclass
class BenchConfig:
    """One sweep over ``dims x ns x rhos`` for a single distribution family.

    ``ells`` and ``ks`` are the oracle grids; ``None`` means the default
    grid (``ell`` in ``1 .. max(2, floor(n**(1/d)))`` capped at 30, ``k`` in
    :data:`DEFAULT_KS` below ``n``).  Under the ``"fixed"`` policy the
    first grid entry is used, and under ``"cv"`` PSS picks ``ell`` by
    cross-validation while the kNN baselines keep their first ``k``.
    """

    family: str = synthetic.NORMAL
    dims: list = field(default_factory=lambda: [1])
    ns: list = field(default_factory=lambda: [1000])
    rhos: list = field(default_factory=lambda: [0.0])
    shape: float = 0.4
    scale: float = 0.3
    estimators: list = field(default_factory=lambda: ["pss"])
    policy: str = "oracle"
    ells: list | None = None
    ks: list | None = None
    trials: int = 10
    seed: int = 0
    folds: int = 3
    knn_method: str = "tree"
    workers: int = 1

    def __post_init__(self):
        if self.family not in (synthetic.NORMAL, synthetic.GAMMA):
            raise ConfigError(f"unknown family {self.family!r}")
        if not (self.dims and self.ns and self.rhos):
            raise ConfigError("sweep axes must be nonempty")
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        if not self.estimators or any(e not in ESTIMATORS for e in self.estimators):
            raise ConfigError(f"estimators must be drawn from {ESTIMATORS}")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}")
        if self.knn_method not in ("tree", "brute"):
            raise ConfigError("knn_method must be 'tree' or 'brute'")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        for name in ("ells", "ks"):
            grid = getattr(self, name)
            if grid is not None and (not grid or min(grid) < 1):
                raise ConfigError(f"{name} must be a nonempty list of positive integers")

    def spec(self, d, rho):
        if self.family == synthetic.NORMAL:
            return synthetic.normal_spec(d, rho)
        return synthetic.gamma_spec(d, rho, self.shape, self.scale)

    def grid_for(self, estimator, n, d):
        if estimator == "pss":
            grid = self.ells if self.ells is not None else modelsel.default_candidates(n, d)
        else:
            grid = self.ks if self.ks is not None else [k for k in DEFAULT_KS if k < n]
        grid = sorted({int(v) for v in grid})
        if self.policy == "fixed" or (self.policy == "cv" and estimator != "pss"):
            grid = grid[:1]
        return grid


@dataclass
class BenchRow:
    estimator: str
    family: str
    n: int
    d: int
    rho: float
    hyperparameter: str
    value: int
    oracle: float
    mean_estimate: float
    rmse: float
    bias: float
    std: float
    mean_runtime: float
    median_runtime: float
    trials: int
    failed: int


@dataclass
class BenchReport:
    config: BenchConfig
    rows: list
    estimates: dict  # (estimator, n, d, rho) -> per-trial estimates at the chosen value (NaN = failed)


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def _trial(cfg, d, n, rho, trial):
    """All estimates for one dataset: ``{estimator: (values, estimates, runtimes)}``."""
    x = synthetic.sample(cfg.spec(d, rho), n, cfg.seed, trial)
    out = {}
    for est in cfg.estimators:
        grid = cfg.grid_for(est, n, d)
        if est == "pss" and cfg.policy == "cv":
            cands = grid if cfg.ells is not None else None
            try:
                res, secs = _timed(modelsel.cv_select_ell, x, cands, cfg.folds, cfg.seed)
                h, fit_secs = _timed(pss.entropy, x, res.ell_star)
                out[est] = ([res.ell_star], [h], [secs + fit_secs])
            except PssError:
                out[est] = ([0], [math.nan], [math.nan])
            continue
        if est == "pss":
            vals, times = [], []
            for ell in grid:
                try:
                    h, secs = _timed(pss.entropy, x, ell)
                except PssError:
                    h, secs = math.nan, math.nan
                vals.append(h)
                times.append(secs)
            out[est] = (grid, vals, times)
            continue
        fn = knn.kl_entropies if est == "kl" else knn.ksg_entropies
        try:
            hs, secs = _timed(fn, x, grid, cfg.knn_method)
            hs = [float(h) for h in hs]
        except PssError:
            hs, secs = [math.nan] * len(grid), math.nan
        # one neighbour search serves the whole k grid
        out[est] = (grid, hs, [secs] * len(grid))
    return out


def _summarise(est, cfg, d, n, rho, oracle, per_trial):
    """Pick the hyperparameter (oracle MSE or the single candidate) and build a row."""
    grids = [r[est][0] for r in per_trial]
    if est == "pss" and cfg.policy == "cv":
        values = np.array([g[0] for g in grids])
        estimates = np.array([r[est][1][0] for r in per_trial])
        runtimes = np.array([r[est][2][0] for r in per_trial])
        ok = ~np.isnan(estimates)
        counts = np.bincount(values[ok]) if ok.any() else np.array([0])
        chosen = int(np.argmax(counts))  # most frequent CV choice, reported only
    else:
        grid = grids[0]
        est_mat = np.array([r[est][1] for r in per_trial])
        run_mat = np.array([r[est][2] for r in per_trial])
        best, best_key = 0, None
        for g in range(len(grid)):
            col = est_mat[:, g]
            ok = ~np.isnan(col)
            if not ok.any():
                continue
            key = ((~ok).sum(), float(np.mean((col[ok] - oracle) ** 2)), grid[g])
            if best_key is None or key < best_key:
                best, best_key = g, key
        chosen = grid[best]
        estimates = est_mat[:, best]
        runtimes = run_mat[:, best]
    ok = ~np.isnan(estimates)
    err = estimates[ok] - oracle
    if err.size:
        bias = float(np.mean(err))
        rmse = float(np.sqrt(np.mean(err**2)))
        std = float(np.std(err))
        mean_est = float(np.mean(estimates[ok]))
        rt = runtimes[ok]
        mean_rt, med_rt = float(np.mean(rt)), float(np.median(rt))
    else:
        bias = rmse = std = mean_est = mean_rt = med_rt = math.nan
    name = "ell" if est == "pss" else "k"
    row = BenchRow(est, cfg.family, n, d, float(rho), name, int(chosen), oracle, mean_est,
                   rmse, bias, std, mean_rt, med_rt, int(ok.sum()), int((~ok).sum()))
    return row, estimates


def run_benchmark(cfg):
    """Run every sweep point and estimator; returns a :class:`BenchReport`."""
    rows, estimates = [], {}
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for d in cfg.dims:
            for n in cfg.ns:
                for rho in cfg.rhos:
                    d, n = int(d), int(n)
                    spec = cfg.spec(d, rho)
                    oracle = synthetic.oracle_entropy(spec)
                    args = [(cfg, d, n, rho, t) for t in range(cfg.trials)]
                    if pool is None:
                        per_trial = [_trial(*a) for a in args]
                    else:
                        per_trial = list(pool.map(_trial, *zip(*args)))
                    for est in cfg.estimators:
                        row, ests = _summarise(est, cfg, d, n, rho, oracle, per_trial)
                        rows.append(row)
                        estimates[(est, n, d, float(rho))] = ests
    finally:
        if pool is not None:
            pool.shutdown()
    return BenchReport(cfg, rows, estimates)


def config_dict(cfg):
    return asdict(cfg)


def _fmt(v):
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def report_csv(report):
    """One row per sweep point x estimator; the config rides along as a comment line."""
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(config_dict(report.config), sort_keys=True) + "\n")
    names = list(BenchRow.__dataclass_fields__) + ["seed"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in report.rows:
        w.writerow([_fmt(v) for v in asdict(row).values()] + [report.config.seed])
    return buf.getvalue()


def report_json(report):
    """Results nested as ``family -> d -> n -> rho -> estimator``."""
    nested = {}
    for row in report.rows:
        r = asdict(row)
        leaf = (nested.setdefault(row.family, {}).setdefault(str(row.d), {})
                .setdefault(str(row.n), {}).setdefault(repr(row.rho), {}))
        leaf[row.estimator] = {k: v for k, v in r.items()
                               if k not in ("estimator", "family", "n", "d", "rho")}
    doc = {"config": config_dict(report.config), "seed": report.config.seed, "results": nested}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True)


# real-data helpers

@dataclass
class TableSource:
    data: np.ndarray  # (rows, columns)
    names: list | None = None

    @property
    def n_rows(self):
        return self.data.shape[0]

    @property
    def n_cols(self):
        return self.data.shape[1]

    def column(self, j):
        return self.data[:, j]


def parse_table(text, has_header=False, delimiter=","):
    """Parse delimited numeric text; errors carry 1-based line and column numbers."""
    rows, names, width = [], None, None
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    for lineno, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if has_header and names is None:
            names = [f.strip() for f in fields]
            width = len(names)
            continue
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"expected {width} fields, found {len(fields)}", lineno)
        vals = []
        for col, f in enumerate(fields, start=1):
            try:
                v = float(f)
            except ValueError:
                raise ParseError(f"non-numeric cell {f.strip()!r}", lineno, col) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite cell {f.strip()!r}", lineno, col)
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise ParseError("table has no data rows")
    return TableSource(np.array(rows, dtype=np.float64), names)


def load_table(path, has_header=False, delimiter=","):
    with open(path, newline="") as fh:
        return parse_table(fh.read(), has_header, delimiter)


def whitening_transform(data, rel_tol=1e-12):
    """Mean and symmetric (ZCA) whitening matrix ``W`` with ``cov((x - mu) W) = I``."""
    x = as_dataset(data)
    n, d = x.shape
    if n <= d:
        raise InvalidInputError(f"whitening needs n > d, got n={n}, d={d}")
    mu = x.mean(axis=0)
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    evals, evecs = np.linalg.eigh(cov)
    if evals[-1] <= 0 or evals[0] <= rel_tol * evals[-1]:
        raise DegenerateDataError(
            f"sample covariance is rank-deficient: eigenvalue ratio "
            f"{evals[0] / evals[-1] if evals[-1] > 0 else 0:.3g} <= {rel_tol:g}")
    w = (evecs / np.sqrt(evals)) @ evecs.T
    return mu, w


def whiten(data):
    """Zero-mean, identity-covariance version of ``data`` (ZCA whitening)."""
    x = as_dataset(data)
    mu, w = whitening_transform(x)
    return (x - mu) @ w


@dataclass
class TcReport:
    tc: float
    ell: int
    policy: str
    seconds: float
    nonnegative: bool
    n: int
    d: int
    marginal_entropies: list
    joint_entropy: float
    whitened: bool = False
    knn_tc: dict = field(default_factory=dict)


def tc_report(data, ell=None, cv=False, folds=3, seed=0, whiten_first=False, knn_k=None):
    """Total correlation under a fixed ``ell`` or a cross-validated one.

    ``knn_k`` adds KL and KSG total-correlation figures at that ``k`` for
    comparison.
    """
    x = as_dataset(data)
    if x.shape[1] < 2 or x.shape[0] < 2:
        raise InvalidInputError("total correlation needs n >= 2 and d >= 2")
    if (ell is None) == (not cv):
        raise ConfigError("give exactly one of a fixed ell or cv=True")
    t0 = time.perf_counter()
    if whiten_first:
        x = whiten(x)
    if cv:
        ell = modelsel.cv_select_ell(x, folds=folds, seed=seed).ell_star
    ell = int(ell)
    marg = [pss.entropy(x[:, [j]], ell) for j in range(x.shape[1])]
    joint = pss.entropy(x, ell)
    tc = math.fsum(marg) - joint
    extra = {}
    if knn_k is not None:
        for name, fn in (("kl", knn.kl_entropy), ("ksg", knn.ksg_entropy)):
            extra[name] = math.fsum(fn(x[:, [j]], knn_k) for j in range(x.shape[1])) - fn(x, knn_k)
    secs = time.perf_counter() - t0
    return TcReport(tc, ell, "cv" if cv else "fixed", secs, tc >= 0, x.shape[0], x.shape[1],
                    marg, joint, whiten_first, extra)
