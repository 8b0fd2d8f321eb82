"""Partitioned sample-spacing (PSS) density, entropy, MI and total correlation.

The data box is cut into ``ell`` equal segments per axis.  Inside each
occupied cell with at least ``min_cell_count`` rows, every marginal is
sorted and a univariate m-spacing density is built on the cell's own
empirical range.  The joint density at a point is the cell weight
``n_k / n`` times the product of the per-axis spacing densities.

Internally a fitted model keeps all stored cells in flat arrays (one block
per cell, blocks ordered by cell key) so fitting and evaluation are
vectorised over cells.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DegenerateDataError, InvalidInputError, OutOfRangeError
from .grid import as_dataset, build_grid

OK = 0
UNDEFINED = 1
OUT_OF_RANGE = 2


@dataclass(frozen=True)
class PssConfig:
    """Estimator settings.

    ``divisor`` selects how skipped rows enter the plug-in average: ``"all"``
    divides the summed log-density by the full sample size (skipped rows
    count as zero), ``"contributing"`` divides by the rows that contributed.
    """

    ell: int = 1
    m_override: int | None = None
    min_cell_count: int = 2
    divisor: str = "all"

    def __post_init__(self):
        if int(self.ell) < 1:
            raise ConfigError(f"ell must be >= 1, got {self.ell}")
        if int(self.min_cell_count) < 2:
            raise ConfigError("min_cell_count must be >= 2")
        if self.m_override is not None and int(self.m_override) < 1:
            raise ConfigError("m_override must be >= 1")
        if self.divisor not in ("all", "contributing"):
            raise ConfigError(f"unknown divisor mode {self.divisor!r}")


def as_config(cfg):
    if cfg is None:
        return PssConfig()
    if isinstance(cfg, PssConfig):
        return cfg
    return PssConfig(ell=int(cfg))


@dataclass(frozen=True)
class CellModel:
    n_k: int
    m_k: int
    marginals: tuple  # sorted values per axis
    grids: tuple  # xi_0 .. xi_{n_k+1} per axis


@dataclass(frozen=True)
class PssModel:
    grid: object
    n: int
    config: PssConfig
    keys: np.ndarray  # linear keys of stored cells, ascending
    counts: np.ndarray
    m: np.ndarray
    starts: np.ndarray  # block offsets into ``values``
    values: np.ndarray  # (rows in stored cells, d), each block sorted per column
    xi: np.ndarray  # (sum(counts + 2), d)
    xi_starts: np.ndarray
    skipped_keys: np.ndarray
    skipped_counts: np.ndarray

    @property
    def dims(self):
        return self.grid.dims

    @property
    def n_skipped_rows(self):
        return int(self.skipped_counts.sum())

    @property
    def cells(self):
        """Stored cells keyed by coordinate tuple."""
        out = {}
        for b, key in enumerate(self.keys):
            s, c = self.starts[b], self.counts[b]
            xs = self.xi_starts[b]
            out[self.grid.unravel(key)] = CellModel(
                n_k=int(c),
                m_k=int(self.m[b]),
                marginals=tuple(self.values[s:s + c, j].copy() for j in range(self.dims)),
                grids=tuple(self.xi[xs:xs + c + 2, j].copy() for j in range(self.dims)),
            )
        return out

    @property
    def skipped(self):
        return {self.grid.unravel(k): int(c) for k, c in zip(self.skipped_keys, self.skipped_counts)}


def cell_m(n_k, m_override=None):
    """Per-cell spacing parameter, always in ``[1, n_k - 1]``."""
    n_k = np.asarray(n_k, dtype=np.int64)
    if m_override is None:
        m = np.floor(np.sqrt(n_k) + 0.5).astype(np.int64)
    else:
        m = np.full_like(n_k, int(m_override))
    return np.clip(m, 1, n_k - 1)


def _block_xi(values, starts, counts, m):
    """Averaged grid points for every block and axis, vectorised over blocks."""
    nblk = counts.size
    sizes = counts + 2
    xi_starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    blk = np.repeat(np.arange(nblk), sizes)
    i = np.arange(sizes.sum()) - xi_starts[blk]
    nb, mb, sb = counts[blk], m[blk], starts[blk]
    interior = (i >= 1) & (i <= nb)
    lo = np.maximum(i - mb, 1)
    hi = np.minimum(i + mb - 1, nb)
    n_right = np.maximum(i + mb - 1 - nb, 0)
    first = values[starts]
    last = values[starts + counts - 1]
    xi = np.empty((sizes.sum(), values.shape[1]))
    row_blk = np.repeat(np.arange(nblk), counts)
    for j in range(values.shape[1]):
        # offsets from the block minimum keep the running sums small
        v = values[:, j] - first[row_blk, j]
        csum = np.concatenate([[0.0], np.cumsum(v)])
        lo_i = np.where(interior, sb + lo - 1, 0)
        hi_i = np.where(interior, sb + hi, 0)
        span = last[blk, j] - first[blk, j]
        window = csum[hi_i] - csum[lo_i] + n_right * span
        col = first[blk, j] + window / (2.0 * mb)
        col = np.where(i == 0, first[blk, j], col)
        col = np.where(i == nb + 1, last[blk, j], col)
        xi[:, j] = col
    return xi, xi_starts


def fit(data, cfg=None):
    """Fit a PSS model: partition, sort marginals per occupied cell, build grids."""
    cfg = as_config(cfg)
    x = as_dataset(data)
    n, d = x.shape
    if n < 2:
        raise InvalidInputError("PSS needs at least two rows")
    grid = build_grid(x, cfg.ell)
    keys = grid.keys(grid.coords(x))
    uniq, inverse, counts = np.unique(keys, return_inverse=True, return_counts=True)
    stored = counts >= cfg.min_cell_count
    block_of = np.full(uniq.size, -1, dtype=np.int64)
    block_of[stored] = np.arange(stored.sum())
    row_block = block_of[inverse]
    rows = np.flatnonzero(row_block >= 0)
    rb = row_block[rows]

    cnt = counts[stored].astype(np.int64)
    starts = np.concatenate([[0], np.cumsum(cnt)[:-1]]).astype(np.int64)
    m = cell_m(cnt, cfg.m_override)
    values = np.empty((rows.size, d))
    for j in range(d):
        order = np.lexsort((x[rows, j], rb))
        values[:, j] = x[rows[order], j]
    if cnt.size:
        xi, xi_starts = _block_xi(values, starts, cnt, m)
    else:
        xi, xi_starts = np.empty((0, d)), np.empty(0, dtype=np.int64)
    return PssModel(
        grid=grid, n=n, config=cfg,
        keys=uniq[stored], counts=cnt, m=m, starts=starts, values=values,
        xi=xi, xi_starts=xi_starts,
        skipped_keys=uniq[~stored], skipped_counts=counts[~stored].astype(np.int64),
    )


def _count_below(model, j, blocks, q):
    """Number of grid points of each query's block lying strictly below the query."""
    sizes = model.counts + 2
    g_blk = np.repeat(np.arange(sizes.size, dtype=np.int64), sizes)
    ng = g_blk.size
    # exact integer ranks of all values, then one (block, rank) key per entry
    _, rank = np.unique(np.concatenate([model.xi[:, j], q]), return_inverse=True)
    width = np.int64(rank.max() + 1)
    g_key = np.sort(g_blk * width + rank[:ng])
    q_key = blocks.astype(np.int64) * width + rank[ng:]
    # side="left" leaves grid points equal to the query uncounted
    return np.searchsorted(g_key, q_key, side="left") - model.xi_starts[blocks]


def evaluate(model, points):
    """Log-density at many points.

    Returns ``(logf, status)``: ``status`` is ``OK``, ``UNDEFINED`` (empty or
    skipped cell, outside a cell's empirical sub-grid, or a zero spacing) or
    ``OUT_OF_RANGE`` (outside the training bounding box).  ``logf`` is NaN
    wherever status is not ``OK``; it is never infinite.
    """
    q = np.asarray(points, dtype=np.float64)
    if q.ndim == 1:
        q = q.reshape(-1, model.dims) if model.dims > 1 else q[:, None]
    if q.shape[1] != model.dims:
        raise InvalidInputError(f"points have {q.shape[1]} columns, model has {model.dims}")
    nq = q.shape[0]
    status = np.full(nq, UNDEFINED, dtype=np.int8)
    logf = np.full(nq, np.nan)
    inb = model.grid.in_bounds(q)
    status[~inb] = OUT_OF_RANGE
    if model.keys.size == 0 or nq == 0:
        return logf, status
    keys = model.grid.keys(model.grid.coords(q))
    pos = np.minimum(np.searchsorted(model.keys, keys), model.keys.size - 1)
    found = inb & (model.keys[pos] == keys)
    idx = np.flatnonzero(found)
    b = pos[idx]
    nb, mb, sb = model.counts[b], model.m[b], model.starts[b]
    d = model.dims
    terms = np.empty((idx.size, d + 1))
    terms[:, d] = np.log(nb / model.n)
    good = np.ones(idx.size, dtype=bool)
    for j in range(d):
        qj = q[idx, j]
        c = _count_below(model, j, b, qj)
        at_left = (c == 0) & (qj == model.xi[model.xi_starts[b], j])
        inside = ((c > 0) & (c < nb + 2)) | at_left
        i = np.maximum(c - 1, 0)
        hi = sb + np.minimum(i + mb, nb) - 1
        lo = sb + np.maximum(i - mb, 1) - 1
        delta = model.values[hi, j] - model.values[lo, j]
        ok = inside & (delta > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms[:, j] = np.where(ok, np.log(2.0 * mb / (nb * delta)), 0.0)
        good &= ok
    # sorting the per-axis terms makes the sum independent of column order
    total = np.sort(terms, axis=1).sum(axis=1)
    sel = idx[good]
    logf[sel] = total[good]
    status[sel] = OK
    return logf, status


def log_density(model, point):
    """Log-density at one point, or ``None`` where the estimate is undefined.

    Raises :class:`OutOfRangeError` outside the training bounding box.
    """
    p = np.asarray(point, dtype=np.float64).reshape(1, -1)
    logf, status = evaluate(model, p)
    if status[0] == OUT_OF_RANGE:
        raise OutOfRangeError("point lies outside the training bounding box")
    if status[0] == UNDEFINED:
        return None
    return float(logf[0])


class EntropyEstimate(NamedTuple):
    value: float
    n: int
    n_skipped: int
    ell: int


def estimate_entropy(data, cfg=None):
    """Plug-in PSS joint entropy with diagnostics (nats)."""
    cfg = as_config(cfg)
    x = as_dataset(data)
    model = fit(x, cfg)
    logf, status = evaluate(model, x)
    ok = status == OK
    n_ok = int(ok.sum())
    if n_ok == 0:
        raise DegenerateDataError(f"every row has an undefined density at ell={cfg.ell}")
    s = math.fsum(logf[ok].tolist())
    divisor = model.n if cfg.divisor == "all" else n_ok
    return EntropyEstimate(-s / divisor, model.n, model.n - n_ok, cfg.ell)


def entropy(data, cfg=None):
    """PSS joint entropy in nats.  ``cfg`` may be a :class:`PssConfig` or an ``ell``."""
    return estimate_entropy(data, cfg).value


class MassSummary(NamedTuple):
    interior: float
    closed_form: float


def _interval_terms(model, j):
    """Per-interval (block, index, mass factor) for axis ``j``.

    The mass factor of interval ``i`` is the spacing density on it times its
    width; zero-width intervals contribute nothing.
    """
    sizes = model.counts + 1  # intervals 0..n_k
    blk = np.repeat(np.arange(sizes.size), sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    i = np.arange(sizes.sum()) - starts[blk]
    nb, mb, sb, xs = model.counts[blk], model.m[blk], model.starts[blk], model.xi_starts[blk]
    width = model.xi[xs + i + 1, j] - model.xi[xs + i, j]
    hi = sb + np.minimum(i + mb, nb) - 1
    lo = sb + np.maximum(i - mb, 1) - 1
    delta = model.values[hi, j] - model.values[lo, j]
    with np.errstate(divide="ignore", invalid="ignore"):
        mass = np.where(delta > 0, 2.0 * mb / (nb * delta) * width, 0.0)
    return blk, i, mass


def _block_mass(model, interior_only):
    weight = model.counts / model.n
    prod = np.ones(model.counts.size)
    for j in range(model.dims):
        blk, i, mass = _interval_terms(model, j)
        if interior_only:
            mass = np.where((i >= 1) & (i <= model.counts[blk] - 1), mass, 0.0)
        prod *= np.bincount(blk, weights=mass, minlength=model.counts.size)
    return weight * prod


def density_mass(model):
    """Interior mass of the fitted density and its closed form.

    ``interior`` integrates the piecewise-constant density over the interior
    sub-grid cells of every stored cell; ``closed_form`` is
    ``sum_k (n_k/n) (1 - 1/n_k)**d``.  The two agree exactly in exact
    arithmetic whenever no spacing is zero.
    """
    interior = math.fsum(_block_mass(model, True))
    n_k = model.counts.astype(np.float64)
    closed = math.fsum(n_k / model.n * (1.0 - 1.0 / n_k) ** model.dims)
    return MassSummary(interior, closed)


def total_mass(model):
    """Integral of the fitted density over all of R^d (edge intervals included)."""
    return math.fsum(_block_mass(model, False))


def mutual_information(x, y, cfg=None):
    """PSS mutual information ``H(X) + H(Y) - H(X, Y)`` with one shared ``ell``."""
    x = as_dataset(x)
    y = as_dataset(y)
    if x.shape[0] != y.shape[0]:
        raise InvalidInputError("x and y must have the same number of rows")
    cfg = as_config(cfg)
    return entropy(x, cfg) + entropy(y, cfg) - entropy(np.hstack([x, y]), cfg)


def total_correlation(data, cfg=None):
    """Sum of PSS marginal entropies minus the PSS joint entropy (same ``ell``)."""
    x = as_dataset(data)
    if x.shape[1] < 2:
        raise InvalidInputError("total correlation needs at least two columns")
    cfg = as_config(cfg)
    marginals = math.fsum(entropy(x[:, [j]], cfg) for j in range(x.shape[1]))
    return marginals - entropy(x, cfg)
