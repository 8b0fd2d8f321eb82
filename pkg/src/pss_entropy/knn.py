"""Kozachenko-Leonenko (KL) and KSG k-nearest-neighbour entropy baselines.

Two neighbour searches are available and must agree: a k-d tree
(``method="tree"``) and an O(n^2 d) chunked scan (``method="brute"``).
Distances are always recomputed from neighbour indices with the same
arithmetic, so both paths return bit-identical values whenever they find
the same neighbours.
"""

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln

from .errors import ConfigError, DegenerateDataError
from .grid import as_dataset

_JITTER_SEED = 20240917
_TILE_ROWS = 256
_TILE_COLS = 2048


def _check_k(n, k):
    ks = np.atleast_1d(np.asarray(k, dtype=np.int64))
    if ks.size == 0 or ks.min() < 1 or ks.max() > n - 1:
        raise ConfigError(f"k must satisfy 1 <= k <= n-1 = {n - 1}, got {k}")
    return ks


def dejitter(x, per_column=False):
    """Break exact ties with a seeded perturbation of 1e-10 times each column's range.

    Applied only when duplicates exist (duplicate rows, or with
    ``per_column`` any repeated value within a column).
    """
    if per_column:
        dup = any(np.unique(x[:, j]).size < x.shape[0] for j in range(x.shape[1]))
    else:
        dup = np.unique(x, axis=0).shape[0] < x.shape[0]
    if not dup:
        return x
    span = np.ptp(x, axis=0)
    span = np.where(span > 0, span, 1.0)
    rng = np.random.default_rng(_JITTER_SEED)
    return x + 1e-10 * span * rng.uniform(-1.0, 1.0, size=x.shape)


def _euclidean(x, rows, cols):
    shape = np.broadcast_shapes(rows.shape, cols.shape)
    acc = np.zeros(shape)
    buf = np.empty(shape)
    for j in range(x.shape[1]):
        np.subtract(x[rows, j], x[cols, j], out=buf)
        np.multiply(buf, buf, out=buf)
        acc += buf
    return np.sqrt(acc, out=acc)


def _chebyshev(x, rows, cols):
    shape = np.broadcast_shapes(rows.shape, cols.shape)
    acc = np.zeros(shape)
    buf = np.empty(shape)
    for j in range(x.shape[1]):
        np.subtract(x[rows, j], x[cols, j], out=buf)
        np.abs(buf, out=buf)
        np.maximum(acc, buf, out=acc)
    return acc


_METRICS = {"euclidean": (_euclidean, 2), "chebyshev": (_chebyshev, np.inf)}


def _sorted_neighbors(x, rows, cand, metric):
    """Order candidate neighbour indices by distance (ties by index) and drop self."""
    dist_fn = _METRICS[metric][0]
    dist = dist_fn(x, rows[:, None], cand)
    self_mask = cand == rows[:, None]
    dist = np.where(self_mask, np.inf, dist)
    order = np.lexsort((cand, dist), axis=1)
    cand = np.take_along_axis(cand, order, axis=1)[:, :-1]
    dist = np.take_along_axis(dist, order, axis=1)[:, :-1]
    return dist, cand


def neighbors(data, k, metric="euclidean", method="tree"):
    """Distances and indices of the 1st..k-th nearest neighbours of every row (self excluded).

    Returns two ``(n, k)`` arrays sorted by distance.
    """
    x = as_dataset(data)
    n = x.shape[0]
    k = int(_check_k(n, k).max())
    if metric not in _METRICS:
        raise ConfigError(f"unknown metric {metric!r}")
    rows = np.arange(n)
    if method == "tree":
        tree = cKDTree(x)
        _, cand = tree.query(x, k=k + 1, p=_METRICS[metric][1])
        cand = np.asarray(cand).reshape(n, k + 1)
        return _sorted_neighbors(x, rows, cand, metric)
    if method != "brute":
        raise ConfigError(f"unknown neighbour search {method!r}")
    return _brute_neighbors(x, k, metric)


def _tiles(n, size):
    count = -(-n // size)
    width = -(-n // count)
    return [(a, min(a + width, n)) for a in range(0, n, width)]


def _brute_neighbors(x, k, metric):
    """Exhaustive scan over fixed-size tiles, keeping the k+1 best candidates per tile."""
    n = x.shape[0]
    dist_fn = _METRICS[metric][0]
    keep = min(k + 1, n)
    out_d = np.empty((n, k))
    out_i = np.empty((n, k), dtype=np.int64)
    for r0, r1 in _tiles(n, _TILE_ROWS):
        rows = np.arange(r0, r1)
        pools = []
        for c0, c1 in _tiles(n, _TILE_COLS):
            cols = np.arange(c0, c1)
            dist = dist_fn(x, rows[:, None], cols[None, :])
            dist[(rows[:, None] == cols[None, :])] = np.inf
            if cols.size > keep:
                part = np.argpartition(dist, keep - 1, axis=1)[:, :keep]
                pools.append(cols[part])
            else:
                pools.append(np.broadcast_to(cols, (rows.size, cols.size)))
        cand = np.concatenate(pools + [rows[:, None]], axis=1)
        d_, i_ = _sorted_neighbors(x, rows, cand, metric)
        out_d[r0:r1] = d_[:, :k]
        out_i[r0:r1] = i_[:, :k]
    return out_d, out_i


def unit_ball_log_volume(d):
    return 0.5 * d * np.log(np.pi) - gammaln(1 + 0.5 * d)


def kl_entropies(data, ks, method="tree"):
    """KL estimates for several neighbour orders from one neighbour search."""
    x = dejitter(as_dataset(data))
    n, d = x.shape
    ks = _check_k(n, ks)
    dist, _ = neighbors(x, ks.max(), "euclidean", method)
    r = dist[:, ks - 1]
    if np.any(r <= 0):
        raise DegenerateDataError("zero k-NN distance after de-duplication")
    return -digamma(ks) + digamma(n) + unit_ball_log_volume(d) + d * np.log(r).mean(axis=0)


def kl_entropy(data, k=3, method="tree"):
    """Kozachenko-Leonenko entropy estimate in nats."""
    return float(kl_entropies(data, [k], method)[0])


KSG_VARIANTS = ("neighbor", "rectangle")


def _widths(x, idx, k, variant):
    if variant == "neighbor":
        return np.abs(x - x[idx[:, k - 1]])
    # smallest box centred on the row that holds all k max-norm neighbours
    reach = np.abs(x[:, None, :] - x[idx[:, :k]]).max(axis=1)
    return 2.0 * reach


def ksg_widths(data, k, method="tree", variant="neighbor"):
    """Per-coordinate widths ``R_ij``, shape (n, d).

    ``"neighbor"`` takes the coordinate distances to the k-th max-norm
    neighbour.  ``"rectangle"`` takes twice the largest coordinate distance
    over the k nearest max-norm neighbours (the original hyper-rectangle
    construction).
    """
    if variant not in KSG_VARIANTS:
        raise ConfigError(f"unknown KSG variant {variant!r}")
    x = as_dataset(data)
    _, idx = neighbors(x, k, "chebyshev", method)
    return _widths(x, idx, k, variant)


def ksg_entropies(data, ks, method="tree", variant="neighbor"):
    """KSG estimates for several neighbour orders from one max-norm neighbour search."""
    if variant not in KSG_VARIANTS:
        raise ConfigError(f"unknown KSG variant {variant!r}")
    x = dejitter(as_dataset(data), per_column=True)
    n, d = x.shape
    ks = _check_k(n, ks)
    _, idx = neighbors(x, ks.max(), "chebyshev", method)
    out = np.empty(ks.size)
    for t, k in enumerate(ks):
        widths = _widths(x, idx, k, variant)
        if np.any(widths <= 0):
            raise DegenerateDataError("zero KSG coordinate width after de-duplication")
        out[t] = -digamma(k) + digamma(n) + (d - 1) / k + np.log(widths).sum(axis=1).mean()
    return out


def ksg_entropy(data, k=3, method="tree", variant="neighbor"):
    """KSG entropy estimate in nats (k-th neighbour taken under the max-norm)."""
    return float(ksg_entropies(data, [k], method, variant)[0])
