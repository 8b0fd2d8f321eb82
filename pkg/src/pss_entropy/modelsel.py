"""Cross-validated choice of ``ell`` and greedy MI feature selection."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import pss
from .errors import ConfigError, InvalidInputError, InvalidLabelsError, SelectionError
from .grid import as_dataset
from .synthetic import rng_for

MAX_UNDEFINED_FRACTION = 0.2


def default_candidates(n, d, cap=30):
    """``1 .. max(2, floor(n**(1/d)))``, capped at ``cap``."""
    top = max(2, int(math.floor(n ** (1.0 / d) + 1e-9)))
    return list(range(1, min(top, cap) + 1))


def fold_indices(n, folds, seed=0):
    """Seeded shuffle cut into ``folds`` contiguous blocks of validation indices."""
    perm = rng_for(seed, 0).permutation(n)
    return np.array_split(perm, folds)


SCORES = ("mixture", "exclude")
MIXTURE_WEIGHT = 0.01


@dataclass
class CvResult:
    ell_star: int
    losses: dict  # ell -> mean held-out loss (feasible candidates only)
    undefined: dict  # ell -> per-fold count of validation points with undefined density
    undefined_fraction: dict
    infeasible: list = field(default_factory=list)
    score: str = "mixture"


def heldout_loss(train, valid, cfg):
    """Mean ``-log f`` over validation rows with a defined density, plus the excluded count.

    With ``train`` equal to ``valid`` this is the plug-in entropy with the
    ``"contributing"`` divisor.
    """
    model = pss.fit(train, cfg)
    logf, status = pss.evaluate(model, valid)
    ok = status == pss.OK
    if not ok.any():
        return math.nan, int(valid.shape[0])
    return -math.fsum(logf[ok]) / int(ok.sum()), int((~ok).sum())


def _fallback_logpdf(train, valid):
    """Log-density of an axis-aligned normal fitted to ``train``."""
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    z = (valid - mu) / sd
    return -0.5 * (z * z).sum(axis=1) - np.log(sd).sum() - 0.5 * valid.shape[1] * math.log(2 * math.pi)


def mixture_loss(train, valid, cfg, weight=MIXTURE_WEIGHT):
    """Held-out log score of ``(1 - w) f / Z + w g``.

    ``f`` is the PSS density fitted on ``train``, ``Z`` its total mass and
    ``g`` an axis-aligned normal fitted on ``train``.  Every validation
    point is scored, so candidates are compared on the same points and an
    undefined PSS density costs ``-log(w g)`` rather than being dropped.
    Returns the loss and the count of points where ``f`` was undefined.
    """
    model = pss.fit(train, cfg)
    logf, status = pss.evaluate(model, valid)
    ok = status == pss.OK
    mass = pss.total_mass(model)
    if mass > 0:
        logf = np.where(ok, logf, -np.inf) - math.log(mass)
    else:
        logf = np.full(valid.shape[0], -np.inf)
    mixed = np.logaddexp(math.log1p(-weight) + logf,
                         math.log(weight) + _fallback_logpdf(train, valid))
    return -math.fsum(mixed) / valid.shape[0], int((~ok).sum())


def cv_select_ell(data, candidates=None, folds=3, seed=0, cfg=None,
                  max_undefined_fraction=MAX_UNDEFINED_FRACTION, score="mixture",
                  weight=MIXTURE_WEIGHT):
    """K-fold likelihood cross-validation over ``ell``.

    ``score="exclude"`` averages ``-log f`` over validation points whose
    density is defined and counts the rest; ``score="mixture"`` scores all
    points under a defensive mixture (see :func:`mixture_loss`).  Either
    way a candidate is infeasible when every validation point is
    undefined or more than ``max_undefined_fraction`` of them are.  Ties
    in the loss go to the smaller ``ell``.
    """
    x = as_dataset(data)
    n, d = x.shape
    folds = int(folds)
    if folds < 2:
        raise ConfigError("need at least 2 folds")
    if n < 2 * folds:
        raise InvalidInputError(f"need n >= 2*folds rows, got n={n}")
    if score not in SCORES:
        raise ConfigError(f"unknown CV score {score!r}")
    if not 0 < weight < 1:
        raise ConfigError("mixture weight must lie in (0, 1)")
    if candidates is None:
        candidates = default_candidates(n, d)
    candidates = sorted({int(c) for c in candidates})
    if not candidates or candidates[0] < 1:
        raise ConfigError("candidate ell values must be >= 1")
    base = pss.as_config(cfg)
    splits = fold_indices(n, folds, seed)
    mask = np.ones(n, dtype=bool)

    losses, undefined, frac, infeasible = {}, {}, {}, []
    for ell in candidates:
        cfg_l = replace(base, ell=ell)
        fold_losses, counts = [], []
        for valid_idx in splits:
            mask[:] = True
            mask[valid_idx] = False
            if score == "exclude":
                loss, bad = heldout_loss(x[mask], x[valid_idx], cfg_l)
            else:
                loss, bad = mixture_loss(x[mask], x[valid_idx], cfg_l, weight)
            counts.append(bad)
            if not (math.isnan(loss) or bad == valid_idx.size):
                fold_losses.append(loss)
        undefined[ell] = counts
        frac[ell] = sum(counts) / n
        if not fold_losses or frac[ell] > max_undefined_fraction:
            infeasible.append(ell)
            continue
        losses[ell] = math.fsum(fold_losses) / len(fold_losses)
    if not losses:
        raise SelectionError("every candidate ell is infeasible")
    best = min(losses, key=lambda ell: (losses[ell], ell))
    return CvResult(best, losses, undefined, frac, infeasible, score)


def as_labels(labels):
    y = np.asarray(labels)
    if y.ndim != 1:
        y = y.ravel()
    return y


def class_conditional_mi(features, labels, ell, cfg=None):
    """``I(S; Y) = H(S) - sum_c p_c H(S | Y = c)`` with PSS entropies at ``ell``.

    Classes with fewer than ``min_cell_count`` rows keep their weight but
    contribute zero conditional entropy.  A single class gives exactly 0.
    """
    x = as_dataset(features)
    y = as_labels(labels)
    n = x.shape[0]
    if y.size != n:
        raise InvalidLabelsError("labels and features differ in length")
    if n < 4:
        raise InvalidInputError("need at least 4 rows")
    cfg_l = replace(pss.as_config(cfg), ell=int(ell))
    classes, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    if classes.size == 1:
        return 0.0
    usable = counts >= cfg_l.min_cell_count
    if usable.sum() < 2:
        raise InvalidLabelsError("fewer than two classes have enough rows")
    joint = pss.entropy(x, cfg_l)
    parts = [
        counts[c] / n * pss.entropy(x[inverse == c], cfg_l)
        for c in np.flatnonzero(usable)
    ]
    return joint - math.fsum(parts)


@dataclass
class SelectionTrace:
    selected: list
    mi: list


def greedy_forward_select(features, labels, ell, steps, cfg=None):
    """Add, one at a time, the feature that maximises the MI of the enlarged set.

    Ties go to the lowest feature index.
    """
    x = as_dataset(features)
    steps = int(steps)
    if not 0 <= steps <= x.shape[1]:
        raise ConfigError(f"steps must be in [0, {x.shape[1]}]")
    chosen, trace = [], []
    for _ in range(steps):
        best_j, best_mi = None, -math.inf
        for j in range(x.shape[1]):
            if j in chosen:
                continue
            mi = class_conditional_mi(x[:, chosen + [j]], labels, ell, cfg)
            if mi > best_mi:
                best_j, best_mi = j, mi
        chosen.append(best_j)
        trace.append(best_mi)
    return SelectionTrace(chosen, trace)
