"""Gradient aggregation rules.

All rules take the m candidate gradients as an (m, d) array (row i from node
i) and return a single (d,) vector. Domain constraints raise ConstraintError
instead of silently clamping, so a misconfigured rule never runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConstraintError

RULES = (
    "mean",
    "krum",
    "marginal-median",
    "geometric-median",
    "mean-around-median",
    "bulyan",
)

# Distance below which a Weiszfeld iterate is treated as sitting on an input.
WEISZFELD_ANCHOR_EPS = 1e-12


@dataclass(frozen=True)
class AggregatorSpec:
    """Rule choice plus its declared adversary budget and solver knobs.

    q is the number of adversaries the rule is configured to withstand; the
    attack actually applied may use fewer.
    """

    rule: str
    q: int = 0
    neighbors: int | None = None  # krum neighbor-count override
    bulyan_base: str = "krum"
    weiszfeld_tol: float = 1e-10
    weiszfeld_max_iter: int = 1000

    def __post_init__(self):
        if self.rule not in RULES:
            raise ConfigError(f"unknown aggregation rule {self.rule!r}")
        if int(self.q) != self.q or self.q < 0:
            raise ConfigError("declared adversary count q must be a non-negative integer")
        if self.neighbors is not None and (int(self.neighbors) != self.neighbors or self.neighbors < 1):
            raise ConfigError("neighbor override must be a positive integer")
        if self.bulyan_base not in RULES or self.bulyan_base == "bulyan":
            raise ConfigError(f"invalid bulyan base rule {self.bulyan_base!r}")
        if not (np.isfinite(self.weiszfeld_tol) and self.weiszfeld_tol > 0):
            raise ConfigError("weiszfeld_tol must be positive")
        if self.weiszfeld_max_iter < 1:
            raise ConfigError("weiszfeld_max_iter must be >= 1")


def _as_matrix(vectors) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
        raise ConstraintError(
            f"expected a non-empty (m, d) array of gradients, got shape {np.shape(vectors)}"
        )
    return v


def mean(vectors) -> np.ndarray:
    return _as_matrix(vectors).mean(axis=0)


def _squared_distances(v: np.ndarray) -> np.ndarray:
    diff = v[:, None, :] - v[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def krum_scores(vectors, q: int, neighbors: int | None = None) -> np.ndarray:
    """Score(i) = sum of squared distances to i's nearest other vectors.

    The neighbor count defaults to m - q - 2 and must be in 1..m-1.
    """
    v = _as_matrix(vectors)
    m = v.shape[0]
    n_nb = (m - q - 2) if neighbors is None else int(neighbors)
    if q < 0:
        raise ConstraintError("q must be non-negative")
    if not 1 <= n_nb <= m - 1:
        raise ConstraintError(
            f"krum needs a neighbor count in 1..{m - 1}; got {n_nb} (m={m}, q={q})"
        )
    dist = _squared_distances(v)
    np.fill_diagonal(dist, np.inf)
    dist.sort(axis=1)
    return dist[:, :n_nb].sum(axis=1)


def krum_select(vectors, q: int, neighbors: int | None = None) -> int:
    """Index of the krum winner; score ties break toward the lowest index."""
    return int(np.argmin(krum_scores(vectors, q, neighbors)))


def krum(vectors, q: int, neighbors: int | None = None) -> np.ndarray:
    v = _as_matrix(vectors)
    return v[krum_select(v, q, neighbors)].copy()


def marginal_median(vectors) -> np.ndarray:
    """Componentwise median; even m averages the two central order statistics."""
    return np.median(_as_matrix(vectors), axis=0)


def geometric_median(vectors, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Minimizer of sum_i ||y - g_i|| by the Weiszfeld fixed-point iteration.

    Starts from the marginal median. When an iterate lands on an input point
    (distance < WEISZFELD_ANCHOR_EPS) the update uses the anchored form: the
    point is optimal if the pull of the remaining points does not exceed the
    anchor multiplicity, otherwise the iterate is pushed off the anchor.

    Stops once successive iterates differ by less than tol and a first-order
    certificate (subgradient norm times the bounding-box diagonal) bounds the
    objective gap by tol * m, so the returned point is within tol * m of the
    true minimum whenever max_iter is not exhausted.
    """
    v = _as_matrix(vectors)
    m = v.shape[0]
    if not (np.isfinite(tol) and tol > 0):
        raise ConstraintError("tol must be positive")
    if max_iter < 1:
        raise ConstraintError("max_iter must be >= 1")
    if m == 1:
        return v[0].copy()
    # Iterates stay in the bounding box, so the box diagonal bounds the
    # distance to the optimum in the gap certificate.
    diag = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
    if diag == 0.0:
        return v[0].copy()
    y = np.median(v, axis=0)
    for _ in range(max_iter):
        diff = v - y
        dist = np.linalg.norm(diff, axis=1)
        anchored = dist < WEISZFELD_ANCHOR_EPS
        n_anchor = int(anchored.sum())
        if n_anchor == m:
            return y
        inv = 1.0 / dist[~anchored]
        residual = (diff[~anchored] * inv[:, None]).sum(axis=0)
        r = float(np.linalg.norm(residual))
        if n_anchor > 0 and r <= n_anchor:
            return y  # anchored point satisfies the optimality condition
        pull = (v[~anchored] * inv[:, None]).sum(axis=0) / inv.sum()
        if n_anchor == 0:
            y_next = pull
        else:
            ratio = n_anchor / r
            y_next = (1.0 - ratio) * pull + ratio * y
        gap_bound = max(r - n_anchor, 0.0) * diag
        if np.linalg.norm(y_next - y) < tol and gap_bound <= 0.5 * tol * m:
            return y_next
        y = y_next
    return y


def mean_around_median(vectors, q: int) -> np.ndarray:
    """Per coordinate, mean of the m - q values closest to the marginal median.

    Distance ties prefer the lower value, then the lower node index.
    """
    v = _as_matrix(vectors)
    m, d = v.shape
    if not 0 <= q < m:
        raise ConstraintError(f"mean-around-median needs 0 <= q < m; got q={q}, m={m}")
    med = np.median(v, axis=0)
    dev = np.abs(v - med)
    idx = np.broadcast_to(np.arange(m)[:, None], (m, d))
    order = np.lexsort((idx, v, dev), axis=0)
    kept = np.take_along_axis(v, order[: m - q, :], axis=0)
    return kept.mean(axis=0)


def bulyan(
    vectors,
    q: int,
    base: str = "krum",
    weiszfeld_tol: float = 1e-10,
    weiszfeld_max_iter: int = 1000,
) -> np.ndarray:
    """Two-stage rule: iterated base-rule selection, then a trimmed mean.

    The base rule is applied m - 2q times, each time moving the selected
    vector from the pool into a candidate set; shrinking pools keep krum
    well-defined by flooring its neighbor count at 1. The result is the
    mean-around-median of the candidates with trim parameter 2q: per
    coordinate, the (m - 2q) - 2q candidate values closest to the candidate
    median are averaged.
    """
    v = _as_matrix(vectors)
    m = v.shape[0]
    if q < 0:
        raise ConstraintError("q must be non-negative")
    if m < 4 * q + 3:
        raise ConstraintError(f"bulyan needs m >= 4q + 3; got m={m}, q={q}")
    pool = list(range(m))
    chosen: list[int] = []
    for _ in range(m - 2 * q):
        sub = v[pool]
        if len(pool) == 1:
            sel = 0
        elif base == "krum":
            sel = krum_select(sub, q, neighbors=max(1, len(pool) - q - 2))
        else:
            out = _dispatch_base(base, sub, q, weiszfeld_tol, weiszfeld_max_iter)
            sel = int(np.argmin(np.linalg.norm(sub - out, axis=1)))
        chosen.append(pool.pop(sel))
    return mean_around_median(v[chosen], 2 * q)


def _dispatch_base(rule, v, q, tol, max_iter):
    if rule == "mean":
        return mean(v)
    if rule == "marginal-median":
        return marginal_median(v)
    if rule == "geometric-median":
        return geometric_median(v, tol=tol, max_iter=max_iter)
    if rule == "mean-around-median":
        return mean_around_median(v, min(q, v.shape[0] - 1))
    raise ConstraintError(f"unsupported bulyan base rule {rule!r}")


def aggregate(spec: AggregatorSpec, vectors) -> np.ndarray:
    """Apply the configured rule to the m candidate gradients."""
    v = _as_matrix(vectors)
    if spec.rule == "mean":
        return mean(v)
    if spec.rule == "krum":
        return krum(v, spec.q, spec.neighbors)
    if spec.rule == "marginal-median":
        return marginal_median(v)
    if spec.rule == "geometric-median":
        return geometric_median(v, tol=spec.weiszfeld_tol, max_iter=spec.weiszfeld_max_iter)
    if spec.rule == "mean-around-median":
        return mean_around_median(v, spec.q)
    return bulyan(
        v,
        spec.q,
        base=spec.bulyan_base,
        weiszfeld_tol=spec.weiszfeld_tol,
        weiszfeld_max_iter=spec.weiszfeld_max_iter,
    )


def eta(m: int, q: int) -> float:
    """Resilience coefficient eta(m, q); defined for m > 2q + 2, q >= 0."""
    if int(m) != m or int(q) != q:
        raise ConstraintError("m and q must be integers")
    m, q = int(m), int(q)
    if q < 0:
        raise ConstraintError("q must be non-negative")
    if m <= 2 * q + 2:
        raise ConstraintError(f"eta(m, q) requires m > 2q + 2; got m={m}, q={q}")
    return float(
        np.sqrt(2.0 * (m - q + (q * (m - q - 2) + q * q * (m - q - 1)) / (m - 2 * q - 2)))
    )
