"""Finitely supported probability measures on R^n and their functionals."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._validation import check_open_unit, check_points, check_weights
from .exceptions import InputError

#: Coordinate-wise tolerance used to identify atoms of two measures.
MATCH_TOL = 1e-9


def _merge_atoms(points, weights):
    uniq, inverse = np.unique(points, axis=0, return_inverse=True)
    merged = np.zeros(len(uniq))
    np.add.at(merged, inverse.reshape(-1), weights)
    keep = merged > 0
    return uniq[keep], merged[keep]


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure ``sum_i w_i delta_{x_i}`` on R^n.

    Duplicate atoms are merged and zero-weight atoms dropped on construction,
    so ``points`` is always the support, sorted lexicographically.

    Parameters
    ----------
    points : array-like of shape (m, n) or (m,)
        Atom locations. A 1-D array is read as points on the line.
    weights : array-like of shape (m,), optional
        Nonnegative weights summing to one. Uniform when omitted.
    """

    points: np.ndarray
    weights: np.ndarray = None
    dimension: int = field(init=False)

    def __post_init__(self):
        X = check_points(self.points)
        if X.shape[0] == 0:
            raise InputError("a measure needs at least one atom")
        w = check_weights(self.weights, X.shape[0])
        X, w = _merge_atoms(X, w)
        w = w / w.sum()
        X.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", X)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dimension", X.shape[1])

    @classmethod
    def dirac(cls, point):
        return cls(np.atleast_2d(np.asarray(point, dtype=float)), [1.0])

    @classmethod
    def uniform(cls, points):
        return cls(points)

    @classmethod
    def bernoulli(cls, p, a=0.0, b=1.0):
        """Two-point law ``(1 - p) delta_a + p delta_b`` on the line."""
        return cls(np.array([[a], [b]], dtype=float), [1.0 - p, p])

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return f"DiscreteMeasure(m={len(self)}, dimension={self.dimension})"

    @property
    def mean(self):
        return self.weights @ self.points

    def expect(self, values):
        return float(self.weights @ np.asarray(values, dtype=float))

    def evaluate(self, f):
        """Values of ``f`` on the support, as a 1-D float array."""
        if callable(f):
            vals = np.asarray(f(self.points), dtype=float).reshape(-1)
        else:
            vals = np.asarray(f, dtype=float).reshape(-1)
        if vals.size != len(self):
            raise InputError(f"expected {len(self)} function values, got {vals.size}")
        return vals

    def project(self, coords):
        """Pushforward under the coordinate projection onto ``coords``."""
        return DiscreteMeasure(self.points[:, list(coords)], self.weights)

    def to_dict(self):
        return {
            "dimension": int(self.dimension),
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }

    def match(self, other, tol=MATCH_TOL):
        """Index of the atom of ``self`` matching each atom of ``other`` (-1 if none)."""
        if other.dimension != self.dimension:
            raise InputError(
                f"dimension mismatch: {other.dimension} vs {self.dimension}")
        tree = cKDTree(self.points)
        dist, idx = tree.query(other.points, p=np.inf, distance_upper_bound=tol)
        idx = np.where(np.isfinite(dist), idx, -1)
        return idx


@dataclass(frozen=True)
class PushforwardStats:
    values: np.ndarray
    mean: float
    variance: float
    median: float


def _weighted_median(values, weights):
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    # inf{t : P(Y <= t) >= 1/2}; the slack only absorbs summation round-off
    k = int(np.searchsorted(cum, 0.5 - 1e-12, side="left"))
    return float(values[order][min(k, len(values) - 1)])


def pushforward_stats(mu, f):
    """Mean, variance and (lower) median of ``f(X)`` for ``X ~ mu``."""
    vals = mu.evaluate(f)
    w = mu.weights
    mean = float(w @ vals)
    var = float(w @ (vals - mean) ** 2)
    return PushforwardStats(values=vals, mean=mean, variance=max(var, 0.0),
                            median=_weighted_median(vals, w))


def median(mu, f):
    return pushforward_stats(mu, f).median


def relative_entropy(nu, mu, tol=MATCH_TOL):
    """Kullback-Leibler divergence ``H(nu | mu)``; ``inf`` unless ``nu << mu``."""
    idx = mu.match(nu, tol=tol)
    if np.any(idx < 0):
        return float("inf")
    ratio = nu.weights / mu.weights[idx]
    return max(float(nu.weights @ np.log(ratio)), 0.0)


def _xlogx(v):
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = v[pos] * np.log(v[pos])
    return out


def entropy_functional(mu, g):
    """``Ent(g) = E g log g - E g log E g`` for nonnegative ``g`` (0 log 0 = 0)."""
    vals = mu.evaluate(g)
    if np.any(vals < 0):
        raise InputError("entropy functional needs g >= 0 on the support")
    mean = float(mu.weights @ vals)
    ent = float(mu.weights @ _xlogx(vals)) - float(_xlogx(np.array([mean]))[0])
    return max(ent, 0.0)


def entropy_of_exp(mu, f):
    """``Ent(exp(f))`` computed stably after shifting ``f`` by its maximum."""
    vals = mu.evaluate(f)
    shift = vals.max()
    g = np.exp(vals - shift)
    return float(np.exp(shift)) * entropy_functional(mu, g)


def median_variance_check(mu, f, rtol=1e-12):
    """Check ``E (f - Med f)^2 <= 2 Var f`` and return both sides."""
    st = pushforward_stats(mu, f)
    lhs = float(mu.weights @ (st.values - st.median) ** 2)
    rhs = 2.0 * st.variance
    slack = rhs - lhs
    return {
        "lhs": lhs,
        "rhs": rhs,
        "slack": slack,
        "holds": bool(slack >= -rtol * max(1.0, abs(rhs), abs(lhs))),
    }


def quantile_radius(mu, q=0.75):
    """Smallest ``M`` among the atom distances with ``mu(|X - EX| <= M) >= q``."""
    q = check_open_unit(q, "q")
    dist = np.linalg.norm(mu.points - mu.mean, axis=1)
    order = np.argsort(dist, kind="stable")
    d, cum = dist[order], np.cumsum(mu.weights[order])
    for i in range(len(d)):
        # ties (within round-off) enter together
        if i + 1 < len(d) and d[i + 1] - d[i] <= 1e-12 * max(1.0, d[i]):
            continue
        if cum[i] >= q - 1e-12:
            return float(d[i])
    return float(d[-1])


def product_measure(mu1, mu2):
    """Product ``mu1 (x) mu2`` on R^(n1 + n2)."""
    m1, m2 = len(mu1), len(mu2)
    pts = np.hstack([np.repeat(mu1.points, m2, axis=0), np.tile(mu2.points, (m1, 1))])
    w = np.outer(mu1.weights, mu2.weights).reshape(-1)
    return DiscreteMeasure(pts, w)


def power_measure(mu, k):
    out = mu
    for _ in range(k - 1):
        out = product_measure(out, mu)
    return out


def mixture(mu0, mu1, p):
    """``p mu1 + (1 - p) mu0`` with coinciding atoms merged."""
    p = check_open_unit(p, "p")
    if mu0.dimension != mu1.dimension:
        raise InputError("mixture components must share the dimension")
    pts = np.vstack([mu0.points, mu1.points])
    w = np.concatenate([(1 - p) * mu0.weights, p * mu1.weights])
    return DiscreteMeasure(pts, w)


def perturb(mu, U):
    """Measure with density proportional to ``exp(U)`` with respect to ``mu``.

    Returns the new measure and the oscillation ``sup U - inf U`` over the
    support.
    """
    u = mu.evaluate(U)
    w = mu.weights * np.exp(u - u.max())
    return DiscreteMeasure(mu.points, w / w.sum()), float(u.max() - u.min())
