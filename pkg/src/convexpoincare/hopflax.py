"""Infimum convolution ``Q_t f(x) = inf_y f(y) + t theta((x - y)/t)`` and its checks.

Test functions are max-affine (``f(x) = max_k <a_k, x> + b_k``) or values on a
lattice. For radial costs with bounded slope the search is localized: an
``L``-Lipschitz ``f`` cannot profit from ``y`` farther than ``t R(L)`` from
``x``, where ``R(L)`` is the smallest radius at which the cost profile has
slope ``L``.
"""

import math

import numpy as np
from scipy.optimize import linprog, minimize
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_points, check_positive, check_vector
from .costs import PerCoordinate, RadialAlpha, RadialCost
from .exceptions import InputError, UnsupportedInputError
from .reports import VerificationReport

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SOLVER_TOL = 1e-9
RADIUS_PADDING = 1.1
TIE_TOL = 1e-12


class MaxAffineFunction:
    """Convex function ``x -> max_k <a_k, x> + b_k``.

    Parameters
    ----------
    slopes : array-like of shape (K, n)
    intercepts : array-like of shape (K,)
    """

    def __init__(self, slopes, intercepts):
        A = check_points(slopes, name="slopes")
        b = check_vector(intercepts, A.shape[0], name="intercepts")
        if A.shape[0] == 0:
            raise InputError("a max-affine function needs at least one piece")
        self.slopes = A
        self.intercepts = b
        self.dimension = A.shape[1]
        self.slopes.setflags(write=False)
        self.intercepts.setflags(write=False)

    @classmethod
    def constant(cls, value, dimension=1):
        return cls(np.zeros((1, dimension)), [float(value)])

    @classmethod
    def linear(cls, slope, intercept=0.0):
        slope = np.atleast_1d(np.asarray(slope, dtype=float))
        return cls(slope[None, :], [float(intercept)])

    @classmethod
    def from_dict(cls, d):
        from .io import reject_unknown

        reject_unknown(d, {"pieces", "schema"}, "function")
        pieces = d.get("pieces")
        if not isinstance(pieces, list) or not pieces:
            raise InputError("function: 'pieces' must be a nonempty list")
        for p in pieces:
            reject_unknown(p, {"slope", "intercept"}, "function piece")
        slopes = [np.atleast_1d(np.asarray(p["slope"], dtype=float)) for p in pieces]
        if len({s.size for s in slopes}) != 1:
            raise InputError("function: all slopes must have the same dimension")
        return cls(np.array(slopes), [float(p.get("intercept", 0.0)) for p in pieces])

    def to_dict(self):
        return {"pieces": [{"slope": a.tolist(), "intercept": float(b)}
                           for a, b in zip(self.slopes, self.intercepts)]}

    def __repr__(self):
        return f"MaxAffineFunction(pieces={len(self.intercepts)}, dimension={self.dimension})"

    def _affine(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dimension:
            if self.dimension == 1:
                x = x[..., None]
            else:
                raise InputError(f"expected points of dimension {self.dimension}")
        return x @ self.slopes.T + self.intercepts

    def __call__(self, x):
        return self._affine(x).max(axis=-1)

    def _active(self, vals):
        top = vals.max(axis=-1, keepdims=True)
        return vals >= top - TIE_TOL * (1.0 + np.abs(top))

    def gradient_norm(self, x):
        """``|grad f(x)|``; at ties the largest active slope norm."""
        vals = self._affine(x)
        norms = np.linalg.norm(self.slopes, axis=1)
        return np.where(self._active(vals), norms, -np.inf).max(axis=-1)

    def gradient(self, x):
        """A subgradient: the active slope of largest norm (first index on ties)."""
        vals = self._affine(x)
        norms = np.linalg.norm(self.slopes, axis=1)
        score = np.where(self._active(vals), norms, -np.inf)
        return self.slopes[np.argmax(score, axis=-1)]

    def active_sets(self, x):
        return self._active(self._affine(x))

    @property
    def lipschitz(self):
        return float(np.linalg.norm(self.slopes, axis=1).max())

    def pieces_active_somewhere(self):
        """Indices ``k`` for which ``{x : piece k attains the max}`` is nonempty."""
        K = len(self.intercepts)
        keep = []
        for k in range(K):
            others = [j for j in range(K) if j != k]
            if not others:
                keep.append(k)
                continue
            # (a_j - a_k) x <= b_k - b_j
            A_ub = self.slopes[others] - self.slopes[k]
            b_ub = self.intercepts[k] - self.intercepts[others] + 1e-12
            res = linprog(np.zeros(self.dimension), A_ub=A_ub, b_ub=b_ub,
                          bounds=[(None, None)] * self.dimension, method="highs")
            if res.status == 0:
                keep.append(k)
        return keep

    def is_bounded_below(self):
        """``inf f > -inf`` iff the origin lies in the convex hull of the slopes."""
        K = len(self.intercepts)
        res = linprog(np.zeros(K), A_eq=np.vstack([self.slopes.T, np.ones((1, K))]),
                      b_eq=np.concatenate([np.zeros(self.dimension), [1.0]]),
                      bounds=[(0, None)] * K, method="highs")
        return res.status == 0

    def minimum(self):
        """``inf_x f(x)`` by linear programming (``-inf`` when unbounded)."""
        n = self.dimension
        c = np.zeros(n + 1)
        c[-1] = 1.0
        A_ub = np.hstack([self.slopes, -np.ones((len(self.intercepts), 1))])
        res = linprog(c, A_ub=A_ub, b_ub=-self.intercepts,
                      bounds=[(None, None)] * (n + 1), method="highs")
        if res.status == 3:
            return -math.inf
        if res.status != 0:
            raise InputError(f"could not minimize max-affine function: {res.message}")
        return float(res.fun)

    def shifted(self, c):
        return MaxAffineFunction(self.slopes, self.intercepts + c)

    def affine_transform(self, a, b):
        """``a f + b`` for ``a > 0``."""
        return MaxAffineFunction(a * self.slopes, a * self.intercepts + b)

    def embed(self, total_dim, coords):
        """The same function of the coordinates ``coords`` inside R^total_dim."""
        A = np.zeros((len(self.intercepts), total_dim))
        A[:, list(coords)] = self.slopes
        return MaxAffineFunction(A, self.intercepts)


class Lattice:
    """Axis-aligned lattice with common spacing ``h``."""

    def __init__(self, origin, spacing, shape):
        self.origin = np.atleast_1d(np.asarray(origin, dtype=float))
        self.spacing = check_positive(float(spacing), "spacing")
        self.shape = tuple(int(s) for s in np.atleast_1d(shape))
        if len(self.shape) != self.origin.size or min(self.shape) < 1:
            raise InputError("lattice shape must match the origin dimension")

    @classmethod
    def from_bounds(cls, lo, hi, h):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        shape = np.floor((hi - lo) / h + 1e-9).astype(int) + 1
        return cls(lo, h, shape)

    @property
    def dimension(self):
        return self.origin.size

    def axes(self):
        return [self.origin[i] + self.spacing * np.arange(s) for i, s in enumerate(self.shape)]

    def nodes(self):
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def pad(self, radius):
        extra = int(math.ceil(radius / self.spacing))
        return Lattice(self.origin - extra * self.spacing, self.spacing,
                       tuple(s + 2 * extra for s in self.shape))


class GridFunction:
    """Values of a function on the nodes of a :class:`Lattice`."""

    def __init__(self, lattice, values):
        self.lattice = lattice
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size != int(np.prod(lattice.shape)):
            raise InputError("number of values does not match the lattice")
        if not np.all(np.isfinite(values)):
            raise InputError("grid values must be finite")
        self.values = values
        self.dimension = lattice.dimension

    @classmethod
    def sample(cls, f, lattice):
        return cls(lattice, f(lattice.nodes()))


# ------------------------------------------------------------------ solvers

def _golden_batch(obj, lo, hi, tol=SOLVER_TOL, max_iter=200):
    """Vectorized golden-section minimization of convex ``obj`` on ``[lo, hi]``."""
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = obj(c), obj(d)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(lo) + np.abs(hi)) * 0.5):
            break
        left = fc <= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = hi - GOLDEN * (hi - lo)
        new_d = lo + GOLDEN * (hi - lo)
        d_next = np.where(left, c, new_d)
        c_next = np.where(left, new_c, d)
        fd_next = np.where(left, fc, np.nan)
        fc_next = np.where(left, np.nan, fd)
        need_c = np.isnan(fc_next)
        need_d = np.isnan(fd_next)
        if need_c.any():
            fc_next[need_c] = obj(c_next)[need_c]
        if need_d.any():
            fd_next[need_d] = obj(d_next)[need_d]
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    y = np.where(fc <= fd, c, d)
    cand = np.stack([y, lo, hi])
    vals = np.stack([obj(v) for v in cand])
    k = np.argmin(vals, axis=0)
    idx = np.arange(vals.shape[1])
    return cand[k, idx], vals[k, idx]


def _profile_radius(theta, lipschitz):
    """Radius where the cost profile reaches slope ``lipschitz``, or ``None``."""
    if isinstance(theta, RadialCost):
        r = theta.localization_radius(lipschitz)
        return None if math.isinf(r) else r
    return None


def search_radius(f, theta, t, x_values):
    """Per-point localization radius ``|y - x| <= R`` for the infimum."""
    n_pts = len(x_values)
    if isinstance(f, MaxAffineFunction):
        r = _profile_radius(theta, f.lipschitz)
        if r is not None:
            return np.full(n_pts, RADIUS_PADDING * t * r + 1e-12)
        fmin = f.minimum()
        if math.isinf(fmin):
            raise UnsupportedInputError(
                "f is unbounded below and steeper than the cost can absorb; "
                "the infimum convolution may be -inf")
        excess = np.maximum(f(x_values) - fmin, 0.0) / t
        return np.array([RADIUS_PADDING * t * _sublevel_extent(theta, e) + 1e-12
                         for e in excess])
    raise UnsupportedInputError("no localization rule for this function type")


def _sublevel_extent(theta, level):
    """Upper bound on ``|z|`` over ``{theta(z) <= level}``."""
    if level <= 0:
        return 0.0
    if isinstance(theta, RadialCost):
        return theta.sublevel_radius(level)
    if isinstance(theta, PerCoordinate):
        return math.sqrt(theta.n_blocks) * theta.block.sublevel_radius(level)
    raise UnsupportedInputError("no sublevel bound for this cost")


def _inf_conv_1d(fun, theta, t, x, radius):
    def obj_factory(xx):
        return lambda y: fun(y) + t * theta(((xx - y) / t)[:, None])
    obj = obj_factory(x)
    y, vals = _golden_batch(obj, x - radius, x + radius)
    return vals, y


def _piece_starts(f, theta, t, x):
    starts = [x.copy()]
    if isinstance(theta, RadialCost):
        for a in f.slopes:
            na = np.linalg.norm(a)
            if na == 0:
                starts.append(x.copy())
                continue
            r = theta.profile_deriv_inverse(na)
            if math.isfinite(r):
                starts.append(x - t * r * a / na)
    return starts


def _inf_conv_nd_point(f, theta, t, x, radius):
    n = f.dimension
    A, b = f.slopes, f.intercepts

    def phi(y):
        return float(f(y)) + t * float(theta((x - y) / t))

    def obj(z):
        return z[-1] + t * float(theta((x - z[:-1]) / t))

    def jac(z):
        g = np.empty(n + 1)
        g[:-1] = -theta.gradient((x - z[:-1]) / t)
        g[-1] = 1.0
        return g

    cons = {"type": "ineq", "fun": lambda z: z[-1] - (A @ z[:-1] + b),
            "jac": lambda z: np.hstack([-A, np.ones((len(b), 1))])}
    bounds = [(xi - radius, xi + radius) for xi in x] + [(None, None)]
    best_y, best = x.copy(), phi(x)
    for y0 in _piece_starts(f, theta, t, x):
        y0 = np.clip(y0, x - radius, x + radius)
        z0 = np.append(y0, float(f(y0)))
        res = minimize(obj, z0, jac=jac, constraints=[cons], bounds=bounds, method="SLSQP",
                       options={"ftol": 1e-14, "maxiter": 500})
        y = np.clip(res.x[:-1], x - radius, x + radius)
        val = phi(y)
        if val < best:
            best, best_y = val, y
    # coordinate sweeps with golden section to clean up near kinks
    for _ in range(20):
        prev = best
        for i in range(n):
            def line(s, i=i):
                Y = np.repeat(best_y[None, :], len(s), axis=0)
                Y[:, i] = s
                return f(Y) + t * theta((x[None, :] - Y) / t)
            s, v = _golden_batch(line, np.array([x[i] - radius]), np.array([x[i] + radius]))
            if v[0] < best:
                best = float(v[0])
                best_y = best_y.copy()
                best_y[i] = s[0]
        if prev - best <= SOLVER_TOL * (1.0 + abs(best)):
            break
    return best, best_y


def inf_convolution(f, theta, t, x, *, return_argmin=False, radius=None):
    """``Q_t f(x) = inf_y f(y) + t theta((x - y) / t)``.

    Parameters
    ----------
    f : MaxAffineFunction, GridFunction or callable
        Callables are supported on the line only and searched on an
        expanding bracket.
    theta : CostFunction
    t : float
    x : array-like of shape (n,) or (P, n)

    Returns
    -------
    float or ndarray of shape (P,)
    """
    t = check_positive(t, "t")
    dim = theta.dimension
    x_arr = np.asarray(x, dtype=float)
    # a scalar or a single vector of length n is one point; on the line a
    # longer 1-D array is a batch
    single = x_arr.ndim == 0 or (x_arr.ndim == 1 and x_arr.size == dim)
    X = x_arr.reshape(-1, dim) if x_arr.ndim <= 1 else x_arr
    if X.shape[-1] != dim:
        raise InputError(f"points of dimension {X.shape[-1]} for a cost of dimension {dim}")
    if getattr(f, "dimension", dim) != dim:
        raise InputError("function and cost dimensions differ")

    if isinstance(f, GridFunction):
        vals, ys = _inf_conv_grid(f, theta, t, X)
    elif isinstance(f, MaxAffineFunction):
        R = search_radius(f, theta, t, X) if radius is None else np.full(len(X), radius)
        if dim == 1:
            vals, y = _inf_conv_1d(f, theta, t, X[:, 0], R)
            ys = y[:, None]
        else:
            out = [_inf_conv_nd_point(f, theta, t, X[i], R[i]) for i in range(len(X))]
            vals = np.array([o[0] for o in out])
            ys = np.array([o[1] for o in out])
        # y = x is always a candidate, so Q_t f <= f holds exactly
        fx = f(X)
        better = fx <= vals
        vals = np.where(better, fx, vals)
        ys = np.where(better[:, None], X, ys)
    elif callable(f):
        if dim != 1:
            raise UnsupportedInputError("callable functions are supported in one dimension")
        vals, y = _inf_conv_callable(f, theta, t, X[:, 0], radius)
        ys = y[:, None]
    else:
        raise InputError("f must be a MaxAffineFunction, GridFunction or callable")
    if single:
        return (float(vals[0]), ys[0]) if return_argmin else float(vals[0])
    return (vals, ys) if return_argmin else vals


def _inf_conv_callable(f, theta, t, x, radius):
    def fun(y):
        return np.asarray(f(y), dtype=float).reshape(-1)

    R = np.full(len(x), t if radius is None else radius, dtype=float)
    for _ in range(60):
        vals, y = _inf_conv_1d(fun, theta, t, x, R)
        at_edge = np.abs(np.abs(y - x) - R) <= 1e-6 * R
        if radius is not None or not at_edge.any():
            return vals, y
        R = np.where(at_edge, 2 * R, R)
    return vals, y


def _inf_conv_grid(g, theta, t, X, chunk=2000):
    nodes = g.lattice.nodes()
    vals = np.empty(len(X))
    arg = np.empty((len(X), g.dimension))
    for s in range(0, len(X), chunk):
        Xc = X[s:s + chunk]
        tot = g.values[None, :] + t * theta((Xc[:, None, :] - nodes[None, :, :]) / t)
        k = np.argmin(tot, axis=1)
        vals[s:s + chunk] = tot[np.arange(len(Xc)), k]
        arg[s:s + chunk] = nodes[k]
    return vals, arg


def inf_convolution_dual(f, theta, t, x):
    """``max_{w in simplex} sum_k w_k l_k(x) - t theta*(sum_k w_k a_k)`` (independent route)."""
    x = check_vector(x, f.dimension)
    A, b = f.slopes, f.intercepts
    K = len(b)
    lin = A @ x + b

    def neg(w):
        w = np.maximum(w, 0)
        w = w / w.sum()
        val = float(theta.conjugate(w @ A))
        return -(w @ lin - t * val) if math.isfinite(val) else 1e300

    best = -math.inf
    starts = [np.full(K, 1.0 / K)] + [np.eye(K)[k] * 0.98 + 0.02 / K for k in range(K)]
    for w0 in starts:
        res = minimize(neg, w0, method="SLSQP", bounds=[(0, 1)] * K,
                       constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1}],
                       options={"ftol": 1e-15, "maxiter": 1000})
        best = max(best, -float(res.fun), -neg(w0))
    return best


# ---------------------------------------------------------------- verifiers

def semigroup_check(f, theta, s, t, lattice, *, lipschitz=None, mode="grid", tol=None):
    """Compare ``Q_t(Q_s f)`` with ``Q_{s+t} f`` on the nodes of ``lattice``.

    ``mode="grid"`` evaluates ``Q_s f`` on a padded copy of the lattice and
    takes the outer infimum over its nodes, which costs ``O(h)``; the default
    tolerance is ``2 L h + 1e-8``. ``mode="nested"`` (one dimension) nests the
    continuous solver and is accurate to solver tolerance.
    """
    s = check_positive(s, "s")
    t = check_positive(t, "t")
    L = lipschitz if lipschitz is not None else getattr(f, "lipschitz", None)
    nodes = lattice.nodes()
    h = lattice.spacing
    rhs = inf_convolution(f, theta, s + t, nodes)
    if mode == "grid":
        if L is None:
            raise InputError("grid mode needs a Lipschitz constant")
        r = _profile_radius(theta, L)
        if r is None:
            r = float(np.max(search_radius(f, theta, t, nodes))) / t
        padded = lattice.pad(RADIUS_PADDING * t * r + h)
        inner = GridFunction(padded, inf_convolution(f, theta, s, padded.nodes()))
        lhs = inf_convolution(inner, theta, t, nodes)
        default_tol = 2 * L * h + 1e-8
    elif mode == "nested":
        if theta.dimension != 1:
            raise UnsupportedInputError("nested mode is one dimensional")

        def inner(y):
            return inf_convolution(f, theta, s, np.asarray(y, dtype=float).reshape(-1, 1))

        lhs = inf_convolution(inner, theta, t, nodes)
        default_tol = 1e-6
    else:
        raise InputError(f"unknown mode {mode!r}")
    defect = np.abs(lhs - rhs)
    k = int(np.argmax(defect))
    rep = VerificationReport("semigroup", 0.0)
    rep.add(float(defect[k]), tol if tol is not None else default_tol,
            {"argmax": nodes[k].tolist()})
    rep.details.update({"max_defect": float(defect[k]), "h": h, "mode": mode})
    return rep


def _central_space_gradient(U, h, dim_shape):
    """Central differences on interior nodes of an array shaped ``(T, *space)``."""
    grads = []
    for ax in range(len(dim_shape)):
        g = (np.roll(U, -1, axis=ax + 1) - np.roll(U, 1, axis=ax + 1)) / (2 * h)
        grads.append(g)
    return np.sqrt(sum(g * g for g in grads))


def _second_difference(U, h, dim_shape):
    out = np.zeros_like(U)
    for ax in range(len(dim_shape)):
        out = np.maximum(out, np.abs(np.roll(U, -1, axis=ax + 1) - 2 * U
                                     + np.roll(U, 1, axis=ax + 1)))
    return out


def _interior_mask(shape):
    mask = np.ones(shape, dtype=bool)
    for ax, n in enumerate(shape):
        sl = [slice(None)] * len(shape)
        sl[ax] = 0
        mask[tuple(sl)] = False
        sl[ax] = n - 1
        mask[tuple(sl)] = False
    return mask


def hj_residual(f, alpha, times, lattice, *, guard=0.05, kink_factor=10.0):
    """Residual ``d_t u + alpha*(|grad_x u|)`` of ``u(t, x) = Q_t f(x)``.

    Derivatives are central differences on interior nodes of the
    time-by-space grid. Nodes with ``|grad u| > (1 - guard) L`` or with a
    scaled second difference ``|u(x+h) - 2u(x) + u(x-h)| / h`` above
    ``kink_factor * h`` are excluded and counted.
    """
    if not isinstance(alpha, RadialAlpha):
        raise InputError("hj_residual expects a RadialAlpha cost")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 3 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise InputError("times must be an increasing grid of at least 3 positive values")
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=1e-9):
        raise InputError("times must be equally spaced")
    dt = dt[0]
    h = lattice.spacing
    nodes = lattice.nodes()
    U = np.stack([inf_convolution(f, alpha, t, nodes) for t in times])
    U = U.reshape((len(times),) + lattice.shape)
    grad = _central_space_gradient(U, h, lattice.shape)
    du = np.empty_like(U)
    du[1:-1] = (U[2:] - U[:-2]) / (2 * dt)
    resid = du + alpha.profile_conjugate(grad)
    mask = _interior_mask(U.shape)
    steep = grad > (1 - guard) * alpha.L
    kink = _second_difference(U, h, lattice.shape) / h > kink_factor * h
    judged = mask & ~steep & ~kink
    r = np.abs(resid[judged])
    return {
        "max_residual": float(r.max()) if r.size else 0.0,
        "mean_residual": float(r.mean()) if r.size else 0.0,
        "judged_nodes": int(judged.sum()),
        "excluded_steep": int((mask & steep).sum()),
        "excluded_kink": int((mask & kink & ~steep).sum()),
        "h": h,
        "dt": float(dt),
    }


def lipschitz_and_displacement_check(f, alpha, t, lattice, *, tol=1e-8):
    """Check ``Lip(u(t, .)) <= L`` on the grid and ``|u(t, x) - f(x)| <= C L^2 t``.

    ``L`` is the slope cap of ``alpha`` and ``f`` must be ``L``-Lipschitz.
    """
    if not isinstance(alpha, RadialAlpha):
        raise InputError("expected a RadialAlpha cost")
    if f.lipschitz > alpha.L * (1 + 1e-12):
        raise InputError("f must be L-Lipschitz with L the slope cap of the cost")
    t = check_positive(t, "t")
    nodes = lattice.nodes()
    h = lattice.spacing
    u = inf_convolution(f, alpha, t, nodes).reshape(lattice.shape)
    lip = 0.0
    for ax in range(lattice.dimension):
        d = np.abs(np.diff(u, axis=ax)) / h
        if d.size:
            lip = max(lip, float(d.max()))
    disp = float(np.max(np.abs(u.reshape(-1) - f(nodes))))
    lip_rep = VerificationReport("hopflax-lipschitz", 0.0)
    lip_rep.add(lip, alpha.L + 1e-9 + SOLVER_TOL / h, {"t": t})
    disp_rep = VerificationReport("hopflax-displacement", 0.0)
    disp_rep.add(disp, alpha.alpha_C * alpha.L ** 2 * t + tol, {"t": t})
    return lip_rep, disp_rep


class InfConvolution(TransformerMixin, BaseEstimator):
    """Transformer mapping points ``x`` to ``Q_t f(x)``.

    Parameters
    ----------
    function : MaxAffineFunction or GridFunction
    cost : CostFunction
    t : float
    """

    def __init__(self, function=None, cost=None, t=1.0):
        self.function = function
        self.cost = cost
        self.t = t

    def fit(self, X=None, y=None):
        if self.function is None or self.cost is None:
            raise InputError("InfConvolution needs a function and a cost")
        check_positive(self.t, "t")
        if X is not None:
            check_points(X, dimension=self.cost.dimension)
        self.n_features_in_ = self.cost.dimension
        return self

    def transform(self, X):
        X = check_points(X, dimension=self.cost.dimension)
        return np.asarray(inf_convolution(self.function, self.cost, self.t, X)).reshape(-1, 1)
