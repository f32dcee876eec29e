"""Convex transport costs, their Legendre transforms and the induced norms.

All costs are even, convex, vanish only at the origin and act on the last
axis of their argument, so ``theta(X)`` with ``X`` of shape ``(..., n)``
returns an array of shape ``(...)``.
"""

import math

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ._validation import check_positive, check_vector
from .exceptions import InputError, UnsupportedInputError

#: Numeric conjugates above this value are read as divergent.
DIVERGENCE_SENTINEL = 1e6
NORM_RTOL = 1e-10
MAX_BISECT = 80


def _as_last_axis(x, dimension):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.shape[-1] != dimension:
        raise InputError(f"cost of dimension {dimension} applied to vectors of "
                         f"dimension {x.shape[-1]}")
    return x


class CostFunction:
    """Base class. Subclasses implement ``__call__`` and ``gradient``."""

    kind = "abstract"
    radial = False
    separable = False
    symmetric = True
    heuristic = False

    def __init__(self, dimension):
        if int(dimension) != dimension or dimension < 1:
            raise InputError("dimension must be a positive integer")
        self.dimension = int(dimension)

    def __call__(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def conjugate(self, y):
        raise UnsupportedInputError(f"no closed-form conjugate for {self.kind}")

    def params(self):
        return {}

    def to_dict(self):
        return {"kind": self.kind, "params": self.params(), "dimension": self.dimension}

    def scaled(self, t):
        """The cost ``x -> t theta(x / t)``."""
        return ScaledCost(self, t)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args}, dimension={self.dimension})"


class RadialCost(CostFunction):
    """``theta(x) = h(|x|)`` for a convex nondecreasing profile ``h`` on [0, inf)."""

    radial = True
    #: ``h'(s)`` stays bounded by this (``inf`` for superlinear growth)
    max_slope = math.inf

    def profile(self, s):
        raise NotImplementedError

    def profile_deriv(self, s):
        raise NotImplementedError

    def profile_conjugate(self, v):
        """Monotone conjugate ``h*(v) = sup_{u >= 0} (v u - h(u))`` for ``v >= 0``."""
        raise NotImplementedError

    def profile_deriv_inverse(self, v):
        """Smallest ``s >= 0`` with ``h'(s) >= v`` (``inf`` if none)."""
        raise NotImplementedError

    def __call__(self, x):
        x = _as_last_axis(x, self.dimension)
        return self.profile(np.linalg.norm(x, axis=-1))

    def gradient(self, x):
        x = _as_last_axis(x, self.dimension)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = self.profile_deriv(r) * x / r
        return np.where(r > 0, g, 0.0)

    def conjugate(self, y):
        y = _as_last_axis(y, self.dimension)
        return self.profile_conjugate(np.linalg.norm(y, axis=-1))

    def sublevel_radius(self, level):
        """``sup{s : h(s) <= level}`` by bisection."""
        return _bisect_radius(lambda s: float(self.profile(s)), level)

    def localization_radius(self, lipschitz):
        """Radius beyond which an ``L``-Lipschitz function cannot pay for transport.

        For ``|y - x| > t * R`` moving ``y`` towards ``x`` lowers the cost at
        least as fast as ``f`` can rise, so ``Q_t f(x)`` is attained within
        ``t * R``.
        """
        return self.profile_deriv_inverse(lipschitz)


class QuadLinear(RadialCost):
    """Quadratic-linear cost: ``|x|^2 / (2C)`` up to ``|x| = CD``, slope ``D`` after."""

    kind = "quadlinear"

    def __init__(self, C, D, dimension=1):
        super().__init__(dimension)
        self.C = check_positive(C, "C")
        self.D = check_positive(D, "D")
        self.max_slope = self.D

    @property
    def knot(self):
        return self.C * self.D

    def params(self):
        return {"C": self.C, "D": self.D}

    def profile(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        C, D = self.C, self.D
        return np.where(s <= C * D, s * s / (2 * C), D * s - C * D * D / 2)

    def profile_deriv(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        return np.minimum(s / self.C, self.D)

    def profile_conjugate(self, v):
        v = np.abs(np.asarray(v, dtype=float))
        with np.errstate(over="ignore"):
            return np.where(v <= self.D, self.C * v * v / 2, np.inf)

    def profile_deriv_inverse(self, v):
        if v > self.D:
            return math.inf
        return self.C * v


class RadialAlpha(QuadLinear):
    """Radial cost ``alpha(|x|)`` with ``alpha(s) = s^2/(4C)`` up to ``2CL``, slope ``L`` after.

    This is the quadratic-linear cost with parameters ``(2C, L)``; the
    conjugate is ``C s^2`` on ``[0, L]`` and ``+inf`` beyond.
    """

    kind = "radial_alpha"

    def __init__(self, C, L, dimension=1):
        C = check_positive(C, "C")
        L = check_positive(L, "L")
        super().__init__(2 * C, L, dimension)
        self.alpha_C = C
        self.L = L

    def params(self):
        return {"C": self.alpha_C, "L": self.L}

    def knot_values(self):
        """Both branch formulas evaluated at ``|s| = 2CL``."""
        C, L = self.alpha_C, self.L
        s = 2 * C * L
        return s * s / (4 * C), L * s - L * L * C


class Power(RadialCost):
    """``theta(x) = c |x|^r`` with ``r >= 1``."""

    kind = "power"

    def __init__(self, c, r, dimension=1):
        super().__init__(dimension)
        self.c = check_positive(c, "c")
        self.r = check_positive(r, "r")
        if self.r < 1:
            raise InputError("power cost needs r >= 1 to be convex")
        self.max_slope = self.c if self.r == 1 else math.inf

    def params(self):
        return {"c": self.c, "r": self.r}

    def profile(self, s):
        return self.c * np.abs(np.asarray(s, dtype=float)) ** self.r

    def profile_deriv(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        if self.r == 1:
            return np.full_like(s, self.c)
        return self.c * self.r * s ** (self.r - 1)

    def profile_conjugate(self, v):
        v = np.abs(np.asarray(v, dtype=float))
        c, r = self.c, self.r
        if r == 1:
            return np.where(v <= c, 0.0, np.inf)
        u = (v / (c * r)) ** (1 / (r - 1))
        return v * u * (1 - 1 / r)

    def profile_deriv_inverse(self, v):
        c, r = self.c, self.r
        if r == 1:
            return 0.0 if v <= c else math.inf
        return (v / (c * r)) ** (1 / (r - 1))


class QuadPower(RadialCost):
    """``c |x|^2`` for ``|x| <= 1`` and ``c |x|^r`` beyond; convex for ``r >= 2``."""

    kind = "quadpower"

    def __init__(self, c, r, dimension=1):
        super().__init__(dimension)
        self.c = check_positive(c, "c")
        self.r = check_positive(r, "r")
        if self.r < 2:
            raise InputError("quad-power profile is convex only for r >= 2")

    def params(self):
        return {"c": self.c, "r": self.r}

    def profile(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        return self.c * np.where(s <= 1, s * s, s ** self.r)

    def profile_deriv(self, s):
        s = np.abs(np.asarray(s, dtype=float))
        return self.c * np.where(s <= 1, 2 * s, self.r * s ** (self.r - 1))

    def profile_conjugate(self, v):
        v = np.abs(np.asarray(v, dtype=float))
        c, r = self.c, self.r
        u_big = np.maximum(v / (c * r), 1.0) ** (1 / (r - 1))
        return np.where(v <= 2 * c, v * v / (4 * c),
                        np.where(v <= c * r, v - c, v * u_big * (1 - 1 / r)))

    def profile_deriv_inverse(self, v):
        c, r = self.c, self.r
        if v <= 2 * c:
            return v / (2 * c)
        if v <= c * r:
            return 1.0
        return (v / (c * r)) ** (1 / (r - 1))


class PerCoordinate(CostFunction):
    """Separable cost ``theta(x) = sum_i rho(x_i)`` over consecutive blocks.

    ``rho`` is a radial cost on R^block_size; ``x_i`` is the i-th block.
    """

    kind = "percoord"
    separable = True

    def __init__(self, block_cost, n_blocks):
        if not isinstance(block_cost, RadialCost):
            raise InputError("block cost must be radial")
        if int(n_blocks) != n_blocks or n_blocks < 1:
            raise InputError("n_blocks must be a positive integer")
        super().__init__(block_cost.dimension * int(n_blocks))
        self.block = block_cost
        self.block_size = block_cost.dimension
        self.n_blocks = int(n_blocks)

    def params(self):
        out = {"profile": self.block.kind, "block_size": self.block_size}
        out.update(self.block.params())
        return out

    def _blocks(self, x):
        x = _as_last_axis(x, self.dimension)
        return x.reshape(x.shape[:-1] + (self.n_blocks, self.block_size))

    def block_norms(self, x):
        return np.linalg.norm(self._blocks(x), axis=-1)

    def __call__(self, x):
        return self.block.profile(self.block_norms(x)).sum(axis=-1)

    def gradient(self, x):
        xb = self._blocks(x)
        g = self.block.gradient(xb)
        return g.reshape(g.shape[:-2] + (self.dimension,))

    def conjugate(self, y):
        return self.block.profile_conjugate(self.block_norms(y)).sum(axis=-1)


def PerCoordQuadLinear(C, D, n_blocks, block_size=1):
    """``sum_i theta_{C,D}(x_i)`` over ``n_blocks`` blocks of size ``block_size``."""
    return PerCoordinate(QuadLinear(C, D, block_size), n_blocks)


def per_coord_from_scale(c, n_blocks, block_size=1):
    """``sum_i h(|x_i| / c)`` with ``h(z) = z^2`` for ``z <= 1/2`` and ``z - 1/4`` after.

    ``h`` is the convex envelope of ``min(z^2, z)``; as a quadratic-linear
    cost it has ``C = c^2/2`` and ``D = 1/c``.
    """
    c = check_positive(c, "c")
    return PerCoordQuadLinear(c * c / 2, 1 / c, n_blocks, block_size)


class ScaledCost(CostFunction):
    """``x -> t theta(x / t)``; radial costs stay radial through their profile."""

    def __init__(self, base, t):
        super().__init__(base.dimension)
        self.base = base
        self.t = check_positive(t, "t")
        self.kind = f"scaled_{base.kind}"
        self.radial = False
        self.separable = base.separable

    def params(self):
        return {"t": self.t, "base": self.base.to_dict()}

    def __call__(self, x):
        return self.t * self.base(np.asarray(x, dtype=float) / self.t)

    def gradient(self, x):
        return self.base.gradient(np.asarray(x, dtype=float) / self.t)

    def conjugate(self, y):
        return self.t * self.base.conjugate(y)


class Custom(CostFunction):
    """User-supplied convex cost, validated by random midpoint tests.

    Parameters
    ----------
    func : callable
        Vectorized over the last axis.
    convex : bool
        Must be ``True``; the declaration is spot-checked on 100 segments.
    """

    kind = "custom"
    heuristic = True

    def __init__(self, func, dimension, *, convex=True, seed=0, n_checks=100):
        super().__init__(dimension)
        if not convex:
            raise UnsupportedInputError("cost functions must be convex")
        self.func = func
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n_checks, dimension)) * rng.choice([0.1, 1.0, 10.0], (n_checks, 1))
        b = rng.standard_normal((n_checks, dimension)) * rng.choice([0.1, 1.0, 10.0], (n_checks, 1))
        fa, fb, fm = self(a), self(b), self((a + b) / 2)
        if np.any(fm > (fa + fb) / 2 + 1e-12 * (1 + np.abs(fa) + np.abs(fb))):
            raise UnsupportedInputError("cost failed the midpoint convexity check")
        if abs(float(self(np.zeros(dimension)))) > 1e-12:
            raise InputError("cost must vanish at the origin")
        self.symmetric = bool(np.allclose(self(a), self(-a), rtol=1e-12, atol=1e-12))

    def __call__(self, x):
        x = _as_last_axis(x, self.dimension)
        return np.asarray(self.func(x), dtype=float)

    def gradient(self, x, eps=1e-7):
        x = _as_last_axis(x, self.dimension)
        g = np.empty_like(x)
        for i in range(self.dimension):
            e = np.zeros(self.dimension)
            e[i] = eps
            g[..., i] = (self(x + e) - self(x - e)) / (2 * eps)
        return g


# ---------------------------------------------------------------- conjugates

def legendre_radial(alpha, s):
    """Closed-form conjugate of the radial cost: ``C s^2`` on ``|s| <= L``, else ``inf``."""
    if not isinstance(alpha, RadialAlpha):
        raise InputError("legendre_radial expects a RadialAlpha cost")
    return float(alpha.profile_conjugate(s))


def legendre_quadlinear(theta, y):
    """Closed-form conjugate ``C|y|^2/2`` for ``|y| <= D``, else ``inf``."""
    if not isinstance(theta, QuadLinear):
        raise InputError("legendre_quadlinear expects a QuadLinear cost")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(theta.profile_conjugate(np.linalg.norm(y)))


def numeric_conjugate(profile, s, *, u_max=1e12, n_linear=20001, linear_span=None):
    """Grid supremum of ``s u - h(u)`` over ``u >= 0``, refined by Brent.

    Independent of the closed forms: it only evaluates the profile. The grid
    mixes a fine linear part with a geometric tail out to ``u_max`` so linear
    divergence shows up as a value far above ``DIVERGENCE_SENTINEL``.
    """
    s = abs(float(s))
    span = linear_span if linear_span is not None else max(10.0, 10 * s)
    grid = np.unique(np.concatenate([
        np.linspace(0.0, span, n_linear),
        np.geomspace(span, u_max, 2000),
    ]))
    vals = s * grid - profile(grid)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda u: -(s * u - float(profile(u))), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-13 * max(1.0, hi)})
        best = max(best, -float(res.fun))
    return best


# --------------------------------------------------------------------- norms

def _bisect_radius(g, level, *, rtol=NORM_RTOL):
    """``sup{s >= 0 : g(s) <= level}`` for nondecreasing ``g`` with ``g(0) = 0``."""
    if level <= 0:
        return 0.0
    hi = 1.0
    while g(hi) <= level:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    lo = 0.0
    while lo == 0.0 and g(hi / 2) > level and hi > 1e-300:
        hi /= 2.0
    lo = hi / 2 if g(hi / 2) <= level else 0.0
    for _ in range(4 * MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if g(mid) <= level:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


class SublevelSet:
    """``{x : theta(x) <= level}`` described through its radial function."""

    def __init__(self, cost, level):
        self.cost = cost
        self.level = check_positive(level, "level")

    def radius(self, direction):
        d = check_vector(direction, self.cost.dimension, name="direction")
        nd = np.linalg.norm(d)
        if nd == 0:
            raise InputError("direction must be nonzero")
        d = d / nd
        return _bisect_radius(lambda s: float(self.cost(s * d)), self.level)


def orlicz_norm(theta, p, x):
    """``inf{a > 0 : theta(x / a) <= p}`` by bisection on ``a``."""
    p = check_positive(p, "p")
    x = check_vector(x, theta.dimension)
    if not np.any(x):
        return 0.0
    # theta(x/a) <= p  <=>  a >= 1 / radius along x, so bisect on 1/a
    inv = _bisect_radius(lambda s: float(theta(s * x)), p)
    return 0.0 if math.isinf(inv) else 1.0 / inv


def _dual_norm_separable(theta, p, x):
    """Support function of ``{sum_i h(|y_i|) <= p}`` via the budget multiplier.

    ``sup <x, y> = inf_{nu > 0} nu * (p + sum_i h*(|x_i| / nu))``; the
    derivative in ``nu`` is ``p - sum_i h(s_i(nu))`` so the minimiser is found
    by bisection on the budget equation.
    """
    block = theta.block
    w = theta.block_norms(x)
    w = w[w > 0]
    if w.size == 0:
        return 0.0

    def budget(nu):
        s = np.array([block.profile_deriv_inverse(v) for v in w / nu])
        return float(np.sum(block.profile(s))) if np.all(np.isfinite(s)) else math.inf

    def value(nu):
        return nu * (p + float(np.sum(block.profile_conjugate(w / nu))))

    nu_min = float(w.max() / block.max_slope) if math.isfinite(block.max_slope) else 0.0
    if nu_min > 0 and budget(nu_min) <= p:
        return value(nu_min)
    lo = nu_min if nu_min > 0 else float(w.max()) * 1e-300
    hi = max(float(w.max()), lo * 2, 1e-300)
    while budget(hi) > p:
        hi *= 2.0
    if nu_min == 0:
        lo = hi
        while budget(lo) <= p and lo > 1e-300:
            lo /= 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        if budget(mid) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return min(value(lo), value(hi)) if math.isfinite(value(lo)) else value(hi)


def _dual_norm_heuristic(theta, p, x, *, starts=16, seed=0):
    """Multi-start ascent of ``<x, d> R(d)`` over unit directions ``d``."""
    rng = np.random.default_rng(seed)
    level = SublevelSet(theta, p)

    def neg(d):
        nd = np.linalg.norm(d)
        if nd == 0:
            return 0.0
        d = d / nd
        return -float(x @ d) * level.radius(d)

    best = -neg(x)
    for k in range(starts):
        d0 = x if k == 0 else rng.standard_normal(theta.dimension)
        res = minimize(neg, d0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return best


def dual_norm(theta, p, x, *, full_output=False, seed=0):
    """``sup{<x, y> : theta(y) <= p}``, the dual of the Orlicz norm of ``theta/p``.

    Radial costs use ``|x|`` times the sublevel radius, separable costs the
    budget multiplier; anything else falls back to a seeded multi-start ascent
    whose result is flagged heuristic.
    """
    p = check_positive(p, "p")
    x = check_vector(x, theta.dimension)
    if not theta.symmetric:
        raise UnsupportedInputError("dual norms need a symmetric cost")
    heuristic = False
    if not np.any(x):
        val = 0.0
    elif theta.radial:
        val = float(np.linalg.norm(x)) * theta.sublevel_radius(p)
    elif theta.separable:
        val = _dual_norm_separable(theta, p, x)
    else:
        heuristic = True
        val = _dual_norm_heuristic(theta, p, x, seed=seed)
    if full_output:
        return val, {"heuristic": heuristic}
    return val


def dual_norm_multiplier(theta, p, x):
    """Multiplier formula for any radial or separable cost (cross-check route)."""
    if theta.radial:
        theta = PerCoordinate(theta, 1)
    return _dual_norm_separable(theta, check_positive(p, "p"), check_vector(x, theta.dimension))


def rearranged_norm(x, p, r):
    """``p^(1/r) |(x*_i)_{i<=p}|_{r*} + sqrt(p) |(x*_i)_{i>p}|_2`` for integer ``p``."""
    xs = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    k = int(p)
    r_star = r / (r - 1)
    head = np.sum(xs[:k] ** r_star) ** (1 / r_star)
    tail = np.sqrt(np.sum(xs[k:] ** 2))
    return p ** (1 / r) * head + math.sqrt(p) * tail


def dual_norm_rearranged(theta, p, x):
    """Compare the numeric dual norm with the rearrangement formula.

    ``theta`` must be a per-coordinate :class:`QuadPower` cost with ``r > 2``
    on scalar blocks and ``p`` an integer in ``[1, n]``.
    """
    if not (isinstance(theta, PerCoordinate) and isinstance(theta.block, QuadPower)
            and theta.block_size == 1):
        raise InputError("expected a per-coordinate quad-power cost on scalar blocks")
    r = theta.block.r
    if not r > 2:
        raise InputError("the rearranged form needs r > 2")
    if int(p) != p or not 1 <= p <= theta.dimension:
        raise InputError("p must be an integer between 1 and the dimension")
    x = check_vector(x, theta.dimension)
    numeric = dual_norm(theta, p, x)
    formula = rearranged_norm(x, p, r)
    ratio = numeric / formula if formula > 0 else (1.0 if numeric == 0 else math.inf)
    return {"dual_norm": numeric, "rearranged": formula, "ratio": ratio}


def norm_comparison_check(theta, p, t, x, atol=1e-9):
    """``|x|*_{theta, tp} <= t |x|*_{theta, p}`` for ``t >= 1``."""
    if t < 1:
        raise InputError("t must be at least 1")
    lhs = dual_norm(theta, t * p, x)
    rhs = t * dual_norm(theta, p, x)
    return {"lhs": lhs, "rhs": rhs, "slack": rhs - lhs, "holds": bool(lhs <= rhs + atol)}


def quadlinear_dual_norm_sandwich(theta_scale, p, x):
    """Ratio ``c (sqrt(p)|x| + p max_i |x_i|) / |x|*`` for the scaled per-block cost.

    The two-sided comparison predicts a value in ``[1, 2]``.
    """
    theta = per_coord_from_scale(theta_scale, n_blocks=len(np.atleast_1d(x)))
    x = check_vector(x, theta.dimension)
    dn = dual_norm(theta, p, x)
    mid = theta_scale * (math.sqrt(p) * np.linalg.norm(x) + p * np.max(np.abs(x)))
    return {"dual_norm": dn, "middle": float(mid), "ratio": float(mid / dn) if dn > 0 else 1.0}


# ---------------------------------------------------------------------- I/O

_COST_PARAMS = {
    "quadlinear": {"C", "D"},
    "power": {"c", "r"},
    "radial_alpha": {"C", "L"},
    "quadpower": {"c", "r"},
}


def cost_from_dict(spec):
    from .io import reject_unknown

    reject_unknown(spec, {"kind", "params", "dimension", "schema"}, "cost")
    kind = spec.get("kind")
    params = dict(spec.get("params", {}))
    dim = spec.get("dimension", 1)
    if kind in _COST_PARAMS:
        reject_unknown(params, _COST_PARAMS[kind], f"{kind} params")
        cls = {"quadlinear": QuadLinear, "power": Power,
               "radial_alpha": RadialAlpha, "quadpower": QuadPower}[kind]
        try:
            return cls(**params, dimension=dim)
        except TypeError as exc:
            raise InputError(f"{kind} params: {exc}") from None
    if kind == "percoord":
        profile = params.pop("profile", "quadlinear")
        bs = int(params.pop("block_size", 1))
        if profile not in ("quadlinear", "quadpower"):
            raise InputError(f"unknown per-coordinate profile {profile!r}")
        if "scale" in params:
            reject_unknown(params, {"scale"}, "percoord params")
            if profile != "quadlinear":
                raise InputError("scale applies to the quadlinear profile only")
            return per_coord_from_scale(params["scale"], dim // bs, bs)
        reject_unknown(params, _COST_PARAMS[profile], "percoord params")
        if dim % bs:
            raise InputError("dimension must be a multiple of block_size")
        block = (QuadLinear if profile == "quadlinear" else QuadPower)(**params, dimension=bs)
        return PerCoordinate(block, dim // bs)
    raise InputError(f"unknown cost kind {kind!r}")
