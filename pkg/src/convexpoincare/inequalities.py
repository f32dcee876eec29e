"""Estimators and checkers for the functional inequalities.

Everything here is an exact finite sum over the atoms of a discrete measure;
nothing is sampled unless the caller passes samples as an empirical measure.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_points, check_positive, check_weights
from .constants import mls_concave_constant, mls_convex_constant
from .costs import RadialCost, dual_norm
from .exceptions import InputError
from .hopflax import TIE_TOL, MaxAffineFunction, inf_convolution
from .measures import DiscreteMeasure, entropy_of_exp, pushforward_stats, quantile_radius
from .reports import VerificationReport

DUAL_TOL = 1e-8


# ------------------------------------------------------ Poincare estimation

def poincare_ratio(mu, f):
    """``Var f / E |grad f|^2`` under ``mu`` (0 when the denominator vanishes)."""
    vals = f(mu.points)
    g2 = mu.expect(f.gradient_norm(mu.points) ** 2)
    if g2 <= 0:
        return 0.0
    mean = mu.expect(vals)
    return mu.expect((vals - mean) ** 2) / g2


@dataclass
class PoincareEstimate:
    best_ratio: float
    lambda_hat: float
    witness: MaxAffineFunction
    restarts_used: int

    def to_dict(self):
        return {"best_ratio": self.best_ratio, "lambda_hat": self.lambda_hat,
                "witness": self.witness.to_dict(), "restarts_used": self.restarts_used}


def _ratio_raw(X, w, A, b):
    """``poincare_ratio`` on raw arrays (the inner loop of the search)."""
    vals = X @ A.T + b
    top = vals.max(axis=1, keepdims=True)
    active = vals >= top - TIE_TOL * (1.0 + np.abs(top))
    g = np.where(active, np.linalg.norm(A, axis=1)[None, :], -np.inf).max(axis=1)
    g2 = float(w @ g ** 2)
    if g2 <= 0:
        return 0.0, top[:, 0], g2
    f = top[:, 0]
    mean = float(w @ f)
    return float(w @ (f - mean) ** 2) / g2, f, g2


def _normalize(X, w, A, b):
    """Rescale so that ``E |grad f|^2 = 1`` and ``E f = 0``; the ratio is unchanged."""
    _, f, g2 = _ratio_raw(X, w, A, b)
    if g2 <= 0:
        return A, b
    s = 1.0 / math.sqrt(g2)
    return A * s, b * s - s * float(w @ f)


def _local_search(mu, A, b, *, step=0.5, min_step=1e-9, max_evals=20000):
    """Coordinate perturbation with step halving on slopes and intercepts."""
    X, w = mu.points, mu.weights
    A, b = _normalize(X, w, A.copy(), b.copy())
    best = _ratio_raw(X, w, A, b)[0]
    evals = 0
    while step > min_step and evals < max_evals:
        improved = False
        for idx in range(A.size + b.size):
            for sign in (1.0, -1.0):
                A2, b2 = A.copy(), b.copy()
                if idx < A.size:
                    A2.flat[idx] += sign * step
                else:
                    b2[idx - A.size] += sign * step
                # score the normalized candidate so the stored witness
                # reproduces its ratio exactly (ties are decided after the shift)
                A2, b2 = _normalize(X, w, A2, b2)
                val = _ratio_raw(X, w, A2, b2)[0]
                evals += 1
                if val > best + 1e-15:
                    best, A, b = val, A2, b2
                    improved = True
                    break
        if not improved:
            step /= 2.0
    return best, A, b


def estimate_convex_poincare(mu, k_pieces=2, restarts=16, seed=0):
    """Lower bound on ``sup_f Var f / E |grad f|^2`` over ``k``-piece max-affine ``f``.

    Multi-start local search; each start for ``k`` pieces also includes the
    best ``(k-1)``-piece witness with a duplicated piece, so the estimate
    never decreases in ``k``. ``lambda_hat = 1 / best_ratio`` is therefore an
    upper bound on the best convex Poincare constant.
    """
    if int(k_pieces) != k_pieces or k_pieces < 2:
        raise InputError("k_pieces must be an integer >= 2")
    if int(restarts) != restarts or restarts < 1:
        raise InputError("restarts must be a positive integer")
    n = mu.dimension
    if len(mu) < 2:
        return PoincareEstimate(0.0, math.inf, MaxAffineFunction.constant(0.0, n), 0)
    rng = np.random.default_rng(seed)
    spread = float(np.max(np.ptp(mu.points, axis=0))) or 1.0
    warm = None
    for k in range(2, int(k_pieces) + 1):
        best = (-1.0, None, None)
        starts = []
        if warm is not None:
            A0, b0 = warm
            starts.append((np.vstack([A0, A0[-1:]]), np.append(b0, b0[-1] - 1e-3)))
        for _ in range(int(restarts)):
            # anchor each piece at a random point of the convex hull of the
            # support so that kinks start between atoms; the ratio is flat
            # while all atoms sit on one piece
            A = rng.standard_normal((k, n))
            Z = rng.dirichlet(np.ones(len(mu)), size=k) @ mu.points
            b = -np.einsum("ij,ij->i", A, Z) + 0.01 * spread * rng.standard_normal(k)
            starts.append((A, b))
        for A, b in starts:
            val, A, b = _local_search(mu, A, b)
            if val > best[0]:
                best = (val, A, b)
        warm = (best[1], best[2])
    witness = MaxAffineFunction(*warm)
    ratio = poincare_ratio(mu, witness)
    lam_hat = 1.0 / ratio if ratio > 0 else math.inf
    return PoincareEstimate(ratio, lam_hat, witness, int(restarts))


class ConvexPoincareEstimator(BaseEstimator):
    """Estimate the convex Poincare constant of the empirical measure of ``X``.

    Parameters
    ----------
    k_pieces : int
        Number of affine pieces of the test functions.
    restarts : int
        Random starts per piece count.
    random_state : int
    """

    def __init__(self, k_pieces=2, restarts=16, random_state=0):
        self.k_pieces = k_pieces
        self.restarts = restarts
        self.random_state = random_state

    def fit(self, X, y=None, sample_weight=None):
        X = check_points(X)
        w = check_weights(sample_weight, X.shape[0])
        est = estimate_convex_poincare(DiscreteMeasure(X, w), self.k_pieces, self.restarts,
                                       self.random_state)
        self.best_ratio_ = est.best_ratio
        self.lambda_hat_ = est.lambda_hat
        self.witness_ = est.witness
        self.restarts_used_ = est.restarts_used
        self.n_features_in_ = X.shape[1]
        return self


# ------------------------------------------------------------ dual checks

def _prepare(mu, theta, f):
    """Make ``f`` bounded below where it matters and shift it to ``min = 0`` on the support.

    Both functionals are invariant under ``f -> f + const``. If ``f`` is
    unbounded below and steeper than the cost allows, it is replaced by
    ``max(f, m)`` with ``m`` its minimum over the bounding box of the support;
    this leaves ``f`` unchanged on the box.
    """
    if f.dimension != mu.dimension:
        raise InputError("function and measure dimensions differ")
    cap = theta.max_slope if isinstance(theta, RadialCost) else math.inf
    if f.lipschitz > cap and not f.is_bounded_below():
        lo, hi = mu.points.min(axis=0), mu.points.max(axis=0)
        corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(mu.dimension, -1).T
        # a max-affine function attains its minimum over a box at a vertex or
        # in the interior; the interior minimum only matters if it is lower
        m = min(float(f(corners).min()), float(f(mu.points).min()))
        from scipy.optimize import linprog

        n = mu.dimension
        res = linprog(np.r_[np.zeros(n), 1.0],
                      A_ub=np.hstack([f.slopes, -np.ones((len(f.intercepts), 1))]),
                      b_ub=-f.intercepts, bounds=list(zip(lo, hi)) + [(None, None)],
                      method="highs")
        if res.status == 0:
            m = min(m, float(res.fun))
        f = MaxAffineFunction(np.vstack([f.slopes, np.zeros(n)]), np.append(f.intercepts, m))
    shift = float(f(mu.points).min())
    return f.shifted(-shift)


def _logmeanexp(mu, v):
    top = float(np.max(v))
    return top + math.log(mu.expect(np.exp(v - top)))


def dual_value(mu, theta, f, kind, t=None):
    """One of the three dual functionals, evaluated exactly on the support.

    ``kind`` is ``"plus"`` (``exp(E Q_1 f) E e^{-f}``), ``"minus"``
    (``E e^{Q_1 f} exp(-E f)``) or ``"t"`` (``E e^{Q_t f} E e^{-f}``).
    """
    f = _prepare(mu, theta, f)
    vals = f(mu.points)
    tt = 1.0 if kind in ("plus", "minus") else float(t)
    if not np.any(f.slopes):
        q = vals.copy()
    else:
        q = np.asarray(inf_convolution(f, theta, tt, mu.points))
    if kind == "plus":
        log_val = mu.expect(q) + _logmeanexp(mu, -vals)
    elif kind == "minus":
        log_val = _logmeanexp(mu, q) - mu.expect(vals)
    elif kind == "t":
        log_val = _logmeanexp(mu, q) + _logmeanexp(mu, -vals)
    else:
        raise InputError(f"unknown dual functional {kind!r}")
    return math.exp(log_val)


def _dual_check(name, mu, theta, functions, kind, t=None, tol=DUAL_TOL):
    if isinstance(functions, MaxAffineFunction):
        functions = [functions]
    rep = VerificationReport(name, tol)
    worst = 0.0
    for idx, f in enumerate(functions):
        v = dual_value(mu, theta, f, kind, t)
        worst = max(worst, v)
        rep.add(v, 1.0, {"index": idx, "function": f.to_dict()})
    rep.details["max_value"] = worst
    return rep


def check_dual_Tplus(mu, theta, f, tol=DUAL_TOL):
    """``exp(int Q_1 f dmu) int e^{-f} dmu <= 1``."""
    return _dual_check("dual-t+", mu, theta, f, "plus", tol=tol)


def check_dual_Tminus(mu, theta, f, tol=DUAL_TOL):
    """``int e^{Q_1 f} dmu exp(-int f dmu) <= 1``."""
    return _dual_check("dual-t-", mu, theta, f, "minus", tol=tol)


def check_inf_convolution_t2(mu, theta, f, tol=DUAL_TOL, t=2.0):
    """``int e^{Q_t f} dmu int e^{-f} dmu <= 1`` at ``t = 2``."""
    return _dual_check("ic2", mu, theta, f, "t", t=t, tol=tol)


# -------------------------------------------------- modified log-Sobolev

def _as_list(functions):
    return [functions] if isinstance(functions, MaxAffineFunction) else list(functions)


def check_mls_convex(mu, f, lam, c, tol=1e-12):
    """``Ent(e^f) <= C(lambda, c) E |grad f|^2 e^f`` for slopes bounded by ``c``.

    ``lambda`` must be a valid convex Poincare constant of ``mu``; that is
    the caller's responsibility and is recorded in the report.
    """
    C = mls_convex_constant(lam, c)
    rep = VerificationReport("mls-convex", tol)
    rep.details.update({"constant": C, "lambda_is_caller_supplied": True})
    for idx, g in enumerate(_as_list(f)):
        if g.lipschitz > c * (1 + 1e-12):
            raise InputError(f"slope norm {g.lipschitz} exceeds the cap c = {c}")
        vals = g(mu.points)
        lhs = entropy_of_exp(mu, vals)
        rhs = C * mu.expect(g.gradient_norm(mu.points) ** 2 * np.exp(vals))
        rep.add(lhs, rhs, {"index": idx})
    return rep


def check_mls_concave(mu, f, lam, c, M=None, tol=1e-12):
    """``Ent(e^{-f}) <= C(lambda, c, M) E |grad f|^2 e^{-f}`` for slopes below ``c``.

    ``M`` defaults to the 3/4-quantile radius of ``mu`` around its mean.
    """
    if M is None:
        M = quantile_radius(mu, 0.75)
    C = mls_concave_constant(lam, c, M)
    rep = VerificationReport("mls-concave", tol)
    rep.details.update({"constant": C, "M": M, "lambda_is_caller_supplied": True})
    worst_ratio = 0.0
    for idx, g in enumerate(_as_list(f)):
        if g.lipschitz > c * (1 + 1e-12):
            raise InputError(f"slope norm {g.lipschitz} exceeds the cap c = {c}")
        vals = g(mu.points)
        lhs = entropy_of_exp(mu, -vals)
        den = mu.expect(g.gradient_norm(mu.points) ** 2 * np.exp(-vals))
        rep.add(lhs, C * den, {"index": idx})
        if den > 0:
            worst_ratio = max(worst_ratio, lhs / den)
    rep.details["empirical_ratio"] = worst_ratio
    return rep


# -------------------------------------------------------- tail calculators

@dataclass(frozen=True)
class BoundResult:
    value: float
    applicable: bool = True
    note: str = ""
    threshold: float = None

    def to_dict(self):
        return {"value": self.value, "applicable": self.applicable, "note": self.note,
                "threshold": self.threshold}


def _na(note):
    return BoundResult(math.nan, False, note)


def upper_tail(lam, L, t):
    """``P(f >= Med f + t) <= 8 exp(-0.52 sqrt(lambda) t / L)``."""
    if t < 0:
        return _na("t must be nonnegative")
    return BoundResult(8 * math.exp(-0.52 * math.sqrt(lam) * t / L))


def moment_upper(lam, p, g_p):
    """``||(f - Med f)_+||_p <= p / sqrt(2 lambda) * ||grad f||_p`` for ``p >= 2``."""
    if p < 2:
        return _na("the moment bound is stated for p >= 2")
    return BoundResult(p / math.sqrt(2 * lam) * g_p)


def lower_tail(lam, M, G, t):
    """``P(f <= Med f - t) <= 8 exp(-t sqrt(lambda) / (32 G))`` for ``t > 32 M G``."""
    if not t > 32 * M * G:
        return _na("needs t > 32 M E|grad f|")
    return BoundResult(8 * math.exp(-t * math.sqrt(lam) / (32 * G)))


def enlargement(mu_A, r):
    """``mu((A + B_theta(r))^c) <= e^{-r} / mu(A)``."""
    if not 0 < mu_A <= 1:
        return _na("mu(A) must lie in (0, 1]")
    return BoundResult(math.exp(-r) / mu_A)


def lipschitz_conc(p):
    """``P(|f - Med f| > sup |grad f|*_{theta,p}) <= 4 e^{-p}``."""
    if p < 0:
        return _na("p must be nonnegative")
    return BoundResult(4 * math.exp(-p))


def selfnorm_moment(p):
    """``||(f - Med f)_+ / |grad f|*||_p <= 3^{1/p}`` for ``p >= 1``."""
    if p < 1:
        return _na("needs p >= 1")
    return BoundResult(3 ** (1 / p))


def nonlip_lower(p, mean_dual_grad=None):
    """``P(f < Med f - 16 E|grad f|*) <= 4 e^{-p}``."""
    if p < 0:
        return _na("p must be nonnegative")
    thr = None if mean_dual_grad is None else 16 * mean_dual_grad
    return BoundResult(4 * math.exp(-p), threshold=thr)


def nonlip_lower_quantile(p, q, M_pq):
    """``P(f < Med f - M (1 + log(8/(2q - 1)))) <= 4 e^{-p}`` for ``q in (1/2, 1]``."""
    if not (p > 0 and 0.5 < q <= 1):
        return _na("needs p > 0 and q in (1/2, 1]")
    return BoundResult(4 * math.exp(-p), threshold=M_pq * (1 + math.log(8 / (2 * q - 1))))


def lower_lp(p, mean_dual_grad):
    """``||(f - Med f)_-||_p <= 48 E|grad f|*``."""
    if not p > 0:
        return _na("needs p > 0")
    return BoundResult(48 * mean_dual_grad)


def combined(t, p, tail_of_dual_grad):
    """``P(f - Med f >= t) <= e^{-p} + P(|grad f|* >= t / (3e))`` for ``p >= 1``.

    ``tail_of_dual_grad`` maps a level ``s`` to ``P(|grad f|* >= s)``.
    """
    if p < 1:
        return _na("needs p >= 1")
    return BoundResult(math.exp(-p) + float(tail_of_dual_grad(t / (3 * math.e))))


def moment_quantile(p, norm_p):
    """``P(|f - Med f| >= 3 e^2 || |grad f|* ||_p) <= 6 e^{-p}`` for ``p >= 1``."""
    if p < 1:
        return _na("needs p >= 1")
    return BoundResult(6 * math.exp(-p), threshold=3 * math.e ** 2 * norm_p)


TAIL_BOUNDS = {
    "upper_tail": upper_tail,
    "moment_upper": moment_upper,
    "lower_tail": lower_tail,
    "enlargement": enlargement,
    "lipschitz_conc": lipschitz_conc,
    "selfnorm_moment": selfnorm_moment,
    "nonlip_lower": nonlip_lower,
    "nonlip_lower_quantile": nonlip_lower_quantile,
    "lower_lp": lower_lp,
    "moment_quantile": moment_quantile,
}


def tail_bound(kind, **params):
    if kind not in TAIL_BOUNDS:
        raise InputError(f"unknown bound {kind!r}; choose from {sorted(TAIL_BOUNDS)}")
    return TAIL_BOUNDS[kind](**params)


# ------------------------------------------------ empirical concentration

CONCENTRATION_MODES = ("lipschitz", "selfnorm", "lower_quantile", "lower_mean", "lower_lp",
                       "moment_quantile")


def _weighted_quantile(values, weights, q):
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    k = int(np.searchsorted(cum, q - 1e-12, side="left"))
    return float(values[order][min(k, len(values) - 1)])


def dual_gradient_norms(mu, f, theta, p):
    """``|grad f(x)|*_{theta,p}`` at each atom; ties take the largest active piece."""
    piece_norms = np.array([dual_norm(theta, p, a) for a in f.slopes])
    active = f.active_sets(mu.points)
    return np.where(active, piece_norms[None, :], -np.inf).max(axis=1), piece_norms


def empirical_concentration_check(mu, f, theta, p, *, mode="lipschitz", q=0.75, tol=1e-12):
    """Exact probabilities and moments under ``mu`` compared with the concentration bounds.

    Modes
    -----
    lipschitz
        ``P(|f - Med f| > S) <= 4 e^{-p}`` with ``S`` the largest dual norm of
        a slope that is active somewhere.
    selfnorm
        ``||(f - Med f)_+ / |grad f|*||_p <= 3^{1/p}`` with ``0/0 = 0``.
    lower_quantile
        ``P(f < Med f - M (1 + log(8/(2q-1)))) <= 4 e^{-p}`` with ``M`` the
        ``q``-quantile of ``|grad f|*``.
    lower_mean
        ``P(f < Med f - 16 E|grad f|*) <= 4 e^{-p}``.
    lower_lp
        ``||(f - Med f)_-||_p <= 48 E|grad f|*``.
    moment_quantile
        ``P(|f - Med f| >= 3 e^2 || |grad f|* ||_p) <= 6 e^{-p}``.
    """
    if mode not in CONCENTRATION_MODES:
        raise InputError(f"unknown mode {mode!r}")
    functions = _as_list(f)
    rep = VerificationReport(f"concentration-{mode}", tol)
    rep.details["p"] = p
    for idx, g in enumerate(functions):
        st = pushforward_stats(mu, g)
        dev = st.values - st.median
        w = mu.weights
        dg, piece_norms = dual_gradient_norms(mu, g, theta, p)
        payload = {"index": idx}
        if mode == "lipschitz":
            S = float(piece_norms[g.pieces_active_somewhere()].max())
            lhs, rhs = float(w[np.abs(dev) > S].sum()), lipschitz_conc(p).value
        elif mode == "selfnorm":
            if p < 1:
                raise InputError("selfnorm mode needs p >= 1")
            num = np.maximum(dev, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(num > 0, num / dg, 0.0)
            lhs, rhs = float(w @ ratio ** p) ** (1 / p), selfnorm_moment(p).value
        elif mode == "lower_quantile":
            M = _weighted_quantile(dg, w, q)
            b = nonlip_lower_quantile(p, q, M)
            if not b.applicable:
                raise InputError(f"lower_quantile: {b.note}")
            lhs, rhs = float(w[dev < -b.threshold].sum()), b.value
            payload["M"] = M
        elif mode == "lower_mean":
            b = nonlip_lower(p, float(w @ dg))
            lhs, rhs = float(w[dev < -b.threshold].sum()), b.value
        elif mode == "lower_lp":
            lhs = float(w @ np.maximum(-dev, 0.0) ** p) ** (1 / p)
            rhs = lower_lp(p, float(w @ dg)).value
        else:
            b = moment_quantile(p, float(w @ dg ** p) ** (1 / p))
            if not b.applicable:
                raise InputError(f"moment_quantile: {b.note}")
            if b.threshold == 0:
                # zero dual gradient on the support means f is constant there;
                # the non-strict event {|f - Med f| >= 0} is then certain
                rep.add_vacuous()
                continue
            lhs, rhs = float(w[np.abs(dev) >= b.threshold].sum()), b.value
        if mode in ("lipschitz", "lower_quantile", "lower_mean", "moment_quantile") and rhs >= 1:
            rep.add_vacuous()
            continue
        rep.add(lhs, rhs, payload)
    return rep
