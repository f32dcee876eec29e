"""Standard and weak (barycentric) optimal transport between discrete measures.

The standard problem is solved exactly by a transportation simplex. The weak
problem ``inf_pi sum_i mu_i theta(x_i - b_i(pi))`` is convex in the coupling
and is solved by away-step Frank-Wolfe whose linear oracle is again the
transportation simplex.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .costs import CostFunction, Power
from .exceptions import InputError, ResourceError, UnsupportedInputError
from .measures import DiscreteMeasure, relative_entropy
from .reports import VerificationReport

MAX_LP_SIZE = 10_000
MARGINAL_TOL = 1e-10
FW_GAP_TOL = 1e-8
FW_MAX_ITER = 10_000
# objective changes below this (relative) are treated as round-off
ROUNDOFF = 1e-14
# Newton steps on the support face are attempted while the face is this small
NEWTON_MAX_DIM = 400


# ------------------------------------------------------ transportation simplex

def _northwest_corner(a, b):
    m, k = len(a), len(b)
    x = np.zeros((m, k))
    ra, rb = a.astype(float).copy(), b.astype(float).copy()
    basis = []
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        x[i, j] = q
        basis.append((i, j))
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == k - 1:
            break
        if i == m - 1:
            j += 1
        elif j == k - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    # the staircase never leaves mass behind except round-off in the corner
    return x, basis


def _tree_potentials(cost, basis, m, k):
    """Duals with ``u_i + v_j = c_ij`` on the spanning tree of basic cells."""
    adj = [[] for _ in range(m + k)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    pot = np.full(m + k, np.nan)
    parent = np.full(m + k, -1)
    pot[0] = 0.0
    stack = [0]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if np.isnan(pot[nb]):
                if node < m:
                    pot[nb] = cost[node, nb - m] - pot[node]
                else:
                    pot[nb] = cost[nb, node - m] - pot[node]
                parent[nb] = node
                stack.append(nb)
    return pot[:m], pot[m:], parent


def _tree_path(parent, start, end):
    """Nodes on the tree path from ``start`` to ``end`` (root-based parents)."""
    up_s = [start]
    while parent[up_s[-1]] >= 0:
        up_s.append(parent[up_s[-1]])
    up_e = [end]
    while parent[up_e[-1]] >= 0:
        up_e.append(parent[up_e[-1]])
    common = set(up_s) & set(up_e)
    s_part = list(itertools.takewhile(lambda n: n not in common, up_s))
    e_part = list(itertools.takewhile(lambda n: n not in common, up_e))
    lca = up_s[len(s_part)]
    return s_part + [lca] + e_part[::-1]


def transportation_simplex(cost, a, b, *, tol=1e-12, max_iter=None):
    """Minimize ``<cost, x>`` over couplings of ``a`` and ``b``.

    Returns ``(x, u, v, certificate)`` where ``certificate`` is the largest
    complementary slackness / dual feasibility residual. Entering cells are
    chosen by most negative reduced cost with index tie-breaking, switching to
    Bland's rule after a run of degenerate pivots.
    """
    cost = np.asarray(cost, dtype=float)
    m, k = cost.shape
    if m * k > MAX_LP_SIZE:
        raise ResourceError(f"transport problem of size {m}x{k} exceeds {MAX_LP_SIZE} cells")
    x, basis = _northwest_corner(a, b)
    scale = max(1.0, float(np.abs(cost).max()))
    max_iter = max_iter or 50 * (m + k) * (m + k) + 1000
    degenerate_run = 0
    for _ in range(max_iter):
        u, v, parent = _tree_potentials(cost, basis, m, k)
        red = cost - u[:, None] - v[None, :]
        neg = red < -tol * scale
        if not neg.any():
            break
        if degenerate_run > m + k:
            flat = int(np.flatnonzero(neg.reshape(-1))[0])
        else:
            flat = int(np.argmin(red))
        ei, ej = divmod(flat, k)
        path = _tree_path(parent, m + ej, ei)
        cells = []
        for p, q in zip(path[:-1], path[1:]):
            cells.append((q, p - m) if p >= m else (p, q - m))
        minus = cells[0::2]
        plus = cells[1::2]
        step = min(x[c] for c in minus)
        leave = min(c for c in minus if x[c] <= step)
        degenerate_run = degenerate_run + 1 if step <= 0 else 0
        x[ei, ej] += step
        for c in minus:
            x[c] -= step
        for c in plus:
            x[c] += step
        x[leave] = 0.0
        basis.remove(leave)
        basis.append((ei, ej))
    else:
        raise ResourceError("transportation simplex hit its iteration limit")
    np.maximum(x, 0.0, out=x)
    u, v, _ = _tree_potentials(cost, basis, m, k)
    red = cost - u[:, None] - v[None, :]
    certificate = max(0.0, float(-red.min()), float(np.max(np.abs(x * red))))
    return x, u, v, certificate


# --------------------------------------------------------------- couplings

@dataclass(frozen=True, eq=False)
class Coupling:
    """Coupling ``pi`` of ``mu`` (rows) and ``nu`` (columns)."""

    mu: DiscreteMeasure
    nu: DiscreteMeasure
    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (len(self.mu), len(self.nu)):
            raise InputError("coupling shape does not match the marginals")
        if np.any(pi < -MARGINAL_TOL):
            raise InputError("coupling has negative entries")
        object.__setattr__(self, "pi", np.maximum(pi, 0.0))

    @property
    def marginal_residual(self):
        return max(float(np.abs(self.pi.sum(axis=1) - self.mu.weights).max()),
                   float(np.abs(self.pi.sum(axis=0) - self.nu.weights).max()))

    def conditionals(self):
        """Rows ``p_{x_i}(j) = pi_ij / mu_i``."""
        return self.pi / self.mu.weights[:, None]

    def barycenters(self):
        return self.conditionals() @ self.nu.points


@dataclass(frozen=True, eq=False)
class BarycentricPlan:
    coupling: Coupling
    barycenters: np.ndarray
    cost: float
    gap: float
    iterations: int = 0
    history: tuple = ()

    def to_dict(self):
        return {
            "pi": self.coupling.pi.tolist(),
            "barycenters": self.barycenters.tolist(),
            "cost": float(self.cost),
            "gap": float(self.gap),
        }


def _check_pair(mu, nu):
    if mu.dimension != nu.dimension:
        raise InputError(f"dimension mismatch: {mu.dimension} vs {nu.dimension}")


def _pairwise_cost(theta, X, Y):
    return theta(X[:, None, :] - Y[None, :, :])


def standard_ot(mu, nu, theta, *, return_certificate=False):
    """Exact ``inf_pi sum_ij pi_ij theta(x_i - y_j)`` and an optimal coupling."""
    _check_pair(mu, nu)
    C = _pairwise_cost(theta, mu.points, nu.points)
    pi, _, _, cert = transportation_simplex(C, mu.weights, nu.weights)
    out = (float(np.sum(pi * C)), Coupling(mu, nu, pi))
    return out + (cert,) if return_certificate else out


def w2_squared(mu0, mu1):
    """Quadratic transport cost ``inf_pi sum_ij pi_ij |x_i - y_j|^2``."""
    _check_pair(mu0, mu1)
    return standard_ot(mu0, mu1, Power(1.0, 2.0, mu0.dimension))[0]


# ------------------------------------------------------------ weak transport

class _WeakObjective:
    def __init__(self, mu, nu, theta):
        self.X, self.w = mu.points, mu.weights
        self.Y = nu.points
        self.theta = theta

    def barycenters(self, pi):
        return (pi @ self.Y) / self.w[:, None]

    def value(self, pi):
        return float(self.w @ self.theta(self.X - self.barycenters(pi)))

    def gradient(self, pi):
        g = self.theta.gradient(self.X - self.barycenters(pi))
        return -(g @ self.Y.T)

    def slope(self, pi, d):
        return float(np.sum(self.gradient(pi) * d))


def _line_search(obj, pi, d, gmax, iters=60):
    """Exact step on ``[0, gmax]`` by bisection on the sign of the derivative."""
    if obj.slope(pi + gmax * d, d) <= 0:
        return gmax
    lo, hi = 0.0, gmax
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if obj.slope(pi + mid * d, d) <= 0:
            lo = mid
        else:
            hi = mid
    # keep the better endpoint so the objective never goes up
    return lo if obj.value(pi + lo * d) <= obj.value(pi + hi * d) else hi


def _face_newton_direction(obj, pi, a, b):
    """Newton direction restricted to the face spanned by the support of ``pi``.

    Ill-conditioned instances (nearly collinear targets) make plain
    Frank-Wolfe crawl when the optimum is interior to a face; one Newton
    step on the face fixes that. The Hessian is taken by central
    differences of the gradient along a basis of the face.
    """
    m, k = pi.shape
    scale = float(pi.max())
    support = np.flatnonzero(pi.ravel() > 1e-12 * scale)
    A = np.zeros((m + k, support.size))
    A[support // k, np.arange(support.size)] = 1.0
    A[m + support % k, np.arange(support.size)] = 1.0
    N = null_space(A)
    r = N.shape[1]
    if r == 0 or r > NEWTON_MAX_DIM:
        return None
    basis = np.zeros((r, m * k))
    basis[:, support] = N.T
    basis = basis.reshape(r, m, k)
    g = np.array([np.sum(obj.gradient(pi) * e) for e in basis])
    eps = 1e-6 * scale
    H = np.empty((r, r))
    for j, e in enumerate(basis):
        diff = obj.gradient(pi + eps * e) - obj.gradient(pi - eps * e)
        H[:, j] = np.tensordot(basis, diff, axes=([1, 2], [0, 1])) / (2 * eps)
    evals, evecs = np.linalg.eigh(0.5 * (H + H.T))
    keep = evals > 1e-10 * max(float(evals.max()), 0.0) if evals.max() > 0 else evals > 0
    if not keep.any():
        return None
    step = -evecs[:, keep] @ ((evecs[:, keep].T @ g) / evals[keep])
    return np.tensordot(step, basis, axes=1)


def weak_ot(nu_target, mu_source, theta, *, gap_tol=FW_GAP_TOL, max_iter=FW_MAX_ITER,
            record_history=False):
    """Weak transport cost ``inf_pi sum_i mu_i theta(x_i - b_i)`` from ``mu`` towards ``nu``.

    The outer sum runs over the atoms of ``mu_source``; ``b_i`` is the
    barycenter of the conditional law of the coupling given ``x_i``.

    Returns
    -------
    cost : float
    plan : BarycentricPlan
        Carries the final Frank-Wolfe duality gap as optimality certificate.
    """
    mu, nu = mu_source, nu_target
    _check_pair(mu, nu)
    if not isinstance(theta, CostFunction):
        # built-in and Custom costs are convexity-checked on construction
        raise UnsupportedInputError("weak transport needs a convex CostFunction")
    obj = _WeakObjective(mu, nu, theta)
    # start from an optimal standard plan: by Jensen its barycentric cost is
    # already below the standard cost
    _, start = standard_ot(mu, nu, theta)
    atoms = {start.pi.tobytes(): [start.pi, 1.0]}
    pi = start.pi.copy()
    val = obj.value(pi)
    history = [val]
    gap = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = obj.gradient(pi)
        s, *_ = transportation_simplex(g, mu.weights, nu.weights)
        d_fw = s - pi
        gap = float(-np.sum(g * d_fw))
        if gap <= gap_tol:
            break
        away_key = max(atoms, key=lambda key: (float(np.sum(g * atoms[key][0])), key))
        v, wv = atoms[away_key]
        d_away = pi - v
        away_gain = float(-np.sum(g * d_away))
        if gap >= away_gain or wv >= 1.0:
            d, gmax, fw_step = d_fw, 1.0, True
        else:
            d, gmax, fw_step = d_away, wv / (1.0 - wv), False
        gamma = _line_search(obj, pi, d, gmax)
        if fw_step:
            for entry in atoms.values():
                entry[1] *= 1.0 - gamma
            key = s.tobytes()
            if key in atoms:
                atoms[key][1] += gamma
            else:
                atoms[key] = [s, gamma]
        else:
            for entry in atoms.values():
                entry[1] *= 1.0 + gamma
            atoms[away_key][1] -= gamma
        atoms = {key: e for key, e in atoms.items() if e[1] > 1e-15}
        if gamma <= 0.0:
            break
        pi_new = np.maximum(pi + gamma * d, 0.0)
        new_val = obj.value(pi_new)
        if new_val > val + ROUNDOFF * (1.0 + abs(val)):
            break
        pi, val = pi_new, min(new_val, val)
        d_nt = _face_newton_direction(obj, pi, mu.weights, nu.weights)
        if d_nt is not None and obj.slope(pi, d_nt) < 0:
            neg = d_nt < 0
            gmax = min(1.0, float(np.min(pi[neg] / -d_nt[neg]))) if neg.any() else 1.0
            gamma = _line_search(obj, pi, d_nt, gmax)
            pi_nt = np.maximum(pi + gamma * d_nt, 0.0)
            nt_val = obj.value(pi_nt)
            if nt_val < val:
                # the new point becomes a single atom: a convex combination of
                # vertices, so away steps from it stay feasible
                pi, val = pi_nt, nt_val
                atoms = {pi.tobytes(): [pi.copy(), 1.0]}
        if record_history:
            history.append(val)
    coupling = Coupling(mu, nu, pi)
    plan = BarycentricPlan(coupling, obj.barycenters(pi), val, max(gap, 0.0) + 0.0, it,
                           tuple(history))
    return val, plan


def weak_ot_bruteforce(nu_target, mu_source, theta, *, step=1e-3, refine_tol=1e-7,
                       max_points=2_000_000):
    """Grid search plus pattern search over the coupling polytope (``m, k <= 3``).

    The free entries ``pi_ij`` with ``i < m-1, j < k-1`` parametrize the
    polytope; the last row and column follow from the marginals.
    """
    mu, nu = mu_source, nu_target
    _check_pair(mu, nu)
    m, k = len(mu), len(nu)
    if m > 3 or k > 3:
        raise ResourceError("brute force is limited to 3x3 problems")
    a, b = mu.weights, nu.weights
    X, Y = mu.points, nu.points
    d = (m - 1) * (k - 1)

    def complete(free):
        free = np.atleast_2d(free)
        P = free.shape[0]
        pi = np.zeros((P, m, k))
        pi[:, : m - 1, : k - 1] = free.reshape(P, m - 1, k - 1)
        pi[:, : m - 1, k - 1] = a[: m - 1] - pi[:, : m - 1, : k - 1].sum(axis=2)
        pi[:, m - 1, : k - 1] = b[: k - 1] - pi[:, : m - 1, : k - 1].sum(axis=1)
        pi[:, m - 1, k - 1] = a[m - 1] - pi[:, m - 1, : k - 1].sum(axis=1)
        return pi

    def objective(free):
        pi = complete(free)
        bary = (pi @ Y) / a[None, :, None]
        vals = theta(X[None] - bary) @ a
        feasible = np.all(pi >= -1e-15, axis=(1, 2))
        return np.where(feasible, vals, np.inf)

    if d == 0:
        return float(objective(np.zeros((1, 0)))[0])
    upper = np.array([min(a[i], b[j]) for i in range(m - 1) for j in range(k - 1)])
    per_axis = max(2, int(max_points ** (1.0 / d)))
    axes = [np.linspace(0.0, u, max(2, min(per_axis, int(math.ceil(u / step)) + 1)))
            for u in upper]
    best_val, best = math.inf, None
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    for chunk in np.array_split(mesh, max(1, len(mesh) // 200_000)):
        vals = objective(chunk)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best = float(vals[i]), chunk[i].copy()
    directions = np.array([s for s in itertools.product((-1, 0, 1), repeat=d) if any(s)],
                          dtype=float)
    h = max(float(axes[0][1] - axes[0][0]) if len(axes[0]) > 1 else step, step)
    while h > refine_tol:
        cand = best[None, :] + h * directions
        vals = objective(cand)
        i = int(np.argmin(vals))
        if vals[i] < best_val - 1e-16:
            best_val, best = float(vals[i]), cand[i]
        else:
            h /= 2.0
    return best_val


# ------------------------------------------------------ inequality checking

def check_weak_transport_inequalities(mu, theta, nu_family, *, theta_minus=None, tol=1e-8):
    """Check ``T(nu|mu) <= H(nu|mu)`` and ``T(mu|nu) <= H(nu|mu)`` over a family.

    ``theta_minus`` (default ``theta``) is used for the second inequality.
    Measures with infinite entropy are counted as vacuous.
    """
    theta_minus = theta if theta_minus is None else theta_minus
    plus = VerificationReport("weak-transport-plus", tol)
    minus = VerificationReport("weak-transport-minus", tol)
    worst_ratio = {"plus": 0.0, "minus": 0.0}
    for idx, nu in enumerate(nu_family):
        H = relative_entropy(nu, mu)
        if math.isinf(H):
            plus.add_vacuous()
            minus.add_vacuous()
            continue
        t_plus = weak_ot(nu, mu, theta)[0]
        t_minus = weak_ot(mu, nu, theta_minus)[0]
        plus.add(t_plus, H, {"index": idx})
        minus.add(t_minus, H, {"index": idx})
        if H > 0:
            worst_ratio["plus"] = max(worst_ratio["plus"], t_plus / H)
            worst_ratio["minus"] = max(worst_ratio["minus"], t_minus / H)
    plus.details["worst_ratio"] = worst_ratio["plus"]
    minus.details["worst_ratio"] = worst_ratio["minus"]
    return plus, minus
