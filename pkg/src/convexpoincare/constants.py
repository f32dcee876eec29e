"""Closed-form constants and their propagation.

The chain is: a convex Poincare constant ``lambda`` gives modified
log-Sobolev constants for convex (slope ``c <= sqrt(lambda)/2``) and concave
(slope ``c < sqrt(lambda)/64``) test functions, which in turn give weak
transport inequalities for the quadratic-linear cost ``theta_{2C, c}``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from ._validation import check_positive
from .costs import QuadLinear, RadialAlpha
from .exceptions import InputError

PHI_BRACKET = 40.0


def _check_convex_range(lam, c):
    lam = check_positive(lam, "lambda")
    c = check_positive(c, "c", strict=False)
    if c > 0.5 * math.sqrt(lam) * (1 + 1e-15):
        raise InputError(f"convex branch needs c <= sqrt(lambda)/2 = {0.5 * math.sqrt(lam)}")
    return lam, c


def c1_constant(lam, c):
    """``(sqrt(lambda/2) - c/2)^-2``."""
    lam, c = _check_convex_range(lam, c)
    return (math.sqrt(lam / 2) - c / 2) ** -2


def c2_constant(lam, c):
    """``exp(c sqrt(2/lambda))``."""
    lam, c = _check_convex_range(lam, c)
    return math.exp(c * math.sqrt(2 / lam))


def mls_convex_constant(lam, c):
    """``exp(c sqrt(2/lambda)) / (3 lambda) + 1 / (3 (sqrt(lambda/2) - c/2)^2)``."""
    lam, c = _check_convex_range(lam, c)
    return math.exp(c * math.sqrt(2 / lam)) / (3 * lam) \
        + 1 / (3 * (math.sqrt(lam / 2) - c / 2) ** 2)


def _check_concave_range(lam, c, M):
    lam = check_positive(lam, "lambda")
    c = check_positive(c, "c")
    M = check_positive(M, "M", strict=False)
    if not c < math.sqrt(lam) / 64:
        raise InputError(f"concave branch needs c < sqrt(lambda)/64 = {math.sqrt(lam) / 64}; "
                         "the exponential moment integral diverges otherwise")
    return lam, c, M


def concave_d1(lam, c, M):
    """``e^{64Mc} + int_{32Mc}^inf 16 exp((2 - sqrt(lambda)/(32c)) t) dt`` in closed form."""
    lam, c, M = _check_concave_range(lam, c, M)
    kappa = math.sqrt(lam) / (32 * c) - 2
    return math.exp(64 * M * c) + 16 * math.exp(-kappa * 32 * M * c) / kappa


def concave_d2(lam, M):
    """Fourth-moment constant per unit mean gradient.

    ``(32M)^4 + 32 int_{32M}^inf t^3 e^{-beta t} dt`` with ``beta = sqrt(lambda)/32``;
    the factor 32 is the ``4 t^3`` density times the tail prefactor 8.
    """
    lam = check_positive(lam, "lambda")
    M = check_positive(M, "M", strict=False)
    beta = math.sqrt(lam) / 32
    a = 32 * M
    tail = math.exp(-beta * a) * (a ** 3 / beta + 3 * a ** 2 / beta ** 2
                                  + 6 * a / beta ** 3 + 6 / beta ** 4)
    return a ** 4 + 32 * tail


def mls_concave_constant(lam, c, M):
    """``(1/lambda + sqrt(D1 D2)/3) exp(c sqrt(2/lambda))``."""
    lam, c, M = _check_concave_range(lam, c, M)
    d1 = concave_d1(lam, c, M)
    d2 = concave_d2(lam, M)
    return (1 / lam + math.sqrt(d1 * d2) / 3) * math.exp(c * math.sqrt(2 / lam))


def default_M(n, lam):
    """``2 sqrt(n / lambda)``, a valid 3/4-quantile radius."""
    if int(n) != n or n < 1:
        raise InputError("n must be a positive integer")
    return 2 * math.sqrt(n / check_positive(lam, "lambda"))


def transport_cost_params(lam, c, branch="minus", M=None):
    """``(2C, c)`` for the cost ``theta_{2C, c}``.

    ``branch="minus"`` uses the convex constant, ``"plus"`` the concave one
    (and requires ``M``).
    """
    if branch == "minus":
        return 2 * mls_convex_constant(lam, c), float(c)
    if branch == "plus":
        if M is None:
            raise InputError("the plus branch needs the quantile radius M")
        return 2 * mls_concave_constant(lam, c, M), float(c)
    raise InputError(f"branch must be 'plus' or 'minus', got {branch!r}")


def transport_cost(lam, c, branch="minus", M=None, dimension=1):
    A, D = transport_cost_params(lam, c, branch, M)
    return QuadLinear(A, D, dimension)


def poincare_from_transport(C):
    """``1 / C``."""
    return 1.0 / check_positive(C, "C")


def cost_from_mls(C, L, dimension=1):
    """Radial cost with ``s^2/(4C)`` up to ``2CL`` and slope ``L`` beyond."""
    alpha = RadialAlpha(C, L, dimension)
    left, right = alpha.knot_values()
    if not math.isclose(left, right, rel_tol=1e-12, abs_tol=1e-15):
        raise AssertionError("branches disagree at the knot")
    return alpha


def perturbation_lambda(lam, osc):
    """``lambda exp(-osc)`` for a density ``exp(U)`` with ``sup U - inf U = osc``."""
    return check_positive(lam, "lambda") * math.exp(-check_positive(osc, "osc", strict=False))


def mixture_lambda(lam0, lam1, w2sq):
    """``(max(1/lambda0, 1/lambda1) + 2 W2^2)^-1``; independent of the mixing weight."""
    lam0 = check_positive(lam0, "lambda0")
    lam1 = check_positive(lam1, "lambda1")
    w2sq = check_positive(w2sq, "w2sq", strict=False)
    return 1.0 / (max(1 / lam0, 1 / lam1) + 2 * w2sq)


# ------------------------------------------------------------- tensorization

def _tail_inverse_log(logp):
    lo, hi = 0.0, PHI_BRACKET
    if logp < float(log_ndtr(-hi)):
        return hi, True
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(log_ndtr(-mid)) > logp:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi), False


def gaussian_tail_inverse(p, *, full_output=False):
    """``x >= 0`` with ``P(Z > x) = p`` for ``p <= 1/2``, by bisection in log space.

    Arguments below ``P(Z > 40)`` return 40 with a saturation flag.
    """
    if not 0 < p <= 0.5:
        raise InputError("tail probability must lie in (0, 1/2]")
    x, saturated = _tail_inverse_log(math.log(p))
    return (x, saturated) if full_output else x


def _tensor_objective(lam, r):
    logp = math.log(8) - math.sqrt(lam) * r / 2
    if logp >= math.log(0.5):
        return 0.0
    return _tail_inverse_log(logp)[0] / r


def tensorization_lambda(lam, *, full_output=False):
    """``lambda'`` with ``sqrt(lambda') = sup_{r >= r0} barPhi^{-1}(8 e^{-sqrt(lambda) r/2}) / r``.

    ``r0 = 2 log(16) / sqrt(lambda)``; the objective vanishes at ``r0`` and
    at infinity. A log-spaced grid brackets the maximum and golden-section
    search refines it.
    """
    lam = check_positive(lam, "lambda")
    r0 = 2 * math.log(16) / math.sqrt(lam)
    grid = r0 * np.geomspace(1.0, 1e3, 600)
    vals = np.array([_tensor_objective(lam, r) for r in grid])
    k = int(np.argmax(vals))
    if k in (0, len(grid) - 1):
        raise ArithmeticError("tensorization supremum not bracketed")
    a, b = math.log(grid[k - 1]), math.log(grid[k + 1])
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = _tensor_objective(lam, math.exp(c)), _tensor_objective(lam, math.exp(d))
    while b - a > 1e-13:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = _tensor_objective(lam, math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = _tensor_objective(lam, math.exp(d))
    r_star = math.exp(0.5 * (a + b))
    sup = max(fc, fd, float(vals[k]))
    lam_prime = sup * sup
    if full_output:
        return lam_prime, {"ratio": lam / lam_prime, "argmax_r": r_star, "r0": r0}
    return lam_prime


# ------------------------------------------------------------------ pipeline

@dataclass
class ConstantsPipeline:
    """All derived constants for a Poincare constant ``lambda``.

    ``c`` caps the slopes on the convex branch; ``c_plus`` (default ``c``)
    and ``M`` feed the concave branch, which is skipped when ``M`` is
    missing or ``c_plus`` is out of range.
    """

    lam: float
    c: float
    M: float = None
    c_plus: float = None
    derived: dict = field(default_factory=dict, init=False)

    def __post_init__(self):
        lam, c = _check_convex_range(self.lam, self.c)
        d = self.derived
        d["C1"] = c1_constant(lam, c)
        d["C2"] = c2_constant(lam, c)
        d["C_mls_convex"] = mls_convex_constant(lam, c)
        d["cost_minus"] = [2 * d["C_mls_convex"], c]
        d["lambda_from_cost_minus"] = poincare_from_transport(2 * d["C_mls_convex"])
        cp = self.c if self.c_plus is None else self.c_plus
        if self.M is not None and cp < math.sqrt(lam) / 64:
            d["D1"] = concave_d1(lam, cp, self.M)
            d["D2"] = concave_d2(lam, self.M)
            d["C_mls_concave"] = mls_concave_constant(lam, cp, self.M)
            d["cost_plus"] = [2 * d["C_mls_concave"], cp]
            d["lambda_from_cost_plus"] = poincare_from_transport(2 * d["C_mls_concave"])

    def cost(self, branch="minus", dimension=1):
        key = f"cost_{branch}"
        if key not in self.derived:
            raise InputError(f"{branch} branch not available for these parameters")
        A, D = self.derived[key]
        return QuadLinear(A, D, dimension)

    def to_dict(self):
        return {"lambda": self.lam, "c": self.c, "M": self.M,
                "c_plus": self.c if self.c_plus is None else self.c_plus,
                "derived": dict(self.derived)}
