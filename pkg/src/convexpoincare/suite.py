"""The end-to-end verification sweep behind ``verify suite``.

A convex Poincare constant ``lambda`` for the two-point measure feeds the
constants pipeline; the resulting quadratic-linear costs are then checked
against every dual, entropy and concentration inequality on seeded random
instances. Instances are evaluated one by one and merged in index order,
so the report does not depend on the number of worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .constants import ConstantsPipeline, transport_cost_params
from .costs import PerCoordQuadLinear
from .families import DEFAULT_SEED, instance_rng, random_max_affine, random_reweighting
from .inequalities import (
    CONCENTRATION_MODES, check_dual_Tminus, check_dual_Tplus, check_inf_convolution_t2,
    check_mls_concave, check_mls_convex, empirical_concentration_check,
)
from .measures import DiscreteMeasure, power_measure
from .transport import check_weak_transport_inequalities

P_VALUES = (0.5, 1.0, 2.0, 4.0, 8.0)
TOLERANCE_KEYS = ("dual", "transport", "mls", "concentration")


@dataclass
class SuiteConfig:
    """Parameters of the sweep.

    ``lam`` is the certified convex Poincare constant of Bernoulli(1/2);
    ``c_minus`` and ``c_plus`` are the slope caps of the two branches and
    ``M`` the quantile radius used by the plus branch.
    """

    seed: int = DEFAULT_SEED
    n: int = 1000
    lam: float = 2.0
    c_minus: float = 0.5
    c_plus: float = 0.02
    M: float = 0.5
    product_dim: int = 3
    tol_dual: float = 1e-8
    tol_transport: float = 1e-8
    tol_mls: float = 1e-12
    tol_concentration: float = 1e-12

    def set_tolerance(self, key, value):
        if key not in TOLERANCE_KEYS:
            from .exceptions import InputError

            raise InputError(f"unknown tolerance key {key!r}; choose from {TOLERANCE_KEYS}")
        setattr(self, f"tol_{key}", float(value))


class _Setup:
    def __init__(self, cfg):
        self.cfg = cfg
        self.mu = DiscreteMeasure.bernoulli(0.5)
        self.pipe = ConstantsPipeline(cfg.lam, cfg.c_minus, M=cfg.M, c_plus=cfg.c_plus)
        self.theta_minus = self.pipe.cost("minus")
        self.theta_plus = self.pipe.cost("plus")
        # product measure: per-coordinate cost 2 theta_plus(x / 2)
        A, D = transport_cost_params(cfg.lam, cfg.c_plus, "plus", M=cfg.M)
        self.mu_prod = power_measure(self.mu, cfg.product_dim)
        self.theta_prod = PerCoordQuadLinear(2 * A, D, cfg.product_dim)


def _instance(setup, index):
    """All single-instance reports for one index."""
    cfg = setup.cfg
    mu = setup.mu
    f = random_max_affine(instance_rng(cfg.seed, index, 0))
    out = [
        check_dual_Tplus(mu, setup.theta_plus, f, tol=cfg.tol_dual),
        check_dual_Tminus(mu, setup.theta_minus, f, tol=cfg.tol_dual),
        check_inf_convolution_t2(mu, setup.theta_plus, f, tol=cfg.tol_dual),
    ]
    rng = instance_rng(cfg.seed, index, 1)
    out.extend(check_weak_transport_inequalities(
        mu, setup.theta_plus, [random_reweighting(rng, mu)],
        theta_minus=setup.theta_minus, tol=cfg.tol_transport))
    g = random_max_affine(instance_rng(cfg.seed, index, 2), slope_cap=cfg.c_minus)
    out.append(check_mls_convex(mu, g, cfg.lam, cfg.c_minus, tol=cfg.tol_mls))
    g = random_max_affine(instance_rng(cfg.seed, index, 3), slope_cap=cfg.c_plus)
    out.append(check_mls_concave(mu, g, cfg.lam, cfg.c_plus, M=cfg.M, tol=cfg.tol_mls))
    h = random_max_affine(instance_rng(cfg.seed, index, 4), dimension=cfg.product_dim)
    p = P_VALUES[index % len(P_VALUES)]
    for mode in CONCENTRATION_MODES:
        if p < 1 and mode in ("selfnorm", "moment_quantile"):
            continue
        rep = empirical_concentration_check(setup.mu_prod, h, setup.theta_prod, p, mode=mode,
                                            tol=cfg.tol_concentration)
        rep.details.pop("p", None)
        out.append(rep)
    return [r.reindex(index) for r in out]


def _run_chunk(cfg_dict, indices):
    setup = _Setup(SuiteConfig(**cfg_dict))
    return [_instance(setup, i) for i in indices]


def _merge(per_index):
    merged = {}
    for reports in per_index:
        for r in reports:
            merged[r.inequality] = merged[r.inequality].merge(r) if r.inequality in merged else r
    return merged


def run_suite(cfg=None, jobs=1):
    """Run the sweep; returns ``{inequality: VerificationReport}`` in a fixed order."""
    cfg = cfg or SuiteConfig()
    indices = list(range(cfg.n))
    if jobs <= 1:
        per_index = _run_chunk(asdict(cfg), indices)
    else:
        chunks = [indices[j::jobs] for j in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_chunk, [asdict(cfg)] * jobs, chunks))
        by_index = {}
        for chunk, res in zip(chunks, results):
            by_index.update(zip(chunk, res))
        per_index = [by_index[i] for i in indices]
    merged = dict(sorted(_merge(per_index).items()))
    return merged, ConstantsPipeline(cfg.lam, cfg.c_minus, M=cfg.M, c_plus=cfg.c_plus)


def suite_passed(reports):
    return all(r.passed for r in reports.values())
