"""End-to-end orchestration: curve -> skeleton -> lifts -> homology -> periods."""
from __future__ import annotations

import logging
from functools import cached_property

from .continuation import lift_all, monodromy
from .curve import PlaneCurve, baker_numerators, critical_locus, parse_curve
from .differentials import differential_basis
from .errors import GenusMismatch, MonodromyRelationFailed
from .homology import fundamental_cycles, gram_matrix, lifted_graph, symplectic_basis
from .numerics import PrecisionContext
from .periods import period_matrix, riemann_matrix
from .skeleton import voronoi_skeleton

log = logging.getLogger(__name__)


class RiemannSurface:
    """Lazily computed invariants of one plane curve at a fixed precision."""

    def __init__(self, curve: PlaneCurve | str, prec: int = 100, differentials=None,
                 threads: int = 1, cache_dir: str | None = None, skeleton=None):
        self.curve = parse_curve(curve) if isinstance(curve, str) else curve
        self.ctx = PrecisionContext(prec)
        self.user_differentials = differentials
        self.threads = threads
        self.cache_dir = cache_dir
        if skeleton is not None:
            self.__dict__["skeleton"] = skeleton

    @cached_property
    def critical(self):
        return critical_locus(self.curve, self.ctx)

    @cached_property
    def skeleton(self):
        return voronoi_skeleton(self.critical.finite_points, self.ctx)

    @cached_property
    def lifts(self):
        return lift_all(self.curve, self.skeleton, self.ctx, self.threads, self.cache_dir)

    @cached_property
    def monodromy(self):
        return monodromy(self.curve, self.skeleton, self.lifts, self.ctx)

    @cached_property
    def lifted_graph(self):
        return lifted_graph(self.curve, self.skeleton, self.lifts)

    @cached_property
    def cycles(self):
        return fundamental_cycles(self.lifted_graph)

    @cached_property
    def gram(self):
        return gram_matrix(self.cycles, self.lifted_graph, self.threads)

    @cached_property
    def symplectic(self):
        expected = None if self.user_differentials is not None else len(baker_numerators(self.curve))
        sym = symplectic_basis(self.cycles, self.gram, None, self.user_differentials is not None)
        if expected is not None and sym.genus != expected:
            raise GenusMismatch(f"the surface has genus {sym.genus} but Baker's construction gives "
                                f"{expected} differentials")
        return sym

    @property
    def genus(self) -> int:
        return self.symplectic.genus

    @cached_property
    def differentials(self):
        basis = differential_basis(self.curve, self.user_differentials)
        if len(basis) != self.genus:
            raise GenusMismatch(f"the surface has genus {self.genus} but {len(basis)} differentials "
                                f"were supplied")
        return basis

    @cached_property
    def period_matrix(self):
        mono = self.monodromy
        if mono.genus != self.genus:
            raise MonodromyRelationFailed(f"Riemann-Hurwitz genus {mono.genus} differs from the "
                                          f"symplectic genus {self.genus}")
        return period_matrix(self.curve, self.differentials, self.symplectic, self.lifted_graph,
                             self.lifts, self.skeleton, self.ctx, self.threads)

    @cached_property
    def riemann_matrix(self):
        return riemann_matrix(self.period_matrix, self.ctx)
