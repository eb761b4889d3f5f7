"""Centralized numeric tolerances and run parameters.

Every threshold used by the geometry, singularity, blow-up and foliation
machinery lives in one record so the CLI can override any of them with
``--tol key=value`` and tests can tighten or relax a single knob.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    # geometry
    tol_H: float = 1e-8          # |H| below this: mean normal undefined, k/K invalid
    tol_disc: float = 1e-10      # BDE discriminant below this: directions undefined
    tol_immersion: float = 1e-10 # smallest singular value of the degree-1 block

    # singularity location and classification
    tol_sing: float = 1e-8       # residual for singularity acceptance
    tol_rot: float = 1e-10       # |d| after the d-killing rotation
    tol_transv: float = 1e-8     # transversality threshold, relative to coefficient scale
    newton_floor: float = 5e-7   # Newton step size considered converged
    tol_merge: float = 1e-6      # root dedup radius; 2x newton_floor
    grid_min: int = 16

    # Lie-Cartan blow-up
    tol_eq: float = 1e-8         # |X| at a fiber equilibrium
    tol_eig: float = 1e-6        # |eigenvalue| below this: non-hyperbolic
    sep_offset: float = 1e-6     # separatrix seed offset along the transverse eigenvector

    # integration
    ode_atol: float = 1e-10
    ode_rtol: float = 1e-8
    step_budget: int = 1_000_000

    # cycles and holonomy
    tol_cycle: float = 1e-8      # closure gap, relative to cycle length
    tol_hyp: float = 1e-4        # |ln pi'| above this: hyperbolic
    n_quad: int = 256            # composite Gauss-Legendre nodes along a cycle
    quad_check: float = 1e-8     # doubled-node agreement required of the quadrature
    tube_frac: float = 0.05      # tube half-width as a fraction of cycle length

    @property
    def r_exit(self) -> float:
        """Blow-up hand-off radius around a singularity."""
        return 10.0 * self.tol_sing ** 0.5

    def override(self, **kwargs) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(kwargs) - known
        if bad:
            raise KeyError(f"unknown tolerance(s): {sorted(bad)}")
        return replace(self, **kwargs)


DEFAULT_TOL = Tolerances()
