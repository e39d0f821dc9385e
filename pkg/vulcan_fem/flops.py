"""
vulcan_fem/flops.py

Floating-point operation accounting shared by the sequential integrators and the kernel
emulation. Instrumented code adds counts per phase to a FlopCounter; the closed-form model in
:func:`element_flops` must reproduce those counts exactly.

Per-operation costs:
    block update          63 per (block, point): the dot product (5), its mu scaling (1),
                          9 entries of 2 scaled outer products (5 each), the diagonal (3) and
                          the accumulation (9).
    Jacobian (device)     150 per point: vertex-function derivatives (9), the 3x3 Jacobian
                          as 9 six-term sums (99), the cofactor inverse (42).
                          The published per-point figure is 37, which counts the inverse
                          alone; reports show both.
    shape derivatives     15 per shape function and point (3 dot products of length 3).
    scaling               3 per point: det * w, then lambda and mu times the result.
    coefficients          8 per element: mu (3) and lambda (5) from E and nu.
"""

from dataclasses import dataclass, field
from typing import Dict

BLOCK_UPDATE_FLOPS = 63
GEOMETRY_DERIVATIVE_FLOPS = 9
JACOBIAN_ASSEMBLY_FLOPS = 99
JACOBIAN_INVERSE_FLOPS = 42
JACOBIAN_FLOPS = GEOMETRY_DERIVATIVE_FLOPS + JACOBIAN_ASSEMBLY_FLOPS + JACOBIAN_INVERSE_FLOPS
PUBLISHED_JACOBIAN_FLOPS = 37
SHAPE_DERIVATIVE_FLOPS = 15
SCALING_FLOPS = 3
COEFFICIENT_FLOPS = 8

PHASES = ("block_update", "jacobian", "shape_derivatives", "scaling", "coefficients")


@dataclass
class FlopCounter:
    """
    Instrumented operation counts per phase.

    Attributes:
        counts (Dict[str, int]): Count per phase name, every name of PHASES present.
    """

    counts: Dict[str, int] = field(default_factory=lambda: {phase: 0 for phase in PHASES})

    def add(self, phase: str, n: int) -> None:
        if phase not in self.counts:
            raise KeyError(f"Unknown flop phase {phase!r}")
        self.counts[phase] += int(n)

    def merge(self, other: "FlopCounter") -> "FlopCounter":
        for phase, n in other.counts.items():
            self.add(phase, n)
        return self

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def as_dict(self) -> Dict[str, int]:
        return dict(self.counts, total=self.total)


def element_flops(
    n_parts: int,
    threads_per_part: int,
    n_points: int,
    n_shape: int,
    computes_jacobian: bool
) -> Dict[str, int]:
    """
    Modelled operation counts for one element.

    Args:
        n_parts (int): Passes over the quadrature loop.
        threads_per_part (int): Blocks evaluated per pass, padding included (wg * bpt).
        n_points (int): Quadrature points.
        n_shape (int): Shape functions.
        computes_jacobian (bool): Whether the Jacobian is built in the pass.

    Returns:
        Dict[str, int]: Count per phase.
    """

    per_pass = n_parts * n_points
    return {
        "block_update": per_pass * threads_per_part * BLOCK_UPDATE_FLOPS,
        "jacobian": per_pass * JACOBIAN_FLOPS if computes_jacobian else 0,
        "shape_derivatives": per_pass * n_shape * SHAPE_DERIVATIVE_FLOPS,
        "scaling": per_pass * SCALING_FLOPS,
        "coefficients": COEFFICIENT_FLOPS,
    }


def jacobian_flop_figures(n_parts: int, n_points: int, computes_jacobian: bool) -> Dict[str, int]:
    """
    Per-element Jacobian cost under the counted and the published per-point figures.

    Returns:
        Dict[str, int]: ``per_point_counted``, ``per_point_published`` and the per-element
            totals ``counted`` and ``published``; the totals are 0 when the pass reads
            precomputed terms.
    """

    evaluations = n_parts * n_points if computes_jacobian else 0
    return {
        "per_point_counted": JACOBIAN_FLOPS,
        "per_point_published": PUBLISHED_JACOBIAN_FLOPS,
        "counted": evaluations * JACOBIAN_FLOPS,
        "published": evaluations * PUBLISHED_JACOBIAN_FLOPS,
    }


def jacobian_cost_note() -> str:
    return (f"Jacobian cost per point: {JACOBIAN_FLOPS} flops counted "
            f"({GEOMETRY_DERIVATIVE_FLOPS} + {JACOBIAN_ASSEMBLY_FLOPS} + {JACOBIAN_INVERSE_FLOPS}), "
            f"{PUBLISHED_JACOBIAN_FLOPS} published (inverse only)")
