"""
vulcan_fem/coefficients.py

Coefficient arrays of the weak form. The generic tensor is indexed
c[i_E][j_E][i_D][j_D], where i_D = 0 multiplies the function value and i_D = 1..3 its physical
derivatives. Linear elastostatics fills only the derivative-derivative slots from two material
parameters (Young modulus, Poisson ratio).
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DomainError, IncompressibleMaterialError
from .printable import Printable
from .reference_element import RefCoords

N_DERIVATIVE_SLOTS = 4
ELASTICITY_EQUATIONS = 3


@dataclass(frozen=True)
class MaterialData:
    """
    Isotropic linear-elastic material.

    Attributes:
        young_E (float): Young modulus, > 0.
        poisson_nu (float): Poisson ratio in (-1, 0.5).
    """

    young_E: float
    poisson_nu: float

    def __post_init__(self) -> None:
        if not self.young_E > 0.0:
            raise DomainError(f"Young modulus must be positive, got {self.young_E}",
                              young_E=self.young_E)
        if self.poisson_nu == 0.5:
            raise IncompressibleMaterialError(
                "Poisson ratio 0.5 (incompressible) makes lambda infinite",
                poisson_nu=self.poisson_nu)
        if not -1.0 < self.poisson_nu < 0.5:
            raise DomainError(f"Poisson ratio must lie in (-1, 0.5), got {self.poisson_nu}",
                              poisson_nu=self.poisson_nu)

    @property
    def lame_mu(self) -> float:
        return self.young_E / (2.0 * (1.0 + self.poisson_nu))

    @property
    def lame_lambda(self) -> float:
        nu = self.poisson_nu
        return self.young_E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))

    @classmethod
    def parse(cls, text: str) -> "MaterialData":
        """
        Parses ``"E,nu"``.

        Raises:
            ConfigurationError: When the text is not two comma separated numbers.
        """

        try:
            young, poisson = (float(part) for part in text.split(","))
        except ValueError as e:
            raise ConfigurationError(f"Failed to parse material {text!r}, expected 'E,nu'",
                                     material=text) from e
        return cls(young, poisson)


@dataclass(frozen=True, repr=False, eq=False)
class CoefficientTensor(Printable):
    """
    Attributes:
        entries (np.ndarray): [N_E][N_E][4][4] coefficients.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        shape = np.shape(self.entries)
        if (len(shape) != 4 or shape[0] != shape[1]
                or shape[2:] != (N_DERIVATIVE_SLOTS, N_DERIVATIVE_SLOTS)):
            raise ConfigurationError(f"Coefficient tensor needs shape [N_E][N_E][4][4], got {shape}")

    @property
    def n_eq(self) -> int:
        return self.entries.shape[0]

    @property
    def sparsity_mask(self) -> np.ndarray:
        return self.entries != 0.0


@dataclass(frozen=True, repr=False, eq=False)
class QuadCoefficients(Printable):
    """
    Coefficients at every quadrature point.

    Attributes:
        per_point (np.ndarray): [N_Q][N_E][N_E][4][4].
    """

    per_point: np.ndarray

    @classmethod
    def constant(cls, tensor: CoefficientTensor, n_points: int) -> "QuadCoefficients":
        """The same tensor at ``n_points`` points."""

        per_point = np.broadcast_to(tensor.entries, (n_points, *tensor.entries.shape))
        return cls(per_point)

    @property
    def n_points(self) -> int:
        return self.per_point.shape[0]

    @property
    def n_eq(self) -> int:
        return self.per_point.shape[1]

    def __getitem__(self, index: int) -> CoefficientTensor:
        return CoefficientTensor(self.per_point[index])


@dataclass(frozen=True, repr=False, eq=False)
class PreviousSolution(Printable):
    """
    Element degrees of freedom of an earlier solution, read by nonlinear coefficient hooks.

    Attributes:
        dofs (np.ndarray): [N_E][N_sh].
    """

    dofs: np.ndarray

    def check(self, n_eq: int, n_shape: int) -> "PreviousSolution":
        """
        Raises:
            ConfigurationError: When the shape is not [n_eq][n_shape].
        """

        if np.shape(self.dofs) != (n_eq, n_shape):
            raise ConfigurationError(
                f"Previous solution has shape {np.shape(self.dofs)}, expected {(n_eq, n_shape)}")
        return self


def elasticity_tensor(mat: MaterialData) -> CoefficientTensor:
    """
    Isotropic elasticity: c[i][k][j+1][l+1] = lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk).

    Args:
        mat (MaterialData): The material.

    Returns:
        CoefficientTensor: N_E = 3, value slots (i_D = 0 or j_D = 0) zero.
    """

    delta = np.eye(ELASTICITY_EQUATIONS)
    lam, mu = mat.lame_lambda, mat.lame_mu
    # indices i, k, j, l
    block = (lam * np.einsum("ij,kl->ikjl", delta, delta)
             + mu * (np.einsum("ik,jl->ikjl", delta, delta)
                     + np.einsum("il,jk->ikjl", delta, delta)))
    entries = np.zeros((ELASTICITY_EQUATIONS, ELASTICITY_EQUATIONS,
                        N_DERIVATIVE_SLOTS, N_DERIVATIVE_SLOTS))
    entries[:, :, 1:, 1:] = block
    return CoefficientTensor(entries)


def scalar_tensor(diffusion: float = 1.0, reaction: float = 0.0) -> CoefficientTensor:
    """
    Single-equation tensor: diffusion * I in the derivative slots, ``reaction`` in the value slot.
    """

    entries = np.zeros((1, 1, N_DERIVATIVE_SLOTS, N_DERIVATIVE_SLOTS))
    entries[0, 0, 1:, 1:] = diffusion * np.eye(3)
    entries[0, 0, 0, 0] = reaction
    return CoefficientTensor(entries)


def coefficients_at_point(
    base: CoefficientTensor,
    old: Optional[PreviousSolution],
    xi: Union[RefCoords, Sequence[float]]
) -> CoefficientTensor:
    """
    Coefficients at one quadrature point.

    Linear models are constant over an element, so ``base`` is returned unchanged; ``old`` and
    ``xi`` are the inputs a solution-dependent model would read.
    """

    del old, xi
    return base


@dataclass(frozen=True, repr=False, eq=False)
class MaterialField(Printable):
    """
    One material per element.

    Attributes:
        materials (Tuple[MaterialData, ...]): Materials in mesh order.
    """

    materials: Tuple[MaterialData, ...]

    @classmethod
    def uniform(cls, mat: MaterialData, n_elements: int) -> "MaterialField":
        return cls(tuple([mat] * n_elements))

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "MaterialField":
        """Builds the field from ``[[E, nu], ...]``."""

        try:
            return cls(tuple(MaterialData(float(young), float(poisson)) for young, poisson in pairs))
        except (TypeError, ValueError) as e:
            if isinstance(e, DomainError):
                raise
            raise ConfigurationError(f"Failed to read material pairs: {e}") from e

    def __len__(self) -> int:
        return len(self.materials)

    def __getitem__(self, index: int) -> MaterialData:
        return self.materials[index]

    def subset(self, start: int, stop: int) -> "MaterialField":
        return MaterialField(self.materials[start:stop])

    def as_buffer(self) -> np.ndarray:
        """[n][2] rows of (E, nu), the kernels' material buffer."""

        return np.array([[mat.young_E, mat.poisson_nu] for mat in self.materials],
                        dtype=np.float64).reshape(len(self.materials), 2)
