"""Exception and warning types raised by the V-line toolkit."""

from __future__ import annotations


class VLineError(Exception):
    """Base class for all data, configuration and solver failures."""


class ConfigError(VLineError):
    """A scan configuration violates a hard invariant."""


class ContainerError(VLineError):
    """On-disk container could not be read or written."""


class PhantomError(VLineError):
    """A phantom component leaves the admissible disc."""

    def __init__(self, message: str, index: int) -> None:
        super().__init__(message)
        self.index = index


class DomainError(VLineError, ValueError):
    """An argument lies outside the domain of a kernel formula."""


class NoiseError(VLineError):
    """Photon-count simulation got an unusable sinogram."""


class SymmetryError(VLineError):
    """A harmonic stack is not conjugate symmetric."""

    def __init__(self, message: str, asymmetry: float) -> None:
        super().__init__(message)
        self.asymmetry = asymmetry


class SolverError(VLineError):
    """Linear-algebra failure in a per-harmonic system."""


class SingularPivotError(SolverError):
    """Triangular solve hit a (numerically) vanishing diagonal entry."""

    def __init__(self, message: str, row: int) -> None:
        super().__init__(message)
        self.row = row


class FactorizationError(SolverError):
    """Cholesky factorization of the normal equations broke down."""


class ConvergenceError(SolverError):
    """Jacobi SVD did not converge within the sweep cap."""

    def __init__(self, message: str, off_diagonal: float) -> None:
        super().__init__(message)
        self.off_diagonal = off_diagonal


class ReconstructionError(VLineError):
    """A stage of the reconstruction failed for one harmonic."""

    def __init__(self, message: str, n: int) -> None:
        super().__init__(message)
        self.n = n


class PhysicsWarning(UserWarning):
    """Parameters outside the range covered by the uniqueness result."""
