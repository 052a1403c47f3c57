"""Mechanical Hamiltonian dynamics on linear Poisson bundles and the
Jacobi-Reeb structures on their energy sphere bundles."""

from .errors import (
    ConfigError,
    DegenerateFiberError,
    DomainError,
    EnergyDomainError,
)
from .algebroid import (
    AlgebroidModel,
    PhasePoint,
    Section,
    algebroid_bracket,
    assemble_poisson_matrix,
    hat,
    liouville_field,
    poisson_bracket,
)
from .dynamics import (
    MetricModel,
    Potential,
    Trajectory,
    hamiltonian_vector_field,
    integrate,
    jacobi_metric,
    kinetic_energy,
    mechanical_hamiltonian,
    reparametrize,
    sphere_projection,
)
from .jacobi import (
    energy_jacobi_pair,
    jacobi_pair,
    poissonization_check,
    restricted_bracket,
    sphere_membership,
)
from .models import SystemBundle, get_system, SYSTEMS

__version__ = "0.1.0"
