"""Numerical toolkit for Hecke-type solutions of the Yang-Baxter equation
with sl_q(2) or osp_q(1|2) symmetry, their fused descendants on composite
states, extended Lax operators, integrable chains and centralizers."""

from .qarith import (
    DeformParams,
    DegenerateParameterError,
    OSPQ12,
    PoleError,
    QybeError,
    SLQ2,
    bracket_plus,
    bracket_plus_factorial,
    q_number,
    q_sub_bracket,
    qr_shift,
)
from .repspace import (
    GradedOperator,
    Irrep,
    Space,
    build_irrep,
    casimir,
    casimir_value,
    coproduct,
    embed_at,
    graded_kron,
    graded_permutation,
    invariant_metric,
    verify_algebra,
)
from .coupling import (
    CouplingTable,
    Projector,
    casimir_projector,
    cgc_table,
    chi_closed,
    chi_factor,
    coupled_basis,
    projector,
    tensor_decompose,
)
from .rmatrix import (
    SpectralRMatrix,
    hecke_f,
    hecke_family,
    hecke_r,
    mixed_braid_check,
    r33_family,
    r33_fixture,
    spectral_decompose,
    u0_point,
    universal_r,
    ybe_residual,
)
from .fusion import (
    CompositeSpace,
    composite_space,
    composite_states,
    descendant_family,
    descendant_r_closed,
    descendant_r_product,
    dims_recurrence,
    extended_lax,
    extended_lax_closed,
)
from .spinchain import (
    ChainSpec,
    HamiltonianBundle,
    coupled_matrix_elements,
    f0_and_chibar,
    hamiltonian_log_derivative,
    hamiltonian_projector_form,
    spectrum,
    transfer_matrix,
)
from .commutant import (
    CommutantBasis,
    ElementaryOp,
    commutant_nullspace,
    constraint_system,
    elementary_ops,
    membership,
    principal_angles,
)
from .toolkit import (
    Report,
    RunConfig,
    deserialize_operator,
    serialize_operator,
    verify_all,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
