"""Quantum Fisher information tools for a single mixed qubit."""

from qubitqfim.linalg import (
    BlochVector,
    DensityMatrix,
    EigenPair2,
    Hermitian2,
    bloch_from_density,
    bures_distance,
    density_from_bloch,
    eig_hermitian_2x2,
)
from qubitqfim.models import (
    BlochModel,
    DissipativeQubitModel,
    DomainError,
    EigenModel,
    ParamPoint,
    integrate_lindblad,
    lindblad_step_rk4,
)
from qubitqfim.diff import DiffConfig, convergence_order, d_density, jacobian2
from qubitqfim.qfim import (
    CrBoundReport,
    DegenerateSpectrumError,
    QfimResult,
    SldOperator,
    bures_check,
    classical_fi,
    cr_bound,
    qfi_single,
    qfim_bloch,
    qfim_sld,
    qfim_spectral,
    solve_sld,
)
from qubitqfim.invertibility import (
    DetFactorization,
    EstimableCombination,
    InvertibilityVerdict,
    check_condition,
    det_factorization,
    estimable_combination,
    lambda_audit,
)

__version__ = "0.1.0"
