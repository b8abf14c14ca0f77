"""Quantum Fisher information: SLD solver, three independent QFIM routes,
classical Fisher information, the Bures-distance check and Cramer-Rao bounds.

Routes:

* ``qfim_sld``: solves for each symmetric logarithmic derivative and takes
  half the expectation of their anticommutator.
* ``qfim_spectral``: differentiates eigenvalues and gauge-fixed eigenvectors
  and sums the classical and quantum parts separately.
* ``qfim_bloch``: closed form in the Bloch vector, used as an oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from qubitqfim.diff import DiffConfig, d_density, derivative
from qubitqfim.linalg import (
    DEGENERACY_GAP,
    DensityMatrix,
    Hermitian2,
    bures_distance,
    eig_hermitian_2x2,
)
from qubitqfim.models import ParametrizedModel, ParamPoint

EIG_TOL = 1e-12
RANK_TOL = 1e-9
PURE_NORM_TOL = 1e-9
# |W . dW| below this fraction of |dW| counts as tangent to the sphere
PURE_TANGENT_TOL = 1e-8


class DegenerateSpectrumError(ValueError):
    """The density matrix has (nearly) equal eigenvalues; use qfim_sld."""


class NearPureStateWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SldOperator:
    L: Hermitian2
    residual: float


@dataclass(frozen=True, eq=False)
class QfimResult:
    """A quantum Fisher information matrix with its spectral summary.

    ``F_classical`` and ``F_quantum`` are ``None`` for the Bloch route, which
    produces the total only.
    """

    F: np.ndarray
    F_classical: Optional[np.ndarray]
    F_quantum: Optional[np.ndarray]
    eigenvalues: np.ndarray
    det: float
    rank: int
    method: str
    names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.F.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.F))


@dataclass(frozen=True)
class CrBoundReport:
    invertible: bool
    trace_bound: Union[float, str]
    condition_number: Union[float, str]


def matrix_rank(eigenvalues: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    top = float(np.max(eigenvalues)) if len(eigenvalues) else 0.0
    if top <= 0.0:
        return 0
    return int(np.sum(eigenvalues > rank_tol * top))


def make_result(F, FC, FQ, method, names, rank_tol) -> QfimResult:
    F = 0.5 * (F + F.T)
    eigenvalues = np.sort(np.linalg.eigvalsh(F))[::-1]
    if F.shape == (2, 2):
        det = float(F[0, 0] * F[1, 1] - F[0, 1] * F[1, 0])
    else:
        det = float(np.linalg.det(F))
    return QfimResult(
        F=F,
        F_classical=FC,
        F_quantum=FQ,
        eigenvalues=eigenvalues,
        det=det,
        rank=matrix_rank(eigenvalues, rank_tol),
        method=method,
        names=tuple(names),
    )


def _eigenbasis_blocks(rho: DensityMatrix, drho: Hermitian2):
    eig = eig_hermitian_2x2(rho.m)
    U = eig.vectors
    lam = np.array(eig.values)
    D = U.conj().T @ drho.array @ U
    return lam, U, D


def solve_sld(rho: DensityMatrix, drho: Hermitian2, eig_tol: float = EIG_TOL) -> SldOperator:
    """Solve drho = (rho L + L rho) / 2 in the eigenbasis of rho.

    Blocks with lambda_k + lambda_l <= eig_tol are set to zero.
    """
    if abs(drho.trace()) > 1e-9:
        raise ValueError(f"derivative of a density matrix must be traceless, trace={drho.trace()!r}")
    lam, U, D = _eigenbasis_blocks(rho, drho)
    sums = lam[:, None] + lam[None, :]
    Lk = np.where(sums > eig_tol, 2.0 * D / np.where(sums > eig_tol, sums, 1.0), 0.0)
    L = Hermitian2.from_array(U @ Lk @ U.conj().T)
    r = rho.array
    residual = drho.array - 0.5 * (r @ L.array + L.array @ r)
    return SldOperator(L, float(np.max(np.abs(residual))))


def qfi_single(
    model: ParametrizedModel, p: ParamPoint, i: int, c: DiffConfig = DiffConfig()
) -> float:
    """Single-parameter QFI Tr(rho L^2)."""
    rho = model.density(p)
    L = solve_sld(rho, d_density(model, p, i, c)).L.array
    return max(float(np.trace(rho.array @ L @ L).real), 0.0)


def qfim_sld(
    model: ParametrizedModel,
    p: ParamPoint,
    c: DiffConfig = DiffConfig(),
    rank_tol: float = RANK_TOL,
    eig_tol: float = EIG_TOL,
) -> QfimResult:
    """F_ij = Tr(rho {L_i, L_j}) / 2, ordered as ``p.names``.

    The classical/quantum split is read off the same derivatives in the
    eigenbasis of rho: diagonal elements give the eigenvalue-gradient part,
    off-diagonal elements the eigenvector part.
    """
    n = len(p)
    rho = model.density(p)
    r = rho.array
    drhos = [d_density(model, p, i, c) for i in range(n)]
    Ls = [solve_sld(rho, d, eig_tol).L.array for d in drhos]

    F = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            F[i, j] = 0.5 * np.trace(r @ (Ls[i] @ Ls[j] + Ls[j] @ Ls[i])).real

    eig = eig_hermitian_2x2(rho.m)
    U, lam = eig.vectors, np.array(eig.values)
    Ds = [U.conj().T @ d.array @ U for d in drhos]
    sums = lam[:, None] + lam[None, :]
    keep = sums > eig_tol
    inv = np.where(keep, 1.0 / np.where(keep, sums, 1.0), 0.0)
    off = ~np.eye(2, dtype=bool)
    FC = np.empty((n, n))
    FQ = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            terms = 2.0 * (Ds[i] * Ds[j].T).real * inv
            FC[i, j] = np.trace(terms)
            FQ[i, j] = terms[off].sum()
    return make_result(F, FC, FQ, "sld", p.names, rank_tol)


def _aligned_eig(rho: DensityMatrix, reference: np.ndarray):
    eig = eig_hermitian_2x2(rho.m)
    V = eig.vectors.copy()
    # remove the residual U(1) freedom relative to the centre point so that
    # stencil differences stay smooth even where the gauge pivot switches
    for k in range(2):
        overlap = np.vdot(reference[:, k], V[:, k])
        if abs(overlap) > 0:
            V[:, k] *= overlap.conjugate() / abs(overlap)
    return np.array(eig.values), V


def qfim_spectral(
    model: ParametrizedModel,
    p: ParamPoint,
    c: DiffConfig = DiffConfig(),
    rank_tol: float = RANK_TOL,
    eig_tol: float = EIG_TOL,
) -> QfimResult:
    """QFIM from eigenvalue and eigenvector derivatives.

    Raises:
        DegenerateSpectrumError: if the eigenvalue gap at ``p`` is below
            ``DEGENERACY_GAP``; eigenvector derivatives are undefined there.
    """
    n = len(p)
    rho = model.density(p)
    eig = eig_hermitian_2x2(rho.m)
    if eig.degenerate:
        raise DegenerateSpectrumError(
            f"degenerate spectrum (gap {eig.gap:.3g} < {DEGENERACY_GAP:g}) at {p.as_dict()}; "
            "use qfim_sld"
        )
    lam, V = np.array(eig.values), eig.vectors

    def packed(q):
        values, vectors = _aligned_eig(model.density(q), V)
        return np.concatenate([values.astype(complex), vectors.ravel()])

    dlam, M = [], []
    for i in range(n):
        d = derivative(packed, p, i, c)
        dlam.append(d[:2].real)
        dV = d[2:].reshape(2, 2)
        M.append(V.conj().T @ dV)  # M[k, k'] = <k | d k'>

    weight_c = np.where(lam > eig_tol, 1.0 / np.where(lam > eig_tol, lam, 1.0), 0.0)
    sums = lam[:, None] + lam[None, :]
    keep = sums > eig_tol
    weight_q = np.where(keep, (lam[:, None] - lam[None, :]) ** 2 / np.where(keep, sums, 1.0), 0.0)

    FC = np.empty((n, n))
    FQ = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            FC[i, j] = np.sum(dlam[i] * dlam[j] * weight_c)
            FQ[i, j] = np.sum(weight_q * 2.0 * (M[i] * M[j].conj()).real)
    return make_result(FC + FQ, FC, FQ, "spectral", p.names, rank_tol)


def qfim_bloch(
    model: ParametrizedModel,
    p: ParamPoint,
    c: DiffConfig = DiffConfig(),
    rank_tol: float = RANK_TOL,
) -> QfimResult:
    """F_ij = dW_i . dW_j + (W . dW_i)(W . dW_j) / (1 - |W|^2).

    On the sphere surface the second term is dropped when every derivative
    is tangent; otherwise a NearPureStateWarning is emitted.
    """
    n = len(p)
    W = model.bloch(p).array
    dW = np.array([derivative(lambda q: model.bloch(q).array, p, i, c) for i in range(n)])
    F = dW @ dW.T
    radial = dW @ W
    norm2 = float(W @ W)
    if math.sqrt(norm2) > 1.0 - PURE_NORM_TOL:
        tangent = np.abs(radial) <= PURE_TANGENT_TOL * np.maximum(np.linalg.norm(dW, axis=1), 1e-300)
        if not np.all(tangent | (np.linalg.norm(dW, axis=1) == 0)):
            warnings.warn(
                f"near-pure state (|W|={math.sqrt(norm2):.12g}) with a radial derivative; "
                "the classical term is ill-conditioned",
                NearPureStateWarning,
                stacklevel=2,
            )
            if norm2 < 1.0:
                F = F + np.outer(radial, radial) / (1.0 - norm2)
    else:
        F = F + np.outer(radial, radial) / (1.0 - norm2)
    return make_result(F, None, None, "bloch", p.names, rank_tol)


QFIM_ROUTES = {"sld": qfim_sld, "spectral": qfim_spectral, "bloch": qfim_bloch}


def classical_fi(probabilities: Sequence[float], derivatives: Sequence[float]) -> float:
    """sum_i (dp_i)^2 / p_i for a discrete outcome distribution."""
    probs = np.asarray(probabilities, dtype=float)
    derivs = np.asarray(derivatives, dtype=float)
    if probs.shape != derivs.shape:
        raise ValueError("probabilities and derivatives differ in length")
    if np.any(probs <= 0):
        raise ValueError("probabilities must be strictly positive")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
    if abs(derivs.sum()) > 1e-9 * max(1.0, np.abs(derivs).max()):
        raise ValueError(f"derivatives sum to {derivs.sum()!r}, not 0")
    return float(np.sum(derivs**2 / probs))


def bures_check(
    model: ParametrizedModel,
    p: ParamPoint,
    i: int,
    dphi: float,
    c: DiffConfig = DiffConfig(),
) -> tuple[float, float]:
    """Return (D_B(rho(p), rho(p + dphi e_i))^2, F_ii dphi^2 / 4)."""
    d = bures_distance(model.density(p), model.density(p.shifted(i, dphi)))
    return d * d, 0.25 * qfi_single(model, p, i, c) * dphi * dphi


def cr_bound(F: QfimResult, rank_tol: float = RANK_TOL) -> CrBoundReport:
    """Trace Cramer-Rao bound Tr(F^-1), or "unbounded" for a singular QFIM."""
    rank = matrix_rank(F.eigenvalues, rank_tol)
    if rank < F.n or F.n == 0:
        return CrBoundReport(False, "unbounded", "infinite")
    ev = F.eigenvalues
    if F.n == 2:
        trace_bound = float((F.F[0, 0] + F.F[1, 1]) / F.det)
    else:
        trace_bound = float(np.sum(1.0 / ev))
    return CrBoundReport(True, trace_bound, float(ev[0] / ev[-1]))
