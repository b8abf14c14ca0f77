"""Joint estimability of two qubit parameters.

A two-parameter qubit family whose Bloch azimuth is fixed has a singular QFIM
exactly where the Jacobian of (|W|, w3) with respect to the two parameters
vanishes. This module evaluates that determinant numerically, cross-checks it
against the determinant of the SLD-route QFIM, and, for a singular QFIM,
extracts the single parameter combination that remains estimable.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qubitqfim.diff import DiffConfig, jacobian2
from qubitqfim.models import EigenModel, ParametrizedModel, ParamPoint
from qubitqfim.qfim import RANK_TOL, QfimResult, matrix_rank, qfim_bloch, qfim_sld

COND_TOL = 1e-7
DET_TOL = 1e-9
AXIS_TOL = 1e-9

JOINTLY_ESTIMABLE = "jointly-estimable"
NOT_JOINTLY_ESTIMABLE = "not-jointly-estimable"
INDETERMINATE = "indeterminate"


class ArityError(ValueError):
    """The invertibility criterion needs exactly two parameters."""


class FullRankError(ValueError):
    pass


class NoEstimableCombinationError(ValueError):
    pass


@dataclass(frozen=True)
class DetFactorization:
    lambda_factor: float
    weight: float
    cross: float
    det_closed_form: float


@dataclass(frozen=True)
class InvertibilityVerdict:
    condition_value: float
    det_qfim: float
    verdict: str
    azimuth_constant: bool
    notes: str = ""
    qfim: Optional[QfimResult] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, eq=False)
class EstimableCombination:
    R: np.ndarray
    qfi_values: tuple[float, float]
    direction: np.ndarray
    combined_parameter_description: str
    names: tuple[str, ...] = ()


@dataclass(frozen=True)
class LambdaAudit:
    """Printed eigen-model weight Lambda against the Bloch-oracle value.

    ``oracle_weight`` is the quantum-block coefficient of (dh)(dh)^T
    recovered from the Bloch-route QFIM; ``bloch_closed_form`` is
    4 (1 - 2 lam)^2. ``discrepancy`` = printed - oracle.
    """

    theta0: float
    lam: float
    h: float
    printed_lambda: float
    oracle_weight: float
    bloch_closed_form: float
    discrepancy: float
    cross: float
    det_closed_form: float
    det_qfim: float
    zero_set_agrees: bool


def printed_lambda(lam: float, h: float, theta0: float) -> float:
    """(3 + cos 2 theta0 + 2 cos 4h sin^2 theta0)(1 - 2 lam)^2, as printed."""
    return (3.0 + math.cos(2 * theta0) + 2.0 * math.cos(4 * h) * math.sin(theta0) ** 2) * (
        1.0 - 2.0 * lam
    ) ** 2


def det_factorization(m: EigenModel, p: ParamPoint, c: DiffConfig = DiffConfig()) -> DetFactorization:
    """Factor Det F = Lambda / (lam - lam^2) * (d_x lam d_y h - d_y lam d_x h)^2."""
    if len(p) != 2:
        raise ArityError(f"need exactly two parameters, got {p.names}")
    lam = m.weight(p)
    h = m.h_fn(p)
    J = jacobian2((m.lambda_fn, m.h_fn), p, (0, 1), c)
    cross = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    big_lambda = printed_lambda(lam, h, m.theta0)
    weight = 1.0 / (lam - lam * lam)
    return DetFactorization(big_lambda, weight, cross, big_lambda * weight * cross**2)


def lambda_audit(
    m: EigenModel, p: ParamPoint, c: DiffConfig = DiffConfig(), tol: float = COND_TOL
) -> LambdaAudit:
    fac = det_factorization(m, p, c)
    lam, h = m.weight(p), m.h_fn(p)
    J = jacobian2((m.lambda_fn, m.h_fn), p, (0, 1), c)
    dlam, dh = J[0], J[1]
    F = qfim_bloch(m, p, c).F
    quantum = F - np.outer(dlam, dlam) * fac.weight
    dh2 = float(dh @ dh)
    oracle = float(dh @ quantum @ dh) / dh2**2 if dh2 > 0 else math.nan
    F_sld = qfim_sld(m, p, c)
    det_zero = abs(F_sld.det) <= DET_TOL * F_sld.norm() ** 2
    return LambdaAudit(
        theta0=m.theta0,
        lam=lam,
        h=h,
        printed_lambda=fac.lambda_factor,
        oracle_weight=oracle,
        bloch_closed_form=4.0 * (1.0 - 2.0 * lam) ** 2,
        discrepancy=fac.lambda_factor - oracle,
        cross=fac.cross,
        det_closed_form=fac.det_closed_form,
        det_qfim=F_sld.det,
        zero_set_agrees=(abs(fac.cross) <= tol) == det_zero,
    )


def _doubled_azimuth(model: ParametrizedModel, q: ParamPoint) -> Optional[complex]:
    w = model.bloch(q)
    u = complex(w.w1, -w.w2)
    if abs(u) < AXIS_TOL:
        return None
    return (u / abs(u)) ** 2


def azimuth_gradient(model: ParametrizedModel, p: ParamPoint, c: DiffConfig = DiffConfig()) -> np.ndarray:
    """Gradient of atan2(-w2, w1) taken modulo pi.

    Directions whose stencil touches the z axis (azimuth undefined) report 0.
    """
    grad = np.zeros(len(p))
    for i in range(len(p)):
        h = c.step_for(p.values[i])
        hi, lo = p.shifted(i, h), p.shifted(i, -h)
        zh, zl = _doubled_azimuth(model, hi), _doubled_azimuth(model, lo)
        if zh is None or zl is None:
            continue
        grad[i] = 0.5 * cmath.phase(zh * zl.conjugate()) / (hi.values[i] - lo.values[i])
    return grad


def check_condition(
    model: ParametrizedModel,
    p: ParamPoint,
    c: DiffConfig = DiffConfig(),
    tol: float = COND_TOL,
    det_tol: float = DET_TOL,
    rank_tol: float = RANK_TOL,
) -> InvertibilityVerdict:
    """Evaluate d_x|W| d_y w3 - d_y|W| d_x w3 and cross-check with det F.

    The two tests agree for models with constant azimuth; anything else is
    reported as indeterminate with a note.
    """
    if len(p) != 2:
        raise ArityError(f"the criterion is for two parameters, got {len(p)}: {p.names}")
    model.density(p)  # domain check at the point itself before differencing
    J = jacobian2((lambda q: model.bloch(q).norm, lambda q: model.bloch(q).w3), p, (0, 1), c)
    condition_value = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])

    grad = azimuth_gradient(model, p, c)
    azimuth_constant = bool(np.all(np.abs(grad) <= tol))

    F = qfim_sld(model, p, c, rank_tol)
    scale = F.norm() ** 2
    det_zero = abs(F.det) <= det_tol * scale
    cond_zero = abs(condition_value) <= tol

    if not azimuth_constant:
        verdict = INDETERMINATE
        notes = (
            f"Bloch azimuth varies with the parameters (gradient {grad.tolist()}); "
            "the criterion assumes a constant azimuth"
        )
    elif cond_zero and det_zero:
        verdict, notes = NOT_JOINTLY_ESTIMABLE, "condition and QFIM determinant both vanish"
    elif not cond_zero and not det_zero:
        verdict, notes = JOINTLY_ESTIMABLE, "condition and QFIM determinant both nonzero"
    else:
        verdict = INDETERMINATE
        notes = (
            f"condition {'vanishes' if cond_zero else 'is nonzero'} but QFIM determinant "
            f"{'vanishes' if det_zero else 'is nonzero'}; likely a point on the z axis "
            "where the eigenvector angle is not differentiable"
        )
    return InvertibilityVerdict(condition_value, F.det, verdict, azimuth_constant, notes, F)


def estimable_combination(
    F: QfimResult, p: Optional[ParamPoint] = None, rank_tol: float = RANK_TOL
) -> EstimableCombination:
    """Rotate a rank-1 2x2 QFIM to diagonal form.

    Rows of ``R`` are eigenvectors ordered by descending eigenvalue, each with
    its largest-magnitude entry made positive, so R F R^T = diag(max, min).
    The combination is a local linearization valid at ``p``.
    """
    if F.n != 2:
        raise ValueError(f"need a 2x2 QFIM, got {F.n}x{F.n}")
    rank = matrix_rank(F.eigenvalues, rank_tol)
    if rank == 2:
        raise FullRankError("both parameters estimable; no reduction needed")
    if rank == 0:
        raise NoEstimableCombinationError("no estimable combination")

    vals, vecs = np.linalg.eigh(F.F)
    order = np.argsort(vals)[::-1]
    R = vecs[:, order].T.copy()
    for row in R:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    direction = R[0].copy()

    names = F.names or ("p1", "p2")
    (a, b), (na, nb) = direction, names
    description = f"lambda_1 = {a:.6g}*{na} {'-' if b < 0 else '+'} {abs(b):.6g}*{nb}"
    if p is not None:
        at = ", ".join(f"{k}={v:.6g}" for k, v in p.as_dict().items())
        description += f" (local linearization at {at})"
    return EstimableCombination(
        R=R,
        qfi_values=(float(vals[order[0]]), float(vals[order[1]])),
        direction=direction,
        combined_parameter_description=description,
        names=tuple(names),
    )
