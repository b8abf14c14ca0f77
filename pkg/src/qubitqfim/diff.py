"""Central differences with optional Richardson extrapolation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from qubitqfim.linalg import DomainError, Hermitian2
from qubitqfim.models import ParametrizedModel, ParamPoint

Value = Union[float, np.ndarray]


@dataclass(frozen=True)
class DiffConfig:
    """Finite-difference settings.

    Attributes:
        step: base step size.
        richardson: combine steps h and h/2 to cancel the O(h^2) error term.
        relative_step: scale the step by max(1, |value|) of the parameter.
    """

    step: float = 1e-5
    richardson: bool = True
    relative_step: bool = True

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step!r}")

    def step_for(self, value: float) -> float:
        return self.step * max(1.0, abs(value)) if self.relative_step else self.step


def _central(fn, p: ParamPoint, i: int, h: float) -> Value:
    hi, lo = p.shifted(i, h), p.shifted(i, -h)
    # use the representable spacing actually taken
    width = hi.values[i] - lo.values[i]
    return (np.asarray(fn(hi)) - np.asarray(fn(lo))) / width


def _stencil(fn, p: ParamPoint, i: int, h: float, richardson: bool) -> Value:
    coarse = _central(fn, p, i, h)
    if not richardson:
        return coarse
    fine = _central(fn, p, i, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def derivative(
    fn: Callable[[ParamPoint], Value], p: ParamPoint, i: int, c: DiffConfig = DiffConfig()
) -> Value:
    """Partial derivative of ``fn`` along parameter ``i`` at ``p``.

    If a stencil point leaves the model domain the step is shrunk once by 10x.
    """
    h = c.step_for(p.values[i])
    try:
        return _stencil(fn, p, i, h, c.richardson)
    except DomainError:
        pass
    try:
        return _stencil(fn, p, i, 0.1 * h, c.richardson)
    except DomainError as exc:
        raise DomainError(
            f"finite-difference stencil for {p.names[i]!r} leaves the model domain "
            f"at {p.as_dict()} (step {0.1 * h:g}): {exc}"
        ) from exc


def d_density(
    model: ParametrizedModel, p: ParamPoint, i: int, c: DiffConfig = DiffConfig()
) -> Hermitian2:
    """d rho / d p_i, Hermitian and with the (round-off) trace removed."""
    d = Hermitian2.from_array(derivative(lambda q: model.density(q).array, p, i, c))
    shift = 0.5 * d.trace()
    return Hermitian2(d.a11 - shift, d.a22 - shift, d.a12)


def jacobian2(
    f: tuple[Callable[[ParamPoint], float], Callable[[ParamPoint], float]],
    p: ParamPoint,
    ij: tuple[int, int] = (0, 1),
    c: DiffConfig = DiffConfig(),
) -> np.ndarray:
    """[[d_i a, d_j a], [d_i b, d_j b]] for the pair of fields ``f = (a, b)``."""
    a, b = f
    both = lambda q: np.array([a(q), b(q)])  # noqa: E731
    i, j = ij
    return np.column_stack([derivative(both, p, i, c), derivative(both, p, j, c)])


def convergence_order(errors: Sequence[float]) -> Union[float, str]:
    """Observed order from errors at steps h, h/2, h/4.

    Returns the mean of log2(e(h)/e(h/2)) and log2(e(h/2)/e(h/4)), or the
    string ``"exact"`` when any sample is zero.
    """
    e1, e2, e3 = (abs(float(e)) for e in errors)
    if e1 == 0 or e2 == 0 or e3 == 0:
        return "exact"
    return 0.5 * (math.log2(e1 / e2) + math.log2(e2 / e3))
