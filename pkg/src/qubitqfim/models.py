"""Parametrized qubit state families and Lindblad time evolution.

A model is any object with ``density(point)`` and ``bloch(point)``; the three
families below cover the general eigen-decomposition form, arbitrary Bloch
vector fields and the spontaneously decaying qubit.

Scalar fields are plain callables ``point -> float``. They are called from
whatever thread evaluates the model, so user-supplied fields must be safe to
call concurrently (pure functions are).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence, Union

import numpy as np

from qubitqfim.expr import Expression
from qubitqfim.linalg import (
    PSD_TOL,
    BlochVector,
    DensityMatrix,
    DomainError,
    Hermitian2,
    bloch_from_density,
    density_from_bloch,
)

ScalarField = Callable[["ParamPoint"], float]

__all__ = [
    "BlochModel",
    "DissipativeQubitModel",
    "DomainError",
    "EigenModel",
    "ParamPoint",
    "ParametrizedModel",
    "StepTooLargeError",
    "const",
    "eval_bloch_model",
    "eval_dissipative",
    "eval_eigen_model",
    "field_from",
    "integrate_lindblad",
    "lindblad_step_rk4",
    "param",
]


@dataclass(frozen=True)
class ParamPoint:
    """Ordered named parameter values. Supports ``point["x"]`` lookup."""

    names: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        names = tuple(self.names)
        values = tuple(float(v) for v in self.values)
        if len(names) != len(values):
            raise ValueError("names and values differ in length")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {names}")
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite parameter value in {values}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    @classmethod
    def of(cls, mapping: Mapping[str, float] | None = None, **kwargs: float) -> "ParamPoint":
        items = dict(mapping or {}, **kwargs)
        return cls(tuple(items), tuple(items.values()))

    def __len__(self):
        return len(self.names)

    def __getitem__(self, name: str) -> float:
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        return self.names.index(name)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def shifted(self, i: int, delta: float) -> "ParamPoint":
        values = list(self.values)
        values[i] += delta
        return ParamPoint(self.names, tuple(values))

    def moved(self, direction: Sequence[float], s: float) -> "ParamPoint":
        return ParamPoint(self.names, tuple(v + s * d for v, d in zip(self.values, direction)))


class ParametrizedModel(Protocol):
    def density(self, p: ParamPoint) -> DensityMatrix: ...

    def bloch(self, p: ParamPoint) -> BlochVector: ...


# Built-in scalar fields


def param(name: str) -> ScalarField:
    def f(p: ParamPoint) -> float:
        return p[name]

    f.__name__ = name
    return f


def const(value: float) -> ScalarField:
    value = float(value)
    return lambda p: value


def field_from(spec: Union[str, float, ScalarField]) -> ScalarField:
    """Coerce an expression string, a number or a callable into a scalar field."""
    if callable(spec):
        return spec
    if isinstance(spec, (int, float)):
        return const(spec)
    return Expression(spec)


@dataclass(frozen=True)
class EigenModel:
    """rho = lam |phi1><phi1| + (1 - lam) |phi2><phi2| with a constant phase theta0.

    |phi1> = (e^{i theta0} cos h, sin h), |phi2> = (-sin h, e^{-i theta0} cos h),
    both read as column vectors.
    """

    lambda_fn: ScalarField
    h_fn: ScalarField
    theta0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lambda_fn", field_from(self.lambda_fn))
        object.__setattr__(self, "h_fn", field_from(self.h_fn))

    def eigenvectors(self, p: ParamPoint) -> tuple[np.ndarray, np.ndarray]:
        h = self.h_fn(p)
        phase = cmath.exp(1j * self.theta0)
        phi1 = np.array([phase * math.cos(h), math.sin(h)])
        phi2 = np.array([-math.sin(h), phase.conjugate() * math.cos(h)])
        return phi1, phi2

    def weight(self, p: ParamPoint) -> float:
        lam = self.lambda_fn(p)
        if not 0.0 < lam < 1.0:
            raise DomainError(f"eigenvalue weight {lam!r} outside (0, 1)")
        return lam

    def density(self, p: ParamPoint) -> DensityMatrix:
        lam = self.weight(p)
        phi1, phi2 = self.eigenvectors(p)
        rho = lam * np.outer(phi1, phi1.conj()) + (1.0 - lam) * np.outer(phi2, phi2.conj())
        return DensityMatrix.from_array(rho)

    def bloch(self, p: ParamPoint) -> BlochVector:
        return bloch_from_density(self.density(p))


@dataclass(frozen=True)
class BlochModel:
    w1_fn: ScalarField
    w2_fn: ScalarField
    w3_fn: ScalarField

    def __post_init__(self):
        for name in ("w1_fn", "w2_fn", "w3_fn"):
            object.__setattr__(self, name, field_from(getattr(self, name)))

    @classmethod
    def from_strings(cls, w1: str, w2: str, w3: str) -> "BlochModel":
        return cls(Expression(w1), Expression(w2), Expression(w3))

    def bloch(self, p: ParamPoint) -> BlochVector:
        return BlochVector(self.w1_fn(p), self.w2_fn(p), self.w3_fn(p))

    def density(self, p: ParamPoint) -> DensityMatrix:
        return density_from_bloch(self.bloch(p))


@dataclass(frozen=True)
class DissipativeQubitModel:
    """Qubit prepared in diag(x, 1 - x) and decaying at rate gamma for a time t.

    Parameters are read from the point under ``x_name`` and ``gamma_name``.
    ``omega`` is the frequency of H = omega * sigma_z; it does not affect
    populations and is kept only for the numerically integrated path.
    """

    time: float = 1.0
    omega: float = 0.0
    x_name: str = "x"
    gamma_name: str = "gamma"

    def __post_init__(self):
        if not self.time >= 0.0:
            raise DomainError(f"time must be nonnegative, got {self.time!r}")

    def unpack(self, p: ParamPoint) -> tuple[float, float]:
        x, gamma = p[self.x_name], p[self.gamma_name]
        if not 0.0 < x < 1.0:
            raise DomainError(f"initial excited population x={x!r} outside (0, 1)")
        if gamma < 0.0:
            raise DomainError(f"decay rate gamma={gamma!r} is negative")
        return x, gamma

    def initial_state(self, p: ParamPoint) -> DensityMatrix:
        x, _ = self.unpack(p)
        return DensityMatrix(Hermitian2(x, 1.0 - x))

    def excited_population(self, p: ParamPoint) -> float:
        x, gamma = self.unpack(p)
        return math.exp(-self.time * gamma) * x

    def density(self, p: ParamPoint) -> DensityMatrix:
        rho11 = self.excited_population(p)
        return DensityMatrix(Hermitian2(rho11, 1.0 - rho11))

    def bloch(self, p: ParamPoint) -> BlochVector:
        return BlochVector(0.0, 0.0, 2.0 * self.excited_population(p) - 1.0)

    def bloch_model(self) -> BlochModel:
        """The same family written as a Bloch-vector model."""
        t, xn, gn = self.time, self.x_name, self.gamma_name
        return BlochModel(0.0, 0.0, lambda p: 2.0 * p[xn] * math.exp(-t * p[gn]) - 1.0)


def eval_eigen_model(m: EigenModel, p: ParamPoint) -> DensityMatrix:
    return m.density(p)


def eval_bloch_model(m: BlochModel, p: ParamPoint) -> DensityMatrix:
    return m.density(p)


def eval_dissipative(m: DissipativeQubitModel, p: ParamPoint) -> DensityMatrix:
    return m.density(p)


# Lindblad evolution: drho/dt = -i[omega sigma_z, rho] + gamma D[sigma_-] rho

_SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
_LOWER = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e| with |e> first
_EXCITED = _LOWER.conj().T @ _LOWER
STEP_PSD_TOL = 1e-9
TRACE_DRIFT_TOL = 1e-13


class StepTooLargeError(DomainError):
    """An integration step left the positive semidefinite cone."""


def liouvillian(omega: float, gamma: float) -> np.ndarray:
    """4x4 generator acting on row-major vec(rho).

    Uses vec(A rho B) = (A kron B^T) vec(rho).
    """
    eye = np.eye(2)
    h = omega * _SIGMA_Z
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    if gamma:
        c, cdc = _LOWER, _EXCITED
        gen = gen + gamma * (
            np.kron(c, c.conj()) - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
        )
    return gen


def _lindblad_rhs(rho: np.ndarray, omega: float, gamma: float) -> np.ndarray:
    return (liouvillian(omega, gamma) @ rho.ravel()).reshape(2, 2)


def _rk4_vec(v: np.ndarray, gen: np.ndarray, dt: float) -> np.ndarray:
    k1 = gen @ v
    k2 = gen @ (v + 0.5 * dt * k1)
    k3 = gen @ (v + 0.5 * dt * k2)
    k4 = gen @ (v + dt * k3)
    r00, r01, r10, r11 = (v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).tolist()
    a11, a22 = r00.real, r11.real
    a12 = 0.5 * (r01 + r10.conjugate())
    tr = a11 + a22
    if abs(tr - 1.0) > TRACE_DRIFT_TOL:
        a11, a22, a12 = a11 / tr, a22 / tr, a12 / tr
    lo = 0.5 * (a11 + a22) - math.hypot(0.5 * (a11 - a22), abs(a12))
    if lo < -STEP_PSD_TOL:
        raise StepTooLargeError(f"step dt={dt!r} produced eigenvalue {lo!r}")
    return np.array([a11, a12, a12.conjugate(), a22], dtype=complex)


def _as_density(v: np.ndarray) -> DensityMatrix:
    h = Hermitian2.from_array(v.reshape(2, 2))
    # clip negativity that the step check tolerates but DensityMatrix does not
    if np.linalg.eigvalsh(h.array)[0] < -PSD_TOL:
        vals, vecs = np.linalg.eigh(h.array)
        vals = np.clip(vals, 0.0, None)
        h = Hermitian2.from_array((vecs * vals) @ vecs.conj().T / vals.sum())
    return DensityMatrix(h)


def lindblad_step_rk4(rho: DensityMatrix, omega: float, gamma: float, dt: float) -> DensityMatrix:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma!r}")
    return _as_density(_rk4_vec(rho.array.ravel(), liouvillian(omega, gamma), dt))


def integrate_lindblad(
    rho0: DensityMatrix, omega: float, gamma: float, t: float, dt: float
) -> DensityMatrix:
    """Fixed-step RK4 from 0 to ``t``; the last step is shortened to land on ``t``."""
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma!r}")
    ratio = t / dt
    n_full = round(ratio) if abs(ratio - round(ratio)) < 1e-9 else math.floor(ratio)
    remainder = t - n_full * dt
    gen = liouvillian(omega, gamma)
    v = rho0.array.ravel()
    for _ in range(n_full):
        v = _rk4_vec(v, gen, dt)
    if remainder > 1e-15 * max(1.0, t):
        v = _rk4_vec(v, gen, remainder)
    return _as_density(v)
