"""Closed-form linear algebra for 2x2 Hermitian matrices and qubit states.

Everything here works on exactly-sized values; nothing calls a general
eigensolver or matrix square root.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TRACE_TOL = 1e-12
PSD_TOL = 1e-12
BLOCH_TOL = 1e-12
DEGENERACY_GAP = 1e-9
GAUGE_MIN_MODULUS = 1e-9

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _finite(*values: complex) -> bool:
    return all(cmath.isfinite(v) for v in values)


@dataclass(frozen=True)
class Hermitian2:
    """A 2x2 Hermitian matrix stored as its three independent entries.

    ``a21`` is implied as ``conj(a12)``, so Hermiticity holds by construction.
    """

    a11: float
    a22: float
    a12: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "a11", float(self.a11))
        object.__setattr__(self, "a22", float(self.a22))
        object.__setattr__(self, "a12", complex(self.a12))
        if not _finite(self.a11, self.a22, self.a12):
            raise ValueError(f"non-finite entry in {self!r}")

    @classmethod
    def from_array(cls, arr) -> "Hermitian2":
        """Build from a 2x2 array, averaging it with its conjugate transpose."""
        arr = np.asarray(arr, dtype=complex)
        if arr.shape != (2, 2):
            raise ValueError(f"expected a 2x2 array, got shape {arr.shape}")
        return cls(
            arr[0, 0].real,
            arr[1, 1].real,
            0.5 * (arr[0, 1] + arr[1, 0].conjugate()),
        )

    @classmethod
    def zeros(cls) -> "Hermitian2":
        return cls(0.0, 0.0, 0j)

    @classmethod
    def identity(cls) -> "Hermitian2":
        return cls(1.0, 1.0, 0j)

    @property
    def a21(self) -> complex:
        return self.a12.conjugate()

    @property
    def array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]], dtype=complex)

    def trace(self) -> float:
        return self.a11 + self.a22

    def det(self) -> float:
        return self.a11 * self.a22 - abs(self.a12) ** 2

    def max_abs(self) -> float:
        return max(abs(self.a11), abs(self.a22), abs(self.a12))

    def __add__(self, other: "Hermitian2") -> "Hermitian2":
        return Hermitian2(self.a11 + other.a11, self.a22 + other.a22, self.a12 + other.a12)

    def __sub__(self, other: "Hermitian2") -> "Hermitian2":
        return Hermitian2(self.a11 - other.a11, self.a22 - other.a22, self.a12 - other.a12)

    def __mul__(self, scalar: float) -> "Hermitian2":
        scalar = float(scalar)
        return Hermitian2(scalar * self.a11, scalar * self.a22, scalar * self.a12)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "Hermitian2":
        return self * (1.0 / float(scalar))

    def __neg__(self) -> "Hermitian2":
        return self * -1.0


@dataclass(frozen=True)
class BlochVector:
    w1: float
    w2: float
    w3: float

    def __post_init__(self):
        for name in ("w1", "w2", "w3"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"non-finite Bloch component {name}={value}")
            object.__setattr__(self, name, value)

    @property
    def array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3])

    @property
    def norm(self) -> float:
        return math.sqrt(self.w1**2 + self.w2**2 + self.w3**2)


class DomainError(ValueError):
    """A model or operation was evaluated outside its valid domain."""


class UnphysicalStateError(DomainError):
    """Raised when a matrix or Bloch vector does not describe a qubit state."""


@dataclass(frozen=True)
class DensityMatrix:
    """Unit-trace positive semidefinite 2x2 Hermitian matrix."""

    m: Hermitian2

    def __post_init__(self):
        tr = self.m.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise UnphysicalStateError(f"trace {tr!r} differs from 1")
        lo = _eigenvalues(self.m)[0]
        if lo < -PSD_TOL:
            raise UnphysicalStateError(f"negative eigenvalue {lo!r}")

    @classmethod
    def from_array(cls, arr) -> "DensityMatrix":
        return cls(Hermitian2.from_array(arr))

    @property
    def array(self) -> np.ndarray:
        return self.m.array

    @property
    def eigenvalues(self) -> tuple[float, float]:
        return _eigenvalues(self.m)

    def det(self) -> float:
        return self.m.det()


@dataclass(frozen=True)
class EigenPair2:
    """Ascending eigenvalues and gauge-fixed eigenvectors.

    ``vectors[:, k]`` is the eigenvector for ``values[k]``. ``degenerate`` is
    set when the gap is below ``DEGENERACY_GAP``; the vectors are still valid
    but their parameter derivatives are not.
    """

    values: tuple[float, float]
    vectors: np.ndarray
    degenerate: bool = False

    @property
    def gap(self) -> float:
        return self.values[1] - self.values[0]

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return sum(lam * np.outer(v[:, k], v[:, k].conj()) for k, lam in enumerate(self.values))


def _eigenvalues(h: Hermitian2) -> tuple[float, float]:
    mean = 0.5 * (h.a11 + h.a22)
    half = math.hypot(0.5 * (h.a11 - h.a22), abs(h.a12))
    return mean - half, mean + half


def _fix_gauge(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    lead = v[0] if abs(v[0]) > GAUGE_MIN_MODULUS else v[1]
    v = v * (lead.conjugate() / abs(lead))
    # snap the pivot to an exact real value so repeated calls agree bitwise
    if abs(v[0]) > GAUGE_MIN_MODULUS:
        v[0] = abs(v[0])
    else:
        v[1] = abs(v[1])
    return v + 0.0


def eig_hermitian_2x2(h: Hermitian2) -> EigenPair2:
    """Closed-form eigen-decomposition of a 2x2 Hermitian matrix.

    Eigenvector components are formed from ``s + |d|`` rather than ``s - |d|``
    so that nearly diagonal inputs do not lose precision to cancellation.
    """
    mean = 0.5 * (h.a11 + h.a22)
    d = 0.5 * (h.a11 - h.a22)
    b = h.a12
    s = math.hypot(d, abs(b))
    values = (mean - s, mean + s)

    if s == 0.0:
        vectors = np.eye(2, dtype=complex)
        return EigenPair2(values, vectors, degenerate=True)

    # eigenvector of mean + s, components pre-divided by s against underflow
    if d >= 0:
        upper = np.array([1.0 + d / s, b.conjugate() / s], dtype=complex)
    else:
        upper = np.array([b / s, 1.0 - d / s], dtype=complex)
    upper = upper / np.linalg.norm(upper)
    lower = np.array([-upper[1].conjugate(), upper[0].conjugate()])

    vectors = np.column_stack([_fix_gauge(lower), _fix_gauge(upper)])
    return EigenPair2(values, vectors, degenerate=2 * s < DEGENERACY_GAP)


def density_from_bloch(w: BlochVector) -> DensityMatrix:
    """rho = (I + W . sigma) / 2."""
    if w.norm > 1.0 + BLOCH_TOL:
        raise UnphysicalStateError(f"Bloch vector norm {w.norm!r} exceeds 1")
    return DensityMatrix(
        Hermitian2(0.5 * (1.0 + w.w3), 0.5 * (1.0 - w.w3), 0.5 * complex(w.w1, -w.w2))
    )


def bloch_from_density(rho: DensityMatrix) -> BlochVector:
    m = rho.m
    return BlochVector(2.0 * m.a12.real, -2.0 * m.a12.imag, m.a11 - m.a22)


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Squared Uhlmann fidelity via the qubit identity Tr(rho sigma) + 2 sqrt(det rho det sigma)."""
    a, b = rho.m, sigma.m
    overlap = a.a11 * b.a11 + a.a22 * b.a22 + 2.0 * (a.a12 * b.a12.conjugate()).real
    dets = max(a.det(), 0.0) * max(b.det(), 0.0)
    return min(max(overlap + 2.0 * math.sqrt(dets), 0.0), 1.0)


def bures_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.m == sigma.m:
        return 0.0
    return math.sqrt(max(2.0 * (1.0 - math.sqrt(fidelity(rho, sigma))), 0.0))
