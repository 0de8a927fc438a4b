"""Dense truncated Fock-space linear algebra for multimode bosonic states.

Conventions used throughout the package (fixed here, shared by every module):

* Quadratures: x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)), so
  [x, p] = i and the vacuum has Var(x) = Var(p) = 1/2.
* Rotated quadrature: x(theta) = (a e^{-i theta} + a^dag e^{i theta})/sqrt(2)
  = x cos(theta) + p sin(theta).
* Squeezing: S(xi) = exp[(xi* a^2 - xi a^dag^2)/2]; for real xi > 0 the x
  quadrature is squeezed, Var(x) = e^{-2 xi}/2.
* Displacement: D(alpha) = exp[alpha a^dag - alpha* a]; <x> = sqrt(2) Re(alpha).
* Mode ordering: mode 0 is the slowest-varying index.  A multimode amplitude
  vector of length D = d^m reshapes to shape (d,)*m with axis i = mode i, and
  multimode operators are built as kron(op_0, op_1, ..., op_{m-1}).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Tolerances for state validation, shared by constructors below.
NORM_ATOL = 1e-9
TRACE_ATOL = 1e-6
HERM_ATOL = 1e-9
EIG_ATOL = 1e-8
DEFAULT_TAIL_TOL = 1e-3


@dataclass(frozen=True)
class FockSpec:
    """Truncated multimode Fock space: m modes, d levels each, D = d^m."""

    num_modes: int
    cutoff: int

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValidationError(f"num_modes must be >= 1, got {self.num_modes}")
        if self.cutoff < 2:
            raise ValidationError(f"cutoff must be >= 2, got {self.cutoff}")

    @property
    def total_dim(self) -> int:
        return self.cutoff ** self.num_modes

    def basis_index(self, ns) -> int:
        """Flat index of |n_0, n_1, ..., n_{m-1}> (mode 0 slowest-varying)."""
        ns = tuple(int(n) for n in ns)
        if len(ns) != self.num_modes:
            raise ValidationError(f"expected {self.num_modes} occupation numbers, got {len(ns)}")
        idx = 0
        for n in ns:
            if not 0 <= n < self.cutoff:
                raise ValidationError(f"occupation {n} outside [0, {self.cutoff})")
            idx = idx * self.cutoff + n
        return idx


class PureState:
    """Normalized amplitude vector over a FockSpec."""

    def __init__(self, spec: FockSpec, amplitudes, normalize: bool = False):
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (spec.total_dim,):
            raise ValidationError(
                f"amplitude length {amps.shape[0]} != total_dim {spec.total_dim}")
        nrm = np.linalg.norm(amps)
        if normalize:
            if nrm < 1e-12:
                raise ValidationError("cannot normalize a null vector")
            amps = amps / nrm
        elif abs(nrm * nrm - 1.0) > NORM_ATOL:
            raise ValidationError(f"squared norm {nrm * nrm} not within {NORM_ATOL} of 1")
        self.spec = spec
        self.amplitudes = amps

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to (d,)*m with axis i = mode i."""
        return self.amplitudes.reshape((self.spec.cutoff,) * self.spec.num_modes)

    def top_level_populations(self) -> np.ndarray:
        """Population of the highest Fock level, per mode."""
        prob = np.abs(self.tensor()) ** 2
        m = self.spec.num_modes
        out = np.empty(m)
        for i in range(m):
            out[i] = prob.take(self.spec.cutoff - 1, axis=i).sum()
        return out

    def density_matrix(self) -> "DensityMatrix":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(self.spec, rho, validate=False)


class DensityMatrix:
    """Hermitian, unit-trace, PSD matrix over a FockSpec."""

    def __init__(self, spec: FockSpec, elements, validate: bool = True):
        rho = np.asarray(elements, dtype=complex)
        D = spec.total_dim
        if rho.shape != (D, D):
            raise ValidationError(f"expected shape ({D}, {D}), got {rho.shape}")
        self.spec = spec
        self.elements = rho
        if validate:
            self.validate()

    def validate(self):
        rho = self.elements
        herm_err = np.abs(rho - rho.conj().T).max()
        if herm_err > HERM_ATOL:
            raise ValidationError(f"not Hermitian: max asymmetry {herm_err:.3e}")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValidationError(f"trace {tr} not within {TRACE_ATOL} of 1")
        min_eig = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
        if min_eig < -EIG_ATOL:
            raise ValidationError(f"negative eigenvalue {min_eig:.3e}")

    def tensor(self) -> np.ndarray:
        """Elements reshaped to (d,)*2m; ket axes first, bra axes last."""
        d, m = self.spec.cutoff, self.spec.num_modes
        return self.elements.reshape((d,) * (2 * m))

    def top_level_populations(self) -> np.ndarray:
        d, m = self.spec.cutoff, self.spec.num_modes
        diag = np.real(np.diagonal(self.elements)).reshape((d,) * m)
        out = np.empty(m)
        for i in range(m):
            out[i] = diag.take(d - 1, axis=i).sum()
        return out


def annihilation_matrix(d: int) -> np.ndarray:
    """Single-mode annihilation operator truncated to d Fock levels."""
    if d < 2:
        raise ValidationError(f"cutoff must be >= 2, got {d}")
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def creation_matrix(d: int) -> np.ndarray:
    return annihilation_matrix(d).conj().T


def number_matrix(d: int) -> np.ndarray:
    if d < 2:
        raise ValidationError(f"cutoff must be >= 2, got {d}")
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def quadrature_matrix(d: int, theta: float = 0.0) -> np.ndarray:
    """x(theta) = (a e^{-i theta} + a^dag e^{i theta})/sqrt(2), truncated."""
    a = annihilation_matrix(d)
    return (a * np.exp(-1j * theta) + a.conj().T * np.exp(1j * theta)) / np.sqrt(2)


def embed_single_mode_op(op: np.ndarray, mode: int, spec: FockSpec) -> np.ndarray:
    """Embed a d x d operator on one mode into the full D x D space.

    Identity on every other mode; mode ordering follows the module convention
    (mode 0 slowest-varying), i.e. the result is kron(I, ..., op, ..., I).
    """
    op = np.asarray(op, dtype=complex)
    d, m = spec.cutoff, spec.num_modes
    if op.shape != (d, d):
        raise ValidationError(f"operator shape {op.shape} != ({d}, {d})")
    if not 0 <= mode < m:
        raise ValidationError(f"mode {mode} out of range for {m} modes")
    left = d ** mode
    right = d ** (m - mode - 1)
    return np.kron(np.kron(np.eye(left, dtype=complex), op), np.eye(right, dtype=complex))


def apply_single_mode_op(op: np.ndarray, psi: np.ndarray, mode: int, spec: FockSpec) -> np.ndarray:
    """Apply a d x d operator along one mode axis of an amplitude vector.

    Equivalent to embed_single_mode_op(op, mode, spec) @ psi but O(D*d)
    instead of O(D^2).
    """
    d, m = spec.cutoff, spec.num_modes
    tens = psi.reshape((d,) * m)
    tens = np.moveaxis(np.tensordot(op, tens, axes=([1], [mode])), 0, mode)
    return tens.reshape(-1)


def apply_two_mode_op(op: np.ndarray, psi: np.ndarray, mode_a: int, mode_b: int,
                      spec: FockSpec) -> np.ndarray:
    """Apply a (d^2 x d^2) operator acting on modes (a, b) of an amplitude vector.

    The operator is indexed in the (mode_a, mode_b) kron ordering.
    """
    d, m = spec.cutoff, spec.num_modes
    if mode_a == mode_b:
        raise ValidationError("mode_a and mode_b must differ")
    tens = psi.reshape((d,) * m)
    op4 = op.reshape(d, d, d, d)
    tens = np.tensordot(op4, tens, axes=([2, 3], [mode_a, mode_b]))
    # tensordot puts the two output axes first, in (mode_a, mode_b) order
    tens = np.moveaxis(tens, [0, 1], [mode_a, mode_b])
    return tens.reshape(-1)


def partial_trace_keep(rho: DensityMatrix, keep_mode: int) -> DensityMatrix:
    """Reduced single-mode density matrix, tracing out every other mode."""
    d, m = rho.spec.cutoff, rho.spec.num_modes
    if not 0 <= keep_mode < m:
        raise ValidationError(f"mode {keep_mode} out of range for {m} modes")
    if m == 1:
        return DensityMatrix(rho.spec, rho.elements.copy(), validate=False)
    tens = rho.tensor()  # ket axes 0..m-1, bra axes m..2m-1
    tens = np.moveaxis(tens, [keep_mode, m + keep_mode], [0, m])
    rest = d ** (m - 1)
    out = np.einsum("arbr->ab", tens.reshape(d, rest, d, rest))
    return DensityMatrix(FockSpec(1, d), out, validate=False)


def reduced_from_pure(psi: PureState, keep_mode: int) -> DensityMatrix:
    """Single-mode reduced state of a pure state, O(D*d) memory."""
    d, m = psi.spec.cutoff, psi.spec.num_modes
    if not 0 <= keep_mode < m:
        raise ValidationError(f"mode {keep_mode} out of range for {m} modes")
    tens = np.moveaxis(psi.tensor(), keep_mode, 0).reshape(d, -1)
    rho = tens @ tens.conj().T
    return DensityMatrix(FockSpec(1, d), rho, validate=False)


def hermitian_eig(matrix: np.ndarray, herm_atol: float = 1e-8):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns).  Raises if the
    input is not Hermitian within herm_atol.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {matrix.shape}")
    asym = np.abs(matrix - matrix.conj().T).max()
    scale = max(np.abs(matrix).max(), 1.0)
    if asym > herm_atol * scale:
        raise ValidationError(f"matrix not Hermitian: asymmetry {asym:.3e}")
    vals, vecs = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    return vals, vecs
