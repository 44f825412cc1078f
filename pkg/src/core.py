"""
Core Module - Complex-matrix contracts, operator-space presentations and positivity in E (x) conj(E)

Vectorization convention (used everywhere): row-major vec, so that
vec(A Y B) = (A kron B^T) vec(Y). numpy's reshape is row-major, which makes
vec(Y) == Y.reshape(-1).
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from config import RANK_TOL, PSD_TOL, SPACE_LABELS

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class OperatorSpaceError(Exception):
    """Base class for every error raised by this package"""


class PresentationError(OperatorSpaceError, ValueError):
    """Malformed matrices, dependent bases, size mismatches"""


class UnsupportedOperation(OperatorSpaceError):
    """The operation has no meaning (or no implementation) for this kind of space"""


class DegenerateFormError(OperatorSpaceError):
    """A functional induces a degenerate form on the subspace it must separate"""

    def __init__(self, message: str, nullity: int):
        super().__init__(message)
        self.nullity = nullity


class CertificateSearchError(OperatorSpaceError):
    """The certificate search machinery failed (solver error, no usable iterate)"""


class InfeasibleDictionaryError(OperatorSpaceError):
    """No mixture of the available atoms dominates the map"""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InputFormatError(OperatorSpaceError):
    """Malformed JSON input; message carries path:line:col when known"""


class NumericalAssertionError(OperatorSpaceError):
    """A checked inequality failed"""


# ---------------------------------------------------------------------------
# Complex matrices
# ---------------------------------------------------------------------------

def cmat(entries, name: str = 'matrix') -> np.ndarray:
    """
    Validate and freeze a complex matrix

    Args:
        entries: anything numpy can turn into a 2-D array
        name: used in error messages

    Returns:
        Read-only complex128 array of shape (rows, cols)
    """
    m = np.array(entries, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise PresentationError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise PresentationError(f"{name} has non-finite entries")
    m.setflags(write=False)
    return m


def op_norm(m: np.ndarray) -> float:
    """Largest singular value"""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def psd_tolerance(m: np.ndarray) -> float:
    return PSD_TOL * (1.0 + abs(np.trace(m)))


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(m))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate v so its first non-negligible component is positive real"""
    v = np.asarray(v, dtype=np.complex128)
    flat = v.reshape(-1)
    scale = np.max(np.abs(flat)) if flat.size else 0.0
    if scale == 0.0:
        return v
    idx = int(np.argmax(np.abs(flat) > tol * scale))
    phase = flat[idx] / abs(flat[idx])
    return v / phase


# ---------------------------------------------------------------------------
# Presentations, elements, tuples, positive tensors
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OperatorSpacePresentation:
    """
    Finite-dimensional operator space spanned by concrete complex matrices

    The abstract OH_n model has no basis matrices (basis is None); all of its
    norms go through coefficient closed forms.
    """
    basis: Optional[np.ndarray]
    label: str = 'generic'
    abstract_dim: int = 0

    def __post_init__(self):
        if self.label not in SPACE_LABELS:
            raise PresentationError(f"Unknown label '{self.label}', expected one of {SPACE_LABELS}")
        if self.basis is None:
            if self.abstract_dim < 1:
                raise PresentationError("Abstract presentation needs a positive dimension")
            return

        basis = np.array(self.basis, dtype=np.complex128)
        if basis.ndim != 3 or basis.shape[0] < 1 or basis.shape[1] < 1 or basis.shape[2] < 1:
            raise PresentationError(f"Basis must have shape (n, d1, d2), got {basis.shape}")
        if not np.all(np.isfinite(basis)):
            raise PresentationError("Basis has non-finite entries")

        gram = _hs_gram(basis)
        eig = np.linalg.eigvalsh(gram)
        if eig[0] <= RANK_TOL * eig[-1]:
            raise PresentationError(
                f"Basis is not linearly independent (Gram eigenvalues {eig[0]:.3e} .. {eig[-1]:.3e})"
            )
        basis.setflags(write=False)
        object.__setattr__(self, 'basis', basis)

    @classmethod
    def from_matrices(cls, matrices: Sequence, label: str = 'generic') -> 'OperatorSpacePresentation':
        mats = [cmat(m, name=f'basis[{i}]') for i, m in enumerate(matrices)]
        if not mats:
            raise PresentationError("Basis must contain at least one matrix")
        shapes = {m.shape for m in mats}
        if len(shapes) != 1:
            raise PresentationError(f"Basis members have different shapes: {sorted(shapes)}")
        return cls(basis=np.stack(mats), label=label)

    @classmethod
    def oh_model(cls, n: int) -> 'OperatorSpacePresentation':
        return cls(basis=None, label='oh', abstract_dim=int(n))

    @property
    def is_abstract(self) -> bool:
        return self.basis is None

    @property
    def dim(self) -> int:
        return self.abstract_dim if self.basis is None else self.basis.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        if self.basis is None:
            raise UnsupportedOperation("The OH coefficient model has no matrix shape")
        return self.basis.shape[1], self.basis.shape[2]

    def require_concrete(self, what: str) -> None:
        if self.basis is None:
            raise UnsupportedOperation(f"{what} needs a concrete matrix realization; OH_n is coefficient-only")

    def hs_gram(self) -> np.ndarray:
        """H_ij = tr(b_i^dagger b_j), so ||realize(c)||_HS^2 = c^dagger H c"""
        if self.basis is None:
            return np.eye(self.abstract_dim, dtype=np.complex128)
        return _hs_gram(self.basis)

    def basis_columns(self) -> np.ndarray:
        """(d1*d2, n) matrix whose columns are vec(b_i)"""
        self.require_concrete("basis_columns")
        n = self.basis.shape[0]
        return self.basis.reshape(n, -1).T

    def same_as(self, other: 'OperatorSpacePresentation') -> bool:
        if self.label != other.label or self.dim != other.dim:
            return False
        if self.basis is None or other.basis is None:
            return self.basis is None and other.basis is None
        return self.basis.shape == other.basis.shape and np.array_equal(self.basis, other.basis)

    def to_dict(self) -> dict:
        if self.basis is None:
            return {'label': self.label, 'n': self.abstract_dim}
        return {
            'shape': list(self.shape),
            'basis': [encode_complex(b) for b in self.basis],
            'label': self.label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'OperatorSpacePresentation':
        if not isinstance(data, dict):
            raise InputFormatError("Space description must be a JSON object")
        label = data.get('label', 'generic')
        if 'basis' not in data:
            if label == 'oh' and 'n' in data:
                return cls.oh_model(int(data['n']))
            raise InputFormatError("Space description needs a 'basis' list")
        mats = [decode_complex(b, where=f'basis[{i}]') for i, b in enumerate(data['basis'])]
        space = cls.from_matrices(mats, label=label)
        if 'shape' in data and tuple(data['shape']) != space.shape:
            raise InputFormatError(f"Declared shape {data['shape']} does not match basis shape {list(space.shape)}")
        return space


def _hs_gram(basis: np.ndarray) -> np.ndarray:
    flat = basis.reshape(basis.shape[0], -1)
    return flat.conj() @ flat.T


@dataclass(frozen=True, eq=False)
class Element:
    space: OperatorSpacePresentation
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.shape[0] != self.space.dim:
            raise PresentationError(f"Element has {c.shape[0]} coefficients, space has dimension {self.space.dim}")
        c.setflags(write=False)
        object.__setattr__(self, 'coeffs', c)


@dataclass(frozen=True, eq=False)
class TupleOfElements:
    """k elements of a presentation; row i of A holds the coefficients of x_i"""
    space: OperatorSpacePresentation
    A: np.ndarray

    def __post_init__(self):
        a = np.array(self.A, dtype=np.complex128)
        if a.ndim == 1 and a.size == 0:
            a = a.reshape(0, self.space.dim)
        if a.ndim != 2 or a.shape[1] != self.space.dim:
            raise PresentationError(
                f"Tuple coefficient matrix must have {self.space.dim} columns, got shape {a.shape}"
            )
        if not np.all(np.isfinite(a)):
            raise PresentationError("Tuple has non-finite coefficients")
        a.setflags(write=False)
        object.__setattr__(self, 'A', a)

    @property
    def k(self) -> int:
        return self.A.shape[0]

    def scaled(self, c: complex) -> 'TupleOfElements':
        return TupleOfElements(self.space, c * self.A)

    def concat(self, other: 'TupleOfElements') -> 'TupleOfElements':
        return TupleOfElements(self.space, np.vstack([self.A, other.A]))

    def elements(self) -> List[Element]:
        return [Element(self.space, row) for row in self.A]

    def to_dict(self) -> dict:
        return {'A': encode_complex(self.A) if self.k else {'re': [], 'im': []}, 'k': self.k}


@dataclass(frozen=True, eq=False)
class PositiveTensor:
    """u = sum_ij C_ij b_i (x) conj(b_j)"""
    space: OperatorSpacePresentation
    C: np.ndarray

    def __post_init__(self):
        c = np.array(self.C, dtype=np.complex128)
        n = self.space.dim
        if c.shape != (n, n):
            raise PresentationError(f"Coefficient matrix must be {n}x{n}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, 'C', c)


def canonical_tuple(space: OperatorSpacePresentation, k: Optional[int] = None) -> TupleOfElements:
    """x_i = b_i (rectangular identity when k != n)"""
    k = space.dim if k is None else k
    return TupleOfElements(space, np.eye(k, space.dim, dtype=np.complex128))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def realize(e: Element) -> np.ndarray:
    """sum_i coeffs_i b_i"""
    e.space.require_concrete("realize")
    return np.tensordot(e.coeffs, e.space.basis, axes=1)


def realize_tuple(t: TupleOfElements) -> np.ndarray:
    """Stack of realized elements, shape (k, d1, d2)"""
    t.space.require_concrete("realize")
    d1, d2 = t.space.shape
    if t.k == 0:
        return np.zeros((0, d1, d2), dtype=np.complex128)
    return np.tensordot(t.A, t.space.basis, axes=1)


def gram_tuple(t: TupleOfElements) -> PositiveTensor:
    """
    Coefficient matrix of sum_m x_m (x) conj(x_m)

    C_ij = sum_m A_mi conj(A_mj), i.e. C = A^T conj(A); PSD by construction.
    """
    return PositiveTensor(t.space, t.A.T @ t.A.conj())


def is_positive(u: PositiveTensor) -> bool:
    c = u.C
    tol = psd_tolerance(c)
    if np.max(np.abs(c - c.conj().T), initial=0.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(c))[0] >= -tol)


def direct_sum(p: OperatorSpacePresentation,
               q: Union[OperatorSpacePresentation, Tuple[int, int]]) -> OperatorSpacePresentation:
    """
    Paired direct sum: basis member i becomes diag(p.b_i, q.b_i)

    Args:
        p: first presentation
        q: second presentation of the same dimension, or a (d1, d2) shape
           standing for a zero block of that shape

    Returns:
        Presentation of shape (p.d1 + q.d1, p.d2 + q.d2), label 'generic'
    """
    p.require_concrete("direct_sum")
    if isinstance(q, OperatorSpacePresentation):
        q.require_concrete("direct_sum")
        if q.dim != p.dim:
            raise PresentationError(f"direct_sum needs equal dimensions, got {p.dim} and {q.dim}")
        q_blocks = list(q.basis)
    else:
        d1, d2 = q
        q_blocks = [np.zeros((d1, d2), dtype=np.complex128)] * p.dim
    blocks = [block_diag(a, b) for a, b in zip(p.basis, q_blocks)]
    return OperatorSpacePresentation(basis=np.stack(blocks), label='generic')


def embed(space: OperatorSpacePresentation, shape: Tuple[int, int]) -> OperatorSpacePresentation:
    """Place every basis matrix in the top-left corner of a larger zero matrix"""
    space.require_concrete("embed")
    d1, d2 = space.shape
    D1, D2 = shape
    if D1 < d1 or D2 < d2:
        raise PresentationError(f"Cannot embed shape {(d1, d2)} into {(D1, D2)}")
    out = np.zeros((space.dim, D1, D2), dtype=np.complex128)
    out[:, :d1, :d2] = space.basis
    return OperatorSpacePresentation(basis=out, label=space.label)


def matrix_space(d1: int, d2: Optional[int] = None) -> OperatorSpacePresentation:
    """All of M_{d1 x d2} with the matrix-unit basis; coefficients are vec(X)"""
    d2 = d1 if d2 is None else d2
    units = np.eye(d1 * d2, dtype=np.complex128).reshape(d1 * d2, d1, d2)
    return OperatorSpacePresentation(basis=units, label='generic')


def is_full_matrix_space(space: OperatorSpacePresentation) -> bool:
    if space.is_abstract:
        return False
    d1, d2 = space.shape
    return space.dim == d1 * d2


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def encode_complex(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    return {'re': a.real.tolist(), 'im': a.imag.tolist()}


def decode_complex(obj, where: str = 'value') -> np.ndarray:
    if isinstance(obj, dict) and 're' in obj:
        re = np.array(obj['re'], dtype=float)
        im = np.array(obj.get('im', np.zeros_like(re)), dtype=float)
        if re.shape != im.shape:
            raise InputFormatError(f"{where}: 're' and 'im' shapes differ ({re.shape} vs {im.shape})")
        return re + 1j * im
    try:
        return np.array(obj, dtype=np.complex128)
    except (TypeError, ValueError) as e:
        raise InputFormatError(f"{where}: cannot read complex array ({e})")


def load_json(path: Union[str, Path]) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise InputFormatError(f"{path}: cannot read file ({e.strerror})")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputFormatError(f"{path}:{e.lineno}:{e.colno}: {e.msg}")


def load_space(path: Union[str, Path]) -> OperatorSpacePresentation:
    data = load_json(path)
    try:
        return OperatorSpacePresentation.from_dict(data)
    except InputFormatError as e:
        raise InputFormatError(f"{path}: {e}")


def load_tuple(path: Union[str, Path], space: Optional[OperatorSpacePresentation] = None) -> TupleOfElements:
    """
    Read {"space": {...}?, "A": {"re": [[..]], "im": [[..]]}}

    The embedded space wins over the one passed in.
    """
    data = load_json(path)
    if not isinstance(data, dict) or 'A' not in data:
        raise InputFormatError(f"{path}: tuple file needs an 'A' coefficient matrix")
    if 'space' in data:
        space = OperatorSpacePresentation.from_dict(data['space'])
    if space is None:
        raise InputFormatError(f"{path}: no space given in the file or on the command line")
    A = decode_complex(data['A'], where=f"{path}: A")
    if A.ndim == 1:
        A = A.reshape(1, -1) if A.size else A.reshape(0, space.dim)
    return TupleOfElements(space, A)
