"""
Models Module - Row, column, OH and Clifford model spaces with their closed forms
"""
import logging
from dataclasses import dataclass
from functools import reduce
from typing import Dict, List, Optional

import numpy as np

from config import MODEL_KINDS
from core import (
    OperatorSpacePresentation, TupleOfElements, UnsupportedOperation, PresentationError,
    realize, Element, op_norm,
)
from minnorm import min_norm
from summing import pi2oh_lower, SearchParams

logger = logging.getLogger(__name__)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class ModelSpace:
    kind: str
    n: int
    presentation: OperatorSpacePresentation


def row_space(n: int, embedded: bool = False) -> OperatorSpacePresentation:
    """
    R_n = span{e_1i}, as 1 x n matrices or (embedded) inside M_n
    """
    d1 = n if embedded else 1
    basis = np.zeros((n, d1, n), dtype=np.complex128)
    for i in range(n):
        basis[i, 0, i] = 1.0
    return OperatorSpacePresentation(basis=basis, label='row')


def column_space(n: int, embedded: bool = False) -> OperatorSpacePresentation:
    d2 = n if embedded else 1
    basis = np.zeros((n, n, d2), dtype=np.complex128)
    for i in range(n):
        basis[i, i, 0] = 1.0
    return OperatorSpacePresentation(basis=basis, label='column')


def oh_space(n: int) -> OperatorSpacePresentation:
    return OperatorSpacePresentation.oh_model(n)


def clifford_generators(n: int) -> List[np.ndarray]:
    """
    Jordan-Wigner generators in M_{2^m}, m = ceil(n/2)

    u_{2k-1} = Z^(k-1) (x) X (x) I^(m-k),  u_{2k} = Z^(k-1) (x) Y (x) I^(m-k).
    Hermitian unitaries with u_i u_j + u_j u_i = 2 delta_ij I.
    """
    if n < 1:
        raise PresentationError(f"Clifford span needs n >= 1, got {n}")
    m = (n + 1) // 2
    eye = np.eye(2, dtype=np.complex128)
    gens = []
    for k in range(m):
        for pauli in (PAULI_X, PAULI_Y):
            factors = [PAULI_Z] * k + [pauli] + [eye] * (m - k - 1)
            gens.append(reduce(np.kron, factors))
    return gens[:n]


def clifford_space(n: int) -> OperatorSpacePresentation:
    return OperatorSpacePresentation.from_matrices(clifford_generators(n), label='clifford')


_BUILDERS = {
    'row': row_space,
    'column': column_space,
    'oh': oh_space,
    'clifford': clifford_space,
}


def model_space(kind: str, n: int) -> ModelSpace:
    if kind not in MODEL_KINDS:
        raise PresentationError(f"Unknown model '{kind}', expected one of {MODEL_KINDS}")
    if n < 1:
        raise PresentationError(f"Model dimension must be positive, got {n}")
    return ModelSpace(kind, n, _BUILDERS[kind](n))


def closed_form_min_norm(kind: str, A: np.ndarray) -> float:
    """
    Closed-form ||sum x_i (x) conj(x_i)||_min for row, column and oh models

    row/column: ||A^dagger A||_F; oh: sigma_max(A)^2.
    """
    A = np.asarray(A, dtype=np.complex128)
    if kind == 'clifford':
        raise UnsupportedOperation("Clifford spans have no closed form; use minnorm.min_norm")
    if kind not in ('row', 'column', 'oh'):
        raise UnsupportedOperation(f"No closed form for '{kind}' spaces")
    if A.size == 0:
        return 0.0
    if kind == 'oh':
        return float(np.linalg.norm(A, 2) ** 2)
    return float(np.linalg.norm(A.conj().T @ A))


# ---------------------------------------------------------------------------
# Clifford identities
# ---------------------------------------------------------------------------

@dataclass
class CliffordReport:
    n: int
    ambient: int
    hermitian: float = 0.0
    square: float = 0.0
    anticommutation: float = 0.0
    anticommutator: float = 0.0
    norm_lower: float = 0.0
    norm_upper: float = 0.0
    trace_identity: float = 0.0
    samples: int = 0

    def residuals(self) -> Dict[str, float]:
        return {
            'hermitian': self.hermitian, 'square': self.square,
            'anticommutation': self.anticommutation, 'anticommutator': self.anticommutator,
            'trace_identity': self.trace_identity,
        }

    def passed(self, tol: float = 1e-12) -> bool:
        # inequality violations are stored as positive excess
        return max(self.residuals().values()) <= tol and self.norm_lower <= tol and self.norm_upper <= tol

    def to_dict(self) -> dict:
        out = {'n': self.n, 'ambient': self.ambient, 'samples': self.samples,
               'norm_lower_excess': self.norm_lower, 'norm_upper_excess': self.norm_upper}
        out.update(self.residuals())
        return out


def clifford_identity_suite(n: int, samples: int = 64, seed: int = 0) -> CliffordReport:
    """
    Check the generator relations and, on random complex x,
        i(x)^dagger i(x) + i(x) i(x)^dagger = 2 ||x||^2 I,
        ||x||^2 <= ||i(x)||^2 <= 2 ||x||^2,
        ||x||^2 = tau(i(x)^dagger i(x)) with tau the normalized trace.
    Residuals are relative to ||x||^2.
    """
    space = clifford_space(n)
    gens = space.basis
    D = gens.shape[1]
    eye = np.eye(D)
    report = CliffordReport(n=n, ambient=D, samples=samples)

    report.hermitian = max(float(np.max(np.abs(u - u.conj().T))) for u in gens)
    report.square = max(float(np.max(np.abs(u @ u - eye))) for u in gens)
    report.anticommutation = max(
        (float(np.max(np.abs(gens[i] @ gens[j] + gens[j] @ gens[i])))
         for i in range(n) for j in range(i + 1, n)),
        default=0.0,
    )

    rng = np.random.default_rng(seed)
    xs = [np.eye(n)[0]] + [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(samples - 1)]
    for x in xs:
        ix = realize(Element(space, x))
        nx = float(np.sum(np.abs(x) ** 2))
        lhs = ix.conj().T @ ix + ix @ ix.conj().T
        report.anticommutator = max(report.anticommutator, float(np.max(np.abs(lhs - 2 * nx * eye))) / nx)
        norm_sq = op_norm(ix) ** 2
        report.norm_lower = max(report.norm_lower, (nx - norm_sq) / nx)
        report.norm_upper = max(report.norm_upper, (norm_sq - 2 * nx) / nx)
        tau = float(np.real(np.trace(ix.conj().T @ ix))) / D
        report.trace_identity = max(report.trace_identity, abs(tau - nx) / nx)
    if report.passed():
        logger.info(f"✅ Clifford identities hold for n={n} in M_{D}")
    else:
        logger.warning(f"⚠️ Clifford identity residuals above tolerance for n={n}: {report.residuals()}")
    return report


@dataclass
class RatioProbeResult:
    n: int
    samples: int
    sampled_min: float
    ascent_min: float
    generators_ratio: float

    @property
    def min_ratio(self) -> float:
        return min(self.sampled_min, self.ascent_min, self.generators_ratio)

    def passed(self, tol: float = 1e-9) -> bool:
        return self.min_ratio >= 0.5 - tol

    def to_dict(self) -> dict:
        return {'n': self.n, 'samples': self.samples, 'sampled_min': self.sampled_min,
                'ascent_min': self.ascent_min, 'generators_ratio': self.generators_ratio,
                'min_ratio': self.min_ratio, 'passed': self.passed()}


def _batched_ratios(space: OperatorSpacePresentation, As: np.ndarray) -> np.ndarray:
    """min_norm(A)/||A||_F^2 for a stack of coefficient matrices"""
    d = space.shape[0]
    X = np.einsum('skn,nab->skab', As, space.basis)
    M = np.einsum('skab,skcd->sacbd', X, X.conj()).reshape(As.shape[0], d * d, d * d)
    top = np.linalg.svd(M, compute_uv=False)[:, 0]
    return top / np.sum(np.abs(As) ** 2, axis=(1, 2))


def clifford_ratio_probe(n: int, samples: int = 10_000, k: Optional[int] = None, ascent: bool = True,
                         seed: int = 0, search=None, batch: int = 500) -> RatioProbeResult:
    """
    Minimize min_norm(tuple) / sum ||a_j||^2 over tuples in a Clifford span

    Seeded sampling in batches, then a descent started from the best sample
    (the lower-bound ascent on the inverse ratio). The minimum is at least 1/2.
    """
    space = clifford_space(n)
    k = n if k is None else k
    rng = np.random.default_rng(seed)
    best, best_A = np.inf, None
    done = 0
    while done < samples:
        size = min(batch, samples - done)
        As = rng.standard_normal((size, k, n)) + 1j * rng.standard_normal((size, k, n))
        ratios = _batched_ratios(space, As)
        i = int(np.argmin(ratios))
        if ratios[i] < best:
            best, best_A = float(ratios[i]), As[i]
        done += size

    generators = min_norm(TupleOfElements(space, np.eye(n))) / n
    ascent_min = best
    if ascent:
        search = search or SearchParams.from_config(restarts=2, iterations=200, seed=seed)
        # sum ||a_j||^2 = ||A||_F^2 is the Euclidean target norm of the identity coefficients
        witness = pi2oh_lower(space, target_map=np.eye(n), k=k, search=search,
                              warm_starts=[best_A] if best_A is not None else ())
        if witness.value > 0:
            ascent_min = 1.0 / witness.value ** 2
    result = RatioProbeResult(n, samples, best, ascent_min, generators)
    if not result.passed():
        logger.warning(f"⚠️ Clifford ratio probe fell below 1/2: {result.min_ratio:.12g}")
    return result
