"""
Min-Norm Module - Minimal tensor norm of sum x_i (x) conj(x_i)

The norm equals the Hilbert-Schmidt operator norm of the completely positive
map y -> sum x_i y x_i^dagger, whose matrix under the row-major vec is
M = sum x_i kron conj(x_i).
"""
import logging
from dataclasses import dataclass
from collections import deque
from typing import List, Optional, Tuple

import numpy as np

from config import (
    POWER_RTOL, POWER_MAX_ITER, POWER_SEED, SVD_DIMENSION_CUTOFF, TIE_RTOL,
    PSD_RESTARTS, PSD_MAX_ITER, PSD_STALL_WINDOW, PSD_STALL_RTOL,
)
from core import (
    TupleOfElements, UnsupportedOperation, PresentationError, realize_tuple, fix_phase, hermitian_part,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Superoperator:
    """M (d1^2 x d2^2) with M vec(y) = vec(sum x_i y x_i^dagger)"""
    source_dim: int
    target_dim: int
    M: np.ndarray

    def apply(self, y: np.ndarray) -> np.ndarray:
        d2 = int(round(np.sqrt(self.source_dim)))
        d1 = int(round(np.sqrt(self.target_dim)))
        if y.shape != (d2, d2):
            raise PresentationError(f"Superoperator expects a {d2}x{d2} input, got {y.shape}")
        return (self.M @ y.reshape(-1)).reshape(d1, d1)


@dataclass(frozen=True)
class SingularPairs:
    """Top singular value with the (left, right) vectors of its tie cluster"""
    value: float
    left: np.ndarray      # (d1^2, c)
    right: np.ndarray     # (d2^2, c)


def build_superoperator(t: TupleOfElements) -> Superoperator:
    if t.space.is_abstract:
        raise UnsupportedOperation("OH_n has no concrete superoperator; use the coefficient closed form")
    d1, d2 = t.space.shape
    X = realize_tuple(t)
    # kron(x, conj x)[(a,c),(b,d)] = x_ab conj(x_cd)
    M = np.einsum('kab,kcd->acbd', X, X.conj()).reshape(d1 * d1, d2 * d2)
    return Superoperator(source_dim=d2 * d2, target_dim=d1 * d1, M=M)


def _power_iteration(M: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(POWER_SEED)
    v = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(POWER_MAX_ITER):
        w = M.conj().T @ (M @ v)
        lam_new = float(np.real(np.vdot(v, w)))
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0, np.zeros(M.shape[0], dtype=np.complex128), v
        v = w / norm_w
        if abs(lam_new - lam) <= POWER_RTOL * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    else:
        logger.warning(f"⚠️ Power iteration hit {POWER_MAX_ITER} iterations")
    u = M @ v
    sigma = float(np.linalg.norm(u))
    if sigma > 0:
        u /= sigma
    return sigma, u, v


def top_singular_pairs(M: np.ndarray) -> SingularPairs:
    """
    Largest singular value of M and the singular vectors of its tie cluster

    Full SVD when the smaller side of M is at most SVD_DIMENSION_CUTOFF,
    otherwise power iteration on M^dagger M (a single pair).
    """
    if M.size == 0:
        return SingularPairs(0.0, np.zeros((M.shape[0], 0)), np.zeros((M.shape[1], 0)))
    if min(M.shape) <= SVD_DIMENSION_CUTOFF:
        U, s, Vh = np.linalg.svd(M)
        top = float(s[0])
        c = int(np.sum(s >= top * (1 - TIE_RTOL))) if top > 0 else 1
        return SingularPairs(top, U[:, :c], Vh[:c, :].conj().T)
    sigma, u, v = _power_iteration(M)
    return SingularPairs(sigma, u[:, None], v[:, None])


def min_norm(t: TupleOfElements) -> float:
    """
    ||sum x_i (x) conj(x_i)||_min

    Abstract OH_n: sigma_max(A)^2. Concrete: sigma_max of the superoperator.
    Empty tuples give 0.
    """
    if t.k == 0:
        return 0.0
    if t.space.is_abstract:
        return float(np.linalg.norm(t.A, 2) ** 2)
    M = build_superoperator(t).M
    if min(M.shape) <= SVD_DIMENSION_CUTOFF:
        return float(np.linalg.svd(M, compute_uv=False)[0])
    return _power_iteration(M)[0]


def min_norm_and_gradient(t: TupleOfElements) -> Tuple[float, np.ndarray]:
    """
    min_norm(t) with its (sub)gradient in the coefficients

    Args:
        t: tuple whose coefficient matrix A is the variable

    Returns:
        (value, grad) with d(value) ~ Re <grad, dA>; at tied top singular
        values the gradients of the cluster are averaged.
    """
    n = t.space.dim
    if t.k == 0:
        return 0.0, np.zeros((0, n), dtype=np.complex128)

    if t.space.is_abstract:
        U, s, Vh = np.linalg.svd(t.A, full_matrices=False)
        top = float(s[0])
        if top == 0.0:
            return 0.0, np.zeros_like(t.A)
        c = int(np.sum(s >= top * (1 - TIE_RTOL)))
        grad = 2 * top * (U[:, :c] @ Vh[:c, :]) / c
        return top ** 2, grad

    d1, d2 = t.space.shape
    X = realize_tuple(t)
    M = np.einsum('kab,kcd->acbd', X, X.conj()).reshape(d1 * d1, d2 * d2)
    pairs = top_singular_pairs(M)
    if pairs.value == 0.0:
        return 0.0, np.zeros_like(t.A)
    c = pairs.left.shape[1]
    grads_x = np.zeros_like(X)
    for j in range(c):
        Ul = pairs.left[:, j].reshape(d1, d1)
        Vr = pairs.right[:, j].reshape(d2, d2)
        grads_x += Ul @ X @ Vr.conj().T + Ul.conj().T @ X @ Vr
    grads_x /= c
    # chain rule through x_m = sum_i A_mi b_i
    grad = np.einsum('iab,mab->mi', t.space.basis.conj(), grads_x)
    return pairs.value, grad


@dataclass(frozen=True, eq=False)
class PsdAscentResult:
    value: float
    y: np.ndarray   # d2 x d2 PSD, ||y||_2 = 1
    z: np.ndarray   # d1 x d1 PSD, ||z||_2 = 1


def _phi(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # sum_m x_m Y x_m^dagger, batched over the leading axis of Y
    return np.einsum('mab,rbc,mdc->rad', X, Y, X.conj(), optimize=True)


def _phi_adjoint(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    # sum_m x_m^dagger Z x_m
    return np.einsum('mba,rbc,mcd->rad', X.conj(), Z, X, optimize=True)


def _psd_normalize(Y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(hermitian_part_batch(Y))
    w = np.clip(w, 0.0, None)
    P = np.einsum('rab,rb,rcb->rac', v, w, v.conj())
    norms = np.linalg.norm(P, axis=(1, 2))
    safe = np.where(norms > 0, norms, 1.0)
    return P / safe[:, None, None], norms


def hermitian_part_batch(Y: np.ndarray) -> np.ndarray:
    return (Y + np.conj(np.swapaxes(Y, -1, -2))) / 2


def _random_psd_starts(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    G = rng.standard_normal((count, d, d)) + 1j * rng.standard_normal((count, d, d))
    P = G @ np.conj(np.swapaxes(G, -1, -2))
    return P / np.linalg.norm(P, axis=(1, 2))[:, None, None]


def psd_ascent(t: TupleOfElements, restarts: Optional[int] = None, seed: int = 0,
               start: Optional[np.ndarray] = None) -> PsdAscentResult:
    """
    Maximize tr(sum x_i y x_i^dagger z) over PSD y, z with HS norm 1

    Alternates z = Phi(y)/||Phi(y)||_2 and y = Phi*(z)/||Phi*(z)||_2, which is
    a power iteration of Phi* Phi on the PSD cone. Restart 0 starts from
    y = I/sqrt(d2); an optional warm start is added as one more restart.
    Works for rectangular shapes (y is d2 x d2, z is d1 x d1).
    """
    t.space.require_concrete("PSD-restricted ascent")
    d1, d2 = t.space.shape
    restarts = PSD_RESTARTS if restarts is None else max(1, restarts)
    if t.k == 0:
        return PsdAscentResult(0.0, np.eye(d2) / np.sqrt(d2), np.eye(d1) / np.sqrt(d1))

    X = realize_tuple(t)
    rng = np.random.default_rng(seed)
    starts = [np.eye(d2, dtype=np.complex128)[None] / np.sqrt(d2)]
    if start is not None:
        starts.append(np.asarray(start, dtype=np.complex128)[None])
    if restarts > 1:
        starts.append(_random_psd_starts(rng, restarts - 1, d2))
    Y, _ = _psd_normalize(np.concatenate(starts))

    history = deque(maxlen=PSD_STALL_WINDOW + 1)
    values = np.zeros(Y.shape[0])
    for it in range(PSD_MAX_ITER):
        Z, values = _psd_normalize(_phi(X, Y))
        history.append(values.copy())
        if len(history) == history.maxlen:
            gain = history[-1] - history[0]
            if np.all(gain <= PSD_STALL_RTOL * np.maximum(history[-1], 1e-300)):
                break
        Ynew, ynorms = _psd_normalize(_phi_adjoint(X, Z))
        Y = np.where((ynorms > 0)[:, None, None], Ynew, Y)

    best = int(np.argmax(values))
    y = Y[best]
    z, zn = _psd_normalize(_phi(X, y[None]))
    value = float(zn[0])
    logger.debug(f"🔍 PSD ascent: best restart {best} of {Y.shape[0]}, value {value:.12g} after {it + 1} steps")
    return PsdAscentResult(value, y, z[0] if value > 0 else np.eye(d1) / np.sqrt(d1))


def min_norm_psd_restricted(t: TupleOfElements, restarts: Optional[int] = None, seed: int = 0) -> float:
    """sup of Re tr(sum x_i y x_i^dagger z) over PSD y, z in the HS unit ball (square shapes only)"""
    if t.space.is_abstract:
        raise UnsupportedOperation("PSD-restricted ascent needs concrete matrices")
    d1, d2 = t.space.shape
    if d1 != d2:
        raise UnsupportedOperation(f"PSD-restricted min norm needs square matrices, got shape {(d1, d2)}")
    return psd_ascent(t, restarts=restarts, seed=seed).value


def oh_norm(t: TupleOfElements) -> float:
    """||sum x_i (x) T_i||_{E (x)min OH_k} = min_norm(t)^(1/2)"""
    return float(np.sqrt(min_norm(t)))


def cb_norm_from_oh(images: TupleOfElements) -> float:
    """Exact cb norm of u: OH_k -> E whose i-th row is u(T_i)"""
    return oh_norm(images)


def top_eigvec(h: np.ndarray) -> np.ndarray:
    """Phase-fixed top eigenvector of a Hermitian matrix"""
    w, v = np.linalg.eigh(hermitian_part(h))
    return fix_phase(v[:, -1])


def bottom_eigvecs(h: np.ndarray, count: int, rtol: float = 1e-9) -> List[np.ndarray]:
    """Phase-fixed eigenvectors whose eigenvalue is within rtol*scale of the minimum"""
    w, v = np.linalg.eigh(hermitian_part(h))
    scale = max(1.0, float(np.max(np.abs(w))))
    picked = [fix_phase(v[:, i]) for i in range(len(w)) if w[i] <= w[0] + rtol * scale]
    return picked[:count]
