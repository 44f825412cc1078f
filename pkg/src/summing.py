"""
Summing Module - (2,oh)-summing norms: witnesses, certificates and comparison checks

Lower bounds come from tuple ascent on
    f(A) = sum ||u(x_m)||^2 / ||sum x_m (x) conj(x_m)||_min,
upper bounds from mixtures of positive functionals phi with
    ||u(x)||^2 <= C^2 phi(x (x) conj(x)),
found by column generation (cvxpy master problem, PSD-ascent pricing).
"""
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
from scipy.linalg import eigh

from config import (
    ASCENT_RESTARTS, ASCENT_ITERATIONS, ASCENT_STEP, ASCENT_BACKTRACK,
    ASCENT_STALL_RTOL, ASCENT_STALL_STEPS, TIE_RTOL,
    PSD_RESTARTS, MAX_ATOMS, ATOM_PRUNE, CERT_EIG_TOL, CERT_ROUNDS, CERT_STALL_RTOL,
    PINV_CUTOFF, EXACT_SLACK, DEFAULT_SEED, DEFAULT_WORKERS, MODEL_KINDS,
)
from core import (
    OperatorSpacePresentation, TupleOfElements, UnsupportedOperation, PresentationError,
    CertificateSearchError, InfeasibleDictionaryError, NumericalAssertionError,
    hermitian_part, psd_tolerance, encode_complex, decode_complex,
)
from minnorm import min_norm, min_norm_and_gradient, psd_ascent, bottom_eigvecs, top_eigvec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchParams:
    """Budgets and seeds shared by every seeded search"""
    restarts: int = ASCENT_RESTARTS
    iterations: int = ASCENT_ITERATIONS
    step: float = ASCENT_STEP
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    psd_restarts: int = PSD_RESTARTS
    cert_rounds: int = CERT_ROUNDS

    @classmethod
    def from_config(cls, **overrides) -> 'SearchParams':
        return replace(cls(), **{k: v for k, v in overrides.items() if v is not None})

    def to_dict(self) -> dict:
        return {
            'restarts': self.restarts, 'iterations': self.iterations, 'step': self.step,
            'seed': self.seed, 'psd_restarts': self.psd_restarts, 'cert_rounds': self.cert_rounds,
        }


def run_restarts(fn: Callable, jobs: Sequence, workers: int = 1) -> list:
    """Map fn over jobs, in a thread pool when workers > 1; output order is job order"""
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


# ---------------------------------------------------------------------------
# Positive functionals on E (x) conj(E)
# ---------------------------------------------------------------------------

def _check_psd_unit(m: np.ndarray, name: str, trace_ball: bool = False) -> np.ndarray:
    m = np.array(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PresentationError(f"{name} must be square, got shape {m.shape}")
    tol = psd_tolerance(m)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
        raise PresentationError(f"{name} is not Hermitian")
    if np.linalg.eigvalsh(hermitian_part(m))[0] < -tol:
        raise PresentationError(f"{name} is not positive semidefinite")
    m = hermitian_part(m)
    size = float(np.real(np.trace(m))) if trace_ball else float(np.linalg.norm(m))
    if size > 1 + 1e-12:
        raise PresentationError(f"{name} exceeds the unit ball ({size:.6g} > 1)")
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class PhiFunctional:
    """phi(x (x) conj(x')) = tr(x y x'^dagger z) with PSD y, z in the HS unit ball"""
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'y', _check_psd_unit(self.y, 'y'))
        object.__setattr__(self, 'z', _check_psd_unit(self.z, 'z'))

    def gram(self, space: OperatorSpacePresentation) -> np.ndarray:
        """G_ij = phi(b_j (x) conj(b_i)), so phi(x (x) conj(x)) = c^dagger G c"""
        space.require_concrete("PhiFunctional.gram")
        d1, d2 = space.shape
        if self.y.shape != (d2, d2) or self.z.shape != (d1, d1):
            raise PresentationError(
                f"Atom shapes y{self.y.shape}, z{self.z.shape} do not fit matrices of shape {(d1, d2)}"
            )
        B = space.basis
        BY = B @ self.y
        BhZ = np.conj(np.swapaxes(B, 1, 2)) @ self.z
        G = np.einsum('jab,iba->ij', BY, BhZ)
        return hermitian_part(G)

    def evaluate(self, x: np.ndarray, x2: Optional[np.ndarray] = None) -> complex:
        x2 = x if x2 is None else x2
        return complex(np.trace(x @ self.y @ x2.conj().T @ self.z))

    def ambient_form(self) -> np.ndarray:
        """Omega with <X, X'>_phi = vec(X')^dagger Omega vec(X) on all matrices of this shape"""
        return np.kron(self.z, self.y.T)

    def to_dict(self) -> dict:
        return {'kind': 'phi', 'y': encode_complex(self.y), 'z': encode_complex(self.z)}


@dataclass(frozen=True, eq=False)
class DensityAtom:
    """Positive functional on OH_n (x) conj(OH_n): c -> c^dagger rho c with tr(rho) <= 1"""
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'rho', _check_psd_unit(self.rho, 'rho', trace_ball=True))

    def gram(self, space: OperatorSpacePresentation) -> np.ndarray:
        if not space.is_abstract:
            raise UnsupportedOperation("Density atoms live on the OH_n coefficient model")
        if self.rho.shape != (space.dim, space.dim):
            raise PresentationError(f"rho must be {space.dim}x{space.dim}, got {self.rho.shape}")
        return np.array(self.rho)

    def ambient_form(self) -> np.ndarray:
        raise UnsupportedOperation("OH_n has no ambient matrix algebra")

    def to_dict(self) -> dict:
        return {'kind': 'density', 'rho': encode_complex(self.rho)}


Atom = Union[PhiFunctional, DensityAtom]


def atom_from_dict(data: dict) -> Atom:
    if data.get('kind') == 'density':
        return DensityAtom(decode_complex(data['rho'], where='rho'))
    return PhiFunctional(decode_complex(data['y'], where='y'), decode_complex(data['z'], where='z'))


def tracial_atom(space: OperatorSpacePresentation) -> Atom:
    if space.is_abstract:
        return DensityAtom(np.eye(space.dim) / space.dim)
    d1, d2 = space.shape
    return PhiFunctional(np.eye(d2) / np.sqrt(d2), np.eye(d1) / np.sqrt(d1))


@dataclass(frozen=True, eq=False)
class KMixture:
    """Convex combination of atoms (an element of K(E))"""
    weights: np.ndarray
    atoms: Tuple[Atom, ...]

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if len(w) != len(self.atoms) or len(w) == 0:
            raise PresentationError("Mixture needs one positive weight per atom")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise PresentationError(f"Mixture weights must be positive and sum to 1 (sum {w.sum():.12g})")
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, 'weights', w)
        object.__setattr__(self, 'atoms', tuple(self.atoms))

    @classmethod
    def single(cls, atom: Atom) -> 'KMixture':
        return cls(np.ones(1), (atom,))

    @classmethod
    def from_weights(cls, weights: np.ndarray, atoms: Sequence[Atom]) -> 'KMixture':
        """Drop weights below ATOM_PRUNE and renormalize"""
        weights = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        keep = [i for i, w in enumerate(weights) if w > ATOM_PRUNE]
        if not keep:
            raise CertificateSearchError("Master problem returned no positive weight")
        w = weights[keep]
        return cls(w / w.sum(), tuple(atoms[i] for i in keep))

    def gram(self, space: OperatorSpacePresentation) -> np.ndarray:
        return sum(w * a.gram(space) for w, a in zip(self.weights, self.atoms))

    def ambient_form(self) -> np.ndarray:
        return sum(w * a.ambient_form() for w, a in zip(self.weights, self.atoms))

    def to_dict(self) -> dict:
        return {'weights': self.weights.tolist(), 'atoms': [a.to_dict() for a in self.atoms]}

    @classmethod
    def from_dict(cls, data: dict) -> 'KMixture':
        return cls(np.array(data['weights'], dtype=float), tuple(atom_from_dict(a) for a in data['atoms']))


# ---------------------------------------------------------------------------
# Target norms
# ---------------------------------------------------------------------------

def _check_target(space: OperatorSpacePresentation, target_map) -> Optional[np.ndarray]:
    if target_map is None:
        return None
    T = np.array(target_map, dtype=np.complex128)
    if T.ndim != 2 or T.shape[1] != space.dim:
        raise PresentationError(f"target_map must have {space.dim} columns, got shape {T.shape}")
    return T


def norm_majorant(space: OperatorSpacePresentation) -> np.ndarray:
    """
    PSD Q with ||realize(c)||^2 <= c^dagger Q c

    Exact for row, column and oh spaces; 2*I on Clifford spans; the HS Gram
    (Frobenius dominates operator norm) for everything else.
    """
    n = space.dim
    if space.is_abstract:
        return np.eye(n, dtype=np.complex128)
    if space.label == 'clifford':
        return 2 * np.eye(n, dtype=np.complex128)
    return space.hs_gram()


def target_majorant(space: OperatorSpacePresentation, target_map=None) -> np.ndarray:
    T = _check_target(space, target_map)
    if T is None:
        return norm_majorant(space)
    return T.conj().T @ T


def _numerator(space: OperatorSpacePresentation, T: Optional[np.ndarray], A: np.ndarray,
               with_grad: bool) -> Tuple[float, Optional[np.ndarray]]:
    """sum ||u(x_m)||^2 and its gradient in A"""
    if T is not None:
        img = A @ T.T
        value = float(np.sum(np.abs(img) ** 2))
        return value, (2 * img @ T.conj() if with_grad else None)
    if space.is_abstract:
        return float(np.sum(np.abs(A) ** 2)), (2 * A if with_grad else None)

    X = np.tensordot(A, space.basis, axes=1)
    if not with_grad:
        s = np.linalg.svd(X, compute_uv=False)
        return float(np.sum(s[:, 0] ** 2)), None
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    grads = np.zeros_like(X)
    for m in range(X.shape[0]):
        top = s[m, 0]
        if top == 0.0:
            continue
        c = int(np.sum(s[m] >= top * (1 - TIE_RTOL)))
        grads[m] = 2 * top * (U[m, :, :c] @ Vh[m, :c, :]) / c
    grad = np.einsum('iab,mab->mi', space.basis.conj(), grads)
    return float(np.sum(s[:, 0] ** 2)), grad


def _objective(space: OperatorSpacePresentation, T: Optional[np.ndarray], A: np.ndarray,
               with_grad: bool = True) -> Tuple[float, Optional[np.ndarray]]:
    t = TupleOfElements(space, A)
    if with_grad:
        D, gD = min_norm_and_gradient(t)
    else:
        D, gD = min_norm(t), None
    if D <= 0.0:
        return 0.0, (np.zeros_like(A) if with_grad else None)
    N, gN = _numerator(space, T, A, with_grad)
    f = N / D
    return f, ((gN * D - N * gD) / D ** 2 if with_grad else None)


# ---------------------------------------------------------------------------
# Lower bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LowerWitness:
    """Tuple normalized to min_norm = 1 with value^2 = sum ||u(x_i)||^2"""
    space: OperatorSpacePresentation
    target_map: Optional[np.ndarray]
    tuple: TupleOfElements
    value: float
    restart: int = -1

    def recompute(self) -> float:
        D = min_norm(self.tuple)
        if D <= 0.0:
            return 0.0
        N, _ = _numerator(self.space, self.target_map, self.tuple.A, with_grad=False)
        return float(np.sqrt(N / D))

    def to_dict(self) -> dict:
        out = {'value': self.value, 'k': self.tuple.k, 'restart': self.restart, 'tuple': self.tuple.to_dict()}
        if self.target_map is not None:
            out['target_map'] = encode_complex(self.target_map)
        return out


def _ascend(space: OperatorSpacePresentation, T: Optional[np.ndarray], A: np.ndarray,
            search: SearchParams) -> Tuple[np.ndarray, float]:
    """Normalized gradient ascent with backtracking; never returns below the seed value"""
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return A, 0.0
    A = A / scale
    f, g = _objective(space, T, A)
    stall = 0
    for _ in range(search.iterations):
        gnorm = np.linalg.norm(g)
        if gnorm <= 1e-15 * max(1.0, f):
            break
        direction = g / gnorm
        step = search.step
        accepted = None
        for _ in range(ASCENT_BACKTRACK):
            trial = A + step * direction
            trial = trial / np.linalg.norm(trial)
            f_trial, _ = _objective(space, T, trial, with_grad=False)
            if f_trial > f:
                accepted = trial
                break
            step *= 0.5
        if accepted is None:
            break
        gain = f_trial - f
        A = accepted
        f, g = _objective(space, T, A)
        stall = stall + 1 if gain <= ASCENT_STALL_RTOL * f else 0
        if stall >= ASCENT_STALL_STEPS:
            break
    return A, f


def _seed_tuples(n: int, k: int, search: SearchParams, warm_starts: Sequence[np.ndarray]) -> List[np.ndarray]:
    seeds = [np.eye(k, n, dtype=np.complex128)]
    single = np.zeros((k, n), dtype=np.complex128)
    single[0, 0] = 1.0
    seeds.append(single)
    for W in warm_starts:
        W = np.asarray(W, dtype=np.complex128)[:k]
        padded = np.zeros((k, n), dtype=np.complex128)
        padded[:W.shape[0]] = W
        seeds.append(padded)
    rng = np.random.default_rng(search.seed)
    for _ in range(search.restarts):
        seeds.append(rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n)))
    return seeds


def _make_witness(space, T, A: np.ndarray, restart: int) -> LowerWitness:
    t = TupleOfElements(space, A)
    D = min_norm(t)
    if D <= 0.0:
        return LowerWitness(space, T, t, 0.0, restart)
    t = TupleOfElements(space, A / np.sqrt(D))
    N, _ = _numerator(space, T, t.A, with_grad=False)
    return LowerWitness(space, T, t, float(np.sqrt(N)), restart)


def pi2oh_lower(space: OperatorSpacePresentation, target_map=None, k: Optional[int] = None,
                search: Optional[SearchParams] = None,
                warm_starts: Sequence[np.ndarray] = ()) -> LowerWitness:
    """
    Lower bound on pi^k_{2,oh}(u) from a feasible k-tuple

    Args:
        space: source presentation
        target_map: None for the identity (target norm = operator norm of the
            space), or a coefficient matrix T into a Hilbertian target
        k: tuple length (defaults to dim)
        search: restart and iteration budget
        warm_starts: extra seed tuples (padded or truncated to k rows)

    Returns:
        LowerWitness whose tuple is rescaled to min_norm 1
    """
    search = search or SearchParams.from_config()
    T = _check_target(space, target_map)
    n = space.dim
    k = n if k is None else int(k)
    if k < 0:
        raise PresentationError(f"k must be nonnegative, got {k}")
    if k == 0:
        return LowerWitness(space, T, TupleOfElements(space, np.zeros((0, n))), 0.0)

    seeds = _seed_tuples(n, k, search, warm_starts)
    results = run_restarts(lambda A0: _ascend(space, T, A0, search), seeds, search.workers)
    best = max(range(len(results)), key=lambda i: (results[i][1], -i))
    witness = _make_witness(space, T, results[best][0], best)
    logger.debug(f"🔍 pi2oh lower (k={k}): {witness.value:.10g} from restart {best}")
    return witness


def pi2oh_lower_profile(space: OperatorSpacePresentation, ks: Sequence[int], target_map=None,
                        search: Optional[SearchParams] = None) -> List[LowerWitness]:
    """Lower bounds for increasing k, each warm-started from the previous best tuple"""
    T = _check_target(space, target_map)
    profile: List[LowerWitness] = []
    warm: List[np.ndarray] = []
    for k in sorted(ks):
        witness = pi2oh_lower(space, T, k, search, warm_starts=warm)
        if profile and witness.value < profile[-1].value:
            padded = np.zeros((k, space.dim), dtype=np.complex128)
            padded[:profile[-1].tuple.k] = profile[-1].tuple.A
            witness = _make_witness(space, T, padded, profile[-1].restart)
        profile.append(witness)
        warm = [witness.tuple.A]
    return profile


def pi2_lower_model(kind: str, n: int, k: Optional[int] = None,
                    search: Optional[SearchParams] = None) -> float:
    """
    Lower bound on pi^k_2 of the identity of a Euclidean model space

    Row, column and OH spaces are all l_2^n as Banach spaces, so the weak
    l_2 norm of a tuple is sigma_max(A); the exact value is sqrt(min(k, n)).
    """
    if kind not in ('row', 'column', 'oh'):
        raise UnsupportedOperation(f"pi_2 is only available on row, column and oh models, not '{kind}'")
    return pi2oh_lower(OperatorSpacePresentation.oh_model(n), k=k, search=search).value


# ---------------------------------------------------------------------------
# Upper certificates
# ---------------------------------------------------------------------------

def certified_constant(G: np.ndarray, Q: np.ndarray) -> float:
    """
    Smallest C with Q <= C^2 G, or inf when Q has mass on the kernel of G
    """
    w, V = eigh(hermitian_part(G))
    top = max(float(w[-1]), 0.0)
    if top == 0.0:
        return 0.0 if np.allclose(Q, 0) else np.inf
    keep = w > PINV_CUTOFF * top
    Qh = hermitian_part(Q)
    if not np.all(keep):
        Vn = V[:, ~keep]
        if np.linalg.norm(Vn.conj().T @ Qh @ Vn, 2) > CERT_EIG_TOL * (1 + np.linalg.norm(Qh, 2)):
            return np.inf
    Gih = V[:, keep] / np.sqrt(w[keep])
    C2 = float(np.linalg.eigvalsh(hermitian_part(Gih.conj().T @ Qh @ Gih))[-1])
    return float(np.sqrt(max(C2, 0.0)))


@dataclass(frozen=True, eq=False)
class UpperCertificate:
    """
    Mixture phi with Q <= C^2 G_phi, i.e. ||u(x)||^2 <= C^2 phi(x (x) conj(x))

    The eigenvalue check uses the absolute tolerance CERT_EIG_TOL.
    solver_status is the worst status the master problem returned.
    """
    space: OperatorSpacePresentation
    target_map: Optional[np.ndarray]
    mixture: KMixture
    C: float
    gram_phi: np.ndarray
    majorant: np.ndarray
    min_eig: float
    rounds: int = 0
    solver_status: str = cp.OPTIMAL

    def verify(self) -> float:
        """Recompute the domination margin from the stored mixture alone"""
        G = self.mixture.gram(self.space)
        Q = target_majorant(self.space, self.target_map)
        return float(np.linalg.eigvalsh(hermitian_part(self.C ** 2 * G - Q))[0])

    @property
    def tolerance(self) -> float:
        return CERT_EIG_TOL

    def to_dict(self) -> dict:
        out = {
            'C': self.C, 'min_eig': self.min_eig, 'rounds': self.rounds, 'solver_status': self.solver_status,
            'mixture': self.mixture.to_dict(),
        }
        if self.target_map is not None:
            out['target_map'] = encode_complex(self.target_map)
        return out


def verify_certificate(cert: UpperCertificate) -> bool:
    return cert.verify() >= -cert.tolerance


def _embed_real(H: np.ndarray) -> np.ndarray:
    H = hermitian_part(H)
    R, I = H.real, H.imag
    return np.block([[R, -I], [I, R]])


def _solve_master(grams: List[np.ndarray], Q: np.ndarray) -> Tuple[np.ndarray, np.ndarray, str]:
    """
    max s  s.t.  sum lam_a G_a >= s Q,  lam in the simplex

    Returns the weights, the complex dual matrix W (tr(W G_a) prices atoms)
    and the solver status.
    """
    n = Q.shape[0]
    lam = cp.Variable(len(grams), nonneg=True)
    s = cp.Variable()
    lmi_expr = sum(lam[i] * _embed_real(G) for i, G in enumerate(grams)) - s * _embed_real(Q)
    lmi = lmi_expr >> 0
    problem = cp.Problem(cp.Maximize(s), [lmi, cp.sum(lam) == 1])
    try:
        with warnings.catch_warnings():
            # inaccurate solves are reported through the status below
            warnings.simplefilter('ignore', UserWarning)
            problem.solve()
    except cp.error.SolverError as e:
        raise CertificateSearchError(f"Master problem solver failed: {e}")
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or lam.value is None:
        raise CertificateSearchError(f"Master problem ended with status '{problem.status}'")
    if problem.status == cp.OPTIMAL_INACCURATE:
        logger.warning(f"⚠️ Master problem solved inaccurately ({len(grams)} atoms)")
    Z = np.asarray(lmi.dual_value, dtype=float)
    Z11, Z12, Z21, Z22 = Z[:n, :n], Z[:n, n:], Z[n:, :n], Z[n:, n:]
    W = (Z11 + Z22) / 2 + 1j * (Z21 - Z12) / 2
    return np.asarray(lam.value, dtype=float), hermitian_part(W), problem.status


def _tuple_from_form(space: OperatorSpacePresentation, W: np.ndarray) -> TupleOfElements:
    """Rows sqrt(w_r) v_r^T so that sum_r x_r (x) conj(x_r) has Gram W"""
    w, V = np.linalg.eigh(hermitian_part(W))
    keep = w > PINV_CUTOFF * max(float(w[-1]), 1e-300)
    rows = (V[:, keep] * np.sqrt(w[keep])).T
    return TupleOfElements(space, rows)


def price_atoms(space: OperatorSpacePresentation, W: np.ndarray, search: SearchParams) -> List[Atom]:
    """Atoms maximizing (approximately) tr(W G_atom)"""
    if space.is_abstract:
        v = top_eigvec(W)
        return [DensityAtom(np.outer(v, v.conj()))]
    t = _tuple_from_form(space, W)
    if t.k == 0:
        return []
    result = psd_ascent(t, restarts=search.psd_restarts, seed=search.seed)
    if result.value <= 0.0:
        return []
    return [PhiFunctional(result.y, result.z)]


def _violation_atoms(space: OperatorSpacePresentation, E: np.ndarray, search: SearchParams) -> List[Atom]:
    """Atoms built on the most violated directions of C^2 G - Q"""
    vecs = bottom_eigvecs(E, count=3)
    if space.is_abstract:
        return [DensityAtom(np.outer(v, v.conj())) for v in vecs[:1]]
    t = TupleOfElements(space, np.vstack([v[None, :] for v in vecs]))
    result = psd_ascent(t, restarts=search.psd_restarts, seed=search.seed + 1)
    return [PhiFunctional(result.y, result.z)] if result.value > 0 else []


def _is_duplicate(G: np.ndarray, grams: List[np.ndarray]) -> bool:
    return any(np.linalg.norm(G - H) <= 1e-9 * (1 + np.linalg.norm(H)) for H in grams)


def pi2oh_upper_certificate(space: OperatorSpacePresentation, target_map=None,
                            initial_atoms: Sequence[Atom] = (), include_tracial: bool = True,
                            search: Optional[SearchParams] = None,
                            rounds: Optional[int] = None) -> UpperCertificate:
    """
    Certified upper bound on pi_{2,oh}(u) by column generation over atoms

    Args:
        space: source presentation
        target_map: None (identity) or coefficient matrix into a Hilbertian target
        initial_atoms: atoms to start the dictionary with
        include_tracial: add y = I/sqrt(d2), z = I/sqrt(d1) (or I/n on OH_n)
        search: budgets for the pricing ascents
        rounds: column generation rounds (defaults to search.cert_rounds)

    Returns:
        UpperCertificate whose constant passed the post-hoc eigenvalue check

    Raises:
        InfeasibleDictionaryError: no mixture of the atoms dominates the map
        CertificateSearchError: the master problem failed before any usable iterate
    """
    search = search or SearchParams.from_config()
    rounds = search.cert_rounds if rounds is None else rounds
    T = _check_target(space, target_map)
    Q = target_majorant(space, T)
    scale = float(np.real(np.trace(Q)))

    atoms: List[Atom] = list(initial_atoms)
    if include_tracial or not atoms:
        atoms.append(tracial_atom(space))

    if scale <= 0.0:
        mixture = KMixture.single(atoms[-1])
        G = mixture.gram(space)
        return UpperCertificate(space, T, mixture, 0.0, G, Q, 0.0)

    Qs = Q / scale
    grams: List[np.ndarray] = []
    kept: List[Atom] = []
    for a in atoms + price_atoms(space, Qs, search):
        G = a.gram(space)
        if not _is_duplicate(G, grams):
            grams.append(G)
            kept.append(a)
    atoms = kept

    best_C, best_mix = np.inf, None
    for i, G in enumerate(grams):
        C = certified_constant(G, Q)
        if C < best_C:
            best_C, best_mix = C, KMixture.single(atoms[i])

    used_rounds = 0
    stall = 0
    status = cp.OPTIMAL
    for r in range(rounds + 1):
        try:
            lam, W, round_status = _solve_master(grams, Qs)
            mixture = KMixture.from_weights(lam, atoms)
        except CertificateSearchError as e:
            if best_mix is None or not np.isfinite(best_C):
                raise
            logger.warning(f"⚠️ Certificate search stopped early: {e}")
            break
        used_rounds = r
        if round_status != cp.OPTIMAL:
            status = round_status
        G_mix = mixture.gram(space)
        C = certified_constant(G_mix, Q)
        previous = best_C
        if C < best_C:
            best_C, best_mix = C, mixture
        logger.debug(f"🔍 Certificate round {r}: {len(atoms)} atoms, C = {C:.10g}")
        if r == rounds:
            break
        stall = stall + 1 if np.isfinite(previous) and previous - best_C <= CERT_STALL_RTOL * best_C else 0
        if stall >= 2:
            break

        mu = max(float(np.real(np.trace(W @ G))) for G in grams)
        candidates = price_atoms(space, W, search)
        if np.isfinite(C):
            candidates += _violation_atoms(space, C ** 2 * G_mix - Q, search)
        added = 0
        for a in candidates:
            G = a.gram(space)
            if _is_duplicate(G, grams):
                continue
            single = certified_constant(G, Q)
            if single < best_C:
                best_C, best_mix = single, KMixture.single(a)
            gain = float(np.real(np.trace(W @ G)))
            if gain > mu * (1 + CERT_STALL_RTOL) or added == 0:
                grams.append(G)
                atoms.append(a)
                added += 1
        if added == 0:
            break
        if len(atoms) > MAX_ATOMS:
            order = np.argsort(-np.concatenate([lam, np.zeros(len(atoms) - len(lam))]), kind='stable')
            keep = sorted(order[:MAX_ATOMS])
            atoms = [atoms[i] for i in keep]
            grams = [grams[i] for i in keep]

    if best_mix is None or not np.isfinite(best_C):
        raise InfeasibleDictionaryError(
            "No mixture of the available atoms dominates the map",
            diagnostics={'atoms': len(atoms), 'rank': [int(np.linalg.matrix_rank(G)) for G in grams]},
        )
    return _finalize(space, T, best_mix, best_C, Q, used_rounds, status)


def _finalize(space, T, mixture: KMixture, C: float, Q: np.ndarray, rounds: int,
              status: str = cp.OPTIMAL) -> UpperCertificate:
    G = mixture.gram(space)
    for i in range(40):
        margin = float(np.linalg.eigvalsh(hermitian_part(C ** 2 * G - Q))[0])
        if margin >= -CERT_EIG_TOL:
            break
        C *= 1 + 1e-9 * 2 ** i
    else:
        raise NumericalAssertionError(f"Certificate failed its eigenvalue check (margin {margin:.3e})")
    logger.info(f"✅ Certificate verified: C = {C:.10g} with {len(mixture.atoms)} atoms")
    return UpperCertificate(space, T, mixture, float(C), G, Q, margin, rounds, status)


def certificate_from_mixture(space: OperatorSpacePresentation, mixture: KMixture,
                             target_map=None) -> UpperCertificate:
    """Evaluate a fixed mixture as a certificate (no search)"""
    T = _check_target(space, target_map)
    Q = target_majorant(space, T)
    C = certified_constant(mixture.gram(space), Q)
    if not np.isfinite(C):
        raise InfeasibleDictionaryError("Mixture is degenerate on the range of the map")
    return _finalize(space, T, mixture, C, Q, 0)


# ---------------------------------------------------------------------------
# Comparison checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    regime: str = 'exact'

    def to_dict(self) -> dict:
        return {'name': self.name, 'value': self.value, 'bound': self.bound,
                'passed': self.passed, 'regime': self.regime}


def check_at_most(name: str, value: float, bound: float, regime: str = 'exact',
                  slack: Optional[float] = None) -> Check:
    slack = EXACT_SLACK if slack is None else slack
    return Check(name, float(value), float(bound), bool(value <= bound + slack), regime)


@dataclass
class HalfSquareReport:
    tuple: TupleOfElements
    sum_sq: float
    pi_hat: float
    check: Check

    def to_dict(self) -> dict:
        return {'sum_sq': self.sum_sq, 'pi_hat': self.pi_hat, 'check': self.check.to_dict(),
                'tuple': self.tuple.to_dict()}


def half_square_witness(space: OperatorSpacePresentation, search: Optional[SearchParams] = None,
                        witness: Optional[LowerWitness] = None) -> HalfSquareReport:
    """The best n-tuple at min_norm 1 with sum ||x_i||^2 >= pi_hat^2 / 2"""
    witness = witness or pi2oh_lower(space, search=search)
    sum_sq = _numerator(space, None, witness.tuple.A, with_grad=False)[0]
    bound = witness.value ** 2 / 2
    check = Check('sum of squared norms >= pi_hat^2/2', sum_sq, bound, bool(sum_sq >= bound - EXACT_SLACK))
    return HalfSquareReport(witness.tuple, float(sum_sq), witness.value, check)


@dataclass
class InequalityReport:
    space_label: str
    n: int
    lower: float
    upper: float
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {'space': self.space_label, 'n': self.n, 'lower': self.lower, 'upper': self.upper,
                'passed': self.passed, 'checks': [c.to_dict() for c in self.checks]}


def check_inequalities(space: OperatorSpacePresentation, search: Optional[SearchParams] = None,
                       witness: Optional[LowerWitness] = None,
                       certificate: Optional[UpperCertificate] = None) -> InequalityReport:
    """
    Run the comparison inequalities for the identity of a space

    Checks the lower/upper sandwich, the sqrt(n) ceiling, cb <= pi_{2,oh} for
    the identity, the consistency form of the sqrt(2) comparison between
    2n-tuples and n-tuples, and the half-square sum bound.
    """
    search = search or SearchParams.from_config()
    n = space.dim
    profile = pi2oh_lower_profile(space, [n, 2 * n], search=search)
    witness = witness or profile[0]
    certificate = certificate or pi2oh_upper_certificate(space, search=search)
    lower, upper = witness.value, certificate.C
    ceiling = float(np.sqrt(n))
    checks = [
        check_at_most('lower <= certified upper', lower, upper),
        check_at_most('lower <= sqrt(n)', lower, ceiling * (1 + 1e-6), slack=0.0),
        check_at_most('cb norm of identity <= certified upper', 1.0, upper),
        check_at_most('2n-tuple lower <= sqrt(2) * n-tuple lower', profile[1].value,
                      np.sqrt(2) * profile[0].value * 1.02, regime='heuristic', slack=0.0),
        check_at_most('certificate margin', -certificate.verify(), certificate.tolerance, slack=0.0),
    ]
    if space.label in MODEL_KINDS and space.label != 'clifford':
        checks.append(check_at_most('pi_{2,oh} lower <= pi_2', lower, pi2_lower_model(space.label, n, search=search)))
    half_square = half_square_witness(space, witness=witness)
    checks.append(half_square.check)
    return InequalityReport(space.label, n, lower, upper, checks)
