"""
Factorize Module - cb-distances to OH_n, Lewis positions, projections and amplification bounds

Maps are coefficient matrices: U has shape (target.dim, source.dim) and sends
the coefficients c of x to U c.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm, qr
from scipy.optimize import minimize, minimize_scalar

from config import (
    DISTANCE_RESTARTS, LEWIS_MAX_ROUNDS, LEWIS_STALL_ROUNDS, LEWIS_RTOL, PINV_CUTOFF, MAX_ATOMS,
    AMPLIFICATION_MAX_LEVEL, AMPLIFICATION_RESTARTS, AMPLIFICATION_ITERATIONS,
    EXACT_SLACK, HEURISTIC_BAND,
)
from core import (
    OperatorSpacePresentation, TupleOfElements, PresentationError, UnsupportedOperation,
    DegenerateFormError, NumericalAssertionError,
    matrix_space, is_full_matrix_space, hermitian_part, psd_sqrt, op_norm, encode_complex,
)
from minnorm import cb_norm_from_oh, min_norm
from summing import (
    SearchParams, KMixture, UpperCertificate, Atom, tracial_atom, price_atoms,
    pi2oh_upper_certificate, run_restarts,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinearMapCoeff:
    source: OperatorSpacePresentation
    target: OperatorSpacePresentation
    U: np.ndarray

    def __post_init__(self):
        U = np.array(self.U, dtype=np.complex128)
        if U.shape != (self.target.dim, self.source.dim):
            raise PresentationError(
                f"Map matrix must be {self.target.dim}x{self.source.dim}, got {U.shape}"
            )
        U.setflags(write=False)
        object.__setattr__(self, 'U', U)

    @property
    def smallest_singular_value(self) -> float:
        return float(np.linalg.svd(self.U, compute_uv=False)[-1])

    def is_invertible(self) -> bool:
        if self.U.shape[0] != self.U.shape[1]:
            return False
        s = np.linalg.svd(self.U, compute_uv=False)
        return bool(s[-1] > PINV_CUTOFF * s[0])

    def inverse(self) -> 'LinearMapCoeff':
        if not self.is_invertible():
            raise PresentationError("Map is not invertible")
        return LinearMapCoeff(self.target, self.source, np.linalg.inv(self.U))

    def then(self, other: 'LinearMapCoeff') -> 'LinearMapCoeff':
        """other o self"""
        return LinearMapCoeff(self.source, other.target, other.U @ self.U)

    def to_dict(self) -> dict:
        return {'U': encode_complex(self.U), 'source_dim': self.source.dim, 'target_dim': self.target.dim}


def identity_map(space: OperatorSpacePresentation) -> LinearMapCoeff:
    return LinearMapCoeff(space, space, np.eye(space.dim))


def transpose_map(d: int) -> LinearMapCoeff:
    """X -> X^T on M_d (matrix-unit coefficients)"""
    perm = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            perm[j * d + i, i * d + j] = 1.0
    space = matrix_space(d)
    return LinearMapCoeff(space, space, perm)


def _require_oh(space: OperatorSpacePresentation, role: str) -> None:
    if not (space.is_abstract and space.label == 'oh'):
        raise UnsupportedOperation(f"The {role} of this map must be the OH_n coefficient model")


# ---------------------------------------------------------------------------
# cb norms through OH_n
# ---------------------------------------------------------------------------

def cb_from_oh_exact(m: LinearMapCoeff) -> float:
    """Exact cb norm of a map out of OH_n: images u(T_i) are the columns of U"""
    _require_oh(m.source, 'source')
    return cb_norm_from_oh(TupleOfElements(m.target, m.U.T))


@dataclass(frozen=True, eq=False)
class ForwardBound:
    value: float
    certificate: Optional[UpperCertificate]
    exact: bool


def forward_bound(m: LinearMapCoeff, search: Optional[SearchParams] = None,
                  initial_atoms: Sequence[Atom] = (), rounds: Optional[int] = None) -> ForwardBound:
    """
    Upper bound on ||m||_cb for a map into OH_n, with its certificate

    Out of OH_n the operator norm is the cb norm, so sigma_max(U) is exact there.
    """
    _require_oh(m.target, 'target')
    if not np.any(m.U):
        return ForwardBound(0.0, None, True)
    if m.source.is_abstract:
        exact = float(np.linalg.norm(m.U, 2))
        return ForwardBound(exact, None, True)
    cert = pi2oh_upper_certificate(m.source, target_map=m.U, initial_atoms=initial_atoms,
                                   search=search, rounds=rounds)
    return ForwardBound(cert.C, cert, False)


def cb_upper_into_oh(m: LinearMapCoeff, search: Optional[SearchParams] = None,
                     initial_atoms: Sequence[Atom] = ()) -> float:
    """||m||_cb <= pi_{2,oh}(m) <= certified C"""
    return forward_bound(m, search, initial_atoms).value


# ---------------------------------------------------------------------------
# Lewis position
# ---------------------------------------------------------------------------

@dataclass
class LewisResult:
    """
    D-optimal mixture phi with U = G_phi^(1/2) normalized to |det U| = 1

    kappa = max over atoms of tr(G_a G_phi^-1); at the optimum kappa = n,
    which makes ||U||_cb <= 1 relative to phi and ||U^-1||_cb = sqrt(n).
    """
    map: LinearMapCoeff
    mixture: KMixture
    kappa: float
    product: float
    rounds: int
    converged: bool
    history: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {'U': encode_complex(self.map.U), 'kappa': self.kappa, 'product': self.product,
                'rounds': self.rounds, 'converged': self.converged, 'mixture': self.mixture.to_dict()}


def _logdet(G: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(hermitian_part(G))
    return float(value) if abs(sign) > 0 else -np.inf


def _whitening_map(space: OperatorSpacePresentation, G: np.ndarray) -> np.ndarray:
    U = psd_sqrt(G)
    _, logabs = np.linalg.slogdet(U)
    return U / np.exp(logabs / space.dim)


def _lewis_product(space: OperatorSpacePresentation, G: np.ndarray) -> Tuple[float, float]:
    """(kappa, product) for U = G^(1/2); forward is 1 against the mixture itself"""
    U = psd_sqrt(G)
    Uinv = np.linalg.inv(U)
    kappa = min_norm(TupleOfElements(space, Uinv.T))
    return kappa, float(np.sqrt(kappa))


def lewis_search(space: OperatorSpacePresentation, search: Optional[SearchParams] = None,
                 max_rounds: int = LEWIS_MAX_ROUNDS) -> LewisResult:
    """
    Frank-Wolfe on log det G_phi over mixtures of atoms

    Each round whitens against the current form (W = G^-1), prices the worst
    atom and moves toward it with an exact line search. Stops when the
    priced kappa reaches n, or the product stalls for LEWIS_STALL_ROUNDS.
    """
    search = search or SearchParams.from_config()
    n = space.dim
    atoms: List[Atom] = [tracial_atom(space)]
    weights = np.ones(1)
    grams = [atoms[0].gram(space)]
    G = grams[0]
    history: List[float] = []
    converged = False
    kappa_est = np.inf

    for r in range(max_rounds):
        _, product = _lewis_product(space, G)
        history.append(product)
        Ginv = np.linalg.inv(G)
        candidates = price_atoms(space, hermitian_part(Ginv), search)
        if not candidates:
            converged = True
            break
        atom = candidates[0]
        Ga = atom.gram(space)
        kappa_est = float(np.real(np.trace(Ga @ Ginv)))
        logger.debug(f"🔍 Lewis round {r}: kappa {kappa_est:.10g}, product {product:.10g}")
        if kappa_est <= n * (1 + LEWIS_RTOL):
            converged = True
            break
        line = minimize_scalar(lambda g: -_logdet((1 - g) * G + g * Ga), bounds=(0.0, 1.0),
                               method='bounded', options={'xatol': 1e-10})
        gamma = float(line.x)
        if gamma <= 1e-12:
            converged = True
            break
        weights = np.append((1 - gamma) * weights, gamma)
        atoms.append(atom)
        grams.append(Ga)
        if len(atoms) > MAX_ATOMS:
            keep = np.sort(np.argsort(-weights, kind='stable')[:MAX_ATOMS])
            weights = weights[keep] / weights[keep].sum()
            atoms = [atoms[i] for i in keep]
            grams = [grams[i] for i in keep]
        G = hermitian_part(sum(w * H for w, H in zip(weights, grams)))
        if len(history) > LEWIS_STALL_ROUNDS:
            old = history[-1 - LEWIS_STALL_ROUNDS]
            if abs(old - product) <= LEWIS_RTOL * product:
                converged = True
                break
    else:
        r = max_rounds

    kappa, product = _lewis_product(space, G)
    history.append(product)
    mixture = KMixture.from_weights(weights, atoms)
    U = _whitening_map(space, mixture.gram(space))
    target = OperatorSpacePresentation.oh_model(n)
    result = LewisResult(LinearMapCoeff(space, target, U), mixture, kappa, product, r, converged, history)
    if converged:
        logger.info(f"✅ Lewis position: product {product:.8g} (sqrt(n) = {np.sqrt(n):.8g}) after {r} rounds")
    else:
        logger.warning(f"⚠️ Lewis search did not converge in {max_rounds} rounds, best product {product:.8g}")
    return result


# ---------------------------------------------------------------------------
# Distance to OH_n
# ---------------------------------------------------------------------------

@dataclass
class DistanceReport:
    u: LinearMapCoeff
    forward_upper: float
    backward_exact: float
    product: float
    guarantee: float
    regime: str
    candidate: str
    seed: int
    certificate: Optional[UpperCertificate] = None

    @property
    def within_band(self) -> bool:
        if self.regime == 'exact':
            return self.product <= self.guarantee + EXACT_SLACK
        return self.product <= self.guarantee * (1 + HEURISTIC_BAND)

    def recompute_backward(self) -> float:
        return cb_from_oh_exact(self.u.inverse())

    def to_dict(self) -> dict:
        out = {
            'U': encode_complex(self.u.U), 'forward_upper': self.forward_upper,
            'backward_exact': self.backward_exact, 'product': self.product,
            'guarantee': self.guarantee, 'regime': self.regime, 'candidate': self.candidate,
            'seed': self.seed, 'within_band': self.within_band,
        }
        if self.certificate is not None:
            out['certificate'] = self.certificate.to_dict()
        return out


def _random_invertible(rng: np.random.Generator, n: int) -> np.ndarray:
    Q, _ = qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    W, _ = qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    s = np.exp(rng.uniform(-1.0, 1.0, n))
    return Q @ np.diag(s) @ W


def distance_to_oh(space: OperatorSpacePresentation, search: Optional[SearchParams] = None,
                   lewis: Optional[LewisResult] = None, use_lewis: bool = True,
                   candidates: int = DISTANCE_RESTARTS) -> DistanceReport:
    """
    Best found u: E -> OH_n with ||u||_cb ||u^-1||_cb minimal

    Candidates: identity coefficients, the Lewis map, and seeded random
    Q diag(s) W. Backward norms are exact; forward norms are certified.
    """
    search = search or SearchParams.from_config()
    n = space.dim
    oh = OperatorSpacePresentation.oh_model(n)
    pool: List[Tuple[str, np.ndarray]] = [('identity', np.eye(n, dtype=np.complex128))]
    atoms: Sequence[Atom] = ()
    if use_lewis and not space.is_abstract:
        lewis = lewis or lewis_search(space, search)
        pool.append(('lewis', lewis.map.U))
        atoms = lewis.mixture.atoms
    rng = np.random.default_rng(search.seed)
    pool += [(f'random-{i}', _random_invertible(rng, n)) for i in range(candidates)]

    def evaluate(item):
        label, U = item
        u = LinearMapCoeff(space, oh, U)
        if not u.is_invertible():
            logger.debug(f"Skipping singular candidate {label}")
            return None
        # Lewis atoms seed every candidate dictionary
        fwd = forward_bound(u, search, initial_atoms=atoms)
        bwd = cb_from_oh_exact(u.inverse())
        return label, u, fwd, bwd

    results = [res for res in run_restarts(evaluate, pool, search.workers) if res is not None]
    if not results:
        raise NumericalAssertionError("Every distance candidate was singular")
    best = min(range(len(results)), key=lambda i: (results[i][2].value * results[i][3], i))
    label, u, fwd, bwd = results[best]
    product = fwd.value * bwd
    if product < 1 - 1e-9:
        raise NumericalAssertionError(f"Distance product {product:.12g} is below 1")
    exact = label == 'identity' and space.label in ('row', 'column', 'oh')
    report = DistanceReport(u, fwd.value, bwd, product, float(np.sqrt(n)),
                            'exact' if exact else 'heuristic', label, search.seed, fwd.certificate)
    logger.info(f"✅ Distance to OH_{n}: {product:.8g} via {label} candidate")
    return report


# ---------------------------------------------------------------------------
# Dual norm factorizations
# ---------------------------------------------------------------------------

@dataclass
class DualFactorization:
    value: float
    B: np.ndarray
    A: LinearMapCoeff


def _hermitian_from_params(p: np.ndarray, n: int) -> np.ndarray:
    H = np.zeros((n, n), dtype=np.complex128)
    H[np.diag_indices(n)] = p[:n]
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    H[iu] = p[n:n + m] + 1j * p[n + m:]
    return H + np.triu(H, 1).conj().T


def dual_factorization(v: LinearMapCoeff, search: Optional[SearchParams] = None) -> DualFactorization:
    """
    v = A o B with B: OH_n -> OH_n, A = v o B^-1; value ||B||_HS ||A||_cb

    Seeded random B = expm(H), then Nelder-Mead over H from the best seed.
    """
    _require_oh(v.source, 'source')
    search = search or SearchParams.from_config()
    n = v.source.dim
    V = v.U

    def objective_of(B: np.ndarray) -> float:
        s = np.linalg.svd(B, compute_uv=False)
        if s[-1] <= PINV_CUTOFF * s[0]:
            return np.inf
        A = LinearMapCoeff(v.source, v.target, V @ np.linalg.inv(B))
        return float(np.linalg.norm(B)) * cb_from_oh_exact(A)

    rng = np.random.default_rng(search.seed)
    seeds = [np.zeros(n * n)] + [0.5 * rng.standard_normal(n * n) for _ in range(search.restarts)]
    scored = [(objective_of(expm(_hermitian_from_params(p, n))), i) for i, p in enumerate(seeds)]
    best_val, best_i = min(scored)
    best_p = seeds[best_i]

    refined = minimize(lambda p: objective_of(expm(_hermitian_from_params(p, n))), best_p,
                       method='Nelder-Mead', options={'maxiter': min(search.iterations, 200 * n * n),
                                                      'xatol': 1e-10, 'fatol': 1e-12})
    if refined.fun < best_val:
        best_val, best_p = float(refined.fun), refined.x
    B = expm(_hermitian_from_params(best_p, n))
    A = LinearMapCoeff(v.source, v.target, V @ np.linalg.inv(B))
    return DualFactorization(float(best_val), B, A)


def dual_norm_upper(v: LinearMapCoeff, search: Optional[SearchParams] = None) -> float:
    return dual_factorization(v, search).value


@dataclass
class TraceDualityReport:
    n: int
    pi_upper: float
    dual_upper: float
    product: float
    passed: bool

    def to_dict(self) -> dict:
        return {'n': self.n, 'pi_upper': self.pi_upper, 'dual_upper': self.dual_upper,
                'product': self.product, 'passed': self.passed}


def trace_duality_check(space: OperatorSpacePresentation, search: Optional[SearchParams] = None,
                        lewis: Optional[LewisResult] = None) -> TraceDualityReport:
    """n = tr(u u^-1) <= pi_{2,oh}(u) pi*_{2,oh}(u^-1), evaluated with the Lewis map"""
    search = search or SearchParams.from_config()
    n = space.dim
    if space.is_abstract:
        u = LinearMapCoeff(space, OperatorSpacePresentation.oh_model(n), np.eye(n))
        atoms: Sequence[Atom] = ()
    else:
        lewis = lewis or lewis_search(space, search)
        u, atoms = lewis.map, lewis.mixture.atoms
    pi_upper = pi2oh_upper_certificate(space, target_map=u.U, initial_atoms=atoms, search=search).C
    dual_upper = dual_norm_upper(u.inverse(), search)
    product = pi_upper * dual_upper
    return TraceDualityReport(n, pi_upper, dual_upper, product, bool(n <= product * 1.02))


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def project_onto(space: OperatorSpacePresentation, mixture: KMixture) -> LinearMapCoeff:
    """
    phi-orthogonal projection M_{d1 x d2} -> E

    With Omega the form of phi on vec(M_{d1 x d2}) and Bm the basis columns,
    U_P = (Bm^dagger Omega Bm)^+ Bm^dagger Omega.

    Raises:
        DegenerateFormError: phi is degenerate on E
    """
    space.require_concrete("project_onto")
    d1, d2 = space.shape
    Omega = mixture.ambient_form()
    if Omega.shape != (d1 * d2, d1 * d2):
        raise PresentationError(f"Mixture atoms do not fit matrices of shape {(d1, d2)}")
    Bm = space.basis_columns()
    G_E = hermitian_part(Bm.conj().T @ Omega @ Bm)
    w = np.linalg.eigvalsh(G_E)
    top = max(float(w[-1]), 0.0)
    nullity = int(np.sum(w <= PINV_CUTOFF * top)) if top > 0 else space.dim
    if nullity:
        raise DegenerateFormError(f"phi is degenerate on E (nullity {nullity})", nullity)
    U_P = np.linalg.pinv(G_E, rcond=PINV_CUTOFF, hermitian=True) @ Bm.conj().T @ Omega
    return LinearMapCoeff(matrix_space(d1, d2), space, U_P)


def projection_residuals(P: LinearMapCoeff) -> Tuple[float, float]:
    """(||P o inclusion - id_E||, ||P o P - P||) as maps on coefficients"""
    Bm = P.target.basis_columns()
    inclusion = float(np.max(np.abs(P.U @ Bm - np.eye(P.target.dim))))
    full = Bm @ P.U
    idempotence = float(np.max(np.abs(full @ full - full)))
    return inclusion, idempotence


@dataclass
class ProjectionReport:
    P: LinearMapCoeff
    mixture: KMixture
    inclusion_residual: float
    idempotence_residual: float
    amplification: List[float]
    bound: float

    def to_dict(self) -> dict:
        return {'U': encode_complex(self.P.U), 'mixture': self.mixture.to_dict(),
                'inclusion_residual': self.inclusion_residual,
                'idempotence_residual': self.idempotence_residual,
                'amplification': self.amplification, 'bound': self.bound}


def lewis_projection(space: OperatorSpacePresentation, search: Optional[SearchParams] = None,
                     level: Optional[int] = None, lewis: Optional[LewisResult] = None) -> ProjectionReport:
    """Project onto E with the Lewis mixture and lower-bound ||P||_cb up to the given level"""
    search = search or SearchParams.from_config()
    lewis = lewis or lewis_search(space, search)
    P = project_onto(space, lewis.mixture)
    inclusion, idempotence = projection_residuals(P)
    level = level or min(max(space.shape), AMPLIFICATION_MAX_LEVEL)
    profile = amplification_profile(P, level, search)
    return ProjectionReport(P, lewis.mixture, inclusion, idempotence, profile, lewis.product)


# ---------------------------------------------------------------------------
# Amplification lower bounds
# ---------------------------------------------------------------------------

class _BlockMap:
    """P (x) id_{M_L} acting on L x L block matrices"""

    def __init__(self, P: LinearMapCoeff):
        P.source.require_concrete("cb_lower_matrix_map")
        P.target.require_concrete("cb_lower_matrix_map")
        self.d1, self.d2 = P.source.shape
        self.e1, self.e2 = P.target.shape
        Bs = P.source.basis_columns()
        Bs_pinv = np.linalg.pinv(Bs)
        self.full_source = is_full_matrix_space(P.source)
        self.K = P.target.basis_columns() @ P.U @ Bs_pinv
        self.Pi = Bs @ Bs_pinv
        self.KH = self.Pi @ self.K.conj().T

    def _blockwise(self, w: np.ndarray, L: int, r1: int, r2: int, op: np.ndarray, s1: int, s2: int):
        blocks = w.reshape(L, r1, L, r2).transpose(0, 2, 1, 3).reshape(L, L, r1 * r2)
        out = blocks @ op.T
        return out.reshape(L, L, s1, s2).transpose(0, 2, 1, 3).reshape(L * s1, L * s2)

    def apply(self, w: np.ndarray, L: int) -> np.ndarray:
        return self._blockwise(w, L, self.d1, self.d2, self.K, self.e1, self.e2)

    def adjoint(self, Y: np.ndarray, L: int) -> np.ndarray:
        return self._blockwise(Y, L, self.e1, self.e2, self.KH, self.d1, self.d2)

    def restrict(self, w: np.ndarray, L: int) -> np.ndarray:
        return self._blockwise(w, L, self.d1, self.d2, self.Pi, self.d1, self.d2)

    def unit_step(self, D: np.ndarray) -> np.ndarray:
        """Best unit-norm point against D: the polar factor on full sources"""
        if self.full_source:
            U, _, Vh = np.linalg.svd(D, full_matrices=False)
            return U @ Vh
        norm = op_norm(D)
        return D / norm if norm > 0 else D


def _flip_seed(L: int, d1: int, d2: int) -> np.ndarray:
    """sum_{a,b} E_ab (x) E_ba, a partial isometry"""
    w = np.zeros((L, d1, L, d2), dtype=np.complex128)
    for a in range(min(L, d2)):
        for b in range(min(L, d1)):
            w[a, b, b, a] = 1.0
    return w.reshape(L * d1, L * d2)


def _pad(w: np.ndarray, L_old: int, L: int, d1: int, d2: int) -> np.ndarray:
    out = np.zeros((L, d1, L, d2), dtype=np.complex128)
    out[:L_old, :, :L_old, :] = w.reshape(L_old, d1, L_old, d2)
    return out.reshape(L * d1, L * d2)


def _power_method(bm: _BlockMap, w: np.ndarray, L: int, iterations: int) -> Tuple[float, np.ndarray]:
    w = bm.restrict(w, L)
    norm_w = op_norm(w)
    if norm_w == 0:
        return 0.0, w
    w = w / norm_w
    best, best_w = op_norm(bm.apply(w, L)), w
    for _ in range(iterations):
        Tw = bm.apply(w, L)
        U, s, Vh = np.linalg.svd(Tw)
        if s[0] == 0:
            break
        D = bm.adjoint(np.outer(U[:, 0], Vh[0, :]), L)
        w_new = bm.unit_step(D)
        norm_new = op_norm(w_new)
        if norm_new == 0:
            break
        w = w_new / norm_new
        value = op_norm(bm.apply(w, L))
        if value <= best * (1 + 1e-12):
            if value > best:
                best, best_w = value, w
            break
        best, best_w = value, w
    return best, best_w


def _amplified_lower(P: LinearMapCoeff, L: int, search: SearchParams,
                     warm: Optional[np.ndarray]) -> Tuple[float, np.ndarray]:
    bm = _BlockMap(P)
    d1, d2 = bm.d1, bm.d2
    seeds = [_flip_seed(L, d1, d2)]
    if warm is not None:
        seeds.append(warm)
    rng = np.random.default_rng(search.seed)
    restarts = min(search.restarts, AMPLIFICATION_RESTARTS)
    seeds += [rng.standard_normal((L * d1, L * d2)) + 1j * rng.standard_normal((L * d1, L * d2))
              for _ in range(restarts)]
    iterations = min(search.iterations, AMPLIFICATION_ITERATIONS)
    results = run_restarts(lambda w0: _power_method(bm, w0, L, iterations), seeds, search.workers)
    best = max(range(len(results)), key=lambda i: (results[i][0], -i))
    return results[best]


def cb_lower_matrix_map(P: LinearMapCoeff, level: int, search: Optional[SearchParams] = None) -> float:
    """
    Lower bound on ||P||_cb from ||(P (x) id_{M_L})(w)|| over unit-norm w

    Nondecreasing in the level: each level is warm-started from the padded
    best point of the level below.
    """
    return amplification_profile(P, level, search)[-1]


def amplification_profile(P: LinearMapCoeff, level: int, search: Optional[SearchParams] = None) -> List[float]:
    if level < 1:
        raise PresentationError(f"Amplification level must be at least 1, got {level}")
    search = search or SearchParams.from_config()
    d1, d2 = P.source.shape
    values: List[float] = []
    warm = None
    for L in range(1, level + 1):
        value, w = _amplified_lower(P, L, search, warm)
        if values and value < values[-1]:
            value = values[-1]
        values.append(float(value))
        warm = _pad(w, L, L + 1, d1, d2)
    return values


# ---------------------------------------------------------------------------
# Pairwise distances
# ---------------------------------------------------------------------------

@dataclass
class PairwiseReport:
    bound: float
    leg_e: DistanceReport
    leg_f: DistanceReport
    guarantee: float
    route: LinearMapCoeff
    identity_route: Optional[float] = None

    def to_dict(self) -> dict:
        return {'bound': self.bound, 'guarantee': self.guarantee, 'identity_route': self.identity_route,
                'leg_e': self.leg_e.to_dict(), 'leg_f': self.leg_f.to_dict(),
                'route': encode_complex(self.route.U)}


def pairwise_distance(space_e: OperatorSpacePresentation, space_f: OperatorSpacePresentation,
                      search: Optional[SearchParams] = None, use_lewis: bool = True,
                      candidates: int = DISTANCE_RESTARTS) -> PairwiseReport:
    """d_cb(E, F) <= d_cb(E, OH_n) d_cb(F, OH_n), through the two best maps into OH_n"""
    if space_e.dim != space_f.dim:
        raise PresentationError(f"pairwise_distance needs equal dimensions, got {space_e.dim} and {space_f.dim}")
    search = search or SearchParams.from_config()
    leg_e = distance_to_oh(space_e, search, use_lewis=use_lewis, candidates=candidates)
    leg_f = distance_to_oh(space_f, search, use_lewis=use_lewis, candidates=candidates)
    route = leg_e.u.then(leg_f.u.inverse())
    bound = leg_e.product * leg_f.product
    identity_route = None
    if space_e.same_as(space_f):
        identity_route = 1.0
        bound = min(bound, 1.0)
    return PairwiseReport(bound, leg_e, leg_f, float(space_e.dim), route, identity_route)
