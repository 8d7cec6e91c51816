"""Ground states of the 3-state Potts chain.

H = -sin(theta) sum_j [Z_j^dag Z_{j+1} + h.c.] - cos(theta) sum_j [X_j^dag + X_j]
    - lambda sum_j [Z_j + Z_j^dag]

on an open chain.  Exact (dense) diagonalization is available for N <= 8,
optionally restricted to the product-of-X eigenvalue-1 symmetry sector; a
two-site DMRG handles chains up to N = 128.  The ferromagnetic side is
treated by biasing the DMRG initial state and then symmetrizing to the cat
state, the sum of the three shifted copies of the broken ground state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
from scipy.linalg import eigh

from .mps import MPS, SubsystemSpec
from .qudit import clock, shift
from .wigner import DensityMatrix, density_matrix

THETA_CRITICAL = np.pi / 4


@dataclass(frozen=True)
class PottsParams:
    """Chain length, coupling angle theta in [0, pi/2], longitudinal field."""

    n_sites: int
    theta: float
    longitudinal: float = 0.0
    q: int = 3

    def __post_init__(self):
        if self.q != 3:
            raise ValueError("the chain model is implemented for q = 3")
        if self.n_sites < 2:
            raise ValueError("need at least 2 sites")
        if not (0.0 <= self.theta <= np.pi / 2):
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")
        if self.longitudinal < 0:
            raise ValueError("longitudinal field must be >= 0")


@dataclass(frozen=True)
class DMRGConfig:
    """Two-site DMRG settings.

    svd_cutoff is the discarded-weight fraction allowed at each bond
    truncation: the smallest number of singular values is kept such that
    sum of discarded s_i^2 <= cutoff * sum of all s_i^2.
    """

    svd_cutoff: float = 1e-7
    energy_tol: float = 1e-7
    max_sweeps: int = 40
    max_bond: int = 128
    init_bias: int = 0

    def __post_init__(self):
        if self.svd_cutoff <= 0 or self.energy_tol <= 0:
            raise ValueError("cutoffs must be positive")
        if not (0 <= self.init_bias < 3):
            raise ValueError("init_bias must be a Z eigenvalue index 0, 1, or 2")


def potts_operators():
    """(Z, X) for q = 3."""
    return clock(3), shift(3)


def _onsite_term(p: PottsParams) -> np.ndarray:
    z, x = potts_operators()
    h = -np.cos(p.theta) * (x + x.conj().T)
    if p.longitudinal:
        h = h - p.longitudinal * (z + z.conj().T)
    return h


def sparse_hamiltonian(p: PottsParams) -> sparse.csr_matrix:
    """The full Hamiltonian as a real sparse matrix (N <= 8)."""
    if p.n_sites > 8:
        raise ValueError("dense/sparse Hamiltonian supports N <= 8")
    z, _ = potts_operators()
    n = p.n_sites
    dim = 3**n
    eye = sparse.identity
    h = sparse.csr_matrix((dim, dim), dtype=complex)

    def embed(op, i):
        mats = [sparse.csr_matrix(op) if k == i else eye(3, format="csr") for k in range(n)]
        out = mats[0]
        for m in mats[1:]:
            out = sparse.kron(out, m, format="csr")
        return out

    onsite = _onsite_term(p)
    for i in range(n):
        h = h + embed(onsite, i)
    coupling = -np.sin(p.theta) * (np.kron(z.conj().T, z) + np.kron(z, z.conj().T))
    for i in range(n - 1):
        mats = [eye(3, format="csr")] * n
        big = sparse.kron(sparse.csr_matrix(coupling), eye(3 ** (n - i - 2), format="csr"), format="csr")
        big = sparse.kron(eye(3**i, format="csr"), big, format="csr")
        h = h + big
    h = h.real
    return sparse.csr_matrix(h)


def dense_hamiltonian(p: PottsParams) -> np.ndarray:
    return sparse_hamiltonian(p).toarray()


def potts_mpo(p: PottsParams):
    """MPO tensors (wl, wr, s', s); bond dimension 4 (two coupling channels)."""
    z, _ = potts_operators()
    eye = np.eye(3, dtype=complex)
    w = np.zeros((4, 4, 3, 3), dtype=complex)
    w[0, 0] = eye
    w[1, 0] = z
    w[2, 0] = z.conj().T
    w[3, 0] = _onsite_term(p)
    w[3, 1] = -np.sin(p.theta) * z.conj().T
    w[3, 2] = -np.sin(p.theta) * z
    w[3, 3] = eye
    first = w[3:4]
    last = w[:, 0:1]
    return [first] + [w] * (p.n_sites - 2) + [last]


def build_potts_hamiltonian(p: PottsParams):
    """Dense matrix for N <= 8, MPO tensor list otherwise."""
    return dense_hamiltonian(p) if p.n_sites <= 8 else potts_mpo(p)


def mpo_expectation(mps: MPS, mpo) -> float:
    """<psi|H|psi> / <psi|psi> for an MPO."""
    env = np.ones((1, 1, 1), dtype=complex)
    for t, w in zip(mps.tensors, mpo):
        env = np.einsum("awb,asx,wvst,bty->xvy", env, t.conj(), w, t, optimize=True)
    norm = mps.norm()
    return float(env[0, 0, 0].real / norm**2)


# --- exact diagonalization ----------------------------------------------------

def _global_shift_permutation(n: int) -> np.ndarray:
    """Index map of prod_j X_j on the computational basis (adds 1 to each trit)."""
    idx = np.arange(3**n)
    out = np.zeros_like(idx)
    for j in range(n):
        digits = (idx // 3**j) % 3
        out += ((digits + 1) % 3) * 3**j
    return out


def symmetric_sector_basis(n: int) -> sparse.csr_matrix:
    """Isometry onto the prod X = +1 sector: uniform combinations over the
    orbits of the global shift (every orbit has size exactly 3)."""
    dim = 3**n
    perm = _global_shift_permutation(n)
    perm2 = perm[perm]
    reps = np.minimum(np.minimum(np.arange(dim), perm), perm2)
    rep_ids = {}
    rows, cols = [], []
    for v in range(dim):
        r = int(reps[v])
        if r not in rep_ids:
            rep_ids[r] = len(rep_ids)
        rows.append(v)
        cols.append(rep_ids[r])
    data = np.full(dim, 1.0 / np.sqrt(3.0))
    return sparse.csr_matrix((data, (rows, cols)), shape=(dim, dim // 3))


def exact_ground_state(p: PottsParams, symmetric: bool = False):
    """Lowest eigenpair by dense diagonalization (N <= 8).

    With symmetric=True the problem is restricted to the prod X eigenvalue-1
    sector, which reproduces the cat ground state on the ferromagnetic side
    without any bias.  Returns (energy, state vector).
    """
    if p.n_sites > 8:
        raise ValueError("exact diagonalization supports N <= 8")
    h = sparse_hamiltonian(p)
    if symmetric:
        b = symmetric_sector_basis(p.n_sites)
        h_sym = (b.T @ (h @ b)).toarray()
        vals, vecs = eigh(h_sym, subset_by_index=[0, 0])
        psi = b @ vecs[:, 0]
    else:
        vals, vecs = eigh(h.toarray(), subset_by_index=[0, 0])
        psi = vecs[:, 0]
    psi = psi.astype(complex)
    psi = psi / np.linalg.norm(psi)
    return float(vals[0]), psi


def exact_spectrum(p: PottsParams) -> np.ndarray:
    """All eigenvalues (small N only)."""
    if p.n_sites > 6:
        raise ValueError("full spectrum supports N <= 6")
    return np.linalg.eigvalsh(dense_hamiltonian(p))


# --- DMRG -----------------------------------------------------------------------

@dataclass
class DMRGResult:
    mps: MPS
    energy: float
    sweep_energies: list
    converged: bool
    last_delta: float
    max_bond_reached: int
    params: PottsParams
    config: DMRGConfig
    truncation_weights: list = field(default_factory=list)


def initial_product_state(p: PottsParams, cfg: DMRGConfig) -> MPS:
    if p.theta > THETA_CRITICAL:
        amp = np.zeros(3)
        amp[cfg.init_bias] = 1.0
    else:
        amp = np.ones(3) / np.sqrt(3.0)
    return MPS.product_state([amp] * p.n_sites)


def _update_left_env(env, a, w):
    return np.einsum("awb,asx,wvst,bty->xvy", env, a.conj(), w, a, optimize=True)


def _update_right_env(env, a, w):
    return np.einsum("xvy,asx,wvst,bty->awb", env, a.conj(), w, a, optimize=True)


def _two_site_matvec(left, w1, w2, right, v):
    t = np.tensordot(left, v, axes=(2, 0))
    t = np.tensordot(t, w1, axes=([1, 2], [0, 3]))
    t = np.tensordot(t, w2, axes=([3, 1], [0, 3]))
    t = np.tensordot(t, right, axes=([1, 3], [2, 1]))
    return t


def _lanczos_ground(matvec, v0, max_steps: int = 30, resid_tol: float = 1e-9):
    """Smallest Ritz pair of a Hermitian operator, warm-started at v0.

    Full reorthogonalization (the Krylov spaces here are tiny) keeps the
    iteration deterministic and stable; exits early once the Ritz residual
    bound beta * |last component| is below resid_tol."""
    v = v0 / np.linalg.norm(v0)
    basis = [v]
    alphas, betas = [], []
    w = matvec(v)
    alpha = np.vdot(v, w).real
    alphas.append(alpha)
    w = w - alpha * v
    theta, ritz = alpha, np.array([1.0])
    for _ in range(max_steps - 1):
        for b in basis:
            w = w - np.vdot(b, w) * b
        beta = np.linalg.norm(w)
        if beta < 1e-14 * max(1.0, abs(theta)):
            break
        v = w / beta
        basis.append(v)
        betas.append(beta)
        w = matvec(v)
        alpha = np.vdot(v, w).real
        alphas.append(alpha)
        w = w - alpha * v - beta * basis[-2]
        tri_vals, tri_vecs = np.linalg.eigh(
            np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        )
        theta, ritz = tri_vals[0], tri_vecs[:, 0]
        if beta * abs(ritz[-1]) < resid_tol * max(1.0, abs(theta)):
            break
    vec = sum(c * b for c, b in zip(ritz, basis))
    return float(theta), vec / np.linalg.norm(vec)


def _solve_two_site(left, w1, w2, right, v0, resid_tol=1e-9):
    shape = v0.shape
    flat0 = v0.ravel()
    flat0 = flat0 / np.linalg.norm(flat0)

    def matvec(x):
        return _two_site_matvec(left, w1, w2, right, x.reshape(shape)).ravel()

    hv0 = matvec(flat0)
    e0 = np.vdot(flat0, hv0).real
    resid = np.linalg.norm(hv0 - e0 * flat0)
    if resid < 1e-13 * max(1.0, abs(e0)):
        # already an exact eigenvector (product phases); keep it
        return e0, flat0.reshape(shape)
    val, vec = _lanczos_ground(matvec, flat0, resid_tol=resid_tol)
    return val, vec.reshape(shape)


def dmrg_ground_state(p: PottsParams, cfg: DMRGConfig | None = None,
                      initial: MPS | None = None) -> DMRGResult:
    """Two-site DMRG sweeps until the energy change per sweep drops below
    cfg.energy_tol.  For theta > pi/4 the initial state is the biased
    Z-product state, giving the symmetry-broken ground state."""
    if p.n_sites > 128:
        raise ValueError("DMRG driver supports N <= 128")
    cfg = cfg or DMRGConfig()
    mpo = potts_mpo(p)
    mps = (initial or initial_product_state(p, cfg)).copy()
    mps.canonicalize(0)
    mps.normalize()
    n = p.n_sites

    right = [None] * (n + 1)
    right[n - 1] = np.ones((1, 1, 1), dtype=complex)
    for i in range(n - 1, 0, -1):
        right[i - 1] = _update_right_env(right[i], mps.tensors[i], mpo[i])
    left = [None] * n
    left[0] = np.ones((1, 1, 1), dtype=complex)

    sweep_energies = []
    truncation_weights = []
    energy = np.inf
    converged = False
    last_delta = np.inf
    max_bond_seen = 1

    def split(theta2, i, to_right):
        nonlocal max_bond_seen
        dl, d1, d2, dr = theta2.shape
        u, s, vh = np.linalg.svd(theta2.reshape(dl * d1, d2 * dr), full_matrices=False)
        probs = s**2
        tail = np.concatenate([np.cumsum(probs[::-1])[::-1], [0.0]]) / probs.sum()
        keep = int(np.argmax(tail <= cfg.svd_cutoff))
        keep = min(max(1, keep), cfg.max_bond)
        weight = float(tail[keep])
        truncation_weights.append(weight)
        max_bond_seen = max(max_bond_seen, keep)
        s_kept = s[:keep] / np.linalg.norm(s[:keep])
        if to_right:
            mps.tensors[i] = u[:, :keep].reshape(dl, d1, keep)
            mps.tensors[i + 1] = (s_kept[:, None] * vh[:keep]).reshape(keep, d2, dr)
            mps.center = i + 1
        else:
            mps.tensors[i] = (u[:, :keep] * s_kept).reshape(dl, d1, keep)
            mps.tensors[i + 1] = vh[:keep].reshape(keep, d2, dr)
            mps.center = i

    for sweep in range(cfg.max_sweeps):
        # solve loosely while the energy is still moving, tightly near the end
        scale = max(abs(energy), 1.0) if np.isfinite(energy) else 1.0
        resid_tol = min(1e-6, max(1e-10, 0.03 * last_delta / scale)) if np.isfinite(last_delta) else 1e-6
        for i in range(n - 1):
            v0 = np.tensordot(mps.tensors[i], mps.tensors[i + 1], axes=(2, 0))
            e, v = _solve_two_site(left[i], mpo[i], mpo[i + 1], right[i + 1], v0, resid_tol)
            split(v, i, to_right=True)
            left[i + 1] = _update_left_env(left[i], mps.tensors[i], mpo[i])
            energy = e
        for i in range(n - 2, -1, -1):
            v0 = np.tensordot(mps.tensors[i], mps.tensors[i + 1], axes=(2, 0))
            e, v = _solve_two_site(left[i], mpo[i], mpo[i + 1], right[i + 1], v0, resid_tol)
            split(v, i, to_right=False)
            right[i] = _update_right_env(right[i + 1], mps.tensors[i + 1], mpo[i + 1])
            energy = e
        prev = sweep_energies[-1] if sweep_energies else np.inf
        sweep_energies.append(energy)
        last_delta = abs(prev - energy)
        if last_delta < cfg.energy_tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"DMRG did not converge in {cfg.max_sweeps} sweeps; last energy delta {last_delta:.3e}"
        )
    mps.normalize()
    return DMRGResult(
        mps=mps,
        energy=energy,
        sweep_energies=sweep_energies,
        converged=converged,
        last_delta=last_delta,
        max_bond_reached=max_bond_seen,
        params=p,
        config=cfg,
    )


# --- cat states and symmetry -----------------------------------------------------

def global_shift_expectation(mps: MPS) -> complex:
    """<prod_j X_j> on the state."""
    _, x = potts_operators()
    return mps.expectation({i: x for i in range(1, mps.n_sites + 1)})


def cat_state(omega0: MPS, compress_cutoff: float = 1e-12) -> MPS:
    """Symmetrized ground state: normalized sum of the three global-shift
    copies of omega0.  Bond dimension at most triples; the light compression
    only removes numerically dead directions so the product-of-X symmetry
    survives at working precision."""
    _, x = potts_operators()
    x2 = x @ x
    total = omega0.add(omega0.apply_everywhere(x)).add(omega0.apply_everywhere(x2))
    total.compress(cutoff=compress_cutoff)
    total.normalize()
    return total


def rdm(mps: MPS, spec) -> DensityMatrix:
    """Reduced density matrix of the MPS on a subsystem, as a validated
    DensityMatrix."""
    spec = SubsystemSpec.of(spec)
    mat = mps.rdm_matrix(spec)
    return density_matrix(mat, q=mps.phys_dim)


def rdm_mixture(omega0: MPS, spec) -> DensityMatrix:
    """RDM of the statistical mixture (1/3) sum_n shift^n |omega0><omega0|,
    the alternative to the cat-state convention."""
    spec = SubsystemSpec.of(spec)
    _, x = potts_operators()
    mats = []
    state = omega0
    for _ in range(3):
        mats.append(state.rdm_matrix(spec))
        state = state.apply_everywhere(x)
    return density_matrix(sum(mats) / 3.0, q=omega0.phys_dim)


# --- correlations ------------------------------------------------------------------

def correlation_profile(mps: MPS, i: int) -> np.ndarray:
    """C_ij = Re[<Z_i Z_j^dag> - <Z_i><Z_j^dag>] for all j > i (1-based i).

    Returns an array indexed by j - i - 1."""
    z, _ = potts_operators()
    zd = z.conj().T
    n = mps.n_sites
    if not (1 <= i < n):
        raise ValueError("base site out of range")
    eye_env = np.ones((1, 1), dtype=complex)

    # plain right transfer environments R[j] for sites > j
    rights = [None] * (n + 1)
    rights[n] = eye_env
    for j in range(n, 0, -1):
        t = mps.tensors[j - 1]
        rights[j - 1] = np.einsum("asj,bsk,jk->ab", t.conj(), t, rights[j], optimize=True)
    norm2 = rights[0][0, 0].real

    def step(env, j, op=None):
        t = mps.tensors[j - 1]
        if op is None:
            return np.einsum("ab,asj,bsk->jk", env, t.conj(), t, optimize=True)
        return np.einsum("ab,asj,st,btk->jk", env, t.conj(), op, t, optimize=True)

    env = eye_env
    for j in range(1, i):
        env = step(env, j)
    env_zi = step(env, i, z)
    env_id = step(env, i)

    zi = np.einsum("jk,jk->", env_zi, rights[i]) / norm2
    c = np.empty(n - i)
    run_z = env_zi
    run_1 = env_id
    for j in range(i + 1, n + 1):
        zz = np.einsum("jk,jk->", step(run_z, j, zd), rights[j]) / norm2
        zj = np.einsum("jk,jk->", step(run_1, j, zd), rights[j]) / norm2
        c[j - i - 1] = (zz - zi * zj).real
        run_z = step(run_z, j)
        run_1 = step(run_1, j)
    return c


def correlation(mps: MPS, i: int, j: int) -> float:
    if not (1 <= i < j <= mps.n_sites):
        raise ValueError("need 1 <= i < j <= N")
    return float(correlation_profile(mps, i)[j - i - 1])


def correlation_length(mps: MPS, i: int | None = None) -> float:
    """xi = C_{i,i+1}^{-1} sum_{j>i} C_ij with i = N/4 by default."""
    i = i or mps.n_sites // 4
    prof = correlation_profile(mps, i)
    if abs(prof[0]) < 1e-14:
        raise ValueError("nearest-neighbor correlation vanishes; xi undefined")
    return float(prof.sum() / prof[0])


def midpoint_entropy(mps: MPS) -> float:
    return mps.entanglement_entropy(mps.n_sites // 2)


# --- domain-wall duality checks -------------------------------------------------

@dataclass
class DualityReport:
    n_sites: int
    cases: int
    max_residual: float
    violations: list


def duality_checks(n_sites: int = 3, tol: float = 1e-12) -> DualityReport:
    """Verify as dense identities that Xt_j = Z_j Z_{j+1}^dag and
    Zt_j = prod_{k>j} X_k multiply like clock and shift: the commutator phase
    is omega^{-1} for j = l and trivial otherwise."""
    if n_sites > 6:
        raise ValueError("duality checks are dense; N <= 6")
    from .qudit import embed_site_operator

    z, x = potts_operators()
    omega = np.exp(2j * np.pi / 3)
    n = n_sites
    xt = []
    zt = []
    for j in range(n - 1):
        xt.append(embed_site_operator(z, j, n) @ embed_site_operator(z.conj().T, j + 1, n))
        op = np.eye(3**n, dtype=complex)
        for k in range(j + 1, n):
            op = op @ embed_site_operator(x, k, n)
        zt.append(op)
    violations = []
    worst = 0.0
    cases = 0
    for j in range(n - 1):
        for l in range(n - 1):
            phase = omega**-1 if j == l else 1.0
            resid = np.abs(xt[j] @ zt[l] - phase * zt[l] @ xt[j]).max()
            worst = max(worst, resid)
            cases += 1
            if resid > tol:
                violations.append((j + 1, l + 1, float(resid)))
    return DualityReport(n_sites=n, cases=cases, max_residual=float(worst), violations=violations)
