"""Discrete Wigner functions and the mana magic monotone.

The Wigner coefficients of a density matrix rho are W(u) = q^{-n} Tr(rho A_u)
with A_u the site-factorized phase-space point operators; the mana is
log sum_u |W(u)|.  Dense matrices up to n = 8 sites are swept directly;
reduced density matrices of matrix product states are handled without ever
materializing a q^l x q^l matrix for l > 6.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .qudit import (
    PhasePoint,
    as_prime_dim,
    clifford_generators,
    embed_site_operator,
    pauli_string,
    single_site_phase_point_operators,
    stabilizer_states,
    swap_gate,
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-9
WIGNER_SUM_TOL = 1e-8
WIGNER_IMAG_TOL = 1e-10


@dataclass
class DensityMatrix:
    """Validated density matrix on n sites of dimension q."""

    q: int
    n: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.q**self.n


def density_matrix(mat: np.ndarray, q: int = 3, check_spectrum: bool | None = None) -> DensityMatrix:
    """Validate and wrap a density matrix.

    Hermiticity and unit trace are enforced at 1e-10.  Eigenvalues down to
    -1e-9 (truncation noise from DMRG reduced density matrices) are clipped
    to zero and the matrix renormalized; anything more negative is an error.
    The spectral check defaults to on for dim <= 729 and off above that
    (an eigendecomposition of a 3^7 or 3^8 matrix is expensive); pass
    check_spectrum explicitly to override.
    """
    p = as_prime_dim(q)
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {mat.shape}")
    dim = mat.shape[0]
    n = int(round(np.log(dim) / np.log(p.q)))
    if p.q**n != dim:
        raise ValueError(f"dimension {dim} is not a power of q = {p.q}")
    herm_err = np.abs(mat - mat.conj().T).max()
    if herm_err > HERMITICITY_TOL:
        raise ValueError(f"matrix is not Hermitian: max |rho - rho^dag| = {herm_err:.3e}")
    mat = 0.5 * (mat + mat.conj().T)
    tr = np.trace(mat).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"trace must be 1, got {tr!r}")
    if check_spectrum is None:
        check_spectrum = dim <= 729
    if check_spectrum:
        vals, vecs = np.linalg.eigh(mat)
        if vals.min() < EIGENVALUE_FLOOR:
            raise ValueError(f"negative eigenvalue {vals.min():.3e} below floor {EIGENVALUE_FLOOR}")
        if vals.min() < 0.0:
            vals = np.clip(vals, 0.0, None)
            mat = (vecs * vals) @ vecs.conj().T
            mat = mat / np.trace(mat).real
    return DensityMatrix(q=p.q, n=n, matrix=mat)


def pure_density(psi: np.ndarray, q: int = 3) -> DensityMatrix:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return density_matrix(np.outer(psi, psi.conj()), q=q, check_spectrum=False)


@dataclass
class WignerTable:
    """Discrete Wigner function: one real coefficient per phase point.

    Values are stored flat in row-major phase-point order (site 1 most
    significant, index a*q + a' within a site), matching
    PhasePoint.flat_index.
    """

    q: int
    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size != (self.q * self.q) ** self.n:
            raise ValueError("Wigner table has wrong size for (q, n)")
        total = self.values.sum()
        if abs(total - 1.0) > WIGNER_SUM_TOL:
            raise ValueError(f"Wigner coefficients must sum to 1, got {total!r}")

    def at(self, point: PhasePoint) -> float:
        return float(self.values[point.flat_index()])

    def min(self) -> float:
        return float(self.values.min())


@dataclass
class ManaReport:
    """Mana of a state, in nats, with its negativity sum and density."""

    mana: float
    neg_sum: float
    n_sites: int
    mana_density: float


def _dense_trace_sweep(mat: np.ndarray, n: int, q: int) -> np.ndarray:
    """All q^{2n} traces Tr(mat * A_u), via one per-site contraction each."""
    a1 = single_site_phase_point_operators(q)
    work = mat.reshape(1, q**n, q**n)
    for _ in range(n):
        nb, dk, db = work.shape
        work = work.reshape(nb, q, dk // q, q, db // q)
        work = np.einsum("bts,BsKtJ->BbKJ", a1, work, optimize=True)
        work = work.reshape(nb * q * q, dk // q, db // q)
    return work.reshape(-1)


def _realify(vals: np.ndarray) -> np.ndarray:
    imag = np.abs(vals.imag).max() if vals.size else 0.0
    if imag > WIGNER_IMAG_TOL:
        raise ValueError(f"Wigner traces have imaginary part {imag:.3e}")
    return vals.real.copy()


def wigner_of(rho: DensityMatrix) -> WignerTable:
    """Discrete Wigner function W(u) = q^{-n} Tr(rho A_u) of a dense state."""
    if rho.n > 8:
        raise ValueError("dense Wigner sweep supports n <= 8")
    vals = _dense_trace_sweep(rho.matrix, rho.n, rho.q) * float(rho.q) ** (-rho.n)
    return WignerTable(q=rho.q, n=rho.n, values=_realify(vals))


def mana(w: WignerTable) -> ManaReport:
    """Mana log sum|W| in nats.  A nonnegative table has mana exactly 0."""
    neg_sum = float(np.abs(w.values).sum())
    if w.values.min() >= 0.0:
        m = 0.0
    else:
        m = float(np.log(neg_sum))
    return ManaReport(mana=m, neg_sum=neg_sum, n_sites=w.n, mana_density=m / w.n)


def mana_of_state(rho: DensityMatrix) -> ManaReport:
    return mana(wigner_of(rho))


def renyi2(rho: DensityMatrix) -> float:
    """Second Renyi entropy S2 = -log Tr rho^2."""
    purity = np.einsum("ij,ji->", rho.matrix, rho.matrix).real
    return float(-np.log(purity))


def entanglement_entropy(rho: DensityMatrix) -> float:
    """Von Neumann entropy -Tr rho log rho, with 0 log 0 = 0."""
    vals = np.linalg.eigvalsh(rho.matrix)
    vals = vals[vals > 1e-15]
    return float(-(vals * np.log(vals)).sum())


def renyi2_from_table(w: WignerTable) -> float:
    """S2 recovered from the table via Tr rho^2 = q^n sum_u W(u)^2."""
    purity = float(w.q) ** w.n * float((w.values**2).sum())
    return float(-np.log(purity))


def mana_jensen_bound(w: WignerTable) -> float:
    """Upper bound (n log q - S2) / 2 on the mana of the tabulated state."""
    return 0.5 * (w.n * np.log(w.q) - renyi2_from_table(w))


def frobenius_overlap(w1: WignerTable, w2: WignerTable) -> float:
    """Tr(rho1 rho2) = q^n sum_u W1(u) W2(u)."""
    if (w1.q, w1.n) != (w2.q, w2.n):
        raise ValueError("tables live on different phase spaces")
    return float(w1.q) ** w1.n * float((w1.values * w2.values).sum())


# --- random states (used by the invariant suites) ----------------------------

def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def random_mixed_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = rank or dim
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_clifford_circuit(n: int, rng: np.random.Generator, length: int | None = None) -> np.ndarray:
    """Unitary of a random circuit over the Clifford generators (q = 3)."""
    gates = clifford_generators(3)
    sw = swap_gate()
    length = length or (4 * n + 6)
    u = np.eye(3**n, dtype=complex)
    for _ in range(length):
        if n == 1 or rng.random() < 0.5:
            g = gates["K"] if rng.random() < 0.5 else gates["H"]
            site = int(rng.integers(n))
            u = embed_site_operator(g, site, n) @ u
        else:
            i = int(rng.integers(n - 1))
            two = gates["S"] if rng.random() < 0.5 else sw @ gates["S"] @ sw
            full = np.eye(1, dtype=complex)
            for k in range(n):
                if k == i:
                    full = np.kron(full, two)
                elif k == i + 1:
                    continue
                else:
                    full = np.kron(full, np.eye(3, dtype=complex))
            u = full @ u
    return u


def pauli_measurement_channel(rho: DensityMatrix, point: PhasePoint) -> DensityMatrix:
    """Dephase rho onto the eigenspaces of the Pauli string T_u."""
    q = rho.q
    t = pauli_string(q, point)
    omega = as_prime_dim(q).omega
    powers = [np.linalg.matrix_power(t, m) for m in range(q)]
    out = np.zeros_like(rho.matrix)
    for k in range(q):
        proj = sum(omega ** (-k * m) * powers[m] for m in range(q)) / q
        out += proj @ rho.matrix @ proj.conj().T
    return density_matrix(out, q=q, check_spectrum=False)


@dataclass
class MonotonicityReport:
    """Outcome of the Clifford-invariance / measurement-monotonicity checks."""

    trials: int
    clifford_max_deviation: float
    measurement_max_increase: float
    clifford_ok: bool
    measurement_ok: bool
    failures: list = field(default_factory=list)


def monotonicity_suite(rho: DensityMatrix, trials: int = 20, seed: int = 0,
                       clifford_tol: float = 1e-10, measure_tol: float = 1e-9) -> MonotonicityReport:
    """Check mana invariance under random Clifford circuits and non-increase
    under random Pauli-string measurement channels.  Failures are collected
    in the report, not raised."""
    if rho.n > 3:
        raise ValueError("monotonicity suite supports n <= 3")
    rng = np.random.default_rng(seed)
    base = mana_of_state(rho).mana
    worst_cliff = 0.0
    worst_meas = -np.inf
    failures = []
    for t in range(trials):
        u = random_clifford_circuit(rho.n, rng)
        conj = density_matrix(u @ rho.matrix @ u.conj().T, q=rho.q, check_spectrum=False)
        dev = abs(mana_of_state(conj).mana - base)
        worst_cliff = max(worst_cliff, dev)
        if dev > clifford_tol:
            failures.append(("clifford", t, dev))
        pairs = [tuple(rng.integers(rho.q, size=2)) for _ in range(rho.n)]
        while all(p == (0, 0) for p in pairs):
            pairs = [tuple(rng.integers(rho.q, size=2)) for _ in range(rho.n)]
        point = PhasePoint(rho.q, tuple(pairs))
        measured = pauli_measurement_channel(rho, point)
        inc = mana_of_state(measured).mana - base
        worst_meas = max(worst_meas, inc)
        if inc > measure_tol:
            failures.append(("measurement", t, inc))
    return MonotonicityReport(
        trials=trials,
        clifford_max_deviation=worst_cliff,
        measurement_max_increase=worst_meas,
        clifford_ok=worst_cliff <= clifford_tol,
        measurement_ok=worst_meas <= measure_tol,
        failures=failures,
    )


# --- distance to the stabilizer hull -----------------------------------------

def stab_hull_distance(rho: DensityMatrix, gap_tol: float = 1e-6, max_iter: int = 200000) -> float:
    """Frobenius distance from rho to the convex hull of pure stabilizer states.

    Solved by away-step conditional gradient over the 12-vertex (n = 1) or
    360-vertex (n = 2) polytope; iterates until the Frank-Wolfe duality gap
    of the squared-distance objective drops below gap_tol.
    """
    if rho.n not in (1, 2):
        raise ValueError("stabilizer hull distance supports n <= 2")
    states = stabilizer_states(3, rho.n)
    verts = np.einsum("vi,vj->vij", states, states.conj())
    weights = {0: 1.0}
    sigma = verts[0].copy()
    target = rho.matrix
    for _ in range(max_iter):
        grad = 2.0 * (sigma - target)
        scores = np.real(np.einsum("vij,ji->v", verts, grad))
        fw = int(np.argmin(scores))
        d_fw = verts[fw] - sigma
        gap = -np.real(np.trace(grad @ d_fw))
        if gap < gap_tol:
            break
        active = list(weights)
        away = active[int(np.argmax([scores[v] for v in active]))]
        d_aw = sigma - verts[away]
        if gap >= -np.real(np.trace(grad @ d_aw)):
            step_dir, step_max, fw_step = d_fw, 1.0, True
        else:
            w_away = weights[away]
            step_dir, step_max, fw_step = d_aw, w_away / (1.0 - w_away) if w_away < 1.0 else np.inf, False
        num = -np.real(np.trace((sigma - target).conj().T @ step_dir))
        den = np.real(np.trace(step_dir.conj().T @ step_dir))
        step = min(step_max, max(0.0, num / den)) if den > 0 else 0.0
        sigma = sigma + step * step_dir
        if fw_step:
            weights = {v: p * (1.0 - step) for v, p in weights.items()}
            weights[fw] = weights.get(fw, 0.0) + step
        else:
            weights = {v: p * (1.0 + step) for v, p in weights.items()}
            weights[away] -= step
        weights = {v: p for v, p in weights.items() if p > 1e-14}
    else:
        raise RuntimeError(f"conditional gradient did not reach gap {gap_tol} in {max_iter} iterations")
    return float(np.linalg.norm(sigma - target))


# --- Wigner functions of MPS reduced density matrices ------------------------

def _wigner_values_from_matrix(mat: np.ndarray, m: int, q: int) -> np.ndarray:
    """Trace sweep that peels one site at a time while m > 6, so no matrix of
    dimension above q^6 is ever contracted whole."""
    if m <= 6:
        return _dense_trace_sweep(mat, m, q)
    a1 = single_site_phase_point_operators(q)
    sub = q ** (m - 1)
    view = mat.reshape(q, sub, q, sub)
    blocks = []
    for b in range(q * q):
        reduced = np.einsum("ts,sStT->ST", a1[b], view, optimize=True)
        blocks.append(_wigner_values_from_matrix(reduced, m - 1, q))
    return np.concatenate(blocks)


def _wigner_values_from_purification(psi: np.ndarray, m: int, q: int) -> np.ndarray:
    """Trace sweep given rho = sum_k |psi_k><psi_k| as the rows of psi."""
    r = psi.shape[0]
    if r > psi.shape[1]:
        psi = np.linalg.qr(psi, mode="r")
    if m <= 6:
        rho = np.tensordot(psi.T, psi.conj(), axes=(1, 0))
        return _dense_trace_sweep(rho, m, q)
    a1 = single_site_phase_point_operators(q)
    sub = q ** (m - 1)
    psi3 = psi.reshape(-1, q, sub)
    blocks = []
    for b in range(q * q):
        theta = np.einsum("ts,ksS->ktS", a1[b], psi3, optimize=True)
        reduced = np.tensordot(theta, psi3.conj(), axes=([0, 1], [0, 1]))
        blocks.append(_wigner_values_from_matrix(reduced, m - 1, q))
    return np.concatenate(blocks)


def wigner_of_mps_rdm(mps, region) -> WignerTable:
    """Wigner function of the reduced state of `mps` on `region`.

    Contiguous regions of up to 8 sites are handled through the transfer
    environment of the canonical-form MPS; each phase point is evaluated by
    per-site contractions against the one-site A operators, and no
    q^l x q^l matrix is formed for l > 6.  Two disjoint blocks totaling at
    most 4 sites go through the dense two-block reduced density matrix.
    """
    from .mps import SubsystemSpec

    spec = region if isinstance(region, SubsystemSpec) else SubsystemSpec.of(region)
    q = mps.phys_dim
    sites = spec.sites()
    if spec.is_contiguous():
        ell = len(sites)
        if ell > 8:
            raise ValueError("contiguous Wigner regions support at most 8 sites")
        psi = mps.region_purification(sites[0], ell)
        vals = _wigner_values_from_purification(psi, ell, q) * float(q) ** (-ell)
    else:
        if len(spec.intervals) != 2 or len(sites) > 4:
            raise ValueError("disjoint Wigner regions must be two blocks of at most 4 total sites")
        ell = len(sites)
        rho = mps.rdm_matrix(spec)
        vals = _dense_trace_sweep(rho, ell, q) * float(q) ** (-ell)
    return WignerTable(q=q, n=ell, values=_realify(vals))


def connected_mana(mps, region_a, region_b) -> float:
    """Connected component of mana density,
    m(rho_{A u B}) - [m(rho_A) + m(rho_B)] / 2, with m per-site densities.
    Both one-region manas are computed; no m(rho_B) ~ m(rho_A) shortcut."""
    from .mps import SubsystemSpec

    a = region_a if isinstance(region_a, SubsystemSpec) else SubsystemSpec.of(region_a)
    b = region_b if isinstance(region_b, SubsystemSpec) else SubsystemSpec.of(region_b)
    sa, sb = a.sites(), b.sites()
    if set(sa) & set(sb):
        raise ValueError("regions overlap")
    if len(sa) != len(sb):
        raise ValueError("regions must have equal size")
    if len(sa) + len(sb) > 4:
        raise ValueError("connected mana supports at most 4 sites total")
    union = SubsystemSpec.from_sites(sorted(sa + sb))
    m_ab = mana(wigner_of_mps_rdm(mps, union)).mana_density
    m_a = mana(wigner_of_mps_rdm(mps, a)).mana_density
    m_b = mana(wigner_of_mps_rdm(mps, b)).mana_density
    return m_ab - 0.5 * (m_a + m_b)


# --- export -------------------------------------------------------------------

def export_wigner_csv(w: WignerTable, path) -> None:
    """CSV with one row per phase point: u1a, u1a', ..., W."""
    header = []
    for j in range(1, w.n + 1):
        header += [f"u{j}a", f"u{j}ap"]
    header.append("W")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for idx, val in enumerate(w.values):
            point = PhasePoint.from_flat_index(w.q, w.n, idx)
            row = [x for pair in point.pairs for x in pair]
            writer.writerow(row + [f"{val:.12e}"])


def export_wigner_summary(w: WignerTable, path) -> None:
    report = mana(w)
    payload = {
        "n": w.n,
        "q": w.q,
        "mana": report.mana,
        "neg_sum": report.neg_sum,
        "min_W": w.min(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
