"""Exact operator algebra for qudits of odd prime dimension.

Clock/shift operators, generalized Pauli strings, the qutrit Clifford
generators and T gate, phase-space point operators, and brute-force
enumeration of pure stabilizer states.  Everything here is dense and
exact; it is the foundation the Wigner-function machinery builds on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PHASE_TOL = 1e-10


def _is_prime(m: int) -> bool:
    if m < 2:
        return False
    d = 2
    while d * d <= m:
        if m % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class PrimeDim:
    """Local Hilbert-space dimension, restricted to odd primes."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, (int, np.integer)):
            raise TypeError(f"dimension must be an integer, got {type(self.q)}")
        if self.q < 3 or self.q % 2 == 0 or not _is_prime(self.q):
            raise ValueError(f"local dimension must be an odd prime >= 3, got {self.q}")

    @property
    def omega(self) -> complex:
        return np.exp(2j * np.pi / self.q)

    @property
    def two_inverse(self) -> int:
        """Multiplicative inverse of 2 mod q, i.e. (q+1)/2."""
        inv = (self.q + 1) // 2
        assert (2 * inv) % self.q == 1
        return inv


def as_prime_dim(q) -> PrimeDim:
    return q if isinstance(q, PrimeDim) else PrimeDim(int(q))


@dataclass(frozen=True)
class PhasePoint:
    """A point of the discrete phase space Z_q^{2n}: one (a, a') pair per site."""

    q: int
    pairs: tuple

    def __post_init__(self):
        as_prime_dim(self.q)
        object.__setattr__(self, "pairs", tuple((int(a), int(ap)) for a, ap in self.pairs))
        for a, ap in self.pairs:
            if not (0 <= a < self.q and 0 <= ap < self.q):
                raise ValueError(f"phase-space entries must lie in [0, {self.q}), got ({a}, {ap})")

    @property
    def n(self) -> int:
        return len(self.pairs)

    def flat_index(self) -> int:
        """Row-major index into the q^{2n} table, site 1 most significant."""
        idx = 0
        for a, ap in self.pairs:
            idx = idx * self.q * self.q + a * self.q + ap
        return idx

    @classmethod
    def from_flat_index(cls, q: int, n: int, idx: int) -> "PhasePoint":
        pairs = []
        for _ in range(n):
            idx, rem = divmod(idx, q * q)
            pairs.append(divmod(rem, q))
        return cls(q, tuple(reversed(pairs)))


def all_phase_points(q: int, n: int):
    """Iterate the q^{2n} phase points in flat-index order."""
    single = list(itertools.product(range(q), repeat=2))
    for combo in itertools.product(single, repeat=n):
        yield PhasePoint(q, combo)


def clock(q) -> np.ndarray:
    """Clock operator Z = sum_n omega^n |n><n|."""
    p = as_prime_dim(q)
    return np.diag(p.omega ** np.arange(p.q)).astype(complex)


def shift(q) -> np.ndarray:
    """Shift operator X = sum_n |n+1 mod q><n|."""
    p = as_prime_dim(q)
    x = np.zeros((p.q, p.q), dtype=complex)
    for n in range(p.q):
        x[(n + 1) % p.q, n] = 1.0
    return x


def pauli(q, a: int, ap: int) -> np.ndarray:
    """Generalized Pauli T_{aa'} = omega^{-2^{-1} a a'} Z^a X^{a'}.

    Exponents must already be reduced mod q; out-of-range values are
    rejected rather than silently wrapped.
    """
    p = as_prime_dim(q)
    if not (0 <= a < p.q and 0 <= ap < p.q):
        raise ValueError(f"Pauli exponents must lie in [0, {p.q}), got ({a}, {ap})")
    phase = p.omega ** (-p.two_inverse * a * ap)
    return phase * np.linalg.matrix_power(clock(p), a) @ np.linalg.matrix_power(shift(p), ap)


@lru_cache(maxsize=None)
def single_site_paulis(q: int) -> np.ndarray:
    """Stacked single-site Paulis, shape (q^2, q, q), index b = a*q + a'."""
    p = as_prime_dim(q)
    return np.stack([pauli(p, a, ap) for a in range(p.q) for ap in range(p.q)])


def pauli_string(q, u: PhasePoint) -> np.ndarray:
    """Tensor product of single-site Paulis over the phase point u."""
    p = as_prime_dim(q)
    if u.q != p.q:
        raise ValueError("phase point dimension does not match q")
    out = np.eye(1, dtype=complex)
    for a, ap in u.pairs:
        out = np.kron(out, pauli(p, a, ap))
    return out


@lru_cache(maxsize=None)
def single_site_phase_point_operators(q: int) -> np.ndarray:
    """The q^2 one-site operators A_b = q^{-1} T_b (sum_a T_a) T_b^dagger.

    Returned as a stack of shape (q^2, q, q); A_b is Hermitian, has unit
    trace, and the stack is Frobenius-orthogonal: Tr A_b A_c = q delta_bc.
    """
    p = as_prime_dim(q)
    paulis = single_site_paulis(p.q)
    tsum = paulis.sum(axis=0)
    ops = np.stack([t @ tsum @ t.conj().T / p.q for t in paulis])
    # the defining sandwich leaves float dust on the imaginary part
    herm = 0.5 * (ops + np.conj(np.swapaxes(ops, 1, 2)))
    return herm


def phase_point_operator(q, b: PhasePoint) -> np.ndarray:
    """Multi-site A_b, built site-factorized: A_b = A_{b_1} x ... x A_{b_n}."""
    p = as_prime_dim(q)
    if b.q != p.q:
        raise ValueError("phase point dimension does not match q")
    singles = single_site_phase_point_operators(p.q)
    out = np.eye(1, dtype=complex)
    for a, ap in b.pairs:
        out = np.kron(out, singles[a * p.q + ap])
    return out


# --- qutrit Clifford generators and the T gate (q = 3 only) -----------------

def _require_qutrit(q):
    p = as_prime_dim(q)
    if p.q != 3:
        raise ValueError(f"gate is defined here for q = 3 only, got q = {p.q}")
    return p


def clifford_generators(q=3) -> dict:
    """Qutrit phase gate K, Hadamard H (unitarized with 1/sqrt(3)), sum gate S.

    S is the two-qutrit gate |i; i+j mod 3><i; j| with the first site as
    control.
    """
    p = _require_qutrit(q)
    w = p.omega
    k = np.diag([1.0, 1.0, w]).astype(complex)
    h = np.array([[1, 1, 1], [1, w, w**2], [1, w**2, w]], dtype=complex) / np.sqrt(3)
    s = np.zeros((9, 9), dtype=complex)
    for i in range(3):
        for j in range(3):
            s[3 * i + (i + j) % 3, 3 * i + j] = 1.0
    return {"K": k, "H": h, "S": s}


def t_gate(q=3) -> np.ndarray:
    """The qutrit T gate diag(xi^-1, 1, xi) with xi = exp(2 pi i / 9)."""
    _require_qutrit(q)
    xi = np.exp(2j * np.pi / 9)
    return np.diag([1 / xi, 1.0, xi]).astype(complex)


def swap_gate() -> np.ndarray:
    sw = np.zeros((9, 9), dtype=complex)
    for i in range(3):
        for j in range(3):
            sw[3 * j + i, 3 * i + j] = 1.0
    return sw


def embed_site_operator(op: np.ndarray, site: int, n: int, q: int = 3) -> np.ndarray:
    """Embed a one-site operator at `site` (0-based) into an n-site space."""
    out = np.eye(1, dtype=complex)
    eye = np.eye(q, dtype=complex)
    for k in range(n):
        out = np.kron(out, op if k == site else eye)
    return out


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    return np.abs(u @ u.conj().T - np.eye(u.shape[0])).max() < tol


def is_clifford(u: np.ndarray, q, n: int, tol: float = PHASE_TOL) -> bool:
    """True iff u maps every generator Pauli string to a Pauli string times a phase.

    Checked via the Pauli-basis expansion of u P u^dagger: since u is
    unitary the coefficients have unit total weight, so P maps to a single
    Pauli up to phase exactly when the largest |coefficient| is 1.
    """
    p = as_prime_dim(q)
    dim = p.q**n
    if u.shape != (dim, dim):
        raise ValueError(f"operator shape {u.shape} does not match q^n = {dim}")
    if not is_unitary(u):
        raise ValueError("is_clifford requires a unitary input")
    strings = np.stack([pauli_string(p, v) for v in all_phase_points(p.q, n)])
    for site in range(n):
        for gen in (clock(p), shift(p)):
            g = embed_site_operator(gen, site, n, p.q)
            v = u @ g @ u.conj().T
            coeffs = np.einsum("uji,ij->u", strings.conj(), v) / dim
            if abs(np.abs(coeffs).max() - 1.0) > tol:
                return False
    return True


# --- stabilizer-state enumeration (q = 3, n <= 2) ----------------------------

def canonical_state_key(psi: np.ndarray, granularity: int = 9) -> bytes:
    """Phase-fix a state (first nonzero amplitude real positive) and hash it."""
    idx = int(np.argmax(np.abs(psi) > 1e-8))
    v = psi / (psi[idx] / abs(psi[idx]))
    re = np.round(v.real, granularity) + 0.0
    im = np.round(v.imag, granularity) + 0.0
    return (re + 1j * im).tobytes()


def stabilizer_states(q=3, n: int = 1) -> np.ndarray:
    """All pure stabilizer states as rows, enumerated by BFS orbit closure.

    Starts from |0...0> and closes under the Clifford generators (both sum
    gate orientations and the site swap are included so the orbit does not
    depend on the control convention).  States are deduplicated up to global
    phase.  n > 2 is rejected: the orbit sizes grow as q^n prod (q^k + 1).
    """
    p = _require_qutrit(q)
    if n not in (1, 2):
        raise ValueError("stabilizer enumeration supports n in {1, 2} only")
    gates = clifford_generators(p)
    if n == 1:
        gens = [gates["K"], gates["H"]]
        start = np.zeros(3, dtype=complex)
    else:
        eye = np.eye(3, dtype=complex)
        s12 = gates["S"]
        sw = swap_gate()
        gens = [
            np.kron(gates["K"], eye), np.kron(eye, gates["K"]),
            np.kron(gates["H"], eye), np.kron(eye, gates["H"]),
            s12, sw @ s12 @ sw, sw,
        ]
        start = np.zeros(9, dtype=complex)
    start[0] = 1.0
    seen = {canonical_state_key(start): start}
    frontier = [start]
    while frontier:
        fresh = []
        for psi in frontier:
            for g in gens:
                phi = g @ psi
                key = canonical_state_key(phi)
                if key not in seen:
                    idx = int(np.argmax(np.abs(phi) > 1e-8))
                    phi = phi / (phi[idx] / abs(phi[idx]))
                    seen[key] = phi
                    fresh.append(phi)
        frontier = fresh
    return np.stack(list(seen.values()))


def pauli_stabilizer_group_order(psi: np.ndarray, q=3, tol: float = 1e-9) -> int:
    """Number of Pauli strings that stabilize psi up to a phase."""
    p = as_prime_dim(q)
    n = int(round(np.log(psi.size) / np.log(p.q)))
    count = 0
    for u in all_phase_points(p.q, n):
        t = pauli_string(p, u)
        if abs(abs(np.vdot(psi, t @ psi)) - 1.0) < tol:
            count += 1
    return count
