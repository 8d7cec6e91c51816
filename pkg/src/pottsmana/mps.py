"""Matrix product states for open chains of qutrits.

Site tensors have shape (left bond, physical, right bond); the state keeps a
mixed-canonical gauge around an orthogonality center.  Sites are numbered
1..N in the public interface, matching the chain conventions used by the
experiment drivers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CANONICAL_TOL = 1e-10


@dataclass(frozen=True)
class SubsystemSpec:
    """Disjoint, sorted site intervals (1-based, inclusive)."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((int(a), int(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        if not ivs:
            raise ValueError("SubsystemSpec needs at least one interval")
        prev_end = 0
        for a, b in ivs:
            if a < 1 or b < a:
                raise ValueError(f"bad interval ({a}, {b})")
            if a <= prev_end:
                raise ValueError("intervals must be sorted and non-overlapping")
            prev_end = b

    @classmethod
    def of(cls, spec) -> "SubsystemSpec":
        """Coerce a site, an (a, b) interval, or a list of intervals."""
        if isinstance(spec, SubsystemSpec):
            return spec
        if isinstance(spec, int):
            return cls(((spec, spec),))
        spec = list(spec)
        if spec and isinstance(spec[0], int):
            return cls(((spec[0], spec[1]),)) if len(spec) == 2 and spec[1] >= spec[0] else cls.from_sites(spec)
        return cls(tuple(tuple(iv) for iv in spec))

    @classmethod
    def from_sites(cls, sites) -> "SubsystemSpec":
        sites = sorted(set(int(s) for s in sites))
        intervals = []
        for s in sites:
            if intervals and s == intervals[-1][1] + 1:
                intervals[-1][1] = s
            else:
                intervals.append([s, s])
        return cls(tuple(tuple(iv) for iv in intervals))

    def sites(self) -> list:
        return [s for a, b in self.intervals for s in range(a, b + 1)]

    def is_contiguous(self) -> bool:
        return len(self.intervals) == 1

    def validate_chain(self, n_sites: int) -> None:
        if self.intervals[-1][1] > n_sites:
            raise ValueError(f"interval extends past chain of {n_sites} sites")


class MPS:
    """Open-boundary MPS with an explicit orthogonality center."""

    def __init__(self, tensors, center: int = 0, phys_dim: int = 3):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        self.center = center
        self.phys_dim = phys_dim
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for i, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != phys_dim:
                raise ValueError(f"tensor {i} has shape {t.shape}")
            if i + 1 < len(self.tensors) and t.shape[2] != self.tensors[i + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {i} and {i + 1}")

    # -- construction ----------------------------------------------------------

    @classmethod
    def product_state(cls, amplitudes) -> "MPS":
        """Product state from a list of one-site amplitude vectors."""
        tensors = []
        for amp in amplitudes:
            v = np.asarray(amp, dtype=complex)
            v = v / np.linalg.norm(v)
            tensors.append(v.reshape(1, -1, 1))
        return cls(tensors, center=0, phys_dim=tensors[0].shape[1])

    @classmethod
    def random(cls, n_sites: int, chi: int, rng, phys_dim: int = 3) -> "MPS":
        d = phys_dim
        tensors = []
        left = 1
        for i in range(n_sites):
            right = min(chi, d ** (i + 1), d ** (n_sites - i - 1))
            t = rng.standard_normal((left, d, right)) + 1j * rng.standard_normal((left, d, right))
            tensors.append(t)
            left = right
        out = cls(tensors, center=0, phys_dim=d)
        out.canonicalize(0)
        out.normalize()
        return out

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def copy(self) -> "MPS":
        return MPS([t.copy() for t in self.tensors], center=self.center, phys_dim=self.phys_dim)

    def bond_dims(self) -> list:
        return [t.shape[2] for t in self.tensors[:-1]]

    # -- gauge -----------------------------------------------------------------

    def _orthonormalize_left(self, i: int) -> None:
        t = self.tensors[i]
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * d, dr))
        keep = q.shape[1]
        self.tensors[i] = q.reshape(dl, d, keep)
        self.tensors[i + 1] = np.tensordot(r, self.tensors[i + 1], axes=(1, 0))

    def _orthonormalize_right(self, i: int) -> None:
        t = self.tensors[i]
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, d * dr).conj().T)
        keep = q.shape[1]
        self.tensors[i] = q.conj().T.reshape(keep, d, dr)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], r.conj().T, axes=(2, 0))

    def move_center(self, target: int) -> None:
        while self.center < target:
            self._orthonormalize_left(self.center)
            self.center += 1
        while self.center > target:
            self._orthonormalize_right(self.center)
            self.center -= 1

    def canonicalize(self, center: int = 0) -> None:
        self.center = 0
        for i in range(self.n_sites - 1):
            self._orthonormalize_left(i)
            self.center = i + 1
        self.move_center(center)

    def canonical_residuals(self) -> float:
        worst = 0.0
        for i, t in enumerate(self.tensors):
            dl, d, dr = t.shape
            if i < self.center:
                m = t.reshape(dl * d, dr)
                worst = max(worst, np.abs(m.conj().T @ m - np.eye(dr)).max())
            elif i > self.center:
                m = t.reshape(dl, d * dr)
                worst = max(worst, np.abs(m @ m.conj().T - np.eye(dl)).max())
        return float(worst)

    def norm(self) -> float:
        left = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            left = np.einsum("ab,asj,bsk->jk", left, t.conj(), t, optimize=True)
        return float(np.sqrt(left[0, 0].real))

    def normalize(self) -> None:
        self.tensors[self.center] = self.tensors[self.center] / self.norm()

    def compress(self, cutoff: float = 1e-12, max_bond: int | None = None) -> None:
        """Sweep of SVD truncations; cutoff is relative to the largest
        singular value at each bond."""
        self.canonicalize(0)
        for i in range(self.n_sites - 1):
            t = self.tensors[i]
            dl, d, dr = t.shape
            u, s, vh = np.linalg.svd(t.reshape(dl * d, dr), full_matrices=False)
            keep = max(1, int((s > cutoff * s[0]).sum()))
            if max_bond is not None:
                keep = min(keep, max_bond)
            self.tensors[i] = u[:, :keep].reshape(dl, d, keep)
            carry = s[:keep, None] * vh[:keep]
            self.tensors[i + 1] = np.tensordot(carry, self.tensors[i + 1], axes=(1, 0))
            self.center = i + 1

    # -- algebra ----------------------------------------------------------------

    def add(self, other: "MPS") -> "MPS":
        """Direct-sum MPS addition (bond dimensions add)."""
        if other.n_sites != self.n_sites:
            raise ValueError("length mismatch")
        n = self.n_sites
        tensors = []
        for i, (a, b) in enumerate(zip(self.tensors, other.tensors)):
            if i == 0:
                tensors.append(np.concatenate([a, b], axis=2))
            elif i == n - 1:
                tensors.append(np.concatenate([a, b], axis=0))
            else:
                dl = a.shape[0] + b.shape[0]
                dr = a.shape[2] + b.shape[2]
                t = np.zeros((dl, self.phys_dim, dr), dtype=complex)
                t[: a.shape[0], :, : a.shape[2]] = a
                t[a.shape[0]:, :, a.shape[2]:] = b
                tensors.append(t)
        return MPS(tensors, center=0, phys_dim=self.phys_dim)

    def apply_one_site(self, op: np.ndarray, site: int) -> "MPS":
        """New MPS with a one-site operator applied at `site` (1-based)."""
        out = self.copy()
        i = site - 1
        out.tensors[i] = np.einsum("st,ltr->lsr", op, out.tensors[i])
        return out

    def apply_everywhere(self, op: np.ndarray) -> "MPS":
        out = self.copy()
        for i in range(out.n_sites):
            out.tensors[i] = np.einsum("st,ltr->lsr", op, out.tensors[i])
        return out

    def overlap(self, other: "MPS") -> complex:
        left = np.ones((1, 1), dtype=complex)
        for a, b in zip(self.tensors, other.tensors):
            left = np.einsum("ab,asj,bsk->jk", left, a.conj(), b, optimize=True)
        return complex(left[0, 0])

    def to_dense(self) -> np.ndarray:
        if self.phys_dim**self.n_sites > 4e6:
            raise ValueError("state too large to densify")
        vec = np.ones((1, 1), dtype=complex)
        for t in self.tensors:
            vec = np.tensordot(vec, t, axes=(-1, 0))
            vec = vec.reshape(vec.shape[0], -1, vec.shape[-1])
            vec = vec.reshape(1, -1, vec.shape[-1])
        return vec.reshape(-1)

    # -- expectation values ------------------------------------------------------

    def expectation(self, ops: dict) -> complex:
        """<psi| prod_i O_i |psi> / <psi|psi> for one-site operators keyed by
        1-based site."""
        num = np.ones((1, 1), dtype=complex)
        den = np.ones((1, 1), dtype=complex)
        eye = np.eye(self.phys_dim, dtype=complex)
        for i, t in enumerate(self.tensors):
            op = ops.get(i + 1, None)
            o = eye if op is None else np.asarray(op, dtype=complex)
            num = np.einsum("ab,asj,st,btk->jk", num, t.conj(), o, t, optimize=True)
            den = np.einsum("ab,asj,bsk->jk", den, t.conj(), t, optimize=True)
        return complex(num[0, 0] / den[0, 0])

    def expectation_one(self, op: np.ndarray, site: int) -> complex:
        return self.expectation({site: op})

    # -- Schmidt data -------------------------------------------------------------

    def schmidt_values(self, bond: int) -> np.ndarray:
        """Singular values across the bond between sites `bond` and `bond`+1
        (1-based); the state is left unmodified."""
        if not (1 <= bond < self.n_sites):
            raise ValueError("bond out of range")
        work = self.copy()
        work.move_center(bond - 1)
        t = work.tensors[bond - 1]
        dl, d, dr = t.shape
        s = np.linalg.svd(t.reshape(dl * d, dr), compute_uv=False)
        return s / np.linalg.norm(s)

    def entanglement_entropy(self, bond: int) -> float:
        s = self.schmidt_values(bond)
        p = s**2
        p = p[p > 1e-30]
        return float(-(p * np.log(p)).sum())

    # -- reduced density matrices ---------------------------------------------------

    def region_purification(self, start: int, ell: int) -> np.ndarray:
        """Purification rows of the RDM on sites start..start+ell-1 (1-based):
        returns psi of shape (chiL * chiR, d^ell) with
        rho = sum_k |psi_k><psi_k|.  Uses the canonical gauge so the left and
        right transfer environments are identities."""
        if not (1 <= start and start + ell - 1 <= self.n_sites):
            raise ValueError("region out of range")
        work = self.copy()
        work.move_center(start - 1)
        t = work.tensors[start - 1]
        for i in range(start, start + ell - 1):
            t = np.tensordot(t, work.tensors[i], axes=(-1, 0))
            t = t.reshape(t.shape[0], -1, t.shape[-1])
        chi_l, _, chi_r = t.shape
        psi = t.transpose(0, 2, 1).reshape(chi_l * chi_r, -1)
        return psi

    def rdm_matrix(self, spec) -> np.ndarray:
        """Dense reduced density matrix on the given subsystem."""
        spec = SubsystemSpec.of(spec)
        spec.validate_chain(self.n_sites)
        sites = spec.sites()
        d = self.phys_dim
        if d ** len(sites) > 6561:
            raise ValueError("dense RDM supports at most 8 sites")
        if spec.is_contiguous():
            psi = self.region_purification(sites[0], len(sites))
            return np.tensordot(psi.T, psi.conj(), axes=(1, 0))
        (a0, a1), = spec.intervals[:1]
        rest = spec.intervals[1:]
        work = self.copy()
        work.move_center(a0 - 1)
        env = self._open_block(work, a0, a1 - a0 + 1, left_env=None)
        pos = a1 + 1
        for b0, b1 in rest:
            for site in range(pos, b0):
                env = self._gap_step(work, env, site)
            env = self._open_block(work, b0, b1 - b0 + 1, left_env=env)
            pos = b1 + 1
        chi = env.shape[-1]
        rho = np.einsum("stkk->st", env.reshape(env.shape[0], env.shape[1], chi, chi))
        return rho

    @staticmethod
    def _open_block(work: "MPS", start: int, ell: int, left_env) -> np.ndarray:
        """Environment with open (ket, bra) physical indices for one block.

        Shapes: env[S, T, beta, beta'] with S/T the accumulated ket/bra
        physical indices.  left_env of None means the identity environment
        of the canonical gauge."""
        t = work.tensors[start - 1]
        for i in range(start, start + ell - 1):
            t = np.tensordot(t, work.tensors[i], axes=(-1, 0))
            t = t.reshape(t.shape[0], -1, t.shape[-1])
        if left_env is None:
            env = np.einsum("asb,atc->stbc", t, t.conj(), optimize=True)
        else:
            env = np.einsum("STab,ase,btf->SsTtef", left_env, t, t.conj(), optimize=True)
            s0, s1, t0, t1, e, f = env.shape
            env = env.reshape(s0 * s1, t0 * t1, e, f)
        return env

    @staticmethod
    def _gap_step(work: "MPS", env: np.ndarray, site: int) -> np.ndarray:
        a = work.tensors[site - 1]
        return np.einsum("STab,asc,bsd->STcd", env, a, a.conj(), optimize=True)

    def rdm_pair_scan(self, a_start: int, block: int, dx_list):
        """Yield (dx, rho_AB) for A = [a_start, a_start+block-1] and
        B = A shifted right so that dist(first of B, last of A) = dx, scanning
        dx in increasing order with an incrementally updated gap environment."""
        dx_list = sorted(set(int(x) for x in dx_list))
        a_end = a_start + block - 1
        work = self.copy()
        work.move_center(a_start - 1)
        env = self._open_block(work, a_start, block, left_env=None)
        pos = a_end + 1
        for dx in dx_list:
            b0 = a_end + dx
            if b0 + block - 1 > self.n_sites:
                break
            while pos < b0:
                env = self._gap_step(work, env, pos)
                pos += 1
            closed = self._open_block(work, b0, block, left_env=env)
            chi = closed.shape[-1]
            rho = np.einsum("stkk->st", closed.reshape(closed.shape[0], closed.shape[1], chi, chi))
            yield dx, rho
