"""Gaussian covariance-matrix states and their correlation measures.

Convention: quadrature ordering (Q1, P1, ..., Qm, Pm), vacuum covariance = I
(anticommutator-normalized second moments).  The uncertainty relation then
reads: all symplectic eigenvalues >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import linalg
from .config import TOLS
from .partitions import SubRepartition


class GaussianError(ValueError):
    """Violated Gaussian-state invariant or channel condition."""


def omega(m: int) -> np.ndarray:
    """Symplectic form, direct sum of [[0, 1], [-1, 0]] per mode."""
    block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * m, 2 * m))
    for i in range(m):
        out[2 * i:2 * i + 2, 2 * i:2 * i + 2] = block
    return out


@dataclass(frozen=True)
class GaussianState:
    """Covariance matrix + mean vector with a party/mode grouping."""

    modes_per_party: tuple[int, ...]
    cov: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)

    def __init__(self, modes_per_party: Sequence[int], cov, mean=None,
                 validate: bool = True):
        modes = tuple(int(m) for m in modes_per_party)
        if not modes or any(m < 1 for m in modes):
            raise GaussianError(f"invalid modes_per_party {modes}")
        m = sum(modes)
        c = np.asarray(cov, dtype=float)
        if c.shape != (2 * m, 2 * m):
            raise GaussianError(f"cov shape {c.shape}, expected {(2 * m, 2 * m)}")
        mu = np.zeros(2 * m) if mean is None else np.asarray(mean, dtype=float).ravel()
        if mu.shape != (2 * m,):
            raise GaussianError(f"mean length {mu.shape}, expected {2 * m}")
        if validate:
            asym = np.abs(c - c.T).max()
            if asym > TOLS.cov_symmetric:
                raise GaussianError(f"cov not symmetric: {asym:.2e}")
            c = (c + c.T) / 2.0
            nus = _symplectic_eigenvalues(c)
            if nus.min() < 1.0 - TOLS.symplectic_eig:
                raise GaussianError(
                    f"uncertainty violation: min symplectic eigenvalue {nus.min():.6f}")
        c = c.copy(); c.flags.writeable = False
        mu = mu.copy(); mu.flags.writeable = False
        object.__setattr__(self, "modes_per_party", modes)
        object.__setattr__(self, "cov", c)
        object.__setattr__(self, "mean", mu)

    @property
    def n_parties(self) -> int:
        return len(self.modes_per_party)

    @property
    def n_modes(self) -> int:
        return sum(self.modes_per_party)

    def party_mode_slices(self) -> list[list[int]]:
        """Quadrature row indices per party."""
        out, start = [], 0
        for m in self.modes_per_party:
            out.append(list(range(2 * start, 2 * (start + m))))
            start += m
        return out


def _symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    m = cov.shape[0] // 2
    vals = np.abs(np.linalg.eigvals(1j * omega(m) @ cov))
    return np.sort(vals)[::2][::-1].copy()  # pairs deduplicated, descending


def validate(g: GaussianState) -> np.ndarray:
    """Return symplectic eigenvalues, raising if any dips below 1."""
    nus = _symplectic_eigenvalues(g.cov)
    if nus.min() < 1.0 - TOLS.symplectic_eig:
        raise GaussianError(f"uncertainty violation: {nus.min():.6f} < 1")
    return nus


def vacuum(modes_per_party: Sequence[int]) -> GaussianState:
    m = sum(int(x) for x in modes_per_party)
    return GaussianState(modes_per_party, np.eye(2 * m))


def tmsv(r: float) -> GaussianState:
    """Two-mode squeezed vacuum split across two single-mode parties."""
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    cov = np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
    return GaussianState((1, 1), cov)


def squeezed_vacuum(r: float) -> GaussianState:
    return GaussianState((1,), np.diag([math.exp(2 * r), math.exp(-2 * r)]))


def g_product(*states: GaussianState) -> GaussianState:
    modes: tuple[int, ...] = ()
    covs, means = [], []
    for s in states:
        modes = modes + s.modes_per_party
        covs.append(s.cov)
        means.append(s.mean)
    total = sum(c.shape[0] for c in covs)
    cov = np.zeros((total, total))
    at = 0
    for c in covs:
        cov[at:at + c.shape[0], at:at + c.shape[0]] = c
        at += c.shape[0]
    return GaussianState(modes, cov, np.concatenate(means))


def g_partial_trace(g: GaussianState, keep_parties: Sequence[int]) -> GaussianState:
    keep = sorted(set(int(i) for i in keep_parties))
    if not keep:
        raise GaussianError("empty keep set")
    if keep[0] < 1 or keep[-1] > g.n_parties:
        raise GaussianError(f"party index out of range 1..{g.n_parties}")
    slices = g.party_mode_slices()
    rows = [r for i in keep for r in slices[i - 1]]
    cov = g.cov[np.ix_(rows, rows)]
    mean = g.mean[rows]
    modes = tuple(g.modes_per_party[i - 1] for i in keep)
    return GaussianState(modes, cov, mean, validate=False)


def g_permute_parties(g: GaussianState, perm: Sequence[int]) -> GaussianState:
    p = [int(x) for x in perm]
    if sorted(p) != list(range(1, g.n_parties + 1)):
        raise GaussianError(f"{perm} is not a permutation of 1..{g.n_parties}")
    slices = g.party_mode_slices()
    rows = [r for i in p for r in slices[i - 1]]
    modes = tuple(g.modes_per_party[i - 1] for i in p)
    return GaussianState(modes, g.cov[np.ix_(rows, rows)], g.mean[rows], validate=False)


# ---------------------------------------------------------------------------
# measures (all exact determinant arithmetic)


def _block_rows(g: GaussianState, parties: Sequence[int]) -> list[int]:
    slices = g.party_mode_slices()
    return [r for i in sorted(parties) for r in slices[i - 1]]


def nonproduct_value(g: GaussianState, part: SubRepartition) -> float:
    """1 - det(cov on the partition support) / prod over blocks det(cov block)."""
    if part.block_count < 2:
        raise GaussianError("non-product measure needs >= 2 blocks")
    if part.n != g.n_parties:
        raise GaussianError(f"partition over {part.n} parties, state has {g.n_parties}")
    support_rows = _block_rows(g, sorted(part.support))
    num = linalg.det(g.cov[np.ix_(support_rows, support_rows)])
    den = 1.0
    for block in part.blocks:
        rows = _block_rows(g, block)
        den *= linalg.det(g.cov[np.ix_(rows, rows)])
    return float(np.real(1.0 - num / den))


def _interleaved_to_stacked(m: int) -> np.ndarray:
    """Permutation matrix sending (q1,p1,...,qm,pm) to (q1..qm, p1..pm)."""
    p = np.zeros((2 * m, 2 * m))
    for i in range(1, m + 1):
        p[i - 1, 2 * i - 2] = 1.0
        p[m + i - 1, 2 * i - 1] = 1.0
    return p


def imaginarity_value(g: GaussianState) -> float:
    """Determinant ratio over the position/momentum blocks plus an indicator
    on the momentum mean."""
    m = g.n_modes
    p = _interleaved_to_stacked(m)
    gam = p @ g.cov @ p.T
    a = gam[:m, :m]          # position-position
    b = gam[m:, m:]          # momentum-momentum
    det_term = 1.0 - float(np.real(linalg.det(g.cov) / (linalg.det(a) * linalg.det(b))))
    mom_mean = (p @ g.mean)[m:]
    h = 0.0 if np.abs(mom_mean).sum() <= 1e-10 else 1.0
    return det_term + h


def coherence_value(g: GaussianState) -> float:
    """Single-mode-per-party Gaussian coherence from 2x2 diagonal blocks."""
    if any(m != 1 for m in g.modes_per_party):
        raise GaussianError("coherence measure requires single-mode parties")
    n = g.n_parties
    denom = 1.0
    for k in range(n):
        v = g.cov[2 * k:2 * k + 2, 2 * k:2 * k + 2]
        denom *= float(np.trace(v @ v))
    det_term = 1.0 - (2.0 ** n) * float(np.real(linalg.det(g.cov))) / denom
    h_sum = 0.0
    for k in range(n):
        w = g.mean[2 * k:2 * k + 2]
        h_sum += 0.0 if np.linalg.norm(w) <= 1e-10 else 1.0
    return det_term + h_sum


# ---------------------------------------------------------------------------
# random states and local channels


def g_random(rng: np.random.Generator, modes: int, mixedness: float = 0.5,
             modes_per_party: Sequence[int] | None = None) -> GaussianState:
    """Random state: symplectic rotation of a thermal spectrum.

    cov = S diag(nu_k I_2) S^T with nu_k = 1 + |N(0,1)| * mixedness and
    S = expm(Omega A) for a random symmetric A (so det S = 1).
    """
    m = int(modes)
    nus = 1.0 + np.abs(rng.normal(size=m)) * float(mixedness)
    d = np.diag(np.repeat(nus, 2))
    a = rng.normal(size=(2 * m, 2 * m), scale=0.4)
    a = (a + a.T) / 2.0
    s = expm(omega(m) @ a)
    cov = s @ d @ s.T
    grouping = tuple(modes_per_party) if modes_per_party is not None else (m,)
    if sum(grouping) != m:
        raise GaussianError("modes_per_party must sum to the mode count")
    return GaussianState(grouping, cov)


def g_incoherent_random(rng: np.random.Generator, n_parties: int,
                        hot: float = 2.0) -> GaussianState:
    """Free state of the single-mode coherence theory: thermal diagonal."""
    lam = 1.0 + rng.random(n_parties) * hot
    cov = np.diag(np.repeat(lam, 2))
    return GaussianState((1,) * n_parties, cov)


def _party_omega(m: int) -> np.ndarray:
    return omega(m)


def check_cp(x: np.ndarray, y: np.ndarray) -> float:
    """Smallest eigenvalue of Y + i*Omega - i*X Omega X^T (>= 0 required)."""
    m = x.shape[0] // 2
    om = _party_omega(m)
    mat = y + 1j * om - 1j * (x @ om @ x.T)
    mat = (mat + mat.conj().T) / 2.0
    return float(np.linalg.eigvalsh(mat).min())


def g_apply_local(g: GaussianState, maps: Sequence[tuple]) -> GaussianState:
    """Apply per-party Gaussian channels (X_i, Y_i, shift_i).

    cov -> X cov X^T + Y and mean -> X mean + shift with X, Y block-diagonal
    per party; each party map must satisfy the Gaussian CP condition.
    """
    if len(maps) != g.n_parties:
        raise GaussianError(f"need {g.n_parties} party maps, got {len(maps)}")
    xs, ys, shifts = [], [], []
    for i, (x, y, shift) in enumerate(maps):
        mi = g.modes_per_party[i]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shift = np.zeros(2 * mi) if shift is None else np.asarray(shift, dtype=float)
        if x.shape != (2 * mi, 2 * mi) or y.shape != (2 * mi, 2 * mi):
            raise GaussianError(f"party {i + 1} map has wrong shape")
        if check_cp(x, y) < -TOLS.gaussian_cp:
            raise GaussianError(f"party {i + 1} map violates the CP condition")
        xs.append(x); ys.append(y); shifts.append(shift)
    total = 2 * g.n_modes
    bx = np.zeros((total, total))
    by = np.zeros((total, total))
    at = 0
    for x, y in zip(xs, ys):
        k = x.shape[0]
        bx[at:at + k, at:at + k] = x
        by[at:at + k, at:at + k] = y
        at += k
    cov = bx @ g.cov @ bx.T + by
    mean = bx @ g.mean + np.concatenate(shifts)
    return GaussianState(g.modes_per_party, cov, mean)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def sample_local_gaussian(rng: np.random.Generator, g: GaussianState) -> list[tuple]:
    """Random CP-valid local channel per party (generic free operation of the
    non-product theory)."""
    maps = []
    for m in g.modes_per_party:
        x = rng.normal(size=(2 * m, 2 * m), scale=0.6)
        om = _party_omega(m)
        need = 1j * (x @ om @ x.T) - 1j * om
        need = (need + need.conj().T) / 2.0
        lift = max(0.0, float(np.linalg.eigvalsh(need).max()))
        y = (lift + 0.1 + rng.random()) * np.eye(2 * m)
        shift = rng.normal(size=2 * m)
        maps.append((x, y, shift))
    return maps


def sample_incoherent_local(rng: np.random.Generator, g: GaussianState) -> list[tuple]:
    """Attenuation + phase rotation per single-mode party; maps thermal
    diagonal states (with zero mean) to thermal diagonal states."""
    if any(m != 1 for m in g.modes_per_party):
        raise GaussianError("incoherent sampler requires single-mode parties")
    maps = []
    for _ in g.modes_per_party:
        eta = 0.2 + 0.8 * rng.random()
        x = math.sqrt(eta) * rotation(2 * math.pi * rng.random())
        y = (1.0 - eta) * np.eye(2)
        maps.append((x, y, np.zeros(2)))
    return maps


def sample_real_local(rng: np.random.Generator, g: GaussianState) -> list[tuple]:
    """Momentum-sign-preserving maps: in the (q..q, p..p) ordering X and Y are
    block diagonal with no q-p coupling and the shift has no momentum part."""
    maps = []
    for m in g.modes_per_party:
        p = _interleaved_to_stacked(m)
        eta = 0.3 + 0.7 * rng.random()
        sq = math.exp(rng.normal(scale=0.3))
        xq = math.sqrt(eta) * sq * np.eye(m)
        xp = math.sqrt(eta) / sq * np.eye(m)
        x = p.T @ np.block([[xq, np.zeros((m, m))], [np.zeros((m, m)), xp]]) @ p
        om = _party_omega(m)
        need = 1j * (x @ om @ x.T) - 1j * om
        need = (need + need.conj().T) / 2.0
        lift = max(0.0, float(np.linalg.eigvalsh(need).max()))
        y = (lift + 0.05) * np.eye(2 * m)
        shift = p.T @ np.concatenate([rng.normal(size=m), np.zeros(m)])
        maps.append((x, y, shift))
    return maps
