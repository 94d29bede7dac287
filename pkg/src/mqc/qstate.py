"""Finite-dimensional multipartite density matrices.

States carry an explicit tuple of local dimensions (1-based subsystem indices
everywhere, matching the partition grammar).  All operations are pure; random
sampling takes an explicit numpy Generator so seeded runs are reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .config import TOLS
from .partitions import SubRepartition


class StateError(ValueError):
    """Violated density-state or channel invariant."""


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; identical seeds give identical sample streams."""
    return np.random.default_rng(int(seed))


@dataclass(frozen=True)
class DensityState:
    """Density matrix over a tensor factorization given by dims."""

    dims: tuple[int, ...]
    data: np.ndarray = field(repr=False)

    def __init__(self, dims: Sequence[int], data, validate: bool = True):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise StateError(f"invalid dims {dims}")
        mat = np.asarray(data, dtype=np.complex128)
        total = int(np.prod(dims))
        if mat.shape != (total, total):
            raise StateError(f"matrix shape {mat.shape} does not match dims {dims}")
        if validate:
            defect = linalg.herm_defect(mat)
            if defect > TOLS.state_hermitian:
                raise StateError(f"state not Hermitian: defect {defect:.2e}")
            mat = (mat + mat.conj().T) / 2.0
            tr = float(np.real(np.trace(mat)))
            if abs(tr - 1.0) > TOLS.state_trace:
                raise StateError(f"state trace {tr} differs from 1")
            w = np.linalg.eigvalsh(mat)
            if w.min() < -TOLS.state_min_eig:
                raise StateError(f"state has negative eigenvalue {w.min():.2e}")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", mat)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))


def make_state(dims: Sequence[int], matrix) -> DensityState:
    return DensityState(dims, matrix)


def pure_state(vec, dims: Sequence[int]) -> DensityState:
    v = np.asarray(vec, dtype=np.complex128).ravel()
    v = v / np.linalg.norm(v)
    return DensityState(dims, np.outer(v, v.conj()))


def ghz(n: int, d: int = 2) -> DensityState:
    """Projector onto (|0..0> + |1..1> + ... + |d-1..d-1>)/sqrt(d)."""
    dim = d ** n
    v = np.zeros(dim, dtype=np.complex128)
    step = (dim - 1) // (d - 1) if d > 1 else 0
    for j in range(d):
        v[j * step] = 1.0
    return pure_state(v, (d,) * n)


def w_state(n: int) -> DensityState:
    v = np.zeros(2 ** n, dtype=np.complex128)
    for i in range(n):
        v[1 << (n - 1 - i)] = 1.0
    return pure_state(v, (2,) * n)


def bell() -> DensityState:
    """(|00> + |11>)/sqrt(2) projector."""
    return ghz(2, 2)


def max_mixed(dims: Sequence[int]) -> DensityState:
    total = int(np.prod(tuple(dims)))
    return DensityState(tuple(dims), np.eye(total) / total)


def product(*states: DensityState) -> DensityState:
    dims: tuple[int, ...] = ()
    mat = np.array([[1.0 + 0j]])
    for s in states:
        dims = dims + s.dims
        mat = np.kron(mat, s.data)
    return DensityState(dims, mat)


# ---------------------------------------------------------------------------
# index plumbing


def _as_tensor(rho: DensityState) -> np.ndarray:
    return rho.data.reshape(rho.dims + rho.dims)


def _check_indices(rho: DensityState, idx: Iterable[int]) -> list[int]:
    out = sorted(set(int(i) for i in idx))
    if not out:
        raise StateError("empty subsystem selection")
    if out[0] < 1 or out[-1] > rho.n:
        raise StateError(f"subsystem index out of range 1..{rho.n}: {out}")
    return out


def partial_trace(rho: DensityState, keep: Iterable[int]) -> DensityState:
    """Reduce to the listed subsystems (original ordering preserved)."""
    keep_idx = _check_indices(rho, keep)
    n = rho.n
    drop = [i for i in range(1, n + 1) if i not in keep_idx]
    if not drop:
        return rho
    t = _as_tensor(rho)
    # contract dropped row/col axes pairwise
    for count, i in enumerate(sorted(drop)):
        ax = i - 1 - count  # axes shrink as we trace
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    new_dims = tuple(rho.dims[i - 1] for i in keep_idx)
    total = int(np.prod(new_dims))
    return DensityState(new_dims, t.reshape(total, total))


def partial_transpose(rho: DensityState, side: Iterable[int]) -> np.ndarray:
    """Entry-wise transpose on the chosen factors; returns a Hermitian matrix
    (generally not PSD, so a plain array rather than a state)."""
    side_idx = _check_indices(rho, side)
    if len(side_idx) >= rho.n:
        # transposing every factor is the full transpose; still meaningful
        if len(side_idx) > rho.n:
            raise StateError("side exceeds subsystem count")
    t = _as_tensor(rho)
    n = rho.n
    perm = list(range(2 * n))
    for i in side_idx:
        perm[i - 1], perm[n + i - 1] = perm[n + i - 1], perm[i - 1]
    out = t.transpose(perm).reshape(rho.dim, rho.dim)
    return out


def permute_subsystems(rho: DensityState, perm: Sequence[int]) -> DensityState:
    """Reorder factors: output factor i is input factor perm[i] (1-based)."""
    p = [int(x) for x in perm]
    if sorted(p) != list(range(1, rho.n + 1)):
        raise StateError(f"{perm} is not a permutation of 1..{rho.n}")
    t = _as_tensor(rho)
    axes = [x - 1 for x in p] + [rho.n + x - 1 for x in p]
    new_dims = tuple(rho.dims[x - 1] for x in p)
    return DensityState(new_dims, t.transpose(axes).reshape(rho.dim, rho.dim))


def group_by(rho: DensityState, part: SubRepartition) -> DensityState:
    """Reduce to the partition's support and merge each block into one factor.

    Blocks are ordered by their minimum element, elements ascending inside a
    block; measure values on grouped states depend on using this bookkeeping
    consistently, not on the convention itself.
    """
    if part.n != rho.n:
        raise StateError(f"partition over {part.n} parties, state has {rho.n}")
    support = sorted(part.support)
    reduced = partial_trace(rho, support)
    # positions of kept factors inside the reduced state
    pos = {orig: i + 1 for i, orig in enumerate(support)}
    order = [pos[i] for block in part.blocks for i in block]
    reordered = permute_subsystems(reduced, order)
    new_dims = tuple(int(np.prod([rho.dims[i - 1] for i in block])) for block in part.blocks)
    return DensityState(new_dims, reordered.data)


def entropy(rho: DensityState, kind: str = "von-neumann", q: float | None = None) -> float:
    """Block entropies in bits: von Neumann, Tsallis-q (q > 1), or purity."""
    if kind == "purity":
        return rho.purity()
    w = np.linalg.eigvalsh(rho.data)
    w = w[w > TOLS.entropy_eig_floor]
    if kind == "von-neumann":
        return float(-(w * np.log2(w)).sum())
    if kind == "tsallis":
        if q is None or q <= 1:
            raise StateError("tsallis entropy needs q > 1")
        return float((np.sum(w ** q) - 1.0) / (1.0 - q))
    raise StateError(f"unknown entropy kind {kind!r}")


# ---------------------------------------------------------------------------
# channels


CHANNEL_TAGS = ("local-product", "incoherent-local", "real-local", "steering-free")


@dataclass(frozen=True)
class KrausChannel:
    """Kraus channel with per-site structure.

    site_ops maps a subsystem index (1-based) to its local Kraus list; sites
    absent from the map are acted on by the identity.  The global Kraus family
    is the tensor-product closure over sites, so completeness per site implies
    completeness of the whole.
    """

    dims: tuple[int, ...]
    site_ops: dict[int, tuple[np.ndarray, ...]]
    tag: str

    def __init__(self, dims: Sequence[int], site_ops: dict[int, Sequence], tag: str):
        dims = tuple(int(d) for d in dims)
        if tag not in CHANNEL_TAGS:
            raise StateError(f"unknown channel tag {tag!r}")
        clean: dict[int, tuple[np.ndarray, ...]] = {}
        for site, ops in site_ops.items():
            site = int(site)
            if site < 1 or site > len(dims):
                raise StateError(f"site {site} out of range")
            d = dims[site - 1]
            mats = tuple(np.asarray(k, dtype=np.complex128) for k in ops)
            for k in mats:
                if k.shape != (d, d):
                    raise StateError(f"Kraus shape {k.shape} wrong for site dim {d}")
            total = sum(k.conj().T @ k for k in mats)
            if np.abs(total - np.eye(d)).max() > TOLS.kraus_complete:
                raise StateError(f"site {site} Kraus set is not trace preserving")
            if tag == "incoherent-local":
                for k in mats:
                    if (np.abs(k) > 1e-12).sum(axis=0).max() > 1:
                        raise StateError("incoherent Kraus needs <= 1 entry per column")
            if tag == "real-local":
                for k in mats:
                    if np.abs(k.imag).max() > 1e-12:
                        raise StateError("real channel requires real Kraus entries")
            clean[site] = mats
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "site_ops", clean)
        object.__setattr__(self, "tag", tag)

    def kraus_ops(self) -> list[np.ndarray]:
        """Materialized global Kraus family (small systems only)."""
        n = len(self.dims)
        per_site = []
        for site in range(1, n + 1):
            per_site.append(self.site_ops.get(site, (np.eye(self.dims[site - 1]),)))
        return [linalg.kron_all(combo) for combo in itertools.product(*per_site)]


def apply_channel(rho: DensityState, ch: KrausChannel) -> DensityState:
    if ch.dims != rho.dims:
        raise StateError(f"channel dims {ch.dims} do not match state dims {rho.dims}")
    mat = rho.data
    n = rho.n
    for site, ops in sorted(ch.site_ops.items()):
        left = int(np.prod(rho.dims[: site - 1])) or 1
        right = int(np.prod(rho.dims[site:])) or 1
        acc = np.zeros_like(mat)
        for k in ops:
            big = np.kron(np.kron(np.eye(left), k), np.eye(right))
            acc += big @ mat @ big.conj().T
        mat = acc
    tr = float(np.real(np.trace(mat)))
    if abs(tr - 1.0) > TOLS.kraus_complete:
        raise StateError(f"channel did not preserve trace: {tr}")
    return DensityState(rho.dims, mat / tr)


def steering_free_channel(dims: Sequence[int], untrusted: Sequence[int],
                          site_ops: dict[int, Sequence]) -> KrausChannel:
    """Channel acting as the identity on every untrusted subsystem."""
    untrusted = set(int(i) for i in untrusted)
    if untrusted & set(site_ops):
        raise StateError("steering-free channel cannot touch untrusted sites")
    return KrausChannel(dims, site_ops, "steering-free")


# ---------------------------------------------------------------------------
# samplers


def haar_pure(rng: np.random.Generator, dims: Sequence[int]) -> DensityState:
    total = int(np.prod(tuple(dims)))
    v = rng.normal(size=total) + 1j * rng.normal(size=total)
    return pure_state(v, tuple(dims))


def ginibre_mixed(rng: np.random.Generator, dims: Sequence[int],
                  rank: int | None = None) -> DensityState:
    total = int(np.prod(tuple(dims)))
    r = total if rank is None else int(rank)
    g = rng.normal(size=(total, r)) + 1j * rng.normal(size=(total, r))
    m = g @ g.conj().T
    return DensityState(tuple(dims), m / np.real(np.trace(m)))


def _random_partition_into_k(rng: np.random.Generator, n: int, k: int) -> list[list[int]]:
    if not (1 <= k <= n):
        raise StateError(f"cannot split {n} parties into {k} groups")
    labels = list(rng.permutation(n) + 1)
    groups = [[labels.pop()] for _ in range(k)]
    for x in labels:
        groups[rng.integers(0, k)].append(x)
    return [sorted(g) for g in groups]


def k_separable_pure(rng: np.random.Generator, dims: Sequence[int], k: int) -> DensityState:
    """Haar vector per block of a uniformly drawn k-partition, reassembled in
    the original subsystem order."""
    dims = tuple(dims)
    n = len(dims)
    groups = _random_partition_into_k(rng, n, k)
    vec = np.array([1.0 + 0j])
    order: list[int] = []
    for g in groups:
        block_dim = int(np.prod([dims[i - 1] for i in g]))
        v = rng.normal(size=block_dim) + 1j * rng.normal(size=block_dim)
        vec = np.kron(vec, v / np.linalg.norm(v))
        order.extend(g)
    state = pure_state(vec, tuple(dims[i - 1] for i in order))
    # permutation sending current order back to 1..n
    inv = [order.index(i) + 1 for i in range(1, n + 1)]
    return permute_subsystems(state, inv)


def separable_mixed(rng: np.random.Generator, dims: Sequence[int],
                    terms: int = 6) -> DensityState:
    """Convex mixture of fully product pure states."""
    dims = tuple(dims)
    w = rng.dirichlet(np.ones(terms))
    mat = np.zeros((int(np.prod(dims)),) * 2, dtype=np.complex128)
    for i in range(terms):
        mat += w[i] * k_separable_pure(rng, dims, len(dims)).data
    return DensityState(dims, mat)


def _random_cptp_site(rng: np.random.Generator, d: int, n_ops: int = 3) -> list[np.ndarray]:
    ops = [rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(n_ops)]
    s = sum(k.conj().T @ k for k in ops)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v * (1.0 / np.sqrt(w))) @ v.conj().T
    return [k @ s_inv_half for k in ops]


def _random_incoherent_site(rng: np.random.Generator, d: int) -> list[np.ndarray]:
    """Mixture of an incoherent unitary (permutation times phases), a partial
    dephasing pair, and a classical reset; every Kraus operator has at most
    one non-zero entry per column, so diagonal states stay diagonal."""
    w = rng.dirichlet(np.ones(3))
    ops: list[np.ndarray] = []
    # permutation * phases
    perm = rng.permutation(d)
    u = np.zeros((d, d), dtype=np.complex128)
    phases = np.exp(2j * np.pi * rng.random(d))
    for c in range(d):
        u[perm[c], c] = phases[c]
    ops.append(np.sqrt(w[0]) * u)
    # partial dephasing: identity + diagonal phases
    half = 0.5 * w[1]
    ops.append(np.sqrt(half) * np.eye(d, dtype=np.complex128))
    ops.append(np.sqrt(half) * np.diag(np.exp(2j * np.pi * rng.random(d))))
    # classical reset: one Kraus per (column, target) pair
    targets = rng.integers(0, d, size=d)
    for c in range(d):
        k = np.zeros((d, d), dtype=np.complex128)
        k[targets[c], c] = 1.0
        ops.append(np.sqrt(w[2]) * k)
    return ops


def _random_real_site(rng: np.random.Generator, d: int, n_ops: int = 3) -> list[np.ndarray]:
    ops = [rng.normal(size=(d, d)) for _ in range(n_ops)]
    s = sum(k.T @ k for k in ops)
    w, v = np.linalg.eigh(s)
    s_inv_half = (v * (1.0 / np.sqrt(w))) @ v.T
    return [k @ s_inv_half for k in ops]


def sample_channel(rng: np.random.Generator, family: str, dims: Sequence[int],
                   untrusted: Sequence[int] = ()) -> KrausChannel:
    """Random channel from one of the structure-tagged families."""
    dims = tuple(dims)
    n = len(dims)
    if family == "local-product":
        ops = {i: _random_cptp_site(rng, dims[i - 1]) for i in range(1, n + 1)}
        return KrausChannel(dims, ops, "local-product")
    if family == "incoherent-local":
        ops = {i: _random_incoherent_site(rng, dims[i - 1]) for i in range(1, n + 1)}
        return KrausChannel(dims, ops, "incoherent-local")
    if family == "real-local":
        ops = {i: _random_real_site(rng, dims[i - 1]) for i in range(1, n + 1)}
        return KrausChannel(dims, ops, "real-local")
    if family == "steering-free":
        trusted = [i for i in range(1, n + 1) if i not in set(untrusted)]
        ops = {i: _random_cptp_site(rng, dims[i - 1]) for i in trusted}
        return steering_free_channel(dims, untrusted, ops)
    raise StateError(f"unknown channel family {family!r}")


def sample(rng: np.random.Generator, what: str, dims: Sequence[int], **kw):
    """Dispatcher over the sampler families (deterministic per seed)."""
    if what == "haar-pure":
        return haar_pure(rng, dims)
    if what == "ginibre-mixed":
        return ginibre_mixed(rng, dims, kw.get("rank"))
    if what == "k-separable-pure":
        return k_separable_pure(rng, dims, kw["k"])
    if what == "channel":
        return sample_channel(rng, kw["family"], dims, kw.get("untrusted", ()))
    raise StateError(f"unknown sample family {what!r}")


def werner(eta: float) -> DensityState:
    """Two-qubit Werner state: eta * singlet + (1 - eta) * I/4."""
    psi = np.array([0, 1, -1, 0], dtype=np.complex128) / math.sqrt(2)
    singlet = np.outer(psi, psi.conj())
    return DensityState((2, 2), eta * singlet + (1 - eta) * np.eye(4) / 4)
