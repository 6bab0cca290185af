"""Dense full-Hilbert-space reference for small rings (N <= 12).

Basis index ``s = sum_x bit_x 2^(N-x)``: site 1 is the most significant
bit, bit 0 is spin up. Nothing here uses the one-magnon machinery, so it
can be used to check it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .chain import ChainSpec
from .channels import CoherentGate, KrausChannel, QdpEvent
from .harper import HarperParams
from .states import InitialState

MAX_SITES = 12
T_INDEPENDENCE_TOL = 1e-10
ENSEMBLE_LIMIT = 64


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DenseOperator:
    matrix: np.ndarray
    n_sites: int

    def __post_init__(self):
        _check_size(self.n_sites)
        if self.matrix.shape != (1 << self.n_sites, 1 << self.n_sites):
            raise ValueError(f"operator shape {self.matrix.shape} does not match {self.n_sites} sites")

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def unitary_residual(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return self.hermitian_residual() <= tol

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return self.unitary_residual() <= tol

    def commutator_norm(self, other: np.ndarray) -> float:
        return float(np.max(np.abs(self.matrix @ other - other @ self.matrix)))


def _check_size(n_sites: int) -> None:
    if n_sites > MAX_SITES:
        raise ValueError(f"dense oracle is limited to N <= {MAX_SITES}, got {n_sites}")
    if n_sites < 1:
        raise ValueError("need at least one site")


def _bits(n_sites: int) -> np.ndarray:
    """``bits[s, x-1]`` is 1 when site ``x`` is down in basis state ``s``."""
    s = np.arange(1 << n_sites)
    shifts = n_sites - np.arange(1, n_sites + 1)
    return (s[:, None] >> shifts[None, :]) & 1


def magnon_index(x: int, n_sites: int) -> int:
    return 1 << (n_sites - x)


def sector_indices(n_sites: int) -> list[int]:
    return [0] + [magnon_index(x, n_sites) for x in range(1, n_sites + 1)]


def total_sz(n_sites: int) -> np.ndarray:
    return np.diag((1 - 2 * _bits(n_sites)).sum(axis=1).astype(float))


def embed(op: np.ndarray, m: int, n_sites: int) -> DenseOperator:
    """``1 x ... x op (site m) x ... x 1``."""
    _check_size(n_sites)
    left = np.eye(1 << (m - 1))
    right = np.eye(1 << (n_sites - m))
    return DenseOperator(np.kron(np.kron(left, op), right), n_sites)


def _xxz_matrix(n_sites: int, anisotropy: float) -> np.ndarray:
    dim = 1 << n_sites
    bits = _bits(n_sites)
    z = 1 - 2 * bits
    h = np.zeros((dim, dim))
    states = np.arange(dim)
    for i in range(n_sites):
        j = (i + 1) % n_sites
        h[states, states] += -0.5 * anisotropy * z[:, i] * z[:, j]
        # sx sx + sy sy swaps an antiparallel pair with amplitude 2
        flip = bits[:, i] != bits[:, j]
        src = states[flip]
        dst = src ^ ((1 << (n_sites - 1 - i)) | (1 << (n_sites - 1 - j)))
        h[dst, src] += -1.0
    return h


def build_xxz(chain: ChainSpec) -> DenseOperator:
    """``H = -1/2 sum_i (sx sx + sy sy + Delta sz sz)`` on the periodic ring."""
    n_sites = chain.require_finite("build_xxz")
    _check_size(n_sites)
    return DenseOperator(_xxz_matrix(n_sites, chain.anisotropy), n_sites)


@lru_cache(maxsize=8)
def _spectrum(n_sites: int, anisotropy: float) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(_xxz_matrix(n_sites, anisotropy))


def kick_diagonal(params: HarperParams) -> np.ndarray:
    """Diagonal of ``exp(-i tau g sum_j cos(2 pi j eta / N) sz_j)``."""
    n_sites = params.size
    _check_size(n_sites)
    z = 1 - 2 * _bits(n_sites)
    c = np.cos(2.0 * np.pi * params.eta * np.arange(1, n_sites + 1) / n_sites)
    return np.exp(-1j * params.tau * params.g * (z @ c))


@lru_cache(maxsize=4)
def _floquet_matrix(params: HarperParams) -> np.ndarray:
    energies, vecs = _spectrum(params.size, 0.0)
    flight = (vecs * np.exp(-1j * params.tau * energies)) @ vecs.T
    u = kick_diagonal(params)[:, None] * flight
    u.setflags(write=False)
    return u


@lru_cache(maxsize=4)
def _floquet_spectrum(params: HarperParams) -> tuple[np.ndarray, np.ndarray] | None:
    """Eigenphases and unitary eigenvectors of the Floquet operator, or None.

    The Hermitian and anti-Hermitian parts of a unitary commute, so a generic
    real combination of them has a common eigenbasis. The result is checked
    against ``U`` and dropped if the check fails (accidental degeneracy).
    """
    u = _floquet_matrix(params)
    herm = 0.5 * (u + u.conj().T)
    anti = -0.5j * (u - u.conj().T)
    for weight in (3.7, 1.0 / 3.7, 13.1):
        _, vecs = np.linalg.eigh(herm + weight * anti)
        phases = np.einsum("ij,ij->j", vecs.conj(), u @ vecs)
        phases /= np.abs(phases)
        if np.max(np.abs(u @ vecs - vecs * phases)) <= 1e-12:
            return phases, vecs
    return None


def build_floquet(params: HarperParams) -> DenseOperator:
    """One kick period: free XY flight over ``tau``, then the kick."""
    _check_size(params.size)
    return DenseOperator(_floquet_matrix(params), params.size)


def sector_block(op: DenseOperator) -> np.ndarray:
    """Restriction to ``[|F>, |1>, ..., |N>]``."""
    idx = sector_indices(op.n_sites)
    return op.matrix[np.ix_(idx, idx)]


def evolve_pure(psi: np.ndarray, generator: DenseOperator, t: float) -> np.ndarray:
    """``exp(-i H t) psi`` through the (cached) eigendecomposition of ``H``."""
    if psi.shape != (generator.dim,):
        raise ValueError(f"state of shape {psi.shape} does not fit dimension {generator.dim}")
    energies, vecs = _eigh_cached(generator)
    return vecs @ (np.exp(-1j * energies * t) * (vecs.conj().T @ psi))


_EIGH_CACHE: dict[int, tuple[DenseOperator, tuple[np.ndarray, np.ndarray]]] = {}


def _eigh_cached(op: DenseOperator):
    hit = _EIGH_CACHE.get(id(op))
    if hit is not None and hit[0] is op:
        return hit[1]
    if not op.is_hermitian():
        raise ValueError("generator must be Hermitian")
    result = np.linalg.eigh(op.matrix)
    if len(_EIGH_CACHE) > 8:
        _EIGH_CACHE.clear()
    _EIGH_CACHE[id(op)] = (op, result)
    return result


def evolve_density(rho: np.ndarray, unitary: DenseOperator | np.ndarray) -> np.ndarray:
    u = unitary.matrix if isinstance(unitary, DenseOperator) else unitary
    if rho.shape != u.shape:
        raise ValueError(f"density of shape {rho.shape} does not match unitary {u.shape}")
    return u @ rho @ u.conj().T


def _n_sites_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise ValueError(f"dimension {dim} is not a power of two")
    _check_size(n)
    return n


def _apply_left(op: np.ndarray, tensor: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, tensor, axes=([1], [axis])), 0, axis)


def apply_local(op: np.ndarray, psi: np.ndarray, m: int) -> np.ndarray:
    n_sites = _n_sites_of(psi.shape[0])
    if not 1 <= m <= n_sites:
        raise ValueError(f"site {m} outside 1..{n_sites}")
    return _apply_left(op, psi.reshape([2] * n_sites), m - 1).reshape(-1)


def conjugate_local(op: np.ndarray, rho: np.ndarray, m: int) -> np.ndarray:
    """``op_m rho op_m^dagger`` without forming the embedded operator."""
    n_sites = _n_sites_of(rho.shape[0])
    if not 1 <= m <= n_sites:
        raise ValueError(f"site {m} outside 1..{n_sites}")
    t = rho.reshape([2] * (2 * n_sites))
    t = _apply_left(op, t, m - 1)
    t = _apply_left(op.conj(), t, n_sites + m - 1)
    return t.reshape(rho.shape)


def apply_kraus(rho: np.ndarray, channel: KrausChannel, m: int) -> np.ndarray:
    return sum(conjugate_local(op, rho, m) for op in channel.operators)


def apply_gate(psi: np.ndarray, gate: CoherentGate, m: int) -> np.ndarray:
    return apply_local(gate.matrix, psi, m)


def check_density(rho: np.ndarray, tol: float = 1e-9) -> None:
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise OracleError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise OracleError(f"density trace {np.trace(rho).real!r} != 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise OracleError("density matrix is not positive semidefinite")


def initial_vector(state: InitialState, n_sites: int) -> np.ndarray:
    _check_size(n_sites)
    psi = np.zeros(1 << n_sites, dtype=complex)
    psi[0] += state.vacuum_amplitude
    for site, amp in state.magnon_sources():
        if site > n_sites:
            raise ValueError(f"site {site} outside 1..{n_sites}")
        psi[magnon_index(site, n_sites)] += amp
    return psi


def _real_matvec(mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    # keeps the real eigenvector matrix real instead of upcasting it every call
    return mat @ vec.real + 1j * (mat @ vec.imag)


class _Dynamics:
    """Background evolution: continuous time for the XXZ ring, kick counts for Harper."""

    def __init__(self, model: ChainSpec | HarperParams):
        if isinstance(model, HarperParams):
            self.n_sites = model.size
            self.floquet = build_floquet(model).matrix
            self.spectrum = _floquet_spectrum(model)
            self.kicked = True
        else:
            self.n_sites = model.require_finite("the exact oracle")
            _check_size(self.n_sites)
            self.energies, self.vecs = _spectrum(self.n_sites, model.anisotropy)
            self.kicked = False

    def steps(self, dt: float) -> int:
        n = round(dt)
        if abs(n - dt) > 1e-12 or n < 0:
            raise ValueError(f"kicked evolution needs whole kick counts, got {dt!r}")
        return int(n)

    def vector(self, psi: np.ndarray, dt: float) -> np.ndarray:
        """Evolve forward (``dt > 0``) or backward (``dt < 0``)."""
        if self.kicked:
            n = self.steps(abs(dt)) * (1 if dt >= 0 else -1)
            if self.spectrum is not None:
                phases, vecs = self.spectrum
                return vecs @ (phases ** n * (vecs.conj().T @ psi))
            u = self.floquet if n >= 0 else self.floquet.conj().T
            for _ in range(abs(n)):
                psi = u @ psi
            return psi
        coeff = np.exp(-1j * self.energies * dt) * _real_matvec(self.vecs.T, psi)
        return _real_matvec(self.vecs, coeff)

    def density(self, rho: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0:
            return rho
        if self.kicked and self.spectrum is not None:
            phases, vecs = self.spectrum
            u = (vecs * phases ** self.steps(dt)) @ vecs.conj().T
        elif self.kicked:
            u = np.linalg.matrix_power(self.floquet, self.steps(dt))
        else:
            u = (self.vecs * np.exp(-1j * self.energies * dt)) @ self.vecs.T
        return evolve_density(rho, u)


Model = Union[ChainSpec, HarperParams]


@dataclass
class Scenario:
    """Background model, initial state, time-ordered QDPs and the overlap time.

    Epochs are times for a :class:`ChainSpec` and kick counts for
    :class:`HarperParams`. ``final_time`` defaults to the last epoch.
    """

    model: Model
    state: InitialState
    events: Sequence[QdpEvent] = field(default_factory=list)
    final_time: float | None = None


def _final_times(scenario: Scenario, last: float) -> tuple[float, float]:
    t1 = last if scenario.final_time is None else scenario.final_time
    if t1 < last:
        raise ValueError("final time precedes the last QDP")
    extra = 3 if isinstance(scenario.model, HarperParams) else 1.7
    return t1, t1 + extra


def _ensemble_density(ensemble: list[np.ndarray]) -> np.ndarray:
    return sum(np.outer(v, v.conj()) for v in ensemble)


def oracle_echo(scenario: Scenario, check_final_time: bool = True,
                check_psd: bool = False) -> float:
    """``<Psi(t)| rho~(t) |Psi(t)>`` from dense evolution of the whole chain.

    ``rho~`` is carried as an ensemble of unnormalised pure states
    ``sum_k |phi_k><phi_k|`` (one branch per Kraus operator) and becomes a
    dense density matrix once the ensemble outgrows ``ENSEMBLE_LIMIT``.
    With ``check_final_time`` the overlap is taken at two times after the
    last QDP and must agree within 1e-10.
    """
    dyn = _Dynamics(scenario.model)
    n_sites = dyn.n_sites
    scenario.state.check_chain(ChainSpec(n_sites))
    epochs = [e.epoch for e in scenario.events]
    if any(b < a for a, b in zip(epochs, epochs[1:])):
        raise ValueError("QDP events must be time-ordered")
    psi0 = initial_vector(scenario.state, n_sites)

    ensemble: list[np.ndarray] | None = [psi0]
    rho: np.ndarray | None = None
    now = 0.0
    for ev in scenario.events:
        if not 1 <= ev.site <= n_sites:
            raise ValueError(f"QDP site {ev.site} outside 1..{n_sites}")
        dt = ev.epoch - now
        now = ev.epoch
        if ensemble is not None:
            ensemble = [dyn.vector(v, dt) for v in ensemble]
            if isinstance(ev.kind, CoherentGate):
                ensemble = [apply_gate(v, ev.kind, ev.site) for v in ensemble]
            else:
                ensemble = [apply_local(op, v, ev.site)
                            for v in ensemble for op in ev.kind.operators]
            if len(ensemble) > ENSEMBLE_LIMIT:
                rho, ensemble = _ensemble_density(ensemble), None
        else:
            rho = dyn.density(rho, dt)
            if isinstance(ev.kind, CoherentGate):
                rho = conjugate_local(ev.kind.matrix, rho, ev.site)
            else:
                rho = apply_kraus(rho, ev.kind, ev.site)
    if check_psd:
        check_density(rho if rho is not None else _ensemble_density(ensemble))
    else:
        trace = (np.trace(rho).real if rho is not None
                 else sum(np.vdot(v, v).real for v in ensemble))
        if abs(trace - 1.0) > 1e-9:
            raise OracleError(f"trace {trace!r} != 1 after the QDPs")

    def overlap(t_final: float) -> float:
        ref = dyn.vector(psi0, t_final)
        # <ref| U rho~ U^dagger |ref> with U the evolution since the last QDP
        back = dyn.vector(ref, -(t_final - now))
        if ensemble is not None:
            return float(sum(abs(np.vdot(back, v)) ** 2 for v in ensemble))
        return float(np.vdot(back, rho @ back).real)

    t1, t2 = _final_times(scenario, now)
    value = overlap(t1)
    if check_final_time:
        other = overlap(t2)
        if abs(other - value) > T_INDEPENDENCE_TOL:
            raise OracleError(f"echo depends on the final time: {value!r} vs {other!r}")
    return value
