"""Brute-force time-bin reference: the full cavity + waveguide chain.

Every waveguide bin is an explicit bosonic mode.  Bin ``n`` covers
``[t_n - dt/2, t_n + dt/2]`` and holds the input amplitude ``xi_n sqrt(dt)``;
it interacts with the cavity once, through

    H_n = lam_n b^dag a + h.c. + delta_a n_a + delta_b n_b + H_NL
          + i sqrt(gamma/dt) (a^dag w_n - w_n^dag a) - i (gamma_L/2) (n_a + n_b) - i (gamma_c/2) n_c

and the state is advanced by ``exp(-i H_n h_n)`` (sparse Krylov action) with
``h_n = dt`` except for the two edge bins, which last ``dt/2`` so the chain
spans the same ``[t_0, t_{N-1}]`` as the sector propagator.
Loss is the non-Hermitian term, so the vector norm is the zero-loss weight.
Only one excitation sector (0, 1 or 2 photons, ``c`` counting as two) is
built, which keeps N = 64 under ~2300 states.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .control import CavityConfig
from .dynamics import HamiltonianSpec, InputSpec
from .errors import InvalidArgumentError
from .wavepacket import check_same_grid

MAX_BINS = 64
A, B, C = 0, 1, 2
FIRST_BIN = 3


def _weight(mode):
    return 2 if mode == C else 1


def sector_basis(photons: int, n_bins: int, with_c: bool) -> list:
    """Multisets of mode indices with total excitation ``photons``."""
    modes = [A, B] + ([C] if with_c else []) + list(range(FIRST_BIN, FIRST_BIN + n_bins))
    basis = []
    for size in range(photons + 1):
        for combo in itertools.combinations_with_replacement(modes, size):
            if sum(_weight(m) for m in combo) == photons:
                basis.append(combo)
    return basis


@dataclass
class ReferenceState:
    """Final chain state.  ``amplitude(state)`` looks up a basis multiset."""

    basis: list
    vector: np.ndarray
    index: dict
    dt: float
    n_bins: int

    def amplitude(self, combo) -> complex:
        i = self.index.get(tuple(sorted(combo)))
        return 0j if i is None else complex(self.vector[i])

    @property
    def norm(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)

    def one_out(self) -> np.ndarray:
        """Output density xi_out(t_n) of the single photon in the waveguide."""
        return np.array([self.amplitude((FIRST_BIN + n,)) for n in range(self.n_bins)]) \
            / math.sqrt(self.dt)

    def cavity(self, *combos) -> np.ndarray:
        return np.array([self.amplitude(c) for c in combos])

    def two_out(self) -> np.ndarray:
        """Symmetric two-photon density S(t_m, t_n), normalized like the sector record."""
        n = self.n_bins
        s = np.zeros((n, n), dtype=complex)
        for m in range(n):
            for k in range(m, n):
                amp = self.amplitude((FIRST_BIN + m, FIRST_BIN + k))
                s[m, k] = s[k, m] = amp / (self.dt if m == k else math.sqrt(2) * self.dt)
        return s

    def one_out_one_cav(self) -> np.ndarray:
        """(N, 2): photon out in bin m, one photon in a / b (density in t_m)."""
        n = self.n_bins
        out = np.zeros((n, 2), dtype=complex)
        for m in range(n):
            for j, mode in enumerate((A, B)):
                out[m, j] = self.amplitude((mode, FIRST_BIN + m)) / math.sqrt(self.dt)
        return out


def _hop(state, src, dst):
    """Apply ``dst^dag src``; returns (new_state, coefficient) or None."""
    n_src = state.count(src)
    if n_src == 0:
        return None
    lst = list(state)
    lst.remove(src)
    n_dst = lst.count(dst)
    lst.append(dst)
    return tuple(sorted(lst)), math.sqrt(n_src * (n_dst + 1))


def _static_terms(basis, index, cfg: CavityConfig):
    """Diagonal pieces (per-bin scalars times fixed matrices) and fixed couplings."""
    dim = len(basis)
    n_a = np.array([s.count(A) for s in basis], float)
    n_b = np.array([s.count(B) for s in basis], float)
    n_c = np.array([s.count(C) for s in basis], float)
    diag_nl = np.zeros(dim)
    if cfg.order == 3:
        diag_nl = cfg.chi * (n_a * n_b + 0.25 * n_a * (n_a - 1) + 0.25 * n_b * (n_b - 1))
    loss = -0.5j * (cfg.gamma_L * (n_a + n_b) + cfg.gamma_c * n_c)
    rows, cols, vals = [], [], []
    if cfg.order == 2 and cfg.chi:
        for i, s in enumerate(basis):
            if s.count(B) >= 2:
                lst = list(s)
                lst.remove(B)
                lst.remove(B)
                nb = s.count(B)
                j = index[tuple(sorted(lst + [C]))]
                coef = cfg.chi * math.sqrt(nb * (nb - 1))
                rows += [j, i]
                cols += [i, j]
                vals += [coef, coef]
    fixed = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    fixed = fixed + sp.diags(diag_nl + loss)
    # b^dag a hopping (its adjoint is added with the conjugate rate)
    rows, cols, vals = [], [], []
    for i, s in enumerate(basis):
        hop = _hop(s, A, B)
        if hop:
            rows.append(index[hop[0]])
            cols.append(i)
            vals.append(hop[1])
    ba = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    return fixed, ba, sp.diags(n_a), sp.diags(n_b)


def _bin_coupling(basis, index, n):
    """Matrix of ``a^dag w_n`` in the sector basis."""
    dim = len(basis)
    rows, cols, vals = [], [], []
    w = FIRST_BIN + n
    for i, s in enumerate(basis):
        hop = _hop(s, w, A)
        if hop:
            rows.append(index[hop[0]])
            cols.append(i)
            vals.append(hop[1])
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)


def initial_vector(basis, index, inp: InputSpec, n_bins: int, dt: float, with_c: bool):
    vec = np.zeros(len(basis), dtype=complex)
    pc = inp.photon_count
    if pc == 0:
        vec[index[()]] = 1.0
        return vec
    if inp.packet is None:
        cav = np.asarray(inp.cavity, dtype=complex)
        if pc == 1:
            vec[index[(A,)]] = cav[0]
            vec[index[(B,)]] = cav[1]
        else:
            combos = [(A, A), (A, B), (B, B)] + ([(C,)] if with_c else [])
            if len(cav) != len(combos):
                raise InvalidArgumentError("two-photon cavity state has the wrong length")
            for combo, amp in zip(combos, cav):
                vec[index[combo]] = amp
        return vec
    c = inp.packet.amp * math.sqrt(dt)
    if pc == 1:
        for n in range(n_bins):
            vec[index[(FIRST_BIN + n,)]] = c[n]
    else:
        # (A^dag)^2 |0> / sqrt(2) in the occupation basis
        for m in range(n_bins):
            vec[index[(FIRST_BIN + m, FIRST_BIN + m)]] = c[m] ** 2
            for k in range(m + 1, n_bins):
                vec[index[(FIRST_BIN + m, FIRST_BIN + k)]] = math.sqrt(2) * c[m] * c[k]
    return vec


def propagate_reference(h: HamiltonianSpec, inp: InputSpec,
                        small_N: int = MAX_BINS) -> ReferenceState:
    """Exact time-bin evolution of the whole chain for up to ``small_N`` bins.

    ``small_N`` defaults to 64; larger values are meant for convergence
    studies only (the two-photon basis grows as N^2 / 2).
    """
    cfg, sched = h.config, h.schedule
    grid = sched.grid
    if inp.packet is not None:
        check_same_grid(grid, inp.packet.grid)
    n_bins, dt = grid.n_bins, grid.dt
    if n_bins > small_N:
        raise InvalidArgumentError(f"reference chain limited to {small_N} bins, got {n_bins}")
    with_c = cfg.order == 2
    basis = sector_basis(inp.photon_count, n_bins, with_c)
    index = {s: i for i, s in enumerate(basis)}
    vec = initial_vector(basis, index, inp, n_bins, dt, with_c)
    fixed, ba, num_a, num_b = _static_terms(basis, index, cfg)
    ab = ba.getH()
    rate = math.sqrt(cfg.gamma / dt)
    for n in range(n_bins):
        lam = sched.lam[n]
        ham = (fixed + lam * ba + np.conj(lam) * ab
               + sched.delta_a[n] * num_a + sched.delta_b[n] * num_b)
        cpl = _bin_coupling(basis, index, n)
        ham = ham + 1j * rate * (cpl - cpl.getH())
        span = 0.5 * dt if n in (0, n_bins - 1) else dt
        vec = expm_multiply(-1j * span * ham.tocsr(), vec)
    return ReferenceState(basis, vec, index, dt, n_bins)
