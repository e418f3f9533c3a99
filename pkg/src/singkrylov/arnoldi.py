"""Householder Arnoldi process with breakdown detection.

Basis vectors are q_j = s_j P_1 ... P_j e_j, where P_j are Householder
reflectors and the signs s_j make q_1 = v / ||v|| and every subdiagonal
entry of H nonnegative (the same normalization as Gram-Schmidt Arnoldi).
"""

from dataclasses import dataclass

import numpy as np

from .dense import _reflector, as_matrix, as_vector, pivoted_qr, spectral_norm

DEFAULT_BREAKDOWN_TOL = 1e-12


class ArnoldiError(RuntimeError):
    pass


@dataclass(frozen=True)
class Breakdown:
    """Breakdown at step k.

    kind is "I" when rank(H_kk) = k - 1 (no solution is determined) and "II"
    when rank(H_kk) = k. Exhausting the space (k = n) is always reported as
    "II" with ``exhausted`` set, whatever the rank of H_nn.
    """

    step: int
    kind: str
    rank_hkk: int
    subdiagonal: float
    exhausted: bool = False


class ArnoldiState:
    """Arnoldi decomposition A Q_k = Q_{k+1} H_{k+1,k} built one step at a time."""

    def __init__(self, a, q1, w1, s1, breakdown_tol, a_norm):
        n = a.shape[0]
        self.a = a
        self.n = n
        self.a_norm = a_norm
        self.breakdown_tol = breakdown_tol
        self.k = 0
        self.breakdown = None
        self._reflectors = np.zeros((n, n))
        self._reflectors[:, 0] = w1
        self._signs = np.ones(n + 1)
        self._signs[0] = s1
        self._q = np.zeros((n, n))
        self._q[:, 0] = q1
        self._nq = 1
        self._h = np.zeros((n + 1, n))

    @property
    def running(self):
        return self.breakdown is None

    @property
    def q(self):
        """Orthonormal basis vectors computed so far (k + 1 of them, or n)."""
        return self._q[:, :self._nq]

    def basis(self, k=None):
        k = self.k if k is None else k
        return self._q[:, :k]

    def hessenberg(self):
        """Extended Hessenberg matrix H_{k+1,k}."""
        return self._h[:self.k + 1, :self.k].copy()

    def _qvec(self, j):
        # P_1 ... P_j e_j, j counted from 0
        e = np.zeros(self.n)
        e[j] = 1.0
        for i in range(j, -1, -1):
            w = self._reflectors[:, i]
            e -= 2.0 * w * (w @ e)
        return e


def arnoldi_init(a, start_vector, breakdown_tol=DEFAULT_BREAKDOWN_TOL, a_norm=None):
    """Start the Arnoldi process from ``start_vector``.

    Raises ``ArnoldiError`` when ``||start_vector|| <= breakdown_tol``.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"Arnoldi needs a square matrix, got {a.shape}")
    v = as_vector(start_vector, "start vector")
    if v.shape[0] != a.shape[0]:
        raise ValueError(f"start vector has length {v.shape[0]}, expected {a.shape[0]}")
    if np.linalg.norm(v) <= breakdown_tol:
        raise ArnoldiError("zero start vector")
    w, alpha = _reflector(v)
    sign = 1.0 if alpha >= 0 else -1.0
    q1 = v / abs(alpha)
    if a_norm is None:
        a_norm = spectral_norm(a)
    return ArnoldiState(a, q1, w, sign, breakdown_tol, a_norm)


def arnoldi_step(state):
    """Append one column of H and one basis vector; detect breakdown.

    Breakdown is flagged when the new subdiagonal entry is at most
    ``breakdown_tol * ||A||`` or when k reaches n. The state is updated in
    place and returned.
    """
    if not state.running:
        raise ArnoldiError(f"cannot step: broken down at step {state.breakdown.step}")
    n, j = state.n, state.k  # j = index of the column being added (0-based)
    z = state.a @ state._q[:, j]
    for i in range(j + 1):
        w = state._reflectors[:, i]
        z -= 2.0 * w * (w @ z)

    col = state._h[:, j]
    col[:j + 1] = z[:j + 1] * state._signs[:j + 1]
    if j + 1 < n:
        w, alpha = _reflector(z[j + 1:])
        state._reflectors[j + 1:, j + 1] = w
        sign = 1.0 if alpha >= 0 else -1.0
        state._signs[j + 1] = sign
        sub = abs(alpha)
        col[j + 1] = sub
        state._q[:, j + 1] = sign * state._qvec(j + 1)
        state._nq = j + 2
        exhausted = False
    else:
        sub = 0.0
        exhausted = True
    state.k = j + 1

    if exhausted or sub <= state.breakdown_tol * state.a_norm:
        k = state.k
        hkk = state._h[:k, :k]
        tol = state.breakdown_tol * state.a_norm
        max_col = float(np.linalg.norm(hkk, axis=0).max()) if k else 0.0
        if max_col <= tol:
            rank = 0
        else:
            rank = pivoted_qr(hkk, eta=tol / max_col)[3]
        kind = "II" if exhausted or rank == k else "I"
        state.breakdown = Breakdown(k, kind, rank, float(sub), exhausted)
    return state


def run_arnoldi(a, start_vector, steps, breakdown_tol=DEFAULT_BREAKDOWN_TOL, a_norm=None):
    """Run up to ``steps`` Arnoldi steps (fewer on breakdown)."""
    state = arnoldi_init(a, start_vector, breakdown_tol, a_norm)
    while state.k < steps and state.running:
        arnoldi_step(state)
    return state


def krylov_basis_oracle(a, start_vector, k, rank_tol=1e-12):
    """Orthonormal basis of K_k(A, v) from the explicit power sequence.

    Test oracle: each power is normalized, then the sequence is
    orthonormalized by a column-pivoted QR (scipy). Columns whose pivot is
    below ``rank_tol`` times the largest are dropped.
    """
    import scipy.linalg

    a = as_matrix(a)
    v = as_vector(start_vector)
    powers = np.zeros((a.shape[0], k))
    z = v / np.linalg.norm(v)
    for j in range(k):
        powers[:, j] = z
        z = a @ z
        nz = np.linalg.norm(z)
        if nz == 0.0:
            break
        z = z / nz
    q, r, _ = scipy.linalg.qr(powers, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.count_nonzero(diag > rank_tol * diag[0])) if diag.size else 0
    return q[:, :rank]
