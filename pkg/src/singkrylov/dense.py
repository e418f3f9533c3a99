"""Dense real linear algebra kernels.

Everything here works on float64 numpy arrays. Matrices are validated on
entry (2-D, finite) and never modified in place.
"""

import hashlib
from dataclasses import dataclass

import numba
import numpy as np

UNIT_ROUNDOFF = 2.0 ** -52
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60


class ConvergenceError(RuntimeError):
    """Raised when the Jacobi SVD does not converge within the sweep limit."""

    def __init__(self, message, off_norm):
        super().__init__(f"{message} (achieved off-diagonal measure {off_norm:.3e})")
        self.off_norm = off_norm


def as_matrix(a, name="matrix"):
    m = np.array(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(v, name="vector"):
    x = np.array(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def fingerprint(*arrays):
    """SHA-256 digest of the shapes and float64 bytes of ``arrays``."""
    h = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(arr, dtype=float)
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


def matmul(a, b):
    """Matrix product with an explicit dimension check."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} times {b.shape}")
    return a @ b


# --------------------------------------------------------------------------
# Householder QR


def _reflector(x):
    """Unit vector w with (I - 2ww^T) x = alpha e1, and alpha.

    A zero x gives w = 0 (identity reflector) and alpha = 0.
    """
    normx = np.linalg.norm(x)
    w = np.zeros_like(x)
    if normx == 0.0:
        return w, 0.0
    alpha = -normx if x[0] >= 0 else normx
    w[:] = x
    w[0] -= alpha
    nw = np.linalg.norm(w)
    if nw == 0.0:
        return np.zeros_like(x), alpha
    return w / nw, alpha


def householder_qr(m):
    """Householder QR of a tall matrix.

    Returns
    -------
    reflectors : ndarray, shape (rows, cols)
        Column j holds the unit Householder vector of step j (zero above
        row j). A zero column means the identity reflector.
    r : ndarray, shape (cols, cols)
        Upper triangular factor.
    """
    work = as_matrix(m).copy()
    rows, cols = work.shape
    if rows < cols:
        raise ValueError("householder_qr needs rows >= cols")
    reflectors = np.zeros((rows, cols))
    for j in range(cols):
        w, alpha = _reflector(work[j:, j])
        reflectors[j:, j] = w
        if alpha == 0.0 and not w.any():
            continue
        work[j:, j:] -= 2.0 * np.outer(w, w @ work[j:, j:])
        work[j, j] = alpha
        work[j + 1:, j] = 0.0
    return reflectors, np.triu(work[:cols, :])


def apply_q(reflectors, x):
    """Compute Q @ x for the implicit Q = P_1 P_2 ... P_k."""
    y = np.array(x, dtype=float)
    vec = y.ndim == 1
    if vec:
        y = y.reshape(-1, 1)
    for j in range(reflectors.shape[1] - 1, -1, -1):
        w = reflectors[:, j]
        y -= 2.0 * np.outer(w, w @ y)
    return y.ravel() if vec else y


def apply_qt(reflectors, x):
    """Compute Q^T @ x for the implicit Q = P_1 P_2 ... P_k."""
    y = np.array(x, dtype=float)
    vec = y.ndim == 1
    if vec:
        y = y.reshape(-1, 1)
    for j in range(reflectors.shape[1]):
        w = reflectors[:, j]
        y -= 2.0 * np.outer(w, w @ y)
    return y.ravel() if vec else y


def form_q(reflectors, ncols=None):
    """Explicit leading ``ncols`` columns of the implicit Q."""
    rows = reflectors.shape[0]
    ncols = reflectors.shape[1] if ncols is None else ncols
    return apply_q(reflectors, np.eye(rows, ncols))


def orthonormal_complement(basis):
    """Orthonormal basis of the orthogonal complement of range(basis).

    ``basis`` must have orthonormal columns.
    """
    rows, cols = basis.shape
    if cols == 0:
        return np.eye(rows)
    reflectors, _ = householder_qr(basis)
    full = apply_q(reflectors, np.eye(rows))
    return full[:, cols:]


def _back_substitute(r, c):
    k = r.shape[0]
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        y[i] = (c[i] - r[i, i + 1:] @ y[i + 1:]) / r[i, i]
    return y


def pivoted_qr(m, eta=None):
    """Householder QR with column pivoting and rank truncation.

    Pivoting picks the largest remaining column norm, the first index on
    ties. Elimination stops once every remaining column norm is at most
    ``eta * |r_11|``.

    Returns ``(reflectors, r, perm, rank)`` where ``m[:, perm] = Q R`` on the
    leading ``rank`` columns.
    """
    work = as_matrix(m).copy()
    rows, cols = work.shape
    if eta is None:
        eta = 1e-14 * max(rows, cols)
    perm = np.arange(cols)
    steps = min(rows, cols)
    reflectors = np.zeros((rows, steps))
    rank = 0
    threshold = None
    for j in range(steps):
        norms = np.linalg.norm(work[j:, j:], axis=0)
        p = int(np.argmax(norms))
        if threshold is None:
            threshold = eta * norms[p]
        if norms[p] == 0.0 or norms[p] <= threshold:
            break
        p += j
        if p != j:
            work[:, [j, p]] = work[:, [p, j]]
            perm[[j, p]] = perm[[p, j]]
        w, alpha = _reflector(work[j:, j])
        reflectors[j:, j] = w
        work[j:, j:] -= 2.0 * np.outer(w, w @ work[j:, j:])
        work[j, j] = alpha
        work[j + 1:, j] = 0.0
        rank += 1
    return reflectors[:, :rank], np.triu(work[:rank, :]), perm, rank


def pivoted_least_squares(m, rhs, eta=None):
    """Basic solution of min ||rhs - m y|| by column-pivoted QR.

    Columns beyond the numerical rank (tolerance ``eta * |r_11|``, default
    ``eta = 1e-14 * max(rows, cols)``) get zero coefficients.
    """
    m = as_matrix(m)
    rhs = as_vector(rhs, "rhs")
    if rhs.shape[0] != m.shape[0]:
        raise ValueError(f"rhs has length {rhs.shape[0]}, expected {m.shape[0]}")
    reflectors, r, perm, rank = pivoted_qr(m, eta)
    y = np.zeros(m.shape[1])
    if rank == 0:
        return y
    c = apply_qt(reflectors, rhs)
    y[perm[:rank]] = _back_substitute(r[:, :rank], c[:rank])
    return y


# --------------------------------------------------------------------------
# One-sided Jacobi SVD


@dataclass(frozen=True)
class SvdFactors:
    """Full SVD ``a = u @ diag(sigma) @ v.T`` with a numerical-rank split."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    numerical_rank: int
    tolerance: float

    @property
    def u1(self):
        return self.u[:, :self.numerical_rank]

    @property
    def u2(self):
        return self.u[:, self.numerical_rank:]

    @property
    def v1(self):
        return self.v[:, :self.numerical_rank]

    @property
    def v2(self):
        return self.v[:, self.numerical_rank:]

    @property
    def sigma_r(self):
        return self.sigma[:self.numerical_rank]


@numba.njit(cache=True)
def _jacobi_kernel(g, v, tol, max_sweeps, with_v, tiny2):
    # Row-cyclic one-sided Jacobi on the columns of g (Fortran order).
    # Columns with squared norm <= tiny2 are rounding noise: rotating them
    # against the rest never settles, so such pairs are skipped.
    # Returns (sweeps, off); sweeps = -1 when max_sweeps is exhausted.
    m, n = g.shape
    off = 0.0
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for i in range(m):
                    a = g[i, p]
                    b = g[i, q]
                    alpha += a * a
                    beta += b * b
                    gamma += a * b
                if alpha <= tiny2 or beta <= tiny2:
                    continue
                scale = np.sqrt(alpha) * np.sqrt(beta)
                cosine = abs(gamma) / scale
                if cosine > off:
                    off = cosine
                if cosine <= tol:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for i in range(m):
                    a = g[i, p]
                    b = g[i, q]
                    g[i, p] = c * a - s * b
                    g[i, q] = s * a + c * b
                if with_v:
                    for i in range(v.shape[0]):
                        a = v[i, p]
                        b = v[i, q]
                        v[i, p] = c * a - s * b
                        v[i, q] = s * a + c * b
        if not rotated:
            return sweep, off
    return -1, off


def _jacobi_orthogonalize(g, v=None, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Rotate the columns of g until they are pairwise orthogonal.

    A pair is rotated when its cosine |g_p . g_q| / (||g_p|| ||g_q||)
    exceeds ``tol``; iteration stops after a sweep with no rotation. The
    same rotations are accumulated into v when given. Columns whose norm
    falls to ``2**-52 * ||g||_F`` or below are treated as zero.

    Returns ``(g, v, sweeps)`` with fresh Fortran-ordered arrays.
    """
    g = np.asfortranarray(g, dtype=float).copy(order="F")
    with_v = v is not None
    v = np.asfortranarray(v if with_v else np.zeros((1, 1)), dtype=float).copy(order="F")
    if g.shape[1] < 2:
        return g, (v if with_v else None), 0
    tiny2 = (UNIT_ROUNDOFF * np.linalg.norm(g)) ** 2
    sweeps, off = _jacobi_kernel(g, v, tol, max_sweeps, with_v, tiny2)
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps", off)
    return g, (v if with_v else None), sweeps


def default_rank_tolerance(shape, sigma_max):
    return max(shape) * UNIT_ROUNDOFF * sigma_max


def jacobi_svd(m, tolerance=None):
    """Full SVD by one-sided Jacobi rotations.

    Parameters
    ----------
    m : array_like, shape (rows, cols)
    tolerance : float, optional
        Absolute threshold for the numerical rank; defaults to
        ``max(rows, cols) * 2**-52 * sigma_max``.

    Returns
    -------
    SvdFactors
        ``u`` is rows x rows, ``v`` is cols x cols, ``sigma`` has
        ``min(rows, cols)`` nonincreasing entries.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if rows < cols:
        t = jacobi_svd(a.T, tolerance)
        return SvdFactors(t.v, t.sigma, t.u, t.numerical_rank, t.tolerance)

    g, v, _ = _jacobi_orthogonalize(a, np.eye(cols))
    sigma = np.linalg.norm(g, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, g, v = sigma[order], g[:, order], v[:, order]

    # columns at rounding level are not orthogonalized; complete U instead
    nonzero = int(np.count_nonzero(sigma > UNIT_ROUNDOFF * np.linalg.norm(a)))
    u_nz = g[:, :nonzero] / sigma[:nonzero]
    u = np.hstack([u_nz, orthonormal_complement(u_nz)]) if nonzero < rows else u_nz

    smax = sigma[0] if sigma.size else 0.0
    if tolerance is None:
        tolerance = default_rank_tolerance(a.shape, smax)
    rank = int(np.count_nonzero(sigma > tolerance))
    return SvdFactors(u, sigma, v, rank, float(tolerance))


def singular_values(m):
    """Nonincreasing singular values, without singular vectors.

    A Householder QR first reduces a tall matrix to its square R factor;
    the Jacobi sweeps then run on R^T, which needs far fewer sweeps.
    """
    a = as_matrix(m)
    if a.shape[0] < a.shape[1]:
        a = a.T
    if a.shape[1] == 0:
        return np.zeros(0)
    _, r, _, _ = pivoted_qr(a, eta=0.0)
    if r.shape[0] < a.shape[1]:
        r = np.vstack([r, np.zeros((a.shape[1] - r.shape[0], a.shape[1]))])
    g, _, _ = _jacobi_orthogonalize(r.T)
    return np.sort(np.linalg.norm(g, axis=0))[::-1]


def spectral_norm(m):
    s = singular_values(m)
    return float(s[0]) if s.size else 0.0


def condition_number(m, tolerance=None):
    """sigma_max over the smallest singular value above ``tolerance``.

    For a singular matrix this is ||A|| ||A^+||.
    """
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        raise ValueError("zero matrix has no condition number")
    if tolerance is None:
        tolerance = default_rank_tolerance(np.shape(m), s[0])
    kept = s[s > tolerance]
    return float(s[0] / kept[-1])


def min_norm_least_squares(m, rhs, tolerance=None):
    """Minimum-norm least squares solution via the Jacobi SVD."""
    f = jacobi_svd(m, tolerance)
    rhs = as_vector(rhs, "rhs")
    r = f.numerical_rank
    return f.v1 @ ((f.u1.T @ rhs) / f.sigma_r) if r else np.zeros(f.v.shape[0])


# --------------------------------------------------------------------------
# Matrix text format: "rows cols" then one line of values per row


def format_matrix(m):
    m = as_matrix(m)
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(format(float(v), ".17g") for v in row) for row in m]
    return "\n".join(lines) + "\n"


def parse_matrix(text, name="matrix"):
    tokens = text.split()
    if len(tokens) < 2:
        raise ValueError(f"{name}: missing 'rows cols' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError:
        raise ValueError(f"{name}: header must be two integers") from None
    if rows < 0 or cols < 0:
        raise ValueError(f"{name}: negative dimensions")
    body = tokens[2:]
    if len(body) != rows * cols:
        raise ValueError(f"{name}: expected {rows * cols} entries, found {len(body)}")
    try:
        values = np.array([float(t) for t in body])
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from None
    return as_matrix(values.reshape(rows, cols), name)


def write_matrix(path, m):
    with open(path, "w") as fh:
        fh.write(format_matrix(m))


def read_matrix(path):
    with open(path) as fh:
        return parse_matrix(fh.read(), str(path))


def read_vector(path):
    """A vector stored as an n x 1 or 1 x n matrix."""
    m = read_matrix(path)
    if min(m.shape) != 1 and m.size:
        raise ValueError(f"{path}: expected a vector, got shape {m.shape}")
    return m.reshape(-1)
