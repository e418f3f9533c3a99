"""Reference implementations that share no code with the package."""

import numpy as np


def triple_loop_matmul(a, b):
    rows, inner = len(a), len(a[0])
    cols = len(b[0])
    out = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for k in range(inner):
                acc += a[i][k] * b[k][j]
            out[i][j] = acc
    return np.array(out)


def gram_schmidt(m):
    """Thin QR by classical Gram-Schmidt with one reorthogonalization pass."""
    m = np.asarray(m, dtype=float)
    rows, cols = m.shape
    q = np.zeros((rows, cols))
    r = np.zeros((cols, cols))
    for j in range(cols):
        v = m[:, j].copy()
        for _ in range(2):
            c = q[:, :j].T @ v
            v -= q[:, :j] @ c
            r[:j, j] += c
        r[j, j] = np.linalg.norm(v)
        q[:, j] = v / r[j, j]
    return q, r


def jacobi_eigenvalues(s, tol=1e-15, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by the classical two-sided cyclic Jacobi method."""
    a = np.array(s, dtype=float)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a**2) - np.sum(np.diag(a) ** 2))
        if off <= tol * np.linalg.norm(a):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1)) if theta else 1.0
                c = 1 / np.sqrt(t**2 + 1)
                sn = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = sn, -sn
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def svd_min_residual(m, rhs):
    """Smallest achievable ||rhs - m y|| from numpy's SVD least squares."""
    y, *_ = np.linalg.lstsq(m, rhs, rcond=None)
    return np.linalg.norm(rhs - m @ y), y


def penrose_residuals(a, x):
    """Residuals of the four Penrose equations, each scaled by its natural size."""
    na, nx = np.linalg.norm(a, 2), max(np.linalg.norm(x, 2), 1e-300)
    ax, xa = a @ x, x @ a
    return (
        np.linalg.norm(ax @ a - a, 2) / (na**2 * nx if na else 1),
        np.linalg.norm(x @ ax - x, 2) / (na * nx**2 if na else 1),
        np.linalg.norm(ax - ax.T, 2) / (na * nx if na else 1),
        np.linalg.norm(xa - xa.T, 2) / (na * nx if na else 1),
    )


def largest_principal_angle_sine(x, y):
    """sin of the largest principal angle between two orthonormal bases of equal dimension."""
    return np.linalg.norm(x @ x.T - y @ y.T, 2)
