"""Generalized inverses, projectors and range/nullspace classification.

All quantities come from the Jacobi SVD ``A = [U1 U2] diag(S_r, 0) [V1 V2]^T``.
The r x r cross Gram matrix ``K = V1^T U1`` carries the geometry: its
singular values are the cosines of the principal angles between R(A) and
R(A^T). A is GP (index <= 1) iff K is nonsingular and EP (range-symmetric)
iff K is orthogonal.
"""

from dataclasses import dataclass, field

import numpy as np

from .dense import (
    UNIT_ROUNDOFF,
    SvdFactors,
    as_matrix,
    as_vector,
    fingerprint,
    jacobi_svd,
    singular_values,
)

DEFAULT_ANGLE_TOL = 64 * UNIT_ROUNDOFF


class NotGroupMatrixError(ValueError):
    pass


class ClassificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SubspaceProfile:
    n: int
    rank: int
    index: int
    is_ep: bool
    is_gp: bool
    is_dr: bool
    cross_gram: np.ndarray
    cross_gram_l: np.ndarray
    cross_gram_m: np.ndarray
    angle_cosines: np.ndarray
    kappa_k: float
    kappa_a: float
    tolerance: float
    angle_tol: float
    projector_gap: float
    svd: SvdFactors = field(repr=False)
    gram_svd: SvdFactors = field(repr=False, default=None)
    fingerprint: str = ""

    @property
    def sigma_r(self):
        """Smallest nonzero singular value of A (0 for the zero matrix)."""
        return float(self.svd.sigma[self.rank - 1]) if self.rank else 0.0

    @property
    def norm(self):
        return float(self.svd.sigma[0]) if self.svd.sigma.size else 0.0

    @property
    def cos_min(self):
        return float(self.angle_cosines[-1]) if self.rank else 1.0

    @property
    def cos_max(self):
        return float(self.angle_cosines[0]) if self.rank else 1.0

    def report(self):
        """Flat ``key=value`` text report, one entry per line."""
        items = [
            ("n", self.n),
            ("rank", self.rank),
            ("index", self.index),
            ("isEP", str(self.is_ep).lower()),
            ("isGP", str(self.is_gp).lower()),
            ("isDR", str(self.is_dr).lower()),
            ("cosMin", repr(self.cos_min)),
            ("cosMax", repr(self.cos_max)),
            ("kappaA", repr(self.kappa_a)),
            ("kappaK", repr(self.kappa_k)),
            ("sigmaMax", repr(self.norm)),
            ("sigmaRank", repr(self.sigma_r)),
            ("tolerance", repr(self.tolerance)),
            ("angleTol", repr(self.angle_tol)),
        ]
        return "".join(f"{k}={v}\n" for k, v in items)


def matrix_index(a, tolerance=None):
    """Smallest k >= 0 with rank(A^k) = rank(A^(k+1)).

    rank(A^(k+1)) is computed as rank(A W_k) where W_k is an orthonormal
    basis of R(A^k). Every rank uses the same absolute threshold as A
    itself, which avoids the squaring of the condition number that explicit
    powers suffer.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if n == 0:
        return 0
    if tolerance is None:
        smax = float(singular_values(a)[0])
        tolerance = n * UNIT_ROUNDOFF * smax
    basis = np.eye(n)
    prev_rank = n
    for k in range(n + 1):
        if prev_rank == 0:
            return k
        f = jacobi_svd(a @ basis, tolerance)
        rank = f.numerical_rank
        if rank == prev_rank:
            return k
        basis = f.u1
        prev_rank = rank
    return n


def principal_cosines(x, y):
    """Cosines of the principal angles between range(x) and range(y).

    Both arguments must have orthonormal columns. Returned nonincreasing.
    """
    if x.shape[1] == 0 or y.shape[1] == 0:
        return np.zeros(0)
    return np.clip(singular_values(x.T @ y), 0.0, None)


def classify(a, tolerance=None, angle_tol=None):
    """Rank, index and EP/GP/DR classification of a square matrix.

    Parameters
    ----------
    a : array_like, shape (n, n)
    tolerance : float, optional
        Absolute numerical-rank threshold on the singular values of A.
        Defaults to ``n * 2**-52 * sigma_max``.
    angle_tol : float, optional
        Dimensionless threshold on the principal-angle cosines. EP needs
        every cosine >= 1 - angle_tol, GP needs the smallest > angle_tol,
        DR needs the largest < 1 - angle_tol. Defaults to ``64 * 2**-52``.

    The zero matrix is classified as rank 0, index 1, EP, GP and DR
    (empty K).
    """
    a = as_matrix(a)
    n, cols = a.shape
    if n != cols:
        raise ValueError(f"classify needs a square matrix, got {a.shape}")
    if angle_tol is None:
        angle_tol = DEFAULT_ANGLE_TOL
    f = jacobi_svd(a, tolerance)
    r = f.numerical_rank
    k = f.v1.T @ f.u1
    l = f.v1.T @ f.u2
    m = f.v2.T @ f.u1

    if r:
        gram_svd = jacobi_svd(k)
        cosines = np.clip(gram_svd.sigma, 0.0, None)
        kappa_k = float(cosines[0] / cosines[-1]) if cosines[-1] > 0 else np.inf
        kappa_a = float(f.sigma[0] / f.sigma[r - 1])
        gap = float(singular_values(f.u1 @ f.u1.T - f.v1 @ f.v1.T)[0])
    else:
        gram_svd = None
        cosines = np.zeros(0)
        kappa_k = 1.0
        kappa_a = np.inf
        gap = 0.0

    ep_by_angles = bool(np.all(cosines >= 1.0 - angle_tol))
    # sin(theta_max) <= sqrt(2 tol - tol^2) is the same condition as cos >= 1 - tol
    ep_by_projectors = gap <= np.sqrt(2.0 * angle_tol - angle_tol**2)
    if ep_by_angles != ep_by_projectors:
        raise ClassificationError(
            f"EP test is ambiguous at angle_tol={angle_tol:.3e}: "
            f"min cosine {cosines.min():.17g}, projector gap {gap:.3e}"
        )
    is_gp = bool(r == 0 or cosines[-1] > angle_tol)
    is_dr = bool(r == 0 or cosines[0] < 1.0 - angle_tol)
    index = matrix_index(a, f.tolerance)
    if is_gp and index > 1:
        raise ClassificationError(
            f"K is nonsingular (min cosine {cosines[-1]:.3e}) but the power ranks give index {index}"
        )

    return SubspaceProfile(
        n=n,
        rank=r,
        index=index,
        is_ep=ep_by_angles,
        is_gp=is_gp,
        is_dr=is_dr,
        cross_gram=k,
        cross_gram_l=l,
        cross_gram_m=m,
        angle_cosines=cosines,
        kappa_k=kappa_k,
        kappa_a=kappa_a,
        tolerance=f.tolerance,
        angle_tol=angle_tol,
        projector_gap=gap,
        svd=f,
        gram_svd=gram_svd,
        fingerprint=fingerprint(a),
    )


def pseudoinverse(a, tolerance=None):
    """Moore-Penrose inverse V1 S_r^-1 U1^T."""
    f = jacobi_svd(a, tolerance)
    return (f.v1 / f.sigma_r) @ f.u1.T


def _gram_inverse(profile):
    g = profile.gram_svd
    return (g.v / g.sigma) @ g.u.T


def _require_gp(profile):
    if not profile.is_gp:
        raise NotGroupMatrixError(
            f"matrix is not GP (index {profile.index}, min cosine {profile.cos_min:.3e})"
        )


def group_inverse(a, tolerance=None, angle_tol=None, profile=None):
    """Group inverse A^# of a GP matrix.

    Uses the block form ``A^# = U [[K^-1 S^-1, K^-1 S^-1 K^-1 L], [0, 0]] U^T``
    with ``K = V1^T U1`` and ``L = V1^T U2``.
    """
    p = profile if profile is not None else classify(a, tolerance, angle_tol)
    _require_gp(p)
    f = p.svd
    if p.rank == 0:
        return np.zeros((p.n, p.n))
    k_inv = _gram_inverse(p)
    top_left = k_inv / f.sigma_r  # K^-1 S^-1
    top_right = top_left @ k_inv @ p.cross_gram_l
    return f.u1 @ (top_left @ f.u1.T + top_right @ f.u2.T)


def oblique_projector(a, tolerance=None, angle_tol=None, profile=None):
    """Projector onto R(A) along N(A): A^# A = U1 (V1^T U1)^-1 V1^T."""
    p = profile if profile is not None else classify(a, tolerance, angle_tol)
    _require_gp(p)
    if p.rank == 0:
        return np.zeros((p.n, p.n))
    return p.svd.u1 @ _gram_inverse(p) @ p.svd.v1.T


def orthogonal_projector(basis):
    return basis @ basis.T


@dataclass(frozen=True)
class SolutionTriple:
    x_star: np.ndarray
    x_sharp: np.ndarray | None
    r_star: np.ndarray
    fingerprint: str = ""  # of (A, b)


def solution_triple(a, b, tolerance=None, angle_tol=None, profile=None):
    """Pseudoinverse solution, group-inverse solution and least squares residual.

    ``x_sharp`` is None when A is not GP.
    """
    a = as_matrix(a)
    b = as_vector(b, "b")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"b has length {b.shape[0]}, expected {a.shape[0]}")
    p = profile if profile is not None else classify(a, tolerance, angle_tol)
    if profile is not None and profile.fingerprint != fingerprint(a):
        raise ValueError("profile was computed for a different matrix")
    f = p.svd
    x_star = (f.v1 / f.sigma_r) @ (f.u1.T @ b) if p.rank else np.zeros(p.n)
    r_star = b - a @ x_star
    x_sharp = group_inverse(a, profile=p) @ b if p.is_gp else None
    return SolutionTriple(x_star, x_sharp, r_star, fingerprint(a, b))
