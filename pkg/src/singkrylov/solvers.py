"""GMRES and RR-GMRES with per-iteration conditioning diagnostics.

Both solvers run the Householder Arnoldi process, solve the small
Hessenberg least squares problem with column-pivoted QR, and recompute the
residual b - A x_k explicitly at every step. Each step records the extremal
singular values of the extended Hessenberg matrix so that the loss of
accuracy on singular systems can be observed and checked against bounds.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .arnoldi import DEFAULT_BREAKDOWN_TOL, Breakdown, arnoldi_init, arnoldi_step
from .dense import (
    as_matrix,
    as_vector,
    UNIT_ROUNDOFF,
    default_rank_tolerance,
    fingerprint,
    jacobi_svd,
    pivoted_least_squares,
    singular_values,
)

NOMINAL_UNIT_ROUNDOFF = 1.1e-16
BOUND_SLACK = 1e-8

CSV_HEADER = [
    "iter",
    "resnorm_rel",
    "normal_resnorm_rel",
    "res_err_rel",
    "sigma_max_H",
    "sigma_min_H",
    "kappa_H",
    "rank_deficient",
    "breakdown",
]


class FingerprintMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int | None = None
    breakdown_tol: float = DEFAULT_BREAKDOWN_TOL
    unit_roundoff: float = NOMINAL_UNIT_ROUNDOFF
    variant: str = "gmres"
    record_svd_every_step: bool = True
    eta: float | None = None  # rank tolerance of the Hessenberg LS solve

    def __post_init__(self):
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0.0 < self.unit_roundoff < 1e-8:
            raise ValueError("unit_roundoff must lie in (0, 1e-8)")
        if self.variant not in ("gmres", "rrgmres"):
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass(frozen=True)
class KrylovStep:
    k: int
    x: np.ndarray
    r: np.ndarray
    resnorm_rel: float
    normal_resnorm_rel: float
    res_err_rel: float
    sigma_max_h: float
    sigma_min_h: float  # k-th (smallest) singular value of H_{k+1,k}
    sigma_min_positive_h: float
    kappa_h: float
    rank_deficient: bool
    simpler_residual: float = np.nan  # ||(I - Q_{k+1} Q_{k+1}^T) r0||, RR-GMRES only


@dataclass
class KrylovTrace:
    method: str
    steps: list
    x0: np.ndarray
    r0: np.ndarray
    r_star: np.ndarray
    a_norm: float
    b_norm: float
    atb_norm: float
    fingerprint: str  # of (A, b, x0)
    ab_fingerprint: str
    a_fingerprint: str
    terminal: str = "maxiter"  # "maxiter", "breakdown" or "initial"
    breakdown: Breakdown | None = None
    message: str = ""
    normal_residual_norm: float = np.nan
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.steps)

    @property
    def x(self):
        return self.steps[-1].x if self.steps else self.x0

    @property
    def r(self):
        return self.steps[-1].r if self.steps else self.r0

    def residual_before(self, k):
        """r_{k-1} for step k (r_0 for k = 1)."""
        return self.r0 if k == 1 else self.steps[k - 2].r

    def found_least_squares(self, rtol=1e-8):
        """Whether the last iterate satisfies the normal equations to ``rtol``.

        The test is ||A^T r|| <= rtol ||A|| ||r||, i.e. r is numerically
        orthogonal to R(A); a zero residual always passes.
        """
        r_norm = np.linalg.norm(self.r)
        if r_norm <= rtol * max(self.b_norm, np.finfo(float).tiny):
            return True
        return self.normal_residual_norm <= rtol * self.a_norm * r_norm

    @property
    def breakdown_without_solution(self):
        return self.terminal == "breakdown" and not self.found_least_squares()

    def column(self, name):
        return np.array([getattr(s, name) for s in self.steps])

    def to_csv(self):
        buf = io.StringIO()
        write_trace_csv(self, buf)
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_trace_csv(trace, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    last = len(trace.steps)
    for s in trace.steps:
        flag = trace.breakdown.kind if (s.k == last and trace.breakdown is not None) else ""
        writer.writerow([
            _fmt(s.k),
            _fmt(s.resnorm_rel),
            _fmt(s.normal_resnorm_rel),
            _fmt(s.res_err_rel),
            _fmt(s.sigma_max_h),
            _fmt(s.sigma_min_h),
            _fmt(s.kappa_h),
            _fmt(s.rank_deficient),
            flag,
        ])


def _ratio(num, den):
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


def _hessenberg_spectrum(h, u):
    s = singular_values(h)
    smax, smin = float(s[0]), float(s[-1])
    positive = s[s > default_rank_tolerance(h.shape, smax)]
    smin_pos = float(positive[-1]) if positive.size else 0.0
    kappa = np.inf if smin == 0.0 else smax / smin
    return smax, smin, smin_pos, kappa, bool(u * kappa >= 1.0)


def _least_squares_residual(a, b):
    f = jacobi_svd(a)
    u1 = f.u1
    return b - u1 @ (u1.T @ b)


def _setup(a, b, x0, config, r_star):
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError(f"GMRES needs a square matrix, got {a.shape}")
    b = as_vector(b, "b")
    if b.shape[0] != n:
        raise ValueError(f"b has length {b.shape[0]}, expected {n}")
    x0 = np.zeros(n) if x0 is None else as_vector(x0, "x0")
    if x0.shape[0] != n:
        raise ValueError(f"x0 has length {x0.shape[0]}, expected {n}")
    config = config or SolverConfig()
    r_star = _least_squares_residual(a, b) if r_star is None else as_vector(r_star, "r_star")
    a_norm = float(singular_values(a)[0]) if n else 0.0
    r0 = b - a @ x0
    trace = KrylovTrace(
        method=config.variant,
        steps=[],
        x0=x0,
        r0=r0,
        r_star=r_star,
        a_norm=a_norm,
        b_norm=float(np.linalg.norm(b)),
        atb_norm=float(np.linalg.norm(a.T @ b)),
        fingerprint=fingerprint(a, b, x0),
        ab_fingerprint=fingerprint(a, b),
        a_fingerprint=fingerprint(a),
    )
    trace.normal_residual_norm = float(np.linalg.norm(a.T @ r0))
    return a, b, x0, config, trace


def _record(trace, a, b, k, x, h, config, simpler=np.nan, with_svd=True):
    r = b - a @ x
    r_norm = float(np.linalg.norm(r))
    atr = float(np.linalg.norm(a.T @ r))
    trace.normal_residual_norm = atr
    if with_svd:
        smax, smin, smin_pos, kappa, flag = _hessenberg_spectrum(h, config.unit_roundoff)
    else:
        smax = smin = smin_pos = kappa = np.nan
        flag = False
    trace.steps.append(KrylovStep(
        k=k,
        x=x,
        r=r,
        resnorm_rel=_ratio(r_norm, trace.b_norm),
        normal_resnorm_rel=_ratio(atr, trace.atb_norm) if trace.atb_norm > 0 else np.nan,
        res_err_rel=_ratio(float(np.linalg.norm(r - trace.r_star)), r_norm),
        sigma_max_h=smax,
        sigma_min_h=smin,
        sigma_min_positive_h=smin_pos,
        kappa_h=kappa,
        rank_deficient=flag,
        simpler_residual=simpler,
    ))


def _iterate(a, b, x0, config, trace, start, rhs_fn):
    n = a.shape[0]
    max_iter = config.max_iter or n
    state = arnoldi_init(a, start, config.breakdown_tol, trace.a_norm)
    last_h = None
    while state.k < max_iter and state.running:
        arnoldi_step(state)
        k = state.k
        h = state.hessenberg()
        rhs, simpler = rhs_fn(state)
        y = pivoted_least_squares(h, rhs, config.eta)
        x = x0 + state.basis() @ y
        final = not state.running or k >= max_iter
        _record(trace, a, b, k, x, h, config, simpler,
                with_svd=config.record_svd_every_step or final)
        last_h = h
    if state.breakdown is not None:
        trace.terminal = "breakdown"
        trace.breakdown = state.breakdown
    trace.extra["hessenberg"] = last_h
    trace.extra["basis"] = state.q.copy()
    return trace


def gmres(a, b, x0=None, config=None, r_star=None):
    """GMRES with Householder Arnoldi and explicit residuals.

    Parameters
    ----------
    a : array_like, shape (n, n)
    b : array_like, shape (n,)
    x0 : array_like, optional
        Initial iterate, zero by default.
    config : SolverConfig, optional
    r_star : array_like, optional
        Least squares residual P_N(A^T) b; computed from an SVD of A when
        not given.

    Returns
    -------
    KrylovTrace
        One entry per iteration. Stops at breakdown or after
        ``config.max_iter`` (default n) steps. A zero initial residual
        gives an empty trace.
    """
    config = config or SolverConfig()
    if config.variant != "gmres":
        config = SolverConfig(**{**config.__dict__, "variant": "gmres"})
    a, b, x0, config, trace = _setup(a, b, x0, config, r_star)
    beta = float(np.linalg.norm(trace.r0))
    if beta == 0.0 or beta <= config.breakdown_tol * trace.b_norm:
        trace.terminal = "initial"
        return trace

    def rhs(state):
        e = np.zeros(state.k + 1)
        e[0] = beta
        return e, np.nan

    return _iterate(a, b, x0, config, trace, trace.r0, rhs)


def rr_gmres(a, b, x0=None, config=None, r_star=None):
    """Range restricted GMRES: the Krylov space is started from A r0.

    The small least squares problem uses the projected right-hand side
    Q_{k+1}^T r0. When A r0 vanishes (||A r0|| <= u ||A|| ||r0||) the method
    cannot start; the trace then holds a single step with x_1 = x0 and a
    Case I breakdown at step 1.
    """
    config = config or SolverConfig(variant="rrgmres")
    if config.variant != "rrgmres":
        config = SolverConfig(**{**config.__dict__, "variant": "rrgmres"})
    a, b, x0, config, trace = _setup(a, b, x0, config, r_star)
    r0 = trace.r0
    beta = float(np.linalg.norm(r0))
    if beta == 0.0 or beta <= config.breakdown_tol * trace.b_norm:
        trace.terminal = "initial"
        return trace
    ar0 = a @ r0
    ar0_norm = float(np.linalg.norm(ar0))
    if ar0_norm <= config.unit_roundoff * trace.a_norm * beta:
        trace.message = "RR-GMRES start vector annihilated"
        # no Hessenberg matrix exists, so the spectral columns are NaN
        _record(trace, a, b, 1, x0.copy(), None, config, with_svd=False)
        trace.terminal = "breakdown"
        trace.breakdown = Breakdown(1, "I", 0, 0.0, False)
        return trace

    def rhs(state):
        qk1 = state.q  # k + 1 columns, or n when the space is exhausted
        c = qk1.T @ r0
        simpler = float(np.linalg.norm(r0 - qk1 @ c))
        if c.shape[0] < state.k + 1:
            c = np.append(c, 0.0)
        return c, simpler

    return _iterate(a, b, x0, config, trace, ar0 / ar0_norm, rhs)


def solve(a, b, x0=None, config=None, r_star=None):
    config = config or SolverConfig()
    fn = rr_gmres if config.variant == "rrgmres" else gmres
    return fn(a, b, x0, config, r_star)


def brute_force_gmres_oracle(a, b, x0=None, k=0):
    """Minimizer of ||b - A x|| over x0 + K_k(A, r0) by brute force.

    Test oracle independent of the Arnoldi code: the normalized power
    sequence r0, A r0, ... spans K_k, and the coefficients come from
    numpy's SVD-based least squares.
    """
    a = as_matrix(a)
    b = as_vector(b)
    x0 = np.zeros(a.shape[0]) if x0 is None else as_vector(x0)
    if k == 0:
        return x0.copy()
    r0 = b - a @ x0
    z = np.zeros((a.shape[0], k))
    v = r0 / np.linalg.norm(r0)
    for j in range(k):
        z[:, j] = v
        v = a @ v
        nv = np.linalg.norm(v)
        if nv == 0.0:
            break
        v = v / nv
    c, *_ = np.linalg.lstsq(a @ z, r0, rcond=None)
    return x0 + z @ c


# --------------------------------------------------------------------------
# Bound checks


@dataclass(frozen=True)
class BoundCheck:
    bound_id: str
    step: int | None
    lhs: float
    rhs: float
    applicable: bool = True
    method: str = ""
    allowance: float = 0.0  # rounding uncertainty of lhs - rhs

    @property
    def satisfied(self):
        if not self.applicable:
            return True
        return bool(self.lhs - self.allowance <= self.rhs + BOUND_SLACK * max(1.0, self.rhs))

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def ratio(self):
        return _ratio(self.lhs, self.rhs)


@dataclass
class BoundReport:
    checks: list = field(default_factory=list)

    def add(self, *args, **kwargs):
        self.checks.append(BoundCheck(*args, **kwargs))

    @property
    def applicable(self):
        return [c for c in self.checks if c.applicable]

    @property
    def violations(self):
        return [c for c in self.checks if c.applicable and not c.satisfied]

    def by_id(self, bound_id):
        return [c for c in self.checks if c.bound_id == bound_id]

    def max_ratio(self, bound_id):
        ratios = [c.ratio for c in self.by_id(bound_id) if c.applicable and np.isfinite(c.ratio)]
        return max(ratios) if ratios else np.nan

    def summary(self):
        lines = []
        for bid in dict.fromkeys(c.bound_id for c in self.checks):
            group = self.by_id(bid)
            app = [c for c in group if c.applicable]
            bad = [c for c in app if not c.satisfied]
            lines.append(f"{bid}: {len(app)} applicable, {len(bad)} violated")
        return "\n".join(lines)


def check_bounds(trace, profile, triple, rr_trace=None, consistency_tol=1e-13):
    """Evaluate every applicable conditioning inequality on a trace.

    Bound ids:

    ``norm_H``             sigma_1(H) <= ||A||
    ``ubArr``              sigma_k(H) <= ||A|| ||r_{k-1} - r_*|| / ||r_{k-1}||
                           (GMRES, needs A r_* = 0: EP or consistent)
    ``r0_range``           sigma_k(H) <= ||A|| ||P_R(A^T) r0|| / ||r0|| (GMRES)
    ``ep_kappa``           kappa(H) <= kappa(A) (EP; GMRES needs consistency)
    ``rr_ep_sigma``        sigma_r(A) <= sigma_k(H^R) (RR-GMRES, EP)
    ``gp_sigma_max``       sigma_1(H) <= ||A|| ||K||
    ``gp_sigma_min``       sigma_r(A) sigma_r(K) <= sigma_k(H)
    ``gp_kappa``           kappa(H) <= kappa(A) kappa(K)
                           (GP; GMRES needs consistency)
    ``cross_norm``         ||H^R_{k,k-1}|| <= ||H_{k+1,k}||
    ``cross_sigma``        sigma_k(H_{k+1,k}) <= sigma_{k-1}(H^R_{k,k-1})
    ``cross_kappa``        kappa(H^R_{k,k-1}) <= kappa(H_{k+1,k})
    ``sandwich_low``       sigma_r(K) ||x_#|| <= ||x_*||
    ``sandwich_high``      ||x_*|| <= ||x_#||
                           (GP and consistent, or EP)

    Checks whose hypotheses fail are recorded with ``applicable=False``.
    The system counts as consistent when ||r_*|| <= consistency_tol ||b||.

    Computed singular values of H are only known to about e = n u ||A||
    (Arnoldi and SVD backward errors). Ratios sigma_1 / sigma_k amplify
    this, so condition-number checks carry an ``allowance`` equal to the
    change of lhs - rhs when every sigma_k moves by e in the unfavourable
    direction. Comparisons of singular values themselves are dominated by
    the fixed slack and get no allowance.
    """
    if trace.a_fingerprint != profile.fingerprint:
        raise FingerprintMismatch("trace and profile belong to different matrices")
    if trace.ab_fingerprint != triple.fingerprint:
        raise FingerprintMismatch("trace and solution triple belong to different problems")
    report = BoundReport()
    err = profile.n * UNIT_ROUNDOFF * profile.norm
    consistent = np.linalg.norm(triple.r_star) <= consistency_tol * trace.b_norm
    for tr in (trace, rr_trace):
        if tr is None:
            continue
        if tr.fingerprint != trace.fingerprint:
            raise FingerprintMismatch("GMRES and RR-GMRES traces solve different problems")
        _trace_bounds(report, tr, profile, triple, consistent, err)
    if rr_trace is not None:
        _cross_bounds(report, trace, rr_trace, profile.n, err)
    # x_* = P_R(A^T) x_# needs b in R(A), or A EP (then x_# = x_*)
    if triple.x_sharp is not None and (consistent or profile.is_ep):
        xs, xh = np.linalg.norm(triple.x_star), np.linalg.norm(triple.x_sharp)
        report.add("sandwich_low", None, profile.cos_min * xh, xs)
        report.add("sandwich_high", None, xs, xh)
    else:
        report.add("sandwich_low", None, np.nan, np.nan, applicable=False)
        report.add("sandwich_high", None, np.nan, np.nan, applicable=False)
    return report


def _kappa_shift(sigma_max, sigma_min, err, up):
    """Change of sigma_max / sigma_min when sigma_min moves by err."""
    if not sigma_min > 0:
        return 0.0
    kappa = sigma_max / sigma_min
    if up:
        return np.inf if sigma_min <= err else sigma_max / (sigma_min - err) - kappa
    return kappa - sigma_max / (sigma_min + err)


def _trace_bounds(report, tr, profile, triple, consistent, err):
    is_rr = tr.method == "rrgmres"
    a_norm = profile.norm
    kappa_a = profile.kappa_a
    sigma_r = profile.sigma_r
    v1 = profile.svd.v1
    r0_norm = np.linalg.norm(tr.r0)
    r0_range = np.linalg.norm(v1.T @ tr.r0) if profile.rank else 0.0
    ep_ok = profile.is_ep and (is_rr or consistent)
    gp_ok = profile.is_gp and (is_rr or consistent)
    annihilates_r_star = profile.is_ep or consistent
    k_norm = profile.cos_max
    k_min = profile.cos_min
    m = tr.method
    for s in tr.steps:
        k = s.k
        if not np.isfinite(s.sigma_max_h):
            continue
        report.add("norm_H", k, s.sigma_max_h, a_norm, method=m)
        if not is_rr:
            prev = tr.residual_before(k)
            pn = np.linalg.norm(prev)
            ok = annihilates_r_star and pn > 0
            rhs = a_norm * np.linalg.norm(prev - triple.r_star) / pn if pn > 0 else np.nan
            report.add("ubArr", k, s.sigma_min_h, rhs, applicable=bool(ok), method=m)
            report.add("r0_range", k, s.sigma_min_h, a_norm * r0_range / r0_norm, method=m)
        shift = _kappa_shift(s.sigma_max_h, s.sigma_min_h, err, up=False)
        report.add("ep_kappa", k, s.kappa_h, kappa_a, applicable=bool(ep_ok), method=m,
                   allowance=shift)
        if is_rr:
            report.add("rr_ep_sigma", k, sigma_r, s.sigma_min_h,
                       applicable=bool(profile.is_ep), method=m)
        report.add("gp_sigma_max", k, s.sigma_max_h, a_norm * k_norm,
                   applicable=bool(gp_ok), method=m)
        report.add("gp_sigma_min", k, sigma_r * k_min, s.sigma_min_h,
                   applicable=bool(gp_ok), method=m)
        report.add("gp_kappa", k, s.kappa_h, kappa_a * profile.kappa_k,
                   applicable=bool(gp_ok), method=m, allowance=shift)


def _cross_bounds(report, trace, rr_trace, n, err):
    for k in range(2, n):
        if k > len(trace.steps) or k - 1 > len(rr_trace.steps):
            break
        g = trace.steps[k - 1]
        r = rr_trace.steps[k - 2]
        if not (np.isfinite(g.sigma_max_h) and np.isfinite(r.sigma_max_h)):
            continue
        report.add("cross_norm", k, r.sigma_max_h, g.sigma_max_h, method="both")
        report.add("cross_sigma", k, g.sigma_min_h, r.sigma_min_h, method="both")
        shift = (_kappa_shift(r.sigma_max_h, r.sigma_min_h, err, up=False)
                 + _kappa_shift(g.sigma_max_h, g.sigma_min_h, err, up=True))
        report.add("cross_kappa", k, r.kappa_h, g.kappa_h, method="both", allowance=shift)
