"""Test problems with analytic reference values.

Every generator attaches closed-form reference quantities and checks them
against the numerical classification and solution triple when the instance
is built, so a wrong formula or a wrong kernel fails loudly.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .dense import UNIT_ROUNDOFF, write_matrix
from .subspaces import classify, solution_triple

REFERENCE_RTOL = 1e-8
ABSOLUTE_KEYS = ("rStar", "rStarNorm")


class ReferenceMismatch(AssertionError):
    pass


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    a: np.ndarray
    b: np.ndarray
    x0: np.ndarray
    params: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def label(self):
        inner = ", ".join(f"{k}={_fmt_param(v)}" for k, v in self.params.items())
        return f"{self.name}({inner})"


def _fmt_param(v):
    return format(float(v), "g")


def _rel_err(got, want):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    scale = max(float(np.linalg.norm(want)), np.finfo(float).tiny)
    return float(np.linalg.norm(got - want)) / scale


def _computed(key, profile, triple, a, b):
    if key == "kappaA":
        return profile.kappa_a
    if key == "kappaK":
        return profile.kappa_k
    if key == "sigmaRankA":
        return profile.sigma_r
    if key == "angleCosine":
        return profile.cos_min
    if key == "xStar":
        return triple.x_star
    if key == "xSharp":
        return triple.x_sharp
    if key == "rStar":
        return triple.r_star
    if key == "rStarNorm":
        return np.linalg.norm(triple.r_star)
    if key == "bRangeNorm":
        u1 = profile.svd.u1
        return np.linalg.norm(u1.T @ b)
    if key == "bNullNorm":
        return np.linalg.norm(profile.svd.u2.T @ b)
    if key == "xExact":
        return np.linalg.solve(a, b)
    raise KeyError(key)


def _kappa_k_rtol(kappa_k):
    # cosines are accurate to about u absolutely, so kappa(K) only to u * kappa(K)
    return max(REFERENCE_RTOL, 64 * UNIT_ROUNDOFF * kappa_k)


def verify_references(inst):
    """Check every attached reference value; raise ``ReferenceMismatch``."""
    profile = classify(inst.a)
    triple = solution_triple(inst.a, inst.b, profile=profile)
    refs = dict(inst.references)
    for key in ("isEP", "isGP"):
        if key in refs:
            got = profile.is_ep if key == "isEP" else profile.is_gp
            if got != refs.pop(key):
                raise ReferenceMismatch(f"{inst.label}: {key} is {got}")
    lower = refs.pop("kappaALowerBound", None)
    if lower is not None and profile.kappa_a < lower * (1 - REFERENCE_RTOL):
        raise ReferenceMismatch(f"{inst.label}: kappaA {profile.kappa_a:.6e} below {lower:.6e}")
    for key, want in refs.items():
        got = _computed(key, profile, triple, inst.a, inst.b)
        if got is None:
            raise ReferenceMismatch(f"{inst.label}: {key} is undefined")
        rtol = _kappa_k_rtol(float(want)) if key == "kappaK" else REFERENCE_RTOL
        if key in ABSOLUTE_KEYS or not np.any(want):
            # b - A x_* cancels down from ||b||; its error scales with ||b||
            scale = max(float(np.linalg.norm(inst.b)), np.finfo(float).tiny)
            err = float(np.linalg.norm(np.asarray(got) - want)) / scale
        else:
            err = _rel_err(got, want)
        if err > rtol:
            raise ReferenceMismatch(f"{inst.label}: {key} relative error {err:.3e} > {rtol:.1e}")
    return profile, triple


def _build(name, a, b, params, references, verify=True):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    inst = ProblemInstance(name, a, b, np.zeros(a.shape[0]), dict(params), dict(references))
    if verify:
        verify_references(inst)
    return inst


def _nonneg(name, v):
    if not np.isfinite(v) or v < 0:
        raise ValueError(f"{name} must be a finite number >= 0, got {v}")
    return float(v)


def _positive(name, v):
    if not np.isfinite(v) or v <= 0:
        raise ValueError(f"{name} must be > 0, got {v}")
    return float(v)


def ep_2x2(eps, verify=True):
    """A = diag(1, 0), b = [1, eps]: EP, inconsistent for eps > 0."""
    eps = _nonneg("eps", eps)
    a = np.diag([1.0, 0.0])
    b = np.array([1.0, eps])
    refs = {
        "sigmaRankA": 1.0,
        "rStar": np.array([0.0, eps]),
        "xStar": np.array([1.0, 0.0]),
        "isEP": True,
    }
    return _build("ep_2x2", a, b, {"eps": eps}, refs, verify)


def near_ep_2x2(delta, eps, verify=True):
    """A = diag(1, delta), b = [1, eps]: nonsingular, kappa(A) = 1/delta for delta <= 1."""
    if delta == 0:
        raise ValueError("delta = 0 gives the singular case; use ep_2x2 instead")
    delta = _positive("delta", delta)
    eps = _positive("eps", eps)
    a = np.diag([1.0, delta])
    b = np.array([1.0, eps])
    refs = {
        "kappaA": max(delta, 1.0 / delta),
        "xExact": np.array([1.0, eps / delta]),
    }
    return _build("near_ep_2x2", a, b, {"delta": delta, "eps": eps}, refs, verify)


def ep_diagonal(n_half=64):
    exponents = -4.0 * np.arange(n_half) / (n_half - 1)
    return 10.0 ** exponents


def ep_diag_128(gamma, delta, verify=True):
    """A = diag(D, 0) with D log-spaced from 1 to 1e-4, b = [gamma...; delta...].

    ||b|R(A)|| = 8 gamma and ||b|N(A^T)|| = 8 delta; the system is
    consistent iff delta = 0.
    """
    gamma = _nonneg("gamma", gamma)
    delta = _nonneg("delta", delta)
    if gamma == 0 and delta == 0:
        raise ValueError("gamma and delta cannot both be zero")
    d = ep_diagonal()
    a = np.zeros((128, 128))
    a[:64, :64] = np.diag(d)
    b = np.concatenate([np.full(64, gamma), np.full(64, delta)])
    refs = {
        "kappaA": 1e4,
        "sigmaRankA": 1e-4,
        "bRangeNorm": 8 * gamma,
        "bNullNorm": 8 * delta,
        "rStar": np.concatenate([np.zeros(64), np.full(64, delta)]),
        "xStar": np.concatenate([gamma / d, np.zeros(64)]),
        "isEP": True,
    }
    return _build("ep_diag_128", a, b, {"gamma": gamma, "delta": delta}, refs, verify)


def gp_2x2(eps, verify=True):
    """A = [[eps, 1], [0, 0]], b = [1, 0]: GP and not EP for eps > 0, DR for eps = 0."""
    eps = _nonneg("eps", eps)
    a = np.array([[eps, 1.0], [0.0, 0.0]])
    b = np.array([1.0, 0.0])
    s = 1.0 + eps**2
    refs = {
        "xStar": np.array([eps, 1.0]) / s,
        "rStar": np.zeros(2),
        "sigmaRankA": np.sqrt(s),
        "isEP": False,
        "isGP": eps > 0,
    }
    if eps > 0:
        refs["xSharp"] = np.array([1.0 / eps, 0.0])
        refs["angleCosine"] = eps / np.sqrt(s)
    return _build("gp_2x2", a, b, {"eps": eps}, refs, verify)


def near_gp_2x2(delta, eps, verify=True):
    """A = [[eps, 1], [0, delta]], b = [1, -eps]: nonsingular, kappa(A) >= 1/(delta eps)."""
    delta = _positive("delta", delta)
    eps = _positive("eps", eps)
    a = np.array([[eps, 1.0], [0.0, delta]])
    b = np.array([1.0, -eps])
    x2 = -eps / delta
    refs = {
        "kappaALowerBound": 1.0 / (delta * eps) if delta * eps < 1 else 1.0,
        "xExact": np.array([(1.0 - x2) / eps, x2]),
    }
    return _build("near_gp_2x2", a, b, {"delta": delta, "eps": eps}, refs, verify)


def strakos_diagonal(rho, n_half=64):
    d_last = 10.0 ** (-rho)
    i = np.arange(1, n_half + 1)
    d = d_last + (n_half - i) / (n_half - 1) * (1.0 - d_last) * 0.7 ** (i - 1)
    d[0], d[-1] = 1.0, d_last
    return d


def strakos_gp_128(rho, verify=True):
    """A = [[D, I], [0, 0]] with Strakos-distributed D, b = [f; 0].

    f_i = 10^(-(64 - i) rho / 63). A is GP but not EP with
    kappa(A) = sqrt(2 / (10^(-2 rho) + 1)) and
    kappa(V1^T U1) = 10^rho sqrt((10^(-2 rho) + 1) / 2).
    """
    rho = _positive("rho", rho)
    d = strakos_diagonal(rho)
    a = np.zeros((128, 128))
    a[:64, :64] = np.diag(d)
    a[:64, 64:] = np.eye(64)
    i = np.arange(1, 65)
    f = 10.0 ** (-(64 - i) * rho / 63)
    b = np.concatenate([f, np.zeros(64)])
    t = 10.0 ** (-2 * rho)
    refs = {
        "kappaA": np.sqrt(2.0 / (t + 1.0)),
        "kappaK": 10.0**rho * np.sqrt((t + 1.0) / 2.0),
        "rStar": np.zeros(128),
        "isGP": True,
        "isEP": False,
    }
    return _build("strakos_gp_128", a, b, {"rho": rho}, refs, verify)


GENERATORS = {
    "ep_2x2": (ep_2x2, ("eps",)),
    "near_ep_2x2": (near_ep_2x2, ("delta", "eps")),
    "ep_diag_128": (ep_diag_128, ("gamma", "delta")),
    "gp_2x2": (gp_2x2, ("eps",)),
    "near_gp_2x2": (near_gp_2x2, ("delta", "eps")),
    "strakos_gp_128": (strakos_gp_128, ("rho",)),
}


def make(name, **params):
    try:
        fn, names = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}") from None
    missing = [p for p in names if p not in params]
    extra = [p for p in params if p not in names]
    if missing or extra:
        raise ValueError(f"{name} takes parameters {', '.join(names)}")
    return fn(*(params[p] for p in names))


def format_params(inst):
    lines = [f"name={inst.name}", f"n={inst.n}"]
    lines += [f"{k}={float(v)!r}" for k, v in inst.params.items()]
    return "\n".join(lines) + "\n"


def export(inst, directory, stem=None):
    """Write ``stem.A.txt``, ``stem.b.txt`` and ``stem.params``; return the paths."""
    stem = stem or inst.name
    os.makedirs(directory, exist_ok=True)
    paths = {
        "A": os.path.join(directory, f"{stem}.A.txt"),
        "b": os.path.join(directory, f"{stem}.b.txt"),
        "params": os.path.join(directory, f"{stem}.params"),
    }
    write_matrix(paths["A"], inst.a)
    write_matrix(paths["b"], inst.b.reshape(-1, 1))
    with open(paths["params"], "w") as fh:
        fh.write(format_params(inst))
    return paths
