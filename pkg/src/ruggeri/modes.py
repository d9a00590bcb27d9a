"""Characteristic-mode analysis: speeds, eigenvectors, nonlinearity coefficients.

Conventions
-----------
* Eulerian speeds are written through the relative speed ``mu = u - lam``;
  the branch argument "+" selects the right-running wave ``lam = u + |mu|``
  (i.e. ``mu = -sqrt(mu^2)``), "-" the left-running one.
* Lagrangian speeds come in symmetric pairs.  "fast" / "slow" name the larger
  / smaller of the two positive squared speeds; branch "+" / "-" picks the
  sign of ``lam`` itself.
* Eigenvectors are normalized so their sigma-component equals 1 whenever that
  component is nonzero; this fixes the scale of the nonlinearity coefficient
  ``r . grad(lam)``, whose sign would otherwise be arbitrary.
* Mode labels are positional in ascending speed order: ``(fast-, contact,
  fast+)`` for 3 fields, ``(fast-, contact, contact, fast+)`` for 4, and
  ``(fast-, slow-, contact, slow+, fast+)`` for 5.
* Contact modes are linearly degenerate; their ``gnl`` is 0 by construction.

Every closed form in this module is paired with an independent numeric
oracle: generalized eigenvalues of the pencil ``(A1, A0)`` for speeds, an SVD
nullspace for eigenvectors, and Richardson-extrapolated central differences
(of the tracked eigenvalue, or of the pencil determinant at frozen ``lam``)
for the nonlinearity coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import (
    ConfigError,
    DomainError,
    HyperbolicityError,
    InternalInconsistencyError,
)
from .models import (
    FluidParams,
    QuasilinearSystem,
    SystemL5,
    build_system,
    eos_lagrangian,
    l5_quartic_coeffs,
    mu_squared_e3,
    mu_squared_e4,
    state_array,
)

#: pencil residual bound for any reported eigenpair, relative to ||r||
RESIDUAL_TOL = 1e-9
#: imaginary-part tolerance for declaring a numeric eigenvalue real
IMAG_TOL = 1e-9
#: base step of all finite-difference oracles
FD_STEP = 1e-5

_LABELS = {
    3: ("fast-", "contact", "fast+"),
    4: ("fast-", "contact", "contact", "fast+"),
    5: ("fast-", "slow-", "contact", "slow+", "fast+"),
}


@dataclass
class ModeReport:
    """One characteristic mode: speed, eigenvector, nonlinearity, label.

    ``mu`` is the relative speed ``u - lam`` and is only set for Eulerian
    kinds.  ``residual`` is ``||(-lam*A0 + A1) r|| / ||r||`` for the reported
    eigenvector.  ``gnl`` is the directional derivative ``r . grad(lam)``;
    it is None on speeds-only reports.
    """

    lam: float
    label: str
    mu: Optional[float] = None
    r: Optional[np.ndarray] = None
    gnl: Optional[float] = None
    residual: Optional[float] = None


@dataclass(frozen=True)
class Pi0Report:
    """Equilibrium wave structure of the 5-field Lagrangian system.

    ``roots`` are the two squared nontrivial speeds (slow, fast), the zeros
    of the quadratic ``pi0(X) = (c*delta/theta^2) * X * (X - lam_2star_sq)
    - (X - lam_star_sq)`` in ``X = lam^2``.  ``alphas`` is the positive
    reference coefficient triple ``(alpha_tau, alpha_theta, alpha_q)``
    attached to the small-tau sign argument for the fast mode; the
    nonlinearity values ``N_fast`` / ``N_slow`` themselves are computed from
    the exact closed form (see :func:`gnl_l5`) evaluated on the positive
    branches ``lam = +sqrt(root)``.
    """

    lam_star_sq: float
    lam_2star_sq: float
    lam_tau_sq: float
    lam_theta_sq: float
    roots: Tuple[float, float]
    alphas: Tuple[float, float, float]
    N_fast: float
    N_slow: float


@dataclass(frozen=True)
class Crossing:
    """A sign change of the nonlinearity coefficient along the tau axis."""

    theta: float
    tau_lo: float
    tau_hi: float
    tau_zero: float


@dataclass(frozen=True)
class ScanReport:
    """Grid evaluation of :func:`gnl_l5` with refined sign crossings."""

    taus: np.ndarray
    thetas: np.ndarray
    values: np.ndarray  # shape (len(thetas), len(taus))
    signs: np.ndarray
    crossings: Tuple[Crossing, ...]


@dataclass(frozen=True)
class AnalysisResult:
    """Full per-state mode table plus oracle-agreement metrics.

    Mismatch entries are None when no closed form exists for the state, so
    callers can distinguish "not checked" from "checked and equal".
    """

    reports: Tuple[ModeReport, ...]
    max_residual: float
    speed_mismatch: Optional[float]
    eigvec_mismatch: Optional[float]
    gnl_mismatch: Optional[float]


# -- closed-form speeds ------------------------------------------------------


def speeds_e4(params: FluidParams, state) -> List[ModeReport]:
    """Speeds of the 4-field Eulerian system from the closed form.

    The two nontrivial speeds are ``u -+ sqrt(mu^2)`` with ``mu^2 = R*theta
    + theta/(eps*rho^2) + (R^2*rho^2*theta + 2*R*rho*sigma + sigma^2/theta)
    / (rho^2 * c)``; the double contact speed is ``u`` itself.  ``mu^2`` is
    a sum of squares for the ideal gas, so it is positive at every
    admissible state; a non-positive value is an internal inconsistency,
    not a domain error.
    """
    rho, u, theta, sigma = _unpack(state, 4)
    mu2 = mu_squared_e4(params, rho, theta, sigma)
    if not mu2 > 0.0:
        raise InternalInconsistencyError(
            f"squared relative speed must be positive, got {mu2!r}")
    m = math.sqrt(mu2)
    speeds = (u - m, u, u, u + m)
    out = []
    for lam, label in zip(speeds, _LABELS[4]):
        gnl = 0.0 if label == "contact" else None
        out.append(ModeReport(lam=lam, label=label, mu=u - lam, gnl=gnl))
    return out


def speeds_e3(params: FluidParams, state) -> List[ModeReport]:
    """Speeds of the isothermal 3-field system, ``u`` and ``u +- sqrt(mu^2)``.

    ``mu^2 = R + 1/(eps*rho^2)`` at every admissible state: the
    sigma-dependent terms of the pencil determinant cancel identically, so
    unlike the 4-field case no stress correction appears.
    """
    rho, u, sigma = _unpack(state, 3)
    m = math.sqrt(mu_squared_e3(params, rho))
    out = []
    for lam, label in zip((u - m, u, u + m), _LABELS[3]):
        gnl = 0.0 if label == "contact" else None
        out.append(ModeReport(lam=lam, label=label, mu=u - lam, gnl=gnl))
    return out


def speeds_l5_equilibrium(params: FluidParams, tau: float, theta: float) -> List[float]:
    """The five equilibrium Lagrangian speeds, ascending."""
    x_slow, x_fast = _pi0_roots(params, tau, theta)[:2]
    sf, ss = math.sqrt(x_fast), math.sqrt(x_slow)
    return [-sf, -ss, 0.0, ss, sf]


def closed_form_speeds(system: QuasilinearSystem, V) -> Optional[np.ndarray]:
    """Ascending closed-form speeds for the given state, or None.

    Closed forms exist for the 3- and 4-field Eulerian systems at every
    admissible state, and for the 5-field systems at equilibrium (the
    Lagrangian speeds, shifted by ``u`` and scaled by ``tau = 1/rho`` for
    the Eulerian variant).  Away from equilibrium the 5-field speeds have no
    displayed closed form and the generic eigensolver is the only route.
    """
    V = state_array(V, system.n)
    params = system.params
    if system.kind == "e4":
        return np.array([m.lam for m in speeds_e4(params, V)])
    if system.kind == "e3":
        return np.array([m.lam for m in speeds_e3(params, V)])
    if not system.is_equilibrium(V):
        return None
    if system.kind == "l5":
        return np.array(speeds_l5_equilibrium(params, V[0], V[2]))
    if system.kind == "e5":
        rho, u, theta = V[0], V[1], V[2]
        tau = 1.0 / rho
        lag = np.array(speeds_l5_equilibrium(params, tau, theta))
        return u + tau * lag
    return None


# -- generic numeric oracle --------------------------------------------------


def speeds_generic(system: QuasilinearSystem, V) -> List[ModeReport]:
    """Complete eigendecomposition of the pencil ``(A1, A0)`` at ``V``.

    Eigenvalues must be real within ``IMAG_TOL * max(1, |lam|)``; a larger
    imaginary part means hyperbolicity was lost numerically and raises
    :class:`HyperbolicityError` carrying the state and spectrum.  Pairs are
    sorted ascending and labeled positionally.
    """
    V = state_array(V, system.n)
    system.validate_primitive(V)
    a0 = system.a0(V)
    a1 = system.a1(V)
    w, vr = scipy.linalg.eig(a1, a0)
    bad = np.abs(w.imag) > IMAG_TOL * np.maximum(1.0, np.abs(w))
    if np.any(bad):
        raise HyperbolicityError(
            f"complex characteristic speeds at state {V.tolist()}",
            state=V, spectrum=w)
    order = np.argsort(w.real, kind="stable")
    lams = w.real[order]
    vecs = vr[:, order]
    is_euler = system.kind != "l5"
    u = V[system.index("u")] if is_euler else None
    out = []
    for k, label in enumerate(_LABELS[system.n]):
        r = _normalize_mode(_realize(vecs[:, k]), system)
        lam = float(lams[k])
        res = _pencil_residual(system, V, lam, r)
        if res > RESIDUAL_TOL:
            raise InternalInconsistencyError(
                f"eigenpair residual {res:.3e} exceeds {RESIDUAL_TOL} "
                f"for lam={lam!r}")
        out.append(ModeReport(
            lam=lam, label=label, mu=(u - lam) if is_euler else None,
            r=r, gnl=0.0 if label == "contact" else None, residual=res))
    return out


def track_eigenvalue(system: QuasilinearSystem, V, lam_ref: float) -> float:
    """The numeric eigenvalue at ``V`` nearest to ``lam_ref``.

    Valid as a continuation device near equilibrium because all nontrivial
    equilibrium speeds are simple; ties break toward the smaller value.
    """
    V = state_array(V, system.n)
    w = scipy.linalg.eigvals(system.a1(V), system.a0(V))
    bad = np.abs(w.imag) > IMAG_TOL * np.maximum(1.0, np.abs(w))
    if np.any(bad):
        raise HyperbolicityError(
            f"complex characteristic speeds at state {V.tolist()}",
            state=V, spectrum=w)
    lams = np.sort(w.real, kind="stable")
    return float(lams[np.argmin(np.abs(lams - lam_ref))])


def nullspace_vector(system: QuasilinearSystem, V, lam: float) -> np.ndarray:
    """Unit kernel vector of the pencil at ``(V, lam)`` via SVD."""
    V = state_array(V, system.n)
    _, _, vh = scipy.linalg.svd(system.pencil(V, lam))
    return vh[-1].real


def collinearity_sine(a: np.ndarray, b: np.ndarray) -> float:
    """Sine of the angle between two vectors (0 means collinear)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    an = a / np.linalg.norm(a)
    bn = b / np.linalg.norm(b)
    proj = bn - np.dot(an, bn) * an
    return float(np.linalg.norm(proj))


# -- 4-field equilibrium closed forms ----------------------------------------


def eigvec_e4_equilibrium(params: FluidParams, state, branch: str) -> ModeReport:
    """Equilibrium eigenvector of the 4-field system for one fast branch.

    ``r = (eps*rho^2/theta, -eps*rho*mu/theta, eps*R*rho/c, 1)`` with the
    signed ``mu`` of the chosen branch.  The sigma-component is 1 by
    construction; flipping the branch negates only the velocity component.
    """
    rho, u, theta, sigma = _unpack(state, 4)
    if sigma != 0.0:
        raise DomainError(
            f"equilibrium eigenvector requires sigma=0, got {sigma!r}")
    mu = _signed_mu(math.sqrt(mu_squared_e4(params, rho, theta, 0.0)), branch)
    lam = u - mu
    eps, R, c = params.eps, params.R, params.c
    r = np.array([
        eps * rho ** 2 / theta,
        -eps * rho * mu / theta,
        eps * R * rho / c,
        1.0,
    ])
    system = build_system("e4", params)
    V = np.array([rho, u, theta, 0.0])
    res = _pencil_residual(system, V, lam, r)
    if res > 1e-10:
        raise InternalInconsistencyError(
            f"closed-form eigenvector residual {res:.3e} exceeds 1e-10")
    label = "fast+" if branch in ("+", "fast+") else "fast-"
    return ModeReport(lam=lam, label=label, mu=mu, r=r,
                      gnl=gnl_e4(params, V, branch), residual=res)


def gnl_e4(params: FluidParams, state, branch: str) -> float:
    """Nonlinearity coefficient ``r . grad(lam)`` of a fast 4-field mode.

    Assembled from the exact equilibrium partials of ``mu^2``:

        d(mu^2)/drho   = -2*theta/(eps*rho^3)
        d(mu^2)/dtheta = R + R^2/c + 1/(eps*rho^2)
        d(mu^2)/dsigma = 2*R/(rho*c)
        dlam/du        = 1

    with ``dlam/dv = -d(mu)/dv = -d(mu^2)/dv / (2*mu)`` for the signed
    ``mu`` of the branch.  The scaled combination ``-2*mu*(r . grad(lam))``
    must exceed ``-2/rho + 2*eps*(rho/theta)*mu^2``, which is itself
    positive; both inequalities are asserted on every call, so a violation
    surfaces as an internal inconsistency rather than a wrong sign.
    """
    rho, u, theta, sigma = _unpack(state, 4)
    if sigma != 0.0:
        raise DomainError(f"nonlinearity closed form requires sigma=0, got {sigma!r}")
    eps, R, c = params.eps, params.R, params.c
    mu2 = mu_squared_e4(params, rho, theta, 0.0)
    mu = _signed_mu(math.sqrt(mu2), branch)
    dmu2_drho = -2.0 * theta / (eps * rho ** 3)
    dmu2_dtheta = R + R * R / c + 1.0 / (eps * rho ** 2)
    dmu2_dsigma = 2.0 * R / (rho * c)
    r_rho = eps * rho ** 2 / theta
    r_u = -eps * rho * mu / theta
    r_theta = eps * R * rho / c
    r_sigma = 1.0
    grad_part = r_rho * dmu2_drho + r_theta * dmu2_dtheta + r_sigma * dmu2_dsigma
    gnl = r_u - grad_part / (2.0 * mu)
    scaled = -2.0 * mu * gnl
    bound = -2.0 / rho + 2.0 * eps * (rho / theta) * mu2
    if not (scaled > bound and bound > 0.0):
        raise InternalInconsistencyError(
            f"nonlinearity bound chain violated: {scaled!r} > {bound!r} > 0 "
            f"must hold at rho={rho!r}, theta={theta!r}")
    return gnl


def gnl_fd_eigenvalue(system: QuasilinearSystem, V, r, lam_ref: float) -> float:
    """Finite-difference oracle for ``r . grad(lam)``.

    Central difference of the tracked numeric eigenvalue along direction
    ``r``, step ``FD_STEP * (1 + ||V||_inf) / ||r||_inf``, with one
    Richardson halving.
    """
    V = state_array(V, system.n)
    r = np.asarray(r, dtype=float)
    s = FD_STEP * (1.0 + float(np.max(np.abs(V)))) / float(np.max(np.abs(r)))

    def diff(h: float) -> float:
        hi = track_eigenvalue(system, V + h * r, lam_ref)
        lo = track_eigenvalue(system, V - h * r, lam_ref)
        return (hi - lo) / (2.0 * h)

    return (4.0 * diff(s / 2.0) - diff(s)) / 3.0


# -- 5-field Lagrangian equilibrium structure --------------------------------


def pi0_report(params: FluidParams, tau: float, theta: float) -> Pi0Report:
    """Equilibrium wave structure of the 5-field Lagrangian system.

    Solves ``pi0(X) = (c*delta/theta^2)*X*(X - lam_2star_sq)
    - (X - lam_star_sq) = 0`` for the squared speeds with the numerically
    stable quadratic formula, verifies the sign pattern ``pi0(0) > 0,
    pi0(lam_star_sq) < 0, pi0(lam_2star_sq) < 0`` and the ordering
    ``0 < X_slow < lam_star_sq < lam_2star_sq < X_fast``, and attaches the
    reference coefficient triple and the two fast/slow nonlinearity values
    on the positive branches.
    """
    params.require_heat_flux()
    x_slow, x_fast, ls2, l2s2 = _pi0_roots(params, tau, theta)
    R, c, eps, delta = params.R, params.c, params.eps, params.delta
    lam_tau_sq = theta ** 2 / (delta * (R + c))
    lam_theta_sq = theta ** 2 / (delta * c) + 2.0 * theta / eps
    alphas = (
        2.0 * eps ** 2 * delta * R * (R + c) / (tau ** 3 * theta ** 4),
        eps ** 2 * delta * c * tau / (R * theta),
        2.0 * eps ** 2 * tau / (R * theta ** 3),
    )
    return Pi0Report(
        lam_star_sq=ls2,
        lam_2star_sq=l2s2,
        lam_tau_sq=lam_tau_sq,
        lam_theta_sq=lam_theta_sq,
        roots=(x_slow, x_fast),
        alphas=alphas,
        N_fast=gnl_l5(params, tau, theta, "fast", "+"),
        N_slow=gnl_l5(params, tau, theta, "slow", "+"),
    )


def eigvec_l5_equilibrium(params: FluidParams, tau: float, theta: float,
                          lam: float) -> np.ndarray:
    """Kernel vector of the equilibrium Lagrangian pencil at speed ``lam``.

    ``r = (-eps/theta, (eps/theta)*lam, (eps/(theta*p_theta))*(lam^2
    - lam_star_sq), 1, (eps*theta/(delta*p_theta))*(lam^2 - lam_star_sq)
    / lam)``; the sigma-component is 1 and the heat-flux component equals
    ``theta^2/(delta*lam)`` times the temperature component.  ``lam`` must
    be a nonzero root of ``pi0``; the contact kernel is degenerate and not
    produced here.
    """
    if lam == 0.0:
        raise DomainError("contact speed has a degenerate kernel; lam must be nonzero")
    x_slow, x_fast, ls2, _ = _pi0_roots(params, tau, theta)
    X = lam * lam
    scale = max(x_fast, 1.0)
    if min(abs(X - x_slow), abs(X - x_fast)) > 1e-8 * scale:
        raise DomainError(
            f"lam^2={X!r} is not a squared equilibrium speed "
            f"(roots {x_slow!r}, {x_fast!r})")
    _, _, _, p_theta, _, _ = eos_lagrangian(params, tau, theta)
    eps, delta = params.eps, params.delta
    r = np.array([
        -eps / theta,
        (eps / theta) * lam,
        (eps / (theta * p_theta)) * (X - ls2),
        1.0,
        (eps * theta / (delta * p_theta)) * (X - ls2) / lam,
    ])
    system = SystemL5(params)
    V = np.array([tau, 0.0, theta, 0.0, 0.0])
    res = _pencil_residual(system, V, lam, r)
    if res > RESIDUAL_TOL:
        raise InternalInconsistencyError(
            f"kernel vector residual {res:.3e} exceeds {RESIDUAL_TOL}")
    return r


def gnl_l5(params: FluidParams, tau: float, theta: float,
           mode: str, branch: str) -> float:
    """Nonlinearity coefficient N of a nontrivial equilibrium Lagrangian mode.

    N is the directional derivative, along the kernel vector of
    :func:`eigvec_l5_equilibrium`, of the pencil determinant at frozen
    ``lam``; by the implicit function theorem ``r . grad(lam)
    = -N / (dPi/dlam)``, so N != 0 is exactly genuine nonlinearity of the
    mode.  Evaluated via the exact expanded form

        N = lam * (n3*X^3 + n2*X^2 + n1*X + n0),   X = lam^2,

    whose coefficients are rational in the parameters (derived once
    symbolically from the determinant and frozen here; the determinant
    finite-difference oracle :func:`gnl_l5_fd` reproduces them to machine
    precision).  N is odd in ``lam``, so flipping the branch flips its sign.
    For the fast mode with tau below :func:`find_tau_threshold` the sign is
    constant; the slow-mode sign is recorded but nowhere asserted.
    """
    lam = _l5_branch_speed(params, tau, theta, mode, branch)
    n3, n2, n1, n0 = _nonlinearity_cubic(params, tau, theta)
    X = lam * lam
    return lam * (((n3 * X + n2) * X + n1) * X + n0)


def gnl_l5_fd(params: FluidParams, tau: float, theta: float,
              mode: str, branch: str) -> float:
    """Determinant finite-difference oracle for :func:`gnl_l5`.

    Central difference of ``det(-lam*A0 + A1)`` along the kernel vector with
    ``lam`` frozen at the equilibrium speed, step ``FD_STEP
    * (1 + ||V||_inf) / ||r||_inf``, one Richardson halving.
    """
    lam = _l5_branch_speed(params, tau, theta, mode, branch)
    r = eigvec_l5_equilibrium(params, tau, theta, lam)
    system = SystemL5(params)
    V = np.array([tau, 0.0, theta, 0.0, 0.0])
    s = FD_STEP * (1.0 + float(np.max(np.abs(V)))) / float(np.max(np.abs(r)))

    def det_at(W: np.ndarray) -> float:
        return float(np.linalg.det(system.pencil(W, lam)))

    def diff(h: float) -> float:
        return (det_at(V + h * r) - det_at(V - h * r)) / (2.0 * h)

    return (4.0 * diff(s / 2.0) - diff(s)) / 3.0


def l5_speed_gradient(params: FluidParams, tau: float, theta: float,
                      mode: str, branch: str) -> float:
    """``r . grad(lam)`` for a Lagrangian mode, via ``-N / (dPi/dlam)``.

    ``dPi/dlam`` is evaluated from the equilibrium determinant polynomial
    ``Pi = lam*(c4*X^2 + c2*X + c0)``; it is nonzero at the simple roots, so
    the quotient is well defined.
    """
    lam = _l5_branch_speed(params, tau, theta, mode, branch)
    c4, _, c2, _, c0 = l5_quartic_coeffs(params, tau, theta, 0.0, 0.0)
    X = lam * lam
    dpi_dlam = 5.0 * c4 * X * X + 3.0 * c2 * X + c0
    if dpi_dlam == 0.0:
        raise InternalInconsistencyError(
            "determinant lam-derivative vanished at a simple root")
    return -gnl_l5(params, tau, theta, mode, branch) / dpi_dlam


def find_tau_threshold(params: FluidParams, theta: float) -> float:
    """Largest tau with ``max(lam_tau_sq, lam_theta_sq) < lam_star_sq``.

    Closed form ``tau_max = sqrt(R*theta / (max(lam_tau_sq, lam_theta_sq)
    - theta/eps))``; when the denominator is not positive the condition
    holds for every tau and the threshold is +inf.
    """
    if theta <= 0.0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    params.require_heat_flux()
    R, c, eps, delta = params.R, params.c, params.eps, params.delta
    lam_tau_sq = theta ** 2 / (delta * (R + c))
    lam_theta_sq = theta ** 2 / (delta * c) + 2.0 * theta / eps
    den = max(lam_tau_sq, lam_theta_sq) - theta / eps
    if den <= 0.0:
        return math.inf
    return math.sqrt(R * theta / den)


def find_tau_threshold_bisect(params: FluidParams, theta: float,
                              tol: float = 1e-9) -> float:
    """Bisection oracle for :func:`find_tau_threshold`.

    Works on the predicate itself (both squared thresholds below
    ``lam_star_sq(tau)``), which is monotone in tau; brackets by doubling
    and halving from tau=1.
    """
    if theta <= 0.0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    params.require_heat_flux()
    R, c, eps, delta = params.R, params.c, params.eps, params.delta
    lam_tau_sq = theta ** 2 / (delta * (R + c))
    lam_theta_sq = theta ** 2 / (delta * c) + 2.0 * theta / eps

    def pred(tau: float) -> bool:
        lam_star_sq = R * theta / tau ** 2 + theta / eps
        return max(lam_tau_sq, lam_theta_sq) < lam_star_sq

    hi = 1.0
    doublings = 0
    while pred(hi):
        hi *= 2.0
        doublings += 1
        if doublings > 600:
            return math.inf
    lo = hi / 2.0
    while not pred(lo):
        lo /= 2.0
        if lo < 1e-300:
            raise InternalInconsistencyError(
                "threshold predicate false for arbitrarily small tau")
    while hi - lo > tol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def degeneracy_scan(params: FluidParams, taus: Sequence[float],
                    thetas: Sequence[float], mode: str,
                    branch: str = "+") -> ScanReport:
    """Evaluate :func:`gnl_l5` on a (tau, theta) grid and bracket sign changes.

    Any sign change between tau-adjacent grid points is refined by bisection
    to 1e-8 in tau (a candidate degeneracy point).  An empty grid yields an
    empty report.
    """
    taus = np.asarray(list(taus), dtype=float)
    thetas = np.asarray(list(thetas), dtype=float)
    values = np.empty((thetas.size, taus.size))
    for i, th in enumerate(thetas):
        for j, ta in enumerate(taus):
            values[i, j] = gnl_l5(params, ta, th, mode, branch)
    signs = np.sign(values).astype(int)
    crossings = []
    for i, th in enumerate(thetas):
        for j in range(taus.size - 1):
            a, b = values[i, j], values[i, j + 1]
            if a == 0.0 or a * b >= 0.0:
                continue
            lo, hi = taus[j], taus[j + 1]
            flo = a
            while hi - lo > 1e-8:
                mid = 0.5 * (lo + hi)
                fmid = gnl_l5(params, mid, th, mode, branch)
                if fmid == 0.0 or fmid * flo < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            crossings.append(Crossing(
                theta=float(th), tau_lo=float(taus[j]),
                tau_hi=float(taus[j + 1]), tau_zero=0.5 * (lo + hi)))
    return ScanReport(taus=taus, thetas=thetas, values=values, signs=signs,
                      crossings=tuple(crossings))


# -- cross-kind equilibrium eigenvectors (solver seeding) ---------------------


def equilibrium_eigenvector(kind: str, params: FluidParams, reference,
                            label: str) -> Tuple[float, np.ndarray]:
    """Speed and eigenvector of one nontrivial mode at an equilibrium state.

    ``label`` is one of ``fast+``, ``fast-`` (all kinds) or ``slow+``,
    ``slow-`` (5-field kinds).  The 5-field Eulerian eigenvector is the
    Lagrangian kernel mapped through the change of variables ``tau = 1/rho``
    (first component scaled by ``-1/tau^2``, speed shifted by ``u`` and
    scaled by ``tau``); the mapped vector keeps sigma-component 1 and its
    pencil residual is re-verified on the Eulerian side.
    """
    mode, branch = _parse_label(label)
    V = state_array(reference)
    if kind in ("e4", "e3") and mode != "fast":
        raise ConfigError(f"kind {kind!r} has no {mode!r} mode")
    if kind == "e4":
        rep = eigvec_e4_equilibrium(params, V, branch)
        return rep.lam, rep.r
    if kind == "e3":
        rho, u, sigma = V
        if sigma != 0.0:
            raise DomainError(f"equilibrium eigenvector requires sigma=0, got {sigma!r}")
        mu = _signed_mu(math.sqrt(mu_squared_e3(params, rho)), branch)
        lam = u - mu
        r = np.array([params.eps * rho ** 2, -params.eps * rho * mu, 1.0])
        system = build_system("e3", params)
        res = _pencil_residual(system, V, lam, r)
        if res > RESIDUAL_TOL:
            raise InternalInconsistencyError(
                f"closed-form eigenvector residual {res:.3e} exceeds {RESIDUAL_TOL}")
        return lam, r
    if kind == "l5":
        tau, theta = V[0], V[2]
        _require_equilibrium_5(V)
        lam = _l5_branch_speed(params, tau, theta, mode, branch)
        return lam, eigvec_l5_equilibrium(params, tau, theta, lam)
    if kind == "e5":
        rho, u, theta = V[0], V[1], V[2]
        _require_equilibrium_5(V)
        tau = 1.0 / rho
        lam_l = _l5_branch_speed(params, tau, theta, mode, branch)
        r_l = eigvec_l5_equilibrium(params, tau, theta, lam_l)
        lam = u + tau * lam_l
        r = r_l.copy()
        r[0] = -r_l[0] / tau ** 2
        system = build_system("e5", params)
        res = _pencil_residual(system, V, lam, r)
        if res > RESIDUAL_TOL:
            raise InternalInconsistencyError(
                f"mapped eigenvector residual {res:.3e} exceeds {RESIDUAL_TOL}")
        return lam, r
    raise ConfigError(f"unknown kind {kind!r}")


# -- full-state analysis -------------------------------------------------------


def analyze(system: QuasilinearSystem, V, fd_gnl: bool = True) -> AnalysisResult:
    """Mode table for one state, with every closed form checked on the spot.

    Numeric speeds and eigenvectors come from :func:`speeds_generic`.  Where
    a closed form exists it replaces the numeric quantity in the table and
    the disagreement (relative for speeds, collinearity sine for
    eigenvectors, relative for nonlinearity coefficients against the
    finite-difference oracle) is folded into the result metrics; callers
    decide how much disagreement is acceptable.  ``fd_gnl=False`` skips the
    finite-difference nonlinearity column for states where no closed form
    exists (it is the expensive part of the table).
    """
    V = state_array(V, system.n)
    reports = speeds_generic(system, V)
    max_residual = max(m.residual for m in reports)
    closed = closed_form_speeds(system, V)
    speed_mismatch: Optional[float] = None
    if closed is not None:
        lams = np.array([m.lam for m in reports])
        scale = np.maximum(1.0, np.abs(closed))
        speed_mismatch = float(np.max(np.abs(lams - np.sort(closed)) / scale))
    eq = system.is_equilibrium(V)
    eigvec_mismatch: Optional[float] = None
    gnl_mismatch: Optional[float] = None
    for rep in reports:
        if rep.label == "contact":
            continue
        rc = _closed_form_eigvec(system, V, rep.label) if eq else None
        if rc is not None:
            eigvec_mismatch = _fold_max(
                eigvec_mismatch, collinearity_sine(rc, rep.r))
            rep.r = rc
            rep.residual = _pencil_residual(system, V, rep.lam, rc)
        gnl_closed = _closed_form_gnl(system, V, rep.label) if eq else None
        if gnl_closed is not None:
            rep.gnl = gnl_closed
            if fd_gnl:
                fd = gnl_fd_eigenvalue(system, V, rep.r, rep.lam)
                gnl_mismatch = _fold_max(
                    gnl_mismatch,
                    abs(fd - gnl_closed) / max(1e-300, abs(gnl_closed)))
        elif fd_gnl:
            rep.gnl = gnl_fd_eigenvalue(system, V, rep.r, rep.lam)
        max_residual = max(max_residual, rep.residual)
    return AnalysisResult(
        reports=tuple(reports), max_residual=max_residual,
        speed_mismatch=speed_mismatch, eigvec_mismatch=eigvec_mismatch,
        gnl_mismatch=gnl_mismatch)


# -- helpers -------------------------------------------------------------------


def _unpack(state, n: int) -> np.ndarray:
    V = state_array(state)
    if V.shape != (n,):
        raise DomainError(f"expected a state of {n} fields, got shape {V.shape}")
    return V


def _signed_mu(magnitude: float, branch: str) -> float:
    if branch in ("+", "fast+"):
        return -magnitude
    if branch in ("-", "fast-"):
        return magnitude
    raise ConfigError(f"branch must be '+' or '-', got {branch!r}")


def _parse_label(label: str) -> Tuple[str, str]:
    if label and label[-1] in "+-" and label[:-1] in ("fast", "slow"):
        return label[:-1], label[-1]
    raise ConfigError(
        f"mode label must be fast+/fast-/slow+/slow-, got {label!r}")


def _require_equilibrium_5(V: np.ndarray) -> None:
    if V[3] != 0.0 or V[4] != 0.0:
        raise DomainError(
            f"equilibrium eigenvector requires sigma=q=0, got "
            f"sigma={V[3]!r}, q={V[4]!r}")


def _pencil_residual(system: QuasilinearSystem, V, lam: float,
                     r: np.ndarray) -> float:
    V = state_array(V, system.n)
    return float(np.linalg.norm(system.pencil(V, lam) @ r)
                 / np.linalg.norm(r))


def _realize(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    return (vec / phase).real


def _normalize_mode(r: np.ndarray, system: QuasilinearSystem) -> np.ndarray:
    s = r[system.index("sigma")]
    if abs(s) > 1e-8 * np.max(np.abs(r)):
        return r / s
    r = r / np.linalg.norm(r)
    k = int(np.argmax(np.abs(r)))
    return r if r[k] > 0 else -r


def _pi0_roots(params: FluidParams, tau: float,
               theta: float) -> Tuple[float, float, float, float]:
    """Roots of pi0 plus (lam_star_sq, lam_2star_sq), all validated."""
    if tau <= 0.0 or theta <= 0.0:
        raise DomainError(
            f"tau and theta must be positive, got {tau!r}, {theta!r}")
    params.require_heat_flux()
    _, _, p_tau, p_theta, _, e_theta = eos_lagrangian(params, tau, theta)
    ls2 = -p_tau + theta / params.eps
    l2s2 = ls2 + theta * p_theta ** 2 / e_theta
    a = e_theta * params.delta / theta ** 2
    b = -(a * l2s2 + 1.0)
    d = ls2
    disc = b * b - 4.0 * a * d
    if disc <= 0.0:
        raise InternalInconsistencyError(
            f"speed quadratic must have two real roots, discriminant {disc!r}")
    # b < 0 always, so this is the cancellation-free variant
    qq = 0.5 * (-b + math.sqrt(disc))
    x_fast = qq / a
    x_slow = d / qq
    pi0_at = lambda X: a * X * (X - l2s2) - (X - ls2)
    if not (pi0_at(0.0) > 0.0 and pi0_at(ls2) < 0.0 and pi0_at(l2s2) < 0.0):
        raise InternalInconsistencyError(
            f"sign pattern of the speed quadratic violated at tau={tau!r}, "
            f"theta={theta!r}")
    if not (0.0 < x_slow < ls2 < l2s2 < x_fast):
        raise InternalInconsistencyError(
            f"speed ordering violated: {x_slow!r}, {ls2!r}, {l2s2!r}, {x_fast!r}")
    return x_slow, x_fast, ls2, l2s2


def _l5_branch_speed(params: FluidParams, tau: float, theta: float,
                     mode: str, branch: str) -> float:
    x_slow, x_fast = _pi0_roots(params, tau, theta)[:2]
    if mode == "fast":
        X = x_fast
    elif mode == "slow":
        X = x_slow
    else:
        raise ConfigError(f"mode must be 'fast' or 'slow', got {mode!r}")
    if branch == "+":
        return math.sqrt(X)
    if branch == "-":
        return -math.sqrt(X)
    raise ConfigError(f"branch must be '+' or '-', got {branch!r}")


def _nonlinearity_cubic(params: FluidParams, tau: float,
                        theta: float) -> Tuple[float, float, float, float]:
    """Coefficients (n3, n2, n1, n0) of N/lam as a cubic in X = lam^2."""
    R, c, eps, delta = params.R, params.c, params.eps, params.delta
    t2 = tau * tau
    n3 = 3.0 * c * delta * eps ** 2 * tau / (R * theta ** 5)
    n2 = -eps * (2.0 * R ** 2 * delta * eps + 5.0 * R * c * delta * eps
                 + 5.0 * c * delta * t2 - eps * t2 * theta) / (R * tau * theta ** 4)
    n1 = (4.0 * R ** 3 * delta * eps ** 2 + 4.0 * R ** 2 * c * delta * eps ** 2
          + 4.0 * R ** 2 * delta * eps * t2 + 4.0 * R * c * delta * eps * t2
          - 3.0 * R * eps ** 2 * t2 * theta + 2.0 * c * delta * t2 * t2
          - 3.0 * eps * t2 * t2 * theta) / (R * tau ** 3 * theta ** 3)
    n0 = 2.0 * (2.0 * R * eps + t2) / (R * tau * theta)
    return n3, n2, n1, n0


def _closed_form_eigvec(system: QuasilinearSystem, V,
                        label: str) -> Optional[np.ndarray]:
    try:
        _, r = equilibrium_eigenvector(system.kind, system.params, V, label)
    except ConfigError:
        return None
    return r


def _closed_form_gnl(system: QuasilinearSystem, V,
                     label: str) -> Optional[float]:
    mode, branch = _parse_label(label)
    if system.kind == "e4" and mode == "fast":
        return gnl_e4(system.params, V, branch)
    if system.kind == "l5":
        return l5_speed_gradient(system.params, V[0], V[2], mode, branch)
    return None


def _fold_max(acc: Optional[float], value: float) -> float:
    return value if acc is None else max(acc, value)
