"""Fluid parameters, equations of state, and the quasilinear system builders.

Four one-dimensional compressible relaxation systems are supported, keyed by
a short kind string:

==== =========================================== ==========================
kind primitive fields                            description
==== =========================================== ==========================
e4   (rho, u, theta, sigma)                      Eulerian, dynamic stress
e5   (rho, u, theta, sigma, q)                   e4 plus dynamic heat flux
e3   (rho, u, sigma)                             isothermal Eulerian
l5   (tau, u, theta, sigma, q)                   Lagrangian twin of e5
==== =========================================== ==========================

Every system is handled in the quasilinear form

    A0(V) V_t + A1(V) V_x = source(V)

with primitive variables as the canonical representation.  Conserved vectors
exist only at the solver boundary: ``primitive_to_conserved`` maps to
(rho, rho*u, rho*(e + u^2/2), eps*rho*sigma/theta[, delta*rho*q/theta^2]) for
the Eulerian kinds and the inverse map rejects states implying rho <= 0 or
theta <= 0 instead of clamping them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ReconstructionError

KINDS = ("e4", "e5", "e3", "l5")


@dataclass(frozen=True)
class FluidParams:
    """Material and relaxation parameters.

    R, c      : ideal-gas constant and specific heat (p = R*theta*rho, e = c*theta)
    eta       : stress relaxation time scale (source -sigma/eta)
    eps       : stress hyperbolic-penalty coefficient
    delta,chi : heat-flux analogues; required only by the five-field kinds
    """

    R: float
    c: float
    eta: float
    eps: float
    delta: Optional[float] = None
    chi: Optional[float] = None

    def __post_init__(self):
        for name in ("R", "c", "eta", "eps"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0.0:
                raise DomainError(f"FluidParams.{name} must be positive, got {value!r}")
        for name in ("delta", "chi"):
            value = getattr(self, name)
            if value is not None and (not np.isfinite(value) or value <= 0.0):
                raise DomainError(f"FluidParams.{name} must be positive when set, got {value!r}")

    def require_heat_flux(self) -> None:
        if self.delta is None or self.chi is None:
            raise ConfigError("five-field systems need delta and chi set in FluidParams")


@dataclass(frozen=True)
class StateE4:
    rho: float
    u: float
    theta: float
    sigma: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.rho, self.u, self.theta, self.sigma], dtype=float)


@dataclass(frozen=True)
class StateE5:
    rho: float
    u: float
    theta: float
    sigma: float
    q: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.rho, self.u, self.theta, self.sigma, self.q], dtype=float)


@dataclass(frozen=True)
class StateE3:
    rho: float
    u: float
    sigma: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.rho, self.u, self.sigma], dtype=float)


@dataclass(frozen=True)
class StateL5:
    tau: float
    u: float
    theta: float
    sigma: float
    q: float

    @property
    def array(self) -> np.ndarray:
        return np.array([self.tau, self.u, self.theta, self.sigma, self.q], dtype=float)


def eos(params: FluidParams, rho, theta):
    """Ideal-gas closure in Eulerian variables.

    Returns (p, e, p_rho, p_theta, e_theta).  Rejects rho <= 0 or theta <= 0.
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho <= 0.0) or np.any(theta <= 0.0):
        raise DomainError("eos requires rho > 0 and theta > 0")
    p = params.R * theta * rho
    e = params.c * theta
    p_rho = params.R * theta
    p_theta = params.R * rho
    e_theta = params.c * np.ones_like(p)
    return p, e, p_rho, p_theta, e_theta


def eos_lagrangian(params: FluidParams, tau, theta):
    """Ideal-gas closure in Lagrangian variables (specific volume tau).

    Returns (p, e, p_tau, p_theta, e_tau, e_theta).  The combination
    p + e_tau - theta*p_theta vanishes identically for this closure; several
    closed-form results below rely on that identity.
    """
    tau = np.asarray(tau, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(tau <= 0.0) or np.any(theta <= 0.0):
        raise DomainError("eos_lagrangian requires tau > 0 and theta > 0")
    p = params.R * theta / tau
    e = params.c * theta
    p_tau = -params.R * theta / tau**2
    p_theta = params.R / tau
    e_tau = np.zeros_like(p)
    e_theta = params.c * np.ones_like(p)
    return p, e, p_tau, p_theta, e_tau, e_theta


def mu_squared_e4(params: FluidParams, rho, theta, sigma):
    """Squared relative speed mu^2 = (u - lambda)^2 of the four-field sound pair.

    Valid for arbitrary stress sigma:

        mu^2 = p_rho + theta/(eps rho^2)
             + [theta p_theta^2 + 2 p_theta sigma + sigma^2/theta] / (rho^2 e_theta)

    The bracket equals (p_theta sqrt(theta) + sigma/sqrt(theta))^2 >= 0, so the
    result is provably >= p_rho + theta/(eps rho^2) > 0.
    """
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    _, _, p_rho, p_theta, e_theta = eos(params, rho, theta)
    bracket = theta * p_theta**2 + 2.0 * p_theta * sigma + sigma**2 / theta
    return p_rho + theta / (params.eps * rho**2) + bracket / (rho**2 * e_theta)


def mu_squared_e3(params: FluidParams, rho):
    """Squared relative speed of the isothermal pair: R + 1/(eps rho^2).

    Independent of sigma; the sigma terms cancel in the 3x3 pencil determinant
    eps rho^2 mu (mu^2 - R - 1/(eps rho^2)).
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise DomainError("mu_squared_e3 requires rho > 0")
    return params.R + 1.0 / (params.eps * rho**2)


def det_pencil_e4_closed(params: FluidParams, V, mu):
    """Closed-form determinant of the four-field pencil at relative speed mu.

    det M = eps*(rho/theta)*mu^2*(mu^2 rho^2 e_theta
            - (sigma p_theta + rho^2 p_rho e_theta + theta p_theta^2))
            - mu^2*(rho e_theta + eps*(rho/theta) p_theta sigma
            + eps*(rho/theta^2) sigma^2)

    Cross-checked against an LU determinant of -lambda*A0 + A1 in the tests.
    """
    rho, _, theta, sigma = np.asarray(V, dtype=float)
    eps = params.eps
    _, _, p_rho, p_theta, e_theta = eos(params, rho, theta)
    mu = np.asarray(mu, dtype=float)
    lead = eps * (rho / theta) * mu**2 * (
        mu**2 * rho**2 * e_theta - (sigma * p_theta + rho**2 * p_rho * e_theta + theta * p_theta**2)
    )
    tail = mu**2 * (rho * e_theta + eps * (rho / theta) * p_theta * sigma + eps * (rho / theta**2) * sigma**2)
    return lead - tail


def l5_quartic_coeffs(params: FluidParams, tau, theta, sigma, q):
    """Coefficients (c4, c3, c2, c1, c0) of the nontrivial Lagrangian factor.

    The five-field Lagrangian pencil determinant factors exactly as
    lambda * (c4 l^4 + c3 l^3 + c2 l^2 + c1 l + c0); the odd coefficients are
    proportional to q, so the factor is biquadratic whenever q = 0.
    """
    params.require_heat_flux()
    tau = np.asarray(tau, dtype=float)
    theta = np.asarray(theta, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(tau <= 0.0) or np.any(theta <= 0.0):
        raise DomainError("l5_quartic_coeffs requires tau > 0 and theta > 0")
    R, c, eps, delta = params.R, params.c, params.eps, params.delta
    c4 = -c * delta * eps / theta**3 * np.ones_like(tau * theta)
    c3 = 2.0 * delta * eps * q / theta**4
    c2 = (
        R**2 * delta * eps / (tau**2 * theta**2)
        + R * c * delta * eps / (tau**2 * theta**2)
        + 2.0 * R * delta * eps * sigma / (tau * theta**3)
        + c * delta / theta**2
        + delta * eps * sigma**2 / theta**4
        + eps / theta
    )
    c1 = -2.0 * delta * q * (R * eps + tau**2) / (tau**2 * theta**3)
    c0 = -(R * eps + tau**2) / tau**2
    return c4, c3, c2, c1, c0


def l5_max_root(params: FluidParams, tau, theta, sigma, q, newton_iters: int = 16):
    """Upper estimate of the largest |root| of the Lagrangian quartic factor.

    Exact (biquadratic) when q = 0.  Otherwise Newton's method is started at
    the Fujiwara root bound and run on both the quartic and its reflection;
    for a real-rooted polynomial that iteration decreases monotonically and
    never drops below the outermost root, so truncating it still yields a
    valid speed bound.  This is a dissipation/CFL bound for the solver, not
    an analysis result; tests check it brackets the generic eigensolver's
    speeds without exceeding them by more than a few percent.
    """
    c4, c3, c2, c1, c0 = l5_quartic_coeffs(params, tau, theta, sigma, q)
    if np.all(q == 0.0):
        # largest root of the even part c4 X^2 + c2 X + c0 (c4 < 0, c0 < 0)
        disc = c2**2 - 4.0 * c4 * c0
        root = np.sqrt(np.maximum(disc, 0.0))
        x_hi = np.maximum((-c2 + root) / (2.0 * c4), (-c2 - root) / (2.0 * c4))
        return np.sqrt(np.maximum(x_hi, 0.0))
    bound = 2.0 * np.maximum.reduce([
        np.abs(c3 / c4),
        np.abs(c2 / c4) ** 0.5,
        np.abs(c1 / c4) ** (1.0 / 3.0),
        np.abs(c0 / c4) ** 0.25,
    ])
    best = np.zeros_like(bound)
    for sign in (1.0, -1.0):
        lam = np.array(bound, dtype=float, copy=True)
        b3, b1 = sign * c3, sign * c1
        for _ in range(newton_iters):
            val = (((c4 * lam + b3) * lam + c2) * lam + b1) * lam + c0
            der = ((4.0 * c4 * lam + 3.0 * b3) * lam + 2.0 * c2) * lam + b1
            step = val / np.where(der == 0.0, -1.0, der)
            # never step upward past the proven bound
            lam = np.minimum(lam - step, bound)
        best = np.maximum(best, lam)
    return 1.0001 * best


class QuasilinearSystem:
    """One system in quasilinear form plus its solver-facing maps.

    Scalar-state methods (``a0``, ``a1``, ``source``, ``pencil``) take a
    primitive vector of shape (n,).  The conversion, flux, and speed methods
    broadcast over trailing cell axes, accepting shape (n,) or (n, m).
    """

    kind: str
    fields: tuple
    nonconservative_rows: tuple
    # per flagged row: index of the primitive field whose x-derivative enters
    # the evolved form with coefficient -1
    noncons_gradient_fields: tuple

    def __init__(self, params: FluidParams):
        self.params = params

    @property
    def n(self) -> int:
        return len(self.fields)

    def index(self, name: str) -> int:
        return self.fields.index(name)

    # -- analysis interface -------------------------------------------------

    def a0(self, V) -> np.ndarray:
        raise NotImplementedError

    def a1(self, V) -> np.ndarray:
        raise NotImplementedError

    def source(self, V) -> np.ndarray:
        raise NotImplementedError

    def pencil(self, V, lam: float) -> np.ndarray:
        """-lam*A0(V) + A1(V)."""
        return -lam * self.a0(V) + self.a1(V)

    # -- solver interface ---------------------------------------------------

    def validate_primitive(self, V) -> None:
        raise NotImplementedError

    def is_equilibrium(self, V, tol: float = 0.0) -> bool:
        V = np.asarray(V, dtype=float)
        idx = [self.index("sigma")]
        if "q" in self.fields:
            idx.append(self.index("q"))
        return bool(np.all(np.abs(V[idx]) <= tol))

    def primitive_to_conserved(self, V) -> np.ndarray:
        raise NotImplementedError

    def conserved_to_primitive(self, U) -> np.ndarray:
        raise NotImplementedError

    def flux(self, V) -> np.ndarray:
        raise NotImplementedError

    def max_wave_speed(self, V) -> np.ndarray:
        raise NotImplementedError

    def relaxation_times(self, V) -> np.ndarray:
        """Per-cell time constants of the relaxation sources (for dt caps)."""
        raise NotImplementedError

    def _check_positive(self, name, value, where="cell"):
        value = np.asarray(value)
        if np.any(value <= 0.0) or not np.all(np.isfinite(value)):
            flat = np.atleast_1d(value)
            bad = int(np.argmin(np.where(np.isfinite(flat), flat, -np.inf)))
            raise ReconstructionError(
                f"{name} must be positive, got {float(flat[bad])!r} at {where} {bad}",
                cell=bad, value=float(flat[bad]),
            )


class SystemE4(QuasilinearSystem):
    kind = "e4"
    fields = ("rho", "u", "theta", "sigma")
    nonconservative_rows = (3,)
    noncons_gradient_fields = ((3, 1),)  # row 3 carries -d(u)/dx

    def a0(self, V):
        rho, u, theta, sigma = np.asarray(V, dtype=float)
        eps = self.params.eps
        _, _, _, _, e_theta = eos(self.params, rho, theta)
        return np.array([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, rho, 0.0, 0.0],
            [0.0, 0.0, rho * e_theta, 0.0],
            [eps * sigma / theta, 0.0, -eps * rho * sigma / theta**2, eps * rho / theta],
        ])

    def a1(self, V):
        rho, u, theta, sigma = np.asarray(V, dtype=float)
        eps = self.params.eps
        p, _, p_rho, p_theta, e_theta = eos(self.params, rho, theta)
        return np.array([
            [u, rho, 0.0, 0.0],
            [p_rho, rho * u, p_theta, 1.0],
            [0.0, p + sigma, rho * e_theta * u, 0.0],
            [eps * u * sigma / theta, 1.0 + eps * rho * sigma / theta,
             -eps * rho * u * sigma / theta**2, eps * rho * u / theta],
        ])

    def source(self, V):
        V = np.asarray(V, dtype=float)
        out = np.zeros_like(V)
        out[3] = -V[3] / self.params.eta
        return out

    def validate_primitive(self, V):
        V = np.asarray(V, dtype=float)
        self._check_positive("rho", V[0])
        self._check_positive("theta", V[2])

    def primitive_to_conserved(self, V):
        rho, u, theta, sigma = np.asarray(V, dtype=float)
        _, e, _, _, _ = eos(self.params, rho, theta)
        return np.stack([
            rho,
            rho * u,
            rho * (e + 0.5 * u**2),
            self.params.eps * rho * sigma / theta,
        ])

    def conserved_to_primitive(self, U):
        U = np.asarray(U, dtype=float)
        rho = U[0]
        self._check_positive("rho", rho)
        u = U[1] / rho
        theta = (U[2] / rho - 0.5 * u**2) / self.params.c
        self._check_positive("theta", theta)
        sigma = U[3] * theta / (self.params.eps * rho)
        return np.stack([rho, u, theta, sigma])

    def flux(self, V):
        rho, u, theta, sigma = np.asarray(V, dtype=float)
        p, e, _, _, _ = eos(self.params, rho, theta)
        return np.stack([
            rho * u,
            rho * u**2 + p + sigma,
            (rho * (e + 0.5 * u**2) + p + sigma) * u,
            self.params.eps * rho * u * sigma / theta,
        ])

    def max_wave_speed(self, V):
        rho, u, theta, sigma = np.asarray(V, dtype=float)
        return np.abs(u) + np.sqrt(mu_squared_e4(self.params, rho, theta, sigma))

    def relaxation_times(self, V):
        rho, u, theta, sigma = np.asarray(V, dtype=float)
        return self.params.eps * rho * self.params.eta / theta


class SystemE5(QuasilinearSystem):
    kind = "e5"
    fields = ("rho", "u", "theta", "sigma", "q")
    nonconservative_rows = (3, 4)
    noncons_gradient_fields = ((3, 1), (4, 2))  # -d(u)/dx and -d(theta)/dx

    def __init__(self, params: FluidParams):
        params.require_heat_flux()
        super().__init__(params)

    def a0(self, V):
        rho, u, theta, sigma, q = np.asarray(V, dtype=float)
        eps, delta = self.params.eps, self.params.delta
        _, _, _, _, e_theta = eos(self.params, rho, theta)
        return np.array([
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, rho, 0.0, 0.0, 0.0],
            [0.0, 0.0, rho * e_theta, 0.0, 0.0],
            [eps * sigma / theta, 0.0, -eps * rho * sigma / theta**2, eps * rho / theta, 0.0],
            [delta * q / theta**2, 0.0, -2.0 * delta * rho * q / theta**3, 0.0, delta * rho / theta**2],
        ])

    def a1(self, V):
        rho, u, theta, sigma, q = np.asarray(V, dtype=float)
        eps, delta = self.params.eps, self.params.delta
        p, _, p_rho, p_theta, e_theta = eos(self.params, rho, theta)
        return np.array([
            [u, rho, 0.0, 0.0, 0.0],
            [p_rho, rho * u, p_theta, 1.0, 0.0],
            [0.0, p + sigma, rho * e_theta * u, 0.0, 1.0],
            [eps * u * sigma / theta, 1.0 + eps * rho * sigma / theta,
             -eps * rho * u * sigma / theta**2, eps * rho * u / theta, 0.0],
            [delta * u * q / theta**2, delta * rho * q / theta**2,
             1.0 - 2.0 * delta * rho * u * q / theta**3, 0.0, delta * rho * u / theta**2],
        ])

    def source(self, V):
        V = np.asarray(V, dtype=float)
        out = np.zeros_like(V)
        out[3] = -V[3] / self.params.eta
        out[4] = -V[4] / self.params.chi
        return out

    def validate_primitive(self, V):
        V = np.asarray(V, dtype=float)
        self._check_positive("rho", V[0])
        self._check_positive("theta", V[2])

    def primitive_to_conserved(self, V):
        rho, u, theta, sigma, q = np.asarray(V, dtype=float)
        _, e, _, _, _ = eos(self.params, rho, theta)
        return np.stack([
            rho,
            rho * u,
            rho * (e + 0.5 * u**2),
            self.params.eps * rho * sigma / theta,
            self.params.delta * rho * q / theta**2,
        ])

    def conserved_to_primitive(self, U):
        U = np.asarray(U, dtype=float)
        rho = U[0]
        self._check_positive("rho", rho)
        u = U[1] / rho
        theta = (U[2] / rho - 0.5 * u**2) / self.params.c
        self._check_positive("theta", theta)
        sigma = U[3] * theta / (self.params.eps * rho)
        q = U[4] * theta**2 / (self.params.delta * rho)
        return np.stack([rho, u, theta, sigma, q])

    def flux(self, V):
        rho, u, theta, sigma, q = np.asarray(V, dtype=float)
        p, e, _, _, _ = eos(self.params, rho, theta)
        return np.stack([
            rho * u,
            rho * u**2 + p + sigma,
            (rho * (e + 0.5 * u**2) + p + sigma) * u + q,
            self.params.eps * rho * u * sigma / theta,
            self.params.delta * rho * u * q / theta**2,
        ])

    def max_wave_speed(self, V):
        rho, u, theta, sigma, q = np.asarray(V, dtype=float)
        tau = 1.0 / rho
        lam_l = l5_max_root(self.params, tau, theta, sigma, q)
        return np.abs(u) + tau * lam_l

    def relaxation_times(self, V):
        rho, u, theta, sigma, q = np.asarray(V, dtype=float)
        t_sigma = self.params.eps * rho * self.params.eta / theta
        t_q = self.params.delta * rho * self.params.chi / theta**2
        return np.minimum(t_sigma, t_q)


class SystemE3(QuasilinearSystem):
    kind = "e3"
    fields = ("rho", "u", "sigma")
    nonconservative_rows = (2,)
    noncons_gradient_fields = ((2, 1),)

    def a0(self, V):
        rho, u, sigma = np.asarray(V, dtype=float)
        eps = self.params.eps
        return np.array([
            [1.0, 0.0, 0.0],
            [0.0, rho, 0.0],
            [eps * sigma, 0.0, eps * rho],
        ])

    def a1(self, V):
        rho, u, sigma = np.asarray(V, dtype=float)
        eps, R = self.params.eps, self.params.R
        return np.array([
            [u, rho, 0.0],
            [R, rho * u, 1.0],
            [eps * u * sigma, 1.0 + eps * rho * sigma, eps * rho * u],
        ])

    def source(self, V):
        V = np.asarray(V, dtype=float)
        out = np.zeros_like(V)
        out[2] = -V[2] / self.params.eta
        return out

    def validate_primitive(self, V):
        V = np.asarray(V, dtype=float)
        self._check_positive("rho", V[0])

    def primitive_to_conserved(self, V):
        rho, u, sigma = np.asarray(V, dtype=float)
        if np.any(rho <= 0.0):
            raise DomainError("primitive_to_conserved requires rho > 0")
        return np.stack([rho, rho * u, self.params.eps * rho * sigma])

    def conserved_to_primitive(self, U):
        U = np.asarray(U, dtype=float)
        rho = U[0]
        self._check_positive("rho", rho)
        u = U[1] / rho
        sigma = U[2] / (self.params.eps * rho)
        return np.stack([rho, u, sigma])

    def flux(self, V):
        rho, u, sigma = np.asarray(V, dtype=float)
        return np.stack([
            rho * u,
            rho * u**2 + self.params.R * rho + sigma,
            self.params.eps * rho * u * sigma,
        ])

    def max_wave_speed(self, V):
        rho, u, sigma = np.asarray(V, dtype=float)
        return np.abs(u) + np.sqrt(mu_squared_e3(self.params, rho))

    def relaxation_times(self, V):
        rho, u, sigma = np.asarray(V, dtype=float)
        return self.params.eps * rho * self.params.eta * np.ones_like(rho)


class SystemL5(QuasilinearSystem):
    """Lagrangian five-field system (analysis only; the solver integrates
    the Eulerian kinds).

    Unlike its Eulerian counterparts this form is fully conservative: the
    velocity and temperature gradients of the relaxation rows are perfect
    derivatives with constant coefficient, so they live in the flux and no
    rows are flagged.
    """

    kind = "l5"
    fields = ("tau", "u", "theta", "sigma", "q")
    nonconservative_rows = ()
    noncons_gradient_fields = ()

    def __init__(self, params: FluidParams):
        params.require_heat_flux()
        super().__init__(params)

    def a0(self, V):
        tau, u, theta, sigma, q = np.asarray(V, dtype=float)
        eps, delta = self.params.eps, self.params.delta
        _, _, _, _, e_tau, e_theta = eos_lagrangian(self.params, tau, theta)
        return np.array([
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0],
            [e_tau, 0.0, e_theta, 0.0, 0.0],
            [0.0, 0.0, -eps * sigma / theta**2, eps / theta, 0.0],
            [0.0, 0.0, -2.0 * delta * q / theta**3, 0.0, delta / theta**2],
        ])

    def a1(self, V):
        tau, u, theta, sigma, q = np.asarray(V, dtype=float)
        p, _, p_tau, p_theta, _, _ = eos_lagrangian(self.params, tau, theta)
        return np.array([
            [0.0, -1.0, 0.0, 0.0, 0.0],
            [p_tau, 0.0, p_theta, 1.0, 0.0],
            [0.0, p + sigma, 0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, 0.0],
        ])

    def source(self, V):
        V = np.asarray(V, dtype=float)
        out = np.zeros_like(V)
        # Lagrangian sources divide by rho = 1/tau
        out[3] = -V[3] * V[0] / self.params.eta
        out[4] = -V[4] * V[0] / self.params.chi
        return out

    def validate_primitive(self, V):
        V = np.asarray(V, dtype=float)
        self._check_positive("tau", V[0])
        self._check_positive("theta", V[2])

    def primitive_to_conserved(self, V):
        tau, u, theta, sigma, q = np.asarray(V, dtype=float)
        _, e, _, _, _, _ = eos_lagrangian(self.params, tau, theta)
        return np.stack([
            tau,
            u,
            e + 0.5 * u**2,
            self.params.eps * sigma / theta,
            self.params.delta * q / theta**2,
        ])

    def conserved_to_primitive(self, U):
        U = np.asarray(U, dtype=float)
        tau = U[0]
        self._check_positive("tau", tau)
        u = U[1]
        theta = (U[2] - 0.5 * u**2) / self.params.c
        self._check_positive("theta", theta)
        sigma = U[3] * theta / self.params.eps
        q = U[4] * theta**2 / self.params.delta
        return np.stack([tau, u, theta, sigma, q])

    def flux(self, V):
        tau, u, theta, sigma, q = np.asarray(V, dtype=float)
        p, e, _, _, _, _ = eos_lagrangian(self.params, tau, theta)
        return np.stack([
            -u,
            p + sigma,
            (p + sigma) * u + q,
            u,
            theta,
        ])

    def max_wave_speed(self, V):
        tau, u, theta, sigma, q = np.asarray(V, dtype=float)
        return l5_max_root(self.params, tau, theta, sigma, q)

    def relaxation_times(self, V):
        tau, u, theta, sigma, q = np.asarray(V, dtype=float)
        t_sigma = self.params.eps * self.params.eta / (theta * tau)
        t_q = self.params.delta * self.params.chi / (theta**2 * tau)
        return np.minimum(t_sigma, t_q)


_SYSTEM_CLASSES = {cls.kind: cls for cls in (SystemE4, SystemE5, SystemE3, SystemL5)}


def build_system(kind: str, params: FluidParams) -> QuasilinearSystem:
    """Construct the quasilinear system for a kind in {e4, e5, e3, l5}.

    Raises ConfigError for unknown kinds or missing heat-flux parameters.
    """
    key = str(kind).lower()
    if key not in _SYSTEM_CLASSES:
        raise ConfigError(f"unknown system kind {kind!r}; expected one of {KINDS}")
    return _SYSTEM_CLASSES[key](params)


def primitive_to_conserved(system: QuasilinearSystem, V) -> np.ndarray:
    V = V.array if hasattr(V, "array") else np.asarray(V, dtype=float)
    return system.primitive_to_conserved(V)


def conserved_to_primitive(system: QuasilinearSystem, U) -> np.ndarray:
    return system.conserved_to_primitive(np.asarray(U, dtype=float))


def state_array(V, n: Optional[int] = None) -> np.ndarray:
    """Normalize a state (dataclass or sequence) to a float array."""
    arr = V.array if hasattr(V, "array") else np.asarray(V, dtype=float)
    if n is not None and arr.shape[0] != n:
        raise DomainError(f"state has {arr.shape[0]} components, expected {n}")
    return arr
