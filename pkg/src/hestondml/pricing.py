"""Semi-analytic Heston pricing of European puts in normalised forward units.

Model (risk-neutral):

    dS_t = S_t (r dt + sqrt(v_t) dW1_t)
    dv_t = kappa (theta - v_t) dt + sigma sqrt(v_t) dW2_t,   d<W1,W2> = rho dt

Everything is quoted through the normalised forward put price

    p = exp(r tau) P / K  in [0, 1],

a dimensionless quantity obtained from a single half-line Fourier integral:

    p = 1 - (1/pi) Int_0^inf Re[ exp((iu + 1/2) F) phi(u - i/2) ] du / (u^2 + 1/4)

with F = m + r tau the forward log-moneyness and phi the log-forward
characteristic function in the numerically stable form

    phi(u) = exp(A(u) + v0 B(u)),
    A = (kappa theta / sigma^2) [ (beta - d) tau - 2 ln((g e^{-d tau} - 1)/(g - 1)) ]
    B = ((beta - d) / sigma^2) (1 - e^{-d tau}) / (1 - g e^{-d tau})
    d = sqrt(beta^2 - 4 alpha gamma),  g = (beta - d)/(beta + d),
    alpha = -u(u + i)/2,  beta = kappa - i u sigma rho,  gamma = sigma^2 / 2.

The principal square root (Re d >= 0) makes e^{-d tau} decay, which is what
keeps this variant of the characteristic function stable for long maturities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import quadrature
from .errors import DomainError, IntegrationError

# Below this vol-of-variance the A/B closed forms divide by ~0; callers that
# want the sigma -> 0 limit should price with sigma at the floor (the
# Black-Scholes embedding tests do exactly that).
SIGMA_FLOOR = 1e-4


@dataclass(frozen=True)
class HestonParams:
    """The five Heston parameters.

    kappa:  mean-reversion speed of variance (1/years)
    theta:  long-term mean variance
    sigma:  vol-of-variance
    rho:    spot/variance correlation
    v0:     initial variance
    """

    kappa: float
    theta: float
    sigma: float
    rho: float
    v0: float

    def __post_init__(self):
        if not self.kappa > 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.theta < 0:
            raise DomainError(f"theta must be non-negative, got {self.theta}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.v0 < 0:
            raise DomainError(f"v0 must be non-negative, got {self.v0}")
        if not -1.0 < self.rho < 1.0:
            raise DomainError(f"rho must lie in (-1, 1), got {self.rho}")

    def feller_satisfied(self) -> bool:
        """True iff 2 kappa theta > sigma^2 (variance stays positive)."""
        return 2.0 * self.kappa * self.theta > self.sigma ** 2


@dataclass(frozen=True)
class MarketPoint:
    """Option/market coordinates: log-moneyness ln(S/K), maturity, rate."""

    m: float
    tau: float
    r: float

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")

    @property
    def forward_log_moneyness(self) -> float:
        return self.m + self.r * self.tau


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and truncation bound for the pricing integrals.

    The half-line integral is truncated at u_max and refined adaptively.
    After convergence the contribution of the outermost 10% of the range
    must stay below abs_tol; slow-decaying corners (very short maturity
    with very low variance) need a larger u_max.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    u_max: float = 200.0
    max_panels: int = 20000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError("abs_tol must be positive")
        if not self.u_max > 0:
            raise DomainError("u_max must be positive")


DEFAULT_QUAD = QuadratureConfig()


@dataclass
class CharFnTerms:
    """phi and every intermediate, vectorized over the frequency argument.

    The sensitivities module re-uses these terms: all eight partial
    derivatives share A, B, d, g, beta, alpha with the price integrand.
    """

    u: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: float
    d: np.ndarray
    g: np.ndarray
    exp_dt: np.ndarray       # e^{-d tau}
    A: np.ndarray
    B: np.ndarray
    phi: np.ndarray


def _check_finite(name: str, arr: np.ndarray):
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"characteristic function intermediate '{name}' is non-finite")


def char_fn_terms(u, params: HestonParams, tau: float) -> CharFnTerms:
    """Evaluate phi(u) = exp(A + v0 B) and its intermediates.

    u may be any complex scalar or array; the pricing integrands call this
    on the shifted argument u - i/2.
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    u = np.asarray(u, dtype=complex)
    kappa, theta, sigma, rho = params.kappa, params.theta, params.sigma, params.rho

    alpha = -0.5 * u * (u + 1j)
    beta = kappa - 1j * u * sigma * rho
    gamma = 0.5 * sigma ** 2
    d = np.sqrt(beta ** 2 - 4.0 * alpha * gamma)
    _check_finite("d", d)
    g = (beta - d) / (beta + d)
    _check_finite("g", g)
    exp_dt = np.exp(-d * tau)

    one_m_ge = 1.0 - g * exp_dt
    g_m_1 = g - 1.0
    # Both denominators vanish together as d -> 0; switch to the first-order
    # expansion there: (g e^{-d tau} - 1)/(g - 1) -> 1 + beta tau / 2 and
    # B -> beta^2 tau / (sigma^2 (2 + beta tau)).
    degenerate = (np.abs(one_m_ge) < 1e-14) | (np.abs(g_m_1) < 1e-14)
    if degenerate.any():
        lim = 1.0 + 0.5 * beta * tau
        if np.any(np.abs(np.where(degenerate, lim, 1.0)) < 1e-14):
            raise DomainError("characteristic function degenerate at g e^{-d tau} = 1")
        ratio = np.where(degenerate, lim,
                         -one_m_ge / np.where(degenerate, 1.0, g_m_1))
        B = np.where(degenerate,
                     beta ** 2 * tau / (sigma ** 2 * (2.0 + beta * tau)),
                     (beta - d) / sigma ** 2 * (1.0 - exp_dt)
                     / np.where(degenerate, 1.0, one_m_ge))
    else:
        ratio = -one_m_ge / g_m_1   # == (g e^{-d tau} - 1)/(g - 1)
        B = (beta - d) / sigma ** 2 * (1.0 - exp_dt) / one_m_ge

    A = kappa * theta / sigma ** 2 * ((beta - d) * tau - 2.0 * np.log(ratio))
    _check_finite("A", A)
    _check_finite("B", B)
    phi = np.exp(A + params.v0 * B)
    _check_finite("phi", phi)
    return CharFnTerms(u=u, alpha=alpha, beta=beta, gamma=gamma, d=d, g=g,
                       exp_dt=exp_dt, A=A, B=B, phi=phi)


def char_fn(u, params: HestonParams, tau: float):
    """Characteristic function of the log forward return at maturity tau."""
    phi = char_fn_terms(u, params, tau).phi
    return complex(phi) if phi.ndim == 0 else phi


def _require_sigma_floor(params: HestonParams):
    if params.sigma < SIGMA_FLOOR:
        raise DomainError(
            f"sigma={params.sigma} below the pricing floor {SIGMA_FLOOR}; "
            "the closed forms divide by sigma"
        )


def _integrate_put_kernel(point: MarketPoint, params: HestonParams,
                          quad: QuadratureConfig, columns) -> np.ndarray:
    """Integrate Re[w(u) * columns(terms)] du with the common weight

    w(u) = exp((iu + 1/2) F) / (u^2 + 1/4), evaluated at the shifted
    argument u - i/2 inside the characteristic function.
    """
    f_hat = point.forward_log_moneyness

    def integrand(u):
        terms = char_fn_terms(u - 0.5j, params, point.tau)
        w = np.exp((1j * u + 0.5) * f_hat) / (u ** 2 + 0.25)
        cols = columns(terms)
        return np.real(w[:, None] * cols)

    result = quadrature.integrate(integrand, 0.0, quad.u_max,
                                  abs_tol=quad.abs_tol, rel_tol=quad.rel_tol,
                                  max_panels=quad.max_panels)
    tail = result.tail_contribution(0.9 * quad.u_max)
    if np.any(tail > quad.abs_tol):
        raise IntegrationError(
            f"integrand tail at u_max={quad.u_max} contributes "
            f"{tail.max():.3e} > abs_tol={quad.abs_tol}; increase u_max",
            residual=float(tail.max()),
        )
    return result.value


def normalized_forward_put(point: MarketPoint, params: HestonParams,
                           quad: QuadratureConfig | None = None) -> float:
    """Normalised forward put price p = exp(r tau) P / K, in [0, 1]."""
    quad = quad or DEFAULT_QUAD
    _require_sigma_floor(params)
    value = _integrate_put_kernel(point, params, quad,
                                  lambda t: t.phi[:, None])
    return float(1.0 - value[0] / math.pi)


def normalized_forward_call(point: MarketPoint, params: HestonParams,
                            quad: QuadratureConfig | None = None,
                            direct: bool = False) -> float:
    """Normalised forward call price.

    Default goes through put-call parity, c = p + e^F - 1; direct=True
    evaluates the call-side integral c = e^F - (1/pi) Int ... instead.
    Both must agree to quadrature accuracy.
    """
    quad = quad or DEFAULT_QUAD
    f_hat = point.forward_log_moneyness
    if direct:
        _require_sigma_floor(params)
        value = _integrate_put_kernel(point, params, quad,
                                      lambda t: t.phi[:, None])
        return float(math.exp(f_hat) - value[0] / math.pi)
    return normalized_forward_put(point, params, quad) + math.exp(f_hat) - 1.0


def put_price(point: MarketPoint, params: HestonParams, strike: float,
              quad: QuadratureConfig | None = None) -> float:
    """Cash put price P = K exp(-r tau) * normalised forward put."""
    if not strike > 0:
        raise DomainError(f"strike must be positive, got {strike}")
    p_hat = normalized_forward_put(point, params, quad)
    return strike * math.exp(-point.r * point.tau) * p_hat


def bs_effective_vol(params: HestonParams, tau: float) -> float:
    """Black-Scholes vol embedded in Heston for sigma -> 0.

    With a deterministic variance path (sigma ~ 0) the time-averaged
    variance is theta + (1 - e^{-kappa tau})/(kappa tau) * (v0 - theta).
    """
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")
    x = params.kappa * tau
    factor = 1.0 if x == 0.0 else -math.expm1(-x) / x
    return math.sqrt(params.theta + factor * (params.v0 - params.theta))


def bs_normalized_forward_put(f_hat: float, vol: float, tau: float) -> float:
    """Black-Scholes normalised forward put N(-d2) - e^F N(-d1)."""
    s = vol * math.sqrt(tau)
    if s <= 0:
        return max(1.0 - math.exp(f_hat), 0.0)
    d1 = (f_hat + 0.5 * s * s) / s
    d2 = d1 - s
    return float(ndtr(-d2) - math.exp(f_hat) * ndtr(-d1))


def simulate_terminal_log_forward(params: HestonParams, tau: float,
                                  n_paths: int, n_steps: int,
                                  seed: int) -> np.ndarray:
    """Terminal log forward returns X_tau under full-truncation Euler.

    X = ln(S_t / (S_0 e^{r t})) carries no rate drift; the variance uses
    v+ = max(v, 0) in both drift and diffusion and may itself go negative
    between steps.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    rng = np.random.default_rng(seed)
    dt = tau / n_steps
    sqrt_dt = math.sqrt(dt)
    rho_c = math.sqrt(1.0 - params.rho ** 2)

    x = np.zeros(n_paths)
    v = np.full(n_paths, params.v0)
    for _ in range(n_steps):
        z = rng.standard_normal((2, n_paths))
        z_spot = z[0]
        z_var = params.rho * z[0] + rho_c * z[1]
        v_pos = np.maximum(v, 0.0)
        vol = np.sqrt(v_pos) * sqrt_dt
        x += -0.5 * v_pos * dt + vol * z_spot
        v += params.kappa * (params.theta - v_pos) * dt + params.sigma * vol * z_var
    return x


def mc_price(point: MarketPoint, params: HestonParams, n_paths: int,
             n_steps: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo normalised forward put with its standard error.

    Full-truncation Euler test oracle for the semi-analytic pricer;
    deterministic given (seed, n_paths, n_steps).
    """
    x = simulate_terminal_log_forward(params, point.tau, n_paths, n_steps, seed)
    payoff = np.maximum(1.0 - np.exp(point.forward_log_moneyness + x), 0.0)
    estimate = float(payoff.mean())
    if n_paths > 1:
        se = float(payoff.std(ddof=1) / math.sqrt(n_paths))
    else:
        se = float("inf")
    return estimate, se
