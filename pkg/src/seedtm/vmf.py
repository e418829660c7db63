"""Numerically robust von Mises-Fisher distribution on the unit sphere.

Provides the log-normalizer and log-density, a rejection sampler with a
pathwise-differentiable reconstruction (gradients flow to the mean
direction through a Householder rotation and to the concentration through
the accepted radial draw), and the closed-form KL divergence against the
uniform sphere distribution.

Scalar entry points are numpy/scipy; the torch variants used inside the
model carry autograd. Bessel values come from scipy's exponentially
scaled I_v with a series fallback near zero; derivatives use the identity
d/dx log I_v(x) = I_{v+1}(x)/I_v(x) + v/x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from scipy.special import gammaln, ive


class DomainError(Exception):
    pass


class SamplerStuck(Exception):
    """Rejection loop exceeded its iteration bound (unreachable for valid kappa)."""


_SERIES_CUTOFF = 1e-6
_MAX_REJECTIONS = 1000


def log_bessel_iv(order: float, x: float) -> float:
    """log I_order(x) without overflow for x up to ~1e4.

    Uses the leading series term below a small-x cutoff and the scaled
    Bessel function log(ive) + x elsewhere.
    """
    if x < 0:
        raise DomainError("x must be nonnegative")
    if order < 0:
        raise DomainError("order must be nonnegative")
    if x < _SERIES_CUTOFF:
        if x == 0.0:
            return 0.0 if order == 0 else -math.inf
        # I_v(x) ~ (x/2)^v / Gamma(v+1) * (1 + x^2/(4(v+1)))
        return (
            order * math.log(x / 2.0)
            - gammaln(order + 1)
            + math.log1p(x * x / (4.0 * (order + 1.0)))
        )
    val = ive(order, x)
    if val <= 0:  # underflow of the scaled function: fall back to the series
        return order * math.log(x / 2.0) - float(gammaln(order + 1))
    return float(np.log(val) + x)


def bessel_ratio(order: float, x: float) -> float:
    """I_order(x) / I_{order-1}(x), the mean resultant length for M = 2*order."""
    if x == 0.0:
        return 0.0
    lo = log_bessel_iv(order, x)
    hi = log_bessel_iv(order - 1.0, x)
    return math.exp(lo - hi)


def log_norm_const(m: int, kappa: float) -> float:
    """log C_M(kappa): (M/2-1) log k - (M/2) log 2pi - log I_{M/2-1}(k),
    with the uniform-sphere limit at kappa = 0."""
    nu = m / 2.0 - 1.0
    if kappa < _SERIES_CUTOFF:
        # limit: -log area(S^{M-1}) = lgamma(M/2) - log 2 - (M/2) log pi
        return float(gammaln(m / 2.0)) - math.log(2.0) - (m / 2.0) * math.log(math.pi)
    return (
        nu * math.log(kappa)
        - (m / 2.0) * math.log(2.0 * math.pi)
        - log_bessel_iv(nu, kappa)
    )


def log_sphere_area(m: int) -> float:
    """log of the surface area of S^{M-1} in R^M."""
    return math.log(2.0) + (m / 2.0) * math.log(math.pi) - float(gammaln(m / 2.0))


@dataclass
class VmfParams:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        if abs(np.linalg.norm(self.mu) - 1.0) > 1e-6:
            raise DomainError("mu must be unit-norm")
        if self.kappa < 0:
            raise DomainError("kappa must be nonnegative")

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def vmf_log_density(t: np.ndarray, params: VmfParams) -> float:
    t = np.asarray(t, dtype=np.float64)
    if abs(np.linalg.norm(t) - 1.0) > 1e-6:
        raise DomainError("t must be unit-norm")
    return log_norm_const(params.dim, params.kappa) + params.kappa * float(params.mu @ t)


def vmf_kl_uniform(params: VmfParams) -> float:
    """KL(vMF(mu, kappa) || uniform on the sphere), closed form.

    kappa * I_{M/2}(k)/I_{M/2-1}(k) + log C_M(k) + log area(S^{M-1});
    zero at kappa = 0.
    """
    m, kappa = params.dim, params.kappa
    if kappa < _SERIES_CUTOFF:
        return 0.0
    return (
        kappa * bessel_ratio(m / 2.0, kappa)
        + log_norm_const(m, kappa)
        + log_sphere_area(m)
    )


# --- rejection sampler -----------------------------------------------------

def _envelope_const(kappa: np.ndarray, dim: int):
    """Envelope constants (b, x0, c) for the radial rejection scheme."""
    d = dim - 1.0
    b = d / (np.sqrt(4.0 * kappa**2 + d * d) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + d * np.log1p(-(x0**2))
    return b, x0, c


def _sample_radial(kappa: np.ndarray, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Accepted Beta draws z for the marginal of mu^T t; w is reconstructed
    from z downstream so the reconstruction can be differentiated."""
    n = kappa.shape[0]
    d = dim - 1.0
    b, x0, c = _envelope_const(kappa, dim)
    z_out = np.empty(n)
    todo = np.arange(n)
    for _ in range(_MAX_REJECTIONS):
        z = rng.beta(d / 2.0, d / 2.0, size=todo.shape[0])
        w = (1.0 - (1.0 + b[todo]) * z) / (1.0 - (1.0 - b[todo]) * z)
        u = rng.uniform(size=todo.shape[0])
        accept = kappa[todo] * w + d * np.log1p(-x0[todo] * w) - c[todo] >= np.log(u)
        z_out[todo[accept]] = z[accept]
        todo = todo[~accept]
        if todo.size == 0:
            return z_out
    raise SamplerStuck(f"{todo.size} draws still rejected after {_MAX_REJECTIONS} rounds")


def _radial_from_z(kappa: torch.Tensor, z: torch.Tensor, dim: int) -> torch.Tensor:
    d = dim - 1.0
    b = d / (torch.sqrt(4.0 * kappa**2 + d * d) + 2.0 * kappa)
    return (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)


def _householder_rotate(north_sample: torch.Tensor, mu: torch.Tensor) -> torch.Tensor:
    """Reflect so the north pole e1 maps onto mu; differentiable in mu."""
    e1 = torch.zeros_like(mu)
    e1[..., 0] = 1.0
    u = e1 - mu
    norm = torch.linalg.norm(u, dim=-1, keepdim=True)
    # when mu == e1 the rotation is the identity
    u = torch.where(norm > 1e-12, u / torch.clamp(norm, min=1e-12), torch.zeros_like(u))
    proj = (north_sample * u).sum(-1, keepdim=True)
    return north_sample - 2.0 * proj * u


def vmf_sample_batch(
    mu: torch.Tensor,
    kappa: torch.Tensor,
    rng: np.random.Generator,
) -> torch.Tensor:
    """Reparameterized vMF draws, one per row of mu (B x M).

    The radial rejection and the tangential direction are drawn without
    gradient; the returned tensor is differentiable w.r.t. mu (rotation)
    and kappa (pathwise through the accepted radial draw). The acceptance
    probability's own kappa-dependence is deliberately ignored, which is
    the usual pathwise approximation for hyperspherical VAEs.
    """
    B, m = mu.shape
    kappa_np = kappa.detach().cpu().numpy().astype(np.float64)
    z_np = _sample_radial(kappa_np, m, rng)
    z = torch.as_tensor(z_np, dtype=mu.dtype, device=mu.device)
    v_np = rng.standard_normal((B, m - 1))
    v = torch.as_tensor(v_np, dtype=mu.dtype, device=mu.device)
    v = v / torch.clamp(torch.linalg.norm(v, dim=-1, keepdim=True), min=1e-12)
    return vmf_sample_from_noise(mu, kappa, z, v)


def vmf_sample_from_noise(
    mu: torch.Tensor,
    kappa: torch.Tensor,
    z: torch.Tensor,
    v: torch.Tensor,
) -> torch.Tensor:
    """Deterministic differentiable reconstruction of a vMF draw from frozen
    noise: accepted Beta draw z (B,) and unit tangent v (B, M-1)."""
    m = mu.shape[-1]
    w = _radial_from_z(kappa, z, m)
    w = torch.clamp(w, -1.0 + 1e-12, 1.0 - 1e-12)
    tangent_scale = torch.sqrt(torch.clamp(1.0 - w**2, min=0.0))
    north = torch.cat([w.unsqueeze(-1), tangent_scale.unsqueeze(-1) * v], dim=-1)
    return _householder_rotate(north, mu)


def vmf_sample(params: VmfParams, rng: np.random.Generator) -> np.ndarray:
    """Single numpy draw (no gradient tracking)."""
    mu = torch.as_tensor(params.mu, dtype=torch.float64).unsqueeze(0)
    kappa = torch.full((1,), float(params.kappa), dtype=torch.float64)
    with torch.no_grad():
        out = vmf_sample_batch(mu, kappa, rng)
    return out[0].numpy()


def vmf_sample_many(params: VmfParams, n: int, rng: np.random.Generator) -> np.ndarray:
    mu = torch.as_tensor(params.mu, dtype=torch.float64).unsqueeze(0).expand(n, -1).contiguous()
    kappa = torch.full((n,), float(params.kappa), dtype=torch.float64)
    with torch.no_grad():
        out = vmf_sample_batch(mu, kappa, rng)
    return out.numpy()


# --- torch-side closed forms (for training losses) ------------------------

class _LogBesselIv(torch.autograd.Function):
    """log I_v(x) elementwise for fixed order v, with analytic derivative."""

    @staticmethod
    def forward(ctx, order: float, x: torch.Tensor) -> torch.Tensor:
        x_np = x.detach().cpu().numpy().astype(np.float64)
        val = np.array([log_bessel_iv(order, xi) for xi in np.atleast_1d(x_np)])
        val = val.reshape(np.shape(x_np))
        ctx.order = order
        ctx.save_for_backward(x)
        return torch.as_tensor(val, dtype=x.dtype, device=x.device)

    @staticmethod
    def backward(ctx, grad_out):
        (x,) = ctx.saved_tensors
        v = ctx.order
        x_np = x.detach().cpu().numpy().astype(np.float64)
        flat = np.atleast_1d(x_np)
        deriv = np.array(
            [bessel_ratio(v + 1.0, xi) + (v / xi if xi > 0 else 0.0) for xi in flat]
        ).reshape(np.shape(x_np))
        deriv_t = torch.as_tensor(deriv, dtype=x.dtype, device=x.device)
        return None, grad_out * deriv_t


def log_bessel_iv_t(order: float, x: torch.Tensor) -> torch.Tensor:
    return _LogBesselIv.apply(order, x)


def vmf_kl_uniform_t(kappa: torch.Tensor, m: int) -> torch.Tensor:
    """Closed-form KL against the uniform sphere, differentiable in kappa."""
    nu = m / 2.0 - 1.0
    kappa = torch.clamp(kappa, min=1e-8)
    log_iv_nu = log_bessel_iv_t(nu, kappa)
    log_iv_top = log_bessel_iv_t(m / 2.0, kappa)
    ratio = torch.exp(log_iv_top - log_iv_nu)
    log_c = nu * torch.log(kappa) - (m / 2.0) * math.log(2.0 * math.pi) - log_iv_nu
    return kappa * ratio + log_c + log_sphere_area(m)
