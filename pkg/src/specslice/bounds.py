"""Rigorous decay estimates for matrix Gaussian filters.

Everything here is a consequence of Chebyshev approximation on a Bernstein
ellipse: with chi = 1 + alpha*sigma the best degree-k polynomial error for
the Gaussian filter is bounded by (2/(alpha*sigma)) e^(alpha^2) chi^(-k),
which yields the off-diagonal envelope K rho^d with rho = 1/chi and
K = 2 e^(alpha^2) / (rho alpha sigma), a truncation error 2 K rho^(m/2+1)
for submatrices agreeing within geodesic distance m, and the total
entrywise error bound once an SVD truncation tau-tilde is added.

All envelope evaluation happens in log space so that alpha optimization can
explore large alpha without overflowing e^(alpha^2).  The bounds assume the
spectrum lies in (-1, 1); SpectrumScaling provides the affine change of
variables that puts an arbitrary Hermitian spectrum there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "DecayModel",
    "SpectrumScaling",
    "chebyshev_error_bound",
    "decay_envelope",
    "optimize_alpha",
    "truncation_bound",
    "total_maxnorm_bound",
]


@dataclass(frozen=True)
class DecayModel:
    """Decay constants for a Gaussian filter of width sigma centered at mu.

    sigma and mu are in post-scaling units (spectrum inside (-1, 1));
    alpha > 0 is the free ellipse parameter.  Derived quantities satisfy
    rho * chi = 1 exactly.
    """

    sigma: float
    mu: float
    alpha: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not -1.0 < self.mu < 1.0:
            raise ValueError(f"mu={self.mu} must lie in (-1, 1) after scaling")

    @property
    def chi(self) -> float:
        return 1.0 + self.alpha * self.sigma

    @property
    def rho(self) -> float:
        return 1.0 / self.chi

    @property
    def log_K(self) -> float:
        a_s = self.alpha * self.sigma
        return math.log(2.0) + self.alpha ** 2 + math.log(self.chi) - math.log(a_s)

    @property
    def K(self) -> float:
        return math.exp(self.log_K)


def chebyshev_error_bound(model: DecayModel, k: int) -> float:
    """Upper bound on the best degree-k polynomial approximation error of the
    Gaussian filter on [-1, 1]; independent of the shift mu."""
    if k < 0:
        raise ValueError("polynomial degree k must be >= 0")
    a_s = model.alpha * model.sigma
    log_bound = math.log(2.0) + model.alpha ** 2 - math.log(a_s) \
        - k * math.log(model.chi)
    return math.exp(log_bound)


def decay_envelope(model: DecayModel, d: int) -> float:
    """Envelope K rho^d on |f(A)_ij| at geodesic distance d >= 1."""
    if d < 1:
        raise ValueError("the decay envelope applies for distance d >= 1")
    return math.exp(model.log_K - d * math.log(model.chi))


def _log_envelope(sigma: float, alpha: float, d: float) -> float:
    chi = 1.0 + alpha * sigma
    return math.log(2.0) + alpha ** 2 + (1.0 - d) * math.log(chi) - math.log(alpha * sigma)


def optimize_alpha(sigma: float, d: float,
                   lo: float = 1e-4, hi: float = 1e2) -> tuple[float, float]:
    """Minimize the envelope K(alpha) rho(alpha)^d over alpha.

    Returns (alpha_star, bound_value).  A Chebyshev degree k corresponds to
    d = k + 1.  The search is a coarse scan on a log grid followed by
    golden-section refinement of the bracketing interval, all in log space.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if d < 1:
        raise ValueError("d must be >= 1")
    grid = [lo * (hi / lo) ** (i / 399.0) for i in range(400)]
    values = [_log_envelope(sigma, a, d) for a in grid]
    i_best = min(range(len(grid)), key=values.__getitem__)
    a_lo = grid[max(i_best - 1, 0)]
    a_hi = grid[min(i_best + 1, len(grid) - 1)]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x_lo, x_hi = math.log(a_lo), math.log(a_hi)
    c = x_hi - invphi * (x_hi - x_lo)
    r = x_lo + invphi * (x_hi - x_lo)
    fc = _log_envelope(sigma, math.exp(c), d)
    fr = _log_envelope(sigma, math.exp(r), d)
    for _ in range(80):
        if fc < fr:
            x_hi, r, fr = r, c, fc
            c = x_hi - invphi * (x_hi - x_lo)
            fc = _log_envelope(sigma, math.exp(c), d)
        else:
            x_lo, c, fc = c, r, fr
            r = x_lo + invphi * (x_hi - x_lo)
            fr = _log_envelope(sigma, math.exp(r), d)
    alpha = math.exp((x_lo + x_hi) / 2.0)
    return alpha, math.exp(_log_envelope(sigma, alpha, d))


def truncation_bound(model: DecayModel, m: int) -> float:
    """Bound 2 K rho^(m/2+1) on the entrywise error of the Dirichlet
    submatrix approximation, for even agreement distance m >= 2."""
    if m < 2 or m % 2:
        raise ValueError(f"agreement distance m must be even and >= 2, got {m}")
    return 2.0 * math.exp(model.log_K - (m / 2 + 1) * math.log(model.chi))


def total_maxnorm_bound(model: DecayModel, m, tau_abs: float) -> float:
    """Total entrywise bound 2 K rho^(m/2+1) + tau_abs for the assembled
    approximate operator; m may be None/inf for untruncated domains."""
    if tau_abs < 0:
        raise ValueError("tau_abs must be >= 0")
    if m is None or m == math.inf:
        return tau_abs
    return truncation_bound(model, m) + tau_abs


@dataclass(frozen=True)
class SpectrumScaling:
    """Affine change of variables z -> (z - center) / radius mapping a
    spectral enclosure strictly into (-1, 1)."""

    center: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @classmethod
    def from_interval(cls, lo: float, hi: float, margin: float = 0.01) -> "SpectrumScaling":
        if hi <= lo:
            raise ValueError(f"degenerate spectral interval [{lo}, {hi}]")
        if margin <= 0:
            raise ValueError("margin must be positive for a strict enclosure")
        return cls(center=(lo + hi) / 2.0, radius=(hi - lo) / 2.0 * (1.0 + margin))

    @property
    def spread(self) -> float:
        """Full width 2*radius of the scaled-to-(-1,1) interval in original units."""
        return 2.0 * self.radius

    def scale_point(self, z: float) -> float:
        return (z - self.center) / self.radius

    def scaled_sigma(self, sigma: float) -> float:
        return sigma / self.radius

    def scaled_mu(self, mu: float) -> float:
        return self.scale_point(mu)

    def model(self, sigma: float, mu: float, alpha: float = 1.0) -> DecayModel:
        return DecayModel(sigma=self.scaled_sigma(sigma), mu=self.scaled_mu(mu), alpha=alpha)
