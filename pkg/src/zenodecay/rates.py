"""Decay constants from the generalized golden rule.

The bare rate is gamma0 = 2 pi M(E0).  With a broadening kernel Delta the
perturbed rate becomes gamma = 2 pi int M(omega) Delta(omega - E0) domega,
integrated over the declared support of M.  Closed forms cover the atomic
kernels; Lorentzian and sampled kernels go through adaptive quadrature.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError
from .spectral import (
    DiracKernel,
    DissipationKernel,
    DoubleDeltaKernel,
    LorentzianKernel,
    NumericKernel,
    SpectralDensity,
    TabulatedDensity,
)

__all__ = [
    "DecayRateResult",
    "golden_rule_gamma",
    "perturbed_gamma",
    "unstable_level_gamma",
    "rabi_gamma",
    "rabi_enhancement_ratio",
]

NEGATIVE_RATE_CLAMPED = "negative_rate_clamped"

_REL_TOL = 1e-10
_ACCEPT_REL = 1e-8

# Gauss-Legendre nodes and weights on [-1, 1]
_X2 = np.array([-0.5773502691896257, 0.5773502691896257])
_W2 = np.array([1.0, 1.0])
_X4 = np.array(
    [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526]
)
_W4 = np.array(
    [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538]
)


@dataclass(frozen=True)
class DecayRateResult:
    """A decay constant together with its bare reference and provenance.

    ratio is gamma/gamma0 and is only present when gamma0 > 0; method is one
    of "closed_form", "quadrature" or "dynamic_fit";
    quadrature_error_estimate is None unless method == "quadrature".
    """

    gamma: float
    gamma0: float
    method: str
    ratio: float | None = None
    quadrature_error_estimate: float | None = None
    warnings: tuple[str, ...] = ()


def _make_result(gamma, gamma0, method, error_estimate=None, extra_warnings=()):
    flags = tuple(extra_warnings)
    if gamma < 0:
        gamma = 0.0
        flags = flags + (NEGATIVE_RATE_CLAMPED,)
    ratio = gamma / gamma0 if gamma0 > 0 else None
    return DecayRateResult(
        gamma=float(gamma),
        gamma0=float(gamma0),
        method=method,
        ratio=ratio,
        quadrature_error_estimate=error_estimate,
        warnings=flags,
    )


def golden_rule_gamma(density: SpectralDensity, e0: float) -> DecayRateResult:
    """Bare rate 2 pi M(E0); zero whenever E0 falls outside the support."""
    gamma0 = 2.0 * np.pi * density(e0)
    return _make_result(gamma0, gamma0, "closed_form")


def _atomic_gamma(density, kernel, e0):
    gamma = 2.0 * np.pi * sum(w * density(e0 + pos) for pos, w in kernel.atoms)
    return _make_result(gamma, 2.0 * np.pi * density(e0), "closed_form")


def _breakpoints(density, lo, hi, extra=()):
    pts = [p for p in extra if lo < p < hi]
    if isinstance(density, TabulatedDensity):
        inner = [p for p in density.knots if lo < p < hi]
        if len(inner) <= 64:
            pts.extend(inner)
    return sorted(set(pts)) or None

def _run_quad(func, lo, hi, points):
    out = integrate.quad(
        func, lo, hi, points=points, limit=400, epsabs=0.0, epsrel=_REL_TOL, full_output=1
    )
    value, abserr = out[0], out[1]
    if len(out) > 3:  # QUADPACK appended a trouble message
        if not abs(abserr) <= _ACCEPT_REL * abs(value):
            raise QuadratureError(
                f"quadrature did not converge: {out[3]} "
                f"(last estimate {value:.6e}, bound {abserr:.2e})",
                estimate=2.0 * np.pi * value,
                error_bound=2.0 * np.pi * abserr,
            )
    return value, abserr


def _lorentzian_gamma(density, kernel, e0):
    lo, hi = density.support
    center = e0 + kernel.shift
    lam = kernel.width
    if lam < 1e-3 * (hi - lo):
        # arctan substitution flattens the peak for widths far below the support scale
        u_lo = np.arctan((lo - center) / lam)
        u_hi = np.arctan((hi - center) / lam)
        knots = _breakpoints(density, lo, hi, extra=(center,))
        u_pts = sorted(np.arctan((np.asarray(knots) - center) / lam)) if knots else None
        value, abserr = _run_quad(
            lambda u: density(center + lam * np.tan(u)), u_lo, u_hi, u_pts
        )
        return 2.0 * value, 2.0 * abserr
    pts = _breakpoints(density, lo, hi, extra=(center,))
    value, abserr = _run_quad(
        lambda w: density(w) * kernel.density(w - e0), lo, hi, pts
    )
    return 2.0 * np.pi * value, 2.0 * np.pi * abserr


def _panel_sum(density, kernel, e0, edges, nodes, weights):
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    omega = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    f = density(omega) * kernel.density(omega - e0)
    return float(np.sum(f.reshape(mid.size, nodes.size) @ weights * half))


def _numeric_gamma(density, kernel, e0):
    lo, hi = density.support
    grid = kernel.eps + e0
    a, b = max(lo, grid[0]), min(hi, grid[-1])
    if not a < b:
        return 0.0, 0.0
    inner = grid[(grid > a) & (grid < b)]
    if isinstance(density, TabulatedDensity):
        kn = density.knots
        inner = np.concatenate([inner, kn[(kn > a) & (kn < b)]])
        inner.sort(kind="stable")
    edges = np.concatenate(([a], inner, [b]))
    fine = _panel_sum(density, kernel, e0, edges, _X4, _W4)
    coarse = _panel_sum(density, kernel, e0, edges, _X2, _W2)
    return 2.0 * np.pi * fine, 2.0 * np.pi * abs(fine - coarse)


def perturbed_gamma(
    density: SpectralDensity, kernel: DissipationKernel, e0: float
) -> DecayRateResult:
    """Rate with final-state broadening folded in.

    Atomic kernels reduce to weighted golden-rule evaluations; the others
    integrate M(omega) Delta(omega - E0) over the support of M with relative
    tolerance 1e-8, splitting panels at the kernel center and any tabulation
    knots.  The result is checked against the kernel-mass bound
    gamma <= 2 pi sup M.
    """
    if kernel.is_distributional:
        return _atomic_gamma(density, kernel, e0)
    if isinstance(kernel, LorentzianKernel):
        gamma, err = _lorentzian_gamma(density, kernel, e0)
    elif isinstance(kernel, NumericKernel):
        gamma, err = _numeric_gamma(density, kernel, e0)
    else:
        raise TypeError(f"unsupported kernel type {type(kernel).__name__}")
    bound = 2.0 * np.pi * density.sup_value
    if gamma > bound * (1.0 + 1e-9) + 1e-12:
        raise QuadratureError(
            f"rate {gamma:.6e} exceeds the kernel-mass bound {bound:.6e}",
            estimate=gamma,
            error_bound=err,
        )
    return _make_result(
        gamma, 2.0 * np.pi * density(e0), "quadrature", error_estimate=err
    )


def unstable_level_gamma(
    density: SpectralDensity,
    width: float,
    shift: float,
    omega_f: float,
    tail_level: float = 0.0,
) -> DecayRateResult:
    """Rate for decay into a level that itself drains away.

    Convolves M with a Lorentzian of the given half-width, centered at
    omega_f + shift.  ``tail_level`` treats M as continuing at that constant
    value above its upper support edge, adding the arctan tail in closed
    form; use it for truncated half-line supports.
    """
    result = perturbed_gamma(density, LorentzianKernel(width, shift), omega_f)
    if tail_level == 0.0:
        return result
    if tail_level < 0:
        raise ValueError("tail_level must be nonnegative")
    hi = density.support[1]
    center = omega_f + shift
    tail = 2.0 * tail_level * (0.5 * np.pi - np.arctan((hi - center) / width))
    return _make_result(
        result.gamma + tail,
        result.gamma0,
        "quadrature",
        error_estimate=result.quadrature_error_estimate,
        extra_warnings=result.warnings,
    )


def rabi_gamma(
    density: SpectralDensity, rabi_frequency: float, omega_f: float
) -> DecayRateResult:
    """Two-sideband rate pi [M(omega_f - Omega/2) + M(omega_f + Omega/2)]."""
    return _atomic_gamma(density, DoubleDeltaKernel(rabi_frequency), omega_f)


def rabi_enhancement_ratio(rabi_frequency: float, omega_01: float) -> float:
    """Rate enhancement 1 + (3/4) (Omega/omega_01)**2 for a cubic density.

    Exact for M proportional to omega**3 with both sidebands inside the
    support, since the cubic's even part averages without remainder.
    """
    if not omega_01 > 0:
        raise DomainError(f"omega_01 must be positive, got {omega_01}")
    if not 0 < rabi_frequency < omega_01:
        raise DomainError(
            f"rabi_frequency must lie in (0, omega_01), got {rabi_frequency}"
        )
    if rabi_frequency > 0.5 * omega_01:
        _warnings.warn(
            "rabi_frequency above omega_01/2: the sidebands probe the density "
            "far from the transition and the quadratic form is only exact for "
            "cubic M",
            stacklevel=2,
        )
    x = rabi_frequency / omega_01
    return 1.0 + 0.75 * x * x
