"""Correlator evaluators: band series, closed-form limits, equal-time.

The two-time correlator of the sign-binned quadrature observable is, after
kernel reduction, a double sum of Gaussian integrals over sign-alternating
bands of width ell. Five evaluation routes are provided:

- ``numeric``: the resummed band series (erfc inner sum, adaptive outer
  quadrature); reference-quality at any bin width where it converges.
- ``small-ell``: closed-form narrow-bin asymptote (theta-function
  resummation of the full lattice sum).
- ``large-ell``: closed-form wide-bin limit (only the four central cells
  survive; quadrant Gaussian closed forms).
- ``large-squeeze``: infinite-squeezing limit, a pure function of the
  angles.
- ``equal-time``: direct cell quadrature of the squared wavefunction for a
  coincident pair, where the two-time kernel degenerates.

``auto`` dispatches on bin width relative to the squeezing scale e^r and
routes exactly coincident transitions to the equal-time path; nearly
degenerate (but not coincident) transitions are re-evaluated at a nudged
angle difference, recorded in the result notes.

All spec-taking evaluators first fold the angle difference into
[-pi/2, pi/2] using the exact parity identity E(dtheta + pi) = -E(dtheta)
(advancing one snapshot by half a period reflects its quadrature,
Q -> -Q, and the sign-binned observable is odd). The fold is an algebraic
identity, not an approximation, so it is applied silently; it keeps every
evaluation away from the ill-conditioned neighborhoods of dtheta = k pi
for k != 0 and turns dtheta = pi for an otherwise identical pair into a
clean equal-time delegation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.special as _sp

from .complexfn import principal_arctan, principal_sqrt
from .errors import (
    ComplexOverflowError,
    DegenerateKernelError,
    MaxBandsExceededError,
    NonConvergentXiError,
)
from .kernel import (
    XiMatrix,
    series_prefactor,
    xi_determinant,
    xi_matrix,
)
from .quadrature import adaptive_1d, geometric_panels
from .state import SqueezeParams, TransitionSpec, coeff_A, coeff_B, normalization

__all__ = [
    "EvaluationSettings",
    "CorrelatorResult",
    "correlator_numeric",
    "correlator_small_ell",
    "correlator_large_ell",
    "correlator_large_ell_large_squeeze",
    "correlator_equal_time",
    "correlator_auto",
    "band_series_value",
    "narrow_bin_value",
    "wide_bin_value",
    "is_coincident",
    "NUDGE",
]

NUDGE = 1e-7

_CONDITION_NAMES = (
    "Re(Xi11)",
    "Re(Xi22)",
    "Re(Xi11 - Xi12^2/Xi22)",
    "Re(Xi22 - Xi12^2/Xi11)",
)


@dataclass(frozen=True)
class EvaluationSettings:
    """Numerical knobs shared by every evaluator.

    ell: sign-bin width, > 0.
    trunc_rel_tol: relative tolerance for truncating the band series.
    quad_rel_tol: relative tolerance of each adaptive band integral.
    max_bands: hard cap on bands before the series is declared stuck.
    """

    ell: float
    trunc_rel_tol: float = 1e-10
    quad_rel_tol: float = 1e-9
    max_bands: int = 4096

    def __post_init__(self) -> None:
        if not (isinstance(self.ell, (int, float)) and math.isfinite(self.ell) and self.ell > 0):
            raise ValueError(f"ell must be finite and > 0, got {self.ell!r}")
        if not 0 < self.trunc_rel_tol < 1:
            raise ValueError("trunc_rel_tol must be in (0, 1)")
        if not 0 < self.quad_rel_tol < 1:
            raise ValueError("quad_rel_tol must be in (0, 1)")
        if self.max_bands < 2:
            raise ValueError("max_bands must be >= 2")


@dataclass(frozen=True)
class CorrelatorResult:
    """Correlator value plus an honest account of how it was obtained.

    ``degenerate_path`` marks values that went through the degeneracy
    policy (equal-time delegation or angle nudge); ``notes`` carries the
    human-readable detail.
    """

    value: float
    method: str
    n_bands_used: int = 0
    series_terms_used: int = 0
    quadrature_error_estimate: float = 0.0
    degenerate_path: bool = False
    notes: tuple[str, ...] = ()


def _require_converged(xi: XiMatrix) -> None:
    if xi.converged:
        return
    for name, val in zip(_CONDITION_NAMES, xi.diagnostics):
        if not val < 0.0:
            raise NonConvergentXiError(f"{name} >= 0: convergence condition violated")
    raise NonConvergentXiError("convergence condition violated")


def is_coincident(spec: TransitionSpec) -> bool:
    """True when both snapshots are the same physical state at the same angle.

    Identity is taken modulo the exact symmetries: varphi modulo pi (the
    wavefunction depends on e^{-2i varphi} squared terms only through
    tanh^2), theta difference modulo 2 pi, and varphi irrelevant at r = 0.
    """
    a, b = spec.a, spec.b
    if a.r != b.r:
        return False
    if math.remainder(spec.delta_theta, 2.0 * math.pi) != 0.0:
        return False
    if a.r == 0.0:
        return True
    return math.remainder(a.varphi - b.varphi, math.pi) == 0.0


def _parity_reduce(spec: TransitionSpec) -> tuple[TransitionSpec, float]:
    """Fold delta_theta = k pi + delta onto delta in [-pi/2, pi/2].

    Returns the folded spec and the exact sign (-1)^k, using
    E(dtheta + pi) = -E(dtheta): at the kernel level a pi shift flips the
    two odd numerators and hence xi12, and the correlator is odd in xi12.
    The folded spec carries theta_a = delta, theta_b = 0 so its angle
    difference is exactly delta.
    """
    dth = spec.delta_theta
    delta = math.remainder(dth, math.pi)
    if delta == dth:
        return spec, 1.0
    k = round((dth - delta) / math.pi)
    sign = -1.0 if k % 2 else 1.0
    reduced = TransitionSpec(
        a=replace(spec.a, theta=delta),
        b=replace(spec.b, theta=0.0),
    )
    return reduced, sign


def _resolve_xi(spec: TransitionSpec) -> tuple[XiMatrix, tuple[str, ...]]:
    """Xi for the pair, nudging the angle difference off a degenerate locus.

    Exactly coincident pairs are not nudged here; callers route them to the
    equal-time evaluator first. Everything else that trips the degeneracy
    threshold is re-evaluated at delta_theta +/- NUDGE with the direction
    recorded.
    """
    try:
        return xi_matrix(spec), ()
    except DegenerateKernelError:
        if is_coincident(spec):
            raise
        last: DegenerateKernelError | None = None
        for sgn, label in ((1.0, "+"), (-1.0, "-")):
            nudged = TransitionSpec(
                a=replace(spec.a, theta=spec.a.theta + sgn * NUDGE),
                b=spec.b,
            )
            try:
                xi = xi_matrix(nudged)
                return xi, (f"degenerate kernel: re-evaluated at delta_theta {label} {NUDGE:g}",)
            except DegenerateKernelError as exc:
                last = exc
        assert last is not None
        raise last


def band_series_value(
    xi: XiMatrix, settings: EvaluationSettings
) -> tuple[float, int, int, float]:
    """Resummed band series for a given reduced quadratic form.

    Returns (value, n_bands_used, series_terms_used, quadrature_error).
    The inner lattice direction is resummed into an alternating erfc
    series, evaluated in scaled form (erfcx times an explicit exponent) so
    no intermediate factor overflows; the outer direction is integrated
    band by band with adaptive Gauss-Kronrod panels refined toward the
    origin, where all the integrand structure lives.
    """
    _require_converged(xi)
    ell = settings.ell
    x11, x22, x12 = xi.xi11, xi.xi22, xi.xi12
    s = principal_sqrt(-0.5 * x22)
    ratio = x12 / x22
    pref = series_prefactor(xi)
    scale = 1.0 / math.sqrt(max(abs(x11), abs(x22), abs(x12), 1e-300))
    m_abs_tol = 1e-12
    max_m_terms = 1_000_000
    terms_used = 0

    def bracket(y: np.ndarray, sign: float) -> np.ndarray:
        # erfc sum against the shared Gaussian envelope, term by term in m,
        # each term assembled as erfcx(z) * exp(combined exponent) so the
        # e^{z^2} growth of erfc never materializes.
        nonlocal terms_used
        Y = sign * y
        out = np.zeros(Y.shape, dtype=complex)
        env2 = 2.0 * np.exp(0.5 * (x11 - x12 * x12 / x22) * Y * Y)
        m0 = 0
        block = 16
        while True:
            ms = np.arange(m0, m0 + block, dtype=float)[:, None] * ell
            Z = s * (ms + ratio * Y[None, :])
            EX = 0.5 * x11 * (Y * Y)[None, :] + x12 * ms * Y[None, :] + 0.5 * x22 * ms * ms
            with np.errstate(over="ignore", under="ignore", invalid="ignore"):
                pos = Z.real >= 0.0
                term = np.where(
                    pos,
                    _sp.erfcx(np.where(pos, Z, 0.0)) * np.exp(EX),
                    env2 - _sp.erfcx(np.where(pos, 0.0, -Z)) * np.exp(EX),
                )
            if not np.all(np.isfinite(term)):
                raise ComplexOverflowError(
                    "scaled erfc series overflows double precision; "
                    "band series not evaluable at these parameters"
                )
            signs = np.where((np.arange(m0, m0 + block) % 2) == 0, 1.0, -1.0)
            weights = np.where(np.arange(m0, m0 + block) == 0, 1.0, 2.0)
            out += np.sum(term * (signs * weights)[:, None], axis=0)
            blk_max = float(np.max(np.abs(term)))
            terms_used = max(terms_used, m0 + block)
            if blk_max < m_abs_tol:
                break
            m0 += block
            if m0 > max_m_terms:
                raise NonConvergentXiError(
                    "inner erfc series did not settle within 1e6 terms"
                )
        return out

    total = 0.0 + 0.0j
    peak = 0.0
    quad_err = 0.0
    small_streak = 0
    k = 0
    while True:
        if 2 * (k + 1) > settings.max_bands:
            raise MaxBandsExceededError(
                f"band series used {2 * k} bands without settling "
                f"(max_bands = {settings.max_bands})"
            )
        lo, hi = k * ell, (k + 1) * ell
        panels = geometric_panels(lo, hi, scale)
        ip, ep = adaptive_1d(
            lambda y: bracket(y, +1.0), lo, hi,
            rel_tol=settings.quad_rel_tol, breakpoints=panels,
        )
        im, em = adaptive_1d(
            lambda y: bracket(y, -1.0), lo, hi,
            rel_tol=settings.quad_rel_tol, breakpoints=panels,
        )
        pair = (-1.0) ** k * (ip - im)
        total += pair
        quad_err += ep + em
        peak = max(peak, abs(pair))
        k += 1
        if k >= 2 and abs(pair) <= settings.trunc_rel_tol * max(abs(total), peak):
            small_streak += 1
            if small_streak >= 2:
                break
        else:
            small_streak = 0

    value = (pref * total).real
    return value, 2 * k, terms_used, abs(pref) * quad_err


def correlator_numeric(spec: TransitionSpec, settings: EvaluationSettings) -> CorrelatorResult:
    """Two-time correlator by the resummed band series (reference numeric path)."""
    spec, parity = _parity_reduce(spec)
    xi, notes = _resolve_xi(spec)
    value, n_bands, n_terms, qerr = band_series_value(xi, settings)
    return CorrelatorResult(
        value=parity * value,
        method="numeric",
        n_bands_used=n_bands,
        series_terms_used=n_terms,
        quadrature_error_estimate=qerr,
        degenerate_path=bool(notes),
        notes=notes,
    )


def narrow_bin_value(xi: XiMatrix, ell: float) -> float:
    """Closed-form narrow-bin asymptote of the band series.

    E = (8/pi^2) Re(e^{p+} - e^{p-}) with
    p+- = pi^2 (xi11 + xi22 +- 2 xi12) / (2 (xi11 xi22 - xi12^2) ell^2).
    """
    _require_converged(xi)
    det = xi_determinant(xi)
    base = math.pi**2 / (2.0 * det * ell * ell)
    p_plus = base * (xi.xi11 + xi.xi22 + 2.0 * xi.xi12)
    p_minus = base * (xi.xi11 + xi.xi22 - 2.0 * xi.xi12)
    with np.errstate(over="ignore", invalid="ignore"):
        out = (8.0 / math.pi**2) * (np.exp(p_plus) - np.exp(p_minus)).real
    if not math.isfinite(out):
        raise ComplexOverflowError("narrow-bin exponents overflow double precision")
    return float(out)


def wide_bin_value(xi: XiMatrix) -> float:
    """Closed-form wide-bin (ell -> infinity) limit of the band series.

    Only the four cells around the origin survive; their quadrant Gaussian
    closed forms combine to E = (2/pi) Re arctan(xi12 / sqrt(det Xi)).
    """
    _require_converged(xi)
    root = principal_sqrt(xi_determinant(xi))
    return (2.0 / math.pi) * principal_arctan(xi.xi12 / root).real


def correlator_small_ell(spec: TransitionSpec, ell: float) -> CorrelatorResult:
    """Narrow-bin closed form; accurate when ell is well under the state width e^r."""
    if not (math.isfinite(ell) and ell > 0):
        raise ValueError(f"ell must be finite and > 0, got {ell!r}")
    spec, parity = _parity_reduce(spec)
    xi, notes = _resolve_xi(spec)
    value = narrow_bin_value(xi, ell)
    return CorrelatorResult(
        value=parity * value, method="small-ell", degenerate_path=bool(notes), notes=notes
    )


def _sign_operator_equal_time(params: SqueezeParams) -> float:
    """ell -> infinity equal-time limit: E = (2/pi) arcsin(rho).

    In that limit the binned observable reduces to sign(q) and |psi|^2 is a
    centered bivariate normal with quadrature correlation rho = -br/ar.
    """
    A = coeff_A(params.r, params.varphi)
    B = coeff_B(params.r, params.varphi)
    ar, br = -A.real, -B.real
    if ar <= abs(br):
        raise NonConvergentXiError("squared wavefunction is not normalizable")
    return (2.0 / math.pi) * math.asin(-br / ar)


def correlator_large_ell(spec: TransitionSpec) -> CorrelatorResult:
    """Wide-bin closed form; the bin width drops out entirely.

    Coincident pairs, where the two-time kernel degenerates, are routed to
    the wide-bin equal-time limit (2/pi) arcsin(rho) instead.
    """
    spec, parity = _parity_reduce(spec)
    if is_coincident(spec):
        return CorrelatorResult(
            value=parity * _sign_operator_equal_time(spec.a),
            method="large-ell",
            degenerate_path=True,
            notes=("coincident pair: wide-bin equal-time limit",),
        )
    xi, notes = _resolve_xi(spec)
    value = wide_bin_value(xi)
    return CorrelatorResult(
        value=parity * value, method="large-ell", degenerate_path=bool(notes), notes=notes
    )


def correlator_large_ell_large_squeeze(
    phi_a: float, phi_b: float, dtheta: float
) -> CorrelatorResult:
    """Joint wide-bin + infinite-squeezing limit: a pure function of angles.

    E = (2/pi) Re arctan(zeta / sqrt(4 - zeta^2)) with
    zeta = e^{i dtheta} (e^{2i phi_a} + e^{-2i phi_b}); |zeta| <= 2. On the
    singular locus zeta^2 = 4 the correlation is maximal and the limiting
    value is exactly +1 (zeta = 2) or -1 (zeta = -2); that exact value is
    returned rather than dividing by zero.
    """
    zeta = complex(
        np.exp(1j * dtheta) * (np.exp(2j * phi_a) + np.exp(-2j * phi_b))
    )
    if abs(4.0 - zeta * zeta) < 8e-14:
        value = 1.0 if zeta.real > 0.0 else -1.0
        return CorrelatorResult(
            value=value,
            method="large-squeeze",
            notes=("maximal-correlation locus: exact limiting value",),
        )
    value = (2.0 / math.pi) * principal_arctan(
        zeta / principal_sqrt(4.0 - zeta * zeta)
    ).real
    return CorrelatorResult(value=float(value), method="large-squeeze")


def _equal_time_cells(params: SqueezeParams, ell: float) -> tuple[float, float, int]:
    """Signed cell sum of |psi|^2 over the sign-bin checkerboard.

    |psi|^2 is a centered bivariate Gaussian that factorizes exactly in the
    rotated coordinates u = (q1+q2)/sqrt(2), v = (q1-q2)/sqrt(2), with decay
    rates lam_u = ar+br and lam_v = ar-br. The checkerboard sign
    (-1)^{floor(q1/ell)+floor(q2/ell)} is piecewise constant in u at fixed
    v, so the u-integral is an exact erf segment sum over the lattice-line
    crossings; only the v-direction is integrated numerically. This stays
    exact for arbitrarily squeezed states, where the density ridge is a
    diagonal sliver of width e^{-r} that a checkerboard-aligned quadrature
    cannot resolve affordably.
    """
    A = coeff_A(params.r, params.varphi)
    B = coeff_B(params.r, params.varphi)
    n2 = abs(normalization(params)) ** 2
    ar, br = -A.real, -B.real
    lam_u = ar + br
    lam_v = ar - br
    if min(lam_u, lam_v) <= 0.0:
        raise NonConvergentXiError("squared wavefunction is not normalizable")
    # Lattice lines q = n ell map to u = c n -/+ v with c = sqrt(2) ell.
    c = math.sqrt(2.0) * ell
    su = math.sqrt(lam_u)
    u_max = 13.0 / su
    v_max = 13.0 / math.sqrt(lam_v)
    half_width = math.sqrt(math.pi) / (2.0 * su)
    n_lines = int(2.0 * (u_max + v_max) / c) + 2
    if n_lines > 20_000_000:
        raise MaxBandsExceededError(
            f"equal-time segment count {n_lines} exceeds budget "
            "(bin width far below the anti-squeezed state width)"
        )

    def signed_mass(v: float) -> float:
        # Breakpoints where (u+v)/sqrt(2) or (u-v)/sqrt(2) crosses n ell.
        k0 = math.floor((-u_max - abs(v)) / c)
        k1 = math.ceil((u_max + abs(v)) / c)
        lines = c * np.arange(k0, k1 + 1)
        bp = np.concatenate([lines - v, lines + v])
        bp = np.sort(bp[(bp > -u_max) & (bp < u_max)])
        edges = np.concatenate([[-u_max], bp, [u_max]])
        mids = 0.5 * (edges[:-1] + edges[1:])
        par = np.floor((mids + v) / c) + np.floor((mids - v) / c)
        sgn = np.where(np.mod(par, 2.0) == 0.0, 1.0, -1.0)
        er = _sp.erf(su * edges)
        return half_width * float(np.sum(sgn * (er[1:] - er[:-1])))

    def integrand(v: np.ndarray) -> np.ndarray:
        return np.exp(-lam_v * v * v) * np.array([signed_mass(float(t)) for t in v])

    # Kinks where breakpoint families collide: v a multiple of c/2.
    kinks = np.arange(0.0, v_max, 0.5 * c)[1:]
    total, err = adaptive_1d(
        integrand, 0.0, v_max,
        rel_tol=1e-11, abs_tol=1e-15, breakpoints=list(kinks),
    )
    return float(2.0 * n2 * total.real), 2.0 * n2 * err, n_lines


def correlator_equal_time(params: SqueezeParams, ell: float) -> CorrelatorResult:
    """Equal-time correlator: E = <S^2> for one snapshot, by cell quadrature.

    The squared sign-binned observable gives the checkerboard-signed
    integral of |psi(q1, q2)|^2 over bins of width ell in both arguments.
    """
    if not (math.isfinite(ell) and ell > 0):
        raise ValueError(f"ell must be finite and > 0, got {ell!r}")
    value, err, n_used = _equal_time_cells(params, ell)
    return CorrelatorResult(
        value=value,
        method="equal-time",
        n_bands_used=n_used,
        quadrature_error_estimate=err,
    )


def correlator_auto(spec: TransitionSpec, settings: EvaluationSettings) -> CorrelatorResult:
    """Dispatch on degeneracy and bin-width regime.

    Coincident pairs go to the equal-time path; otherwise the bin width
    against the squeezing scale e^r picks the narrow-bin form
    (ell < 0.01 min e^r), the wide-bin form (ell > 100 max e^r) or the
    numeric band series.
    """
    spec, parity = _parity_reduce(spec)
    if is_coincident(spec):
        res = correlator_equal_time(spec.a, settings.ell)
        res = replace(
            res,
            degenerate_path=True,
            notes=res.notes + ("coincident pair: delegated to equal-time path",),
        )
    else:
        ea = math.exp(spec.a.r)
        eb = math.exp(spec.b.r)
        if settings.ell < 0.01 * min(ea, eb):
            res = correlator_small_ell(spec, settings.ell)
        elif settings.ell > 100.0 * max(ea, eb):
            res = correlator_large_ell(spec)
        else:
            res = correlator_numeric(spec, settings)
    if parity == 1.0:
        return res
    return replace(res, value=parity * res.value)
