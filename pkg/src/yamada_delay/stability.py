"""Linear stability of steady states.

The linearization about a steady state ``x`` of the delayed system is
``y'(t) = M1(x) y(t) + M2 y(t-tau)``, whose exponential solutions
``y = e^{lambda t} v`` exist where the transcendental characteristic
function vanishes.  For the off state the determinant factorizes::

    char_off(lambda) = (lambda + gamma_G) (lambda + gamma_Q)
                       * (-lambda + A - B - 1 + kappa * e^{-tau lambda})

so all delay-dependent structure lives in the scalar transcendental
factor.  Roots of exponential polynomials sit on near-horizontal chains
with imaginary spacing about ``2 pi / |tau|``; the root finder seeds a
Newton iteration from a rectangular grid with that spacing and keeps
deduplicated, residual-checked converged points.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularParameterError
from .model import ModelParams, State, jacobians, rhs

__all__ = [
    "STABLE",
    "SADDLE_FINITE_UNSTABLE",
    "INFINITELY_MANY_UNSTABLE",
    "SpectrumSet",
    "HopfCurvePoint",
    "BTPoint",
    "char_off",
    "char_off_factor",
    "char_off_factor_deriv",
    "roots_off",
    "roots_generic",
    "hopf_curve_off",
    "bt_point",
    "classify_off",
]

STABLE = "stable"
SADDLE_FINITE_UNSTABLE = "saddle-finite-unstable"
INFINITELY_MANY_UNSTABLE = "infinitely-many-unstable"

_DEDUP_TOL = 1e-7
_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class SpectrumSet:
    """Deduplicated characteristic roots found inside a search window.

    Attributes
    ----------
    roots : ndarray of complex
        Sorted by real part, then imaginary part.
    residuals : ndarray of float
        ``|char(root)|``; every entry is below 1e-9.
    multiple : ndarray of bool
        True where the derivative of the characteristic function also
        vanishes (a multiple root, e.g. at a double zero).
    window : tuple of float
        ``(re_min, re_max, im_min, im_max)`` searched.
    """

    roots: np.ndarray
    residuals: np.ndarray
    multiple: np.ndarray
    window: tuple[float, float, float, float]

    def __len__(self) -> int:
        return len(self.roots)

    def max_real_part(self) -> float:
        if len(self.roots) == 0:
            return -math.inf
        return float(self.roots.real.max())

    def to_json_obj(self) -> dict:
        from . import _io

        return _io.spectrum_json(self)

    def csv_rows(self) -> tuple[list[str], list[list]]:
        from . import _io

        return _io.spectrum_rows(self)


def char_off(lam: complex, params: ModelParams) -> complex:
    """Characteristic function of the off state at ``lambda``."""
    lam = complex(lam)
    return (lam + params.gamma_G) * (lam + params.gamma_Q) * char_off_factor(lam, params)


def char_off_factor(lam: complex, params: ModelParams) -> complex:
    """Transcendental factor ``-lambda + A - B - 1 + kappa e^{-tau lambda}``."""
    lam = complex(lam)
    return -lam + params.A - params.B - 1.0 + params.kappa * _cexp(-params.tau * lam)


def char_off_factor_deriv(lam: complex, params: ModelParams) -> complex:
    """Derivative of :func:`char_off_factor` with respect to lambda."""
    lam = complex(lam)
    return -1.0 - params.kappa * params.tau * _cexp(-params.tau * lam)


def _cexp(z: complex) -> complex:
    # exp with overflow guard: arguments beyond +/-700 are clamped to
    # values whose Newton iterates will be discarded anyway.
    if z.real > 700.0:
        return cmath.rect(math.inf, z.imag)
    return cmath.exp(z)


def _window4(window) -> tuple[float, float, float, float]:
    try:
        re_min, re_max, im_min, im_max = (float(v) for v in window)
    except (TypeError, ValueError):
        raise InvalidArgumentError(
            "window must be (re_min, re_max, im_min, im_max)"
        ) from None
    if not all(map(math.isfinite, (re_min, re_max, im_min, im_max))):
        raise InvalidArgumentError("window must be bounded")
    if re_min >= re_max or im_min >= im_max:
        raise InvalidArgumentError("window must have positive extent")
    return re_min, re_max, im_min, im_max


def _grid_starts(window, tau: float, re_step: float, im_step: float | None):
    re_min, re_max, im_min, im_max = window
    if im_step is None:
        im_step = min(math.pi / abs(tau), 0.5) if tau != 0.0 else 0.5
    n_re = int((re_max - re_min) / re_step) + 2
    n_im = int((im_max - im_min) / im_step) + 2
    if n_re * n_im > 2_000_000:
        raise InvalidArgumentError("window too large for the grid spacing")
    res = np.linspace(re_min, re_max, n_re)
    ims = np.linspace(im_min, im_max, n_im)
    return [complex(r, i) for r in res for i in ims]


def _polish_multiple(f, fp, z: complex) -> complex:
    """Sharpen a near-multiple root by Newton on the derivative.

    Around a double root the residual of ``f`` is quadratically flat,
    so plain Newton stalls anywhere inside the roundoff basin; ``fp``
    has a simple root there and converges quadratically.  Falls back to
    the input if the polish drifts off the root of ``f`` itself.
    """
    w = z
    for _ in range(30):
        d = fp(w)
        h = 1e-6 * (1.0 + abs(w))
        d2 = (fp(w + h) - fp(w - h)) / (2.0 * h)
        if d2 == 0.0:
            break
        step = d / d2
        w = w - step
        if abs(step) < 1e-12 * (1.0 + abs(w)):
            break
    if math.isfinite(w.real) and math.isfinite(w.imag) and abs(f(w)) <= max(
        abs(f(z)), 1e-13
    ):
        return w
    return z


def _newton_roots(f, fp, starts, window, extra_roots=()):
    """Newton iteration from each start; dedup, filter, sort.

    ``extra_roots`` are known exact roots appended before filtering
    (e.g. the explicit polynomial factors of char_off).
    """
    re_min, re_max, im_min, im_max = window
    span = max(re_max - re_min, im_max - im_min)
    found: list[complex] = [complex(z) for z in extra_roots]
    for z0 in starts:
        z = z0
        ok = False
        for _ in range(60):
            fz = f(z)
            if not (math.isfinite(fz.real) and math.isfinite(fz.imag)):
                break
            if abs(fz) < 1e-14:
                ok = True
                break
            d = fp(z)
            if d == 0.0:
                break
            step = fz / d
            z = z - step
            if abs(z) > abs(z0) + 20.0 * span:
                break
            if abs(step) < 1e-13 * (1.0 + abs(z)):
                ok = True
                break
        if ok and math.isfinite(z.real) and math.isfinite(z.imag):
            if abs(fp(z)) < 1e-6 and abs(f(z)) < 1e-12:
                z = _polish_multiple(f, fp, z)
            found.append(z)

    # keep window, conjugate-complete, dedup
    inside = [
        z
        for z in found
        if re_min - 1e-9 <= z.real <= re_max + 1e-9
        and im_min - 1e-9 <= z.imag <= im_max + 1e-9
    ]
    conj = [z.conjugate() for z in inside if im_min - 1e-9 <= -z.imag <= im_max + 1e-9]
    merged: list[complex] = []
    for z in sorted(inside + conj, key=lambda w: (w.real, w.imag)):
        if not any(abs(z - w) < _DEDUP_TOL for w in merged):
            merged.append(z)
    return merged


def roots_off(
    params: ModelParams,
    window,
    re_step: float = 0.1,
    im_step: float | None = None,
) -> SpectrumSet:
    """All characteristic roots of the off state inside a window.

    Newton's method on the transcendental factor is started from a
    rectangular grid (imaginary spacing ``min(pi/|tau|, 0.5)`` by
    default, matching the asymptotic chain spacing of the roots); the
    explicit polynomial roots ``-gamma_G`` and ``-gamma_Q`` are added
    directly when they fall inside the window.  Non-converged starts
    are discarded silently; an empty result is valid.
    """
    win = _window4(window)
    starts = _grid_starts(win, params.tau, re_step, im_step)

    def f(z):
        return char_off_factor(z, params)

    def fp(z):
        return char_off_factor_deriv(z, params)

    poly = [
        complex(-g, 0.0)
        for g in (params.gamma_G, params.gamma_Q)
        if win[0] <= -g <= win[1] and win[2] <= 0.0 <= win[3]
    ]
    roots = _newton_roots(f, fp, starts, win, extra_roots=poly)

    kept, resid, mult = [], [], []
    for z in roots:
        r = abs(char_off(z, params))
        if r < _RESIDUAL_TOL:
            kept.append(z)
            resid.append(r)
            # multiple if the whole characteristic function has a
            # vanishing derivative (double polynomial root or double
            # transcendental root).
            mult.append(abs(_char_off_deriv(z, params)) < 1e-6)
    return SpectrumSet(
        np.array(kept, dtype=complex),
        np.array(resid),
        np.array(mult, dtype=bool),
        win,
    )


def _char_off_deriv(z: complex, params: ModelParams) -> complex:
    p1 = z + params.gamma_G
    p2 = z + params.gamma_Q
    f = char_off_factor(z, params)
    fp = char_off_factor_deriv(z, params)
    return p2 * f + p1 * f + p1 * p2 * fp


def _det3(m) -> complex:
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _adj3(m):
    (a, b, c), (d, e, f), (g, h, i) = m
    return (
        (e * i - f * h, c * h - b * i, b * f - c * e),
        (f * g - d * i, a * i - c * g, c * d - a * f),
        (d * h - e * g, b * g - a * h, a * e - b * d),
    )


def roots_generic(
    steady_state: State,
    params: ModelParams,
    window,
    re_step: float = 0.1,
    im_step: float | None = None,
) -> SpectrumSet:
    """Characteristic roots of the linearization at any equilibrium.

    Works on ``det(lambda I - M1 - M2 e^{-lambda tau})`` for the
    Jacobians evaluated at the given state, so it covers the lasing
    equilibria where no closed-form factorization exists.  At the off
    state it reproduces :func:`roots_off` (the determinant factorizes).

    Raises
    ------
    InvalidArgumentError
        If the state is not an equilibrium (RHS residual above 1e-8).
    """
    res = float(np.max(np.abs(rhs(steady_state, steady_state.I, params))))
    if res > 1e-8:
        raise InvalidArgumentError(f"state is not an equilibrium (residual {res:.2e})")
    win = _window4(window)
    m1, m2 = jacobians(steady_state, params)
    m1 = tuple(tuple(row) for row in m1)
    kap = params.kappa
    tau = params.tau

    def fmat(z):
        ex = kap * _cexp(-tau * z)
        return (
            (z - m1[0][0], -m1[0][1], -m1[0][2]),
            (-m1[1][0], z - m1[1][1], -m1[1][2]),
            (-m1[2][0], -m1[2][1], z - m1[2][2] - ex),
        )

    def f(z):
        return _det3(fmat(z))

    def fp(z):
        # d det(F)/dz = trace(adj(F) F') with F' = I + tau e^{-tau z} M2
        ex = kap * _cexp(-tau * z)
        adj = _adj3(fmat(z))
        return adj[0][0] + adj[1][1] + adj[2][2] * (1.0 + tau * ex)

    starts = _grid_starts(win, tau, re_step, im_step)
    roots = _newton_roots(f, fp, starts, win)
    kept, resid, mult = [], [], []
    for z in roots:
        r = abs(f(z))
        if r < _RESIDUAL_TOL:
            kept.append(z)
            resid.append(r)
            mult.append(abs(fp(z)) < 1e-6)
    return SpectrumSet(
        np.array(kept, dtype=complex),
        np.array(resid),
        np.array(mult, dtype=bool),
        win,
    )


@dataclass(frozen=True)
class HopfCurvePoint:
    """One point of the off-state Hopf curve in the (kappa, tau) plane.

    The curve is parametrized by the crossing frequency: at
    ``kappa(omega) = sqrt(omega^2 + (A-B-1)^2)`` and the matching delay
    the characteristic function has a root exactly at ``i omega``.
    A separate branch exists for every integer winding index.
    """

    omega: float
    kappa: float
    tau: float
    branch_index: int
    residual: float


def hopf_curve_off(
    params: ModelParams,
    omega_values,
    branches=(-2, -1, 0, 1, 2),
) -> list[HopfCurvePoint]:
    """Hopf-curve points of the off state for sampled frequencies.

    Only the ``+`` square-root branch of ``kappa(omega)`` can meet the
    physical range, and only points with ``|A - B - 1| < kappa <= 1``
    are emitted; the ``-`` branch is never physical and is dropped by
    construction.  ``omega = 0`` samples are skipped (the curve is
    parametrized away from the zero-frequency point).

    Returns
    -------
    list of HopfCurvePoint
        Every point carries its characteristic residual, below 1e-10.
    """
    c = params.A - params.B - 1.0
    out: list[HopfCurvePoint] = []
    for omega in np.asarray(list(omega_values), dtype=float):
        if omega == 0.0:
            continue
        kap = math.hypot(omega, c)
        if kap > 1.0 or kap <= abs(c):
            continue
        base_arg = cmath.phase(complex(-c, omega))  # arg(i omega - (A-B-1))
        for k in branches:
            tau = (-base_arg + 2.0 * math.pi * k) / omega
            p = params.replace(kappa=kap, tau=tau)
            r = abs(char_off(1j * omega, p))
            out.append(
                HopfCurvePoint(
                    float(omega), kap, tau, int(k), r
                )
            )
    return out


@dataclass(frozen=True)
class BTPoint:
    """Double-zero point of the off state's transcendental factor.

    ``physical`` is False when the feedback strength falls outside
    [0, 1] (the double root then has no realizable parameter set).
    """

    tau: float
    kappa: float
    physical: bool


def bt_point(A: float, B: float) -> BTPoint:
    """Parameter point where the off state has a double zero root.

    At ``(tau, kappa) = (1/(A-B-1), -(A-B-1))`` the transcendental
    factor satisfies f(0) = f'(0) = 0.

    Raises
    ------
    SingularParameterError
        If ``A == B + 1``.
    """
    c = A - B - 1.0
    if c == 0.0:
        raise SingularParameterError("A = B + 1 makes the double-zero point singular")
    kap = -c
    return BTPoint(tau=1.0 / c, kappa=kap, physical=0.0 <= kap <= 1.0)


def classify_off(params: ModelParams) -> str:
    """Spectral class of the off state.

    Returns one of :data:`STABLE`, :data:`SADDLE_FINITE_UNSTABLE` (at
    least one but finitely many roots in the right half plane) or
    :data:`INFINITELY_MANY_UNSTABLE` (real parts accumulate at +inf,
    the generic picture for negative delay).

    The classification follows the sign of ``tau``, the position of
    ``A`` relative to ``B + 1``, and the feedback strength relative to
    ``|A - B - 1|``; marginal parameter sets (a root exactly on the
    imaginary axis) are classed with the unstable side.  ``tau = 0``
    reduces to the ordinary eigenvalue problem, and ``kappa = 0``
    removes the transcendental term entirely regardless of the delay's
    sign.
    """
    c = params.A - params.B - 1.0
    if params.tau == 0.0 or params.kappa == 0.0:
        # ODE limit: eigenvalues -gamma_G, -gamma_Q, c + kappa (at tau=0)
        # or plain c (kappa=0, any tau).
        top = c + params.kappa if params.tau == 0.0 else c
        return STABLE if top < 0.0 else SADDLE_FINITE_UNSTABLE
    if params.tau < 0.0:
        return INFINITELY_MANY_UNSTABLE
    if c < 0.0 and params.kappa < -c:
        return STABLE
    return SADDLE_FINITE_UNSTABLE
