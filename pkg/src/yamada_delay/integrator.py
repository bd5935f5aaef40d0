"""Delay differential equation integration by the method of steps.

The solver marches an embedded Dormand-Prince 5(4) pair with
proportional-integral step-size control and keeps every accepted node
``(t, y, y')``.  Cubic Hermite interpolation through those nodes serves
both as the user-facing dense output and as the internal lookup for the
delayed term, which is what makes the method of steps work: the maximum
step is capped at ``tau / 4`` so a delayed lookup never reads the step
currently being built.

Derivative discontinuities enter at ``t = 0`` (where the prescribed
history hands over to the flow) and propagate to ``t = n*tau``; the
solver places nodes exactly on those breakpoints for the first few
rounds, after which the solution is smooth enough that step control
alone handles them.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgumentError, OutOfDomainError, StiffnessError
from .model import ModelParams, State

__all__ = [
    "StepControl",
    "HistorySpec",
    "Trajectory",
    "integrate",
]

# Dormand-Prince 5(4) tableau.  The fifth-order weights equal the last
# stage row (FSAL): k7 evaluated at the accepted point seeds the next step.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
# b5 - b4: weights of the embedded error estimate (applied to k1..k7).
_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)


@dataclass(frozen=True)
class StepControl:
    """Adaptive step-size options.

    Parameters
    ----------
    atol, rtol : float
        Absolute and relative error tolerances (per component).
    max_step : float or None
        Upper bound on the step.  The solver additionally enforces
        ``tau / 4`` whenever ``tau > 0``; if ``max_step`` is None a
        default absolute cap of 1.0 applies on top of that.
    smoothing_rounds : int
        Number of delay intervals whose endpoints ``n * tau`` (and
        images of history discontinuities) are forced to be step
        boundaries.  After that many rounds the propagated
        discontinuities are of high enough order to ignore.
    max_steps : int
        Safety bound on the number of accepted steps.
    """

    atol: float = 1e-9
    rtol: float = 1e-7
    max_step: float | None = None
    smoothing_rounds: int = 3
    max_steps: int = 5_000_000

    def __post_init__(self) -> None:
        if self.atol <= 0.0 or self.rtol <= 0.0:
            raise InvalidArgumentError("atol and rtol must be positive")
        if self.max_step is not None and self.max_step <= 0.0:
            raise InvalidArgumentError("max_step must be positive")
        if self.smoothing_rounds < 0:
            raise InvalidArgumentError("smoothing_rounds must be >= 0")


class Trajectory:
    """Densely interpolable solution of one integration run.

    Stores the accepted nodes ``(t_i, y_i, y'_i)`` and evaluates
    anywhere in ``[t0, t1]`` by piecewise cubic Hermite interpolation,
    which matches the order of accuracy of the dense representation
    the integrator itself used for delayed lookups.  A trajectory also
    serves as the history source for a follow-up run (see
    :meth:`HistorySpec.from_tail`).
    """

    def __init__(self, t, y, yp, params: ModelParams):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.yp = np.asarray(yp, dtype=float)
        self.params = params
        if self.t.ndim != 1 or len(self.t) < 2:
            raise InvalidArgumentError("a trajectory needs at least two nodes")
        if np.any(np.diff(self.t) <= 0.0):
            raise InvalidArgumentError("node times must be strictly increasing")

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t1(self) -> float:
        return float(self.t[-1])

    def _locate(self, ts: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.t, ts, side="right") - 1
        return np.clip(idx, 0, len(self.t) - 2)

    def evaluate_many(self, ts) -> np.ndarray:
        """Evaluate the state at an array of times.

        Parameters
        ----------
        ts : array_like
            Times inside ``[t0, t1]`` (a slack of ``1e-9 * span`` is
            tolerated for floating-point fuzz at the endpoints).

        Returns
        -------
        ndarray of shape (len(ts), 3)
        """
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        slack = 1e-9 * max(1.0, self.t1 - self.t0)
        if ts.size and (ts.min() < self.t0 - slack or ts.max() > self.t1 + slack):
            raise OutOfDomainError(
                f"time outside trajectory domain [{self.t0:.6g}, {self.t1:.6g}]"
            )
        idx = self._locate(ts)
        t0 = self.t[idx]
        h = self.t[idx + 1] - t0
        s = ((ts - t0) / h)[:, None]
        y0 = self.y[idx]
        y1 = self.y[idx + 1]
        f0 = self.yp[idx]
        f1 = self.yp[idx + 1]
        om = 1.0 - s
        h00 = (1.0 + 2.0 * s) * om * om
        h10 = s * om * om
        h01 = s * s * (3.0 - 2.0 * s)
        h11 = s * s * (s - 1.0)
        hh = h[:, None]
        return h00 * y0 + hh * h10 * f0 + h01 * y1 + hh * h11 * f1

    def evaluate(self, t: float) -> np.ndarray:
        """State at a single time ``t`` in ``[t0, t1]``."""
        return self.evaluate_many([float(t)])[0]

    def sample(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        """Uniform sampling ``t0, t0+dt, ...`` plus the final time.

        Returns ``(times, states)`` with states of shape (n, 3).
        """
        if dt <= 0.0:
            raise InvalidArgumentError("sampling interval must be positive")
        ts = np.arange(self.t0, self.t1, dt)
        if not ts.size or ts[-1] < self.t1:
            ts = np.append(ts, self.t1)
        return ts, self.evaluate_many(ts)

    def final_state(self) -> State:
        return State.from_array(self.y[-1])


class HistorySpec:
    """Prescription of the state on the history interval ``[-tau, 0]``.

    Build one with the class-method constructors and pass it to
    :func:`integrate`; the delay is taken from the parameter set at
    integration time, so the same spec can seed runs at different tau.
    """

    def __init__(self, kind: str, **payload):
        self.kind = kind
        self.payload = payload

    @classmethod
    def constant(cls, state: State) -> "HistorySpec":
        """Hold a fixed state (nonnegative intensity) for all past times."""
        if state.I < 0.0:
            raise InvalidArgumentError("history intensity must be nonnegative")
        return cls("constant", state=state)

    @classmethod
    def off_plus_pulse(cls, amplitude: float = 0.1, width: float = 1.0) -> "HistorySpec":
        """The non-lasing state plus a rectangular intensity kick.

        The kick of the given amplitude occupies the final ``width``
        time units of the history, ending at ``t = 0``; it is the
        standard trigger for a single excitable pulse.
        """
        if amplitude < 0.0:
            raise InvalidArgumentError("pulse amplitude must be nonnegative")
        if width <= 0.0:
            raise InvalidArgumentError("pulse width must be positive")
        return cls("off_plus_pulse", amplitude=float(amplitude), width=float(width))

    @classmethod
    def from_tail(cls, source: Trajectory, shift: float | None = None) -> "HistorySpec":
        """Reuse the tail of an earlier run as the new history.

        The new history is ``h(t) = source(t + shift)`` for ``t`` in
        ``[-tau, 0]``; ``shift`` defaults to the final time of the
        source, i.e. the new run continues where the old one stopped.
        """
        s = source.t1 if shift is None else float(shift)
        return cls("from_tail", source=source, shift=s)

    def realize(self, params: ModelParams) -> tuple[Callable[[float], tuple], tuple[float, ...]]:
        """Concrete history callable on ``[-tau, 0]`` for these parameters.

        Returns the callable and the interior times (< 0) at which the
        history has a jump, so the integrator can track their delayed
        images as breakpoints.
        """
        tau = params.tau
        if self.kind == "constant":
            st: State = self.payload["state"]
            val = (st.G, st.Q, st.I)
            return (lambda t: val), ()
        if self.kind == "off_plus_pulse":
            amp = self.payload["amplitude"]
            width = self.payload["width"]
            base = (params.A, params.B, 0.0)
            kick = (params.A, params.B, amp)

            def h(t: float) -> tuple:
                return kick if t >= -width else base

            discont = (-width,) if width < tau else ()
            return h, discont
        if self.kind == "from_tail":
            source: Trajectory = self.payload["source"]
            shift: float = self.payload["shift"]
            if shift - tau < source.t0 - 1e-9 or shift > source.t1 + 1e-9:
                raise InvalidArgumentError(
                    "source trajectory too short to supply a history of length tau"
                )

            def h(t: float) -> tuple:
                g, q, i = source.evaluate(min(t + shift, source.t1))
                return (g, q, i)

            return h, ()
        raise InvalidArgumentError(f"unknown history kind {self.kind!r}")


def _hermite_tuple(t, t0, t1, y0, y1, f0, f1):
    h = t1 - t0
    s = (t - t0) / h
    om = 1.0 - s
    h00 = (1.0 + 2.0 * s) * om * om
    h10 = s * om * om
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return tuple(
        h00 * a + h * h10 * b + h01 * c + h * h11 * d
        for a, b, c, d in zip(y0, f0, y1, f1)
    )


def solve_dde(
    f: Callable[[float, tuple, tuple], tuple],
    history: Callable[[float], tuple],
    tau: float,
    t_end: float,
    control: StepControl,
    extra_breakpoints: Sequence[float] = (),
):
    """Generic method-of-steps march; returns node arrays ``(t, y, yp)``.

    Parameters
    ----------
    f : callable
        ``f(t, y, y_delayed) -> derivative`` on plain tuples.  For
        ``tau == 0`` the current stage value is passed as ``y_delayed``
        and the march reduces to an ordinary Runge-Kutta integration.
    history : callable
        State on ``[-tau, 0]``; ``history(0.0)`` is the initial state.
    tau : float
        Delay, >= 0.
    t_end : float
        Final time, > 0.
    control : StepControl
    extra_breakpoints : sequence of float
        Interior history jump times (< 0) whose delayed images get
        breakpoint treatment alongside the multiples of tau.
    """
    if t_end <= 0.0:
        raise InvalidArgumentError("t_end must be positive")
    if tau < 0.0:
        raise InvalidArgumentError("cannot integrate forward with a negative delay")

    if control.max_step is not None:
        hmax = control.max_step
    else:
        hmax = 1.0
    if tau > 0.0:
        hmax = min(hmax, tau / 4.0)
    hmax = min(hmax, t_end)

    # Breakpoints: images n*tau + d of the handover (d = 0) and of any
    # history jumps, for the first smoothing_rounds delay intervals.
    breaks: list[float] = []
    if tau > 0.0:
        for n in range(1, control.smoothing_rounds + 1):
            for d in (0.0, *extra_breakpoints):
                b = n * tau + d
                if 0.0 < b < t_end:
                    breaks.append(b)
    breaks = sorted(set(breaks))
    breaks.append(t_end)

    y0 = tuple(float(v) for v in history(0.0))
    dim = len(y0)
    nodes_t: list[float] = [0.0]
    nodes_y: list[tuple] = [y0]
    nodes_f: list[tuple] = []

    def delayed(s: float) -> tuple:
        if s <= 0.0:
            return tuple(float(v) for v in history(s))
        # max_step <= tau/4 guarantees s is well inside the stored nodes.
        i = bisect_right(nodes_t, s) - 1
        if i >= len(nodes_t) - 1:
            i = len(nodes_t) - 2
        return _hermite_tuple(
            s, nodes_t[i], nodes_t[i + 1], nodes_y[i], nodes_y[i + 1],
            nodes_f[i], nodes_f[i + 1],
        )

    def eval_f(t: float, y: tuple) -> tuple:
        z = delayed(t - tau) if tau > 0.0 else y
        return tuple(float(v) for v in f(t, y, z))

    f0 = eval_f(0.0, y0)
    nodes_f.append(f0)

    atol, rtol = control.atol, control.rtol
    sc0 = [atol + rtol * abs(v) for v in y0]
    d0 = math.sqrt(sum((v / s) ** 2 for v, s in zip(y0, sc0)) / dim)
    d1 = math.sqrt(sum((v / s) ** 2 for v, s in zip(f0, sc0)) / dim)
    h = min(hmax, 0.01 * d0 / d1) if d1 > 1e-10 else min(hmax, 1e-3)
    h = max(h, 1e-8)

    t = 0.0
    y = y0
    fcur = f0
    err_old = 1e-4
    ibreak = 0
    naccept = 0
    facmax = 5.0

    while t < t_end - 1e-12 * max(1.0, t_end):
        while breaks[ibreak] <= t + 1e-12 * max(1.0, t):
            ibreak += 1
        stop = breaks[ibreak]
        h = min(h, hmax)
        if t + h >= stop - 1e-12 * max(1.0, stop):
            h = stop - t
        if h < 1e-13 * max(1.0, abs(t)):
            raise StiffnessError(t)

        # Stages.  k1 is the FSAL derivative carried over from the last
        # accepted step.
        k = [fcur]
        for i in range(1, 7):
            ti = t + _C[i] * h
            ai = _A[i]
            yi = tuple(
                y[c] + h * sum(ai[j] * k[j][c] for j in range(i))
                for c in range(dim)
            )
            k.append(eval_f(ti, yi))
        ynew = yi  # stage 7 value: the fifth-order solution (FSAL)
        err2 = 0.0
        for c in range(dim):
            e = h * sum(_E[j] * k[j][c] for j in range(7))
            sc = atol + rtol * max(abs(y[c]), abs(ynew[c]))
            err2 += (e / sc) ** 2
        err = math.sqrt(err2 / dim)

        if err <= 1.0:
            t = t + h
            y = ynew
            fcur = k[6]
            nodes_t.append(t)
            nodes_y.append(y)
            nodes_f.append(fcur)
            naccept += 1
            if naccept > control.max_steps:
                raise StiffnessError(t, f"exceeded {control.max_steps} steps")
            err = max(err, 1e-10)
            fac = 0.9 * err ** -0.17 * err_old ** 0.04
            h = h * min(facmax, max(0.2, fac))
            err_old = err
            facmax = 5.0
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)
            facmax = 1.0  # no growth right after a rejection

    return (
        np.array(nodes_t),
        np.array(nodes_y),
        np.array(nodes_f),
    )


def integrate(
    params: ModelParams,
    history: HistorySpec,
    t_end: float,
    control: StepControl | None = None,
) -> Trajectory:
    """Integrate the model forward from a prescribed history.

    Parameters
    ----------
    params : ModelParams
        Must have ``tau >= 0``.
    history : HistorySpec
        State on ``[-tau, 0]``; its value at 0 is the initial state.
    t_end : float
        Final time, > 0.
    control : StepControl, optional

    Returns
    -------
    Trajectory
        Dense solution on ``[0, t_end]``.

    Raises
    ------
    InvalidArgumentError
        For ``t_end <= 0``, ``tau < 0``, or a history source shorter
        than the delay.
    StiffnessError
        If the adaptive step size underflows.
    """
    if params.tau < 0.0:
        raise InvalidArgumentError("cannot integrate forward with a negative delay")
    control = control or StepControl()
    hist_fn, discont = history.realize(params)

    gg, gq = params.gamma_G, params.gamma_Q
    aa, bb, sat, kap = params.A, params.B, params.a, params.kappa

    def f(t: float, y: tuple, z: tuple) -> tuple:
        g, q, i = y
        return (
            gg * (aa - g * (1.0 + i)),
            gq * (bb - q * (1.0 + sat * i)),
            (g - q - 1.0) * i + kap * z[2],
        )

    t, y, yp = solve_dde(f, hist_fn, params.tau, float(t_end), control, discont)
    return Trajectory(t, y, yp, params)
