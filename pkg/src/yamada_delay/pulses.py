"""Pulse-train experiments: detection, classification, sweeps.

Everything here works on simulated trajectories.  A pulse is an upward
crossing of the intensity through a threshold; a sustained train is a
sequence of pulses whose spacing and height have stabilized.  The
experiments mirror the standard protocol for a laser with delayed
feedback: kick the solitary laser once, let the single excitable pulse
fill the delay line, then switch the feedback on and watch whether the
re-injected pulse keeps regenerating itself.

Measured quantities follow the pulse-train bookkeeping ``T = (tau +
delta) / k``: ``T`` is the inter-pulse interval, ``k`` the number of
pulses per delay interval, and ``delta > 0`` the regeneration lag of the
feedback loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NoBranchError
from .integrator import HistorySpec, StepControl, Trajectory, integrate
from .model import ModelParams

__all__ = [
    "DECAY",
    "SINGLE_PULSE",
    "SUSTAINED_TRAIN",
    "CW_LIKE",
    "PulseTrainStats",
    "BranchSample",
    "detect_pulses",
    "single_pulse_seed",
    "classify_response",
    "reappearance_shift",
    "refine_period",
    "settle_train",
    "sweep_tau",
    "fold_estimate",
    "scan_kappa_min",
]

DECAY = "decay"
SINGLE_PULSE = "single-pulse"
SUSTAINED_TRAIN = "sustained-train"
CW_LIKE = "cw-like"

#: Minimum spacing between reported pulses; below the shortest
#: inter-pulse interval seen anywhere near the working point.
REFRACTORY = 5.0


def detect_pulses(
    trajectory: Trajectory,
    threshold: float,
    refractory: float = REFRACTORY,
    dt: float = 0.1,
) -> np.ndarray:
    """Times of upward intensity crossings through ``threshold``.

    The trajectory is sampled at spacing ``dt``, each bracketed upward
    crossing is refined by bisection on the dense output to 1e-3 time
    accuracy, and crossings closer than ``refractory`` are merged
    (keeping the earliest).

    Parameters
    ----------
    trajectory : Trajectory
    threshold : float
        Intensity level, > 0.
    refractory : float, optional
    dt : float, optional
        Scan resolution; must be well below the pulse width.

    Returns
    -------
    ndarray
        Strictly increasing crossing times; empty if none.
    """
    if threshold <= 0.0:
        raise InvalidArgumentError("threshold must be positive")
    ts, ys = trajectory.sample(dt)
    s = ys[:, 2] - threshold
    up = np.flatnonzero((s[:-1] < 0.0) & (s[1:] >= 0.0))
    times = []
    for i in up:
        lo, hi = ts[i], ts[i + 1]
        # bisection on the dense output
        while hi - lo > 1e-3:
            mid = 0.5 * (lo + hi)
            if trajectory.evaluate(mid)[2] - threshold >= 0.0:
                hi = mid
            else:
                lo = mid
        t_cross = 0.5 * (lo + hi)
        if not times or t_cross - times[-1] >= refractory:
            times.append(t_cross)
    return np.array(times)


def _pulse_heights(trajectory: Trajectory, pulse_times: np.ndarray, window: float) -> np.ndarray:
    """Peak intensity within ``window`` after each pulse time."""
    heights = np.empty(len(pulse_times))
    for j, tp in enumerate(pulse_times):
        ts = np.linspace(tp, min(tp + window, trajectory.t1), 80)
        heights[j] = trajectory.evaluate_many(ts)[:, 2].max()
    return heights


def _history_peak_intensity(params: ModelParams, history: HistorySpec, samples: int = 512) -> float:
    """Max intensity over the history interval (the excitation scale)."""
    h, _ = history.realize(params)
    if params.tau <= 0.0:
        return float(h(0.0)[2])
    ts = np.linspace(-params.tau, 0.0, samples)
    return max(float(h(t)[2]) for t in ts)


@dataclass(frozen=True)
class PulseTrainStats:
    """Outcome of one excitation experiment.

    Attributes
    ----------
    classification : str
        One of ``decay``, ``single-pulse``, ``sustained-train``,
        ``cw-like``.
    pulse_times : ndarray
        All detected pulses over the run (strictly increasing,
        separated by at least the refractory floor).
    heights : ndarray
        Peak intensity following each pulse.
    k : int or None
        Pulses per delay interval (sustained trains only).
    period : float or None
        Mean inter-pulse interval.
    delta : float or None
        ``k * period - tau``; positive for self-regenerating trains.
    interval_cv : float or None
        Coefficient of variation of the measured intervals.
    threshold : float
        Intensity threshold used for detection.
    params : ModelParams
    horizon : float
    """

    classification: str
    pulse_times: np.ndarray
    heights: np.ndarray
    k: int | None
    period: float | None
    delta: float | None
    interval_cv: float | None
    threshold: float
    params: ModelParams
    horizon: float

    def to_json_obj(self) -> dict:
        from . import _io

        return _io.pulse_stats_json(self)

    def csv_rows(self) -> tuple[list[str], list[list]]:
        from . import _io

        return _io.pulse_stats_rows(self)


def classify_response(
    params: ModelParams,
    history: HistorySpec,
    horizon: float,
    control: StepControl | None = None,
    threshold_frac: float = 0.3,
    refractory: float = REFRACTORY,
    transient_frac: float = 0.25,
    interval_cv_tol: float = 0.01,
    _trajectory: Trajectory | None = None,
) -> PulseTrainStats:
    """Integrate from a history and classify the long-time response.

    The first ``transient_frac`` of the horizon is excluded from train
    statistics.  Classification:

    * ``sustained-train`` -- at least five post-transient pulses with
      interval coefficient of variation below ``interval_cv_tol``,
      stationary heights, persisting to the end of the run;
    * ``cw-like`` -- the late-time intensity is bounded away from the
      off state without forming a train: either settled to a constant
      (relative fluctuation < 1e-3 over the final five delay times) or
      still ringing down toward one;
    * ``single-pulse`` -- exactly one pulse over the whole run, large
      compared to the excitation that seeded it;
    * ``decay`` -- everything else (the field returns to the off
      state).

    Parameters
    ----------
    params : ModelParams
    history : HistorySpec
    horizon : float
        Must be at least ``20 * max(tau, 1)`` so that slow transients
        (the weak translational attraction of pulse trains) have died.

    Returns
    -------
    PulseTrainStats
    """
    if horizon < 20.0 * max(params.tau, 1.0):
        raise InvalidArgumentError("horizon must be at least 20 * max(tau, 1)")
    traj = _trajectory if _trajectory is not None else integrate(params, history, horizon, control)

    dt = min(0.1, refractory / 8.0)
    ts, ys = traj.sample(dt)
    intensity = ys[:, 2]
    i_max = float(intensity.max())
    # The 1e-12 floor only matters for runs where the field has decayed
    # to nothing; it keeps roundoff wiggles from registering as pulses.
    threshold = max(threshold_frac * i_max, 1e-12)
    pulses = detect_pulses(traj, threshold, refractory=refractory, dt=dt)
    heights = _pulse_heights(traj, pulses, window=refractory)

    t_transient = transient_frac * horizon
    post = pulses[pulses >= t_transient]
    post_heights = heights[pulses >= t_transient]

    k = period = delta = cv = None
    label = DECAY

    sustained = False
    if len(post) >= 5:
        intervals = np.diff(post)
        mean_t = float(intervals.mean())
        cv = float(intervals.std() / mean_t)
        # Exclude pulses whose peak window is cut off by the horizon
        # from the height statistic (their maximum is not yet reached).
        whole = post_heights[post + refractory <= traj.t1]
        if len(whole) < 2:
            whole = post_heights
        height_spread = float(whole.std() / whole.mean())
        persists = (horizon - post[-1]) < 2.0 * mean_t
        if cv < interval_cv_tol and height_spread < 0.05 and persists:
            sustained = True
            period = mean_t
            k = int(round(params.tau / period)) if params.tau > 0.0 else 0
            delta = k * period - params.tau
    if sustained:
        label = SUSTAINED_TRAIN
    else:
        k = period = delta = None
        window = 5.0 * max(params.tau, 10.0)
        late = intensity[ts >= horizon - window]
        late_mean = float(late.mean())
        settled = float(late.max() - late.min()) < 1e-3 * late_mean
        if late_mean > 1e-6 and settled:
            label = CW_LIKE
        elif len(pulses) == 1 and heights[0] >= 0.5 * _history_peak_intensity(params, history):
            label = SINGLE_PULSE
        elif late_mean > 1e-6:
            # Not settled yet, but bounded away from the off state: the
            # field is ringing down toward constant emission, not dying.
            label = CW_LIKE
        else:
            label = DECAY

    return PulseTrainStats(
        classification=label,
        pulse_times=pulses,
        heights=heights,
        k=k,
        period=period,
        delta=delta,
        interval_cv=cv,
        threshold=threshold,
        params=params,
        horizon=float(horizon),
    )


def single_pulse_seed(
    params: ModelParams,
    amplitude: float = 1.0,
    width: float = 1.0,
    control: StepControl | None = None,
) -> HistorySpec:
    """History that fills the delay line with one solitary pulse.

    Runs the laser without feedback from a super-threshold rectangular
    intensity kick over one delay time and hands the response back as
    the history on ``[-tau, 0]``.  This is the canonical preparation
    for switching the feedback on: the stored pulse re-injects itself
    once and, if the feedback is strong enough, regenerates
    indefinitely.

    The default amplitude 1.0 is comfortably above the excitability
    threshold at the working point (which sits between 0.3 and 0.5).
    """
    if params.tau <= 0.0:
        raise InvalidArgumentError("a pulse seed needs tau > 0")
    solo = params.replace(kappa=0.0, tau=0.0)
    kick = HistorySpec.off_plus_pulse(amplitude=amplitude, width=width)
    traj = integrate(solo, kick, params.tau, control)
    return HistorySpec.from_tail(traj)


def reappearance_shift(tau0: float, T0: float, k: int) -> float:
    """Delay at which an orbit of period ``T0`` at ``tau0`` reappears.

    A periodic solution of the feedback loop at delay ``tau0`` is also
    a solution at ``tau0 + k * T0`` for any integer ``k >= 0``: shifting
    the delay by whole periods re-reads the same history.
    """
    if T0 <= 0.0:
        raise InvalidArgumentError("period must be positive")
    return tau0 + k * T0


def refine_period(trajectory: Trajectory, period: float, window: float = 5e-3) -> float:
    """Sharpen a period estimate by minimizing the one-period defect.

    Threshold-crossing period estimates carry roughly the crossing
    bisection accuracy (1e-3), which the steep pulse edges amplify into
    a large apparent mismatch between ``x(t)`` and ``x(t - T)``.  This
    polishes ``T`` by minimizing the component-normalized RMS defect
    over the last period of the trajectory, sampled from the dense
    output, down to interpolation accuracy.

    Parameters
    ----------
    trajectory : Trajectory
        Must cover at least two periods (plus the search window).
    period : float
        Initial estimate, accurate to within ``window``.
    window : float, optional
        Half-width of the search bracket around ``period``.

    Returns
    -------
    float
        Refined period.
    """
    from scipy.optimize import minimize_scalar

    anchor = trajectory.t1
    if anchor - 2.0 * period - window < trajectory.t0:
        raise InvalidArgumentError("trajectory shorter than two periods")
    probe = np.linspace(anchor - period, anchor, 257)
    a = trajectory.evaluate_many(probe)
    amp = a.max(axis=0) - a.min(axis=0)
    amp[amp <= 0.0] = 1.0

    def defect(T: float) -> float:
        b = trajectory.evaluate_many(probe - T)
        return float(np.sqrt((((a - b) / amp) ** 2).mean()))

    res = minimize_scalar(
        defect,
        bounds=(period - window, period + window),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


def _train_period(trajectory: Trajectory, n_intervals: int = 8) -> float:
    """Refined inter-pulse interval of a settled run."""
    _, ys = trajectory.sample(0.1)
    i_max = float(ys[:, 2].max())
    if i_max < 1e-9:
        raise NoBranchError("intensity stays at the off level; no train to measure")
    pulses = detect_pulses(trajectory, 0.3 * i_max, dt=0.1)
    if len(pulses) < n_intervals + 1:
        raise NoBranchError("too few pulses to measure a period")
    estimate = float(np.diff(pulses[-(n_intervals + 1) :]).mean())
    return refine_period(trajectory, estimate)


def settle_train(
    params: ModelParams,
    k: int = 1,
    periods: float = 34.0,
    control: StepControl | None = None,
    drift_estimate: float = 3.0,
) -> Trajectory:
    """Integrate to a settled train with ``k`` pulses per delay interval.

    For ``k = 1`` the delay line is seeded with one solitary pulse
    (:func:`single_pulse_seed`) and the run covers ``periods`` delay
    intervals, which is ample for the train to lock at the working
    point.

    For ``k >= 2`` the train is grown by reappearance: a one-pulse
    train at the shorter delay ``tau0`` satisfying ``tau0 + (k-1) * T0
    = tau`` is re-read as the history at the full delay, interleaving
    ``k`` equally spaced copies of the pulse.  The inter-pulse phases
    are nearly neutral — well-separated pulses interact exponentially
    weakly — so uneven seed spacing would persist for the whole run;
    ``tau0`` is therefore pinned by measuring the trial period and
    correcting until the reappearance identity holds to 1e-6.

    Parameters
    ----------
    params : ModelParams
        Requires ``tau > 0`` and feedback strong enough to sustain a
        train (otherwise :class:`NoBranchError`).
    k : int, optional
        Pulses per delay interval.
    periods : float, optional
        Run length in units of the delay.
    drift_estimate : float, optional
        Starting guess for the regeneration lag ``delta``; only the
        seeding accuracy of the first trial depends on it.

    Returns
    -------
    Trajectory
        The full run at ``params``; pass it to the orbit-extraction and
        monodromy routines, or measure it directly.
    """
    if params.tau <= 0.0:
        raise InvalidArgumentError("a pulse train needs tau > 0")
    if k < 1:
        raise InvalidArgumentError("k must be a positive integer")
    if k == 1:
        horizon = periods * (params.tau + drift_estimate)
        return integrate(params, single_pulse_seed(params, control=control), horizon, control)

    tau0 = (params.tau - (k - 1) * drift_estimate) / k
    if tau0 <= 0.0:
        raise InvalidArgumentError(f"delay too short to hold {k} pulses")
    traj0 = None
    T0 = 0.0
    for _ in range(3):
        p0 = params.replace(tau=tau0)
        horizon0 = periods * (tau0 + drift_estimate)
        traj0 = integrate(p0, single_pulse_seed(p0, control=control), horizon0, control)
        T0 = _train_period(traj0)
        miss = tau0 + (k - 1) * T0 - params.tau
        if abs(miss) < 1e-6:
            break
        tau0 -= miss / k
    horizon = periods * k * T0
    return integrate(params, HistorySpec.from_tail(traj0, params.tau), horizon, control)


@dataclass
class BranchSample:
    """Period data collected along one branch of sustained trains.

    Attributes
    ----------
    tau, period, delta : ndarray
        Delay, measured period, and drift ``k * T - tau`` per point.
    k : ndarray of int
        Pulses per delay interval (constant along a healthy branch).
    aborted_at : float or None
        First swept delay that failed classification, if any; samples
        stop at the last good point.
    """

    tau: np.ndarray
    period: np.ndarray
    k: np.ndarray
    delta: np.ndarray
    aborted_at: float | None = None

    def __len__(self) -> int:
        return len(self.tau)

    @property
    def t_min(self) -> float:
        """Smallest period on the branch (sets the coexistence count)."""
        return float(self.period.min())

    def interp_period(self, tau: float) -> float:
        """Linear interpolation of T(tau) on the sampled branch."""
        return float(np.interp(tau, self.tau, self.period))

    def to_json_obj(self) -> dict:
        from . import _io

        return _io.branch_json(self)

    def csv_rows(self) -> tuple[list[str], list[list]]:
        from . import _io

        return _io.branch_rows(self)


def sweep_tau(
    params: ModelParams,
    tau_values,
    control: StepControl | None = None,
    warmup_frac: float = 0.4,
    periods: float = 16.0,
    interval_cv_tol: float = 0.01,
) -> BranchSample:
    """Trace a branch of sustained trains over increasing delays.

    The first point is seeded by :func:`single_pulse_seed`; each later
    point continues from the tail of the previous run, which keeps the
    sweep on the same branch (same ``k``) as long as it remains stable.
    For each delay the run covers roughly ``periods`` pulse periods,
    the first ``warmup_frac`` of which is discarded before measuring.

    Parameters
    ----------
    params : ModelParams
        ``tau`` is overridden per point.
    tau_values : array_like
        Strictly increasing delays, all > 0.

    Returns
    -------
    BranchSample
        Samples up to the last delay that sustained a clean train;
        ``aborted_at`` records the first failure, if any.

    Raises
    ------
    NoBranchError
        If the first delay does not sustain a train.
    """
    taus = np.asarray(list(tau_values), dtype=float)
    if taus.ndim != 1 or len(taus) == 0:
        raise InvalidArgumentError("tau_values must be a nonempty 1-d sequence")
    if np.any(np.diff(taus) <= 0.0) or taus[0] <= 0.0:
        raise InvalidArgumentError("tau_values must be positive and strictly increasing")

    rows: list[tuple[float, float, int, float]] = []
    aborted_at = None
    prev_traj: Trajectory | None = None
    for tau in taus:
        p = params.replace(tau=float(tau))
        if prev_traj is None:
            history = single_pulse_seed(p, control=control)
        else:
            history = HistorySpec.from_tail(prev_traj)
        horizon = periods * (tau + 30.0)
        traj = integrate(p, history, horizon, control)
        meas = _measure_train(traj, p, warmup_frac, interval_cv_tol)
        if meas is None:
            aborted_at = float(tau)
            break
        rows.append(meas)
        prev_traj = traj
    if not rows:
        raise NoBranchError(f"no sustained train at the first delay tau = {taus[0]:g}")
    tau_a, t_a, k_a, d_a = (np.array(col) for col in zip(*rows))
    return BranchSample(tau_a, t_a, k_a.astype(int), d_a, aborted_at)


def _measure_train(
    traj: Trajectory, params: ModelParams, warmup_frac: float, cv_tol: float
) -> tuple[float, float, int, float] | None:
    """(tau, T, k, delta) from the settled part of a run, or None."""
    ts, ys = traj.sample(0.1)
    i_max = float(ys[:, 2].max())
    if i_max < 1e-9:
        return None
    pulses = detect_pulses(traj, 0.3 * i_max, dt=0.1)
    pulses = pulses[pulses >= warmup_frac * traj.t1]
    if len(pulses) < 5:
        return None
    intervals = np.diff(pulses)
    mean_t = float(intervals.mean())
    if intervals.std() / mean_t >= cv_tol:
        return None
    k = int(round(params.tau / mean_t))
    if k < 1:
        return None
    return (params.tau, mean_t, k, k * mean_t - params.tau)


def fold_estimate(branch: BranchSample, k: int) -> float | None:
    """Delay where the branch's reappearance map folds, if sampled.

    Reappearance maps a solution at ``tau`` to one at ``tau + k*T(tau)``;
    that map folds where ``1 + k * T'(tau) = 0``.  The derivative is
    estimated by finite differences on the sampled branch and the sign
    change located by linear interpolation.

    Returns
    -------
    float or None
        Interpolated fold delay, or None when ``1 + k T'`` does not
        change sign over the sample.
    """
    if len(branch) < 5:
        raise InvalidArgumentError("fold estimation needs at least 5 branch samples")
    tau, T = branch.tau, branch.period
    dT = np.gradient(T, tau)
    g = 1.0 + k * dT
    for i in range(len(g) - 1):
        if g[i] == 0.0:
            return float(tau[i])
        if g[i] * g[i + 1] < 0.0:
            frac = g[i] / (g[i] - g[i + 1])
            return float(tau[i] + frac * (tau[i + 1] - tau[i]))
    if g[-1] == 0.0:
        return float(tau[-1])
    return None


def scan_kappa_min(
    params: ModelParams,
    tau: float,
    kappa_bracket: tuple[float, float],
    tol: float,
    control: StepControl | None = None,
) -> float:
    """Bisect for the smallest feedback strength sustaining a train.

    Uses :func:`classify_response` with the standard pulse-seeded
    history as the oracle: below the onset the re-injected pulse decays,
    above it the train regenerates indefinitely.

    Parameters
    ----------
    params : ModelParams
        ``kappa`` and ``tau`` are overridden.
    tau : float
        Delay at which to scan, > 0.
    kappa_bracket : (float, float)
        ``(lo, hi)`` with lo < hi; lo must classify as not sustained
        and hi as sustained.
    tol : float
        Bisection tolerance on kappa, > 0.

    Returns
    -------
    float
        Midpoint of the final bracket.
    """
    lo, hi = (float(v) for v in kappa_bracket)
    if not (0.0 <= lo < hi <= 1.0):
        raise InvalidArgumentError("kappa bracket must satisfy 0 <= lo < hi <= 1")
    if tol <= 0.0:
        raise InvalidArgumentError("tol must be positive")
    if tau <= 0.0:
        raise InvalidArgumentError("tau must be positive")

    horizon = 20.0 * max(tau, 1.0)
    seed = single_pulse_seed(params.replace(tau=float(tau)), control=control)

    def sustained(kappa: float) -> bool:
        p = params.replace(kappa=kappa, tau=float(tau))
        stats = classify_response(p, seed, horizon, control=control)
        return stats.classification == SUSTAINED_TRAIN

    if sustained(lo):
        raise InvalidArgumentError("lower bracket endpoint already sustains a train")
    if not sustained(hi):
        raise InvalidArgumentError("upper bracket endpoint does not sustain a train")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sustained(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
