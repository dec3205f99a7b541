"""Sub-sample peak refinement by raised-cosine least squares.

The sampling grid limits coarse peak location to one sample (100 ps at
the default 10 GS/s); fitting the 7 points around the maximum with a
cosine-bell model recovers the arrival time to picoseconds.  Model:

    y(t) = B + (A/2) * (1 + cos(pi (t - t0) / W))   for |t - t0| <= W
    y(t) = B                                        otherwise

with free amplitude A, center t0, half-width W and baseline B.  The
baseline is a free parameter because correlation floors are not zero in
noise; pinning B = 0 biases t0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correlate import Correlogram, PeakLocation
from .errors import DegeneratePeakError, ShapeError

MAX_ITERATIONS = 100
CONVERGENCE_TOL = 1e-10
_W_MIN = 0.3    # in grid units; below this the window holds no shape
_W_MAX = 1e3


def raised_cosine(t, center, amplitude, half_width, baseline):
    """Evaluate the peak model; flat baseline outside |t - center| > W."""
    t = np.asarray(t, dtype=float)
    u = (t - center) / half_width
    inside = np.abs(u) <= 1.0
    y = np.full(t.shape, float(baseline))
    y[inside] += 0.5 * amplitude * (1.0 + np.cos(np.pi * u[inside]))
    return y


@dataclass(frozen=True)
class RaisedCosineFit:
    """Result of one peak fit; center is the refined arrival time."""

    center: float
    amplitude: float
    half_width: float
    baseline: float
    residual_rms: float
    converged: bool


def _model_and_jacobian(u: np.ndarray, p: np.ndarray):
    # p = [A, u0, w, B] in grid units
    a, u0, w, b = p
    z = (u - u0) / w
    inside = np.abs(z) <= 1.0
    theta = np.pi * z[inside]
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)

    y = np.full(u.shape, b)
    y[inside] += 0.5 * a * (1.0 + cos_t)

    jac = np.zeros((len(u), 4))
    jac[inside, 0] = 0.5 * (1.0 + cos_t)
    jac[inside, 1] = 0.5 * a * sin_t * (np.pi / w)
    jac[inside, 2] = 0.5 * a * sin_t * (np.pi * (u[inside] - u0) / w**2)
    jac[:, 3] = 1.0
    return y, jac


def _parabolic_vertex(values: np.ndarray) -> float:
    """3-point parabola vertex offset (grid units) around the middle sample."""
    mid = len(values) // 2
    y0, y1, y2 = values[mid - 1], values[mid], values[mid + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return 0.0
    return 0.5 * (y0 - y2) / denom


def fit_peak(times: np.ndarray, values: np.ndarray) -> RaisedCosineFit:
    """Least-squares raised-cosine fit of a peak window.

    Expects a uniform grid with the maximum at the middle sample (the
    window find_peak produces).  Uses damped Gauss-Newton steps with the
    analytic Jacobian; when the solver does not converge, the 3-point
    parabolic vertex is reported with converged = False instead of
    aborting the measurement.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ShapeError("times and values must be 1-D and equally long")
    if len(times) < 5 or len(times) % 2 == 0:
        raise ShapeError("need an odd window of at least 5 points")
    spacing = np.diff(times)
    dt = spacing[0]
    if dt <= 0 or np.any(np.abs(spacing - dt) > 1e-6 * abs(dt)):
        raise ShapeError("window times must form a uniform increasing grid")
    if np.all(values == values[0]):
        raise DegeneratePeakError("all window values are equal")
    mid = len(times) // 2
    if values[mid] < np.max(values):
        raise ValueError("middle window point must be the maximum")

    # Work in grid units around the middle sample so all parameters are
    # O(1) regardless of the absolute time scale.
    t_mid = times[mid]
    u = (times - t_mid) / dt

    vmax, vmin = float(np.max(values)), float(np.min(values))
    p = np.array([vmax - vmin, 0.0, 2.0, vmin])
    lam = 1e-3
    converged = False

    residual = values - _model_and_jacobian(u, p)[0]
    cost = float(residual @ residual)
    for _ in range(MAX_ITERATIONS):
        y, jac = _model_and_jacobian(u, p)
        residual = values - y
        gradient = jac.T @ residual
        hessian = jac.T @ jac
        step = None
        for _ in range(12):
            damped = hessian + lam * np.diag(np.maximum(np.diag(hessian), 1e-12))
            try:
                candidate = np.linalg.solve(damped, gradient)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            trial = p + candidate
            trial[2] = np.clip(trial[2], _W_MIN, _W_MAX)
            trial_res = values - _model_and_jacobian(u, trial)[0]
            trial_cost = float(trial_res @ trial_res)
            if trial_cost <= cost:
                step = trial - p
                p, cost = trial, trial_cost
                lam = max(lam / 3.0, 1e-12)
                break
            lam *= 10.0
        if step is None:
            break
        if np.linalg.norm(step) < CONVERGENCE_TOL * max(np.linalg.norm(p), 1.0):
            converged = True
            break

    half_span = u[-1]
    if converged and abs(p[1]) <= half_span:
        amplitude, u0, w, baseline = p
    else:
        converged = False
        u0 = _parabolic_vertex(values)
        amplitude, w, baseline = vmax - vmin, 2.0, vmin
        p = np.array([amplitude, u0, w, baseline])

    residual = values - _model_and_jacobian(u, p)[0]
    return RaisedCosineFit(
        center=t_mid + p[1] * dt,
        amplitude=float(p[0]),
        half_width=float(p[2] * dt),
        baseline=float(p[3]),
        residual_rms=float(np.sqrt(np.mean(residual**2))),
        converged=converged,
    )


def refine_arrival(corr: Correlogram, peak: PeakLocation) -> float:
    """Refined arrival time of a located peak: corr.t0 + fitted center."""
    fit = fit_peak(peak.window_times, peak.window_values)
    return corr.t0 + fit.center


def refine_arrival_with_fit(corr: Correlogram,
                            peak: PeakLocation) -> tuple[float, RaisedCosineFit]:
    fit = fit_peak(peak.window_times, peak.window_values)
    return corr.t0 + fit.center, fit
