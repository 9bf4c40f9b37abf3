"""Quantitative diagnostics over trajectories.

Windowed synchronization (Pearson factor), reduction error between the
exact and effective models, exponential envelope rates, beat-splitting
extraction and a Benettin-style largest-Lyapunov estimate, combined into a
three-way classification: amplifying, bounded-periodic or chaotic.

All diagnostics are pure functions of immutable trajectories; analysing
distinct trajectories concurrently is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .integrator import IntegrationError, IntegratorConfig, Trajectory, solve
from . import dynamics

__all__ = [
    "AnalysisError",
    "PearsonConfig",
    "EliminationErrorResult",
    "GrowthFit",
    "LLEResult",
    "DiagnosticsReport",
    "pearson_factor",
    "elimination_error",
    "envelope_peaks",
    "envelope_growth_rate",
    "beat_frequency",
    "lyapunov_exponent",
    "classify",
]


class AnalysisError(ValueError):
    """A diagnostic's preconditions are not met by the supplied data."""


# --------------------------------------------------------------------------
# windowed Pearson synchronization factor
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PearsonConfig:
    """Left-aligned windows of length ``window`` hopped by ``stride``.

    ``stride`` defaults to half the window.  ``fields`` names the two real
    trajectory projections to correlate.
    """

    window: float = 10.0
    stride: float | None = None
    fields: tuple = ("re_a1", "re_a2")

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError("window must be positive")
        if self.stride is not None and self.stride <= 0:
            raise ValueError("stride must be positive")

    @property
    def hop(self) -> float:
        return self.stride if self.stride is not None else 0.5 * self.window


def pearson_factor(times, f, g, cfg: PearsonConfig):
    """Windowed correlation of two same-grid series.

    Per window ``[t, t + window)`` the factor is ``mean(df*dg) /
    sqrt(mean(df^2)*mean(dg^2))`` with the windowed means removed; values lie
    in [-1, 1].  Zero-variance windows yield NaN, never a silent zero.
    Returns ``(window_starts, factors)``.
    """
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != times.shape or g.shape != times.shape:
        raise ValueError("series must share the trajectory time grid")

    starts = []
    t0, t1 = times[0], times[-1]
    k = 0
    while t0 + k * cfg.hop + cfg.window <= t1 + 1e-9 * max(1.0, abs(t1)):
        starts.append(t0 + k * cfg.hop)
        k += 1
    if not starts:
        raise AnalysisError("record shorter than one correlation window")

    values = np.empty(len(starts))
    for i, start in enumerate(starts):
        lo = np.searchsorted(times, start - 1e-12)
        hi = np.searchsorted(times, start + cfg.window - 1e-12)
        if hi - lo < 8:
            raise AnalysisError(
                f"window at t={start:g} spans {hi - lo} samples; need >= 8"
            )
        df = f[lo:hi] - f[lo:hi].mean()
        dg = g[lo:hi] - g[lo:hi].mean()
        vf = float(np.mean(df * df))
        vg = float(np.mean(dg * dg))
        if vf == 0.0 or vg == 0.0:
            values[i] = math.nan
        else:
            values[i] = float(np.mean(df * dg)) / math.sqrt(vf * vg)
    return np.array(starts), values


# --------------------------------------------------------------------------
# exact-vs-effective reduction error
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EliminationErrorResult:
    times: np.ndarray
    errors: dict  # field -> |alpha_j - alpha'_j| series
    maxima: dict  # field -> max over the run

    def max_error(self) -> float:
        return max(self.maxima.values())


def _interp_complex(t_new, t_old, z):
    return np.interp(t_new, t_old, z.real) + 1j * np.interp(t_new, t_old, z.imag)


def elimination_error(exact: Trajectory, effective: Trajectory) -> EliminationErrorResult:
    """Per-mode deviation |alpha_j(t) - alpha'_j(t)| and its run maxima.

    Trajectories on different grids are linearly resampled onto the overlap
    of their time ranges; disjoint ranges are an error.  The measure is
    symmetric in its arguments and zero iff the cavity fields coincide.
    """
    lo = max(exact.times[0], effective.times[0])
    hi = min(exact.times[-1], effective.times[-1])
    if hi <= lo:
        raise AnalysisError("trajectories cover disjoint time ranges")
    if len(exact.times) == len(effective.times) and np.array_equal(
        exact.times, effective.times
    ):
        grid = exact.times
        resample = False
    else:
        mask = (exact.times >= lo) & (exact.times <= hi)
        grid = exact.times[mask]
        resample = True

    errors = {}
    maxima = {}
    for name in ("alpha1", "alpha2"):
        ze = exact.fields[name]
        zf = effective.fields[name]
        if resample:
            ze = _interp_complex(grid, exact.times, ze)
            zf = _interp_complex(grid, effective.times, zf)
        err = np.abs(ze - zf)
        errors[name] = err
        maxima[name] = float(err.max())
    return EliminationErrorResult(times=grid, errors=errors, maxima=maxima)


# --------------------------------------------------------------------------
# envelope extraction
# --------------------------------------------------------------------------

def envelope_peaks(times, values):
    """Local maxima of a real series with quadratic peak interpolation.

    Returns ``(peak_times, peak_values)``; interior samples that top both
    neighbours are refined by the parabola through the three points.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    idx = np.flatnonzero((x[1:-1] >= x[:-2]) & (x[1:-1] > x[2:])) + 1
    if len(idx) == 0:
        return np.array([]), np.array([])
    tp = np.empty(len(idx))
    vp = np.empty(len(idx))
    for j, i in enumerate(idx):
        ym, y0, yp = x[i - 1], x[i], x[i + 1]
        den = ym - 2.0 * y0 + yp
        if den < 0.0:
            shift = 0.5 * (ym - yp) / den
            shift = min(0.5, max(-0.5, shift))
            dt = 0.5 * (t[i + 1] - t[i - 1])
            tp[j] = t[i] + shift * dt
            vp[j] = y0 - 0.25 * (ym - yp) * shift
        else:
            tp[j] = t[i]
            vp[j] = y0
    return tp, vp


@dataclass(frozen=True)
class GrowthFit:
    rate: float
    stderr: float
    n_peaks: int


def envelope_growth_rate(traj: Trajectory, selector: str, transient_fraction: float = 1.0 / 3.0) -> GrowthFit:
    """Least-squares exponent of the peak envelope of ``|selector|``.

    Peaks in the leading ``transient_fraction`` of the record are dropped so
    the decaying supermode's transient does not bias the asymptotic rate.
    The standard error of the fitted slope doubles as the fit residual for
    classification.  Fails if fewer than 3 usable peaks remain.
    """
    mag = np.abs(traj.series(selector))
    tp, vp = envelope_peaks(traj.times, mag)
    keep = vp > 0.0
    tp, vp = tp[keep], vp[keep]
    if len(tp) >= 3 and transient_fraction > 0.0:
        cut = traj.times[0] + (traj.times[-1] - traj.times[0]) * transient_fraction
        late = tp >= cut
        if np.count_nonzero(late) >= 3:
            tp, vp = tp[late], vp[late]
    if len(tp) < 3:
        raise AnalysisError(f"fewer than 3 envelope peaks in {selector!r}")
    y = np.log(vp)
    tbar = tp.mean()
    dt = tp - tbar
    denom = float(np.dot(dt, dt))
    slope = float(np.dot(dt, y - y.mean())) / denom
    resid = y - y.mean() - slope * dt
    dof = max(len(tp) - 2, 1)
    stderr = math.sqrt(float(np.dot(resid, resid)) / dof / denom)
    # peak-height residuals are strongly autocorrelated (beats, attractor
    # structure); inflate the slope error by the standard AR(1) factor so the
    # significance test does not overstate certainty
    if len(resid) > 3:
        var = float(np.dot(resid, resid))
        if var > 0.0:
            r1 = float(np.dot(resid[:-1], resid[1:])) / var
            r1 = min(max(r1, 0.0), 0.98)
            stderr *= math.sqrt((1.0 + r1) / (1.0 - r1))
    return GrowthFit(rate=slope, stderr=stderr, n_peaks=len(tp))


# --------------------------------------------------------------------------
# beat-splitting extraction
# --------------------------------------------------------------------------

def beat_frequency(traj: Trajectory, selector: str = "alpha1", min_periods: float = 4.0) -> float:
    """Supermode splitting from the intensity-beat line, in rad/time.

    The demeaned squared magnitude of the selected field beats at exactly
    the splitting of the two supermode frequencies; its dominant discrete
    Fourier line (Hann window, zero-padded, parabolic sub-bin interpolation)
    is returned.  Fails on growing records, on records shorter than
    ``min_periods`` beat periods and when no line stands out of the
    background.
    """
    x = traj.series(selector)
    power = np.abs(x) ** 2
    n = len(power)
    if n < 32:
        raise AnalysisError("record too short for spectral beat extraction")

    quarter = max(n // 4, 1)
    early = float(np.max(power[:quarter]))
    late = float(np.max(power[-quarter:]))
    if early > 0 and late > 9.0 * early:
        raise AnalysisError("trajectory is not bounded; no beat to extract")

    dt = float(traj.times[1] - traj.times[0])
    taper = np.hanning(n)
    # remove the taper-weighted mean so the DC line is nulled exactly
    sig = (power - float(np.dot(taper, power)) / float(taper.sum())) * taper
    padded = 4 * n
    mag = np.abs(np.fft.rfft(sig, n=padded))
    freqs = 2.0 * math.pi * np.fft.rfftfreq(padded, d=dt)

    span = traj.times[-1] - traj.times[0]
    w_min = min_periods * 2.0 * math.pi / span
    k_min = int(np.searchsorted(freqs, w_min))
    if k_min + 2 >= len(mag):
        raise AnalysisError("record too short to resolve any beat line")
    window = mag[k_min:]
    k = k_min + int(np.argmax(window))
    background = float(np.median(window))
    if background > 0 and mag[k] < 10.0 * background:
        raise AnalysisError("no resolved beat line above spectral background")

    # refine with the continuous-frequency periodogram around the grid peak
    tvec = traj.times - traj.times[0]

    def periodogram(omega: float) -> float:
        return float(np.abs(np.dot(np.exp(-1j * omega * tvec), sig)))

    bin_width = 2.0 * math.pi / span
    lo = max(freqs[k] - bin_width, 0.5 * w_min)
    hi = freqs[k] + bin_width
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - phi * (hi - lo)
    x2 = lo + phi * (hi - lo)
    f1, f2 = periodogram(x1), periodogram(x2)
    for _ in range(80):
        if hi - lo < 1e-9 * bin_width:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - phi * (hi - lo)
            f1 = periodogram(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + phi * (hi - lo)
            f2 = periodogram(x2)
    return float(0.5 * (lo + hi))


# --------------------------------------------------------------------------
# largest Lyapunov exponent (two-trajectory Benettin estimate)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LLEResult:
    lle: float
    stderr: float
    n_segments: int


def lyapunov_exponent(
    model,
    params,
    init,
    horizon: float = 3000.0,
    renorm_interval: float = 10.0,
    rel_perturbation: float = 1e-8,
    cfg: IntegratorConfig | None = None,
    perturb_index: int | None = None,
) -> LLEResult:
    """Time-averaged log-stretch rate of a renormalized companion trajectory.

    ``model`` is a model tag (with ``params``/``init`` as for
    :func:`asymres.dynamics.integrate`) or a flat-state rhs callable (then
    ``init`` is the flat vector and ``params`` is ignored).  The companion
    starts displaced along Re(alpha_1) by ``rel_perturbation`` of the state
    norm and both trajectories advance on a shared adaptive grid; every
    ``renorm_interval`` the separation is logged and rescaled.  Returns the
    mean rate with its standard error across segments.
    """
    cfg = cfg or IntegratorConfig()
    if callable(model) and not isinstance(model, str):
        rhs_single = model
        y0 = np.asarray(init, dtype=float).copy()
        p_idx = 0 if perturb_index is None else perturb_index

        def rhs_pair(t, z):
            m = len(z) // 2
            return np.concatenate((rhs_single(t, z[:m]), rhs_single(t, z[m:])))

    else:
        mdef = dynamics.model_definition(model)
        rhs_pair = dynamics.compiled_rhs(model, params, pair=True)
        y0 = dynamics.pack_state(model, init)
        if perturb_index is None:
            offset = 0
            for name in mdef.state_fields:
                if name == "alpha1":
                    break
                offset += 2 if name in mdef.complex_fields else 1
            p_idx = offset
        else:
            p_idx = perturb_index

    n = len(y0)
    d0 = rel_perturbation * max(1.0, float(np.linalg.norm(y0)))
    y_ref = y0.copy()
    y_pert = y0.copy()
    y_pert[p_idx] += d0

    seg_cfg = IntegratorConfig(
        method=cfg.method,
        rel_tol=cfg.rel_tol,
        abs_tol=cfg.abs_tol,
        max_step=cfg.max_step,
        output_stride=renorm_interval,
    )
    n_segments = int(round(horizon / renorm_interval))
    if n_segments < 2:
        raise ValueError("horizon must span at least two renormalization intervals")

    rates = np.empty(n_segments)
    z = np.concatenate((y_ref, y_pert))
    for seg in range(n_segments):
        try:
            _, states = solve(rhs_pair, z, renorm_interval, seg_cfg)
        except IntegrationError as exc:
            raise IntegrationError(
                f"trajectory blow-up during Lyapunov segment {seg}: {exc}",
                time=seg * renorm_interval,
            ) from exc
        z = states[-1]
        y_ref, y_pert = z[:n], z[n:]
        delta = y_pert - y_ref
        d = float(np.linalg.norm(delta))
        if d == 0.0 or not math.isfinite(d):
            raise AnalysisError(
                f"companion separation degenerated in segment {seg} (d={d!r})"
            )
        rates[seg] = math.log(d / d0) / renorm_interval
        y_pert = y_ref + delta * (d0 / d)
        z = np.concatenate((y_ref, y_pert))

    lle = float(rates.mean())
    stderr = float(rates.std(ddof=1) / math.sqrt(n_segments))
    return LLEResult(lle=lle, stderr=stderr, n_segments=n_segments)


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsReport:
    """Aggregated diagnostics with a derived classification.

    ``classification`` is ``amplifying``, ``bounded-periodic`` or
    ``chaotic``; mutually contradictory evidence is reported explicitly as
    ``inconclusive`` rather than forced into a class.
    """

    classification: str
    growth_rate: float | None = None
    growth_stderr: float | None = None
    lle: float | None = None
    lle_stderr: float | None = None
    beat_splitting: float | None = None
    notes: tuple = ()

    def to_kv(self) -> str:
        lines = [f"classification = {self.classification}"]
        for name in ("growth_rate", "growth_stderr", "lle", "lle_stderr", "beat_splitting"):
            value = getattr(self, name)
            if value is not None:
                lines.append(f"{name} = {value!r}")
        for note in self.notes:
            lines.append(f"note = {note}")
        return "\n".join(lines) + "\n"


def classify(
    growth_rate: float | None = None,
    growth_stderr: float | None = None,
    lle: float | None = None,
    lle_stderr: float | None = None,
    beat_splitting: float | None = None,
) -> DiagnosticsReport:
    """Pure classification from fitted diagnostics.

    Amplifying when the envelope rate exceeds 10x its fit error; chaotic
    when (not amplifying and) the Lyapunov estimate exceeds 3 sigma;
    bounded-periodic otherwise.
    """
    amplifying = (
        growth_rate is not None
        and growth_stderr is not None
        and growth_rate > 10.0 * growth_stderr
    )
    chaotic = lle is not None and lle_stderr is not None and lle > 3.0 * lle_stderr
    notes: list = []
    if amplifying and chaotic:
        label = "inconclusive"
        notes.append("growth and Lyapunov evidence conflict")
    elif amplifying:
        label = "amplifying"
    elif chaotic:
        label = "chaotic"
    else:
        label = "bounded-periodic"
    return DiagnosticsReport(
        classification=label,
        growth_rate=growth_rate,
        growth_stderr=growth_stderr,
        lle=lle,
        lle_stderr=lle_stderr,
        beat_splitting=beat_splitting,
        notes=tuple(notes),
    )
