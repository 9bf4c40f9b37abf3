"""Deterministic explicit Runge-Kutta integration on flat real state vectors.

Two steppers are provided: the classic fixed-step 4th-order scheme and the
Cash-Karp embedded 4(5) pair with adaptive step control (the higher-order
solution is propagated, the embedded difference drives the controller).
Output samples land exactly on the requested stride grid, and identical
inputs produce bit-identical trajectories on one platform.

Complex model states are flattened to interleaved (re, im) pairs by the
model definitions in :mod:`asymres.dynamics`; this module only sees floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:  # compiled fast path; the numpy path below is the reference behaviour
    from . import _fast
except ImportError:  # pragma: no cover - numba not installed
    _fast = None

__all__ = ["IntegrationError", "IntegratorConfig", "CompiledRHS", "Trajectory", "solve"]

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0

# Cash-Karp tableau; error weights are the difference of the 5th- and
# 4th-order rows.
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0),
    (-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0),
    (1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0),
)
_B5 = (37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0)
_B4 = (2825.0 / 27648.0, 0.0, 18575.0 / 48384.0, 13525.0 / 55296.0, 277.0 / 14336.0, 1.0 / 4.0)
_E = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


class IntegrationError(RuntimeError):
    """Step-size underflow or non-finite state; carries the failure time."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class CompiledRHS:
    """Handle to a registered model's compiled right-hand side.

    ``fallback`` is the equivalent pure-Python callable, used for the
    fixed-step method and when the compiled kernels are unavailable.
    ``pair=True`` applies the model to both halves of a stacked state
    (shared-grid companion integration).
    """

    model_id: int
    params: np.ndarray
    pair: bool
    fallback: object

    def __call__(self, t, y):
        return self.fallback(t, y)


@dataclass(frozen=True)
class IntegratorConfig:
    """Method selection and error-control settings.

    ``method`` is ``"rkck45"`` (adaptive) or ``"rk4"`` (fixed step; the step
    is derived from ``max_step``, subdividing each output stride evenly).
    """

    method: str = "rkck45"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    output_stride: float = 0.5

    def __post_init__(self):
        if self.method not in ("rkck45", "rk4"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.output_stride <= 0:
            raise ValueError("output_stride must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")

    def to_meta(self) -> dict:
        return {
            "method": self.method,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "max_step": self.max_step,
            "output_stride": self.output_stride,
        }


@dataclass
class Trajectory:
    """Sampled state history with named (complex or real) field columns.

    ``fields`` preserves insertion order, which fixes the CSV column order.
    ``meta`` carries the model tag, parameter echo and integrator settings.
    """

    times: np.ndarray
    fields: dict
    meta: dict = field(default_factory=dict)

    _SHORT = {"a1": "alpha1", "a2": "alpha2", "b1": "beta1", "b2": "beta2"}

    def _resolve(self, name: str) -> np.ndarray:
        key = self._SHORT.get(name, name)
        if key in self.fields:
            return self.fields[key]
        raise KeyError(f"trajectory has no field {name!r}; have {list(self.fields)}")

    def series(self, selector: str) -> np.ndarray:
        """Column by selector: a field name or ``re_/im_/abs_/abs2_`` + field."""
        for prefix, fn in (
            ("re_", np.real),
            ("im_", np.imag),
            ("abs_", np.abs),
            ("abs2_", lambda x: np.abs(x) ** 2),
        ):
            if selector.startswith(prefix):
                return fn(self._resolve(selector[len(prefix):]))
        return self._resolve(selector)

    def column_names(self) -> list:
        names = ["t"]
        for name, values in self.fields.items():
            short = {v: k for k, v in self._SHORT.items()}.get(name, name)
            if np.iscomplexobj(values):
                names += [f"re_{short}", f"im_{short}"]
            else:
                names.append(short)
        return names

    def write_csv(self, fh) -> None:
        for key, value in self.meta.items():
            fh.write(f"# {key} = {value}\n")
        fh.write(",".join(self.column_names()) + "\n")
        columns = []
        for values in self.fields.values():
            if np.iscomplexobj(values):
                columns += [values.real, values.imag]
            else:
                columns.append(values)
        for i, t in enumerate(self.times):
            row = [repr(float(t))] + [repr(float(col[i])) for col in columns]
            fh.write(",".join(row) + "\n")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            self.write_csv(fh)

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        meta: dict = {}
        with open(path, "r", encoding="utf-8") as fh:
            line = fh.readline()
            while line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                line = fh.readline()
            header = line.strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if header[0] != "t":
            raise ValueError(f"unexpected trajectory header {header!r}")
        times = data[:, 0]
        fields: dict = {}
        i = 1
        while i < len(header):
            name = header[i]
            if name.startswith("re_"):
                short = name[3:]
                if i + 1 >= len(header) or header[i + 1] != f"im_{short}":
                    raise ValueError(f"missing imaginary column for {name}")
                full = cls._SHORT.get(short, short)
                fields[full] = data[:, i] + 1j * data[:, i + 1]
                i += 2
            else:
                fields[cls._SHORT.get(name, name)] = data[:, i]
                i += 1
        return cls(times=times, fields=fields, meta=meta)


# --------------------------------------------------------------------------
# steppers
# --------------------------------------------------------------------------

def _ck_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + _C[1] * h, y + h * (_A[1][0] * k1))
    k3 = rhs(t + _C[2] * h, y + h * (_A[2][0] * k1 + _A[2][1] * k2))
    k4 = rhs(t + _C[3] * h, y + h * (_A[3][0] * k1 + _A[3][1] * k2 + _A[3][2] * k3))
    k5 = rhs(
        t + _C[4] * h,
        y + h * (_A[4][0] * k1 + _A[4][1] * k2 + _A[4][2] * k3 + _A[4][3] * k4),
    )
    k6 = rhs(
        t + _C[5] * h,
        y
        + h
        * (_A[5][0] * k1 + _A[5][1] * k2 + _A[5][2] * k3 + _A[5][3] * k4 + _A[5][4] * k5),
    )
    y_new = y + h * (_B5[0] * k1 + _B5[2] * k3 + _B5[3] * k4 + _B5[5] * k6)
    err = h * (_E[0] * k1 + _E[2] * k3 + _E[3] * k4 + _E[4] * k5 + _E[5] * k6)
    return y_new, err


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _advance_adaptive(rhs, t0, t1, y, h_prop, cfg):
    """Adaptive sub-steps from t0 to t1; returns the state at t1 and h_prop."""
    t = t0
    while t < t1:
        remaining = t1 - t
        h = min(h_prop, cfg.max_step)
        clipped = h >= remaining
        if clipped:
            h = remaining
        y_new, err = _ck_step(rhs, t, y, h)
        if np.isfinite(y_new).all() and np.isfinite(err).all():
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = math.sqrt(float(np.mean((err / scale) ** 2)))
            bad_state = False
        else:
            err_norm = math.inf
            bad_state = True
        if err_norm <= 1.0:
            y = y_new
            t = t1 if clipped else t + h
            if not clipped:
                factor = _FAC_MAX if err_norm == 0.0 else min(
                    _FAC_MAX, max(_FAC_MIN, _SAFETY * err_norm ** -0.2)
                )
                h_prop = h * factor
        else:
            factor = _FAC_MIN if not math.isfinite(err_norm) else min(
                _FAC_MAX, max(_FAC_MIN, _SAFETY * err_norm ** -0.2)
            )
            h_prop = h * factor
        if h_prop < 1e-13 * max(1.0, abs(t)):
            reason = "state became non-finite" if bad_state else "local error bound unattainable"
            raise IntegrationError(
                f"step size underflow at t={t:.9g} ({reason})", time=t
            )
    return y, h_prop


def _advance_rk4(rhs, t0, t1, y, cfg):
    span = t1 - t0
    h_cap = min(cfg.max_step, span)
    n = max(1, int(math.ceil(span / h_cap - 1e-12)))
    h = span / n
    t = t0
    for _ in range(n):
        y = _rk4_step(rhs, t, y, h)
        t += h
        if not np.isfinite(y).all():
            raise IntegrationError(f"non-finite state at t={t:.9g}", time=t)
    return y


def solve(rhs, y0, t_end: float, cfg: IntegratorConfig):
    """Integrate ``y' = rhs(t, y)`` from 0 to ``t_end``.

    Returns ``(times, states)`` sampled at 0, stride, 2*stride, ..., t_end.
    The sample grid is built from integer multiples of the stride, so the
    output times are exact and independent of the internal step sequence.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    y = np.asarray(y0, dtype=float).copy()
    if y.ndim != 1:
        raise ValueError("state must be a flat vector")

    stride = cfg.output_stride
    n_full = int(math.floor(t_end / stride + 1e-9))
    boundaries = [k * stride for k in range(1, n_full + 1)]
    if not boundaries or boundaries[-1] < t_end - 1e-9 * max(1.0, t_end):
        boundaries.append(t_end)

    use_fast = (
        isinstance(rhs, CompiledRHS) and _fast is not None and cfg.method == "rkck45"
    )
    rhs_callable = rhs.fallback if isinstance(rhs, CompiledRHS) else rhs

    times = [0.0]
    states = [y.copy()]
    h_prop = min(cfg.max_step, stride, t_end) * 0.25
    t_prev = 0.0
    for t_next in boundaries:
        if cfg.method == "rkck45":
            if use_fast:
                status, t_fail, h_prop = _fast.advance(
                    rhs.model_id,
                    rhs.params,
                    rhs.pair,
                    t_prev,
                    t_next,
                    y,
                    h_prop,
                    cfg.rel_tol,
                    cfg.abs_tol,
                    cfg.max_step,
                )
                if status == 1:
                    raise IntegrationError(
                        f"step size underflow at t={t_fail:.9g} "
                        "(local error bound unattainable)",
                        time=t_fail,
                    )
                if status == 2:
                    raise IntegrationError(
                        f"step size underflow at t={t_fail:.9g} "
                        "(state became non-finite)",
                        time=t_fail,
                    )
            else:
                y, h_prop = _advance_adaptive(rhs_callable, t_prev, t_next, y, h_prop, cfg)
        else:
            y = _advance_rk4(rhs_callable, t_prev, t_next, y, cfg)
        if not np.isfinite(y).all():
            raise IntegrationError(f"non-finite state at t={t_next:.9g}", time=t_next)
        times.append(t_next)
        states.append(y.copy())
        t_prev = t_next
    return np.array(times), np.array(states)
