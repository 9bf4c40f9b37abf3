"""Semiclassical equations of motion for the coupled-resonator realizations.

Three models share one integrator:

``exact``
    Two linearized optomechanical cells with a unidirectional leakage feed:
    four complex mean values (alpha_1, beta_1, alpha_2, beta_2).
``effective``
    The two-mode reduction after eliminating the strongly damped mechanical
    modes: complex (alpha_1, alpha_2) with dressed detunings and a common
    dissipation rate.
``chaos``
    One driven nonlinear optomechanical cell (real q, p plus complex
    alpha_1) coupled to a linearized second cavity (complex alpha_2), with a
    switchable leakage term that makes the coupling asymmetric.

The fiber delay of the leakage channel is kept as a parameter for
configuration fidelity but must be zero: the short-fiber limit is hard-coded
in the equations.  Complex states are flattened to interleaved (re, im)
pairs for the integrator; the flattening is part of each model definition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .integrator import CompiledRHS, IntegratorConfig, Trajectory, solve
from .spectra import (
    BiorthogonalBasis,
    EPDegenerateError,
    SpectrumResult,
    _ordered,
    biorthogonal_basis,
)

__all__ = [
    "EliminationValidityWarning",
    "OptomechParams",
    "EffectiveParams",
    "ChaosParams",
    "ModalSolution",
    "MODEL_TAGS",
    "exact_rhs",
    "effective_rhs",
    "chaos_rhs",
    "derive_effective_params",
    "balanced_gain_coupling",
    "chaos_subsystem_spectrum",
    "integrate",
    "modal_solution",
    "analytic_solution",
]

MODEL_TAGS = ("exact", "effective", "chaos")

_NEAR_EP_BAND = 1e-3  # relative |lam - kappa|/kappa guard for the modal form


class EliminationValidityWarning(UserWarning):
    """The mechanical-elimination preconditions hold only marginally."""


# --------------------------------------------------------------------------
# parameter records
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OptomechParams:
    """Physical parameters of the two-cell optomechanical realization."""

    delta1: float
    delta2: float
    omega_m: float
    g: complex
    kappa: float
    gamma_m: float
    lam: float
    retardation: float = 0.0

    def __post_init__(self):
        if self.kappa < 0 or self.gamma_m < 0 or self.lam < 0:
            raise ValueError("rates kappa, gamma_m and coupling lam must be >= 0")
        if self.retardation != 0.0:
            raise ValueError("short-fiber model: retardation must be 0")


@dataclass(frozen=True)
class EffectiveParams:
    """Reduced two-mode parameters; ``gamma`` may be negative (net gain)."""

    delta_eff1: float
    delta_eff2: float
    gamma: float
    lam: float
    kappa: float


@dataclass(frozen=True)
class ChaosParams:
    """Driven nonlinear cell plus linearized partner cavity."""

    omega_cm: float
    gamma: float
    g0: float
    delta_c: float
    kappa_c: float
    drive: float
    delta_ceff: float
    kappa_ceff: float
    lambda_c: float
    asymmetric: bool

    def __post_init__(self):
        for name in ("gamma", "kappa_c", "kappa_ceff"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be >= 0")


# --------------------------------------------------------------------------
# right-hand sides (complex state form)
# --------------------------------------------------------------------------

def exact_rhs(state, p: OptomechParams) -> np.ndarray:
    """Derivative of (alpha_1, beta_1, alpha_2, beta_2).

    The second cavity receives the first one's leakage, ``+kappa*alpha_1``,
    on top of the coherent coupling; the optomechanical terms couple each
    cavity to the conjugate of its own mechanical amplitude.
    """
    a1, b1, a2, b2 = (complex(z) for z in state)
    gc = complex(p.g).conjugate()
    da1 = (1j * p.delta1 - 0.5 * p.kappa) * a1 - 1j * gc * b1.conjugate() + p.lam * a2
    db1 = (-1j * p.omega_m - 0.5 * p.gamma_m) * b1 - 1j * gc * a1.conjugate()
    da2 = (
        (1j * p.delta2 - 0.5 * p.kappa) * a2
        - 1j * gc * b2.conjugate()
        - p.lam * a1
        + p.kappa * a1
    )
    db2 = (-1j * p.omega_m - 0.5 * p.gamma_m) * b2 - 1j * gc * a2.conjugate()
    return np.array([da1, db1, da2, db2], dtype=complex)


def effective_rhs(state, p: EffectiveParams) -> np.ndarray:
    """Derivative of (alpha_1, alpha_2) in the reduced two-mode model."""
    a1, a2 = (complex(z) for z in state)
    da1 = (1j * p.delta_eff1 - 0.5 * p.gamma) * a1 + p.lam * a2
    da2 = (1j * p.delta_eff2 - 0.5 * p.gamma) * a2 - (p.lam - p.kappa) * a1
    return np.array([da1, da2], dtype=complex)


def chaos_rhs(state, p: ChaosParams):
    """Derivative of (q, p, alpha_1, alpha_2); reals first, then complexes.

    The ``+kappa_c*alpha_1`` leakage feed into alpha_2 is present only when
    the asymmetric flag is on.
    """
    q, mom, a1, a2 = state
    a1 = complex(a1)
    a2 = complex(a2)
    dq = p.omega_cm * mom
    dp = -p.omega_cm * q - p.gamma * mom + p.g0 * abs(a1) ** 2
    da1 = (
        (1j * p.delta_c - 0.5 * p.kappa_c) * a1
        + 1j * p.g0 * a1 * q
        + p.drive
        + p.lambda_c * a2
    )
    feed = p.kappa_c if p.asymmetric else 0.0
    da2 = (1j * p.delta_ceff - 0.5 * p.kappa_ceff) * a2 + (feed - p.lambda_c) * a1
    return (float(dq), float(dp), da1, da2)


# --------------------------------------------------------------------------
# parameter maps
# --------------------------------------------------------------------------

def derive_effective_params(p: OptomechParams, warn: bool = True) -> EffectiveParams:
    """Dressed detunings and common dissipation after mechanical elimination.

    ``delta_eff_j = delta_j - 4*(delta_j - omega_m)*|g|^2 / (4*(delta_j -
    omega_m)^2 + gamma_m^2)`` and ``gamma = kappa - 4*gamma_m*|g|^2 / (...)``
    evaluated with the first detuning (the two coincide in the symmetric
    configuration this reduction targets).

    The reduction assumes ``|omega_m - delta_j| >> |g|`` and
    ``gamma_m >> kappa``; when either margin is below a factor of 3 an
    :class:`EliminationValidityWarning` is emitted (the map is still
    evaluated).
    """
    if p.gamma_m <= 0:
        raise ValueError("mechanical elimination requires gamma_m > 0")
    g2 = abs(complex(p.g)) ** 2
    gmag = math.sqrt(g2)
    if warn:
        margins = []
        for dj in (p.delta1, p.delta2):
            if gmag > 0 and abs(p.omega_m - dj) < 3.0 * gmag:
                margins.append(
                    f"|omega_m - delta|={abs(p.omega_m - dj):.3g} < 3|g|={3 * gmag:.3g}"
                )
        if p.kappa > 0 and p.gamma_m < 3.0 * p.kappa:
            margins.append(f"gamma_m={p.gamma_m:.3g} < 3*kappa={3 * p.kappa:.3g}")
        if margins:
            warnings.warn(
                "mechanical elimination is marginal: " + "; ".join(margins),
                EliminationValidityWarning,
                stacklevel=2,
            )

    def dressed(dj: float) -> float:
        den = 4.0 * (dj - p.omega_m) ** 2 + p.gamma_m ** 2
        return dj - 4.0 * (dj - p.omega_m) * g2 / den

    den1 = 4.0 * (p.delta1 - p.omega_m) ** 2 + p.gamma_m ** 2
    gamma = p.kappa - 4.0 * p.gamma_m * g2 / den1
    return EffectiveParams(
        delta_eff1=dressed(p.delta1),
        delta_eff2=dressed(p.delta2),
        gamma=gamma,
        lam=p.lam,
        kappa=p.kappa,
    )


def balanced_gain_coupling(delta: float, omega_m: float, kappa: float, gamma_m: float) -> float:
    """Coupling magnitude |g| that cancels the effective dissipation.

    With this value the reduced model has ``gamma = 0`` and the dressed
    detuning simplifies to ``delta - kappa*(delta - omega_m)/gamma_m``.
    """
    if gamma_m <= 0:
        raise ValueError("balancing requires gamma_m > 0")
    return math.sqrt(kappa * (4.0 * (delta - omega_m) ** 2 + gamma_m ** 2) / (4.0 * gamma_m))


def chaos_subsystem_spectrum(p: ChaosParams) -> SpectrumResult:
    """Eigenfrequencies of the linear cavity pair at ``g0 = 0``.

    The cavity amplitudes evolve as ``exp(-i E t)``, so the energies are
    ``i`` times the eigenvalues of the linear coefficient matrix.  For
    ``kappa_ceff = kappa_c`` (asymmetric feed on) they reduce to
    ``-delta_ceff - i kappa_c/2 +- sqrt(lambda_c*(lambda_c - kappa_c))``.
    """
    feed = p.kappa_c if p.asymmetric else 0.0
    m = np.array(
        [
            [1j * p.delta_c - 0.5 * p.kappa_c, p.lambda_c],
            [feed - p.lambda_c, 1j * p.delta_ceff - 0.5 * p.kappa_ceff],
        ],
        dtype=complex,
    )
    energies = 1j * np.linalg.eigvals(m)
    energies, _ = _ordered(energies)
    return SpectrumResult(energies=energies, params_echo=p)


# --------------------------------------------------------------------------
# model registry: flattening + field layout
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _ModelDef:
    tag: str
    params_type: type
    state_fields: tuple  # state order used by init vectors
    complex_fields: tuple  # which of those are complex
    csv_fields: tuple  # trajectory column order
    dim: int


_MODELS = {
    "exact": _ModelDef(
        tag="exact",
        params_type=OptomechParams,
        state_fields=("alpha1", "beta1", "alpha2", "beta2"),
        complex_fields=("alpha1", "beta1", "alpha2", "beta2"),
        csv_fields=("alpha1", "alpha2", "beta1", "beta2"),
        dim=8,
    ),
    "effective": _ModelDef(
        tag="effective",
        params_type=EffectiveParams,
        state_fields=("alpha1", "alpha2"),
        complex_fields=("alpha1", "alpha2"),
        csv_fields=("alpha1", "alpha2"),
        dim=4,
    ),
    "chaos": _ModelDef(
        tag="chaos",
        params_type=ChaosParams,
        state_fields=("q", "p", "alpha1", "alpha2"),
        complex_fields=("alpha1", "alpha2"),
        csv_fields=("alpha1", "alpha2", "q", "p"),
        dim=6,
    ),
}


def model_definition(model: str) -> _ModelDef:
    try:
        return _MODELS[model]
    except KeyError:
        raise ValueError(f"unknown model tag {model!r}; expected one of {MODEL_TAGS}") from None


def flat_rhs(model: str, params):
    """Flattened real-vector right-hand side for the integrator.

    Coefficients are captured once; the returned callable maps a flat state
    of interleaved (re, im) pairs (reals first for the chaos model) to its
    derivative.
    """
    mdef = model_definition(model)
    if not isinstance(params, mdef.params_type):
        raise TypeError(f"model {model!r} expects {mdef.params_type.__name__}")

    if model == "exact":
        c_a1 = 1j * params.delta1 - 0.5 * params.kappa
        c_a2 = 1j * params.delta2 - 0.5 * params.kappa
        c_b = -1j * params.omega_m - 0.5 * params.gamma_m
        mig = -1j * complex(params.g).conjugate()
        lam, kap = params.lam, params.kappa

        def rhs(t, y):
            a1 = complex(y[0], y[1])
            b1 = complex(y[2], y[3])
            a2 = complex(y[4], y[5])
            b2 = complex(y[6], y[7])
            da1 = c_a1 * a1 + mig * b1.conjugate() + lam * a2
            db1 = c_b * b1 + mig * a1.conjugate()
            da2 = c_a2 * a2 + mig * b2.conjugate() + (kap - lam) * a1
            db2 = c_b * b2 + mig * a2.conjugate()
            return np.array(
                [da1.real, da1.imag, db1.real, db1.imag,
                 da2.real, da2.imag, db2.real, db2.imag]
            )

        return rhs

    if model == "effective":
        c1 = 1j * params.delta_eff1 - 0.5 * params.gamma
        c2 = 1j * params.delta_eff2 - 0.5 * params.gamma
        lam = params.lam
        back = params.kappa - params.lam

        def rhs(t, y):
            a1 = complex(y[0], y[1])
            a2 = complex(y[2], y[3])
            da1 = c1 * a1 + lam * a2
            da2 = c2 * a2 + back * a1
            return np.array([da1.real, da1.imag, da2.real, da2.imag])

        return rhs

    # chaos
    c1 = 1j * params.delta_c - 0.5 * params.kappa_c
    c2 = 1j * params.delta_ceff - 0.5 * params.kappa_ceff
    feed = (params.kappa_c if params.asymmetric else 0.0) - params.lambda_c
    wcm, gam, g0, drive, lc = (
        params.omega_cm,
        params.gamma,
        params.g0,
        params.drive,
        params.lambda_c,
    )

    def rhs(t, y):
        q, mom = y[0], y[1]
        a1 = complex(y[2], y[3])
        a2 = complex(y[4], y[5])
        da1 = c1 * a1 + 1j * g0 * q * a1 + drive + lc * a2
        da2 = c2 * a2 + feed * a1
        return np.array(
            [
                wcm * mom,
                -wcm * q - gam * mom + g0 * (y[2] * y[2] + y[3] * y[3]),
                da1.real,
                da1.imag,
                da2.real,
                da2.imag,
            ]
        )

    return rhs


_MODEL_IDS = {"effective": 0, "exact": 1, "chaos": 2}


def compiled_rhs(model: str, params, pair: bool = False) -> CompiledRHS:
    """Handle for the integrator's compiled fast path.

    Packs the model coefficients into a flat float vector understood by the
    kernel and bundles the equivalent pure-Python right-hand side as the
    fallback.  ``pair=True`` doubles the state, applying the model to both
    halves (companion-trajectory integration on a shared step sequence).
    """
    mdef = model_definition(model)
    single = flat_rhs(model, params)
    if pair:
        dim = mdef.dim

        def fallback(t, y):
            return np.concatenate((single(t, y[:dim]), single(t, y[dim:])))

    else:
        fallback = single

    if model == "effective":
        packed = np.array(
            [
                params.delta_eff1,
                params.delta_eff2,
                0.5 * params.gamma,
                params.lam,
                params.kappa - params.lam,
            ]
        )
    elif model == "exact":
        g = complex(params.g)
        packed = np.array(
            [
                params.delta1,
                params.delta2,
                params.omega_m,
                0.5 * params.kappa,
                0.5 * params.gamma_m,
                -g.imag,
                -g.real,
                params.lam,
                params.kappa,
            ]
        )
    else:
        feed = (params.kappa_c if params.asymmetric else 0.0) - params.lambda_c
        packed = np.array(
            [
                params.omega_cm,
                params.gamma,
                params.g0,
                params.delta_c,
                0.5 * params.kappa_c,
                params.drive,
                params.delta_ceff,
                0.5 * params.kappa_ceff,
                params.lambda_c,
                feed,
            ]
        )
    return CompiledRHS(
        model_id=_MODEL_IDS[model], params=packed, pair=pair, fallback=fallback
    )


def pack_state(model: str, init) -> np.ndarray:
    """Flatten an initial state given as a mapping or a state-order sequence."""
    mdef = model_definition(model)
    if isinstance(init, dict):
        unknown = set(init) - set(mdef.state_fields)
        if unknown:
            raise ValueError(f"unknown state fields for {model!r}: {sorted(unknown)}")
        missing = set(mdef.state_fields) - set(init)
        if missing:
            raise ValueError(f"missing state fields for {model!r}: {sorted(missing)}")
        values = [init[name] for name in mdef.state_fields]
    else:
        values = list(init)
        if len(values) != len(mdef.state_fields):
            raise ValueError(
                f"model {model!r} expects {len(mdef.state_fields)} state components"
            )
    flat = []
    for name, value in zip(mdef.state_fields, values):
        if name in mdef.complex_fields:
            z = complex(value)
            flat += [z.real, z.imag]
        else:
            flat.append(float(value))
    return np.array(flat)


def unpack_states(model: str, states: np.ndarray) -> dict:
    """Columns of a flat state history as named (complex/real) fields."""
    mdef = model_definition(model)
    fields: dict = {}
    i = 0
    for name in mdef.state_fields:
        if name in mdef.complex_fields:
            fields[name] = states[:, i] + 1j * states[:, i + 1]
            i += 2
        else:
            fields[name] = states[:, i].copy()
            i += 1
    return {name: fields[name] for name in mdef.csv_fields}


def _params_meta(params) -> dict:
    out = {}
    for name, value in vars(params).items():
        out[f"params.{name}"] = value
    return out


def integrate(model: str, params, init, t_end: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate one model and sample it on the output stride grid.

    ``init`` is a mapping of state-field names (``alpha1``, ``beta1``, ``q``,
    ...) or a sequence in state order.  The trajectory echoes the model tag,
    parameters and integrator settings in its metadata; identical inputs
    give bit-identical trajectories on one platform.
    """
    cfg = cfg or IntegratorConfig()
    mdef = model_definition(model)
    if not isinstance(params, mdef.params_type):
        raise TypeError(f"model {model!r} expects {mdef.params_type.__name__}")
    y0 = pack_state(model, init)
    rhs = compiled_rhs(model, params)
    times, states = solve(rhs, y0, t_end, cfg)
    fields = unpack_states(model, states)
    init_echo = {
        f"init.{name}": value
        for name, value in zip(mdef.state_fields, _init_values(model, y0))
    }
    meta = {"model": model, "t_end": t_end}
    meta.update(_params_meta(params))
    meta.update(init_echo)
    meta.update({f"integrator.{k}": v for k, v in cfg.to_meta().items()})
    return Trajectory(times=times, fields=fields, meta=meta)


def _init_values(model: str, y0: np.ndarray):
    mdef = model_definition(model)
    values = []
    i = 0
    for name in mdef.state_fields:
        if name in mdef.complex_fields:
            values.append(complex(y0[i], y0[i + 1]))
            i += 2
        else:
            values.append(float(y0[i]))
            i += 1
    return values


# --------------------------------------------------------------------------
# closed-form modal propagation of the balanced effective model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ModalSolution:
    """Closed-form propagator for the balanced (gamma = 0) two-mode model.

    Valid for equal dressed detunings; evaluation at t = 0 reproduces the
    initial amplitudes exactly.
    """

    c1: complex
    c2: complex
    basis: BiorthogonalBasis

    def evaluate(self, times) -> tuple:
        t = np.asarray(times, dtype=float)
        e_plus, e_minus = self.basis.energies
        zp = np.exp(-1j * e_plus * t)
        zm = np.exp(-1j * e_minus * t)
        half_sum = 0.5 * (zp + zm)
        half_diff = 0.5 * (zp - zm)
        zeta = self.basis.zeta
        a1 = half_sum * self.c1 + 1j * zeta * half_diff * self.c2
        a2 = -1j * half_diff / zeta * self.c1 + half_sum * self.c2
        return a1, a2


def modal_solution(c1: complex, c2: complex, lam: float, kappa: float, delta: float) -> ModalSolution:
    """Build the modal propagator; rejects a guard band around the EP.

    The modal weight ``zeta`` diverges like ``(lam - kappa)**-0.5``, so
    parameter sets with ``|lam - kappa| < 1e-3 * kappa`` (and the exactly
    degenerate radical) are refused; numerical integration remains the valid
    route there.
    """
    if kappa != 0.0 and abs(lam - kappa) < _NEAR_EP_BAND * abs(kappa):
        raise EPDegenerateError(
            f"modal form ill-conditioned within |lam-kappa| < {_NEAR_EP_BAND:g}*kappa "
            f"(lam={lam!r}, kappa={kappa!r})"
        )
    basis = biorthogonal_basis(lam, kappa, delta)
    return ModalSolution(c1=complex(c1), c2=complex(c2), basis=basis)


def analytic_solution(c1: complex, c2: complex, lam: float, kappa: float, delta: float, times) -> Trajectory:
    """Sample the closed-form two-mode solution on the given time grid."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a strictly increasing 1-d grid")
    sol = modal_solution(c1, c2, lam, kappa, delta)
    a1, a2 = sol.evaluate(times)
    meta = {
        "model": "analytic",
        "params.lam": lam,
        "params.kappa": kappa,
        "params.delta": delta,
        "init.alpha1": complex(c1),
        "init.alpha2": complex(c2),
    }
    return Trajectory(times=times, fields={"alpha1": a1, "alpha2": a2}, meta=meta)
