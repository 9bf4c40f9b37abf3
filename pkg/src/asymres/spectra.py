"""Spectra of asymmetrically coupled resonator models.

Builds the effective coupling matrices for the two-mode asymmetric
interaction, the balanced gain-loss pair and the N-site asymmetric chain,
computes their complex eigenvalue spectra, locates exceptional points along
one-parameter sweeps, and constructs the biorthogonal eigenbasis of the
reduced two-mode system.

Frequencies are in units of the reference resonance (omega = 1 convention);
couplings and rates share the same scale.  Complex square roots use the
principal branch throughout, so the first energy returned is always the
upper/amplified supermode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "EPDegenerateError",
    "TwoModeParams",
    "GainLossParams",
    "ChainParams",
    "SpectrumResult",
    "BiorthogonalBasis",
    "ParamSweep",
    "EPLocation",
    "two_mode_hamiltonian",
    "two_mode_spectrum",
    "gain_loss_hamiltonian",
    "gain_loss_spectrum",
    "build_chain_hamiltonian",
    "chain_spectrum",
    "sweep_spectra",
    "find_exceptional_points",
    "biorthogonal_basis",
    "write_spectrum_csv",
]


class EPDegenerateError(ValueError):
    """Parameter set sits on an exceptional point: the eigenbasis is defective."""


# --------------------------------------------------------------------------
# parameter records
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TwoModeParams:
    """Two modes at frequency ``omega`` with asymmetric coupling.

    The coupling matrix element is ``i*lam`` one way and ``-i*(lam - epsilon)``
    the other; ``epsilon = 0`` recovers the Hermitian beam-splitter pair.
    """

    omega: float
    lam: float
    epsilon: float

    def __post_init__(self):
        for name in ("omega", "lam", "epsilon"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.lam < 0:
            raise ValueError("coupling lam must be >= 0")


@dataclass(frozen=True)
class GainLossParams:
    """Balanced gain-loss pair: +i*kappa/2 on one mode, -i*kappa/2 on the other."""

    omega: float
    mu: float
    kappa: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("gain/loss rate kappa must be >= 0")


@dataclass(frozen=True)
class ChainParams:
    """N-site chain with forward coupling ``i*lam`` and backward ``-i*(lam - eps_j)``."""

    omega: float
    lam: float
    epsilons: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if self.n < 2:
            raise ValueError("chain needs at least 2 sites")
        if len(self.epsilons) != self.n - 1:
            raise ValueError(
                f"need {self.n - 1} asymmetries for {self.n} sites, got {len(self.epsilons)}"
            )


@dataclass(frozen=True)
class SpectrumResult:
    """Complex eigenvalues sorted by descending Im, ties by descending Re."""

    energies: np.ndarray
    eigenvectors: np.ndarray | None = None
    params_echo: object = None


@dataclass(frozen=True)
class ParamSweep:
    """Inclusive linear sweep of one scalar parameter."""

    param: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sweep count must be >= 1")
        if self.count > 1 and not self.stop > self.start:
            raise ValueError("sweep range must have positive width")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class EPLocation:
    """Refined exceptional-point location along a sweep."""

    param: str
    value: float
    gap: float


def _ordered(energies: np.ndarray, vectors: np.ndarray | None = None):
    order = np.lexsort((-energies.real, -energies.imag))
    if vectors is None:
        return energies[order], None
    return energies[order], vectors[:, order]


# --------------------------------------------------------------------------
# closed-form two-mode families
# --------------------------------------------------------------------------

def two_mode_hamiltonian(p: TwoModeParams) -> np.ndarray:
    """2x2 effective matrix [[omega, i*lam], [-i*(lam-epsilon), omega]]."""
    return np.array(
        [[p.omega, 1j * p.lam], [-1j * (p.lam - p.epsilon), p.omega]], dtype=complex
    )


def two_mode_spectrum(p: TwoModeParams) -> SpectrumResult:
    """Eigenvalues ``omega +- sqrt(lam^2 - epsilon*lam)`` of the asymmetric pair.

    The principal branch puts the amplified supermode first: for
    ``lam >= epsilon`` both energies are real and split symmetrically about
    ``omega``; for ``lam < epsilon`` the real parts are degenerate and the
    imaginary parts are ``+-sqrt(epsilon*lam - lam^2)``.
    """
    r = np.sqrt(complex(p.lam * p.lam - p.epsilon * p.lam))
    energies, _ = _ordered(np.array([p.omega + r, p.omega - r]))
    return SpectrumResult(energies=energies, params_echo=p)


def gain_loss_hamiltonian(p: GainLossParams) -> np.ndarray:
    """2x2 matrix [[omega + i*kappa/2, mu], [mu, omega - i*kappa/2]]."""
    return np.array(
        [[p.omega + 0.5j * p.kappa, p.mu], [p.mu, p.omega - 0.5j * p.kappa]],
        dtype=complex,
    )


def gain_loss_spectrum(p: GainLossParams) -> SpectrumResult:
    """Eigenvalues ``omega +- sqrt(mu^2 - kappa^2/4)``, principal branch."""
    r = np.sqrt(complex(p.mu * p.mu - 0.25 * p.kappa * p.kappa))
    energies, _ = _ordered(np.array([p.omega + r, p.omega - r]))
    return SpectrumResult(energies=energies, params_echo=p)


# --------------------------------------------------------------------------
# N-site chain
# --------------------------------------------------------------------------

def build_chain_hamiltonian(p: ChainParams) -> np.ndarray:
    """Tridiagonal chain matrix.

    ``omega`` on the diagonal, ``i*lam`` on the superdiagonal and
    ``-i*(lam - eps_j)`` on the subdiagonal of row j+1.
    """
    h = np.zeros((p.n, p.n), dtype=complex)
    np.fill_diagonal(h, p.omega)
    for j in range(p.n - 1):
        h[j, j + 1] = 1j * p.lam
        h[j + 1, j] = -1j * (p.lam - p.epsilons[j])
    return h


def chain_spectrum(p: ChainParams, compute_vectors: bool = False) -> SpectrumResult:
    """All N eigenvalues of the chain matrix.

    The shifted multiset ``{E_k - omega}`` is closed under negation (with a
    zero element allowed for odd N): conjugating by the alternating-sign
    diagonal maps the off-diagonal part to its negative.
    """
    h = build_chain_hamiltonian(p)
    try:
        if compute_vectors:
            energies, vectors = np.linalg.eig(h)
        else:
            energies, vectors = np.linalg.eigvals(h), None
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"chain eigensolver did not converge for {p}") from exc
    energies, vectors = _ordered(energies, vectors)
    return SpectrumResult(energies=energies, eigenvectors=vectors, params_echo=p)


# --------------------------------------------------------------------------
# family dispatch and sweeps
# --------------------------------------------------------------------------

_FIELD_ALIASES = {"lambda": "lam"}


def _normalize_fields(fixed: dict) -> dict:
    return {_FIELD_ALIASES.get(k, k): v for k, v in fixed.items()}


def _family_energies_fn(family: str) -> Callable[[dict], np.ndarray]:
    fam = family.replace("-", "_")
    if fam == "two_mode":
        return lambda kw: two_mode_spectrum(TwoModeParams(**kw)).energies
    if fam == "gain_loss":
        return lambda kw: gain_loss_spectrum(GainLossParams(**kw)).energies
    if fam == "chain":
        return lambda kw: chain_spectrum(ChainParams(**kw)).energies
    if fam == "chaos_subsystem":
        from .dynamics import ChaosParams, chaos_subsystem_spectrum

        return lambda kw: chaos_subsystem_spectrum(ChaosParams(**kw)).energies
    raise ValueError(f"unknown hamiltonian family {family!r}")


def _family_result_fn(family: str):
    fam = family.replace("-", "_")
    if fam == "two_mode":
        return lambda kw: two_mode_spectrum(TwoModeParams(**kw))
    if fam == "gain_loss":
        return lambda kw: gain_loss_spectrum(GainLossParams(**kw))
    if fam == "chain":
        return lambda kw: chain_spectrum(ChainParams(**kw))
    if fam == "chaos_subsystem":
        from .dynamics import ChaosParams, chaos_subsystem_spectrum

        return lambda kw: chaos_subsystem_spectrum(ChaosParams(**kw))
    raise ValueError(f"unknown hamiltonian family {family!r}")


def sweep_spectra(family: str, sweep: ParamSweep, fixed: dict):
    """Spectra along a linear sweep.

    Returns ``(values, results)`` where ``values`` is the swept grid and
    ``results`` the per-point :class:`SpectrumResult`, in sweep order.
    """
    make = _family_result_fn(family)
    base = _normalize_fields(fixed)
    key = _FIELD_ALIASES.get(sweep.param, sweep.param)
    values = sweep.values()
    results = []
    for v in values:
        kw = dict(base)
        kw[key] = float(v)
        results.append(make(kw))
    return values, results


def write_spectrum_csv(fh, param_name: str, values, results) -> None:
    """Serialize sweep spectra as ``sweep_param, k, re_E, im_E`` rows."""
    fh.write("sweep_param,k,re_E,im_E\n")
    for v, res in zip(values, results):
        for k, e in enumerate(res.energies):
            fh.write(f"{float(v)!r},{k},{e.real!r},{e.imag!r}\n")


# --------------------------------------------------------------------------
# exceptional point search
# --------------------------------------------------------------------------

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _min_pairwise_gap(energies: np.ndarray) -> float:
    diff = energies[:, None] - energies[None, :]
    mags = np.abs(diff[np.triu_indices(len(energies), k=1)])
    return float(mags.min())


def _refine_minimum(gap_fn, a: float, b: float, rel_width: float):
    """Golden-section descent on the gap plus a cusp-model extrapolation.

    Near an EP the gap behaves like ``sqrt(A*|x - x*|)``, so after the
    bracket has shrunk the minimum location is solved from a linear model of
    the squared gap on both flanks; the gap is then re-evaluated there.
    """
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = gap_fn(x1), gap_fn(x2)
    best_x, best_f = (x1, f1) if f1 <= f2 else (x2, f2)
    scale = max(abs(a), abs(b), 1e-12)
    width_floor = max(rel_width * scale, 8.0 * np.finfo(float).eps * scale)
    for _ in range(300):
        if (b - a) <= width_floor:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = gap_fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = gap_fn(x2)
        if f1 < best_f:
            best_x, best_f = x1, f1
        if f2 < best_f:
            best_x, best_f = x2, f2
    ga, gb = gap_fn(a), gap_fn(b)
    den = ga * ga + gb * gb
    if den > 0.0:
        x_hat = (ga * ga * b + gb * gb * a) / den
        if a <= x_hat <= b:
            g_hat = gap_fn(x_hat)
            if g_hat < best_f:
                best_x, best_f = x_hat, g_hat
    return best_x, best_f


def find_exceptional_points(
    family: str,
    sweep: ParamSweep,
    fixed: dict,
    *,
    gap_tol: float = 1e-8,
    refine_rel_width: float = 1e-10,
    analytic: bool = False,
) -> list[EPLocation]:
    """Locate EPs as refined local minima of the minimum eigenvalue gap.

    Interior grid minima of the pairwise-gap function are refined by
    golden-section bisection down to ``refine_rel_width`` relative width and
    accepted when the gap falls below ``gap_tol``.  Boundary minima are not
    candidates (a vanishing coupling makes the chain trivially defective at
    the sweep edge).  With ``analytic=True`` the two-mode family returns the
    closed-form location ``lam = epsilon`` directly.

    An empty list means no EP in range; near-misses above tolerance emit a
    warning stating the achieved gap.
    """
    fam = family.replace("-", "_")
    base = _normalize_fields(fixed)
    key = _FIELD_ALIASES.get(sweep.param, sweep.param)

    if analytic:
        if fam != "two_mode":
            raise ValueError("analytic EP location is only defined for two_mode")
        if key == "lam":
            loc = float(base["epsilon"])
        elif key == "epsilon":
            loc = float(base["lam"])
        else:
            raise ValueError(f"cannot sweep {sweep.param!r} analytically")
        if sweep.start < loc < sweep.stop:
            return [EPLocation(param=sweep.param, value=loc, gap=0.0)]
        return []

    energies_fn = _family_energies_fn(fam)

    def gap_at(v: float) -> float:
        kw = dict(base)
        kw[key] = float(v)
        return _min_pairwise_gap(energies_fn(kw))

    grid = sweep.values()
    if len(grid) < 3:
        raise ValueError("EP search needs a sweep grid of at least 3 points")
    gaps = np.array([gap_at(v) for v in grid])

    found: list[EPLocation] = []
    for i in range(1, len(grid) - 1):
        left_ok = gaps[i] <= gaps[i - 1]
        right_ok = gaps[i] <= gaps[i + 1]
        strict = gaps[i] < gaps[i - 1] or gaps[i] < gaps[i + 1]
        if not (left_ok and right_ok and strict):
            continue
        x, g = _refine_minimum(gap_at, float(grid[i - 1]), float(grid[i + 1]), refine_rel_width)
        if g < gap_tol:
            found.append(EPLocation(param=sweep.param, value=x, gap=g))
        elif g < 1e3 * gap_tol:
            warnings.warn(
                f"near-degenerate minimum at {sweep.param}={x:.12g}: "
                f"gap {g:.3e} above tolerance {gap_tol:.1e}",
                stacklevel=2,
            )

    found.sort(key=lambda ep: ep.value)
    step = (sweep.stop - sweep.start) / max(sweep.count - 1, 1)
    merged: list[EPLocation] = []
    for ep in found:
        if merged and abs(ep.value - merged[-1].value) <= 2.0 * step:
            if ep.gap < merged[-1].gap:
                merged[-1] = ep
        else:
            merged.append(ep)
    return merged


# --------------------------------------------------------------------------
# biorthogonal eigenbasis of the reduced two-mode system
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BiorthogonalBasis:
    """Right/left eigenvector pairs of the reduced two-mode coupling matrix.

    ``phi`` holds the right column vectors, ``psi`` the left row vectors;
    plain (unconjugated) products satisfy ``psi_i . phi_j = 2*delta_ij`` and
    ``sum_i |phi_i><psi_i| / (psi_i . phi_i)`` resolves the identity.
    """

    phi: tuple
    psi: tuple
    energies: tuple
    zeta: complex

    def overlap(self) -> np.ndarray:
        """Matrix of plain products ``psi_i . phi_j`` (no conjugation)."""
        return np.array(
            [[np.dot(self.psi[i], self.phi[j]) for j in range(2)] for i in range(2)]
        )

    def completeness_defect(self) -> float:
        """Max-abs deviation of the resolved identity from the 2x2 identity."""
        total = np.zeros((2, 2), dtype=complex)
        for i in range(2):
            total += np.outer(self.phi[i], self.psi[i]) / np.dot(self.psi[i], self.phi[i])
        return float(np.abs(total - np.eye(2)).max())


def biorthogonal_basis(lam: float, kappa: float, delta: float) -> BiorthogonalBasis:
    """Biorthogonal eigenbasis for coupling ``lam`` and leakage feed ``kappa``.

    Energies are ``-delta +- sqrt(lam*(lam - kappa))`` with the principal
    branch; ``zeta = sqrt(lam)/sqrt(lam - kappa)`` weights the modal
    amplitudes.  Raises :class:`EPDegenerateError` when the radical vanishes
    (``lam = kappa`` or ``lam = 0``): there the eigenvectors coalesce and no
    biorthogonal pair exists.
    """
    rad = lam * (lam - kappa)
    if rad == 0.0:
        raise EPDegenerateError(
            f"defective eigenbasis at lam={lam!r}, kappa={kappa!r}: "
            "eigenvectors coalesce at the exceptional point"
        )
    r = np.sqrt(complex(rad))
    dlk = complex(lam - kappa)
    phi1 = np.array([1j * r / dlk, 1.0], dtype=complex)
    phi2 = np.array([-1j * r / dlk, 1.0], dtype=complex)
    psi1 = np.array([-1j * r / lam, 1.0], dtype=complex)
    psi2 = np.array([1j * r / lam, 1.0], dtype=complex)
    zeta = complex(np.sqrt(complex(lam)) / np.sqrt(dlk))
    e_plus = -delta + r
    e_minus = -delta - r
    return BiorthogonalBasis(
        phi=(phi1, phi2),
        psi=(psi1, psi2),
        energies=(complex(e_plus), complex(e_minus)),
        zeta=zeta,
    )
