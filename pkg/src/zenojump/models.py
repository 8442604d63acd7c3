"""Concrete measurement scenarios.

Three families are provided:

* time-independent measurements (static Zeno levels),
* pulsed measurements that switch a watched projector on after a free
  segment,
* an anisotropic Heisenberg spin chain whose measurement is a magnetic field
  rotating from ``z`` to ``x`` over a dimensionless schedule ``s in [0, 1]``.

For the chain the natural evolution variable is ``s = t / T``; builders
return models over ``[0, 1]`` with the perturbation scaled by ``T`` and the
measurement coupling equal to ``h * T``, which reproduces the physical
phases of the laboratory-time formulation.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.integrate import quad

from .decomposition import AdiabaticFrame, TimeDependentOperator, decompose, track_frame
from .errors import QuadratureError, ValidationError
from .jump import MeasurementModel
from .operators import SIGMA_X, SIGMA_Y, SIGMA_Z, as_square_matrix, check_projector, tensor_product
from .policy import NumericPolicy, default_policy
from .propagators import exact_propagator

__all__ = [
    "SpinChainSpec",
    "build_chain_h0",
    "build_chain_interaction",
    "spin_chain_model",
    "spin_chain_frame",
    "field_strength",
    "cumulative_field_strength",
    "site_frame_columns",
    "TwoQubitJump",
    "two_qubit_rotation_jump",
    "free_flip_probability",
    "chain_validity_flags",
    "time_independent_model",
    "time_independent_frame",
    "pulsed_measurement_model",
    "pulsed_frame",
]


def _site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Embed a single-site operator at position ``site`` (0-based)."""
    out = np.eye(1, dtype=complex)
    for j in range(n_sites):
        out = tensor_product(out, op if j == site else np.eye(2))
    return out


@dataclasses.dataclass(frozen=True)
class SpinChainSpec:
    """Anisotropic Heisenberg chain in a rotating magnetic field.

    ``couplings`` are the (xx, yy, zz) bond strengths of the perturbation,
    ``h`` the field amplitude and ``T`` the rotation duration.  Open boundary
    keeps bonds ``(j, j+1)`` only; periodic adds the wrap-around bond.
    """

    n_sites: int = 2
    couplings: tuple[float, float, float] = (1.0, 2.0, 1.0)
    h: float = 9.0
    T: float = 1.0
    boundary: str = "open"

    def __post_init__(self):
        if not (2 <= self.n_sites <= 12):
            raise ValidationError(f"n_sites must be within 2..12, got {self.n_sites}")
        if len(self.couplings) != 3:
            raise ValidationError("couplings must be a triple (xx, yy, zz)")
        if not (self.h > 0):
            raise ValidationError("field amplitude h must be positive")
        if not (self.T > 0):
            raise ValidationError("rotation duration T must be positive")
        if self.boundary not in ("open", "periodic"):
            raise ValidationError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")


def build_chain_h0(spec: SpinChainSpec) -> np.ndarray:
    """Exchange Hamiltonian ``sum_j (l1 XX + l2 YY + l3 ZZ)`` on the chain."""
    n = spec.n_sites
    l1, l2, l3 = spec.couplings
    dim = 2**n
    h0 = np.zeros((dim, dim), dtype=complex)
    bonds = [(j, j + 1) for j in range(n - 1)]
    if spec.boundary == "periodic":
        bonds.append((n - 1, 0))
    for a, b in bonds:
        for lam, sig in ((l1, SIGMA_X), (l2, SIGMA_Y), (l3, SIGMA_Z)):
            if lam != 0.0:
                h0 += lam * (_site_operator(sig, a, n) @ _site_operator(sig, b, n))
    return h0


def _chain_field_parts(n_sites: int) -> tuple[np.ndarray, np.ndarray]:
    z = sum(_site_operator(SIGMA_Z, j, n_sites) for j in range(n_sites))
    x = sum(_site_operator(SIGMA_X, j, n_sites) for j in range(n_sites))
    return z, x


def build_chain_interaction(spec: SpinChainSpec) -> TimeDependentOperator:
    """Rotating-field measurement ``-h * sum_j ((1-s) Z_j + s X_j)`` over ``s``."""
    z, x = _chain_field_parts(spec.n_sites)
    h = spec.h

    def evaluate(s: float) -> np.ndarray:
        return -h * ((1.0 - s) * z + s * x)

    return TimeDependentOperator(evaluator=evaluate, horizon=(0.0, 1.0), dim=2**spec.n_sites)


def spin_chain_model(spec: SpinChainSpec) -> MeasurementModel:
    """Chain model over the schedule variable ``s``.

    The Schroedinger equation in ``s`` carries a Jacobian ``T``:
    ``H(s) = T * H0 + (h T) * h_meas(s)`` with the unit-amplitude field
    direction as ``h_meas``, so the measurement coupling is ``h * T``.
    """
    z, x = _chain_field_parts(spec.n_sites)
    h0 = spec.T * build_chain_h0(spec)

    def field_direction(s: float) -> np.ndarray:
        return -((1.0 - s) * z + s * x)

    h_meas = TimeDependentOperator(
        evaluator=field_direction, horizon=(0.0, 1.0), dim=2**spec.n_sites
    )
    return MeasurementModel(
        h0=TimeDependentOperator.constant(h0, (0.0, 1.0)),
        h_meas=h_meas,
        coupling=spec.h * spec.T,
    )


def spin_chain_frame(
    spec: SpinChainSpec,
    n_intervals: int = 1024,
    policy: NumericPolicy | None = None,
    frame_tol: float | None = None,
) -> AdiabaticFrame:
    """Intertwining frame of the rotating field on a uniform schedule grid."""
    model = spin_chain_model(spec)
    grid = np.linspace(0.0, 1.0, n_intervals + 1)
    return track_frame(model.h_meas, model.coupling, grid, policy, frame_tol=frame_tol)


def field_strength(s):
    """Magnitude ``sqrt(s^2 + (1-s)^2)`` of the unit-amplitude rotating field."""
    s = np.asarray(s, dtype=float)
    out = np.sqrt(2.0 * s * s - 2.0 * s + 1.0)
    return float(out) if out.ndim == 0 else out


def cumulative_field_strength(s: float) -> float:
    """Adaptive quadrature of :func:`field_strength` from 0 to ``s``."""
    s = float(s)
    if not (0.0 <= s <= 1.0):
        raise ValidationError(f"schedule value {s!r} outside [0, 1]")
    if s == 0.0:
        return 0.0
    val, _ = quad(field_strength, 0.0, s, epsabs=1e-13, epsrel=1e-13)
    return float(val)


def site_frame_columns(s: float) -> np.ndarray:
    """Closed-form single-site frame for the rotating field.

    Columns diagonalize the unit-amplitude single-site field:
    ``A K(s) sigma_z A^dagger = (1-s) sigma_z + s sigma_x``.
    Valid for ``s`` in ``(0, 1]``; at ``s = 0`` the expression degenerates
    (its limit is ``diag(1, -1)``).
    """
    if not (0.0 < s <= 1.0):
        raise ValidationError("closed-form frame columns need s in (0, 1]")
    k = field_strength(s)
    c = 1.0 - s
    d_minus = math.sqrt(2.0 * k * k - 2.0 * k * c)
    d_plus = math.sqrt(2.0 * k * k + 2.0 * k * c)
    return np.array(
        [
            [s / d_minus, s / d_plus],
            [(k - c) / d_minus, (-k - c) / d_plus],
        ],
        dtype=complex,
    )


def _cumulative_gauss(fn, nodes: np.ndarray) -> np.ndarray:
    """Cumulative integral of ``fn`` on ``nodes`` by per-interval 5-point Gauss."""
    xi, wi = np.polynomial.legendre.leggauss(5)
    a = nodes[:-1]
    b = nodes[1:]
    half = (b - a) / 2.0
    mid = (a + b) / 2.0
    samples = fn(mid[:, None] + half[:, None] * xi[None, :])
    increments = half * (samples @ wi)
    out = np.empty(len(nodes))
    out[0] = 0.0
    np.cumsum(increments, out=out[1:])
    return out


@dataclasses.dataclass(frozen=True)
class TwoQubitJump:
    """End-of-rotation jump probabilities for the two-site chain.

    ``to_opposite`` is the probability of arriving in the fully flipped
    product level; ``to_up_down`` and ``to_down_up`` are the single-flip
    channels, which vanish identically because the exchange perturbation has
    no matrix element between the aligned state and a single-flip state in
    the co-rotating basis (selection rule), at any schedule point.
    """

    to_opposite: float
    to_up_down: float
    to_down_up: float
    est_error: float
    intervals: int


def two_qubit_rotation_jump(
    h: float,
    T: float,
    rel_tol: float = 1e-8,
    min_intervals: int = 64,
    max_intervals: int = 2**20,
) -> TwoQubitJump:
    """Closed-channel jump probabilities of the two-site chain rotation.

    The only open channel reduces to two oscillatory schedule integrals,

        W = (int_0^1 cos Theta(s) ds)^2 + (int_0^1 sin Theta(s) ds)^2,
        Theta(s) = 4 h T * cumulative_field_strength(s),

    evaluated with composite Simpson under interval doubling until the value
    moves by less than ``rel_tol`` relatively.  Requires ``h, T >= 0``; at
    ``h T = 0`` the phase vanishes and the jump saturates at 1.
    """
    if h < 0 or T < 0:
        raise ValidationError("field amplitude and duration must be non-negative")
    if min_intervals % 4 != 0 or min_intervals < 4:
        raise ValidationError("min_intervals must be a multiple of 4")
    rate = 4.0 * h * T

    def value_at(n_int: int) -> float:
        nodes = np.linspace(0.0, 1.0, n_int + 1)
        theta = rate * _cumulative_gauss(field_strength, nodes)
        w = np.ones(n_int + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= (1.0 / n_int) / 3.0
        c = float(w @ np.cos(theta))
        s = float(w @ np.sin(theta))
        return c * c + s * s

    n_int = min_intervals
    prev = value_at(n_int)
    while True:
        n_int *= 2
        if n_int > max_intervals:
            raise QuadratureError(
                f"schedule quadrature did not converge below rel_tol={rel_tol:.1e} "
                f"within {max_intervals} intervals"
            )
        cur = value_at(n_int)
        change = abs(cur - prev)
        if change <= rel_tol * abs(cur) + 1e-16:
            return TwoQubitJump(
                to_opposite=cur,
                to_up_down=0.0,
                to_down_up=0.0,
                est_error=change,
                intervals=n_int,
            )
        prev = cur


_REFERENCE_CHAIN = SpinChainSpec(n_sites=2, couplings=(1.0, 2.0, 1.0), h=1.0, T=1.0)


def free_flip_probability(t: float, tol: float = 1e-9) -> float:
    """Both-spins-flip probability of the bare two-site chain after time ``t``.

    Evolves ``|up,up>`` under the exchange Hamiltonian alone (no measurement)
    and returns the population of ``|down,down>``; the aligned pair behaves as
    a closed two-level system, so the exact value is ``sin^2(t)``.
    """
    if t < 0:
        raise ValidationError("time must be non-negative")
    if t == 0.0:
        return 0.0
    h0 = build_chain_h0(_REFERENCE_CHAIN)
    op = TimeDependentOperator.constant(h0, (0.0, float(t)))
    u = exact_propagator(op, float(t), tol=tol).matrix
    return float(abs(u[3, 0]) ** 2)


def chain_validity_flags(h: float, T: float, n_sites: int = 2) -> tuple[str, ...]:
    """Guideline diagnostics for the chain's perturbative treatment."""
    flags: list[str] = []
    if h < 4.0:
        flags.append("field below the perturbative threshold h >= 4")
    if h * T < 3.0 * math.sqrt(n_sites / 2.0):
        flags.append("rotation too fast: h*T should well exceed sqrt(n_sites/2)")
    return tuple(flags)


def time_independent_model(h0, h_meas, coupling: float, t_final: float) -> MeasurementModel:
    """Model with constant perturbation and constant measurement."""
    if not (t_final > 0):
        raise ValidationError("t_final must be positive")
    horizon = (0.0, float(t_final))
    return MeasurementModel(
        h0=TimeDependentOperator.constant(as_square_matrix(h0), horizon),
        h_meas=TimeDependentOperator.constant(as_square_matrix(h_meas), horizon),
        coupling=coupling,
    )


def time_independent_frame(
    model: MeasurementModel,
    n_intervals: int,
    policy: NumericPolicy | None = None,
    degeneracy_tol: float | None = None,
) -> AdiabaticFrame:
    """Static frame from the spectral decomposition of a constant measurement."""
    pol = default_policy(policy)
    t0, t1 = model.horizon
    dec = decompose(model.h_meas(t0), degeneracy_tol, pol)
    grid = np.linspace(t0, t1, n_intervals + 1)
    levels = [(float(dec.eigenvalues[l]), dec.projectors[l]) for l in range(dec.n_levels)]
    return AdiabaticFrame.static(
        grid, levels, model.coupling, pol, degeneracy_tol=dec.degeneracy_tol
    )


def pulsed_measurement_model(
    projector,
    h0,
    coupling: float,
    tau: float,
    tau_free: float,
) -> MeasurementModel:
    """Free evolution for ``tau_free``, then measurement of ``projector``.

    The measurement Hamiltonian is the watched projector itself, switched on
    for the remainder of the cycle ``[tau_free, tau]``.
    """
    if not (0.0 <= tau_free <= tau) or tau <= 0:
        raise ValidationError("need 0 <= tau_free <= tau with tau > 0")
    p = check_projector(projector)
    horizon = (0.0, float(tau))
    zero = np.zeros_like(p)

    def switched(t: float) -> np.ndarray:
        return p if t >= tau_free else zero

    breaks = (float(tau_free),) if 0.0 < tau_free < tau else ()
    return MeasurementModel(
        h0=TimeDependentOperator.constant(as_square_matrix(h0), horizon),
        h_meas=TimeDependentOperator(
            evaluator=switched, horizon=horizon, dim=p.shape[0], breakpoints=breaks
        ),
        coupling=coupling,
    )


def pulsed_frame(
    projector,
    coupling: float,
    tau: float,
    tau_free: float,
    n_intervals: int,
    policy: NumericPolicy | None = None,
) -> AdiabaticFrame:
    """Static two-level frame for a pulsed measurement.

    Level 0 is the watched subspace (eigenvalue 1 while the measurement is
    on), level 1 its complement (eigenvalue 0 throughout).  The switching
    instant must fall on a grid node so the accumulated phases are exact.
    """
    if not (0.0 <= tau_free <= tau) or tau <= 0:
        raise ValidationError("need 0 <= tau_free <= tau with tau > 0")
    p = check_projector(projector, policy)
    grid = np.linspace(0.0, float(tau), n_intervals + 1)
    if tau_free > 0.0 and float(np.min(np.abs(grid - tau_free))) > 1e-12 * tau:
        raise ValidationError(
            f"switching time {tau_free} must be a node of the {n_intervals}-interval grid"
        )

    def watched_eps(t: float) -> float:
        return 1.0 if t >= tau_free else 0.0

    complement = np.eye(p.shape[0], dtype=complex) - p
    return AdiabaticFrame.static(
        grid, [(watched_eps, p), (0.0, complement)], coupling, policy
    )
