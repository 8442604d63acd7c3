"""Time-evolution operators.

``exact_propagator`` is the reference route: a time-ordered product of
midpoint-sampled step exponentials with step doubling until successive
refinements agree.  ``adiabatic_propagator`` is the measurement-dominated
approximation ``A(t) Phi(t)`` read off an :class:`AdiabaticFrame`; the two
emit the same states in the strong-coupling limit and their disagreement
is a diagnostic, not an error.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .decomposition import AdiabaticFrame, TimeDependentOperator
from .errors import NumericalError, ValidationError
from .operators import matrix_exp_unitary, max_norm
from .policy import NumericPolicy, default_policy

__all__ = ["PropagatorResult", "exact_propagator", "adiabatic_propagator"]


@dataclasses.dataclass(frozen=True)
class PropagatorResult:
    """Unitary with the step count and convergence estimate that produced it."""

    matrix: np.ndarray
    steps_used: int
    est_error: float


def _segments(op: TimeDependentOperator, t_final: float) -> list[tuple[float, float]]:
    t0 = op.horizon[0]
    edges = [t0] + [b for b in op.breakpoints if t0 < b < t_final] + [t_final]
    return list(zip(edges[:-1], edges[1:]))


def _product_over(op, segments, steps_per: list[int], policy) -> np.ndarray:
    u = np.eye(op.dim, dtype=complex)
    for (a, b), n in zip(segments, steps_per):
        dt = (b - a) / n
        for i in range(n):
            mid = a + (i + 0.5) * dt
            u = matrix_exp_unitary(op(mid), dt, policy) @ u
    return u


def exact_propagator(
    h_total: TimeDependentOperator,
    t_final: float,
    tol: float = 1e-8,
    max_doublings: int = 20,
    policy: NumericPolicy | None = None,
) -> PropagatorResult:
    """Reference propagator ``U(t_final, t0)`` by midpoint exponential products.

    Breakpoints of the Hamiltonian always land on step boundaries.  The total
    step count doubles until two successive refinements differ by less than
    ``tol`` in max norm; the last difference is reported as ``est_error``.
    Raises :class:`NumericalError` carrying the last estimate if the budget of
    ``max_doublings`` is exhausted.
    """
    pol = default_policy(policy)
    t0, t1 = h_total.horizon
    if not (t0 < t_final <= t1 + 1e-12 * (1.0 + abs(t1))):
        raise ValidationError(f"t_final {t_final!r} outside horizon ({t0}, {t1}]")
    segments = _segments(h_total, float(t_final))
    total = float(t_final) - t0
    base = max(8, 2 * len(segments))

    def counts(n_total: int) -> list[int]:
        return [max(1, int(round(n_total * (b - a) / total))) for a, b in segments]

    prev = _product_over(h_total, segments, counts(base), pol)
    steps = base
    for _ in range(max_doublings):
        steps *= 2
        cur = _product_over(h_total, segments, counts(steps), pol)
        diff = max_norm(cur - prev)
        if diff < tol:
            return PropagatorResult(matrix=cur, steps_used=sum(counts(steps)), est_error=diff)
        prev = cur
    raise NumericalError(
        f"exact propagator did not converge below {tol:.1e} after "
        f"{max_doublings} doublings (last change {diff:.3e})",
        last_result=PropagatorResult(matrix=prev, steps_used=sum(counts(steps)), est_error=diff),
    )


def adiabatic_propagator(frame: AdiabaticFrame, t: float) -> np.ndarray:
    """Zeroth-order propagator ``A(t) Phi(t)`` at a frame grid node.

    ``Phi(t) = sum_l exp(-i phase_l(t)) P_l(0)``.  Requesting a time between
    grid nodes is an error; frames are never interpolated.
    """
    k = frame.node_index(float(t))
    p0 = frame.initial_projectors()
    phi = np.tensordot(np.exp(-1j * frame.phases[:, k]), p0, axes=(0, 0))
    return frame.intertwiners[k] @ phi
