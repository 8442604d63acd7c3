"""Zeno subspace structure of a measurement Hamiltonian.

A finitely strong measurement is modelled by a Hermitian ``H_meas`` whose
eigenprojectors define the Zeno subspaces; degenerate eigenvalues are grouped
into a single subspace of rank > 1.  For time-dependent ``H_meas(t)`` the
subspaces rotate, and an intertwining frame ``A(t)`` with
``P_n(t) = A(t) P_n(0) A(t)^dagger`` is obtained by integrating
``i dA/dt = M(t) A(t)`` where ``M = i sum_n (dP_n/dt) P_n``.  The quality of
the adiabatic picture is summarised by an :class:`AdiabaticityReport`.
"""

from __future__ import annotations

import bisect
import dataclasses
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import linear_sum_assignment

from .errors import FrameResidualError, LevelCrossingError, NumericalError, ValidationError
from .operators import as_square_matrix, check_projector, eigh, max_norm
from .policy import NumericPolicy, default_policy

__all__ = [
    "TimeDependentOperator",
    "ZenoDecomposition",
    "AdiabaticFrame",
    "AdiabaticityReport",
    "decompose",
    "track_frame",
    "adiabaticity_report",
]


@dataclasses.dataclass(frozen=True)
class TimeDependentOperator:
    """Piecewise-smooth Hermitian-valued function of time.

    ``breakpoints`` list the interior times where smoothness may fail (for
    example the switching instants of a pulsed measurement); they must lie
    strictly inside the horizon and be strictly increasing.  Derivatives are
    sampled by symmetric differences clamped to the smooth piece containing
    the evaluation point, so they are one-sided at breakpoints and at the
    horizon edges.  An optional analytic ``derivative_evaluator`` takes
    precedence over finite differences.
    """

    evaluator: Callable[[float], np.ndarray]
    horizon: tuple[float, float]
    dim: int
    breakpoints: tuple[float, ...] = ()
    derivative_evaluator: Callable[[float], np.ndarray] | None = None

    def __post_init__(self):
        t0, t1 = self.horizon
        if not (np.isfinite(t0) and np.isfinite(t1)) or t1 <= t0:
            raise ValidationError(f"bad horizon {self.horizon}: need t0 < t1, finite")
        if self.dim < 1:
            raise ValidationError("operator dimension must be >= 1")
        pts = tuple(float(b) for b in self.breakpoints)
        if any(not (t0 < b < t1) for b in pts):
            raise ValidationError("breakpoints must lie strictly inside the horizon")
        if any(b2 <= b1 for b1, b2 in zip(pts, pts[1:])):
            raise ValidationError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", pts)

    @classmethod
    def constant(cls, matrix, horizon: tuple[float, float]) -> "TimeDependentOperator":
        mat = as_square_matrix(matrix).copy()
        return cls(evaluator=lambda t: mat, horizon=horizon, dim=mat.shape[0])

    def _check_time(self, t: float) -> float:
        t0, t1 = self.horizon
        slack = 1e-12 * (1.0 + abs(t0) + abs(t1))
        if t < t0 - slack or t > t1 + slack:
            raise ValidationError(f"time {t!r} outside horizon [{t0}, {t1}]")
        return min(max(t, t0), t1)

    def __call__(self, t: float) -> np.ndarray:
        t = self._check_time(float(t))
        m = as_square_matrix(self.evaluator(t))
        if m.shape[0] != self.dim:
            raise ValidationError(
                f"evaluator returned dimension {m.shape[0]}, declared {self.dim}"
            )
        return m

    def piece_bounds(self, t: float) -> tuple[float, float]:
        """Bounds of the smooth piece owning ``t``.

        A breakpoint belongs to the piece on its right, except at the horizon
        end where the last piece owns its right edge.
        """
        t0, t1 = self.horizon
        edges = [t0, *self.breakpoints, t1]
        if t >= t1:
            lo_idx = len(edges) - 2
        else:
            lo_idx = bisect.bisect_right(edges, t) - 1
            lo_idx = min(max(lo_idx, 0), len(edges) - 2)
        return edges[lo_idx], edges[lo_idx + 1]

    def derivative(self, t: float, step: float) -> np.ndarray:
        """d(H)/dt at ``t`` by a symmetric difference clamped to the piece."""
        t = self._check_time(float(t))
        if self.derivative_evaluator is not None:
            return as_square_matrix(self.derivative_evaluator(t))
        lo, hi = self.piece_bounds(t)
        a = max(t - step, lo)
        b = min(t + step, hi)
        if b <= a:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return (self(b) - self(a)) / (b - a)


def _cluster_eigenvalues(vals: np.ndarray, tol: float) -> tuple[list[slice], list[str]]:
    """Group ascending eigenvalues into levels separated by gaps > tol."""
    warnings: list[str] = []
    groups: list[slice] = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i] - vals[i - 1] > tol:
            groups.append(slice(start, i))
            start = i
    for i in range(1, len(vals)):
        gap = vals[i] - vals[i - 1]
        if tol / 2.0 < gap < 2.0 * tol:
            warnings.append(
                f"ambiguous gap {gap:.3e} near eigenvalue {vals[i]:.6g} "
                f"(degeneracy tol {tol:.3e})"
            )
    for g in groups:
        spread = float(vals[g.stop - 1] - vals[g.start])
        if spread > tol:
            warnings.append(
                f"cluster spread {spread:.3e} exceeds degeneracy tol {tol:.3e}"
            )
    return groups, warnings


def _resolve_degeneracy_tol(
    vals: np.ndarray, scale: float, degeneracy_tol: float | None, pol: NumericPolicy
) -> float:
    if degeneracy_tol is not None:
        return float(degeneracy_tol)
    spectral_range = float(vals[-1] - vals[0]) if len(vals) > 1 else 0.0
    # Floor absorbs eigensolver rounding on exactly degenerate spectra.
    return max(pol.degeneracy_rel * spectral_range, 1e-14 * (1.0 + scale))


@dataclasses.dataclass(frozen=True)
class ZenoDecomposition:
    """Spectral resolution of a measurement Hamiltonian into Zeno levels.

    ``eigenvalues`` are the cluster means in ascending order, ``projectors``
    the matching orthogonal projectors (rank > 1 where eigenvalues are
    degenerate within the clustering tolerance).
    """

    eigenvalues: np.ndarray
    projectors: np.ndarray
    ranks: tuple[int, ...]
    degeneracy_tol: float
    warnings: tuple[str, ...] = ()

    @property
    def n_levels(self) -> int:
        return len(self.ranks)

    @property
    def dim(self) -> int:
        return self.projectors.shape[-1]

    def verify(self, policy: NumericPolicy | None = None) -> None:
        """Check completeness, orthogonality and projector structure."""
        pol = default_policy(policy)
        total = self.projectors.sum(axis=0)
        defect = max_norm(total - np.eye(self.dim))
        if defect > pol.completeness_tol:
            raise ValidationError(f"projectors do not sum to identity: defect {defect:.3e}")
        for i in range(self.n_levels):
            check_projector(self.projectors[i], pol)
            for j in range(i + 1, self.n_levels):
                cross = max_norm(self.projectors[i] @ self.projectors[j])
                if cross > pol.orthogonality_tol:
                    raise ValidationError(
                        f"levels {i} and {j} are not orthogonal: defect {cross:.3e}"
                    )


def decompose(
    h_meas,
    degeneracy_tol: float | None = None,
    policy: NumericPolicy | None = None,
) -> ZenoDecomposition:
    """Split a Hermitian matrix into Zeno levels.

    Eigenvalues are clustered with an absolute tolerance (default:
    ``degeneracy_rel`` times the spectral range); gaps falling inside
    ``(tol/2, 2 tol)`` are flagged as ambiguous in ``warnings`` rather than
    raised, since either clustering is defensible there.
    """
    pol = default_policy(policy)
    mat = as_square_matrix(h_meas)
    vals, vecs = eigh(mat, pol)
    tol = _resolve_degeneracy_tol(vals, max_norm(mat), degeneracy_tol, pol)
    groups, warnings = _cluster_eigenvalues(vals, tol)
    eigenvalues = np.array([float(vals[g].mean()) for g in groups])
    projectors = np.empty((len(groups), mat.shape[0], mat.shape[0]), dtype=complex)
    for i, g in enumerate(groups):
        block = vecs[:, g]
        p = block @ block.conj().T
        projectors[i] = (p + p.conj().T) / 2.0
    ranks = tuple(g.stop - g.start for g in groups)
    dec = ZenoDecomposition(
        eigenvalues=eigenvalues,
        projectors=projectors,
        ranks=ranks,
        degeneracy_tol=tol,
        warnings=tuple(warnings),
    )
    total_defect = max_norm(projectors.sum(axis=0) - np.eye(mat.shape[0]))
    if total_defect > pol.completeness_tol:
        raise ValidationError(f"projectors do not sum to identity: defect {total_defect:.3e}")
    return dec


@dataclasses.dataclass(frozen=True)
class AdiabaticFrame:
    """Intertwining frame sampled on a time grid.

    ``intertwiners[k]`` is ``A(t_k)`` with ``A(0) = I``;
    ``eigenvalues[l, k]`` and ``projectors[l, k]`` describe level ``l`` of the
    measurement Hamiltonian at node ``k`` with a consistent identity along the
    grid; ``phases[l, k]`` is the accumulated dynamical phase
    ``integral of coupling * eps_l`` up to ``t_k``.  Frames are only defined
    at their grid nodes; there is no interpolation between nodes.
    """

    grid: np.ndarray
    intertwiners: np.ndarray
    eigenvalues: np.ndarray
    phases: np.ndarray
    projectors: np.ndarray
    ranks: tuple[int, ...]
    coupling: float
    degeneracy_tol: float

    @property
    def n_levels(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n_nodes(self) -> int:
        return len(self.grid)

    @property
    def dim(self) -> int:
        return self.intertwiners.shape[-1]

    def initial_projectors(self) -> np.ndarray:
        return self.projectors[:, 0]

    def node_index(self, t: float) -> int:
        """Index of the grid node equal to ``t``; error if ``t`` is off-grid."""
        grid = self.grid
        idx = int(np.searchsorted(grid, t))
        slack = 1e-12 * (1.0 + abs(float(grid[-1])))
        for cand in (idx - 1, idx, idx + 1):
            if 0 <= cand < len(grid) and abs(float(grid[cand]) - t) <= slack:
                return cand
        raise ValidationError(
            f"time {t!r} is not a frame grid node; frames are not interpolated"
        )

    def intertwining_residual(self) -> float:
        """Worst max-norm of ``A P_l(0) A^dagger - P_l(t)`` over nodes/levels."""
        worst = 0.0
        p0 = self.initial_projectors()
        for k in range(self.n_nodes):
            a = self.intertwiners[k]
            for l in range(self.n_levels):
                worst = max(worst, max_norm(a @ p0[l] @ a.conj().T - self.projectors[l, k]))
        return worst

    @classmethod
    def static(
        cls,
        grid,
        levels: Sequence[tuple[float | Callable[[float], float], np.ndarray]],
        coupling: float,
        policy: NumericPolicy | None = None,
        degeneracy_tol: float = 0.0,
    ) -> "AdiabaticFrame":
        """Frame for measurements with constant projectors.

        ``levels`` holds ``(eps, P)`` pairs where ``eps`` is a number or a
        function of time (as for pulsed measurements whose eigenvalues switch
        while the projectors stay fixed).  The intertwiner is the identity at
        every node.  Phases accumulate by midpoint sampling per grid interval,
        which is exact for piecewise-constant eigenvalues whose switching
        times are grid nodes.
        """
        pol = default_policy(policy)
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
            raise ValidationError("grid must be strictly increasing with >= 2 nodes")
        projs = np.array([check_projector(p, pol) for _, p in levels])
        dim = projs.shape[-1]
        total = projs.sum(axis=0)
        if max_norm(total - np.eye(dim)) > pol.completeness_tol:
            raise ValidationError("static frame levels must resolve the identity")
        n = len(grid)
        eps = np.empty((len(levels), n))
        phases = np.zeros((len(levels), n))
        for l, (spec, _) in enumerate(levels):
            fn = spec if callable(spec) else (lambda t, v=float(spec): v)
            eps[l] = [float(fn(t)) for t in grid]
            mids = (grid[:-1] + grid[1:]) / 2.0
            steps = np.diff(grid)
            increments = coupling * np.array([float(fn(t)) for t in mids]) * steps
            phases[l, 1:] = np.cumsum(increments)
        eye = np.eye(dim, dtype=complex)
        return cls(
            grid=grid,
            intertwiners=np.broadcast_to(eye, (n, dim, dim)).copy(),
            eigenvalues=eps,
            phases=phases,
            projectors=np.repeat(projs[:, None], n, axis=1),
            ranks=tuple(int(round(p.trace().real)) for p in projs),
            coupling=float(coupling),
            degeneracy_tol=float(degeneracy_tol),
        )


def _node_levels(mat: np.ndarray, tol: float, pol: NumericPolicy):
    """Eigendecompose and cluster one time sample.

    Returns (cluster eigenvalue means, projector stack, ranks, raw vals, vecs,
    group slices).
    """
    vals, vecs = eigh(mat, pol)
    groups, _ = _cluster_eigenvalues(vals, tol)
    means = np.array([float(vals[g].mean()) for g in groups])
    projs = np.empty((len(groups), mat.shape[0], mat.shape[0]), dtype=complex)
    for i, g in enumerate(groups):
        block = vecs[:, g]
        p = block @ block.conj().T
        projs[i] = (p + p.conj().T) / 2.0
    ranks = tuple(g.stop - g.start for g in groups)
    return means, projs, ranks, vals, vecs, groups


def _generator(
    op: TimeDependentOperator, t: float, fd_step: float, tol: float, pol: NumericPolicy
) -> np.ndarray:
    """Adiabatic generator ``M(t) = i sum_n (dP_n/dt) P_n``.

    Evaluated through the spectral formula: in the instantaneous eigenbasis,
    ``M_ab = i <a|dH/dt|b> / (eps_b - eps_a)`` for states in distinct levels
    and zero inside a level.  Label-free, so no level matching is needed at
    interior stage points.
    """
    mat = op(t)
    vals, vecs = eigh(mat, pol)
    groups, _ = _cluster_eigenvalues(vals, tol)
    means = np.array([float(vals[g].mean()) for g in groups])
    label = np.empty(len(vals), dtype=int)
    for i, g in enumerate(groups):
        label[g] = i
    hdot = op.derivative(t, fd_step)
    w = vecs.conj().T @ hdot @ vecs
    denom = means[label][None, :] - means[label][:, None]
    same = label[:, None] == label[None, :]
    denom = np.where(same, 1.0, denom)
    m_eig = np.where(same, 0.0, 1j * w / denom)
    m = vecs @ m_eig @ vecs.conj().T
    return (m + m.conj().T) / 2.0


def _polar_unitary(a: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(a)
    return u @ vh


def track_frame(
    h_meas: TimeDependentOperator,
    coupling: float,
    grid,
    policy: NumericPolicy | None = None,
    degeneracy_tol: float | None = None,
    frame_tol: float | None = None,
) -> AdiabaticFrame:
    """Integrate the intertwining frame of a rotating measurement.

    The level structure must stay intact along the grid: constant level count
    and ranks, pairwise gaps above the degeneracy tolerance.  A change raises
    :class:`LevelCrossingError` naming the node.  The frame ODE
    ``i dA/dt = M(t) A`` is advanced with one classical 4th-order step per
    grid interval (generator sampled at the interval midpoint) followed by a
    polar re-unitarisation, and the transport property
    ``A P_l(0) A^dagger = P_l(t)`` is verified at every node against
    ``frame_tol``.  Phases are cumulative trapezoids of ``coupling * eps_l``.

    Breakpoints of ``h_meas`` must coincide with grid nodes so that no
    integration step straddles a discontinuity.
    """
    pol = default_policy(policy)
    ftol = pol.frame_tol if frame_tol is None else float(frame_tol)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing with >= 2 nodes")
    t0, t1 = h_meas.horizon
    slack = 1e-12 * (1.0 + abs(t0) + abs(t1))
    if abs(grid[0] - t0) > slack or grid[-1] > t1 + slack:
        raise ValidationError("grid must start at the horizon origin and stay inside it")
    for b in h_meas.breakpoints:
        if grid[-1] > b and not np.any(np.abs(grid - b) <= slack):
            raise ValidationError(f"breakpoint t={b} must be a grid node")

    n = len(grid)
    samples = [h_meas(t) for t in grid]
    all_vals = [np.linalg.eigvalsh((s + s.conj().T) / 2.0) for s in samples]
    spectral_range = max(float(v[-1] - v[0]) for v in all_vals)
    scale = max(max_norm(s) for s in samples)
    tol = (
        float(degeneracy_tol)
        if degeneracy_tol is not None
        else max(pol.degeneracy_rel * spectral_range, 1e-14 * (1.0 + scale))
    )

    means0, projs0, ranks0, *_ = _node_levels(samples[0], tol, pol)
    n_levels = len(ranks0)
    dim = h_meas.dim
    eps = np.empty((n_levels, n))
    projectors = np.empty((n_levels, n, dim, dim), dtype=complex)
    eps[:, 0] = means0
    projectors[:, 0] = projs0

    prev_projs = projs0
    prev_means = means0
    for k in range(1, n):
        means, projs, ranks, *_ = _node_levels(samples[k], tol, pol)
        if len(ranks) != n_levels:
            raise LevelCrossingError(
                f"level count changed from {n_levels} to {len(ranks)} at node "
                f"t={grid[k]:.9g}; treat as a level crossing"
            )
        overlap = np.einsum("aij,bji->ab", prev_projs, projs).real
        tie = np.abs(prev_means[:, None] - means[None, :])
        cost = -overlap + 1e-9 * tie / (1.0 + spectral_range)
        rows, cols = linear_sum_assignment(cost)
        order = np.empty(n_levels, dtype=int)
        order[rows] = cols
        projs = projs[order]
        means = means[order]
        if tuple(int(round(p.trace().real)) for p in projs) != ranks0:
            raise LevelCrossingError(
                f"level ranks changed at node t={grid[k]:.9g}; treat as a level crossing"
            )
        eps[:, k] = means
        projectors[:, k] = projs
        prev_projs, prev_means = projs, means

    intertwiners = np.empty((n, dim, dim), dtype=complex)
    intertwiners[0] = np.eye(dim, dtype=complex)
    for k in range(n - 1):
        t_a = float(grid[k])
        t_b = float(grid[k + 1])
        h = t_b - t_a
        fd = h / 2.0
        m_a = _generator(h_meas, t_a, fd, tol, pol)
        m_mid = _generator(h_meas, (t_a + t_b) / 2.0, fd, tol, pol)
        m_b = _generator(h_meas, t_b, fd, tol, pol)
        a = intertwiners[k]
        k1 = -1j * (m_a @ a)
        k2 = -1j * (m_mid @ (a + (h / 2.0) * k1))
        k3 = -1j * (m_mid @ (a + (h / 2.0) * k2))
        k4 = -1j * (m_b @ (a + h * k3))
        step = a + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        intertwiners[k + 1] = _polar_unitary(step)

    phases = cumulative_trapezoid(float(coupling) * eps, grid, axis=1, initial=0.0)

    frame = AdiabaticFrame(
        grid=grid,
        intertwiners=intertwiners,
        eigenvalues=eps,
        phases=phases,
        projectors=projectors,
        ranks=ranks0,
        coupling=float(coupling),
        degeneracy_tol=tol,
    )
    residual = frame.intertwining_residual()
    if residual > ftol:
        raise FrameResidualError(
            f"frame residual {residual:.3e} exceeds tolerance {ftol:.1e}; "
            f"refine the grid",
            last_result=frame,
        )
    return frame


@dataclasses.dataclass(frozen=True)
class AdiabaticityReport:
    """Summary of how well the measurement rotation stays adiabatic.

    ``alpha_max`` is the worst (over grid nodes and source levels) sum of
    squared transition coefficients
    ``alpha_mn = -<m|dH_meas/dt|n> / (coupling * (eps_m - eps_n))``, the
    denominator being the physical transition frequency of the scaled
    measurement Hamiltonian.  For a degenerate source level the squared sum is
    averaged over an orthonormal basis of the level (basis invariant).
    ``eps_min`` is the smallest inter-level gap of the unscaled spectrum over
    the grid.  The evolution is flagged adiabatic when
    ``ratio = alpha_max / eps_min <= margin * coupling**2``.
    """

    alpha_max: float
    eps_min: float
    ratio: float
    coupling: float
    margin: float
    adiabatic: bool

    @property
    def threshold(self) -> float:
        return self.margin * self.coupling**2


def adiabaticity_report(
    h_meas: TimeDependentOperator,
    coupling: float,
    grid,
    policy: NumericPolicy | None = None,
    degeneracy_tol: float | None = None,
    margin: float | None = None,
) -> AdiabaticityReport:
    """Evaluate the adiabaticity figures on a grid.

    Levels are clustered node-locally, so instants where eigenvalues merge
    within the degeneracy tolerance (a pulsed measurement switched off, say)
    simply contribute no transition pairs.  A genuinely near-degenerate pair
    of distinct levels below the tolerance raises, since the coefficients are
    undefined there.
    """
    pol = default_policy(policy)
    mrg = pol.adiabatic_margin if margin is None else float(margin)
    if coupling <= 0:
        raise ValidationError("coupling must be positive")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be strictly increasing with >= 2 nodes")

    samples = [h_meas(t) for t in grid]
    all_vals = [np.linalg.eigvalsh((s + s.conj().T) / 2.0) for s in samples]
    spectral_range = max(float(v[-1] - v[0]) for v in all_vals)
    scale = max(max_norm(s) for s in samples)
    tol = (
        float(degeneracy_tol)
        if degeneracy_tol is not None
        else max(pol.degeneracy_rel * spectral_range, 1e-14 * (1.0 + scale))
    )

    alpha_max = 0.0
    eps_min = np.inf
    steps = np.diff(grid)
    for k, t in enumerate(grid):
        local = steps[min(k, len(steps) - 1)]
        means, _, ranks, vals, vecs, groups = _node_levels(samples[k], tol, pol)
        n_levels = len(groups)
        if n_levels < 2:
            continue
        gaps = np.diff(means)
        if np.any(gaps < tol):
            raise NumericalError(
                f"levels closer than the degeneracy tolerance at node t={t:.9g}; "
                f"transition coefficients are undefined"
            )
        eps_min = min(eps_min, float(gaps.min()))
        hdot = h_meas.derivative(float(t), local / 2.0)
        w = vecs.conj().T @ hdot @ vecs
        for m in range(n_levels):
            gm = groups[m]
            total = 0.0
            for nn in range(n_levels):
                if nn == m:
                    continue
                block = w[gm, groups[nn]]
                bohr = coupling * (means[m] - means[nn])
                total += float(np.sum(np.abs(block) ** 2)) / bohr**2
            total /= ranks[m]
            alpha_max = max(alpha_max, total)

    if not np.isfinite(eps_min):
        # No transition pairs anywhere: nothing to leak between.
        return AdiabaticityReport(
            alpha_max=0.0, eps_min=np.inf, ratio=0.0,
            coupling=float(coupling), margin=mrg, adiabatic=True,
        )
    ratio = alpha_max / eps_min
    return AdiabaticityReport(
        alpha_max=alpha_max,
        eps_min=eps_min,
        ratio=ratio,
        coupling=float(coupling),
        margin=mrg,
        adiabatic=bool(ratio <= mrg * coupling**2),
    )
