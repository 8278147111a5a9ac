"""Band structure, symmetry flags, winding numbers, and edge states.

Momentum-space analysis assumes a homogeneous periodic 1D walk; the
one-step matrix at momentum k is then 2x2 and special-unitary, so it
can be written exp(-i E(k) n(k).sigma) with quasienergy E(k) in
(-pi, pi] (dimensionless, per step) and a unit Bloch vector n(k).
Gaps are measured to both E = 0 and E = pi, because on the circle the
spectrum can close at either point.

Real-space edge diagnostics work on the dense one-step unitary of a
two-domain profile on a ring, so there are always exactly two walls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .errors import (
    ChiralSymmetryError,
    GapClosureError,
    ValidationError,
)
from .lattice import CoinProfile, LatticeSpec, SpinorField, WalkSpec, wrap_angle
from .walk import DENSE_CAP, coin_matrix, evolve, materialize_unitary
from .lattice import make_localized_state, position_distribution

#: momenta below this gap are treated as gap closures when extracting n(k)
BLOCH_GAP_TOL = 1e-8

#: spectrum counts as gapped for winding purposes above this
WINDING_MIN_GAP = 1e-6


def momentum_step_matrix(theta1: float, theta2: float, k: float, protocol: str) -> np.ndarray:
    """2x2 one-step matrix at momentum k for a homogeneous walk.

    The up component picks up exp(-ik) under a positive shift, the down
    component exp(+ik).
    """
    r1 = coin_matrix(theta1)
    if protocol == "simple":
        t = np.diag([np.exp(-1j * k), np.exp(1j * k)])
        return t @ r1
    if protocol == "split_step":
        r2 = coin_matrix(theta2)
        t_up = np.diag([np.exp(-1j * k), 1.0])
        t_down = np.diag([1.0, np.exp(1j * k)])
        return t_down @ r2 @ t_up @ r1
    raise ValidationError(f"no momentum form for protocol {protocol!r}")


def _k_grid(n_k: int) -> np.ndarray:
    if n_k < 8:
        raise ValidationError("momentum grid needs at least 8 points")
    return -np.pi + 2.0 * np.pi * np.arange(n_k) / n_k


def _bloch_vector(u: np.ndarray, gap_tol: float):
    """(E, n, defined) from one special-unitary 2x2 step matrix.

    E is the upper-band quasienergy in [0, pi]. n is extracted from
    u = cos(E) - i sin(E) n.sigma and is unit up to roundoff; it is
    undefined when the gap to 0 or pi is below gap_tol.
    """
    cos_e = float(np.clip(np.real(np.trace(u)) / 2.0, -1.0, 1.0))
    e = float(np.arccos(cos_e))
    if min(e, np.pi - e) <= gap_tol:
        return e, None, False
    m = (u - cos_e * np.eye(2)) * (1j / np.sin(e))
    n = np.array([m[0, 1].real, -m[0, 1].imag, m[0, 0].real])
    return e, n, True


@dataclass(frozen=True, eq=False)
class BlochData:
    """Band data on a momentum grid for one homogeneous walk."""

    k: np.ndarray
    e_plus: np.ndarray
    e_minus: np.ndarray
    n_vec: np.ndarray      # (n_k, 3); rows are zero where undefined
    defined: np.ndarray    # bool mask, False at gap closures
    gap0: float
    gap_pi: float
    theta1: float
    theta2: float
    protocol: str

    @property
    def min_gap(self) -> float:
        return min(self.gap0, self.gap_pi)


def bloch_decompose(spec: WalkSpec, n_k: int = 256, gap_tol: float = BLOCH_GAP_TOL) -> BlochData:
    """Quasienergy bands and Bloch vectors of a homogeneous periodic walk."""
    if spec.lattice.dimension != 1:
        raise ValidationError("momentum decomposition is 1D only")
    if not spec.lattice.is_periodic:
        raise ValidationError("momentum decomposition needs a periodic lattice")
    theta1, theta2 = spec.coins.homogeneous_values()
    ks = _k_grid(n_k)
    e_plus = np.empty(n_k)
    e_minus = np.empty(n_k)
    n_vec = np.zeros((n_k, 3))
    defined = np.zeros(n_k, dtype=bool)
    for i, k in enumerate(ks):
        u = momentum_step_matrix(theta1, theta2, k, spec.protocol)
        det = np.linalg.det(u)
        if abs(det - 1.0) > 1e-9:
            raise ValidationError("one-step matrix is not special-unitary")
        phases = -np.angle(np.linalg.eigvals(u))
        e_plus[i] = phases.max()
        e_minus[i] = phases.min()
        e, n, ok = _bloch_vector(u, gap_tol)
        if ok:
            n_vec[i] = n
            defined[i] = True
    e_arc = np.arccos(np.clip(np.cos(e_plus), -1.0, 1.0))
    gap0 = float(e_arc.min())
    gap_pi = float((np.pi - e_arc).min())
    return BlochData(
        k=ks, e_plus=e_plus, e_minus=e_minus, n_vec=n_vec, defined=defined,
        gap0=gap0, gap_pi=gap_pi, theta1=theta1, theta2=theta2,
        protocol=spec.protocol,
    )


def _fit_plane_axis(vectors: np.ndarray):
    """Least-squares normal of the plane spanned by unit Bloch vectors.

    The sign is fixed by the first component (x, then y, then z) whose
    magnitude exceeds a rounding floor. Orienting by the largest
    component instead would flip the axis as the coin angles rotate it
    past a 45-degree line, flipping the reported winding sign inside a
    gapped phase; the x component of the coin chiral axis only vanishes
    at the zone edge, so this rule stays continuous where gaps are open.
    """
    _, _, vt = np.linalg.svd(vectors, full_matrices=False)
    axis = vt[-1]
    axis = axis / np.linalg.norm(axis)
    for component in axis:
        if abs(component) > 1e-9:
            if component < 0:
                axis = -axis
            break
    residual = float(np.max(np.abs(vectors @ axis)))
    return axis, residual


def winding_number(
    bloch: BlochData,
    chiral_axis=None,
    plane_tol: float = 1e-6,
    integral_tol: float = 0.01,
    min_gap: float = WINDING_MIN_GAP,
) -> int:
    """Integer winding of n(k) about the chiral axis over the Brillouin zone.

    The axis is plane-fitted from the data unless supplied. Raises
    GapClosureError on a (nearly) closed spectrum and
    ChiralSymmetryError when n(k) does not stay orthogonal to the axis
    within plane_tol, since the winding is meaningless in either case.
    The signed accumulated angle must land on an integer within
    integral_tol before rounding.
    """
    if bloch.min_gap <= min_gap or not bool(np.all(bloch.defined)):
        raise GapClosureError(
            f"spectrum gap {bloch.min_gap:.3e} too small for a winding number"
        )
    n = bloch.n_vec / np.linalg.norm(bloch.n_vec, axis=1, keepdims=True)
    if chiral_axis is None:
        axis, residual = _fit_plane_axis(n)
    else:
        axis = np.asarray(chiral_axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        residual = float(np.max(np.abs(n @ axis)))
    if residual > plane_tol:
        raise ChiralSymmetryError(
            f"Bloch vectors leave the chiral plane by {residual:.3e}"
        )
    # orthonormal in-plane frame, right-handed about the axis
    e1 = n[0] - (n[0] @ axis) * axis
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    phases = np.arctan2(n @ e2, n @ e1)
    steps = wrap_angle(np.diff(phases, append=phases[:1]))
    total = float(np.sum(steps)) / (2.0 * np.pi)
    if abs(total - round(total)) > integral_tol:
        raise ChiralSymmetryError(
            f"winding integral {total:.4f} is not integer within {integral_tol}"
        )
    return int(round(total))


@dataclass(frozen=True, eq=False)
class SymmetryFlags:
    """Residuals and booleans for the walk's discrete symmetries.

    particle_hole checks that complex conjugation maps the step matrix
    at k onto the one at -k; chiral checks that all Bloch vectors lie
    in one fixed plane. The time-reversal flag is the conjunction.
    """

    particle_hole: bool
    chiral: bool
    time_reversal: bool
    phs_residual: float
    chiral_residual: float
    chiral_axis: np.ndarray | None


def symmetry_flags_from_momentum(step_of_k, n_k: int = 256, tol: float = 1e-6) -> SymmetryFlags:
    """Symmetry diagnostics for any 2x2 momentum-space step family."""
    ks = _k_grid(n_k)
    mats = [np.asarray(step_of_k(k), dtype=complex) for k in ks]
    phs_residual = 0.0
    for i in range(n_k):
        j = (n_k - i) % n_k  # index of -k on this grid
        phs_residual = max(phs_residual, float(np.max(np.abs(np.conj(mats[j]) - mats[i]))))
    vecs = []
    for u in mats:
        _, n, ok = _bloch_vector(u, BLOCH_GAP_TOL)
        if ok:
            vecs.append(n / np.linalg.norm(n))
    if len(vecs) >= 3:
        axis, chiral_residual = _fit_plane_axis(np.array(vecs))
    else:
        axis, chiral_residual = None, float("nan")
    phs = phs_residual <= tol
    chiral = bool(chiral_residual <= tol) if np.isfinite(chiral_residual) else False
    return SymmetryFlags(
        particle_hole=phs,
        chiral=chiral,
        time_reversal=phs and chiral,
        phs_residual=phs_residual,
        chiral_residual=chiral_residual,
        chiral_axis=axis,
    )


def symmetry_check(spec: WalkSpec, n_k: int = 256, tol: float = 1e-6) -> SymmetryFlags:
    """Symmetry diagnostics of a homogeneous periodic walk."""
    if spec.lattice.dimension != 1:
        raise ValidationError("symmetry check is 1D only")
    theta1, theta2 = spec.coins.homogeneous_values()
    return symmetry_flags_from_momentum(
        lambda k: momentum_step_matrix(theta1, theta2, k, spec.protocol),
        n_k=n_k, tol=tol,
    )


@dataclass(frozen=True, eq=False)
class TopologyReport:
    """Winding, gaps, and symmetry flags for one parameter point."""

    winding: int | None
    gap0: float
    gap_pi: float
    gapless: bool
    flags: SymmetryFlags


def topology_report(spec: WalkSpec, n_k: int = 256) -> TopologyReport:
    bloch = bloch_decompose(spec, n_k=n_k)
    flags = symmetry_check(spec, n_k=n_k)
    gapless = bloch.min_gap <= WINDING_MIN_GAP
    winding = None if gapless else winding_number(bloch)
    return TopologyReport(
        winding=winding, gap0=bloch.gap0, gap_pi=bloch.gap_pi,
        gapless=gapless, flags=flags,
    )


@dataclass(frozen=True)
class PhaseCell:
    theta1: float
    theta2: float
    winding: int | None
    gap0: float
    gap_pi: float
    gapless: bool


def phase_diagram(theta1_values, theta2_values, protocol: str = "split_step",
                  n_k: int = 128) -> list:
    """Winding map over a rectangular (theta1, theta2) grid.

    Cells whose gap to 0 or pi falls below the winding threshold are
    marked gapless and carry winding None instead of a fabricated
    integer.
    """
    theta1_values = np.atleast_1d(np.asarray(theta1_values, dtype=float))
    theta2_values = np.atleast_1d(np.asarray(theta2_values, dtype=float))
    if theta1_values.size < 8 or theta2_values.size < 8:
        raise ValidationError("phase diagram needs at least 8 points per axis")
    lat = LatticeSpec(1, 2, "periodic")
    cells = []
    for t1 in theta1_values:
        for t2 in theta2_values:
            spec = WalkSpec(lat, CoinProfile.build(lat, t1, t2), protocol)
            bloch = bloch_decompose(spec, n_k=n_k)
            if bloch.min_gap <= WINDING_MIN_GAP:
                cells.append(PhaseCell(float(t1), float(t2), None,
                                       bloch.gap0, bloch.gap_pi, True))
            else:
                w = winding_number(bloch)
                cells.append(PhaseCell(float(t1), float(t2), w,
                                       bloch.gap0, bloch.gap_pi, False))
    return cells


# ---------------------------------------------------------------------------
# real-space edge diagnostics


def domain_walls(spec: WalkSpec) -> tuple:
    """Bond positions where theta2 changes, for a two-domain ring profile.

    Returns wall positions as half-integers x - 0.5 (the bond between
    sites x-1 and x). Requires exactly two walls.
    """
    if spec.lattice.dimension != 1 or not spec.lattice.is_periodic:
        raise ValidationError("domain walls are defined on periodic chains")
    t2 = spec.coins.theta2
    jumps = np.nonzero(np.abs(t2 - np.roll(t2, 1)) > 1e-12)[0]
    if len(jumps) != 2:
        raise ValidationError(
            f"expected a two-domain theta2 profile, found {len(jumps)} walls"
        )
    if np.ptp(spec.coins.theta1) > 1e-12:
        raise ValidationError("theta1 must be uniform across the two domains")
    return tuple(float(x) - 0.5 for x in jumps)


def _ring_distance(x, wall: float, length: int):
    d = np.abs(np.asarray(x, dtype=float) - wall)
    return np.minimum(d, length - d)


def _window_mask(length: int, wall: float, window: int) -> np.ndarray:
    return _ring_distance(np.arange(length), wall, length) < window / 2.0


@dataclass(frozen=True, eq=False)
class EdgeState:
    """One certified (or ambiguous) localized eigenstate."""

    quasienergy: float
    wall: float
    window_mass: float
    participation_ratio: float
    decay_length: float
    wall_masses: tuple
    amplitudes: np.ndarray  # (L, 2), read-only


@dataclass(frozen=True, eq=False)
class EdgeCertificate:
    """Certified edge content of a two-domain walk unitary."""

    walls: tuple
    states: tuple      # certified, wall-resolved
    ambiguous: tuple   # localized but mass split across both walls
    counts: tuple      # certified states per wall, same order as walls
    window: int


def _decay_length(p: np.ndarray, wall: float, length: int) -> float:
    """Per-site e-folding length of the probability tail, NaN if too short."""
    d = _ring_distance(np.arange(length), wall, length)
    keep = (p > p.max() * 1e-12) & (d <= length / 4.0)
    if keep.sum() < 3:
        return float("nan")
    slope = np.polyfit(d[keep], np.log(p[keep]), 1)[0]
    if slope >= 0:
        return float("inf")
    return float(-1.0 / slope)


def find_edge_states(
    spec: WalkSpec,
    window: int = 10,
    pr_fraction: float = 0.25,
    mass_threshold: float = 0.9,
    quasienergy_tol: float = 1e-8,
    require_quasienergy: bool = True,
    cluster_tol: float = 1e-7,
    cap: int = DENSE_CAP,
) -> EdgeCertificate:
    """Diagonalize the one-step unitary and certify wall-localized states.

    A state is certified when its participation ratio is below
    pr_fraction * sites, at least mass_threshold of its probability
    sits within `window` sites of a single wall, and (unless relaxed
    for noisy spectra) its quasienergy is within quasienergy_tol of 0
    or pi. Localized states whose mass is split across both walls are
    reported separately as ambiguous rather than dropped.

    Hybridized pairs that are numerically degenerate are rotated into
    wall-resolved combinations before certification.
    """
    walls = domain_walls(spec)
    length = spec.lattice.extent[0]
    u = materialize_unitary(spec, cap=cap)
    t, q = schur(u, output="complex")
    phases = -np.angle(np.diag(t))

    # group numerically degenerate quasienergies (circular distance)
    order = np.argsort(phases)
    clusters = []
    current = [order[0]]
    for idx in order[1:]:
        if phases[idx] - phases[current[-1]] < cluster_tol:
            current.append(idx)
        else:
            clusters.append(current)
            current = [idx]
    clusters.append(current)
    # the branch point: first and last cluster may wrap across pi/-pi
    if len(clusters) > 1:
        lo, hi = clusters[0], clusters[-1]
        if (phases[lo[0]] + 2 * np.pi) - phases[hi[-1]] < cluster_tol:
            clusters[0] = hi + lo
            clusters.pop()

    w_mask = _window_mask(length, walls[0], window)
    weight = np.repeat(w_mask.astype(float), 2)

    vectors = np.empty_like(q)
    energies = np.empty(length * 2)
    col = 0
    for cluster in clusters:
        block = q[:, cluster]
        if len(cluster) > 1:
            # rotate the degenerate block so each vector commits to a wall
            gram = (block.conj() * weight[:, None]).T @ block
            _, rot = np.linalg.eigh(gram)
            block = block @ rot
        for i in range(block.shape[1]):
            v = block[:, i]
            vectors[:, col] = v
            energies[col] = -np.angle(np.vdot(v, u @ v))
            col += 1

    pr_cap = pr_fraction * length
    states, ambiguous = [], []
    for i in range(length * 2):
        v = vectors[:, i].reshape(length, 2)
        p = (v.real**2 + v.imag**2).sum(axis=1)
        pr = 1.0 / float(np.sum(p**2))
        if pr >= pr_cap:
            continue
        masses = tuple(float(p[_window_mask(length, w, window)].sum()) for w in walls)
        e = float(energies[i])
        dist_special = min(abs(e), np.pi - abs(e))
        if require_quasienergy and dist_special > quasienergy_tol:
            continue
        best = int(np.argmax(masses))
        amp = v.copy()
        amp.setflags(write=False)
        record = EdgeState(
            quasienergy=e,
            wall=walls[best],
            window_mass=masses[best],
            participation_ratio=pr,
            decay_length=_decay_length(p, walls[best], length),
            wall_masses=masses,
            amplitudes=amp,
        )
        if masses[best] >= mass_threshold:
            states.append(record)
        elif sum(masses) >= mass_threshold:
            ambiguous.append(record)
    states.sort(key=lambda s: (s.wall, s.quasienergy))
    counts = tuple(sum(1 for s in states if s.wall == w) for w in walls)
    return EdgeCertificate(
        walls=walls, states=tuple(states), ambiguous=tuple(ambiguous),
        counts=counts, window=window,
    )


@dataclass(frozen=True, eq=False)
class BoundaryWalkResult:
    """Outcome of launching a walker at a domain wall."""

    distribution: np.ndarray
    retained: float
    wall: float
    launch_site: int
    n_steps: int
    window: int


def boundary_walk_experiment(
    spec: WalkSpec,
    n_steps: int,
    launch_site: int = None,
    launch_coin=(1.0, 1.0j),
    window: int = 10,
    observer=None,
) -> BoundaryWalkResult:
    """Evolve a localized walker at a wall and report the retained mass.

    retained is the probability within `window` sites of the wall
    nearest the launch site after n_steps.
    """
    walls = domain_walls(spec)
    length = spec.lattice.extent[0]
    if launch_site is None:
        launch_site = int(np.ceil(walls[0]))
    wall = min(walls, key=lambda w: _ring_distance(launch_site, w, length))
    psi = make_localized_state(spec.lattice, launch_site, launch_coin)
    out = evolve(psi, spec, n_steps, observer=observer)
    p = position_distribution(out)
    retained = float(p[_window_mask(length, wall, window)].sum())
    return BoundaryWalkResult(
        distribution=p, retained=retained, wall=wall,
        launch_site=int(launch_site), n_steps=int(n_steps), window=int(window),
    )
