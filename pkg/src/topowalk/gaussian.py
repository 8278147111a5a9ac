"""Gaussian bosonic mode networks: passive and active pairwise couplers.

Conventions, fixed once for the whole package:

- quadrature ordering (x1, p1, x2, p2, ..., xM, pM), hbar = 1, vacuum
  covariance I/2;
- a_j = (x_j + i p_j) / sqrt(2);
- the passive coupler with mixing angle phi sends
  a1 -> cos(phi) a1 - sin(phi) a2 (a real rotation, photon conserving);
- the active coupler with gain parameter chi sends
  a1 -> cosh(chi) a1 + i sinh(chi) a2^dag (two-mode squeezer).

A ModeNetwork is a per-step sequence of coupler layers and mode
relabelings; evolving for `steps` repetitions mirrors the coined walk
when every coupler is passive with phi = theta/2 and the relabelings
shift the two rails oppositely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimulationError, ValidationError

SYMMETRY_TOL = 1e-12
UNCERTAINTY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-10

#: modes with fewer mean photons than this have undefined Q
PHOTON_FLOOR = 1e-12

#: modes dimmer than this are excluded from normalized correlations
CORRELATION_FLOOR = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal form Omega with [[0, 1], [-1, 0]] per mode."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _check_uncertainty(cov: np.ndarray, n_modes: int) -> float:
    herm = cov + 0.5j * symplectic_form(n_modes)
    return float(np.linalg.eigvalsh(herm).min())


@dataclass(frozen=True, eq=False)
class GaussianState:
    """First and second quadrature moments of a bosonic Gaussian state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).copy()
        cov = np.asarray(self.cov, dtype=float).copy()
        if mean.ndim != 1 or mean.size % 2 != 0 or mean.size == 0:
            raise ValidationError("mean must have even positive length")
        if cov.shape != (mean.size, mean.size):
            raise ValidationError("covariance shape does not match the mean")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValidationError("moments must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise ValidationError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if _check_uncertainty(cov, mean.size // 2) < -UNCERTAINTY_TOL:
            raise ValidationError("covariance violates the uncertainty relation")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.size // 2

    @property
    def alpha(self) -> np.ndarray:
        """Complex mode amplitudes (m_x + i m_p) / sqrt(2)."""
        return (self.mean[0::2] + 1j * self.mean[1::2]) / np.sqrt(2.0)

    def purity(self) -> float:
        return float(1.0 / np.sqrt(np.linalg.det(2.0 * self.cov)))

    def reduced(self, modes) -> "GaussianState":
        modes = list(modes)
        if len(set(modes)) != len(modes):
            raise ValidationError("duplicate mode indices")
        if any(m < 0 or m >= self.n_modes for m in modes):
            raise ValidationError("mode index out of range")
        idx = np.array([2 * m + q for m in modes for q in (0, 1)])
        return GaussianState(self.mean[idx], self.cov[np.ix_(idx, idx)])

    @classmethod
    def vacuum(cls, n_modes: int) -> "GaussianState":
        return cls(np.zeros(2 * n_modes), 0.5 * np.eye(2 * n_modes))

    @classmethod
    def coherent(cls, alphas) -> "GaussianState":
        alphas = np.atleast_1d(np.asarray(alphas, dtype=complex))
        mean = np.empty(2 * alphas.size)
        mean[0::2] = np.sqrt(2.0) * alphas.real
        mean[1::2] = np.sqrt(2.0) * alphas.imag
        return cls(mean, 0.5 * np.eye(2 * alphas.size))

    @classmethod
    def squeezed_vacuum(cls, r, n_modes: int = None) -> "GaussianState":
        """Product of single-mode squeezed vacua; r > 0 squeezes x."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if n_modes is not None and r.size == 1:
            r = np.full(n_modes, r[0])
        diag = np.empty(2 * r.size)
        diag[0::2] = 0.5 * np.exp(-2.0 * r)
        diag[1::2] = 0.5 * np.exp(2.0 * r)
        return cls(np.zeros(2 * r.size), np.diag(diag))

    @classmethod
    def thermal(cls, nbar) -> "GaussianState":
        nbar = np.atleast_1d(np.asarray(nbar, dtype=float))
        if np.any(nbar < 0):
            raise ValidationError("thermal occupation must be nonnegative")
        diag = np.repeat(nbar + 0.5, 2)
        return cls(np.zeros(2 * nbar.size), np.diag(diag))


@dataclass(frozen=True, eq=False)
class SymplecticOp:
    """Linear quadrature map, optionally with a displacement."""

    matrix: np.ndarray
    displacement: np.ndarray = None

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float).copy()
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2 != 0:
            raise ValidationError("symplectic matrix must be even-dimensional square")
        omega = symplectic_form(s.shape[0] // 2)
        residual = float(np.max(np.abs(s @ omega @ s.T - omega)))
        if residual > SYMPLECTIC_TOL:
            raise ValidationError(
                f"matrix is not symplectic: |S Omega S^T - Omega| = {residual:.3e}"
            )
        d = self.displacement
        d = np.zeros(s.shape[0]) if d is None else np.asarray(d, dtype=float).copy()
        if d.shape != (s.shape[0],):
            raise ValidationError("displacement length does not match the matrix")
        s.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "matrix", s)
        object.__setattr__(self, "displacement", d)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def __matmul__(self, other: "SymplecticOp") -> "SymplecticOp":
        if self.n_modes != other.n_modes:
            raise ValidationError("cannot compose ops on different mode counts")
        return SymplecticOp(
            self.matrix @ other.matrix,
            self.matrix @ other.displacement + self.displacement,
        )


def apply(op: SymplecticOp, state: GaussianState) -> GaussianState:
    """Gaussian update mean -> S mean + d, cov -> S cov S^T."""
    if op.n_modes != state.n_modes:
        raise ValidationError(
            f"op acts on {op.n_modes} modes, state has {state.n_modes}"
        )
    mean = op.matrix @ state.mean + op.displacement
    cov = op.matrix @ state.cov @ op.matrix.T
    cov = 0.5 * (cov + cov.T)
    if _check_uncertainty(cov, state.n_modes) < -UNCERTAINTY_TOL:
        # a symplectic map cannot leave the physical cone
        raise SimulationError("internal: update produced an unphysical state")
    return GaussianState(mean, cov)


def coupler_symplectic(chi: float, kind: str) -> SymplecticOp:
    """Two-mode coupler: 'active' squeezer gain or 'passive' mixing angle.

    The passive angle phi mirrors a coin rotation R(theta) at
    phi = theta / 2.
    """
    chi = float(chi)
    if not np.isfinite(chi):
        raise ValidationError("coupling parameter must be finite and real")
    if kind == "active":
        c, s = np.cosh(chi), np.sinh(chi)
        m = np.array([
            [c, 0.0, 0.0, s],
            [0.0, c, s, 0.0],
            [0.0, s, c, 0.0],
            [s, 0.0, 0.0, c],
        ])
    elif kind == "passive":
        c, s = np.cos(chi), np.sin(chi)
        m = np.array([
            [c, 0.0, -s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, s, 0.0, c],
        ])
    else:
        raise ValidationError(f"unknown coupler kind {kind!r}")
    return SymplecticOp(m)


def phase_shift_symplectic(phi: float) -> SymplecticOp:
    """Single-mode rotation a -> exp(i phi) a."""
    c, s = np.cos(phi), np.sin(phi)
    return SymplecticOp(np.array([[c, -s], [s, c]]))


def embed_pair(op: SymplecticOp, n_modes: int, i: int, j: int) -> np.ndarray:
    """Embed a two-mode symplectic matrix at modes (i, j) of n_modes."""
    if op.n_modes != 2:
        raise ValidationError("embed_pair expects a two-mode op")
    if i == j or not (0 <= i < n_modes and 0 <= j < n_modes):
        raise ValidationError("invalid mode pair")
    s = np.eye(2 * n_modes)
    idx = np.array([2 * i, 2 * i + 1, 2 * j, 2 * j + 1])
    s[np.ix_(idx, idx)] = op.matrix
    return s


def embed_single(op: SymplecticOp, n_modes: int, mode: int) -> np.ndarray:
    """Embed a one-mode symplectic matrix at the given mode."""
    if op.n_modes != 1:
        raise ValidationError("embed_single expects a one-mode op")
    if not 0 <= mode < n_modes:
        raise ValidationError("mode index out of range")
    s = np.eye(2 * n_modes)
    s[2 * mode : 2 * mode + 2, 2 * mode : 2 * mode + 2] = op.matrix
    return s


@dataclass(frozen=True, eq=False)
class CouplerLayer:
    """Disjoint two-mode couplers applied simultaneously."""

    pairs: tuple
    strengths: np.ndarray
    kind: str

    def __init__(self, pairs, strengths, kind: str):
        pairs = tuple((int(i), int(j)) for i, j in pairs)
        flat = [m for p in pairs for m in p]
        if len(set(flat)) != len(flat):
            raise ValidationError("coupler pairs within a layer must be disjoint")
        strengths = np.atleast_1d(np.asarray(strengths, dtype=float))
        if strengths.size == 1:
            strengths = np.full(len(pairs), strengths[0])
        if strengths.size != len(pairs):
            raise ValidationError("one strength per pair required")
        if kind not in ("active", "passive"):
            raise ValidationError(f"unknown coupler kind {kind!r}")
        strengths = strengths.copy()
        strengths.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "strengths", strengths)
        object.__setattr__(self, "kind", kind)


@dataclass(frozen=True, eq=False)
class RelabelLayer:
    """Mode permutation; output mode j receives input mode perm[j]."""

    perm: np.ndarray

    def __init__(self, perm):
        perm = np.asarray(perm, dtype=int).copy()
        if sorted(perm.tolist()) != list(range(perm.size)):
            raise ValidationError("relabeling must be a permutation of all modes")
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)


@dataclass(frozen=True, eq=False)
class ModeNetwork:
    """Fixed per-step layer sequence repeated for a number of steps."""

    n_modes: int
    layers: tuple
    steps: int

    def __init__(self, n_modes: int, layers, steps: int = 1):
        n_modes = int(n_modes)
        steps = int(steps)
        if n_modes < 1:
            raise ValidationError("network needs at least one mode")
        if steps < 0:
            raise ValidationError("step count must be nonnegative")
        layers = tuple(layers)
        for layer in layers:
            if isinstance(layer, CouplerLayer):
                if any(m >= n_modes for p in layer.pairs for m in p):
                    raise ValidationError("coupler index outside the mode range")
            elif isinstance(layer, RelabelLayer):
                if layer.perm.size != n_modes:
                    raise ValidationError("relabeling size does not match the network")
            else:
                raise ValidationError(f"unsupported layer type {type(layer).__name__}")
        object.__setattr__(self, "n_modes", n_modes)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "steps", steps)

    def is_passive(self) -> bool:
        return all(
            layer.kind == "passive"
            for layer in self.layers
            if isinstance(layer, CouplerLayer)
        )

    def scaled_active(self, scale: float) -> "ModeNetwork":
        """Copy with every active coupling multiplied by scale."""
        layers = []
        for layer in self.layers:
            if isinstance(layer, CouplerLayer) and layer.kind == "active":
                layers.append(
                    CouplerLayer(layer.pairs, layer.strengths * float(scale), "active")
                )
            else:
                layers.append(layer)
        return ModeNetwork(self.n_modes, layers, self.steps)

    def total_active_coupling(self) -> float:
        """Sum of |chi| over every active coupler application."""
        per_step = sum(
            float(np.sum(np.abs(layer.strengths)))
            for layer in self.layers
            if isinstance(layer, CouplerLayer) and layer.kind == "active"
        )
        return per_step * self.steps

    def total_gain(self) -> float:
        """Product of cosh(chi) over every active coupler application."""
        per_step = 1.0
        for layer in self.layers:
            if isinstance(layer, CouplerLayer) and layer.kind == "active":
                per_step *= float(np.prod(np.cosh(layer.strengths)))
        return per_step**self.steps


def layer_symplectic(layer, n_modes: int) -> np.ndarray:
    if isinstance(layer, CouplerLayer):
        s = np.eye(2 * n_modes)
        for (i, j), chi in zip(layer.pairs, layer.strengths):
            s = embed_pair(coupler_symplectic(chi, layer.kind), n_modes, i, j) @ s
        return s
    if isinstance(layer, RelabelLayer):
        idx = np.empty(2 * n_modes, dtype=int)
        idx[0::2] = 2 * layer.perm
        idx[1::2] = 2 * layer.perm + 1
        return np.eye(2 * n_modes)[idx]
    raise ValidationError(f"unsupported layer type {type(layer).__name__}")


def step_symplectic(net: ModeNetwork) -> SymplecticOp:
    """One full step (all layers in order) as a single op."""
    s = np.eye(2 * net.n_modes)
    for layer in net.layers:
        s = layer_symplectic(layer, net.n_modes) @ s
    return SymplecticOp(s)


def network_symplectic(net: ModeNetwork) -> SymplecticOp:
    s = step_symplectic(net)
    return SymplecticOp(np.linalg.matrix_power(s.matrix, net.steps))


def attenuate(state: GaussianState, loss: float) -> GaussianState:
    """Uniform pure-loss channel; `loss` is the fraction of energy lost."""
    if not 0.0 <= loss <= 1.0:
        raise ValidationError("loss must lie in [0, 1]")
    if loss == 0.0:
        return state
    eta = 1.0 - loss
    cov = eta * state.cov + (1.0 - eta) * 0.5 * np.eye(2 * state.n_modes)
    return GaussianState(np.sqrt(eta) * state.mean, cov)


def dephase(state: GaussianState, sigma: float) -> GaussianState:
    """Independent Gaussian phase jitter of std sigma on every mode.

    Moments are updated exactly for the jitter-averaged ensemble:
    means shrink by exp(-sigma^2/2), cross-mode second moments by
    exp(-sigma^2), and each mode's own second-moment block relaxes
    toward its isotropic part at rate exp(-2 sigma^2). Higher moments
    of the averaged state are not Gaussian; downstream photon
    statistics treat it as the Gaussian state with these moments.
    """
    if sigma < 0:
        raise ValidationError("dephasing std must be nonnegative")
    if sigma == 0.0:
        return state
    m = state.n_modes
    second = state.cov + np.outer(state.mean, state.mean)
    damped = np.exp(-sigma**2) * second
    for i in range(m):
        b = second[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]
        iso = 0.5 * np.trace(b) * np.eye(2)
        damped[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = (
            iso + np.exp(-2.0 * sigma**2) * (b - iso)
        )
    mean = np.exp(-(sigma**2) / 2.0) * state.mean
    return GaussianState(mean, damped - np.outer(mean, mean))


@dataclass(frozen=True, eq=False)
class NetworkRun:
    """Final state plus the per-step total photon trace."""

    state: GaussianState
    photon_trace: np.ndarray  # length steps + 1, entry 0 is the input


def network_evolve(
    net: ModeNetwork,
    state: GaussianState,
    loss: float = 0.0,
    dephasing: float = 0.0,
) -> NetworkRun:
    """Run the network for its configured steps.

    Decoherence (uniform loss and phase jitter) acts once per step,
    after that step's layers. Zero levels reduce exactly to the
    unitary evolution.
    """
    if state.n_modes != net.n_modes:
        raise ValidationError(
            f"input has {state.n_modes} modes, network expects {net.n_modes}"
        )
    step = step_symplectic(net)
    trace = np.empty(net.steps + 1)
    trace[0] = total_photons(state)
    for n in range(net.steps):
        state = apply(step, state)
        if loss:
            state = attenuate(state, loss)
        if dephasing:
            state = dephase(state, dephasing)
        trace[n + 1] = total_photons(state)
    return NetworkRun(state=state, photon_trace=trace)


# ---------------------------------------------------------------------------
# moment extraction and photon statistics


def _ladder_moments(state: GaussianState):
    """(A, B, alpha): A_ij = <da_i^dag da_j>, B_ij = <da_i da_j>."""
    v = state.cov
    xx = v[0::2, 0::2]
    pp = v[1::2, 1::2]
    xp = v[0::2, 1::2]
    px = v[1::2, 0::2]
    m = state.n_modes
    a = 0.5 * (xx + pp - np.eye(m)) + 0.5j * (xp - px)
    b = 0.5 * (xx - pp) + 0.5j * (xp + px)
    return a, b, state.alpha


def mean_photons(state: GaussianState) -> np.ndarray:
    a, _, alpha = _ladder_moments(state)
    return np.real(np.diag(a)) + np.abs(alpha) ** 2


def total_photons(state: GaussianState) -> float:
    return float(mean_photons(state).sum())


@dataclass(frozen=True, eq=False)
class PhotonStatistics:
    mean_n: np.ndarray
    var_n: np.ndarray
    mandel_q: np.ndarray  # NaN where the mode is essentially empty


def photon_statistics(state: GaussianState) -> PhotonStatistics:
    """Per-mode photon mean, variance, and Mandel Q via Wick's theorem."""
    a, b, alpha = _ladder_moments(state)
    ad = np.real(np.diag(a))
    bd = np.diag(b)
    mean_n = ad + np.abs(alpha) ** 2
    var_n = (
        np.abs(alpha) ** 2 * (2.0 * ad + 1.0)
        + 2.0 * np.real(np.conj(alpha) ** 2 * bd)
        + ad**2
        + ad
        + np.abs(bd) ** 2
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(mean_n > PHOTON_FLOOR, var_n / mean_n - 1.0, np.nan)
    return PhotonStatistics(mean_n=mean_n, var_n=var_n, mandel_q=q)


def _pair_fourth_moment(a, b, alpha, i, j):
    """<a_i^dag a_j^dag a_j a_i> for i != j, Wick-expanded."""
    return np.real(
        np.abs(alpha[i]) ** 2 * np.abs(alpha[j]) ** 2
        + np.real(a[i, i]) * np.abs(alpha[j]) ** 2
        + np.real(a[j, j]) * np.abs(alpha[i]) ** 2
        + 2.0 * np.real(a[i, j] * alpha[i] * np.conj(alpha[j]))
        + 2.0 * np.real(b[i, j] * np.conj(alpha[i]) * np.conj(alpha[j]))
        + np.real(a[i, i]) * np.real(a[j, j])
        + np.abs(a[i, j]) ** 2
        + np.abs(b[i, j]) ** 2
    )


def log_negativity(state: GaussianState, i: int, j: int) -> float:
    """Entanglement of the (i, j) bipartition of the reduced two-mode state."""
    red = state.reduced([i, j])
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    vt = flip @ red.cov @ flip
    omega = symplectic_form(2)
    nu = np.abs(np.linalg.eigvals(1j * omega @ vt))
    nu_min = float(np.sort(nu)[0])
    return max(0.0, -np.log(2.0 * nu_min))


@dataclass(frozen=True, eq=False)
class CorrelationReport:
    """Normalized first/second-order coherences and nonclassicality markers.

    Entries of g1 and g2 are NaN where either mode is dimmer than the
    correlation floor; `defined` marks the trustworthy entries.
    """

    mean_n: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    mandel_q: np.ndarray
    log_neg: np.ndarray
    defined: np.ndarray
    pairs: tuple


def correlations(state: GaussianState, pairs=None) -> CorrelationReport:
    """g1, g2, Mandel Q, and pairwise log-negativity of a Gaussian state."""
    m = state.n_modes
    if pairs is None:
        pairs = tuple((i, j) for i in range(m) for j in range(i + 1, m))
    else:
        pairs = tuple((int(i), int(j)) for i, j in pairs)
        for i, j in pairs:
            if not (0 <= i < m and 0 <= j < m) or i == j:
                raise ValidationError(f"invalid mode pair ({i}, {j})")
    a, b, alpha = _ladder_moments(state)
    stats = photon_statistics(state)
    n = stats.mean_n
    bright = n > CORRELATION_FLOOR
    defined = np.outer(bright, bright)

    adag_a = a + np.outer(np.conj(alpha), alpha)
    denom = np.sqrt(np.outer(n, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = np.where(defined, adag_a / denom, np.nan + 0j)
        g1[np.diag_indices(m)] = np.where(bright, 1.0, np.nan)

        g2 = np.full((m, m), np.nan)
        diag_fourth = stats.var_n + n**2 - n
        g2[np.diag_indices(m)] = np.where(bright, diag_fourth / n**2, np.nan)
        for i in range(m):
            for j in range(i + 1, m):
                if defined[i, j]:
                    val = _pair_fourth_moment(a, b, alpha, i, j) / (n[i] * n[j])
                    g2[i, j] = val
                    g2[j, i] = val

    log_neg = np.array([log_negativity(state, i, j) for i, j in pairs])
    return CorrelationReport(
        mean_n=n, g1=g1, g2=g2, mandel_q=stats.mandel_q,
        log_neg=log_neg, defined=defined, pairs=pairs,
    )


# ---------------------------------------------------------------------------
# walk-mirroring builders


def rail_shift_permutation(n_sites: int, which: str = "both") -> np.ndarray:
    """Permutation moving rail-0 modes one site up and/or rail-1 one down.

    Mode layout is 2*site + rail; output mode j takes input perm[j].
    """
    perm = np.arange(2 * n_sites)
    sites = np.arange(n_sites)
    if which in ("both", "up_only"):
        perm[2 * ((sites + 1) % n_sites)] = 2 * sites
    if which in ("both", "down_only"):
        perm[2 * ((sites - 1) % n_sites) + 1] = 2 * sites + 1
    if which not in ("both", "up_only", "down_only"):
        raise ValidationError(f"unknown shift selector {which!r}")
    return perm


def network_from_walk(spec) -> ModeNetwork:
    """Passive two-rail network whose mean field reproduces a coined walk.

    Each site's coin R(theta) becomes a passive coupler with mixing
    angle theta/2 on that site's rail pair; translations become rail
    relabelings. 1D periodic walks only.
    """
    lat = spec.lattice
    if lat.dimension != 1 or not lat.is_periodic:
        raise ValidationError("mode networks mirror 1D periodic walks only")
    length = lat.extent[0]
    site_pairs = tuple((2 * x, 2 * x + 1) for x in range(length))
    coin1 = CouplerLayer(site_pairs, spec.coins.theta1 / 2.0, "passive")
    if spec.protocol == "simple":
        layers = [coin1, RelabelLayer(rail_shift_permutation(length, "both"))]
    elif spec.protocol == "split_step":
        coin2 = CouplerLayer(site_pairs, spec.coins.theta2 / 2.0, "passive")
        layers = [
            coin1,
            RelabelLayer(rail_shift_permutation(length, "up_only")),
            coin2,
            RelabelLayer(rail_shift_permutation(length, "down_only")),
        ]
    else:
        raise ValidationError(f"no mode network for protocol {spec.protocol!r}")
    return ModeNetwork(2 * length, layers, spec.steps)


def walk_input_state(field, photon_number: float = 1.0) -> GaussianState:
    """Coherent input whose amplitudes copy a spinor field."""
    if field.lattice.dimension != 1:
        raise ValidationError("walk inputs are built from 1D fields")
    if photon_number <= 0:
        raise ValidationError("photon number must be positive")
    amps = field.amplitudes.reshape(-1)  # (site, rail) row-major = 2x + r
    return GaussianState.coherent(np.sqrt(photon_number) * amps)


def su11_chain(n_sites: int, chi: float, steps: int, kind: str = "active") -> ModeNetwork:
    """Brickwork chain: nearest-neighbor couplers then a cyclic shift."""
    if n_sites < 2 or n_sites % 2:
        raise ValidationError("chain needs an even number of modes")
    pairs = tuple((2 * i, 2 * i + 1) for i in range(n_sites // 2))
    shift = RelabelLayer(np.roll(np.arange(n_sites), 1))
    return ModeNetwork(n_sites, [CouplerLayer(pairs, chi, kind), shift], steps)


# ---------------------------------------------------------------------------
# scans

FUNCTIONALS = ("min_mandel_q", "max_logneg", "quadrature_squeezing")


def _nonclassicality(state: GaussianState, functional: str) -> float:
    """Positive while the configured quantum signature is present."""
    if functional == "min_mandel_q":
        q = photon_statistics(state).mandel_q
        if np.all(np.isnan(q)):
            return float("-inf")
        return -float(np.nanmin(q))
    if functional == "max_logneg":
        m = state.n_modes
        best = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                best = max(best, log_negativity(state, i, j))
        return best
    if functional == "quadrature_squeezing":
        return 0.5 - float(np.linalg.eigvalsh(state.cov).min())
    raise ValidationError(
        f"unknown functional {functional!r}; choose from {FUNCTIONALS}"
    )


@dataclass(frozen=True, eq=False)
class GainScanResult:
    """Nonclassicality-vs-gain curve and the crossing estimate, if any."""

    scales: np.ndarray
    chi_total: np.ndarray
    gain: np.ndarray
    value: np.ndarray      # selected functional, positive = nonclassical
    min_q: np.ndarray
    max_logneg: np.ndarray
    crossed: np.ndarray    # per grid point, selected functional gone
    functional: str
    critical_gain: float   # NaN when none found
    critical_scale: float
    bracket: tuple         # (scale_lo, scale_hi) around the crossing
    none_found: bool
    non_monotone: bool


def _scan_point(net, scale, state, loss, dephasing):
    scaled = net.scaled_active(scale)
    out = network_evolve(scaled, state, loss=loss, dephasing=dephasing).state
    return scaled, out


def gain_scan(
    net: ModeNetwork,
    scales,
    input_state: GaussianState = None,
    functional: str = "min_mandel_q",
    loss: float = 0.0,
    dephasing: float = 0.0,
    refine_iters: int = 40,
) -> GainScanResult:
    """Sweep the active-coupling scale and locate the loss of nonclassicality.

    The grid must be strictly increasing. When the functional changes
    sign exactly once, the crossing is refined by bisection between the
    bracketing grid points; multiple sign changes widen the reported
    bracket to cover them all and set non_monotone.
    """
    scales = np.asarray(scales, dtype=float)
    if scales.ndim != 1 or scales.size < 2:
        raise ValidationError("scan needs a grid of at least 2 scales")
    if np.any(np.diff(scales) <= 0):
        raise ValidationError("scan grid must be strictly increasing")
    if functional not in FUNCTIONALS:
        raise ValidationError(
            f"unknown functional {functional!r}; choose from {FUNCTIONALS}"
        )
    state = GaussianState.vacuum(net.n_modes) if input_state is None else input_state

    chi_total = np.empty(scales.size)
    gain = np.empty(scales.size)
    value = np.empty(scales.size)
    min_q = np.empty(scales.size)
    max_ln = np.empty(scales.size)
    for idx, scale in enumerate(scales):
        scaled, out = _scan_point(net, scale, state, loss, dephasing)
        chi_total[idx] = scaled.total_active_coupling()
        gain[idx] = scaled.total_gain()
        value[idx] = _nonclassicality(out, functional)
        q = photon_statistics(out).mandel_q
        min_q[idx] = np.nan if np.all(np.isnan(q)) else float(np.nanmin(q))
        max_ln[idx] = _nonclassicality(out, "max_logneg")
    positive = value > 0.0
    crossed = ~positive

    sign_changes = [
        i for i in range(scales.size - 1) if positive[i] != positive[i + 1]
    ]
    vanishes = positive.any() and not positive[-1]
    if not vanishes:
        # never nonclassical, or nonclassicality survives the whole grid
        return GainScanResult(
            scales=scales, chi_total=chi_total, gain=gain, value=value,
            min_q=min_q, max_logneg=max_ln, crossed=crossed,
            functional=functional, critical_gain=float("nan"),
            critical_scale=float("nan"), bracket=(float("nan"), float("nan")),
            none_found=True, non_monotone=len(sign_changes) > 1,
        )
    # a clean loss of nonclassicality is exactly one positive-to-negative
    # flip with nothing before it; anything else widens the bracket
    non_monotone = len(sign_changes) > 1
    lo = float(scales[sign_changes[0]])
    hi = float(scales[sign_changes[-1] + 1])
    bracket = (lo, hi)
    if non_monotone:
        crit_scale = 0.5 * (lo + hi)
    else:
        a, b = lo, hi
        for _ in range(refine_iters):
            mid = 0.5 * (a + b)
            _, out = _scan_point(net, mid, state, loss, dephasing)
            if _nonclassicality(out, functional) > 0.0:
                a = mid
            else:
                b = mid
        crit_scale = 0.5 * (a + b)
    crit_gain = net.scaled_active(crit_scale).total_gain()
    return GainScanResult(
        scales=scales, chi_total=chi_total, gain=gain, value=value,
        min_q=min_q, max_logneg=max_ln, crossed=crossed,
        functional=functional, critical_gain=float(crit_gain),
        critical_scale=float(crit_scale), bracket=bracket,
        none_found=False, non_monotone=non_monotone,
    )


@dataclass(frozen=True, eq=False)
class PhaseSweep:
    """Output observables versus the relative phase of a two-mode input."""

    phis: np.ndarray
    total_n: np.ndarray
    g2_pair: np.ndarray
    pair: tuple
    phase_covariant: bool


def phase_sensitivity(
    net: ModeNetwork,
    input_state: GaussianState,
    phis=None,
    mode: int = 1,
    pair: tuple = (0, 1),
) -> PhaseSweep:
    """Sweep a relative input phase and record output energy and g2.

    Passive networks conserve photon number, so their total output
    energy must be phase independent; that check is performed and
    reported as phase_covariant.
    """
    if input_state.n_modes != net.n_modes:
        raise ValidationError("input does not match the network")
    if net.n_modes < 2:
        raise ValidationError("phase sweeps need at least two modes")
    if not (0 <= mode < net.n_modes):
        raise ValidationError("phase mode out of range")
    phis = np.linspace(0.0, 2.0 * np.pi, 61) if phis is None else np.asarray(phis, float)
    i, j = pair
    total = np.empty(phis.size)
    g2p = np.empty(phis.size)
    for idx, phi in enumerate(phis):
        rot = embed_single(phase_shift_symplectic(phi), net.n_modes, mode)
        shifted = apply(SymplecticOp(rot), input_state)
        out = network_evolve(net, shifted).state
        total[idx] = total_photons(out)
        rep = correlations(out, pairs=(pair,))
        g2p[idx] = rep.g2[i, j]
    covariant = bool(np.ptp(total) <= 1e-10 * max(1.0, np.abs(total).max()))
    if net.is_passive() and not covariant:
        raise SimulationError("internal: passive network failed photon conservation")
    return PhaseSweep(
        phis=phis, total_n=total, g2_pair=g2p, pair=(int(i), int(j)),
        phase_covariant=covariant,
    )
