"""Unitary stepping for coined walks in one and two dimensions.

One step of each protocol, applied right to left:

* simple:        T R(theta1)
* split_step:    T_down R(theta2) T_up R(theta1)
* split_step_2d: T_y R(theta2) T_x R(theta1)

T moves the up component one site in the positive direction and the
down component one site in the negative direction along the chosen
axis; T_up / T_down move only the named component. All kernels accept
leading batch axes, so an ensemble of fields can be stepped at once.
"""

from __future__ import annotations

import numpy as np

from .errors import BoundaryOverflowError, DimensionCapError, ValidationError
from .lattice import SpinorField, WalkSpec

#: Dense one-step matrices above this dimension are refused.
DENSE_CAP = 8192

#: Amplitude leaving an open lattice above this magnitude is an error.
_OVERFLOW_TOL = 1e-14


def coin_matrix(theta) -> np.ndarray:
    """2x2 coin rotation, real, with the half-angle convention."""
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rotated(amps: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # theta broadcasts over leading batch axes of amps[..., c]
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    up = c * amps[..., 0] - s * amps[..., 1]
    down = s * amps[..., 0] + c * amps[..., 1]
    return np.stack([up, down], axis=-1)


def _shift_component(comp: np.ndarray, axis: int, step: int, periodic: bool) -> np.ndarray:
    if periodic:
        return np.roll(comp, step, axis=axis)
    edge = [slice(None)] * comp.ndim
    edge[axis] = -1 if step > 0 else 0
    leaving = comp[tuple(edge)]
    if leaving.size and float(np.max(np.abs(leaving))) > _OVERFLOW_TOL:
        raise BoundaryOverflowError(
            "translation would push amplitude off the open lattice edge"
        )
    out = np.roll(comp, step, axis=axis)
    wrapped = [slice(None)] * comp.ndim
    wrapped[axis] = 0 if step > 0 else -1
    out[tuple(wrapped)] = 0.0
    return out


def _translated(amps: np.ndarray, site_axis: int, which: str, periodic: bool) -> np.ndarray:
    """Spin-dependent translation on raw amplitudes.

    site_axis counts from the end of the site block, so -1 is the last
    site axis regardless of any leading batch axes. Up moves +1, down
    moves -1 along that axis.
    """
    # component views drop the coin axis, so site axes become trailing
    # and site_axis addresses them directly
    axis = site_axis
    up, down = amps[..., 0], amps[..., 1]
    if which in ("both", "up_only"):
        up = _shift_component(up, axis, +1, periodic)
    if which in ("both", "down_only"):
        down = _shift_component(down, axis, -1, periodic)
    return np.stack([up, down], axis=-1)


def step_amplitudes(amps: np.ndarray, spec: WalkSpec) -> np.ndarray:
    """One protocol step on a raw amplitude array (batch axes allowed)."""
    periodic = spec.lattice.is_periodic
    t1, t2 = spec.coins.theta1, spec.coins.theta2
    if spec.protocol == "simple":
        amps = _rotated(amps, t1)
        return _translated(amps, -1, "both", periodic)
    if spec.protocol == "split_step":
        amps = _rotated(amps, t1)
        amps = _translated(amps, -1, "up_only", periodic)
        amps = _rotated(amps, t2)
        return _translated(amps, -1, "down_only", periodic)
    # split_step_2d: x shift between the rotations, y shift after
    amps = _rotated(amps, t1)
    amps = _translated(amps, -2, "both", periodic)
    amps = _rotated(amps, t2)
    return _translated(amps, -1, "both", periodic)


def _checked(field: SpinorField, spec: WalkSpec) -> None:
    if field.lattice != spec.lattice:
        raise ValidationError("field lattice does not match walk spec lattice")


def coin_rotate(field: SpinorField, theta) -> SpinorField:
    """Apply the per-site coin rotation R(theta) only."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), field.lattice.shape)
    return SpinorField(field.lattice, _rotated(field.amplitudes, theta))


def spin_translate(field: SpinorField, axis: int = 0, which_coin: str = "both") -> SpinorField:
    """Apply the spin-dependent translation only.

    Parameters
    ----------
    axis : int
        Lattice axis, 0 for x and 1 for y.
    which_coin : str
        "both", "up_only" or "down_only".
    """
    if which_coin not in ("both", "up_only", "down_only"):
        raise ValidationError(f"unknown coin selector {which_coin!r}")
    dim = field.lattice.dimension
    if not 0 <= axis < dim:
        raise ValidationError(f"axis {axis} invalid for a {dim}D lattice")
    site_axis = axis - dim  # -1 for the last site axis, -2 for x in 2D
    out = _translated(field.amplitudes, site_axis, which_coin, field.lattice.is_periodic)
    return SpinorField(field.lattice, out)


def step_simple(field: SpinorField, spec: WalkSpec) -> SpinorField:
    if spec.protocol != "simple":
        raise ValidationError("spec protocol is not 'simple'")
    _checked(field, spec)
    return SpinorField(field.lattice, step_amplitudes(field.amplitudes, spec))


def step_split(field: SpinorField, spec: WalkSpec) -> SpinorField:
    if spec.protocol != "split_step":
        raise ValidationError("spec protocol is not 'split_step'")
    _checked(field, spec)
    return SpinorField(field.lattice, step_amplitudes(field.amplitudes, spec))


def step_split_2d(field: SpinorField, spec: WalkSpec) -> SpinorField:
    if spec.protocol != "split_step_2d":
        raise ValidationError("spec protocol is not 'split_step_2d'")
    _checked(field, spec)
    return SpinorField(field.lattice, step_amplitudes(field.amplitudes, spec))


def step(field: SpinorField, spec: WalkSpec) -> SpinorField:
    """One step of whatever protocol the spec selects."""
    _checked(field, spec)
    return SpinorField(field.lattice, step_amplitudes(field.amplitudes, spec))


def evolve(field: SpinorField, spec: WalkSpec, n_steps: int, observer=None) -> SpinorField:
    """Apply n_steps walk steps.

    observer, if given, is called as observer(step_index, field) after
    every step with step_index running 1..n_steps; use it to record
    intermediate distributions or spreads.
    """
    if n_steps < 0:
        raise ValidationError("step count must be nonnegative")
    _checked(field, spec)
    amps = field.amplitudes
    for n in range(1, n_steps + 1):
        amps = step_amplitudes(amps, spec)
        field = SpinorField(spec.lattice, amps)
        if observer is not None:
            observer(n, field)
    return field


def materialize_unitary(spec: WalkSpec, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense one-step matrix in the basis |site, coin>, flat = 2*site + coin.

    Column j is exactly the step applied to basis vector j. Refuses
    dimensions above ``cap`` so a typo cannot allocate gigabytes.
    """
    dim = 2 * spec.lattice.n_sites
    if dim > cap:
        raise DimensionCapError(f"dense step matrix would be {dim}x{dim}, cap is {cap}")
    # all basis columns at once: identity reshaped to a batch of fields
    basis = np.eye(dim, dtype=np.complex128).reshape((dim,) + spec.lattice.shape + (2,))
    cols = step_amplitudes(basis, spec).reshape(dim, dim)
    return np.ascontiguousarray(cols.T)


class StepOperator:
    """One-step walk unitary bound to a spec, with an optional dense form.

    The dense matrix is built lazily and cached; apply() is always
    matrix-free.
    """

    def __init__(self, spec: WalkSpec, cap: int = DENSE_CAP):
        self.spec = spec
        self.cap = cap
        self._matrix = None

    @property
    def protocol(self) -> str:
        return self.spec.protocol

    def apply(self, field: SpinorField) -> SpinorField:
        return step(field, self.spec)

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = materialize_unitary(self.spec, self.cap)
        return self._matrix
