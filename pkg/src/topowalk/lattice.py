"""Lattice geometry, coin-angle profiles, and two-component fields.

These are the value types every other module consumes. All of them are
frozen after construction (arrays are marked read-only), so instances
can be shared freely between threads and reused across experiments.

Conventions fixed here and relied on everywhere else:

* coin index 0 is "up", coin index 1 is "down"
* 2D sites are indexed 0-based, row-major, i.e. flat = x * Ly + y
* angles are stored reduced to the branch (-pi, pi]
* amplitudes are complex128 regardless of input dtype
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    NormalizationError,
    ShapeMismatchError,
    ValidationError,
)

TWO_PI = 2.0 * np.pi

#: |norm^2 - 1| below this counts as unit norm.
UNIT_NORM_TOL = 1e-10


def wrap_angle(theta):
    """Reduce an angle (or array of angles) to (-pi, pi].

    The branch is closed at +pi so that -pi and +pi map to the same
    stored value and profile comparisons stay exact.
    """
    arr = np.asarray(theta, dtype=float)
    wrapped = -(np.mod(-arr + np.pi, TWO_PI) - np.pi)
    if arr.ndim == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of the site lattice.

    Parameters
    ----------
    dimension : int
        1 or 2.
    extent : int or tuple of int
        Number of sites per axis. A 1D lattice ignores entries past the
        first, so ``LatticeSpec(1, (64, 3))`` is a 64-site chain.
    boundary : str
        "periodic" or "open".
    """

    dimension: int
    extent: tuple
    boundary: str = "periodic"

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValidationError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.boundary not in ("periodic", "open"):
            raise ValidationError(f"unknown boundary {self.boundary!r}")
        ext = self.extent
        if np.isscalar(ext):
            ext = (int(ext),)
        ext = tuple(int(e) for e in ext)[: self.dimension]
        if len(ext) != self.dimension:
            raise ValidationError(
                f"extent {self.extent!r} does not cover {self.dimension} axes"
            )
        if any(e < 2 for e in ext):
            raise ValidationError("every axis needs at least 2 sites")
        object.__setattr__(self, "extent", ext)

    @property
    def shape(self) -> tuple:
        return self.extent

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.extent))

    @property
    def is_periodic(self) -> bool:
        return self.boundary == "periodic"

    def site_tuple(self, site) -> tuple:
        """Normalize a site label to a bounds-checked index tuple."""
        if np.isscalar(site):
            site = (int(site),)
        site = tuple(int(s) for s in site)
        if len(site) != self.dimension:
            raise ValidationError(f"site {site!r} does not address {self.dimension}D")
        for s, e in zip(site, self.extent):
            if not 0 <= s < e:
                raise ValidationError(f"site {site!r} outside lattice extent {self.extent}")
        return site

    def flat_index(self, site) -> int:
        """Row-major flat index of a site."""
        return int(np.ravel_multi_index(self.site_tuple(site), self.extent))


def _as_profile(lattice: LatticeSpec, value) -> np.ndarray:
    if np.isscalar(value):
        arr = np.full(lattice.shape, float(value))
    else:
        arr = np.asarray(value, dtype=float)
    if arr.shape != lattice.shape:
        raise ShapeMismatchError(
            f"profile shape {arr.shape} does not match lattice shape {lattice.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValidationError("coin angles must be finite")
    arr = wrap_angle(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CoinProfile:
    """Per-site rotation angles for the two coin layers.

    theta2 is ignored by the plain one-rotation protocol but is always
    carried so a profile can be reused across protocols.
    """

    theta1: np.ndarray
    theta2: np.ndarray

    def __post_init__(self):
        if self.theta1.shape != self.theta2.shape:
            raise ShapeMismatchError("theta1 and theta2 must have identical shape")

    @classmethod
    def build(cls, lattice: LatticeSpec, theta1, theta2=0.0) -> "CoinProfile":
        """Build a profile from scalars or per-site arrays."""
        return cls(_as_profile(lattice, theta1), _as_profile(lattice, theta2))

    @classmethod
    def two_domain(
        cls,
        lattice: LatticeSpec,
        theta1,
        theta2_a,
        theta2_b,
        boundaries: tuple = None,
    ) -> "CoinProfile":
        """1D profile whose theta2 takes value b on [b0, b1) and a elsewhere.

        The two domain walls therefore sit on the bonds just before
        sites b0 and b1. Defaults to boundaries (0, L // 2).
        """
        if lattice.dimension != 1:
            raise ValidationError("two_domain profiles are one-dimensional")
        length = lattice.extent[0]
        if boundaries is None:
            boundaries = (0, length // 2)
        b0, b1 = (int(b) % length for b in boundaries)
        if b0 == b1:
            raise ValidationError("domain boundaries must be distinct sites")
        theta2 = np.full(length, float(theta2_a))
        if b0 < b1:
            theta2[b0:b1] = float(theta2_b)
        else:
            theta2[b0:] = float(theta2_b)
            theta2[:b1] = float(theta2_b)
        return cls(_as_profile(lattice, theta1), _as_profile(lattice, theta2))

    def homogeneous_values(self) -> tuple:
        """Return (theta1, theta2) scalars, or raise if either varies."""
        t1, t2 = self.theta1.ravel(), self.theta2.ravel()
        if np.ptp(t1) > 1e-12 or np.ptp(t2) > 1e-12:
            raise ValidationError("profile is not homogeneous")
        return float(t1[0]), float(t2[0])


PROTOCOLS = ("simple", "split_step", "split_step_2d")


@dataclass(frozen=True, eq=False)
class WalkSpec:
    """A complete walk definition: lattice, coins, protocol, step count.

    ``steps`` is the default step budget used by experiment drivers;
    evolution functions take an explicit count and may override it.
    """

    lattice: LatticeSpec
    coins: CoinProfile
    protocol: str
    steps: int = 0

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValidationError(f"unknown protocol {self.protocol!r}")
        want_dim = 2 if self.protocol == "split_step_2d" else 1
        if self.lattice.dimension != want_dim:
            raise ValidationError(
                f"protocol {self.protocol} needs a {want_dim}D lattice, "
                f"got {self.lattice.dimension}D"
            )
        if self.coins.theta1.shape != self.lattice.shape:
            raise ShapeMismatchError(
                f"coin profile shape {self.coins.theta1.shape} does not match "
                f"lattice shape {self.lattice.shape}"
            )
        if self.steps < 0:
            raise ValidationError("step count must be nonnegative")


@dataclass(frozen=True, eq=False)
class SpinorField:
    """Two-component amplitude field over the lattice.

    amplitudes has shape lattice.shape + (2,), complex128, read-only.
    norm2 is computed once at construction.
    """

    lattice: LatticeSpec
    amplitudes: np.ndarray
    norm2: float = field(init=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        want = self.lattice.shape + (2,)
        if amps.shape != want:
            raise ShapeMismatchError(
                f"amplitude shape {amps.shape} does not match {want}"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise ValidationError("amplitudes must be finite")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "norm2", float(np.vdot(amps, amps).real))

    @property
    def is_unit(self) -> bool:
        return abs(self.norm2 - 1.0) <= UNIT_NORM_TOL


def make_localized_state(lattice: LatticeSpec, site, coin) -> SpinorField:
    """Unit-norm state on one site with the given (up, down) coin pair.

    The coin pair is normalized; a zero pair is rejected.
    """
    coin = np.asarray(coin, dtype=np.complex128)
    if coin.shape != (2,):
        raise ValidationError("coin amplitudes must be a pair (up, down)")
    norm = np.linalg.norm(coin)
    if norm < 1e-300:
        raise ValidationError("coin amplitudes must not both be zero")
    amps = np.zeros(lattice.shape + (2,), dtype=np.complex128)
    amps[lattice.site_tuple(site)] = coin / norm
    return SpinorField(lattice, amps)


def inner_product(a: SpinorField, b: SpinorField) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.lattice != b.lattice:
        raise ShapeMismatchError("fields live on different lattices")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def position_distribution(psi: SpinorField) -> np.ndarray:
    """Per-site probability, coin traced out.

    Refuses non-normalized input rather than silently renormalizing.
    """
    if not psi.is_unit:
        raise NormalizationError(
            f"field norm^2 = {psi.norm2!r} is not 1 within {UNIT_NORM_TOL}"
        )
    a = psi.amplitudes
    return (a.real**2 + a.imag**2).sum(axis=-1)
