import numpy as np
import pytest

import oracles
from conftest import make_spec, random_walk_spec
from topowalk.errors import (
    BoundaryOverflowError,
    DimensionCapError,
    ValidationError,
)
from topowalk.lattice import (
    CoinProfile,
    LatticeSpec,
    WalkSpec,
    make_localized_state,
    position_distribution,
)
from topowalk.walk import (
    StepOperator,
    coin_matrix,
    coin_rotate,
    evolve,
    materialize_unitary,
    spin_translate,
    step,
    step_simple,
    step_split,
    step_split_2d,
)

SQ2 = 1.0 / np.sqrt(2.0)


# ---------------------------------------------------------------------------
# coin rotation

def test_coin_matrix_is_real_rotation():
    m = coin_matrix(np.pi / 2)
    assert np.allclose(m, [[SQ2, -SQ2], [SQ2, SQ2]])
    assert np.allclose(m @ m.conj().T, np.eye(2), atol=1e-15)
    assert np.linalg.det(m) == pytest.approx(1.0)


def test_coin_rotate_mixes_on_site_only():
    lat = LatticeSpec(1, 5)
    psi = make_localized_state(lat, 2, (1.0, 0.0))
    out = coin_rotate(psi, np.pi / 2)
    assert out.amplitudes[2, 0] == pytest.approx(SQ2)
    assert out.amplitudes[2, 1] == pytest.approx(SQ2)
    assert np.count_nonzero(out.amplitudes) == 2


def test_coin_rotate_per_site_profile():
    lat = LatticeSpec(1, 3)
    thetas = np.array([0.0, np.pi, np.pi / 2])
    amps = np.zeros((3, 2), dtype=complex)
    amps[:, 0] = 1 / np.sqrt(3)
    psi = coin_rotate(
        make_localized_state(lat, 0, (1, 0)).__class__(lat, amps), thetas
    )
    assert psi.amplitudes[0, 0] == pytest.approx(1 / np.sqrt(3))
    assert psi.amplitudes[1, 0] == pytest.approx(0.0, abs=1e-15)
    assert psi.amplitudes[1, 1] == pytest.approx(1 / np.sqrt(3))


# ---------------------------------------------------------------------------
# translation

def test_spin_translate_moves_components_oppositely():
    lat = LatticeSpec(1, 6)
    amps = np.zeros((6, 2), dtype=complex)
    amps[3, 0] = SQ2
    amps[3, 1] = SQ2
    psi = spin_translate(type(make_localized_state(lat, 0, (1, 0)))(lat, amps))
    assert psi.amplitudes[4, 0] == pytest.approx(SQ2)
    assert psi.amplitudes[2, 1] == pytest.approx(SQ2)


def test_spin_translate_periodic_wraps():
    lat = LatticeSpec(1, 4)
    psi = make_localized_state(lat, 3, (1.0, 0.0))
    out = spin_translate(psi)
    assert out.amplitudes[0, 0] == pytest.approx(1.0)


def test_spin_translate_open_overflow_is_fatal():
    lat = LatticeSpec(1, 4, boundary="open")
    psi = make_localized_state(lat, 3, (1.0, 0.0))
    with pytest.raises(BoundaryOverflowError):
        spin_translate(psi)
    # down-mover at the lower edge equally fatal
    psi = make_localized_state(lat, 0, (0.0, 1.0))
    with pytest.raises(BoundaryOverflowError):
        spin_translate(psi)


def test_spin_translate_open_interior_is_fine():
    lat = LatticeSpec(1, 6, boundary="open")
    psi = make_localized_state(lat, 2, (1.0, 1.0))
    out = spin_translate(psi)
    assert out.amplitudes[3, 0] == pytest.approx(SQ2)
    assert out.amplitudes[1, 1] == pytest.approx(SQ2)


def test_spin_translate_up_only_leaves_down_alone():
    lat = LatticeSpec(1, 5)
    psi = make_localized_state(lat, 2, (1.0, 1.0))
    out = spin_translate(psi, which_coin="up_only")
    assert out.amplitudes[3, 0] == pytest.approx(SQ2)
    assert out.amplitudes[2, 1] == pytest.approx(SQ2)


def test_spin_translate_axis_selects_direction_2d():
    lat = LatticeSpec(2, (4, 4))
    psi = make_localized_state(lat, (1, 1), (1.0, 0.0))
    out_x = spin_translate(psi, axis=0)
    out_y = spin_translate(psi, axis=1)
    assert out_x.amplitudes[2, 1, 0] == pytest.approx(1.0)
    assert out_y.amplitudes[1, 2, 0] == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        spin_translate(psi, axis=2)


# ---------------------------------------------------------------------------
# single steps, pinned values

def test_simple_step_splits_left_right():
    # theta = pi/2 from a pure up state: amplitude 1/sqrt2 one site right (up)
    # and 1/sqrt2 one site left (down)
    spec = make_spec("simple", length=7, theta1=np.pi / 2)
    psi = make_localized_state(spec.lattice, 3, (1.0, 0.0))
    out = step_simple(psi, spec)
    assert out.amplitudes[4, 0] == pytest.approx(SQ2)
    assert out.amplitudes[2, 1] == pytest.approx(SQ2)
    assert np.count_nonzero(out.amplitudes) == 2


def test_split_step_identity_coins_is_double_shift():
    spec = make_spec("split_step", length=6, theta1=0.0, theta2=0.0)
    up = make_localized_state(spec.lattice, 2, (1.0, 0.0))
    down = make_localized_state(spec.lattice, 2, (0.0, 1.0))
    assert step_split(up, spec).amplitudes[3, 0] == pytest.approx(1.0)
    assert step_split(down, spec).amplitudes[1, 1] == pytest.approx(1.0)


def test_hadamard_like_two_step_distribution():
    # hand-expanded: after 2 steps of the theta=pi/2 walk from |0, up>,
    # p(+2) = 1/4, p(0) = 1/2, p(-2) = 1/4
    spec = make_spec("simple", length=9, theta1=np.pi / 2)
    psi = make_localized_state(spec.lattice, 4, (1.0, 0.0))
    out = evolve(psi, spec, 2)
    p = position_distribution(out)
    expect = np.zeros(9)
    expect[6] = 0.25
    expect[4] = 0.5
    expect[2] = 0.25
    assert np.allclose(p, expect, atol=1e-14)


def test_step_dispatch_checks_protocol():
    spec = make_spec("split_step")
    psi = make_localized_state(spec.lattice, 0, (1, 0))
    with pytest.raises(ValidationError):
        step_simple(psi, spec)
    with pytest.raises(ValidationError):
        step_split_2d(psi, spec)
    out_a = step(psi, spec)
    out_b = step_split(psi, spec)
    assert np.array_equal(out_a.amplitudes, out_b.amplitudes)


def test_step_rejects_foreign_lattice():
    spec = make_spec("simple", length=8)
    other = make_localized_state(LatticeSpec(1, 9), 0, (1, 0))
    with pytest.raises(ValidationError):
        step(other, spec)


# ---------------------------------------------------------------------------
# evolution against the dense oracle

@pytest.mark.parametrize("protocol,n_steps", [
    ("simple", 25),
    ("split_step", 25),
    ("split_step_2d", 12),
])
def test_evolve_matches_dense_matrix_powers(protocol, n_steps, rng):
    for _ in range(6):
        spec = random_walk_spec(rng, periodic_only=True)
        while spec.protocol != protocol:
            spec = random_walk_spec(rng, periodic_only=True)
        site = tuple(rng.integers(0, e) for e in spec.lattice.extent)
        coin = rng.normal(size=2) + 1j * rng.normal(size=2)
        psi = make_localized_state(spec.lattice, site, coin)
        out = evolve(psi, spec, n_steps)
        ref = oracles.evolve_dense(spec, psi.amplitudes.ravel(), n_steps)
        assert np.allclose(out.amplitudes.ravel(), ref, atol=1e-12)


def test_norm_preserved_along_trajectory(rng):
    spec = make_spec("split_step", length=32, theta1=0.7, theta2=-2.1)
    psi = make_localized_state(spec.lattice, 16, (1.0, 1.0j))
    norms = []
    evolve(psi, spec, 60, observer=lambda n, f: norms.append(f.norm2))
    assert len(norms) == 60
    assert np.max(np.abs(np.array(norms) - 1.0)) < 1e-12


def test_observer_sees_consecutive_steps():
    spec = make_spec("simple", length=8, theta1=1.0)
    psi = make_localized_state(spec.lattice, 4, (1, 0))
    seen = []
    final = evolve(psi, spec, 5, observer=lambda n, f: seen.append(n))
    assert seen == [1, 2, 3, 4, 5]
    assert final.is_unit


def test_evolve_zero_steps_is_identity():
    spec = make_spec("simple")
    psi = make_localized_state(spec.lattice, 3, (1, 1))
    out = evolve(psi, spec, 0)
    assert np.array_equal(out.amplitudes, psi.amplitudes)
    with pytest.raises(ValidationError):
        evolve(psi, spec, -1)


def test_open_boundary_evolution_matches_periodic_inside_light_cone():
    # identical dynamics while the support stays away from the edges
    n = 6
    lat_open = LatticeSpec(1, 21, boundary="open")
    lat_per = LatticeSpec(1, 21, boundary="periodic")
    coins_o = CoinProfile.build(lat_open, 1.1, -0.4)
    coins_p = CoinProfile.build(lat_per, 1.1, -0.4)
    so = WalkSpec(lat_open, coins_o, "split_step")
    sp = WalkSpec(lat_per, coins_p, "split_step")
    psi_o = make_localized_state(lat_open, 10, (1.0, 2.0j))
    psi_p = make_localized_state(lat_per, 10, (1.0, 2.0j))
    out_o = evolve(psi_o, so, n)
    out_p = evolve(psi_p, sp, n)
    assert np.allclose(out_o.amplitudes, out_p.amplitudes, atol=1e-14)


def test_open_boundary_evolution_overflow_raises():
    lat = LatticeSpec(1, 9, boundary="open")
    coins = CoinProfile.build(lat, np.pi / 2)
    spec = WalkSpec(lat, coins, "simple")
    psi = make_localized_state(lat, 4, (1.0, 0.0))
    with pytest.raises(BoundaryOverflowError):
        evolve(psi, spec, 5)


# ---------------------------------------------------------------------------
# dense materialization

def test_materialize_matches_kron_oracle(rng):
    for _ in range(8):
        spec = random_walk_spec(rng, periodic_only=True, max_sites_1d=20, max_axis_2d=5)
        u = materialize_unitary(spec)
        ref = oracles.dense_walk_unitary(spec)
        assert np.allclose(u, ref, atol=1e-13)
        # unitarity of the dense form
        assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-12)


def test_materialize_respects_cap():
    spec = make_spec("simple", length=64)
    with pytest.raises(DimensionCapError):
        materialize_unitary(spec, cap=100)


def test_materialize_open_boundary_refuses_edge_columns():
    lat = LatticeSpec(1, 6, boundary="open")
    spec = WalkSpec(lat, CoinProfile.build(lat, 0.3), "simple")
    with pytest.raises(BoundaryOverflowError):
        materialize_unitary(spec)


def test_step_operator_caches_matrix():
    spec = make_spec("split_step", length=10)
    op = StepOperator(spec)
    assert op.protocol == "split_step"
    m1 = op.matrix()
    m2 = op.matrix()
    assert m1 is m2
    psi = make_localized_state(spec.lattice, 5, (1, 0))
    applied = op.apply(psi)
    via_matrix = m1 @ psi.amplitudes.ravel()
    assert np.allclose(applied.amplitudes.ravel(), via_matrix, atol=1e-13)
