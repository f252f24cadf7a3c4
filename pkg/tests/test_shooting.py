import numpy as np
import pytest
from hypothesis import given, strategies as st

from geoshoot.core import ConfigMismatch, NonFiniteState, ShootingConfig
from geoshoot.kernel_exact import hamiltonian, hamiltonian_gradients
from geoshoot.shooting import (StageTimer, backward_gradient, objective,
                               objective_and_gradient, shoot_forward, warp_points)
from geoshoot.synthetic import head_on_pair, synthetic_case

from conftest import fd_objective_gradient, max_rel_component_error, random_instance


def test_zero_momentum_is_stationary(rng):
    q0 = rng.normal(size=(7, 3))
    traj = shoot_forward(q0, np.zeros_like(q0), ShootingConfig(timesteps=5))
    assert all(np.array_equal(q, q0) for q in traj.q)


@pytest.mark.parametrize("backend", ["exact", "bh"])
def test_single_point_free_motion(backend):
    q0 = np.array([[0.5, -1.0, 2.0]])
    p0 = np.array([[1.0, 0.0, 0.0]])
    for sigma in (0.3, 2.0, 10.0):
        traj = shoot_forward(q0, p0, ShootingConfig(sigma=sigma, timesteps=7, backend=backend))
        np.testing.assert_allclose(traj.final_points, q0 + 2 * p0, rtol=0, atol=1e-14)
        np.testing.assert_array_equal(traj.p[-1], p0)


def _rk4_reference(q, p, sigma, steps):
    def rhs(q, p):
        g = hamiltonian_gradients(q, p, sigma)
        return g.dH_dp, -g.dH_dq

    h = 1.0 / steps
    out = [q]
    for _ in range(steps):
        k1 = rhs(q, p)
        k2 = rhs(q + h / 2 * k1[0], p + h / 2 * k1[1])
        k3 = rhs(q + h / 2 * k2[0], p + h / 2 * k2[1])
        k4 = rhs(q + h * k3[0], p + h * k3[1])
        q = q + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p = p + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        out.append(q)
    return np.array(out)


def test_head_on_matches_fine_reference():
    q0, p0 = head_on_pair()
    ref = _rk4_reference(q0, p0, 2.0, 10000)
    errors = []
    for T in (40, 200):
        traj = shoot_forward(q0, p0, ShootingConfig(sigma=2.0, timesteps=T))
        errors.append(np.abs(traj.q - ref[:: 10000 // T]).max())
    assert errors[1] < 1e-3
    assert errors[1] < errors[0] / 4
    # the pair stays symmetric and decelerates without crossing
    assert traj.final_points[0, 0] == -traj.final_points[1, 0] < 0


def test_objective_trivial(rng):
    q0 = rng.normal(size=(6, 3))
    cfg = ShootingConfig(timesteps=4)
    rep = objective(q0, np.zeros_like(q0), q0, cfg)
    assert rep.total == 0.0
    rep = objective(q0, np.zeros_like(q0), q0 + [1.0, 0, 0], cfg)
    assert rep.total == pytest.approx(6.0)
    assert rep.energy == 0.0 and rep.residual_sse == pytest.approx(6.0)


def test_objective_recomputed_from_snapshots(rng):
    q0, p0, target = random_instance(rng, 8)
    cfg = ShootingConfig(sigma=1.5, lam=0.7, timesteps=6)
    rep = objective(q0, p0, target, cfg)
    traj = shoot_forward(q0, p0, cfg)
    sse = np.sum((traj.q[-1] - target) ** 2)
    assert rep.residual_sse == pytest.approx(sse, rel=1e-14)
    assert rep.energy == pytest.approx(hamiltonian(q0, p0, 1.5), rel=1e-13)
    assert rep.total == pytest.approx(rep.energy + 0.7 * sse, rel=1e-14)
    assert rep.attachment == pytest.approx(0.7 * rep.residual_sse, rel=1e-15)


def test_gradient_zero_at_identity(rng):
    q0 = rng.normal(size=(5, 3))
    _, g = objective_and_gradient(q0, np.zeros_like(q0), q0, ShootingConfig(timesteps=5))
    assert not g.any()


@pytest.mark.parametrize("backend", ["exact", "bh"])
def test_gradient_finite_differences_n3(rng, backend):
    q0, p0, target = random_instance(rng, 3)
    cfg = ShootingConfig(sigma=1.0, lam=1.0, timesteps=10, backend=backend,
                         threshold_multiplier=np.inf)
    _, g = objective_and_gradient(q0, p0, target, cfg)
    assert max_rel_component_error(g, fd_objective_gradient(q0, p0, target, cfg)) < 1e-5


def test_bh_gradient_is_descent_direction():
    q0, target = synthetic_case("flat-shape", 100)
    rng = np.random.default_rng(4)
    p0 = 0.05 * (target - q0) + 0.01 * rng.normal(size=q0.shape)
    cfg = ShootingConfig(sigma=2.0, timesteps=5, backend="bh")
    exact = cfg.replace(backend="exact")
    _, g = objective_and_gradient(q0, p0, target, cfg)
    f0 = objective(q0, p0, target, exact).total
    steps = [1e-3, 1e-4, 1e-5] / np.max(np.abs(g))
    assert min(objective(q0, p0 - s * g, target, exact).total for s in steps) < f0


def test_config_mismatch(rng):
    q0, p0, target = random_instance(rng, 4)
    traj = shoot_forward(q0, p0, ShootingConfig(timesteps=5))
    with pytest.raises(ConfigMismatch):
        backward_gradient(traj, target, ShootingConfig(timesteps=6))
    with pytest.raises(ConfigMismatch):
        warp_points(traj, q0, ShootingConfig(timesteps=6))


def test_blow_up_reports_timestep():
    q0 = np.array([[0.0, 0, 0], [1e-3, 0, 0]])
    p0 = np.array([[1e155, 0, 0], [-1e155, 0, 0]])
    with pytest.raises(NonFiniteState) as exc:
        shoot_forward(q0, p0, ShootingConfig(timesteps=4))
    assert 1 <= exc.value.timestep <= 4


@pytest.mark.parametrize("backend", ["exact", "bh"])
def test_warp_carriers_reproduce_endpoints(rng, backend):
    q0, p0, _ = random_instance(rng, 30, spread=5.0)
    cfg = ShootingConfig(timesteps=8, backend=backend)
    traj = shoot_forward(q0, p0, cfg)
    np.testing.assert_allclose(warp_points(traj, q0), traj.final_points, rtol=0, atol=1e-10)
    zero = shoot_forward(q0, np.zeros_like(p0), cfg)
    x = rng.normal(size=(5, 3))
    np.testing.assert_array_equal(warp_points(zero, x), x)


def test_warp_far_points_barely_move(rng):
    q0, p0, _ = random_instance(rng, 10, spread=1.0)
    sigma = 1.0
    traj = shoot_forward(q0, p0, ShootingConfig(sigma=sigma, timesteps=10))
    x = np.array([[40.0, 0, 0], [0, -30.0, 12.0]])
    moved = np.linalg.norm(warp_points(traj, x) - x, axis=1)
    d = np.min(np.linalg.norm(traj.q[:, None, :, :] - x[None, :, None, :], axis=-1), axis=(0, 2))
    bound = 2 * len(q0) * np.exp(-(d - 1) ** 2 / (2 * sigma ** 2)) * np.abs(traj.p).max()
    assert np.all(moved <= bound)


def test_warp_path_shape(rng):
    q0, p0, _ = random_instance(rng, 4)
    traj = shoot_forward(q0, p0, ShootingConfig(timesteps=3))
    x, path = warp_points(traj, q0[:2], return_path=True)
    assert path.shape == (4, 2, 3) and np.array_equal(path[-1], x)


def test_stage_timer_records_stages(rng):
    q0, p0, target = random_instance(rng, 40, spread=10.0)
    timer = StageTimer()
    objective_and_gradient(q0, p0, target, ShootingConfig(timesteps=3, backend="bh"),
                           timer=timer)
    assert {"tree_build", "forward", "backward"} <= set(timer.seconds)
    assert timer.traversal.queries == 2 * 3 * 40


def test_trees_cached_per_step(rng):
    q0, p0, target = random_instance(rng, 20)
    traj = shoot_forward(q0, p0, ShootingConfig(timesteps=4, backend="bh"))
    assert len(traj.trees) == 4
    g_cached = backward_gradient(traj, target)
    traj.trees = None
    np.testing.assert_array_equal(backward_gradient(traj, target), g_cached)


@given(st.integers(0, 2 ** 31), st.sampled_from(["exact", "bh"]))
def test_determinism(seed, backend):
    rng = np.random.default_rng(seed)
    q0, p0, target = random_instance(rng, 25)
    cfg = ShootingConfig(timesteps=4, backend=backend)
    r1, g1 = objective_and_gradient(q0, p0, target, cfg)
    r2, g2 = objective_and_gradient(q0, p0, target, cfg)
    assert r1 == r2 and np.array_equal(g1, g2)


@given(st.integers(0, 2 ** 31), st.integers(2, 6), st.integers(2, 8),
       st.floats(0.5, 2.0), st.floats(0.1, 3.0))
def test_gradient_property(seed, n, T, sigma, lam):
    rng = np.random.default_rng(seed)
    q0, p0, target = random_instance(rng, n, spread=1.5)
    cfg = ShootingConfig(sigma=sigma, lam=lam, timesteps=T)
    _, g = objective_and_gradient(q0, p0, target, cfg)
    assert max_rel_component_error(g, fd_objective_gradient(q0, p0, target, cfg)) < 1e-5
