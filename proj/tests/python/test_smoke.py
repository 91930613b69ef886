"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import mdmargin as md


def test_potential_basics():
    pot = md.Potential(2.0, 2.0)
    assert md.psi_value(np.array([3.0, 4.0]), pot) == pytest.approx(12.5)
    assert md.psi_norm(np.array([3.0, 4.0]), pot) == pytest.approx(5.0 / math.sqrt(2.0))
    g = md.grad_psi(np.array([2.0, -3.0]), md.Potential(3.0, 3.0))
    assert g == pytest.approx([4.0, -9.0])
    w = md.inv_grad_psi(np.array([4.0, -9.0]), md.Potential(3.0, 3.0))
    assert w == pytest.approx([2.0, -3.0])
    with pytest.raises(ValueError):
        md.Potential(1.0, 2.0)


def test_mirror_map_round_trip():
    rng = np.random.default_rng(0)
    pot = md.Potential(1.7, 2.3)
    w = rng.standard_normal(4)
    back = md.inv_grad_psi(md.grad_psi(w, pot), pot)
    assert np.max(np.abs(back - w)) < 1e-10


def test_hinge_example_steps():
    data = md.Dataset(np.eye(3), np.ones(3))
    cfg = md.RunConfig()
    cfg.pot = md.Potential(2.0, 2.0)
    cfg.spec = md.LossSpec(md.LossKind.hinge, md.Reduction.sum)
    cfg.eta = 2.0
    run = md.OptimizerRun.from_w0(cfg, np.array([-1.0, -2.0, -3.0]))
    md.md_step(run, data)
    assert run.w.tolist() == [1.0, 0.0, -1.0]
    md.md_step(run, data)
    assert run.w.tolist() == [1.0, 2.0, 1.0]


def test_trajectory_and_diagnostics():
    data = md.gen_planar2d(1)
    assert data.n == 15 and data.dim == 2
    pot = md.Potential.separable(1.5)
    mm = md.max_margin(data, pot)
    assert mm.solver_gap <= 1e-6
    assert md.psi_norm(mm.direction, pot) == pytest.approx(1.0, abs=1e-9)

    cfg = md.RunConfig()
    cfg.pot = pot
    cfg.eta = 1e-3
    cfg.steps = 20000
    cfg.seed = 4
    cfg.w0_scale = 0.5
    cfg.record_every = 100
    trace = md.run_trajectory(cfg, data, mm.direction)
    assert trace[0].t == 0
    assert trace[-1].t == 20000
    assert trace[-1].loss < trace[0].loss
    assert trace[-1].bregman_gap < trace[10].bregman_gap

    growth = md.fit_norm_growth(trace, md.StepKind.fixed, pot, mm.margin_value,
                                md.data_bound_C(data, pot))
    assert growth.fit.r_squared > 0.9


def test_infeasible_raises():
    data = md.Dataset(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1.0, -1.0]))
    with pytest.raises(md.InfeasibleError):
        md.max_margin(data, md.Potential(2.0, 2.0))


def test_generator_determinism():
    a = md.gen_sparse_highdim(3)
    b = md.gen_sparse_highdim(3)
    assert np.array_equal(a.inputs, b.inputs)
    assert a.inputs.shape == (15, 100)
    assert np.count_nonzero(a.inputs, axis=1).max() <= 10


def test_identity_suite_quick():
    report = md.identity_suite(7, trials=100)
    assert report.all_pass()
