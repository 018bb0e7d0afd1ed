import math

import numpy as np
import pytest

from ldot.costs import CramerClosed, CramerFamily, Quadratic
from ldot.experiments import (Config, Instance, double_limit, gamma_sweep, instance_from_config,
                              minimizer_trace, recovery_sequence, schedule_from_config,
                              tilt_to_mean, DEFAULT_ALPHAS, DEFAULT_KS)
from ldot.kernels import second_marginal
from ldot.measures import DiscreteMeasure, TestFamily, canonical_family
from ldot.noise import IIDSum
from ldot.solvers import solve_tk_sinkhorn

REFERENCE_T = 0.0836734693877551  # exact LP value of the reference instance


def test_reference_transport_cost(reference_instance):
    assert reference_instance.transport_cost() == pytest.approx(REFERENCE_T, abs=1e-15)


def test_gamma_sweep_bound(reference_instance):
    rows = gamma_sweep(reference_instance, [256, 1, 16])
    assert [r.k for r in rows] == [1, 16, 256]
    for r in rows:
        assert abs(r.gap_to_limit) <= math.log(8) / r.k
        assert math.isnan(r.seconds) and math.isnan(r.alpha)
    timed = gamma_sweep(reference_instance, [4], timing=True)
    assert timed[0].seconds >= 0


def test_gamma_sweep_single_k_is_a_direct_solve(reference_instance):
    inst = reference_instance
    row, = gamma_sweep(inst, [7])
    rep = solve_tk_sinkhorn(inst.mu, inst.nu, inst.kernel(7))
    assert row.value == rep.value and row.iterations == rep.iterations


def test_gamma_sweep_on_kernel_marginal(reference_instance):
    inst = reference_instance
    for k in (2, 8):
        nu_k = second_marginal(inst.kernel(k))
        row, = gamma_sweep(Instance(inst.mu, nu_k, inst.cost, inst.fam), [k])
        assert row.value == pytest.approx(0.0, abs=1e-12)


def test_recovery_full_support_keeps_nu(reference_instance):
    rows = recovery_sequence(reference_instance, [1, 16])
    assert all(r.nu_k is reference_instance.nu and r.distance == 0.0 for r in rows)


def lattice_instance():
    bern = CramerFamily("bernoulli")
    mu = DiscreteMeasure.dirac([0.0])
    nu = DiscreteMeasure([-0.3, 0.5], [0.5, 0.5])
    return Instance(mu, nu, CramerClosed(bern), canonical_family(4, mu, nu), "density", IIDSum(bern))


def test_recovery_lattice_sequence():
    inst = lattice_instance()
    T = inst.transport_cost()
    ks = [2, 4, 8, 16, 64, 256]
    rows = recovery_sequence(inst, ks)
    dist = [r.distance for r in rows]
    assert np.all(np.diff(dist) <= 0)
    assert dist[-1] < 0.01
    assert abs(rows[-1].value - T) < abs(rows[0].value - T)
    assert abs(rows[-1].value - T) < 0.005


def test_tilt_to_mean():
    grid = np.linspace(-1, 1, 5)
    log_row = np.log(np.array([1, 4, 6, 4, 1]) / 16)
    for x in (-0.7, 0.0, 0.25, 0.9):
        w = tilt_to_mean(log_row, grid, x)
        assert w @ grid == pytest.approx(x, abs=1e-12)
    edge = tilt_to_mean(log_row, grid, 1.0)
    assert edge.tolist() == [0, 0, 0, 0, 1.0]
    with pytest.raises(ValueError):
        tilt_to_mean(log_row, grid, 1.5)


def test_double_limit_rows(reference_instance):
    rows = double_limit(reference_instance, [64, 8], [4, 0, 64])
    assert [(r.k, r.alpha) for r in rows] == [(8, 0), (8, 4), (8, 64), (64, 0), (64, 4), (64, 64)]
    zero = [r for r in rows if r.alpha == 0]
    assert all(r.value == pytest.approx(0.0, abs=1e-12) for r in zero)
    for k in (8, 64):
        vals = [r.value for r in rows if r.k == k]
        assert np.all(np.diff(vals) >= -1e-12)
    last = rows[-1]
    assert last.gap_mk == pytest.approx(last.value - REFERENCE_T, abs=1e-15)


def test_double_limit_rank_check(reference_instance):
    inst = reference_instance
    weak = Instance(inst.mu, inst.nu, inst.cost, TestFamily.fourier(3, 2.0))
    with pytest.raises(ValueError, match="separate"):
        double_limit(weak, [4], [1])


def test_minimizer_trace(reference_instance):
    rows = minimizer_trace(reference_instance, [16, 64, 256, 512], 8.0)
    dist = [r.distance for r in rows]
    assert np.all(np.diff(dist) <= 0)
    assert dist[-1] <= 1e-8
    assert all(abs(r.value_gap) <= 1e-9 for r in rows)
    gaps = [r.objective_gap for r in rows]
    assert np.all(np.diff(gaps) <= 0)


def test_instance_validation():
    mu = DiscreteMeasure.dirac([0.0])
    nu = DiscreteMeasure.dirac(np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        Instance(mu, nu, Quadratic(), canonical_family(2, mu))
    with pytest.raises(ValueError):
        Instance(mu, mu, Quadratic(), canonical_family(2, mu), kernel_mode="exact")


CONFIG = """
seed = 11
cost = {{ kind = "quadratic" }}

[mu]
grid = "-1:1:8"
weights = [1, 2, 3, 4, 4, 3, 2, 1]
normalize = true

[nu]
file = "{nu}"

[family]
m = 8

[schedule]
ks = [4, 16]
"""


def test_config_loading(tmp_path, reference_instance):
    from ldot.io import write_measure
    write_measure(tmp_path / "nu.csv", reference_instance.nu)
    path = tmp_path / "exp.toml"
    path.write_text(CONFIG.format(nu="nu.csv"))
    cfg = Config.load(path)
    inst = instance_from_config(cfg)
    assert cfg.seed == 11
    assert inst.mu.allclose(reference_instance.mu, atol=1e-15)
    assert inst.nu.allclose(reference_instance.nu, atol=1e-15)
    sch = schedule_from_config(cfg)
    assert sch["ks"] == [4, 16] and sch["alphas"] == [float(a) for a in DEFAULT_ALPHAS]
    assert DEFAULT_KS[0] == 1 and DEFAULT_KS[-1] == 1024
    bad = tmp_path / "bad.toml"
    bad.write_text("[mu]\nsupport=[0.0]\nweights=[1.0]\n")
    with pytest.raises(ValueError):
        instance_from_config(Config.load(bad))
