"""Acceptance criteria 1-10, one test each; every test prints a pass/fail line."""
import math
import time

import numpy as np
import pytest

from relboltz import carleman, cli, diagnostics, solver, verification
from relboltz.collision_operator import collision_Q, collision_Q_at, loss_field
from relboltz.config import ScenarioConfig, build_initial
from relboltz.cross_section import ScatteringKernel
from relboltz.field import DensityField
from relboltz.kinematics import energy
from relboltz.quadrature import AngularGrid

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.slow


def report(number, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def ensemble():
    t0 = time.perf_counter()
    rep = verification.kinematics_ensemble(100_000, seed=7)
    return rep, time.perf_counter() - t0


def test_criterion_01_kinematics(ensemble):
    rep, secs = ensemble
    names = [k for k in rep.measured if not k.startswith("moller")]
    bad = [k for k in names if not rep.measured[k] <= rep.limits[k]]
    worst = max(names, key=lambda k: rep.measured[k] / rep.limits[k] if rep.limits[k] else 0)
    ok = not bad and secs <= 10.0
    assert report(1, ok, f"{len(names)} checks, failures {bad}, tightest {worst} "
                         f"{rep.measured[worst]:.2e}, {secs:.2f} s")


def test_criterion_02_moller(ensemble):
    rep, _ = ensemble
    val = rep.measured["moller identity (rel)"]
    ok = val <= 1e-10 and rep.measured["moller below 2 violations"] == 0
    assert report(2, ok, f"max |2 v_o v0 v0_* - g sqrt(s)| / (g sqrt(s)) = {val:.2e}")


def test_criterion_03_angular_mass():
    err, orders = verification.angular_mass_check(n_nodes=64)
    supp = verification.hemisphere_order_check()
    ok = err <= 1e-10 and min(orders.values()) >= 4 and min(supp.values()) >= 4
    assert report(3, ok, f"rel err {err:.2e} at 64 nodes, orders {orders}, "
                         f"smooth-integrand orders {[round(o, 1) for o in supp.values()]}")


def test_criterion_04_carleman_weight():
    err, count = verification.carleman_weight_check(10_000)
    ok = err <= 1e-10 and count == 10_000
    assert report(4, ok, f"max rel |w g_bar - sigma| = {err:.2e} over {count} triples")


def test_criterion_05_weak_form_equivalence():
    spec = carleman.QuadratureSpec(4.0, 12, AngularGrid(8, 16), n_r=32)
    tests = carleman.default_battery(spec.half_width)
    t0 = time.perf_counter()
    rep = carleman.equivalence_battery(tests, ScatteringKernel(), spec)
    secs = time.perf_counter() - t0
    ok = len(tests) >= 5 and rep.cv <= 0.01 and rep.max_rel_dev <= 0.02 and secs <= 600
    ratios = " ".join(f"{r:.4f}" for r in rep.ratios)
    assert report(5, ok, f"ratios {ratios}; kappa {rep.kappa:.4f}, cv {rep.cv:.2e}, "
                         f"max dev {rep.max_rel_dev:.2e}, {secs:.0f} s")


def _juttner(V, N):
    return DensityField.from_function(lambda x: np.exp(-energy(x)), V, N)


def _fundamental(nodes):
    # one node per orbit of the cube symmetry group (sign flips, permutations)
    return (nodes[:, 0] > 0) & (nodes[:, 0] <= nodes[:, 1]) & (nodes[:, 1] <= nodes[:, 2])


def test_criterion_06_equilibrium_annihilation():
    k = ScatteringKernel()
    ang = AngularGrid(8, 16)
    coarse = _juttner(6.0, 16)
    q16 = np.abs(collision_Q(coarse, k, ang)).reshape(-1)
    # the field and grid are cube-symmetric; the omega frame is not, so images of
    # a node differ by quadrature noise. Measure that spread on the full coarse field
    canon = np.sort(np.abs(coarse.nodes), axis=1)
    _, orbit = np.unique(np.round(canon / coarse.h * 2).astype(int), axis=0, return_inverse=True)
    orbit = orbit.reshape(-1)
    hi = np.zeros(orbit.max() + 1)
    lo = np.full(orbit.max() + 1, np.inf)
    np.maximum.at(hi, orbit, q16)
    np.minimum.at(lo, orbit, q16)
    spread = float(np.max((hi - lo) / hi.max()))
    fine = _juttner(6.0, 32)
    pts = fine.nodes[_fundamental(fine.nodes)]
    _, _, q32 = collision_Q_at(fine, k, ang.refined(), pts)
    # inflate the fine maximum by twice the measured spread to cover unvisited images
    fine_max = float(np.abs(q32).max()) * (1 + 2 * spread)
    factor = q16.max() / fine_max
    ok = factor >= 1.8
    assert report(6, ok, f"max|Q| N=16: {q16.max():.4f}, N=32: {fine_max:.4f} "
                         f"(orbit spread {spread:.1e}), factor {factor:.2f}")


def test_criterion_07_simulation_run():
    cfg = ScenarioConfig(init_kind="two_bump")
    f0 = build_initial(cfg)
    first = {}
    worst = {"mass": 0.0, "momentum": 0.0, "energy": 0.0, "entropy_excess": 0.0}
    l2 = []
    violations = []

    def check(rec):
        if not first:
            first.update(mass=rec.mass, energy=rec.energy, entropy=rec.entropy)
        drift_m = abs(rec.mass - first["mass"]) / first["mass"]
        drift_p = max(abs(rec.px), abs(rec.py), abs(rec.pz)) / first["energy"]
        drift_e = abs(rec.energy - first["energy"]) / first["energy"]
        worst["mass"] = max(worst["mass"], drift_m)
        worst["momentum"] = max(worst["momentum"], drift_p)
        worst["energy"] = max(worst["energy"], drift_e)
        if l2:
            # per-step slack equal to the measured drift
            slack = max(drift_m, drift_e) * abs(first["entropy"])
            excess = rec.entropy - prev_entropy[0]
            worst["entropy_excess"] = max(worst["entropy_excess"], excess - slack)
            if excess > slack:
                violations.append(f"entropy up at t={rec.t:.4g}")
        prev_entropy[:] = [rec.entropy]
        l2.append(rec.lp_norms[(2.0, 0.0)])
        if rec.min_f < 0:
            violations.append(f"min_f < 0 at t={rec.t:.4g}")
        if max(drift_m, drift_p, drift_e) > 0.01:
            violations.append(f"drift above 1% at t={rec.t:.4g}")
        # stop at the first violation; the remaining steps cannot undo it
        return bool(violations)

    prev_entropy = [0.0]
    t0 = time.perf_counter()
    recs = solver.run(f0, cfg.kernel(), cfg.angular(), 1.0, norms=((2.0, 0.0),),
                      stop=check)
    secs = time.perf_counter() - t0
    head = l2[:max(1, len(l2) // 10)]
    sup_ok = max(l2) <= 1.05 * max(head)
    finished = recs[-1].t >= 1.0 - 1e-12
    ok = finished and not violations and sup_ok
    assert report(7, ok, f"t reached {recs[-1].t:.4g} in {len(recs) - 1} steps ({secs:.0f} s); "
                         f"drift mass {worst['mass']:.2e}, momentum {worst['momentum']:.2e}, "
                         f"energy {worst['energy']:.2e}; {violations[:1] or 'no violations'}")


def test_criterion_08_loss_bounds():
    cfg = ScenarioConfig(init_kind="two_bump")
    f = build_initial(cfg)
    loss = loss_field(f, cfg.kernel(), cfg.angular())
    lo, hi = diagnostics.loss_ratio_extremes(f, loss, radius=cfg.grid_half_width / 2)
    ok = 0 < lo <= hi < math.inf and hi / lo <= 20
    assert report(8, ok, f"L/v0 on |v| <= V/2 in [{lo:.4g}, {hi:.4g}], ratio {hi / lo:.3f}")


def test_criterion_09_exponents(capsys):
    n_first, n_second = diagnostics.n_branches(6.0)
    th = diagnostics.exponent_theta(6.0)
    resid = max(abs(diagnostics.interpolation_residual(p)) for p in (1.5, 2, 3, 6, 9, 12))
    m_first, m_second = diagnostics.m_branches(6.0, 3.0)
    cli.main(["exponents", "--p", "6", "--eta", "3"])
    out = capsys.readouterr().out
    ok = (n_first == 2.0 and n_second == 2.0 and diagnostics.exponent_n(6.0) == 2.0
          and th == 2.0 / 5.0 and resid <= 1e-12 and "branches" in out and "note" in out)
    assert report(9, ok, f"n(6) = {n_first!r} / {n_second!r}, theta(6) = {th!r}, "
                         f"identity residual {resid:.1e}, m(6, 3) branches {m_first!r} / {m_second!r}")


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "scenario.cfg"
    outputs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        cfg.write_text(f"init.kind = two_bump\ntime.t_end = 0.0005\noutput.path = {out}\n")
        assert cli.main(["simulate", str(cfg)]) == 0
        outputs.append(out.read_bytes())
    rows = outputs[0].count(b"\n")
    ok = outputs[0] == outputs[1] and rows >= 3
    assert report(10, ok, f"two simulate runs, {rows} CSV lines each, byte-identical: "
                          f"{outputs[0] == outputs[1]}")
