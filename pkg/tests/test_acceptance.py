"""Acceptance gate: one test per criterion, at the stated tolerances.

Each test prints a single verdict line; the suite runs under
--capture=tee-sys (see pyproject) so the line shows live in the terminal
while staying in the captured report of any failure.
"""
import time

import numpy as np
import pytest

from redmat.assembly import assemble
from redmat.bench import BenchGrid, run_series
from redmat.generators import GeneratorSpec, generate, jitter_stiffness
from redmat.model import rescale_length_units
from redmat.redundancy import (kernel_basis, rank_and_indeterminacy,
                               redundancy_canonical, redundancy_diag_canonical,
                               redundancy_diag_efficient, redundancy_efficient,
                               self_stress)

import oracles
from helpers import tetra_chain, two_bar


def _verdict(num, title, ok, detail=""):
    state = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {num:02d} {title}: {state}{suffix}", flush=True)
    assert ok, f"criterion {num} failed: {title} {suffix}"


# Desk-scale roster shared by criteria 6 and 7: all three families plus
# stiffness-jittered variants, every model well under n_q = 5000.
ROSTER = (
    ("cylinder-4-a10", lambda: generate(GeneratorSpec("cylinder", 4, alpha_target=0.10))),
    ("cylinder-4-a25", lambda: generate(GeneratorSpec("cylinder", 4, alpha_target=0.25))),
    ("cylinder-5-a40", lambda: generate(GeneratorSpec("cylinder", 5, alpha_target=0.40))),
    ("cylinder-6-a25", lambda: generate(GeneratorSpec("cylinder", 6, alpha_target=0.25))),
    ("mero-2", lambda: generate(GeneratorSpec("mero", 2))),
    ("mero-3", lambda: generate(GeneratorSpec("mero", 3))),
    ("mero-4", lambda: generate(GeneratorSpec("mero", 4))),
    ("mero-5", lambda: generate(GeneratorSpec("mero", 5))),
    ("hypar-2", lambda: generate(GeneratorSpec("hypar", 2))),
    ("hypar-3", lambda: generate(GeneratorSpec("hypar", 3))),
    ("hypar-4", lambda: generate(GeneratorSpec("hypar", 4))),
    ("hypar-5", lambda: generate(GeneratorSpec("hypar", 5))),
    ("cylinder-5-a40-jitter",
     lambda: jitter_stiffness(generate(GeneratorSpec("cylinder", 5, alpha_target=0.40)), seed=1)),
    ("mero-3-jitter", lambda: jitter_stiffness(generate(GeneratorSpec("mero", 3)), seed=2)),
)


@pytest.fixture(scope="module")
def roster_results():
    """Both routes, full and diagonal, on every roster model."""
    t0 = time.perf_counter()
    out = {}
    for name, build in ROSTER:
        system = assemble(build())
        cts = rank_and_indeterminacy(system)
        out[name] = {
            "system": system,
            "cts": cts,
            "full_can": redundancy_canonical(system),
            "full_eff": redundancy_efficient(system),
            "diag_can": redundancy_diag_canonical(system),
            "diag_eff": redundancy_diag_efficient(system),
        }
    out["_elapsed"] = time.perf_counter() - t0
    return out


def test_criterion_01_mero_indeterminacy():
    t0 = time.perf_counter()
    system = assemble(generate(GeneratorSpec("mero", 6)))
    cts = rank_and_indeterminacy(system)
    elapsed = time.perf_counter() - t0
    independent = cts.n_q - np.linalg.matrix_rank(system.A.toarray())
    ok = cts.n_s == 45 and independent == 45 and elapsed < 1.0
    _verdict(1, "mero n=6 indeterminacy = 45", ok,
             f"n_s={cts.n_s}, independent={independent}, {elapsed:.2f}s")


def test_criterion_02_mero_corner_bars():
    n = 6
    model = generate(GeneratorSpec("mero", n))
    system = assemble(model)
    diag = redundancy_diag_efficient(system)
    r_by_element = {eid: diag.payload[i] for i, (eid, _) in enumerate(system.row_index)}
    corners = [0, n, n * (n + 1), (n + 1) ** 2 - 1]  # top grid corners
    worst = 0.0
    counted = []
    for corner in corners:
        bars = [el.id for el in model.elements if corner in el.node_ids]
        counted.append(len(bars))
        worst = max(worst, max(r_by_element[b] for b in bars))
    ok = counted == [3, 3, 3, 3] and worst <= 1e-8
    _verdict(2, "mero n=6 top-corner bars carry zero redundancy", ok,
             f"bars per corner={counted}, max r_ii={worst:.2e}")


def test_criterion_03_cylinder_alpha_targets():
    gaps = {}
    for target in (0.1, 0.25, 0.4):
        system = assemble(generate(GeneratorSpec("cylinder", 8, alpha_target=target)))
        rank = np.linalg.matrix_rank(system.A.toarray())
        alpha = (system.counts.n_q - rank) / system.counts.n_q
        gaps[target] = abs(alpha - target)
    ok = all(gap <= 0.02 for gap in gaps.values())
    _verdict(3, "cylinder n=8 hits alpha targets within 0.02", ok,
             ", ".join(f"{t}: gap {g:.4f}" for t, g in gaps.items()))


def test_criterion_04_hypar_alpha_limit():
    t0 = time.perf_counter()
    alphas = {}
    for n in (4, 8, 16):
        system = assemble(generate(GeneratorSpec("hypar", n)))
        alphas[n] = rank_and_indeterminacy(system).alpha
    elapsed = time.perf_counter() - t0
    ok = (alphas[4] > alphas[8] > alphas[16]
          and all(a > 0.5 for a in alphas.values())
          and alphas[16] - 0.5 < alphas[4] - 0.5
          and elapsed < 10.0)
    _verdict(4, "hypar alpha decreases toward 0.5", ok,
             ", ".join(f"alpha({n})={a:.4f}" for n, a in alphas.items())
             + f", {elapsed:.2f}s")


def test_criterion_05_mero_alpha_limit():
    system = assemble(generate(GeneratorSpec("mero", 60)))
    cts = rank_and_indeterminacy(system)
    ok = 0.22 <= cts.alpha <= 0.26
    _verdict(5, "mero alpha(60) within [0.22, 0.26]", ok, f"alpha={cts.alpha:.4f}")


def test_criterion_06_route_equivalence(roster_results):
    worst_full = worst_diag = worst_trace = 0.0
    n_models = 0
    for name, _ in ROSTER:
        res = roster_results[name]
        n_models += 1
        assert res["cts"].n_q <= 5000
        worst_full = max(worst_full, float(np.abs(
            res["full_can"].payload - res["full_eff"].payload).max()))
        worst_diag = max(worst_diag, float(np.abs(
            res["diag_can"].payload - res["diag_eff"].payload).max()))
        for key in ("full_can", "full_eff", "diag_can", "diag_eff"):
            worst_trace = max(worst_trace, abs(res[key].trace - res["cts"].n_s))
    elapsed = roster_results["_elapsed"]
    ok = (n_models >= 12 and worst_full <= 1e-8 and worst_diag <= 1e-8
          and worst_trace <= 1e-6 and elapsed < 300.0)
    _verdict(6, "canonical and kernel routes agree on 14 models", ok,
             f"full gap {worst_full:.2e}, diag gap {worst_diag:.2e}, "
             f"trace gap {worst_trace:.2e}, {elapsed:.1f}s")


def test_criterion_07_projector_structure(roster_results):
    worst = {"idem": 0.0, "diag_lo": 0.0, "diag_hi": 0.0, "rank": 0,
             "sym": 0.0, "kernel_vec": 0.0, "image_vec": 0.0}
    for name, _ in ROSTER:
        res = roster_results[name]
        system, cts = res["system"], res["cts"]
        R = res["full_can"].payload
        worst["idem"] = max(worst["idem"], float(np.abs(R @ R - R).max()))
        d = np.diag(R)
        worst["diag_lo"] = min(worst["diag_lo"], float(d.min()))
        worst["diag_hi"] = max(worst["diag_hi"], float(d.max()))
        sv = np.linalg.svd(R, compute_uv=False)
        rank = int((sv > 1e-8 * max(sv[0], 1.0)).sum())
        worst["rank"] += int(rank != cts.n_s)
        # self-stress matrix CR is symmetric
        CR = system.C_diag[:, None] * R
        scale = max(float(np.abs(CR).max()), 1.0)
        worst["sym"] = max(worst["sym"], float(np.abs(CR - CR.T).max()) / scale)
        S = self_stress(system, kernel_basis(system))
        assert float(np.abs(S - S.T).max()) == 0.0
        # kernel vectors are fixed points, image vectors are annihilated
        U = kernel_basis(system).U
        if U.shape[1]:
            W = U / np.sqrt(system.C_diag)[:, None]
            worst["kernel_vec"] = max(worst["kernel_vec"],
                                      float(np.abs(R @ W - W).max()))
        A = system.A.toarray()
        worst["image_vec"] = max(worst["image_vec"], float(np.abs(R @ A).max()))
    ok = (worst["idem"] <= 1e-8 and worst["diag_lo"] >= -1e-8
          and worst["diag_hi"] <= 1 + 1e-8 and worst["rank"] == 0
          and worst["sym"] <= 1e-8 and worst["kernel_vec"] <= 1e-8
          and worst["image_vec"] <= 1e-8)
    _verdict(7, "projector and eigenstructure invariants", ok,
             f"idempotency {worst['idem']:.2e}, rank mismatches {worst['rank']}, "
             f"symmetry {worst['sym']:.2e}, eigvec gaps {worst['kernel_vec']:.2e}"
             f"/{worst['image_vec']:.2e}")


def test_criterion_08_element_oracle():
    from redmat.assembly import beam3d_factors
    from redmat.model import BEAM3D, Element, MaterialSection
    rng = np.random.default_rng(314)
    worst_rel, worst_rbm, trials = 0.0, 0.0, 0
    while trials < 100:
        xa = rng.uniform(-4, 4, size=3)
        xb = xa + rng.uniform(-4, 4, size=3)
        if np.linalg.norm(xb - xa) < 0.2:
            continue
        trials += 1
        sec = MaterialSection(
            E=float(rng.uniform(1e9, 5e11)), A=float(rng.uniform(1e-4, 1e-1)),
            G=float(rng.uniform(1e9, 2e11)), J=float(rng.uniform(1e-7, 1e-3)),
            Iyy=float(rng.uniform(1e-7, 1e-3)), Izz=float(rng.uniform(1e-7, 1e-3)))
        f = beam3d_factors(Element(0, BEAM3D, (0, 1), sec), xa, xb)
        K = f.A_e.T @ np.diag(f.C_diag) @ f.A_e
        K_ref = oracles.beam_stiffness_global(xa, xb, sec)
        worst_rel = max(worst_rel,
                        float(np.linalg.norm(K - K_ref) / np.linalg.norm(K_ref)))
        for motion in oracles.rigid_body_motions(xa, xb):
            worst_rbm = max(worst_rbm, float(np.abs(f.A_e @ motion).max()))
    ok = worst_rel <= 1e-10 and worst_rbm <= 1e-12
    _verdict(8, "beam factorization matches textbook stiffness", ok,
             f"{trials} geometries, rel gap {worst_rel:.2e}, rigid-body {worst_rbm:.2e}")


def test_criterion_09_determinate_zero():
    system = assemble(tetra_chain())
    worst = max(float(np.abs(redundancy_canonical(system).payload).max()),
                float(np.abs(redundancy_efficient(system).payload).max()))
    ok = worst <= 1e-10
    _verdict(9, "determinate truss yields the zero matrix", ok, f"max |R| = {worst:.2e}")


def test_criterion_10_unit_invariance():
    worst = 0.0
    for model in (two_bar(E2=3 * 2.1e11), generate(GeneratorSpec("mero", 4))):
        d_m = redundancy_diag_efficient(assemble(model)).payload
        d_mm = redundancy_diag_efficient(
            assemble(rescale_length_units(model, 1000.0))).payload
        worst = max(worst, float(np.abs(d_m - d_mm).max()))
    ok = worst <= 1e-8
    _verdict(10, "diagonal invariant under mm vs m units", ok, f"gap {worst:.2e}")


def test_criterion_11_speedup_shape():
    t0 = time.perf_counter()
    grid = BenchGrid(family="cylinder", ns=(40,), alphas=(0.1, 0.4), task="diag",
                     repetitions=3, threads=1)
    rows, _ = run_series(grid)
    elapsed = time.perf_counter() - t0
    speedups = {float(r["alpha"]): float(r["speedup"]) for r in rows}
    ok = (speedups[0.1] > 1.0 and speedups[0.1] > speedups[0.4]
          and elapsed < 900.0)
    _verdict(11, "kernel route speedup shape at n=40", ok,
             f"speedup(0.1)={speedups[0.1]:.2f}, speedup(0.4)={speedups[0.4]:.2f}, "
             f"{elapsed:.0f}s")
