"""Element factorization and global assembly.

Each element contributes a small set of generalized strain modes. A mode
is a row a_m of the compatibility map (strain = a_m . element DOFs) with
an associated positive stiffness weight c_m, chosen so that the element
stiffness factors exactly as K_e = A_e^T C_e A_e:

* truss: one axial mode, c = EA/L.
* beam3d: six natural modes (axial, torsion, and an antisymmetric plus a
  symmetric bending mode per principal axis). The 1/L normalization sits
  in C_e, which makes the resulting redundancy numbers independent of the
  length unit.

Stacking all element rows (by element id, then mode) gives the global
compatibility matrix A (n_q x n) over the free DOFs and the diagonal
stiffness C. Rows of elements whose DOFs are all fixed are kept as zero
rows: such an element is fully restrained and carries redundancy 1.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .model import (
    BEAM3D,
    TRUSS,
    DofMap,
    Element,
    ModelCounts,
    StructuralModel,
    build_dof_map,
    counts as model_counts,
    validate_model,
)

TRUSS_MODES = ("axial",)
BEAM3D_MODES = ("axial", "torsion", "bend_z_anti", "bend_z_sym", "bend_y_anti", "bend_y_sym")

#: members closer than this to parallel with the orientation reference
#: switch to the fallback reference
PARALLEL_TOL = 1e-6


@dataclass(frozen=True)
class ElementFactors:
    """Per-element factorization K_e = A_e^T diag(C_diag) A_e.

    A_e has one row per mode and one column per element DOF (6 for truss:
    translations of both nodes; 12 for beam3d: translations and rotations
    of both nodes).
    """
    A_e: np.ndarray
    C_diag: np.ndarray
    mode_labels: tuple[str, ...]


@dataclass(frozen=True)
class AssembledSystem:
    """Global compatibility matrix, stiffness diagonal, and row provenance."""
    A: sp.csr_matrix
    C_diag: np.ndarray
    row_index: tuple[tuple[int, str], ...]
    dof_map: DofMap
    counts: ModelCounts


def local_frame(axis: np.ndarray, orientation_ref=None):
    """Unit axis e1 plus principal directions e2, e3 of a member.

    e3 is the Gram-Schmidt rejection of the reference vector from e1,
    e2 = e3 x e1. Default reference is global z with a fallback to global
    y for members parallel to it; an explicitly supplied parallel
    reference is an error.
    """
    e1 = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(e1)
    if norm <= 0.0:
        raise ValueError("zero-length axis")
    e1 = e1 / norm
    if orientation_ref is None:
        rej = np.array([-e1[0] * e1[2], -e1[1] * e1[2], 1.0 - e1[2] ** 2])
        if np.linalg.norm(rej) < PARALLEL_TOL:
            ref = np.array([0.0, 1.0, 0.0])
            rej = ref - (ref @ e1) * e1
    else:
        ref = np.asarray(orientation_ref, dtype=float)
        nref = np.linalg.norm(ref)
        if nref <= 0.0:
            raise ValueError("orientation_ref must be nonzero")
        ref = ref / nref
        rej = ref - (ref @ e1) * e1
        if np.linalg.norm(rej) < PARALLEL_TOL:
            raise ValueError("orientation_ref is parallel to the member axis")
    e3 = rej / np.linalg.norm(rej)
    e2 = np.cross(e3, e1)
    return e1, e2, e3


def truss_factors(element: Element, xa: np.ndarray, xb: np.ndarray) -> ElementFactors:
    """Axial mode of a bar: elongation = d . (t2 - t1), weight EA/L."""
    d = np.asarray(xb, dtype=float) - np.asarray(xa, dtype=float)
    L = float(np.linalg.norm(d))
    if L <= 0.0:
        raise ValueError(f"element {element.id}: nonpositive length")
    d = d / L
    A_e = np.concatenate([-d, d])[None, :]
    C = np.array([element.section.E * element.section.A / L])
    return ElementFactors(A_e=A_e, C_diag=C, mode_labels=TRUSS_MODES)


def beam3d_factors(element: Element, xa: np.ndarray, xb: np.ndarray) -> ElementFactors:
    """Six natural modes of a spatial beam.

    Element DOF order: [t1, r1, t2, r2] (3-vectors each). With end
    translations t and rotations r, the mode strains are

        axial        e1 . (t2 - t1)
        torsion      e1 . (r2 - r1)
        bend_z_anti  (2/L) e2 . (t1 - t2) + e3 . (r1 + r2)
        bend_z_sym   e3 . (r2 - r1)
        bend_y_anti  (2/L) e3 . (t2 - t1) + e2 . (r1 + r2)
        bend_y_sym   e2 . (r2 - r1)

    with weights [EA, GJ, 3EIzz, EIzz, 3EIyy, EIyy] / L. All six rows
    annihilate rigid-body motion, and A_e^T C_e A_e reproduces the 12x12
    Euler-Bernoulli stiffness exactly.
    """
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    L = float(np.linalg.norm(xb - xa))
    if L <= 0.0:
        raise ValueError(f"element {element.id}: nonpositive length")
    e1, e2, e3 = local_frame(xb - xa, element.orientation_ref)
    z = np.zeros(3)

    A_e = np.block([
        [-e1,        z,   e1,         z],
        [z,          -e1, z,          e1],
        [2 * e2 / L, e3,  -2 * e2 / L, e3],
        [z,          -e3, z,          e3],
        [-2 * e3 / L, e2, 2 * e3 / L,  e2],
        [z,          -e2, z,          e2],
    ])
    sec = element.section
    C = np.array([
        sec.E * sec.A,
        sec.G * sec.J,
        3.0 * sec.E * sec.Izz,
        sec.E * sec.Izz,
        3.0 * sec.E * sec.Iyy,
        sec.E * sec.Iyy,
    ]) / L
    return ElementFactors(A_e=A_e, C_diag=C, mode_labels=BEAM3D_MODES)


def element_factors(element: Element, xa: np.ndarray, xb: np.ndarray) -> ElementFactors:
    if element.kind == TRUSS:
        return truss_factors(element, xa, xb)
    if element.kind == BEAM3D:
        return beam3d_factors(element, xa, xb)
    raise ValueError(f"element {element.id}: unknown kind '{element.kind}'")


def assemble(model: StructuralModel, dof_map: DofMap | None = None,
             validate: bool = True) -> AssembledSystem:
    """Build the global compatibility matrix and stiffness diagonal.

    Rows are ordered by ascending element id, then by the element's mode
    order; row_index records (element id, mode label) per row. Columns of
    fixed DOFs are dropped, so an element whose DOFs are all fixed
    contributes zero rows.
    """
    if validate:
        report = validate_model(model)
        if not report.ok:
            raise ValueError("invalid model: " + "; ".join(report.errors))
    if dof_map is None:
        dof_map = build_dof_map(model)
    lookup = model.node_lookup()

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    c_entries: list[float] = []
    row_index: list[tuple[int, str]] = []
    row = 0
    for el in sorted(model.elements, key=lambda el: el.id):
        xa = lookup[el.node_ids[0]].position
        xb = lookup[el.node_ids[1]].position
        factors = element_factors(el, xa, xb)
        gather = dof_map.element_dofs[el.id]
        for m, label in enumerate(factors.mode_labels):
            for k, col in enumerate(gather):
                v = factors.A_e[m, k]
                if col >= 0 and v != 0.0:
                    rows.append(row)
                    cols.append(col)
                    vals.append(v)
            c_entries.append(factors.C_diag[m])
            row_index.append((el.id, label))
            row += 1

    A = sp.csr_matrix((vals, (rows, cols)), shape=(row, dof_map.n), dtype=float)
    cts = model_counts(model, dof_map)
    return AssembledSystem(
        A=A,
        C_diag=np.asarray(c_entries, dtype=float),
        row_index=tuple(row_index),
        dof_map=dof_map,
        counts=cts,
    )


def assemble_stiffness(system: AssembledSystem) -> sp.csr_matrix:
    """Global stiffness K = A^T C A on the free DOFs (sparse)."""
    return (system.A.T @ sp.diags(system.C_diag) @ system.A).tocsr()


def dump_system(system: AssembledSystem, prefix: str | Path) -> tuple[Path, Path]:
    """Write A and diag(C) in MatrixMarket coordinate format for debugging."""
    prefix = Path(prefix)
    path_a = prefix.with_name(prefix.name + "_A.mtx")
    path_c = prefix.with_name(prefix.name + "_C.mtx")
    scipy.io.mmwrite(path_a, system.A.tocoo())
    scipy.io.mmwrite(path_c, sp.diags(system.C_diag).tocoo())
    return path_a, path_c
