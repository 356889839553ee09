"""Parametric model families for studies over size and redundancy level.

Three families with closed-form member counts:

* cylinder: a braced cylindrical truss tower (radius 1 m, height 10 m)
  with n nodes per ring and n+1 rings, bottom ring fully fixed. Ring,
  vertical, and one diagonal per cell are always present (the minimal
  determinate layout); further diagonals and ring chords are appended in
  a fixed order until the redundancy ratio alpha = n_s / n_q reaches the
  requested target within 0.02.
* mero: a square-on-square offset double-layer truss roof (MERO-type):
  (n+1)^2 top nodes on a sagging quadratic cap over an n x n module grid,
  n^2 bottom nodes under the cell centers, orthogonal chord bars in both
  layers and four diagonals per bottom node, four bottom corners fixed.
  alpha approaches 0.24 with size.
* hypar: an n x n grid of rigidly connected beams on the hyperbolic
  paraboloid z = 0.2 * x * y / width, clamped along two adjacent edges.
  alpha = (n + 2) / (2n + 2), decreasing toward 0.5 with refinement.

Generators are pure: the same spec yields the identical model, and node
and element numbering is stable (GENERATOR_FORMAT_VERSION tracks it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import BEAM3D, TRUSS, Element, MaterialSection, Node, StructuralModel, Support

GENERATOR_FORMAT_VERSION = "1.0"

FAMILIES = ("cylinder", "mero", "hypar")

STEEL_E = 2.1e11
STEEL_G = 8.1e10
#: default tube-like section for truss bars
TRUSS_SECTION = MaterialSection(E=STEEL_E, A=1.0e-2)
#: default section for beams (area, torsion constant, both second moments)
BEAM_SECTION = MaterialSection(E=STEEL_E, A=1.0e-2, G=STEEL_G, J=2.0e-5, Iyy=1.0e-5, Izz=1.0e-5)

#: achieved alpha must land within this distance of the target
ALPHA_TOL = 0.02


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one generated model."""
    family: str
    n: int
    alpha_target: float | None = None
    section: MaterialSection | None = None


def generate(spec: GeneratorSpec) -> StructuralModel:
    if spec.family == "cylinder":
        if spec.alpha_target is None:
            raise ValueError("cylinder generator needs alpha_target")
        return gen_cylinder(spec.n, spec.alpha_target, section=spec.section)
    if spec.family == "mero":
        return gen_mero(spec.n, section=spec.section)
    if spec.family == "hypar":
        return gen_hypar(spec.n, section=spec.section)
    raise ValueError(f"unknown family '{spec.family}', expected one of {FAMILIES}")


def cylinder_alpha_range(n: int) -> tuple[float, float]:
    """Achievable [min, max] alpha of the cylinder family at size n."""
    base_nq = n * (3 * n + 1)
    extras = 2 * n * n
    return n / base_nq, (n + extras) / (base_nq + extras)


def gen_cylinder(n: int, alpha_target: float, section: MaterialSection | None = None) -> StructuralModel:
    """Braced cylinder tower with a tunable redundancy ratio.

    Nodes sit on n+1 rings of n nodes (radius 1 m, total height 10 m);
    the bottom ring is fully fixed. The mandatory layout (rings,
    verticals, one diagonal per cell) is kinematically determinate with
    n_s = n. Extra members are appended in a fixed order (second diagonal
    per cell, then skip-one ring chords bottom-up) until alpha matches
    alpha_target; each extra raises n_s by one.
    """
    if n < 3:
        raise ValueError("cylinder generator needs n >= 3")
    if not 0.0 < alpha_target < 1.0:
        raise ValueError("alpha_target must lie in (0, 1)")
    sec = section or TRUSS_SECTION

    def nid(level, slot):
        return level * n + slot % n

    nodes = []
    for level in range(n + 1):
        z = 10.0 * level / n
        for slot in range(n):
            angle = 2.0 * math.pi * slot / n
            nodes.append(Node(nid(level, slot), math.cos(angle), math.sin(angle), z))

    pairs: list[tuple[int, int]] = []
    for level in range(n + 1):  # ring bars
        for slot in range(n):
            pairs.append((nid(level, slot), nid(level, slot + 1)))
    for level in range(n):  # verticals
        for slot in range(n):
            pairs.append((nid(level, slot), nid(level + 1, slot)))
    for level in range(n):  # first diagonal per cell
        for slot in range(n):
            pairs.append((nid(level, slot), nid(level + 1, slot + 1)))

    extras: list[tuple[int, int]] = []
    for level in range(n):  # second diagonal per cell
        for slot in range(n):
            extras.append((nid(level, slot + 1), nid(level + 1, slot)))
    for level in range(1, n + 1):  # ring chords on the free rings
        for slot in range(n):
            extras.append((nid(level, slot), nid(level, slot + 2)))

    base_nq = len(pairs)
    base_ns = base_nq - 3 * n * n  # = n for the mandatory layout
    weight = (alpha_target * base_nq - base_ns) / (1.0 - alpha_target)
    m = min(max(int(round(weight)), 0), len(extras))
    achieved = (base_ns + m) / (base_nq + m)
    if abs(achieved - alpha_target) > ALPHA_TOL:
        lo, hi = cylinder_alpha_range(n)
        raise ValueError(
            f"alpha_target {alpha_target} unreachable for cylinder n={n}; "
            f"achievable range is [{lo:.4f}, {hi:.4f}]")
    pairs.extend(extras[:m])

    elements = [Element(i, TRUSS, pair, sec) for i, pair in enumerate(pairs)]
    supports = [Support(nid(0, slot), (True, True, True)) for slot in range(n)]
    return StructuralModel(nodes=tuple(nodes), elements=tuple(elements), supports=tuple(supports))


def gen_mero(n: int, section: MaterialSection | None = None) -> StructuralModel:
    """Square-on-square offset double-layer truss roof over an n x n grid.

    Top layer: (n+1)^2 nodes at 1 m spacing on the sagging cap
    z(x, y) = h (1 - (((2x/L - 1)^2 + (2y/L - 1)^2) / 2)) with L = n and
    h = 0.2 L. Bottom layer: n^2 nodes under the cell centers, 0.7 m
    below the local cap surface. Chord bars run along both grid
    directions in both layers; every bottom node connects diagonally to
    the four corners of its cell. The four bottom corner nodes are fixed.
    """
    if n < 2:
        raise ValueError("mero generator needs n >= 2")
    sec = section or TRUSS_SECTION
    L = float(n)
    h = 0.2 * L

    def z_top(x, y):
        return h * (1.0 - (((2.0 * x / L - 1.0) ** 2 + (2.0 * y / L - 1.0) ** 2) / 2.0))

    def top(i, j):
        return j * (n + 1) + i

    def bottom(i, j):
        return (n + 1) ** 2 + j * n + i

    nodes = []
    for j in range(n + 1):
        for i in range(n + 1):
            nodes.append(Node(top(i, j), float(i), float(j), z_top(i, j)))
    for j in range(n):
        for i in range(n):
            xc, yc = i + 0.5, j + 0.5
            nodes.append(Node(bottom(i, j), xc, yc, z_top(xc, yc) - 0.7))

    pairs: list[tuple[int, int]] = []
    for j in range(n + 1):  # top chords, x direction
        for i in range(n):
            pairs.append((top(i, j), top(i + 1, j)))
    for j in range(n):  # top chords, y direction
        for i in range(n + 1):
            pairs.append((top(i, j), top(i, j + 1)))
    for j in range(n):  # bottom chords, x direction
        for i in range(n - 1):
            pairs.append((bottom(i, j), bottom(i + 1, j)))
    for j in range(n - 1):  # bottom chords, y direction
        for i in range(n):
            pairs.append((bottom(i, j), bottom(i, j + 1)))
    for j in range(n):  # diagonals to the four cell corners
        for i in range(n):
            for ci, cj in ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)):
                pairs.append((bottom(i, j), top(ci, cj)))

    elements = [Element(k, TRUSS, pair, sec) for k, pair in enumerate(pairs)]
    corners = (bottom(0, 0), bottom(n - 1, 0), bottom(0, n - 1), bottom(n - 1, n - 1))
    supports = [Support(c, (True, True, True)) for c in corners]
    return StructuralModel(nodes=tuple(nodes), elements=tuple(elements), supports=tuple(supports))


def gen_hypar(n: int, section: MaterialSection | None = None) -> StructuralModel:
    """Beam grid on a hyperbolic paraboloid, clamped along two edges.

    (n+1)^2 nodes at 1 m plan spacing on z = kappa x y with
    kappa = 0.2 / width (corner rise of 0.2 times the plan width), beams
    along both grid directions, and all 6 DOFs clamped at the 2n+1 nodes
    of the two edges x = 0 and y = 0.
    """
    if n < 2:
        raise ValueError("hypar generator needs n >= 2")
    sec = section or BEAM_SECTION
    kappa = 0.2 / float(n)

    def nid(i, j):
        return j * (n + 1) + i

    nodes = []
    for j in range(n + 1):
        for i in range(n + 1):
            nodes.append(Node(nid(i, j), float(i), float(j), kappa * i * j))

    pairs: list[tuple[int, int]] = []
    for j in range(n + 1):  # beams, x direction
        for i in range(n):
            pairs.append((nid(i, j), nid(i + 1, j)))
    for j in range(n):  # beams, y direction
        for i in range(n + 1):
            pairs.append((nid(i, j), nid(i, j + 1)))

    elements = [Element(k, BEAM3D, pair, sec) for k, pair in enumerate(pairs)]
    clamped = sorted({nid(i, 0) for i in range(n + 1)} | {nid(0, j) for j in range(n + 1)})
    supports = [Support(c, (True,) * 6) for c in clamped]
    return StructuralModel(nodes=tuple(nodes), elements=tuple(elements), supports=tuple(supports))


def jitter_stiffness(model: StructuralModel, seed: int = 0,
                     low: float = 0.5, high: float = 2.0) -> StructuralModel:
    """Scale every element's Young's modulus by a reproducible random factor.

    Factors are drawn uniformly from [low, high) with numpy's PCG64
    generator seeded by `seed` (default 0), one draw per element in model
    order. Stiffness jitter changes the redundancy distribution but not
    its total: trace(R) stays n_s.
    """
    if not 0.0 < low <= high:
        raise ValueError("need 0 < low <= high")
    rng = np.random.default_rng(seed)
    factors = rng.uniform(low, high, size=len(model.elements))
    elements = tuple(
        replace(el, section=replace(el.section, E=el.section.E * float(f)))
        for el, f in zip(model.elements, factors))
    return StructuralModel(nodes=model.nodes, elements=elements, supports=model.supports)
