"""Small hand-built models shared across test modules."""
from redmat.model import (BEAM3D, Element, MaterialSection, Node, StructuralModel,
                          Support, TRUSS)

TRUSS_SEC = MaterialSection(E=2.1e11, A=1.0e-2)
BEAM_SEC = MaterialSection(E=2.1e11, A=1.0e-2, G=8.1e10, J=2.0e-5, Iyy=1.0e-5, Izz=1.5e-5)


def two_bar(E1=2.1e11, E2=2.1e11):
    """Two collinear bars, ends fixed, middle node free along the axis only.

    One redundant constraint; with equal stiffness R is the rank-one
    averaging projector [[.5, .5], [.5, .5]].
    """
    return StructuralModel(
        nodes=(Node(0, 0.0, 0.0, 0.0), Node(1, 1.0, 0.0, 0.0), Node(2, 2.0, 0.0, 0.0)),
        elements=(Element(0, TRUSS, (0, 1), MaterialSection(E=E1, A=1.0e-2)),
                  Element(1, TRUSS, (1, 2), MaterialSection(E=E2, A=1.0e-2))),
        supports=(Support(0, (True, True, True)),
                  Support(1, (False, True, True)),
                  Support(2, (True, True, True))))


def tetra_chain():
    """Statically determinate space truss: every free node held by 3 bars."""
    nodes = (Node(0, 0.0, 0.0, 0.0), Node(1, 1.0, 0.0, 0.0), Node(2, 0.5, 1.0, 0.0),
             Node(3, 0.5, 0.4, 1.0), Node(4, 0.6, 0.5, 2.0))
    pairs = [(0, 3), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)]
    elements = tuple(Element(i, TRUSS, p, TRUSS_SEC) for i, p in enumerate(pairs))
    supports = tuple(Support(i, (True, True, True)) for i in range(3))
    return StructuralModel(nodes, elements, supports)


def mechanism_truss():
    """Under-constrained: a single bar cannot hold a spatial node (defect 2)."""
    return StructuralModel(
        nodes=(Node(0, 0.0, 0.0, 0.0), Node(1, 1.0, 0.0, 0.0)),
        elements=(Element(0, TRUSS, (0, 1), TRUSS_SEC),),
        supports=(Support(0, (True, True, True)),))


def cantilever_beam(orientation_ref=None):
    """One clamped spatial beam along x; determinate (6 modes, 6 DOFs)."""
    return StructuralModel(
        nodes=(Node(0, 0.0, 0.0, 0.0), Node(1, 2.0, 0.0, 0.0)),
        elements=(Element(0, BEAM3D, (0, 1), BEAM_SEC, orientation_ref=orientation_ref),),
        supports=(Support(0, (True,) * 6),))


def propped_beam():
    """Clamped beam with the far end pinned: 3 redundant constraints."""
    return StructuralModel(
        nodes=(Node(0, 0.0, 0.0, 0.0), Node(1, 2.0, 0.0, 0.0)),
        elements=(Element(0, BEAM3D, (0, 1), BEAM_SEC),),
        supports=(Support(0, (True,) * 6),
                  Support(1, (True, True, True, False, False, False))))
