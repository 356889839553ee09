"""Structural model types for redundancy analysis.

A model is a set of nodes, pin-jointed bars ("truss") or rigidly connected
spatial beams ("beam3d"), and supports that fix individual degrees of
freedom. Nodes touched by at least one beam carry 6 degrees of freedom
(three translations, three rotations); nodes touched only by bars carry 3.

The module also defines the on-disk JSON format, validation, the global
degree-of-freedom numbering, and the basic size counts used everywhere else.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"

TRUSS = "truss"
BEAM3D = "beam3d"
ELEMENT_KINDS = (TRUSS, BEAM3D)

#: global component order at a node; rotations exist only on 6-DOF nodes
DOF_COMPONENTS = ("tx", "ty", "tz", "rx", "ry", "rz")

#: number of generalized strain modes per element kind
MODES_PER_KIND = {TRUSS: 1, BEAM3D: 6}


@dataclass(frozen=True)
class Node:
    """A point in 3D space.

    Attributes:
        id: integer identifier, unique within a model.
        x, y, z: coordinates in a consistent length unit.
    """
    id: int
    x: float
    y: float
    z: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class MaterialSection:
    """Material and cross-section properties of one element.

    Attributes:
        E: Young's modulus.
        A: cross-section area.
        G: shear modulus (beams only).
        J: torsion constant (beams only).
        Iyy: second moment of area about the local y axis (beams only).
        Izz: second moment of area about the local z axis (beams only).
    """
    E: float
    A: float
    G: float | None = None
    J: float | None = None
    Iyy: float | None = None
    Izz: float | None = None


@dataclass(frozen=True)
class Element:
    """A bar or spatial beam connecting two nodes.

    Attributes:
        id: integer identifier, unique within a model.
        kind: "truss" (axial force only) or "beam3d" (axial, torsion,
            bending about both principal axes).
        node_ids: (start node id, end node id).
        section: material and cross-section properties.
        orientation_ref: reference vector fixing the principal-axis frame
            of a beam; None selects the default handling (global z axis,
            with a fallback for members parallel to it).
    """
    id: int
    kind: str
    node_ids: tuple[int, int]
    section: MaterialSection
    orientation_ref: tuple[float, float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        if self.orientation_ref is not None:
            object.__setattr__(self, "orientation_ref", tuple(self.orientation_ref))


@dataclass(frozen=True)
class Support:
    """Fixed degrees of freedom at one node.

    Attributes:
        node_id: the supported node.
        fixed: per-component booleans in DOF_COMPONENTS order; 3 entries
            for a node that carries only translations, 6 for a node that
            also carries rotations. True means the component is fixed.
    """
    node_id: int
    fixed: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "fixed", tuple(bool(b) for b in self.fixed))


@dataclass(frozen=True)
class StructuralModel:
    """An immutable structural model."""
    nodes: tuple[Node, ...]
    elements: tuple[Element, ...]
    supports: tuple[Support, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "supports", tuple(self.supports))

    def node_lookup(self) -> dict[int, Node]:
        return {nd.id: nd for nd in self.nodes}

    def beam_node_ids(self) -> frozenset[int]:
        """Ids of nodes touched by at least one beam (these carry 6 DOFs)."""
        touched = set()
        for el in self.elements:
            if el.kind == BEAM3D:
                touched.update(el.node_ids)
        return frozenset(touched)

    def node_arity(self, node_id: int, _beam_nodes: frozenset[int] | None = None) -> int:
        beam_nodes = self.beam_node_ids() if _beam_nodes is None else _beam_nodes
        return 6 if node_id in beam_nodes else 3


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_model: errors block analysis, warnings do not."""
    errors: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class ModelCounts:
    """Size counts of a model.

    n_s and alpha stay None until a rank computation has established the
    degree of statical indeterminacy.
    """
    n_nodes: int
    n_elements: int
    n: int
    n_q: int
    n_s: int | None = None
    alpha: float | None = None

    def with_indeterminacy(self, n_s: int) -> "ModelCounts":
        return replace(self, n_s=n_s, alpha=n_s / self.n_q if self.n_q else 0.0)


@dataclass(frozen=True)
class DofMap:
    """Global numbering of the free degrees of freedom.

    Attributes:
        n: number of free DOFs.
        node_dofs: node id -> global indices in DOF_COMPONENTS order,
            -1 marking a fixed component; length 3 or 6 per node.
        element_dofs: element id -> gather indices of the element DOF
            vector (6 for truss: translations of both nodes, 12 for
            beam3d), -1 where the component is fixed.
    """
    n: int
    node_dofs: dict[int, tuple[int, ...]]
    element_dofs: dict[int, tuple[int, ...]]


def validate_model(model: StructuralModel) -> ValidationReport:
    """Check a model for structural defects.

    Errors cover duplicate or dangling ids, nonpositive element lengths,
    missing or nonpositive section properties, support masks that do not
    match the node's degrees of freedom, and fully unsupported structures.
    A repeated bar between the same node pair is legal (it changes the
    redundancy distribution) and only yields a warning.
    """
    errors: list[str] = []
    warnings: list[str] = []

    seen_nodes: set[int] = set()
    for nd in model.nodes:
        if nd.id in seen_nodes:
            errors.append(f"duplicate node id {nd.id}")
        seen_nodes.add(nd.id)
    lookup = model.node_lookup()

    beam_nodes = model.beam_node_ids()
    connected: set[int] = set()
    seen_elements: set[int] = set()
    seen_pairs: dict[tuple[int, int, str], int] = {}
    for el in model.elements:
        if el.id in seen_elements:
            errors.append(f"duplicate element id {el.id}")
        seen_elements.add(el.id)

        if el.kind not in ELEMENT_KINDS:
            errors.append(f"element {el.id}: unknown kind '{el.kind}'")
            continue

        dangling = False
        for nid in el.node_ids:
            if nid not in lookup:
                errors.append(f"element {el.id}: dangling node reference {nid}")
                dangling = True
        connected.update(el.node_ids)

        if not dangling:
            i, j = el.node_ids
            if i == j:
                errors.append(f"element {el.id}: connects node {i} to itself")
            else:
                length = float(np.linalg.norm(lookup[j].position - lookup[i].position))
                if length <= 0.0:
                    errors.append(f"element {el.id}: nonpositive length")
                pair = (min(i, j), max(i, j), el.kind)
                if pair in seen_pairs:
                    warnings.append(
                        f"elements {seen_pairs[pair]} and {el.id}: duplicate {el.kind} "
                        f"between nodes {pair[0]} and {pair[1]}")
                else:
                    seen_pairs[pair] = el.id

        required = ("E", "A") if el.kind == TRUSS else ("E", "A", "G", "J", "Iyy", "Izz")
        for name in required:
            value = getattr(el.section, name)
            if value is None:
                errors.append(f"element {el.id}: missing section property {name}")
            elif not value > 0.0:
                errors.append(f"element {el.id}: nonpositive section property {name}")

    any_fixed = False
    seen_supports: set[int] = set()
    for sup in model.supports:
        if sup.node_id in seen_supports:
            errors.append(f"duplicate support for node {sup.node_id}")
        seen_supports.add(sup.node_id)
        if sup.node_id not in lookup:
            errors.append(f"support: dangling node reference {sup.node_id}")
            continue
        arity = 6 if sup.node_id in beam_nodes else 3
        if len(sup.fixed) != arity:
            errors.append(
                f"support at node {sup.node_id}: fixed mask has {len(sup.fixed)} entries, "
                f"node carries {arity} degrees of freedom")
        any_fixed = any_fixed or any(sup.fixed)

    if not any_fixed:
        errors.append("unsupported structure: no degree of freedom is fixed")

    for nd in model.nodes:
        if nd.id not in connected:
            warnings.append(f"node {nd.id} is not connected to any element")

    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


def build_dof_map(model: StructuralModel) -> DofMap:
    """Number the free degrees of freedom.

    Numbering is deterministic: nodes in ascending id order, components in
    DOF_COMPONENTS order, skipping fixed components. Fixed components get
    index -1 and never appear in an element gather list as a live column.
    """
    beam_nodes = model.beam_node_ids()
    fixed_masks = {}
    for sup in model.supports:
        arity = 6 if sup.node_id in beam_nodes else 3
        if len(sup.fixed) != arity:
            raise ValueError(
                f"support at node {sup.node_id}: fixed mask has {len(sup.fixed)} entries, "
                f"node carries {arity} degrees of freedom")
        if sup.node_id in fixed_masks:
            raise ValueError(f"duplicate support for node {sup.node_id}")
        fixed_masks[sup.node_id] = sup.fixed

    node_dofs: dict[int, tuple[int, ...]] = {}
    counter = 0
    for nd in sorted(model.nodes, key=lambda nd: nd.id):
        arity = 6 if nd.id in beam_nodes else 3
        mask = fixed_masks.get(nd.id, (False,) * arity)
        indices = []
        for comp in range(arity):
            if mask[comp]:
                indices.append(-1)
            else:
                indices.append(counter)
                counter += 1
        node_dofs[nd.id] = tuple(indices)

    element_dofs: dict[int, tuple[int, ...]] = {}
    for el in model.elements:
        i, j = el.node_ids
        if el.kind == TRUSS:
            gather = node_dofs[i][:3] + node_dofs[j][:3]
        else:
            if len(node_dofs[i]) != 6 or len(node_dofs[j]) != 6:
                raise ValueError(f"element {el.id}: beam end node lacks rotational DOFs")
            gather = node_dofs[i] + node_dofs[j]
        element_dofs[el.id] = gather

    return DofMap(n=counter, node_dofs=node_dofs, element_dofs=element_dofs)


def counts(model: StructuralModel, dof_map: DofMap | None = None) -> ModelCounts:
    """Basic size counts; n_s and alpha stay unset until a rank check."""
    if dof_map is None:
        dof_map = build_dof_map(model)
    n_q = sum(MODES_PER_KIND[el.kind] for el in model.elements)
    return ModelCounts(
        n_nodes=len(model.nodes),
        n_elements=len(model.elements),
        n=dof_map.n,
        n_q=n_q,
    )


def rescale_length_units(model: StructuralModel, factor: float) -> StructuralModel:
    """Express the same physical model in another length unit.

    factor is the number of new length units per old one (1000 converts
    meters to millimeters). Coordinates scale with factor, areas with
    factor**2, second moments and torsion constants with factor**4, and
    the moduli E and G with factor**-2 (N/m^2 becomes N/mm^2). The
    redundancy distribution of the rescaled model is unchanged.
    """
    if not factor > 0.0:
        raise ValueError("factor must be positive")
    f = float(factor)
    nodes = tuple(Node(nd.id, nd.x * f, nd.y * f, nd.z * f) for nd in model.nodes)
    elements = []
    for el in model.elements:
        sec = el.section
        scaled = MaterialSection(
            E=sec.E / f**2,
            A=sec.A * f**2,
            G=None if sec.G is None else sec.G / f**2,
            J=None if sec.J is None else sec.J * f**4,
            Iyy=None if sec.Iyy is None else sec.Iyy * f**4,
            Izz=None if sec.Izz is None else sec.Izz * f**4,
        )
        elements.append(replace(el, section=scaled))
    return StructuralModel(nodes=nodes, elements=tuple(elements), supports=model.supports)


# ---------------------------------------------------------------------------
# JSON model files
#
# {
#   "nodes":    [{"id": 0, "x": 0.0, "y": 0.0, "z": 0.0}, ...],
#   "elements": [{"id": 0, "kind": "truss", "nodes": [0, 1],
#                 "E": 2.1e11, "A": 0.01},
#                {"id": 1, "kind": "beam3d", "nodes": [1, 2],
#                 "E": 2.1e11, "G": 8.1e10, "A": 0.01, "J": 2e-5,
#                 "Iyy": 1e-5, "Izz": 1e-5,
#                 "orientation_ref": [0.0, 0.0, 1.0]}, ...],
#   "supports": [{"node": 0, "fixed": [true, true, true]}, ...]
# }
#
# Unknown keys are rejected so that typos fail loudly instead of being
# silently ignored.
# ---------------------------------------------------------------------------

_NODE_KEYS = {"id", "x", "y", "z"}
_SUPPORT_KEYS = {"node", "fixed"}
_ELEMENT_KEYS = {
    TRUSS: {"id", "kind", "nodes", "E", "A"},
    BEAM3D: {"id", "kind", "nodes", "E", "A", "G", "J", "Iyy", "Izz", "orientation_ref"},
}


def _reject_unknown(entry: dict, allowed: set[str], where: str) -> None:
    for key in entry:
        if key not in allowed:
            raise ValueError(f"unknown key '{key}' in {where}")


def _require(entry: dict, key: str, where: str):
    if key not in entry:
        raise ValueError(f"{where} is missing key '{key}'")
    return entry[key]


def model_from_dict(data: dict) -> StructuralModel:
    """Build a model from the JSON dictionary form, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ValueError("model file must contain a JSON object")
    _reject_unknown(data, {"nodes", "elements", "supports"}, "model file")

    nodes = []
    for entry in _require(data, "nodes", "model file"):
        _reject_unknown(entry, _NODE_KEYS, f"node entry {entry.get('id', '?')}")
        nodes.append(Node(
            id=int(_require(entry, "id", "node entry")),
            x=float(_require(entry, "x", f"node entry {entry['id']}")),
            y=float(_require(entry, "y", f"node entry {entry['id']}")),
            z=float(_require(entry, "z", f"node entry {entry['id']}")),
        ))

    elements = []
    for entry in _require(data, "elements", "model file"):
        eid = entry.get("id", "?")
        kind = _require(entry, "kind", f"element entry {eid}")
        if kind not in ELEMENT_KINDS:
            raise ValueError(f"element entry {eid}: unknown kind '{kind}'")
        _reject_unknown(entry, _ELEMENT_KEYS[kind], f"element entry {eid}")
        node_ids = _require(entry, "nodes", f"element entry {eid}")
        if len(node_ids) != 2:
            raise ValueError(f"element entry {eid}: 'nodes' must list exactly 2 node ids")
        if kind == TRUSS:
            section = MaterialSection(
                E=float(_require(entry, "E", f"element entry {eid}")),
                A=float(_require(entry, "A", f"element entry {eid}")),
            )
            ref = None
        else:
            section = MaterialSection(
                E=float(_require(entry, "E", f"element entry {eid}")),
                A=float(_require(entry, "A", f"element entry {eid}")),
                G=float(_require(entry, "G", f"element entry {eid}")),
                J=float(_require(entry, "J", f"element entry {eid}")),
                Iyy=float(_require(entry, "Iyy", f"element entry {eid}")),
                Izz=float(_require(entry, "Izz", f"element entry {eid}")),
            )
            raw = entry.get("orientation_ref")
            ref = None if raw is None else tuple(float(v) for v in raw)
            if ref is not None and len(ref) != 3:
                raise ValueError(f"element entry {eid}: orientation_ref must have 3 components")
        elements.append(Element(
            id=int(_require(entry, "id", "element entry")),
            kind=kind,
            node_ids=(int(node_ids[0]), int(node_ids[1])),
            section=section,
            orientation_ref=ref,
        ))

    supports = []
    for entry in _require(data, "supports", "model file"):
        _reject_unknown(entry, _SUPPORT_KEYS, f"support entry {entry.get('node', '?')}")
        fixed = _require(entry, "fixed", f"support entry {entry.get('node', '?')}")
        supports.append(Support(
            node_id=int(_require(entry, "node", "support entry")),
            fixed=tuple(bool(b) for b in fixed),
        ))

    return StructuralModel(nodes=tuple(nodes), elements=tuple(elements), supports=tuple(supports))


def model_to_dict(model: StructuralModel) -> dict:
    nodes = [{"id": nd.id, "x": nd.x, "y": nd.y, "z": nd.z} for nd in model.nodes]
    elements = []
    for el in model.elements:
        entry: dict = {"id": el.id, "kind": el.kind, "nodes": list(el.node_ids)}
        sec = el.section
        if el.kind == TRUSS:
            entry.update(E=sec.E, A=sec.A)
        else:
            entry.update(E=sec.E, A=sec.A, G=sec.G, J=sec.J, Iyy=sec.Iyy, Izz=sec.Izz)
            if el.orientation_ref is not None:
                entry["orientation_ref"] = list(el.orientation_ref)
        elements.append(entry)
    supports = [{"node": s.node_id, "fixed": [bool(b) for b in s.fixed]}
                for s in model.supports]
    return {"nodes": nodes, "elements": elements, "supports": supports}


def load_model(path: str | Path) -> StructuralModel:
    """Read a model from a JSON file (see model_from_dict for the schema)."""
    with open(path, "r", encoding="utf-8") as handle:
        data = json.load(handle)
    return model_from_dict(data)


def save_model(model: StructuralModel, path: str | Path) -> None:
    """Write a model to a JSON file."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_to_dict(model), handle, indent=1)
        handle.write("\n")
