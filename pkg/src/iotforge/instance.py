"""Flattening of the hierarchical design into a tree of named instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple

from . import model as m


class InstanceError(Exception):
    pass


@dataclass(frozen=True)
class InstanceNode:
    path: str
    name: str
    component: str
    kind: str
    children: Tuple["InstanceNode", ...] = ()

    def walk(self) -> Iterator["InstanceNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class InstancePort:
    instance: str
    port: str

    def __str__(self) -> str:
        return f"{self.instance}.{self.port}"


@dataclass(frozen=True)
class ResolvedConnection:
    source: InstancePort
    target: InstancePort
    owner: str  # path of the instance whose declaration holds the connector


@dataclass(frozen=True)
class InstanceModel:
    """Entity roots with their expanded parts.

    ``allocation`` maps every instance that is allocated, directly or through
    its nearest allocated ancestor, to its core.
    """

    roots: Tuple[InstanceNode, ...] = ()
    connections: Tuple[ResolvedConnection, ...] = ()
    allocation: Dict[str, m.CoreRef] = field(default_factory=dict)

    @property
    def instances(self) -> Tuple[InstanceNode, ...]:
        """All part instances below the entity roots, in pre-order."""
        return tuple(n for root in self.roots for n in root.walk() if n is not root)

    def find(self, path: str) -> Optional[InstanceNode]:
        head, _, rest = path.partition(".")
        node = next((r for r in self.roots if r.name == head), None)
        for seg in rest.split(".") if rest else ():
            if node is None:
                return None
            node = next((c for c in node.children if c.name == seg), None)
        return node

    def core_of(self, path: str) -> Optional[m.CoreRef]:
        return self.allocation.get(path)


def _expand(model: m.Model, comp: m.Component, path: str, name: str,
            stack: Tuple[str, ...], conns: list) -> InstanceNode:
    if comp.name in stack:
        cycle = " -> ".join(stack + (comp.name,))
        raise InstanceError(f"cyclic component containment: {cycle}")
    children = []
    for part in comp.parts:
        sub = model.component(part.component)
        if sub is None:
            raise InstanceError(
                f"part {path}.{part.name} has unknown type {part.component!r}")
        children.append(_expand(model, sub, f"{path}.{part.name}", part.name,
                                stack + (comp.name,), conns))
    for conn in comp.connections:
        ends = []
        for ref in (conn.source, conn.target):
            owner = path if ref.part is None else f"{path}.{ref.part}"
            ends.append(InstancePort(owner, ref.port))
        conns.append(ResolvedConnection(ends[0], ends[1], path))
    return InstanceNode(path, name, comp.name, comp.kind, tuple(children))


def build_instance_model(model: m.Model) -> InstanceModel:
    """Expand every entity into its instance tree and attach allocations.

    Raises :class:`InstanceError` for unknown part types, containment cycles
    and allocation paths that name no instance.
    """
    roots = []
    conns: list = []
    for entity in model.entities:
        name = m.root_instance_name(entity.name)
        roots.append(_expand(model, entity, name, name, (), conns))
    im = InstanceModel(tuple(roots), tuple(conns), {})

    direct: Dict[str, m.CoreRef] = {}
    for alloc in model.allocations:
        if im.find(alloc.instance) is None:
            raise InstanceError(f"allocation path {alloc.instance!r} not found")
        direct[alloc.instance] = alloc.core

    allocation: Dict[str, m.CoreRef] = {}

    def inherit(node: InstanceNode, core: Optional[m.CoreRef]) -> None:
        core = direct.get(node.path, core)
        if core is not None:
            allocation[node.path] = core
        for child in node.children:
            inherit(child, core)

    for root in im.roots:
        inherit(root, None)
    return InstanceModel(im.roots, im.connections, allocation)


def lookup(model: m.Model, path: str):
    """Resolve a dotted path against a model; returns None when nothing matches.

    ``""`` is the model itself. A path whose first segment names an entity
    root instance walks the instance tree (a trailing segment may name an
    operation, event or action of the reached instance). Otherwise the first
    segment names a declaration and later segments its members.
    """
    if path == "":
        return model
    segs = path.split(".")
    try:
        im = build_instance_model(model)
    except InstanceError:
        im = None
    if im is not None:
        node = im.find(path)
        if node is not None:
            return node
        parent = im.find(".".join(segs[:-1])) if len(segs) > 1 else None
        if parent is not None:
            member = _member(model, model.component(parent.component), segs[-1])
            if member is not None:
                return member

    head = segs[0]
    decl = (model.payload(head) or model.interface(head) or model.component(head)
            or m._find(model.hardware.processors, head))
    for seg in segs[1:]:
        if decl is None:
            return None
        decl = _child(model, decl, seg)
    return decl


def _member(model: m.Model, comp: Optional[m.Component], name: str):
    if comp is None:
        return None
    for _, op in m.provided_operations(model, comp):
        if op.name == name:
            return op
    sm = comp.statemachine
    if sm is not None:
        return sm.event(name) or sm.action(name)
    return None


def _child(model: m.Model, decl, name: str):
    if isinstance(decl, m.Payload):
        return m._find(decl.attributes, name)
    if isinstance(decl, m.Interface):
        return m._find(decl.operations, name)
    if isinstance(decl, m.Processor):
        return m._find(decl.cores, name)
    if isinstance(decl, m.Component):
        found = decl.port(name) or decl.part(name) or decl.property(name)
        if found is None and decl.statemachine is not None:
            sm = decl.statemachine
            found = sm.state(name) or sm.event(name) or sm.action(name)
        return found
    return None
