"""Redirector/server federation tree and client redirect resolution.

Origin servers sit at the leaves and hold files; redirectors sit above them.
A redirector asked for a file queries its subtree; if nothing below it holds
the file the request escalates to its parent, which searches the parts of its
own subtree not yet covered, and so on up to the root.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ParseError, TopologyError, UnknownNodeError, UsageError

REDIRECTOR = "redirector"
SERVER = "server"
_KIND_ALIASES = {"redirector": REDIRECTOR, "server": SERVER, "origin-server": SERVER}


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    parent: Optional[str]
    site: str
    holdings: frozenset = frozenset()
    children: tuple = ()

    @property
    def is_redirector(self) -> bool:
        return self.kind == REDIRECTOR


@dataclass(frozen=True)
class Topology:
    nodes: Mapping[str, Node]
    root: str
    depth: Mapping[str, int] = field(repr=False)

    def __getitem__(self, node_id) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def servers(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == SERVER]

    def redirectors(self) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == REDIRECTOR]

    def holders(self, lfn) -> list[str]:
        return sorted(n.id for n in self.servers() if lfn in n.holdings)


@dataclass(frozen=True)
class ResolveTrace:
    server: Optional[str]
    hops: tuple
    depth_queried: int

    @property
    def found(self) -> bool:
        return self.server is not None


def _find_cycle(parent_of: Mapping[str, Optional[str]]) -> Optional[str]:
    state: dict[str, int] = {}  # 1 = on current chain, 2 = known acyclic
    for start in parent_of:
        chain = []
        node = start
        while node is not None and state.get(node) is None:
            state[node] = 1
            chain.append(node)
            node = parent_of.get(node)
        if node is not None and state[node] == 1:
            return node
        for n in chain:
            state[n] = 2
    return None


def build_topology(records: Iterable[Mapping]) -> Topology:
    """Validate node records (declaration order = child query order)."""
    raw: dict[str, dict] = {}
    for rec in records:
        try:
            node_id = rec["id"]
            kind = _KIND_ALIASES[rec["kind"]]
        except KeyError as exc:
            raise TopologyError(f"node record {rec!r}: missing or invalid field {exc}") from None
        if not isinstance(node_id, str) or not node_id:
            raise TopologyError(f"node id must be a non-empty string: {node_id!r}", node_id)
        if node_id in raw:
            raise TopologyError(f"duplicate node id {node_id}", node_id)
        holdings = frozenset(rec.get("holdings") or ())
        if kind == REDIRECTOR and holdings:
            raise TopologyError(f"redirector {node_id} has holdings", node_id)
        raw[node_id] = {
            "kind": kind,
            "parent": rec.get("parent"),
            "site": rec.get("site", ""),
            "holdings": holdings,
        }

    parent_of = {nid: r["parent"] for nid, r in raw.items()}
    for nid, parent in parent_of.items():
        if parent is not None and parent not in raw:
            raise TopologyError(f"node {nid} has unknown parent {parent}", nid)
    cyclic = _find_cycle(parent_of)
    if cyclic is not None:
        raise TopologyError(f"cycle through node {cyclic}", cyclic)

    roots = [nid for nid, p in parent_of.items() if p is None]
    if len(roots) != 1:
        raise TopologyError(f"expected exactly one root, found {len(roots)}: {roots}")
    root = roots[0]
    if raw[root]["kind"] != REDIRECTOR:
        raise TopologyError(f"root {root} is not a redirector", root)

    children: dict[str, list[str]] = {nid: [] for nid in raw}
    for nid, parent in parent_of.items():
        if parent is not None:
            children[parent].append(nid)
    for nid, kids in children.items():
        if kids and raw[nid]["kind"] == SERVER:
            raise TopologyError(f"server {nid} has children", nid)

    depth = {root: 0}
    stack = [root]
    while stack:
        nid = stack.pop()
        for kid in children[nid]:
            depth[kid] = depth[nid] + 1
            stack.append(kid)

    nodes = {
        nid: Node(nid, r["kind"], r["parent"], r["site"], r["holdings"], tuple(children[nid]))
        for nid, r in raw.items()
    }
    return Topology(nodes, root, depth)


def load_topology(path) -> Topology:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", lineno, path) from None
    return build_topology(records)


def write_topology(topology: Topology, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for node in topology.nodes.values():
            rec = {"id": node.id, "kind": node.kind, "parent": node.parent, "site": node.site}
            if node.kind == SERVER:
                rec["holdings"] = sorted(node.holdings)
            fh.write(json.dumps(rec) + "\n")


def select_server(candidates: Sequence[str]) -> str:
    if not candidates:
        raise UsageError("select_server needs at least one candidate")
    return min(candidates)


def resolve(topology: Topology, start: str, lfn: str) -> ResolveTrace:
    node = topology[start]
    if not node.is_redirector:
        raise UsageError(f"resolve must start at a redirector, {start} is a {node.kind}")

    hops: list[str] = []

    def search(rid: str, skip: Optional[str]) -> Optional[str]:
        hops.append(rid)
        kids = [topology.nodes[c] for c in topology.nodes[rid].children]
        holding = [k.id for k in kids if k.kind == SERVER and lfn in k.holdings]
        if holding:
            return select_server(holding)
        for kid in kids:
            if kid.is_redirector and kid.id != skip:
                hit = search(kid.id, None)
                if hit is not None:
                    return hit
        return None

    current, searched = start, None
    server = None
    while current is not None:
        server = search(current, searched)
        if server is not None:
            break
        current, searched = topology.nodes[current].parent, current

    levels = {topology.depth[h] for h in hops}
    return ResolveTrace(server, tuple(hops), len(levels))
