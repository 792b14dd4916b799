"""Threshold access trees: parsing, partitioning and canonical encoding.

Grammar (keywords are case-insensitive)::

    expr   := term ("or" term)*
    term   := factor ("and" factor)*
    factor := attribute | "(" expr ")" | int "of" "(" expr ("," expr)* ")"

``A and B and C`` becomes one 3-of-3 gate; parentheses always introduce a
new node. Nodes are numbered in preorder, so node ids are canonical.
"""

from __future__ import annotations

import hashlib
import re
import struct
from collections import deque
from dataclasses import dataclass
from typing import Iterable

SERIAL_VERSION = 0x01
DIGEST_BYTES = 32

_KIND_LEAF = 0x00
_KIND_GATE = 0x01

ATTRIBUTE_RE = re.compile(r"[A-Za-z0-9_:.\-]+")
_TOKEN_RE = re.compile(r"\s*(?:(?P<punct>[(),])|(?P<word>[A-Za-z0-9_:.\-]+))")
_KEYWORDS = {"and", "or", "of"}


class PolicyError(ValueError):
    """Structurally invalid tree (bad threshold, empty attribute, ...)."""


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class TreeDecodeError(ValueError):
    """Serialized tree body is malformed or its digest does not verify."""


@dataclass(frozen=True)
class Node:
    id: int
    attribute: str | None = None
    threshold: int | None = None
    children: tuple[int, ...] = ()
    index: int = 0  # 1-based position under the parent, 0 for the root
    parent: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.attribute is not None


@dataclass(frozen=True)
class AccessTree:
    nodes: tuple[Node, ...]
    root_id: int = 0

    def __post_init__(self):
        _validate(self)

    @property
    def root(self) -> Node:
        return self.nodes[self.root_id]

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def gates(self) -> list[Node]:
        return [n for n in self.nodes if not n.is_leaf]

    def leaves(self) -> list[Node]:
        return [n for n in self.nodes if n.is_leaf]

    def attributes(self) -> set[str]:
        return {n.attribute for n in self.nodes if n.is_leaf}

    def leaves_under(self, node_id: int) -> list[Node]:
        node = self.nodes[node_id]
        if node.is_leaf:
            return [node]
        out: list[Node] = []
        for child in node.children:
            out.extend(self.leaves_under(child))
        return out

    def to_policy(self, node_id: int | None = None) -> str:
        """Render back to policy text (always uses ``k of (...)`` form)."""
        node = self.nodes[self.root_id if node_id is None else node_id]
        if node.is_leaf:
            return node.attribute
        inner = ", ".join(self.to_policy(c) for c in node.children)
        return f"{node.threshold} of ({inner})"


def _validate(tree: AccessTree) -> None:
    nodes = tree.nodes
    if not nodes:
        raise PolicyError("empty tree")
    for pos, node in enumerate(nodes):
        if node.id != pos:
            raise PolicyError("node ids must equal their position")
        if node.is_leaf:
            if node.children or node.threshold is not None:
                raise PolicyError("leaf nodes carry neither children nor a threshold")
            if not node.attribute or not ATTRIBUTE_RE.fullmatch(node.attribute):
                raise PolicyError(f"invalid attribute {node.attribute!r}")
        else:
            if not node.children:
                raise PolicyError(f"gate {node.id} has no children")
            if node.threshold is None or not 1 <= node.threshold <= len(node.children):
                raise PolicyError(
                    f"threshold {node.threshold} invalid for {len(node.children)} children"
                )
            for idx, child in enumerate(node.children, start=1):
                c = nodes[child] if 0 <= child < len(nodes) else None
                if c is None or c.parent != node.id or c.index != idx:
                    raise PolicyError(f"child link {node.id}->{child} is inconsistent")
    seen = set()
    stack = [tree.root_id]
    if nodes[tree.root_id].parent is not None:
        raise PolicyError("root must not have a parent")
    while stack:
        nid = stack.pop()
        if nid in seen:
            raise PolicyError("tree contains a cycle or shared node")
        seen.add(nid)
        stack.extend(nodes[nid].children)
    if len(seen) != len(nodes):
        raise PolicyError("unreachable nodes in tree")


# -- construction -----------------------------------------------------------

def tree_from_spec(spec) -> AccessTree:
    """Build a tree from nested ``(k, [children...])`` tuples and attribute strings."""
    nodes: list[Node] = []

    def build(item, parent: int | None, index: int) -> int:
        nid = len(nodes)
        nodes.append(None)  # reserve the preorder slot
        if isinstance(item, str):
            nodes[nid] = Node(nid, attribute=item, index=index, parent=parent)
            return nid
        k, kids = item
        child_ids = tuple(build(c, nid, i) for i, c in enumerate(kids, start=1))
        nodes[nid] = Node(nid, threshold=k, children=child_ids, index=index, parent=parent)
        return nid

    build(spec, None, 0)
    return AccessTree(tuple(nodes))


def tree_to_spec(tree: AccessTree, node_id: int | None = None):
    node = tree.node(tree.root_id if node_id is None else node_id)
    if node.is_leaf:
        return node.attribute
    return (node.threshold, [tree_to_spec(tree, c) for c in node.children])


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN_RE.match(text, pos)
            if not m:
                start = len(text) - len(text[pos:].lstrip())
                raise PolicySyntaxError(f"unexpected character {text[start]!r}", start)
            if m.group("punct"):
                self.tokens.append(("punct", m.group("punct"), m.start("punct")))
            else:
                word = m.group("word")
                kind = "kw" if word.lower() in _KEYWORDS else "word"
                self.tokens.append((kind, word.lower() if kind == "kw" else word, m.start("word")))
            pos = m.end()
        self.i = 0

    def peek(self, offset: int = 0):
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else ("end", "", len(self.text))

    def take(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value else kind
            got = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise PolicySyntaxError(f"expected {want}, found {got}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        if not self.tokens:
            raise PolicySyntaxError("empty policy", 0)
        spec = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise PolicySyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return spec

    def expr(self):
        parts = [self.term()]
        while self.peek()[:2] == ("kw", "or"):
            self.i += 1
            parts.append(self.term())
        return parts[0] if len(parts) == 1 else (1, parts)

    def term(self):
        parts = [self.factor()]
        while self.peek()[:2] == ("kw", "and"):
            self.i += 1
            parts.append(self.factor())
        return parts[0] if len(parts) == 1 else (len(parts), parts)

    def factor(self):
        kind, value, pos = self.peek()
        if (kind, value) == ("punct", "("):
            self.i += 1
            inner = self.expr()
            self.take("punct", ")")
            return inner
        if kind == "word" and value.isdigit() and self.peek(1)[:2] == ("kw", "of"):
            self.i += 2
            self.take("punct", "(")
            kids = [self.expr()]
            while self.peek()[:2] == ("punct", ","):
                self.i += 1
                kids.append(self.expr())
            self.take("punct", ")")
            k = int(value)
            if not 1 <= k <= len(kids):
                raise PolicySyntaxError(f"threshold {k} invalid for {len(kids)} children", pos)
            return (k, kids)
        if kind == "word":
            self.i += 1
            return value
        got = repr(value) if kind != "end" else "end of input"
        raise PolicySyntaxError(f"expected attribute or '(', found {got}", pos)


def parse_policy(text: str | bytes) -> AccessTree:
    if isinstance(text, bytes):
        try:
            text = text.decode("ascii")
        except UnicodeDecodeError as exc:
            raise PolicySyntaxError("non-ASCII byte in policy", exc.start) from None
    return tree_from_spec(_Parser(text).parse())


# -- partitioning -------------------------------------------------------------


@dataclass(frozen=True)
class LeafChild:
    node_id: int
    attribute: str
    index: int


@dataclass(frozen=True)
class InteriorChild:
    node_id: int
    index: int
    block_index: int


@dataclass(frozen=True)
class SubTreePolicy:
    """One interior node with its immediate children: the policy of one block."""

    block_index: int
    interior_node: int
    threshold: int
    leaf_children: tuple[LeafChild, ...]
    interior_children: tuple[InteriorChild, ...]
    parent_block: int | None

    @property
    def child_count(self) -> int:
        return len(self.leaf_children) + len(self.interior_children)


def enumerate_blocks(tree: AccessTree) -> list[SubTreePolicy]:
    """One sub-tree per gate, breadth-first from the root (block 1)."""
    if tree.root.is_leaf:
        raise PolicyError("tree has no gate; wrap a single attribute as '1 of (A)'")
    order: list[int] = []
    queue = deque([tree.root_id])
    while queue:
        nid = queue.popleft()
        order.append(nid)
        queue.extend(c for c in tree.node(nid).children if not tree.node(c).is_leaf)
    block_of = {nid: i for i, nid in enumerate(order, start=1)}
    blocks = []
    for nid in order:
        node = tree.node(nid)
        leaves, interiors = [], []
        for c in node.children:
            child = tree.node(c)
            if child.is_leaf:
                leaves.append(LeafChild(c, child.attribute, child.index))
            else:
                interiors.append(InteriorChild(c, child.index, block_of[c]))
        blocks.append(
            SubTreePolicy(
                block_index=block_of[nid],
                interior_node=nid,
                threshold=node.threshold,
                leaf_children=tuple(leaves),
                interior_children=tuple(interiors),
                parent_block=block_of[node.parent] if node.parent is not None else None,
            )
        )
    return blocks


def root_branch_partition(tree: AccessTree) -> list[frozenset[str]]:
    """Attribute sets per root branch, made disjoint by lowest-branch assignment.

    An attribute that occurs under several root children is kept only in
    the lowest-index branch, so later sets may lose members (or end up
    empty).
    """
    root = tree.root
    if root.is_leaf:
        raise PolicyError("root must be a gate")
    taken: set[str] = set()
    sets = []
    for child in root.children:
        attrs = {leaf.attribute for leaf in tree.leaves_under(child)} - taken
        taken |= attrs
        sets.append(frozenset(attrs))
    return sets


def satisfies(tree: AccessTree, attrs: Iterable[str], node_id: int | None = None) -> bool:
    held = attrs if isinstance(attrs, (set, frozenset)) else set(attrs)
    node = tree.node(tree.root_id if node_id is None else node_id)
    if node.is_leaf:
        return node.attribute in held
    count = 0
    for child in node.children:
        if satisfies(tree, held, child):
            count += 1
            if count >= node.threshold:
                return True
    return False


# -- canonical serialization ----------------------------------------------------


@dataclass(frozen=True)
class SerializedTree:
    body: bytes
    digest: bytes

    def to_bytes(self) -> bytes:
        return self.body + self.digest

    def __len__(self) -> int:
        return len(self.body) + len(self.digest)


def canonical_serialize(tree: AccessTree) -> SerializedTree:
    out = bytearray([SERIAL_VERSION])
    out += struct.pack(">I", len(tree.nodes))

    def emit(nid: int):
        node = tree.node(nid)
        if node.is_leaf:
            attr = node.attribute.encode()
            out.extend(struct.pack(">BHHH", _KIND_LEAF, 0, 0, len(attr)))
            out.extend(attr)
        else:
            out.extend(struct.pack(">BHHH", _KIND_GATE, node.threshold, len(node.children), 0))
            for c in node.children:
                emit(c)

    emit(tree.root_id)
    body = bytes(out)
    return SerializedTree(body, hashlib.sha256(body).digest())


def parse_serialized(data: bytes | SerializedTree) -> AccessTree:
    """Inverse of :func:`canonical_serialize`; verifies the trailing digest."""
    if isinstance(data, SerializedTree):
        data = data.to_bytes()
    if len(data) < 5 + DIGEST_BYTES:
        raise TreeDecodeError("serialized tree too short")
    body, digest = data[:-DIGEST_BYTES], data[-DIGEST_BYTES:]
    if hashlib.sha256(body).digest() != digest:
        raise TreeDecodeError("tree digest mismatch")
    if body[0] != SERIAL_VERSION:
        raise TreeDecodeError(f"unknown tree encoding version {body[0]}")
    (count,) = struct.unpack_from(">I", body, 1)
    pos = 5

    def read(depth: int):
        nonlocal pos
        if depth > count or pos + 7 > len(body):
            raise TreeDecodeError("truncated node record")
        kind, k, nchild, alen = struct.unpack_from(">BHHH", body, pos)
        pos += 7
        if kind == _KIND_LEAF:
            if k or nchild or pos + alen > len(body):
                raise TreeDecodeError("malformed leaf record")
            attr = body[pos : pos + alen]
            pos += alen
            try:
                return attr.decode("ascii")
            except UnicodeDecodeError:
                raise TreeDecodeError("attribute is not ASCII") from None
        if kind == _KIND_GATE and alen == 0:
            return (k, [read(depth + 1) for _ in range(nchild)])
        raise TreeDecodeError(f"unknown node kind {kind}")

    try:
        spec = read(0)
    except RecursionError:
        raise TreeDecodeError("tree nesting too deep") from None
    if pos != len(body):
        raise TreeDecodeError("trailing bytes after node records")
    try:
        tree = tree_from_spec(spec)
    except PolicyError as exc:
        raise TreeDecodeError(str(exc)) from None
    if len(tree.nodes) != count:
        raise TreeDecodeError("node count mismatch")
    return tree
