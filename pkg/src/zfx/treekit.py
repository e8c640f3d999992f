"""Ordered binary trees with labelled leaves.

Every internal node has exactly two ordered children. Nodes carry an
``ident`` that survives subtree extraction, so a node of a leaf-generated
subtree can be traced back to the tree it came from. For complete trees the
ident is ``(rank, prefix)``: distance from the root and the left-to-right
position on that level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable

from . import guards
from .errors import InvalidArgumentError, ResourceLimitError


@dataclass(frozen=True, eq=False)
class Node:
    ident: Hashable
    left: "Node | None" = None
    right: "Node | None" = None
    label: int | None = None

    @property
    def is_leaf(self):
        return self.left is None

    def __repr__(self):
        if self.is_leaf:
            return f"Leaf({self.label})"
        return f"Node({self.ident!r})"


class OrderedBinaryTree:
    """Immutable ordered binary tree; ``len(tree)`` is the number of leaves."""

    def __init__(self, root: Node):
        self.root = root
        self._leaves = tuple(_leaves(root))
        count = 2 * len(self._leaves) - 1
        if count > guards.limit("tree_nodes"):
            raise ResourceLimitError("tree nodes", count, guards.limit("tree_nodes"))

    def __len__(self):
        return len(self._leaves)

    def __repr__(self):
        return f"OrderedBinaryTree({to_string(self)})"

    def __eq__(self, other):
        return isinstance(other, OrderedBinaryTree) and to_string(self) == to_string(other)

    def __hash__(self):
        return hash(to_string(self))

    @property
    def leaves(self):
        return self._leaves

    def leaf_labels(self):
        return tuple(leaf.label for leaf in self._leaves)

    def nodes(self):
        """Preorder, left child first."""
        stack = [self.root]
        while stack:
            v = stack.pop()
            yield v
            if not v.is_leaf:
                stack.append(v.right)
                stack.append(v.left)

    def internal_nodes(self):
        return [v for v in self.nodes() if not v.is_leaf]

    def edge_count(self):
        return 2 * len(self) - 2

    def parents(self):
        """Map node ident -> (parent node, side) with side 0 = left, 1 = right."""
        out = {}
        for v in self.nodes():
            if not v.is_leaf:
                out[v.left.ident] = (v, 0)
                out[v.right.ident] = (v, 1)
        return out

    def leaf_by_label(self):
        return {leaf.label: leaf for leaf in self._leaves}


def _leaves(root):
    out = []
    stack = [root]
    while stack:
        v = stack.pop()
        if v.is_leaf:
            out.append(v)
        else:
            stack.append(v.right)
            stack.append(v.left)
    return out


# -- construction -------------------------------------------------------------

def complete_tree(depth: int) -> OrderedBinaryTree:
    """Complete tree with 2^depth leaves labelled 1..2^depth."""
    if depth < 0:
        raise InvalidArgumentError("depth must be nonnegative")
    guards.check("tree_depth", depth, "tree depth")
    guards.check("tree_nodes", 2 ** (depth + 1) - 1, "tree nodes")

    def build(rank, prefix):
        if rank == depth:
            return Node((rank, prefix), label=prefix + 1)
        return Node((rank, prefix), build(rank + 1, 2 * prefix), build(rank + 1, 2 * prefix + 1))

    return OrderedBinaryTree(build(0, 0))


def complete_subtree(depth: int, leaves: Iterable[int]) -> OrderedBinaryTree:
    """``leaf_generated_subtree(complete_tree(depth), leaves)`` without building the big tree."""
    xs = sorted(set(leaves))
    if not xs:
        raise InvalidArgumentError("leaf set must be nonempty")
    if xs[0] < 1 or xs[-1] > 2**depth:
        raise InvalidArgumentError(f"leaves must lie in [1, {2**depth}]")

    def build(items):
        if len(items) == 1:
            x = items[0]
            return Node((depth, x - 1), label=x)
        a, b = items[0] - 1, items[-1] - 1
        rank = depth - (a ^ b).bit_length()
        bit = depth - rank - 1
        cut = next(i for i, x in enumerate(items) if ((x - 1) >> bit) & 1)
        return Node((rank, a >> (depth - rank)), build(items[:cut]), build(items[cut:]))

    return OrderedBinaryTree(build(xs))


def leaf_generated_subtree(T: OrderedBinaryTree, X: Iterable[int]) -> OrderedBinaryTree:
    """Subtree spanned by the leaves labelled ``X`` (closure under least common ancestors).

    Nodes with a single surviving child are contracted; surviving nodes keep
    their idents.
    """
    wanted = set(X)
    if not wanted:
        raise InvalidArgumentError("leaf set must be nonempty")
    missing = wanted - set(T.leaf_labels())
    if missing:
        raise InvalidArgumentError(f"labels {sorted(missing)} are not leaves of the tree")

    def walk(v):
        if v.is_leaf:
            return v if v.label in wanted else None
        a, b = walk(v.left), walk(v.right)
        if a is None:
            return b
        if b is None:
            return a
        if a is v.left and b is v.right:
            return v
        return Node(v.ident, a, b)

    return OrderedBinaryTree(walk(T.root))


def restricted_tree(T: OrderedBinaryTree, sigma) -> OrderedBinaryTree:
    """Subtree generated by the leaves labelled 1 or * by ``sigma``.

    ``sigma`` maps label -> symbol, or lists symbols for the leaves left to right.
    """
    labels = T.leaf_labels()
    if not isinstance(sigma, dict):
        if len(sigma) != len(labels):
            raise InvalidArgumentError(f"restriction has {len(sigma)} symbols for {len(labels)} leaves")
        sigma = dict(zip(labels, sigma))
    keep = [lab for lab in labels if sigma[lab] in ("1", "*", 1)]
    if not keep:
        raise InvalidArgumentError("restriction fixes every leaf to 0")
    return leaf_generated_subtree(T, keep)


# -- classification -----------------------------------------------------------

@dataclass(frozen=True)
class LeafClassification:
    twins: frozenset
    lone_leaves: frozenset
    twin_pairs: tuple
    lone_parents: frozenset
    twin_parents: frozenset


def classify_leaves(T: OrderedBinaryTree) -> LeafClassification:
    twins, pairs, twin_parents, lone_parents = set(), [], set(), set()
    for v in T.nodes():
        if v.is_leaf:
            continue
        if v.left.is_leaf and v.right.is_leaf:
            twins.update((v.left.label, v.right.label))
            pairs.append((v.left.label, v.right.label))
            twin_parents.add(v.ident)
        elif v.left.is_leaf or v.right.is_leaf:
            lone_parents.add(v.ident)
    lone = frozenset(T.leaf_labels()) - twins
    return LeafClassification(frozenset(twins), lone, tuple(pairs),
                              frozenset(lone_parents), frozenset(twin_parents))


def skeleton(T: OrderedBinaryTree) -> OrderedBinaryTree:
    if len(T) < 2:
        raise InvalidArgumentError("a single-leaf tree has no skeleton")
    return leaf_generated_subtree(T, classify_leaves(T).twins)


def inner_edges(sk: OrderedBinaryTree) -> list:
    """Edges between two internal nodes, as (upper ident, lower ident).

    Numbered by a left-first depth-first visit of the lower endpoint, which
    depends only on the shape of the tree.
    """
    out = []
    for v in sk.nodes():
        if v.is_leaf:
            continue
        for child in (v.left, v.right):
            if not child.is_leaf:
                out.append((v.ident, child.ident))
    # nodes() is preorder, and children are appended in left-right order per
    # parent; re-sort by preorder position of the lower endpoint.
    order = {v.ident: i for i, v in enumerate(sk.nodes())}
    out.sort(key=lambda e: order[e[1]])
    return out


@dataclass(frozen=True)
class Attachment:
    """A node of T inserted on a skeleton edge, with its lone leaf."""

    ident: Hashable
    side: int  # side of the leaf child: 0 left, 1 right
    leaf: int


@dataclass(frozen=True)
class SkeletonDecomposition:
    skeleton: OrderedBinaryTree
    edge_attachments: dict = field(default_factory=dict)  # edge index (1-based) -> tuple of Attachment
    root_chain: tuple = ()

    def attachment_count(self):
        return len(self.root_chain) + sum(len(a) for a in self.edge_attachments.values())


def skeleton_decomposition(T: OrderedBinaryTree) -> SkeletonDecomposition:
    sk = skeleton(T)
    sk_ids = {v.ident for v in sk.nodes()}
    edges = inner_edges(sk)
    index = {e: i + 1 for i, e in enumerate(edges)}
    chain = []
    attached = {i + 1: [] for i in range(len(edges))}

    # walk T top-down; `pending` collects lone parents until the next skeleton node
    stack = [(T.root, None, [])]
    while stack:
        v, upper, pending = stack.pop()
        if v.ident in sk_ids:
            if upper is None:
                chain = pending
            elif pending:
                key = (upper, v.ident)
                if key not in index:
                    raise AssertionError("lone parent on a leaf edge of the skeleton")
                attached[index[key]] = pending
            if not v.is_leaf:
                stack.append((v.right, v.ident, []))
                stack.append((v.left, v.ident, []))
            continue
        # a non-skeleton internal node has exactly one leaf child
        if v.left.is_leaf:
            leaf, rest, side = v.left, v.right, 0
        else:
            leaf, rest, side = v.right, v.left, 1
        stack.append((rest, upper, pending + [Attachment(v.ident, side, leaf.label)]))
    return SkeletonDecomposition(sk, {i: tuple(a) for i, a in attached.items()}, tuple(chain))


def reassemble(dec: SkeletonDecomposition) -> OrderedBinaryTree:
    """Inverse of skeleton_decomposition."""
    edges = inner_edges(dec.skeleton)
    by_lower = {low: dec.edge_attachments.get(i + 1, ()) for i, (_, low) in enumerate(edges)}

    def hang(chain, bottom):
        node = bottom
        for att in reversed(chain):
            leaf = Node(("leaf", att.leaf), label=att.leaf)
            node = Node(att.ident, leaf, node) if att.side == 0 else Node(att.ident, node, leaf)
        return node

    def build(v):
        if v.is_leaf:
            return v
        kids = []
        for child in (v.left, v.right):
            sub = build(child)
            kids.append(hang(by_lower.get(child.ident, ()), sub) if not child.is_leaf else sub)
        return Node(v.ident, kids[0], kids[1])

    return OrderedBinaryTree(hang(dec.root_chain, build(dec.skeleton.root)))


# -- serialization ------------------------------------------------------------

def to_string(T: OrderedBinaryTree) -> str:
    def fmt(v):
        if v.is_leaf:
            return str(v.label)
        return f"({fmt(v.left)},{fmt(v.right)})"

    return fmt(T.root)


def from_string(text: str) -> OrderedBinaryTree:
    """Parse ``((1,2),(3,4))``; node idents are preorder indices."""
    s = text.replace(" ", "")
    pos = 0
    counter = 0

    def parse():
        nonlocal pos, counter
        my_id = counter
        counter += 1
        if pos < len(s) and s[pos] == "(":
            pos += 1
            left = parse()
            if pos >= len(s) or s[pos] != ",":
                raise InvalidArgumentError(f"expected ',' at {pos} in {text!r}")
            pos += 1
            right = parse()
            if pos >= len(s) or s[pos] != ")":
                raise InvalidArgumentError(f"expected ')' at {pos} in {text!r}")
            pos += 1
            return Node(my_id, left, right)
        start = pos
        while pos < len(s) and s[pos].isdigit():
            pos += 1
        if start == pos:
            raise InvalidArgumentError(f"expected a leaf label at {pos} in {text!r}")
        return Node(my_id, label=int(s[start:pos]))

    root = parse()
    if pos != len(s):
        raise InvalidArgumentError(f"trailing input at {pos} in {text!r}")
    T = OrderedBinaryTree(root)
    labels = T.leaf_labels()
    if len(set(labels)) != len(labels):
        raise InvalidArgumentError("leaf labels must be distinct")
    return T


def caterpillar(k: int) -> OrderedBinaryTree:
    """Leaf 1 hangs off the root, leaf 2 off the next node, ..., twins k-1, k at the bottom."""
    if k < 1:
        raise InvalidArgumentError("need at least one leaf")
    text = str(k)
    if k >= 2:
        text = f"({k - 1},{k})"
        for lab in range(k - 2, 0, -1):
            text = f"({lab},{text})"
    return from_string(text)


def all_shapes(k: int):
    """Every ordered binary tree with k leaves, labelled 1..k left to right."""
    def shapes(lo, hi):
        if lo == hi:
            return [str(lo)]
        out = []
        for mid in range(lo, hi):
            for a in shapes(lo, mid):
                for b in shapes(mid + 1, hi):
                    out.append(f"({a},{b})")
        return out

    return [from_string(s) for s in shapes(1, k)]
