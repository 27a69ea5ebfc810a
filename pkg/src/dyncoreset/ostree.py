"""Order-statistics treap keyed by ``(random key, id)``.

Holds the random order of one group: every member carries an independent
uniform key, and the first ``n`` members of the order form the group's
uniform sample.
"""
from __future__ import annotations

import random

from .core import ops


class _Node:
    __slots__ = ("key", "val", "prio", "left", "right", "size")

    def __init__(self, key, val, prio):
        self.key = key
        self.val = val
        self.prio = prio
        self.left = None
        self.right = None
        self.size = 1


def _size(t):
    return t.size if t is not None else 0


def _fix(t):
    t.size = 1 + _size(t.left) + _size(t.right)


def _split(t, key):
    """Split into (< key, >= key)."""
    if t is None:
        return None, None
    ops.steps += 1
    if t.key < key:
        a, b = _split(t.right, key)
        t.right = a
        _fix(t)
        return t, b
    a, b = _split(t.left, key)
    t.left = b
    _fix(t)
    return a, t


def _merge(a, b):
    if a is None:
        return b
    if b is None:
        return a
    ops.steps += 1
    if a.prio > b.prio:
        a.right = _merge(a.right, b)
        _fix(a)
        return a
    b.left = _merge(a, b.left)
    _fix(b)
    return b


class RandomOrder:
    """Ordered map ``key -> value`` with rank and select in O(log n) expected."""

    def __init__(self, items=(), seed: int | None = None):
        self._rng = random.Random(seed)
        self.root = None
        items = sorted(items)
        if items:
            self._build(items)

    def _build(self, items):
        # linear-time Cartesian tree over sorted keys
        stack = []
        for key, val in items:
            node = _Node(key, val, self._rng.random())
            last = None
            while stack and stack[-1].prio < node.prio:
                last = stack.pop()
                _fix(last)
            node.left = last
            if stack:
                stack[-1].right = node
            stack.append(node)
        ops.steps += len(items)
        while len(stack) > 1:
            _fix(stack.pop())
        _fix(stack[0])
        self.root = stack[0]
        self._resize(self.root)

    def _resize(self, t):
        # post-order size recomputation after the stack build
        if t is None:
            return 0
        out = []
        st = [(t, False)]
        while st:
            node, done = st.pop()
            if node is None:
                continue
            if done:
                out.append(node)
            else:
                st.append((node, True))
                st.append((node.right, False))
                st.append((node.left, False))
        for node in out:
            _fix(node)
        return t.size

    def __len__(self) -> int:
        return _size(self.root)

    def insert(self, key, val) -> None:
        node = _Node(key, val, self._rng.random())
        a, b = _split(self.root, key)
        if b is not None:
            first = b
            while first.left is not None:
                first = first.left
            if first.key == key:
                raise KeyError(f"duplicate key {key!r}")
        self.root = _merge(_merge(a, node), b)

    def delete(self, key):
        """Remove ``key`` and return its value."""
        parent, t, went_left = None, self.root, False
        while t is not None and t.key != key:
            ops.steps += 1
            parent = t
            went_left = key < t.key
            t = t.left if went_left else t.right
        if t is None:
            raise KeyError(key)
        sub = _merge(t.left, t.right)
        if parent is None:
            self.root = sub
        elif went_left:
            parent.left = sub
        else:
            parent.right = sub
        # decrement sizes along the search path
        node = self.root
        while node is not None and node is not sub:
            if node.key == key:
                break
            node.size -= 1
            node = node.left if key < node.key else node.right
        return t.val

    def rank(self, key) -> int:
        """Number of stored keys strictly smaller than ``key``."""
        r, t = 0, self.root
        while t is not None:
            ops.steps += 1
            if key <= t.key:
                if key == t.key:
                    return r + _size(t.left)
                t = t.left
            else:
                r += _size(t.left) + 1
                t = t.right
        return r

    def select(self, r: int):
        """(key, value) at 0-based rank ``r``."""
        if not 0 <= r < len(self):
            raise IndexError(r)
        t = self.root
        while True:
            ops.steps += 1
            ls = _size(t.left)
            if r < ls:
                t = t.left
            elif r == ls:
                return t.key, t.val
            else:
                r -= ls + 1
                t = t.right

    def first(self, n: int) -> list:
        """The first ``n`` (key, value) pairs in order."""
        out = []
        st, t = [], self.root
        while (st or t is not None) and len(out) < n:
            while t is not None:
                st.append(t)
                t = t.left
            t = st.pop()
            out.append((t.key, t.val))
            t = t.right
        ops.steps += len(out)
        return out

    def range(self, lo: int, hi: int) -> list:
        """Pairs with rank in ``[lo, hi)``."""
        lo = max(lo, 0)
        hi = min(hi, len(self))
        return [self.select(r) for r in range(lo, hi)]

    def __iter__(self):
        return iter(self.first(len(self)))
