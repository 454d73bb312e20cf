"""Addressable 4-ary min-heap over integer ids in ``[0, capacity)``."""
from __future__ import annotations


class QuadHeap:
    """Min-heap with decrease-key, keyed by ``(key, id)`` for deterministic ties.

    Ids must lie in ``[0, capacity)``. ``clear`` is proportional to the number
    of ids touched since the last clear, so one heap can serve many searches.
    """

    __slots__ = ("_ids", "_keys", "_pos", "_touched")

    def __init__(self, capacity: int):
        self._ids: list[int] = []
        self._keys: list[int] = []
        self._pos = [-1] * capacity
        self._touched: list[int] = []

    def __len__(self) -> int:
        return len(self._ids)

    def __bool__(self) -> bool:
        return bool(self._ids)

    def __contains__(self, item: int) -> bool:
        return self._pos[item] >= 0

    def clear(self) -> None:
        pos = self._pos
        for i in self._ids:
            pos[i] = -1
        self._ids.clear()
        self._keys.clear()

    def min_key(self) -> int:
        return self._keys[0]

    def min_id(self) -> int:
        return self._ids[0]

    def key_of(self, item: int) -> int:
        return self._keys[self._pos[item]]

    def push_or_decrease(self, item: int, key: int) -> None:
        """Insert ``item`` or lower its key; larger keys are ignored."""
        p = self._pos[item]
        if p < 0:
            ids, keys = self._ids, self._keys
            p = len(ids)
            ids.append(item)
            keys.append(key)
            self._pos[item] = p
            self._sift_up(p)
        elif key < self._keys[p]:
            self._keys[p] = key
            self._sift_up(p)

    def update(self, item: int, key: int) -> None:
        """Insert ``item`` or move it to ``key``, up or down."""
        p = self._pos[item]
        if p < 0 or key <= self._keys[p]:
            self.push_or_decrease(item, key)
            return
        self._keys[p] = key
        self._sift_down(p)

    def remove(self, item: int) -> None:
        p = self._pos[item]
        if p < 0:
            return
        ids, keys, pos = self._ids, self._keys, self._pos
        pos[item] = -1
        last_id = ids.pop()
        last_key = keys.pop()
        if p < len(ids):
            ids[p] = last_id
            keys[p] = last_key
            pos[last_id] = p
            self._sift_up(p)
            self._sift_down(self._pos[last_id])

    def pop(self) -> tuple[int, int]:
        """Remove and return ``(id, key)`` of the minimum."""
        ids, keys, pos = self._ids, self._keys, self._pos
        item, key = ids[0], keys[0]
        pos[item] = -1
        last_id = ids.pop()
        last_key = keys.pop()
        if ids:
            ids[0] = last_id
            keys[0] = last_key
            pos[last_id] = 0
            self._sift_down(0)
        return item, key

    def _sift_up(self, p: int) -> None:
        ids, keys, pos = self._ids, self._keys, self._pos
        item, key = ids[p], keys[p]
        while p > 0:
            q = (p - 1) >> 2
            qk = keys[q]
            if qk < key or (qk == key and ids[q] < item):
                break
            ids[p] = ids[q]
            keys[p] = qk
            pos[ids[p]] = p
            p = q
        ids[p] = item
        keys[p] = key
        pos[item] = p

    def _sift_down(self, p: int) -> None:
        ids, keys, pos = self._ids, self._keys, self._pos
        n = len(ids)
        item, key = ids[p], keys[p]
        while True:
            c = 4 * p + 1
            if c >= n:
                break
            best = c
            bk, bi = keys[c], ids[c]
            end = c + 4 if c + 4 < n else n
            for x in range(c + 1, end):
                xk = keys[x]
                if xk < bk or (xk == bk and ids[x] < bi):
                    best, bk, bi = x, xk, ids[x]
            if bk > key or (bk == key and bi > item):
                break
            ids[p] = bi
            keys[p] = bk
            pos[bi] = p
            p = best
        ids[p] = item
        keys[p] = key
        pos[item] = p
