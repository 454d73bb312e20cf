"""Value arrays partitioned into per-owner blocks, with holes as head-room.

All attribute arrays share one index array (``start[b]``, ``end[b]``). A block
that needs to grow and has no hole next to it is moved to the end of the
arrays and padded with holes worth a quarter of its size.
"""
from __future__ import annotations

HEADROOM = 0.25


class BlockArrays:
    def __init__(self, num_blocks: int, fields: tuple[str, ...], hole=None):
        self.fields = fields
        self.hole = hole
        self.values: dict[str, list] = {f: [] for f in fields}
        self.start = [0] * num_blocks
        self.end = [0] * num_blocks
        # owner[p] = block id occupying slot p, or -1 for a hole
        self.owner: list[int] = []
        self.relocations = 0

    @property
    def capacity(self) -> int:
        return len(self.owner)

    def size(self, b: int) -> int:
        return self.end[b] - self.start[b]

    def column(self, name: str) -> list:
        return self.values[name]

    def get(self, b: int, name: str) -> list:
        return self.values[name][self.start[b]:self.end[b]]

    def _grow_tail(self, count: int) -> None:
        for col in self.values.values():
            col.extend([self.hole] * count)
        self.owner.extend([-1] * count)

    def _move_slot(self, src: int, dst: int) -> None:
        for col in self.values.values():
            col[dst] = col[src]
        self.owner[dst] = self.owner[src]

    def _clear_slot(self, p: int) -> None:
        for col in self.values.values():
            col[p] = self.hole
        self.owner[p] = -1

    def _relocate(self, b: int) -> None:
        """Move block ``b`` to the end of the arrays followed by fresh holes."""
        s, e = self.start[b], self.end[b]
        size = e - s
        new_start = len(self.owner)
        room = max(1, int(size * HEADROOM))
        self._grow_tail(size + room)
        for k in range(size):
            self._move_slot(s + k, new_start + k)
            self._clear_slot(s + k)
        self.start[b] = new_start
        self.end[b] = new_start + size
        self.relocations += 1

    def insert(self, b: int, index: int, row: dict) -> int:
        """Insert ``row`` at position ``index`` within block ``b``; returns the slot used."""
        s, e = self.start[b], self.end[b]
        if not 0 <= index <= e - s:
            raise IndexError(f"insert position {index} outside block of size {e - s}")
        owner = self.owner
        if e < len(owner) and owner[e] == -1:
            for p in range(e, s + index, -1):
                self._move_slot(p - 1, p)
            self.end[b] = e + 1
            slot = s + index
        elif s > 0 and owner[s - 1] == -1 and e > s:
            for p in range(s - 1, s + index - 1):
                self._move_slot(p + 1, p)
            self.start[b] = s - 1
            slot = s + index - 1
        else:
            if e == s:
                # empty block: claim a fresh slot at the end
                self._grow_tail(1)
                self.start[b] = len(owner) - 1
                self.end[b] = len(owner) - 1
                return self.insert(b, index, row)
            self._relocate(b)
            return self.insert(b, index, row)
        for f in self.fields:
            self.values[f][slot] = row[f]
        owner[slot] = b
        return slot

    def append(self, b: int, row: dict) -> int:
        return self.insert(b, self.size(b), row)

    def remove(self, b: int, index: int) -> None:
        """Remove position ``index``, keeping order; the hole ends up after the block."""
        s, e = self.start[b], self.end[b]
        if not 0 <= index < e - s:
            raise IndexError(f"remove position {index} outside block of size {e - s}")
        for p in range(s + index, e - 1):
            self._move_slot(p + 1, p)
        self._clear_slot(e - 1)
        self.end[b] = e - 1

    def remove_unordered(self, b: int, index: int) -> None:
        """Remove position ``index`` by moving the block's last row into it."""
        s, e = self.start[b], self.end[b]
        if not 0 <= index < e - s:
            raise IndexError(f"remove position {index} outside block of size {e - s}")
        if s + index != e - 1:
            self._move_slot(e - 1, s + index)
        self._clear_slot(e - 1)
        self.end[b] = e - 1

    def clear_block(self, b: int) -> None:
        for p in range(self.start[b], self.end[b]):
            self._clear_slot(p)
        self.end[b] = self.start[b]

    def check(self) -> None:
        """Structural validator: disjoint blocks, owners consistent, holes outside blocks."""
        claimed = [-1] * len(self.owner)
        for b in range(len(self.start)):
            s, e = self.start[b], self.end[b]
            if not 0 <= s <= e <= len(self.owner):
                raise AssertionError(f"block {b} has bad range [{s}, {e})")
            for p in range(s, e):
                if claimed[p] != -1:
                    raise AssertionError(f"slot {p} shared by blocks {claimed[p]} and {b}")
                claimed[p] = b
                if self.owner[p] != b:
                    raise AssertionError(f"slot {p} owner {self.owner[p]} != block {b}")
        for p, o in enumerate(self.owner):
            if o != -1 and claimed[p] != o:
                raise AssertionError(f"slot {p} marked for block {o} outside its range")
