"""Arithmetic over GF(2^8) and GF(2^16) using log/antilog tables."""
from __future__ import annotations

import numpy as np

# primitive polynomials with x as a primitive element
_PRIM_POLY = {8: 0x11D, 16: 0x1100B}


class GF2:
    """Binary extension field GF(2^width); elements are ints in [0, 2^width)."""

    def __init__(self, width: int):
        if width not in _PRIM_POLY:
            raise ValueError(f"unsupported field width {width}, expected one of {sorted(_PRIM_POLY)}")
        self.width = width
        self.order = 1 << width
        self.poly = _PRIM_POLY[width]
        self._build_tables()

    def _build_tables(self) -> None:
        size = self.order
        # exp table is doubled so products of two logs never need a modulo
        exp = [0] * (2 * (size - 1))
        log = [0] * size
        x = 1
        for i in range(size - 1):
            exp[i] = x
            log[x] = i
            x <<= 1
            if x & size:
                x ^= self.poly
        if x != 1:
            raise AssertionError(f"0x{self.poly:X} is not primitive for width {self.width}")
        for i in range(size - 1, 2 * (size - 1)):
            exp[i] = exp[i - (size - 1)]
        self.exp = exp
        self.log = log
        self.exp_np = np.asarray(exp, dtype=np.int64)
        self.log_np = np.asarray(log, dtype=np.int64)

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self.exp[self.order - 1 - self.log[a]]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def mul_vec(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise product of two symbol arrays (broadcasting allowed)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self.exp_np[self.log_np[a] + self.log_np[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def mul_slow(self, a: int, b: int) -> int:
        """Bitwise carry-less multiply with polynomial reduction; table-free reference."""
        acc = 0
        while b:
            if b & 1:
                acc ^= a
            b >>= 1
            a <<= 1
            if a & self.order:
                a ^= self.poly
        return acc

    def verify(self, samples: int = 200) -> list[str]:
        """Check table integrity and field axioms; returns a list of problems."""
        problems: list[str] = []
        size = self.order
        seen = [False] * size
        for i in range(size - 1):
            v = self.exp[i]
            if not 0 < v < size or seen[v]:
                problems.append(f"exp[{i}] = {v} breaks the nonzero-element bijection")
                break
            seen[v] = True
            if self.log[v] != i:
                problems.append(f"log[exp[{i}]] = {self.log[v]} != {i}")
                break
        # deterministic sample walk over element pairs
        step = max(1, (size - 1) // samples)
        pairs = [(1 + (i * step) % (size - 1), 1 + (i * step * 7 + 3) % (size - 1)) for i in range(samples)]
        for a, b in pairs:
            if self.mul(a, b) != self.mul_slow(a, b):
                problems.append(f"mul({a}, {b}) disagrees with the carry-less reference")
                break
        for a, _ in pairs[:50]:
            if self.mul(a, self.inv(a)) != 1:
                problems.append(f"inv({a}) is not a multiplicative inverse")
                break
        for a, b in pairs[:50]:
            c = (a ^ b) or 1
            if self.mul(a, b ^ c) != self.mul(a, b) ^ self.mul(a, c):
                problems.append(f"distributivity fails at ({a}, {b}, {c})")
                break
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)):
                problems.append(f"associativity fails at ({a}, {b}, {c})")
                break
        return problems


_FIELDS: dict[int, GF2] = {}


def field(width: int) -> GF2:
    """Shared GF2 instance per width. Construct GF2 directly for a private copy."""
    if width not in _FIELDS:
        _FIELDS[width] = GF2(width)
    return _FIELDS[width]
