"""Search problem definition: register size, marked set and a query-counting oracle."""
from __future__ import annotations

import bisect
from collections.abc import Collection, Iterable

import numpy as np


class ConfigurationError(ValueError):
    """Raised for invalid sizes, caps or option combinations."""


class DomainError(ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation."""


class SearchProblem:
    """Unstructured search over ``N = 2**n`` basis states with a marked subset.

    ``targets`` may be any sized collection of distinct indices; a ``range``
    is accepted as-is so that huge registers (``n`` up to 62) can be described
    without materialising the marked set. Every call to :meth:`oracle` is
    charged to ``query_counter``; :meth:`is_target` is a free diagnostic.
    """

    def __init__(self, n: int, targets: Iterable[int]):
        if not isinstance(n, (int, np.integer)) or n < 1 or n > 62:
            raise ConfigurationError(f"register size n must be in [1, 62], got {n!r}")
        self.n = int(n)
        self.N = 1 << self.n
        if isinstance(targets, range):
            if targets.step != 1:
                raise DomainError("range targets must have unit step")
            if len(targets) and (targets.start < 0 or targets.stop > self.N):
                raise DomainError("target index out of range")
            self._targets: Collection[int] = targets
            self._sorted = None
        else:
            items = [int(t) for t in targets]
            uniq = sorted(set(items))
            if len(uniq) != len(items):
                raise DomainError("target indices must be distinct")
            if uniq and (uniq[0] < 0 or uniq[-1] >= self.N):
                raise DomainError("target index out of range")
            self._targets = frozenset(uniq)
            self._sorted = uniq
        m = len(self._targets)
        if m < 1 or m > self.N - 1:
            raise DomainError(f"need 1 <= |targets| <= N-1 = {self.N - 1}, got {m}")
        self.m = m
        self.query_counter = 0
        self._index = None

    @classmethod
    def with_count(cls, n: int, m: int) -> "SearchProblem":
        """Problem whose marked set is ``{0, ..., m-1}``. The algorithms are
        permutation symmetric, so the placement of targets is immaterial."""
        return cls(n, range(int(m)))

    @classmethod
    def random(cls, n: int, m: int, rng: np.random.Generator) -> "SearchProblem":
        return cls(n, rng.choice(1 << n, size=m, replace=False).tolist())

    @property
    def p(self) -> float:
        return self.m / self.N

    @property
    def targets(self) -> Collection[int]:
        return self._targets

    def is_target(self, x: int) -> bool:
        return int(x) in self._targets

    def oracle(self, x: int) -> int:
        """Charged classical oracle evaluation ``Or(x)``."""
        self.query_counter += 1
        return int(self.is_target(x))

    def charge(self, count: int = 1) -> None:
        self.query_counter += count

    def target_array(self) -> np.ndarray:
        """Sorted marked indices as an int64 array (materialises ranges)."""
        if isinstance(self._targets, range):
            return np.arange(self._targets.start, self._targets.stop, dtype=np.int64)
        return np.asarray(self._sorted, dtype=np.int64)

    def index(self) -> slice | np.ndarray:
        """Indexer selecting the marked amplitudes of a length-N array."""
        if self._index is None:
            if isinstance(self._targets, range):
                self._index = slice(self._targets.start, self._targets.stop)
            else:
                self._index = self.target_array()
        return self._index

    def mask(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised uncharged membership test."""
        xs = np.asarray(xs, dtype=np.int64)
        if isinstance(self._targets, range):
            return (xs >= self._targets.start) & (xs < self._targets.stop)
        return np.isin(xs, self.target_array())

    def nth_target(self, k: int) -> int:
        if isinstance(self._targets, range):
            return self._targets[k]
        return self._sorted[k]

    def nth_non_target(self, k: int) -> int:
        """The k-th smallest unmarked index, ``0 <= k < N - m``."""
        if not 0 <= k < self.N - self.m:
            raise IndexError(k)
        if isinstance(self._targets, range):
            start = self._targets.start
            return k if k < start else k + self.m
        # Monotone fixed-point iteration x <- k + #(targets <= x), starting
        # below the answer; it converges to the k-th unmarked index.
        x = k
        while True:
            cand = k + bisect.bisect_right(self._sorted, x)
            if cand == x:
                return x
            x = cand

    def __repr__(self) -> str:
        return f"SearchProblem(n={self.n}, m={self.m})"
