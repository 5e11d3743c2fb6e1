"""Finite-support equivalence relations and the collapse/split calculus.

Every relation is represented on ``[0, support)``; numbers at or beyond the
support are singleton classes.  All values are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import networkx as nx


@dataclass(frozen=True)
class Partition:
    support: int
    blocks: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        blocks = tuple(sorted((frozenset(b) for b in self.blocks), key=min))
        seen: set[int] = set()
        for b in blocks:
            if not b:
                raise ValueError("empty block")
            if seen & b:
                raise ValueError("blocks overlap")
            seen |= b
        if seen != set(range(self.support)):
            raise ValueError("blocks must cover [0, support) exactly")
        object.__setattr__(self, "blocks", blocks)

    @cached_property
    def _index(self) -> dict[int, int]:
        return {x: i for i, b in enumerate(self.blocks) for x in b}

    def class_of(self, x: int) -> frozenset[int]:
        if x >= self.support:
            return frozenset({x})
        return self.blocks[self._index[x]]

    def related(self, x: int, y: int) -> bool:
        if x == y:
            return True
        if x >= self.support or y >= self.support:
            return False
        return self._index[x] == self._index[y]

    def rep(self, x: int) -> int:
        return min(self.class_of(x))

    @property
    def class_count(self) -> int:
        return len(self.blocks)

    def pairs(self) -> set[tuple[int, int]]:
        """Off-diagonal related pairs (x, y) with x < y."""
        out = set()
        for b in self.blocks:
            s = sorted(b)
            out.update((s[i], s[j]) for j in range(len(s)) for i in range(j))
        return out

    def restrict(self, n: int) -> Partition:
        if n >= self.support:
            return self.extend(n)
        blocks = [b & frozenset(range(n)) for b in self.blocks]
        return Partition(n, tuple(b for b in blocks if b))

    def extend(self, n: int) -> Partition:
        if n <= self.support:
            return self
        return Partition(n, self.blocks + tuple(frozenset({x}) for x in range(self.support, n)))

    def to_json(self) -> dict:
        return {"support": self.support, "blocks": [sorted(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, d: dict) -> Partition:
        return cls(int(d["support"]), tuple(frozenset(int(x) for x in b) for b in d["blocks"]))

    @classmethod
    def from_pairs(cls, support: int, pairs: Iterable[tuple[int, int]]) -> Partition:
        """Equivalence relation generated by ``pairs`` on [0, support)."""
        parent = list(range(support))

        def find(a: int) -> int:
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for x, y in pairs:
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)
        groups: dict[int, set[int]] = {}
        for x in range(support):
            groups.setdefault(find(x), set()).add(x)
        return cls(support, tuple(frozenset(g) for g in groups.values()))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> Partition:
        groups: dict[int, set[int]] = {}
        for x, lab in enumerate(labels):
            groups.setdefault(lab, set()).add(x)
        return cls(len(labels), tuple(frozenset(g) for g in groups.values()))


def id_rel(n: int) -> Partition:
    return Partition(n, tuple(frozenset({x}) for x in range(n)))


def id_n(k: int, n: int) -> Partition:
    if k < 1:
        raise ValueError("Id_k needs k >= 1")
    return Partition.from_labels([x % k for x in range(n)])


def f_x(X: Iterable[int], n: int) -> Partition:
    xs = set(X)
    return Partition.from_labels([int(x in xs) for x in range(n)])


def q_from_set(A: Iterable[int], n: int) -> Partition:
    a = set(A)
    return Partition.from_labels([x - 1 if x % 2 and (x // 2) in a else x for x in range(n)])


def direct_sum(R: Partition, S: Partition) -> Partition:
    n = max(R.support, S.support)
    R, S = R.extend(n), S.extend(n)
    blocks = [frozenset(2 * x for x in b) for b in R.blocks]
    blocks += [frozenset(2 * x + 1 for x in b) for b in S.blocks]
    return Partition(2 * n, tuple(blocks))


def collapse(R: Partition, x: int, y: int) -> Partition:
    if x >= R.support or y >= R.support:
        raise ValueError(f"({x}, {y}) outside support {R.support}")
    if R.related(x, y):
        raise ValueError(f"{x} and {y} are already equivalent")
    cx, cy = R.class_of(x), R.class_of(y)
    rest = tuple(b for b in R.blocks if b is not cx and b is not cy)
    return Partition(R.support, rest + (cx | cy,))


def split(R: Partition, z: int) -> Partition:
    c = R.class_of(z)
    if len(c) == 1:
        raise ValueError(f"class of {z} is a singleton")
    rest = tuple(b for b in R.blocks if b is not c)
    return Partition(R.support, rest + (frozenset({z}), c - {z}))


def plus_point(R: Partition) -> Partition:
    """R joined with a one-point relation, odd side read as the identity."""
    return direct_sum(R, id_rel(1))


def verify_reduction(f: Mapping[int, int], R: Partition, S: Partition) -> bool:
    missing = [x for x in range(R.support) if x not in f]
    if missing:
        raise ValueError(f"reduction undefined on {missing[:5]}")
    # x R y <=> f(x) S f(y) means: R-classes map into single S-classes, injectively
    s_index = S._index
    image: dict[int, object] = {}
    owner: dict[object, int] = {}
    for x in range(R.support):
        v = f[x]
        key = s_index[v] if v < S.support else ("point", v)
        c = R._index[x]
        if image.setdefault(c, key) != key or owner.setdefault(key, c) != c:
            return False
    return True


def build_split_reductions(R: Partition, z: int) -> tuple[dict[int, int], dict[int, int]]:
    """f: R_[z] <= R + Id_1 and g: R + Id_1 <= R_[z].

    The target ``R + Id_1`` is ``direct_sum(R, id_n(1, sup R))``: one odd
    class holding every odd number of the support.
    """
    cls = R.class_of(z)
    if len(cls) == 1:
        raise ValueError(f"class of {z} is a singleton")
    y = min(cls - {z})
    n = R.support
    f = {x: (1 if x == z else 2 * x) for x in range(n)}
    g = {}
    for x in range(2 * n):
        if x % 2:
            g[x] = z
        else:
            a = x // 2
            g[x] = y if a == z else a
    return f, g


def split_target(R: Partition) -> Partition:
    return direct_sum(R, id_n(1, R.support))


def rb_equiv(W: Sequence[Iterable[int]], i: int, s: int, j: int, t: int) -> bool:
    if not (0 <= i < len(W) and 0 <= j < len(W)):
        raise IndexError("index outside the list of sets")
    ci = sum(1 for w in set(W[i]) if w <= s)
    cj = sum(1 for w in set(W[j]) if w <= t)
    return ci == cj


def reduce_exists(R: Partition, S: Partition, range_bound: int) -> dict[int, int] | None:
    """Lexicographically least reduction of R to S with values below range_bound.

    Classes of R are handled in order of their least element; each takes the
    least element of the least S-class (within the range) not used so far,
    so ``x`` maps to the least admissible value given the earlier choices.
    Values past ``S.support`` are singleton classes of S.
    """
    if range_bound < 1:
        raise ValueError("range_bound must be positive")
    if R.support == 0:
        return {}
    # S-classes inside the range, ordered by least member
    targets: list[int] = []
    used_cls: set[frozenset[int]] = set()
    for v in range(range_bound):
        c = S.class_of(v)
        if c not in used_cls:
            used_cls.add(c)
            targets.append(v)
    if len(targets) < R.class_count:
        return None
    assign = {b: targets[k] for k, b in enumerate(R.blocks)}
    return {x: assign[R.class_of(x)] for x in range(R.support)}


def orbit(h: Mapping[int, int], b: int, budget: int) -> list[int]:
    out, seen, x = [b], {b}, b
    for _ in range(budget):
        if x not in h:
            raise ValueError(f"h undefined at {x}")
        x = h[x]
        if x in seen:
            break
        out.append(x)
        seen.add(x)
    return out


def greedy_transversal(trace, k: int) -> list[int]:
    """Greedy transversal read off a Pi relation trace's final slice."""
    from ershov.approximation import PI, RELATION
    if trace.kind != PI or trace.domain != RELATION:
        raise ValueError("greedy_transversal needs a Pi relation trace")
    for z in trace.touched():
        f = trace.initial
        for t in trace._history[z][0]:
            v = trace.value(z, t)
            if f == 0 and v == 1:
                raise ValueError(f"cell {z} re-enters the relation at tick {t}")
            f = v
    out: list[int] = []
    for z in range(trace.support):
        if len(out) >= k:
            break
        if all(not trace.related(x, z, trace.budget) for x in out):
            out.append(z)
    return out


def transversal_to_reduction(g: Sequence[int], S: Partition) -> dict[int, int]:
    """f(0) = g(0); f(n+1) = f(i) for the least i <= n with i S n+1, else g(n+1)."""
    f: dict[int, int] = {}
    for n in range(S.support):
        prev = next((i for i in range(n) if S.related(i, n)), None)
        if prev is not None:
            f[n] = f[prev]
            continue
        if n >= len(g):
            raise ValueError(f"transversal exhausted at {n}")
        f[n] = g[n]
    return f


def build_inf_triple(X: Iterable[int], Y: Iterable[int], Q: Partition,
                     n: int) -> tuple[Partition, Partition, Partition]:
    """R = F_X + Q, S = F_Y + Q and the lower bound T = Id_2 + Q."""
    xs, ys = set(X) & set(range(n)), set(Y) & set(range(n))
    for name, s in (("X", xs), ("Y", ys)):
        if not s or len(s) == n:
            raise ValueError(f"{name} must be a proper nonempty subset of [0, {n})")
    m = max(n, Q.support)
    return (direct_sum(f_x(xs, m), Q), direct_sum(f_x(ys, m), Q),
            direct_sum(id_n(2, m), Q))


@dataclass(frozen=True)
class Poset:
    matrix: tuple[tuple[bool, ...], ...]
    nodes: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int], ...]

    def to_json(self) -> dict:
        return {"matrix": [[int(b) for b in row] for row in self.matrix],
                "nodes": [list(n) for n in self.nodes],
                "hasse": [list(e) for e in self.edges]}

    def to_dot(self) -> str:
        lines = ["digraph degrees {"]
        for k, members in enumerate(self.nodes):
            label = ",".join(str(m) for m in members)
            lines.append(f'  d{k} [label="{label}"];')
        for a, b in self.edges:
            lines.append(f"  d{a} -> d{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def poset(catalog: Sequence[Partition], range_bound: int) -> Poset:
    """Reducibility matrix and Hasse diagram (edges point upward, a -> b for a < b)."""
    n = len(catalog)
    m = tuple(tuple(reduce_exists(catalog[i], catalog[j], range_bound) is not None
                    for j in range(n)) for i in range(n))
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from((i, j) for i in range(n) for j in range(n) if i != j and m[i][j])
    cond = nx.condensation(g)
    members = {c: tuple(sorted(cond.nodes[c]["members"])) for c in cond.nodes}
    order = sorted(cond.nodes, key=lambda c: members[c][0])
    relabel = {c: k for k, c in enumerate(order)}
    hasse = nx.transitive_reduction(cond)
    edges = tuple(sorted((relabel[a], relabel[b]) for a, b in hasse.edges))
    return Poset(m, tuple(members[c] for c in order), edges)

