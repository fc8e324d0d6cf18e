"""Group descriptions used throughout the package.

Two kinds of group are supported: finitely generated free groups, whose
elements are reduced words over signed generator indices, and finite groups
given by an explicit multiplication table.  Conventions:

* free-group letters are nonzero integers; ``+i`` is the i-th generator
  (1-based) and ``-i`` its inverse; elements are reduced tuples of letters;
* finite-group elements are 0-based indices into the table, identity at 0;
* deterministic element enumeration orders words by length, then
  lexicographically with letter order ``+1 < -1 < +2 < -2 < ...``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

Word = tuple[int, ...]

MAX_FINITE_ORDER = 512


class MalformedDataError(ValueError):
    """Structurally invalid input (bad indices, shapes, unparseable text)."""


class UndeclaredElementError(KeyError):
    """An operation needed data for a group element that was never supplied."""


def _letter_key(letter: int) -> tuple[int, int]:
    # +i sorts before -i, smaller generators first
    return (abs(letter), 0 if letter > 0 else 1)


def word_key(word: Word) -> tuple:
    """Sort key realising the canonical length-then-lex element order."""
    return (len(word), tuple(_letter_key(s) for s in word))


@dataclass(frozen=True)
class FreeGroup:
    """Free group of a given rank; elements are reduced words."""

    rank: int

    def __post_init__(self) -> None:
        if not isinstance(self.rank, int) or self.rank < 1:
            raise MalformedDataError(f"free group rank must be a positive int, got {self.rank!r}")

    @property
    def kind(self) -> str:
        return "free"

    @property
    def identity(self) -> Word:
        return ()

    def check_element(self, g) -> Word:
        """Validate and return ``g`` as a reduced word."""
        w = self.reduce_word(g)
        if w != tuple(g):
            raise MalformedDataError(f"word {g!r} is not reduced")
        return w

    def reduce_word(self, word: Sequence[int]) -> Word:
        """Reduce a word by cancelling adjacent inverse pairs.

        Letters must be nonzero with absolute value at most the rank.
        """
        out: list[int] = []
        for s in word:
            if not isinstance(s, int) or s == 0 or abs(s) > self.rank:
                raise MalformedDataError(f"letter {s!r} out of range for rank {self.rank}")
            if out and out[-1] == -s:
                out.pop()
            else:
                out.append(s)
        return tuple(out)

    def multiply(self, g: Sequence[int], h: Sequence[int]) -> Word:
        return self.reduce_word(tuple(g) + tuple(h))

    def inverse(self, g: Sequence[int]) -> Word:
        w = self.reduce_word(g)
        return tuple(-s for s in reversed(w))

    def letters(self) -> list[int]:
        """Generator letters in canonical order ``+1, -1, +2, -2, ...``."""
        out = []
        for i in range(1, self.rank + 1):
            out.extend((i, -i))
        return out

    def ball(self, radius: int) -> list[Word]:
        """All reduced words of length <= radius, canonically ordered."""
        if radius < 0:
            raise MalformedDataError("radius must be >= 0")
        levels: list[list[Word]] = [[()]]
        for _ in range(radius):
            prev = levels[-1]
            nxt: list[Word] = []
            for w in prev:
                for s in self.letters():
                    if w and w[-1] == -s:
                        continue
                    nxt.append(w + (s,))
            levels.append(nxt)
        return [w for level in levels for w in level]

    def enumerate_elements(self, count: int) -> list[Word]:
        """First ``count`` elements of the canonical enumeration."""
        radius = 0
        while True:
            b = self.ball(radius)
            if len(b) >= count:
                return b[:count]
            radius += 1


@dataclass(frozen=True)
class FiniteGroup:
    """Finite group on indices 0..order-1, identity 0, via its Cayley table."""

    table: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.table)
        if n == 0 or n > MAX_FINITE_ORDER:
            raise MalformedDataError(f"finite group order must be in 1..{MAX_FINITE_ORDER}")
        tbl = np.asarray(self.table, dtype=np.int64)
        if tbl.shape != (n, n) or tbl.min() < 0 or tbl.max() >= n:
            raise MalformedDataError("multiplication table must be n x n with entries in 0..n-1")
        if not (np.array_equal(tbl[0], np.arange(n)) and np.array_equal(tbl[:, 0], np.arange(n))):
            raise MalformedDataError("element 0 must be the identity")
        # associativity, one row at a time to bound memory
        for a in range(n):
            if not np.array_equal(tbl[tbl[a]], tbl[a][tbl]):
                raise MalformedDataError(f"table not associative (row {a})")
        inv = np.full(n, -1, dtype=np.int64)
        for a in range(n):
            hits = np.flatnonzero(tbl[a] == 0)
            if hits.size != 1 or tbl[hits[0], a] != 0:
                raise MalformedDataError(f"element {a} lacks a two-sided inverse")
            inv[a] = hits[0]
        object.__setattr__(self, "_inv", tuple(int(i) for i in inv))
        if self.labels:
            if len(self.labels) != n or len(set(self.labels)) != n:
                raise MalformedDataError("labels must be distinct, one per element")
        else:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(n)))

    @property
    def kind(self) -> str:
        return "finite"

    @property
    def order(self) -> int:
        return len(self.table)

    @property
    def identity(self) -> int:
        return 0

    def check_element(self, g) -> int:
        if not isinstance(g, (int, np.integer)) or not (0 <= int(g) < self.order):
            raise MalformedDataError(f"element {g!r} out of range for order {self.order}")
        return int(g)

    def multiply(self, g: int, h: int) -> int:
        return self.table[self.check_element(g)][self.check_element(h)]

    def inverse(self, g: int) -> int:
        return self._inv[self.check_element(g)]

    def ball(self, radius: int) -> list[int]:
        if radius < 0:
            raise MalformedDataError("radius must be >= 0")
        if radius == 0:
            return [0]
        return list(range(self.order))

    def enumerate_elements(self, count: int) -> list[int]:
        if count > self.order:
            raise MalformedDataError(f"group has only {self.order} elements, requested {count}")
        return list(range(count))


GroupSpec = Union[FreeGroup, FiniteGroup]


def identity(spec: GroupSpec):
    return spec.identity


def multiply(spec: GroupSpec, g, h):
    return spec.multiply(g, h)


def inverse(spec: GroupSpec, g):
    return spec.inverse(g)


def reduce_word(spec: FreeGroup, word: Sequence[int]) -> Word:
    if not isinstance(spec, FreeGroup):
        raise MalformedDataError("reduce_word applies to free groups")
    return spec.reduce_word(word)


def ball(spec: GroupSpec, radius: int):
    return spec.ball(radius)


@dataclass(frozen=True)
class GroupHom:
    """Homomorphism into a finite group.

    For a free source, ``images`` lists one target element per generator.
    For a finite source, ``images`` lists one target element per source
    element and the product-preservation law is checked exhaustively.
    """

    source: GroupSpec
    target: FiniteGroup
    images: tuple[int, ...]

    def __post_init__(self) -> None:
        imgs = tuple(self.target.check_element(i) for i in self.images)
        object.__setattr__(self, "images", imgs)
        if isinstance(self.source, FreeGroup):
            if len(imgs) != self.source.rank:
                raise MalformedDataError("need one image per free generator")
        else:
            if len(imgs) != self.source.order:
                raise MalformedDataError("need one image per source element")
            if imgs[0] != 0:
                raise MalformedDataError("identity must map to identity")
            t_src = np.asarray(self.source.table)
            im = np.asarray(imgs)
            t_tgt = np.asarray(self.target.table)
            if not np.array_equal(im[t_src], t_tgt[im][:, im]):
                raise MalformedDataError("images do not preserve products")

    def apply(self, g):
        if isinstance(self.source, FreeGroup):
            w = self.source.reduce_word(g)
            out = self.target.identity
            for s in w:
                x = self.images[abs(s) - 1]
                if s < 0:
                    x = self.target.inverse(x)
                out = self.target.multiply(out, x)
            return out
        return self.images[self.source.check_element(g)]


def hom_apply(hom: GroupHom, g):
    return hom.apply(g)


# ---------------------------------------------------------------------------
# standard builders


def cyclic_group(m: int) -> FiniteGroup:
    """Z/m with elements 0..m-1 under addition."""
    if m < 1 or m > MAX_FINITE_ORDER:
        raise MalformedDataError(f"cyclic order must be in 1..{MAX_FINITE_ORDER}")
    table = tuple(tuple((i + j) % m for j in range(m)) for i in range(m))
    return FiniteGroup(table)


def trivial_group() -> FiniteGroup:
    return cyclic_group(1)


def symmetric_group(n: int) -> FiniteGroup:
    """Permutations of n points; identity first, then lexicographic."""
    perms = sorted(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    # compose(p, q)(i) = p(q(i))
    table = tuple(
        tuple(index[tuple(p[q[i]] for i in range(n))] for q in perms) for p in perms
    )
    labels = tuple("".join(map(str, p)) for p in perms)
    return FiniteGroup(table, labels)


def direct_product(a: FiniteGroup, b: FiniteGroup) -> FiniteGroup:
    """Direct product with pairs enumerated a-major: (i, j) -> i * |b| + j."""
    na, nb = a.order, b.order
    if na * nb > MAX_FINITE_ORDER:
        raise MalformedDataError("product order exceeds supported maximum")
    table = tuple(
        tuple(
            a.table[i // nb][k // nb] * nb + b.table[i % nb][k % nb]
            for k in range(na * nb)
        )
        for i in range(na * nb)
    )
    labels = tuple(f"{a.labels[i // nb]},{b.labels[i % nb]}" for i in range(na * nb))
    return FiniteGroup(table, labels)


# ---------------------------------------------------------------------------
# serialization

_GENERATOR_NAMES = "abcdefghijklmnopqrstuvwxyz"


def generator_name(i: int) -> str:
    """Name of the i-th (1-based) free generator: a, b, ..."""
    if i < 1 or i > len(_GENERATOR_NAMES):
        raise MalformedDataError(f"no name for generator index {i}")
    return _GENERATOR_NAMES[i - 1]


def word_to_str(spec: GroupSpec, g) -> str:
    if isinstance(spec, FiniteGroup):
        return spec.labels[spec.check_element(g)]
    w = spec.check_element(g)
    if not w:
        return "e"
    parts = []
    for s in w:
        name = generator_name(abs(s))
        parts.append(name if s > 0 else f"{name}^-1")
    return " ".join(parts)


def word_from_str(spec: GroupSpec, text: str):
    text = text.strip()
    if isinstance(spec, FiniteGroup):
        if text in spec.labels:
            return spec.labels.index(text)
        raise MalformedDataError(f"unknown element label {text!r}")
    if text in ("", "e"):
        return ()
    letters: list[int] = []
    for tok in text.split():
        name, _, exp = tok.partition("^")
        if len(name) != 1 or name not in _GENERATOR_NAMES:
            raise MalformedDataError(f"bad generator token {tok!r}")
        idx = _GENERATOR_NAMES.index(name) + 1
        if idx > spec.rank:
            raise MalformedDataError(f"generator {name!r} outside rank {spec.rank}")
        power = 1
        if exp:
            try:
                power = int(exp)
            except ValueError as exc:
                raise MalformedDataError(f"bad exponent in token {tok!r}") from exc
        letters.extend([idx if power > 0 else -idx] * abs(power))
    return spec.reduce_word(letters)


def group_to_json(spec: GroupSpec) -> dict:
    if isinstance(spec, FreeGroup):
        return {"kind": "free", "rank": spec.rank}
    return {
        "kind": "finite",
        "order": spec.order,
        "table": [list(row) for row in spec.table],
        "labels": list(spec.labels),
    }


def group_from_json(data: dict) -> GroupSpec:
    if not isinstance(data, dict) or "kind" not in data:
        raise MalformedDataError("group object needs a 'kind' field")
    if data["kind"] == "free":
        return FreeGroup(rank=data.get("rank", 0))
    if data["kind"] == "finite":
        table = data.get("table")
        if table is None:
            raise MalformedDataError("finite group needs a 'table'")
        tbl = tuple(tuple(int(x) for x in row) for row in table)
        if "order" in data and data["order"] != len(tbl):
            raise MalformedDataError("declared order disagrees with table size")
        labels = tuple(data.get("labels", ()))
        return FiniteGroup(tbl, labels)
    raise MalformedDataError(f"unknown group kind {data['kind']!r}")


def hom_to_json(hom: GroupHom) -> dict:
    return {
        "source": group_to_json(hom.source),
        "target": group_to_json(hom.target),
        "images": [int(i) for i in hom.images],
    }


def hom_from_json(data: dict, source: GroupSpec | None = None) -> GroupHom:
    if not isinstance(data, dict) or "images" not in data:
        raise MalformedDataError("hom object needs an 'images' field")
    if source is None:
        if "source" not in data:
            raise MalformedDataError("hom object needs a 'source' group")
        source = group_from_json(data["source"])
    target = group_from_json(data["target"]) if "target" in data else None
    if target is None or not isinstance(target, FiniteGroup):
        raise MalformedDataError("hom target must be a finite group")
    return GroupHom(source=source, target=target, images=tuple(int(i) for i in data["images"]))
