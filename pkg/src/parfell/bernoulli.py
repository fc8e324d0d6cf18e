"""Truncated two-letter Bernoulli systems and residual-finiteness certificates.

Configurations are 0/1 functions on a group, pinned to 1 at the identity, and
group elements shift them partially: ``t`` acts on configurations that are 1
at both the identity and ``t``.  A finite window keeps the first ``N+1``
elements of the canonical enumeration; finite-quotient approximations push
configurations through a homomorphism whose window images are separated, and
the resulting point map is strictly equivariant with explicit density bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .actions import EquivarianceReport, FinitePartialAction, PartialMap
from .groups import (
    FiniteGroup,
    FreeGroup,
    GroupHom,
    GroupSpec,
    MalformedDataError,
    cyclic_group,
    direct_product,
    group_from_json,
    group_to_json,
    hom_to_json,
    trivial_group,
    word_to_str,
)


class CertificationError(RuntimeError):
    """No valid certificate could be produced from the given inputs."""


@dataclass(frozen=True)
class BernoulliWindow:
    """The first N+1 canonical elements; points are 0/1 rows over them.

    A window point is an integer whose bit ``k-1`` holds the value at the
    k-th coordinate (k = 1..N); the 0-th coordinate is pinned to 1.
    """

    group: GroupSpec
    depth: int
    coords: tuple

    @staticmethod
    def build(group: GroupSpec, depth: int) -> "BernoulliWindow":
        if depth < 0:
            raise MalformedDataError("window depth must be >= 0")
        coords = tuple(group.enumerate_elements(depth + 1))
        return BernoulliWindow(group=group, depth=depth, coords=coords)

    @property
    def num_points(self) -> int:
        return 1 << self.depth

    def points(self) -> range:
        return range(self.num_points)

    def bit(self, point: int, k: int) -> int:
        if k == 0:
            return 1
        return (point >> (k - 1)) & 1

    def coord_index(self, t) -> int:
        key = self.group.check_element(t)
        try:
            return self.coords.index(key)
        except ValueError:
            raise MalformedDataError(
                f"element {word_to_str(self.group, key)} is outside the window"
            ) from None


def metric(x: int, y: int, depth: int) -> float:
    """Weighted coordinate disagreement, 2^-k at window coordinate k."""
    total = 0.0
    diff = x ^ y
    for k in range(1, depth + 1):
        if (diff >> (k - 1)) & 1:
            total += 2.0 ** (-k)
    return total


class TruncatedBernoulli:
    """Window fragment of the shift system.

    An element is representable when it and its inverse are window
    coordinates; its point set is cut out by the coordinate pin, and its
    shift is known on exactly those coordinates whose translate stays in the
    window.  The known fragments are checked for consistency at build time.
    """

    def __init__(self, window: BernoulliWindow) -> None:
        self.window = window
        g = window.group
        index = {t: k for k, t in enumerate(window.coords)}
        self.representable: tuple = tuple(
            t for t in window.coords if g.inverse(t) in index
        )
        # per element: list of (k, j) with t^-1 t_k = t_j, i.e. shifted
        # coordinate k reads source coordinate j
        self._shift_coords: dict = {}
        for t in self.representable:
            ti = g.inverse(t)
            pairs = []
            for k, tk in enumerate(window.coords):
                src = g.multiply(ti, tk)
                if src in index:
                    pairs.append((k, index[src]))
            self._shift_coords[t] = tuple(pairs)
        self._fragment_ok = self._check_fragment()

    def require_representable(self, t) -> None:
        key = self.window.group.check_element(t)
        if key not in self._shift_coords:
            raise MalformedDataError(
                f"window depth {self.window.depth} cannot represent "
                f"{word_to_str(self.window.group, key)}"
            )

    def domain(self, t) -> list[int]:
        """Window points belonging to the element's set: pinned at t."""
        self.require_representable(t)
        k = self.window.coord_index(t)
        return [p for p in self.window.points() if self.window.bit(p, k) == 1]

    def shift_known(self, t, point: int) -> dict[int, int]:
        """Shifted values on the determined coordinates only."""
        self.require_representable(t)
        key = self.window.group.check_element(t)
        return {k: self.window.bit(point, j) for k, j in self._shift_coords[key]}

    @property
    def fragment_ok(self) -> bool:
        return self._fragment_ok

    def _check_fragment(self) -> bool:
        g = self.window.group
        index = {t: k for k, t in enumerate(self.window.coords)}
        ident = g.identity
        if ident not in self._shift_coords:
            return False
        if any(k != j for k, j in self._shift_coords[ident]):
            return False
        # composition consistency on determined coordinates
        for s in self.representable:
            for t in self.representable:
                st = g.multiply(s, t)
                if st not in self._shift_coords:
                    continue
                s_pairs = dict(self._shift_coords[s])
                t_pairs = dict(self._shift_coords[t])
                st_pairs = dict(self._shift_coords[st])
                for k, mid in s_pairs.items():
                    if mid in t_pairs and k in st_pairs:
                        if t_pairs[mid] != st_pairs[k]:
                            return False
        return True


def build_truncated_bernoulli(group: GroupSpec, depth: int) -> TruncatedBernoulli:
    frag = TruncatedBernoulli(BernoulliWindow.build(group, depth))
    if not frag.fragment_ok:
        raise MalformedDataError("window fragment fails the shift consistency checks")
    return frag


# ---------------------------------------------------------------------------
# finite-quotient approximations


class QuotientApprox:
    """Finite model: configurations on a finite quotient group.

    Points are 0/1 rows over the quotient, pinned to 1 at its identity,
    encoded as integers (bit ``gamma-1`` is the value at element gamma).
    The group acts through the homomorphism by exact shifts; ``rho``
    truncates each configuration to the window through the homomorphism.
    """

    def __init__(self, window: BernoulliWindow, hom: GroupHom) -> None:
        if hom.source != window.group:
            raise MalformedDataError("homomorphism source must be the window group")
        self.window = window
        self.hom = hom
        self.quotient = hom.target
        m = self.quotient.order
        self.num_points = 1 << (m - 1)

        def rule(key) -> PartialMap:
            gamma = hom.apply(key)
            gi = self.quotient.inverse(gamma)
            # shifted value at gamma' reads the source at gamma^-1 gamma'
            reads = [self.quotient.multiply(gi, gp) for gp in range(1, m)]
            pairs = []
            for z in range(self.num_points):
                if self._bit(z, gi) != 1:
                    continue
                w = 0
                for pos, src in enumerate(reads):
                    if self._bit(z, src):
                        w |= 1 << pos
                pairs.append((z, w))
            return PartialMap(tuple(pairs))

        self.action = FinitePartialAction(window.group, self.num_points, {}, rule=rule)
        self.rho = tuple(self._truncate(z) for z in range(self.num_points))

    def _bit(self, z: int, gamma: int) -> int:
        if gamma == 0:
            return 1
        return (z >> (gamma - 1)) & 1

    def point_value(self, z: int, g) -> int:
        """The configuration's value at any group element, via the quotient."""
        return self._bit(z, self.hom.apply(g))

    def _truncate(self, z: int) -> int:
        x = 0
        for k in range(1, self.window.depth + 1):
            if self.point_value(z, self.window.coords[k]):
                x |= 1 << (k - 1)
        return x


def quotient_approximation(window: BernoulliWindow, hom: GroupHom, max_order: int = 16) -> QuotientApprox:
    if hom.target.order > max_order:
        raise MalformedDataError(
            f"quotient order {hom.target.order} exceeds the supported {max_order}"
        )
    return QuotientApprox(window, hom)


def strict_equivariance_report(
    approx: QuotientApprox, elements: Sequence | None = None
) -> EquivarianceReport:
    """Exact window check of the intertwining identities of ``rho``.

    For every checked element the shifted image of each model point is
    compared coordinate-by-coordinate with the shift of its truncation,
    evaluating the true configuration through the homomorphism, so the
    comparison is exact at all window coordinates.  Both containments
    (image and strict preimage) are verified as well.
    """
    window = approx.window
    group = window.group
    if elements is None:
        elements = window.coords
    elems = [group.check_element(t) for t in elements]
    violations: list[dict] = []
    max_defect = 0.0
    points = 0
    strict_ok = True
    for t in elems:
        label = word_to_str(group, t)
        pm = approx.action.element_map(t)
        in_set = pm.target_set()
        for z in sorted(in_set):
            points += 1
            if approx.point_value(z, t) != 1:
                violations.append({"kind": "image", "element": label, "point": z})
                max_defect = max(max_defect, 1.0)
        for z, w in pm.pairs:
            points += 1
            shifted = 0
            for k in range(1, window.depth + 1):
                val = approx.point_value(z, group.multiply(group.inverse(t), window.coords[k]))
                if val:
                    shifted |= 1 << (k - 1)
            got = approx.rho[w]
            if got != shifted:
                d = metric(got, shifted, window.depth)
                violations.append(
                    {"kind": "pointwise", "element": label, "point": z, "defect": d}
                )
                max_defect = max(max_defect, d if d > 0 else 1.0)
        for z in range(approx.num_points):
            points += 1
            if approx.point_value(z, t) == 1 and z not in in_set:
                strict_ok = False
                violations.append({"kind": "strict", "element": label, "point": z})
                max_defect = max(max_defect, 1.0)
    ok = not any(v["kind"] in ("image", "pointwise") for v in violations)
    return EquivarianceReport(
        ok=ok,
        strict_ok=strict_ok,
        max_defect=max_defect,
        violations=violations,
        elements_checked=len(elems),
        points_checked=points,
    )


# ---------------------------------------------------------------------------
# certificates


@dataclass
class RfdCertificate:
    """Everything needed to re-run the finite-quotient approximation."""

    group: GroupSpec
    delta: float
    depth: int
    hom: GroupHom
    density_bound: float
    max_window_distance: float
    equivariance_defect: float
    points_checked: dict[str, int]

    def to_json(self) -> dict:
        return {
            "group": group_to_json(self.group),
            "delta": self.delta,
            "N": self.depth,
            "hom": hom_to_json(self.hom),
            "density_bound": self.density_bound,
            "max_window_distance": self.max_window_distance,
            "equivariance_defect": self.equivariance_defect,
            "points_checked": dict(self.points_checked),
        }


def _required_depth(delta: float) -> int:
    if delta <= 0:
        raise MalformedDataError("delta must be positive")
    depth = 0
    while 2.0 ** (-depth) >= delta:
        depth += 1
    return depth


def _window_images(window: BernoulliWindow, hom: GroupHom) -> list[int]:
    return [hom.apply(t) for t in window.coords]


def _separates_window(window: BernoulliWindow, hom: GroupHom) -> bool:
    imgs = _window_images(window, hom)
    if any(g == hom.target.identity for g in imgs[1:]):
        return False
    return len(set(imgs)) == len(imgs)


def _candidate_homs(
    group: GroupSpec, window: BernoulliWindow, max_order: int, max_cyclic: int
) -> Iterable[GroupHom]:
    if not isinstance(group, FreeGroup):
        raise MalformedDataError(
            "certificate search supports free groups; supply a homomorphism otherwise"
        )
    rank = group.rank
    if window.depth == 0:
        yield GroupHom(source=group, target=trivial_group(), images=(0,) * rank)
        return
    for m in range(2, max_cyclic + 1):
        if m > max_order:
            break
        target = cyclic_group(m)
        for images in itertools.product(range(m), repeat=rank):
            yield GroupHom(source=group, target=target, images=images)
    for a in range(2, max_cyclic + 1):
        for b in range(a, max_cyclic + 1):
            if a * b > max_order:
                continue
            target = direct_product(cyclic_group(a), cyclic_group(b))
            for images in itertools.product(range(a * b), repeat=rank):
                yield GroupHom(source=group, target=target, images=images)


def certify_rfd(
    group: GroupSpec,
    delta: float,
    hom: GroupHom | None = None,
    max_order: int = 16,
    max_cyclic: int = 12,
) -> RfdCertificate:
    """Produce a finite-quotient certificate at the requested tolerance.

    Picks the window depth with tail weight below ``delta``, finds (or
    checks) a homomorphism separating the window coordinates, verifies
    strict equivariance exactly, and enumerates every window point's density
    witness.  Raises ``CertificationError`` when no homomorphism works.
    """
    depth = _required_depth(delta)
    window = BernoulliWindow.build(group, depth)
    chosen: GroupHom | None = None
    if hom is not None:
        if hom.source != group:
            raise MalformedDataError("homomorphism source must match the group")
        if not _separates_window(window, hom):
            raise CertificationError(
                "supplied homomorphism does not separate the window coordinates"
            )
        chosen = hom
    else:
        for cand in _candidate_homs(group, window, max_order, max_cyclic):
            if _separates_window(window, cand):
                chosen = cand
                break
        if chosen is None:
            raise CertificationError(
                "no homomorphism within the search budget separates the window"
            )

    approx = quotient_approximation(window, chosen, max_order=max_order)
    eq = strict_equivariance_report(approx)
    if not (eq.ok and eq.strict_ok):
        raise CertificationError("quotient approximation is not strictly equivariant")

    worst = 0.0
    for x in window.points():
        z = _density_witness(window, chosen, x)
        worst = max(worst, metric(approx.rho[z], x, depth))
    bound = 2.0 ** (-depth)
    if worst > bound:
        raise CertificationError("density witnesses exceed the tail bound")
    return RfdCertificate(
        group=group,
        delta=float(delta),
        depth=depth,
        hom=chosen,
        density_bound=bound,
        max_window_distance=worst,
        equivariance_defect=eq.max_defect,
        points_checked={"window": window.num_points, "quotient": approx.num_points},
    )


def _density_witness(window: BernoulliWindow, hom: GroupHom, x: int) -> int:
    """The configuration equal to x on window images and 0 elsewhere."""
    z = 0
    for k in range(1, window.depth + 1):
        if window.bit(x, k):
            gamma = hom.apply(window.coords[k])
            z |= 1 << (gamma - 1)
    return z


def verify_certificate(cert: RfdCertificate, max_order: int = 16) -> bool:
    """Re-run the whole construction recorded in a certificate."""
    try:
        depth = _required_depth(cert.delta)
        if depth != cert.depth:
            return False
        if cert.density_bound != 2.0 ** (-depth) or cert.density_bound >= cert.delta:
            return False
        window = BernoulliWindow.build(cert.group, depth)
        if not _separates_window(window, cert.hom):
            return False
        approx = quotient_approximation(window, cert.hom, max_order=max_order)
        eq = strict_equivariance_report(approx)
        if not (eq.ok and eq.strict_ok and eq.max_defect <= cert.equivariance_defect):
            return False
        for x in window.points():
            z = _density_witness(window, cert.hom, x)
            if metric(approx.rho[z], x, depth) > cert.density_bound:
                return False
        if cert.points_checked != {"window": window.num_points, "quotient": approx.num_points}:
            return False
        return True
    except (MalformedDataError, CertificationError):
        return False


# ---------------------------------------------------------------------------
# invariant measure approximants


@dataclass(frozen=True)
class CylinderFunction:
    """A function of finitely many window coordinates.

    ``values`` has one entry per assignment of the listed coordinates; the
    i-th listed coordinate contributes bit i of the lookup index.
    """

    coords: tuple[int, ...]
    values: tuple[float, ...]
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.values) != (1 << len(self.coords)):
            raise MalformedDataError("need one value per coordinate assignment")

    def eval_bits(self, bit_at: Callable[[int], int]) -> float:
        idx = 0
        for i, k in enumerate(self.coords):
            if bit_at(k):
                idx |= 1 << i
        return self.values[idx]

    def on_window_point(self, window: BernoulliWindow, point: int) -> float:
        return self.eval_bits(lambda k: window.bit(point, k))

    @staticmethod
    def constant(c: float) -> "CylinderFunction":
        return CylinderFunction(coords=(), values=(float(c),), label=f"const {c}")

    @staticmethod
    def coordinate_indicator(k: int, value: int = 1) -> "CylinderFunction":
        vals = (0.0, 1.0) if value else (1.0, 0.0)
        return CylinderFunction(coords=(k,), values=vals, label=f"x[{k}] = {value}")


@dataclass
class MeasureApprox:
    """State values of the averaging measure and its invariance defects."""

    values: list[dict]
    defects: list[dict]
    normalization: float
    positive_ok: bool
    max_defect: float

    def to_json(self) -> dict:
        return {
            "values": self.values,
            "defects": self.defects,
            "normalization": self.normalization,
            "positive_ok": self.positive_ok,
            "max_defect": self.max_defect,
        }


def invariant_measure_approx(
    approx: QuotientApprox,
    tests: Sequence[CylinderFunction],
    elements: Sequence | None = None,
) -> MeasureApprox:
    """Average the tests over the pushed-forward model points.

    Also reports, per element, the defect between averaging a test over the
    element's set after shifting back and averaging over the inverse's set;
    exact summation keeps the defect at zero whenever the model shifts are
    bijections.
    """
    window = approx.window
    group = window.group
    if elements is None:
        elements = window.coords
    elems = [group.check_element(t) for t in elements]
    for f in tests:
        if any(not (0 <= k <= window.depth) for k in f.coords):
            raise MalformedDataError(
                f"test {f.label!r} depends on coordinates outside the window"
            )
    total = approx.num_points
    values: list[dict] = []
    positive_ok = True
    norm = math.fsum(1.0 for _ in range(total)) / total
    for f in tests:
        samples = [f.on_window_point(window, approx.rho[z]) for z in range(total)]
        mu = math.fsum(samples) / total
        values.append({"test": f.label or repr(f.coords), "value": mu})
        if all(v >= 0.0 for v in f.values) and mu < 0.0:
            positive_ok = False
    defects: list[dict] = []
    max_defect = 0.0
    for f in tests:
        for t in elems:
            label = word_to_str(group, t)
            pm = approx.action.element_map(t)
            ti = group.inverse(t)
            shifted = [
                f.eval_bits(
                    lambda k, z=z: approx.point_value(
                        z, group.multiply(t, window.coords[k])
                    )
                )
                for z in sorted(pm.target_set())
            ]
            plain = [
                f.on_window_point(window, approx.rho[z])
                for z in sorted(approx.action.element_map(ti).target_set())
            ]
            defect = abs(math.fsum(shifted) - math.fsum(plain)) / total
            defects.append({"test": f.label or repr(f.coords), "element": label, "defect": defect})
            max_defect = max(max_defect, defect)
    return MeasureApprox(
        values=values,
        defects=defects,
        normalization=norm,
        positive_ok=positive_ok,
        max_defect=max_defect,
    )
