"""
Interval type-2 fuzzy inference for the heading controller.

Inputs are the bearing error and its per-step change (degrees); the output is
a rudder angle. Type-1 inference is the special case of a zero footprint of
uncertainty (FOU). The pipeline is

    membership_it2 -> fire_rules (min t-norm) -> km_type_reduce -> defuzzify

and ``controller_step`` composes it. Everything here works on plain floats and
is the reference implementation; :mod:`it2sail.fuzzy_array` is the vectorized
twin used by the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from it2sail.errors import AllRulesSilent

DEFAULT_UNIVERSE = 60.0
DEFAULT_APEXES = (-60.0, -30.0, 0.0, 30.0, 60.0)
DEFAULT_HALF_WIDTH = 30.0
DEFAULT_SINGLETONS = (-45.0, -22.5, 0.0, 22.5, 45.0)
DEFAULT_RUDDER_LIMIT = 45.0
FOU_SIZES = (0, 5, 10, 15, 20, 25)


@dataclass(frozen=True)
class TriangularSet:
    """Triangle ``(left, apex, right)`` in degrees.

    ``shoulder`` is ``"left"`` or ``"right"`` for the outermost sets of a
    variable: membership saturates at 1 beyond the apex on that side.
    """

    left: float
    apex: float
    right: float
    shoulder: str | None = None

    def __post_init__(self):
        if not (self.left <= self.apex <= self.right) or not self.left < self.right:
            raise ValueError(
                f"need left <= apex <= right and left < right, got "
                f"({self.left}, {self.apex}, {self.right})"
            )
        if self.shoulder not in (None, "left", "right"):
            raise ValueError(f"shoulder must be None, 'left' or 'right', got {self.shoulder!r}")

    def shifted(self, delta: float) -> TriangularSet:
        return TriangularSet(self.left + delta, self.apex + delta, self.right + delta, self.shoulder)


@dataclass(frozen=True)
class IT2Set:
    """Triangular set whose apex may move horizontally by up to ``shift``.

    The FOU is the region swept by the triangles shifted over
    ``[-shift, +shift]``; an FOU size of F corresponds to ``shift = F / 2``.
    """

    base: TriangularSet
    shift: float = 0.0

    def __post_init__(self):
        b = self.base
        if self.shift < 0:
            raise ValueError(f"shift must be >= 0, got {self.shift}")
        # Flanks that are replaced by a shoulder impose no constraint.
        if b.shoulder != "left" and not self.shift < b.apex - b.left:
            raise ValueError(f"shift {self.shift} leaves an empty lower membership function")
        if b.shoulder != "right" and not self.shift < b.right - b.apex:
            raise ValueError(f"shift {self.shift} leaves an empty lower membership function")


class IntervalDegree(NamedTuple):
    lower: float
    upper: float


class FiringInterval(NamedTuple):
    lower: float
    upper: float
    consequent: float


@dataclass(frozen=True)
class RuleBase:
    """5 x 5 rule grid over (error, delta error) with singleton consequents.

    ``consequents[i][j]`` indexes ``singleton_values`` for the rule whose
    antecedents are ``error_sets[i]`` and ``derror_sets[j]``.
    """

    error_sets: tuple[IT2Set, ...]
    derror_sets: tuple[IT2Set, ...]
    consequents: tuple[tuple[int, ...], ...]
    singleton_values: tuple[float, ...]
    universe: float = DEFAULT_UNIVERSE
    rudder_limit: float = DEFAULT_RUDDER_LIMIT
    fou: float = field(default=0.0, compare=False)

    def __post_init__(self):
        n_e, n_d = len(self.error_sets), len(self.derror_sets)
        if len(self.consequents) != n_e or any(len(row) != n_d for row in self.consequents):
            raise ValueError(f"consequent grid must be {n_e} x {n_d}")
        n_out = len(self.singleton_values)
        if any(not 0 <= c < n_out for row in self.consequents for c in row):
            raise ValueError(f"consequent indices must lie in 0..{n_out - 1}")
        if any(a >= b for a, b in zip(self.singleton_values, self.singleton_values[1:])):
            raise ValueError("singleton_values must be strictly increasing")
        if self.universe <= 0 or self.rudder_limit <= 0:
            raise ValueError("universe and rudder_limit must be positive")

    @property
    def n_rules(self) -> int:
        return len(self.error_sets) * len(self.derror_sets)


def membership_t1(fset: TriangularSet, x: float) -> float:
    """Type-1 triangular membership grade of ``x``."""
    if x == fset.apex:
        return 1.0
    if x < fset.apex:
        if fset.shoulder == "left":
            return 1.0
        if x <= fset.left:
            return 0.0
        return (x - fset.left) / (fset.apex - fset.left)
    if fset.shoulder == "right":
        return 1.0
    if x >= fset.right:
        return 0.0
    return (fset.right - x) / (fset.right - fset.apex)


def membership_it2(fset: IT2Set, x: float) -> IntervalDegree:
    """Lower and upper membership of ``x`` in an apex-shifted IT2 set.

    The upper function is the trapezoid ``(left - s, apex - s, apex + s,
    right + s)``; the lower function is the pointwise minimum of the two
    extreme shifted triangles.
    """
    s = fset.shift
    if s == 0.0:
        m = membership_t1(fset.base, x)
        return IntervalDegree(m, m)
    lo_tri = fset.base.shifted(-s)
    hi_tri = fset.base.shifted(s)
    m_lo = membership_t1(lo_tri, x)
    m_hi = membership_t1(hi_tri, x)
    apex = fset.base.apex
    if x < apex - s:
        upper = m_lo
    elif x > apex + s:
        upper = m_hi
    else:
        upper = 1.0
    return IntervalDegree(min(m_lo, m_hi), upper)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def fire_rules(rb: RuleBase, error: float, derror: float) -> list[FiringInterval]:
    """Firing interval of every rule, row-major over (error set, derror set)."""
    e_deg = [membership_it2(s, error) for s in rb.error_sets]
    d_deg = [membership_it2(s, derror) for s in rb.derror_sets]
    values = rb.singleton_values
    out = []
    for i, (e_lo, e_up) in enumerate(e_deg):
        row = rb.consequents[i]
        for j, (d_lo, d_up) in enumerate(d_deg):
            out.append(FiringInterval(min(e_lo, d_lo), min(e_up, d_up), values[row[j]]))
    return out


def _km_endpoint(ys: list[float], lo: list[float], up: list[float], left: bool) -> float:
    # Karnik-Mendel switch-point iteration on ascending consequents.
    # For y_l the first k rules take their upper grade, for y_r their lower
    # grade. Switch points whose weights sum to zero are skipped.
    n = len(ys)
    if n == 1:
        return ys[0]
    better = (lambda a, b: a < b) if left else (lambda a, b: a > b)

    def centroid(k):
        f = up[:k] + lo[k:] if left else lo[:k] + up[k:]
        den = sum(f)
        return sum(fi * yi for fi, yi in zip(f, ys)) / den if den > 0 else None

    def usable(k):
        step = 1 if left else -1
        while centroid(k) is None:
            k += step
        return k

    # any start inside the bounds converges; upper grades never sum to zero
    y = sum(fi * yi for fi, yi in zip(up, ys)) / sum(up)
    k = k_prev = -1
    for _ in range(n + 2):
        k = sum(1 for yi in ys if yi <= y) if left else sum(1 for yi in ys if yi < y)
        k = usable(min(n - 1, max(1, k)))
        if k == k_prev:
            break
        y = centroid(k)
        k_prev = k
    # rounding can park y exactly on a consequent one switch point short of
    # the optimum; the centroid is unimodal in k, so walk outwards across any
    # plateau until nothing beats it
    moved = True
    while moved:
        moved = False
        for d in (-1, 1):
            kk = k + d
            while 0 <= kk <= n:
                v = centroid(kk)
                if v is not None and v != y:
                    if better(v, y):
                        k, y, moved = kk, v, True
                    break
                kk += d
            if moved:
                break
    return y


def km_type_reduce(firings: Sequence[FiringInterval]) -> tuple[float, float]:
    """Centroid interval ``[y_l, y_r]`` of the rule outputs.

    Rules sharing a consequent are merged first (their grades add), which
    leaves the extrema of the interval weighted average unchanged.
    """
    merged: dict[float, list[float]] = {}
    for lo, up, y in firings:
        acc = merged.setdefault(y, [0.0, 0.0])
        acc[0] += lo
        acc[1] += up
    if not any(up > 0 for _, up in merged.values()):
        raise AllRulesSilent("every rule has zero upper firing grade")
    ys = sorted(y for y, (_, up) in merged.items() if up > 0)
    lo = [merged[y][0] for y in ys]
    up = [merged[y][1] for y in ys]
    return _km_endpoint(ys, lo, up, left=True), _km_endpoint(ys, lo, up, left=False)


def defuzzify(interval: tuple[float, float], rudder_limit: float = DEFAULT_RUDDER_LIMIT) -> float:
    y_l, y_r = interval
    return _clamp((y_l + y_r) / 2, -rudder_limit, rudder_limit)


def controller_step(rb: RuleBase, error: float, derror: float) -> float:
    """Rudder command (degrees) for one control step. Never raises."""
    u = rb.universe
    firings = fire_rules(rb, _clamp(error, -u, u), _clamp(derror, -u, u))
    try:
        interval = km_type_reduce(firings)
    except AllRulesSilent:
        return 0.0
    return defuzzify(interval, rb.rudder_limit)


def default_sets(
    apexes: Sequence[float] = DEFAULT_APEXES,
    half_width: float = DEFAULT_HALF_WIDTH,
    shift: float = 0.0,
) -> tuple[IT2Set, ...]:
    """Evenly spaced triangles; the two outermost act as shoulders."""
    n = len(apexes)
    sets = []
    for i, a in enumerate(apexes):
        shoulder = "left" if i == 0 else "right" if i == n - 1 else None
        sets.append(IT2Set(TriangularSet(a - half_width, a, a + half_width, shoulder), shift))
    return tuple(sets)


def pd_grid(n_in: int = 5, n_out: int = 5) -> tuple[tuple[int, ...], ...]:
    """Anti-diagonal PD grid: output index grows with error and delta error."""
    diag, mid_out = n_in - 1, (n_out - 1) // 2
    return tuple(
        tuple(min(max(i + j - diag, -mid_out), mid_out) + mid_out for j in range(n_in))
        for i in range(n_in)
    )


def default_rule_base(fou: float = 0.0, **overrides) -> RuleBase:
    """The default 25-rule controller with an FOU of total width ``fou``.

    Keyword overrides: ``apexes``, ``half_width``, ``singleton_values``,
    ``consequents``, ``universe``, ``rudder_limit``.
    """
    apexes = tuple(overrides.pop("apexes", DEFAULT_APEXES))
    half_width = overrides.pop("half_width", DEFAULT_HALF_WIDTH)
    singletons = tuple(overrides.pop("singleton_values", DEFAULT_SINGLETONS))
    consequents = overrides.pop("consequents", None)
    if consequents is None:
        consequents = pd_grid(len(apexes), len(singletons))
    consequents = tuple(tuple(int(c) for c in row) for row in consequents)
    sets = default_sets(apexes, half_width, fou / 2.0)
    return RuleBase(sets, sets, consequents, singletons, fou=fou, **overrides)
