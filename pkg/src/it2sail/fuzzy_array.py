"""Vectorized IT2 controller: one row per simulated boat.

Mirrors :func:`it2sail.fuzzy.controller_step` but evaluates a batch of
controllers (possibly with different FOU sizes) in a single numpy pass.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from it2sail.fuzzy import IT2Set, RuleBase


def _tri(x, left, apex, right, lsh, rsh):
    with np.errstate(divide="ignore", invalid="ignore"):
        rise = (x - left) / (apex - left)
        fall = (right - x) / (right - apex)
    m = np.where(x < apex, rise, np.where(x > apex, fall, 1.0))
    m = np.clip(m, 0.0, 1.0)
    m = np.where(lsh & (x <= apex), 1.0, m)
    return np.where(rsh & (x >= apex), 1.0, m)


class _Variable:
    """Stacked set parameters for one input variable, shape (B, n_sets)."""

    def __init__(self, rows: Sequence[Sequence[IT2Set]]):
        p = np.array(
            [[(s.base.left, s.base.apex, s.base.right, s.shift) for s in row] for row in rows],
            dtype=float,
        )
        left, apex, right, shift = np.moveaxis(p, -1, 0)
        self.apex = apex
        self.lo = (left - shift, apex - shift, right - shift)
        self.hi = (left + shift, apex + shift, right + shift)
        self.lsh = np.array([[s.base.shoulder == "left" for s in row] for row in rows])
        self.rsh = np.array([[s.base.shoulder == "right" for s in row] for row in rows])

    def take(self, idx) -> _Variable:
        new = object.__new__(_Variable)
        new.apex = self.apex[idx]
        new.lo = tuple(a[idx] for a in self.lo)
        new.hi = tuple(a[idx] for a in self.hi)
        new.lsh, new.rsh = self.lsh[idx], self.rsh[idx]
        return new

    def degrees(self, x):
        """Lower and upper membership, each (B, n_sets), for x of shape (B,)."""
        x = x[:, None]
        m_lo = _tri(x, *self.lo, self.lsh, self.rsh)
        m_hi = _tri(x, *self.hi, self.lsh, self.rsh)
        upper = np.where(x < self.lo[1], m_lo, np.where(x > self.hi[1], m_hi, 1.0))
        return np.minimum(m_lo, m_hi), upper


def km_type_reduce_batch(lower, upper, ys):
    """Karnik-Mendel endpoints for a batch, by exhaustive switch-point search.

    ``lower``/``upper`` are (B, G) grades against ascending consequents
    ``ys`` (G,). Every switch point k in 0..G is scored at once from prefix
    sums, which gives the exact extremes without iterating. Rows whose upper
    grades are all zero return NaN.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    ys = np.asarray(ys, dtype=float)
    zero = np.zeros((lower.shape[0], 1))

    def prefix(a):
        return np.concatenate([zero, np.cumsum(a, axis=1)], axis=1)

    def suffix(a):
        # summed from the right so tiny grades survive next to large ones
        return np.concatenate([np.cumsum(a[:, ::-1], axis=1)[:, ::-1], zero], axis=1)

    lo_w, up_w = prefix(lower), prefix(upper)
    lo_m, up_m = prefix(lower * ys), prefix(upper * ys)
    lo_ws, up_ws = suffix(lower), suffix(upper)
    lo_ms, up_ms = suffix(lower * ys), suffix(upper * ys)

    def endpoints(num, den, pick):
        ok = den > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            y = np.where(ok, num / np.where(ok, den, 1.0), np.nan)
        silent = ~ok.any(axis=1)
        y[silent] = 0.0
        out = pick(y, axis=1)
        out[silent] = np.nan
        return out

    y_l = endpoints(up_m + lo_ms, up_w + lo_ws, np.nanmin)
    y_r = endpoints(lo_m + up_ms, lo_w + up_ws, np.nanmax)
    return y_l, y_r


class BatchController:
    """A batch of rule bases sharing topology, consequents and limits.

    Rows may differ in their set parameters (typically only the FOU shift).
    """

    def __init__(self, rule_bases: Sequence[RuleBase]):
        if not rule_bases:
            raise ValueError("need at least one rule base")
        ref = rule_bases[0]
        for rb in rule_bases[1:]:
            if (
                rb.consequents != ref.consequents
                or rb.singleton_values != ref.singleton_values
                or rb.universe != ref.universe
                or rb.rudder_limit != ref.rudder_limit
                or len(rb.error_sets) != len(ref.error_sets)
                or len(rb.derror_sets) != len(ref.derror_sets)
            ):
                raise ValueError("rule bases in a batch must share grid, singletons and limits")
        self.universe = ref.universe
        self.rudder_limit = ref.rudder_limit
        self._err = _Variable([rb.error_sets for rb in rule_bases])
        self._derr = _Variable([rb.derror_sets for rb in rule_bases])

        # Rules are regrouped so equal consequents are contiguous; grades within
        # a group are summed before type reduction.
        out_idx = np.array(ref.consequents).ravel()
        self._order = np.argsort(out_idx, kind="stable")
        used, starts = np.unique(out_idx[self._order], return_index=True)
        self._starts = starts
        self._ys = np.asarray(ref.singleton_values, dtype=float)[used]
        self.size = len(rule_bases)

    def take(self, idx) -> BatchController:
        new = object.__new__(BatchController)
        new.__dict__.update(self.__dict__)
        new._err = self._err.take(idx)
        new._derr = self._derr.take(idx)
        new.size = len(new._err.apex)
        return new

    def fire(self, error, derror):
        """Grouped firing grades, each (B, G), for clamped inputs."""
        e_lo, e_up = self._err.degrees(error)
        d_lo, d_up = self._derr.degrees(derror)
        b = e_lo.shape[0]
        lo = np.minimum(e_lo[:, :, None], d_lo[:, None, :]).reshape(b, -1)[:, self._order]
        up = np.minimum(e_up[:, :, None], d_up[:, None, :]).reshape(b, -1)[:, self._order]
        return (
            np.add.reduceat(lo, self._starts, axis=1),
            np.add.reduceat(up, self._starts, axis=1),
        )

    def __call__(self, error, derror):
        u = self.universe
        lo, up = self.fire(np.clip(error, -u, u), np.clip(derror, -u, u))
        y_l, y_r = km_type_reduce_batch(lo, up, self._ys)
        rudder = np.clip((y_l + y_r) / 2, -self.rudder_limit, self.rudder_limit)
        return np.where(np.isnan(rudder), 0.0, rudder)
