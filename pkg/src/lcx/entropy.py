"""Rényi entropies (in nats) of densities, convolution closures and pmfs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import logsumexp

from .convolve import ConvolutionClosure
from .density import (
    LogConcaveDensity,
    piece_entropy_terms,
    piece_log_masses,
    support_length,
)
from .errors import InvalidParameter
from .quadrature import adaptive_quad


@dataclass(frozen=True)
class RenyiOrder:
    """Order selector: ``zero``, ``finite`` (with ``p``), ``shannon`` or ``infinity``."""

    kind: str
    p: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("zero", "finite", "shannon", "infinity"):
            raise InvalidParameter(f"unknown order kind {self.kind!r}")
        if self.kind == "finite":
            if self.p is None or not math.isfinite(self.p) or self.p <= 0 or self.p == 1:
                raise InvalidParameter(
                    f"finite order needs 0 < p < inf, p != 1 (got {self.p!r})")

    @classmethod
    def of(cls, value: Union["RenyiOrder", float, str]) -> "RenyiOrder":
        """Coerce ``0``, ``1``, ``inf``, a float or a string like ``"shannon"``."""
        if isinstance(value, RenyiOrder):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("inf", "infinity", "oo"):
                return cls("infinity")
            if key in ("shannon", "h", "h1"):
                return cls("shannon")
            value = float(key)
        value = float(value)
        if value == 0:
            return cls("zero")
        if value == 1:
            return cls("shannon")
        if math.isinf(value) and value > 0:
            return cls("infinity")
        return cls("finite", value)

    @property
    def value(self) -> float:
        return {"zero": 0.0, "shannon": 1.0, "infinity": math.inf}.get(self.kind, self.p)

    def __str__(self) -> str:
        if self.kind == "finite":
            return f"{self.p:g}"
        return {"zero": "0", "shannon": "1", "infinity": "inf"}[self.kind]


Order = Union[RenyiOrder, float, str]


# ---------------------------------------------------------------------------
# continuous
# ---------------------------------------------------------------------------

def renyi(d, order: Order, *, return_error: bool = False):
    """``h_p`` of a density or of a convolution closure.

    Densities use per-piece closed forms (error 0).  Closures are
    integrated by adaptive quadrature and the achieved error estimate is
    returned alongside the value when ``return_error`` is set.
    """
    order = RenyiOrder.of(order)
    if isinstance(d, LogConcaveDensity):
        val, err = _renyi_exact(d, order), 0.0
    elif isinstance(d, ConvolutionClosure):
        val, err = _renyi_closure(d, order)
    else:
        raise TypeError(f"cannot take the entropy of {type(d).__name__}")
    return (val, err) if return_error else val


def _renyi_exact(d: LogConcaveDensity, order: RenyiOrder) -> float:
    if order.kind == "zero":
        return math.log(support_length(d))
    if order.kind == "infinity":
        return -float(d.potential.max())
    if order.kind == "shannon":
        return -float(np.sum(piece_entropy_terms(d.pieces)))
    p = order.p
    return float(logsumexp(piece_log_masses(d.pieces, p=p))) / (1.0 - p)


def _closure_edges(cl: ConvolutionClosure, decay_power: float):
    """Panels covering the closure's support; unbounded sides are cut where
    the integrand has decayed by ``e^-80`` and the cut mass is estimated."""
    edges = list(cl.breakpoints)
    lo_s, hi_s = cl.support
    cut = 0.0
    for side, rate in ((1, cl.right_decay), (-1, cl.left_decay)):
        bound = hi_s if side > 0 else lo_s
        if not math.isinf(bound):
            continue
        k = decay_power * abs(rate)
        start = edges[-1] if side > 0 else edges[0]
        span = 80.0 / k
        width = 1.0 / k
        pts = []
        reach = width
        while reach < span:
            pts.append(start + side * reach)
            width *= 2.0
            reach += width
        end = start + side * span
        pts.append(end)
        edges.extend(pts)
        cut += float(cl(end)) ** decay_power / k
    return np.sort(np.asarray(edges)), cut


def _renyi_closure(cl: ConvolutionClosure, order: RenyiOrder):
    if order.kind == "zero":
        lo, hi = cl.support
        return math.log(hi - lo), 0.0
    if order.kind == "infinity":
        sup = cl.sup
        return -math.log(sup.value), sup.error / sup.value
    if order.kind == "shannon":
        edges, cut = _closure_edges(cl, 1.0)

        def integrand(x):
            h = cl(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(h > 0, -h * np.log(h), 0.0)

        res = adaptive_quad(integrand, edges)
        return res.value, res.error + cut * (1.0 + abs(math.log(max(cut, 1e-300))))
    p = order.p
    edges, cut = _closure_edges(cl, p)
    res = adaptive_quad(lambda x: cl(x) ** p, edges)
    return math.log(res.value) / (1.0 - p), (res.error + cut) / (res.value * abs(1.0 - p))


# ---------------------------------------------------------------------------
# discrete
# ---------------------------------------------------------------------------

def renyi_discrete(f, order: Order) -> float:
    """``H_p`` of a pmf (anything exposing ``probs``) by direct summation."""
    order = RenyiOrder.of(order)
    probs = np.asarray(getattr(f, "probs", f), dtype=float)
    probs = probs[probs > 0]
    if order.kind == "zero":
        return math.log(probs.size)
    if order.kind == "infinity":
        return -math.log(float(probs.max()))
    if order.kind == "shannon":
        return -float(np.sum(probs * np.log(probs)))
    p = order.p
    return float(logsumexp(p * np.log(probs))) / (1.0 - p)
