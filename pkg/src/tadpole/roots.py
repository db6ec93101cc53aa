"""Zeros of an analytic function in a rectangle by the argument principle.

The winding number of ``f`` around a box is the contour integral of
``f'/f`` divided by ``2 pi i``.  Each side is integrated with the composite
trapezoid rule on 512 panels, doubled until two successive Richardson
estimates agree.  Boxes are bisected until each holds at most one zero.
That zero is seeded from the first moment ``(1/2 pi i) ∮ z f'/f dz`` and
polished with Newton's method.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import RootRefinementError

log = logging.getLogger(__name__)

BASE_PANELS = 512
MAX_PANELS = 2**17
INTEGRALITY_TOL = 1e-3
NEWTON_MAXITER = 50


@dataclass(frozen=True)
class Rectangle:
    """Closed box ``[re_min, re_max] x [im_min, im_max]`` in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    def corners(self) -> tuple[complex, complex, complex, complex]:
        """Counter-clockwise from the lower-left corner."""
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        return (
            self.re_min - tol <= z.real <= self.re_max + tol
            and self.im_min - tol <= z.imag <= self.im_max + tol
        )

    def padded(self, d: float) -> "Rectangle":
        return Rectangle(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d)

    def split(self, frac: float) -> tuple["Rectangle", "Rectangle"]:
        if self.width >= self.height:
            cut = self.re_min + frac * self.width
            return (Rectangle(self.re_min, cut, self.im_min, self.im_max),
                    Rectangle(cut, self.re_max, self.im_min, self.im_max))
        cut = self.im_min + frac * self.height
        return (Rectangle(self.re_min, self.re_max, self.im_min, cut),
                Rectangle(self.re_min, self.re_max, cut, self.im_max))


LogDerivative = Callable[[np.ndarray], np.ndarray]


def _side_integrals(logderiv: LogDerivative, a: complex, b: complex, *, moment: bool):
    """Trapezoid integrals of ``f'/f`` (and ``z f'/f``) along ``[a, b]``."""

    def trap(n):
        t = np.linspace(0.0, 1.0, n + 1)
        zs = a + (b - a) * t
        g = logderiv(zs)
        w = np.full(n + 1, 1.0 / n)
        w[0] = w[-1] = 0.5 / n
        with np.errstate(invalid="ignore", over="ignore"):
            i0 = (b - a) * np.sum(w * g)
            i1 = (b - a) * np.sum(w * zs * g) if moment else 0j
        return i0, i1

    n = BASE_PANELS
    c0, c1 = trap(n)
    prev = None
    while True:
        f0, f1 = trap(2 * n)
        # one Richardson step removes the h^2 term of the trapezoid error
        r0, r1 = (4 * f0 - c0) / 3, (4 * f1 - c1) / 3
        if prev is not None and abs(r0 - prev) < 0.1 * INTEGRALITY_TOL:
            return r0, r1
        if 2 * n >= MAX_PANELS or not np.isfinite(r0):
            return r0, r1
        prev = r0
        n *= 2
        c0, c1 = f0, f1


def winding(logderiv: LogDerivative, box: Rectangle, *, moment: bool = False):
    """Return ``(count, first_moment)``; ``count`` is real-valued (not rounded)."""
    cs = box.corners()
    tot0 = 0j
    tot1 = 0j
    for a, b in zip(cs, cs[1:] + cs[:1]):
        i0, i1 = _side_integrals(logderiv, a, b, moment=moment)
        tot0 += i0
        tot1 += i1
    k = tot0 / (2j * math.pi)
    return k, tot1 / (2j * math.pi)


def _as_count(k: complex) -> int | None:
    if not (math.isfinite(k.real) and math.isfinite(k.imag)):
        return None
    n = round(k.real)
    if abs(k - n) > INTEGRALITY_TOL:
        return None
    return int(n)


def newton(f: Callable, df: Callable, z0: complex, *, tol: float, box: Rectangle | None = None) -> complex:
    """Complex Newton iteration; stops once ``|f| <= tol`` and the step has stalled."""
    z = complex(z0)
    for _ in range(NEWTON_MAXITER):
        fz = complex(f(z))
        dfz = complex(df(z))
        if dfz == 0 or not math.isfinite(abs(fz)):
            break
        step = fz / dfz
        z -= step
        if abs(step) <= 4e-16 * max(1.0, abs(z)) or (abs(fz) <= tol and abs(step) <= 1e-12 * max(1.0, abs(z))):
            if abs(complex(f(z))) <= tol:
                return z
    raise RootRefinementError(f"Newton did not converge from {z0} in box {box}", box)


# off-centre first: symmetric problems put zeros exactly on the midline
_SPLITS = (0.4637, 0.5419, 0.5, 0.4171, 0.5883)


def find_zeros(
    f: Callable,
    df: Callable,
    box: Rectangle,
    *,
    tol: float = 1e-12,
    min_size: float = 1e-9,
) -> list[complex]:
    """All simple zeros of ``f`` strictly inside ``box``, sorted by imaginary part.

    ``f`` and ``df`` must accept numpy arrays.  Raises ``ValueError`` when no
    contour placement yields an integral winding number (a zero sits on the
    boundary) and ``RootRefinementError`` when Newton fails.
    """

    def logderiv(zs):
        # a zero on the contour gives inf/nan, which the count check rejects
        with np.errstate(divide="ignore", invalid="ignore"):
            return df(zs) / f(zs)

    k, _ = winding(logderiv, box)
    count = _as_count(k)
    if count is None:
        raise ValueError(f"non-integral winding number {k} on {box}")
    roots: list[complex] = []
    stack = [(box, count)]
    while stack:
        b, c = stack.pop()
        if c == 0:
            continue
        if c == 1:
            _, m1 = winding(logderiv, b, moment=True)
            seed = m1 if b.contains(m1) else b.center
            z = newton(lambda w: f(np.asarray(w)), lambda w: df(np.asarray(w)), seed, tol=tol, box=b)
            slack = 1e-8 * max(1.0, abs(z))
            if not b.contains(z, slack):
                # Newton wandered off; restart from the centre once
                z = newton(lambda w: f(np.asarray(w)), lambda w: df(np.asarray(w)), b.center, tol=tol, box=b)
                if not b.contains(z, slack):
                    raise RootRefinementError(f"Newton left the box {b} (landed at {z})", b)
            roots.append(z)
            continue
        if max(b.width, b.height) < min_size:
            raise RootRefinementError(f"{c} zeros cluster in {b}; multiple root?", b)
        for frac in _SPLITS:
            left, right = b.split(frac)
            cl = _as_count(winding(logderiv, left)[0])
            cr = _as_count(winding(logderiv, right)[0])
            if cl is not None and cr is not None and cl + cr == c:
                stack.append((left, cl))
                stack.append((right, cr))
                break
        else:
            raise RootRefinementError(f"could not bisect {b} cleanly", b)
    roots.sort(key=lambda w: (w.imag, w.real))
    return roots
