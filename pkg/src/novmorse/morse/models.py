"""Catalog of closed manifolds with closed-form Morse functions.

Every model is a finite product of factors:

* ``circle``: ``R/Z`` with ``f = cos(2 pi x)`` and the flat metric,
  stored as one unwrapped coordinate;
* ``sphere``: the unit sphere in ``R^3`` with the height ``f = z`` and the
  round metric, stored as three ambient coordinates.

``f`` is the sum over factors, so the gradient flow is the product flow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from ..errors import UnsupportedModel

CIRCLE = 0
SPHERE = 1

_WIDTH = {CIRCLE: 1, SPHERE: 3}
_TANGENT = {CIRCLE: 1, SPHERE: 2}
_NAMES = {CIRCLE: "circle", SPHERE: "sphere"}
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class MorseModel:
    name: str
    kinds: tuple[int, ...]

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, pos = [], 0
        for k in self.kinds:
            out.append(pos)
            pos += _WIDTH[k]
        return tuple(out)

    @property
    def dim(self) -> int:
        return sum(_TANGENT[k] for k in self.kinds)

    @property
    def ambient_dim(self) -> int:
        return sum(_WIDTH[k] for k in self.kinds)

    @property
    def factor_names(self) -> tuple[str, ...]:
        return tuple(_NAMES[k] for k in self.kinds)

    @property
    def is_separable(self) -> bool:
        # every catalog function is a sum over factors
        return True

    @property
    def catalog_critical_count(self) -> int:
        return 2 ** len(self.kinds)

    @property
    def euler_characteristic(self) -> int:
        return 0 if CIRCLE in self.kinds else 2 ** len(self.kinds)

    # -- function, gradient, Hessian ---------------------------------------
    def f(self, x) -> float:
        total = 0.0
        for k, o in zip(self.kinds, self.offsets):
            total += math.cos(TWO_PI * x[o]) if k == CIRCLE else x[o + 2]
        return total

    def grad(self, x) -> np.ndarray:
        """Riemannian gradient as an ambient vector (tangent to the model)."""
        g = np.zeros(self.ambient_dim)
        for k, o in zip(self.kinds, self.offsets):
            if k == CIRCLE:
                g[o] = -TWO_PI * math.sin(TWO_PI * x[o])
            else:
                a, b, c = x[o], x[o + 1], x[o + 2]
                g[o : o + 3] = (-c * a, -c * b, 1.0 - c * c)
        return g

    def grad_norm(self, x) -> float:
        return float(np.linalg.norm(self.grad(x)))

    def tangent_blocks(self, x) -> list[np.ndarray]:
        """Orthonormal tangent basis per factor, as ``(ambient_dim, t)`` arrays.

        Sphere bases are positively oriented: ``t1 x t2`` is the outer normal.
        """
        blocks = []
        for k, o in zip(self.kinds, self.offsets):
            if k == CIRCLE:
                b = np.zeros((self.ambient_dim, 1))
                b[o, 0] = 1.0
            else:
                p = np.asarray(x[o : o + 3], dtype=float)
                p = p / np.linalg.norm(p)
                seed = np.array([1.0, 0.0, 0.0]) if abs(p[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
                t1 = seed - seed.dot(p) * p
                t1 /= np.linalg.norm(t1)
                t2 = np.cross(p, t1)
                b = np.zeros((self.ambient_dim, 2))
                b[o : o + 3, 0] = t1
                b[o : o + 3, 1] = t2
            blocks.append(b)
        return blocks

    def tangent_basis(self, x) -> np.ndarray:
        return np.hstack(self.tangent_blocks(x))

    def hessian_blocks(self, x) -> list[np.ndarray]:
        """Riemannian Hessian per factor in the matching tangent basis."""
        out = []
        for k, o in zip(self.kinds, self.offsets):
            if k == CIRCLE:
                out.append(np.array([[-(TWO_PI**2) * math.cos(TWO_PI * x[o])]]))
            else:
                z = x[o + 2] / math.sqrt(x[o] ** 2 + x[o + 1] ** 2 + x[o + 2] ** 2)
                out.append(-z * np.eye(2))
        return out

    def hessian(self, x) -> np.ndarray:
        blocks = self.hessian_blocks(x)
        n = self.dim
        h = np.zeros((n, n))
        pos = 0
        for b in blocks:
            t = b.shape[0]
            h[pos : pos + t, pos : pos + t] = b
            pos += t
        return h

    # -- geometry helpers ---------------------------------------------------
    def retract(self, x) -> np.ndarray:
        """Project an ambient point back onto the model (normalise spheres)."""
        y = np.array(x, dtype=float)
        for k, o in zip(self.kinds, self.offsets):
            if k == SPHERE:
                y[o : o + 3] /= np.linalg.norm(y[o : o + 3])
        return y

    def wrap(self, x) -> np.ndarray:
        """Circle coordinates reduced to ``[0, 1)``."""
        y = np.array(x, dtype=float)
        for k, o in zip(self.kinds, self.offsets):
            if k == CIRCLE:
                y[o] = y[o] - math.floor(y[o])
                if y[o] >= 1.0:
                    y[o] = 0.0
        return y

    def difference(self, x, y) -> np.ndarray:
        """``x - y`` with circle components reduced to ``[-1/2, 1/2)``."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        for k, o in zip(self.kinds, self.offsets):
            if k == CIRCLE:
                d[o] -= math.floor(d[o] + 0.5)
        return d

    def distance(self, x, y) -> float:
        """Chordal distance: exact on circles, within 1% of geodesic for sphere chords below 0.3."""
        return float(np.linalg.norm(self.difference(x, y)))

    def embed(self, points) -> np.ndarray:
        """Euclidean embedding for nearest-neighbour queries across the periodic seams."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cols = []
        for k, o in zip(self.kinds, self.offsets):
            if k == CIRCLE:
                ang = TWO_PI * pts[:, o]
                cols.append(np.cos(ang)[:, None] / TWO_PI)
                cols.append(np.sin(ang)[:, None] / TWO_PI)
            else:
                cols.append(pts[:, o : o + 3])
        return np.hstack(cols)

    def lift(self, x, anchor) -> tuple[int, ...]:
        """Integer deck translation taking ``anchor`` to the lift nearest ``x``."""
        return tuple(
            int(round(x[o] - anchor[o])) for k, o in zip(self.kinds, self.offsets) if k == CIRCLE
        )

    def seeds(self, resolution: int) -> list[np.ndarray]:
        """Product grid of Newton seeds; ``resolution`` points per circle."""
        per_factor = []
        for k in self.kinds:
            if k == CIRCLE:
                per_factor.append([[(j + 0.5) / resolution] for j in range(resolution)])
            else:
                pts = []
                for lat in (-0.8, -0.4, 0.4, 0.8):
                    r = math.sqrt(1.0 - lat * lat)
                    for j in range(max(resolution, 3)):
                        ang = TWO_PI * (j + 0.25) / max(resolution, 3)
                        pts.append([r * math.cos(ang), r * math.sin(ang), lat])
                per_factor.append(pts)
        return [np.array(sum(combo, [])) for combo in product(*per_factor)]


def _factor_kinds(token: str) -> tuple[int, ...]:
    t = token.strip().lower()
    if t in ("sphere2_height", "sphere2", "s2"):
        return (SPHERE,)
    parts = t.split("_")
    if parts[0] == "torus" and len(parts) in (2, 3) and parts[1].isdigit():
        if len(parts) == 3 and parts[2] != "cosine":
            raise UnsupportedModel(f"unknown torus function {parts[2]!r}")
        n = int(parts[1])
        if n < 1:
            raise UnsupportedModel("torus dimension must be positive")
        return (CIRCLE,) * n
    if t in ("circle", "circle_cosine"):
        return (CIRCLE,)
    raise UnsupportedModel(f"model {token!r} is not in the catalog")


def _canonical(token: str) -> str:
    kinds = _factor_kinds(token)
    if kinds == (SPHERE,):
        return "sphere2_height"
    return f"torus_{len(kinds)}_cosine"


def get_model(name: str) -> MorseModel:
    """Parse a catalog name: ``sphere2_height``, ``torus_<n>_cosine`` or ``A*B`` products.

    Short forms ``sphere2`` and ``torus_<n>`` are accepted.
    """
    tokens = [t for t in name.replace(" ", "").split("*") if t]
    if not tokens:
        raise UnsupportedModel("empty model name")
    kinds: tuple[int, ...] = ()
    for t in tokens:
        kinds += _factor_kinds(t)
    return MorseModel("*".join(_canonical(t) for t in tokens), kinds)


def sphere2_height() -> MorseModel:
    return get_model("sphere2_height")


def torus_n_cosine(n: int) -> MorseModel:
    return get_model(f"torus_{n}_cosine")


def product_model(*models: MorseModel) -> MorseModel:
    return MorseModel("*".join(m.name for m in models), tuple(k for m in models for k in m.kinds))
