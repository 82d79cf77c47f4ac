"""Independent rational homology oracle.

Cubical cell structures for the catalog (periodic grids for circles, the
surface of a subdivided cube for the sphere, tensor products for products)
and exact ranks by fraction-free elimination.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .errors import BoundarySquareNonzero, InsufficientPrecision, UnsupportedModel
from .morse.models import CIRCLE, SPHERE, MorseModel, get_model


class BettiVector(tuple):
    """Betti numbers ``(b_0, ..., b_dim)``."""

    def __new__(cls, values):
        vals = tuple(int(v) for v in values)
        if any(v < 0 for v in vals):
            raise ValueError("Betti numbers are nonnegative")
        return super().__new__(cls, vals)

    @property
    def total(self) -> int:
        return sum(self)

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** i * b for i, b in enumerate(self))


@dataclass(frozen=True)
class CubicalComplex:
    """Finite cell complex with integer incidence matrices.

    ``cells[i]`` lists the labels of the ``i``-cells and ``boundary[i]`` is
    the matrix of ``d_i : C_i -> C_{i-1}`` (rows indexed by ``cells[i-1]``).
    ``boundary[0]`` is the empty map.
    """

    dimension: int
    cells: tuple[tuple, ...]
    boundary: tuple[tuple[tuple[int, ...], ...], ...]

    @property
    def cell_counts(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cells)

    def check(self) -> None:
        for i in range(2, self.dimension + 1):
            a, b = self.boundary[i - 1], self.boundary[i]
            for r in range(len(a)):
                for c in range(len(b[0]) if b else 0):
                    if sum(a[r][k] * b[k][c] for k in range(len(b))):
                        raise BoundarySquareNonzero(f"d_{i - 1} d_{i} != 0 at ({r}, {c})")


def _from_faces(cells_by_dim, face_fn) -> CubicalComplex:
    dim = len(cells_by_dim) - 1
    index = [{c: i for i, c in enumerate(cs)} for cs in cells_by_dim]
    bnd = [()]
    for d in range(1, dim + 1):
        mat = [[0] * len(cells_by_dim[d]) for _ in cells_by_dim[d - 1]]
        for j, cell in enumerate(cells_by_dim[d]):
            for face, sign in face_fn(cell):
                mat[index[d - 1][face]][j] += sign
        bnd.append(tuple(tuple(r) for r in mat))
    return CubicalComplex(dim, tuple(tuple(c) for c in cells_by_dim), tuple(bnd))


def circle_complex(resolution: int = 1) -> CubicalComplex:
    """``r`` vertices and ``r`` edges on ``R/Z``; ``d e_i = v_{i+1} - v_i``."""
    r = resolution
    if r < 1:
        raise ValueError("resolution must be positive")
    verts = [("v", i) for i in range(r)]
    edges = [("e", i) for i in range(r)]

    def faces(cell):
        i = cell[1]
        return [(("v", (i + 1) % r), 1), (("v", i), -1)]

    return _from_faces([verts, edges], faces)


def sphere_complex(resolution: int = 1) -> CubicalComplex:
    """Surface of the cube ``[0, r]^3`` with its unit-cube cells."""
    r = resolution
    if r < 1:
        raise ValueError("resolution must be positive")
    # elementary cube = three intervals (a, a) or (a, a + 1)
    intervals = [(a, a) for a in range(r + 1)] + [(a, a + 1) for a in range(r)]
    by_dim: list[list] = [[], [], []]
    for cube in itertools.product(intervals, repeat=3):
        on_surface = any(lo == hi and lo in (0, r) for lo, hi in cube)
        d = sum(hi - lo for lo, hi in cube)
        if on_surface and d <= 2:
            by_dim[d].append(cube)
    for cs in by_dim:
        cs.sort()

    def faces(cube):
        out, seen = [], 0
        for k, (lo, hi) in enumerate(cube):
            if lo == hi:
                continue
            sign = (-1) ** seen
            seen += 1
            out.append((cube[:k] + ((hi, hi),) + cube[k + 1 :], sign))
            out.append((cube[:k] + ((lo, lo),) + cube[k + 1 :], -sign))
        return out

    return _from_faces(by_dim, faces)


def tensor_complex(a: CubicalComplex, b: CubicalComplex) -> CubicalComplex:
    """Cellular product with ``d(x * y) = dx * y + (-1)^|x| x * dy``."""
    dim = a.dimension + b.dimension
    by_dim = [[] for _ in range(dim + 1)]
    for i in range(a.dimension + 1):
        for j in range(b.dimension + 1):
            for x in a.cells[i]:
                for y in b.cells[j]:
                    by_dim[i + j].append(((i, x), (j, y)))
    a_idx = [{c: n for n, c in enumerate(cs)} for cs in a.cells]
    b_idx = [{c: n for n, c in enumerate(cs)} for cs in b.cells]

    def faces(cell):
        (i, x), (j, y) = cell
        out = []
        if i > 0:
            col = a_idx[i][x]
            for r, face in enumerate(a.cells[i - 1]):
                c = a.boundary[i][r][col]
                if c:
                    out.append((((i - 1, face), (j, y)), c))
        if j > 0:
            col = b_idx[j][y]
            for r, face in enumerate(b.cells[j - 1]):
                c = b.boundary[j][r][col]
                if c:
                    out.append((((i, x), (j - 1, face)), (-1) ** i * c))
        return out

    return _from_faces(by_dim, faces)


def cubical_complex(model: MorseModel | str, resolution: int = 1) -> CubicalComplex:
    """Cell structure of a catalog model; ``d o d = 0`` is verified before returning."""
    if isinstance(model, str):
        model = get_model(model)
    parts = []
    for k in model.kinds:
        if k == CIRCLE:
            parts.append(circle_complex(resolution))
        elif k == SPHERE:
            parts.append(sphere_complex(resolution))
        else:  # pragma: no cover - catalog has two factor types
            raise UnsupportedModel(f"factor kind {k}")
    out = parts[0]
    for p in parts[1:]:
        out = tensor_complex(out, p)
    out.check()
    return out


# -- exact linear algebra over Q ---------------------------------------------------


def _integer_rows(matrix) -> list[list[int]]:
    rows = []
    for row in matrix:
        fr = [Fraction(v) for v in row]
        den = lcm(*(f.denominator for f in fr)) if fr else 1
        rows.append([int(f * den) for f in fr])
    return rows


def rational_rank(matrix) -> int:
    """Rank over Q by Bareiss fraction-free elimination."""
    a = _integer_rows(matrix)
    if not a or not a[0]:
        return 0
    m, n = len(a), len(a[0])
    rank, prev = 0, 1
    for col in range(n):
        piv = next((r for r in range(rank, m) if a[r][col]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][col]
        for r in range(rank + 1, m):
            arc = a[r][col]
            row, top = a[r], a[rank]
            for c in range(col, n):
                row[c] = (p * row[c] - arc * top[c]) // prev
        prev = p
        rank += 1
        if rank == m:
            break
    return rank


def _rref(matrix) -> tuple[list[list[Fraction]], list[int]]:
    a = [[Fraction(v) for v in row] for row in matrix]
    pivots, r = [], 0
    m = len(a)
    n = len(a[0]) if a else 0
    for c in range(n):
        piv = next((i for i in range(r, m) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [v * inv for v in a[r]]
        for i in range(m):
            if i != r and a[i][c]:
                f = a[i][c]
                a[i] = [vi - f * vr for vi, vr in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def nullspace(matrix, ncols: int) -> list[list[Fraction]]:
    """Basis of ``{x : M x = 0}`` in Q^ncols."""
    if not matrix:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    a, pivots = _rref(matrix)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in enumerate(pivots):
            v[pc] = -a[row][f]
        basis.append(v)
    return basis


# -- homology of graded complexes ---------------------------------------------------


def _graded_blocks(gradings, differential):
    """Split a full differential matrix into ``d_i`` blocks keyed by degree."""
    degrees = sorted(set(gradings))
    by_deg = {g: [i for i, gi in enumerate(gradings) if gi == g] for g in degrees}
    blocks = {}
    for g in degrees:
        src = by_deg[g]
        tgt = by_deg.get(g - 1, [])
        blocks[g] = [[differential[r][c] for c in src] for r in tgt]
    return by_deg, blocks


def _as_rational_complex(obj):
    """``(gradings, rational differential)`` from a chain complex or cubical complex."""
    if isinstance(obj, CubicalComplex):
        gradings = []
        for d, cs in enumerate(obj.cells):
            for c in cs:
                gradings.append(d)
        n = len(gradings)
        diff = [[0] * n for _ in range(n)]
        starts = [sum(len(cs) for cs in obj.cells[:d]) for d in range(obj.dimension + 1)]
        for d in range(1, obj.dimension + 1):
            for r, row in enumerate(obj.boundary[d]):
                for c, v in enumerate(row):
                    diff[starts[d - 1] + r][starts[d] + c] = v
        return gradings, diff
    if hasattr(obj, "module") and hasattr(obj, "d"):
        gradings = list(obj.module.gradings)
        if any(g is None for g in gradings):
            raise ValueError("homology needs a graded complex")
        rows = obj.d.matrix.entries
        diff = []
        for row in rows:
            out = []
            for s in row:
                if not s.is_rational():
                    raise ValueError("betti needs a differential over Q; use homology_rank_lambda")
                out.append(s.as_rational())
            diff.append(out)
        return gradings, diff
    gradings, diff = obj
    return list(gradings), [list(r) for r in diff]


def _check_square(gradings, diff) -> None:
    n = len(gradings)
    for i in range(n):
        for j in range(n):
            if sum(Fraction(diff[i][k]) * Fraction(diff[k][j]) for k in range(n) if diff[i][k] and diff[k][j]):
                raise BoundarySquareNonzero(f"(d o d)[{i}, {j}] != 0")


def betti(obj) -> BettiVector:
    """Betti numbers over Q of a cubical complex or a chain complex defined over Q.

    Also accepts a pair ``(gradings, differential)`` with
    ``differential[i][j]`` the coefficient of generator ``i`` in ``d(j)``.
    """
    if isinstance(obj, CubicalComplex):
        obj.check()
        ranks = [0] + [rational_rank(b) if b and b[0] else 0 for b in obj.boundary[1:]] + [0]
        return BettiVector(len(c) - ranks[d] - ranks[d + 1] for d, c in enumerate(obj.cells))
    gradings, diff = _as_rational_complex(obj)
    _check_square(gradings, diff)
    if not gradings:
        return BettiVector(())
    by_deg, blocks = _graded_blocks(gradings, diff)
    top = max(by_deg)
    if min(by_deg) < 0:
        raise ValueError("negative gradings are not supported by betti")
    ranks = {g: rational_rank(blocks[g]) if blocks[g] else 0 for g in by_deg}
    out = []
    for g in range(top + 1):
        dim = len(by_deg.get(g, []))
        out.append(dim - ranks.get(g, 0) - ranks.get(g + 1, 0))
    return BettiVector(out)


def homology_basis(obj) -> list[tuple[int, list[Fraction]]]:
    """Cycles ``(degree, vector)`` whose classes form a basis of homology over Q.

    Vectors are over all generators (zero outside the given degree).
    """
    gradings, diff = _as_rational_complex(obj)
    _check_square(gradings, diff)
    n = len(gradings)
    by_deg, blocks = _graded_blocks(gradings, diff)
    out = []
    for g in sorted(by_deg):
        idx = by_deg[g]
        cycles = nullspace(blocks[g], len(idx)) if blocks[g] else nullspace([], len(idx))
        above = by_deg.get(g + 1, [])
        boundaries = [[diff[r][c] for r in idx] for c in above]
        current = [b for b in boundaries if any(b)]
        base_rank = rational_rank(current) if current else 0
        for z in cycles:
            trial = current + [z]
            rk = rational_rank(trial)
            if rk > base_rank:
                current, base_rank = trial, rk
                full = [Fraction(0)] * n
                for local, glob in enumerate(idx):
                    full[glob] = z[local]
                out.append((g, full))
    return out


def homology_rank_lambda(complex_, cutoff) -> BettiVector:
    """Betti numbers over the Novikov field, with every rank certified up to ``cutoff``."""
    from .chain import lambda_rank

    gradings = list(complex_.module.gradings)
    mat = complex_.d.matrix
    degrees = sorted(set(gradings))
    by_deg = {g: [i for i, gi in enumerate(gradings) if gi == g] for g in degrees}
    ranks = {}
    for g in degrees:
        tgt = by_deg.get(g - 1, [])
        if not tgt:
            ranks[g] = 0
            continue
        block = mat.submatrix(tgt, by_deg[g])
        res = lambda_rank(block, cutoff)
        if not res.certified:
            raise InsufficientPrecision(f"rank of d_{g} not certified at cutoff {cutoff}")
        ranks[g] = res.rank
    top = max(degrees) if degrees else -1
    return BettiVector(
        len(by_deg.get(g, [])) - ranks.get(g, 0) - ranks.get(g + 1, 0) for g in range(top + 1)
    )
