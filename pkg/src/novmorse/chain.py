"""Graded linear algebra over the Novikov field.

Matrices act on column vectors: ``matrix[i][j]`` is the coefficient of
target generator ``i`` in the image of source generator ``j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .errors import HypothesisFailure, ShapeMismatch, UngradedSource, UnknownIdentifier
from .novikov import NovikovMatrix, NovikovScalar, mat_lemma22_check, to_fraction
from .reports import VerificationReport

AUTO = "auto"


@dataclass(frozen=True)
class GradedModule:
    """Free module on named generators; ``gradings`` entries may be None (ungraded)."""

    ids: tuple[str, ...]
    gradings: tuple[int | None, ...] | None = None
    coords: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("generator identifiers must be unique")
        g = self.gradings
        g = (None,) * len(self.ids) if g is None else tuple(g)
        if len(g) != len(self.ids):
            raise ShapeMismatch("one grading per generator")
        object.__setattr__(self, "gradings", g)

    @property
    def rank(self) -> int:
        return len(self.ids)

    @property
    def is_graded(self) -> bool:
        return all(g is not None for g in self.gradings)

    def index(self, gid: str) -> int:
        try:
            return self.ids.index(gid)
        except ValueError:
            raise UnknownIdentifier(f"no generator {gid!r}") from None

    def grading(self, gid: str) -> int | None:
        return self.gradings[self.index(gid)]

    def to_json(self) -> list[dict]:
        out = []
        for i, gid in enumerate(self.ids):
            doc = {"id": gid, "grading": self.gradings[i]}
            if self.coords is not None:
                doc["coords"] = list(self.coords[i])
            out.append(doc)
        return out

    @classmethod
    def from_json(cls, doc: list[dict]) -> "GradedModule":
        ids = tuple(str(g["id"]) for g in doc)
        gradings = tuple(g.get("grading") for g in doc)
        coords = tuple(tuple(g["coords"]) for g in doc) if doc and all("coords" in g for g in doc) else None
        return cls(ids, gradings, coords)


def _infer_degree(source: GradedModule, target: GradedModule, matrix: NovikovMatrix) -> int | None:
    if not (source.is_graded and target.is_graded):
        return None
    shifts = {target.gradings[i] - source.gradings[j] for i, j, _ in matrix.nonzero_entries()}
    return shifts.pop() if len(shifts) == 1 else None


@dataclass(frozen=True)
class LinearMap:
    """Linear map between free modules; ``degree`` None means ungraded."""

    source: GradedModule
    target: GradedModule
    matrix: NovikovMatrix
    degree: int | None | str = AUTO

    def __post_init__(self):
        m = self.matrix
        if not isinstance(m, NovikovMatrix):
            m = NovikovMatrix(m, self.source.rank)
            object.__setattr__(self, "matrix", m)
        if m.shape != (self.target.rank, self.source.rank):
            raise ShapeMismatch(f"matrix {m.shape} does not match {self.target.rank}x{self.source.rank}")
        if self.degree == AUTO:
            object.__setattr__(self, "degree", _infer_degree(self.source, self.target, m))
        elif self.degree is not None and self.source.is_graded and self.target.is_graded:
            for i, j, _ in m.nonzero_entries():
                if self.target.gradings[i] - self.source.gradings[j] != self.degree:
                    raise ShapeMismatch(
                        f"entry ({self.target.ids[i]}, {self.source.ids[j]}) breaks declared degree {self.degree}"
                    )

    @classmethod
    def identity(cls, module: GradedModule) -> "LinearMap":
        return cls(module, module, NovikovMatrix.identity(module.rank), 0 if module.is_graded else None)

    @classmethod
    def zero(cls, source: GradedModule, target: GradedModule, degree=None) -> "LinearMap":
        return cls(source, target, NovikovMatrix.zeros(target.rank, source.rank), degree)

    def __call__(self, vector) -> list[NovikovScalar]:
        return self.matrix.apply(_as_vector(vector, self.source))

    def __add__(self, other: "LinearMap") -> "LinearMap":
        _same_shape(self, other)
        return LinearMap(self.source, self.target, self.matrix + other.matrix)

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        _same_shape(self, other)
        return LinearMap(self.source, self.target, self.matrix - other.matrix)

    def __neg__(self) -> "LinearMap":
        return LinearMap(self.source, self.target, -self.matrix, self.degree)

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "degree": "ungraded" if self.degree is None else self.degree,
            "matrix": self.matrix.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LinearMap":
        src = GradedModule.from_json(doc["source"])
        tgt = GradedModule.from_json(doc["target"])
        rows = [[NovikovScalar.from_json(x) for x in r] for r in doc["matrix"]]
        deg = doc.get("degree", AUTO)
        if deg == "ungraded":
            deg = None
        return cls(src, tgt, NovikovMatrix(rows, src.rank), deg)


def _same_shape(f: LinearMap, g: LinearMap) -> None:
    if f.source.ids != g.source.ids or f.target.ids != g.target.ids:
        raise ShapeMismatch("maps have different source or target")


def _as_vector(vector, module: GradedModule) -> list[NovikovScalar]:
    if isinstance(vector, dict):
        out = [NovikovScalar.zero()] * module.rank
        for gid, c in vector.items():
            out[module.index(gid)] = NovikovScalar.coerce(c)
        return out
    if len(vector) != module.rank:
        raise ShapeMismatch(f"vector of length {len(vector)} on a module of rank {module.rank}")
    return [NovikovScalar.coerce(c) for c in vector]


@dataclass(frozen=True)
class ChainComplex:
    module: GradedModule
    d: LinearMap

    def __post_init__(self):
        if self.d.source.ids != self.module.ids or self.d.target.ids != self.module.ids:
            raise ShapeMismatch("differential must be an endomorphism of the module")

    def check_square(self, cutoff=None) -> VerificationReport:
        sq = self.d.matrix @ self.d.matrix
        return _residual_report("d o d = 0", sq, self.module, self.module, cutoff)

    def to_json(self) -> dict:
        return {
            "generators": self.module.to_json(),
            "differential": [[_scalar_json(x) for x in row] for row in self.d.matrix.entries],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict) -> "ChainComplex":
        module = GradedModule.from_json(doc["generators"])
        rows = [[NovikovScalar.from_json(x) for x in r] for r in doc["differential"]]
        if len(rows) != module.rank:
            raise ShapeMismatch("differential must be square on the generators")
        mat = NovikovMatrix(rows, module.rank)
        return cls(module, LinearMap(module, module, mat, -1 if module.is_graded else None))


def _scalar_json(x: NovikovScalar):
    # plain rationals stay readable; everything else uses the record form
    if x.is_rational():
        v = x.as_rational()
        return v.numerator if v.denominator == 1 else str(v)
    return x.to_json()


def compose(g: LinearMap, f: LinearMap) -> LinearMap:
    """``g o f`` with cutoff propagation."""
    if f.target.ids != g.source.ids:
        raise ShapeMismatch(f"cannot compose: target of f {f.target.ids} != source of g {g.source.ids}")
    deg = None if f.degree is None or g.degree is None else f.degree + g.degree
    m = g.matrix @ f.matrix
    if deg is not None and f.source.is_graded and g.target.is_graded:
        return LinearMap(f.source, g.target, m, deg)
    return LinearMap(f.source, g.target, m, None)


def _residual_report(name, residual: NovikovMatrix, source, target, cutoff) -> VerificationReport:
    cut = None if cutoff is None else to_fraction(cutoff)
    bad = tuple(
        ((target.ids[i], source.ids[j]), x) for i, j, x in residual.nonzero_entries(cut)
    )
    return VerificationReport(name, bad, cut)


def check_chain_map(phi: LinearMap, d: LinearMap, cutoff=None) -> VerificationReport:
    """``phi o d - d o phi = 0`` through exponent ``cutoff`` (exactly if None).

    ``phi`` may be an endomorphism or map between two modules sharing ``d``.
    """
    lhs = compose(phi, d).matrix - compose(d, phi).matrix
    return _residual_report("phi o d = d o phi", lhs, phi.source, phi.target, cutoff)


def check_anticommutes(phi: LinearMap, d: LinearMap, cutoff=None) -> VerificationReport:
    """``phi o d + d o phi = 0``."""
    lhs = compose(phi, d).matrix + compose(d, phi).matrix
    return _residual_report("phi o d + d o phi = 0", lhs, phi.source, phi.target, cutoff)


def sign_adjust(phi: LinearMap) -> LinearMap:
    """``p -> (-1)^{|p|} phi(p)``."""
    if not phi.source.is_graded:
        raise UngradedSource("sign_adjust needs a graded source")
    signs = [(-1) ** (g % 2) for g in phi.source.gradings]
    rows = [[x if s == 1 else -x for x, s in zip(row, signs)] for row in phi.matrix.entries]
    return LinearMap(phi.source, phi.target, NovikovMatrix(rows, phi.source.rank), phi.degree)


def check_chain_homotopy(iota: LinearMap, s: LinearMap, h: LinearMap, d: LinearMap, cutoff=None) -> VerificationReport:
    """``iota - s - d o h - h o d = 0``."""
    res = iota.matrix - s.matrix - compose(d, h).matrix - compose(h, d).matrix
    return _residual_report("iota - S = d o h + h o d", res, iota.source, iota.target, cutoff)


# -- rank over the Novikov field ---------------------------------------------------


@dataclass(frozen=True)
class LambdaRank:
    rank: int
    certified: bool

    def __iter__(self):
        return iter((self.rank, self.certified))


def lambda_rank(m: NovikovMatrix | Sequence[Sequence], cutoff=None) -> LambdaRank:
    """Rank over the Novikov field by division-free elimination with valuation pivots.

    Each step picks the entry of least valuation in the remaining block
    (lowest row, then lowest column, on ties), rescales its row by the
    inverse of its leading monomial, and clears the column with
    ``row_i <- p row_i - a_i row_p``.  The result is certified when every
    pivot has valuation ``<= cutoff`` (any, if cutoff is None) and every
    entry left over is an exact zero.
    """
    if not isinstance(m, NovikovMatrix):
        m = NovikovMatrix(m)
    cut = None if cutoff is None else to_fraction(cutoff)
    a = [list(r) for r in m.entries]
    rows = list(range(m.rows))
    cols = list(range(m.cols))
    rank = 0
    certified = True
    while rows and cols:
        best = None
        for i in rows:
            for j in cols:
                v = a[i][j].valuation()
                if v is not None and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            break
        v, p, c = best
        if cut is not None and v > cut:
            certified = False
        e, coeff = a[p][c].leading()
        mono = NovikovScalar.monomial(1 / coeff, -e)
        a[p] = [mono * x for x in a[p]]
        piv = a[p][c]
        rows.remove(p)
        cols.remove(c)
        for i in rows:
            f = a[i][c]
            if f.is_zero():
                continue
            a[i] = [piv * x - f * y for x, y in zip(a[i], a[p])]
        rank += 1
    if any(not a[i][j].is_zero() for i in rows for j in cols):
        certified = False
    return LambdaRank(rank, certified)


# -- Arnold bound ----------------------------------------------------------------


@dataclass(frozen=True)
class ArnoldCertificate:
    bound: int
    cf_generators: int
    checks: tuple[VerificationReport, ...]
    replay: tuple[str, ...]

    @property
    def certified(self) -> bool:
        return all(c.passed for c in self.checks) and self.bound <= self.cf_generators

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "cf_generators": self.cf_generators,
            "certified": self.certified,
            "checks": [c.to_json() for c in self.checks],
            "replay": list(self.replay),
        }


def _columns(vectors: list[list[NovikovScalar]], rows: int) -> NovikovMatrix:
    return NovikovMatrix([[v[i] for v in vectors] for i in range(rows)], len(vectors))


def arnold_bound(
    betti,
    cycles,
    pss: LinearMap,
    ssp: LinearMap,
    iota: LinearMap,
    h: LinearMap,
    d: LinearMap,
    cutoff,
    iota_inverse: LinearMap | None = None,
) -> ArnoldCertificate:
    """Check every hypothesis of the Arnold-type bound and replay its deduction.

    ``cycles`` are chains in the Morse module (lists or id->coefficient dicts)
    representing a basis of homology.  Raises HypothesisFailure naming the
    first hypothesis that does not hold.
    """
    cut = to_fraction(cutoff)
    cm = d.source
    n = cm.rank
    chains = [_as_vector(c, cm) for c in cycles]
    k = len(chains)
    checks: list[VerificationReport] = []
    replay: list[str] = []

    def need(report: VerificationReport, stage: str):
        checks.append(report)
        if not report.passed:
            raise HypothesisFailure(stage, report.summary(), report)

    # hypotheses
    if sum(betti) != k:
        raise HypothesisFailure("betti", f"{k} cycles supplied but the Betti numbers sum to {sum(betti)}")
    bad = []
    for idx, c in enumerate(chains):
        for i, x in enumerate(d.matrix.apply(c)):
            if not x.is_zero_upto(cut):
                bad.append(((f"c{idx}", cm.ids[i]), x))
    need(VerificationReport("d c_i = 0", tuple(bad), cut), "cycles")

    rank_d = lambda_rank(d.matrix, cut)
    joint = lambda_rank(d.matrix.hstack(_columns(chains, n)) if k else d.matrix, cut)
    if not (rank_d.certified and joint.certified) or joint.rank != rank_d.rank + k:
        raise HypothesisFailure(
            "homology independence",
            f"rank[d | c] = {joint.rank}, rank d = {rank_d.rank}, k = {k}",
        )
    checks.append(VerificationReport("cycles independent in homology", (), cut))

    need(check_chain_map(iota, d, cut), "iota chain map")

    if iota_inverse is not None:
        prod = (iota.matrix @ iota_inverse.matrix) - NovikovMatrix.identity(n)
        need(_residual_report("iota o iota^-1 = id", prod, cm, cm, cut), "iota not invertible")
    else:
        lem = mat_lemma22_check(iota.matrix)
        if not lem.holds:
            i, j, r, why = lem.violations[0]
            raise HypothesisFailure(
                "iota not invertible", f"triangularity fails at ({cm.ids[i]}, {cm.ids[j]}) T^{r}: {why}", lem
            )
        checks.append(VerificationReport("iota triangular with unit diagonal constants", (), cut))

    ssp_pss = compose(ssp, pss)
    need(check_chain_homotopy(iota, ssp_pss, h, d, cut), "chain homotopy")

    # replay: sum l_i PSS(c_i) = 0 gives sum l_i iota(c_i) = d(sum l_i h(c_i))
    bad = []
    for idx, c in enumerate(chains):
        lhs = iota.matrix.apply(c)
        rhs = ssp_pss.matrix.apply(c)
        dh = d.matrix.apply(h.matrix.apply(c))
        for i in range(n):
            r = lhs[i] - rhs[i] - dh[i]
            if not r.is_zero_upto(cut):
                bad.append(((f"c{idx}", cm.ids[i]), r))
    need(VerificationReport("iota(c_i) = SSP(PSS(c_i)) + d h(c_i)", tuple(bad), cut), "replay homotopy")
    replay.append("iota(c_i) - SSP PSS(c_i) lies in im d for each cycle")

    images = [iota.matrix.apply(c) for c in chains]
    joint_i = lambda_rank(d.matrix.hstack(_columns(images, n)) if k else d.matrix, cut)
    if not joint_i.certified or joint_i.rank != rank_d.rank + k:
        raise HypothesisFailure("replay independence", "iota(c_i) are not independent in homology")
    replay.append("iota(c_i) independent in homology, so every l_i vanishes")

    pss_images = [pss.matrix.apply(c) for c in chains]
    lr = lambda_rank(_columns(pss_images, pss.target.rank), cut) if k else LambdaRank(0, True)
    if not lr.certified or lr.rank != k:
        raise HypothesisFailure("replay rank", f"lambda_rank of PSS(c_i) is {lr.rank} (certified={lr.certified})")
    replay.append(f"PSS(c_1..c_{k}) has rank {k} in CF")
    cf = pss.target.rank
    if k > cf:
        raise HypothesisFailure("replay rank", f"{k} independent vectors in a module of rank {cf}")
    replay.append(f"#generators(CF) = {cf} >= {k}")
    return ArnoldCertificate(k, cf, tuple(checks), tuple(replay))
