"""Abstract count systems for the PSS / SSP / iota / h construction.

A count system assigns rational weights to index-0 moduli labels.  The
boundary identities that make the resulting maps a chain map and a chain
homotopy are checked exactly, the maps are assembled over the Novikov
field, and the whole Arnold-bound deduction can be run end to end.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .chain import (
    ArnoldCertificate,
    ChainComplex,
    GradedModule,
    LinearMap,
    arnold_bound,
    check_chain_homotopy,
    check_chain_map,
    compose,
    sign_adjust,
)
from .errors import CountSystemError, HypothesisFailure, UnknownIdentifier
from .homology import BettiVector, homology_basis
from .novikov import NovikovMatrix, NovikovScalar, format_fraction, mat_invert, mat_lemma22_check, to_fraction
from .reports import VerificationReport

ZERO_CLASS = "0"


@dataclass(frozen=True)
class HomologyClass:
    id: str
    c1: int
    omega: Fraction


@dataclass(frozen=True)
class IndexData:
    """Gradings and class data entering the index formulas.

    ``class_sums`` maps unordered pairs to their sum; ``0 + A = A`` is
    implicit.  Conley-Zehnder indices may be half-integers on odd-dimensional
    models, as long as every index formula comes out integral.
    """

    dim_M: int
    crit: tuple[tuple[str, int], ...]
    orbits: tuple[tuple[str, Fraction], ...]
    classes: tuple[HomologyClass, ...]
    class_sums: tuple[tuple[str, str, str], ...] = ()
    _lookup: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim_M < 1:
            raise CountSystemError("dim_M must be positive")
        ids = [p for p, _ in self.crit] + [g for g, _ in self.orbits]
        if len(set(ids)) != len(ids):
            raise CountSystemError("critical point and orbit identifiers must be unique")
        for p, k in self.crit:
            if not 0 <= k <= self.dim_M:
                raise CountSystemError(f"Morse index of {p} outside [0, {self.dim_M}]")
        cls = {c.id: c for c in self.classes}
        if len(cls) != len(self.classes):
            raise CountSystemError("class identifiers must be unique")
        zero = cls.get(ZERO_CLASS)
        if zero is None or zero.c1 != 0 or zero.omega != 0:
            raise CountSystemError('classes must contain "0" with c1 = 0 and omega = 0')
        sums = {}
        for a, b, s in self.class_sums:
            for x in (a, b, s):
                if x not in cls:
                    raise CountSystemError(f"class_sums refers to unknown class {x!r}")
            if cls[s].c1 != cls[a].c1 + cls[b].c1 or cls[s].omega != cls[a].omega + cls[b].omega:
                raise CountSystemError(f"class sum {a} + {b} = {s} is not additive in c1 and omega")
            for key in ((a, b), (b, a)):
                if sums.get(key, s) != s:
                    raise CountSystemError(f"conflicting sums for {a} + {b}")
                sums[key] = s
        for c in cls:
            sums.setdefault((ZERO_CLASS, c), c)
            sums.setdefault((c, ZERO_CLASS), c)
        lookup = {
            "crit": dict(self.crit),
            "cz": {g: to_fraction(c) for g, c in self.orbits},
            "cls": cls,
            "sums": sums,
        }
        object.__setattr__(self, "_lookup", lookup)

    @property
    def crit_ids(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.crit)

    @property
    def orbit_ids(self) -> tuple[str, ...]:
        return tuple(g for g, _ in self.orbits)

    @property
    def class_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.classes)

    def morse_index(self, p: str) -> int:
        try:
            return self._lookup["crit"][p]
        except KeyError:
            raise UnknownIdentifier(f"unknown critical point {p!r}") from None

    def cz(self, g: str) -> Fraction:
        try:
            return self._lookup["cz"][g]
        except KeyError:
            raise UnknownIdentifier(f"unknown orbit {g!r}") from None

    def homology_class(self, a: str) -> HomologyClass:
        try:
            return self._lookup["cls"][a]
        except KeyError:
            raise UnknownIdentifier(f"unknown class {a!r}") from None

    def c1(self, a: str) -> int:
        return self.homology_class(a).c1

    def omega(self, a: str) -> Fraction:
        return self.homology_class(a).omega

    def add(self, a: str, b: str) -> str | None:
        """Declared sum of two classes, or None when outside the table."""
        self.homology_class(a), self.homology_class(b)
        return self._lookup["sums"].get((a, b))


def _integral(value: Fraction, formula: str) -> int:
    if value.denominator != 1:
        raise CountSystemError(f"{formula} evaluates to the non-integer {value}")
    return int(value)


def index_pss(data: IndexData, p: str, g: str, a: str) -> int:
    """``I(p, g; A) = CZ(g) + 2 c1(A) - dim/2 + |p|``."""
    v = data.cz(g) + 2 * data.c1(a) - Fraction(data.dim_M, 2) + data.morse_index(p)
    return _integral(v, "I(p,gamma;A) = CZ + 2c1 - dim/2 + |p|")


def index_ssp(data: IndexData, g: str, p: str, a: str) -> int:
    """``I(g, p; A) = -CZ(g) + 2 c1(A) + dim/2 - |p|``."""
    v = -data.cz(g) + 2 * data.c1(a) + Fraction(data.dim_M, 2) - data.morse_index(p)
    return _integral(v, "I(gamma,p;A) = -CZ + 2c1 + dim/2 - |p|")


def index_iota(data: IndexData, p_minus: str, p_plus: str, a: str) -> int:
    """``2 c1(A) + |p-| - |p+|``."""
    return 2 * data.c1(a) + data.morse_index(p_minus) - data.morse_index(p_plus)


def index_h(data: IndexData, p_minus: str, p_plus: str, a: str) -> int:
    return index_iota(data, p_minus, p_plus, a) + 1


_FORMULAS = {
    "z_iota": "index_iota = 2c1(A) + |p-| - |p+| = 0",
    "z_plus": "index_pss = CZ(gamma) + 2c1(A) - dim/2 + |p| = 0",
    "z_minus": "index_ssp = -CZ(gamma) + 2c1(A) + dim/2 - |p| = 0",
    "z_h": "index_h = 2c1(A) + |p-| - |p+| + 1 = 0",
}


@dataclass(frozen=True)
class CountSystem:
    """Morse counts ``m(p, q)`` and rational counts ``z_*`` keyed by label tuples.

    ``z_iota`` and ``z_h`` are keyed ``(p-, p+, A)``, ``z_plus`` by
    ``(p, gamma, A)`` and ``z_minus`` by ``(gamma, p, A)``.  Zero entries are
    dropped on construction.
    """

    index_data: IndexData
    morse: dict = field(default_factory=dict)
    z_iota: dict = field(default_factory=dict)
    z_plus: dict = field(default_factory=dict)
    z_minus: dict = field(default_factory=dict)
    z_h: dict = field(default_factory=dict)

    def __post_init__(self):
        d = self.index_data
        clean = {}
        for name in ("morse", "z_iota", "z_plus", "z_minus", "z_h"):
            entries = {}
            for key, v in getattr(self, name).items():
                v = to_fraction(v)
                if v:
                    entries[tuple(key)] = v
            clean[name] = entries
        for (p, q), v in clean["morse"].items():
            if d.morse_index(p) - d.morse_index(q) != 1:
                raise CountSystemError(f"morse count m({p},{q}) needs |p| - |q| = 1")
            if v.denominator != 1:
                raise CountSystemError(f"morse count m({p},{q}) = {v} is not an integer")
        checks = {
            "z_iota": lambda k: index_iota(d, *k),
            "z_plus": lambda k: index_pss(d, *k),
            "z_minus": lambda k: index_ssp(d, *k),
            "z_h": lambda k: index_h(d, *k),
        }
        for name, fn in checks.items():
            for key in clean[name]:
                if len(key) != 3:
                    raise CountSystemError(f"{name} keys are (from, to, class), got {key}")
                idx = fn(key)
                if idx != 0:
                    raise CountSystemError(f"{name}{key} stored at index {idx}; requires {_FORMULAS[name]}")
        # the h-claim drops pairs whose class sum is undeclared; forbid them so
        # that the claim and the matrix identity agree
        for (p, g, ap), vp in clean["z_plus"].items():
            for (g2, q, am), vm in clean["z_minus"].items():
                if g2 == g and d.add(am, ap) is None:
                    raise CountSystemError(f"class sum {am} + {ap} undeclared but z_plus{(p, g, ap)} z_minus{(g, q, am)} != 0")
        for name, entries in clean.items():
            object.__setattr__(self, name, entries)

    # -- serialization ----------------------------------------------------
    def to_json(self) -> dict:
        d = self.index_data

        def rows(entries, keys):
            out = []
            for k in sorted(entries):
                doc = dict(zip(keys, k))
                doc["count"] = format_fraction(entries[k])
                out.append(doc)
            return out

        z_keys = ("from", "to", "class")
        return {
            "dim_M": d.dim_M,
            "crit": [{"id": p, "index": k} for p, k in d.crit],
            "orbits": [{"id": g, "cz": format_fraction(to_fraction(c))} for g, c in d.orbits],
            "classes": [{"id": c.id, "c1": c.c1, "omega": format_fraction(c.omega)} for c in d.classes],
            "class_sums": [{"a": a, "b": b, "sum": s} for a, b, s in d.class_sums],
            "morse": rows(self.morse, ("from", "to")),
            "z_iota": rows(self.z_iota, z_keys),
            "z_plus": rows(self.z_plus, z_keys),
            "z_minus": rows(self.z_minus, z_keys),
            "z_h": rows(self.z_h, z_keys),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, doc: dict) -> "CountSystem":
        try:
            data = IndexData(
                dim_M=int(doc["dim_M"]),
                crit=tuple((str(c["id"]), int(c["index"])) for c in doc["crit"]),
                orbits=tuple((str(o["id"]), to_fraction(o.get("cz", 0))) for o in doc.get("orbits", [])),
                classes=tuple(
                    HomologyClass(str(c["id"]), int(c.get("c1", 0)), to_fraction(c.get("omega", 0)))
                    for c in doc.get("classes", [{"id": ZERO_CLASS}])
                ),
                class_sums=tuple((str(s["a"]), str(s["b"]), str(s["sum"])) for s in doc.get("class_sums", [])),
            )

            def read(name, keys):
                out = {}
                for e in doc.get(name, []):
                    k = tuple(str(e[x]) for x in keys)
                    if k in out:
                        raise CountSystemError(f"duplicate {name} entry {k}")
                    out[k] = to_fraction(e["count"])
                return out

            z_keys = ("from", "to", "class")
            return cls(
                data,
                morse=read("morse", ("from", "to")),
                z_iota=read("z_iota", z_keys),
                z_plus=read("z_plus", z_keys),
                z_minus=read("z_minus", z_keys),
                z_h=read("z_h", z_keys),
            )
        except (KeyError, TypeError) as exc:
            raise CountSystemError(f"malformed count system: {exc}") from None
        except UnknownIdentifier as exc:
            raise CountSystemError(str(exc)) from None

    @classmethod
    def loads(cls, text: str) -> "CountSystem":
        return cls.from_json(json.loads(text))

    def replace(self, **changes) -> "CountSystem":
        fields = dict(
            morse=self.morse, z_iota=self.z_iota, z_plus=self.z_plus, z_minus=self.z_minus, z_h=self.z_h
        )
        fields.update(changes)
        return CountSystem(self.index_data, **fields)


# -- boundary identities -------------------------------------------------------


def _tuples(data: IndexData, index_fn, value: int):
    for pm, pp in itertools.product(data.crit_ids, repeat=2):
        for a in data.class_ids:
            if index_fn(data, pm, pp, a) == value:
                yield (pm, pp, a)


def _m(s: CountSystem, p: str, q: str) -> Fraction:
    return s.morse.get((p, q), Fraction(0))


def check_iota_claim(s: CountSystem) -> VerificationReport:
    """For every ``index_iota = 1`` tuple: ``sum m(p-,q) z(q,p+) + sum z(p-,q) m(q,p+) = 0``."""
    d = s.index_data
    bad = []
    for pm, pp, a in _tuples(d, index_iota, 1):
        r = Fraction(0)
        for q in d.crit_ids:
            r += _m(s, pm, q) * s.z_iota.get((q, pp, a), 0)
            r += s.z_iota.get((pm, q, a), 0) * _m(s, q, pp)
        if r:
            bad.append(((pm, pp, a), r))
    return VerificationReport("iota-claim", tuple(bad))


def check_h_claim(s: CountSystem) -> VerificationReport:
    """For every ``index_h = 1`` tuple the signed iota count equals the broken contributions."""
    d = s.index_data
    bad = []
    for pm, pp, a in _tuples(d, index_h, 1):
        sign = -1 if d.morse_index(pm) % 2 else 1
        lhs = sign * s.z_iota.get((pm, pp, a), Fraction(0))
        split = Fraction(0)
        for (p, g, ap), vp in s.z_plus.items():
            if p != pm:
                continue
            for (g2, q, am), vm in s.z_minus.items():
                if g2 == g and q == pp and d.add(am, ap) == a:
                    split += vp * vm
        rhs = sign * split
        for q in d.crit_ids:
            rhs += s.z_h.get((pm, q, a), 0) * _m(s, q, pp)
            rhs += _m(s, pm, q) * s.z_h.get((q, pp, a), 0)
        if lhs != rhs:
            bad.append(((pm, pp, a), lhs - rhs))
    return VerificationReport("h-claim", tuple(bad))


def check_triangularity(s: CountSystem) -> VerificationReport:
    """No iota counts at nonpositive area off the trivial class or diagonal; nonzero diagonal."""
    d = s.index_data
    bad = []
    for (pm, pp, a), v in sorted(s.z_iota.items()):
        if a != ZERO_CLASS and d.omega(a) <= 0:
            bad.append(((pm, pp, a), v))
        elif a == ZERO_CLASS and pm != pp:
            bad.append(((pm, pp, a), v))
    for p in d.crit_ids:
        if not s.z_iota.get((p, p, ZERO_CLASS)):
            bad.append(((p, p, ZERO_CLASS), Fraction(0)))
    return VerificationReport("triangularity", tuple(bad))


# -- maps ------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemMaps:
    cm: GradedModule
    cf: GradedModule
    d: LinearMap
    pss: LinearMap
    ssp: LinearMap
    iota: LinearMap
    h: LinearMap
    pss_kappa: LinearMap
    iota_kappa: LinearMap

    @property
    def complex(self) -> ChainComplex:
        return ChainComplex(self.cm, self.d)

    def to_json(self) -> dict:
        return {name: getattr(self, name).to_json() for name in ("d", "pss", "ssp", "iota", "h")}


def _assemble(entries, src_ids, tgt_ids, data: IndexData) -> list[list[NovikovScalar]]:
    si = {x: i for i, x in enumerate(src_ids)}
    ti = {x: i for i, x in enumerate(tgt_ids)}
    acc = [[{} for _ in src_ids] for _ in tgt_ids]
    for (src, tgt, a), v in entries.items():
        cell = acc[ti[tgt]][si[src]]
        w = data.omega(a)
        cell[w] = cell.get(w, Fraction(0)) + v
    return [[NovikovScalar(list(cell.items())) for cell in row] for row in acc]


def build_maps(s: CountSystem) -> SystemMaps:
    """Novikov-linear maps from the counts; iota and PSS carry the ``(-1)^|p|`` twist."""
    data = s.index_data
    cm = GradedModule(data.crit_ids, tuple(k for _, k in data.crit))
    cf = GradedModule(data.orbit_ids)
    crit, orbs = data.crit_ids, data.orbit_ids
    ci = {p: i for i, p in enumerate(crit)}
    dm = [[0] * len(crit) for _ in crit]
    for (p, q), v in s.morse.items():
        dm[ci[q]][ci[p]] = v
    d = LinearMap(cm, cm, NovikovMatrix(dm, len(crit)), -1)
    iota_k = LinearMap(cm, cm, NovikovMatrix(_assemble(s.z_iota, crit, crit, data), len(crit)), None)
    pss_k = LinearMap(cm, cf, NovikovMatrix(_assemble(s.z_plus, crit, orbs, data), len(crit)), None)
    ssp = LinearMap(cf, cm, NovikovMatrix(_assemble(s.z_minus, orbs, crit, data), len(orbs)), None)
    h = LinearMap(cm, cm, NovikovMatrix(_assemble(s.z_h, crit, crit, data), len(crit)), None)
    return SystemMaps(cm, cf, d, sign_adjust(pss_k), ssp, sign_adjust(iota_k), h, pss_k, iota_k)


# -- the mirror toy system ----------------------------------------------------------


def orbit_id(p: str) -> str:
    return "g" + p[1:] if p.startswith("p") else "g_" + p


def morse_mirror(c: ChainComplex, dim_M: int | None = None) -> CountSystem:
    """Consistent toy system with one orbit per critical point.

    ``CZ(g_p) = dim/2 - |p|``, ``z_iota(p,p,0) = (-1)^|p|``,
    ``z_plus(p,g_p,0) = (-1)^|p|``, ``z_minus(g_p,p,0) = 1``, ``z_h = 0``.
    ``dim_M`` defaults to the top grading.
    """
    ids = c.module.ids
    grades = c.module.gradings
    if not c.module.is_graded:
        raise CountSystemError("morse_mirror needs a graded complex")
    dim = dim_M if dim_M is not None else max(grades)
    crit = tuple(zip(ids, grades))
    orbits = tuple((orbit_id(p), Fraction(dim, 2) - k) for p, k in crit)
    data = IndexData(dim, crit, orbits, (HomologyClass(ZERO_CLASS, 0, Fraction(0)),))
    morse = {}
    for i, q in enumerate(ids):
        for j, p in enumerate(ids):
            x = c.d.matrix[i, j]
            if x.is_zero_upto(None) and x.is_exact:
                continue
            if not x.is_rational():
                raise CountSystemError(f"differential entry ({q}, {p}) is not rational")
            morse[(p, q)] = x.as_rational()
    sgn = {p: (-1) ** (k % 2) for p, k in crit}
    return CountSystem(
        data,
        morse=morse,
        z_iota={(p, p, ZERO_CLASS): sgn[p] for p in ids},
        z_plus={(p, orbit_id(p), ZERO_CLASS): sgn[p] for p in ids},
        z_minus={(orbit_id(p), p, ZERO_CLASS): 1 for p in ids},
    )


# -- pipeline --------------------------------------------------------------------------


@dataclass
class PipelineVerdict:
    stages: list = field(default_factory=list)  # (name, status, detail)
    bound: int | None = None
    certificate: ArnoldCertificate | None = None
    failed_stage: str | None = None

    @property
    def passed(self) -> bool:
        return self.failed_stage is None and self.bound is not None

    def add(self, name: str, ok: bool, detail) -> None:
        self.stages.append((name, "pass" if ok else "fail", detail))

    def to_json(self) -> dict:
        def detail(x):
            return x.to_json() if hasattr(x, "to_json") else x

        return {
            "stages": [{"stage": n, "status": st, "detail": detail(x)} for n, st, x in self.stages],
            "bound": self.bound,
            "failed_stage": self.failed_stage,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }


def run_pipeline(s: CountSystem, betti, cutoff) -> PipelineVerdict:
    """Run every check of the deduction in order; raise HypothesisFailure at the first failure."""
    cut = to_fraction(cutoff)
    v = PipelineVerdict()

    def fail(stage: str, message: str):
        v.failed_stage = stage
        raise HypothesisFailure(stage, message, v)

    def report_stage(stage: str, rep: VerificationReport):
        v.add(stage, rep.passed, rep)
        if not rep.passed:
            fail(stage, rep.summary())

    report_stage("iota_claim", check_iota_claim(s))
    report_stage("h_claim", check_h_claim(s))
    report_stage("triangularity", check_triangularity(s))

    maps = build_maps(s)
    v.add("build_maps", True, {"cm": maps.cm.rank, "cf": maps.cf.rank})

    report_stage("chain_map", check_chain_map(maps.iota, maps.d, cut))

    # triangular invertibility test on a fixed total order of the generators
    order = sorted(range(maps.cm.rank), key=lambda i: maps.cm.ids[i])
    lem = mat_lemma22_check(maps.iota.matrix.submatrix(order, order))
    if not lem.holds:
        v.add("iota_invertible", False, lem)
        i, j, r, why = lem.violations[0]
        fail("iota_invertible", f"iota not invertible: ({maps.cm.ids[order[i]]}, {maps.cm.ids[order[j]]}) {why}")
    inv = mat_invert(maps.iota.matrix, cut)
    inverse = LinearMap(maps.cm, maps.cm, inv, None)
    resid = (maps.iota.matrix @ inv) - NovikovMatrix.identity(maps.cm.rank)
    ok = resid.is_zero_upto(cut)
    v.add("iota_invertible", ok, {"lemma22": lem.to_json(), "inverse_checked_to": format_fraction(cut)})
    if not ok:
        fail("iota_invertible", "iota times its computed inverse is not the identity")

    report_stage("chain_homotopy", check_chain_homotopy(maps.iota, compose(maps.ssp, maps.pss), maps.h, maps.d, cut))

    try:
        cycles = [vec for _, vec in homology_basis(maps.complex)]
    except Exception as exc:  # non-rational differential or d o d != 0
        v.add("arnold_bound", False, str(exc))
        fail("arnold_bound", str(exc))
    try:
        cert = arnold_bound(
            BettiVector(betti), cycles, maps.pss, maps.ssp, maps.iota, maps.h, maps.d, cut, iota_inverse=inverse
        )
    except HypothesisFailure as exc:
        v.add("arnold_bound", False, exc.message)
        fail("arnold_bound", f"{exc.stage}: {exc.message}")
    v.add("arnold_bound", True, {"bound": cert.bound, "cf_generators": cert.cf_generators})
    v.bound = cert.bound
    v.certificate = cert
    return v


def all_reports(s: CountSystem) -> list[VerificationReport]:
    return [check_iota_claim(s), check_h_claim(s), check_triangularity(s)]
