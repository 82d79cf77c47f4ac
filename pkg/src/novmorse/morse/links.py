"""Connecting trajectories, signed counts, the Morse complex and fiber checks.

Connectors from ``p-`` are found on its unstable link, the sphere of radius
``eps_link`` in the unstable eigenspace.  For index 1 the link is two points.
For higher index every great circle spanned by a pair of unstable
eigendirections is sampled, each sample is labelled by the limit of its
forward flow together with the deck translation of that limit, and label
changes are located by bisection.  The critical point a boundary trajectory
passes next is the far end of the connector.  For product flows every
connector lies in such a circle, so the search is exhaustive on the catalog.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from ..errors import DifferentialSquareNonzero, NovMorseError, ResolutionExceeded, SignUnavailable
from .flow import CriticalPoint, FlowConfig, find_critical_points, integrate_flow
from .models import MorseModel


@dataclass(frozen=True)
class SignedCount:
    unsigned: int
    signed: int | None
    # initial conditions on the unstable link, one per connector
    trajectories: tuple[tuple[float, ...], ...] = ()
    signs: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.unsigned < 0:
            raise ValueError("unsigned count must be nonnegative")
        if self.signed is not None:
            if abs(self.signed) > self.unsigned or (self.unsigned - self.signed) % 2:
                raise ValueError(f"signed count {self.signed} incompatible with unsigned {self.unsigned}")

    def to_json(self) -> dict:
        return {
            "unsigned": self.unsigned,
            "signed": self.signed,
            "trajectories": [list(t) for t in self.trajectories],
        }


@dataclass(frozen=True)
class Connector:
    target: str
    direction: tuple[float, ...]  # unit vector in the unstable eigenspace
    start: tuple[float, ...]  # point on the link
    sign: int | None


def _link_point(model: MorseModel, p: CriticalPoint, u: np.ndarray, radius: float) -> np.ndarray:
    return model.retract(p.point + radius * u)


def _sign(model: MorseModel, p_minus: CriticalPoint, p_plus: CriticalPoint, x_link: np.ndarray) -> int | None:
    """Orientation sign of a connector leaving ``p_minus`` through ``x_link``.

    The connector is positive when ``(-grad f, frame of p_plus)`` is a
    positively oriented basis of the unstable space of ``p_minus``, both
    expressed in the ordered unstable eigenframe ``F-`` of ``p_minus``.
    """
    fm = np.array(p_minus.unstable_frame).T
    fp = np.array(p_plus.unstable_frame).reshape(-1, model.ambient_dim).T
    if fp.shape[1]:
        proj = fm @ (fm.T @ fp)
        if np.linalg.norm(proj - fp) > 1e-8:
            return None
    v = -model.grad(x_link)
    m = np.column_stack([fm.T @ v, fm.T @ fp])
    det = np.linalg.det(m)
    if abs(det) < 1e-14 * max(1.0, np.linalg.norm(v)):
        return None
    return 1 if det > 0 else -1


def _boundary_point(a_out, b_out, start: str, by_id, k: int) -> str | None:
    """Index ``k - 1`` point passed, with the same deck translation, on both sides of a boundary."""
    other = set(b_out.visited)
    for q, lift in a_out.visited:
        if q != start and (q, lift) in other and by_id[q].index == k - 1:
            return q
    return None


class _Circle:
    """Great circle ``cos(t) ei + sin(t) ej`` on the unstable link of ``p``."""

    def __init__(self, model, p, crit, cfg, ei, ej):
        self.model, self.p, self.crit, self.cfg = model, p, crit, cfg
        self.ei, self.ej = ei, ej
        self.k = p.index

    def direction(self, t: float) -> np.ndarray:
        return math.cos(t) * self.ei + math.sin(t) * self.ej

    def flow(self, t: float):
        x = _link_point(self.model, self.p, self.direction(t), self.cfg.eps_link)
        return integrate_flow(self.model, x, self.cfg, crit=self.crit)

    def hits_on_boundary(self, out) -> bool:
        # the sample itself lies on the stable manifold of an index k-1 point
        return out.limit is not None and out.limit.index == self.k - 1

    def bisect(self, a, oa, b, ob, depth, hits):
        """Append ``(angle, outcome_left, outcome_right)`` for label changes in ``(a, b)``."""
        while depth > 0:
            mid = 0.5 * (a + b)
            om = self.flow(mid)
            if self.hits_on_boundary(om):
                hits.append((mid, om, om))
                return
            if om.label == oa.label:
                a, oa = mid, om
            elif om.label == ob.label:
                b, ob = mid, om
            else:
                # two boundaries inside one interval: resolve both halves
                if depth <= 1:
                    raise ResolutionExceeded(
                        f"connectors from {self.p.id} closer than bisection resolution near angle {mid:.6g}"
                    )
                self.bisect(a, oa, mid, om, depth - 1, hits)
                self.bisect(mid, om, b, ob, depth - 1, hits)
                return
            depth -= 1
        hits.append((0.5 * (a + b), oa, ob))


@lru_cache(maxsize=256)
def link_analysis(model: MorseModel, p_id: str, cfg: FlowConfig = FlowConfig()) -> tuple[Connector, ...]:
    """All connectors leaving ``p_id`` towards critical points of index one less."""
    crit = find_critical_points(model, cfg)
    by_id = {c.id: c for c in crit}
    p = by_id[p_id]
    k = p.index
    if k == 0:
        return ()
    eps = cfg.eps_link
    frame = [np.array(v) for v in p.unstable_frame]
    found: list[tuple[np.ndarray, CriticalPoint]] = []

    if k == 1:
        # the two link points lie on the unstable manifold itself
        for s in (1.0, -1.0):
            u = s * frame[0]
            out = integrate_flow(model, _link_point(model, p, u, eps), cfg, crit=crit)
            if out.limit is not None:
                found.append((u, out.limit))
    else:
        n = cfg.link_samples
        step = 2.0 * math.pi / n
        thetas = [step * (m + 0.5) for m in range(n)]
        for i, j in itertools.combinations(range(k), 2):
            circle = _Circle(model, p, crit, cfg, frame[i], frame[j])
            outs = [circle.flow(th) for th in thetas]
            hits: list = []
            for m in range(n):
                oa, ob = outs[m], outs[(m + 1) % n]
                if circle.hits_on_boundary(oa):
                    hits.append((thetas[m], oa, oa))
                elif oa.label != ob.label and not circle.hits_on_boundary(ob):
                    circle.bisect(thetas[m], oa, thetas[m] + step, ob, cfg.bisection_depth, hits)
            for th, oa, ob in hits:
                if oa is ob:
                    q = oa.limit.id
                else:
                    q = _boundary_point(oa, ob, p.id, by_id, k)
                if q is not None:
                    found.append((circle.direction(th), by_id[q]))

    # the same connector is seen from every circle through its direction
    connectors: list[Connector] = []
    seen: list[np.ndarray] = []
    for u, q in found:
        if q.index != k - 1:
            continue
        u = u / np.linalg.norm(u)
        if any(np.linalg.norm(u - w) < 1e-6 for w in seen):
            continue
        seen.append(u)
        x = _link_point(model, p, u, eps)
        connectors.append(
            Connector(
                target=q.id,
                direction=tuple(float(c) for c in u),
                start=tuple(float(c) for c in x),
                sign=_sign(model, p, q, x),
            )
        )
    connectors.sort(key=lambda c: (c.target, c.direction))
    return tuple(connectors)


def _resolve(model, point, cfg) -> CriticalPoint:
    if isinstance(point, CriticalPoint):
        return point
    crit = find_critical_points(model, cfg)
    if isinstance(point, str):
        for c in crit:
            if c.id == point:
                return c
        raise NovMorseError(f"no critical point with id {point!r}")
    x = np.asarray(point, dtype=float)
    best = min(crit, key=lambda c: model.distance(c.point, x))
    if model.distance(best.point, x) > cfg.dedup_tol:
        raise NovMorseError(f"{list(x)} is not a critical point of {model.name}")
    return best


def count_connecting(model: MorseModel, p_minus, p_plus, cfg: FlowConfig = FlowConfig()) -> SignedCount:
    """Signed and unsigned count of flow lines from ``p_minus`` down to ``p_plus``.

    Critical points may be given as ``CriticalPoint``, id, or coordinates.
    """
    pm = _resolve(model, p_minus, cfg)
    pp = _resolve(model, p_plus, cfg)
    if pm.index - pp.index != 1:
        raise ValueError(f"count_connecting needs |p-| - |p+| = 1, got {pm.index} and {pp.index}")
    conns = [c for c in link_analysis(model, pm.id, cfg) if c.target == pp.id]
    signs = [c.sign for c in conns]
    signed = None if (not model.is_separable or any(s is None for s in signs)) else sum(signs)
    return SignedCount(
        unsigned=len(conns),
        signed=signed,
        trajectories=tuple(c.start for c in conns),
        signs=None if signed is None else tuple(signs),
    )


def morse_differential(model: MorseModel, cfg: FlowConfig = FlowConfig()) -> list[list[int]]:
    """Integer matrix with ``d[i][j]`` the signed count from generator ``j`` to ``i``."""
    crit = find_critical_points(model, cfg)
    n = len(crit)
    d = [[0] * n for _ in range(n)]
    for j, pm in enumerate(crit):
        for i, pp in enumerate(crit):
            if pm.index - pp.index == 1:
                sc = count_connecting(model, pm, pp, cfg)
                if sc.signed is None:
                    raise SignUnavailable(f"no sign available for {pm.id} -> {pp.id} on {model.name}")
                d[i][j] = sc.signed
    return d


def build_morse_complex(model: MorseModel, cfg: FlowConfig = FlowConfig()):
    """Morse complex over Q (inside the Novikov field) graded by index."""
    from ..chain import ChainComplex, GradedModule, LinearMap
    from ..novikov import NovikovMatrix

    crit = find_critical_points(model, cfg)
    d = morse_differential(model, cfg)
    n = len(d)
    for i in range(n):
        for j in range(n):
            if sum(d[i][k] * d[k][j] for k in range(n)):
                raise DifferentialSquareNonzero(
                    f"(d o d)[{crit[i].id}, {crit[j].id}] != 0 on {model.name}: check signs or counts"
                )
    module = GradedModule(
        tuple(c.id for c in crit), tuple(c.index for c in crit), coords=tuple(c.coords for c in crit)
    )
    return ChainComplex(module, LinearMap(module, module, NovikovMatrix(d), degree=-1))


@dataclass(frozen=True)
class FiberReport:
    p: str
    q: str
    samples: int
    converged_to_q: int
    min_distance: float
    common_points: tuple[tuple[float, ...], ...] = field(default=())
    # common points other than p itself (only meaningful when p = q)
    stray_points: tuple[tuple[float, ...], ...] = field(default=())
    tolerance: float = 1e-6

    @property
    def ok(self) -> bool:
        if self.p != self.q:
            return self.converged_to_q == 0 and not self.common_points
        return not self.stray_points and bool(self.common_points)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "samples": self.samples,
            "converged_to_q": self.converged_to_q,
            "min_distance": self.min_distance,
            "common_points": [list(c) for c in self.common_points],
            "stray_points": [list(c) for c in self.stray_points],
            "ok": self.ok,
        }


def _sphere_directions(frame, count: int, rng) -> list[np.ndarray]:
    k = len(frame)
    if k == 0:
        return []
    f = np.array(frame).T
    if k == 1:
        return [f[:, 0] * (1 if m % 2 == 0 else -1) for m in range(count)]
    out = []
    for _ in range(count):
        g = rng.standard_normal(k)
        out.append(f @ (g / np.linalg.norm(g)))
    return out


def _cloud(model, p, frame, count, cfg, crit, backward, rng, radii):
    points = [p.point]
    limits = []
    for m, u in enumerate(_sphere_directions(frame, count, rng)):
        r = radii[m % len(radii)]
        out = integrate_flow(model, _link_point(model, p, u, r), cfg, crit=crit, backward=backward, record=True)
        limits.append(out)
        points.extend(out.trajectory)
    return np.array(points), limits


def fiber_check(model: MorseModel, p, q, samples: int = 256, cfg: FlowConfig = FlowConfig(), tol: float = 1e-6, seed: int = 0) -> FiberReport:
    """Sampled test that forward half-trajectories from ``p`` meet backward ones into ``q`` only at ``p = q``.

    ``samples`` points of the unstable link of ``p`` (at several radii) are
    flowed forward, and as many points of the stable link of ``q`` flowed
    backward.  The report counts forward samples converging to ``q`` and
    lists points of the two trajectory clouds closer than ``tol``.
    """
    crit = find_critical_points(model, cfg)
    pc = _resolve(model, p, cfg)
    qc = _resolve(model, q, cfg)
    if pc.index != qc.index:
        raise ValueError("fiber_check needs |p| = |q|")
    rng = np.random.default_rng(seed)
    radii = [cfg.eps_link * s for s in (1.0, 4.0, 16.0, 64.0)]
    fwd, outs = _cloud(model, pc, pc.unstable_frame, samples, cfg, crit, False, rng, radii)
    bwd, _ = _cloud(model, qc, qc.stable_frame, samples, cfg, crit, True, rng, radii)
    # for p = q every run starts inside the basin of p, so the count is moot
    hit_q = 0 if pc.id == qc.id else sum(
        1 for o in outs if (o.limit is not None and o.limit.id == qc.id) or any(v == qc.id for v, _ in o.visited)
    )
    tree = cKDTree(model.embed(bwd))
    dist, _ = tree.query(model.embed(fwd))
    common = []
    for i in np.nonzero(dist <= tol)[0]:
        pt = tuple(float(c) for c in model.wrap(fwd[i]))
        if pt not in common:
            common.append(pt)
    stray = [c for c in common if model.distance(np.array(c), pc.point) > tol] if pc.id == qc.id else []
    return FiberReport(
        p=pc.id,
        q=qc.id,
        samples=samples,
        converged_to_q=hit_q,
        min_distance=float(dist.min()),
        common_points=tuple(common),
        stray_points=tuple(stray),
        tolerance=tol,
    )
