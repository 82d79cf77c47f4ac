"""Critical points and negative gradient flow on catalog models."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from ..errors import DegenerateCritical, IncompleteSearch, StepUnderflow
from . import kernel
from .models import CIRCLE, MorseModel


@dataclass(frozen=True)
class FlowConfig:
    """Numerical parameters of the Morse engine.

    ``eps_basin`` of ``None`` means 0.1 x the minimal distance between
    critical points.  ``conv_tol`` is the gradient norm below which a run
    counts as converged to a non-attracting critical point.
    """

    h0: float = 1e-3
    atol: float = 1e-10
    rtol: float = 1e-8
    # keeps h * 4 pi^2 inside the Dormand-Prince stability region near saddles
    h_max: float = 0.05
    eps_basin: float | None = None
    t_max: float = 200.0
    max_steps: int = 200_000
    eps_link: float = 1e-3
    link_samples: int = 64
    bisection_depth: int = 40
    newton_tol: float = 1e-12
    degeneracy_tol: float = 1e-8
    conv_tol: float = 1e-9
    dedup_tol: float = 1e-6
    seed_resolution: int = 3
    max_refinements: int = 3

    def __post_init__(self):
        for name in ("h0", "atol", "rtol", "h_max", "t_max", "eps_link", "newton_tol",
                     "degeneracy_tol", "conv_tol", "dedup_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"FlowConfig.{name} must be positive")
        if self.eps_basin is not None and not self.eps_basin > 0:
            raise ValueError("FlowConfig.eps_basin must be positive")
        for name in ("max_steps", "link_samples", "bisection_depth", "seed_resolution"):
            if getattr(self, name) < 1:
                raise ValueError(f"FlowConfig.{name} must be positive")

    def refined(self) -> "FlowConfig":
        """Halved integrator tolerances and doubled link sampling."""
        return replace(self, atol=self.atol / 2, rtol=self.rtol / 2, link_samples=2 * self.link_samples)

    @classmethod
    def from_dict(cls, doc: dict) -> "FlowConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown FlowConfig keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True)
class CriticalPoint:
    id: str
    coords: tuple[float, ...]
    index: int
    value: float
    eigenvalues: tuple[float, ...]
    # tangent eigenframe as ambient vectors, ordered by factor then eigenvalue
    eigenvectors: tuple[tuple[float, ...], ...]
    unstable_frame: tuple[tuple[float, ...], ...] = field(repr=False)
    stable_frame: tuple[tuple[float, ...], ...] = field(repr=False)

    @property
    def point(self) -> np.ndarray:
        return np.array(self.coords)


@dataclass(frozen=True)
class FlowOutcome:
    status: str  # "converged" | "timeout"
    limit: CriticalPoint | None
    lift: tuple[int, ...] | None
    steps: int
    time: float
    x: tuple[float, ...]
    # (critical point id, deck translation) for every basin ball entered, in order
    visited: tuple[tuple[str, tuple[int, ...]], ...]
    # side from which sphere factors approach the limit
    approach: tuple[int, ...] | None = None
    trajectory: np.ndarray | None = field(default=None, repr=False, compare=False)
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def label(self):
        """Limit, deck translation and approach side, or "timeout".

        The approach side separates basins on sphere factors, which have no
        deck group.
        """
        if self.limit is None:
            return "timeout"
        return (self.limit.id, self.lift, self.approach)


def _newton(model: MorseModel, x: np.ndarray, tol: float, max_iter: int = 60) -> np.ndarray | None:
    for _ in range(max_iter):
        basis = model.tangent_basis(x)
        g = basis.T @ model.grad(x)
        if np.linalg.norm(g) <= tol:
            return x
        h = model.hessian(x)
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(step)):
            return None
        x = model.retract(x + basis @ step)
    g = model.tangent_basis(x).T @ model.grad(x)
    return x if np.linalg.norm(g) <= tol else None


def _classify(model: MorseModel, x: np.ndarray, cfg: FlowConfig) -> tuple:
    vals, vecs = [], []
    for basis, hess in zip(model.tangent_blocks(x), model.hessian_blocks(x)):
        w, v = np.linalg.eigh(hess)
        for lam, col in zip(w, v.T):
            if abs(lam) < cfg.degeneracy_tol:
                raise DegenerateCritical(f"Hessian eigenvalue {lam:.3e} at {x.tolist()}")
            vals.append(float(lam))
            vecs.append(tuple(float(c) for c in basis @ col))
    unstable = tuple(v for lam, v in zip(vals, vecs) if lam < 0)
    stable = tuple(v for lam, v in zip(vals, vecs) if lam > 0)
    return len(unstable), tuple(vals), tuple(vecs), unstable, stable


def _sort_key(model: MorseModel, index: int, x: np.ndarray):
    return (index, tuple(round(float(c), 9) + 0.0 for c in x))


@lru_cache(maxsize=64)
def find_critical_points(model: MorseModel, cfg: FlowConfig = FlowConfig()) -> tuple[CriticalPoint, ...]:
    """Newton iteration on ``grad f = 0`` from a product seed grid.

    Limits closer than ``dedup_tol`` are identified.  The grid is doubled
    until the catalog count is met.
    """
    expected = model.catalog_critical_count
    resolution = cfg.seed_resolution
    found: list[np.ndarray] = []
    for _ in range(cfg.max_refinements + 1):
        found = []
        for seed in model.seeds(resolution):
            x = _newton(model, seed, cfg.newton_tol)
            if x is None:
                continue
            x = model.wrap(x)
            if all(model.distance(x, y) >= cfg.dedup_tol for y in found):
                found.append(x)
        if len(found) == expected:
            break
        resolution *= 2
    else:
        raise IncompleteSearch(f"{model.name}: found {len(found)} critical points, catalog has {expected}")

    # snap to exact representatives so ids and lifts are reproducible
    clean = []
    for x in found:
        half = np.round(2.0 * x) / 2.0
        y = np.where(np.abs(x - half) < 1e-9, half, x) + 0.0
        for k, o in zip(model.kinds, model.offsets):
            if k == CIRCLE and y[o] == 1.0:
                y[o] = 0.0
        clean.append(y)
    classified = [(x, _classify(model, x, cfg)) for x in clean]
    classified.sort(key=lambda item: _sort_key(model, item[1][0], item[0]))
    width = len(str(len(classified) - 1))
    out = []
    for i, (x, (index, vals, vecs, unstable, stable)) in enumerate(classified):
        out.append(
            CriticalPoint(
                id=f"p{i:0{width}d}",
                coords=tuple(float(c) for c in x),
                index=index,
                value=float(model.f(x)),
                eigenvalues=vals,
                eigenvectors=vecs,
                unstable_frame=unstable,
                stable_frame=stable,
            )
        )
    return tuple(out)


def min_critical_distance(model: MorseModel, crit) -> float:
    return min(model.distance(a.point, b.point) for a, b in itertools.combinations(crit, 2))


def basin_radius(model: MorseModel, cfg: FlowConfig, crit=None) -> float:
    if cfg.eps_basin is not None:
        return cfg.eps_basin
    crit = crit if crit is not None else find_critical_points(model, cfg)
    return 0.1 * min_critical_distance(model, crit)


def _approach_side(model: MorseModel, lim: CriticalPoint, x: np.ndarray) -> tuple[int, ...]:
    # Sphere factors move along meridians, so the side is fixed by the start.
    # Circle factors are separated by the lift already and converge to noise.
    disp = model.difference(x, lim.coords)
    out, pos = [], 0
    for k in model.kinds:
        if k == CIRCLE:
            pos += 1
            continue
        for v in lim.eigenvectors[pos : pos + 2]:
            out.append(int(np.sign(disp @ np.array(v))))
        pos += 2
    return tuple(out)


def integrate_flow(
    model: MorseModel,
    x0,
    cfg: FlowConfig = FlowConfig(),
    *,
    backward: bool = False,
    record: bool = False,
    crit=None,
) -> FlowOutcome:
    """Follow ``-grad f`` (or ``+grad f`` when ``backward``) until a basin is reached.

    Converged means: inside the basin ball of a critical point and either it
    attracts the flow (minimum forward, maximum backward) with ``|grad f|``
    decreasing, or ``|grad f| <= conv_tol``.
    """
    crit = crit if crit is not None else find_critical_points(model, cfg)
    eps = basin_radius(model, cfg, crit)
    top = model.dim
    attract = [int(c.index == (top if backward else 0)) for c in crit]
    status, limit, steps, t, x, visited, traj, fvals = kernel.integrate(
        [float(v) for v in x0],
        model.kinds,
        model.offsets,
        [c.coords for c in crit],
        attract,
        -1.0 if backward else 1.0,
        eps,
        cfg.conv_tol,
        cfg.h0,
        cfg.h_max,
        cfg.atol,
        cfg.rtol,
        cfg.t_max,
        cfg.max_steps,
        True,
        record,
    )
    if status == 2:
        raise StepUnderflow(f"step size underflow at t={t:.6g} from x0={list(x0)}")
    lim = crit[limit] if status == 0 and limit >= 0 else None
    approach = None
    if lim is not None:
        approach = _approach_side(model, lim, np.asarray(x))
    return FlowOutcome(
        status="converged" if lim is not None else "timeout",
        limit=lim,
        lift=model.lift(x, lim.coords) if lim is not None else None,
        steps=steps,
        time=t,
        x=tuple(x),
        visited=tuple((crit[q].id, model.lift(y, crit[q].coords)) for q, y in visited),
        approach=approach,
        trajectory=np.array(traj) if record else None,
        values=np.array(fvals) if record else None,
    )


def flow_for_time(model: MorseModel, x0, t_end: float, cfg: FlowConfig = FlowConfig()) -> np.ndarray:
    """State of the negative gradient flow at time ``t_end`` (no basin stopping)."""
    status, _, steps, t, x, *_ = kernel.integrate(
        [float(v) for v in x0], model.kinds, model.offsets, [], [], 1.0, 0.0, 0.0,
        cfg.h0, cfg.h_max, cfg.atol, cfg.rtol, t_end, cfg.max_steps, False, False,
    )
    if status == 2:
        raise StepUnderflow(f"step size underflow at t={t:.6g}")
    return np.array(x)
