"""Sampling and quadrature engine shared by all functional evaluators.

Double integrals over pairs (x, y) are computed in polar form y = x + t*sigma:
x ranges over a truncation box, sigma over the Euclidean unit sphere, and the
radial variable t is drawn from a pluggable importance law.  Both the Monte
Carlo and the deterministic (dim = 1) paths divide the integrand by the law's
density, so a law matched to the kernel's radial profile gives low variance.

Monte Carlo runs are deterministic for a fixed (seed, worker count): shard i
derives its stream from SeedSequence((seed, i)) and shard results merge in
index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bodies import ConvexBody, sample_in_body

Array = np.ndarray

_CHUNK = 1 << 17

_SPHERE_MEASURE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


class EngineError(RuntimeError):
    pass


def sphere_measure(dim: int) -> float:
    return _SPHERE_MEASURE[dim]


# ---------------------------------------------------------------------------
# Radial importance laws
# ---------------------------------------------------------------------------

class PowerLaw:
    """Density proportional to t^exponent on [t_min(sigma), t_max].

    With exponent = -(1 + m p) this matches the radial weight of the level-set
    kernels exactly, so their per-sample payoff is flat in t.  The lower bound
    may be a callable of the direction batch (per-direction exact cutoffs);
    directions whose cutoff reaches t_max keep a degenerate-free interval and
    rely on the kernel vanishing there.
    """

    def __init__(self, exponent: float, t_min, t_max: float):
        self.exponent = float(exponent)
        self.t_max = float(t_max)
        self.t_min = t_min
        if not callable(t_min):
            if not 0.0 < float(t_min) < self.t_max:
                raise ValueError(f"empty radial interval [{t_min}, {t_max}]")
        self._s = self.exponent + 1.0
        self._log = abs(self._s) < 1e-12

    def prepare(self, sigma: Array):
        if callable(self.t_min):
            lo = np.asarray(self.t_min(sigma), dtype=float)
            return np.minimum(lo, 0.5 * self.t_max)
        return float(self.t_min)

    def sample(self, v: Array, lo) -> Array:
        if self._log:
            return lo * (self.t_max / lo) ** v
        a_s = lo ** self._s
        b_s = self.t_max ** self._s
        return (a_s + v * (b_s - a_s)) ** (1.0 / self._s)

    def pdf(self, t: Array, lo) -> Array:
        if self._log:
            mass = np.log(self.t_max / lo)
        else:
            mass = (self.t_max ** self._s - lo ** self._s) / self._s
        return np.asarray(t, dtype=float) ** self.exponent / mass


class MollifierRadial:
    """Radial law matched to a concentration profile evaluated at gauge radii.

    Draws the gauge radius u from the profile's own unit radial mass measure
    (restricted to the mass quantile [mass_floor, 1]) and converts to the
    Euclidean radius t = u / ||sigma||_K.  The floor removes the u -> 0 region
    where finite differences cancel below double precision; the discarded true
    mass fraction is exactly ``mass_floor`` and is surfaced by the callers.
    """

    def __init__(self, family, gauge, mass_floor: float = 1e-4):
        if not 0.0 <= mass_floor < 1.0:
            raise ValueError("mass_floor must be in [0, 1)")
        self.family = family
        self.gauge = gauge
        self.mass_floor = float(mass_floor)

    def prepare(self, sigma: Array):
        return self.gauge(sigma)

    def sample(self, v: Array, gauge_sigma: Array) -> Array:
        u = self.family.inverse_mass(self.mass_floor + v * (1.0 - self.mass_floor))
        return u / gauge_sigma

    def pdf(self, t: Array, gauge_sigma: Array) -> Array:
        u = np.asarray(t, dtype=float) * gauge_sigma
        return self.family.radial_mass_density(u) * gauge_sigma / (1.0 - self.mass_floor)


# ---------------------------------------------------------------------------
# Plans and estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegrationPlan:
    """How to integrate: seeded parallel Monte Carlo or tensor quadrature."""

    method: str
    samples: int = 0
    seed: int = 0
    workers: int = 1
    stratification: int = 16
    x_nodes: int = 200
    t_nodes: int = 64
    outer_box_radius: float | None = None
    t_max: float | None = None

    @staticmethod
    def monte_carlo(samples: int, seed: int = 0, workers: int = 1,
                    stratification: int = 16, outer_box_radius: float | None = None,
                    t_max: float | None = None) -> "IntegrationPlan":
        return IntegrationPlan("monte_carlo", samples=samples, seed=seed,
                               workers=workers, stratification=stratification,
                               outer_box_radius=outer_box_radius, t_max=t_max)

    @staticmethod
    def quadrature(x_nodes: int = 200, t_nodes: int = 64,
                   outer_box_radius: float | None = None,
                   t_max: float | None = None) -> "IntegrationPlan":
        return IntegrationPlan("tensor_quadrature", x_nodes=x_nodes, t_nodes=t_nodes,
                               outer_box_radius=outer_box_radius, t_max=t_max)

    def with_box(self, radius: float) -> "IntegrationPlan":
        return replace(self, outer_box_radius=radius)


@dataclass
class IntegralEstimate:
    value: float
    stderr: float
    info: dict = field(default_factory=dict)


class _Welford:
    """Streaming mean/variance, mergeable across chunks and shards."""

    __slots__ = ("count", "mean", "m2")

    def __init__(self):
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def add(self, values: Array) -> None:
        nb = values.size
        if nb == 0:
            return
        mb = float(values.mean())
        m2b = float(((values - mb) ** 2).sum())
        self._merge(nb, mb, m2b)

    def merge(self, other: "_Welford") -> None:
        self._merge(other.count, other.mean, other.m2)

    def _merge(self, nb: int, mb: float, m2b: float) -> None:
        if nb == 0:
            return
        total = self.count + nb
        delta = mb - self.mean
        self.mean += delta * nb / total
        self.m2 += m2b + delta * delta * self.count * nb / total
        self.count = total

    @property
    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.count - 1) / self.count)


def _sample_sphere(rng: np.random.Generator, n: int, dim: int) -> Array:
    if dim == 1:
        return (rng.integers(0, 2, size=(n, 1)) * 2 - 1).astype(float)
    vec = rng.normal(size=(n, dim))
    norms = np.linalg.norm(vec, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return vec / norms


def _stratified_uniform(rng: np.random.Generator, n: int, strata: int, offset: int) -> Array:
    if strata <= 1:
        return rng.random(n)
    idx = (np.arange(offset, offset + n) % strata).astype(float)
    return (idx + rng.random(n)) / strata


def _check_finite(values: Array, x: Array, sigma: Array, t: Array) -> None:
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EngineError(
            f"nonfinite kernel value at x={x[i].tolist()}, sigma={sigma[i].tolist()}, "
            f"t={float(t[i])!r}")


def _weighted(num: Array, density: Array, x: Array, sigma: Array, t: Array) -> Array:
    """num / density with the 0/0 = 0 convention at the law's support edge.

    A radius can round one ulp past the support boundary; there both the
    kernel and the density vanish and the true contribution is zero.  A
    nonzero kernel where the density vanishes is a real error.
    """
    num = np.asarray(num, dtype=float)
    density = np.asarray(density, dtype=float)
    out = np.zeros_like(num)
    live = density > 0.0
    out[live] = num[live] / density[live]
    dead = ~live
    if np.any(dead & (num != 0.0)):
        i = int(np.argmax(dead & (num != 0.0)))
        raise EngineError(
            f"kernel nonzero outside the radial law support at x={x[i].tolist()}, "
            f"sigma={sigma[i].tolist()}, t={float(t[i])!r}")
    return out


def integrate_double(kernel, plan: IntegrationPlan, dim: int, law) -> IntegralEstimate:
    """Estimate the polar-form double integral of ``kernel`` over box x sphere x radius.

    Parameters
    ----------
    kernel : callable(x, sigma, t) -> values
        Vectorized integrand over batches: x, sigma of shape (n, dim), t of
        shape (n,).  The engine supplies the extra radial factor t^(dim-1),
        so ``kernel`` is exactly the pair integrand F(x, x + t sigma).
    law : PowerLaw | MollifierRadial
        Radial importance law; the estimate divides by its density, MC and
        quadrature alike.  ``law.prepare(sigma)`` supplies any per-direction
        state (gauge values or cutoffs).
    """
    if dim not in _SPHERE_MEASURE:
        raise ValueError("dim must be 1, 2 or 3")
    if plan.outer_box_radius is None:
        raise ValueError("plan.outer_box_radius must be resolved by the caller")
    box_radius = float(plan.outer_box_radius)
    measure = (2.0 * box_radius) ** dim * sphere_measure(dim)

    if plan.method == "tensor_quadrature":
        return _integrate_double_quadrature(kernel, plan, dim, law, box_radius, measure)
    if plan.method != "monte_carlo":
        raise ValueError(f"unknown integration method {plan.method!r}")
    if plan.samples <= 0:
        raise ValueError("empty plan: samples must be positive")

    def run_shard(shard: int, count: int) -> _Welford:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((plan.seed, shard))))
        acc = _Welford()
        done = 0
        while done < count:
            n = min(_CHUNK, count - done)
            x = rng.uniform(-box_radius, box_radius, size=(n, dim))
            sigma = _sample_sphere(rng, n, dim)
            aux = law.prepare(sigma)
            v = _stratified_uniform(rng, n, plan.stratification, done)
            t = law.sample(v, aux)
            density = law.pdf(t, aux)
            num = kernel(x, sigma, t) * t ** (dim - 1) * measure
            vals = _weighted(num, density, x, sigma, t)
            _check_finite(vals, x, sigma, t)
            acc.add(vals)
            done += n
        return acc

    counts = [plan.samples // plan.workers + (1 if i < plan.samples % plan.workers else 0)
              for i in range(plan.workers)]
    counts = [c for c in counts if c > 0]
    if len(counts) > 1:
        with ThreadPoolExecutor(max_workers=len(counts)) as pool:
            shards = list(pool.map(run_shard, range(len(counts)), counts))
    else:
        shards = [run_shard(0, counts[0])]
    total = _Welford()
    for acc in shards:
        total.merge(acc)
    return IntegralEstimate(total.mean, total.stderr,
                            info={"samples": plan.samples, "workers": plan.workers,
                                  "method": "monte_carlo"})


def _integrate_double_quadrature(kernel, plan, dim, law, box_radius, measure):
    if dim != 1:
        raise ValueError("tensor quadrature for pair integrals is dim=1 only")
    xg, wx = np.polynomial.legendre.leggauss(plan.x_nodes)
    x = box_radius * xg
    wx = box_radius * wx
    vg, wv = np.polynomial.legendre.leggauss(plan.t_nodes)
    v = 0.5 * (vg + 1.0)
    wv = 0.5 * wv

    total = 0.0
    for s in (-1.0, 1.0):
        aux = law.prepare(np.array([[s]]))
        aux = aux[0] if isinstance(aux, np.ndarray) else aux
        t = law.sample(v, aux)
        density = law.pdf(t, aux)
        # full tensor batch (x_i, t_j)
        xx = np.repeat(x, t.size)[:, np.newaxis]
        tt = np.tile(t, x.size)
        ss = np.full((xx.size, 1), s)
        num = kernel(xx, ss, tt) * tt ** (dim - 1)
        vals = _weighted(num, np.tile(density, x.size), xx, ss, tt)
        _check_finite(vals, xx, ss, tt)
        total += float(wx @ vals.reshape(x.size, t.size) @ wv)
    return IntegralEstimate(total, 0.0, info={"method": "tensor_quadrature",
                                              "x_nodes": plan.x_nodes,
                                              "t_nodes": plan.t_nodes})


# ---------------------------------------------------------------------------
# Integrals over a convex body
# ---------------------------------------------------------------------------

def body_quadrature_nodes(body: ConvexBody, radial_nodes: int = 48,
                          angular_nodes: int = 64) -> tuple[Array, Array]:
    """Nodes and weights with sum w_i f(y_i) ~ integral_K f; ball/box/ellipsoid only."""
    if body.kind == "box":
        axes = []
        for w in body.params:
            xg, wg = np.polynomial.legendre.leggauss(radial_nodes)
            axes.append((w * xg, w * wg))
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        weights = np.ones_like(grids[0])
        for wgrid in np.meshgrid(*[a[1] for a in axes], indexing="ij"):
            weights = weights * wgrid
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        return pts, weights.ravel()
    if body.kind in ("ball", "ellipsoid"):
        semi = np.asarray(body.params if body.kind == "ellipsoid"
                          else [body.params[0]] * body.dim)
        if body.dim == 1:
            xg, wg = np.polynomial.legendre.leggauss(radial_nodes)
            return (semi[0] * xg)[:, np.newaxis], semi[0] * wg
        rg, wr = np.polynomial.legendre.leggauss(radial_nodes)
        r = 0.5 * (rg + 1.0)
        wr = 0.5 * wr
        theta = 2.0 * math.pi * np.arange(angular_nodes) / angular_nodes
        wt = np.full(angular_nodes, 2.0 * math.pi / angular_nodes)
        if body.dim == 2:
            rr, tt = np.meshgrid(r, theta, indexing="ij")
            w1, w2 = np.meshgrid(wr, wt, indexing="ij")
            unit = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=-1)
            wgt = (w1 * w2 * rr).ravel()
            return unit * semi, wgt * float(np.prod(semi))
        cg, wc = np.polynomial.legendre.leggauss(radial_nodes)
        rr, cc, tt = np.meshgrid(r, cg, theta, indexing="ij")
        w1, w2, w3 = np.meshgrid(wr, wc, wt, indexing="ij")
        sphi = np.sqrt(np.maximum(0.0, 1.0 - cc ** 2))
        unit = np.stack([(rr * sphi * np.cos(tt)).ravel(),
                         (rr * sphi * np.sin(tt)).ravel(),
                         (rr * cc).ravel()], axis=-1)
        wgt = (w1 * w2 * w3 * rr ** 2).ravel()
        return unit * semi, wgt * float(np.prod(semi))
    raise ValueError(f"no tensor quadrature for body kind {body.kind!r}; use Monte Carlo")


def integrate_body(f_inner, body: ConvexBody, plan: IntegrationPlan) -> IntegralEstimate:
    """Integral of ``f_inner`` over the body K.

    Monte Carlo uses vol(K) * mean over uniform samples when the volume has a
    closed form; polytopes use the unbiased bounding-box indicator estimator.
    Quadrature maps tensor Gauss-Legendre grids onto ball/box/ellipsoid.
    """
    if plan.method == "tensor_quadrature":
        pts, w = body_quadrature_nodes(body, radial_nodes=plan.x_nodes,
                                       angular_nodes=plan.t_nodes)
        vals = f_inner(pts)
        return IntegralEstimate(float(np.dot(w, vals)), 0.0,
                                info={"method": "tensor_quadrature", "nodes": len(w)})
    if plan.method != "monte_carlo":
        raise ValueError(f"unknown integration method {plan.method!r}")
    if plan.samples <= 0:
        raise ValueError("empty plan: samples must be positive")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((plan.seed, 0))))
    acc = _Welford()
    vol = body.volume
    done = 0
    while done < plan.samples:
        n = min(_CHUNK, plan.samples - done)
        if vol is not None:
            pts = sample_in_body(body, rng, n)
            vals = vol * np.asarray(f_inner(pts), dtype=float)
        else:
            half = body.outer_radius
            pts = rng.uniform(-half, half, size=(n, body.dim))
            inside = body.contains(pts)
            vals = (2.0 * half) ** body.dim * np.asarray(f_inner(pts), dtype=float) * inside
        acc.add(vals)
        done += n
    return IntegralEstimate(acc.mean, acc.stderr,
                            info={"method": "monte_carlo", "samples": plan.samples})


# ---------------------------------------------------------------------------
# Sphere quadrature and the sphere-to-body reduction check
# ---------------------------------------------------------------------------

def sphere_quadrature(dim: int, nodes: int = 2048) -> tuple[Array, Array]:
    """Directions and weights with sum w_i g(sigma_i) ~ surface integral over the sphere."""
    if dim == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        theta = 2.0 * math.pi * np.arange(nodes) / nodes
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return dirs, np.full(nodes, 2.0 * math.pi / nodes)
    if dim == 3:
        nc = max(8, nodes // 32)
        nt = 2 * nc
        cg, wc = np.polynomial.legendre.leggauss(nc)
        theta = 2.0 * math.pi * np.arange(nt) / nt
        cc, tt = np.meshgrid(cg, theta, indexing="ij")
        ww = np.meshgrid(wc, np.full(nt, 2.0 * math.pi / nt), indexing="ij")
        sphi = np.sqrt(np.maximum(0.0, 1.0 - cc ** 2))
        dirs = np.stack([(sphi * np.cos(tt)).ravel(), (sphi * np.sin(tt)).ravel(),
                         cc.ravel()], axis=-1)
        return dirs, (ww[0] * ww[1]).ravel()
    raise ValueError("dim must be 1, 2 or 3")


def sphere_constant(dim: int, p: float, nodes: int = 4096) -> float:
    """The classical sphere moment: surface integral of |e . sigma|^p."""
    dirs, w = sphere_quadrature(dim, nodes)
    e = np.zeros(dim)
    e[0] = 1.0
    return float(np.dot(w, np.abs(dirs @ e) ** p))


def sphere_body_identity_check(g, body: ConvexBody, m: int, p: float,
                               plan: IntegrationPlan | None = None,
                               sphere_nodes: int = 4096) -> tuple[float, float, float]:
    """Check the sphere-to-body reduction for a positively m-homogeneous g.

    lhs = surface integral of gauge(sigma)^-(dim + m p) |g(sigma)|^p,
    rhs = (dim + m p) * integral_K |g(y)|^p dy.
    Returns (lhs, rhs, relative gap), with gap defined as 0 when both vanish.
    """
    dirs, w = sphere_quadrature(body.dim, sphere_nodes)
    power = body.dim + m * p
    lhs = float(np.dot(w, body.gauge(dirs) ** (-power) * np.abs(g(dirs)) ** p))
    if plan is None:
        plan = IntegrationPlan.quadrature(x_nodes=64, t_nodes=128)
    rhs = power * integrate_body(lambda y: np.abs(g(y)) ** p, body, plan).value
    if rhs == 0.0 and lhs == 0.0:
        return 0.0, 0.0, 0.0
    return lhs, rhs, abs(lhs - rhs) / abs(rhs)
