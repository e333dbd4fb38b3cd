"""Origin-symmetric convex bodies: gauge norms, membership, sampling support.

A body K defines the gauge ||x||_K = inf{lam > 0 : x/lam in K}, which is a norm
whose unit ball is K.  Supported kinds: ball, box, ellipsoid, lp_ball, and
facet-represented symmetric polytopes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

_EUCLID_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0, 4: math.pi ** 2 / 2.0}


def _unit_lp_ball_volume(dim: int, q: float) -> float:
    return 2.0 ** dim * math.gamma(1.0 + 1.0 / q) ** dim / math.gamma(1.0 + dim / q)


@dataclass(frozen=True)
class ConvexBody:
    """Immutable symmetric convex body with closed-form gauge.

    ``params`` is kind-specific:
      ball       -> (radius,)
      box        -> half-widths per axis
      ellipsoid  -> semi-axes
      lp_ball    -> (exponent, radius)
      polytope   -> (normals flattened, offsets), facet set closed under negation
    """

    kind: str
    dim: int
    params: tuple
    inner_radius: float
    outer_radius: float
    # polytope facets, cached as arrays at construction
    _normals: tuple = field(default=(), repr=False)
    _offsets: tuple = field(default=(), repr=False)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def ball(radius: float, dim: int) -> "ConvexBody":
        if radius <= 0:
            raise ValueError("radius must be positive")
        return ConvexBody("ball", dim, (float(radius),), float(radius), float(radius))

    @staticmethod
    def box(half_widths) -> "ConvexBody":
        hw = tuple(float(w) for w in half_widths)
        if any(w <= 0 for w in hw):
            raise ValueError("half-widths must be positive")
        return ConvexBody("box", len(hw), hw, min(hw), math.hypot(*hw))

    @staticmethod
    def ellipsoid(semi_axes) -> "ConvexBody":
        ax = tuple(float(a) for a in semi_axes)
        if any(a <= 0 for a in ax):
            raise ValueError("semi-axes must be positive")
        return ConvexBody("ellipsoid", len(ax), ax, min(ax), max(ax))

    @staticmethod
    def lp_ball(exponent: float, radius: float, dim: int) -> "ConvexBody":
        if exponent < 1.0:
            raise ValueError("lp exponent must be >= 1")
        if radius <= 0:
            raise ValueError("radius must be positive")
        # boundary Euclidean extremes sit on an axis and on the diagonal
        diag = dim ** (0.5 - 1.0 / exponent)
        inner = radius * min(1.0, diag)
        outer = radius * max(1.0, diag)
        return ConvexBody("lp_ball", dim, (float(exponent), float(radius)), inner, outer)

    @staticmethod
    def polytope(normals, offsets) -> "ConvexBody":
        nm = np.asarray(normals, dtype=float)
        off = np.asarray(offsets, dtype=float)
        if nm.ndim != 2 or nm.shape[0] != off.shape[0]:
            raise ValueError("normals must be (facets, dim) matching offsets")
        if np.any(off <= 0):
            raise ValueError("facet offsets must be positive")
        dim = nm.shape[1]
        # symmetry: every facet must have its negation in the facet set
        for i in range(nm.shape[0]):
            matched = np.any(
                np.all(np.abs(nm + nm[i]) < 1e-12, axis=1) & (np.abs(off - off[i]) < 1e-12)
            )
            if not matched:
                raise ValueError("polytope facet set is not closed under negation")
        inner = float(np.min(off / np.linalg.norm(nm, axis=1)))
        outer = _polytope_outer_radius(nm, off)
        return ConvexBody(
            "polytope", dim, (tuple(map(tuple, nm.tolist())), tuple(off.tolist())),
            inner, outer,
            _normals=tuple(map(tuple, nm.tolist())), _offsets=tuple(off.tolist()),
        )

    # -- geometry ------------------------------------------------------------

    def _pts(self, x) -> Array:
        pts = np.asarray(x, dtype=float)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., np.newaxis]
        if pts.shape[-1] != self.dim:
            raise ValueError(f"expected dimension {self.dim}, got shape {pts.shape}")
        return pts

    def gauge(self, x) -> Array:
        """Minkowski gauge ||x||_K, vectorized over the leading axes of x."""
        pts = self._pts(x)
        if self.kind == "ball":
            return np.linalg.norm(pts, axis=-1) / self.params[0]
        if self.kind == "box":
            hw = np.asarray(self.params)
            return np.max(np.abs(pts) / hw, axis=-1)
        if self.kind == "ellipsoid":
            ax = np.asarray(self.params)
            return np.sqrt(np.sum((pts / ax) ** 2, axis=-1))
        if self.kind == "lp_ball":
            q, radius = self.params
            return np.sum(np.abs(pts) ** q, axis=-1) ** (1.0 / q) / radius
        nm = np.asarray(self._normals)
        off = np.asarray(self._offsets)
        return np.max((pts @ nm.T) / off, axis=-1)

    def contains(self, x) -> Array:
        return self.gauge(x) <= 1.0

    def scaled(self, lam: float) -> "ConvexBody":
        """The dilated body lam*K."""
        if lam <= 0:
            raise ValueError("scale must be positive")
        if self.kind == "ball":
            return ConvexBody.ball(lam * self.params[0], self.dim)
        if self.kind == "box":
            return ConvexBody.box([lam * w for w in self.params])
        if self.kind == "ellipsoid":
            return ConvexBody.ellipsoid([lam * a for a in self.params])
        if self.kind == "lp_ball":
            return ConvexBody.lp_ball(self.params[0], lam * self.params[1], self.dim)
        return ConvexBody.polytope(np.asarray(self._normals),
                                   lam * np.asarray(self._offsets))

    @property
    def volume(self) -> float | None:
        """Closed-form volume, or None (polytope) when only sampling estimates exist."""
        if self.kind == "ball":
            return _EUCLID_BALL_VOLUME[self.dim] * self.params[0] ** self.dim
        if self.kind == "box":
            return math.prod(2.0 * w for w in self.params)
        if self.kind == "ellipsoid":
            return _EUCLID_BALL_VOLUME[self.dim] * math.prod(self.params)
        if self.kind == "lp_ball":
            q, radius = self.params
            return _unit_lp_ball_volume(self.dim, q) * radius ** self.dim
        return None

    def descriptor(self) -> dict:
        """JSON-ready description (matches the experiment-config body schema)."""
        if self.kind == "ball":
            return {"kind": "ball", "radius": self.params[0], "dim": self.dim}
        if self.kind == "box":
            return {"kind": "box", "half_widths": list(self.params)}
        if self.kind == "ellipsoid":
            return {"kind": "ellipsoid", "semi_axes": list(self.params)}
        if self.kind == "lp_ball":
            return {"kind": "lp_ball", "exponent": self.params[0],
                    "radius": self.params[1], "dim": self.dim}
        return {"kind": "polytope",
                "normals": [list(n) for n in self._normals],
                "offsets": list(self._offsets)}


def _polytope_outer_radius(normals: Array, offsets: Array) -> float:
    """Max vertex norm by enumerating facet intersections (small dims only)."""
    facets, dim = normals.shape
    if dim > 3:
        raise ValueError("polytope bodies supported for dim <= 3")
    best = 0.0
    for idx in itertools.combinations(range(facets), dim):
        a = normals[list(idx)]
        b = offsets[list(idx)]
        try:
            v = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        if np.all(normals @ v <= offsets * (1.0 + 1e-9)):
            best = max(best, float(np.linalg.norm(v)))
    if best == 0.0:
        raise ValueError("polytope vertex enumeration found no vertices")
    return best


def from_descriptor(desc: dict) -> ConvexBody:
    """Build a body from its config-dict form."""
    kind = desc.get("kind")
    if kind == "ball":
        return ConvexBody.ball(desc["radius"], desc["dim"])
    if kind == "box":
        return ConvexBody.box(desc["half_widths"])
    if kind == "ellipsoid":
        return ConvexBody.ellipsoid(desc["semi_axes"])
    if kind == "lp_ball":
        return ConvexBody.lp_ball(desc["exponent"], desc["radius"], desc["dim"])
    if kind == "polytope":
        return ConvexBody.polytope(desc["normals"], desc["offsets"])
    raise ValueError(f"unknown body kind {kind!r}")


def equivalence_constants(body: ConvexBody, samples: int = 512,
                          slack: float = 1e-12) -> tuple[float, float]:
    """Constants (A, B) with A|x| <= ||x||_K <= B|x|.

    A = 1/outer_radius, B = 1/inner_radius; checked on sampled directions
    before returning.
    """
    a = 1.0 / body.outer_radius
    b = 1.0 / body.inner_radius
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(20260810)))
    dirs = rng.normal(size=(samples, body.dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    g = body.gauge(dirs)
    if np.any(g < a * (1.0 - slack) - slack) or np.any(g > b * (1.0 + slack) + slack):
        raise AssertionError("sandwich constants violated on sampled directions")
    return a, b


def sample_in_body(body: ConvexBody, rng: np.random.Generator, size: int,
                   method: str = "auto") -> Array:
    """Uniform points in K.

    ``auto`` uses exact polar sampling for balls/ellipsoids and direct uniform
    sampling for boxes; other kinds (or ``method='rejection'``) fall back to
    rejection from the bounding box of half-width ``outer_radius``, whose
    expected trial count per point is (2 outer_radius)^dim / vol(K).
    """
    if size < 0:
        raise ValueError("size must be nonnegative")
    if method not in ("auto", "rejection"):
        raise ValueError("method must be 'auto' or 'rejection'")
    if method == "auto":
        if body.kind == "box":
            hw = np.asarray(body.params)
            return rng.uniform(-1.0, 1.0, size=(size, body.dim)) * hw
        if body.kind in ("ball", "ellipsoid"):
            normals = rng.normal(size=(size, body.dim))
            normals /= np.linalg.norm(normals, axis=1, keepdims=True)
            radii = rng.random(size) ** (1.0 / body.dim)
            unit = normals * radii[:, np.newaxis]
            if body.kind == "ball":
                return unit * body.params[0]
            return unit * np.asarray(body.params)
    out = np.empty((size, body.dim))
    have = 0
    half = body.outer_radius
    max_rounds = 10000
    for _ in range(max_rounds):
        if have >= size:
            break
        n_draw = max(2 * (size - have), 64)
        cand = rng.uniform(-half, half, size=(n_draw, body.dim))
        keep = cand[body.contains(cand)]
        take = min(size - have, keep.shape[0])
        out[have:have + take] = keep[:take]
        have += take
    if have < size:
        raise RuntimeError("rejection sampling failed to fill the request")
    return out


def zpm_norm(body: ConvexBody, coeffs, m: int, p: float, plan=None) -> float:
    """Norm of a symmetric m-form coefficient vector induced by the body.

    Coefficients are indexed by the lexicographic multi-index order of
    ``calculus.multi_indices(dim, m)``.  Each monomial y^a carries the
    multinomial weight m!/a!, so feeding the order-m partial derivatives of f
    makes the integrand equal the diagonal m-form of f.  The value is

        ((dim + m p) / (m^(m p + 1) p) * integral_K |form(y)|^p dy)^(1/p).
    """
    from .calculus import multi_indices, multinomial
    from .engine import IntegrationPlan, integrate_body

    if p < 1.0:
        raise ValueError("p must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    alphas = multi_indices(body.dim, m)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(alphas),):
        raise ValueError(f"expected {len(alphas)} coefficients for dim={body.dim}, m={m}")
    weights = np.array([multinomial(m, a) for a in alphas])

    def form_p(y: Array) -> Array:
        acc = 0.0
        for w, c, alpha in zip(weights, coeffs, alphas):
            mono = np.ones(y.shape[:-1])
            for i, a in enumerate(alpha):
                if a:
                    mono = mono * y[..., i] ** a
            acc = acc + w * c * mono
        return np.abs(acc) ** p

    if plan is None:
        if body.kind in ("ball", "box", "ellipsoid"):
            plan = IntegrationPlan.quadrature(x_nodes=64)
        else:
            plan = IntegrationPlan.monte_carlo(samples=200_000, seed=0)
    integral = integrate_body(form_p, body, plan).value
    constant = (body.dim + m * p) / (m ** (m * p + 1) * p)
    return float((constant * integral) ** (1.0 / p))
