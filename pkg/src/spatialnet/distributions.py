"""Target edge-length laws, reference densities and the importance ratio f/g."""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .geometry import HistogramDensity, estimate_density_histogram

__all__ = [
    "TargetSpec",
    "ReferenceDensity",
    "RatioDiagnostics",
    "SupportMismatchError",
    "make_truncated_normal",
    "normal_rel",
    "make_uniform",
    "make_histogram_target",
    "torus_reference",
    "histogram_reference",
    "target_as_reference",
    "importance_ratio",
    "importance_ratios",
    "importance_log_ratios",
    "ratio_bound",
    "estimate_tau",
    "DEFAULT_RATIO_GRID",
    "auto_reference",
    "AUTO_BINS",
    "target_from_params",
]

DEFAULT_RATIO_GRID = 10_000

Vectorised = Callable[[np.ndarray], np.ndarray]


class SupportMismatchError(ValueError):
    """The target asks for a length the reference law cannot produce."""


def _scalarise(fn: Vectorised) -> Callable:
    def wrapped(x):
        arr = np.asarray(x, dtype=np.float64)
        out = fn(np.atleast_1d(arr))
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    return wrapped


@dataclass(frozen=True)
class TargetSpec:
    """A compactly supported density with its cdf (and quantile function when cheap).

    ``pdf``, ``cdf`` and ``ppf`` accept scalars or arrays.
    """

    pdf: Callable
    cdf: Callable
    support: tuple[float, float]
    name: str = "target"
    ppf: Callable | None = None
    params: dict = field(default_factory=dict)
    # log density; keeps far tails distinguishable from zero where pdf underflows
    logpdf: Callable | None = None

    def __post_init__(self) -> None:
        a, b = map(float, self.support)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ValueError(f"support must be a finite interval of positive length, got {self.support}")
        object.__setattr__(self, "support", (a, b))

    @property
    def length(self) -> float:
        return self.support[1] - self.support[0]

    def log_density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.logpdf is not None:
            return np.asarray(self.logpdf(x), dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.pdf(x), dtype=np.float64))


def make_truncated_normal(mu: float, sigma: float, support: tuple[float, float]) -> TargetSpec:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    a, b = map(float, support)
    if not a < b:
        raise ValueError("support must have positive length")
    za, zb = (a - mu) / sigma, (b - mu) / sigma
    # work on the tail that keeps precision: Phi(zb)-Phi(za) == Phi(-za)-Phi(-zb)
    flip = za > 0
    lo_cdf = special.ndtr(-zb) if flip else special.ndtr(za)
    hi_cdf = special.ndtr(-za) if flip else special.ndtr(zb)
    mass = hi_cdf - lo_cdf
    if mass < 1e-300:
        raise ValueError(f"normal({mu}, {sigma}) puts no mass on {support}")
    norm = sigma * math.sqrt(2.0 * math.pi) * mass

    def pdf(x: np.ndarray) -> np.ndarray:
        z = (x - mu) / sigma
        inside = (x >= a) & (x <= b)
        return np.where(inside, np.exp(-0.5 * z * z) / norm, 0.0)

    log_norm = math.log(norm)

    def logpdf(x: np.ndarray) -> np.ndarray:
        z = (x - mu) / sigma
        inside = (x >= a) & (x <= b)
        return np.where(inside, -0.5 * z * z - log_norm, -np.inf)

    def cdf(x: np.ndarray) -> np.ndarray:
        xc = np.clip(x, a, b)
        z = (xc - mu) / sigma
        if flip:
            val = (hi_cdf - special.ndtr(-z)) / mass
        else:
            val = (special.ndtr(z) - lo_cdf) / mass
        return np.clip(val, 0.0, 1.0)

    def ppf(q: np.ndarray) -> np.ndarray:
        q = np.clip(q, 0.0, 1.0)
        if flip:
            z = -special.ndtri(hi_cdf - q * mass)
        else:
            z = special.ndtri(lo_cdf + q * mass)
        return np.clip(mu + sigma * z, a, b)

    return TargetSpec(
        pdf=_scalarise(pdf),
        cdf=_scalarise(cdf),
        ppf=_scalarise(ppf),
        logpdf=_scalarise(logpdf),
        support=(a, b),
        name=f"normal(mu={mu!r},sigma={sigma!r})[{a!r},{b!r}]",
        params={"kind": "normal", "mu": mu, "sigma": sigma, "lo": a, "hi": b},
    )


def normal_rel(mu: float, rel: float = 0.15, support: tuple[float, float] | None = None) -> TargetSpec:
    """Normal target whose standard deviation is ``rel`` times its mean.

    Default support is ``[0, mu + 12 sd]``.
    """
    sigma = rel * mu
    if support is None:
        support = (0.0, mu + 12.0 * sigma)
    return make_truncated_normal(mu, sigma, support)


def make_uniform(a: float, b: float) -> TargetSpec:
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    h = 1.0 / (b - a)

    def pdf(x: np.ndarray) -> np.ndarray:
        return np.where((x >= a) & (x <= b), h, 0.0)

    def cdf(x: np.ndarray) -> np.ndarray:
        return np.clip((x - a) * h, 0.0, 1.0)

    def ppf(q: np.ndarray) -> np.ndarray:
        return a + np.clip(q, 0.0, 1.0) * (b - a)

    return TargetSpec(
        pdf=_scalarise(pdf),
        cdf=_scalarise(cdf),
        ppf=_scalarise(ppf),
        support=(a, b),
        name=f"uniform[{a!r},{b!r}]",
        params={"kind": "uniform", "a": a, "b": b},
    )


def make_histogram_target(lo: Sequence[float], hi: Sequence[float], mass: Sequence[float]) -> TargetSpec:
    """Piecewise-constant target from contiguous ``(lo, hi, mass)`` rows."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    mass = np.asarray(mass, dtype=np.float64)
    if lo.size == 0 or not (lo.shape == hi.shape == mass.shape):
        raise ValueError("histogram rows must be nonempty and aligned")
    order = np.argsort(lo)
    lo, hi, mass = lo[order], hi[order], mass[order]
    if np.any(hi <= lo) or not np.allclose(lo[1:], hi[:-1], rtol=0, atol=1e-12):
        raise ValueError("histogram bins must be contiguous with positive width")
    if np.any(mass < 0) or mass.sum() <= 0:
        raise ValueError("histogram masses must be nonnegative with positive total")
    edges = np.concatenate([lo, hi[-1:]])
    h = HistogramDensity(edges, mass / mass.sum() / np.diff(edges))
    return TargetSpec(
        pdf=h.pdf,
        cdf=h.cdf,
        ppf=h.ppf,
        support=h.support,
        name="histogram",
        params={"kind": "hist", "edges": edges.tolist(), "values": h.values.tolist()},
    )


@dataclass(frozen=True)
class ReferenceDensity:
    """Law ``g`` of the admissible lengths.

    ``analytic`` densities raise :class:`SupportMismatchError` where the target
    has mass but ``g`` vanishes; histogram densities are smoothed and never do
    inside their support.
    """

    pdf: Callable
    support: tuple[float, float]
    name: str = "reference"
    analytic: bool = True
    # beyond this length the analytic form is not valid
    valid_max: float = math.inf


def torus_reference(dim: int) -> ReferenceDensity:
    """Exact torus-distance density for dim 1 or 2, valid on ``[0, 1/2]``."""
    if dim == 1:
        def pdf(x: np.ndarray) -> np.ndarray:
            return np.where((x >= 0) & (x <= 0.5), 2.0, 0.0)
    elif dim == 2:
        def pdf(x: np.ndarray) -> np.ndarray:
            return np.where(x >= 0, 2.0 * math.pi * x, 0.0)
    else:
        raise ValueError("analytic torus reference exists for dim 1 and 2 only")
    return ReferenceDensity(
        pdf=_scalarise(pdf),
        support=(0.0, math.sqrt(dim) / 2.0),
        name=f"torus-analytic(dim={dim})",
        analytic=True,
        valid_max=0.5,
    )


def histogram_reference(h: HistogramDensity, name: str = "histogram") -> ReferenceDensity:
    return ReferenceDensity(pdf=h.pdf, support=h.support, name=name, analytic=False)


def target_as_reference(target: TargetSpec) -> ReferenceDensity:
    """Use a target's own density as ``g`` (so ``f/g`` is 1 on the support)."""
    return ReferenceDensity(pdf=target.pdf, support=target.support, name=f"ref:{target.name}", analytic=True)


def importance_ratios(target: TargetSpec, reference: ReferenceDensity, r) -> np.ndarray:
    """Vectorised ``f(r)/g(r)``; zero wherever ``f`` vanishes."""
    r = np.asarray(r, dtype=np.float64)
    f = np.asarray(target.pdf(r), dtype=np.float64)
    out = np.zeros(np.broadcast(r, f).shape)
    pos = f > 0
    if not np.any(pos):
        return out
    rp = np.broadcast_to(r, out.shape)[pos]
    if reference.analytic and np.any(rp > reference.valid_max):
        bad = float(rp[rp > reference.valid_max][0])
        raise SupportMismatchError(f"{reference.name} is not valid at r={bad}; use a histogram reference")
    g = np.asarray(reference.pdf(rp), dtype=np.float64)
    if np.any(g <= 0):
        bad = float(rp[g <= 0][0])
        raise SupportMismatchError(f"target has mass at r={bad} where {reference.name} vanishes")
    out[pos] = f[pos] / g
    return out


def importance_log_ratios(target: TargetSpec, reference: ReferenceDensity, r) -> np.ndarray:
    """``log f(r) - log g(r)``; ``-inf`` where ``f`` vanishes.

    Finite wherever ``f > 0`` mathematically, even if ``f(r)`` underflows.
    """
    r = np.asarray(r, dtype=np.float64)
    lf = target.log_density(r)
    out = np.full(lf.shape, -np.inf)
    pos = np.isfinite(lf)
    if not np.any(pos):
        return out
    rp = r[pos]
    if reference.analytic and np.any(rp > reference.valid_max):
        bad = float(rp[rp > reference.valid_max][0])
        raise SupportMismatchError(f"{reference.name} is not valid at r={bad}; use a histogram reference")
    g = np.asarray(reference.pdf(rp), dtype=np.float64)
    if np.any(g <= 0):
        bad = float(rp[g <= 0][0])
        raise SupportMismatchError(f"target has mass at r={bad} where {reference.name} vanishes")
    out[pos] = lf[pos] - np.log(g)
    return out


def importance_ratio(target: TargetSpec, reference: ReferenceDensity, r: float) -> float:
    if not (math.isfinite(r) and r >= 0):
        raise ValueError(f"r must be finite and nonnegative, got {r}")
    return float(importance_ratios(target, reference, np.array([r]))[0])


@dataclass(frozen=True)
class RatioDiagnostics:
    C_estimate: float
    tau_estimate: float | None = None


def ratio_bound(target: TargetSpec, reference: ReferenceDensity, grid: int = DEFAULT_RATIO_GRID) -> RatioDiagnostics:
    """Grid estimate of ``sup f/g`` over the target support.

    Evaluated at the midpoints of ``grid`` equal cells, so it is a lower bound
    of the true supremum (which may be infinite where ``g`` vanishes at an
    endpoint).
    """
    if grid < 2:
        raise ValueError("grid must be >= 2")
    a, b = target.support
    x = a + (np.arange(grid) + 0.5) * (b - a) / grid
    return RatioDiagnostics(C_estimate=float(importance_ratios(target, reference, x).max()))


def estimate_tau(n_values: Sequence[float], c_values: Sequence[float]) -> float:
    """Least-squares slope of ``log C_n`` against ``log n``."""
    ln = np.log(np.asarray(n_values, dtype=np.float64))
    lc = np.log(np.asarray(c_values, dtype=np.float64))
    if ln.size < 2:
        raise ValueError("need at least two points")
    return float(np.polyfit(ln, lc, 1)[0])


AUTO_BINS = 256


def auto_reference(lengths, bins: int = AUTO_BINS) -> ReferenceDensity:
    """Smoothed histogram of the admissible lengths themselves, on ``[0, max r]``."""
    x = np.asarray(lengths, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no admissible lengths")
    hi = float(x.max())
    if hi <= 0:
        hi = 1.0
    h = estimate_density_histogram(x, bins, (0.0, hi))
    return histogram_reference(h, name=f"auto({bins} bins)")


def target_from_params(params: dict) -> TargetSpec:
    """Rebuild a target from its ``params`` (used to ship targets to worker processes)."""
    kind = params.get("kind")
    if kind == "normal":
        return make_truncated_normal(params["mu"], params["sigma"], (params["lo"], params["hi"]))
    if kind == "uniform":
        return make_uniform(params["a"], params["b"])
    if kind == "hist":
        edges = np.asarray(params["edges"])
        values = np.asarray(params["values"])
        return make_histogram_target(edges[:-1], edges[1:], values * np.diff(edges))
    raise ValueError(f"cannot rebuild target of kind {kind!r}")
