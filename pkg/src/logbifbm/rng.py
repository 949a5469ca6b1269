"""Deterministic splittable random streams and distribution samplers.

Streams are counter-based: a master seed plus an integer path (replicate
index, substream index, ...) is hashed through ``numpy.random.SeedSequence``
into a Philox generator, so distinct paths give statistically independent
sequences and identical (seed, path) pairs reproduce bit-identical output
regardless of thread scheduling.  The aggregated-model kernels use the same
principle with an in-kernel Philox4x32 keyed by (seed, replicate, layer);
see ``_philox.py``.

Samplers accept either an :class:`RngStream` (a fresh generator is derived,
so repeated calls with the same stream repeat the same values) or a numpy
``Generator`` (stateful, advancing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RngStream",
    "sample_gaussian",
    "sample_sas",
    "sample_subordinator",
    "sample_poisson_path",
    "sample_sphere_ppp",
    "uniform_open",
]


@dataclass(frozen=True)
class RngStream:
    """A value-like handle on the (seed, path)-keyed random stream."""

    master_seed: int
    path: tuple = ()

    def child(self, *indices: int) -> "RngStream":
        return RngStream(self.master_seed, self.path + tuple(int(i) for i in indices))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.master_seed, spawn_key=self.path)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed_sequence()))

    def philox_words(self, n: int = 2) -> np.ndarray:
        """Stable uint64 key material for the in-kernel counter RNG."""
        return self.seed_sequence().generate_state(n, np.uint64)


def _gen(stream) -> np.random.Generator:
    if isinstance(stream, RngStream):
        return stream.generator()
    if isinstance(stream, np.random.Generator):
        return stream
    raise TypeError("expected an RngStream or numpy Generator")


def sample_gaussian(stream, size=None):
    """Standard normal draws."""
    return _gen(stream).standard_normal(size)


def uniform_open(stream, size=None):
    """Uniform on the open interval (0, 1); exact zeros are rejected.

    1/sqrt(q) factors appear downstream, so the left endpoint is excluded
    by redrawing (the right endpoint is unreachable for doubles).
    """
    g = _gen(stream)
    u = np.atleast_1d(g.random(size))
    while True:
        mask = u == 0.0
        k = int(mask.sum())
        if k == 0:
            break
        u[mask] = g.random(k)
    return u if size is not None else float(u[0])


def sample_sas(stream, alpha: float, size=None):
    """Symmetric alpha-stable draws with E e^{i theta X} = e^{-|theta|^alpha}.

    Chambers-Mallows-Stuck transform of a uniform angle and an exponential;
    exact and rejection-free.  alpha = 2 delegates to a Gaussian with
    variance 2 (the unified characteristic-function convention), and
    alpha = 1 is the Cauchy special case tan(phi).
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError("alpha must lie in (0, 2]")
    g = _gen(stream)
    if alpha == 2.0:
        return math.sqrt(2.0) * g.standard_normal(size)
    phi = (g.random(size) - 0.5) * math.pi
    if alpha == 1.0:
        return np.tan(phi)
    w = g.standard_exponential(size)
    num = np.sin(alpha * phi) / np.cos(phi) ** (1.0 / alpha)
    return num * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)


def sample_subordinator(stream, beta: float, r: float, size=None):
    """Totally skewed beta-stable draws with E e^{-theta S} = e^{-r theta^beta}.

    Kanter's representation: with U uniform on (0,1), W standard exponential
    and x = pi U,

        S_{beta,1} = (B(x) / W)^{(1-beta)/beta},
        B(x) = (sin(beta x)/sin x)^{beta/(1-beta)} * sin((1-beta) x)/sin x,

    and the scaling law S_{beta,r} = r^{1/beta} S_{beta,1}.  beta = 1 is the
    degenerate constant S_{1,r} = r.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    if r <= 0:
        raise ValueError("r must be positive")
    if beta == 1.0:
        if size is None:
            return float(r)
        return np.full(size, float(r))
    g = _gen(stream)
    x = math.pi * uniform_open(g, size if size is not None else 1)
    w = g.standard_exponential(size if size is not None else 1)
    sx = np.sin(x)
    b = (np.sin(beta * x) / sx) ** (beta / (1.0 - beta)) * np.sin((1.0 - beta) * x) / sx
    s = r ** (1.0 / beta) * (b / w) ** ((1.0 - beta) / beta)
    return s if size is not None else float(s[0])


def sample_poisson_path(stream, rate: float, horizon: float) -> np.ndarray:
    """Ordered arrival times of a rate-``rate`` Poisson process on [0, horizon].

    Built from cumulative exponential gaps, so the arrival count is
    Poisson(rate * horizon).
    """
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if rate == 0.0:
        return np.empty(0)
    g = _gen(stream)
    mean = rate * horizon
    block = max(16, int(mean + 6.0 * math.sqrt(mean + 1.0)))
    arrivals = np.cumsum(g.standard_exponential(block)) / rate
    while arrivals[-1] <= horizon:
        more = np.cumsum(g.standard_exponential(block)) / rate
        arrivals = np.concatenate([arrivals, arrivals[-1] + more])
    return arrivals[arrivals <= horizon]


def sample_sphere_ppp(stream, space, intensity: float) -> np.ndarray:
    """Poisson point process on S^n with intensity measure intensity * lambda.

    Returns a (count, n+1) array of unit vectors; the count is Poisson with
    mean intensity * lambda(S^n) = intensity * pi, and points are i.i.d.
    uniform on the sphere.
    """
    if space.kind != "sphere":
        raise ValueError("sample_sphere_ppp needs a sphere space")
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    g = _gen(stream)
    count = int(g.poisson(intensity * space.lambda_total))
    if count == 0:
        return np.empty((0, space.dimension + 1))
    pts = g.standard_normal((count, space.dimension + 1))
    norms = np.linalg.norm(pts, axis=1)
    # Gaussian vectors of length zero are measure-zero; redraw defensively
    while np.any(norms == 0.0):
        bad = norms == 0.0
        pts[bad] = g.standard_normal((int(bad.sum()), space.dimension + 1))
        norms = np.linalg.norm(pts, axis=1)
    return pts / norms[:, None]
