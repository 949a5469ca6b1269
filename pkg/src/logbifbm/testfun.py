"""Integrable test weights with decay certificates.

The generalized processes here have no pointwise values; everything is
evaluated against a test function f.  A weight is admissible when it is
bounded and decays fast enough:

* class F_delta (delta > 0): ||f||_inf finite and int_1^inf s^delta |f| < inf,
* class F_0: ||f||_inf finite and int_1^inf |f| log s < inf.

Rather than trusting arbitrary callables, each built-in family carries an
explicit certificate (sup-norm bound, decay exponent, support horizon) that
the quadrature and sampler modules consume: infinite domains are truncated
where the certified tail is provably below tolerance, and Poisson paths are
simulated only up to the certified horizon.

CLI spellings: ``indicator:a,b``, ``exp:rate`` (e^{-rate s}),
``gauss:center,width``, ``polydecay:p`` ((1+s)^{-p}, certified
delta = p-1-margin), ``cap:psi0`` (spherical cap about the north pole),
and ``zero``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erf as erf_np

from .spaces import Space

__all__ = ["TestFunction", "SphereCap", "parse_test_function", "cap_nodes"]

_SQRT2 = math.sqrt(2.0)
_POLY_MARGIN = 0.1


@dataclass(frozen=True)
class TestFunction:
    """A certified weight on the (half- or full) line.

    ``family`` is one of ``indicator``, ``exp``, ``gauss``, ``polydecay``,
    ``zero``; ``params`` its parameters; ``scale`` an overall multiplier.
    ``delta`` is the certified decay exponent (f in F_delta; 0 means only
    the F_0 log certificate holds, which none of the builtins need).
    """

    family: str
    params: tuple
    scale: float = 1.0
    label: str = ""

    # -- point evaluation ---------------------------------------------------

    def __call__(self, s):
        if np.ndim(s) == 0:
            return self.scalar(float(s))
        s = np.asarray(s, dtype=float)
        fam, p = self.family, self.params
        if fam == "zero":
            out = np.zeros_like(s)
        elif fam == "indicator":
            a, b = p
            out = ((s >= a) & (s <= b)).astype(float)
        elif fam == "exp":
            (rate,) = p
            out = np.exp(-rate * np.abs(s))
        elif fam == "gauss":
            c, w = p
            out = np.exp(-((s - c) ** 2) / (2.0 * w * w))
        elif fam == "polydecay":
            (q,) = p
            out = (1.0 + np.abs(s)) ** (-q)
        else:
            raise ValueError(f"unknown family {fam!r}")
        return self.scale * out

    def scalar(self, s: float) -> float:
        """Scalar fast path for quadrature inner loops."""
        fam, p = self.family, self.params
        if fam == "zero":
            return 0.0
        if fam == "indicator":
            a, b = p
            return self.scale if a <= s <= b else 0.0
        if fam == "exp":
            return self.scale * math.exp(-p[0] * abs(s))
        if fam == "gauss":
            c, w = p
            return self.scale * math.exp(-((s - c) ** 2) / (2.0 * w * w))
        if fam == "polydecay":
            return self.scale * (1.0 + abs(s)) ** (-p[0])
        raise ValueError(f"unknown family {fam!r}")

    # -- certificate --------------------------------------------------------

    @property
    def sup_norm(self) -> float:
        return abs(self.scale) * (0.0 if self.family == "zero" else 1.0)

    @property
    def delta(self) -> float:
        """Certified decay exponent: f belongs to F_delta."""
        if self.family == "polydecay":
            (q,) = self.params
            return max(q - 1.0 - _POLY_MARGIN, 0.0)
        if self.family == "zero":
            return math.inf
        return 1.0  # compact support or (super)exponential decay

    @property
    def support_bound(self) -> float | None:
        """Exact support bound |s| <= T when f has compact support."""
        if self.family == "indicator":
            a, b = self.params
            return max(abs(a), abs(b))
        if self.family == "zero":
            return 0.0
        return None

    def support_horizon(self, tol: float = 1e-10) -> float:
        """T such that the tail mass int_{|s|>T} |f| is below ``tol``."""
        if self.support_bound is not None:
            return self.support_bound
        a = abs(self.scale)
        if a == 0.0:
            return 0.0
        fam, p = self.family, self.params
        if fam == "exp":
            (rate,) = p
            return max(1.0, -math.log(tol * rate / (2.0 * a)) / rate)
        if fam == "gauss":
            c, w = p
            # Gaussian tail bound: int_T^inf f <= w^2 f(T) / (T - c)
            t = abs(c) + w
            for _ in range(100):
                if w * w * a * math.exp(-((t - abs(c)) ** 2) / (2 * w * w)) <= tol * (
                    t - abs(c)
                ):
                    break
                t += w
            return t
        if fam == "polydecay":
            (q,) = p
            # tail = 2a (1+T)^{1-q} / (q-1) for the two-sided weight
            return (2.0 * a / (tol * (q - 1.0))) ** (1.0 / (q - 1.0))
        raise ValueError(f"no horizon rule for family {fam!r}")

    def certified(self) -> bool:
        """True when the F_delta membership certificate holds."""
        if self.family == "polydecay":
            return self.params[0] > 1.0 + _POLY_MARGIN
        return True

    def require_certified(self):
        if not self.certified():
            raise ValueError(
                f"test function {self.describe()} lacks an F_delta certificate"
            )

    # -- closed-form integrals ----------------------------------------------

    def l1(self) -> float:
        """One-sided mass int_0^inf |f(s)| ds."""
        a = abs(self.scale)
        fam, p = self.family, self.params
        if fam == "zero":
            return 0.0
        if fam == "indicator":
            lo, hi = p
            return a * max(0.0, hi - max(lo, 0.0))
        if fam == "exp":
            return a / p[0]
        if fam == "gauss":
            c, w = p
            return a * w * math.sqrt(math.pi / 2.0) * math.erfc(-c / (_SQRT2 * w))
        if fam == "polydecay":
            return a / (p[0] - 1.0)
        raise ValueError(fam)

    def antiderivative(self, x):
        """F(x) = int_0^x f(s) ds for x >= 0 (vectorized)."""
        x = np.asarray(x, dtype=float)
        fam, p = self.family, self.params
        if fam == "zero":
            out = np.zeros_like(x)
        elif fam == "indicator":
            a, b = p
            lo = max(a, 0.0)
            out = np.clip(x, lo, max(b, lo)) - lo if b > lo else np.zeros_like(x)
        elif fam == "exp":
            (rate,) = p
            out = (1.0 - np.exp(-rate * x)) / rate
        elif fam == "gauss":
            c, w = p
            k = w * math.sqrt(math.pi / 2.0)
            out = k * (erf_np((x - c) / (_SQRT2 * w)) + math.erf(c / (_SQRT2 * w)))
        elif fam == "polydecay":
            (q,) = p
            out = (1.0 - (1.0 + x) ** (1.0 - q)) / (q - 1.0)
        else:
            raise ValueError(fam)
        return self.scale * out

    def exp_weighted_integral(self, g: float) -> float:
        """int_0^inf e^{-g s} f(s) ds for g >= 0."""
        if g < 0:
            raise ValueError("g must be nonnegative")
        a, fam, p = self.scale, self.family, self.params
        if fam == "zero":
            return 0.0
        if g == 0.0:
            return math.copysign(self.l1(), a)
        if fam == "indicator":
            lo, hi = p
            lo = max(lo, 0.0)
            if hi <= lo:
                return 0.0
            return a * (math.exp(-g * lo) - math.exp(-g * hi)) / g
        if fam == "exp":
            (rate,) = p
            return a / (rate + g)
        if fam == "gauss":
            c, w = p
            m = c - g * w * w
            return (
                a
                * math.exp(-g * c + 0.5 * g * g * w * w)
                * w
                * math.sqrt(math.pi / 2.0)
                * math.erfc(-m / (_SQRT2 * w))
            )
        # no elementary form for polydecay; certified tail makes quad cheap
        hi = self.support_horizon(1e-14)
        val, _ = integrate.quad(
            lambda s: math.exp(-g * s) * float(self(s)), 0.0, hi, limit=200
        )
        return val

    def scaled(self, factor: float) -> "TestFunction":
        return TestFunction(
            self.family, self.params, self.scale * factor, label=self.label
        )

    def mirrored(self) -> "TestFunction":
        """The half-line weight t -> f(-t) of the negative-axis part."""
        fam, p = self.family, self.params
        if fam == "indicator":
            a, b = p
            return TestFunction("indicator", (-b, -a), self.scale)
        if fam == "gauss":
            c, w = p
            return TestFunction("gauss", (-c, w), self.scale)
        return TestFunction(fam, p, self.scale)  # exp / polydecay are even

    def describe(self) -> str:
        if self.label:
            return self.label
        body = f"{self.family}:{','.join(repr(v) for v in self.params)}"
        if self.scale != 1.0:
            body = f"{self.scale}*{body}"
        return body


@dataclass(frozen=True)
class SphereCap:
    """Indicator of a geodesic cap of radius ``psi0`` about the north pole.

    Serves as the sphere-side test function: bounded, compactly supported,
    trivially in every F_{delta, delta', beta} class.
    """

    psi0: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.psi0 <= math.pi:
            raise ValueError("cap radius must lie in (0, pi]")

    def indicator(self, points: np.ndarray) -> np.ndarray:
        """Membership of unit vectors (rows) in the cap."""
        axis_dot = points[..., -1]  # inner product with the north pole
        return (axis_dot >= math.cos(self.psi0)).astype(float) * self.scale

    def lambda_mass(self, space: Space) -> float:
        """lambda(cap) under the sphere base measure pi * dA / w_n."""
        if space.kind != "sphere":
            raise ValueError("cap functions live on spheres")
        if space.dimension == 2:
            frac = 0.5 * (1.0 - math.cos(self.psi0))
        elif space.dimension == 1:
            frac = self.psi0 / math.pi
        else:
            raise ValueError("caps supported on S^1 and S^2 only")
        return abs(self.scale) * math.pi * frac

    def scaled(self, factor: float) -> "SphereCap":
        return SphereCap(self.psi0, self.scale * factor)

    def certified(self) -> bool:
        return True

    def require_certified(self):
        pass

    def describe(self) -> str:
        body = f"cap:{self.psi0!r}"
        if self.scale != 1.0:
            body = f"{self.scale}*{body}"
        return body


def cap_nodes(psi0: float, count: int) -> tuple[np.ndarray, float]:
    """Deterministic equal-area nodes covering the S^2 cap of radius psi0.

    Returns unit vectors (count x 3) and the common lambda-weight per node.
    Uses the spiral (Fibonacci) construction mapped area-preservingly onto
    the cap so that sum(w * f(x_i)) reproduces int_cap f dlambda.
    """
    k = np.arange(count, dtype=float) + 0.5
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    # area-preserving: z uniform on [cos(psi0), 1]
    z = 1.0 - (1.0 - math.cos(psi0)) * (k / count)
    phi = 2.0 * math.pi * ((k / golden) % 1.0)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    lam_mass = math.pi * 0.5 * (1.0 - math.cos(psi0))
    return pts, lam_mass / count


def parse_test_function(text: str, space: Space | None = None):
    """Parse a CLI test-function spec, e.g. ``indicator:0,1`` or ``cap:0.4``."""
    text = text.strip()
    scale = 1.0
    if "*" in text:
        factor, text = text.split("*", 1)
        scale = float(factor)
    if text == "zero":
        return TestFunction("zero", (), scale)
    if ":" not in text:
        raise ValueError(f"bad test-function spec {text!r}")
    family, payload = text.split(":", 1)
    vals = tuple(float(v) for v in payload.split(","))
    if family == "cap":
        return SphereCap(vals[0], scale)
    if family == "indicator":
        if len(vals) != 2 or vals[1] <= vals[0]:
            raise ValueError("indicator needs a < b")
        if space is not None and space.kind == "half-line" and vals[0] < 0:
            raise ValueError("indicator support must stay in the half-line")
        return TestFunction("indicator", vals, scale)
    if family == "exp":
        if len(vals) != 1 or vals[0] <= 0:
            raise ValueError("exp needs a positive rate")
        return TestFunction("exp", vals, scale)
    if family == "gauss":
        if len(vals) != 2 or vals[1] <= 0:
            raise ValueError("gauss needs center,width with width > 0")
        return TestFunction("gauss", vals, scale)
    if family == "polydecay":
        if len(vals) != 1 or vals[0] <= 1.0:
            raise ValueError("polydecay needs p > 1 for integrability")
        f = TestFunction("polydecay", vals, scale)
        f.require_certified()
        return f
    raise ValueError(f"unknown test-function family {family!r}")
