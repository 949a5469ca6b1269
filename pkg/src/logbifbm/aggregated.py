"""Aggregated central-limit models and their exact moment formulas.

Two constructions converge to the log-correlated generalized process:

* the layered Bernoulli model: m layers, each carrying a uniform q, a
  Bernoulli(q) sequence with running-sum parities, a heavy 1/q^{1/alpha}
  weight and an independent stable multiplier; the f-weighted centered
  parity sum of layer i is psi_i and

      G_n(f) = m^{-1/alpha} sum_i 2^{1/alpha - 1} X_i q_i^{-1/alpha} psi_i,

  which at alpha = 2 is exactly the classical normalization (standard
  Gaussian X and the factor 2 inside psi); the 2^{1/alpha} scaling keeps
  the alpha < 2 extension aligned with the stable functional's
  characteristic function.

* the point-process model on a general space: each layer draws one Poisson
  configuration with intensity n q mu, evaluates the centered parity of
  the counts in A_x against f, and aggregates the same way.

Exact second moments: for fixed r the layer functional satisfies

    E psi_{n,r}(f)^2 = sum_j f_j^2 (1 - (1-2r)^{2j})
                       + 2 sum_{j<j'} f_j f_j' (1 - (1-2r)^{2j}) (1-2r)^{j'-j},

computed in O(J) by a backward suffix recursion, and the alpha = 2 variance
of G_n(f) is the frequency mixture int_0^1 E psi_{n,r}(f)^2 dr / r.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import _kernels_nb as nb
from .quadrature import _quad
from .rng import RngStream
from .sampler import SampleMatrix
from .spaces import Space
from .testfun import SphereCap, TestFunction, cap_nodes

__all__ = [
    "AggregatedPlan",
    "f_cell_weights",
    "exact_psi_second_moment",
    "psi_second_moment_weights",
    "exact_variance_G_n",
    "simulate_G_n",
    "simulate_general_G_n",
]

_FAM_CODE = {
    "zero": nb.FAM_ZERO,
    "indicator": nb.FAM_INDICATOR,
    "exp": nb.FAM_EXP,
    "gauss": nb.FAM_GAUSS,
    "polydecay": nb.FAM_POLYDECAY,
}


@dataclass(frozen=True)
class AggregatedPlan:
    """Sizes and probes of one aggregated-model run.

    The central limit theorem needs m_n / n -> infinity; runs below ratio
    10 proceed with a warning flag (the hypothesis is asymptotic, not a
    hard precondition).
    """

    n: int
    m: int
    alpha: float = 2.0
    replicates: int = 10000
    thetas: tuple = (0.25, 0.5, 1.0, 2.0)
    sphere_nodes: int = 512

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError("alpha must lie in (0, 2]")

    @property
    def regime_warning(self) -> bool:
        return self.m < 10 * self.n

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "alpha": self.alpha,
            "replicates": self.replicates,
            "thetas": list(self.thetas),
            "sphere_nodes": self.sphere_nodes,
        }


def _fam_arrays(pieces):
    fams = np.array([_FAM_CODE[p.family] for p in pieces], dtype=np.int64)
    fp0 = np.array([(p.params[0] if p.params else 0.0) for p in pieces])
    fp1 = np.array(
        [(p.params[1] if len(p.params) > 1 else 0.0) for p in pieces]
    )
    fsc = np.array([p.scale for p in pieces])
    return fams, fp0, fp1, fsc


def f_cell_weights(f: TestFunction, n: int, tail_tol: float = 1e-12) -> np.ndarray:
    """Cell integrals f_{n,j} = int_{(j-1)/n}^{j/n} f, truncated certifiably.

    The certificate bounds the dropped tail below ``tail_tol``; the sum of
    |weights| never exceeds the L1 mass of f.
    """
    if n < 1:
        raise ValueError("n must be positive")
    f.require_certified()
    horizon = f.support_horizon(tail_tol)
    jmax = max(1, int(math.ceil(horizon * n - 1e-9)))
    edges = np.arange(jmax + 1) / n
    vals = f.antiderivative(edges)
    return np.diff(vals)


def psi_second_moment_weights(weights: np.ndarray, r: float) -> float:
    """E psi^2 for arbitrary cell weights at flip probability r in (0, 1).

    Backward suffix recursion over S_j = sum_{j' > j} f_{j'} c^{j'-j} with
    c = 1 - 2r, vectorized as a first-order linear filter; O(J).
    """
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    w = np.asarray(weights, dtype=float)
    c = 1.0 - 2.0 * r
    jmax = w.size
    j = np.arange(1, jmax + 1, dtype=float)
    # 1 - c^{2j} without cancellation for c near 1
    if c > 0.0:
        one_minus = -np.expm1(2.0 * j * math.log1p(-2.0 * r))
    elif c == 0.0:
        one_minus = np.ones(jmax)
    else:
        one_minus = 1.0 - np.exp(2.0 * j * math.log(-c))
    if jmax == 1:
        s = np.zeros(1)
    else:
        # y_k = c x_k + c y_{k-1} on the reversed weights gives S_{J-k}
        y = lfilter([c], [1.0, -c], w[::-1])
        s = np.concatenate([y[-2::-1], [0.0]])
    return float(np.sum(w * one_minus * (w + 2.0 * s)))


def exact_psi_second_moment(f: TestFunction, n: int, r: float) -> float:
    """E psi_{n,r}(f)^2 with the cell weights of (f, n)."""
    return psi_second_moment_weights(f_cell_weights(f, n), r)


def exact_variance_G_n(f: TestFunction, n: int) -> float:
    """Var G_n(f) = int_0^1 E psi_{n,r}(f)^2 dr / r at alpha = 2.

    The integrand is bounded near 0 (E psi^2 = O(rn)) and analytic near 1;
    integrate on the log axis with a certified small-r cutoff.
    """
    w = f_cell_weights(f, n)
    # below r0 the dr/r contribution is O(n r0), certifiably negligible
    r0 = min(1e-10, 1e-6 / max(n, 1))

    def integrand(u):
        return psi_second_moment_weights(w, math.exp(u))

    val, err = _quad(
        integrand, math.log(r0), 0.0, limit=300, epsabs=1e-10, epsrel=1e-9
    )
    if err > 1e-6 * max(1.0, abs(val)):
        raise ArithmeticError("variance quadrature did not converge")
    return val


# ---------------------------------------------------------------------------
# layered Bernoulli model
# ---------------------------------------------------------------------------


def _uniform_indicator_block(f: TestFunction, n: int):
    """Detect grid-aligned [0, b] indicators; returns (jmax, w) or None."""
    if f.family != "indicator":
        return None
    a, b = f.params
    if a != 0.0:
        return None
    jb = b * n
    if abs(jb - round(jb)) > 1e-9:
        return None
    return int(round(jb)), f.scale / n


def _var_tables(weights, jmax):
    """Exact-moment tables sigma^2(u) on a log grid of u = n min(q, 1-q)."""
    lo = math.log(nb.EXACT_CUTOFF * 0.9)
    hi = math.log(max(jmax / 2.0, nb.EXACT_CUTOFF * 1.1))
    npts = 2048
    step = (hi - lo) / (npts - 1)
    grid = np.exp(lo + step * np.arange(npts))
    tab_lo = np.empty(npts)
    tab_hi = np.empty(npts)
    for i, u in enumerate(grid):
        q = min(u / jmax, 0.5)
        tab_lo[i] = psi_second_moment_weights(weights, q)
        tab_hi[i] = psi_second_moment_weights(weights, 1.0 - q)
    return tab_lo, tab_hi, lo, step


def simulate_G_n(
    stream: RngStream,
    f: TestFunction,
    plan: AggregatedPlan,
    threads: int = 1,
) -> SampleMatrix:
    """Replicates of G_n(f) under the layered Bernoulli model.

    Layers are streamed with O(1) memory: the Bernoulli parity walk visits
    only the one-positions (geometric gaps, reflected onto min(q, 1-q)),
    and fast-mixing layers collapse to their exact-variance Gaussian.  See
    the module docstring for the normalization.
    """
    f.require_certified()
    if plan.regime_warning:
        warnings.warn("m/n below 10: outside the comfortable CLT regime")
    blk = _uniform_indicator_block(f, plan.n)
    generic = blk is None
    if generic:
        weights = f_cell_weights(f, plan.n)
        jmax = weights.size
        fhat = np.concatenate([[0.0], np.cumsum(weights)])
        # alternating prefix of (-1)^j f_j (j odd -> -f_j)
        signs = np.where(np.arange(1, jmax + 1) % 2 == 1, -1.0, 1.0)
        fhat_alt = np.concatenate([[0.0], np.cumsum(weights * signs)])
        f_total = float(fhat[-1])
        f_alt_total = float(fhat_alt[-1])
        w_cell = 0.0
        tab_lo, tab_hi, vlo, vstep = _var_tables(weights, jmax)
    else:
        jmax, w_cell = blk
        fhat = np.zeros(1)
        fhat_alt = np.zeros(1)
        f_total = w_cell * jmax
        f_alt_total = -w_cell if jmax % 2 == 1 else 0.0
        tab_lo = tab_hi = np.zeros(1)
        vlo, vstep = 0.0, 1.0
    key = stream.child(3).philox_words(2)
    out = np.empty(plan.replicates)
    _run_numba_blocks(
        lambda off, cnt, dst: nb.bernoulli_layers_kernel(
            np.uint64(key[0] & 0xFFFFFFFF),
            np.uint64(key[1] & 0xFFFFFFFF),
            int(off),
            cnt,
            plan.m,
            plan.alpha,
            jmax,
            w_cell,
            f_total,
            f_alt_total,
            fhat,
            fhat_alt,
            generic,
            tab_lo,
            tab_hi,
            vlo,
            vstep,
            dst,
        ),
        out,
        threads,
    )
    plan_d = {"op": "clt_bernoulli", "f": f.describe(), **plan.to_dict()}
    return SampleMatrix(
        out[:, None], [f.describe()], plan_d, stream.master_seed,
        meta={"regime_warning": plan.regime_warning},
    )


def _run_numba_blocks(call, out: np.ndarray, threads: int):
    """Run a numba kernel over the whole replicate range.

    Kernels parallelize internally (prange over replicates, each keyed by
    its absolute index), so the thread count only sizes numba's pool and
    can never change the results.
    """
    import numba

    old = numba.get_num_threads()
    numba.set_num_threads(max(1, min(threads if threads >= 1 else old, old)))
    try:
        call(0, out.shape[0], out)
    finally:
        numba.set_num_threads(old)


# ---------------------------------------------------------------------------
# point-process model
# ---------------------------------------------------------------------------


def _psi_rate_table(f: TestFunction, horizon: float):
    """log-grid table of the conditional variance psi(rate), rate >= cutoff."""
    from .sampler import PsiProfile

    lo = math.log(nb.EXACT_CUTOFF * 0.9 / horizon)
    hi = math.log(max(1e9, 1e3 / horizon))
    npts = 2048
    step = (hi - lo) / (npts - 1)
    rates = np.exp(lo + step * np.arange(npts))
    profile = PsiProfile([f])
    tab = np.array([profile.psi(float(rr)) for rr in rates])
    return tab, lo, step


def _lap_table(f: TestFunction, horizon: float):
    lo = math.log(nb.EXACT_CUTOFF * 0.9 / horizon)
    hi = math.log(max(1e9, 1e3 / horizon))
    npts = 2048
    step = (hi - lo) / (npts - 1)
    rates = np.exp(lo + step * np.arange(npts))
    tab = np.array([f.exp_weighted_integral(2.0 * rr) for rr in rates])
    return tab, lo, step


def simulate_general_G_n(
    stream: RngStream,
    space: Space,
    f,
    plan: AggregatedPlan,
    threads: int = 1,
) -> SampleMatrix:
    """Replicates of the point-process aggregated model (beta = 1).

    Half-line: counts in A_x = [0, x] come from a rate-(n q) Poisson path.
    Sphere: hemisphere (or pinned symmetric-difference) counts of a Poisson
    configuration with intensity n q lambda, integrated over a fixed
    equal-area node set of the cap weight.
    """
    if plan.regime_warning:
        warnings.warn("m/n below 10: outside the comfortable CLT regime")
    key = stream.child(4).philox_words(2)
    out = np.empty(plan.replicates)
    if space.kind == "half-line":
        if isinstance(f, SphereCap):
            raise ValueError("cap weights live on the sphere")
        f.require_certified()
        horizon = f.support_horizon(1e-12)
        fams, fp0, fp1, fsc = _fam_arrays([f])
        psi_tab, plo, pstep = _psi_rate_table(f, horizon)
        lap_tab, llo, lstep = _lap_table(f, horizon)
        _run_numba_blocks(
            lambda off, cnt, dst: nb.poisson_layers_halfline_kernel(
                np.uint64(key[0] & 0xFFFFFFFF),
                np.uint64(key[1] & 0xFFFFFFFF),
                int(off),
                cnt,
                plan.m,
                plan.alpha,
                float(plan.n),
                horizon,
                fams,
                fp0,
                fp1,
                fsc,
                f.l1(),
                psi_tab,
                plo,
                pstep,
                lap_tab,
                llo,
                lstep,
                dst,
            ),
            out,
            threads,
        )
        label = f.describe()
    elif space.kind == "sphere":
        if not isinstance(f, SphereCap):
            raise ValueError("sphere model takes cap weights")
        if space.dimension != 2:
            raise ValueError("sphere model supports S^2")
        nodes, w = cap_nodes(f.psi0, plan.sphere_nodes)
        node_w = np.full(nodes.shape[0], w * f.scale)
        if space.sphere_mode == "pinned":
            node_mu = np.arccos(np.clip(nodes[:, 2], -1.0, 1.0))
            pinned = True
        else:
            node_mu = np.full(nodes.shape[0], math.pi / 2.0)
            pinned = False
        # node parities decouple once every pairwise parity covariance
        # e^{-2 rate d(x_i, x_j)} underflows
        coin_rate = 20.0 / max(_min_node_distance(nodes), 1e-12)
        _run_numba_blocks(
            lambda off, cnt, dst: nb.poisson_layers_sphere_kernel(
                np.uint64(key[0] & 0xFFFFFFFF),
                np.uint64(key[1] & 0xFFFFFFFF),
                int(off),
                cnt,
                plan.m,
                plan.alpha,
                float(plan.n),
                space.lambda_total,
                nodes,
                node_mu,
                node_w,
                math.sin(min(f.psi0, math.pi / 2.0)),
                pinned,
                coin_rate,
                dst,
            ),
            out,
            threads,
        )
        label = f.describe()
    else:
        raise ValueError(
            "point-process aggregation supports the half-line and S^2"
        )
    plan_d = {
        "op": "clt_pointprocess",
        "space": str(space),
        "f": label,
        **plan.to_dict(),
    }
    return SampleMatrix(
        out[:, None], [label], plan_d, stream.master_seed,
        meta={"regime_warning": plan.regime_warning},
    )


def _min_node_distance(nodes: np.ndarray) -> float:
    """Minimum geodesic spacing of the node set (small sets: exact)."""
    if nodes.shape[0] > 4096:
        sub = nodes[:: max(1, nodes.shape[0] // 4096)]
    else:
        sub = nodes
    grams = np.clip(sub @ sub.T, -1.0, 1.0)
    np.fill_diagonal(grams, -1.0)
    return float(np.arccos(grams.max()))
