"""Monte Carlo samplers for the stochastic-integral representations.

Every representation here integrates a centered odd-parity functional
against an independently scattered random measure on (frequency r) x
(path space).  The samplers share one discretization: geometric frequency
bins, J path draws per bin approximating the path-space marginal, and the
random measure realized as independent cell variables.

* :func:`sample_truncated_field` draws the frequency-truncated pointwise
  field, by default exactly (symmetric factorization of the closed-form
  covariance), optionally through the representation cells.
* :func:`mc_gaussian_functional` / :func:`mc_stable_functional` draw the
  generalized-process evaluations G(f) (alpha = 2) and their stable
  extensions: a shared path ensemble fixes the integrand values h_f(r, w)
  exactly (odd-parity intervals integrated with f's antiderivative), and
  replicates re-draw only the cell measure.  Cell masses follow the control
  measure 2 dr/r dP', under which a Gaussian cell carries variance twice
  its mass, so the cell multiplier is 2 sqrt(L_b / J) per unit h (L_b the
  bin log-width).  The achieved covariance converges to the covariance
  functional as (B, J, frequency range) refine.
* :func:`sample_subordinated_bifbm` draws the subordinated bi-fractional
  representation with control measure C_K r^{-K-1} dr dP' (variance equal
  to cell mass, matching the closed-form covariance), fresh cells per
  replicate.

Everything is bit-reproducible from (seed, plan): replicate blocks own
(seed, path)-derived substreams and reductions run in block order, so the
results are independent of the worker-thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .quadrature import truncated_cov, _quad
from .rng import RngStream, sample_sas, sample_subordinator
from .spaces import Space
from .stats import plan_digest
from .testfun import SphereCap, TestFunction, cap_nodes

__all__ = [
    "DiscretizationGrid",
    "SampleMatrix",
    "sample_truncated_field",
    "mc_gaussian_functional",
    "mc_stable_functional",
    "sample_subordinated_bifbm",
]

_BLOCK = 8192  # replicate block size; fixed so results ignore thread count
_COIN_THRESHOLD = 30.0  # Poisson parity is a fair coin beyond this (to 1e-26)
_RATE_CAP = 1e6  # arrival horizon cap for subordinated functional paths


@dataclass(frozen=True)
class DiscretizationGrid:
    """Geometric frequency bins with J path draws per bin.

    The upper cutoff plays the role of the truncation 1/eps of the
    approximating field; widening [r_min, r_max] and raising (bins, J)
    refines the sampler toward the exact law.
    """

    r_min: float = 1e-4
    r_max: float = 1e4
    bins: int = 400
    paths_per_bin: int = 8
    t_horizon: float | None = None  # override of the certified f-horizon

    def __post_init__(self):
        if self.r_min <= 0:
            raise ValueError("r_min must be positive")
        if self.r_max < self.r_min * (1.0 + 1e-9):
            raise ValueError("r_max must exceed r_min")
        if self.bins < 1 or self.paths_per_bin < 1:
            raise ValueError("bins and paths_per_bin must be >= 1")

    def edges(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.bins + 1)

    def to_dict(self) -> dict:
        return {
            "r_min": self.r_min,
            "r_max": self.r_max,
            "bins": self.bins,
            "paths_per_bin": self.paths_per_bin,
            "t_horizon": self.t_horizon,
        }


@dataclass
class SampleMatrix:
    """Replicate-by-coordinate samples plus the generating plan."""

    values: np.ndarray
    labels: list
    plan: dict
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def replicates(self) -> int:
        return self.values.shape[0]

    def digest(self) -> str:
        return plan_digest(self.plan)


def _blocks(replicates: int):
    out = []
    start = 0
    while start < replicates:
        out.append((start, min(start + _BLOCK, replicates)))
        start += _BLOCK
    return out


def _run_blocks(fn, replicates: int, threads: int = 1):
    """Evaluate fn(block_index, start, stop) for each block, in order."""
    blocks = _blocks(replicates)
    if threads <= 1 or len(blocks) <= 1:
        return [fn(i, a, b) for i, (a, b) in enumerate(blocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futs = [pool.submit(fn, i, a, b) for i, (a, b) in enumerate(blocks)]
        return [f.result() for f in futs]


# ---------------------------------------------------------------------------
# truncated field
# ---------------------------------------------------------------------------


def sample_truncated_field(
    stream: RngStream,
    times,
    eps: float,
    replicates: int,
    method: str = "exact",
    threads: int = 1,
    grid: DiscretizationGrid | None = None,
) -> SampleMatrix:
    """Gaussian draws of the frequency-truncated field at the given times.

    ``exact`` factorizes the closed-form covariance C_eps (eigenvalue
    clipping at -1e-10 absorbs roundoff; anything below -1e-8 aborts as a
    quadrature bug).  ``representation`` runs the parity-cell construction
    of the stochastic integral restricted to r <= 1/eps instead.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    if eps <= 0:
        raise ValueError("eps must be positive")
    plan = {
        "op": "truncated_field",
        "times": times.tolist(),
        "eps": eps,
        "replicates": int(replicates),
        "method": method,
    }
    if method == "exact":
        m = times.size
        cov = np.empty((m, m))
        for i in range(m):
            for j in range(m):
                cov[i, j] = truncated_cov(times[i], times[j], eps)
        factor = _factor_psd(cov)

        def block(idx, a, b):
            g = stream.child(1, idx).generator()
            return g.standard_normal((b - a, m)) @ factor.T

        vals = np.vstack(_run_blocks(block, replicates, threads))
        return SampleMatrix(vals, [f"t={t:g}" for t in times], plan, stream.master_seed,
                            meta={"cov": cov})
    if method != "representation":
        raise ValueError("method must be 'exact' or 'representation'")
    grid = grid or DiscretizationGrid(r_min=1e-8, r_max=1.0 / eps, bins=400)
    if grid.r_max > 1.0 / eps + 1e-12:
        raise ValueError("representation grid must respect r_max <= 1/eps")
    plan["grid"] = grid.to_dict()
    vals = _parity_cell_field(
        stream,
        times,
        grid,
        replicates,
        threads,
        beta=1.0,
        bin_mass=lambda lo, hi: 2.0 * math.log(hi / lo),
        variance_factor=2.0,
        ptilde=lambda t, r: 0.5 * -np.expm1(-2.0 * t * r),
    )
    return SampleMatrix(vals, [f"t={t:g}" for t in times], plan, stream.master_seed)


def _factor_psd(cov: np.ndarray, hard_floor: float = -1e-8, clip: float = -1e-10):
    """Symmetric factorization with eigenvalue clipping.

    Eigenvalues in [hard_floor, 0) are treated as quadrature roundoff and
    clipped to zero; anything below hard_floor indicates a covariance bug.
    """
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    if w.min() < hard_floor:
        raise ArithmeticError(
            f"covariance matrix not PSD: min eigenvalue {w.min():g}"
        )
    w = np.where(w < clip, 0.0, np.maximum(w, 0.0))
    return v * np.sqrt(w)


# ---------------------------------------------------------------------------
# shared parity-cell engine for time-grid fields
# ---------------------------------------------------------------------------


def _parity_cell_field(
    stream,
    times,
    grid,
    replicates,
    threads,
    beta,
    bin_mass,
    variance_factor,
    ptilde,
    subordinate: bool = False,
):
    """Fresh-per-replicate cell construction of a parity field on a time grid.

    For each cell (bin b, path j): draw the bin's random rate (the
    subordinator S_{beta, r_b}, or r_b itself when beta = 1 or
    ``subordinate`` is false), evaluate xi_t = 1{N(rate * t) odd} - ptilde_t
    at the sorted times through independent Poisson increments, and add
    xi_t * sqrt(variance_factor * mass_cell) * g with one standard normal g
    per cell.  Poisson increments with mean above 30 flip a fair coin: the
    parity bias e^{-2 lambda}/2 is below 1e-26, under double roundoff.
    """
    times = np.asarray(times, dtype=float)
    order = np.argsort(times)
    ts = times[order]
    gaps = np.diff(np.concatenate([[0.0], ts]))
    edges = grid.edges()
    r_mid = np.sqrt(edges[:-1] * edges[1:])
    masses = np.array([bin_mass(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
    jj = grid.paths_per_bin
    cell_r = np.repeat(r_mid, jj)
    cell_std = np.sqrt(variance_factor * np.repeat(masses, jj) / jj)
    ncells = cell_r.size
    # deterministic centering per (bin, time)
    ptab = np.empty((ncells, ts.size))
    for k, t in enumerate(ts):
        ptab[:, k] = ptilde(t, cell_r)

    def block(idx, a, b):
        g = stream.child(2, idx).generator()
        n = b - a
        if subordinate and beta < 1.0:
            rates = sample_subordinator(g, beta, 1.0, size=(n, ncells))
            rates *= cell_r ** (1.0 / beta)
        else:
            rates = np.broadcast_to(cell_r, (n, ncells)).copy()
        parity = np.zeros((n, ncells), dtype=np.int8)
        out = np.zeros((n, ts.size))
        z = g.standard_normal((n, ncells))
        for k, dt in enumerate(gaps):
            if dt > 0.0:
                lam = rates * dt
                big = lam > _COIN_THRESHOLD
                inc = np.zeros_like(parity)
                if np.any(big):
                    inc[big] = (g.random(int(big.sum())) < 0.5).astype(np.int8)
                small = ~big
                if np.any(small):
                    inc[small] = (g.poisson(lam[small]) & 1).astype(np.int8)
                parity ^= inc
            xi = parity.astype(float) - ptab[:, k]
            out[:, k] = np.einsum("nc,nc,c->n", xi, z, cell_std)
        # restore the caller's time order
        inv = np.empty_like(order)
        inv[order] = np.arange(order.size)
        return out[:, inv]

    return np.vstack(_run_blocks(block, replicates, threads))


# ---------------------------------------------------------------------------
# functional samplers (shared path ensemble)
# ---------------------------------------------------------------------------


def _exp_beta_weighted(fn: TestFunction, beta: float, r: float) -> float:
    """int_0^inf e^{-(2t)^beta r} f(t) dt, robust across the layer scales."""
    if beta == 1.0:
        return fn.exp_weighted_integral(2.0 * r)
    hi = fn.support_horizon(1e-14)
    w_hi = min((2.0 * hi) ** beta * r, 45.0)
    if w_hi <= 0.0:
        return 0.0
    inv_beta = 1.0 / beta

    def trans(w):
        t = 0.5 * (w / r) ** inv_beta
        return fn.scalar(t) * math.exp(-w) * inv_beta * t / w

    v, _ = _quad(trans, 0.0, w_hi, limit=100, epsabs=1e-13, epsrel=1e-10)
    return v


class PsiProfile:
    """Conditional moments of the parity integral of a rate-R Poisson path.

    psi(R) = E'[ (int (1{N(R t) odd} - p_R(t)) f(t) dt)^2 ]
           = (1/4) iint f f (e^{-2R|t-s|} - e^{-2R(t+s)}) ds dt,

    summed over the half-axis pieces of f (which ride independent paths on
    the full line).  Indicator pieces use the closed form; other families
    integrate a cached correlation profile through the layer-adapted
    substitution w = 2Ru, so accuracy is uniform in R.
    """

    def __init__(self, pieces):
        self.pieces = [p for p in pieces if p is not None and p.family != "zero"]
        self._splines = []
        for p in self.pieces:
            if p.family == "indicator":
                self._splines.append(None)
                continue
            hi = p.support_horizon(1e-14)
            grid = np.linspace(0.0, 2.0 * hi, 4097)
            vals = np.empty(grid.size)
            for i, u in enumerate(grid):
                v, _ = _quad(
                    lambda s: p.scalar(s) * p.scalar(s + u), 0.0, hi,
                    limit=60, epsabs=1e-13, epsrel=1e-9,
                )
                vals[i] = v
            self._splines.append((grid, vals, hi))

    def psi(self, rate: float) -> float:
        total = 0.0
        for p, sp in zip(self.pieces, self._splines):
            if sp is None:
                a, b = max(p.params[0], 0.0), p.params[1]
                if b <= a:
                    continue
                total += _psi_rate_closed_indicator(a, b, p.scale, rate)
                continue
            grid, vals, hi = sp
            w_hi = min(4.0 * hi * rate, 45.0)

            def t1_int(w):
                u = 0.5 * w / rate
                return float(np.interp(u, grid, vals)) * math.exp(-w) / (2.0 * rate)

            t1, _ = _quad(t1_int, 0.0, w_hi, limit=80, epsabs=1e-14, epsrel=1e-9)
            mass = p.exp_weighted_integral(2.0 * rate)
            total += 0.25 * (t1 - mass * mass)
        return max(total, 0.0)


def _psi_rate_closed_indicator(a: float, b: float, scale: float, rate: float) -> float:
    """(1/4) iint_{[a,b]^2} (e^{-2R|x-y|} - e^{-2R(x+y)}) dx dy in closed form."""
    r2 = 2.0 * rate
    w = b - a
    i1 = (2.0 / r2) * (w - (1.0 - math.exp(-r2 * w)) / r2)
    ea = math.exp(-r2 * a) - math.exp(-r2 * b)
    i2 = (ea / r2) ** 2
    return 0.25 * scale * scale * (i1 - i2)


def _pieces_of(space: Space, f: TestFunction):
    """Half-axis pieces (f_plus, f_minus) of a line test function."""
    if space.kind == "full-line":
        return [f, f.mirrored()]
    return [f]


_TAB_POINTS = 2048


def _log_table(fn, lo: float, hi: float):
    """Tabulate fn on a log grid; returns (tab, log_lo, step)."""
    llo, lhi = math.log(lo), math.log(hi)
    step = (lhi - llo) / (_TAB_POINTS - 1)
    xs = np.exp(llo + step * np.arange(_TAB_POINTS))
    tab = np.array([fn(float(x)) for x in xs])
    return tab, llo, step


def _fam_arrays(pieces):
    from . import _kernels_nb as nb

    code = {
        "zero": nb.FAM_ZERO,
        "indicator": nb.FAM_INDICATOR,
        "exp": nb.FAM_EXP,
        "gauss": nb.FAM_GAUSS,
        "polydecay": nb.FAM_POLYDECAY,
    }
    fams = np.array([code[p.family] for p in pieces], dtype=np.int64)
    fp0 = np.array([(p.params[0] if p.params else 0.0) for p in pieces])
    fp1 = np.array([(p.params[1] if len(p.params) > 1 else 0.0) for p in pieces])
    fsc = np.array([p.scale for p in pieces])
    return fams, fp0, fp1, fsc


def _line_functional_values(stream, space, alpha, beta, fs, grid, replicates, threads):
    """Drive the numba cell kernel for line-space functionals."""
    from . import _kernels_nb as nb
    from .aggregated import _run_numba_blocks

    two_sided = space.kind == "full-line"
    horizon = grid.t_horizon or max(
        p.support_horizon(1e-12) for f in fs for p in _pieces_of(space, f)
    )
    plus = [f for f in fs]
    minus = [f.mirrored() for f in fs] if two_sided else []
    pieces = plus + minus
    fams, fp0, fp1, fsc = _fam_arrays(pieces)
    edges = grid.edges()
    r_mid = np.sqrt(edges[:-1] * edges[1:])
    cell_mass = 2.0 * np.log(edges[1:] / edges[:-1]) / grid.paths_per_bin
    nf = len(fs)
    cent = np.empty((r_mid.size, nf))
    ebeta = np.empty((r_mid.size, nf))
    profiles = []
    for k, f in enumerate(fs):
        pk = [f] + ([f.mirrored()] if two_sided else [])
        profiles.append(PsiProfile(pk))
        l1 = sum(p.l1() for p in pk)
        for b, r in enumerate(r_mid):
            eb = sum(_exp_beta_weighted(p, beta, float(r)) for p in pk)
            ebeta[b, k] = eb
            cent[b, k] = 0.5 * (l1 - eb)
    # surrogate tables over the realized rate
    tab_lo = nb.EXACT_CUTOFF * 0.9 / horizon
    tab_hi = max(grid.r_max * 10.0, 1e9, tab_lo * 10.0)
    psi_tab = np.empty((nf, _TAB_POINTS))
    lap_tab = np.empty((nf, _TAB_POINTS))
    for k, f in enumerate(fs):
        pk = [f] + ([f.mirrored()] if two_sided else [])
        psi_tab[k], plo, pstep = _log_table(profiles[k].psi, tab_lo, tab_hi)
        lap_tab[k], llo, lstep = _log_table(
            lambda rr: sum(p.exp_weighted_integral(2.0 * rr) for p in pk),
            tab_lo,
            tab_hi,
        )
    key = stream.child(0).philox_words(2)
    out = np.empty((replicates, nf))
    _run_numba_blocks(
        lambda off, cnt, dst: nb.line_functional_kernel(
            np.uint64(key[0]),
            np.uint64(key[1]),
            int(off),
            cnt,
            float(alpha),
            float(beta),
            r_mid,
            cell_mass,
            grid.paths_per_bin,
            float(horizon),
            two_sided,
            fams,
            fp0,
            fp1,
            fsc,
            cent,
            ebeta,
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
    bin_psi = np.empty((r_mid.size, nf))
    for k in range(nf):
        bin_psi[:, k] = [profiles[k].psi(float(r)) for r in r_mid]
    grid_var = {
        "per_f_variance": (2.0 * (cell_mass * grid.paths_per_bin)[:, None] * bin_psi)
        .sum(axis=0)
        .tolist()
    }
    return out, grid_var


class _SphereEnsemble:
    """Shared point-process ensemble for sphere-cap functional samplers."""

    def __init__(self, stream, space, beta, fs, grid, nodes=4096):
        if space.dimension != 2:
            raise ValueError("sphere functional sampling supports S^2")
        self.space = space
        edges = grid.edges()
        self.r_mid = np.sqrt(edges[:-1] * edges[1:])
        log_w = np.log(edges[1:] / edges[:-1])
        jj = grid.paths_per_bin
        self.cell_mass = np.repeat(2.0 * log_w / jj, jj)
        caps = []
        for f in fs:
            if not isinstance(f, SphereCap):
                raise ValueError("sphere functionals take cap test functions")
            caps.append(f)
        pinned = space.sphere_mode == "pinned"
        node_sets = [cap_nodes(c.psi0, nodes) for c in caps]
        g = stream.generator()
        h = np.zeros((self.cell_mass.size, len(fs)))
        cell = 0
        for r in self.r_mid:
            for _ in range(jj):
                if beta < 1.0:
                    rate = float(sample_subordinator(g, beta, float(r)))
                else:
                    rate = float(r)
                pts = _sphere_points(g, rate * space.lambda_total)
                for i, (cap, (nds, w)) in enumerate(zip(caps, node_sets)):
                    h[cell, i] = cap.scale * _cap_parity_integral(
                        space, pts, nds, w, beta, r, rate, pinned
                    )
                cell += 1
        self.h = h

    def coef(self, alpha: float) -> np.ndarray:
        scale = self.cell_mass ** (1.0 / alpha)
        return self.h * scale[:, None]


def _sphere_points(g, mean):
    n = int(g.poisson(min(mean, 1e7)))
    pts = g.standard_normal((n, 3))
    nrm = np.linalg.norm(pts, axis=1)
    nrm[nrm == 0.0] = 1.0
    return pts / nrm[:, None]


def _cap_parity_integral(space, pts, nodes, w, beta, r, rate, pinned):
    """sum_i w (1{count in A_{x_i} odd} - ptilde(x_i)) over cap nodes."""
    if pts.shape[0]:
        inside = pts @ nodes.T > 0.0  # membership in the hemisphere of each node
        if pinned:
            north = pts[:, -1] > 0.0
            inside = inside ^ north[:, None]
        counts = inside.sum(axis=0)
        par = (counts & 1).astype(float)
    else:
        par = np.zeros(nodes.shape[0])
    if pinned:
        mu = np.arccos(np.clip(nodes[:, -1], -1.0, 1.0))
    else:
        mu = np.full(nodes.shape[0], math.pi / 2.0)
    ptil = 0.5 * -np.expm1(-((2.0 * mu) ** beta) * r)
    return float(np.sum(w * (par - ptil)))


def _functional_plan(op, space, H, fs, grid, replicates, alpha=None):
    plan = {
        "op": op,
        "space": str(space),
        "H": H,
        "f": [f.describe() for f in fs],
        "grid": grid.to_dict(),
        "replicates": int(replicates),
    }
    if alpha is not None:
        plan["alpha"] = alpha
    return plan


def _build_ensemble(stream, space, beta, fs, grid, sphere_nodes):
    for f in fs:
        f.require_certified()
    ens_stream = stream.child(0)
    if space.kind == "sphere":
        return _SphereEnsemble(ens_stream, space, beta, fs, grid, nodes=sphere_nodes)
    if space.kind in ("half-line", "full-line"):
        return _LineEnsemble(ens_stream, space, beta, fs, grid)
    raise ValueError(f"functional sampling not supported on {space.kind}")


def mc_gaussian_functional(
    stream: RngStream,
    space: Space,
    H: float,
    fs,
    grid: DiscretizationGrid | None = None,
    replicates: int = 10000,
    threads: int = 1,
    sphere_nodes: int = 4096,
) -> SampleMatrix:
    """Monte Carlo draws of the Gaussian functionals {G(f)} for f in fs.

    On line spaces every replicate draws fresh cells (frequency bin x path
    draw): the integrand h_f(r, w) is evaluated exactly from the arrival
    walk (antiderivative integration over odd-parity stretches) or, for
    fast-mixing cells, from its exact conditional moments; the Gaussian
    cell measure contributes variance 2 x cell mass under the control
    measure 2 dr/r dP'.  The sample covariance converges to the covariance
    functional as (bins, J, frequency range) refine.  On the sphere a
    shared point-process ensemble plays the path marginal and replicates
    redraw the cell measure; the ensemble error shows up in the reported
    meta and shrinks like 1/sqrt(J x bins).
    """
    if not 0.0 < H <= 0.5:
        raise ValueError("H must lie in (0, 1/2]")
    fs = list(fs)
    for f in fs:
        f.require_certified()
    grid = grid or DiscretizationGrid()
    plan = _functional_plan("gaussian_functional", space, H, fs, grid, replicates)
    if space.kind in ("half-line", "full-line"):
        vals, grid_var = _line_functional_values(
            stream, space, 2.0, 2.0 * H, fs, grid, replicates, threads
        )
        meta = {"grid_variance": grid_var}
        return SampleMatrix(
            vals, [f.describe() for f in fs], plan, stream.master_seed, meta=meta
        )
    ens = _build_ensemble(stream, space, 2.0 * H, fs, grid, sphere_nodes)
    coef = ens.coef(2.0) * math.sqrt(2.0)  # Gaussian cells: Var = 2 * mass

    def block(idx, a, b):
        g = stream.child(1, idx).generator()
        return g.standard_normal((b - a, coef.shape[0])) @ coef

    vals = np.vstack(_run_blocks(block, replicates, threads))
    return SampleMatrix(
        vals,
        [f.describe() for f in fs],
        plan,
        stream.master_seed,
        meta={"cell_h": ens.h, "cell_mass": ens.cell_mass},
    )


def mc_stable_functional(
    stream: RngStream,
    space: Space,
    alpha: float,
    beta: float,
    f,
    grid: DiscretizationGrid | None = None,
    replicates: int = 10000,
    threads: int = 1,
    sphere_nodes: int = 4096,
) -> SampleMatrix:
    """Symmetric alpha-stable functional G_alpha(f) by the same cell scheme.

    Cell scale (mass)^{1/alpha} with i.i.d. unit SaS multipliers; for
    beta < 1 each cell's Poisson path runs at the random subordinated rate
    S_{beta, r_b}.  alpha = 2 reproduces the Gaussian functional in law.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError("alpha must lie in (0, 2]")
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    f.require_certified()
    if alpha <= 1.0 and getattr(f, "delta", 1.0) <= 0.0:
        raise ValueError("alpha <= 1 requires an F_delta certificate with delta > 0")
    grid = grid or DiscretizationGrid()
    plan = _functional_plan(
        "stable_functional", space, beta / 2.0, [f], grid, replicates, alpha=alpha
    )
    plan["beta"] = beta
    if space.kind in ("half-line", "full-line"):
        vals, grid_var = _line_functional_values(
            stream, space, alpha, beta, [f], grid, replicates, threads
        )
        return SampleMatrix(
            vals, [f.describe()], plan, stream.master_seed,
            meta={"grid_variance": grid_var},
        )
    ens = _build_ensemble(stream, space, beta, [f], grid, sphere_nodes)
    coef = ens.coef(alpha)[:, 0]

    def block(idx, a, b):
        g = stream.child(1, idx).generator()
        x = sample_sas(g, alpha, size=(b - a, coef.size))
        return (x @ coef)[:, None]

    vals = np.vstack(_run_blocks(block, replicates, threads))
    return SampleMatrix(
        vals,
        [f.describe()],
        plan,
        stream.master_seed,
        meta={"cell_h": ens.h, "cell_mass": ens.cell_mass},
    )


# ---------------------------------------------------------------------------
# subordinated bi-fractional Brownian motion
# ---------------------------------------------------------------------------


def subordinated_prefactor(K: float) -> float:
    """C_K = K 2^{-K} / Gamma(1 - K), the control-measure normalization."""
    return K * 2.0 ** (-K) / math.gamma(1.0 - K)


def sample_subordinated_bifbm(
    stream: RngStream,
    H: float,
    K: float,
    times,
    replicates: int,
    grid: DiscretizationGrid | None = None,
    threads: int = 1,
) -> SampleMatrix:
    """Draws of the subordinated bi-fractional field at the given times.

    Cells discretize the control measure C_K r^{-K-1} dr dP' on
    [r_min, r_max]; each cell draws its subordinator value S_{2H, r}, the
    parity indicators 1{N(S t) odd} centered at
    (1/2)(1 - e^{-(2t)^{2H} r}), and a Gaussian of variance equal to the
    cell mass (the convention under which the closed-form covariance
    (2^{(2H-1)K}/4)((s^{2H}+t^{2H})^K - (t-s)^{2HK}) holds).  The report
    carries the truncation budget of the discarded frequency tails.
    """
    if not 0.0 < H <= 0.5:
        raise ValueError("H must lie in (0, 1/2]")
    if not 0.0 < K < 1.0:
        raise ValueError("K must lie in (0, 1)")
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    grid = grid or DiscretizationGrid(r_min=1e-4, r_max=64.0, bins=240)
    ck = subordinated_prefactor(K)
    beta = 2.0 * H

    def bin_mass(lo, hi):
        return ck * (lo ** (-K) - hi ** (-K)) / K

    plan = {
        "op": "subordinated_bifbm",
        "H": H,
        "K": K,
        "times": times.tolist(),
        "replicates": int(replicates),
        "grid": grid.to_dict(),
    }
    vals = _parity_cell_field(
        stream,
        times,
        grid,
        replicates,
        threads,
        beta=beta,
        bin_mass=bin_mass,
        variance_factor=1.0,
        ptilde=lambda t, r: 0.5 * -np.expm1(-((2.0 * t) ** beta) * r),
        subordinate=True,
    )
    budget = _subordinated_truncation_budget(H, K, times, grid)
    return SampleMatrix(
        vals,
        [f"t={t:g}" for t in times],
        plan,
        stream.master_seed,
        meta={"truncation_budget": budget},
    )


def _subordinated_truncation_budget(H, K, times, grid) -> np.ndarray:
    """Covariance mass outside [r_min, r_max], bounded per time pair."""
    ck = subordinated_prefactor(K)
    beta = 2.0 * H
    m = times.size
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            s, t = sorted((times[i], times[j]))
            if t == 0.0:
                continue
            a = (2.0 * (t - s)) ** beta
            b = (2.0 * s) ** beta + (2.0 * t) ** beta

            def integrand(r):
                return 0.25 * ck * r ** (-K - 1.0) * (
                    -math.exp(-a * r) * math.expm1((a - b) * r)
                )

            lo, _ = _quad(integrand, 0.0, grid.r_min, limit=60, epsabs=1e-13)
            hi, _ = _quad(
                integrand, grid.r_max, grid.r_max * 1e6, limit=60, epsabs=1e-13
            )
            out[i, j] = lo + hi
    return out
