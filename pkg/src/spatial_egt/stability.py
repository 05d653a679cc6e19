"""Homogeneous stationary states, dispersion relations and PDE approximations.

Everything here concerns two-strategy coordination games in reduced form
``dp/dt = F(J*p, p)`` (see :func:`spatial_egt.ide.reduced_F`).  Linearizing at
a constant root ``p0`` gives growth rates ``lambda(k) = M hatJ(k) + N`` with
``M = dF/dr`` and ``N = dF/ds`` at ``(p0, p0)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import expit, logit

from .game import ConfigurationError, CoordinationParams, ResponseFunction
from .ide import Dynamic, reduced_F
from .kernels import FourierCoeffs, Kernel

SCAN_POINTS = 10_000
ROOT_TOL = 1e-12
DEGENERATE_GAP = 1e-4
RESIDUAL_TOL = 1e-8
JHAT_ROUNDOFF = 1e-8


class NotStationaryError(ValueError):
    pass


def _kind(dynamic) -> Dynamic:
    dyn = Dynamic(dynamic)
    if dyn in (Dynamic.REDUCED_REPLICATOR, Dynamic.IMITATIVE_REPLICATOR):
        return Dynamic.REDUCED_REPLICATOR
    if dyn in (Dynamic.REDUCED_LOGIT, Dynamic.LOGIT):
        return Dynamic.REDUCED_LOGIT
    raise ConfigurationError(f"{dyn.value} has no two-strategy reduced form")


def homogeneous_F(dynamic, p, params: CoordinationParams, kappa: float = np.inf):
    """``F(p, p)``: the reaction felt by a spatially constant state."""
    return reduced_F(_kind(dynamic), p, p, params, kappa)


@dataclass
class StationaryReport:
    """Roots of ``F(p, p) = 0`` on ``[0, 1]``.

    ``degenerate[j]`` marks roots that are (numerically) double: either two sign
    changes closer than ``1e-4`` merged into one, or a touching zero without a
    sign change.
    """

    roots: np.ndarray
    residuals: np.ndarray
    degenerate: np.ndarray

    def __len__(self) -> int:
        return len(self.roots)


def stationary_homogeneous(dynamic, params: CoordinationParams, kappa: float = np.inf,
                           n_scan: int = SCAN_POINTS) -> StationaryReport:
    """Scan ``F(p, p)`` on a uniform grid of ``[0, 1]`` and refine sign changes by bisection."""
    h = lambda p: float(homogeneous_F(dynamic, p, params, kappa))
    p = np.linspace(0.0, 1.0, n_scan + 1)
    v = np.asarray(homogeneous_F(dynamic, p, params, kappa), dtype=float)
    scale = max(1.0, float(np.abs(v).max()))
    zero = np.abs(v) <= 1e-14 * scale
    found = [float(x) for x in p[zero]]
    touch = []
    for j in range(n_scan):
        a, b = v[j], v[j + 1]
        if zero[j] or zero[j + 1]:
            continue
        if a * b < 0:
            found.append(optimize.bisect(h, p[j], p[j + 1], xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps))
    # tangential zeros: local minima of |F| that never change sign
    av = np.abs(v)
    for j in range(1, n_scan):
        if av[j] <= av[j - 1] and av[j] <= av[j + 1] and v[j - 1] * v[j + 1] > 0 and not zero[j]:
            res = optimize.minimize_scalar(lambda x: abs(h(x)), bounds=(p[j - 1], p[j + 1]),
                                           method="bounded", options={"xatol": ROOT_TOL})
            if abs(h(res.x)) <= 1e-10:
                touch.append(float(res.x))
    roots, flags = [], []
    for r in sorted(found):
        if roots and r - roots[-1] < DEGENERATE_GAP:
            roots[-1] = 0.5 * (roots[-1] + r)
            flags[-1] = True
        else:
            roots.append(r)
            flags.append(False)
    for r in touch:
        if not roots or min(abs(np.array(roots) - r)) >= DEGENERATE_GAP:
            roots.append(r)
            flags.append(True)
    if _kind(dynamic) is Dynamic.REDUCED_REPLICATOR:
        # F(p, p) = beta p (1 - p)(p - zeta) exactly; snap to the exact roots
        exact = np.array([0.0, params.zeta, 1.0])
        roots = [float(exact[np.argmin(abs(exact - r))]) if min(abs(exact - r)) < 1e-9 else r
                 for r in roots]
    order = np.argsort(roots)
    roots = np.asarray(roots)[order]
    flags = np.asarray(flags, dtype=bool)[order]
    res = np.abs(np.asarray(homogeneous_F(dynamic, roots, params, kappa), dtype=float))
    return StationaryReport(roots, res, flags)


def critical_beta(zeta: float, tol: float = 1e-13) -> float:
    """Payoff scale at which the logit fixed-point equation ``p = l(beta(p - zeta))`` gains roots.

    At a tangency ``beta p (1 - p) = 1`` and ``logit(p) = beta (p - zeta)``, which
    eliminates ``beta``: ``g(p) = p - p(1 - p) logit(p) = zeta``.  ``g`` is
    increasing on ``(0, 1)``, so the tangency point is found by bisection.
    """
    if not 0.0 < zeta < 1.0:
        raise ValueError("zeta must lie in (0, 1)")
    g = lambda p: p - p * (1 - p) * logit(p) - zeta
    lo, hi = 1e-15, 1 - 1e-15
    p = optimize.bisect(g, lo, hi, xtol=tol, maxiter=500)
    return 1.0 / (p * (1.0 - p))


def derivatives(dynamic, p0: float, params: CoordinationParams, kappa: float = np.inf) -> tuple:
    """Analytic ``(M, N) = (dF/dr, dF/ds)`` at ``r = s = p0``."""
    dyn = _kind(dynamic)
    beta, zeta = params.beta, params.zeta
    a = beta * (p0 - zeta)
    if dyn is Dynamic.REDUCED_LOGIT:
        l = expit(a)
        return beta * l * (1 - l), -1.0
    F = ResponseFunction.regularized(kappa)
    Fa, Fm = float(F(a)), float(F(-a))
    dFa, dFm = float(F.derivative(a)), float(F.derivative(-a))
    M = (1 - p0) * (Fa + p0 * beta * dFa) + p0 * (Fm + (1 - p0) * beta * dFm)
    N = -p0 * Fa - (1 - p0) * Fm
    return M, N


def closed_form_dispersion(dynamic, p0: float, params: CoordinationParams, kappa: float, jhat):
    """Tabulated growth rates at the replicator roots ``0, 1, zeta`` and at any logit root.

    Returns ``None`` for replicator points other than the three roots.
    """
    dyn = _kind(dynamic)
    beta, zeta = params.beta, params.zeta
    jhat = np.asarray(jhat, dtype=float)
    if dyn is Dynamic.REDUCED_LOGIT:
        return beta * (1 - p0) * p0 * jhat - 1.0
    F = ResponseFunction.regularized(kappa)
    if abs(p0) <= 1e-12:
        return F(-beta * zeta) * jhat - F(beta * zeta)
    if abs(p0 - 1.0) <= 1e-12:
        return F(beta * (zeta - 1)) * jhat - F(beta * (1 - zeta))
    if abs(p0 - zeta) <= 1e-12:
        f0 = float(F(0.0))
        return (f0 + beta * zeta * (1 - zeta)) * jhat - f0
    return None


@dataclass
class DispersionTable:
    """Growth rate per Fourier mode.

    ``modes`` has shape ``(n_modes, d)`` (signed integer harmonics), ``jhat`` and
    ``lam`` shape ``(n_modes,)``.  ``outside_hypothesis`` is set for logit roots
    when some ``hatJ(k) < -1e-8``, where the unique-root stability statement does
    not apply.
    """

    modes: np.ndarray
    jhat: np.ndarray
    lam: np.ndarray
    p0: float
    M: float
    N: float
    closed_form: np.ndarray | None = None
    outside_hypothesis: bool = False
    notes: list = field(default_factory=list)

    @property
    def stable(self) -> bool:
        return bool(np.all(self.lam < 0))

    @property
    def unstable_modes(self) -> np.ndarray:
        return self.modes[self.lam > 0]

    def max_growth(self) -> float:
        return float(self.lam.max())

    def to_csv(self, path) -> None:
        d = self.modes.shape[1]
        cols = ["k"] if d == 1 else [f"k{j + 1}" for j in range(d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols + ["jhat", "lambda"])
            for m, j, l in zip(self.modes, self.jhat, self.lam):
                w.writerow([int(x) for x in m] + [repr(float(j)), repr(float(l))])


def _mode_table(jhat, K):
    """Signed harmonics up to ``K`` per axis and their kernel coefficients."""
    if isinstance(jhat, FourierCoeffs):
        shape = jhat.values.shape
        K = min(n // 2 for n in shape) if K is None else int(K)
        if any(K > n // 2 for n in shape):
            raise ValueError(f"mode cutoff {K} exceeds the grid Nyquist index")
        d = len(shape)
        ks = np.arange(-K, K + 1)
        modes = np.stack([m.ravel() for m in np.meshgrid(*([ks] * d), indexing="ij")], axis=1)
        return modes, np.asarray(jhat.at(modes), dtype=float).ravel()
    if K is None:
        raise ValueError("a mode cutoff K is needed for continuous kernels")
    ks = np.arange(-int(K), int(K) + 1)
    if isinstance(jhat, Kernel):
        d = jhat.dim
        modes = np.stack([m.ravel() for m in np.meshgrid(*([ks] * d), indexing="ij")], axis=1)
        vals = jhat.transform(modes if d == 2 else modes[:, 0])
        return modes, np.asarray(vals, dtype=float)
    modes = ks[:, None]
    return modes, np.asarray([float(jhat(k)) for k in ks])


def dispersion(dynamic, p0: float, params: CoordinationParams, kappa: float, jhat,
               K: int | None = None) -> DispersionTable:
    """Growth rates ``lambda(k) = M hatJ(k) + N`` at a homogeneous root ``p0``.

    ``jhat`` is a :class:`FourierCoeffs` (grid harmonics, ``K`` defaults to the
    Nyquist index), a :class:`Kernel` (continuous transform at integer ``k``) or
    a callable ``k -> hatJ(k)``.  Where a closed form exists it is evaluated as
    well and must agree with the derivative path.
    """
    dyn = _kind(dynamic)
    resid = abs(float(homogeneous_F(dyn, p0, params, kappa)))
    if resid > RESIDUAL_TOL:
        raise NotStationaryError(f"p0={p0} is not a stationary root (residual {resid:.3e})")
    modes, jv = _mode_table(jhat, K)
    M, N = derivatives(dyn, p0, params, kappa)
    lam = M * jv + N
    closed = closed_form_dispersion(dyn, p0, params, kappa, jv)
    notes = []
    if closed is not None:
        gap = float(np.abs(np.asarray(closed) - lam).max())
        if gap > 1e-10 * max(1.0, float(np.abs(lam).max())):
            raise ArithmeticError(f"closed-form and derivative dispersion differ by {gap:.3e}")
    outside = False
    # |hatJ| below 1e-8 is discretization noise from the wrapped Gaussian tail
    if dyn is Dynamic.REDUCED_LOGIT and np.any(jv[np.any(modes != 0, axis=1)] <= -JHAT_ROUNDOFF):
        outside = True
        notes.append("some hatJ(k) < 0: unique-root stability statement does not apply")
    return DispersionTable(modes, jv, lam, float(p0), float(M), float(N),
                           None if closed is None else np.asarray(closed, dtype=float),
                           outside, notes)


def linear_ide_solution(M: float, N: float, jhat: FourierCoeffs, g0: np.ndarray, t: float) -> np.ndarray:
    """Exact solution of ``dg/dt = M J*g + N g`` on a periodic grid by modal decay/growth."""
    g0 = np.asarray(g0, dtype=float)
    if g0.shape != jhat.values.shape:
        raise ValueError("perturbation and kernel coefficients live on different grids")
    rates = M * jhat.values + N
    return np.fft.ifftn(np.fft.fftn(g0) * np.exp(rates * t)).real


@dataclass(frozen=True)
class PdeCoefficients:
    """Reaction ``R(f)`` and diffusion ``D(f)`` of ``f_t = R(f) + D(f) lap f``.

    ``D(f) = (eps^2 / 2) J_2 dF/dr(f, f)``.
    """

    dynamic: Dynamic
    params: CoordinationParams
    kappa: float
    J2: float
    eps: float

    def reaction(self, f):
        return homogeneous_F(self.dynamic, f, self.params, self.kappa)

    def diffusion(self, f):
        f = np.asarray(f, dtype=float)
        M = np.vectorize(lambda x: derivatives(self.dynamic, x, self.params, self.kappa)[0])(f)
        return 0.5 * self.eps ** 2 * self.J2 * M


def pde_coefficients(dynamic, params: CoordinationParams, kappa: float, J: Kernel,
                     eps: float) -> PdeCoefficients:
    return PdeCoefficients(_kind(dynamic), params, kappa, J.second_moment(), float(eps))


@dataclass
class PhaseRow:
    beta: float
    zeta: float
    p0: float
    max_growth: float
    argmax_mode: int


def phase_diagram(dynamic, betas, zetas, kappa: float, jhat, K: int | None = None) -> list:
    """``max_k lambda(k)`` at every homogeneous root for each ``(beta, zeta)``."""
    rows = []
    for beta in betas:
        for zeta in zetas:
            params = CoordinationParams(float(zeta), float(beta))
            for p0 in stationary_homogeneous(dynamic, params, kappa).roots:
                tab = dispersion(dynamic, float(p0), params, kappa, jhat, K)
                j = int(np.argmax(tab.lam))
                rows.append(PhaseRow(float(beta), float(zeta), float(p0), float(tab.lam[j]),
                                     int(tab.modes[j, 0])))
    return rows


def phase_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "zeta", "p0", "max_lambda", "argmax_k"])
        for r in rows:
            w.writerow([repr(r.beta), repr(r.zeta), repr(r.p0), repr(r.max_growth), r.argmax_mode])
