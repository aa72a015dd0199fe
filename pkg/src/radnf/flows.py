"""Floating-point flows near an invariant coordinate subspace ``L``.

The vector field is ``X(x) = A x + X1(x)`` where ``A`` annihilates ``L`` and the
polynomial perturbation ``X1`` vanishes on ``L`` to a declared finite order
(standing in for infinite-order vanishing).  Provided here:

* ``integrate_flow``: the flow ``U(t)``; the exact exponential when ``X1 = 0``.
* ``wminus_map``: the conjugacy ``W(x) = lim U(-T) U0(T) x``, with ``U0`` the
  linear flow, computed by horizon doubling.  It satisfies
  ``W o U0(s) = U(s) o W``, i.e. ``DW . X0 = X o W``.
* ``transport_solve``: the solution of ``V f + c f = g`` as an integral along
  trajectories.
* ``stable_splitting`` and ``limit_map_probe``.

Everything uses numpy/scipy (``expm``, ``solve_ivp`` with DOP853, real Schur).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, schur

from .errors import (DivergentIntegral, InternalError, InvalidFlowSpec, NoConvergence, NonHyperbolic,
                     NotAttracting, StepFailure)

HYPERBOLIC_MARGIN = 1e-9
SPLITTING_TOL = 1e-10
# the automatic initial step of DOP853 can overshoot features it never resolves
FIRST_STEP = 1e-3


def smooth_cutoff(r: float, radius: float) -> float:
    """C-infinity cutoff: 1 for ``r <= radius/2``, 0 for ``r >= radius``."""
    half = radius / 2
    if r <= half:
        return 1.0
    if r >= radius:
        return 0.0
    s = (r - half) / half
    a = math.exp(-1.0 / (1.0 - s))
    b = math.exp(-1.0 / s)
    return a / (a + b)


def _monomial_value(x, exps) -> float:
    v = 1.0
    for xi, e in zip(x, exps):
        if e:
            v *= xi ** e
    return v


@dataclass(frozen=True)
class ScalarField:
    """Polynomial ``sum coeff * x^exps``, optionally times ``smooth_cutoff(|x|, bump_radius)``."""

    terms: tuple[tuple[float, tuple[int, ...]], ...] = ()
    bump_radius: float | None = None

    def __call__(self, x) -> float:
        if not self.terms:
            return 0.0
        v = sum(c * _monomial_value(x, e) for c, e in self.terms)
        if self.bump_radius is not None:
            v *= smooth_cutoff(math.sqrt(sum(xi * xi for xi in x)), self.bump_radius)
        return v


@dataclass(frozen=True)
class FlowSpec:
    """``X = A x + X1``; ``perturbation`` holds ``(component, coeff, exps)`` triples.

    ``L`` lists the (0-based) coordinates spanning the invariant subspace.
    ``vanishing`` is the declared order of vanishing of ``X1`` on ``L``:
    every term must have degree ``>= vanishing`` in the coordinates off ``L``.
    """

    A: np.ndarray
    perturbation: tuple[tuple[int, float, tuple[int, ...]], ...] = ()
    L: tuple[int, ...] = ()
    vanishing: int = 0
    bump_radius: float | None = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise InvalidFlowSpec(f"A must be a nonempty square matrix, got shape {A.shape}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        k = A.shape[0]
        L = tuple(sorted(set(self.L)))
        if any(i < 0 or i >= k for i in L):
            raise InvalidFlowSpec(f"L indices {L} out of range for dimension {k}")
        object.__setattr__(self, "L", L)
        if L and np.any(A[:, list(L)] != 0):
            raise InvalidFlowSpec("A must annihilate L")
        terms = []
        off = [i for i in range(k) if i not in L]
        for comp, coeff, exps in self.perturbation:
            exps = tuple(int(e) for e in exps)
            if not 0 <= comp < k or len(exps) != k or min(exps) < 0:
                raise InvalidFlowSpec(f"bad perturbation term ({comp}, {coeff}, {exps})")
            order = sum(exps[i] for i in off)
            if order < self.vanishing:
                raise InvalidFlowSpec(
                    f"term {coeff} x^{exps} in component {comp} vanishes on L to order {order} < {self.vanishing}")
            terms.append((int(comp), float(coeff), exps))
        object.__setattr__(self, "perturbation", tuple(terms))
        w, V = np.linalg.eig(A)
        eig = (w, V, np.linalg.inv(V)) if np.linalg.cond(V) < 1e8 else None
        object.__setattr__(self, "_eig", eig)

    def propagator(self, t: float) -> np.ndarray:
        """``exp(t A)``; eigendecomposition when well conditioned, else ``expm``."""
        if self._eig is None:
            return expm(t * self.A)
        w, V, Vinv = self._eig
        return ((V * np.exp(t * w)) @ Vinv).real

    @property
    def k(self) -> int:
        return self.A.shape[0]

    @property
    def linear(self) -> bool:
        return not self.perturbation

    def linear_part(self) -> FlowSpec:
        return FlowSpec(self.A, (), self.L, 0)

    def perturbation_at(self, x) -> np.ndarray:
        out = np.zeros(self.k)
        for comp, coeff, exps in self.perturbation:
            out[comp] += coeff * _monomial_value(x, exps)
        if self.bump_radius is not None and self.perturbation:
            out *= smooth_cutoff(float(np.linalg.norm(x)), self.bump_radius)
        return out

    def field(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.A @ x + self.perturbation_at(x)

    def linear_field(self, x) -> np.ndarray:
        return self.A @ np.asarray(x, dtype=float)


@dataclass(frozen=True)
class FlowParams:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    T_max: float = 256.0
    T_start: float = 4.0
    fd_step: float | None = None
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.T_max > 0 and self.T_start > 0):
            raise ValueError("tolerances and horizons must be positive")

    def tightened(self, factor: float = 10.0) -> FlowParams:
        return FlowParams(self.abs_tol / factor, self.rel_tol / factor, self.T_max, self.T_start,
                          None if self.fd_step is None else self.fd_step, self.max_steps)

    def step_for_differences(self) -> float:
        # balances the h^4 truncation of 4th-order differences against tol / h noise
        return self.fd_step if self.fd_step is not None else self.abs_tol ** 0.2


def _scaled_atol(x0: np.ndarray, rel_tol: float) -> np.ndarray:
    scale = float(np.max(np.abs(x0))) if x0.size else 0.0
    return np.maximum(rel_tol * np.abs(x0), max(rel_tol * 1e-8 * scale, 1e-300))


def _integrate(spec: FlowSpec, x0: np.ndarray, t: float, params: FlowParams, atol=None) -> np.ndarray:
    if t == 0:
        return x0.copy()
    if spec.linear:
        return spec.propagator(t) @ x0
    atol = params.abs_tol if atol is None else atol
    sol = solve_ivp(lambda _s, y: spec.field(y), (0.0, t), x0, method="DOP853",
                    rtol=max(params.rel_tol, 1e-13), atol=atol, first_step=min(FIRST_STEP, abs(t)))
    if not sol.success:
        raise StepFailure(f"integration to t = {t} failed: {sol.message}")
    return sol.y[:, -1]


def integrate_flow(spec: FlowSpec, x, t: float, params: FlowParams | None = None) -> np.ndarray:
    """``U(t) x`` for the full field; ``t`` may be negative."""
    params = params or FlowParams()
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    x0 = np.array(x, dtype=float).reshape(spec.k)
    return _integrate(spec, x0, t, params, atol=_scaled_atol(x0, params.abs_tol))


@dataclass(frozen=True)
class Splitting:
    L_basis: np.ndarray
    stable_basis: np.ndarray
    unstable_basis: np.ndarray
    E_minus: np.ndarray
    E_plus: np.ndarray
    projectors: dict = field(repr=False)
    residual: float = 0.0


def _lift(A: np.ndarray, L: list[int], comp: list[int], V2: np.ndarray) -> np.ndarray:
    """Invariant subspace of ``A`` over the ``comp``-block invariant subspace ``V2``."""
    k = A.shape[0]
    out = np.zeros((k, V2.shape[1]))
    if V2.shape[1] == 0:
        return out
    A22 = A[np.ix_(comp, comp)]
    S = V2.T @ A22 @ V2
    out[comp, :] = V2
    if L:
        A12 = A[np.ix_(L, comp)]
        out[L, :] = A12 @ V2 @ np.linalg.inv(S)
    return out


def stable_splitting(A, L=()) -> Splitting:
    """Split ``R^k`` into ``L``, the decaying and the growing spectral subspaces.

    ``E_minus = L + stable`` and ``E_plus = L + unstable`` (``L`` lies in both);
    the projectors onto ``L``, stable and unstable parts sum to the identity.
    """
    A = np.array(A, dtype=float)
    k = A.shape[0]
    L = sorted(set(L))
    if L and np.any(A[:, L] != 0):
        raise InvalidFlowSpec("A must annihilate L")
    comp = [i for i in range(k) if i not in L]
    A22 = A[np.ix_(comp, comp)]
    eig = np.linalg.eigvals(A22) if comp else np.array([])
    if np.any(np.abs(eig.real) < HYPERBOLIC_MARGIN):
        raise NonHyperbolic(f"eigenvalues {eig} off L include |Re| < {HYPERBOLIC_MARGIN}")
    if comp:
        _, Zs, ns = schur(A22, output="real", sort="lhp")
        _, Zu, nu = schur(A22, output="real", sort="rhp")
        stable = _lift(A, L, comp, Zs[:, :ns])
        unstable = _lift(A, L, comp, Zu[:, :nu])
    else:
        stable = unstable = np.zeros((k, 0))
    Lb = np.eye(k)[:, L] if L else np.zeros((k, 0))
    B = np.hstack([Lb, stable, unstable])
    Binv = np.linalg.inv(B)
    sizes = [Lb.shape[1], stable.shape[1], unstable.shape[1]]
    proj = {}
    start = 0
    for name, size in zip(("L", "stable", "unstable"), sizes):
        proj[name] = B[:, start:start + size] @ Binv[start:start + size, :]
        start += size
    total = proj["L"] + proj["stable"] + proj["unstable"]
    scale = max(1.0, float(np.linalg.norm(A)))
    residual = max(float(np.linalg.norm(total - np.eye(k))),
                   max(float(np.linalg.norm(P @ A - A @ P)) / scale for P in proj.values()),
                   max(float(np.linalg.norm(P @ P - P)) for P in proj.values()))
    if residual >= SPLITTING_TOL:
        raise InternalError(f"splitting residual {residual:.3e} exceeds {SPLITTING_TOL}")
    return Splitting(L_basis=Lb, stable_basis=stable, unstable_basis=unstable,
                     E_minus=np.hstack([Lb, stable]), E_plus=np.hstack([Lb, unstable]),
                     projectors=proj, residual=residual)


def _require_attracting(spec: FlowSpec) -> None:
    comp = [i for i in range(spec.k) if i not in spec.L]
    if not comp:
        return
    eig = np.linalg.eigvals(spec.A[np.ix_(comp, comp)])
    if np.any(eig.real >= -HYPERBOLIC_MARGIN):
        raise NotAttracting(f"L is not attracting for the linear part (eigenvalues {eig} off L)")


@dataclass(frozen=True)
class LimitResult:
    value: np.ndarray
    cauchy: float
    horizon: float


def wminus_fixed(spec: FlowSpec, x, T: float, params: FlowParams) -> np.ndarray:
    """``U(-T) U0(T) x`` at a fixed horizon, in the interaction picture.

    With ``u(tau) = U(-tau) U0(T) x`` and ``w = U0(tau - T) u`` one has
    ``w(0) = x``, ``w(T) = U(-T) U0(T) x`` and
    ``w' = -exp((tau - T) A) X1(exp((T - tau) A) w)``.  Only the deviation
    ``delta = w - x`` is integrated, with absolute tolerance scaled by
    ``|X1(x)|``, so the error tracks the size of the perturbation.
    """
    x = np.asarray(x, dtype=float)
    if spec.linear:
        return x.copy()

    def rhs(tau, delta):
        return -spec.propagator(tau - T) @ spec.perturbation_at(spec.propagator(T - tau) @ (x + delta))

    scale = max(float(np.max(np.abs(spec.perturbation_at(x)))), 1e-12 * float(np.max(np.abs(x))), 1e-300)
    sol = solve_ivp(rhs, (0.0, T), np.zeros(spec.k), method="DOP853", rtol=max(params.rel_tol, 1e-13),
                    atol=params.rel_tol * scale, first_step=min(FIRST_STEP, T))
    if not sol.success:
        raise StepFailure(f"W- integration at horizon {T} failed: {sol.message}")
    return x + sol.y[:, -1]


def wminus_map(spec: FlowSpec, x, params: FlowParams | None = None) -> LimitResult:
    """``lim U(-T) U0(T) x`` by horizon doubling until successive values differ by < abs_tol."""
    params = params or FlowParams()
    _require_attracting(spec)
    x = np.array(x, dtype=float).reshape(spec.k)
    T = params.T_start
    prev = wminus_fixed(spec, x, T, params)
    while 2 * T <= params.T_max:
        T *= 2
        cur = wminus_fixed(spec, x, T, params)
        diff = float(np.max(np.abs(cur - prev)))
        if diff < params.abs_tol:
            return LimitResult(cur, diff, T)
        prev = cur
    raise NoConvergence(f"W- did not converge at x = {x.tolist()} by T = {T}")


def box_grid(box, points: int) -> list[np.ndarray]:
    axes = [np.linspace(lo, hi, points) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return [np.array(p) for p in zip(*(m.ravel() for m in mesh))]


_FD4 = ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))


def linearization_residual(spec: FlowSpec, box, params: FlowParams | None = None, points: int = 9) -> float:
    """Max over a grid of ``|DW(x) . X0(x) - X(W(x))|``.

    The directional derivative of ``W`` along ``X0(x) = A x`` is taken by a
    4th-order central difference in the curve parameter, every stencil point
    using the horizon at which ``W(x)`` converged.
    """
    params = params or FlowParams()
    h = params.step_for_differences()
    worst = 0.0
    for x in box_grid(box, points):
        base = wminus_map(spec, x, params)
        v = spec.linear_field(x)
        if not np.any(v):
            dW = np.zeros(spec.k)
        else:
            dW = sum(w * wminus_fixed(spec, x + j * h * v, base.horizon, params) for j, w in _FD4) / h
        worst = max(worst, float(np.max(np.abs(dW - spec.field(base.value)))))
    return worst


def _cutoff_segments(spec, g, sign, x, t0, t1, rtol, atol):
    """Split ``[t0, t1]`` where the trajectory crosses the cutoff radii ``R`` and ``R/2``.

    The cutoff is flat at both radii, so an adaptive step can cross them
    without the error estimate noticing; integrating piecewise avoids that.
    """
    if g.bump_radius is None:
        return [(t0, t1)]
    R = g.bump_radius

    def outer(_t, y):
        return float(np.linalg.norm(y)) - R

    def inner(_t, y):
        return float(np.linalg.norm(y)) - R / 2

    sol = solve_ivp(lambda _t, y: sign * spec.field(y), (t0, t1), x, method="DOP853", rtol=rtol, atol=atol,
                    events=[outer, inner], first_step=min(FIRST_STEP, t1 - t0))
    cuts = sorted(t for ev in sol.t_events for t in ev if t0 < t < t1)
    edges = [t0, *cuts, t1]
    return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]


def transport_solve(spec: FlowSpec, g: ScalarField, c: float, x, params: FlowParams | None = None,
                    direction: int = 1) -> float:
    """Solve ``V f + c f = g`` pointwise, ``V`` the field of ``spec``.

    ``direction=+1``: ``f(x) = -int_0^inf e^{ct} g(U(t) x) dt``;
    ``direction=-1``: ``f(x) = int_0^inf e^{-ct} g(U(-t) x) dt``.
    Both satisfy the same equation; pick the one whose integrand decays.
    """
    params = params or FlowParams()
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    x = np.array(x, dtype=float).reshape(spec.k)
    if not g.terms:
        return 0.0
    sign = float(direction)
    kdim = spec.k

    def rhs(t, y):
        dy = np.empty(kdim + 1)
        dy[:kdim] = sign * spec.field(y[:kdim])
        dy[kdim] = math.exp(sign * c * t) * g(y[:kdim])
        return dy

    rtol = max(params.rel_tol, 1e-13)
    state = np.append(x, 0.0)
    atol = np.append(_scaled_atol(x, params.rel_tol), params.abs_tol * 1e-2)
    t0, t1 = 0.0, params.T_start
    while t1 <= params.T_max:
        start = state[kdim]
        for a, b in _cutoff_segments(spec, g, sign, state[:kdim], t0, t1, rtol, atol[:kdim]):
            sol = solve_ivp(rhs, (a, b), state, method="DOP853", rtol=rtol, atol=atol,
                            first_step=min(FIRST_STEP, b - a))
            if not sol.success:
                raise StepFailure(f"transport integration failed: {sol.message}")
            state = sol.y[:, -1]
        if abs(state[kdim] - start) < params.abs_tol * 1e-2 and abs(rhs(t1, state)[kdim]) < params.abs_tol:
            return float(-sign * state[kdim]) + 0.0
        t0, t1 = t1, 2 * t1
    raise DivergentIntegral(f"transport integral at x = {x.tolist()} shows no decay by T = {params.T_max}")


def transport_residual(spec: FlowSpec, g: ScalarField, c: float, x, params: FlowParams | None = None,
                       direction: int = 1, h: float = 2e-3) -> float:
    """``|V f + c f - g|`` at ``x``, with ``V f`` differenced along the flow curve."""
    params = params or FlowParams()
    x = np.asarray(x, dtype=float)
    vals = {}
    for j, _ in _FD4:
        xj = integrate_flow(spec, x, j * h, params)
        vals[j] = transport_solve(spec, g, c, xj, params, direction)
    Vf = sum(w * vals[j] for j, w in _FD4) / h
    f = transport_solve(spec, g, c, x, params, direction)
    return abs(Vf + c * f - g(x))


def forward_limit(spec: FlowSpec, x, params: FlowParams | None = None) -> LimitResult:
    """``lim U(t) x`` by horizon doubling (each doubling continues the previous trajectory)."""
    params = params or FlowParams()
    x = np.array(x, dtype=float).reshape(spec.k)
    T = params.T_start
    cur = integrate_flow(spec, x, T, params)
    while 2 * T <= params.T_max:
        nxt = integrate_flow(spec, cur, T, params)
        T *= 2
        diff = float(np.max(np.abs(nxt - cur)))
        cur = nxt
        if diff < params.abs_tol:
            return LimitResult(cur, diff, T)
    raise NoConvergence(f"forward limit did not converge at x = {x.tolist()} by T = {T}")


@dataclass(frozen=True)
class ProbeGrid:
    """Base points on ``L`` and a direction transverse to it."""

    base_points: tuple[tuple[float, ...], ...]
    direction: tuple[float, ...]
    h0: float = 0.05
    refinements: int = 3


@dataclass(frozen=True)
class ProbeReport:
    stable: bool
    drift: float
    jump: float
    derivatives: list = field(repr=False)
    nonconvergent_points: int = 0
    tolerance: float = 1e-4


def limit_map_probe(spec: FlowSpec, grid: ProbeGrid, params: FlowParams | None = None,
                    tolerance: float = 1e-4) -> ProbeReport:
    """Estimate the transverse derivative of ``x -> lim U(t) x`` at points of ``L``.

    At each mesh ``h0 / 2^j`` the central difference and the two second-order
    one-sided differences are formed.  ``drift`` is the largest change between
    consecutive refinements, ``jump`` the largest one-sided mismatch on the
    finest mesh.  Points off ``L`` whose limit does not converge are counted and
    make the report unstable; a base point that fails raises ``NoConvergence``.
    """
    params = params or FlowParams()
    d = np.asarray(grid.direction, dtype=float)
    drift = jump = 0.0
    bad = 0
    derivs = []
    for p in grid.base_points:
        p = np.asarray(p, dtype=float)
        phi0 = forward_limit(spec, p, params).value
        per_mesh = []
        for j in range(grid.refinements):
            h = grid.h0 / 2 ** j
            vals = {}
            for s in (-2, -1, 1, 2):
                try:
                    vals[s] = forward_limit(spec, p + s * h * d, params).value
                except NoConvergence:
                    vals[s] = None
            if any(v is None for v in vals.values()):
                bad += sum(v is None for v in vals.values())
                per_mesh.append(None)
                continue
            central = (vals[1] - vals[-1]) / (2 * h)
            right = (-3 * phi0 + 4 * vals[1] - vals[2]) / (2 * h)
            left = (3 * phi0 - 4 * vals[-1] + vals[-2]) / (2 * h)
            per_mesh.append((central, right, left))
        derivs.append(per_mesh)
        ok = [m for m in per_mesh if m is not None]
        for a, b in zip(ok, ok[1:]):
            drift = max(drift, *(float(np.max(np.abs(u - v))) for u, v in zip(a, b)))
        if ok:
            jump = max(jump, float(np.max(np.abs(ok[-1][1] - ok[-1][2]))))
    stable = bad == 0 and drift < tolerance and jump < tolerance
    return ProbeReport(stable=stable, drift=drift, jump=jump, derivatives=derivs, nonconvergent_points=bad,
                       tolerance=tolerance)


# standard examples

def nelson_1d(power: int = 9) -> FlowSpec:
    return FlowSpec(np.array([[-1.0]]), ((0, -1.0, (power,)),), (), power)


def nelson_2d() -> FlowSpec:
    return FlowSpec(-np.eye(2), ((0, 20.0, (0, 8)), (1, -20.0, (4, 4))), (), 8)


def order10_2d() -> FlowSpec:
    return FlowSpec(np.diag([0.0, -1.0]), ((0, 1.0, (0, 10)), (1, 1.0, (1, 10))), (0,), 10)


def shear_2d() -> FlowSpec:
    return FlowSpec(np.array([[0.0, 1.0], [0.0, -1.0]]), (), (0,), 0)


def negative_control_2d() -> FlowSpec:
    """Order-1 perturbation cancelling the normal contraction: ``x2' = -x2^3``, ``x1' = x2^2``."""
    return FlowSpec(np.diag([0.0, -1.0]), ((0, 1.0, (0, 2)), (1, 1.0, (0, 1)), (1, -1.0, (0, 3))), (0,), 1)


def transport_1d() -> tuple[FlowSpec, ScalarField, float]:
    return FlowSpec(np.array([[-1.0]])), ScalarField(((1.0, (4,)),), 1.0), 1.0


def transport_2d() -> tuple[FlowSpec, ScalarField, float]:
    return FlowSpec(np.diag([0.0, -1.0]), (), (0,)), ScalarField(((1.0, (0, 8)),), 1.0), 1.0
