"""Explicit-space minimum enclosing ball primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

# d must exceed R*(1+tol) to count as outside. The literal "d >= R" would
# register no-op updates at d == R and inflate the core count.
DEFAULT_UPDATE_TOL = 1e-12


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.array(self.center, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(center)):
            raise ValueError("ball center must be finite")
        if not math.isfinite(self.radius) or self.radius < 0:
            raise ValueError(f"ball radius must be finite and >= 0, got {self.radius}")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, p, rtol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return float(np.linalg.norm(p - self.center)) <= self.radius * (1 + rtol) + 1e-300

    def __eq__(self, other):
        if not isinstance(other, Ball):
            return NotImplemented
        return self.radius == other.radius and np.array_equal(self.center, other.center)

    def __hash__(self):
        return hash((self.radius, self.center.tobytes()))


@dataclass(frozen=True)
class MebSolverConfig:
    merge_tolerance: float = 1e-9
    max_iterations: int = 200_000
    epsilon_coreset: float = 1e-3

    def __post_init__(self):
        if not 0 < self.merge_tolerance < 1:
            raise ValueError("merge_tolerance must lie in (0, 1)")
        if not 0 < self.epsilon_coreset < 1:
            raise ValueError("epsilon_coreset must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


class MergeSolverError(RuntimeError):
    """The enclosing-ball solver stopped before reaching its tolerance.

    ``best`` is the last iterate (it always encloses every input) and
    ``lower_bound`` a certified lower bound on the optimal radius.
    """

    def __init__(self, message, best: Ball, lower_bound: float, iterations: int):
        super().__init__(message)
        self.best = best
        self.lower_bound = lower_bound
        self.iterations = iterations


def _as_points(points, dim=None) -> np.ndarray:
    P = np.array(points, dtype=np.float64)
    if P.ndim == 1:
        P = P.reshape(1, -1) if P.size else P.reshape(0, dim or 0)
    if P.ndim != 2:
        raise ValueError("points must form a 2-D array")
    if dim is not None and P.shape[0] and P.shape[1] != dim:
        raise ValueError(f"dimension mismatch: points have dim {P.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(P)):
        raise ValueError("points must be finite")
    return P


def stream_update(ball: Ball, p, tol: float = DEFAULT_UPDATE_TOL) -> tuple[Ball, bool]:
    """Grow ``ball`` just enough to cover ``p``.

    The new center moves toward ``p`` by half the gap between ``p`` and the
    old sphere, and the radius grows by the same amount, so the old ball is
    internally tangent to the new one.
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    if p.shape[0] != ball.dim:
        raise ValueError(f"dimension mismatch: point has dim {p.shape[0]}, ball has {ball.dim}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point must be finite")
    diff = p - ball.center
    d = math.sqrt(float(diff @ diff))
    if d <= ball.radius * (1 + tol):
        return ball, False
    delta = 0.5 * (d - ball.radius)
    return Ball(ball.center + (delta / d) * diff, ball.radius + delta), True


def fold_stream(points, ball: Ball | None = None, tol: float = DEFAULT_UPDATE_TOL) -> tuple[Ball, int]:
    """Run ``stream_update`` over ``points`` in order.

    Starts from the first point (radius 0) unless ``ball`` is given.
    Returns the final ball and the number of updates.
    """
    P = _as_points(points, None if ball is None else ball.dim)
    if ball is None:
        if P.shape[0] == 0:
            raise ValueError("empty stream")
        center, radius, P = P[0].copy(), 0.0, P[1:]
    else:
        center, radius = ball.center.copy(), ball.radius
    radius, n_up = _kernels.fold_ball(np.ascontiguousarray(P), center, radius, tol)
    return Ball(center, radius), int(n_up)


# Frank-Wolfe gaps at which an active-set solve of the optimality
# conditions is attempted; its result is kept only once certified.
_POLISH_GAPS = (1e-3, 1e-6)


def _solve_enclosing(A, sig2, r0, tol, max_iter, fixed_step=False):
    """Enclosing ball of the objects described in ``_kernels.fw_enclose``.

    Returns ``(gam, upper, lower, iterations, converged, touched)``.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    sig2 = np.ascontiguousarray(sig2, dtype=np.float64)
    n = A.shape[0]
    gam = np.zeros(n)
    lam = np.zeros(n)
    touched = np.zeros(n, dtype=np.bool_)
    stages = [] if fixed_step else [g for g in _POLISH_GAPS if g > tol]
    total = 0
    for gap in stages + [tol]:
        ub, lb, it, ok, mu = _kernels.fw_enclose(A, sig2, float(r0), float(gap), int(max_iter),
                                                 bool(fixed_step), gam, lam, touched)
        total += int(it)
        if not ok or gap <= tol:
            break
        pol = _polish(A, sig2, float(r0), lam, float(mu), tol)
        if pol is not None:
            gam, ub, lb = pol
            touched |= gam != 0.0
            break
    return gam, float(ub), float(lb), total, bool(ok), touched


def _gram(A, sig2, idx):
    """Gram matrix of objects ``idx`` after translating object 0 to the origin."""
    B = A[idx] - A[0]
    G = B @ B.T + sig2[0]
    G[np.diag_indices_from(G)] += sig2[idx]
    zero = idx == 0
    G[zero, :] = 0.0
    G[:, zero] = 0.0
    return G


def _distances(A, sig2, gam):
    w = gam @ A
    diff = A - w
    dsq = np.einsum("ij,ij->i", diff, diff) + sig2 @ (gam * gam) - 2.0 * sig2 * gam + sig2
    return np.sqrt(np.maximum(dsq, 0.0))


def _polish(A, sig2, r0, lam, mu, tol, max_rounds=None):
    """Solve the optimality conditions on the active set and certify the result.

    The active set starts from the Frank-Wolfe weights; atoms with negative
    multipliers are dropped and the farthest object is added until the
    primal radius matches the dual bound ``sqrt(phi)`` to ``tol``. Returns
    ``(gam, upper, lower)`` or None when no certified solution was found.
    """
    n = A.shape[0]
    ball = r0 > 0.0
    S = set(np.flatnonzero(lam > 0.0).tolist())
    S.discard(0)
    use_ball = ball and mu > 0.0
    if not ball and mu > 0.0:
        S.add(0)
    rounds = max_rounds if max_rounds is not None else 2 * n + 8
    for _ in range(rounds):
        idx = np.array(sorted(S), dtype=np.int64)
        sol = _kkt_ball(A, sig2, r0, idx) if use_ball else _kkt_points(A, sig2, idx)
        if sol is None:
            if not use_ball:
                return None
            # degenerate with the ball touching: try the points alone
            use_ball = False
            continue
        gam, weights, mu_b, phi = sol
        neg = np.flatnonzero(weights < 0.0)
        if mu_b < 0.0 or neg.size:
            # drop the most negative multiplier
            if mu_b < 0.0 and (not neg.size or mu_b <= weights[neg].min()):
                use_ball = False
            else:
                S.discard(int(idx[neg[np.argmin(weights[neg])]]))
            if not S and not use_ball:
                return None
            continue
        d = _distances(A, sig2, gam)
        far = d.copy()
        if ball:
            far[0] = d[0] + r0
        j = int(np.argmax(far))
        ub = float(far[j])
        lb = math.sqrt(max(phi, 0.0))
        if ub <= (1.0 + tol) * lb:
            return gam, ub, lb
        if j == 0 and ball:
            if use_ball:
                return None
            use_ball = True
        elif j in S:
            return None
        else:
            S.add(j)
    return None


def _kkt_ball(A, sig2, r0, idx):
    """Center equidistant (radius t) from points ``idx`` and touching the ball from outside.

    With the ball center at the origin and ``u = t - r`` the conditions read
    ``2 G z = diag(G) - r^2 - 2 r u`` and ``z' G z = u^2`` for the center
    ``sum z_i q_i``. Eliminating ``z`` leaves a quadratic in ``u`` whose
    coefficients stay on the scale of ``u``, so a ball that is nearly tight
    does not lose precision.
    """
    n = A.shape[0]
    k = idx.size
    gam = np.zeros(n)
    if k == 0:
        gam[0] = 1.0
        return gam, np.zeros(0), 1.0, r0 * r0
    G = _gram(A, sig2, idx)
    nq = np.sqrt(np.diag(G))
    try:
        a = 0.5 * np.linalg.solve(G, (nq - r0) * (nq + r0))
        b = r0 * np.linalg.solve(G, np.ones(k))
    except np.linalg.LinAlgError:
        return None
    Gb = G @ b
    c2 = float(b @ Gb) - 1.0
    c1 = -2.0 * float(a @ Gb)
    c0 = float(a @ G @ a)
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return None
    h = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
    roots = []
    if h != 0.0:
        roots.append(c0 / h)
        if c2 != 0.0:
            roots.append(h / c2)
    cands = []
    for u in roots:
        if not u > 0.0:
            continue
        z = a - u * b
        nc = math.sqrt(max(float(z @ G @ z), 0.0))
        if nc == 0.0:
            continue
        rho = r0 / nc
        zs = float(z.sum())
        mu = (1.0 - zs) / (1.0 + rho * zs)
        lam = z * (1.0 + mu * rho)
        # dual value with the ball atom at -rho * center; the mean of all
        # atoms is the center itself
        phi = float(lam @ np.diag(G)) + mu * r0 * r0 - float(z @ G @ z)
        g = gam.copy()
        g[idx] = z
        g[0] = 1.0 - zs
        cands.append((min(mu, lam.min()) < 0.0, u, (g, lam, mu, phi)))
    if not cands:
        return None
    # prefer a root with a feasible dual, then the smaller radius
    return min(cands, key=lambda c: (c[0], c[1]))[2]


def _kkt_points(A, sig2, idx):
    """Circumcenter of objects ``idx`` within their affine hull."""
    n = A.shape[0]
    k = idx.size
    if k == 0:
        return None
    G = _gram(A, sig2, idx)
    if k == 1:
        x = np.zeros(0)
    else:
        # vectors relative to the first object of the set
        U = G[1:, 1:] - G[1:, :1] - G[:1, 1:] + G[0, 0]
        try:
            x = np.linalg.solve(2.0 * U, np.diag(U))
        except np.linalg.LinAlgError:
            return None
    bary = np.concatenate([[1.0 - x.sum()], x])
    phi = float(bary @ np.diag(G)) - float(bary @ G @ bary)
    gam = np.zeros(n)
    gam[idx] = bary
    return gam, bary, 0.0, phi


def enclose_ball_and_points_affine(ball: Ball, points, cfg: MebSolverConfig | None = None):
    """Like ``enclose_ball_and_points`` but also returns affine coefficients.

    The coefficients ``beta`` satisfy ``center' = beta[0]*center +
    sum_i beta[i+1]*points[i]`` and sum to one.
    """
    cfg = cfg or MebSolverConfig()
    P = _as_points(points, ball.dim)
    L = P.shape[0]
    if L == 0:
        return ball, np.ones(1)
    c0 = ball.center
    if L == 1:
        # one point: the closed-form update is the exact optimum
        diff = P[0] - c0
        d = math.sqrt(float(diff @ diff))
        if d <= ball.radius:
            return ball, np.array([1.0, 0.0])
        s = 0.5 * (1.0 - ball.radius / d)
        return Ball(c0 + s * diff, ball.radius + 0.5 * (d - ball.radius)), np.array([1.0 - s, s])

    # translate so the ball sits at the origin; the solver is translation
    # invariant but its dual energy is not cancellation-free
    A = np.vstack([np.zeros_like(c0), P - c0])
    gam, ub, lb, it, ok, _ = _solve_enclosing(A, np.zeros(L + 1), ball.radius,
                                              cfg.merge_tolerance, cfg.max_iterations)
    center = c0 + gam[1:] @ A[1:]
    # report the radius that actually encloses everything at this center
    radius = max(float(np.linalg.norm(center - c0)) + ball.radius,
                 float(np.sqrt(((P - center) ** 2).sum(axis=1)).max()))
    out = Ball(center, radius)
    if not ok:
        raise MergeSolverError(
            f"enclosing-ball solver stopped after {it} iterations with gap "
            f"{ub / lb - 1 if lb > 0 else math.inf:.3e} > {cfg.merge_tolerance:.1e}",
            out, lb, it)
    return out, gam


def enclose_ball_and_points(ball: Ball, points, cfg: MebSolverConfig | None = None) -> Ball:
    """Smallest ball containing ``ball`` and every point, to ``cfg.merge_tolerance``.

    Solves ``min_c max(|c - center| + radius, max_i |c - p_i|)``.
    """
    return enclose_ball_and_points_affine(ball, points, cfg)[0]


# ---------------------------------------------------------------------------
# Oracles

def _circumball(S: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball with every row of ``S`` on its boundary."""
    p0 = S[0]
    if S.shape[0] == 1:
        return p0.copy(), 0.0
    A = S[1:] - p0
    G = A @ A.T
    x = np.linalg.lstsq(2.0 * G, np.diag(G).copy(), rcond=None)[0]
    c = p0 + x @ A
    return c, float(np.sqrt(((S - c) ** 2).sum(axis=1).max()))


def _mtf(P, order, n, support, dim):
    if support:
        c, r = _circumball(P[support])
    else:
        c, r = None, -1.0
    if len(support) == dim + 1:
        return c, r
    i = 0
    while i < n:
        idx = order[i]
        if c is None or float(((P[idx] - c) ** 2).sum()) > r * r * (1 + 1e-12):
            c, r = _mtf(P, order, i, support + [idx], dim)
            order.pop(i)
            order.insert(0, idx)
        i += 1
    return c, r


def exact_meb(points, seed: int = 0) -> Ball:
    """Exact minimum enclosing ball by Welzl's move-to-front recursion.

    Intended for small dimension; the recursion depth is bounded by
    ``dim + 2``. The input is shuffled with ``seed`` for expected-linear time.
    """
    P = _as_points(points)
    if P.shape[0] == 0:
        raise ValueError("exact_meb needs at least one point")
    # solve in coordinates relative to the first point for conditioning
    origin = P[0].copy()
    Q = P - origin
    order = [int(i) for i in np.random.default_rng(seed).permutation(Q.shape[0])]
    c, _ = _mtf(Q, order, Q.shape[0], [], Q.shape[1])
    r = float(np.sqrt(((Q - c) ** 2).sum(axis=1).max()))
    return Ball(c + origin, r)


def meb_core_set(points, epsilon: float, method: str = "away-step",
                 max_iterations: int | None = None) -> tuple[Ball, list[int]]:
    """(1+epsilon)-approximate MEB from a small core set.

    Starts at the first point and repeatedly moves the center toward the
    farthest point. ``method="badoiu-clarkson"`` uses the classical step
    ``1/(t+1)``; the default adds exact line search and away steps, which
    converge linearly. Both stop once the farthest distance is within
    ``1+epsilon`` of a certified lower bound, or after ``ceil(1/epsilon**2)``
    iterations.

    Returns the ball and the sorted indices of points ever selected as
    farthest (plus the starting point).
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if method not in ("away-step", "badoiu-clarkson"):
        raise ValueError(f"unknown method {method!r}")
    P = _as_points(points)
    if P.shape[0] == 0:
        raise ValueError("meb_core_set needs at least one point")
    if max_iterations is None:
        max_iterations = math.ceil(1.0 / epsilon**2)
    origin = P[0].copy()
    A = P - origin
    gam, ub, lb, it, ok, touched = _solve_enclosing(
        A, np.zeros(A.shape[0]), 0.0, epsilon, max_iterations,
        fixed_step=(method == "badoiu-clarkson"))
    center = gam @ A
    radius = float(np.sqrt(((A - center) ** 2).sum(axis=1).max()))
    return Ball(center + origin, radius), [int(i) for i in np.flatnonzero(touched)]


def meb_bounds(points, tol: float = 1e-10, max_iterations: int = 1_000_000):
    """Certified ``(lower, upper)`` bracket on the optimal enclosing radius."""
    P = _as_points(points)
    A = P - P[0]
    _, ub, lb, _, _, _ = _solve_enclosing(A, np.zeros(A.shape[0]), 0.0, tol, max_iterations)
    return lb, ub


# ---------------------------------------------------------------------------
# Lower-bound instance

def adversarial_stream(n: int, seed: int = 0, singleton_position: str = "last",
                       jitter: float = 1e-6) -> np.ndarray:
    """Stream that drives the one-point update to ratio (1+sqrt 2)/2.

    Two clouds of ``(n-1)/2`` points sit at (0, 1) and (0, -1) and one
    point at (1+sqrt 2, 0). The optimal ball has center (1, 0) and radius
    sqrt 2, so the cloud points are jittered along that circle: the optimum
    stays exactly sqrt 2 while the instance is not degenerate. Each cloud
    leads with its exact anchor and the clouds alternate.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be odd and >= 3, got {n}")
    if singleton_position not in ("first", "last", "random"):
        raise ValueError(f"singleton_position must be first, last or random")
    if not 0 <= jitter <= 1e-6:
        raise ValueError("jitter must lie in [0, 1e-6]")
    rng = np.random.default_rng(seed)
    half = (n - 1) // 2
    rad = math.sqrt(2.0)
    # arc offsets; an arc of length t moves the point by at most t
    offsets = rng.uniform(-jitter, jitter, size=(2, half)) / rad
    offsets[:, 0] = 0.0
    up = 0.75 * math.pi + offsets[0]
    down = -0.75 * math.pi + offsets[1]
    top = np.column_stack([1.0 + rad * np.cos(up), rad * np.sin(up)])
    bottom = np.column_stack([1.0 + rad * np.cos(down), rad * np.sin(down)])
    top[0] = (0.0, 1.0)
    bottom[0] = (0.0, -1.0)
    clouds = np.empty((2 * half, 2))
    clouds[0::2] = top
    clouds[1::2] = bottom
    singleton = np.array([[1.0 + rad, 0.0]])
    if singleton_position == "first":
        pos = 0
    elif singleton_position == "last":
        pos = 2 * half
    else:
        pos = int(rng.integers(0, 2 * half + 1))
    return np.vstack([clouds[:pos], singleton, clouds[pos:]])
