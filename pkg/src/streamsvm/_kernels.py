"""Hot inner loops.

Everything here operates on float64 ndarrays and scalars only. The code
is valid both under ``numba.njit`` and as plain numpy (see ``_accel``).
State that persists across chunks is passed in small mutable arrays.
"""

import math

import numpy as np

from ._accel import jit

KERNEL_LINEAR = 0
KERNEL_RBF = 1
KERNEL_NORMALIZED_DOT = 2


@jit
def fold_ball(points, center, radius, tol):
    """Fold the one-point ball update over ``points``; ``center`` is updated in place."""
    n_updates = 0
    for i in range(points.shape[0]):
        diff = points[i] - center
        d = math.sqrt(np.dot(diff, diff))
        if d > radius * (1.0 + tol):
            delta = 0.5 * (d - radius)
            center += (delta / d) * diff
            radius += delta
            n_updates += 1
    return radius, n_updates


@jit
def l1_fold(X, y, w, state, inv_c, slack_unit, tol, start, tr_pos, tr_d, tr_rb):
    """Closed-form streaming pass over one block of examples.

    ``state`` holds ``[R, s2, M]``. Returns the number of updates and writes
    one trace record (stream position, distance, radius before) per update.
    """
    R = state[0]
    s2 = state[1]
    M = state[2]
    n_up = 0
    for i in range(X.shape[0]):
        yi = y[i]
        diff = w - yi * X[i]
        d = math.sqrt(np.dot(diff, diff) + s2 + inv_c)
        if d > R * (1.0 + tol):
            s = 0.5 * (1.0 - R / d)
            w -= s * diff
            s2 = s2 * (1.0 - s) ** 2 + s * s * slack_unit
            tr_pos[n_up] = start + i
            tr_d[n_up] = d
            tr_rb[n_up] = R
            R = R + 0.5 * (d - R)
            M += 1.0
            n_up += 1
    state[0] = R
    state[1] = s2
    state[2] = M
    return n_up


@jit
def scan_outside(X, y, begin, w, s2, inv_c, R, tol, max_count, out_pos, out_d):
    """Find up to ``max_count`` rows from ``begin`` lying outside the fixed ball.

    Returns ``(count, next_row)``; scanning stops right after the row that
    fills the quota.
    """
    count = 0
    i = begin
    n = X.shape[0]
    while i < n and count < max_count:
        diff = w - y[i] * X[i]
        d = math.sqrt(np.dot(diff, diff) + s2 + inv_c)
        if d > R * (1.0 + tol):
            out_pos[count] = i
            out_d[count] = d
            count += 1
        i += 1
    return count, i


@jit
def _sq_norm(coef, A, sig2):
    f = np.dot(coef, A)
    return np.dot(f, f) + np.sum(sig2 * coef * coef)


@jit
def fw_enclose(A, sig2, r0, tol, max_iter, fixed_step, gam, lam, touched):
    """Enclosing ball of a ball and points, by Frank-Wolfe with away steps.

    Object ``i`` is the vector ``[A[i]; sqrt(sig2[i]) * e_i]``: a shared
    feature part plus a private orthogonal axis. Object 0 is a ball of
    radius ``r0`` (a plain point when ``r0 == 0``), the rest are points.

    The dual keeps convex weights ``lam`` on points and ``mu`` on the ball;
    the ball's contribution is a point on its sphere in the direction that
    maximises the dual, which has a closed form given the other weights.
    ``sqrt(dual)`` is a lower bound on the optimal radius and the farthest
    distance from the current center is an upper bound; iteration stops
    once they agree to ``tol``.

    On return ``gam`` holds affine coefficients of the center over the
    objects and ``lam`` the dual point weights. Returns
    ``(upper, lower, iterations, converged, ball_weight)``.
    """
    n = A.shape[0]
    en = np.sum(A * A, axis=1) + sig2
    lam[:] = 0.0
    mu = 1.0
    touched[0] = True
    it = 0
    ub = 0.0
    lb = 0.0
    converged = False
    while True:
        bco = lam.copy()
        bco[0] += mu
        dco = -bco
        dco[0] += 1.0
        dn = math.sqrt(max(_sq_norm(dco, A, sig2), 0.0))
        if r0 * mu >= dn:
            if r0 > 0.0:
                nu = dco / r0
            else:
                nu = np.zeros(n)
        else:
            nu = (mu / dn) * dco
        gam[:] = bco + r0 * nu
        w = np.dot(gam, A)
        q = np.sum(sig2 * gam * gam)
        p0v = np.dot(A[0], np.dot(nu, A)) + sig2[0] * nu[0]
        energy = np.dot(lam, en) + mu * (en[0] + r0 * r0) + 2.0 * r0 * p0v
        diff = A - w
        dsq = np.sum(diff * diff, axis=1) + q - 2.0 * sig2 * gam + sig2
        d = np.sqrt(np.maximum(dsq, 0.0))
        phi = energy - (np.dot(w, w) + q)
        lb = math.sqrt(max(phi, 0.0))
        far = d.copy()
        far[0] = d[0] + r0
        j = np.argmax(far)
        ub = far[j]
        if ub <= (1.0 + tol) * lb:
            converged = True
            break
        if it >= max_iter:
            break
        fw_gain = ub * ub - phi

        if fixed_step:
            alpha = 1.0 / (it + 2.0)
            lam *= 1.0 - alpha
            mu *= 1.0 - alpha
            if j == 0:
                mu += alpha
            else:
                lam[j] += alpha
            touched[j] = True
            it += 1
            continue

        # away candidate: nearest point carrying weight, or the ball's atom
        cand = np.where(lam > 0.0, d, np.inf)
        cand[0] = np.inf
        a = np.argmin(cand)
        best2 = cand[a] * cand[a]
        geo = best2
        if mu > 0.0:
            vdir = nu / mu
            vn2 = _sq_norm(vdir, A, sig2)
            co = -gam + r0 * vdir
            co[0] += 1.0
            dist2 = _sq_norm(co, A, sig2)
            ab2 = dist2 + r0 * r0 * (1.0 - vn2)
            if ab2 < best2:
                a = 0
                best2 = ab2
                geo = dist2
        wa = mu if a == 0 else lam[a]
        aw_gain = -1.0
        if best2 < np.inf and wa < 1.0 - 1e-15:
            aw_gain = phi - best2

        if fw_gain <= 0.0 and aw_gain <= 0.0:
            # rounding floor reached before the requested gap
            break
        if fw_gain >= aw_gain:
            alpha = min(1.0, fw_gain / (2.0 * ub * ub))
            lam *= 1.0 - alpha
            mu *= 1.0 - alpha
            if j == 0:
                mu += alpha
            else:
                lam[j] += alpha
            touched[j] = True
        else:
            amax = wa / (1.0 - wa)
            alpha = amax
            if geo > 0.0:
                alpha = min(amax, aw_gain / (2.0 * geo))
            lam *= 1.0 + alpha
            mu *= 1.0 + alpha
            if a == 0:
                mu -= alpha
                if alpha == amax:
                    mu = 0.0
            else:
                lam[a] -= alpha
                if alpha == amax:
                    lam[a] = 0.0
        it += 1
    return ub, lb, it, converged, mu


@jit
def kernel_row(sv, sv_sq, x, xx, kind, gamma):
    """Kernel values between each row of ``sv`` and ``x``."""
    dots = np.dot(sv, x)
    if kind == KERNEL_LINEAR:
        return dots
    if kind == KERNEL_RBF:
        return np.exp(-gamma * np.maximum(sv_sq + xx - 2.0 * dots, 0.0))
    denom = np.sqrt(sv_sq * xx)
    return np.where(denom > 0.0, dots / np.maximum(denom, 1e-300), 0.0)


@jit
def self_kernel(xx, kind):
    if kind == KERNEL_LINEAR:
        return xx
    if kind == KERNEL_RBF:
        return 1.0
    return 1.0 if xx > 0.0 else 0.0


@jit
def kernel_fold(X, y, sv, sv_sq, alpha, state, inv_c, slack_unit, tol, kind, gamma,
                start, tr_pos, tr_d, tr_rb):
    """Kernelized streaming pass over one block.

    ``state`` holds ``[R, s2, n_sv, wn2]`` where ``wn2`` is the squared norm
    of the center's feature part. ``sv``/``alpha`` need room for one more
    support vector per row of ``X``.
    """
    R = state[0]
    s2 = state[1]
    m = int(state[2])
    wn2 = state[3]
    n_up = 0
    for i in range(X.shape[0]):
        x = X[i]
        yi = y[i]
        xx = np.dot(x, x)
        f = np.dot(alpha[:m], kernel_row(sv[:m], sv_sq[:m], x, xx, kind, gamma))
        kxx = self_kernel(xx, kind)
        d = math.sqrt(max(wn2 + kxx - 2.0 * yi * f + s2 + inv_c, 0.0))
        if d > R * (1.0 + tol):
            s = 0.5 * (1.0 - R / d)
            wn2 = (1.0 - s) ** 2 * wn2 + 2.0 * (1.0 - s) * s * yi * f + s * s * kxx
            alpha[:m] *= 1.0 - s
            alpha[m] = s * yi
            sv[m] = x
            sv_sq[m] = xx
            m += 1
            s2 = s2 * (1.0 - s) ** 2 + s * s * slack_unit
            tr_pos[n_up] = start + i
            tr_d[n_up] = d
            tr_rb[n_up] = R
            R = R + 0.5 * (d - R)
            n_up += 1
    state[0] = R
    state[1] = s2
    state[2] = m
    state[3] = wn2
    return n_up


@jit
def perceptron_fold(X, y, w):
    mistakes = 0
    for i in range(X.shape[0]):
        if y[i] * np.dot(w, X[i]) <= 0.0:
            w += y[i] * X[i]
            mistakes += 1
    return mistakes


@jit
def sgd_fold(X, y, w, lam, block, t, project):
    """Block subgradient sweep; returns the updated step counter."""
    n = X.shape[0]
    radius = 1.0 / math.sqrt(lam)
    b = 0
    while b < n:
        e = min(b + block, n)
        rows = X[b:e]
        yb = y[b:e]
        viol = np.where(yb * np.dot(rows, w) < 1.0, yb, 0.0)
        t += 1
        eta = 1.0 / (lam * t)
        g = np.dot(viol, rows)
        w *= 1.0 - eta * lam
        w += (eta / (e - b)) * g
        if project:
            nrm = math.sqrt(np.dot(w, w))
            if nrm > radius:
                w *= radius / nrm
        b = e
    return t
