"""Compiled kernels for the per-step update, epoch replay, and L1 projections.

Everything here is pure array arithmetic so that the live step and the
epoch-replay loop share one code path; a replay at the current dimension
reproduces the incremental state bit for bit.
"""
import math

import numpy as np
from numba import njit

_SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def normal_cdf(z):
    return 0.5 * (1.0 + math.erf(z / _SQRT2))


@njit(cache=True)
def _project_l1_into(x, d, out, scratch):
    """out = Euclidean projection of x onto the L1 ball of radius d.

    scratch must have x's length; both buffers may be reused across calls.
    """
    n = x.shape[0]
    s = 0.0
    for i in range(n):
        s += abs(x[i])
    if s <= d:
        for i in range(n):
            out[i] = x[i]
        return
    for i in range(n):
        scratch[i] = abs(x[i])
    scratch[:n].sort()
    css = 0.0
    tau = 0.0
    for j in range(n):
        uj = scratch[n - 1 - j]
        css += uj
        t = (css - d) / (j + 1.0)
        if uj > t:
            tau = t
    for i in range(n):
        v = abs(x[i]) - tau
        if v <= 0.0:
            out[i] = 0.0
        else:
            out[i] = v if x[i] > 0.0 else -v


@njit(cache=True)
def project_l1(x, d):
    """Euclidean projection onto the closed L1 ball of radius d (sort-based)."""
    n = x.shape[0]
    out = np.empty(n)
    scratch = np.empty(n)
    _project_l1_into(x, d, out, scratch)
    return out


@njit(cache=True)
def row_sum_bound(m):
    """Max absolute row sum; upper-bounds lambda_max for symmetric m."""
    n = m.shape[0]
    best = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += abs(m[i, j])
        if acc > best:
            best = acc
    return best


@njit(cache=True)
def _soft_level(z, d, tau0):
    """Threshold tau >= 0 with sum_i max(|z_i| - tau, 0) = d.

    Caller guarantees sum |z_i| > d, so the root is strictly positive.
    Safeguarded Newton on the piecewise-linear level equation; tau0 is a
    warm start (the previous level), clipped to the valid bracket. Each
    pass either lands in the root's linear segment (exact formula, exit)
    or crosses at least one breakpoint, so termination is finite.
    """
    n = z.shape[0]
    hi = 0.0
    for i in range(n):
        az = abs(z[i])
        if az > hi:
            hi = az
    tau = tau0
    if tau < 0.0 or tau >= hi:
        tau = 0.0
    for _ in range(n + 2):
        cnt = 0
        active_sum = 0.0
        max_out = 0.0
        min_in = hi
        for i in range(n):
            az = abs(z[i])
            if az > tau:
                cnt += 1
                active_sum += az
                if az < min_in:
                    min_in = az
            elif az > max_out:
                max_out = az
        cand = (active_sum - d) / cnt
        if cand >= max_out and cand < min_in:
            return cand
        tau = cand
        if tau < 0.0 or tau >= hi:
            tau = 0.0
    # not reachable for finite inputs; fall back to the sorting rule
    scratch = np.empty(n)
    for i in range(n):
        scratch[i] = abs(z[i])
    scratch.sort()
    css = 0.0
    tau = 0.0
    for j in range(n):
        uj = scratch[n - 1 - j]
        css += uj
        t = (css - d) / (j + 1.0)
        if uj > t:
            tau = t
    return tau


@njit(cache=True)
def _fista(x, m, d, lam_max, tol, max_iter, w):
    """Accelerated projected gradient from the feasible start w (mutated).

    Metric m must be SPD and lam_max an upper bound on its largest
    eigenvalue (step 1/lam_max). Inner L1 projections reuse the previous
    soft-threshold level as a Newton warm start. Terminates when the
    fixed-point residual of the projected-gradient map drops below tol.
    """
    n = x.shape[0]
    step = 1.0 / lam_max
    w_new = np.empty(n)
    y = np.empty(n)
    dy = np.empty(n)
    z = np.empty(n)
    for i in range(n):
        y[i] = w[i]
    tk = 1.0
    tau = 0.0
    for _ in range(max_iter):
        for i in range(n):
            dy[i] = y[i] - x[i]
        g = np.dot(m, dy)
        sz = 0.0
        for i in range(n):
            zi = y[i] - step * g[i]
            z[i] = zi
            sz += abs(zi)
        if sz <= d:
            for i in range(n):
                w_new[i] = z[i]
        else:
            tau = _soft_level(z, d, tau)
            for i in range(n):
                v = abs(z[i]) - tau
                if v <= 0.0:
                    w_new[i] = 0.0
                else:
                    w_new[i] = v if z[i] > 0.0 else -v
        restart = 0.0
        for i in range(n):
            restart += (y[i] - w_new[i]) * (w_new[i] - w[i])
        if restart > 0.0:
            tk = 1.0
            for i in range(n):
                y[i] = w_new[i]
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            mom = (tk - 1.0) / t_new
            for i in range(n):
                y[i] = w_new[i] + mom * (w_new[i] - w[i])
            tk = t_new
        delta = 0.0
        for i in range(n):
            dv = abs(w_new[i] - w[i])
            if dv > delta:
                delta = dv
        tmp = w
        w = w_new
        w_new = tmp
        if delta < tol:
            # confirm with the exact fixed-point residual at w
            for i in range(n):
                dy[i] = w[i] - x[i]
            g = np.dot(m, dy)
            sz = 0.0
            for i in range(n):
                zi = w[i] - step * g[i]
                z[i] = zi
                sz += abs(zi)
            if sz <= d:
                for i in range(n):
                    w_new[i] = z[i]
            else:
                tau = _soft_level(z, d, tau)
                for i in range(n):
                    v = abs(z[i]) - tau
                    if v <= 0.0:
                        w_new[i] = 0.0
                    else:
                        w_new[i] = v if z[i] > 0.0 else -v
            r = 0.0
            for i in range(n):
                dv = abs(w_new[i] - w[i])
                if dv > r:
                    r = dv
            if r < tol:
                return w
            tmp = w
            w = w_new
            w_new = tmp
            for i in range(n):
                y[i] = w[i]
            tk = 1.0
    return w


@njit(cache=True)
def project_weighted(x, m, d, lam_max, tol, max_iter):
    """Projection of x onto the L1 ball of radius d in the metric m (SPD).

    Starts from the Euclidean projection of x. lam_max must be an upper
    bound on the largest eigenvalue of m.
    """
    n = x.shape[0]
    s = 0.0
    for i in range(n):
        s += abs(x[i])
    if s <= d:
        out = np.empty(n)
        for i in range(n):
            out[i] = x[i]
        return out
    w = np.empty(n)
    scratch = np.empty(n)
    _project_l1_into(x, d, w, scratch)
    return _fista(x, m, d, lam_max, tol, max_iter, w)


@njit(cache=True)
def project_weighted_from(x, m, d, lam_max, tol, max_iter, w0):
    """project_weighted variant starting from the feasible point w0.

    Used by the estimator step, which restarts from the previous iterate;
    that point is already inside the (non-shrinking) ball and is far closer
    to the solution than the Euclidean projection when the optimum is dense.
    """
    n = x.shape[0]
    s = 0.0
    for i in range(n):
        s += abs(x[i])
    if s <= d:
        out = np.empty(n)
        for i in range(n):
            out[i] = x[i]
        return out
    w = np.empty(n)
    s0 = 0.0
    for i in range(n):
        s0 += abs(w0[i])
    if s0 <= d:
        for i in range(n):
            w[i] = w0[i]
    else:
        scratch = np.empty(n)
        _project_l1_into(w0, d, w, scratch)
    return _fista(x, m, d, lam_max, tol, max_iter, w)


@njit(cache=True)
def _ball_kkt_solve(x, pmat, pinv, d, l1, lam, tol, w):
    """Direct KKT solve of the metric-ball projection when P = pinv^{-1}.

    Walks the active set starting from the all-active sign pattern of x;
    coordinates pinned to zero are handled through Schur complements on
    pmat, so each round costs a few matrix-vector products instead of a
    factorization. Every candidate is verified against the true metric
    pinv before acceptance. Writes the solution into w.

    Returns 0 when w holds the verified projection, 1 when w holds a
    feasible near-optimal point worth polishing, 2 when the caller should
    discard w entirely.
    """
    p = x.shape[0]
    max_zero = 12
    sigma = np.empty(p)
    zmask = np.zeros(p, dtype=np.bool_)
    nz = 0
    for i in range(p):
        if x[i] > 0.0:
            sigma[i] = 1.0
        elif x[i] < 0.0:
            sigma[i] = -1.0
        else:
            sigma[i] = 0.0
            zmask[i] = True
            nz += 1
    tol_g = tol * lam
    zidx = np.empty(max_zero, dtype=np.int64)
    rhs1 = np.empty(p)
    small = np.empty((max_zero, max_zero))
    cvec = np.empty(max_zero)
    for _ in range(8):
        if nz > max_zero:
            return 2
        mu = 0.0
        if nz == 0:
            bvec = np.dot(pmat, sigma)
            den = 0.0
            sx = 0.0
            for i in range(p):
                den += sigma[i] * bvec[i]
                sx += sigma[i] * x[i]
            if den <= 0.0:
                return 2
            mu = (sx - d) / den
            if mu <= 0.0:
                return 2
            for i in range(p):
                w[i] = x[i] - mu * bvec[i]
        else:
            k = 0
            for i in range(p):
                if zmask[i]:
                    zidx[k] = i
                    k += 1
            # rhs1 = [M v_Z]_S where v_Z carries -x on the zero set
            for i in range(p):
                rhs1[i] = 0.0
            for jj in range(k):
                j = zidx[jj]
                xj = x[j]
                for i in range(p):
                    rhs1[i] -= pinv[i, j] * xj
            for jj in range(k):
                rhs1[zidx[jj]] = 0.0
            avec = np.dot(pmat, rhs1)
            svec = np.empty(p)
            for i in range(p):
                svec[i] = 0.0 if zmask[i] else sigma[i]
            bvec = np.dot(pmat, svec)
            # Schur correction confines both solves to the support
            for jj in range(k):
                for ll in range(k):
                    small[jj, ll] = pmat[zidx[jj], zidx[ll]]
            for rhs_id in range(2):
                src = avec if rhs_id == 0 else bvec
                for jj in range(k):
                    cvec[jj] = src[zidx[jj]]
                # tiny dense solve: gaussian elimination with pivoting
                a = small[:k, :k].copy()
                ok = True
                piv = np.empty(k, dtype=np.int64)
                for col in range(k):
                    pv = col
                    big = abs(a[col, col])
                    for r in range(col + 1, k):
                        if abs(a[r, col]) > big:
                            big = abs(a[r, col])
                            pv = r
                    if big <= 0.0:
                        ok = False
                        break
                    piv[col] = pv
                    if pv != col:
                        for cc in range(k):
                            t = a[col, cc]
                            a[col, cc] = a[pv, cc]
                            a[pv, cc] = t
                        t = cvec[col]
                        cvec[col] = cvec[pv]
                        cvec[pv] = t
                    for r in range(col + 1, k):
                        f = a[r, col] / a[col, col]
                        a[r, col] = f
                        for cc in range(col + 1, k):
                            a[r, cc] -= f * a[col, cc]
                        cvec[r] -= f * cvec[col]
                if not ok:
                    return 2
                for col in range(k - 1, -1, -1):
                    acc = cvec[col]
                    for cc in range(col + 1, k):
                        acc -= a[col, cc] * cvec[cc]
                    cvec[col] = acc / a[col, col]
                for jj in range(k):
                    cj = cvec[jj]
                    j = zidx[jj]
                    for i in range(p):
                        src[i] -= pmat[i, j] * cj
                for jj in range(k):
                    src[zidx[jj]] = 0.0
            sx = 0.0
            sa = 0.0
            sb = 0.0
            for i in range(p):
                if not zmask[i]:
                    sx += sigma[i] * x[i]
                    sa += sigma[i] * avec[i]
                    sb += sigma[i] * bvec[i]
            if sb <= 0.0:
                return 2
            mu = (sx - sa - d) / sb
            if mu <= 0.0:
                return 2
            for i in range(p):
                if zmask[i]:
                    w[i] = 0.0
                else:
                    w[i] = x[i] - avec[i] - mu * bvec[i]
        # verify against the true metric
        for i in range(p):
            rhs1[i] = w[i] - x[i]
        grad = np.dot(pinv, rhs1)
        ns = 0
        mu_hat = 0.0
        for i in range(p):
            if not zmask[i]:
                mu_hat -= sigma[i] * grad[i]
                ns += 1
        if ns == 0:
            return 2
        mu_hat /= ns
        if mu_hat <= 0.0:
            return 2
        res = 0.0
        crossings = 0
        for i in range(p):
            if not zmask[i]:
                r = abs(grad[i] + mu_hat * sigma[i])
                if r > res:
                    res = r
                if w[i] * sigma[i] < 0.0:
                    crossings += 1
        dual_bad = 0
        for i in range(p):
            if zmask[i]:
                if abs(grad[i]) - mu_hat > tol_g:
                    dual_bad += 1
        if crossings == 0 and dual_bad == 0:
            if res <= tol_g:
                return 0
            return 1
        # update the working sets and retry
        for i in range(p):
            if not zmask[i] and w[i] * sigma[i] < 0.0:
                zmask[i] = True
                sigma[i] = 0.0
                nz += 1
        if dual_bad > 0 and crossings == 0:
            for i in range(p):
                if zmask[i] and abs(grad[i]) - mu_hat > tol_g:
                    zmask[i] = False
                    sigma[i] = 1.0 if grad[i] < 0.0 else -1.0
                    nz -= 1
    return 2


@njit(cache=True)
def sym_rank1_add(a, v):
    """a += outer(v, v), writing both triangles from one product."""
    n = v.shape[0]
    for i in range(n):
        vi = v[i]
        a[i, i] += vi * vi
        for j in range(i + 1, n):
            w = vi * v[j]
            a[i, j] += w
            a[j, i] = a[i, j]


@njit(cache=True)
def fill_regressor(u_log, k, out):
    """out[i] = u_{k-i}, zero-padded for negative indices (i = 0..p-1)."""
    p = out.shape[0]
    for i in range(p):
        idx = k - i
        out[i] = u_log[idx] if idx >= 0 else 0.0


@njit(cache=True)
def gauss_step(theta, pmat, pinv, phi, beta, d, c, s, sigma, ptol, pmax):
    """One stochastic-gradient update with L1-ball projection, in place.

    theta, pmat (the gain matrix), and pinv (its maintained inverse) are
    mutated. Returns (innovation, gain scalar). Rank-one updates write both
    triangles from a single product, so symmetry is preserved exactly.
    """
    p = theta.shape[0]
    mval = 0.0
    for i in range(p):
        mval += phi[i] * theta[i]
    f_cdf = normal_cdf((c - mval) / sigma)
    e = s - 1.0 + f_cdf
    w = np.dot(pmat, phi)
    q = 0.0
    for i in range(p):
        q += phi[i] * w[i]
    b2 = beta * beta
    a = 1.0 / (1.0 + b2 * q)
    coef = b2 * a
    for i in range(p):
        wi = w[i]
        pmat[i, i] -= coef * wi * wi
        for j in range(i + 1, p):
            v = coef * wi * w[j]
            pmat[i, j] -= v
            pmat[j, i] = pmat[i, j]
    for i in range(p):
        fi = phi[i]
        pinv[i, i] += b2 * fi * fi
        for j in range(i + 1, p):
            v = b2 * fi * phi[j]
            pinv[i, j] += v
            pinv[j, i] = pinv[i, j]
    gcoef = a * beta * e
    theta_prev = theta.copy()
    for i in range(p):
        theta[i] += gcoef * w[i]
    l1 = 0.0
    for i in range(p):
        l1 += abs(theta[i])
    if l1 > d:
        lam = row_sum_bound(pinv)
        wball = np.empty(p)
        status = _ball_kkt_solve(theta, pmat, pinv, d, l1, lam, ptol, wball)
        if status == 0:
            for i in range(p):
                theta[i] = wball[i]
        elif status == 1:
            proj = _fista(theta, pinv, d, lam, ptol, pmax, wball)
            for i in range(p):
                theta[i] = proj[i]
        else:
            proj = project_weighted_from(theta, pinv, d, lam, ptol, pmax,
                                         theta_prev)
            for i in range(p):
                theta[i] = proj[i]
    return e, a


@njit(cache=True)
def gauss_replay(u_log, c_log, s_log, beta_log, d_log, k, p, sigma,
                 p0_scale, ptol, pmax):
    """Rerun the first k updates from scratch at dimension p.

    Returns (theta, pmat, pinv). Uses the same single-step kernel as the
    live path, so a replay at the current dimension is bit-identical.
    """
    theta = np.zeros(p)
    pmat = np.eye(p) * p0_scale
    pinv = np.eye(p) / p0_scale
    phi = np.empty(p)
    for t in range(k):
        fill_regressor(u_log, t, phi)
        gauss_step(theta, pmat, pinv, phi, beta_log[t], d_log[t],
                   c_log[t], s_log[t], sigma, ptol, pmax)
    return theta, pmat, pinv


@njit(cache=True)
def modified_gains(theta, pmat, a_scalar):
    """Estimate shifted along the gain matrix square root, fused with eigh.

    Returns (ghat, chosen_index, status); status 0 is success, 1 means the
    top eigenvalue is not positive, 2 means a significantly negative
    eigenvalue. Index 0 leaves the estimate unchanged; index i >= 1 adds
    sqrt(a_scalar) times column i-1 of the symmetric square root, the column
    picked by maximizing the first modified coordinate.
    """
    p = theta.shape[0]
    w, v = np.linalg.eigh(pmat)
    top = w[p - 1]
    ghat = theta.copy()
    if top <= 0.0:
        return ghat, -1, 1
    if w[0] < -1e-8 * top:
        return ghat, -1, 2
    sq = np.empty(p)
    for j in range(p):
        wj = w[j]
        sq[j] = math.sqrt(wj) if wj > 0.0 else 0.0
    srow = np.empty(p)
    for i in range(p):
        acc = 0.0
        for j in range(p):
            acc += v[i, j] * sq[j] * v[0, j]
        srow[i] = acc
    best = abs(theta[0])
    best_i = 0
    for i in range(1, p + 1):
        obj = abs(theta[0] + srow[i - 1])
        if obj > best:
            best = obj
            best_i = i
    if best_i > 0:
        sa = math.sqrt(a_scalar)
        col = best_i - 1
        for i in range(p):
            acc = 0.0
            for j in range(p):
                acc += v[i, j] * sq[j] * v[col, j]
            ghat[i] += sa * acc
    return ghat, best_i, 0
