"""Method of Moving Asymptotes update step.

Solves, per call, the convex separable approximation of

    min  max_k f_k(x)   s.t.  g_i(x) <= 0,  x in [max(lb, x-move), min(ub, x+move)]

via the standard bound-variable form: minimize a0*z + sum(c_i y_i + 0.5 d_i y_i^2)
subject to f_row_i(x) - a_i*z - y_i <= 0, with a_i = 1 on the objective rows
and 0 on the constraint rows.  The subproblem is solved by a primal-dual
interior point method to a KKT residual below `kkt_tol`.

Reference: Svanberg, "The method of moving asymptotes - a new method for
structural optimization", IJNME 24 (1987).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MmaOptions:
    move: float = 0.1  # external move limit (per-update infinity-norm cap)
    asy_init: float = 0.5
    asy_incr: float = 1.2
    asy_decr: float = 0.7
    albefa: float = 0.1
    raa0: float = 1e-5
    constraint_penalty: float = 1000.0  # c_i on the relaxation variables y_i
    kkt_tol: float = 1e-9

    def __post_init__(self):
        if self.move <= 0:
            raise ValueError("move limit must be positive")


@dataclass
class MmaState:
    low: np.ndarray
    upp: np.ndarray
    xold1: np.ndarray
    xold2: np.ndarray
    iteration: int = 0

    @classmethod
    def new(cls, n: int) -> "MmaState":
        return cls(
            low=np.zeros(n),
            upp=np.ones(n),
            xold1=np.zeros(n),
            xold2=np.zeros(n),
        )


def mma_update(
    state: MmaState,
    x: np.ndarray,
    f_values: np.ndarray,
    f_grads: np.ndarray,
    g_values: np.ndarray,
    g_grads: np.ndarray,
    lower: float | np.ndarray = 0.0,
    upper: float | np.ndarray = 1.0,
    options: MmaOptions | None = None,
):
    """One MMA iteration.

    f_values/f_grads are the min-max objective rows; g_values/g_grads the
    general constraints in "<= 0" form.  Returns (x_new, state_new, info)
    where info carries the subproblem diagnostics, including per-iteration
    residual norms and whether the relaxation variables were active
    (infeasible subproblem).
    """
    opts = options or MmaOptions()
    x = np.asarray(x, dtype=float)
    n = x.size
    f_values = np.atleast_1d(np.asarray(f_values, dtype=float))
    g_values = np.atleast_1d(np.asarray(g_values, dtype=float))
    f_grads = np.asarray(f_grads, dtype=float).reshape(f_values.size, n)
    g_grads = np.asarray(g_grads, dtype=float).reshape(g_values.size, n)
    if not (np.all(np.isfinite(f_grads)) and np.all(np.isfinite(g_grads))):
        raise ValueError("gradients passed to mma_update must be finite")

    # The subproblem keeps z >= 0, so objective rows must be positive for the
    # min-max coupling to stay active.  Shifting all rows by the same constant
    # does not change the minimizer.
    f_values = f_values - f_values.max() + 1.0

    fval = np.concatenate([f_values, g_values])
    dfdx = np.vstack([f_grads, g_grads])
    m = fval.size
    a = np.concatenate([np.ones(f_values.size), np.zeros(g_values.size)])
    c = np.full(m, opts.constraint_penalty)
    d = np.ones(m)

    xmin = np.maximum(np.broadcast_to(np.asarray(lower, dtype=float), x.shape), x - opts.move)
    xmax = np.minimum(np.broadcast_to(np.asarray(upper, dtype=float), x.shape), x + opts.move)
    xrange = np.maximum(xmax - xmin, 1e-12)

    it = state.iteration + 1
    if it <= 2:
        low = x - opts.asy_init * xrange
        upp = x + opts.asy_init * xrange
    else:
        osc = (x - state.xold1) * (state.xold1 - state.xold2)
        factor = np.ones(n)
        factor[osc > 0] = opts.asy_incr
        factor[osc < 0] = opts.asy_decr
        low = x - factor * (state.xold1 - state.low)
        upp = x + factor * (state.upp - state.xold1)
        # loose near-side floor so oscillations can damp all the way out
        low = np.clip(low, x - 10.0 * xrange, x - 1e-5 * xrange)
        upp = np.clip(upp, x + 1e-5 * xrange, x + 10.0 * xrange)

    alfa = np.maximum(xmin, low + opts.albefa * (x - low))
    beta = np.minimum(xmax, upp - opts.albefa * (upp - x))

    ux1 = upp - x
    xl1 = x - low
    reg = opts.raa0 / xrange
    # Objective of the subproblem is carried entirely by z and y; the raa0
    # term keeps the separable approximation strictly convex in x.
    p0 = ux1**2 * reg
    q0 = xl1**2 * reg
    dfp = np.maximum(dfdx, 0.0)
    dfm = np.maximum(-dfdx, 0.0)
    pmat = ux1[None, :] ** 2 * (1.001 * dfp + 0.001 * dfm + reg[None, :])
    qmat = xl1[None, :] ** 2 * (0.001 * dfp + 1.001 * dfm + reg[None, :])
    b = pmat @ (1.0 / ux1) + qmat @ (1.0 / xl1) - fval

    x_new, y, z, lam, residuals = _subsolv(
        m, n, opts.kkt_tol, low, upp, alfa, beta, p0, q0, pmat, qmat, 1.0, a, b, c, d
    )

    info = {
        "y": y,
        "z": z,
        "lam": lam,
        "residuals": residuals,
        "relaxed": bool(np.max(y) > 1e-6),
        "low": low,
        "upp": upp,
    }
    new_state = MmaState(
        low=low, upp=upp, xold1=x.copy(), xold2=state.xold1.copy(), iteration=it
    )
    return x_new, new_state, info


def _subsolv(m, n, epsimin, low, upp, alfa, beta, p0, q0, pmat, qmat, a0, a, b, c, d):
    """Primal-dual Newton solve of the MMA subproblem (Svanberg's subsolv)."""
    epsi = 1.0
    x = 0.5 * (alfa + beta)
    y = np.ones(m)
    z = 1.0
    lam = np.ones(m)
    xsi = np.maximum(1.0 / (x - alfa), 1.0)
    eta = np.maximum(1.0 / (beta - x), 1.0)
    mu = np.maximum(0.5 * c, 1.0)
    zet = 1.0
    s = np.ones(m)
    residuals = []

    def residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi):
        ux1 = upp - x
        xl1 = x - low
        plam = p0 + pmat.T @ lam
        qlam = q0 + qmat.T @ lam
        gvec = pmat @ (1.0 / ux1) + qmat @ (1.0 / xl1)
        rex = plam / ux1**2 - qlam / xl1**2 - xsi + eta
        rey = c + d * y - mu - lam
        rez = a0 - zet - a @ lam
        relam = gvec - a * z - y + s - b
        rexsi = xsi * (x - alfa) - epsi
        reeta = eta * (beta - x) - epsi
        remu = mu * y - epsi
        rezet = zet * z - epsi
        res = lam * s - epsi
        residu = np.concatenate(
            [rex, rey, [rez], relam, rexsi, reeta, remu, [rezet], res]
        )
        return np.linalg.norm(residu), np.abs(residu).max()

    while epsi > epsimin:
        residunorm, residumax = residual(x, y, z, lam, xsi, eta, mu, zet, s, epsi)
        residuals.append((epsi, residunorm))
        inner = 0
        while residumax > 0.9 * epsi and inner < 200:
            inner += 1
            ux1 = upp - x
            xl1 = x - low
            ux2 = ux1**2
            xl2 = xl1**2
            plam = p0 + pmat.T @ lam
            qlam = q0 + qmat.T @ lam
            gvec = pmat @ (1.0 / ux1) + qmat @ (1.0 / xl1)
            gg = pmat / ux2[None, :] - qmat / xl2[None, :]
            dpsidx = plam / ux2 - qlam / xl2
            delx = dpsidx - epsi / (x - alfa) + epsi / (beta - x)
            dely = c + d * y - lam - epsi / y
            delz = a0 - a @ lam - epsi / z
            dellam = gvec - a * z - y - b + epsi / lam
            diagx = 2.0 * (plam / (ux2 * ux1) + qlam / (xl2 * xl1))
            diagx = diagx + xsi / (x - alfa) + eta / (beta - x)
            diagy = d + mu / y
            diaglam = s / lam
            diaglamyi = diaglam + 1.0 / diagy

            if m < n:
                blam = dellam + dely / diagy - gg @ (delx / diagx)
                aa = np.zeros((m + 1, m + 1))
                aa[:m, :m] = np.diag(diaglamyi) + (gg / diagx[None, :]) @ gg.T
                aa[:m, m] = a
                aa[m, :m] = a
                aa[m, m] = -zet / z
                bb = np.concatenate([blam, [delz]])
                sol = np.linalg.solve(aa, bb)
                dlam = sol[:m]
                dz = sol[m]
                dx = -delx / diagx - (gg.T @ dlam) / diagx
            else:
                diaginv = 1.0 / diaglamyi
                dellamyi = dellam + dely / diagy
                axx = np.diag(diagx) + gg.T @ (gg * diaginv[:, None])
                azz = zet / z + a @ (a * diaginv)
                axz = -gg.T @ (a * diaginv)
                aa = np.zeros((n + 1, n + 1))
                aa[:n, :n] = axx
                aa[:n, n] = axz
                aa[n, :n] = axz
                aa[n, n] = azz
                bx = delx + gg.T @ (dellamyi * diaginv)
                bz = delz - a @ (dellamyi * diaginv)
                sol = np.linalg.solve(aa, np.concatenate([-bx, [-bz]]))
                dx = sol[:n]
                dz = sol[n]
                dlam = (gg @ dx) * diaginv - dz * (a * diaginv) + dellamyi * diaginv

            dy = -dely / diagy + dlam / diagy
            dxsi = -xsi + epsi / (x - alfa) - (xsi * dx) / (x - alfa)
            deta = -eta + epsi / (beta - x) + (eta * dx) / (beta - x)
            dmu = -mu + epsi / y - (mu * dy) / y
            dzet = -zet + epsi / z - zet * dz / z
            ds = -s + epsi / lam - (s * dlam) / lam

            xx = np.concatenate([y, [z], lam, xsi, eta, mu, [zet], s])
            dxx = np.concatenate([dy, [dz], dlam, dxsi, deta, dmu, [dzet], ds])
            stmxx = np.max(-1.01 * dxx / xx)
            stmalfa = np.max(-1.01 * dx / (x - alfa))
            stmbeta = np.max(1.01 * dx / (beta - x))
            steg = 1.0 / max(stmxx, stmalfa, stmbeta, 1.0)

            xold, yold, zold = x, y, z
            lamold, xsiold, etaold = lam, xsi, eta
            muold, zetold, sold = mu, zet, s
            resinew = 2.0 * residunorm
            itto = 0
            while resinew > residunorm and itto < 50:
                itto += 1
                x = xold + steg * dx
                y = yold + steg * dy
                z = zold + steg * dz
                lam = lamold + steg * dlam
                xsi = xsiold + steg * dxsi
                eta = etaold + steg * deta
                mu = muold + steg * dmu
                zet = zetold + steg * dzet
                s = sold + steg * ds
                resinew, residumax = residual(
                    x, y, z, lam, xsi, eta, mu, zet, s, epsi
                )
                steg *= 0.5
            residunorm = resinew
            residuals.append((epsi, residunorm))
        epsi *= 0.1
    return x, y, z, lam, residuals
