"""Walk-on-spheres inner loops in two interchangeable implementations.

``STABLECONES_BACKEND=numpy`` forces the vectorised numpy version; the
default uses numba when it is importable.  Both draw from the same
counter-based generator: every uniform is a hash of
(seed, path, step, slot), so a path's randomness does not depend on the
order in which paths are processed or on the backend.

Domain codes: 0 cone C(beta) [beta], 1 ball [center..., radius],
2 half-space {x_n > 0} [], 3 cap cone [theta0].
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


ENV_VAR = "STABLECONES_BACKEND"

CONE, BALL, HALFSPACE, CAPCONE = 0, 1, 2, 3

GOLDEN = 0x9E3779B97F4A7C15
STEP_MULT = 0xD1B54A32D192ED03
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB
INV_2_53 = 1.0 / 9007199254740994.0

SLOT_GAMMA_A = 16
SLOT_GAMMA_B = 1000
SLOT_DIR = 2000
SLOT_RETRY = 100_000
GAMMA_ATTEMPTS = 64
RETRIES = 8


def backend() -> str:
    want = os.environ.get(ENV_VAR, "").strip().lower()
    if want == "numpy" or not HAVE_NUMBA:
        return "numpy"
    if want not in ("", "numba"):
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {want!r}")
    return "numba"


# ---------------------------------------------------------------- numba side


@njit(cache=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(M2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _path_key(seed, path):
    return _mix(np.uint64(seed) + np.uint64(GOLDEN) * (np.uint64(path) + np.uint64(1)))


@njit(cache=True)
def _u01(key, step, slot):
    k = _mix(key ^ (np.uint64(step) * np.uint64(STEP_MULT) + np.uint64(slot)))
    return float((k >> np.uint64(11)) + np.uint64(1)) * INV_2_53


@njit(cache=True)
def _normal(key, step, slot):
    u1 = _u01(key, step, slot)
    u2 = _u01(key, step, slot + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def _gamma(a, key, step, slot):
    """Gamma(a) for a in (0, 1): Marsaglia-Tsang on a + 1, then U^(1/a)."""
    d = a + 1.0 - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    for retry in range(RETRIES):
        base = slot + SLOT_RETRY * retry
        for it in range(GAMMA_ATTEMPTS):
            sl = base + 4 * it
            x = _normal(key, step, sl)
            v = 1.0 + c * x
            if v <= 0.0:
                continue
            v = v * v * v
            u = _u01(key, step, sl + 2)
            if math.log(u) < 0.5 * x * x + d - d * v + d * math.log(v):
                return d * v * _u01(key, step, sl + 3) ** (1.0 / a)
    return -1.0


@njit(cache=True)
def _dist(kind, prm, X):
    n = X.shape[0]
    if kind == CONE:
        beta = prm[0]
        z2 = 0.0
        for i in range(n - 1):
            z2 += X[i] * X[i]
        return (math.sqrt(z2) - beta * abs(X[n - 1])) / math.sqrt(1.0 + beta * beta)
    if kind == BALL:
        r2 = 0.0
        for i in range(n):
            r2 += (X[i] - prm[i]) ** 2
        return prm[n] - math.sqrt(r2)
    if kind == HALFSPACE:
        return X[n - 1]
    z2 = 0.0
    for i in range(n - 1):
        z2 += X[i] * X[i]
    z = math.sqrt(z2)
    r = math.sqrt(z2 + X[n - 1] * X[n - 1])
    gap = prm[0] - math.atan2(z, X[n - 1])
    if abs(gap) <= 0.5 * math.pi:
        d = r * math.sin(abs(gap))
    else:
        d = r
    return d if gap > 0 else -d


@njit(cache=True)
def _norm(X):
    t = 0.0
    for i in range(X.shape[0]):
        t += X[i] * X[i]
    return math.sqrt(t)


@njit(cache=True)
def _jump(X, r, s, key, step, D):
    """Move X to an exit point of the ball of radius r centred at X."""
    n = X.shape[0]
    g1 = _gamma(1.0 - s, key, step, SLOT_GAMMA_A)
    g2 = _gamma(s, key, step, SLOT_GAMMA_B)
    R = r * math.sqrt(1.0 + g1 / g2)
    nn = 0.0
    for i in range(n):
        D[i] = _normal(key, step, SLOT_DIR + 2 * i)
        nn += D[i] * D[i]
    nn = math.sqrt(nn)
    for i in range(n):
        X[i] += R * D[i] / nn


@njit(cache=True)
def _exit_points_nb(kind, prm, x0, paths, seed, s, bf, max_steps, vr):
    n = x0.shape[0]
    out = np.empty((paths, n))
    steps = np.zeros(paths, dtype=np.int64)
    trunc = np.zeros(paths, dtype=np.bool_)
    vert = np.zeros(paths, dtype=np.bool_)
    X = np.empty(n)
    D = np.empty(n)
    for p in range(paths):
        key = _path_key(seed, p)
        for i in range(n):
            X[i] = x0[i]
        done = False
        for k in range(max_steps):
            d = _dist(kind, prm, X)
            if vr > 0.0 and _norm(X) < vr:
                vert[p] = True
            _jump(X, bf * d, s, key, k, D)
            steps[p] = k + 1
            if _dist(kind, prm, X) <= 0.0:
                done = True
                break
        trunc[p] = not done
        for i in range(n):
            out[p, i] = X[i]
    return out, steps, trunc, vert


@njit(cache=True)
def _exit_density_nb(kind, prm, x0, Z, paths, seed, s, bf, max_steps, batch, C, vr):
    n = x0.shape[0]
    m = Z.shape[0]
    nbatch = (paths + batch - 1) // batch
    sums = np.zeros((nbatch, m))
    X = np.empty(n)
    D = np.empty(n)
    steps = 0
    ntrunc = 0
    nvert = 0
    half_n = 0.5 * n
    for p in range(paths):
        b = p // batch
        key = _path_key(seed, p)
        for i in range(n):
            X[i] = x0[i]
        done = False
        vert = False
        for k in range(max_steps):
            d = _dist(kind, prm, X)
            r = bf * d
            if vr > 0.0 and _norm(X) < vr:
                vert = True
            r2 = r * r
            r2s = r ** (2.0 * s)
            for j in range(m):
                q = 0.0
                for i in range(n):
                    q += (Z[j, i] - X[i]) ** 2
                sums[b, j] += C * r2s / ((q - r2) ** s * q**half_n)
            _jump(X, r, s, key, k, D)
            steps += 1
            if _dist(kind, prm, X) <= 0.0:
                done = True
                break
        if not done:
            ntrunc += 1
        if vert:
            nvert += 1
    return sums, steps, ntrunc, nvert


@njit(cache=True)
def _green_hits_nb(kind, prm, x0, Y, paths, seed, s, bf, max_steps, cap):
    """Record (path, target, |X - y|, r) whenever a target lies in the
    current ball.  Returns the filled length, or -1 if ``cap`` overflowed."""
    n = x0.shape[0]
    m = Y.shape[0]
    rec_p = np.empty(cap, dtype=np.int64)
    rec_j = np.empty(cap, dtype=np.int64)
    rec_rho = np.empty(cap)
    rec_r = np.empty(cap)
    X = np.empty(n)
    D = np.empty(n)
    cnt = 0
    steps = 0
    ntrunc = 0
    for p in range(paths):
        key = _path_key(seed, p)
        for i in range(n):
            X[i] = x0[i]
        done = False
        for k in range(max_steps):
            r = bf * _dist(kind, prm, X)
            for j in range(m):
                q = 0.0
                for i in range(n):
                    q += (Y[j, i] - X[i]) ** 2
                rho = math.sqrt(q)
                if rho < r:
                    if cnt >= cap:
                        return rec_p, rec_j, rec_rho, rec_r, -1, steps, ntrunc
                    rec_p[cnt] = p
                    rec_j[cnt] = j
                    rec_rho[cnt] = rho
                    rec_r[cnt] = r
                    cnt += 1
            _jump(X, r, s, key, k, D)
            steps += 1
            if _dist(kind, prm, X) <= 0.0:
                done = True
                break
        if not done:
            ntrunc += 1
    return rec_p, rec_j, rec_rho, rec_r, cnt, steps, ntrunc


@njit(cache=True)
def _ball_exit_nb(n, s, start, radius, samples, seed):
    """Exit points of the unit-centred ball of given radius from ``start``.

    Off-centre starts use rejection against the centre-start law with
    acceptance |y|^n (1-q)^n / |start - y|^n, q = |start| / radius.
    """
    out = np.empty((samples, n))
    X = np.empty(n)
    D = np.empty(n)
    q = _norm(start) / radius
    retries = 0
    for p in range(samples):
        key = _path_key(seed, p)
        att = 0
        while True:
            for i in range(n):
                X[i] = 0.0
            _jump(X, radius, s, key, att, D)
            if q == 0.0:
                break
            rx = _norm(X)
            dd = 0.0
            for i in range(n):
                dd += (X[i] - start[i]) ** 2
            acc = (rx * (1.0 - q)) ** n / dd ** (0.5 * n)
            if _u01(key, att, 7) < acc:
                break
            att += 1
            retries += 1
        for i in range(n):
            out[p, i] = X[i]
    return out, retries


# ---------------------------------------------------------------- numpy side

_U = np.uint64


def _mix_np(z):
    z = (z ^ (z >> _U(30))) * _U(M1)
    z = (z ^ (z >> _U(27))) * _U(M2)
    return z ^ (z >> _U(31))


def _path_key_np(seed, paths):
    p = np.asarray(paths, dtype=np.uint64)
    return _mix_np(_U(seed) + _U(GOLDEN) * (p + _U(1)))


def _u01_np(key, step, slot):
    step = np.asarray(step, dtype=np.uint64)
    k = _mix_np(key ^ (step * _U(STEP_MULT) + _U(slot)))
    return ((k >> _U(11)) + _U(1)).astype(np.float64) * INV_2_53


def _normal_np(key, step, slot):
    u1 = _u01_np(key, step, slot)
    u2 = _u01_np(key, step, slot + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def _gamma_np(a, key, step, slot):
    d = a + 1.0 - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.full(key.shape, -1.0)
    todo = np.arange(key.size)
    step = np.broadcast_to(np.asarray(step, dtype=np.uint64), key.shape)
    for retry in range(RETRIES):
        base = slot + SLOT_RETRY * retry
        for it in range(GAMMA_ATTEMPTS):
            if todo.size == 0:
                return out
            sl = base + 4 * it
            k, st = key[todo], step[todo]
            x = _normal_np(k, st, sl)
            v = 1.0 + c * x
            ok = v > 0.0
            v1 = np.where(ok, v, 1.0)
            v3 = v1 * v1 * v1
            u = _u01_np(k, st, sl + 2)
            with np.errstate(invalid="ignore"):
                acc = ok & (np.log(u) < 0.5 * x * x + d - d * v3 + d * np.log(v3))
            idx = todo[acc]
            out[idx] = d * v3[acc] * _u01_np(k[acc], st[acc], sl + 3) ** (1.0 / a)
            todo = todo[~acc]
    return out


def _dist_np(kind, prm, X):
    n = X.shape[1]
    if kind == CONE:
        beta = prm[0]
        z = np.sqrt(np.sum(X[:, :-1] ** 2, axis=1))
        return (z - beta * np.abs(X[:, -1])) / math.sqrt(1.0 + beta * beta)
    if kind == BALL:
        return prm[n] - np.sqrt(np.sum((X - prm[:n]) ** 2, axis=1))
    if kind == HALFSPACE:
        return X[:, -1].copy()
    z = np.sqrt(np.sum(X[:, :-1] ** 2, axis=1))
    r = np.hypot(z, X[:, -1])
    gap = prm[0] - np.arctan2(z, X[:, -1])
    d = np.where(np.abs(gap) <= 0.5 * math.pi, r * np.sin(np.abs(gap)), r)
    return np.where(gap > 0, d, -d)


def _jump_np(X, r, s, key, step):
    n = X.shape[1]
    g1 = _gamma_np(1.0 - s, key, step, SLOT_GAMMA_A)
    g2 = _gamma_np(s, key, step, SLOT_GAMMA_B)
    R = r * np.sqrt(1.0 + g1 / g2)
    D = np.stack([_normal_np(key, step, SLOT_DIR + 2 * i) for i in range(n)], axis=1)
    nn = np.sqrt(np.sum(D * D, axis=1))
    # same operation order as the scalar loop: X + (R * D) / |D|
    return X + (R[:, None] * D) / nn[:, None]


CHUNK = 16384


def _exit_points_np(kind, prm, x0, paths, seed, s, bf, max_steps, vr):
    n = x0.size
    out = np.empty((paths, n))
    steps = np.zeros(paths, dtype=np.int64)
    trunc = np.zeros(paths, dtype=bool)
    vert = np.zeros(paths, dtype=bool)
    for c0 in range(0, paths, CHUNK):
        ids = np.arange(c0, min(paths, c0 + CHUNK))
        keys = _path_key_np(seed, ids)
        X = np.tile(x0, (ids.size, 1))
        act = np.arange(ids.size)
        for k in range(max_steps):
            if act.size == 0:
                break
            Xa = X[act]
            d = _dist_np(kind, prm, Xa)
            if vr > 0.0:
                vert[ids[act[np.sqrt(np.sum(Xa * Xa, axis=1)) < vr]]] = True
            Xa = _jump_np(Xa, bf * d, s, keys[act], k)
            X[act] = Xa
            steps[ids[act]] = k + 1
            act = act[_dist_np(kind, prm, Xa) > 0.0]
        trunc[ids[act]] = True
        out[ids] = X
    return out, steps, trunc, vert


def _exit_density_np(kind, prm, x0, Z, paths, seed, s, bf, max_steps, batch, C, vr):
    n = x0.size
    m = Z.shape[0]
    nbatch = (paths + batch - 1) // batch
    sums = np.zeros((nbatch, m))
    steps = 0
    ntrunc = 0
    nvert = 0
    for c0 in range(0, paths, CHUNK):
        ids = np.arange(c0, min(paths, c0 + CHUNK))
        keys = _path_key_np(seed, ids)
        X = np.tile(x0, (ids.size, 1))
        act = np.arange(ids.size)
        vert = np.zeros(ids.size, dtype=bool)
        for k in range(max_steps):
            if act.size == 0:
                break
            Xa = X[act]
            r = bf * _dist_np(kind, prm, Xa)
            if vr > 0.0:
                vert[act[np.sqrt(np.sum(Xa * Xa, axis=1)) < vr]] = True
            q = np.sum((Z[None, :, :] - Xa[:, None, :]) ** 2, axis=2)
            r2 = (r * r)[:, None]
            val = C * (r ** (2.0 * s))[:, None] / ((q - r2) ** s * q ** (0.5 * n))
            np.add.at(sums, ids[act] // batch, val)
            Xa = _jump_np(Xa, r, s, keys[act], k)
            X[act] = Xa
            steps += act.size
            act = act[_dist_np(kind, prm, Xa) > 0.0]
        ntrunc += act.size
        nvert += int(vert.sum())
    return sums, steps, ntrunc, nvert


def _green_hits_np(kind, prm, x0, Y, paths, seed, s, bf, max_steps, cap):
    n = x0.size
    rec = ([], [], [], [])
    steps = 0
    ntrunc = 0
    for c0 in range(0, paths, CHUNK):
        ids = np.arange(c0, min(paths, c0 + CHUNK))
        keys = _path_key_np(seed, ids)
        X = np.tile(x0, (ids.size, 1))
        act = np.arange(ids.size)
        for k in range(max_steps):
            if act.size == 0:
                break
            Xa = X[act]
            r = bf * _dist_np(kind, prm, Xa)
            rho = np.sqrt(np.sum((Y[None, :, :] - Xa[:, None, :]) ** 2, axis=2))
            ii, jj = np.nonzero(rho < r[:, None])
            rec[0].append(ids[act[ii]])
            rec[1].append(jj)
            rec[2].append(rho[ii, jj])
            rec[3].append(r[ii])
            Xa = _jump_np(Xa, r, s, keys[act], k)
            X[act] = Xa
            steps += act.size
            act = act[_dist_np(kind, prm, Xa) > 0.0]
        ntrunc += act.size
    cat = [np.concatenate(a) if a else np.empty(0) for a in rec]
    return cat[0].astype(np.int64), cat[1].astype(np.int64), cat[2], cat[3], cat[0].size, steps, ntrunc


def _ball_exit_np(n, s, start, radius, samples, seed):
    out = np.empty((samples, n))
    q = float(np.linalg.norm(start)) / radius
    keys = _path_key_np(seed, np.arange(samples))
    todo = np.arange(samples)
    att = 0
    retries = 0
    while todo.size:
        X = _jump_np(np.zeros((todo.size, n)), np.full(todo.size, float(radius)), s, keys[todo], att)
        if q == 0.0:
            out[todo] = X
            break
        rx = np.sqrt(np.sum(X * X, axis=1))
        dd = np.sum((X - start) ** 2, axis=1)
        acc = (rx * (1.0 - q)) ** n / dd ** (0.5 * n)
        ok = _u01_np(keys[todo], att, 7) < acc
        out[todo[ok]] = X[ok]
        retries += int((~ok).sum())
        todo = todo[~ok]
        att += 1
    return out, retries


# ---------------------------------------------------------------- dispatch


def exit_points(kind, prm, x0, paths, seed, s, bf, max_steps, vr=0.0):
    args = (int(kind), np.asarray(prm, float), np.asarray(x0, float), int(paths),
            int(seed), float(s), float(bf), int(max_steps), float(vr))
    if backend() == "numba":
        return _exit_points_nb(*args)
    return _exit_points_np(*args)


def exit_density(kind, prm, x0, Z, paths, seed, s, bf, max_steps, batch, C, vr=0.0):
    args = (int(kind), np.asarray(prm, float), np.asarray(x0, float),
            np.ascontiguousarray(Z, dtype=float), int(paths), int(seed), float(s),
            float(bf), int(max_steps), int(batch), float(C), float(vr))
    if backend() == "numba":
        return _exit_density_nb(*args)
    return _exit_density_np(*args)


def green_hits(kind, prm, x0, Y, paths, seed, s, bf, max_steps):
    args = [int(kind), np.asarray(prm, float), np.asarray(x0, float),
            np.ascontiguousarray(Y, dtype=float), int(paths), int(seed), float(s),
            float(bf), int(max_steps)]
    if backend() == "numba":
        cap = max(1024, 4 * paths * len(Y))
        while True:
            res = _green_hits_nb(*args, cap)
            if res[4] >= 0:
                k = res[4]
                return res[0][:k], res[1][:k], res[2][:k], res[3][:k], res[5], res[6]
            cap *= 4
    res = _green_hits_np(*args, 0)
    return res[0], res[1], res[2], res[3], res[5], res[6]


def ball_exit(n, s, start, radius, samples, seed):
    args = (int(n), float(s), np.asarray(start, float), float(radius), int(samples), int(seed))
    if backend() == "numba":
        return _ball_exit_nb(*args)
    return _ball_exit_np(*args)
