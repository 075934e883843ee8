"""Compiled inner loops for trajectory and coupled runs.

Both loops consume a flat buffer of uniforms in [0, 1), two per step, in
the documented order: vertex kind uses (vertex, neighbour slot), edge kind
uses (edge index, orientation).  The pure-Python stepper in
:mod:`divsim.dynamics` consumes the identical order, so trajectories agree
given the same generator.

Per-opinion arrays are indexed by opinion value; ``degsum[i]`` is the total
degree of the vertices holding ``i`` so that pi(A_i) = degsum[i] / 2m is
exact.  ``DX`` is the integer sum of d(v) * X_v, so Z = n * DX / 2m.
"""

from __future__ import annotations

from numba import njit

VERTEX = 0
EDGE = 1
DIV = 0
PULL = 1

# layout of the int64 ``st`` scalar-state vector
T, S_MIN, L_MAX, SUM, DX, TWO_LEFT, CONS, S0, L0, DRIFT_S, DRIFT_DX, S_INIT, DX_INIT = range(13)
NST = 13


@njit(cache=True, nogil=True, inline="always")
def _select(kind, u1, u2, n, m, indptr, indices, edges):
    if kind == VERTEX:
        v = int(u1 * n)
        if v >= n:
            v = n - 1
        d = indptr[v + 1] - indptr[v]
        j = int(u2 * d)
        if j >= d:
            j = d - 1
        return v, indices[indptr[v] + j]
    e = int(u1 * m)
    if e >= m:
        e = m - 1
    if u2 < 0.5:
        return edges[e, 0], edges[e, 1]
    return edges[e, 1], edges[e, 0]


@njit(cache=True, nogil=True)
def select_pair(kind, u1, u2, n, m, indptr, indices, edges):
    return _select(kind, u1, u2, n, m, indptr, indices, edges)


@njit(cache=True, nogil=True)
def run_chunk(kind, rule, n, m, indptr, indices, edges, degrees, x, counts, degsum, st,
              eps, extr_hits, uniforms, stride, samples, step_cap):
    """Advance until consensus, ``step_cap`` or the uniforms run out.

    Returns the number of weight samples written into ``samples``.
    """
    nsteps = uniforms.shape[0] // 2
    nsamp = 0
    two_m = 2.0 * m
    neps = eps.shape[0]
    pending = 0
    for i in range(neps):
        if extr_hits[i] < 0:
            pending += 1
    t = st[T]
    s = st[S_MIN]
    ell = st[L_MAX]
    tot = st[SUM]
    dx = st[DX]
    s0 = st[S0]
    l0 = st[L0]
    for step in range(nsteps):
        if s == ell or t >= step_cap:
            break
        v, w = _select(kind, uniforms[2 * step], uniforms[2 * step + 1], n, m, indptr, indices, edges)
        t += 1
        xv = x[v]
        xw = x[w]
        if xv != xw:
            if rule == DIV:
                nv = xv + 1 if xv < xw else xv - 1
            else:
                nv = xw
            dv = degrees[v]
            x[v] = nv
            counts[xv] -= 1
            counts[nv] += 1
            degsum[xv] -= dv
            degsum[nv] += dv
            tot += nv - xv
            dx += dv * (nv - xv)
            if counts[xv] == 0:
                while counts[s] == 0:
                    s += 1
                while counts[ell] == 0:
                    ell -= 1
            a = tot - st[S_INIT]
            if a < 0:
                a = -a
            if a > st[DRIFT_S]:
                st[DRIFT_S] = a
            a = dx - st[DX_INIT]
            if a < 0:
                a = -a
            if a > st[DRIFT_DX]:
                st[DRIFT_DX] = a
            if st[TWO_LEFT] < 0 and ell - s <= 1:
                st[TWO_LEFT] = t
            if pending > 0:
                ms = degsum[s0] / two_m
                ml = degsum[l0] / two_m
                mn = ms if ms < ml else ml
                for i in range(neps):
                    if extr_hits[i] < 0 and mn <= eps[i]:
                        extr_hits[i] = t
                        pending -= 1
            if s == ell:
                st[CONS] = t
        if stride > 0 and t % stride == 0:
            samples[nsamp, 0] = t
            samples[nsamp, 1] = tot
            samples[nsamp, 2] = dx
            nsamp += 1
    st[T] = t
    st[S_MIN] = s
    st[L_MAX] = ell
    st[SUM] = tot
    st[DX] = dx
    return nsamp


# layout of the coupled-run scalar vector
C_T, C_S, C_L, C_B, C_DIV_CONS, C_PULL_CONS, C_BAD, C_VIOL, C_FIRST_VIOL, C_CONSEQ, C_S0, C_L0 = range(12)
NCST = 12


@njit(cache=True, nogil=True, inline="always")
def _bad(xv, bv, lo, hi):
    # lo-labelled class must sit inside B, hi-labelled class outside B
    return (xv == lo and bv == 0) or (xv == hi and bv == 1)


@njit(cache=True, nogil=True)
def coupled_chunk(kind, n, m, indptr, indices, edges, x, b, counts, st, inside, outside,
                  uniforms, step_cap):
    """Drive DIV (``x``) and two-opinion pull voting (``b``) with shared draws.

    ``inside`` is the DIV label dominated by B, ``outside`` the label
    dominated by V minus B.  Counts steps at which any vertex violates the
    domination, and steps at which the pull chain is absorbed while the
    corresponding DIV extreme class is still non-empty.
    """
    nsteps = uniforms.shape[0] // 2
    t = st[C_T]
    s = st[C_S]
    ell = st[C_L]
    nb = st[C_B]
    bad = st[C_BAD]
    for step in range(nsteps):
        if t >= step_cap or (s == ell and (nb == 0 or nb == n)):
            break
        v, w = _select(kind, uniforms[2 * step], uniforms[2 * step + 1], n, m, indptr, indices, edges)
        t += 1
        xv = x[v]
        bv = b[v]
        was_bad = _bad(xv, bv, inside, outside)
        xw = x[w]
        if xv != xw:
            nv = xv + 1 if xv < xw else xv - 1
            x[v] = nv
            counts[xv] -= 1
            counts[nv] += 1
            if counts[xv] == 0:
                while counts[s] == 0:
                    s += 1
                while counts[ell] == 0:
                    ell -= 1
            if s == ell and st[C_DIV_CONS] < 0:
                st[C_DIV_CONS] = t
        nbv = b[w]
        if nbv != bv:
            b[v] = nbv
            nb += 1 if nbv == 1 else -1
            if (nb == 0 or nb == n) and st[C_PULL_CONS] < 0:
                st[C_PULL_CONS] = t
        now_bad = _bad(x[v], b[v], inside, outside)
        if now_bad != was_bad:
            bad += 1 if now_bad else -1
        if bad > 0:
            st[C_VIOL] += 1
            if st[C_FIRST_VIOL] < 0:
                st[C_FIRST_VIOL] = t
        if nb == 0 and counts[inside] > 0:
            st[C_CONSEQ] += 1
        elif nb == n and counts[outside] > 0:
            st[C_CONSEQ] += 1
    st[C_T] = t
    st[C_S] = s
    st[C_L] = ell
    st[C_B] = nb
    st[C_BAD] = bad
    return t

