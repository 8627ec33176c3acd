"""Compiled inner loops for the coupled field/ensemble update.

One call advances every (slice, detuning-bin) cell by one RK4 step.  The
field is marched slice by slice inside each RK4 stage: slice j only depends
on slices < j, so all four stages of a slice can be completed before moving
on.  ``centre`` selects which field drives a slice: 0.0 uses the field at the
slice entrance (plain forward Euler), 0.5 uses the slice-centre estimate
E_j - i*kdz*P_j/2 (same Euler march, second-order accurate in z).

Every reduction over detuning bins runs in a fixed order inside one thread,
so results do not depend on how many worker threads call these functions.
"""

import numba
import numpy as np

_JIT = dict(cache=True, nogil=True, fastmath=True, error_model="numpy")


@numba.njit(**_JIT)
def field_profile(ce, cg, e0, wg, kdz, snap):
    """Field leaving the last slice for the current ensemble state.

    ``cg`` may be empty (perturbative mode, cg = 1).  Writes the field at
    every slice boundary into ``snap`` if it has room.
    """
    nz, nk = ce.shape
    full = cg.shape[0] > 0
    e = e0
    record = snap.shape[0] == nz + 1
    for j in range(nz):
        if record:
            snap[j] = e
        p = 0j
        if full:
            for k in range(nk):
                p += wg[k] * ce[j, k] * cg[j, k].conjugate()
        else:
            for k in range(nk):
                p += wg[k] * ce[j, k]
        e = e - 1j * kdz * p
    if record:
        snap[nz] = e
    return e


@numba.njit(**_JIT)
def step_perturbative(ce_all, cs_all, eb, em, ee, ob, om, oe, dk, wg, kdz, h, centre):
    """Advance the perturbative ensemble (cg = 1) by one step.

    Returns the field leaving the medium at the start of the step.
    """
    nz, nk = ce_all.shape
    e1 = eb
    e2 = em
    e3 = em
    e4 = ee
    hh = 0.5 * h
    h6 = h / 6.0
    hb = 0.5 * ob
    hm = 0.5 * om
    he = 0.5 * oe
    hbc = hb.conjugate()
    hmc = hm.conjugate()
    hec = he.conjugate()
    cc = centre * kdz
    ca = np.empty(nk, np.complex128)
    sa = np.empty(nk, np.complex128)
    cb = np.empty(nk, np.complex128)
    sb = np.empty(nk, np.complex128)
    ae = np.empty(nk, np.complex128)
    asp = np.empty(nk, np.complex128)
    for j in range(nz):
        ce = ce_all[j]
        cs = cs_all[j]
        p = 0j
        for k in range(nk):
            p += wg[k] * ce[k]
        ec = 0.5 * (e1 - 1j * cc * p)
        e1 = e1 - 1j * kdz * p
        p = 0j
        for k in range(nk):
            a = -1j * (ec - dk[k] * ce[k] + hb * cs[k])
            b = -1j * hbc * ce[k]
            ae[k] = a
            asp[k] = b
            ca[k] = ce[k] + hh * a
            sa[k] = cs[k] + hh * b
            p += wg[k] * ca[k]
        ec = 0.5 * (e2 - 1j * cc * p)
        e2 = e2 - 1j * kdz * p
        p = 0j
        for k in range(nk):
            a = -1j * (ec - dk[k] * ca[k] + hm * sa[k])
            b = -1j * hmc * ca[k]
            ae[k] += 2.0 * a
            asp[k] += 2.0 * b
            cb[k] = ce[k] + hh * a
            sb[k] = cs[k] + hh * b
            p += wg[k] * cb[k]
        ec = 0.5 * (e3 - 1j * cc * p)
        e3 = e3 - 1j * kdz * p
        p = 0j
        for k in range(nk):
            a = -1j * (ec - dk[k] * cb[k] + hm * sb[k])
            b = -1j * hmc * cb[k]
            ae[k] += 2.0 * a
            asp[k] += 2.0 * b
            ca[k] = ce[k] + h * a
            sa[k] = cs[k] + h * b
            p += wg[k] * ca[k]
        ec = 0.5 * (e4 - 1j * cc * p)
        e4 = e4 - 1j * kdz * p
        for k in range(nk):
            a = -1j * (ec - dk[k] * ca[k] + he * sa[k])
            b = -1j * hec * ca[k]
            ce[k] += h6 * (ae[k] + a)
            cs[k] += h6 * (asp[k] + b)
    return e1


@numba.njit(**_JIT)
def _full_rhs(ec, o, cg, ce, cs):
    hc = 0.5 * o
    dg = -1j * ec.conjugate() * ce
    de = -1j * (ec * cg + hc * cs)
    ds = -1j * hc.conjugate() * ce
    return dg, de, ds


@numba.njit(**_JIT)
def step_full(cg_all, ce_all, cs_all, eb, em, ee, ob, om, oe, dk, wg, kdz, h, centre):
    """Advance the full three-amplitude ensemble by one step; returns the exit field."""
    nz, nk = ce_all.shape
    es = np.array([eb, em, em, ee])
    os_ = np.array([ob, om, om, oe])
    coef = np.array([0.5 * h, 0.5 * h, h, 0.0])
    wts = np.array([1.0, 2.0, 2.0, 1.0])
    cc = centre * kdz
    sg = np.empty(nk, np.complex128)
    se = np.empty(nk, np.complex128)
    ss = np.empty(nk, np.complex128)
    ag = np.empty(nk, np.complex128)
    ae = np.empty(nk, np.complex128)
    asp = np.empty(nk, np.complex128)
    for j in range(nz):
        cg = cg_all[j]
        ce = ce_all[j]
        cs = cs_all[j]
        for k in range(nk):
            sg[k] = cg[k]
            se[k] = ce[k]
            ss[k] = cs[k]
            ag[k] = 0j
            ae[k] = 0j
            asp[k] = 0j
        for s in range(4):
            p = 0j
            for k in range(nk):
                p += wg[k] * se[k] * sg[k].conjugate()
            ec = 0.5 * (es[s] - 1j * cc * p)
            es[s] = es[s] - 1j * kdz * p
            o = os_[s]
            c = coef[s]
            w = wts[s]
            for k in range(nk):
                dg, de, ds = _full_rhs(ec, o, sg[k], se[k], ss[k])
                de += 1j * dk[k] * se[k]
                ag[k] += w * dg
                ae[k] += w * de
                asp[k] += w * ds
                sg[k] = cg[k] + c * dg
                se[k] = ce[k] + c * de
                ss[k] = cs[k] + c * ds
        for k in range(nk):
            cg[k] += h / 6.0 * ag[k]
            ce[k] += h / 6.0 * ae[k]
            cs[k] += h / 6.0 * asp[k]
    return es[0]
