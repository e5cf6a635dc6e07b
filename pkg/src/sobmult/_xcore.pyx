# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: extended-exponent arithmetic, program evaluation and
adaptive Gauss-Kronrod quadrature.

Line-by-line mirror of ``_xcore_py``; any change must be made in both.
"""

from libc.math cimport frexp, ldexp, exp, log, sin, cos, sqrt, floor, fabs, isfinite, copysign, INFINITY, NAN
from libc.stdlib cimport malloc, realloc, free
from libc.stdint cimport int64_t

import numpy as np

cdef enum:
    OP_CONST = 0
    OP_X = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_SIN = 8
    OP_COS = 9
    OP_EXP = 10
    OP_SQRT = 11
    OP_LOG = 12

cdef enum:
    ST_OK = 0
    ST_MAXSUB = 1
    ST_DOMAIN = 2
    ST_OVERFLOW = 3
    ST_ROUNDOFF = 4

cdef double LN2 = 0.6931471805599453
cdef int64_t XMAX = (<int64_t>1) << 60
cdef double EXP_CUT = 288230376151711744.0  # 2**58

cdef double XGK[7]
cdef double WGK[8]
cdef double WG[4]
XGK[:] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
]
WGK[:] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
]
WG[:] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
]


cdef struct xf:
    double m
    int64_t e


cdef inline xf mk(double m, int64_t e) noexcept nogil:
    cdef xf r
    r.m = m
    r.e = e
    return r


cdef inline xf xnorm(double m, int64_t e) noexcept nogil:
    cdef int k
    if m == 0.0 or not isfinite(m):
        return mk(m, 0)
    m = frexp(m, &k)
    e += k
    if e > XMAX:
        return mk(copysign(INFINITY, m), 0)
    if e < -XMAX:
        return mk(0.0, 0)
    return mk(m, e)


cdef inline xf from_double(double d) noexcept nogil:
    return xnorm(d, 0)


cdef inline double to_double(xf a) noexcept nogil:
    if a.m == 0.0 or not isfinite(a.m):
        return a.m
    if a.e > 1024:
        return copysign(INFINITY, a.m)
    if a.e < -2000:
        return 0.0 * a.m
    return ldexp(a.m, <int>a.e)


cdef inline xf xadd(xf a, xf b) noexcept nogil:
    cdef int64_t d
    if a.m == 0.0:
        return b
    if b.m == 0.0:
        return a
    if not isfinite(a.m) or not isfinite(b.m):
        return xnorm(a.m + b.m, 0)
    if a.e >= b.e:
        d = b.e - a.e
        if d < -1100:
            return a
        return xnorm(a.m + ldexp(b.m, <int>d), a.e)
    d = a.e - b.e
    if d < -1100:
        return b
    return xnorm(b.m + ldexp(a.m, <int>d), b.e)


cdef inline xf xneg(xf a) noexcept nogil:
    return mk(-a.m, a.e)


cdef inline xf xsub(xf a, xf b) noexcept nogil:
    return xadd(a, mk(-b.m, b.e))


cdef inline xf xmul(xf a, xf b) noexcept nogil:
    return xnorm(a.m * b.m, a.e + b.e)


cdef inline xf xabs(xf a) noexcept nogil:
    return mk(fabs(a.m), a.e)


cdef inline bint xgt(xf a, xf b) noexcept nogil:
    if a.m == 0.0:
        return False
    if b.m == 0.0:
        return True
    if a.e != b.e:
        return a.e > b.e
    return a.m > b.m


cdef inline bint xgt_signed(xf a, xf b) noexcept nogil:
    return xsub(a, b).m > 0.0


cdef int run(const int64_t* ops, const int64_t* args, const double* cm,
             const int64_t* ce, Py_ssize_t n, double x, xf* stack, xf* out) noexcept nogil:
    cdef Py_ssize_t i, sp = 0
    cdef int64_t op, k, npow
    cdef xf xv = from_double(x)
    cdef xf a, b, result, base
    cdef double t, kd, r
    for i in range(n):
        op = ops[i]
        if op == OP_CONST:
            stack[sp] = mk(cm[args[i]], ce[args[i]])
            sp += 1
        elif op == OP_X:
            stack[sp] = xv
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            stack[sp - 1] = xadd(stack[sp - 1], stack[sp])
        elif op == OP_SUB:
            sp -= 1
            stack[sp - 1] = xsub(stack[sp - 1], stack[sp])
        elif op == OP_MUL:
            sp -= 1
            stack[sp - 1] = xmul(stack[sp - 1], stack[sp])
        elif op == OP_DIV:
            sp -= 1
            b = stack[sp]
            if b.m == 0.0:
                return ST_DOMAIN
            a = stack[sp - 1]
            stack[sp - 1] = xnorm(a.m / b.m, a.e - b.e)
        elif op == OP_NEG:
            stack[sp - 1] = xneg(stack[sp - 1])
        elif op == OP_POW:
            npow = args[i]
            k = -npow if npow < 0 else npow
            result = mk(0.5, 1)
            base = stack[sp - 1]
            while k:
                if k & 1:
                    result = xmul(result, base)
                k >>= 1
                if k:
                    base = xmul(base, base)
            if npow < 0:
                if result.m == 0.0:
                    return ST_DOMAIN
                result = xnorm(0.5 / result.m, 1 - result.e)
            stack[sp - 1] = result
        elif op == OP_SIN or op == OP_COS:
            t = to_double(stack[sp - 1])
            if not isfinite(t):
                return ST_OVERFLOW
            stack[sp - 1] = from_double(sin(t) if op == OP_SIN else cos(t))
        elif op == OP_EXP:
            a = stack[sp - 1]
            if not isfinite(a.m):
                return ST_OVERFLOW
            t = to_double(a)
            if t > EXP_CUT:
                return ST_OVERFLOW
            if t < -EXP_CUT:
                stack[sp - 1] = mk(0.0, 0)
            elif -708.0 < t < 708.0:
                stack[sp - 1] = from_double(exp(t))
            else:
                kd = floor(t / LN2 + 0.5)
                r = t - kd * LN2
                stack[sp - 1] = xnorm(exp(r), <int64_t>kd)
        elif op == OP_SQRT:
            a = stack[sp - 1]
            if a.m < 0.0:
                return ST_DOMAIN
            if a.m == 0.0:
                stack[sp - 1] = mk(0.0, 0)
            else:
                if not isfinite(a.m):
                    return ST_OVERFLOW
                if a.e & 1:
                    a.m = a.m * 2.0
                    a.e = a.e - 1
                stack[sp - 1] = xnorm(sqrt(a.m), a.e // 2)
        elif op == OP_LOG:
            a = stack[sp - 1]
            if not a.m > 0.0 or not isfinite(a.m):
                return ST_DOMAIN
            stack[sp - 1] = from_double(log(a.m) + <double>a.e * LN2)
        else:
            return -1
    out[0] = stack[sp - 1]
    if not isfinite(out[0].m):
        return ST_OVERFLOW
    return ST_OK


cdef struct Prog:
    const int64_t* ops
    const int64_t* args
    const double* cm
    const int64_t* ce
    Py_ssize_t n
    xf* stack


cdef inline int feval(Prog* p, double x, xf* out) noexcept nogil:
    return run(p.ops, p.args, p.cm, p.ce, p.n, x, p.stack, out)


cdef int gk15(Prog* p, double a, double b, xf* val, xf* err) noexcept nogil:
    cdef double c = 0.5 * (a + b)
    cdef double hd = 0.5 * (b - a)
    cdef xf h = from_double(hd)
    cdef xf fc, f1, f2, s, resk, resg
    cdef double dx
    cdef int j, st
    st = feval(p, c, &fc)
    if st:
        return st
    resk = xmul(from_double(WGK[7]), fc)
    resg = xmul(from_double(WG[3]), fc)
    for j in range(7):
        dx = hd * XGK[j]
        st = feval(p, c - dx, &f1)
        if st:
            return st
        st = feval(p, c + dx, &f2)
        if st:
            return st
        s = xadd(f1, f2)
        resk = xadd(resk, xmul(from_double(WGK[j]), s))
        if j & 1:
            resg = xadd(resg, xmul(from_double(WG[j >> 1]), s))
    val[0] = xmul(resk, h)
    err[0] = xabs(xmul(xsub(resk, resg), h))
    return ST_OK


cdef struct Store:
    double* ia
    double* ib
    xf* vals
    xf* errs
    char* alive
    Py_ssize_t* heap
    Py_ssize_t count
    Py_ssize_t hsize
    Py_ssize_t cap


cdef inline bint before(Store* s, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    # heap order: larger error first, then smaller index
    if xgt(s.errs[i], s.errs[j]):
        return True
    if xgt(s.errs[j], s.errs[i]):
        return False
    return i < j


cdef void hpush(Store* s, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t k = s.hsize, parent
    s.heap[k] = i
    s.hsize += 1
    while k > 0:
        parent = (k - 1) >> 1
        if before(s, s.heap[k], s.heap[parent]):
            s.heap[k], s.heap[parent] = s.heap[parent], s.heap[k]
            k = parent
        else:
            break


cdef Py_ssize_t hpop(Store* s) noexcept nogil:
    cdef Py_ssize_t top = s.heap[0], k = 0, l, r, best
    s.hsize -= 1
    s.heap[0] = s.heap[s.hsize]
    while True:
        l = 2 * k + 1
        r = l + 1
        best = k
        if l < s.hsize and before(s, s.heap[l], s.heap[best]):
            best = l
        if r < s.hsize and before(s, s.heap[r], s.heap[best]):
            best = r
        if best == k:
            break
        s.heap[k], s.heap[best] = s.heap[best], s.heap[k]
        k = best
    return top


cdef int grow(Store* s, Py_ssize_t need) noexcept nogil:
    cdef Py_ssize_t cap = s.cap
    if need <= cap:
        return 0
    while cap < need:
        cap *= 2
    s.ia = <double*>realloc(s.ia, cap * sizeof(double))
    s.ib = <double*>realloc(s.ib, cap * sizeof(double))
    s.vals = <xf*>realloc(s.vals, cap * sizeof(xf))
    s.errs = <xf*>realloc(s.errs, cap * sizeof(xf))
    s.alive = <char*>realloc(s.alive, cap * sizeof(char))
    s.heap = <Py_ssize_t*>realloc(s.heap, cap * sizeof(Py_ssize_t))
    if not s.ia or not s.ib or not s.vals or not s.errs or not s.alive or not s.heap:
        return -1
    s.cap = cap
    return 0


cdef void totals(Store* s, xf* tv, xf* te) noexcept nogil:
    cdef Py_ssize_t k
    tv[0] = mk(0.0, 0)
    te[0] = mk(0.0, 0)
    for k in range(s.count):
        if s.alive[k]:
            tv[0] = xadd(tv[0], s.vals[k])
            te[0] = xadd(te[0], s.errs[k])


cdef inline bint done(xf total_e, xf total_v, xf tol_x, xf abs_x) noexcept nogil:
    return not xgt_signed(total_e, xmul(tol_x, xabs(total_v))) or not xgt_signed(total_e, abs_x)


cdef int adapt(Prog* p, double a, double b, double tol, double abs_tol, Py_ssize_t max_subdiv,
               xf* out_v, xf* out_e, Py_ssize_t* out_n) noexcept nogil:
    cdef Store s
    cdef xf v0, e0, vl, el, vr, er, total_v, total_e, tol_x, abs_x
    cdef Py_ssize_t nsub = 0, i, j
    cdef double lo, hi, c
    cdef int status = ST_OK, st
    st = gk15(p, a, b, &v0, &e0)
    if st:
        out_v[0] = mk(NAN, 0)
        out_e[0] = mk(INFINITY, 0)
        out_n[0] = 1
        return st
    s.cap = 64
    s.ia = <double*>malloc(s.cap * sizeof(double))
    s.ib = <double*>malloc(s.cap * sizeof(double))
    s.vals = <xf*>malloc(s.cap * sizeof(xf))
    s.errs = <xf*>malloc(s.cap * sizeof(xf))
    s.alive = <char*>malloc(s.cap * sizeof(char))
    s.heap = <Py_ssize_t*>malloc(s.cap * sizeof(Py_ssize_t))
    s.count = 1
    s.hsize = 0
    s.ia[0] = a
    s.ib[0] = b
    s.vals[0] = v0
    s.errs[0] = e0
    s.alive[0] = 1
    hpush(&s, 0)
    total_v = v0
    total_e = e0
    tol_x = from_double(tol)
    abs_x = from_double(abs_tol)
    while True:
        if not isfinite(total_v.m) or not isfinite(total_e.m):
            status = ST_OVERFLOW
            break
        if done(total_e, total_v, tol_x, abs_x):
            totals(&s, &total_v, &total_e)
            if done(total_e, total_v, tol_x, abs_x):
                break
        if nsub >= max_subdiv:
            status = ST_MAXSUB
            break
        i = hpop(&s)
        lo = s.ia[i]
        hi = s.ib[i]
        c = 0.5 * (lo + hi)
        if not (lo < c < hi):
            hpush(&s, i)
            status = ST_ROUNDOFF
            break
        st = gk15(p, lo, c, &vl, &el)
        if not st:
            st = gk15(p, c, hi, &vr, &er)
        if st:
            hpush(&s, i)
            status = st
            break
        total_v = xadd(xadd(xsub(total_v, s.vals[i]), vl), vr)
        total_e = xadd(xadd(xsub(total_e, s.errs[i]), el), er)
        s.alive[i] = 0
        if grow(&s, s.count + 2):
            status = ST_OVERFLOW
            break
        j = s.count
        s.ia[j] = lo
        s.ib[j] = c
        s.vals[j] = vl
        s.errs[j] = el
        s.alive[j] = 1
        s.count += 1
        hpush(&s, j)
        j = s.count
        s.ia[j] = c
        s.ib[j] = hi
        s.vals[j] = vr
        s.errs[j] = er
        s.alive[j] = 1
        s.count += 1
        hpush(&s, j)
        nsub += 1
    totals(&s, &total_v, &total_e)
    out_v[0] = total_v
    out_e[0] = total_e
    out_n[0] = nsub + 1
    free(s.ia)
    free(s.ib)
    free(s.vals)
    free(s.errs)
    free(s.alive)
    free(s.heap)
    return status


cdef class _Program:
    cdef object _keep
    cdef Prog p

    def __cinit__(self, prog):
        ops, args, cm, ce = prog
        cdef const int64_t[::1] ops_v = np.ascontiguousarray(ops, dtype=np.int64)
        cdef const int64_t[::1] args_v = np.ascontiguousarray(args, dtype=np.int64)
        cdef const double[::1] cm_v = np.ascontiguousarray(cm, dtype=np.float64)
        cdef const int64_t[::1] ce_v = np.ascontiguousarray(ce, dtype=np.int64)
        if ops_v.shape[0] == 0:
            raise ValueError("empty program")
        if cm_v.shape[0] == 0:
            cm_v = np.zeros(1)
            ce_v = np.zeros(1, dtype=np.int64)
        self._keep = (ops_v, args_v, cm_v, ce_v)
        self.p.ops = &ops_v[0]
        self.p.args = &args_v[0]
        self.p.cm = &cm_v[0]
        self.p.ce = &ce_v[0]
        self.p.n = ops_v.shape[0]
        self.p.stack = <xf*>malloc((ops_v.shape[0] + 1) * sizeof(xf))

    def __dealloc__(self):
        free(self.p.stack)


def eval_program(prog, xs):
    """Evaluate at each point; returns a list of ``(m, e, status)``."""
    cdef _Program P = _Program(prog)
    cdef xf out
    cdef int st
    res = []
    for x in xs:
        st = feval(&P.p, <double>float(x), &out)
        if st:
            res.append((float("nan"), 0, st))
        else:
            res.append((out.m, out.e, ST_OK))
    return res


def integrate_program(prog, a, b, tol, max_subdiv, abs_tol=0.0):
    """Global adaptive GK15 of a compiled program over ``[a, b]``.

    Returns ``(vm, ve, em, ee, intervals, status)``.
    """
    cdef _Program P = _Program(prog)
    cdef xf v, e
    cdef Py_ssize_t n
    cdef double da = float(a), db = float(b), dt = float(tol), dabs = float(abs_tol)
    cdef Py_ssize_t ms = int(max_subdiv)
    cdef int st
    with nogil:
        st = adapt(&P.p, da, db, dt, dabs, ms, &v, &e, &n)
    return (v.m, v.e, e.m, e.e, n, st)
