"""Pure-Python kernels: extended-exponent arithmetic, program evaluation and
adaptive Gauss-Kronrod quadrature.

A wide number is a pair ``(m, e)`` meaning ``m * 2**e`` with ``m`` either 0,
non-finite, or ``0.5 <= |m| < 1``.  Every operation here is mirrored line by
line in ``_xcore.pyx``; both use the platform libm, so the two backends agree
bitwise.  Keep them in sync.
"""

import heapq
import math

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

ST_OK = 0
ST_MAXSUB = 1
ST_DOMAIN = 2
ST_OVERFLOW = 3
ST_ROUNDOFF = 4

LN2 = 0.6931471805599453
XMAX = 1 << 60
EXP_CUT = 2.0 ** 58

XGK = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
)
WGK = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
WG = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)

ZERO = (0.0, 0)
ONE = (0.5, 1)

_frexp = math.frexp
_ldexp = math.ldexp
_isfinite = math.isfinite


class _Fault(Exception):
    def __init__(self, status):
        self.status = status


def xnorm(m, e):
    if m == 0.0 or not _isfinite(m):
        return (m, 0)
    m, k = _frexp(m)
    e += k
    if e > XMAX:
        return (math.copysign(math.inf, m), 0)
    if e < -XMAX:
        return ZERO
    return (m, e)


def from_double(d):
    return xnorm(d, 0)


def to_double(a):
    m, e = a
    if m == 0.0 or not _isfinite(m):
        return m
    if e > 1024:
        return math.copysign(math.inf, m)
    if e < -2000:
        return 0.0 * m
    return _ldexp(m, e)


def xadd(a, b):
    if a[0] == 0.0:
        return b
    if b[0] == 0.0:
        return a
    if not _isfinite(a[0]) or not _isfinite(b[0]):
        return xnorm(a[0] + b[0], 0)
    if a[1] >= b[1]:
        d = b[1] - a[1]
        if d < -1100:
            return a
        return xnorm(a[0] + _ldexp(b[0], d), a[1])
    d = a[1] - b[1]
    if d < -1100:
        return b
    return xnorm(b[0] + _ldexp(a[0], d), b[1])


def xneg(a):
    return (-a[0], a[1])


def xsub(a, b):
    return xadd(a, (-b[0], b[1]))


def xmul(a, b):
    return xnorm(a[0] * b[0], a[1] + b[1])


def xdiv(a, b):
    if b[0] == 0.0:
        raise _Fault(ST_DOMAIN)
    return xnorm(a[0] / b[0], a[1] - b[1])


def xabs(a):
    return (abs(a[0]), a[1])


def xpow(a, n):
    k = -n if n < 0 else n
    result = ONE
    base = a
    while k:
        if k & 1:
            result = xmul(result, base)
        k >>= 1
        if k:
            base = xmul(base, base)
    if n < 0:
        return xdiv(ONE, result)
    return result


def xsin(a):
    t = to_double(a)
    if not _isfinite(t):
        raise _Fault(ST_OVERFLOW)
    return from_double(math.sin(t))


def xcos(a):
    t = to_double(a)
    if not _isfinite(t):
        raise _Fault(ST_OVERFLOW)
    return from_double(math.cos(t))


def xexp(a):
    if not _isfinite(a[0]):
        raise _Fault(ST_OVERFLOW)
    t = to_double(a)
    if t > EXP_CUT:
        raise _Fault(ST_OVERFLOW)
    if t < -EXP_CUT:
        return ZERO
    if -708.0 < t < 708.0:
        return from_double(math.exp(t))
    kd = math.floor(t / LN2 + 0.5)
    r = t - kd * LN2
    return xnorm(math.exp(r), int(kd))


def xlog(a):
    if not a[0] > 0.0 or not _isfinite(a[0]):
        raise _Fault(ST_DOMAIN)
    return from_double(math.log(a[0]) + a[1] * LN2)


def xsqrt(a):
    m, e = a
    if m < 0.0:
        raise _Fault(ST_DOMAIN)
    if m == 0.0:
        return ZERO
    if not _isfinite(m):
        raise _Fault(ST_OVERFLOW)
    if e & 1:
        m = m * 2.0
        e = e - 1
    return xnorm(math.sqrt(m), e // 2)


def xgt(a, b):
    """Strict ``a > b`` for non-negative wide numbers."""
    if a[0] == 0.0:
        return False
    if b[0] == 0.0:
        return True
    if a[1] != b[1]:
        return a[1] > b[1]
    return a[0] > b[0]


def xle(a, b):
    """``a <= b`` for arbitrary finite wide numbers."""
    return not xgt_signed(a, b)


def xgt_signed(a, b):
    d = xsub(a, b)
    return d[0] > 0.0


def run(prog, x):
    """Evaluate a compiled program at ``x``; raises ``_Fault`` on failure."""
    ops, args, cm, ce = prog
    xv = from_double(x)
    stack = []
    push = stack.append
    pop = stack.pop
    for i in range(len(ops)):
        op = ops[i]
        if op == OP_CONST:
            j = args[i]
            push((cm[j], ce[j]))
        elif op == OP_X:
            push(xv)
        elif op == OP_ADD:
            b = pop()
            push(xadd(pop(), b))
        elif op == OP_SUB:
            b = pop()
            push(xsub(pop(), b))
        elif op == OP_MUL:
            b = pop()
            push(xmul(pop(), b))
        elif op == OP_DIV:
            b = pop()
            push(xdiv(pop(), b))
        elif op == OP_NEG:
            push(xneg(pop()))
        elif op == OP_POW:
            push(xpow(pop(), args[i]))
        elif op == OP_SIN:
            push(xsin(pop()))
        elif op == OP_COS:
            push(xcos(pop()))
        elif op == OP_EXP:
            push(xexp(pop()))
        elif op == OP_SQRT:
            push(xsqrt(pop()))
        elif op == OP_LOG:
            push(xlog(pop()))
        else:
            raise ValueError(f"bad opcode {op}")
    r = stack[-1]
    if not _isfinite(r[0]):
        raise _Fault(ST_OVERFLOW)
    return r


def eval_program(prog, xs):
    """Evaluate at each point; returns a list of ``(m, e, status)``."""
    out = []
    for x in xs:
        try:
            m, e = run(prog, float(x))
            out.append((m, e, ST_OK))
        except _Fault as exc:
            out.append((math.nan, 0, exc.status))
    return out


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    hd = 0.5 * (b - a)
    h = from_double(hd)
    fc = f(c)
    resk = xmul(from_double(WGK[7]), fc)
    resg = xmul(from_double(WG[3]), fc)
    for j in range(7):
        dx = hd * XGK[j]
        s = xadd(f(c - dx), f(c + dx))
        resk = xadd(resk, xmul(from_double(WGK[j]), s))
        if j & 1:
            resg = xadd(resg, xmul(from_double(WG[j >> 1]), s))
    val = xmul(resk, h)
    err = xabs(xmul(xsub(resk, resg), h))
    return val, err


def _key(err, idx):
    # heapq is a min-heap: order by descending err, then ascending index
    m, e = err
    if m == 0.0:
        return (1, 0, 0.0, idx)
    return (0, -e, -m, idx)


def adapt(f, a, b, tol, max_subdiv, abs_tol=0.0):
    """Global adaptive GK15 over ``[a, b]`` with a wide-valued integrand ``f``.

    Returns ``(vm, ve, em, ee, intervals, status)``.
    """
    ia = [a]
    ib = [b]
    vals = []
    errs = []
    alive = []
    try:
        v0, e0 = _gk15(f, a, b)
    except _Fault as exc:
        return (math.nan, 0, math.inf, 0, 1, exc.status)
    vals.append(v0)
    errs.append(e0)
    alive.append(True)
    heap = [_key(e0, 0)]
    total_v = v0
    total_e = e0
    tol_x = from_double(tol)
    abs_x = from_double(abs_tol)
    nsub = 0
    status = ST_OK
    while True:
        if not _isfinite(total_v[0]) or not _isfinite(total_e[0]):
            status = ST_OVERFLOW
            break
        if _done(total_e, total_v, tol_x, abs_x):
            total_v, total_e = _totals(vals, errs, alive)
            if _done(total_e, total_v, tol_x, abs_x):
                break
        if nsub >= max_subdiv:
            status = ST_MAXSUB
            break
        i = heapq.heappop(heap)[3]
        lo = ia[i]
        hi = ib[i]
        c = 0.5 * (lo + hi)
        if not (lo < c < hi):
            heapq.heappush(heap, _key(errs[i], i))
            status = ST_ROUNDOFF
            break
        try:
            vl, el = _gk15(f, lo, c)
            vr, er = _gk15(f, c, hi)
        except _Fault as exc:
            heapq.heappush(heap, _key(errs[i], i))
            status = exc.status
            break
        total_v = xadd(xadd(xsub(total_v, vals[i]), vl), vr)
        total_e = xadd(xadd(xsub(total_e, errs[i]), el), er)
        alive[i] = False
        for lo2, hi2, v, e in ((lo, c, vl, el), (c, hi, vr, er)):
            j = len(ia)
            ia.append(lo2)
            ib.append(hi2)
            vals.append(v)
            errs.append(e)
            alive.append(True)
            heapq.heappush(heap, _key(e, j))
        nsub += 1
    total_v, total_e = _totals(vals, errs, alive)
    return (total_v[0], total_v[1], total_e[0], total_e[1], nsub + 1, status)


def _done(total_e, total_v, tol_x, abs_x):
    return not xgt_signed(total_e, xmul(tol_x, xabs(total_v))) or not xgt_signed(total_e, abs_x)


def _totals(vals, errs, alive):
    tv = ZERO
    te = ZERO
    for k in range(len(vals)):
        if alive[k]:
            tv = xadd(tv, vals[k])
            te = xadd(te, errs[k])
    return tv, te


def integrate_program(prog, a, b, tol, max_subdiv, abs_tol=0.0):
    return adapt(lambda x: run(prog, x), float(a), float(b), float(tol), int(max_subdiv), float(abs_tol))
