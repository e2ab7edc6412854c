"""Hot numeric kernels: numba-jitted with a pure-numpy fallback.

Two kernels live here because they dominate runtime in the collocation
solver and the conservation checks:

* stack-machine evaluation of compiled expression programs over node arrays,
* the second-order finite-difference gradient on (possibly non-uniform) grids.

The backend is picked once at import from the environment variable
``FUZZYVAR_BACKEND``:

* ``auto`` (default) - numba when importable, numpy otherwise,
* ``numba``          - require numba, fail loudly if missing,
* ``numpy``          - force the pure-numpy fallback.

Both implementations of each kernel are kept importable so they can be
benchmarked against each other (see ``benchmarks/bench_backends.py``).
"""

from __future__ import annotations

import os

import numpy as np

# Opcodes shared by the expression compiler and both virtual machines.
OP_CONST = 0
OP_VAR = 1
OP_NEG = 2
OP_LN = 3
OP_EXP = 4
OP_SIN = 5
OP_COS = 6
OP_SQRT = 7
OP_ADD = 8
OP_SUB = 9
OP_MUL = 10
OP_DIV = 11
# power by the constant exponent in the payload; small integer and half
# exponents get multiply/sqrt fast paths, identical in both backends
OP_POWC = 12


def _eval_program_numpy(codes, payload, depth, variables):
    """Evaluate a postfix program over a (nvars, n) binding matrix.

    Invalid operations (log of a negative, division by zero, ...) follow
    numpy semantics and yield nan/inf; callers check finiteness.
    """
    n = variables.shape[1]
    stack = []
    with np.errstate(all="ignore"):
        for k in range(codes.shape[0]):
            op = codes[k]
            if op == OP_CONST:
                stack.append(np.full(n, payload[k]))
            elif op == OP_VAR:
                stack.append(variables[int(payload[k])])
            elif op == OP_NEG:
                stack.append(-stack.pop())
            elif op == OP_LN:
                stack.append(np.log(stack.pop()))
            elif op == OP_EXP:
                stack.append(np.exp(stack.pop()))
            elif op == OP_SIN:
                stack.append(np.sin(stack.pop()))
            elif op == OP_COS:
                stack.append(np.cos(stack.pop()))
            elif op == OP_SQRT:
                stack.append(np.sqrt(stack.pop()))
            elif op == OP_POWC:
                a = stack.pop()
                c = payload[k]
                if c == 2.0:
                    stack.append(a * a)
                elif c == 3.0:
                    stack.append(a * a * a)
                elif c == 0.5:
                    stack.append(np.sqrt(a))
                elif c == -1.0:
                    stack.append(1.0 / a)
                elif c == -2.0:
                    stack.append(1.0 / (a * a))
                else:
                    stack.append(a ** c)
            else:
                b = stack.pop()
                a = stack.pop()
                if op == OP_ADD:
                    stack.append(a + b)
                elif op == OP_SUB:
                    stack.append(a - b)
                elif op == OP_MUL:
                    stack.append(a * b)
                else:
                    stack.append(a / b)
    result = stack[0]
    if np.shares_memory(result, variables):
        result = result.copy()
    return result


def _gradient_numpy(values, xs):
    """d/dx of sampled rows, second order on non-uniform grids.

    Three-point interior stencil, one-sided three-point stencils at both
    ends; ``values`` has shape (..., n) with n = len(xs) >= 3.
    """
    f = np.asarray(values, dtype=np.float64)
    out = np.empty_like(f)
    hd = xs[1:-1] - xs[:-2]
    hs = xs[2:] - xs[1:-1]
    out[..., 1:-1] = (
        hd * hd * f[..., 2:]
        + (hs * hs - hd * hd) * f[..., 1:-1]
        - hs * hs * f[..., :-2]
    ) / (hs * hd * (hd + hs))
    h0 = xs[1] - xs[0]
    h1 = xs[2] - xs[1]
    out[..., 0] = (
        -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * f[..., 0]
        + (h0 + h1) / (h0 * h1) * f[..., 1]
        - h0 / (h1 * (h0 + h1)) * f[..., 2]
    )
    hm = xs[-2] - xs[-3]
    hn = xs[-1] - xs[-2]
    out[..., -1] = (
        hn / (hm * (hm + hn)) * f[..., -3]
        - (hm + hn) / (hm * hn) * f[..., -2]
        + (2.0 * hn + hm) / (hn * (hm + hn)) * f[..., -1]
    )
    return out


def _make_numba_kernels():
    from numba import njit

    @njit(cache=True, error_model="numpy")
    def eval_program(codes, payload, depth, variables):
        n = variables.shape[1]
        stack = np.empty((depth, n))
        sp = 0
        for k in range(codes.shape[0]):
            op = codes[k]
            if op == OP_CONST:
                v = payload[k]
                for i in range(n):
                    stack[sp, i] = v
                sp += 1
            elif op == OP_VAR:
                s = int(payload[k])
                for i in range(n):
                    stack[sp, i] = variables[s, i]
                sp += 1
            elif op == OP_NEG:
                for i in range(n):
                    stack[sp - 1, i] = -stack[sp - 1, i]
            elif op == OP_LN:
                for i in range(n):
                    stack[sp - 1, i] = np.log(stack[sp - 1, i])
            elif op == OP_EXP:
                for i in range(n):
                    stack[sp - 1, i] = np.exp(stack[sp - 1, i])
            elif op == OP_SIN:
                for i in range(n):
                    stack[sp - 1, i] = np.sin(stack[sp - 1, i])
            elif op == OP_COS:
                for i in range(n):
                    stack[sp - 1, i] = np.cos(stack[sp - 1, i])
            elif op == OP_SQRT:
                for i in range(n):
                    stack[sp - 1, i] = np.sqrt(stack[sp - 1, i])
            elif op == OP_POWC:
                c = payload[k]
                if c == 2.0:
                    for i in range(n):
                        stack[sp - 1, i] = stack[sp - 1, i] * stack[sp - 1, i]
                elif c == 3.0:
                    for i in range(n):
                        a = stack[sp - 1, i]
                        stack[sp - 1, i] = a * a * a
                elif c == 0.5:
                    for i in range(n):
                        stack[sp - 1, i] = np.sqrt(stack[sp - 1, i])
                elif c == -1.0:
                    for i in range(n):
                        stack[sp - 1, i] = 1.0 / stack[sp - 1, i]
                elif c == -2.0:
                    for i in range(n):
                        a = stack[sp - 1, i]
                        stack[sp - 1, i] = 1.0 / (a * a)
                else:
                    for i in range(n):
                        stack[sp - 1, i] = stack[sp - 1, i] ** c
            elif op == OP_ADD:
                for i in range(n):
                    stack[sp - 2, i] = stack[sp - 2, i] + stack[sp - 1, i]
                sp -= 1
            elif op == OP_SUB:
                for i in range(n):
                    stack[sp - 2, i] = stack[sp - 2, i] - stack[sp - 1, i]
                sp -= 1
            elif op == OP_MUL:
                for i in range(n):
                    stack[sp - 2, i] = stack[sp - 2, i] * stack[sp - 1, i]
                sp -= 1
            else:
                for i in range(n):
                    stack[sp - 2, i] = stack[sp - 2, i] / stack[sp - 1, i]
                sp -= 1
        return stack[0].copy()

    @njit(cache=True, error_model="numpy")
    def gradient2d(values, xs):
        m, n = values.shape
        out = np.empty((m, n))
        for r in range(m):
            for i in range(1, n - 1):
                hd = xs[i] - xs[i - 1]
                hs = xs[i + 1] - xs[i]
                out[r, i] = (
                    hd * hd * values[r, i + 1]
                    + (hs * hs - hd * hd) * values[r, i]
                    - hs * hs * values[r, i - 1]
                ) / (hs * hd * (hd + hs))
            h0 = xs[1] - xs[0]
            h1 = xs[2] - xs[1]
            out[r, 0] = (
                -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * values[r, 0]
                + (h0 + h1) / (h0 * h1) * values[r, 1]
                - h0 / (h1 * (h0 + h1)) * values[r, 2]
            )
            hm = xs[n - 2] - xs[n - 3]
            hn = xs[n - 1] - xs[n - 2]
            out[r, n - 1] = (
                hn / (hm * (hm + hn)) * values[r, n - 3]
                - (hm + hn) / (hm * hn) * values[r, n - 2]
                + (2.0 * hn + hm) / (hn * (hm + hn)) * values[r, n - 1]
            )
        return out

    return eval_program, gradient2d


def _gradient_numba(values, xs):
    f = np.ascontiguousarray(values, dtype=np.float64)
    if f.ndim == 1:
        return _gradient2d_numba(f.reshape(1, -1), xs)[0]
    return _gradient2d_numba(f, xs)


_requested = os.environ.get("FUZZYVAR_BACKEND", "auto").strip().lower()
if _requested not in {"auto", "numba", "numpy"}:
    raise ValueError(
        f"FUZZYVAR_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

_eval_program_numba = None
_gradient2d_numba = None
HAS_NUMBA = False
if _requested in {"auto", "numba"}:
    try:
        _eval_program_numba, _gradient2d_numba = _make_numba_kernels()
        HAS_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise
BACKEND = "numba" if HAS_NUMBA else "numpy"

if BACKEND == "numba":
    eval_program = _eval_program_numba
    gradient = _gradient_numba
else:
    eval_program = _eval_program_numpy
    gradient = _gradient_numpy
