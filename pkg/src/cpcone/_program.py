"""Small modelling layer that assembles :class:`ConicProgram` instances.

Affine expressions are sparse maps from variable index to coefficient plus
a constant. Hermitian PSD variables are realified: an unstructured real
PSD matrix M of order 2n stands for R + iS with R = (M11 + M22)/2 and
S = (M21 - M12)/2, which ranges over exactly the Hermitian PSD matrices.
"""

import numpy as np
import scipy.sparse

from .solver import FREE, NONNEG, PSD, SOC, ConicProgram, _svec_index


class Expr:
    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms = terms if terms is not None else {}
        self.const = float(const)

    @staticmethod
    def var(i, coef=1.0):
        return Expr({int(i): float(coef)})

    def _combine(self, other, sign):
        if not isinstance(other, Expr):
            return Expr(dict(self.terms), self.const + sign * float(other))
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + sign * v
        return Expr(terms, self.const + sign * other.const)

    def __add__(self, other):
        return self._combine(other, 1.0)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self)._combine(other, 1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, a):
        a = float(a)
        return Expr({k: a * v for k, v in self.terms.items()}, a * self.const)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return self * (1.0 / a)

    def value(self, x):
        return self.const + sum(v * x[k] for k, v in self.terms.items())


def expr_sum(items):
    out = Expr()
    for it in items:
        out = out + it
    return out


def evaluate(mat, x):
    """Evaluate an array of expressions at the primal point ``x``."""
    return np.vectorize(lambda e: e.value(x) if isinstance(e, Expr) else float(e),
                        otypes=[float])(mat)


class ProgramBuilder:
    def __init__(self):
        self.blocks = []
        self.n = 0
        self.rows = []  # (Expr, rhs) meaning expr == rhs
        self.ineqs = []  # Expr >= 0
        self.objective = Expr()

    def _alloc(self, block):
        base = self.n
        self.blocks.append(block)
        self.n += block.size
        return base

    def free(self, k):
        base = self._alloc(FREE(k))
        return [Expr.var(base + i) for i in range(k)]

    def nonneg(self, k):
        base = self._alloc(NONNEG(k))
        return [Expr.var(base + i) for i in range(k)]

    def soc(self, k):
        base = self._alloc(SOC(k))
        return [Expr.var(base + i) for i in range(k)]

    def sym_psd(self, d):
        """d x d symmetric PSD matrix variable (object array of expressions)."""
        base = self._alloc(PSD(d))
        r, c, w = _svec_index(d)
        X = np.empty((d, d), dtype=object)
        for k in range(r.size):
            e = Expr.var(base + k, 1.0 / w[k])
            X[r[k], c[k]] = e
            X[c[k], r[k]] = e
        return X

    def herm_psd(self, d):
        """Hermitian PSD variable of order d, returned as (real part, imaginary part)."""
        M = self.sym_psd(2 * d)
        R = np.empty((d, d), dtype=object)
        S = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                R[i, j] = (M[i, j] + M[d + i, d + j]) * 0.5
                S[i, j] = (M[d + i, j] - M[i, d + j]) * 0.5
        return R, S

    def eq(self, expr, rhs=0.0):
        if not isinstance(expr, Expr):
            expr = Expr(const=expr)
        self.rows.append((expr, float(rhs)))

    def ge(self, expr, rhs=0.0):
        """Impose expr >= rhs (through a nonnegative slack)."""
        self.ineqs.append(expr - rhs)

    def minimize(self, expr):
        self.objective = expr

    def maximize(self, expr):
        self.objective = -expr

    def build(self):
        if self.ineqs:
            slacks = self.nonneg(len(self.ineqs))
            for e, s in zip(self.ineqs, slacks):
                self.rows.append((e - s, 0.0))
            self.ineqs = []
        ri, ci, vals, b = [], [], [], []
        for r, (e, rhs) in enumerate(self.rows):
            for k, v in e.terms.items():
                if v != 0.0:
                    ri.append(r)
                    ci.append(k)
                    vals.append(v)
            b.append(rhs - e.const)
        A = scipy.sparse.csr_matrix((vals, (ri, ci)), shape=(len(self.rows), self.n))
        c = np.zeros(self.n)
        for k, v in self.objective.terms.items():
            c[k] += v
        return ConicProgram(c, A, np.array(b), self.blocks)
