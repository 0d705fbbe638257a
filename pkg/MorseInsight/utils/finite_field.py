"""
Linear algebra and polynomials over the prime field Z5.

Matrices are int64 numpy arrays with entries in 0..4. Polynomials are tuples
of coefficients, lowest degree first, with no trailing zeros; the zero
polynomial is the empty tuple.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from MorseInsight.utils.exceptions import InvariantViolationError, ValidationError

P = 5

Poly = Tuple[int, ...]


@dataclass(frozen=True)
class FieldScalar:
    """Element of Z5 held by its canonical representative 0..4."""

    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % P)

    def __add__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar(self.value + other.value)

    def __sub__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar(self.value - other.value)

    def __mul__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar(self.value * other.value)

    def __neg__(self) -> "FieldScalar":
        return FieldScalar(-self.value)

    def inverse(self) -> "FieldScalar":
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse in Z5")
        return FieldScalar(pow(self.value, -1, P))

    def __truediv__(self, other: "FieldScalar") -> "FieldScalar":
        return self * other.inverse()

    def lifted(self) -> int:
        """Representative in -2..2."""
        return lift(self.value)


def lift(value: int) -> int:
    v = int(value) % P
    return v - P if v > P // 2 else v


def as_field(matrix) -> np.ndarray:
    return np.mod(np.asarray(matrix, dtype=np.int64), P)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.mod(as_field(a) @ as_field(b), P)


def matrix_power(a: np.ndarray, exponent: int) -> np.ndarray:
    a = as_field(a)
    result = np.eye(a.shape[0], dtype=np.int64)
    base = a
    while exponent > 0:
        if exponent & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        exponent >>= 1
    return result


def rref(matrix) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form and pivot columns (Gauss-Jordan over Z5)."""
    m = as_field(matrix).copy()
    rows, cols = m.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = np.mod(m[r] * pow(int(m[r, c]), -1, P), P)
        others = np.flatnonzero(m[:, c])
        others = others[others != r]
        if others.size:
            m[others] = np.mod(m[others] - np.outer(m[others, c], m[r]), P)
        pivots.append(c)
        r += 1
    return m, pivots


def rank(matrix) -> int:
    m = as_field(matrix)
    if m.size == 0:
        return 0
    return len(rref(m)[1])


def column_basis(matrix) -> np.ndarray:
    """Linearly independent columns spanning the column space."""
    m = as_field(matrix)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), dtype=np.int64)
    return m[:, rref(m)[1]]


def inverse(matrix) -> np.ndarray:
    m = as_field(matrix)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValidationError("only square matrices have inverses", field="matrix")
    reduced, pivots = rref(np.hstack([m, np.eye(n, dtype=np.int64)]))
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise ValidationError("matrix is singular over Z5", field="matrix")
    return reduced[:, n:]


def coordinates(basis: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """
    Solve basis @ C = vectors for C.

    ``basis`` must have independent columns and every column of ``vectors``
    must lie in their span.
    """
    basis = as_field(basis)
    vectors = as_field(vectors)
    r = basis.shape[1]
    reduced, pivots = rref(np.hstack([basis, vectors]))
    if pivots != list(range(r)):
        raise InvariantViolationError("vectors are not in the span of the basis", check="span")
    return reduced[:r, r:]


# --------------------------------------------------------------------------------
# Polynomials over Z5
# --------------------------------------------------------------------------------
def poly(coefficients: Sequence[int]) -> Poly:
    """Normalize coefficients (lowest degree first) into a trimmed Poly."""
    c = [int(v) % P for v in coefficients]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


ONE: Poly = (1,)
X: Poly = (0, 1)


def poly_add(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return poly([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def poly_sub(a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    return poly([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)])


def poly_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return poly(out)


def poly_divmod(a: Poly, b: Poly) -> Tuple[Poly, Poly]:
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    remainder = list(a)
    quotient = [0] * max(len(a) - len(b) + 1, 0)
    inv_lead = pow(b[-1], -1, P)
    while len(remainder) >= len(b) and remainder:
        shift = len(remainder) - len(b)
        factor = remainder[-1] * inv_lead % P
        quotient[shift] = factor
        for i, bi in enumerate(b):
            remainder[shift + i] = (remainder[shift + i] - factor * bi) % P
        while remainder and remainder[-1] == 0:
            remainder.pop()
    return poly(quotient), tuple(remainder)


def poly_monic(a: Poly) -> Poly:
    if not a:
        return a
    inv_lead = pow(a[-1], -1, P)
    return poly([c * inv_lead for c in a])


def poly_product(factors: Sequence[Poly]) -> Poly:
    out = ONE
    for f in factors:
        out = poly_mul(out, f)
    return out


def poly_to_string(a: Poly) -> str:
    """Render with coefficients lifted to -2..2, e.g. ``x^2 - 1``; zero renders as ``0``."""
    if not a:
        return "0"
    terms: List[str] = []
    for degree in range(len(a) - 1, -1, -1):
        c = lift(a[degree])
        if c == 0:
            continue
        magnitude = abs(c)
        if degree == 0:
            body = str(magnitude)
        else:
            power = "x" if degree == 1 else f"x^{degree}"
            body = power if magnitude == 1 else f"{magnitude}{power}"
        if not terms:
            terms.append(body if c > 0 else f"-{body}")
        else:
            terms.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(terms)


# --------------------------------------------------------------------------------
# Invariant factors
# --------------------------------------------------------------------------------
def _smith_diagonal(matrix: List[List[Poly]]) -> List[Poly]:
    """Diagonal of the Smith normal form of a square matrix over Z5[x]."""
    m = [row[:] for row in matrix]
    n = len(m)
    diagonal: List[Poly] = []
    for t in range(n):
        while True:
            best = None
            for i in range(t, n):
                for j in range(t, n):
                    if m[i][j] and (best is None or len(m[i][j]) < best[0]):
                        best = (len(m[i][j]), i, j)
            if best is None:
                return diagonal + [()] * (n - t)
            _, bi, bj = best
            m[t], m[bi] = m[bi], m[t]
            for row in m:
                row[t], row[bj] = row[bj], row[t]
            pivot = m[t][t]

            reduced = True
            for i in range(t + 1, n):
                if m[i][t]:
                    q, r = poly_divmod(m[i][t], pivot)
                    m[i] = [poly_sub(m[i][k], poly_mul(q, m[t][k])) for k in range(n)]
                    reduced = reduced and not r
            for j in range(t + 1, n):
                if m[t][j]:
                    q, r = poly_divmod(m[t][j], pivot)
                    for row in m:
                        row[j] = poly_sub(row[j], poly_mul(q, row[t]))
                    reduced = reduced and not r
            if not reduced:
                continue

            offender = next(
                (i for i in range(t + 1, n) for j in range(t + 1, n) if poly_divmod(m[i][j], pivot)[1]),
                None,
            )
            if offender is not None:
                m[t] = [poly_add(m[t][k], m[offender][k]) for k in range(n)]
                continue
            break
        diagonal.append(poly_monic(m[t][t]))
    return diagonal


def invariant_factors(matrix) -> List[Poly]:
    """Nontrivial invariant factors of a square matrix, each dividing the next."""
    a = as_field(matrix)
    n = a.shape[0]
    if n == 0:
        return []
    char = [[poly((-int(a[i, j]),) if i != j else (-int(a[i, j]), 1)) for j in range(n)] for i in range(n)]
    return [d for d in _smith_diagonal(char) if len(d) > 1]


@dataclass(frozen=True, eq=False)
class CoreResult:
    """Invertible part of a linear map after image stabilization."""

    dimension: int
    characteristic: Poly  # empty tuple when trivial
    invariant_factors: Tuple[Poly, ...]
    matrix: np.ndarray

    @property
    def trivial(self) -> bool:
        return self.dimension == 0

    def key(self) -> Tuple:
        return self.dimension, self.invariant_factors


def invertible_core(matrix) -> CoreResult:
    """
    Restrict a map to the stable image im(A^n) and classify the restriction.

    Returns the core dimension, its characteristic polynomial and its
    invariant factors (a complete similarity invariant).
    """
    a = as_field(matrix)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValidationError("invertible_core needs a square matrix", field="matrix")
    empty = np.zeros((0, 0), dtype=np.int64)
    if n == 0:
        return CoreResult(0, (), (), empty)
    basis = column_basis(matrix_power(a, n))
    r = basis.shape[1]
    if r == 0:
        return CoreResult(0, (), (), empty)
    core = coordinates(basis, matmul(a, basis))
    factors = tuple(invariant_factors(core))
    char = poly_product(factors)
    if len(char) - 1 != r or char[0] == 0:
        raise InvariantViolationError("stable image map is not invertible", check="invertible_core")
    return CoreResult(r, char, factors, core)
