"""5x5 matrices with symbolic scalar or 1-form entries.

SMatrix holds ScalarExpr entries (group elements, Lie algebra elements);
FMatrix holds degree-1 FormExpr entries (connection matrices).  Products
mix the two: scalar * form acts entrywise through ``FormExpr.scale``, and
the curvature-style square of an FMatrix uses the wedge product.
"""

from __future__ import annotations

from typing import Sequence

from .scalars import Expr, conjugate, is_zero_expr, lift, normalize
from .forms import Chart, FormExpr

N = 5


class SMatrix:
    """5x5 matrix of scalar expressions."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence]):
        if len(rows) != N or any(len(r) != N for r in rows):
            raise ValueError("expected a 5x5 matrix")
        self.rows = tuple(tuple(normalize(lift(x)) for x in r) for r in rows)

    @staticmethod
    def identity() -> "SMatrix":
        return SMatrix([[1 if i == j else 0 for j in range(N)] for i in range(N)])

    @staticmethod
    def zero() -> "SMatrix":
        return SMatrix([[0] * N for _ in range(N)])

    def entry(self, i: int, j: int) -> Expr:
        """1-based indexing to match the printed matrices."""
        return self.rows[i - 1][j - 1]

    def __matmul__(self, other: "SMatrix") -> "SMatrix":
        return SMatrix([
            [sum((self.rows[i][k] * other.rows[k][j] for k in range(N)), lift(0))
             for j in range(N)]
            for i in range(N)
        ])

    def __add__(self, other: "SMatrix") -> "SMatrix":
        return SMatrix([[self.rows[i][j] + other.rows[i][j] for j in range(N)]
                        for i in range(N)])

    def __sub__(self, other: "SMatrix") -> "SMatrix":
        return SMatrix([[self.rows[i][j] - other.rows[i][j] for j in range(N)]
                        for i in range(N)])

    def scale(self, e) -> "SMatrix":
        e = lift(e)
        return SMatrix([[x * e for x in r] for r in self.rows])

    def transpose(self) -> "SMatrix":
        return SMatrix([[self.rows[j][i] for j in range(N)] for i in range(N)])

    def conj(self) -> "SMatrix":
        return SMatrix([[conjugate(x) for x in r] for r in self.rows])

    def is_zero(self) -> bool:
        return all(is_zero_expr(x) for r in self.rows for x in r)

    def __eq__(self, other) -> bool:
        return isinstance(other, SMatrix) and (self - other).is_zero()

    def __hash__(self):
        return hash(self.rows)

    def det(self) -> Expr:
        return normalize(_det([list(r) for r in self.rows]))

    def __repr__(self):
        from .scalars import to_text
        body = "\n".join("  [" + ", ".join(to_text(x) for x in r) + "]" for r in self.rows)
        return f"SMatrix(\n{body}\n)"


def _det(rows) -> Expr:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = lift(0)
    sign = 1
    for j in range(n):
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        total = total + rows[0][j] * _det(minor) * sign
        sign = -sign
    return total


class FMatrix:
    """5x5 matrix of degree-1 forms on a shared chart."""

    __slots__ = ("chart", "rows")

    def __init__(self, chart: Chart, rows: Sequence[Sequence[FormExpr]]):
        if len(rows) != N or any(len(r) != N for r in rows):
            raise ValueError("expected a 5x5 matrix")
        self.chart = chart
        self.rows = tuple(tuple(rows[i][j] for j in range(N)) for i in range(N))

    def entry(self, i: int, j: int) -> FormExpr:
        """1-based indexing to match the printed matrices."""
        return self.rows[i - 1][j - 1]

    def d(self) -> list:
        return [[f.d() for f in r] for r in self.rows]

    def wedge_square(self) -> list:
        """Entrywise wedge product of the matrix with itself."""
        out = []
        for i in range(N):
            row = []
            for j in range(N):
                acc = self.chart.zero(2)
                for k in range(N):
                    acc = acc + self.rows[i][k].wedge(self.rows[k][j])
                row.append(acc)
            out.append(row)
        return out

    def conjugated_by(self, left: SMatrix, right: SMatrix) -> "FMatrix":
        """left @ self @ right with scalar entries acting on forms."""
        mid = []
        for i in range(N):
            row = []
            for j in range(N):
                acc = self.chart.zero(1)
                for k in range(N):
                    acc = acc + self.rows[i][k].scale(right.rows[k][j])
                row.append(acc)
            mid.append(row)
        out = []
        for i in range(N):
            row = []
            for j in range(N):
                acc = self.chart.zero(1)
                for k in range(N):
                    acc = acc + mid[k][j].scale(left.rows[i][k])
                row.append(acc)
            out.append(row)
        return FMatrix(self.chart, out)
