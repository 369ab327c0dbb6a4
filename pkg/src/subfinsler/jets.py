"""Second-order forward-mode differentiation.

A :class:`Jet2` carries the value, gradient and Hessian of a scalar quantity
with respect to ``n`` independent variables.  Jets may be *batched*: the value
has shape ``B``, the gradient ``B + (n,)`` and the Hessian ``B + (n, n)``, so a
whole cloud of sample points is differentiated in one pass.

Field evaluators receive a list of ``n`` coordinates which may be floats,
numpy arrays or jets, and should use the dispatching helpers of this module
(:func:`sqrt`, :func:`log`, :func:`abs_pow`, ...) so the same code runs on
plain numbers and on jets.

>>> f = ScalarField(2, lambda x: x[0] * x[1])
>>> j = jet2_eval(f, [2.0, 5.0])
>>> float(j.value), j.gradient.tolist(), j.hessian.tolist()
(10.0, [5.0, 2.0], [[0.0, 1.0], [1.0, 0.0]])
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, SingularPoint

__all__ = [
    "Jet2",
    "ScalarField",
    "jet2_eval",
    "fd_jet2",
    "evaluate",
    "sqrt",
    "log",
    "exp",
    "absolute",
    "abs_pow",
    "power",
    "where",
]


def _col(a):
    return np.asarray(a, dtype=float)[..., None]


def _mat(a):
    return np.asarray(a, dtype=float)[..., None, None]


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


class Jet2:
    """Value, gradient and Hessian of a scalar (or batch of scalars)."""

    __slots__ = ("value", "gradient", "hessian")
    # let numpy defer to our reflected operators
    __array_ufunc__ = None

    def __init__(self, value, gradient, hessian):
        self.value = np.asarray(value, dtype=float)
        self.gradient = np.asarray(gradient, dtype=float)
        self.hessian = np.asarray(hessian, dtype=float)
        if self.gradient.shape != self.value.shape + (self.gradient.shape[-1],):
            raise DimensionMismatch("gradient shape does not match value batch shape")
        if self.hessian.shape != self.gradient.shape + (self.gradient.shape[-1],):
            raise DimensionMismatch("hessian must be n x n")

    @property
    def n(self) -> int:
        return self.gradient.shape[-1]

    @classmethod
    def constant(cls, c, n: int) -> "Jet2":
        c = np.asarray(c, dtype=float)
        return cls(c, np.zeros(c.shape + (n,)), np.zeros(c.shape + (n, n)))

    @classmethod
    def variables(cls, x) -> list["Jet2"]:
        """Seed one jet per coordinate of ``x`` (shape ``(n,)`` or ``(B, n)``)."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        eye = np.eye(n)
        zeros = np.zeros(x.shape[:-1] + (n, n))
        return [
            cls(x[..., i], np.broadcast_to(eye[i], x.shape).copy(), zeros.copy())
            for i in range(n)
        ]

    def _lift(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(np.broadcast_to(other, np.broadcast_shapes(np.shape(other), self.value.shape)), self.n)

    def unary(self, f0, f1, f2) -> "Jet2":
        """Compose with a scalar function given its value and two derivatives."""
        if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
            raise SingularPoint("derivative is not finite at the evaluation point")
        g = self.gradient
        return Jet2(f0, _col(f1) * g, _mat(f1) * self.hessian + _mat(f2) * _outer(g, g))

    # arithmetic -------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.gradient + other.gradient, self.hessian + other.hessian)
        other = np.asarray(other, dtype=float)
        return Jet2(self.value + other, self.gradient + 0.0 * _col(other), self.hessian + 0.0 * _mat(other))

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.gradient, -self.hessian)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            u, v = self, other
            gu, gv = u.gradient, v.gradient
            return Jet2(
                u.value * v.value,
                _col(u.value) * gv + _col(v.value) * gu,
                _mat(u.value) * v.hessian + _mat(v.value) * u.hessian + _outer(gu, gv) + _outer(gv, gu),
            )
        c = np.asarray(other, dtype=float)
        return Jet2(self.value * c, self.gradient * _col(c), self.hessian * _mat(c))

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet2":
        v = self.value
        if np.any(v == 0):
            raise SingularPoint("division by zero")
        return self.unary(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet2):
            return exp(p * log(self))
        p = float(p)
        v = self.value
        if p == 0.0:
            return Jet2.constant(np.ones_like(v), self.n)
        if p == 1.0:
            return self
        if p == 2.0:
            return self * self
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.unary(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def sqrt(self) -> "Jet2":
        v = self.value
        if np.any(v <= 0):
            raise SingularPoint("sqrt is not differentiable at 0")
        s = np.sqrt(v)
        return self.unary(s, 0.5 / s, -0.25 / (s * v))

    def log(self) -> "Jet2":
        v = self.value
        if np.any(v <= 0):
            raise SingularPoint("log of a non-positive value")
        return self.unary(np.log(v), 1.0 / v, -1.0 / v**2)

    def exp(self) -> "Jet2":
        e = np.exp(self.value)
        return self.unary(e, e, e)

    def __abs__(self):
        v = self.value
        if np.any(v == 0):
            raise SingularPoint("abs is not differentiable at 0")
        return self.unary(np.abs(v), np.sign(v), np.zeros_like(v))

    def abs_pow(self, p: float) -> "Jet2":
        """``|x|**p``; twice differentiable at 0 only for ``p >= 2``."""
        v = self.value
        a = np.abs(v)
        s = np.sign(v)
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = p * s * a ** (p - 1)
            d2 = p * (p - 1) * a ** (p - 2) if p != 2 else np.full_like(a, 2.0)
        return self.unary(a**p, d1, d2)

    def __repr__(self):
        return f"Jet2(value={self.value!r}, gradient={self.gradient!r}, hessian={self.hessian!r})"


# dispatching helpers ----------------------------------------------------


def sqrt(x):
    return x.sqrt() if isinstance(x, Jet2) else np.sqrt(x)


def log(x):
    return x.log() if isinstance(x, Jet2) else np.log(x)


def exp(x):
    return x.exp() if isinstance(x, Jet2) else np.exp(x)


def absolute(x):
    return abs(x) if isinstance(x, Jet2) else np.abs(x)


def abs_pow(x, p: float):
    return x.abs_pow(p) if isinstance(x, Jet2) else np.abs(x) ** p


def power(x, p: float):
    return x**p if isinstance(x, Jet2) else np.power(x, p)


def value_of(x):
    return x.value if isinstance(x, Jet2) else np.asarray(x, dtype=float)


def where(cond, a, b):
    """Elementwise select; jets are selected component by component."""
    if not isinstance(a, Jet2) and not isinstance(b, Jet2):
        return np.where(cond, a, b)
    ref = a if isinstance(a, Jet2) else b
    a, b = ref._lift(a), ref._lift(b)
    cond = np.asarray(cond, dtype=bool)
    return Jet2(
        np.where(cond, a.value, b.value),
        np.where(cond[..., None], a.gradient, b.gradient),
        np.where(cond[..., None, None], a.hessian, b.hessian),
    )


# fields ---------------------------------------------------------------------


def _never(x):
    return np.zeros(np.shape(x)[:-1], dtype=bool)


@dataclass(frozen=True)
class ScalarField:
    """A scalar function on R^n.

    ``evaluator`` takes a list of ``n`` coordinates (floats, arrays or jets)
    and returns a scalar of the same kind.  ``singular`` maps an array of
    points (shape ``(..., n)``) to a boolean mask of points where the field is
    not twice differentiable.
    """

    dimension: int
    evaluator: Callable[[Sequence], object]
    singular: Callable[[np.ndarray], np.ndarray] = _never
    name: str = "field"

    def __call__(self, x):
        return evaluate(self, x)

    def map(self, fn: Callable, name: str | None = None) -> "ScalarField":
        """Post-compose with a jet-aware scalar function."""
        ev = self.evaluator
        return ScalarField(self.dimension, lambda x: fn(ev(x)), self.singular, name or f"F({self.name})")

    def scale(self, c: float) -> "ScalarField":
        return self.map(lambda v: c * v, f"{c}*{self.name}")

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if other.dimension != self.dimension:
            raise DimensionMismatch("cannot add fields of different dimension")
        a, b = self.evaluator, other.evaluator
        sa, sb = self.singular, other.singular
        return ScalarField(
            self.dimension, lambda x: a(x) + b(x), lambda x: sa(x) | sb(x), f"{self.name}+{other.name}"
        )

    def precompose(self, transform: Callable[[Sequence], Sequence], singular=None) -> "ScalarField":
        """The field ``x -> self(transform(x))`` for a coordinate map ``transform``."""
        ev = self.evaluator
        return ScalarField(
            self.dimension, lambda x: ev(transform(x)), singular or _never, f"{self.name}∘T"
        )


def _check_points(f: ScalarField, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != f.dimension:
        raise DimensionMismatch(f"expected points of dimension {f.dimension}, got shape {x.shape}")
    return x


def evaluate(f: ScalarField, x) -> np.ndarray:
    """Plain (non-differentiated) evaluation; ``x`` has shape ``(n,)`` or ``(B, n)``."""
    x = _check_points(f, x)
    out = f.evaluator([x[..., i] for i in range(f.dimension)])
    return np.broadcast_to(np.asarray(value_of(out), dtype=float), x.shape[:-1]).copy()


def jet2_eval(f: ScalarField, x) -> Jet2:
    """Exact value, gradient and Hessian of ``f`` at ``x`` (or each row of ``x``)."""
    x = _check_points(f, x)
    if np.any(f.singular(x)):
        raise SingularPoint(f"{f.name} evaluated on its singular set")
    out = f.evaluator(Jet2.variables(x))
    if not isinstance(out, Jet2):
        out = Jet2.constant(np.broadcast_to(out, x.shape[:-1]), f.dimension)
    return out


def default_step(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 1e-5 * (1.0 + np.max(np.abs(x), axis=-1))


def fd_jet2(f: ScalarField, x, h=None) -> Jet2:
    """Central-difference gradient and Hessian, both O(h^2).

    Independent of the jet arithmetic: only plain evaluations of ``f`` are used.
    """
    x = _check_points(f, x)
    n = f.dimension
    h = default_step(x) if h is None else np.broadcast_to(np.asarray(h, dtype=float), x.shape[:-1])
    hc = h[..., None]
    eye = np.eye(n)

    def ev(p):
        if np.any(f.singular(p)):
            raise SingularPoint(f"finite-difference stencil of {f.name} hits the singular set")
        return evaluate(f, p)

    f0 = ev(x)
    plus = [ev(x + hc * eye[i]) for i in range(n)]
    minus = [ev(x - hc * eye[i]) for i in range(n)]
    grad = np.stack([(plus[i] - minus[i]) / (2 * h) for i in range(n)], axis=-1)
    hess = np.zeros(x.shape[:-1] + (n, n))
    for i in range(n):
        hess[..., i, i] = (plus[i] - 2 * f0 + minus[i]) / h**2
        for j in range(i + 1, n):
            d = hc * (eye[i] + eye[j])
            e = hc * (eye[i] - eye[j])
            hij = (ev(x + d) - ev(x + e) - ev(x - e) + ev(x - d)) / (4 * h**2)
            hess[..., i, j] = hij
            hess[..., j, i] = hij
    return Jet2(f0, grad, hess)
