"""Truncated multivariate Taylor (jet) arithmetic in Wirtinger variables.

A jet in ``n_pairs`` complex variables stores the coefficients

    coeff(alpha, beta) = d^alpha_z d^beta_zbar f(base) / (alpha! beta!)

for every multi-index pair with ``|alpha| + |beta| <= order``.  The ``n`` holomorphic
variables come first, the ``n`` antiholomorphic ones after them.  Coefficients are
kept in a dense complex array ranked by degree; products are convolutions through a
precomputed index table.
"""
import math
import logging
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ContextMismatchError,
    DegenerateDerivativeError,
    DivisionByZeroJetError,
    JetDomainError,
    NonConvergenceError,
    OrderExceededError,
    SingularArgumentError,
)

logger = logging.getLogger(__name__)

MAX_PAIRS = 3
DEFAULT_ORDER = 6
FD_STEP = 0.2
FD_LEVELS = 7

Scalar = Union[int, float, complex]


def _exponents_of_degree(degree: int, length: int) -> Iterator[Tuple[int, ...]]:
    if length == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in _exponents_of_degree(degree - first, length - 1):
            yield (first,) + rest


class JetContext:
    """Index tables shared by all jets of one (n_pairs, order)."""

    __slots__ = ('n_pairs', 'order', 'size', 'exponents', 'degrees', 'index', 'weights',
                 '_left', '_right', '_target', '_conj', '_shifts')

    def __init__(self, n_pairs: int, order: int):
        if not 1 <= n_pairs <= MAX_PAIRS:
            raise ValueError(f"n_pairs must be between 1 and {MAX_PAIRS}, got {n_pairs}")
        if order < 1:
            raise ValueError(f"order must be at least 1, got {order}")
        self.n_pairs = n_pairs
        self.order = order

        # every exponent up to the order, ranked by degree
        exps = [e for d in range(order + 1) for e in _exponents_of_degree(d, 2 * n_pairs)]
        self.size = len(exps)
        self.exponents = np.array(exps, dtype=int)
        self.degrees = self.exponents.sum(axis=1)
        self.index: Dict[Tuple[int, ...], int] = {e: i for i, e in enumerate(exps)}
        self.weights = np.array([math.prod(math.factorial(k) for k in e) for e in exps], dtype=float)

        # product table: all pairs whose degrees still fit under the order
        left, right, target = [], [], []
        for i, ei in enumerate(exps):
            room = order - self.degrees[i]
            for j, ej in enumerate(exps):
                if self.degrees[j] > room:
                    break
                left.append(i)
                right.append(j)
                target.append(self.index[tuple(a + b for a, b in zip(ei, ej))])
        self._left = np.array(left, dtype=int)
        self._right = np.array(right, dtype=int)
        self._target = np.array(target, dtype=int)

        # conjugation swaps the holomorphic and antiholomorphic halves
        n = n_pairs
        self._conj = np.array([self.index[e[n:] + e[:n]] for e in exps], dtype=int)

        # d/d(var) moves coefficient e to e - 1 with factor e[var]
        self._shifts = []
        for var in range(2 * n):
            src, dst, factor = [], [], []
            for i, e in enumerate(exps):
                if e[var] > 0:
                    lowered = list(e)
                    lowered[var] -= 1
                    src.append(i)
                    dst.append(self.index[tuple(lowered)])
                    factor.append(e[var])
            self._shifts.append((np.array(src, dtype=int), np.array(dst, dtype=int),
                                 np.array(factor, dtype=float)))

    def convolve(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        terms = a[self._left] * b[self._right]
        real = np.bincount(self._target, weights=terms.real, minlength=self.size)
        imag = np.bincount(self._target, weights=terms.imag, minlength=self.size)
        return real + 1j * imag

    def rank(self, alpha: Sequence[int], beta: Sequence[int]) -> int:
        key = tuple(int(a) for a in alpha) + tuple(int(b) for b in beta)
        if len(key) != 2 * self.n_pairs:
            raise ValueError(f"multi-indices must have length {self.n_pairs}")
        if sum(key) > self.order:
            raise OrderExceededError(f"order {sum(key)} exceeds context order {self.order}")
        return self.index[key]

    def __repr__(self):
        return f"JetContext(n_pairs={self.n_pairs}, order={self.order}, size={self.size})"


@lru_cache(maxsize=None)
def get_context(n_pairs: int, order: int = DEFAULT_ORDER) -> JetContext:
    """Return the (immutable, shared) context for the given shape."""
    return JetContext(n_pairs, order)


class Jet:
    """Truncated Taylor expansion of a scalar field at a base point.

    ``valid_order`` tracks how many orders are exact; it drops by one per
    differentiation and coefficients above it are held at zero.
    """

    __slots__ = ('context', 'coeffs', 'valid_order')

    def __init__(self, context: JetContext, coeffs: np.ndarray, valid_order: Optional[int] = None):
        self.context = context
        self.valid_order = context.order if valid_order is None else int(valid_order)
        coeffs = np.asarray(coeffs, dtype=complex)
        if self.valid_order < context.order:
            coeffs = np.where(context.degrees > self.valid_order, 0.0, coeffs)
        self.coeffs = coeffs

    @classmethod
    def constant(cls, context: JetContext, value: Scalar) -> 'Jet':
        coeffs = np.zeros(context.size, dtype=complex)
        coeffs[0] = value
        return cls(context, coeffs)

    @classmethod
    def variable(cls, context: JetContext, var: int, base_value: Scalar) -> 'Jet':
        coeffs = np.zeros(context.size, dtype=complex)
        coeffs[0] = base_value
        unit = [0] * (2 * context.n_pairs)
        unit[var] = 1
        coeffs[context.index[tuple(unit)]] = 1.0
        return cls(context, coeffs)

    @property
    def value(self) -> complex:
        return complex(self.coeffs[0])

    def coeff(self, alpha: Sequence[int], beta: Sequence[int]) -> complex:
        rank = self.context.rank(alpha, beta)
        if sum(alpha) + sum(beta) > self.valid_order:
            raise OrderExceededError(
                f"coefficient of order {sum(alpha) + sum(beta)} requested, jet valid to {self.valid_order}")
        return complex(self.coeffs[rank])

    # --- arithmetic ---

    def _coerce(self, other) -> 'Jet':
        if isinstance(other, Jet):
            if other.context is not self.context:
                raise ContextMismatchError(f"{self.context!r} vs {other.context!r}")
            return other
        return Jet.constant(self.context, complex(other))

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.context, self.coeffs + other.coeffs, min(self.valid_order, other.valid_order))

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.context, -self.coeffs, self.valid_order)

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.context, self.coeffs - other.coeffs, min(self.valid_order, other.valid_order))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.context, self.coeffs * complex(other), self.valid_order)
        other = self._coerce(other)
        return Jet(self.context, self.context.convolve(self.coeffs, other.coeffs),
                   min(self.valid_order, other.valid_order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            if other == 0:
                raise DivisionByZeroJetError("division of a jet by zero")
            return Jet(self.context, self.coeffs / complex(other), self.valid_order)
        return self * self._coerce(other).power(-1)

    def __rtruediv__(self, other):
        return self._coerce(other) * self.power(-1)

    def __pow__(self, r):
        return self.power(r)

    # --- elementary functions ---

    def _nilpotent(self) -> 'Jet':
        coeffs = self.coeffs.copy()
        coeffs[0] = 0.0
        return Jet(self.context, coeffs, self.valid_order)

    def _series(self, series: Sequence[complex]) -> 'Jet':
        """Evaluate sum_k series[k] * s^k with s the non-constant part (Horner)."""
        s = self._nilpotent()
        result = Jet.constant(self.context, series[-1])
        for c in reversed(series[:-1]):
            result = result * s + c
        result.valid_order = self.valid_order
        return result

    def exp(self) -> 'Jet':
        a0 = np.exp(self.value)
        return self._series([a0 / math.factorial(k) for k in range(self.valid_order + 1)])

    def log(self) -> 'Jet':
        a0 = self.value
        if a0 == 0:
            raise SingularArgumentError("log of a jet with vanishing constant term")
        series = [np.log(a0)] + [(-1) ** (k + 1) / (k * a0 ** k) for k in range(1, self.valid_order + 1)]
        return self._series(series)

    def power(self, r: Scalar) -> 'Jet':
        a0 = self.value
        integral = isinstance(r, (int, np.integer)) or (isinstance(r, float) and r.is_integer())
        # nonnegative integer powers by repeated products
        if integral and r >= 0:
            result = Jet.constant(self.context, 1.0)
            result.valid_order = self.valid_order
            for _ in range(int(r)):
                result = result * self
            return result
        if a0 == 0:
            if integral:
                raise DivisionByZeroJetError("negative power of a jet with vanishing constant term")
            raise SingularArgumentError("fractional power of a jet with vanishing constant term")
        if not integral:
            if abs(a0.imag) > 1e-14 * abs(a0) or a0.real <= 0:
                raise JetDomainError(f"fractional power {r} needs a positive real constant term, got {a0}")
            a0 = complex(a0.real, 0.0)
        # binomial series of (a0 + s)^r in s
        series, binom = [], 1.0
        for k in range(self.valid_order + 1):
            series.append(a0 ** r * binom / a0 ** k)
            binom *= (r - k) / (k + 1)
        return self._series(series)

    def sqrt(self) -> 'Jet':
        return self.power(0.5)

    def conj(self) -> 'Jet':
        """Jet of the complex conjugate field."""
        return Jet(self.context, np.conj(self.coeffs[self.context._conj]), self.valid_order)

    def derivative(self, var: int) -> 'Jet':
        """Exact derivative in variable ``var`` (0..n-1 holomorphic, n..2n-1 antiholomorphic)."""
        if self.valid_order < 1:
            raise OrderExceededError("jet has no derivative information left")
        src, dst, factor = self.context._shifts[var]
        coeffs = np.zeros(self.context.size, dtype=complex)
        coeffs[dst] = factor * self.coeffs[src]
        return Jet(self.context, coeffs, self.valid_order - 1)

    def __repr__(self):
        return f"Jet(value={self.value:.6g}, valid_order={self.valid_order}, {self.context!r})"


# --- field-description vocabulary: works on jets and plain numbers alike ---

def log(x):
    return x.log() if isinstance(x, Jet) else np.log(x)


def exp(x):
    return x.exp() if isinstance(x, Jet) else np.exp(x)


def sqrt(x):
    return x.sqrt() if isinstance(x, Jet) else np.sqrt(x)


def conj(x):
    return x.conj() if isinstance(x, Jet) else np.conj(x)


FieldFunction = Callable[[Sequence, Sequence], Union[Jet, Scalar]]


def variables(context: JetContext, base: Sequence[Scalar]) -> Tuple[List[Jet], List[Jet]]:
    """Coordinate jets z_j and conj(z_j) at ``base``."""
    base = [complex(b) for b in base]
    if len(base) != context.n_pairs:
        raise ContextMismatchError(f"base has {len(base)} coordinates, context expects {context.n_pairs}")
    n = context.n_pairs
    zs = [Jet.variable(context, j, base[j]) for j in range(n)]
    zbs = [Jet.variable(context, n + j, base[j].conjugate()) for j in range(n)]
    return zs, zbs


def as_jet(value, context: JetContext) -> Jet:
    return value if isinstance(value, Jet) else Jet.constant(context, complex(value))


def jet_lift(expr: Union[str, FieldFunction], base: Sequence[Scalar], order: int = DEFAULT_ORDER) -> Jet:
    """Taylor expansion of a field description at ``base``.

    ``expr`` is a callable ``(zs, zbs) -> Jet`` or an expression string understood by
    :func:`szego_toolkit.core.field_parser.compile_field`.
    """
    if isinstance(expr, str):
        from .field_parser import compile_field
        expr = compile_field(expr, len(base))
    context = get_context(len(base), order)
    zs, zbs = variables(context, base)
    return as_jet(expr(zs, zbs), context)


def evaluate_field(expr: FieldFunction, point: Sequence[Scalar]) -> complex:
    point = np.asarray(point, dtype=complex)
    return complex(expr(list(point), list(np.conj(point))))


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    if op == 'add':
        return a + b
    if op == 'sub':
        return a - b
    if op == 'mul':
        return a * b
    if op == 'div':
        return a / b
    raise ValueError(f"unknown jet operation '{op}'")


def jet_fn(a: Jet, fn: str, r: Optional[Scalar] = None) -> Jet:
    if fn == 'log':
        return a.log()
    if fn == 'exp':
        return a.exp()
    if fn == 'pow':
        if r is None:
            raise ValueError("pow needs an exponent")
        return a.power(r)
    raise ValueError(f"unknown jet function '{fn}'")


def differentiate(j: Jet, alpha: Sequence[int], beta: Sequence[int]) -> Jet:
    """Jet of d^alpha_z d^beta_zbar f."""
    if sum(alpha) + sum(beta) > j.valid_order:
        raise OrderExceededError(
            f"derivative of order {sum(alpha) + sum(beta)} requested, jet valid to {j.valid_order}")
    result = j
    for var, count in enumerate(list(alpha) + list(beta)):
        for _ in range(count):
            result = result.derivative(var)
    return result


def wirtinger(j: Jet, alpha: Sequence[int], beta: Sequence[int]) -> complex:
    """d^alpha_z d^beta_zbar f at the base point."""
    return j.coeff(alpha, beta) * j.context.weights[j.context.rank(alpha, beta)]


def unit(n: int, k: int) -> Tuple[int, ...]:
    return tuple(1 if i == k else 0 for i in range(n))


def zero(n: int) -> Tuple[int, ...]:
    return (0,) * n


def newton_jet_solve(equation: Callable, seed, zs: Sequence[Jet], zbs: Sequence[Jet],
                     max_iterations: int = 50, tol: float = 1e-13):
    """Jet of the implicit solution u(z) of ``equation(u, zs, zbs) = 0``.

    Newton's method on the constant term combined with a chord iteration on the
    higher orders; every step gains at least one order.  ``seed`` is a scalar for a
    single unknown or a sequence for a system (then ``equation`` returns a list).
    The equation must be holomorphic in the unknowns.
    """
    context = zs[0].context
    scalar = np.ndim(seed) == 0
    seeds = [complex(seed)] if scalar else [complex(s) for s in seed]
    k = len(seeds)
    valid = min(j.valid_order for j in list(zs) + list(zbs))

    def residual(us: List[Jet]) -> List[Jet]:
        out = equation(us[0] if scalar else us, zs, zbs)
        return [as_jet(out, context)] if scalar else [as_jet(f, context) for f in out]

    # seeds carry no derivative information yet
    us = []
    for s in seeds:
        u = Jet.constant(context, s)
        u.valid_order = valid
        us.append(u)

    polished = False
    for iteration in range(max_iterations):
        fs = residual(us)
        # Jacobian of the constant terms by central differences
        h = 1e-6 * max(1.0, max(abs(u.value) for u in us))
        jac = np.empty((k, k), dtype=complex)
        for col in range(k):
            plus = [u + (h if i == col else 0.0) for i, u in enumerate(us)]
            minus = [u - (h if i == col else 0.0) for i, u in enumerate(us)]
            f_plus, f_minus = residual(plus), residual(minus)
            for row in range(k):
                jac[row, col] = (f_plus[row].value - f_minus[row].value) / (2 * h)
        scale = max(1.0, float(np.max(np.abs(jac))) * max(float(np.max(np.abs(u.coeffs))) for u in us))
        worst = max(float(np.max(np.abs(f.coeffs))) for f in fs)
        if polished or worst == 0.0:
            logger.debug("newton_jet_solve converged after %d iterations", iteration)
            for u in us:
                u.valid_order = min(valid, min(f.valid_order for f in fs))
            return us[0] if scalar else us
        # one more step once converged, to clear the chord error in the high orders
        polished = worst <= tol * scale
        if abs(np.linalg.det(jac)) <= 1e-14 * max(1.0, float(np.max(np.abs(jac)))) ** k:
            raise DegenerateDerivativeError(f"derivative of the equation vanishes near {[u.value for u in us]}")
        # chord step: the constant-term Jacobian acts on every order
        inverse = np.linalg.inv(jac)
        us = [us[i] - sum((fs[j] * inverse[i, j] for j in range(k)), Jet.constant(context, 0.0))
              for i in range(k)]
    raise NonConvergenceError(f"newton_jet_solve did not converge in {max_iterations} iterations")


def finite_difference_derivative(func: Callable[[np.ndarray], complex], base: Sequence[Scalar],
                                 alpha: Sequence[int], beta: Sequence[int],
                                 step: Optional[float] = None, levels: int = FD_LEVELS) -> complex:
    """Nested central differences of d^alpha_z d^beta_zbar func, extrapolated over halved steps.

    ``func`` maps a complex coordinate vector to a complex value.  The Richardson table is
    read the Ridders way: the entry whose neighbours agree best is returned.
    """
    base = np.asarray(base, dtype=complex)
    # d_z = (d_x - i d_y) / 2 and d_zbar = (d_x + i d_y) / 2
    ops = [(j, -1.0) for j, a in enumerate(alpha) for _ in range(a)]
    ops += [(j, 1.0) for j, b in enumerate(beta) for _ in range(b)]
    if not ops:
        return complex(func(base))
    h = FD_STEP if step is None else step

    def nested(remaining, point, h):
        if not remaining:
            return complex(func(point))
        (j, sign), rest = remaining[0], remaining[1:]
        e = np.zeros_like(point)
        e[j] = h
        dx = (nested(rest, point + e, h) - nested(rest, point - e, h)) / (2 * h)
        dy = (nested(rest, point + 1j * e, h) - nested(rest, point - 1j * e, h)) / (2 * h)
        return 0.5 * (dx + sign * 1j * dy)

    # central differences expand in even powers of h
    table = [[nested(ops, base, h)]]
    best, error = table[0][0], math.inf
    for i in range(1, levels):
        h /= 2.0
        row = [nested(ops, base, h)]
        for j in range(1, i + 1):
            factor = 4.0 ** j
            row.append(row[j - 1] + (row[j - 1] - table[i - 1][j - 1]) / (factor - 1.0))
            estimate = max(abs(row[j] - row[j - 1]), abs(row[j] - table[i - 1][j - 1]))
            if estimate <= error:
                best, error = row[j], estimate
        table.append(row)
        # roundoff has taken over once the diagonal stops improving
        if abs(row[i] - table[i - 1][i - 1]) >= 2.0 * error:
            break
    logger.debug("finite difference order %d: error estimate %.3e after %d levels", len(ops), error, len(table))
    return complex(best)


def compose(outer: Jet, us: Sequence[Jet], ubs: Sequence[Jet]) -> Jet:
    """Substitute the jets ``us`` (and their conjugates ``ubs``) into ``outer``.

    ``outer`` is a jet in its own variables taken at the constant terms of ``us``;
    the result is the jet of the composite field in the variables of ``us``.  Unlike
    calling a field description on composed jets this is valid for fields built
    from derivatives in their own variables.
    """
    context = us[0].context
    if outer.context.n_pairs != len(us) or len(ubs) != len(us):
        raise ContextMismatchError(f"cannot substitute {len(us)} jets into {outer.context!r}")
    shifts = [u - u.value for u in list(us) + list(ubs)]
    valid = min([outer.valid_order, context.order] + [s.valid_order for s in shifts])
    source = outer.context
    monomials: Dict[Tuple[int, ...], Jet] = {(0,) * (2 * source.n_pairs): Jet.constant(context, 1.0)}
    result = Jet.constant(context, outer.value)
    for rank in range(1, source.size):
        e = tuple(int(k) for k in source.exponents[rank])
        if sum(e) > valid:
            break
        # build each monomial from the one a degree lower
        var = next(i for i, k in enumerate(e) if k)
        lowered = list(e)
        lowered[var] -= 1
        monomials[e] = monomials[tuple(lowered)] * shifts[var]
        if outer.coeffs[rank] != 0:
            result = result + monomials[e] * outer.coeffs[rank]
    return Jet(context, result.coeffs, valid)
