"""Concave rate maps and the scalar monotone solvers built on them.

Every algorithm in the package reduces its numeric work to two monotone
scalar equations: ``T * g(E/T) = B`` (duration for given bits) and
``(E/p) * g(p) = B`` (power for given bits). Both are solved by bracketed
bisection with bracket expansion by doubling; bisection is preferred over
Newton because it converges unconditionally on monotone maps.
"""

from __future__ import annotations

import math

from ehsched import kernels
from ehsched.errors import BadInput, Unachievable

LN2 = math.log(2.0)


class RateFunction:
    """A power-to-rate map g(p) and the structure the algorithms rely on.

    Implementations must satisfy:

    * g(0) = 0, g strictly increasing and unbounded;
    * g concave;
    * g(p)/p strictly decreasing and convex, vanishing as p grows.

    ``max_bits_per_energy`` is the slope at 0+, i.e. the supremum of bits
    extractable per unit energy (over unbounded time). Maps with infinite
    slope at 0 report ``math.inf``.
    """

    name = "abstract"

    def g(self, p: float) -> float:
        raise NotImplementedError

    def g_prime(self, p: float) -> float:
        raise NotImplementedError

    @property
    def max_bits_per_energy(self) -> float:
        raise NotImplementedError

    def per_unit_rate(self, p: float) -> float:
        """g(p)/p, the bits extracted per unit of energy at power p."""
        if p <= 0.0:
            raise BadInput("per-unit rate needs p > 0")
        return self.g(p) / p

    def __repr__(self):
        return f"<RateFunction {self.name}>"


class AwgnHalfLog(RateFunction):
    """g(p) = 0.5 * log2(1 + p), the AWGN-style builtin."""

    name = "awgn_half_log"

    def g(self, p: float) -> float:
        if p < 0.0:
            raise BadInput("power must be nonnegative")
        return kernels.awgn_bits_per_time(p)

    def g_prime(self, p: float) -> float:
        if p < 0.0:
            raise BadInput("power must be nonnegative")
        return 0.5 / ((1.0 + p) * LN2)

    def g_inverse(self, rate: float) -> float:
        # expm1 keeps full relative precision for tiny rates
        return math.expm1(2.0 * rate * LN2)

    @property
    def max_bits_per_energy(self) -> float:
        return 0.5 / LN2


_REGISTRY: dict[str, RateFunction] = {}


def register_rate_function(rate: RateFunction) -> None:
    _REGISTRY[rate.name] = rate


def get_rate_function(name: str) -> RateFunction:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise BadInput(f"unknown rate function {name!r}; known: {sorted(_REGISTRY)}") from None


register_rate_function(AwgnHalfLog())

AWGN = get_rate_function("awgn_half_log")


def _bisect_increasing(f, target: float, hint: float = 1.0) -> float:
    """Root of f(x) = target for increasing f with f(0+) < target.

    Expands the bracket by doubling from ``hint``, then bisects until the
    bracket width is below 1e-12 absolute or 1e-10 relative.
    """
    hi = hint
    grew = False
    for _ in range(2000):
        if f(hi) >= target:
            break
        hi *= 2.0
        grew = True
    else:
        return math.inf
    lo = hi * 0.5 if grew else 0.0
    for _ in range(200):
        if hi - lo <= max(1e-12, 1e-10 * hi):
            break
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_duration_for_bits(g: RateFunction, energy: float, bits: float) -> float:
    """Unique T with T * g(energy/T) = bits.

    T * g(energy/T) is strictly increasing in T, from 0 toward the supremum
    energy * g'(0+), so the root exists and is unique precisely when
    0 <= bits < energy * g'(0+).
    """
    if energy <= 0.0:
        raise BadInput("energy must be positive")
    if bits < 0.0:
        raise BadInput("bits must be nonnegative")
    if bits == 0.0:
        return 0.0
    if bits >= energy * g.max_bits_per_energy:
        raise Unachievable(
            f"{bits} bits exceed the supremum {energy * g.max_bits_per_energy}"
            f" attainable with {energy} energy"
        )
    if isinstance(g, AwgnHalfLog):
        t = kernels.awgn_solve_duration(energy, bits)
    else:
        t = _bisect_increasing(lambda T: T * g.g(energy / T), bits)
    if math.isinf(t):
        raise Unachievable("bits are at the analytic supremum for this energy")
    return t


def solve_power_for_bits(g: RateFunction, energy: float, bits: float) -> float:
    """Unique p > 0 with (energy/p) * g(p) = bits.

    Since g(p)/p is strictly decreasing, the product (energy/p)*g(p) falls
    from energy * g'(0+) to 0 as p grows; equivalently p = energy / T for
    the duration T solving the bits equation.
    """
    if bits <= 0.0:
        raise BadInput("bits must be positive (zero bits would force p -> inf)")
    return energy / solve_duration_for_bits(g, energy, bits)


def max_bits(g: RateFunction, energy: float, on_time: float, unbounded_time: bool = False) -> float:
    """Bits delivered by spreading ``energy`` evenly over ``on_time``.

    With ``unbounded_time`` the analytic limit energy * g'(0+) is returned
    and ``on_time`` is ignored.
    """
    if energy < 0.0 or on_time < 0.0:
        raise BadInput("energy and on_time must be nonnegative")
    if unbounded_time:
        return energy * g.max_bits_per_energy
    if on_time == 0.0 or energy == 0.0:
        return 0.0
    return on_time * g.g(energy / on_time)


def invert_rate(g: RateFunction, rate: float) -> float:
    """Unique p with g(p) = rate (g strictly increasing from 0).

    Uses the rate function's analytic inverse when it provides one; the
    bisection fallback runs down to ulp resolution because callers subtract
    nearby quantities from the result.
    """
    if rate < 0.0:
        raise BadInput("rate must be nonnegative")
    if rate == 0.0:
        return 0.0
    inv = getattr(g, "g_inverse", None)
    if inv is not None:
        return inv(rate)
    hi = 1.0
    grew = False
    for _ in range(2000):
        if g.g(hi) >= rate:
            break
        hi *= 2.0
        grew = True
    else:
        return math.inf
    lo = hi * 0.5 if grew else 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g.g(mid) < rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
