"""Phase functions on F_2^n, box and uniformity norms, and correlation
functionals against multilinear forms.

Phases are exact dyadic angles (a TorusFunction t encodes x -> e^{2*pi*i*t}).
Sign-valued functions (denominator 2) run entirely on integer accumulation;
general dyadic phases accumulate exact histograms of roots of unity and touch
floating point only in one final trigonometric dot product, whose error bound
is reported.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import forms, gf2
from .dyadic import Dyadic
from .errors import BudgetExceeded, DimensionMismatch, SizeGuard
from .forms import MultilinearForm
from .nonclassical import NonClassicalPoly, TorusFunction, poly_to_table
from .rankbias import PrankCertificate, bias, require_valid

DEFAULT_BITS_BUDGET = 26

_EPS = float(np.finfo(np.float64).eps)


def thread_count() -> int:
    """Worker override for embarrassingly parallel loops (>= 1)."""
    try:
        return max(1, int(os.environ.get("GOWERS_FORMS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class PhaseFunction:
    """x -> exp(2 pi i phases(x)) with exact dyadic phases."""

    n: int
    phases: TorusFunction

    def __post_init__(self):
        if self.phases.n != self.n:
            raise DimensionMismatch("phase table dimension mismatch")

    @staticmethod
    def one(n: int) -> "PhaseFunction":
        return PhaseFunction(n, TorusFunction.zeros(n))

    @staticmethod
    def from_signs(signs) -> "PhaseFunction":
        arr = np.asarray(signs, dtype=np.int64)
        n = int(arr.shape[0]).bit_length() - 1
        if arr.shape != (1 << n,) or not set(np.unique(arr)) <= {-1, 1}:
            raise DimensionMismatch("signs must be a +-1 table of length 2^n")
        return PhaseFunction(n, TorusFunction(n, (1 - arr) // 2, 1))

    @staticmethod
    def from_poly(q: NonClassicalPoly) -> "PhaseFunction":
        return PhaseFunction(q.n, poly_to_table(q))

    @property
    def is_pm1(self) -> bool:
        return self.phases.log2_den <= 1

    def signs(self) -> np.ndarray:
        if not self.is_pm1:
            raise DimensionMismatch("phase table is not +-1 valued")
        if self.phases.log2_den == 0:
            return np.ones(1 << self.n, dtype=np.int64)
        return 1 - 2 * self.phases.nums

    def complex_table(self) -> np.ndarray:
        m = self.phases.log2_den
        angles = 2.0 * np.pi * self.phases.nums / (1 << m)
        return np.cos(angles) + 1j * np.sin(angles)

    def conj(self) -> "PhaseFunction":
        return PhaseFunction(self.n, TorusFunction.zeros(self.n) - self.phases)

    def __mul__(self, other: "PhaseFunction") -> "PhaseFunction":
        return PhaseFunction(self.n, self.phases + other.phases)

    def shift(self, a) -> "PhaseFunction":
        idx = gf2.vec_to_int(a) if not isinstance(a, (int, np.integer)) else int(a)
        xor = np.arange(1 << self.n) ^ idx
        return PhaseFunction(
            self.n, TorusFunction(self.n, self.phases.nums[xor], self.phases.log2_den)
        )


def mder(f: PhaseFunction, a) -> PhaseFunction:
    """Multiplicative derivative: x -> f(x + a) * conj(f(x))."""
    from .nonclassical import additive_derivative

    return PhaseFunction(f.n, additive_derivative(f.phases, a))


def restrict_phase(f: PhaseFunction, u: gf2.Subspace, shift=None) -> "PhaseFunction":
    """The function c -> f(from_coords(c) + shift) on U's coordinates."""
    if u.ambient_dim != f.n:
        raise DimensionMismatch("subspace ambient mismatch")
    if u.dim == 0:
        raise DimensionMismatch("cannot restrict to the zero subspace")
    w = 0 if shift is None else (
        gf2.vec_to_int(shift) if not isinstance(shift, (int, np.integer)) else int(shift)
    )
    idx = np.array(
        [gf2.vec_to_int(u.from_coords(gf2.vec_from_int(c, u.dim))) ^ w for c in range(1 << u.dim)]
    )
    return PhaseFunction(
        u.dim, TorusFunction(u.dim, f.phases.nums[idx], f.phases.log2_den)
    )


@dataclass(frozen=True)
class NormResult:
    value: float  # the norm (2^k-th root)
    err: float
    power: float  # the 2^k-th power of the norm
    power_exact: Fraction | None = None  # exact when the +-1 path applies

    def exact_one(self) -> bool:
        return self.power_exact == 1


def _roots_table(m: int) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(1 << m) / (1 << m)
    return np.cos(angles) + 1j * np.sin(angles)


def gowers_norm(
    f: PhaseFunction, k: int, method: str = "naive", budget_bits: int = DEFAULT_BITS_BUDGET
) -> NormResult:
    """Uniformity norm of order k >= 1 via full enumeration of derivative
    tables ("naive") or the one-variable averaging recursion ("recursive")."""
    if k < 1:
        raise DimensionMismatch("norm order must be >= 1")
    if (k + 1) * f.n > budget_bits:
        raise BudgetExceeded("norm enumeration exceeds the bit budget")
    if method == "naive":
        return _gowers_naive(f, k)
    if method == "recursive":
        return _gowers_recursive(f, k)
    raise ValueError(f"unknown method {method!r}")


def _gowers_naive(f: PhaseFunction, k: int) -> NormResult:
    n = f.n
    total_tuples = 1 << ((k + 1) * n)
    if f.is_pm1:
        signs = f.signs()
        idx = np.arange(signs.size)

        def rec(table: np.ndarray, depth: int) -> int:
            if depth == 0:
                return int(table.sum())
            return sum(rec(table[idx ^ a] * table, depth - 1) for a in range(table.size))

        workers = thread_count()
        if workers > 1 and k >= 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                partials = pool.map(
                    lambda a: rec(signs[idx ^ a] * signs, k - 1), range(signs.size)
                )
                total = sum(partials)  # ordered reduction: schedule independent
        else:
            total = rec(signs, k)
        power = Fraction(total, total_tuples)
        assert 0 <= power <= 1
        return NormResult(float(power) ** (1.0 / (1 << k)), 0.0, float(power), power)
    m = f.phases.log2_den
    counts = np.zeros(1 << m, dtype=np.int64)
    mod = 1 << m

    def rec_phase(nums: np.ndarray, depth: int):
        if depth == 0:
            counts_local = np.bincount(nums, minlength=mod)
            counts[: counts_local.size] += counts_local
            return
        idx = np.arange(nums.size)
        for a in range(nums.size):
            rec_phase((nums[idx ^ a] - nums) % mod, depth - 1)

    rec_phase(f.phases.nums, k)
    z = complex(counts @ _roots_table(m))
    err = 4.0 * _EPS * total_tuples
    power = max(z.real, 0.0) / total_tuples
    return NormResult(power ** (1.0 / (1 << k)), err / total_tuples, power, None)


def _gowers_recursive(f: PhaseFunction, k: int) -> NormResult:
    n = f.n
    if f.is_pm1:
        signs = f.signs()

        def upow(table: np.ndarray, order: int) -> Fraction:
            if order == 1:
                s = int(table.sum())
                return Fraction(s * s, 1 << (2 * n))
            idx = np.arange(table.size)
            acc = Fraction(0)
            for a in range(table.size):
                acc += upow(table[idx ^ a] * table, order - 1)
            return acc / (1 << n)

        power = upow(signs, k)
        return NormResult(float(power) ** (1.0 / (1 << k)), 0.0, float(power), power)
    mod = 1 << f.phases.log2_den
    roots = _roots_table(f.phases.log2_den)

    def upow_phase(nums: np.ndarray, order: int) -> float:
        if order == 1:
            z = complex(roots[nums].sum())
            return abs(z) ** 2 / (1 << (2 * n))
        idx = np.arange(nums.size)
        return sum(
            upow_phase((nums[idx ^ a] - nums) % mod, order - 1) for a in range(nums.size)
        ) / (1 << n)

    power = upow_phase(f.phases.nums, k)
    err = 8.0 * _EPS * (1 << ((k + 1) * n)) / (1 << ((k + 1) * n))
    return NormResult(max(power, 0.0) ** (1.0 / (1 << k)), err, power, None)


def u2_norm_fourier(f: PhaseFunction) -> float:
    """U^2 norm from the Walsh spectrum: the fourth moment of |f hat|."""
    table = f.complex_table()
    spec = walsh_hadamard(table) / (1 << f.n)
    return float(np.sum(np.abs(spec) ** 4)) ** 0.25


def walsh_hadamard(vec: np.ndarray) -> np.ndarray:
    v = vec.astype(np.complex128 if np.iscomplexobj(vec) else np.int64).copy()
    h = 1
    while h < v.size:
        for i in range(0, v.size, h * 2):
            a = v[i : i + h].copy()
            b = v[i + h : i + 2 * h].copy()
            v[i : i + h] = a + b
            v[i + h : i + 2 * h] = a - b
        h *= 2
    return v


# ---------------------------------------------------------------------------
# box norms
# ---------------------------------------------------------------------------


def box_norm(table: np.ndarray, budget: int = 1 << 22) -> float:
    """Box norm of a complex table on X_1 x ... x X_k (2^k-th root)."""
    power = box_power(table, budget)
    return max(power, 0.0) ** (1.0 / (1 << table.ndim))


def box_power(table: np.ndarray, budget: int = 1 << 22) -> float:
    k = table.ndim
    sizes = table.shape
    pairs = 1
    for s in sizes:
        pairs *= s * s
    if pairs * (1 << k) > budget:
        raise BudgetExceeded("box norm enumeration exceeds budget")
    total = 0.0 + 0.0j
    for xy in np.ndindex(*(s for s in sizes for _ in (0, 1))):
        x = xy[0::2]
        y = xy[1::2]
        prod = 1.0 + 0.0j
        for bits in range(1 << k):
            idx = tuple(x[i] if (bits >> i) & 1 else y[i] for i in range(k))
            v = table[idx]
            prod *= v.conjugate() if bin(bits).count("1") % 2 else v
        total += prod
    return (total / pairs).real


def box_mixed_average(tables: dict, shape, budget: int = 1 << 22) -> complex:
    """The Gowers-Cauchy-Schwarz mixed average: one table per subset of axes."""
    k = len(shape)
    pairs = 1
    for s in shape:
        pairs *= s * s
    if pairs * (1 << k) > budget:
        raise BudgetExceeded("mixed average enumeration exceeds budget")
    total = 0.0 + 0.0j
    for xy in np.ndindex(*(s for s in shape for _ in (0, 1))):
        x = xy[0::2]
        y = xy[1::2]
        prod = 1.0 + 0.0j
        for bits in range(1 << k):
            idx = tuple(x[i] if (bits >> i) & 1 else y[i] for i in range(k))
            v = tables[bits][idx]
            prod *= v.conjugate() if bin(bits).count("1") % 2 else v
        total += prod
    return total / pairs


# ---------------------------------------------------------------------------
# correlation with multilinear forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationReport:
    value: complex
    err: float
    exact: Fraction | None
    arity: int
    dim: int

    def magnitude(self) -> float:
        return abs(self.value)


def correlation(
    f: PhaseFunction, alpha: MultilinearForm, budget_bits: int = DEFAULT_BITS_BUDGET
) -> CorrelationReport:
    """E over x and shifts of the k-fold derivative of f at x times the sign
    of alpha at the shifts; exact rational for +-1-valued f."""
    if alpha.dim != f.n:
        raise DimensionMismatch("form and function dimensions differ")
    k, n = alpha.arity, f.n
    if (k + 1) * n > budget_bits:
        raise BudgetExceeded("correlation enumeration exceeds the bit budget")
    total_tuples = 1 << ((k + 1) * n)
    vec_cache = gf2.all_vectors(n).astype(np.int64)
    if f.is_pm1:
        signs = f.signs()

        def rec(table: np.ndarray, tensor: np.ndarray, depth: int) -> int:
            if depth == k:
                s = int(table.sum())
                return -s if int(tensor) else s
            idx = np.arange(table.size)
            out = 0
            for a in range(table.size):
                out += rec(
                    table[idx ^ a] * table,
                    np.tensordot(vec_cache[a], tensor, axes=([0], [0])) % 2,
                    depth + 1,
                )
            return out

        total = rec(signs, alpha.coeffs.astype(np.int64), 0)
        exact = Fraction(total, total_tuples)
        return CorrelationReport(complex(float(exact)), 0.0, exact, k, n)
    m = max(f.phases.log2_den, 1)
    mod = 1 << m
    scaled = f.phases.nums << (m - f.phases.log2_den)
    counts = np.zeros(mod, dtype=np.int64)

    def rec_phase(nums: np.ndarray, tensor: np.ndarray, depth: int):
        if depth == k:
            flip = (mod >> 1) if int(tensor) else 0
            local = np.bincount((nums + flip) % mod, minlength=mod)
            counts[:] += local
            return
        idx = np.arange(nums.size)
        for a in range(nums.size):
            rec_phase(
                (nums[idx ^ a] - nums) % mod,
                np.tensordot(vec_cache[a], tensor, axes=([0], [0])) % 2,
                depth + 1,
            )

    rec_phase(scaled, alpha.coeffs.astype(np.int64), 0)
    z = complex(counts @ _roots_table(m)) / total_tuples
    err = 4.0 * _EPS * mod
    return CorrelationReport(z, err, None, k, n)


def spectrum_search(
    f: PhaseFunction,
    k: int,
    threshold: float,
    candidates=None,
    budget_bits: int = DEFAULT_BITS_BUDGET,
) -> list[tuple[MultilinearForm, CorrelationReport]]:
    """All forms whose correlation magnitude reaches the threshold, sorted
    descending; enumerates the full form space when n^k <= 16, otherwise a
    candidate list must be supplied."""
    n = f.n
    if candidates is not None:
        out = []
        for alpha in candidates:
            rep = correlation(f, alpha, budget_bits)
            if rep.magnitude() >= threshold - 1e-12:
                out.append((alpha, rep))
        out.sort(key=lambda p: (-p[1].magnitude(), p[0].support()))
        return out
    if n**k > 16:
        raise SizeGuard("form space too large; supply candidates")
    # g(a-tuple) = sum over x of the derivative values, exactly
    shape = (1 << n,) * k
    if f.is_pm1:
        g = np.zeros(shape, dtype=np.int64)
    else:
        g = np.zeros(shape, dtype=np.complex128)

    def rec(table, depth, prefix):
        if depth == k:
            g[prefix] = table.sum()
            return
        idx = np.arange(table.size)
        for a in range(table.size):
            if f.is_pm1:
                rec(table[idx ^ a] * table, depth + 1, prefix + (a,))
            else:
                rec(table[idx ^ a] - table, depth + 1, prefix + (a,))

    if f.is_pm1:
        rec(f.signs(), 0, ())
    else:
        roots = _roots_table(f.phases.log2_den)

        def rec_c(nums, depth, prefix):
            if depth == k:
                g[prefix] = roots[nums].sum()
                return
            idx = np.arange(nums.size)
            mod = 1 << f.phases.log2_den
            for a in range(nums.size):
                rec_c((nums[idx ^ a] - nums) % mod, depth + 1, prefix + (a,))

        rec_c(f.phases.nums, 0, ())
    # push g forward along the monomial evaluation map into F_2^{n^k}
    dims = n**k
    monomials = list(itertools.product(range(n), repeat=k))
    h = np.zeros(1 << dims, dtype=g.dtype)
    for tup in np.ndindex(*shape):
        mu = 0
        for pos, jidx in enumerate(monomials):
            bit = 1
            for t in range(k):
                bit &= (tup[t] >> jidx[t]) & 1
            if bit:
                mu |= 1 << pos
        h[mu] += g[tup]
    transformed = walsh_hadamard(h)
    total_tuples = 1 << ((k + 1) * n)
    exact_path = g.dtype == np.int64
    out = []
    for lam in range(1 << dims):
        val = transformed[lam] / total_tuples
        if abs(val) >= threshold - 1e-12:
            tensor = np.array(
                [(lam >> p) & 1 for p in range(dims)], dtype=np.uint8
            ).reshape((n,) * k)
            alpha = MultilinearForm(n, k, tensor)
            exact = Fraction(int(transformed[lam]), total_tuples) if exact_path else None
            rep = CorrelationReport(complex(val), 0.0 if exact_path else 4.0 * _EPS, exact, k, n)
            out.append((alpha, rep))
    out.sort(key=lambda p: (-p[1].magnitude(), p[0].support()))
    return out


def lowrank_replace_check(
    f: PhaseFunction,
    alpha: MultilinearForm,
    beta: MultilinearForm,
    diff_cert: PrankCertificate,
) -> dict:
    """Replacing a form by a certified-close one keeps correlation up to the
    factor 2^{-2^{k+1} r}; both sides are computed and reported."""
    require_valid(diff_cert, "difference certificate")
    if diff_cert.target != alpha + beta:
        raise DimensionMismatch("certificate target must be alpha + beta")
    k = alpha.arity
    ca = correlation(f, alpha)
    cb = correlation(f, beta)
    r = diff_cert.size
    factor = 2.0 ** (-(2 ** (k + 1)) * r)
    lhs = cb.magnitude()
    rhs = factor * ca.magnitude()
    return {
        "corr_alpha": ca,
        "corr_beta": cb,
        "lhs": lhs,
        "rhs": rhs,
        "holds": lhs >= rhs - 1e-12,
        "certificate_terms": r,
    }


@dataclass
class RestrictReport:
    corr_before: float
    corr_after: float
    shift: np.ndarray
    per_shift: list
    tolerance: float


def subspace_restrict(
    f: PhaseFunction,
    alpha: MultilinearForm,
    u: gf2.Subspace,
    budget: int = 1 << 22,
    budget_bits: int = DEFAULT_BITS_BUDGET,
) -> tuple[PhaseFunction, RestrictReport]:
    """A translate of f restricted to U preserving the derivative correlation.

    The averaging argument guarantees some coset shift works; all shifts from
    the complement are tried and the best is returned, so the contract
    corr_after >= corr_before - tolerance holds with exact arithmetic for
    +-1-valued f.
    """
    k = alpha.arity
    p = gf2.complement_projection(u)
    d = p.complement_basis.shape[0]
    if (1 << d) ** (k + 1) > budget:
        raise BudgetExceeded("complement enumeration exceeds budget")
    before = correlation(f, alpha, budget_bits)
    alpha_u = forms.restrict_to_subspace(alpha, u)
    best = None
    per_shift = []
    for mask in range(1 << d):
        w = gf2.zeros(f.n)
        for i in range(d):
            if (mask >> i) & 1:
                w ^= p.complement_basis[i]
        fu = restrict_phase(f, u, w)
        rep = correlation(fu, alpha_u, budget_bits)
        per_shift.append((mask, rep.magnitude()))
        if best is None or rep.magnitude() > best[1].magnitude():
            best = (w, rep, fu)
    tol = before.err + best[1].err + 1e-12
    report = RestrictReport(
        before.magnitude(), best[1].magnitude(), best[0], per_shift, tol
    )
    return best[2], report


def symmetry_argument_check(
    f: PhaseFunction, alpha: MultilinearForm, pi: forms.Permutation
) -> dict:
    """Correlation magnitude against the bias of alpha + alpha∘pi."""
    rep = correlation(f, alpha)
    diff = alpha + forms.permute(alpha, pi)
    b = bias(diff)
    return {
        "correlation": rep,
        "c": rep.magnitude(),
        "bias_diff": b,
        "diff_is_zero": diff.is_zero(),
    }


# ---------------------------------------------------------------------------
# sumsets
# ---------------------------------------------------------------------------


def sumset4_verify(points, v: gf2.Subspace, n: int | None = None) -> bool:
    """Exact membership of every element of V in A+A+A+A via two squaring
    passes of the indicator under the Walsh transform."""
    pts = list(points)
    if n is None:
        n = v.ambient_dim
    if n > 16:
        raise SizeGuard("sumset verification supports n <= 16")
    ind = np.zeros(1 << n, dtype=np.int64)
    for x in pts:
        ind[gf2.vec_to_int(x) if not isinstance(x, (int, np.integer)) else int(x)] = 1
    if not ind.any():
        return False
    spec = walsh_hadamard(ind)
    two = walsh_hadamard(spec * spec)
    assert (two % (1 << n) == 0).all()
    two_support = (two // (1 << n)) > 0
    spec2 = walsh_hadamard(two_support.astype(np.int64))
    four = walsh_hadamard(spec2 * spec2)
    assert (four % (1 << n) == 0).all()
    four_count = four // (1 << n)
    for c in range(1 << v.dim):
        x = v.from_coords(gf2.vec_from_int(c, v.dim)) if v.dim else gf2.zeros(n)
        if four_count[gf2.vec_to_int(x)] <= 0:
            return False
    return True


def step3_zero_on_subspace_check(rho: MultilinearForm, u: gf2.Subspace) -> dict:
    """For a form vanishing on U^k, the box-norm chain forces
    density(U)^k <= bias(rho)^{1/2^k}; both sides exact."""
    k = rho.arity
    restricted = forms.restrict_to_subspace(rho, u)
    if not restricted.is_zero():
        raise DimensionMismatch("form does not vanish on the subspace")
    b = bias(rho)
    # compare 2^{-codim*k} <= bias^{1/2^k}  <=>  bias >= 2^{-codim*k*2^k}
    lhs_exponent = u.codim * k * (1 << k)
    holds = b >= Dyadic(1, lhs_exponent)
    return {
        "bias": b,
        "density_pow_k_log2": -u.codim * k,
        "required_bias_log2": -lhs_exponent,
        "holds": bool(holds),
    }
