"""Multilinear forms on (F_2^n)^k as dense bit coefficient tensors.

A form is stored as its full coefficient tensor of shape ``(n,) * k``:
``f(x_1, ..., x_k) = sum over (i_1..i_k) of coeffs[i] * x_1[i_1] * ... *
x_k[i_k]`` mod 2.  Variables are indexed 0..k-1 throughout.  Forms are
immutable; every operation returns a new form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import gf2
from .errors import DimensionMismatch, NotStronglySymmetric, NotSymmetric, SizeGuard

# dense storage guard: n^k coefficient bits
MAX_TENSOR_BITS = 1 << 28


@dataclass(frozen=True)
class MultilinearForm:
    dim: int
    arity: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.arity < 1 or self.dim < 1:
            raise DimensionMismatch("arity and dim must be positive")
        if self.dim**self.arity > MAX_TENSOR_BITS:
            raise SizeGuard(f"tensor n^k = {self.dim}^{self.arity} too large")
        c = gf2.as_gf2(self.coeffs)
        if c.shape != (self.dim,) * self.arity:
            raise DimensionMismatch(
                f"coeff tensor shape {c.shape} != {(self.dim,) * self.arity}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other: "MultilinearForm") -> "MultilinearForm":
        if (self.dim, self.arity) != (other.dim, other.arity):
            raise DimensionMismatch("form shapes differ")
        return MultilinearForm(self.dim, self.arity, self.coeffs ^ other.coeffs)

    def __eq__(self, other):
        return (
            isinstance(other, MultilinearForm)
            and self.dim == other.dim
            and self.arity == other.arity
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __hash__(self):
        return hash((self.dim, self.arity, self.coeffs.tobytes()))

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    def support(self) -> list[tuple[int, ...]]:
        """Nonzero coefficient index tuples in lexicographic order."""
        return [tuple(int(v) for v in idx) for idx in np.argwhere(self.coeffs)]


def zero_form(n: int, k: int) -> MultilinearForm:
    return MultilinearForm(n, k, np.zeros((n,) * k, dtype=np.uint8))


def from_entries(n: int, k: int, entries) -> MultilinearForm:
    t = np.zeros((n,) * k, dtype=np.uint8)
    for idx in entries:
        t[tuple(idx)] ^= 1
    return MultilinearForm(n, k, t)


def dot_form(n: int) -> MultilinearForm:
    """The bilinear form sum_i x[i] y[i]."""
    return MultilinearForm(n, 2, np.eye(n, dtype=np.uint8))


def diagonal_form(n: int, k: int, weights=None) -> MultilinearForm:
    """sum_i w_i * x_1[i] * ... * x_k[i]; fully strongly symmetric."""
    t = np.zeros((n,) * k, dtype=np.uint8)
    w = np.ones(n, dtype=np.uint8) if weights is None else gf2.as_gf2(weights)
    for i in range(n):
        if w[i]:
            t[(i,) * k] = 1
    return MultilinearForm(n, k, t)


def random_form(n: int, k: int, rng: np.random.Generator) -> MultilinearForm:
    return MultilinearForm(n, k, rng.integers(0, 2, size=(n,) * k, dtype=np.uint8))


@dataclass(frozen=True)
class Permutation:
    """Bijection on variable slots 0..k-1, stored as its image array."""

    arity: int
    image: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.image) != list(range(self.arity)):
            raise DimensionMismatch("image is not a bijection")

    @staticmethod
    def identity(k: int) -> "Permutation":
        return Permutation(k, tuple(range(k)))

    @staticmethod
    def transposition(k: int, a: int, b: int) -> "Permutation":
        img = list(range(k))
        img[a], img[b] = img[b], img[a]
        return Permutation(k, tuple(img))

    @staticmethod
    def from_cycle(k: int, cycle) -> "Permutation":
        img = list(range(k))
        cyc = list(cycle)
        for i, c in enumerate(cyc):
            img[c] = cyc[(i + 1) % len(cyc)]
        return Permutation(k, tuple(img))

    def __call__(self, i: int) -> int:
        return self.image[i]

    def inverse(self) -> "Permutation":
        inv = [0] * self.arity
        for i, j in enumerate(self.image):
            inv[j] = i
        return Permutation(self.arity, tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """self after other: (self.compose(other))(i) = self(other(i))."""
        return Permutation(
            self.arity, tuple(self.image[other.image[i]] for i in range(self.arity))
        )

    def apply_to_inputs(self, xs):
        """The coordinate action: output slot i receives xs[inverse(i)]."""
        inv = self.inverse()
        return [xs[inv(i)] for i in range(self.arity)]


def evaluate(f: MultilinearForm, xs) -> int:
    """Evaluate by successive contraction of the last axis."""
    if len(xs) != f.arity:
        raise DimensionMismatch(f"expected {f.arity} vectors")
    t = f.coeffs.astype(np.int64)
    for x in reversed(list(xs)):
        x = gf2.as_gf2(x)
        if x.shape != (f.dim,):
            raise DimensionMismatch("input vector has wrong dim")
        t = t @ x.astype(np.int64) % 2
    return int(t)


def slice_form(f: MultilinearForm, assignment: dict) -> MultilinearForm:
    """Fix the variables in ``assignment`` (slot -> vector); arity drops.

    Fixing every slot is rejected; use :func:`evaluate` for that.
    """
    fixed = sorted(assignment)
    if any(v < 0 or v >= f.arity for v in fixed):
        raise DimensionMismatch("slot out of range")
    if len(fixed) >= f.arity:
        raise DimensionMismatch("cannot fix all variables; use evaluate")
    t = f.coeffs.astype(np.int64)
    for slot in reversed(fixed):
        x = gf2.as_gf2(assignment[slot]).astype(np.int64)
        if x.shape != (f.dim,):
            raise DimensionMismatch("assigned vector has wrong dim")
        t = np.tensordot(t, x, axes=([slot], [0])) % 2
    return MultilinearForm(f.dim, f.arity - len(fixed), t.astype(np.uint8))


def permute(f: MultilinearForm, p: Permutation) -> MultilinearForm:
    """The composition f∘p, defined by evaluation equivariance:
    evaluate(permute(f, p), xs) == evaluate(f, p.apply_to_inputs(xs)).

    Permuting twice composes as permute(permute(f, p), q) ==
    permute(f, p.compose(q)).
    """
    if p.arity != f.arity:
        raise DimensionMismatch("permutation arity mismatch")
    return MultilinearForm(f.dim, f.arity, np.transpose(f.coeffs, axes=p.image))


def permute_transposition(f: MultilinearForm, a: int, b: int) -> MultilinearForm:
    return permute(f, Permutation.transposition(f.arity, a, b))


def is_symmetric(f: MultilinearForm, var_subset=None) -> bool:
    """Coefficient-tensor invariance under permutations of the given slots.

    Checked via adjacent transpositions of the sorted subset, which generate
    the full symmetric group on it.
    """
    s = sorted(range(f.arity) if var_subset is None else var_subset)
    for a, b in zip(s, s[1:]):
        if not np.array_equal(f.coeffs, np.swapaxes(f.coeffs, a, b)):
            return False
    return True


def symmetrize(f: MultilinearForm, var_subset=None) -> MultilinearForm:
    """XOR of f∘p over all permutations p of the subset."""
    s = sorted(range(f.arity) if var_subset is None else var_subset)
    acc = np.zeros_like(f.coeffs)
    for perm in itertools.permutations(s):
        img = list(range(f.arity))
        for slot, tgt in zip(s, perm):
            img[slot] = tgt
        acc ^= np.transpose(f.coeffs, axes=img)
    return MultilinearForm(f.dim, f.arity, acc)


def diagonal_contract(f: MultilinearForm) -> MultilinearForm:
    """Identify the first two variables: d -> f(d, d, y...).

    Requires symmetry in slots {0, 1}; in characteristic 2 that is exactly
    what makes the contraction multilinear again.
    """
    if f.arity < 2:
        raise DimensionMismatch("arity must be at least 2")
    if not is_symmetric(f, (0, 1)):
        raise NotSymmetric("form is not symmetric in its first two variables")
    t = np.einsum("ii...->i...", f.coeffs)
    return MultilinearForm(f.dim, f.arity - 1, t)


def is_strongly_symmetric(f: MultilinearForm) -> bool:
    if f.arity < 2:
        return True
    if not is_symmetric(f):
        return False
    d = diagonal_contract(f)
    return True if d.arity == 1 else is_symmetric(d)


def lift_strongly_symmetric(f: MultilinearForm) -> MultilinearForm:
    """The (k+1)-linear form whose first-two-variable contraction is ``f``.

    Coefficient rule: tuples with all indices distinct get 0; otherwise the
    value of ``f`` at any tuple obtained by deleting one copy of a repeated
    index.  Well-definedness is exactly strong symmetry, which is enforced.
    """
    if not is_strongly_symmetric(f):
        raise NotStronglySymmetric("lift coefficient rule would be ill-defined")
    n, k = f.dim, f.arity
    if n ** (k + 1) > MAX_TENSOR_BITS:
        raise SizeGuard("lifted tensor too large")
    out = np.zeros((n,) * (k + 1), dtype=np.uint8)
    for idx in np.ndindex(*(n,) * (k + 1)):
        seen = {}
        repeated = None
        for v in idx:
            if v in seen:
                repeated = v
                break
            seen[v] = 1
        if repeated is None:
            continue
        reduced = list(idx)
        reduced.remove(repeated)
        out[idx] = f.coeffs[tuple(reduced)]
    return MultilinearForm(n, k + 1, out)


def strongly_symmetric_coefficient_classes(n: int, k: int) -> list[list[tuple]]:
    """Orbit classes of coefficient tuples under strong symmetry.

    Assigning one bit per class enumerates exactly the strongly symmetric
    forms: classes join two size-k multisets when both arise from a common
    (k+1)-multiset by deleting one copy of a repeated element.
    """
    multisets = [tuple(sorted(t)) for t in itertools.combinations_with_replacement(range(n), k)]
    parent = {m: m for m in multisets}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for big in itertools.combinations_with_replacement(range(n), k + 1):
        counts = {}
        for v in big:
            counts[v] = counts.get(v, 0) + 1
        children = []
        for v, c in counts.items():
            if c >= 2:
                reduced = list(big)
                reduced.remove(v)
                children.append(tuple(sorted(reduced)))
        for a, b in zip(children, children[1:]):
            union(a, b)

    groups: dict[tuple, list[tuple]] = {}
    for m in multisets:
        groups.setdefault(find(m), []).append(m)

    classes = []
    for members in groups.values():
        tuples = []
        for m in members:
            tuples.extend(set(itertools.permutations(m)))
        classes.append(sorted(tuples))
    return sorted(classes)


def strongly_symmetric_from_bits(n: int, k: int, bits) -> MultilinearForm:
    classes = strongly_symmetric_coefficient_classes(n, k)
    if len(bits) != len(classes):
        raise DimensionMismatch(f"need {len(classes)} class bits")
    t = np.zeros((n,) * k, dtype=np.uint8)
    for b, cls in zip(bits, classes):
        if b:
            for idx in cls:
                t[idx] = 1
    return MultilinearForm(n, k, t)


def random_strongly_symmetric(n: int, k: int, rng: np.random.Generator) -> MultilinearForm:
    classes = strongly_symmetric_coefficient_classes(n, k)
    return strongly_symmetric_from_bits(
        n, k, rng.integers(0, 2, size=len(classes)).tolist()
    )


def all_strongly_symmetric(n: int, k: int):
    """Exhaustive iterator; feasible only for tiny class counts."""
    classes = strongly_symmetric_coefficient_classes(n, k)
    if 2 ** len(classes) > 1 << 20:
        raise SizeGuard("too many strongly symmetric forms to enumerate")
    for mask in range(1 << len(classes)):
        yield strongly_symmetric_from_bits(
            n, k, [(mask >> i) & 1 for i in range(len(classes))]
        )


def apply_linear(f: MultilinearForm, m) -> MultilinearForm:
    """Form g with g(x_1..x_k) = f(M x_1, ..., M x_k) for M of shape (dim, new_dim)."""
    mm = gf2.as_gf2(m).astype(np.int64)
    if mm.shape[0] != f.dim:
        raise DimensionMismatch("linear map domain mismatch")
    new_dim = mm.shape[1]
    if new_dim == 0:
        raise DimensionMismatch("cannot map onto a zero-dimensional space")
    t = f.coeffs.astype(np.int64)
    for _ in range(f.arity):
        # contract the leading axis, append the transformed axis at the end;
        # after arity steps the original axis order is restored
        t = np.tensordot(t, mm, axes=([0], [0])) % 2
    return MultilinearForm(new_dim, f.arity, t.astype(np.uint8))


def restrict_to_subspace(f: MultilinearForm, u: "gf2.Subspace") -> MultilinearForm:
    """Coefficients of f restricted to U, written in U's RREF basis coordinates."""
    if u.ambient_dim != f.dim:
        raise DimensionMismatch("subspace ambient dim mismatch")
    if u.dim == 0:
        raise DimensionMismatch("restriction to the zero subspace is trivial")
    return apply_linear(f, u.basis.T)


def truth_table(f: MultilinearForm) -> np.ndarray:
    """Full evaluation table, shape (2^n,) * k; table[v1..vk] = f(vec(v1), ...).

    Index order: table axis j enumerates variable j over integer-encoded
    vectors (gf2.vec_from_int).
    """
    if f.arity * f.dim > 24:
        raise SizeGuard("truth table too large")
    ev = gf2.all_vectors(f.dim).astype(np.int64)  # (2^n, n)
    t = f.coeffs.astype(np.int64)
    for _ in range(f.arity):
        t = np.tensordot(t, ev, axes=([0], [1])) % 2
    return t.astype(np.uint8)
