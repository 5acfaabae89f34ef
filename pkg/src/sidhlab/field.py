"""Arithmetic in GF(p) and GF(p^2) = GF(p)[i]/(i^2+1) for primes p = 2^e2 * 3^e3 - 1.

Elements are kept as canonical residues in [0, p).  Since p = 3 (mod 4),
x^2 + 1 is irreducible over GF(p) and the quadratic extension is realized
with a formal square root of -1.

NOT constant-time.  This package is an attack simulator; operand-dependent
timing is everywhere and by design (see README).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

try:  # big-int kernels: ~2.5x mul, ~10x inversion at 434 bits
    from gmpy2 import invert as _invert, mpz as _mpz, powmod as _powmod
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _mpz = int

    def _invert(x, p):
        return pow(x, -1, p)

    def _powmod(x, e, p):
        return pow(x, e, p)


@dataclass(frozen=True)
class FieldParams:
    """Prime shape p = 2^e2 * 3^e3 - 1 with the exponents kept alongside."""

    p: int
    e2: int
    e3: int

    @classmethod
    def from_exponents(cls, e2: int, e3: int, check_prime: bool = True) -> "FieldParams":
        if e2 < 2 or e3 < 1:
            raise ValueError("need e2 >= 2 and e3 >= 1")
        p = (1 << e2) * 3**e3 - 1
        if check_prime:
            from sympy import isprime

            if not isprime(p):
                raise ValueError(f"2^{e2} * 3^{e3} - 1 = {p} is not prime")
        return cls(p=p, e2=e2, e3=e3)

    def __post_init__(self):
        if self.p != (1 << self.e2) * 3**self.e3 - 1:
            raise ValueError("p does not match 2^e2 * 3^e3 - 1")
        if self.p % 4 != 3:
            raise ValueError("p = 3 (mod 4) required")


class Fp2:
    """An element re + i*im of GF(p^2), canonical residues.

    Treat as immutable (nothing in this package mutates one after creation;
    runtime enforcement is skipped because these are built millions of times
    per attack trial).  Arithmetic assumes both operands share p: no
    per-operation field check in the hot path.
    """

    __slots__ = ("re", "im", "p")

    def __init__(self, re, im, p):
        self.re = _mpz(re) % p
        self.im = _mpz(im) % p
        self.p = p

    @staticmethod
    def _raw(re, im, p) -> "Fp2":
        # fast path: values already canonical residues
        el = object.__new__(Fp2)
        el.re = re
        el.im = im
        el.p = p
        return el

    def __add__(self, other: "Fp2") -> "Fp2":
        p = self.p
        return Fp2._raw((self.re + other.re) % p, (self.im + other.im) % p, p)

    def __sub__(self, other: "Fp2") -> "Fp2":
        p = self.p
        return Fp2._raw((self.re - other.re) % p, (self.im - other.im) % p, p)

    def __neg__(self) -> "Fp2":
        p = self.p
        return Fp2._raw(-self.re % p, -self.im % p, p)

    def __mul__(self, other: "Fp2") -> "Fp2":
        # Karatsuba: 3 base-field multiplications
        p = self.p
        t0 = self.re * other.re
        t1 = self.im * other.im
        t2 = (self.re + self.im) * (other.re + other.im)
        return Fp2._raw((t0 - t1) % p, (t2 - t0 - t1) % p, p)

    def sqr(self) -> "Fp2":
        p = self.p
        return Fp2._raw(
            ((self.re + self.im) * (self.re - self.im)) % p,
            (2 * self.re * self.im) % p,
            p,
        )

    def inv(self) -> "Fp2":
        """Multiplicative inverse; raises ZeroDivisionError on zero."""
        p = self.p
        norm = (self.re * self.re + self.im * self.im) % p
        d = _invert(norm, p)  # ZeroDivisionError for norm == 0
        return Fp2._raw((self.re * d) % p, (-self.im * d) % p, p)

    def conj(self) -> "Fp2":
        return Fp2._raw(self.re, -self.im % self.p, self.p)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Fp2):
            return NotImplemented
        return self.re == other.re and self.im == other.im and self.p == other.p

    def __hash__(self):
        return hash((int(self.re), int(self.im), int(self.p)))

    def __repr__(self):
        return f"Fp2({int(self.re)}, {int(self.im)})"


class Fp2Field:
    """GF(p^2) context: element construction, square roots, serialization."""

    def __init__(self, params: FieldParams):
        self.params = params
        self.p = _mpz(params.p)
        self.zero = Fp2(0, 0, self.p)
        self.one = Fp2(1, 0, self.p)
        self.gen_i = Fp2(0, 1, self.p)
        self._nbytes = (params.p.bit_length() + 7) // 8

    def __call__(self, re, im=0) -> Fp2:
        return Fp2(re, im, self.p)

    def random_element(self, rng: random.Random) -> Fp2:
        p = int(self.p)
        return Fp2._raw(_mpz(rng.randrange(p)), _mpz(rng.randrange(p)), self.p)

    def random_nonzero(self, rng: random.Random) -> Fp2:
        while True:
            x = self.random_element(rng)
            if x:
                return x

    # --- base-field helpers -------------------------------------------------

    def in_base_field(self, x: Fp2) -> bool:
        return x.im == 0

    def _legendre(self, v) -> int:
        """Legendre symbol of v in GF(p): 1, -1, or 0."""
        r = _powmod(v, (self.p - 1) >> 1, self.p)
        return -1 if r == self.p - 1 else int(r)

    def _sqrt_fp(self, v):
        """Square root in GF(p) via v^((p+1)/4); p = 3 (mod 4)."""
        r = _powmod(v, (self.p + 1) >> 2, self.p)
        if (r * r) % self.p != v % self.p:
            raise ValueError("not a square in GF(p)")
        return r

    # --- squares ------------------------------------------------------------

    def is_square(self, x: Fp2) -> bool:
        """True iff x = y^2 for some y in GF(p^2) (norm-based Euler test)."""
        if x.is_zero():
            return True
        # norm = 0 with x != 0 cannot happen: -1 is a non-square in GF(p)
        norm = (x.re * x.re + x.im * x.im) % self.p
        return self._legendre(norm) == 1

    def sqrt(self, x: Fp2) -> Fp2:
        """Canonical square root: of the two roots +-r, the one whose
        (im, re) pair is lexicographically smaller as integers.

        Raises ValueError for non-squares.
        """
        p = self.p
        if x.is_zero():
            return self.zero
        if x.im == 0:
            if self._legendre(x.re) == 1:
                root = Fp2._raw(self._sqrt_fp(x.re), _mpz(0), p)
            else:
                # (i*w)^2 = -w^2, so lift through the imaginary axis
                root = Fp2._raw(_mpz(0), self._sqrt_fp(-x.re % p), p)
        else:
            norm = (x.re * x.re + x.im * x.im) % p
            if self._legendre(norm) != 1:
                raise ValueError("not a square in GF(p^2)")
            s = self._sqrt_fp(norm)
            half = _invert(_mpz(2), p)
            t = ((x.re + s) * half) % p
            if self._legendre(t) != 1:
                t = ((x.re - s) * half) % p
            re = self._sqrt_fp(t)
            im = (x.im * _invert(2 * re % p, p)) % p
            root = Fp2._raw(re, im, p)
        if root.sqr() != x:
            raise ValueError("not a square in GF(p^2)")
        neg = -root
        return root if (int(root.im), int(root.re)) <= (int(neg.im), int(neg.re)) else neg

    # --- serialization: big-endian hex, zero-padded to the field size -------

    def encode_fp(self, v) -> str:
        return format(int(v) % int(self.p), f"0{2 * self._nbytes}x")

    def decode_fp(self, s: str):
        v = int(s, 16)
        if v >= self.p:
            raise ValueError("encoded value exceeds the field modulus")
        return _mpz(v)

    def encode(self, x: Fp2) -> str:
        return f"{self.encode_fp(x.re)},{self.encode_fp(x.im)}"

    def decode(self, s: str) -> Fp2:
        re_s, im_s = s.strip().split(",")
        return Fp2._raw(self.decode_fp(re_s), self.decode_fp(im_s), self.p)
