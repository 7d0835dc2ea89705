"""Real trigonometric polynomials on T^2 x R/Z.

A polynomial is ``c0 + sum a_j * cos|sin(2 pi (k1 x1 + k2 x2 + k3 t))`` with
integer frequencies.  The text form ``"0.1 + 0.3*cos(1,0,0) - 0.2*sin(0,0,1)"``
round-trips exactly through :meth:`TrigPolynomial.parse`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_TERM = re.compile(
    r"\s*([+-])?\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(?:\*\s*(cos|sin)\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\))?"
)


@dataclass(frozen=True)
class TrigTerm:
    amp: float
    freq: tuple[int, int, int]
    kind: str = "cos"

    def __post_init__(self):
        if self.kind not in ("cos", "sin"):
            raise ValueError(f"unknown trig kind {self.kind!r}")
        object.__setattr__(self, "freq", tuple(int(k) for k in self.freq))
        object.__setattr__(self, "amp", float(self.amp))


@dataclass(frozen=True)
class TrigPolynomial:
    const: float = 0.0
    terms: tuple[TrigTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "const", float(self.const))
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def constant(cls, c: float) -> "TrigPolynomial":
        return cls(c, ())

    @classmethod
    def cos(cls, amp, freq, const=0.0) -> "TrigPolynomial":
        return cls(const, (TrigTerm(amp, freq, "cos"),))

    @classmethod
    def sin(cls, amp, freq, const=0.0) -> "TrigPolynomial":
        return cls(const, (TrigTerm(amp, freq, "sin"),))

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return TrigPolynomial(self.const + other.const, self.terms + other.terms)

    def scaled(self, c: float) -> "TrigPolynomial":
        return TrigPolynomial(
            c * self.const, tuple(TrigTerm(c * t.amp, t.freq, t.kind) for t in self.terms)
        )

    def __call__(self, x, t=None):
        x = np.asarray(x, dtype=float)
        t = np.zeros(x.shape[:-1]) if t is None else np.asarray(t, dtype=float)
        out = np.full(np.broadcast_shapes(x.shape[:-1], t.shape), self.const)
        for term in self.terms:
            k1, k2, k3 = term.freq
            phase = 2 * np.pi * (k1 * x[..., 0] + k2 * x[..., 1] + k3 * t)
            out = out + term.amp * (np.cos(phase) if term.kind == "cos" else np.sin(phase))
        return out

    @property
    def is_constant(self) -> bool:
        return all(t.amp == 0 for t in self.terms)

    @property
    def depends_on_height(self) -> bool:
        return any(t.freq[2] != 0 and t.amp != 0 for t in self.terms)

    def sup_bound(self) -> float:
        return abs(self.const) + sum(abs(t.amp) for t in self.terms)

    def lower_bound(self) -> float:
        return self.const - sum(abs(t.amp) for t in self.terms)

    def lipschitz_bound(self) -> float:
        """Euclidean Lipschitz bound in (x1, x2, t)."""
        return sum(2 * np.pi * abs(t.amp) * float(np.linalg.norm(t.freq)) for t in self.terms)

    def __str__(self) -> str:
        parts = [repr(self.const)]
        for t in self.terms:
            sign = "-" if np.signbit(t.amp) else "+"
            k1, k2, k3 = t.freq
            parts.append(f"{sign} {abs(t.amp)!r}*{t.kind}({k1},{k2},{k3})")
        return " ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "TrigPolynomial":
        const = 0.0
        terms = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TERM.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse trig polynomial near {text[pos:]!r}")
            sign, num, kind, k1, k2, k3 = m.groups()
            val = float(num) * (-1.0 if sign == "-" else 1.0)
            if kind is None:
                const += val
            else:
                terms.append(TrigTerm(val, (int(k1), int(k2), int(k3)), kind))
            pos = m.end()
        return cls(const, tuple(terms))
