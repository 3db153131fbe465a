"""Polynomial map germs psi = (P, Q): (R^m, 0) -> (R^2, 0) and derived fields.

The Seade family uses the convention ``Psi(x, theta) = cos(theta) P(x) - sin(theta) Q(x)``
throughout; :data:`SEADE_CONVENTION` is recorded in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .polynomial import Polynomial, PolynomialError, parse_polynomial

__all__ = [
    "SEADE_CONVENTION",
    "GermError",
    "PhaseUndefined",
    "MapGerm",
    "SeadeFamily",
    "seade_eval",
    "seade_gradient",
    "gamma_eval",
    "theta_of",
    "phase_of",
    "jacobian_minors",
    "pencil_determinant",
    "gram_residual",
    "REGISTRY",
    "get_germ",
    "load_germ",
    "germ_to_yaml",
]

SEADE_CONVENTION = "Psi(x,theta) = cos(theta)*P(x) - sin(theta)*Q(x)"
TWO_PI = 2.0 * math.pi


class GermError(ValueError):
    """Invalid germ data."""


class PhaseUndefined(ValueError):
    """Raised where psi(x) = 0 and the phase (or admissible angle) is undefined."""


@dataclass(frozen=True, eq=False)
class MapGerm:
    m: int
    P: Polynomial
    Q: Polynomial
    name: str = "germ"

    def __post_init__(self):
        if self.m < 2:
            raise GermError("ambient dimension m must be at least 2")
        for label, f in (("P", self.P), ("Q", self.Q)):
            if f.nvars != self.m:
                raise GermError(f"{label} has {f.nvars} variables, expected m = {self.m}")
            if f.constant_term() != 0:
                raise GermError(f"{label}(0) = {f.constant_term()} but a germ must vanish at 0")

    @classmethod
    def from_strings(cls, m: int, P: str, Q: str, name: str = "germ") -> "MapGerm":
        return cls(m, parse_polynomial(P, m), parse_polynomial(Q, m), name)

    def __eq__(self, other) -> bool:
        return isinstance(other, MapGerm) and (self.m, self.P, self.Q) == (other.m, other.P, other.Q)

    def __hash__(self) -> int:
        return hash((self.m, self.P, self.Q))

    @cached_property
    def grad_P(self) -> list[Polynomial]:
        return self.P.gradient()

    @cached_property
    def grad_Q(self) -> list[Polynomial]:
        return self.Q.gradient()

    @cached_property
    def gamma(self) -> list[Polynomial]:
        """Components of P*grad(Q) - Q*grad(P)."""
        return [self.P * dq - self.Q * dp for dp, dq in zip(self.grad_P, self.grad_Q)]

    @cached_property
    def norm2(self) -> Polynomial:
        """||psi||^2 = P^2 + Q^2."""
        return self.P * self.P + self.Q * self.Q

    @cached_property
    def coords(self) -> list[Polynomial]:
        return Polynomial.variables(self.m)

    @cached_property
    def radius2(self) -> Polynomial:
        return sum((v * v for v in self.coords), Polynomial.zero(self.m))

    # float views -------------------------------------------------------------

    def psi(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([self.P.eval_many(x), self.Q.eval_many(x)])

    def jacobian(self, x) -> np.ndarray:
        """2 x m Jacobian at a single point."""
        x = np.asarray(x, dtype=float)
        return np.array([[d.eval_many(x) for d in self.grad_P], [d.eval_many(x) for d in self.grad_Q]])

    def to_dict(self) -> dict:
        return {"name": self.name, "m": self.m, "P": str(self.P), "Q": str(self.Q)}


@dataclass(frozen=True)
class SeadeFamily:
    germ: MapGerm
    convention: str = field(default=SEADE_CONVENTION)

    def polynomial(self, theta: float) -> Polynomial:
        """Psi_theta as an exact polynomial (cos/sin taken as exact binary rationals)."""
        c, s = _cos_sin_exact(theta)
        return self.germ.P.scale(c) - self.germ.Q.scale(s)

    def __call__(self, x, theta: float) -> float:
        return seade_eval(self, x, theta)


def _cos_sin_exact(theta: float) -> tuple[Fraction, Fraction]:
    # Snap quarter turns so Psi(., k*pi/2) reproduces +-P, +-Q exactly.
    q = theta / (math.pi / 2)
    k = round(q)
    if abs(q - k) < 1e-15 * max(1.0, abs(q)):
        return [(Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)),
                (Fraction(-1), Fraction(0)), (Fraction(0), Fraction(-1))][k % 4]
    return Fraction(math.cos(theta)), Fraction(math.sin(theta))


def cos_sin(theta: float) -> tuple[float, float]:
    c, s = _cos_sin_exact(theta)
    return float(c), float(s)


def seade_eval(f: SeadeFamily, x, theta: float) -> float:
    c, s = cos_sin(theta)
    return c * f.germ.P(list(x)) - s * f.germ.Q(list(x))


def seade_gradient(f: SeadeFamily, x, theta: float) -> np.ndarray:
    c, s = cos_sin(theta)
    g = f.germ
    x = list(x)
    return np.array([c * dp(x) - s * dq(x) for dp, dq in zip(g.grad_P, g.grad_Q)])


def gamma_eval(g: MapGerm, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    p, q = g.P.eval_many(x), g.Q.eval_many(x)
    gp = np.array([d.eval_many(x) for d in g.grad_P])
    gq = np.array([d.eval_many(x) for d in g.grad_Q])
    return p * gq - q * gp


def theta_of(g: MapGerm, x) -> float:
    """Admissible angle in [0, pi) with cos(theta) P(x) = sin(theta) Q(x)."""
    p, q = g.P(list(x)), g.Q(list(x))
    if p == 0.0 and q == 0.0:
        raise PhaseUndefined("psi(x) = 0: every theta is admissible")
    th = math.atan2(p, q)
    if th < 0.0:
        th += math.pi
    if th >= math.pi:
        th -= math.pi
    return th


def phase_of(g: MapGerm, x) -> float:
    """Angle of psi(x) in [0, 2 pi)."""
    p, q = g.P(list(x)), g.Q(list(x))
    if p == 0.0 and q == 0.0:
        raise PhaseUndefined("psi(x) = 0: phase undefined on the variety")
    a = math.atan2(q, p)
    if a < 0.0:
        a += TWO_PI
    return 0.0 if a >= TWO_PI else a


def jacobian_minors(g: MapGerm) -> list[Polynomial]:
    """All 2x2 minors of the Jacobian of (P, Q), columns (i, j) with i < j."""
    return [
        g.grad_P[i] * g.grad_Q[j] - g.grad_P[j] * g.grad_Q[i]
        for i, j in combinations(range(g.m), 2)
    ]


def pencil_determinant(g: MapGerm) -> Polynomial:
    """Determinant of the linear system in (cos t, sin t) for m = 2.

    Rows are <grad Psi_t, (-y, x)> = 0 and Psi_t = 0, i.e.
    ``[[<grad P, x_perp>, -<grad Q, x_perp>], [P, -Q]]``.
    """
    if g.m != 2:
        raise GermError("pencil determinant is defined for m = 2 only")
    x, y = g.coords
    gp_perp = -y * g.grad_P[0] + x * g.grad_P[1]
    gq_perp = -y * g.grad_Q[0] + x * g.grad_Q[1]
    return gp_perp * (-g.Q) - (-gq_perp) * g.P


def gram_residual(a: Sequence[float], b: Sequence[float]) -> float:
    """||a||^2 ||b||^2 - <a, b>^2 via the Lagrange identity (sum of squared 2x2 minors)."""
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    return math.fsum((a[i] * b[j] - a[j] * b[i]) ** 2 for i, j in combinations(range(len(a)), 2))


# -- registry -----------------------------------------------------------------

_REGISTRY_SPECS = {
    "milnor-1.1": (2, "x", "x^2 + y*(x^2 + y^2)"),
    "ruas-1.5": (2, "x*y", "x^2 - y^4"),
    "ex-5.2": (2, "x", "y*x^2 + y^3"),
    "ex-5.3": (3, "z*(x^2 + y^2 + z^2)", "y - x^3"),
    "identity": (2, "x", "y"),
}

REGISTRY: dict[str, MapGerm] = {
    key: MapGerm.from_strings(m, P, Q, name=key) for key, (m, P, Q) in _REGISTRY_SPECS.items()
}


def load_germ(path: str | Path) -> MapGerm:
    """Read a germ-spec file (YAML/JSON mapping with m, P, Q and optional name)."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise GermError(f"{path}: not a valid germ-spec document: {exc}") from exc
    if not isinstance(data, dict) or not {"m", "P", "Q"} <= set(data):
        raise GermError(f"{path}: germ-spec needs fields m, P, Q")
    try:
        m = int(data["m"])
        return MapGerm.from_strings(m, str(data["P"]), str(data["Q"]), str(data.get("name", path.stem)))
    except PolynomialError as exc:
        raise GermError(f"{path}: {exc}") from exc


def get_germ(source: str) -> MapGerm:
    """Registry key or path to a germ-spec file."""
    if source in REGISTRY:
        return REGISTRY[source]
    path = Path(source)
    if path.exists():
        return load_germ(path)
    raise GermError(f"unknown germ {source!r}: not a registry key ({', '.join(REGISTRY)}) or file")


def germ_to_yaml(g: MapGerm) -> str:
    return yaml.safe_dump(g.to_dict(), sort_keys=False)
