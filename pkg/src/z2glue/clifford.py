"""Pointwise fiber algebra on the model spinor bundle.

The fiber C^2 (x)_C H is stored as two C^2 slots, ``v = u (x) 1 + w (x) j``,
so a fiber is an array of shape ``(2, 2, ...)`` indexed ``[spin, slot]``.
Trailing axes are batch axes (grid nodes). Conventions are recorded in
``docs/conventions.md``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

# gamma(dt), gamma(dx), gamma(dy): traceless anti-Hermitian, squaring to -1.
GAMMA = np.array([
    [[1j, 0], [0, -1j]],
    [[0, -1], [1, 0]],
    [[0, 1j], [1j, 0]],
], dtype=complex)


@dataclass(frozen=True)
class FormFiber:
    """Extended form (a0, a1): a 0-form and a 1-form in the frame (dt, dx, dy).

    In the gauge-theory setting both are purely imaginary; the container
    itself accepts any complex values so that it can hold intermediate
    results.
    """

    a0: np.ndarray
    a1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a0", np.asarray(self.a0, dtype=complex))
        object.__setattr__(self, "a1", np.asarray(self.a1, dtype=complex))
        if self.a1.shape[:1] != (3,) or self.a1.shape[1:] != self.a0.shape:
            raise ValueError("a1 must have shape (3,) + a0.shape")

    @classmethod
    def zeros(cls, shape=()) -> "FormFiber":
        return cls(np.zeros(shape, complex), np.zeros((3, *shape), complex))

    def is_imaginary(self, tol: float = 0.0) -> bool:
        scale = max(self.norm(), 1.0)
        return bool(np.all(np.abs(self.a0.real) <= tol * scale)
                    and np.all(np.abs(self.a1.real) <= tol * scale))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.a0) ** 2) + np.sum(np.abs(self.a1) ** 2)))

    def __add__(self, other: "FormFiber") -> "FormFiber":
        return FormFiber(self.a0 + other.a0, self.a1 + other.a1)

    def scale(self, c) -> "FormFiber":
        return FormFiber(c * self.a0, c * self.a1)


Subbundle = Literal["full", "re", "im"]


@dataclass(frozen=True)
class SpinorField:
    """Samples of a section on a grid, shape ``(2, 2, n_t, n_theta, n_r)``.

    ``flag`` records membership of S^Re or S^Im; it is checked on
    construction against the real structure.
    """

    values: np.ndarray
    theta: np.ndarray
    flag: Subbundle = "full"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape[:2] != (2, 2):
            raise ValueError(f"spinor values need leading shape (2, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("spinor values must be finite")
        object.__setattr__(self, "values", v)
        if self.flag != "full":
            sign = 1 if self.flag == "re" else -1
            dev = np.linalg.norm(real_structure(v, self.theta) - sign * v)
            if dev > 1e-10 * max(np.linalg.norm(v), 1.0):
                raise ValueError(f"field is not in S^{self.flag.capitalize()} (deviation {dev:.2e})")

    @classmethod
    def on_grid(cls, values, grid, flag: Subbundle = "full") -> "SpinorField":
        return cls(values, grid.mesh[1], flag)

    def split(self) -> tuple["SpinorField", "SpinorField"]:
        re, im = split_re_im(self.values, self.theta)
        return SpinorField(re, self.theta, "re"), SpinorField(im, self.theta, "im")


def values_of(field) -> np.ndarray:
    return field.values if isinstance(field, SpinorField) else np.asarray(field)


def gamma(a) -> np.ndarray:
    """Clifford matrix of a 1-form with components ``a`` of shape (3, ...)."""
    a = np.asarray(a)
    return np.einsum("j...,jab->ab...", a, GAMMA)


def clifford_mul(form, fiber: np.ndarray) -> np.ndarray:
    """Clifford action of a 1-form (array of shape (3, ...)) or a FormFiber.

    The 0-form part of a FormFiber acts by scalar multiplication; the
    matrices act on the spin index only, leaving the H slot untouched.
    """
    fiber = np.asarray(fiber)
    if isinstance(form, FormFiber):
        return form.a0 * fiber + clifford_mul(form.a1, fiber)
    a = np.asarray(form)
    return np.einsum("j...,jab,bs...->as...", a, GAMMA, fiber)


def quaternionic_j(u: np.ndarray) -> np.ndarray:
    """J(alpha, beta) = (-conj(beta), conj(alpha)) on the spin index."""
    return np.stack([-np.conj(u[1]), np.conj(u[0])])


def real_structure(fiber: np.ndarray, theta=0.0) -> np.ndarray:
    """sigma(u, w) = (-e^{-i theta} J w, e^{-i theta} J u).

    Antilinear involution whose fixed set is {w = e^{-i theta} J u}, the
    tube trivialization of S^Re.
    """
    v = np.asarray(fiber)
    ph = np.exp(-1j * np.asarray(theta))
    u, w = v[:, 0], v[:, 1]
    return np.stack([-ph * quaternionic_j(w), ph * quaternionic_j(u)], axis=1)


def split_re_im(fiber: np.ndarray, theta=0.0) -> tuple[np.ndarray, np.ndarray]:
    s = real_structure(fiber, theta)
    return (fiber + s) / 2, (fiber - s) / 2


def real_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Real fiber inner product Re<a, b>, summed over spin and slot."""
    return np.real(np.sum(np.conj(a) * b, axis=(0, 1)))


def moment_map(psi: np.ndarray, phi: np.ndarray) -> FormFiber:
    """mu(psi, phi) = (i<i psi, phi>, sum_j (i/2)<i gamma_j psi, phi> e^j)."""
    psi = np.asarray(psi)
    phi = np.asarray(phi)
    a0 = 1j * real_inner(1j * psi, phi)
    a1 = np.stack([0.5j * real_inner(1j * np.einsum("ab,bs...->as...", GAMMA[j], psi), phi)
                   for j in range(3)])
    return FormFiber(a0, a1)
