"""Structure models and signal descriptors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..exceptions import DegenerateAnchorError, DomainError

KINDS = ("sparse", "block_sparse", "low_rank", "non_negative")

# relative threshold used to count nonzeros / active blocks / singular values
ZERO_TOL = 1e-9


@dataclass(frozen=True)
class StructureModel:
    """Which regularizer is in play, plus its shape parameters.

    ``sparse`` uses the l1 norm, ``block_sparse`` the l1,2 norm over ``q``
    contiguous blocks of size ``b``, ``low_rank`` the nuclear norm of a
    ``d x d`` matrix stored row-major in a length ``d*d`` vector and
    ``non_negative`` the indicator of the non-negative orthant.
    """

    kind: str
    n: int
    q: Optional[int] = None
    b: Optional[int] = None
    d: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if int(self.n) < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.kind == "block_sparse":
            if self.q is None or self.b is None or self.q < 1 or self.b < 1:
                raise DomainError("block_sparse needs q >= 1 and b >= 1")
            if self.q * self.b != self.n:
                raise DomainError(f"q*b = {self.q * self.b} does not match n = {self.n}")
        if self.kind == "low_rank":
            if self.d is None or self.d < 1:
                raise DomainError("low_rank needs d >= 1")
            if self.d * self.d != self.n:
                raise DomainError(f"d^2 = {self.d * self.d} does not match n = {self.n}")

    @classmethod
    def sparse(cls, n: int) -> "StructureModel":
        return cls("sparse", int(n))

    @classmethod
    def block_sparse(cls, q: int, b: int) -> "StructureModel":
        return cls("block_sparse", int(q) * int(b), q=int(q), b=int(b))

    @classmethod
    def low_rank(cls, d: int) -> "StructureModel":
        return cls("low_rank", int(d) * int(d), d=int(d))

    @classmethod
    def non_negative(cls, n: int) -> "StructureModel":
        return cls("non_negative", int(n))

    @property
    def is_norm(self) -> bool:
        return self.kind != "non_negative"

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n}
        if self.kind == "block_sparse":
            out.update(q=self.q, b=self.b)
        if self.kind == "low_rank":
            out["d"] = self.d
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StructureModel":
        kind = data["kind"]
        if kind == "block_sparse":
            return cls.block_sparse(data["q"], data["b"])
        if kind == "low_rank":
            return cls.low_rank(data["d"])
        return cls(kind, int(data["n"]))

    def check_vector(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.n:
            raise DomainError(f"expected trailing dimension {self.n}, got {v.shape[-1]}")
        return v


@dataclass(frozen=True)
class SignalDescriptor:
    """An anchor point ``x0`` together with the structure read off from it.

    ``complexity`` is the sparsity, the number of active blocks, or the rank,
    counted with threshold ``ZERO_TOL`` times the largest magnitude among
    entries, block norms, or singular values respectively.
    """

    model: StructureModel
    x0: np.ndarray
    complexity: int = field(init=False)
    # structure-specific pieces used by the cone projections
    support: np.ndarray = field(init=False, repr=False)
    pattern: np.ndarray = field(init=False, repr=False)
    left: Optional[np.ndarray] = field(init=False, repr=False, default=None)
    right: Optional[np.ndarray] = field(init=False, repr=False, default=None)
    left_perp: Optional[np.ndarray] = field(init=False, repr=False, default=None)
    right_perp: Optional[np.ndarray] = field(init=False, repr=False, default=None)

    def __post_init__(self):
        x0 = np.array(self.model.check_vector(self.x0), dtype=float)
        if x0.ndim != 1:
            raise DomainError("x0 must be a vector")
        x0.setflags(write=False)
        object.__setattr__(self, "x0", x0)
        kind = self.model.kind
        if kind in ("sparse", "non_negative"):
            scale = np.max(np.abs(x0)) if x0.size else 0.0
            support = np.abs(x0) > ZERO_TOL * scale if scale > 0 else np.zeros(x0.size, bool)
            if kind == "non_negative" and np.any(x0 < -ZERO_TOL * max(scale, 1.0)):
                raise DomainError("non_negative model needs x0 >= 0")
            pattern = np.where(support, np.sign(x0), 0.0)
            complexity = int(support.sum())
        elif kind == "block_sparse":
            blocks = x0.reshape(self.model.q, self.model.b)
            norms = np.linalg.norm(blocks, axis=1)
            scale = norms.max()
            support = norms > ZERO_TOL * scale if scale > 0 else np.zeros(self.model.q, bool)
            safe = np.where(support, norms, 1.0)
            pattern = np.where(support[:, None], blocks / safe[:, None], 0.0).ravel()
            complexity = int(support.sum())
        else:
            d = self.model.d
            u, s, vt = np.linalg.svd(x0.reshape(d, d))
            scale = s[0] if s.size else 0.0
            support = s > ZERO_TOL * scale if scale > 0 else np.zeros(d, bool)
            r = int(support.sum())
            object.__setattr__(self, "left", u[:, :r])
            object.__setattr__(self, "right", vt[:r].T)
            object.__setattr__(self, "left_perp", u[:, r:])
            object.__setattr__(self, "right_perp", vt[r:].T)
            pattern = (u[:, :r] @ vt[:r]).ravel()
            complexity = r
        support.setflags(write=False)
        pattern.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "pattern", pattern)
        object.__setattr__(self, "complexity", complexity)

    @property
    def is_zero(self) -> bool:
        return self.complexity == 0

    def require_nondegenerate(self):
        if self.model.is_norm and self.is_zero:
            raise DegenerateAnchorError(
                "x0 = 0 minimizes the norm; its tangent cone is all of R^n"
            )

    @property
    def f_value(self) -> float:
        from .norms import regularizer

        return regularizer(self.model, self.x0)


def describe(model: StructureModel, x0) -> SignalDescriptor:
    return SignalDescriptor(model, np.asarray(x0, dtype=float))


def max_complexity(model: StructureModel) -> int:
    if model.kind == "block_sparse":
        return model.q
    if model.kind == "low_rank":
        return model.d
    return model.n
