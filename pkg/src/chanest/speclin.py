"""Structured covariance operators for uniform rectangular arrays.

Covariances are represented either densely or as C = Q^H diag(c) Q with a
fixed per-geometry operator Q and a nonnegative parameter vector c:

* block-circulant with circulant blocks: Q is the unitary 2-D DFT
  kron(F_{n_v}, F_{n_h}), c has length N, and c equals the eigenvalue
  spectrum of C;
* block-Toeplitz with Toeplitz blocks: Q is kron(Q_{n_v}, Q_{n_h}) where
  Q_J holds the first J columns of the 2J-point DFT matrix scaled by
  1/sqrt(2J), so Q has shape (4N, N) with orthonormal columns and c has
  length 4N.

Multiplications use 2-D FFTs (zero-padded for the Toeplitz factor), and the
projection of a Hermitian matrix onto either family is the Frobenius-nearest
member with c >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from scipy.optimize import nnls

from .geometry import ArrayGeometry

_HERMITIAN_RTOL = 1e-10
_RANK_RTOL = 1e-12


class Structure(str, Enum):
    FULL = "full"
    BLOCK_TOEPLITZ = "toeplitz"
    BLOCK_CIRCULANT = "circulant"


@dataclass(eq=False)
class StructuredFactor:
    """The implicit operator Q of one structured covariance family."""

    kind: Structure
    geometry: ArrayGeometry
    _dense: np.ndarray | None = field(default=None, repr=False)
    _proj_basis: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in (Structure.BLOCK_TOEPLITZ, Structure.BLOCK_CIRCULANT):
            raise ValueError(f"not a structured covariance kind: {self.kind}")

    @property
    def rows(self) -> int:
        if self.kind is Structure.BLOCK_CIRCULANT:
            return self.geometry.n
        return 4 * self.geometry.n

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Q @ x for x of shape (..., N), via 2-D FFTs."""
        n_v, n_h = self.geometry.n_v, self.geometry.n_h
        x = np.asarray(x, dtype=np.complex128)
        batch = x.shape[:-1]
        grid = x.reshape(*batch, n_v, n_h)
        if self.kind is Structure.BLOCK_CIRCULANT:
            out = np.fft.fft2(grid, norm="ortho")
            return out.reshape(*batch, self.geometry.n)
        padded = np.zeros((*batch, 2 * n_v, 2 * n_h), dtype=np.complex128)
        padded[..., :n_v, :n_h] = grid
        out = np.fft.fft2(padded, norm="ortho")
        return out.reshape(*batch, 4 * self.geometry.n)

    def apply_adjoint(self, z: np.ndarray) -> np.ndarray:
        """Q^H @ z for z of shape (..., rows)."""
        n_v, n_h = self.geometry.n_v, self.geometry.n_h
        z = np.asarray(z, dtype=np.complex128)
        batch = z.shape[:-1]
        if self.kind is Structure.BLOCK_CIRCULANT:
            grid = z.reshape(*batch, n_v, n_h)
            out = np.fft.ifft2(grid, norm="ortho")
            return out.reshape(*batch, self.geometry.n)
        grid = z.reshape(*batch, 2 * n_v, 2 * n_h)
        out = np.fft.ifft2(grid, norm="ortho")[..., :n_v, :n_h]
        return np.ascontiguousarray(out).reshape(*batch, self.geometry.n)

    def dense(self) -> np.ndarray:
        """Materialized Q, shape (rows, N). Cached."""
        if self._dense is None:
            eye = np.eye(self.geometry.n, dtype=np.complex128)
            self._dense = self.apply(eye).T.copy()
        return self._dense

    def _projection_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Cached reduced design for the nonnegative Frobenius projection.

        The projection minimizes c^T G c - 2 b^T c with G_ij = |(QQ^H)_ij|^2
        and b = diag(Q S Q^H). G is fixed per factor; its eigendecomposition
        yields an equivalent small least-squares design A with A^T A = G.
        """
        if self._proj_basis is None:
            q = self.dense()
            gram = np.abs(q @ q.conj().T) ** 2
            eigvals, eigvecs = np.linalg.eigh(gram)
            keep = eigvals > _RANK_RTOL * eigvals.max()
            root = np.sqrt(eigvals[keep])
            design = (eigvecs[:, keep] * root).T          # (r, rows), design^T design = G
            lift = eigvecs[:, keep] / root                # maps b to the reduced rhs
            self._proj_basis = (design, lift)
        return self._proj_basis


@dataclass(eq=False)
class FullCovariance:
    """Dense Hermitian covariance."""

    matrix: np.ndarray


@dataclass(eq=False)
class StructuredCovariance:
    """Covariance Q^H diag(c) Q with nonnegative parameters c."""

    factor: StructuredFactor
    c: np.ndarray


CovarianceRep = Union[FullCovariance, StructuredCovariance]


def build_factor(kind: Structure, geometry: ArrayGeometry) -> StructuredFactor:
    """Construct the implicit Kronecker DFT operator for one family."""
    return StructuredFactor(kind=kind, geometry=geometry)


def structured_matvec(rep: CovarianceRep, x: np.ndarray) -> np.ndarray:
    """C @ x, using the FFT fast path for structured representations.

    Accepts batches with shape (..., N).
    """
    x = np.asarray(x, dtype=np.complex128)
    if isinstance(rep, FullCovariance):
        if x.shape[-1] != rep.matrix.shape[0]:
            raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {rep.matrix.shape[0]}")
        return x @ rep.matrix.T
    if x.shape[-1] != rep.factor.geometry.n:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {rep.factor.geometry.n}")
    return rep.factor.apply_adjoint(rep.factor.apply(x) * rep.c)


def materialize(rep: CovarianceRep) -> np.ndarray:
    """Dense Hermitian matrix for any covariance representation."""
    if isinstance(rep, FullCovariance):
        return rep.matrix
    q = rep.factor.dense()
    dense = q.conj().T @ (rep.c[:, None] * q)
    return 0.5 * (dense + dense.conj().T)


def _check_hermitian(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    scale = max(1.0, float(np.abs(s).max()))
    if np.abs(s - s.conj().T).max() > _HERMITIAN_RTOL * scale:
        raise ValueError("input matrix is not Hermitian")
    return s


def project_to_structure(s: np.ndarray, factor: StructuredFactor) -> np.ndarray:
    """Nonnegative c minimizing ||Q^H diag(c) Q - S||_F for Hermitian PSD S.

    For the circulant factor this is the 2-D FFT-domain diagonal of S clipped
    at zero. For the Toeplitz factor the quadratic program is solved exactly
    by NNLS on a reduced design (the naive clip of the unconstrained solution
    does not reproduce in-family matrices, so the exact solve is used).
    """
    s = _check_hermitian(s)
    if s.shape[0] != factor.geometry.n:
        raise ValueError(f"dimension mismatch: {s.shape[0]} vs {factor.geometry.n}")
    q = factor.dense()
    b = np.real(np.einsum("im,mn,in->i", q, s, q.conj(), optimize=True))
    if factor.kind is Structure.BLOCK_CIRCULANT:
        return np.maximum(b, 0.0)
    design, lift = factor._projection_basis()
    c, _ = nnls(design, lift.T @ b)
    return c


def trace_of(rep: CovarianceRep) -> float:
    """Trace of the represented covariance without materializing it."""
    if isinstance(rep, FullCovariance):
        return float(np.real(np.trace(rep.matrix)))
    if rep.factor.kind is Structure.BLOCK_CIRCULANT:
        return float(np.sum(rep.c))
    # Rows of the Kronecker Toeplitz factor all have squared norm 1/4.
    return float(0.25 * np.sum(rep.c))


def add_scaled_identity(rep: CovarianceRep, amount: float) -> CovarianceRep:
    """Representation of C + amount * I within the same family.

    Both structured families contain the identity: c = 1 for the circulant
    factor and c = 1 (all 4N entries) for the Toeplitz factor.
    """
    if amount == 0.0:
        return rep
    if isinstance(rep, FullCovariance):
        out = rep.matrix.copy()
        out[np.diag_indices_from(out)] += amount
        return FullCovariance(out)
    return StructuredCovariance(rep.factor, rep.c + amount)
