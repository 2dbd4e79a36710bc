"""Quadratic forms and grid transfer on full (n, n) arrays with a zero
Dirichlet boundary.

The H1 form is the exact P1 finite-element form on the uniform
right-triangle mesh (all squares split along the (i,j)-(i+1,j+1)
diagonal): stiffness is the 5-point stencil, the consistent mass couples
the 6 mesh neighbors (E, W, N, S, NE, SW); a lumped-mass variant is
available for cheaper training losses."""

import numpy as np
import torch


def _pad_interior(v: torch.Tensor) -> torch.Tensor:
    """Zero out the boundary ring so only interior dofs enter the forms."""
    mask = torch.zeros_like(v)
    mask[..., 1:-1, 1:-1] = 1.0
    return v * mask


def stiffness_apply(v: torch.Tensor) -> torch.Tensor:
    """(S v) for the unit-coefficient 5-point operator, interior rows."""
    v = _pad_interior(v)
    out = 4.0 * v
    out[..., 1:, :] -= v[..., :-1, :]
    out[..., :-1, :] -= v[..., 1:, :]
    out[..., :, 1:] -= v[..., :, :-1]
    out[..., :, :-1] -= v[..., :, 1:]
    return _pad_interior(out)


def mass_apply(v: torch.Tensor, spacing: float, lumped: bool = False) -> torch.Tensor:
    """(M v) with the consistent (or lumped) P1 mass matrix."""
    h2 = spacing * spacing
    v = _pad_interior(v)
    if lumped:
        return h2 * v
    out = 0.5 * v
    twelfth = 1.0 / 12.0
    out[..., 1:, :] += twelfth * v[..., :-1, :]   # N neighbor
    out[..., :-1, :] += twelfth * v[..., 1:, :]   # S
    out[..., :, 1:] += twelfth * v[..., :, :-1]   # W
    out[..., :, :-1] += twelfth * v[..., :, 1:]   # E
    out[..., 1:, 1:] += twelfth * v[..., :-1, :-1]   # NW->SE diagonal (i-1,j-1)
    out[..., :-1, :-1] += twelfth * v[..., 1:, 1:]   # (i+1,j+1)
    return h2 * _pad_interior(out)


def h1_sq(v: torch.Tensor, spacing: float, lumped_mass: bool = False) -> torch.Tensor:
    """Squared H1 norm per sample: v^T (M + S) v over the full grid."""
    mv = mass_apply(v, spacing, lumped=lumped_mass) + stiffness_apply(v)
    return (v * mv).sum(dim=(-2, -1))


def l2_sq(v: torch.Tensor, spacing: float, lumped_mass: bool = False) -> torch.Tensor:
    mv = mass_apply(v, spacing, lumped=lumped_mass)
    return (v * mv).sum(dim=(-2, -1))


def relative_h1_error(pred: torch.Tensor, target: torch.Tensor,
                      spacing: float, lumped_mass: bool = False) -> torch.Tensor:
    """Aggregated relative H1 error sqrt(sum||d||^2 / sum||t||^2)."""
    num = h1_sq(pred - target, spacing, lumped_mass).sum()
    den = h1_sq(target, spacing, lumped_mass).sum()
    return torch.sqrt(torch.clamp(num, min=0.0) / den)


def prolong_full(coarse: np.ndarray) -> np.ndarray:
    """Canonical P1 embedding of (..., n, n) coarse arrays onto the
    (..., 2n-1, 2n-1) fine grid: coincident nodes copy; edge midpoints
    average their two endpoints; square centers average the endpoints of
    the triangulation diagonal."""
    nc = coarse.shape[-1]
    nf = 2 * nc - 1
    out = np.zeros(coarse.shape[:-2] + (nf, nf), dtype=coarse.dtype)
    out[..., ::2, ::2] = coarse
    out[..., ::2, 1::2] = 0.5 * (coarse[..., :, :-1] + coarse[..., :, 1:])
    out[..., 1::2, ::2] = 0.5 * (coarse[..., :-1, :] + coarse[..., 1:, :])
    out[..., 1::2, 1::2] = 0.5 * (coarse[..., :-1, :-1] + coarse[..., 1:, 1:])
    return out


def assemble_solution(per_level: list, normalization: np.ndarray) -> np.ndarray:
    """Weighted telescoping sum: prolongate each level-l batch of
    normalized corrections to the finest grid and accumulate b_l times it."""
    if len(per_level) != len(normalization):
        raise ValueError("level count does not match normalization length")
    acc = None
    for arr, b in zip(per_level, normalization):
        term = np.asarray(arr, dtype=np.float64) * float(b)
        acc = term if acc is None else prolong_full(acc) + term
    return acc
