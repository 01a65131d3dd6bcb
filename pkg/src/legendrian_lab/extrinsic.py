"""Pointwise extrinsic geometry of surfaces in S^5.

From a 2-jet this module builds the adapted frame, the induced metric,
the second fundamental form in flat (orthonormal-frame) indices, the
mean curvature vector H = (1/2) g^{ij} B_ij, the squared norms
S = |B|^2 and rho^2 = S - 2H^2, and the Gauss curvature via
2K = 2 + 4H^2 - S.

The second fundamental form uses the round-sphere correction
B_ij = (d^2 L_ij + g_ij p) minus its tangential part, which removes the
radial component exactly.  When the surface is Legendrian at working
precision the normal frame is (J E1, J E2, R); otherwise a generic
orthonormal normal frame is grown deterministically from the coordinate
axes.  Everything broadcasts over leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import contact
from .contact import dot, j_apply, norm
from .immersions import Jet2

LEGENDRIAN_FRAME_TOL = 1e-8
GRAM_DET_TOL = 1e-12
_SEED_NORM_TOL = 0.3


@dataclass(frozen=True)
class AdaptedFrame:
    """Orthonormal tangent pair (E1, E2) and normal triple (N1, N2, N3).

    coeff maps orthonormal to coordinate tangents: E_a = coeff[..., a, i] d_i
    with the Gram-Schmidt order fixed (du first).  legendrian is a single
    flag for the whole batch so grid frames stay smooth.
    """

    E1: np.ndarray
    E2: np.ndarray
    N1: np.ndarray
    N2: np.ndarray
    N3: np.ndarray
    coeff: np.ndarray
    legendrian: bool

    def tangents(self):
        return (self.E1, self.E2)

    def normals(self):
        return (self.N1, self.N2, self.N3)

    def orthonormality_residual(self, p):
        vecs = [self.E1, self.E2, self.N1, self.N2, self.N3]
        worst = 0.0
        for i, a in enumerate(vecs):
            worst = max(worst, float(np.max(np.abs(dot(a, p)))))
            for k, b in enumerate(vecs):
                g = dot(a, b) - (1.0 if i == k else 0.0)
                worst = max(worst, float(np.max(np.abs(g))))
        return worst


def legendrian_residual(jet: Jet2):
    """(alpha(du), alpha(dv)) at the point(s)."""
    au = contact.contact_form(jet.value, jet.du, check=False)
    av = contact.contact_form(jet.value, jet.dv, check=False)
    return au, av


def _generic_normals(p, e1, e2):
    """Deterministic orthonormal normal frame from coordinate-axis seeds."""
    batch = p.shape[:-1]
    used = [p, e1, e2]
    normals = []
    taken = np.zeros(batch + (6,), dtype=bool)  # which seed axis each point consumed
    for _ in range(3):
        cand = np.zeros(p.shape)
        have = np.zeros(batch, dtype=bool)
        for axis in range(6):
            seed = np.zeros(6)
            seed[axis] = 1.0
            w = np.broadcast_to(seed, p.shape).copy()
            for b in used + normals:
                w = w - dot(w, b)[..., None] * b
            ok = (~have) & (~taken[..., axis]) & (norm(w) >= _SEED_NORM_TOL)
            cand = np.where(ok[..., None], w, cand)
            taken[..., axis] |= ok
            have |= ok
        if not np.all(have):
            raise ValueError("could not complete a generic normal frame from axis seeds")
        normals.append(contact.normalize(cand))
    return normals


def adapted_frame(jet: Jet2, legendrian_tol=LEGENDRIAN_FRAME_TOL) -> AdaptedFrame:
    """Gram-Schmidt tangent frame plus the matching normal frame.

    The Legendrian normal frame (J E1, J E2, R) is used when the whole
    batch has max |alpha(d_i)| <= legendrian_tol; batches are not mixed.
    """
    p = jet.value
    # discrete jets carry an O(scheme) radial part; remove it so the full
    # five-frame is orthogonal to the position at working precision
    xu = jet.du - dot(jet.du, p)[..., None] * p
    xv = jet.dv - dot(jet.dv, p)[..., None] * p
    g11 = dot(xu, xu)
    g12 = dot(xu, xv)
    g22 = dot(xv, xv)
    gram = g11 * g22 - g12**2
    if np.min(gram) < GRAM_DET_TOL:
        raise ValueError(f"degenerate induced metric: Gram determinant {np.min(gram):.3e}")

    n1 = np.sqrt(g11)
    e1 = xu / n1[..., None]
    w = xv - dot(xv, e1)[..., None] * e1
    n2 = norm(w)
    e2 = w / n2[..., None]
    # E1 = c11 du; E2 = c21 du + c22 dv
    c11 = 1.0 / n1
    c22 = 1.0 / n2
    c21 = -(g12 / g11) * c22
    coeff = np.zeros(p.shape[:-1] + (2, 2))
    coeff[..., 0, 0] = c11
    coeff[..., 1, 0] = c21
    coeff[..., 1, 1] = c22

    au, av = legendrian_residual(jet)
    res = max(float(np.max(np.abs(au))), float(np.max(np.abs(av))))
    if res <= legendrian_tol:
        return AdaptedFrame(
            E1=e1, E2=e2,
            N1=j_apply(e1), N2=j_apply(e2), N3=j_apply(p),
            coeff=coeff, legendrian=True,
        )
    normals = _generic_normals(p, e1, e2)
    return AdaptedFrame(
        E1=e1, E2=e2, N1=normals[0], N2=normals[1], N3=normals[2],
        coeff=coeff, legendrian=False,
    )


@dataclass(frozen=True)
class ExtrinsicData:
    """Induced metric and curvature data at parameter points (batched)."""

    g: np.ndarray            # (..., 2, 2)
    ginv: np.ndarray         # (..., 2, 2)
    sqrt_det_g: np.ndarray   # (...,)
    h: np.ndarray            # (..., 3, 2, 2) flat-index components
    Hcomp: np.ndarray        # (..., 3)
    Hvec: np.ndarray         # (..., 6)
    H2: np.ndarray           # (...,)
    S: np.ndarray            # (...,)
    rho2: np.ndarray         # (...,)
    K: np.ndarray            # (...,)
    legendrian_residual: np.ndarray  # (...,) max |alpha(d_i)|
    B: np.ndarray            # (..., 2, 2, 6) normal-valued form, coordinate indices


def extrinsic_data(jet: Jet2, frame: AdaptedFrame) -> ExtrinsicData:
    """Second fundamental form and scalar invariants in the given frame."""
    p = jet.value
    g = np.zeros(p.shape[:-1] + (2, 2))
    g[..., 0, 0] = dot(jet.du, jet.du)
    g[..., 0, 1] = g[..., 1, 0] = dot(jet.du, jet.dv)
    g[..., 1, 1] = dot(jet.dv, jet.dv)
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
    if np.min(det) < GRAM_DET_TOL:
        raise ValueError(f"degenerate induced metric: det g = {np.min(det):.3e}")
    ginv = np.empty_like(g)
    ginv[..., 0, 0] = g[..., 1, 1] / det
    ginv[..., 1, 1] = g[..., 0, 0] / det
    ginv[..., 0, 1] = ginv[..., 1, 0] = -g[..., 0, 1] / det

    second = [[jet.duu, jet.duv], [jet.duv, jet.dvv]]
    B = np.zeros(p.shape[:-1] + (2, 2, 6))
    for i in range(2):
        for j in range(2):
            b = second[i][j] + g[..., i, j, None] * p
            for e in frame.tangents():
                b = b - dot(b, e)[..., None] * e
            b = b - dot(b, p)[..., None] * p  # guard residual radial part of FD jets
            B[..., i, j, :] = b

    # flat indices: Bhat_ab = coeff_a^i coeff_b^j B_ij
    Bhat = np.einsum("...ai,...bj,...ijk->...abk", frame.coeff, frame.coeff, B)
    h = np.stack([dot(Bhat, n[..., None, None, :]) for n in frame.normals()], axis=-3)

    Hcomp = 0.5 * (h[..., 0, 0] + h[..., 1, 1])
    Hvec = sum(Hcomp[..., b, None] * n for b, n in enumerate(frame.normals()))
    H2 = np.einsum("...b,...b->...", Hcomp, Hcomp)
    S = np.einsum("...bij,...bij->...", h, h)
    rho2 = S - 2.0 * H2
    K = 0.5 * (2.0 + 4.0 * H2 - S)

    au, av = legendrian_residual(jet)
    res = np.maximum(np.abs(au), np.abs(av))
    return ExtrinsicData(
        g=g, ginv=ginv, sqrt_det_g=np.sqrt(det), h=h, Hcomp=Hcomp, Hvec=Hvec,
        H2=H2, S=S, rho2=rho2, K=K, legendrian_residual=res, B=B,
    )


@dataclass(frozen=True)
class IdentityResiduals:
    """Pointwise structure-equation residuals (maxima over the batch)."""

    h3_max: float
    sym3_max: float | None    # None for non-Legendrian frames
    symij_max: float
    gauss_identity_max: float
    det_sum: np.ndarray       # det h^1 + det h^2, per point


def pointwise_identity_residuals(jet: Jet2, frame: AdaptedFrame,
                                 data: ExtrinsicData) -> IdentityResiduals:
    """Reeb-component, index-symmetry and Gauss-identity residuals.

    The full 3-index symmetry h^c_ab = h^a_cb = h^b_ac is a Legendrian
    property and is only evaluated when the frame is Legendrian; the plain
    (a, b) symmetry holds for any frame.  det h^1 + det h^2 is the normal
    curvature pairing consumed by the integrated Simons identity.
    """
    h = data.h
    h3_max = float(np.max(np.abs(h[..., 2, :, :])))
    symij = float(np.max(np.abs(h - np.swapaxes(h, -1, -2))))
    sym3 = None
    if frame.legendrian:
        t = np.stack(
            [h[..., 0, :, :], h[..., 1, :, :]], axis=-3
        )  # t[c, a, b] = h^c_ab for c in {1, 2}
        worst = 0.0
        for perm in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
            axes = tuple(-3 + perm.index(k) for k in range(3))
            tp = np.moveaxis(t, (-3, -2, -1), axes)
            worst = max(worst, float(np.max(np.abs(tp - t))))
        sym3 = worst
    gauss = float(np.max(np.abs(2.0 * data.K - 2.0 - 4.0 * data.H2 + data.S)))
    det1 = h[..., 0, 0, 0] * h[..., 0, 1, 1] - h[..., 0, 0, 1] ** 2
    det2 = h[..., 1, 0, 0] * h[..., 1, 1, 1] - h[..., 1, 0, 1] ** 2
    return IdentityResiduals(
        h3_max=h3_max, sym3_max=sym3, symij_max=symij,
        gauss_identity_max=gauss, det_sum=det1 + det2,
    )
