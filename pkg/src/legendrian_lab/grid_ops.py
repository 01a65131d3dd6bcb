"""Global differential operators on doubly periodic grid surfaces.

Built on per-node extrinsic data, this module provides the
Laplace-Beltrami operator, the normal-bundle connection Laplacian, the
rough and Hodge Laplacians on one-forms, metric divergence, and the
residuals/integrals that certify the structure identities of Legendrian
surface geometry in S^5.

Sign conventions, fixed once: the scalar and rough Laplacians have
negative spectrum (Delta cos = -lambda cos); the Hodge Laplacian
delta d + d delta has positive spectrum; on a surface the two are
related on one-forms by Delta_h theta = -Delta theta + K theta.
The mean curvature vector is H = (1/2) g^{ij} B_ij.

Grid field shapes: scalars (N, N), one-forms (N, N, 2) in the (du, dv)
coframe, ambient/normal vector fields (N, N, 6).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import contact, extrinsic, grids
from .contact import dot, j_apply
from .immersions import GridSurface
from .report import Report

LEGENDRIAN_OP_TOL = 1e-4
NORMAL_FIELD_TOL = 1e-8
KER_ALPHA_TOL = 1e-8
JH_TANGENCY_ABORT = 1e-3


@dataclass(frozen=True)
class DerivedGeometry:
    """Per-node frames, curvature data and metric derivatives of a grid."""

    surface: GridSurface
    jet: "extrinsic.Jet2"
    frame: extrinsic.AdaptedFrame
    data: extrinsic.ExtrinsicData
    gamma: np.ndarray  # Christoffel symbols (N, N, 2, 2, 2), gamma[k, i, j]

    @property
    def n(self):
        return self.surface.n

    @property
    def scheme(self):
        return self.surface.scheme

    def d(self, field, axis):
        return grids.deriv(field, axis, self.scheme)

    def d_frame(self, field, k):
        """Directional derivative along the orthonormal tangent E_k."""
        field = np.asarray(field, dtype=float)
        c0 = self.frame.coeff[..., k, 0]
        c1 = self.frame.coeff[..., k, 1]
        extra = (1,) * (field.ndim - c0.ndim)
        c0 = c0.reshape(c0.shape + extra)
        c1 = c1.reshape(c1.shape + extra)
        return c0 * self.d(field, 0) + c1 * self.d(field, 1)

    def tangential_components(self, w):
        """Contravariant components w^a of the tangential part of w."""
        cov = np.stack([dot(w, self.jet.du), dot(w, self.jet.dv)], axis=-1)
        return np.einsum("...ab,...b->...a", self.data.ginv, cov)

    def project_normal(self, w):
        """Projection onto the normal bundle within T S^5."""
        p = self.jet.value
        out = w - dot(w, p)[..., None] * p
        for e in self.frame.tangents():
            out = out - dot(out, e)[..., None] * e
        return out

    def check_legendrian(self, tol=LEGENDRIAN_OP_TOL, what="operation"):
        res = float(np.max(self.data.legendrian_residual))
        if res > tol:
            raise ValueError(
                f"{what} requires a Legendrian grid surface: residual {res:.3e} > {tol:.1e}"
            )
        return res


def derived_geometry(surface: GridSurface) -> DerivedGeometry:
    """Differentiate the grid once and assemble all pointwise data."""
    jet = surface.jets()
    frame = extrinsic.adapted_frame(jet)
    data = extrinsic.extrinsic_data(jet, frame)

    s = surface.scheme
    # dg[m, i, j] = D_m g_ij
    dg = np.stack([grids.deriv(data.g, 0, s), grids.deriv(data.g, 1, s)], axis=-3)
    # gamma[k, i, j] = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
    t = dg + dg.transpose(0, 1, 3, 2, 4) - dg.transpose(0, 1, 3, 4, 2)
    gamma = 0.5 * np.einsum("...kl,...ijl->...kij", data.ginv, t)
    return DerivedGeometry(surface=surface, jet=jet, frame=frame, data=data, gamma=gamma)


def quadrature(f, geo: DerivedGeometry):
    """Integral of a grid scalar against the area measure (trapezoid rule)."""
    return float(np.sum(np.asarray(f) * geo.data.sqrt_det_g) * grids.cell_area(geo.n))


def surface_area(geo: DerivedGeometry):
    return quadrature(np.ones((geo.n, geo.n)), geo)


def laplace_beltrami(f, geo: DerivedGeometry):
    """(1/sqrt g) d_i (sqrt g g^{ij} d_j f); negative spectrum."""
    f = np.asarray(f, dtype=float)
    sg = geo.data.sqrt_det_g
    flux_u = sg * (geo.data.ginv[..., 0, 0] * geo.d(f, 0) + geo.data.ginv[..., 0, 1] * geo.d(f, 1))
    flux_v = sg * (geo.data.ginv[..., 1, 0] * geo.d(f, 0) + geo.data.ginv[..., 1, 1] * geo.d(f, 1))
    return (geo.d(flux_u, 0) + geo.d(flux_v, 1)) / sg


def divergence(w_contra, geo: DerivedGeometry):
    """Metric divergence of a tangential field given by contravariant components."""
    sg = geo.data.sqrt_det_g
    return (geo.d(sg * w_contra[..., 0], 0) + geo.d(sg * w_contra[..., 1], 1)) / sg


def gradient(f, geo: DerivedGeometry):
    """Intrinsic gradient as an ambient Vec6 field."""
    df = np.stack([geo.d(f, 0), geo.d(f, 1)], axis=-1)
    up = np.einsum("...ab,...b->...a", geo.data.ginv, df)
    return up[..., 0, None] * geo.jet.du + up[..., 1, None] * geo.jet.dv


def intrinsic_gauss_curvature(geo: DerivedGeometry):
    """Gauss curvature from the metric alone (Brioschi formula)."""
    g = geo.data.g
    E, F, G = g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]
    d = geo.d
    Eu, Ev = d(E, 0), d(E, 1)
    Fu, Fv = d(F, 0), d(F, 1)
    Gu, Gv = d(G, 0), d(G, 1)
    Evv = d(Ev, 1)
    Guu = d(Gu, 0)
    Fuv = d(Fu, 1)

    def det3(a11, a12, a13, a21, a22, a23, a31, a32, a33):
        return (
            a11 * (a22 * a33 - a23 * a32)
            - a12 * (a21 * a33 - a23 * a31)
            + a13 * (a21 * a32 - a22 * a31)
        )

    m1 = det3(
        -0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev,
        Fv - 0.5 * Gu, E, F,
        0.5 * Gv, F, G,
    )
    m2 = det3(
        np.zeros_like(E), 0.5 * Ev, 0.5 * Gu,
        0.5 * Ev, E, F,
        0.5 * Gu, F, G,
    )
    return (m1 - m2) / (E * G - F**2) ** 2


def check_normal_field(v, geo: DerivedGeometry, tol=NORMAL_FIELD_TOL, what="field"):
    dev = float(np.max(contact.norm(v - geo.project_normal(v))))
    scale = max(1.0, float(np.max(contact.norm(v))))
    if dev > tol * scale:
        raise ValueError(f"{what} is not a normal field: deviation {dev:.3e}")


def covariant_derivative_normal(v, geo: DerivedGeometry):
    """nabla^nu_i V for i = u, v: sphere connection then normal projection."""
    p = geo.jet.value
    tangents = (geo.jet.du, geo.jet.dv)
    out = []
    for i in range(2):
        w = geo.d(v, i) + dot(tangents[i], v)[..., None] * p
        out.append(geo.project_normal(w))
    return out


def normal_laplacian(v, geo: DerivedGeometry, check=True):
    """Connection Laplacian on the normal bundle, negative spectrum.

    Delta^nu V = g^{ij} (nabla^nu_i nabla^nu_j V - Gamma^k_ij nabla^nu_k V).
    """
    v = np.asarray(v, dtype=float)
    if check:
        check_normal_field(v, geo, what="normal_laplacian input")
    first = covariant_derivative_normal(v, geo)
    p = geo.jet.value
    tangents = (geo.jet.du, geo.jet.dv)
    ginv = geo.data.ginv
    out = np.zeros_like(v)
    for i in range(2):
        for j in range(2):
            w = geo.d(first[j], i) + dot(tangents[i], first[j])[..., None] * p
            second = geo.project_normal(w)
            corr = sum(geo.gamma[..., k, i, j, None] * first[k] for k in range(2))
            out = out + ginv[..., i, j, None] * (second - corr)
    return out


def div_JH(geo: DerivedGeometry, legendrian_tol=LEGENDRIAN_OP_TOL):
    """Metric divergence of the tangential part of J0 H.

    Returns (div, tangency_error); the discarded non-tangential norm must
    stay below the abort threshold, which certifies the surface is
    Legendrian enough for JH to be tangential.
    """
    geo.check_legendrian(tol=legendrian_tol, what="div_JH")
    w = j_apply(geo.data.Hvec)
    contra = geo.tangential_components(w)
    tangential = (
        contra[..., 0, None] * geo.jet.du + contra[..., 1, None] * geo.jet.dv
    )
    err = float(np.max(contact.norm(w - tangential)))
    if err > JH_TANGENCY_ABORT:
        raise ValueError(f"JH tangency error {err:.3e} exceeds {JH_TANGENCY_ABORT:.1e}")
    return divergence(contra, geo), err


def el_residual(geo: DerivedGeometry, legendrian_tol=LEGENDRIAN_OP_TOL):
    """Stationarity residual -Delta^nu H + K H as a normal field."""
    geo.check_legendrian(tol=legendrian_tol, what="el_residual")
    h = geo.data.Hvec
    return -normal_laplacian(h, geo, check=False) + geo.data.K[..., None] * h


def willmore_residual(geo: DerivedGeometry):
    """Delta^nu H + Q(A°)H with the trace-free form in flat indices."""
    h = geo.data.h
    Hc = geo.data.Hcomp
    htilde = h - Hc[..., :, None, None] * np.eye(2)
    q = np.einsum("...aij,...bij->...ab", htilde, htilde)
    qh = np.einsum("...ab,...b->...a", q, Hc)
    normals = geo.frame.normals()
    qvec = sum(qh[..., b, None] * n for b, n in enumerate(normals))
    return normal_laplacian(geo.data.Hvec, geo, check=False) + qvec


# ---------------------------------------------------------------------------
# One-form operators


def oneform_covariant_derivative(theta, geo: DerivedGeometry):
    """(nabla theta)_{ij} = d_i theta_j - Gamma^k_{ij} theta_k."""
    dtheta = np.stack([geo.d(theta, 0), geo.d(theta, 1)], axis=-2)
    return dtheta - np.einsum("...kij,...k->...ij", geo.gamma, theta)


def oneform_rough_laplacian(theta, geo: DerivedGeometry):
    """Trace of the second covariant derivative; negative spectrum."""
    nth = oneform_covariant_derivative(theta, geo)
    # (nabla^2 theta)_{ikj} = d_i nth_{kj} - Gamma^l_{ik} nth_{lj} - Gamma^l_{ij} nth_{kl}
    dn = np.stack([geo.d(nth, 0), geo.d(nth, 1)], axis=-3)
    second = (
        dn
        - np.einsum("...lik,...lj->...ikj", geo.gamma, nth)
        - np.einsum("...lij,...kl->...ikj", geo.gamma, nth)
    )
    return np.einsum("...ik,...ikj->...j", geo.data.ginv, second)


def codifferential(theta, geo: DerivedGeometry):
    """delta theta = -(1/sqrt g) d_i (sqrt g g^{ij} theta_j)."""
    sg = geo.data.sqrt_det_g
    up = np.einsum("...ab,...b->...a", geo.data.ginv, theta)
    return -(geo.d(sg * up[..., 0], 0) + geo.d(sg * up[..., 1], 1)) / sg


def oneform_hodge_laplacian(theta, geo: DerivedGeometry):
    """(d delta + delta d) theta; positive spectrum."""
    sg = geo.data.sqrt_det_g
    dd = codifferential(theta, geo)
    d_delta = np.stack([geo.d(dd, 0), geo.d(dd, 1)], axis=-1)
    curl = geo.d(theta[..., 1], 0) - geo.d(theta[..., 0], 1)
    s = curl / sg
    t_up = np.stack([geo.d(s, 1), -geo.d(s, 0)], axis=-1)
    delta_d = np.einsum("...ij,...j->...i", geo.data.g, t_up) / sg[..., None]
    return d_delta + delta_d


def oneform_norm(theta, geo: DerivedGeometry):
    """Pointwise metric norm of a one-form."""
    return np.sqrt(np.einsum("...ij,...i,...j->...", geo.data.ginv, theta, theta))


def oneform_laplacians(theta, geo: DerivedGeometry):
    """Rough and Hodge Laplacians plus the Weitzenboeck residual field.

    The residual is the pointwise metric norm of
    Delta_h theta + Delta theta - K theta, which vanishes on surfaces by
    the Weitzenboeck identity (curvature term K theta).
    """
    theta = np.asarray(theta, dtype=float)
    rough = oneform_rough_laplacian(theta, geo)
    hodge = oneform_hodge_laplacian(theta, geo)
    resid = hodge + rough - geo.data.K[..., None] * theta
    return rough, hodge, oneform_norm(resid, geo)


# ---------------------------------------------------------------------------
# Legendrian-specific residual operators


def omega_contraction(v, geo: DerivedGeometry):
    """One-form X -> <V, J0 X> in the coordinate coframe."""
    return np.stack(
        [dot(v, j_apply(geo.jet.du)), dot(v, j_apply(geo.jet.dv))], axis=-1
    )


def ker_alpha_normal_field(geo: DerivedGeometry, c1, c2):
    """Normal field in ker(alpha) with coefficients along (J E1, J E2).

    Alternating projections push the raw combination onto the strict
    NL intersect ker(alpha) contract (discrete frames are normal only to
    scheme accuracy on perturbed grids).
    """
    r = j_apply(geo.jet.value)
    v = np.asarray(c1)[..., None] * geo.frame.N1 + np.asarray(c2)[..., None] * geo.frame.N2
    for _ in range(3):
        v = geo.project_normal(v)
        v = v - contact.contact_form(geo.jet.value, v, check=False)[..., None] * r
    return geo.project_normal(v)


def omega_commutation_residual(v, geo: DerivedGeometry):
    """Residual form of the commutation Delta(omega~ V) = omega~(Delta^nu V).

    V must be a normal field with alpha(V) ~ 0.  The connection Laplacian
    on the right is the one of the subbundle NL intersect ker(alpha): the
    covariant derivative is projected back into ker(alpha) at each level
    (the contraction omega~ annihilates Reeb components, so this is the
    connection the isomorphism intertwines with the induced one on forms;
    with the unprojected connection the identity provably fails, e.g. for
    the constant-coefficient field J E2 on the flat torus).  The Reeb
    component discarded at first order is reported separately.
    """
    v = np.asarray(v, dtype=float)
    check_normal_field(v, geo, what="omega_commutation input")
    alpha_v = contact.contact_form(geo.jet.value, v, check=False)
    if float(np.max(np.abs(alpha_v))) > KER_ALPHA_TOL * max(1.0, float(np.max(contact.norm(v)))):
        raise ValueError("omega_commutation input must lie in ker(alpha)")
    theta = omega_contraction(v, geo)
    lhs = oneform_rough_laplacian(theta, geo)

    p = geo.jet.value
    r = j_apply(p)
    proj_ker = lambda w: w - dot(w, r)[..., None] * r
    first_full = covariant_derivative_normal(v, geo)
    discrepancy = max(float(np.max(np.abs(dot(w, r)))) for w in first_full)
    first = [proj_ker(w) for w in first_full]
    tangents = (geo.jet.du, geo.jet.dv)
    lap = np.zeros_like(v)
    for i in range(2):
        for j in range(2):
            w = geo.d(first[j], i) + dot(tangents[i], first[j])[..., None] * p
            second = proj_ker(geo.project_normal(w))
            corr = sum(geo.gamma[..., k, i, j, None] * first[k] for k in range(2))
            lap = lap + geo.data.ginv[..., i, j, None] * (second - corr)
    rhs = omega_contraction(lap, geo)
    return lhs - rhs, discrepancy


def reeb_pairing_residual(geo: DerivedGeometry):
    """<Delta^nu H, R> - 2 div(J0 H): zero for every Legendrian surface.

    This is the operator identity behind the equivalence of the
    stationarity conditions; it holds without assuming stationarity.
    """
    geo.check_legendrian(what="reeb_pairing_residual")
    lap = normal_laplacian(geo.data.Hvec, geo, check=False)
    pairing = dot(lap, j_apply(geo.jet.value))
    div, _ = div_JH(geo)
    return pairing - 2.0 * div


def mean_curvature_form_closedness(geo: DerivedGeometry):
    """d(theta_H) component d_u theta_v - d_v theta_u for theta_H = <H, J0 .>."""
    geo.check_legendrian(what="mean_curvature_form_closedness")
    theta = omega_contraction(geo.data.Hvec, geo)
    return geo.d(theta[..., 1], 0) - geo.d(theta[..., 0], 1)


# ---------------------------------------------------------------------------
# Covariant derivative norms of the second fundamental form


@dataclass(frozen=True)
class GradientNorms:
    """Squared covariant-derivative norms and decomposition residuals.

    full_h2 and full_H2 differentiate vector-valued tensors and project
    (frame-free); tangential_h2 and tangential_H2 are assembled from frame
    components with tangential and normal connection coefficients.  The
    two identities relate them pointwise on Legendrian surfaces:
    full_h2 = tangential_h2 + S and full_H2 = tangential_H2 + H^2.
    """

    full_h2: np.ndarray
    tangential_h2: np.ndarray
    full_H2: np.ndarray
    tangential_H2: np.ndarray
    residual_h: np.ndarray
    residual_H: np.ndarray
    li_margin: np.ndarray

    @property
    def residual_h_max(self):
        return float(np.max(np.abs(self.residual_h)))

    @property
    def residual_H_max(self):
        return float(np.max(np.abs(self.residual_H)))

    @property
    def li_margin_min(self):
        return float(np.min(self.li_margin))


def normal_gradient_H_squared(geo: DerivedGeometry):
    """|nabla^nu H|^2 by differentiating the vector field and projecting.

    Frame-free (projector-based), so it is available on near-Legendrian
    flow limits where the Legendrian normal frame is not engaged.
    """
    p = geo.jet.value
    e = geo.frame.tangents()
    hvec = geo.data.Hvec
    out = np.zeros(p.shape[:-1])
    for k in range(2):
        w = geo.d_frame(hvec, k)
        w = w + dot(e[k], hvec)[..., None] * p
        w = geo.project_normal(w)
        out = out + dot(w, w)
    return out


def gradient_norm_decomposition(geo: DerivedGeometry) -> GradientNorms:
    geo.check_legendrian(what="gradient_norm_decomposition")
    if not geo.frame.legendrian:
        raise ValueError("gradient_norm_decomposition needs the Legendrian frame")
    p = geo.jet.value
    e = geo.frame.tangents()
    normals = geo.frame.normals()
    bhat = np.einsum("...ai,...bj,...ijk->...abk", geo.frame.coeff, geo.frame.coeff, geo.data.B)

    # tangential frame connection omega[k, a, b] = <D_k E_a, E_b>
    omega = np.empty(p.shape[:-1] + (2, 2, 2))
    de = [[geo.d_frame(e[a], k) for a in range(2)] for k in range(2)]
    for k in range(2):
        for a in range(2):
            for b in range(2):
                omega[..., k, a, b] = dot(de[k][a], e[b])
    # normal connection sigma[k, beta, gamma] = <D_k N_beta, N_gamma>
    sigma = np.empty(p.shape[:-1] + (2, 3, 3))
    dn = [[geo.d_frame(normals[b], k) for b in range(3)] for k in range(2)]
    for k in range(2):
        for b in range(3):
            for g in range(3):
                sigma[..., k, b, g] = dot(dn[k][b], normals[g])

    # frame-free full covariant derivative of B (vector route)
    full_h2 = np.zeros(p.shape[:-1])
    for k in range(2):
        for a in range(2):
            for b in range(2):
                w = geo.d_frame(bhat[..., a, b, :], k)
                w = w + dot(e[k], bhat[..., a, b, :])[..., None] * p
                w = geo.project_normal(w)
                w = w - sum(omega[..., k, a, l, None] * bhat[..., l, b, :] for l in range(2))
                w = w - sum(omega[..., k, b, l, None] * bhat[..., a, l, :] for l in range(2))
                full_h2 = full_h2 + dot(w, w)

    full_H2 = normal_gradient_H_squared(geo)

    # frame-component route for the tangential (non-Reeb) parts
    h = geo.data.h
    hcomp = geo.data.Hcomp
    tangential_h2 = np.zeros_like(full_h2)
    tangential_H2 = np.zeros_like(full_H2)
    for k in range(2):
        dH = np.stack([geo.d_frame(hcomp[..., b], k) for b in range(3)], axis=-1)
        Hk = dH - np.einsum("...bg,...g->...b", sigma[..., k, :, :], hcomp)
        tangential_H2 = tangential_H2 + Hk[..., 0] ** 2 + Hk[..., 1] ** 2
        for b in range(2):
            dh = geo.d_frame(h[..., b, :, :], k)
            habk = (
                dh
                - np.einsum("...g,...gij->...ij", sigma[..., k, b, :], h)
                - np.einsum("...il,...lj->...ij", omega[..., k, :, :], h[..., b, :, :])
                - np.einsum("...jl,...il->...ij", omega[..., k, :, :], h[..., b, :, :])
            )
            tangential_h2 = tangential_h2 + np.einsum("...ij,...ij->...", habk, habk)

    return GradientNorms(
        full_h2=full_h2,
        tangential_h2=tangential_h2,
        full_H2=full_H2,
        tangential_H2=tangential_H2,
        residual_h=full_h2 - tangential_h2 - geo.data.S,
        residual_H=full_H2 - tangential_H2 - geo.data.H2,
        li_margin=tangential_h2 - 3.0 * tangential_H2,
    )


# ---------------------------------------------------------------------------
# Integral report


def integral_report(geo: DerivedGeometry, legendrian_tol=LEGENDRIAN_OP_TOL) -> Report:
    """Area, Willmore energy, comparison integrals and integral identities.

    The Legendrian-only entries (E, Sigma_Simons, Li margin, decomposition
    residuals) are flagged not-applicable rather than failing when the
    surface is not Legendrian at tolerance.
    """
    d = geo.data
    rep = Report()
    leg_res = float(np.max(d.legendrian_residual))
    legendrian = leg_res <= legendrian_tol
    rep.set("area", surface_area(geo))
    rep.set("W", quadrature(d.rho2, geo))
    rep.set("I1", quadrature(1.5 * d.rho2 * (2.0 - d.S) + 2.0 * d.H2 * d.rho2 + 2.0 * d.H2, geo))
    rep.set("I2", quadrature((d.rho2 + 0.5 * d.S) * (2.0 - d.S), geo))
    rep.set("I3", quadrature(d.S * (2.0 - d.S), geo))
    rep.set("I4", quadrature(d.S * (2.0 - 1.5 * d.S), geo))
    rep.set("I5", quadrature(d.rho2 * (2.0 - d.rho2), geo))
    rep.set("I6", quadrature(d.rho2 * (2.0 - 1.5 * d.rho2), geo))
    rep.set("legendrian_residual", leg_res)
    rep.set("legendrian", bool(legendrian))
    if legendrian:
        # E needs only frame-free projections, so it survives the small
        # drift of flowed grids where the Legendrian frame is not engaged
        rep.set("E", quadrature(normal_gradient_H_squared(geo), geo)
                + quadrature(d.K * d.H2, geo))
    else:
        rep.set("E", None)
    if legendrian and geo.frame.legendrian:
        norms = gradient_norm_decomposition(geo)
        ident = extrinsic.pointwise_identity_residuals(geo.jet, geo.frame, d)
        simons = (
            norms.full_h2
            - 4.0 * norms.full_H2
            + 2.0 * d.K * d.rho2
            - 2.0 * ident.det_sum**2
        )
        rep.set("Sigma_Simons", quadrature(simons, geo))
        rep.set("grad_h_decomposition_res", norms.residual_h_max)
        rep.set("grad_H_decomposition_res", norms.residual_H_max)
        rep.set("li_margin_min", norms.li_margin_min)
    else:
        for key in ("Sigma_Simons", "grad_h_decomposition_res",
                    "grad_H_decomposition_res", "li_margin_min"):
            rep.set(key, None)
    return rep
