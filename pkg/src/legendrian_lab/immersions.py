"""Parametrized surfaces in S^5: closed-form catalog, grid sampling, perturbations.

The catalog provides four closed-form immersions with analytic 2-jets:

* ``legendrian_torus(theta)`` -- the flat Legendrian minimal torus
  (1/sqrt3)(e^{iu}, e^{iv}, e^{i(theta-u-v)}); doubly periodic.
* ``equatorial_legendrian_sphere`` -- a chart of the real unit 2-sphere
  {x in R^3 subset C^3}, totally geodesic and Legendrian.
* ``clifford_s3`` -- (1/sqrt2)(e^{iu}, e^{iv}, 0): minimal, flat, S = 2,
  and certifiably non-Legendrian (alpha(du) = 1/2).
* ``veronese_s4`` -- the quadratic sphere immersion S^2(sqrt3) -> S^4,
  embedded in S^5 through the totally geodesic hyperplane y3 = 0.

Doubly periodic immersions can be resampled to ``GridSurface`` objects,
which carry positions plus a differentiation scheme and are the inputs
to every global operator.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import contact, grids

SQRT3 = np.sqrt(3.0)

GRID_FORMAT_HEADER = "legendrian-lab grid v1"


@dataclass(frozen=True)
class Jet2:
    """Position and first/second parameter derivatives at parameter points.

    All arrays share a leading batch shape and end in a length-6 axis.
    """

    value: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    duu: np.ndarray
    duv: np.ndarray
    dvv: np.ndarray

    def validate(self, tol=1e-10):
        contact.check_sphere(self.value, tol, what="jet value")
        tu = np.max(np.abs(contact.dot(self.du, self.value)))
        tv = np.max(np.abs(contact.dot(self.dv, self.value)))
        if max(tu, tv) > 1e-8:
            raise ValueError(f"jet first derivatives not sphere-tangent: {max(tu, tv):.3e}")
        return self


@dataclass(frozen=True)
class Immersion:
    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], Jet2]
    periodic: tuple[bool, bool]
    domain: tuple[tuple[float, float], tuple[float, float]]

    def __call__(self, u, v):
        return self.evaluator(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


def _stack6(*comps):
    return np.stack(np.broadcast_arrays(*comps), axis=-1)


def _torus_evaluator(theta):
    r = 1.0 / SQRT3

    def ev(u, v):
        w = theta - u - v
        cu, su, cv, sv, cw, sw = np.cos(u), np.sin(u), np.cos(v), np.sin(v), np.cos(w), np.sin(w)
        z = np.zeros_like(u)
        val = r * _stack6(cu, su, cv, sv, cw, sw)
        du = r * _stack6(-su, cu, z, z, sw, -cw)
        dv = r * _stack6(z, z, -sv, cv, sw, -cw)
        duu = r * _stack6(-cu, -su, z, z, -cw, -sw)
        duv = r * _stack6(z, z, z, z, -cw, -sw)
        dvv = r * _stack6(z, z, -cv, -sv, -cw, -sw)
        return Jet2(val, du, dv, duu, duv, dvv)

    return ev


def _equatorial_sphere_evaluator():
    def ev(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        z = np.zeros_like(u)
        val = _stack6(cu * cv, z, su * cv, z, sv, z)
        du = _stack6(-su * cv, z, cu * cv, z, z, z)
        dv = _stack6(-cu * sv, z, -su * sv, z, cv, z)
        duu = _stack6(-cu * cv, z, -su * cv, z, z, z)
        duv = _stack6(su * sv, z, -cu * sv, z, z, z)
        dvv = _stack6(-cu * cv, z, -su * cv, z, -sv, z)
        return Jet2(val, du, dv, duu, duv, dvv)

    return ev


def _clifford_evaluator():
    r = 1.0 / np.sqrt(2.0)

    def ev(u, v):
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        z = np.zeros_like(u)
        val = r * _stack6(cu, su, cv, sv, z, z)
        du = r * _stack6(-su, cu, z, z, z, z)
        dv = r * _stack6(z, z, -sv, cv, z, z)
        duu = r * _stack6(-cu, -su, z, z, z, z)
        duv = np.zeros_like(val)
        dvv = r * _stack6(z, z, -cv, -sv, z, z)
        return Jet2(val, du, dv, duu, duv, dvv)

    return ev


def _veronese_bilinear(a, b):
    """Symmetric bilinear map q with q(w, w) = the quadratic sphere immersion."""
    ax, ay, az = a[..., 0], a[..., 1], a[..., 2]
    bx, by, bz = b[..., 0], b[..., 1], b[..., 2]
    c = 1.0 / (2.0 * SQRT3)
    u1 = c * (ay * bz + by * az)
    u2 = c * (ax * bz + bx * az)
    u3 = c * (ax * by + bx * ay)
    u4 = c * (ax * bx - ay * by)
    u5 = (ax * bx + ay * by - 2.0 * az * bz) / 6.0
    zero = np.zeros_like(u1)
    # image sits in the totally geodesic hyperplane y3 = 0
    return _stack6(u1, u2, u3, u4, u5, zero)


def _veronese_evaluator():
    def ev(u, v):
        su, cu, sv, cv = np.sin(u), np.cos(u), np.sin(v), np.cos(v)
        z = np.zeros_like(u)
        # spherical chart of S^2(sqrt3): v is the polar angle
        w = SQRT3 * np.stack(np.broadcast_arrays(sv * cu, sv * su, cv), axis=-1)
        wu = SQRT3 * np.stack(np.broadcast_arrays(-sv * su, sv * cu, z), axis=-1)
        wv = SQRT3 * np.stack(np.broadcast_arrays(cv * cu, cv * su, -sv), axis=-1)
        wuu = SQRT3 * np.stack(np.broadcast_arrays(-sv * cu, -sv * su, z), axis=-1)
        wuv = SQRT3 * np.stack(np.broadcast_arrays(-cv * su, cv * cu, z), axis=-1)
        wvv = SQRT3 * np.stack(np.broadcast_arrays(-sv * cu, -sv * su, -cv), axis=-1)
        q = _veronese_bilinear
        val = q(w, w)
        du = 2.0 * q(w, wu)
        dv = 2.0 * q(w, wv)
        duu = 2.0 * (q(wu, wu) + q(w, wuu))
        duv = 2.0 * (q(wu, wv) + q(w, wuv))
        dvv = 2.0 * (q(wv, wv) + q(w, wvv))
        return Jet2(val, du, dv, duu, duv, dvv)

    return ev


TWO_PI = 2.0 * np.pi

CATALOG_NAMES = (
    "legendrian_torus",
    "equatorial_legendrian_sphere",
    "clifford_s3",
    "veronese_s4",
)


def catalog(name, theta=0.0):
    """Closed-form immersion by name; theta applies to legendrian_torus only."""
    key = name.replace("-", "_")
    if key == "legendrian_torus":
        theta = float(theta) % TWO_PI
        return Immersion(
            name=f"legendrian_torus(theta={theta:g})",
            evaluator=_torus_evaluator(theta),
            periodic=(True, True),
            domain=((0.0, TWO_PI), (0.0, TWO_PI)),
        )
    if key == "equatorial_legendrian_sphere":
        return Immersion(
            name="equatorial_legendrian_sphere",
            evaluator=_equatorial_sphere_evaluator(),
            periodic=(True, False),
            domain=((0.0, TWO_PI), (-1.3, 1.3)),
        )
    if key == "clifford_s3":
        return Immersion(
            name="clifford_s3",
            evaluator=_clifford_evaluator(),
            periodic=(True, True),
            domain=((0.0, TWO_PI), (0.0, TWO_PI)),
        )
    if key == "veronese_s4":
        return Immersion(
            name="veronese_s4",
            evaluator=_veronese_evaluator(),
            periodic=(True, False),
            domain=((0.0, TWO_PI), (0.3, np.pi - 0.3)),
        )
    raise ValueError(f"unknown catalog surface {name!r}; expected one of {CATALOG_NAMES}")


def _in_domain(q, lo, hi):
    return (q >= lo - 1e-12) & (q <= hi + 1e-12)


def eval_jet2(surface: Immersion, u, v) -> Jet2:
    """Evaluate the 2-jet, enforcing the domain on non-periodic axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    (u0, u1), (v0, v1) = surface.domain
    if not surface.periodic[0] and not np.all(_in_domain(u, u0, u1)):
        raise ValueError(f"u out of domain [{u0}, {u1}] for {surface.name}")
    if not surface.periodic[1] and not np.all(_in_domain(v, v0, v1)):
        raise ValueError(f"v out of domain [{v0}, {v1}] for {surface.name}")
    return surface.evaluator(u, v).validate()


def jet_consistency_check(surface: Immersion, u, v, h=1e-4):
    """Max norm difference between analytic jets and central-difference jets.

    The finite-difference jets are built purely from the value function, so
    this is an independent oracle for the hand-coded derivatives; the
    residual is O(h^2).
    """
    if not 0.0 < h <= 1e-3:
        raise ValueError("step h must lie in (0, 1e-3]")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    jet = surface.evaluator(u, v)
    val = lambda a, b: surface.evaluator(a, b).value
    du = (val(u + h, v) - val(u - h, v)) / (2 * h)
    dv = (val(u, v + h) - val(u, v - h)) / (2 * h)
    duu = (val(u + h, v) - 2 * jet.value + val(u - h, v)) / h**2
    dvv = (val(u, v + h) - 2 * jet.value + val(u, v - h)) / h**2
    duv = (val(u + h, v + h) - val(u + h, v - h) - val(u - h, v + h) + val(u - h, v - h)) / (
        4 * h**2
    )
    pairs = [(du, jet.du), (dv, jet.dv), (duu, jet.duu), (duv, jet.duv), (dvv, jet.dvv)]
    return max(float(np.max(contact.norm(a - b))) for a, b in pairs)


@dataclass(frozen=True)
class GridSurface:
    """N x N doubly periodic sampling of an immersed torus in S^5.

    positions[a, b] is the point at (u_a, v_b) = (2pi a/N, 2pi b/N); the
    scheme fixes how jets and all downstream operators differentiate.
    """

    positions: np.ndarray
    scheme: str = "fd4"

    def __post_init__(self):
        grids.check_scheme(self.scheme)
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 3 or pos.shape[0] != pos.shape[1] or pos.shape[2] != 6:
            raise ValueError(f"positions must be (N, N, 6), got {pos.shape}")
        n = pos.shape[0]
        if n < 8 or n % 2 != 0:
            raise ValueError(f"grid resolution must be even and >= 8, got {n}")
        contact.check_sphere(pos, what="grid positions")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def n(self):
        return self.positions.shape[0]

    def jets(self) -> Jet2:
        p = self.positions
        s = self.scheme
        return Jet2(
            value=p,
            du=grids.deriv(p, 0, s),
            dv=grids.deriv(p, 1, s),
            duu=grids.deriv(p, 0, s, order=2),
            duv=grids.deriv_mixed(p, s),
            dvv=grids.deriv(p, 1, s, order=2),
        )

    def with_positions(self, positions):
        return GridSurface(positions=positions, scheme=self.scheme)


def resample_to_grid(surface: Immersion, n, scheme="fd4") -> GridSurface:
    """Sample a doubly periodic immersion at the n x n grid nodes."""
    if not all(surface.periodic):
        raise ValueError(f"{surface.name} is not doubly periodic; grid operators need a torus")
    uu, vv = grids.grid_nodes(n)
    jet = surface.evaluator(uu, vv)
    return GridSurface(positions=jet.value.copy(), scheme=scheme)


def save_grid(surface: GridSurface, path):
    """Write the text format: header line, then N^2 rows of six floats."""
    buf = io.StringIO()
    buf.write(f"{GRID_FORMAT_HEADER} N={surface.n} scheme={surface.scheme}\n")
    flat = surface.positions.reshape(-1, 6)
    for row in flat:
        buf.write(" ".join(f"{x:.17g}" for x in row) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_grid(path) -> GridSurface:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith(GRID_FORMAT_HEADER):
            raise ValueError(f"not a grid file: header {header!r}")
        fields = dict(tok.split("=", 1) for tok in header[len(GRID_FORMAT_HEADER):].split())
        n = int(fields["N"])
        scheme = fields["scheme"]
        data = np.loadtxt(fh, dtype=float)
    if data.shape != (n * n, 6):
        raise ValueError(f"grid file body has shape {data.shape}, expected {(n * n, 6)}")
    return GridSurface(positions=data.reshape(n, n, 6), scheme=scheme)


# ---------------------------------------------------------------------------
# Legendrian perturbations


def legendrian_residual_of_grid(surface: GridSurface):
    """Max pointwise |alpha(d_i)| over both coordinate directions."""
    jet = surface.jets()
    au = contact.contact_form(jet.value, jet.du, check=False)
    av = contact.contact_form(jet.value, jet.dv, check=False)
    return float(max(np.max(np.abs(au)), np.max(np.abs(av))))


def variation_field_on_positions(positions, f, scheme):
    """V = f R + (1/2) J0 grad_g f on the sampled surface.

    The 1/2 is forced by d(alpha) = 2 sum dx ^ dy: it is the unique scaling
    for which the deformation preserves alpha(d_i) = 0 to first order.
    """
    xu = grids.deriv(positions, 0, scheme)
    xv = grids.deriv(positions, 1, scheme)
    g11 = contact.dot(xu, xu)
    g12 = contact.dot(xu, xv)
    g22 = contact.dot(xv, xv)
    det = g11 * g22 - g12**2
    fu = grids.deriv(f, 0, scheme)
    fv = grids.deriv(f, 1, scheme)
    cu = (g22 * fu - g12 * fv) / det
    cv = (-g12 * fu + g11 * fv) / det
    grad = cu[..., None] * xu + cv[..., None] * xv
    return f[..., None] * contact.j_apply(positions) + 0.5 * contact.j_apply(grad)


@dataclass(frozen=True)
class PerturbationResult:
    surface: GridSurface
    legendrian_residual: float


def perturb_legendrian(surface: GridSurface, f, steps=1, tau=1.0,
                       abort_residual=1e-3) -> PerturbationResult:
    """Explicit Euler integration of dL/dt = V_f, re-projecting to the sphere.

    f is a grid scalar held fixed while the variation field is rebuilt from
    the current surface each step; the accumulated Legendrian residual is
    O((steps * tau * ||f||)^2) and is returned.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (surface.n, surface.n):
        raise ValueError(f"f must be ({surface.n}, {surface.n}), got {f.shape}")
    res0 = legendrian_residual_of_grid(surface)
    if res0 > 1e-6:
        raise ValueError(f"source surface not Legendrian: residual {res0:.3e} > 1e-6")
    pos = surface.positions.copy()
    for _ in range(int(steps)):
        pos = pos + tau * variation_field_on_positions(pos, f, surface.scheme)
        pos = contact.normalize(pos)
    out = surface.with_positions(pos)
    res = legendrian_residual_of_grid(out)
    if res > abort_residual:
        raise ValueError(
            f"Legendrian residual {res:.3e} exceeds {abort_residual:.1e} after "
            f"{steps} steps of size {tau:g}; reduce steps*tau*||f||"
        )
    return PerturbationResult(surface=out, legendrian_residual=res)


# ---------------------------------------------------------------------------
# Ambient contact-Hamiltonian perturbations (exactly Legendrian-preserving)


@dataclass(frozen=True)
class QuadraticContactHamiltonian:
    """Contact Hamiltonian f(q) = q^T M q on S^5 and its contact vector field.

    The flow of the field is a contactomorphism, so it carries Legendrian
    grids to Legendrian grids exactly; only the ODE integration error
    survives.  Quadratics of Re/Im(z_i z_j) type are non-Hermitian and give
    genuinely non-isometric deformations (Hermitian ones rotate the sphere).
    """

    matrix: np.ndarray

    def value(self, q):
        return np.einsum("...i,ij,...j->...", q, self.matrix, q)

    def gradient(self, q):
        return 2.0 * np.einsum("ij,...j->...i", self.matrix, q)

    def field(self, q):
        """V = f R + (1/2) J0 (grad_xi f), the contact vector field."""
        f = self.value(q)
        g = self.gradient(q)
        r = contact.j_apply(q)
        g_sphere = g - contact.dot(g, q)[..., None] * q
        g_xi = g_sphere - contact.dot(g_sphere, r)[..., None] * r
        return f[..., None] * r + 0.5 * contact.j_apply(g_xi)


def _pair_quadratic(i, j, kind):
    """Symmetric matrix of Re(z_i z_j) or Im(z_i z_j) as a form on R^6."""
    m = np.zeros((6, 6))
    xi, yi, xj, yj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
    if i == j:
        if kind == "re":  # x^2 - y^2
            m[xi, xi] = 1.0
            m[yi, yi] = -1.0
        else:  # 2 x y
            m[xi, yi] = 1.0
            m[yi, xi] = 1.0
        return m
    if kind == "re":  # x_i x_j - y_i y_j
        m[xi, xj] += 0.5
        m[xj, xi] += 0.5
        m[yi, yj] -= 0.5
        m[yj, yi] -= 0.5
    else:  # x_i y_j + y_i x_j
        m[xi, yj] += 0.5
        m[yj, xi] += 0.5
        m[yi, xj] += 0.5
        m[xj, yi] += 0.5
    return m


# Restricted to the torus, z_i z_j quadratics excite parameter waves
# e^{i(theta_i + theta_j)}: the mixed pairs hit the area-lowering saddle
# directions of the flat minimal torus (second-variation eigenvalue
# lambda = 2 < 6), while the squares z_k^2 excite only the even lattice
# (lambda >= 8), where the torus is a strict local minimum.
_STABLE_PAIRS = [(0, 0), (1, 1), (2, 2)]
_GENERIC_PAIRS = [(0, 1), (0, 2), (1, 2)]


def random_contact_hamiltonian(eps, seed=0, mode="stable", reference=None):
    """Random non-isometric quadratic Hamiltonian scaled to max |f| = eps.

    mode "stable" draws from the z_k^2 family (perturbations the area flow
    contracts back to the torus); "generic" adds the mixed z_i z_j pairs,
    which include the torus's Legendrian-unstable directions and are meant
    for identity/residual tests, not for flow starts.  The scaling
    reference defaults to the unperturbed torus grid.
    """
    rng = np.random.default_rng(seed)
    pairs = _STABLE_PAIRS if mode == "stable" else _STABLE_PAIRS + _GENERIC_PAIRS
    basis = [_pair_quadratic(i, j, kind) for (i, j) in pairs for kind in ("re", "im")]
    coeffs = rng.standard_normal(len(basis))
    m = sum(c * b for c, b in zip(coeffs, basis))
    if reference is None:
        reference = resample_to_grid(catalog("legendrian_torus"), 32, "fd4").positions
    scale = float(np.max(np.abs(np.einsum("...i,ij,...j->...", reference, m, reference))))
    if scale == 0.0:
        raise ValueError("degenerate Hamiltonian draw")
    return QuadraticContactHamiltonian(matrix=(eps / scale) * m)


def flow_ambient(positions, hamiltonian, time=1.0, steps=40):
    """Classical RK4 on dq/dt = V(q), applied node by node."""
    q = np.asarray(positions, dtype=float).copy()
    h = time / steps
    for _ in range(steps):
        k1 = hamiltonian.field(q)
        k2 = hamiltonian.field(q + 0.5 * h * k1)
        k3 = hamiltonian.field(q + 0.5 * h * k2)
        k4 = hamiltonian.field(q + h * k3)
        q = q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return contact.normalize(q)


def perturbed_torus(theta=0.0, eps=0.02, n=32, scheme="fd4", seed=0,
                    mode="stable", time=1.0, steps=40) -> GridSurface:
    """Legendrian torus pushed along a seeded ambient contact flow.

    All resolutions sample the same smooth surface, so grid-refinement
    studies see pure discretization error; the Legendrian residual is the
    RK4 integration error (~1e-12 at the defaults).  See
    random_contact_hamiltonian for the stable/generic distinction.
    """
    base = resample_to_grid(catalog("legendrian_torus", theta=theta), n, scheme)
    if eps == 0.0:
        return base
    ham = random_contact_hamiltonian(eps, seed=seed, mode=mode)
    pos = flow_ambient(base.positions, ham, time=time, steps=steps)
    return GridSurface(positions=pos, scheme=scheme)
