"""Curvature data of the level-set foliation of a symbol, tracing of the
degenerate curves {K = 0} on a level set, and the assumption report with the
constants C0..C4.

Curvature of the implicit surface {p = a} uses
``K = (grad p . adj(Hess p) grad p) / |grad p|^4`` together with the shape
operator restricted to an orthonormal tangent frame for principal data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .symbols import Symbol, eval_jet, derivative


class DegenerateGradient(RuntimeError):
    """|grad p| below tolerance: the foliation is not regular at this point."""


class CorrectionDiverged(RuntimeError):
    pass


class RankDeficient(RuntimeError):
    """|grad p x grad K| below tolerance: transversality fails locally."""


class EmptyDomain(RuntimeError):
    pass


GRAD_TOL = 1e-10
CROSS_TOL = 1e-8
TANGENTIAL_THRESHOLD = 0.05  # |Z x w| below this flags a tangential point
UMBILIC_TOL = 1e-10


@dataclass(frozen=True)
class CurvatureData:
    xi: np.ndarray
    a: float  # level value p(xi)
    nu: np.ndarray  # unit normal
    K: float  # Gaussian curvature
    kappa: tuple[float, float]  # principal curvatures, ascending by value
    dirs: tuple[np.ndarray, np.ndarray]  # unit principal directions
    gradK: np.ndarray
    umbilic: bool = False


def _adj3(a: np.ndarray) -> np.ndarray:
    """Adjugate of a 3x3 matrix by cofactors (valid for singular matrices)."""
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = a[np.ix_(r, c)]
            out[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return out


def _adj3_bilinear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # adj is quadratic in its argument, so the directional derivative at a in
    # direction b is adj(a+b) - adj(a) - adj(b).
    return _adj3(a + b) - _adj3(a) - _adj3(b)


def gaussian_curvature(s: Symbol, xi) -> float:
    jet = eval_jet(s, xi, 2)
    g, h = jet.gradient, jet.hessian
    n2 = float(g @ g)
    if n2 < GRAD_TOL**2:
        raise DegenerateGradient(f"|grad p| < {GRAD_TOL} at {np.asarray(xi)}")
    return float(g @ _adj3(h) @ g) / n2**2


def curvature_gradient(s: Symbol, xi, method: str = "analytic") -> np.ndarray:
    """Gradient of the Gaussian-curvature field on the ambient domain."""
    if method == "fd":
        step = 1e-5
        out = np.empty(3)
        for l in range(3):
            e = np.zeros(3)
            e[l] = step
            out[l] = (gaussian_curvature(s, np.asarray(xi, float) + e)
                      - gaussian_curvature(s, np.asarray(xi, float) - e)) / (2 * step)
        return out
    jet = eval_jet(s, xi, 3)
    g, h, t = jet.gradient, jet.hessian, jet.third
    n2 = float(g @ g)
    if n2 < GRAD_TOL**2:
        raise DegenerateGradient(f"|grad p| < {GRAD_TOL} at {np.asarray(xi)}")
    adj = _adj3(h)
    num = float(g @ adj @ g)
    den = n2 * n2
    out = np.empty(3)
    for l in range(3):
        dg = h[:, l]
        dadj = _adj3_bilinear(h, t[:, :, l])
        dnum = 2.0 * float(dg @ adj @ g) + float(g @ dadj @ g)
        dden = 4.0 * n2 * float(g @ dg)
        out[l] = (dnum * den - num * dden) / (den * den)
    return out


def _tangent_frame(nu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e = np.zeros(3)
    e[int(np.argmin(np.abs(nu)))] = 1.0
    t1 = np.cross(nu, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(nu, t1)
    return t1, t2


def curvature_at(s: Symbol, xi, gradK_method: str = "analytic") -> CurvatureData:
    """Full curvature data of the level set of p through xi."""
    xi = np.asarray(xi, dtype=float)
    jet = eval_jet(s, xi, 2)
    g, h = jet.gradient, jet.hessian
    gn = float(np.linalg.norm(g))
    if gn < GRAD_TOL:
        raise DegenerateGradient(f"|grad p| < {GRAD_TOL} at {xi}")
    nu = g / gn
    t1, t2 = _tangent_frame(nu)
    m = np.array([[t1 @ h @ t1, t1 @ h @ t2], [t2 @ h @ t1, t2 @ h @ t2]]) / gn
    m = 0.5 * (m + m.T)
    evals, evecs = np.linalg.eigh(m)
    d1 = evecs[0, 0] * t1 + evecs[1, 0] * t2
    d2 = evecs[0, 1] * t1 + evecs[1, 1] * t2
    k_implicit = float(g @ _adj3(h) @ g) / gn**4
    umbilic = abs(evals[1] - evals[0]) < UMBILIC_TOL
    return CurvatureData(
        xi=xi,
        a=jet.value,
        nu=nu,
        K=k_implicit,
        kappa=(float(evals[0]), float(evals[1])),
        dirs=(d1 / np.linalg.norm(d1), d2 / np.linalg.norm(d2)),
        gradK=curvature_gradient(s, xi, method=gradK_method),
        umbilic=umbilic,
    )


def small_curvature_direction(c: CurvatureData) -> np.ndarray:
    """Unit principal direction of the principal curvature smaller in modulus."""
    i = int(np.argmin(np.abs(c.kappa)))
    return c.dirs[i]


@dataclass
class DegenerateCurve:
    a: float
    nodes: np.ndarray  # (n, 3)
    w: np.ndarray  # (n, 3) unit tangents grad p x grad K
    Z: np.ndarray  # (n, 3) unit small-curvature directions
    closed: bool
    tangential: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def length(self) -> float:
        d = np.linalg.norm(np.diff(self.nodes, axis=0), axis=1).sum()
        if self.closed:
            d += np.linalg.norm(self.nodes[0] - self.nodes[-1])
        return float(d)


def _newton_correct(s: Symbol, a: float, x: np.ndarray, max_iter: int = 20,
                    p_tol: float = 1e-9, k_tol: float = 1e-8) -> np.ndarray:
    """Project x onto {p = a, K = 0} with a 2-constraint Newton iteration."""
    x = np.asarray(x, dtype=float).copy()
    for _ in range(max_iter):
        jet = eval_jet(s, x, 2)
        k = gaussian_curvature(s, x)
        if abs(jet.value - a) <= p_tol and abs(k) <= k_tol:
            return x
        gk = curvature_gradient(s, x)
        jac = np.stack([jet.gradient, gk])
        if np.linalg.norm(np.cross(jet.gradient, gk)) < CROSS_TOL:
            raise RankDeficient(f"|grad p x grad K| < {CROSS_TOL} near {x}")
        g = np.array([jet.value - a, k])
        x = x - jac.T @ np.linalg.solve(jac @ jac.T, g)
    raise CorrectionDiverged(f"Newton failed to land on the curve near {x}")


def trace_degenerate_curve(
    s: Symbol,
    a: float,
    seed,
    h: float,
    box: np.ndarray | None = None,
    max_steps: int = 100_000,
) -> DegenerateCurve:
    """Predictor-corrector trace of Gamma_a = {p = a} n {K = 0}.

    Predictor steps by h along w = (grad p x grad K)/|...|; the corrector is a
    two-constraint Newton projection.  Terminates on loop closure (distance to
    the start below h/2 after at least 10 steps) or on domain exit.
    """
    x0 = _newton_correct(s, a, np.asarray(seed, dtype=float))
    nodes, ws, zs = [x0], [], []
    prev_w = None
    x = x0
    closed = False
    for step in range(max_steps):
        jet = eval_jet(s, x, 2)
        gk = curvature_gradient(s, x)
        cross = np.cross(jet.gradient, gk)
        cn = np.linalg.norm(cross)
        if cn < CROSS_TOL:
            raise RankDeficient(f"|grad p x grad K| < {CROSS_TOL} at node {x}")
        w = cross / cn
        if prev_w is not None and w @ prev_w < 0:
            w = -w
        cdata = curvature_at(s, x)
        z = small_curvature_direction(cdata)
        if zs and z @ zs[-1] < 0:
            z = -z
        ws.append(w)
        zs.append(z)
        prev_w = w
        x = _newton_correct(s, a, x + h * w)
        if box is not None and (np.any(x < box[:, 0]) or np.any(x > box[:, 1])):
            break
        if step >= 9 and np.linalg.norm(x - x0) < h / 2:
            closed = True
            break
        nodes.append(x)
    else:
        raise CorrectionDiverged("trace exceeded the step budget without closing")
    nodes = np.asarray(nodes)
    ws = np.asarray(ws)
    zs = np.asarray(zs)
    tang = np.linalg.norm(np.cross(zs, ws), axis=1) < TANGENTIAL_THRESHOLD
    return DegenerateCurve(a=a, nodes=nodes, w=ws, Z=zs, closed=closed, tangential=tang)


@dataclass
class AssumptionReport:
    C0: float  # sampled diameter of D
    C1: float  # sampled C^5 norm of p on D
    C2: float  # min |grad p| on D
    C3: float  # min |grad p x grad K| on {K = 0}, inf if no degenerate set
    C4: int  # max Gauss-map preimage cluster count observed
    tangential_points: np.ndarray  # (m, 3)
    verdicts: dict[str, str]  # assumption -> pass | fail | inconclusive
    curves: list[DegenerateCurve] = field(default_factory=list)
    samples: int = 0
    meta: dict = field(default_factory=dict)

    def all_pass(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())


def _diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if len(points) > 64:
        try:
            from scipy.spatial import ConvexHull

            points = points[ConvexHull(points).vertices]
        except Exception:
            idx = np.linspace(0, len(points) - 1, 512).astype(int)
            points = points[idx]
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(-1)
    return float(np.sqrt(d2.max()))


def _curve_seeds(s: Symbol, mesh) -> list[np.ndarray]:
    """Seed candidates from sign changes of K across mesh edges."""
    kv = np.array([gaussian_curvature(s, v) for v in mesh.vertices])
    seeds = []
    edges = set()
    for tri in mesh.triangles:
        for i in range(3):
            e = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
            edges.add(e)
    for i, j in sorted(edges):
        if kv[i] == 0.0 or kv[i] * kv[j] < 0.0:
            t = kv[i] / (kv[i] - kv[j]) if kv[i] != kv[j] else 0.5
            seeds.append((1 - t) * mesh.vertices[i] + t * mesh.vertices[j])
    return seeds


def check_assumptions(
    s: Symbol,
    box,
    interval,
    resolution: int = 24,
    trace_step: float | None = None,
) -> AssumptionReport:
    """Sample D = box n p^{-1}(I), estimate C0..C4, trace the degenerate
    curves found by a sign scan of K, and emit per-assumption verdicts.

    Sampling-based necessary checks only: a pass does not certify the
    assumptions, a fail falsifies them at the reported points.
    """
    from .mesh import mesh_level_set, EmptySurface

    box = np.asarray(box, dtype=float).reshape(3, 2)
    a0, a1 = float(interval[0]), float(interval[1])
    if resolution < 16:
        raise ValueError("resolution must be at least 16 per axis")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    pvals = s.eval_many(grid)
    mask = (pvals >= a0) & (pvals <= a1)
    if not mask.any():
        raise EmptyDomain("no grid point of the box lies in p^{-1}(I)")
    pts = grid[mask]

    c0 = _diameter(pts)
    grads = s.grad_many(pts)
    c2 = float(np.linalg.norm(grads, axis=1).min())
    sub = pts[np.linspace(0, len(pts) - 1, min(len(pts), 64)).astype(int)]
    c1 = 0.0
    from .symbols import _multi_indices_up_to

    for alpha in _multi_indices_up_to(5):
        for pt in sub:
            c1 = max(c1, abs(derivative(s, pt, alpha)))

    a_mid = 0.5 * (a0 + a1)
    h_mesh = float((box[:, 1] - box[:, 0]).max()) / resolution
    step = trace_step if trace_step is not None else h_mesh / 2
    curves: list[DegenerateCurve] = []
    c4 = 0
    mesh = None
    try:
        mesh = mesh_level_set(s, a_mid, box, h_mesh)
    except EmptySurface:
        pass
    if mesh is not None:
        c4 = _preimage_count(mesh)
        seeds = _curve_seeds(s, mesh)
        for seed in seeds:
            if any(
                np.linalg.norm(c.nodes - seed, axis=1).min() < 2 * step for c in curves
            ):
                continue
            try:
                curve = trace_degenerate_curve(s, a_mid, seed, step, box=box)
            except (RankDeficient, CorrectionDiverged):
                continue
            curves.append(curve)

    if curves:
        c3 = np.inf
        for c in curves:
            gp = s.grad_many(c.nodes)
            gk = np.array([curvature_gradient(s, x) for x in c.nodes])
            c3 = min(c3, float(np.linalg.norm(np.cross(gp, gk), axis=1).min()))
        tang = np.concatenate([c.nodes[c.tangential] for c in curves]) if any(
            c.tangential.any() for c in curves
        ) else np.zeros((0, 3))
    else:
        c3 = np.inf
        tang = np.zeros((0, 3))

    verdicts = {
        "assumption1": "pass" if c2 > 1e-6 else "fail",
        "assumption2": "pass" if c3 > 1e-6 else "fail",
        "assumption3": "pass" if c4 < 64 else "fail",
        "assumption4": "pass" if len(tang) == 0 else "fail",
    }
    if mesh is None:
        verdicts["assumption3"] = "inconclusive"
    return AssumptionReport(
        C0=c0,
        C1=c1,
        C2=c2,
        C3=float(c3),
        C4=int(c4),
        tangential_points=tang,
        verdicts=verdicts,
        curves=curves,
        samples=int(mask.sum()),
        meta={
            "resolution": resolution,
            "interval": (a0, a1),
            "box": box.tolist(),
            "level": a_mid,
            "tangential_threshold": TANGENTIAL_THRESHOLD,
            "note": "sampling-based necessary checks; a pass is not a certificate",
        },
    )


def _preimage_count(mesh, cell_deg: float = 2.0, separation_factor: float = 10.0) -> int:
    """Bin mesh normals into ~cell_deg-degree spherical cells and count
    well-separated clusters per cell; the max is the C4 estimate.
    """
    normals = mesh.normals
    theta = np.arccos(np.clip(normals[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(normals[:, 1], normals[:, 0]), 2 * np.pi)
    d = np.deg2rad(cell_deg)
    itheta = np.minimum((theta / d).astype(int), int(np.pi / d))
    # keep the azimuthal cell width ~ d in arc length near the poles
    nphi = np.maximum(1, np.ceil(2 * np.pi * np.sin((itheta + 0.5) * d) / d).astype(int))
    iphi = np.minimum((phi / (2 * np.pi) * nphi).astype(int), nphi - 1)
    sep = separation_factor * mesh.edge_length
    best = 0
    cells: dict[tuple[int, int], list[int]] = {}
    for idx, key in enumerate(zip(itheta.tolist(), iphi.tolist())):
        cells.setdefault(key, []).append(idx)
    for members in cells.values():
        reps: list[np.ndarray] = []
        for idx in members:
            v = mesh.vertices[idx]
            if all(np.linalg.norm(v - r) > sep for r in reps):
                reps.append(v)
        best = max(best, len(reps))
    return best
