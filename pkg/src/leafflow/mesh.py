"""Triangle meshes of a level set C = c and of the red-zone surface f = 0.

Leaf meshes come from chart grids (x, z) and (y, z), so every vertex lies on the
leaf up to the rounding of one division.  The red-zone surface is extracted by
marching cubes and then projected onto f = 0 with Newton steps along grad f.
Vertices are written in causal coordinates (X, Y, T).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .family import Family, Signature
from .geometry import causal_coordinates

LEAF_TOL = 1e-6
RED_TOL = 1e-6
MIN_RESOLUTION = 16


class MeshWarning(UserWarning):
    pass


@dataclass
class MeshFile:
    """Vertices in ambient (x, y, z), triangles, and per-vertex channels."""

    vertices: np.ndarray
    faces: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def causal(self) -> np.ndarray:
        if len(self.vertices) == 0:
            return np.zeros((0, 3))
        return np.array([causal_coordinates(v) for v in self.vertices])

    def validate(self):
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face index out of range")
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("NaN vertex in mesh")


def _empty():
    return MeshFile(np.zeros((0, 3)), np.zeros((0, 3), dtype=int), {})


def _grid_faces(valid: np.ndarray, index: np.ndarray) -> list[tuple[int, int, int]]:
    faces = []
    nu, nv = valid.shape
    for i in range(nu - 1):
        for j in range(nv - 1):
            a, b, c, d = (i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)
            if valid[a] and valid[b] and valid[c]:
                faces.append((index[a], index[b], index[c]))
            if valid[a] and valid[c] and valid[d]:
                faces.append((index[a], index[c], index[d]))
    return faces


def _chart_patch(family: Family, c: float, chart: str, res: int, box: float, z_range):
    """Sample one chart on a grid; keep points inside the box where the chart is preferred."""
    # avoid the coordinate breakdown at 0 by staggering the grid around it
    u = np.linspace(-box, box, 2 * res + 1)
    u = 0.5 * (u[:-1] + u[1:])
    zs = np.linspace(z_range[0], z_range[1], res + 1)
    U, Zg = np.meshgrid(u, zs, indexing="ij")
    with np.errstate(all="ignore"):
        other = np.asarray(family.xy_on_leaf(c, Zg), dtype=float) / U
        other = np.broadcast_to(other, U.shape)
    if chart == "XZ":
        xs, ys = U, other
        keep = np.abs(xs) >= 0.1 * np.abs(ys)
    else:
        xs, ys = other, U
        keep = np.abs(ys) > 0.1 * np.abs(xs)
    valid = np.isfinite(other) & (np.abs(other) <= box) & keep
    pts = np.stack([xs, ys, Zg], axis=-1)
    return pts, valid


def leaf_mesh(family: Family, c: float, resolution: int = 64, box: float = 3.0,
              z_range=None, eps_f: float = 1e-9) -> MeshFile:
    """Mesh of the level set C = c inside ``[-box, box]^3`` from the XZ and YZ charts."""
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION}")
    z_range = z_range or (-box, box)
    verts, faces = [], []
    for chart in ("XZ", "YZ"):
        pts, valid = _chart_patch(family, c, chart, resolution, box, z_range)
        index = -np.ones(valid.shape, dtype=int)
        flat = np.argwhere(valid)
        for k, (i, j) in enumerate(flat):
            index[i, j] = len(verts) + k
        verts.extend(pts[i, j] for i, j in flat)
        faces.extend(_grid_faces(valid, index))
    if not verts:
        warnings.warn(f"level set C = {c} has no points in the box", MeshWarning, stacklevel=2)
        return _empty()
    V = np.array(verts, dtype=float)
    F = np.array(faces, dtype=int).reshape(-1, 3)
    mesh = MeshFile(V, F, _channels(family, V, eps_f, c))
    mesh.validate()
    return mesh


def _channels(family: Family, V: np.ndarray, eps_f: float, c: float | None = None):
    x, y, z = V[:, 0], V[:, 1], V[:, 2]
    f = np.broadcast_to(np.asarray(family.f(x, y, z), dtype=float), x.shape).copy()
    cs = np.broadcast_to(np.asarray(family.C(x, y, z), dtype=float), x.shape).copy()
    if c is None:
        Fc = np.array([float(family.F_expr(ci)(0.0, 0.0, zi)) for ci, zi in zip(cs, z)])
    else:
        Fc = np.broadcast_to(np.asarray(family.F_expr(c)(0.0, 0.0, z), dtype=float), x.shape).copy()
    sig = np.where(np.abs(Fc) <= eps_f, Signature.DEGENERATE.code,
                   np.where(Fc > 0, Signature.LORENTZIAN.code, Signature.EUCLIDEAN.code))
    return {"C": cs, "f": f, "F_c": Fc, "signature": sig.astype(int)}


def red_zone_mesh(family: Family, resolution: int = 64, box: float = 3.0,
                  eps_f: float = 1e-9, newton_iters: int = 20) -> MeshFile:
    """Mesh of f = 0 inside ``[-box, box]^3`` by marching cubes plus Newton projection."""
    from skimage.measure import marching_cubes

    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION}")
    # an even count keeps the grid off the symmetry planes x = 0, y = 0
    n = resolution + (resolution % 2 == 1)
    axis = np.linspace(-box, box, n)
    Xg, Yg, Zg = np.meshgrid(axis, axis, axis, indexing="ij")
    vol = np.broadcast_to(np.asarray(family.f(Xg, Yg, Zg), dtype=float), Xg.shape)
    if not (vol.min() < 0.0 < vol.max()):
        warnings.warn("red zone has no points in the box", MeshWarning, stacklevel=2)
        return _empty()
    step = axis[1] - axis[0]
    verts, faces, _, _ = marching_cubes(vol, level=0.0, spacing=(step, step, step))
    verts = verts - box

    keep = np.ones(len(verts), dtype=bool)
    for k, p in enumerate(verts):
        for _ in range(newton_iters):
            val, grad = family.f.value_and_grad(p)
            if abs(val) < RED_TOL * 1e-4:
                break
            gg = float(grad @ grad)
            if gg == 0.0:
                break
            p = p - val * grad / gg
        verts[k] = p
        keep[k] = np.all(np.isfinite(p)) and abs(family.f_value(p)) < RED_TOL

    remap = -np.ones(len(verts), dtype=int)
    remap[keep] = np.arange(int(keep.sum()))
    faces = faces[np.all(keep[faces], axis=1)]
    V = verts[keep]
    F = remap[faces]
    if len(V) == 0:
        warnings.warn("red-zone projection produced no vertices", MeshWarning, stacklevel=2)
        return _empty()
    mesh = MeshFile(V, F, _channels(family, V, eps_f))
    mesh.validate()
    return mesh


def write_obj(mesh: MeshFile, path) -> None:
    """Wavefront text: ``v X Y T`` lines then 1-based ``f`` lines."""
    with open(path, "w") as fh:
        for X, Y, T in mesh.causal:
            fh.write(f"v {X:.17g} {Y:.17g} {T:.17g}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


def write_channels(mesh: MeshFile, path) -> None:
    names = ["C", "f", "F_c", "signature"]
    with open(path, "w") as fh:
        fh.write("index,X,Y,T,x,y,z," + ",".join(names) + "\n")
        for k, (cv, v) in enumerate(zip(mesh.causal, mesh.vertices)):
            row = [str(k)] + [f"{val:.17g}" for val in (*cv, *v)]
            for name in names:
                val = mesh.channels[name][k]
                row.append(str(int(val)) if name == "signature" else f"{val:.17g}")
            fh.write(",".join(row) + "\n")
