"""CSV point clouds and OBJ polylines/meshes for fibers, links and trajectories."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .fibration import FiberSample, LinkSample, Trajectory

__all__ = ["export_name", "write_points_csv", "write_fiber_csv", "write_link_csv", "write_obj", "fiber_edges", "trajectory_polyline"]


def _num(v: float) -> str:
    return repr(float(v))


def export_name(germ: str, kind: str, eps: float, alpha: float | None = None, ext: str = "csv") -> str:
    """``{germ}-{kind}-{eps}-{alpha}.{ext}``; the alpha part is dropped for the link."""
    parts = [germ, kind, f"{eps:g}"]
    if alpha is not None:
        parts.append(f"{alpha:.6f}")
    return "-".join(parts) + "." + ext


def write_points_csv(path: Path, rows: Iterable[Sequence[float]], m: int, phases, residuals) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(m)] + ["phase", "residual"])
        for pt, ph, r in zip(rows, phases, residuals):
            w.writerow([_num(v) for v in pt] + ["" if ph is None else _num(ph), _num(r)])
    return path


def write_fiber_csv(path: Path, fs: FiberSample) -> Path:
    m = len(fs.points[0].coords) if fs.points else 0
    return write_points_csv(path, (p.coords for p in fs.points), m, [fs.alpha] * len(fs.points), fs.residuals)


def write_link_csv(path: Path, link: LinkSample, m: int) -> Path:
    return write_points_csv(path, (p.coords for p in link.points), m, [None] * len(link.points), link.residuals)


def fiber_edges(points: np.ndarray, k: int = 3) -> list[tuple[int, int]]:
    """Nearest-neighbour graph of a fiber point cloud, edges (i, j) with i < j."""
    n = len(points)
    if n < 2:
        return []
    k = min(k, n - 1)
    _, idx = cKDTree(points).query(points, k=k + 1)
    edges = {tuple(sorted((i, int(j)))) for i in range(n) for j in idx[i, 1:]}
    return sorted(edges)


def _vertex(p: Sequence[float]) -> str:
    c = list(p)[:3] + [0.0] * max(0, 3 - len(p))
    return "v " + " ".join(_num(v) for v in c)


def write_obj(
    path: Path,
    polylines: Sequence[Sequence[Sequence[float]]] = (),
    meshes: Sequence[tuple[np.ndarray, list[tuple[int, int]]]] = (),
    comment: str = "",
) -> Path:
    """Vertices and ``l`` edges; 2-d points get z = 0, higher dimensions keep the first three coordinates."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {comment}"] if comment else []
    base = 1
    for poly in polylines:
        lines.extend(_vertex(p) for p in poly)
        if len(poly) > 1:
            lines.append("l " + " ".join(str(base + i) for i in range(len(poly))))
        base += len(poly)
    for pts, edges in meshes:
        lines.extend(_vertex(p) for p in pts)
        lines.extend(f"l {base + i} {base + j}" for i, j in edges)
        base += len(pts)
    path.write_text("\n".join(lines) + "\n")
    return path


def trajectory_polyline(traj: Trajectory) -> list[tuple[float, ...]]:
    return [p.coords for p in traj.points]

