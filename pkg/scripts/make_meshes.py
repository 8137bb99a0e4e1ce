"""Regenerate the OFF meshes bundled in ``hodgewave/data/meshes``.

Run from the repository root::

    python scripts/make_meshes.py
"""

from pathlib import Path

import numpy as np

from hodgewave.mesh import RawMesh, format_off

OUT = Path(__file__).resolve().parents[1] / "src" / "hodgewave" / "data" / "meshes"


def triangle():
    return RawMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]], 2)


def square():
    return RawMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2], [0, 2, 3]], 2)


def rectangle(nx, ny, lx=1.0, ly=0.5):
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])

    def vid(i, j):
        return i * (ny + 1) + j

    cells = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            cells += [[a, b, c], [a, c, d]]
    return RawMesh(verts, cells, 2)


def annulus(nr=4, nt=24, r0=0.5, r1=1.0):
    rs = np.linspace(r0, r1, nr + 1)
    ts = np.linspace(0.0, 2 * np.pi, nt, endpoint=False)
    verts = [[r * np.cos(t), r * np.sin(t), 0.0] for r in rs for t in ts]

    def vid(i, j):
        return i * nt + j % nt

    cells = []
    for i in range(nr):
        for j in range(nt):
            a, b, c, d = vid(i, j), vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)
            cells += [[a, b, c], [a, c, d]]
    return RawMesh(verts, cells, 2)


def icosphere(level):
    t = (1 + 5**0.5) / 2
    verts = [
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ]
    faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = [list(np.array(v, float) / np.linalg.norm(v)) for v in verts]
    for _ in range(level):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = (np.array(verts[a]) + np.array(verts[b])) / 2
                verts.append(list(m / np.linalg.norm(m)))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return RawMesh(np.array(verts), faces, 2)


def tetrahedron():
    return RawMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2, 3]], 3)


def cube(m=2):
    """Unit cube, m^3 sub-cubes each split into 6 tetrahedra (Kuhn)."""
    g = np.linspace(0.0, 1.0, m + 1)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    verts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def vid(i, j, k):
        return (i * (m + 1) + j) * (m + 1) + k

    paths = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    cells = []
    for i in range(m):
        for j in range(m):
            for k in range(m):
                for p in paths:
                    cur = [i, j, k]
                    tet = [vid(*cur)]
                    for axis in p:
                        cur[axis] += 1
                        tet.append(vid(*cur))
                    cells.append(tet)
    return RawMesh(verts, cells, 3)


def flat_torus(m=8):
    """Structured torus embedded isometrically-per-cell in R^4 (Clifford)."""
    ts = np.linspace(0.0, 2 * np.pi, m, endpoint=False)
    verts = [[np.cos(a), np.sin(a), np.cos(b), np.sin(b)] for a in ts for b in ts]

    def vid(i, j):
        return (i % m) * m + j % m

    cells = []
    for i in range(m):
        for j in range(m):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            cells += [[a, b, c], [a, c, d]]
    return RawMesh(np.array(verts), cells, 2)


def mobius():
    """The 5-vertex triangulation of the Moebius strip."""
    verts = []
    for i in range(5):
        t = 2 * np.pi * i / 5
        s = 0.3 if i % 2 else -0.3
        verts.append([(1 + s * np.cos(t / 2)) * np.cos(t), (1 + s * np.cos(t / 2)) * np.sin(t), s * np.sin(t / 2)])
    faces = [[i, (i + 1) % 5, (i + 2) % 5] for i in range(5)]
    return RawMesh(np.array(verts), faces, 2)


def segment():
    return RawMesh([[0.0], [0.5], [1.0]], [[0, 1], [1, 2]], 1)


MESHES = {
    "triangle": triangle,
    "square": square,
    "rectangle_8": lambda: rectangle(8, 4),
    "rectangle_16": lambda: rectangle(16, 8),
    "rectangle_32": lambda: rectangle(32, 16),
    "annulus": annulus,
    "icosphere_1": lambda: icosphere(1),
    "icosphere_2": lambda: icosphere(2),
    "tetrahedron": tetrahedron,
    "cube": cube,
    "torus": flat_torus,
    "mobius": mobius,
    "segment": segment,
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, make in MESHES.items():
        (OUT / f"{name}.off").write_text(format_off(make()))
        print(f"wrote {name}.off")


if __name__ == "__main__":
    main()
