"""Mesh file ingestion and export: OFF/COFF, OBJ (with vertex colors), PLY.

Readers accept OFF/COFF, OBJ with the common ``v x y z r g b`` color
extension, and PLY in ascii or binary-little-endian with optional
red/green/blue vertex properties. Colors read from 8-bit channels are
scaled to [0, 1] and tagged sRGB. Writers emit the same three formats;
PLY can be written ascii (default, used for scalar-field visualization
exports) or binary-little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import MeshParseError, MeshValidationError
from .mesh import COLORSPACE_SRGB, TexturedMesh

_EXT_FORMATS = {".off": "off", ".coff": "off", ".obj": "obj", ".ply": "ply"}


def load_mesh(path, format_hint: str | None = None) -> TexturedMesh:
    """Load and validate a mesh, inferring the format from the extension.

    Raises MeshParseError (with a line/byte location) on malformed input
    and MeshValidationError when the parsed data violates a mesh invariant.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    fmt = format_hint or _EXT_FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise MeshParseError(path, f"cannot infer format from suffix {path.suffix!r}")
    if fmt == "off":
        return _load_off(path)
    if fmt == "obj":
        return _load_obj(path)
    if fmt == "ply":
        return _load_ply(path)
    raise MeshParseError(path, f"unknown format {fmt!r}")


def save_mesh(mesh: TexturedMesh, path, format_hint: str | None = None, binary: bool = False) -> None:
    """Write a mesh in OFF/COFF, OBJ, or PLY format.

    Colored meshes must be in sRGB; PLY and OFF store colors as 8-bit
    channels, OBJ keeps full float precision.
    """
    path = Path(path)
    fmt = format_hint or _EXT_FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise ValueError(f"cannot infer format from suffix {path.suffix!r}")
    if mesh.has_colors and mesh.colorspace != COLORSPACE_SRGB:
        raise MeshValidationError("only sRGB colors can be written to mesh files")
    if fmt == "off":
        _save_off(mesh, path)
    elif fmt == "obj":
        _save_obj(mesh, path)
    elif fmt == "ply":
        _save_ply(mesh, path, binary=binary)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _fmt_float(x) -> str:
    # repr round-trips exactly through float(), unlike %.9g
    return repr(float(x))


def _scale_8bit(raw: np.ndarray) -> np.ndarray:
    # Heuristic shared by OFF and PLY ascii: byte-valued channels are
    # scaled to [0,1]; values already in [0,1] pass through.
    if raw.size and raw.max() > 1.0:
        return raw / 255.0
    return raw


# ---------------------------------------------------------------- OFF / COFF


def _data_lines(path):
    """Yield (lineno, stripped_text) skipping blanks and comments."""
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if text:
                yield lineno, text


def _load_off(path) -> TexturedMesh:
    lines = _data_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise MeshParseError(path, "empty file", line=1) from None
    counts_text = None
    if header in ("OFF", "COFF"):
        pass
    elif header.startswith(("OFF", "COFF")):
        # header and counts on one line ("OFF 8 6 0")
        tag, _, rest = header.partition(" ")
        header, counts_text = tag, rest.strip()
    else:
        raise MeshParseError(path, "OFF header missing", line=lineno)
    if counts_text is None:
        try:
            lineno, counts_text = next(lines)
        except StopIteration:
            raise MeshParseError(path, "missing vertex/face counts", line=lineno) from None
    parts = counts_text.split()
    if len(parts) < 2:
        raise MeshParseError(path, f"bad count line {counts_text!r}", line=lineno)
    try:
        nv, nf = int(parts[0]), int(parts[1])
    except ValueError:
        raise MeshParseError(path, f"bad count line {counts_text!r}", line=lineno) from None

    verts = np.empty((nv, 3))
    colors = []
    for i in range(nv):
        try:
            lineno, text = next(lines)
        except StopIteration:
            raise MeshParseError(path, f"expected {nv} vertices, file ended at {i}", line=lineno) from None
        fields = text.split()
        if len(fields) < 3:
            raise MeshParseError(path, f"vertex needs 3 coordinates, got {text!r}", line=lineno)
        try:
            verts[i] = [float(x) for x in fields[:3]]
            extra = [float(x) for x in fields[3:]]
        except ValueError:
            raise MeshParseError(path, f"bad vertex line {text!r}", line=lineno) from None
        if len(extra) >= 3:
            colors.append(extra[:3])

    tris = []
    for j in range(nf):
        try:
            lineno, text = next(lines)
        except StopIteration:
            raise MeshParseError(path, f"expected {nf} faces, file ended at {j}", line=lineno) from None
        fields = text.split()
        try:
            k = int(fields[0])
            idx = [int(x) for x in fields[1 : 1 + k]]
        except (ValueError, IndexError):
            raise MeshParseError(path, f"bad face line {text!r}", line=lineno) from None
        if len(idx) != k or k < 3:
            raise MeshParseError(path, f"face lists {k} indices but has {len(idx)}", line=lineno)
        for a, b in zip(idx[1:], idx[2:]):  # fan-triangulate polygons
            tris.append((idx[0], a, b))

    color_arr = None
    if colors:
        if len(colors) != nv:
            raise MeshValidationError(
                f"color count {len(colors)} does not match vertex count {nv}"
            )
        color_arr = _scale_8bit(np.asarray(colors))
    return TexturedMesh(verts, np.asarray(tris, dtype=np.int64).reshape(-1, 3), color_arr)


def _save_off(mesh: TexturedMesh, path) -> None:
    out = []
    out.append("COFF" if mesh.has_colors else "OFF")
    out.append(f"{mesh.n_vertices} {mesh.n_triangles} 0")
    if mesh.has_colors:
        rgb = np.rint(np.clip(mesh.colors, 0.0, 1.0) * 255.0).astype(np.int64)
        for p, c in zip(mesh.vertices, rgb):
            out.append(
                f"{_fmt_float(p[0])} {_fmt_float(p[1])} {_fmt_float(p[2])} {c[0]} {c[1]} {c[2]}"
            )
    else:
        for p in mesh.vertices:
            out.append(f"{_fmt_float(p[0])} {_fmt_float(p[1])} {_fmt_float(p[2])}")
    for t in mesh.triangles:
        out.append(f"3 {t[0]} {t[1]} {t[2]}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# ------------------------------------------------------------------------ OBJ


def _load_obj(path) -> TexturedMesh:
    verts, colors, tris = [], [], []
    for lineno, text in _data_lines(path):
        fields = text.split()
        tag = fields[0]
        if tag == "v":
            vals = fields[1:]
            if len(vals) not in (3, 6):
                raise MeshParseError(
                    path, f"'v' takes 3 coords or 3 coords + rgb, got {len(vals)} values", line=lineno
                )
            try:
                nums = [float(x) for x in vals]
            except ValueError:
                raise MeshParseError(path, f"bad vertex line {text!r}", line=lineno) from None
            verts.append(nums[:3])
            if len(nums) == 6:
                colors.append(nums[3:])
        elif tag == "f":
            try:
                idx = [int(f.split("/")[0]) for f in fields[1:]]
            except ValueError:
                raise MeshParseError(path, f"bad face line {text!r}", line=lineno) from None
            if len(idx) < 3:
                raise MeshParseError(path, "face needs at least 3 vertices", line=lineno)
            idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
            for a, b in zip(idx[1:], idx[2:]):
                tris.append((idx[0], a, b))
        # vn/vt/usemtl/etc. are ignored
    if not verts:
        raise MeshParseError(path, "no vertices found", line=1)
    color_arr = None
    if colors:
        if len(colors) != len(verts):
            raise MeshValidationError(
                f"color count {len(colors)} does not match vertex count {len(verts)}"
            )
        color_arr = _scale_8bit(np.asarray(colors))
    return TexturedMesh(
        np.asarray(verts), np.asarray(tris, dtype=np.int64).reshape(-1, 3), color_arr
    )


def _save_obj(mesh: TexturedMesh, path) -> None:
    out = []
    if mesh.has_colors:
        for p, c in zip(mesh.vertices, mesh.colors):
            out.append(
                "v "
                + " ".join(_fmt_float(x) for x in p)
                + " "
                + " ".join(_fmt_float(x) for x in c)
            )
    else:
        for p in mesh.vertices:
            out.append("v " + " ".join(_fmt_float(x) for x in p))
    for t in mesh.triangles:
        out.append(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# ------------------------------------------------------------------------ PLY

_PLY_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


def _load_ply(path) -> TexturedMesh:
    raw = Path(path).read_bytes()
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply") or end < 0:
        raise MeshParseError(path, "not a PLY file (no end_header)", line=1)
    body_start = raw.index(b"\n", end) + 1
    header_lines = raw[:end].decode("ascii", errors="replace").splitlines()

    fmt = None
    elements = []  # (name, count, [(prop_name, dtype, is_list, count_dtype)])
    for lineno, text in enumerate(header_lines, start=1):
        fields = text.strip().split()
        if not fields or fields[0] == "comment":
            continue
        if fields[0] == "format":
            fmt = fields[1]
            if fmt not in ("ascii", "binary_little_endian"):
                raise MeshParseError(path, f"unsupported PLY format {fmt!r}", line=lineno)
        elif fields[0] == "element":
            elements.append((fields[1], int(fields[2]), []))
        elif fields[0] == "property":
            if not elements:
                raise MeshParseError(path, "property before element", line=lineno)
            if fields[1] == "list":
                cdt, dt, name = fields[2], fields[3], fields[4]
                if cdt not in _PLY_DTYPES or dt not in _PLY_DTYPES:
                    raise MeshParseError(path, f"unsupported list types in {text!r}", line=lineno)
                elements[-1][2].append((name, _PLY_DTYPES[dt], True, _PLY_DTYPES[cdt]))
            else:
                if fields[1] not in _PLY_DTYPES:
                    raise MeshParseError(path, f"unsupported property type {fields[1]!r}", line=lineno)
                elements[-1][2].append((fields[2], _PLY_DTYPES[fields[1]], False, None))
    if fmt is None:
        raise MeshParseError(path, "missing format line", line=1)

    if fmt == "ascii":
        return _parse_ply_ascii(path, raw[body_start:].decode("ascii", errors="replace"),
                                elements, header_end_line=len(header_lines) + 1)
    return _parse_ply_binary(path, raw, body_start, elements)


def _extract_vertex_arrays(path, names, columns):
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise MeshParseError(path, f"vertex element missing property {axis!r}")
    verts = np.column_stack([columns["x"], columns["y"], columns["z"]]).astype(np.float64)
    colors = None
    if all(ch in names for ch in ("red", "green", "blue")):
        rgb = np.column_stack([columns["red"], columns["green"], columns["blue"]])
        was_8bit = all(columns[ch].dtype.kind == "u" for ch in ("red", "green", "blue"))
        colors = rgb.astype(np.float64) / 255.0 if was_8bit else rgb.astype(np.float64)
    return verts, colors


def _parse_ply_ascii(path, body, elements, header_end_line):
    tokens_by_line = [ln.split() for ln in body.splitlines()]
    cursor = 0
    verts = colors = tris = None
    for name, count, props in elements:
        if name == "vertex":
            names = [p[0] for p in props]
            if any(p[2] for p in props):
                raise MeshParseError(path, "list property on vertex element unsupported")
            rows = np.empty((count, len(props)))
            for i in range(count):
                lineno = header_end_line + cursor + 1
                if cursor >= len(tokens_by_line):
                    raise MeshParseError(path, "unexpected end of vertex data", line=lineno)
                toks = tokens_by_line[cursor]
                cursor += 1
                if len(toks) < len(props):
                    raise MeshParseError(path, f"vertex row has {len(toks)} fields, need {len(props)}", line=lineno)
                try:
                    rows[i] = [float(x) for x in toks[: len(props)]]
                except ValueError:
                    raise MeshParseError(path, f"bad vertex row {' '.join(toks)!r}", line=lineno) from None
            columns = {nm: rows[:, j] for j, nm in enumerate(names)}
            # uchar columns arrive as floats here; detect 8-bit via declared dtype
            for j, p in enumerate(props):
                if p[1] == "u1":
                    columns[p[0]] = rows[:, j].astype(np.uint8)
            verts, colors = _extract_vertex_arrays(path, names, columns)
        elif name == "face":
            tri_list = []
            for i in range(count):
                lineno = header_end_line + cursor + 1
                if cursor >= len(tokens_by_line):
                    raise MeshParseError(path, "unexpected end of face data", line=lineno)
                toks = tokens_by_line[cursor]
                cursor += 1
                try:
                    k = int(toks[0])
                    idx = [int(x) for x in toks[1 : 1 + k]]
                except (ValueError, IndexError):
                    raise MeshParseError(path, f"bad face row {' '.join(toks)!r}", line=lineno) from None
                if len(idx) != k:
                    raise MeshParseError(path, f"face lists {k} indices but has {len(idx)}", line=lineno)
                for a, b in zip(idx[1:], idx[2:]):
                    tri_list.append((idx[0], a, b))
            tris = np.asarray(tri_list, dtype=np.int64).reshape(-1, 3)
        else:
            cursor += count  # skip unknown elements
    if verts is None:
        raise MeshParseError(path, "no vertex element")
    if tris is None:
        tris = np.empty((0, 3), dtype=np.int64)
    return TexturedMesh(verts, tris, colors)


def _parse_ply_binary(path, raw, offset, elements):
    verts = colors = tris = None
    for name, count, props in elements:
        if name == "vertex":
            if any(p[2] for p in props):
                raise MeshParseError(path, "list property on vertex element unsupported", byte_offset=offset)
            dtype = np.dtype([(p[0], "<" + p[1]) for p in props])
            nbytes = dtype.itemsize * count
            if offset + nbytes > len(raw):
                raise MeshParseError(path, "vertex data truncated", byte_offset=len(raw))
            rows = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
            offset += nbytes
            names = [p[0] for p in props]
            columns = {nm: rows[nm] for nm in names}
            verts, colors = _extract_vertex_arrays(path, names, columns)
        elif name == "face":
            if len(props) != 1 or not props[0][2]:
                raise MeshParseError(path, "face element must hold a single list property", byte_offset=offset)
            _, idx_dt, _, cnt_dt = props[0]
            cnt_np, idx_np = np.dtype("<" + cnt_dt), np.dtype("<" + idx_dt)
            tri_list = []
            for _ in range(count):
                if offset + cnt_np.itemsize > len(raw):
                    raise MeshParseError(path, "face data truncated", byte_offset=len(raw))
                k = int(np.frombuffer(raw, dtype=cnt_np, count=1, offset=offset)[0])
                offset += cnt_np.itemsize
                if offset + k * idx_np.itemsize > len(raw):
                    raise MeshParseError(path, "face data truncated", byte_offset=len(raw))
                idx = np.frombuffer(raw, dtype=idx_np, count=k, offset=offset).astype(np.int64)
                offset += k * idx_np.itemsize
                for a, b in zip(idx[1:], idx[2:]):
                    tri_list.append((int(idx[0]), int(a), int(b)))
            tris = np.asarray(tri_list, dtype=np.int64).reshape(-1, 3)
        else:
            dtype = np.dtype([(p[0], "<" + p[1]) for p in props if not p[2]])
            offset += dtype.itemsize * count
    if verts is None:
        raise MeshParseError(path, "no vertex element")
    if tris is None:
        tris = np.empty((0, 3), dtype=np.int64)
    return TexturedMesh(verts, tris, colors)


def _save_ply(mesh: TexturedMesh, path, binary=False) -> None:
    n, m = mesh.n_vertices, mesh.n_triangles
    header = ["ply", "format binary_little_endian 1.0" if binary else "format ascii 1.0"]
    header += [f"element vertex {n}", "property double x", "property double y", "property double z"]
    if mesh.has_colors:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header += [f"element face {m}", "property list uchar int vertex_indices", "end_header"]

    rgb = None
    if mesh.has_colors:
        rgb = np.rint(np.clip(mesh.colors, 0.0, 1.0) * 255.0).astype(np.uint8)

    if binary:
        chunks = [("\n".join(header) + "\n").encode("ascii")]
        if rgb is not None:
            vdt = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"),
                            ("red", "u1"), ("green", "u1"), ("blue", "u1")])
            rows = np.empty(n, dtype=vdt)
            rows["x"], rows["y"], rows["z"] = mesh.vertices.T
            rows["red"], rows["green"], rows["blue"] = rgb.T
        else:
            rows = np.ascontiguousarray(mesh.vertices, dtype="<f8")
        chunks.append(rows.tobytes())
        face_pack = struct.Struct("<B3i").pack
        chunks.extend(face_pack(3, *map(int, t)) for t in mesh.triangles)
        Path(path).write_bytes(b"".join(chunks))
        return

    out = list(header)
    if rgb is not None:
        for p, c in zip(mesh.vertices, rgb):
            out.append(
                f"{_fmt_float(p[0])} {_fmt_float(p[1])} {_fmt_float(p[2])} {c[0]} {c[1]} {c[2]}"
            )
    else:
        for p in mesh.vertices:
            out.append(f"{_fmt_float(p[0])} {_fmt_float(p[1])} {_fmt_float(p[2])}")
    for t in mesh.triangles:
        out.append(f"3 {t[0]} {t[1]} {t[2]}")
    Path(path).write_text("\n".join(out) + "\n", encoding="ascii")
