"""File formats: binary matrices, model containers, CSV, and run configs.

Binary matrix (``.qmrm``), little-endian throughout::

    b"QMRM" | version u32 | rows u64 | cols u64 | rows*cols float64 (column-major)

Model container (``.qmdl``)::

    b"QMDL" | version u32 | section count u32
    per section: name length u32 | UTF-8 name | rows u64 | cols u64 | float64 payload (column-major)
    metadata count u32
    per entry: key length u32 | UTF-8 key | value length u32 | UTF-8 value

CSV files are comma-separated with LF line endings and 17 significant
digits, which round-trips every float64.
"""

from __future__ import annotations

import io
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError

MATRIX_MAGIC = b"QMRM"
MODEL_MAGIC = b"QMDL"
VERSION = 1

_MATRIX_HEADER = struct.Struct("<4sIQQ")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def atomic_write(path, data, mode="wb"):
    """Write to a temporary file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _as_matrix(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of shape {m.shape}")
    return m


def _payload(m):
    return np.asarray(m, dtype="<f8").tobytes(order="F")


def _read(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc


# -- binary matrix ---------------------------------------------------------

def matrix_to_bytes(m):
    m = _as_matrix(m)
    rows, cols = m.shape
    return _MATRIX_HEADER.pack(MATRIX_MAGIC, VERSION, rows, cols) + _payload(m)


def matrix_from_bytes(buf, source="<bytes>"):
    if len(buf) < _MATRIX_HEADER.size:
        raise FormatError(f"{source}: truncated header")
    magic, version, rows, cols = _MATRIX_HEADER.unpack_from(buf)
    if magic != MATRIX_MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {MATRIX_MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{source}: unsupported format version {version} (expected {VERSION})")
    expected = _MATRIX_HEADER.size + 8 * rows * cols
    if len(buf) != expected:
        raise FormatError(f"{source}: {len(buf)} bytes, header implies {expected}")
    data = np.frombuffer(buf, dtype="<f8", offset=_MATRIX_HEADER.size, count=rows * cols)
    m = data.reshape((rows, cols), order="F").astype(np.float64)
    if not np.all(np.isfinite(m)):
        raise FormatError(f"{source}: matrix contains NaN or Inf")
    return m


def write_matrix_binary(m, path):
    """Write a matrix in the ``QMRM`` format."""
    try:
        atomic_write(path, matrix_to_bytes(m))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_matrix_binary(path):
    return matrix_from_bytes(_read(path), source=os.fspath(path))


# -- CSV -------------------------------------------------------------------

def format_float(x):
    return f"{float(x):.17g}"


def matrix_to_csv(m):
    m = _as_matrix(m)
    return "".join(",".join(format_float(v) for v in row) + "\n" for row in m)


def write_matrix_csv(m, path):
    try:
        atomic_write(path, matrix_to_csv(m), mode="w")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def parse_matrix_csv(text, source="<string>"):
    """Parse a rectangular CSV of decimal floats, one matrix row per line."""
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(",")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            bad = next(c for c in cells if not _is_float(c))
            raise FormatError(f"{source}: line {lineno}: non-numeric cell {bad.strip()!r}") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise FormatError(f"{source}: line {lineno}: expected {width} columns, found {len(values)}")
        if not all(math.isfinite(v) for v in values):
            raise FormatError(f"{source}: line {lineno}: NaN or Inf entry")
        rows.append(values)
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=np.float64)


def _is_float(cell):
    try:
        float(cell)
        return True
    except ValueError:
        return False


def read_matrix_csv(path):
    with open(path, "r", newline="") as fh:
        return parse_matrix_csv(fh.read(), source=os.fspath(path))


def write_table_csv(header, rows, path):
    """CSV with a header line; floats get 17 significant digits."""
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return format_float(v)
        return str(v)

    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(cell(v) for v in row) + "\n")
    atomic_write(path, buf.getvalue(), mode="w")


# -- container -------------------------------------------------------------

def _pack_str(s):
    raw = s.encode("utf-8")
    return _U32.pack(len(raw)) + raw


def container_to_bytes(sections, metadata):
    names = list(sections)
    if len(set(names)) != len(names):
        raise FormatError("section names must be unique")
    out = [MODEL_MAGIC, _U32.pack(VERSION), _U32.pack(len(names))]
    for name in names:
        m = _as_matrix(sections[name])
        out += [_pack_str(name), _U64.pack(m.shape[0]), _U64.pack(m.shape[1]), _payload(m)]
    out.append(_U32.pack(len(metadata)))
    for key in sorted(metadata):
        out += [_pack_str(str(key)), _pack_str(str(metadata[key]))]
    return b"".join(out)


class _Reader:
    def __init__(self, buf, source):
        self.buf, self.pos, self.source = buf, 0, source

    def take(self, size):
        if self.pos + size > len(self.buf):
            raise FormatError(f"{self.source}: truncated file")
        chunk = self.buf[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def u32(self):
        return _U32.unpack(self.take(4))[0]

    def u64(self):
        return _U64.unpack(self.take(8))[0]

    def string(self):
        try:
            return self.take(self.u32()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self.source}: invalid UTF-8 string") from exc


def container_from_bytes(buf, source="<bytes>"):
    rd = _Reader(buf, source)
    magic = rd.take(4)
    if magic != MODEL_MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}, expected {MODEL_MAGIC!r}")
    version = rd.u32()
    if version != VERSION:
        raise FormatError(f"{source}: unsupported format version {version} (expected {VERSION}); refusing to load")
    sections = {}
    for _ in range(rd.u32()):
        name = rd.string()
        rows, cols = rd.u64(), rd.u64()
        data = np.frombuffer(rd.take(8 * rows * cols), dtype="<f8")
        if name in sections:
            raise FormatError(f"{source}: duplicate section {name!r}")
        m = data.reshape((rows, cols), order="F").astype(np.float64)
        if not np.all(np.isfinite(m)):
            raise FormatError(f"{source}: section {name!r} contains NaN or Inf")
        sections[name] = m
    metadata = {}
    for _ in range(rd.u32()):
        key = rd.string()
        metadata[key] = rd.string()
    if rd.pos != len(buf):
        raise FormatError(f"{source}: {len(buf) - rd.pos} trailing bytes")
    return sections, metadata


def write_container(path, sections, metadata):
    atomic_write(path, container_to_bytes(sections, metadata))


def read_container(path):
    return container_from_bytes(_read(path), source=os.fspath(path))


# -- models ----------------------------------------------------------------

def format_pairs(pairs):
    """``"1-1 1-2 2-2"`` (one-based) for a list of zero-based pairs."""
    return " ".join(f"{i + 1}-{j + 1}" for i, j in pairs)


def parse_pairs(text):
    pairs = []
    for token in text.split():
        try:
            i, j = token.split("-")
            pairs.append((int(i) - 1, int(j) - 1))
        except ValueError:
            raise FormatError(f"bad index pair {token!r}") from None
    return tuple(pairs)


def model_to_parts(manifold, ops=None, extra=None):
    sections = {
        "s_ref": manifold.s_ref[:, None],
        "V": manifold.V,
        "singular_values": manifold.pod.singular_values[:, None],
        "Vbar": manifold.vbar,
    }
    meta = {
        "kind": "model",
        "r": str(manifold.r),
        "q": str(manifold.q),
        "gamma": repr(float(manifold.gamma)),
        "ref_mode": manifold.pod.ref_mode,
        "pairs": format_pairs(manifold.fmap.pairs),
    }
    if ops is not None:
        if ops.r != manifold.r or ops.fmap != manifold.fmap:
            raise FormatError("operators and manifold disagree on r or the feature map")
        sections["c_hat"] = ops.c_hat[:, None]
        sections["A_hat"] = ops.A_hat
        if ops.H_hat is not None:
            sections["H_hat"] = ops.H_hat
        meta["time_order"] = str(ops.time_order)
    # reserved keys describe the stored arrays and always win over extras
    meta = {**{str(k): str(v) for k, v in (extra or {}).items()}, **meta}
    return sections, meta


def save_model(manifold, ops, path, extra=None):
    """Persist a manifold and (optionally) its reduced operators.

    ``extra`` adds string metadata such as ``lambda1``/``lambda2``.
    """
    sections, meta = model_to_parts(manifold, ops, extra)
    write_container(path, sections, meta)


def model_from_parts(sections, meta, source="<model>"):
    from .manifold import PodBasis, QuadFeatureMap, QuadraticManifold
    from .opinf import RomOperators

    def need(name):
        if name not in sections:
            raise FormatError(f"{source}: missing section {name!r}")
        return sections[name]

    try:
        r, q = int(meta["r"]), int(meta["q"])
        gamma = float(meta.get("gamma", "0"))
        pairs = parse_pairs(meta.get("pairs", ""))
        ref_mode = meta.get("ref_mode", "time_mean")
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{source}: bad or missing metadata ({exc})") from None
    V, vbar, s_ref = need("V"), need("Vbar"), need("s_ref")
    n = V.shape[0]
    if V.shape != (n, r):
        raise FormatError(f"{source}: V is {V.shape}, metadata says r={r}")
    if vbar.shape != (n, q):
        raise FormatError(f"{source}: Vbar is {vbar.shape}, expected {(n, q)}")
    if s_ref.shape != (n, 1):
        raise FormatError(f"{source}: s_ref is {s_ref.shape}, expected {(n, 1)}")
    if len(pairs) != q:
        raise FormatError(f"{source}: {len(pairs)} index pairs for q={q}")
    try:
        fmap = QuadFeatureMap(r, pairs)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None
    sv = need("singular_values")[:, 0]
    try:
        manifold = QuadraticManifold(PodBasis(V, sv, s_ref[:, 0], ref_mode), vbar, fmap, gamma)
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None

    if "A_hat" not in sections:
        return manifold, None
    c, A = need("c_hat"), need("A_hat")
    H = sections.get("H_hat")
    if c.shape != (r, 1) or A.shape != (r, r):
        raise FormatError(f"{source}: operator shapes {c.shape}, {A.shape} inconsistent with r={r}")
    if q and (H is None or H.shape != (r, q)):
        shape = None if H is None else H.shape
        raise FormatError(f"{source}: H_hat is {shape}, expected {(r, q)}")
    if not q and H is not None and H.size:
        raise FormatError(f"{source}: H_hat present but q=0")
    try:
        ops = RomOperators(c[:, 0], A, H if q else None, fmap, int(meta.get("time_order", "1")))
    except ValueError as exc:
        raise FormatError(f"{source}: {exc}") from None
    return manifold, ops


def load_model(path):
    """Inverse of :func:`save_model`; returns ``(manifold, ops or None)``."""
    sections, meta = read_container(path)
    if meta.get("kind", "model") != "model":
        raise FormatError(f"{path}: not a model file (kind={meta.get('kind')!r})")
    return model_from_parts(sections, meta, source=os.fspath(path))


def load_model_metadata(path):
    return read_container(path)[1]


def save_snapshots(snapshots, path, extra=None):
    sections = {"states": snapshots.states, "times": snapshots.times[:, None]}
    meta = {"kind": "snapshots"}
    if snapshots.params is not None:
        sections["params"] = snapshots.params[:, None]
    if snapshots.derivatives is not None:
        sections["derivatives"] = snapshots.derivatives
        meta["derivative_order"] = str(snapshots.derivative_order)
    for key, value in (extra or {}).items():
        meta[key] = str(value)
    write_container(path, sections, meta)


def load_snapshots(path):
    from .manifold import SnapshotSet

    sections, meta = read_container(path)
    if meta.get("kind") != "snapshots":
        raise FormatError(f"{path}: not a snapshot file")
    params = sections.get("params")
    deriv = sections.get("derivatives")
    order = int(meta["derivative_order"]) if deriv is not None else None
    try:
        ss = SnapshotSet(
            sections["states"], sections["times"][:, 0],
            params=None if params is None else params[:, 0],
            derivatives=deriv, derivative_order=order,
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: inconsistent snapshot file ({exc})") from None
    return ss, meta


# -- run configuration -----------------------------------------------------

INT_KEYS = {"n", "k", "r", "q_target", "seed", "mu_test", "record_stride", "nx", "ny",
            "substeps", "r_min", "r_max", "point", "time_order", "n_lambdas"}
FLOAT_KEYS = {"gamma", "lambda1", "lambda2", "dt", "t_final", "kappa", "c", "width",
              "data_t_final", "eps_tol", "record_dt"}
LIST_KEYS = {"mu", "x0", "gamma_grid", "lambda1_grid", "lambda2_grid", "r_list"}
STR_KEYS = {"problem", "ref_mode", "manifold", "scheme"}


@dataclass
class RunConfig:
    """Flat ``key = value`` configuration with typed access.

    Unknown keys are kept as strings so experiments can carry extra
    settings without a schema change.
    """

    values: dict = field(default_factory=dict)
    source: str = "<config>"

    def __contains__(self, key):
        return key in self.values

    def require(self, *keys):
        missing = [k for k in keys if k not in self.values]
        if missing:
            raise ConfigError(f"{self.source}: missing required key(s): {', '.join(missing)}")

    def get_str(self, key, default=None, required=False):
        if key not in self.values:
            if required:
                raise ConfigError(f"{self.source}: missing required key: {key}")
            return default
        return self.values[key]

    def get_int(self, key, default=None, required=False):
        if key not in self.values:
            if required:
                raise ConfigError(f"{self.source}: missing required key: {key}")
            return default
        return _parse_int(key, self.values[key], self.source)

    def get_float(self, key, default=None, required=False):
        if key not in self.values:
            if required:
                raise ConfigError(f"{self.source}: missing required key: {key}")
            return default
        return _parse_float(key, self.values[key], self.source)

    def get_floats(self, key, default=None, required=False):
        if key not in self.values:
            if required:
                raise ConfigError(f"{self.source}: missing required key: {key}")
            return default
        return [_parse_float(key, v, self.source) for v in _split_list(self.values[key])]

    def with_overrides(self, overrides):
        merged = dict(self.values)
        for key, value in overrides.items():
            if value is not None:
                merged[key] = str(value)
        cfg = RunConfig(merged, self.source)
        cfg.validate()
        return cfg

    def validate(self):
        for key, raw in self.values.items():
            if key in INT_KEYS:
                _parse_int(key, raw, self.source)
            elif key in FLOAT_KEYS:
                _parse_float(key, raw, self.source)
            elif key in LIST_KEYS:
                for v in _split_list(raw):
                    _parse_float(key, v, self.source)
        for key in ("dt", "t_final"):
            if key in self.values and not self.get_float(key) > 0:
                raise ConfigError(f"{self.source}: {key} must be positive")
        if "r" in self.values:
            r = self.get_int("r")
            if r <= 0:
                raise ConfigError(f"{self.source}: r must be positive")
            n, k = self.get_int("n"), self.get_int("k")
            if n is not None and k is not None and r > min(n, k):
                raise ConfigError(f"{self.source}: r={r} exceeds min(n, k)={min(n, k)}")
        if "ref_mode" in self.values and self.values["ref_mode"] not in ("initial", "time_mean"):
            raise ConfigError(f"{self.source}: ref_mode must be 'initial' or 'time_mean'")
        return self

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in sorted(self.values.items()))


def _split_list(raw):
    return [v for v in (p.strip() for p in raw.replace(";", ",").split(",")) if v]


def _parse_float(key, raw, source):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{source}: {key} = {raw!r} is not a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{source}: {key} must be finite, got {raw!r}")
    return value


def _parse_int(key, raw, source):
    value = _parse_float(key, raw, source)
    if value != int(value):
        raise ConfigError(f"{source}: {key} = {raw!r} is not an integer")
    return int(value)


def parse_run_config(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}: line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}: line {lineno}: duplicate key {key!r}")
        values[key] = value
    return RunConfig(values, source).validate()


def load_run_config(path):
    try:
        with open(path, "r") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text, source=os.fspath(path))
