import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..exceptions import CheckpointVersionError, CorruptCheckpointError, DataFileError

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
_HEADER = struct.Struct("<8sBQ")


def setup_logging(quiet=False):
    """Configure the root logger once for command-line runs"""
    logging.basicConfig(level=logging.WARNING if quiet else logging.INFO, format=LOG_FORMAT, force=True)


def write_container(path, magic, version, meta, arrays):
    """
    Write ``magic`` (8 bytes), a version byte, the metadata length as a
    little-endian uint64, UTF-8 JSON metadata, then each array as raw
    little-endian float64 in the order listed under ``meta["arrays"]``.
    """
    meta = dict(meta)
    meta["arrays"] = [{"name": name, "shape": list(np.shape(a))} for name, a in arrays.items()]
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(magic, version, len(blob)))
            fh.write(blob)
            for a in arrays.values():
                fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    except OSError as e:
        raise DataFileError(f"cannot write {path}: {e}") from e


def read_container(path, magic, version):
    """Inverse of write_container; returns ``(meta, arrays)``"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise DataFileError(f"cannot read {path}: {e}") from e
    if len(raw) < _HEADER.size:
        raise CorruptCheckpointError(f"{path} is truncated ({len(raw)} bytes)")
    found_magic, found_version, meta_len = _HEADER.unpack_from(raw)
    if found_magic != magic:
        raise CorruptCheckpointError(f"{path} does not start with {magic!r}")
    if found_version != version:
        raise CheckpointVersionError(found_version, version)
    start = _HEADER.size
    if len(raw) < start + meta_len:
        raise CorruptCheckpointError(f"{path} is truncated inside its metadata block")
    try:
        meta = json.loads(raw[start:start + meta_len].decode("utf-8"))
        layout = [(item["name"], tuple(item["shape"])) for item in meta["arrays"]]
    except (UnicodeDecodeError, ValueError, KeyError, TypeError) as e:
        raise CorruptCheckpointError(f"{path} has a malformed metadata block: {e}") from e

    offset = start + meta_len
    arrays = {}
    for name, shape in layout:
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        if len(raw) < offset + nbytes:
            raise CorruptCheckpointError(f"{path} is truncated inside array {name}")
        arrays[name] = np.frombuffer(raw, dtype="<f8", count=nbytes // 8, offset=offset).astype(np.float64).reshape(shape)
        offset += nbytes
    if offset != len(raw):
        raise CorruptCheckpointError(f"{path} has {len(raw) - offset} trailing bytes")
    return meta, arrays


def run_cells(cells, fn, workers=1, callback=None):
    """
    Run ``fn`` on every experiment cell and return results in cell order.

    With ``workers > 1`` cells run on a thread pool; each cell owns its model,
    so only report assembly (done here, in order) is shared. A failing cell
    is passed to ``callback`` with its error message and then re-raised.
    """
    cells = list(cells)
    total = len(cells)

    def run(indexed):
        i, cell = indexed
        logger.info("Running cell %d/%d: %s", i + 1, total, cell)
        try:
            result = fn(cell)
        except Exception as e:
            logger.error("Cell %s failed: %s", cell, e)
            if callback:
                callback(i + 1, total, cell, None, str(e))
            raise
        if callback:
            callback(i + 1, total, cell, result)
        return result

    if workers <= 1:
        return [run(item) for item in enumerate(cells)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, enumerate(cells)))
