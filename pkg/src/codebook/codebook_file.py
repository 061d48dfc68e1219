"""
Binary codebook file (little endian):

    magic "PVCB" | version u32 | F u32 | entry count u64
    per entry: descriptor f32 * F | offset f32 * 3 | quaternion f32 * 4 (w, x, y, z) |
               mask 128 bytes (32 x 32 bits, row-major, most significant bit first) | object id u32

The k-NN index is not stored, it is rebuilt on load.
"""
import struct

import numpy as np

from src.codebook.codebook import Codebook
from src.codebook.index import IndexParams
from src.utils.binary import BinaryReader
from src.utils.logging import get_default_logger
from src.utils.static import PATCH_SIZE

logger = get_default_logger(__name__)

MAGIC = b"PVCB"
VERSION = 1
_HEADER = "<4sIIQ"
HEADER_SIZE = struct.calcsize(_HEADER)
_MASK_BYTES = PATCH_SIZE * PATCH_SIZE // 8


def entry_dtype(dimension: int) -> np.dtype:
    """packed numpy record of one entry"""
    return np.dtype([("descriptor", "<f4", (dimension,)), ("offset", "<f4", (3,)),
                     ("orientation", "<f4", (4,)), ("mask", "u1", (_MASK_BYTES,)),
                     ("object_id", "<u4")])


def file_size(dimension: int, count: int) -> int:
    """size in bytes of a codebook file"""
    return HEADER_SIZE + count * entry_dtype(dimension).itemsize


def save_codebook(codebook: Codebook, path: str):
    """Writes a codebook file"""
    records = np.zeros(len(codebook), dtype=entry_dtype(codebook.dimension))
    records["descriptor"] = codebook.descriptors
    records["offset"] = codebook.offsets
    records["orientation"] = codebook.orientations
    records["mask"] = np.packbits(codebook.masks.reshape(len(codebook), -1), axis=1)
    records["object_id"] = codebook.object_ids
    with open(path, "wb") as file:
        file.write(struct.pack(_HEADER, MAGIC, VERSION, codebook.dimension, len(codebook)))
        file.write(records.tobytes())
    logger.info(f"Saved {codebook!r} to {path}")


def load_codebook(path: str, index_params: IndexParams = None) -> Codebook:
    """
    Reads a codebook file and rebuilds the index.
    :raises FormatError: for bad magic, unsupported version or truncation
    """
    reader = BinaryReader.from_file(path, "codebook_file")
    reader.expect_magic(MAGIC)
    version, dimension, count = reader.unpack("<IIQ")
    if version != VERSION:
        reader.fail(f"Unsupported codebook file version {version}")
    if dimension < 1:
        reader.fail("Descriptor dimension 0")
    dtype = entry_dtype(dimension)
    complete = reader.remaining // dtype.itemsize
    if complete < count:
        reader.offset += complete * dtype.itemsize
        reader.fail(f"Truncated codebook, {count} entries announced, {complete} complete")
    records = np.frombuffer(reader.read(count * dtype.itemsize), dtype=dtype, count=count)
    reader.expect_end()

    masks = np.unpackbits(records["mask"], axis=1)[:, :PATCH_SIZE * PATCH_SIZE]
    codebook = Codebook(records["descriptor"], records["offset"], records["orientation"],
                        masks.reshape(count, PATCH_SIZE, PATCH_SIZE), records["object_id"],
                        index_params)
    logger.info(f"Loaded {codebook!r} from {path}")
    return codebook
