"""
Little endian reading helpers shared by the model and codebook file formats.
"""
import struct

import numpy as np

from src.utils.exceptions import FormatError


class BinaryReader:
    """
    Sequential reader over a bytes buffer that remembers its offset and raises FormatError with
    the offset for truncated or malformed content.
    :param buffer: file content
    :param component: name used in the raised errors
    """

    def __init__(self, buffer: bytes, component: str):
        self.buffer = buffer
        self.offset = 0
        self.component = component

    @classmethod
    def from_file(cls, path: str, component: str) -> "BinaryReader":
        """Reads the whole file into a reader"""
        with open(path, "rb") as file:
            return cls(file.read(), component)

    @property
    def remaining(self) -> int:
        """bytes left after the current offset"""
        return len(self.buffer) - self.offset

    def fail(self, message: str):
        """Raises a FormatError at the current offset"""
        raise FormatError(message, self.offset, self.component)

    def read(self, size: int) -> bytes:
        """Reads size raw bytes"""
        if size < 0 or self.remaining < size:
            self.fail(f"Unexpected end of file, {size} bytes requested, {self.remaining} left")
        chunk = self.buffer[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        """Reads and unpacks a struct format, e.g. '<4sIB'"""
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))

    def array(self, dtype, count: int) -> np.ndarray:
        """Reads count values of a (little endian) numpy dtype"""
        dtype = np.dtype(dtype)
        return np.frombuffer(self.read(dtype.itemsize * count), dtype=dtype, count=count).copy()

    def expect_magic(self, magic: bytes):
        """Reads and compares the magic bytes"""
        found = self.read(len(magic))
        if found != magic:
            self.offset -= len(magic)
            self.fail(f"Bad magic {found!r}, expected {magic!r}")

    def expect_end(self):
        """Fails if bytes are left"""
        if self.remaining:
            self.fail(f"{self.remaining} trailing bytes")
