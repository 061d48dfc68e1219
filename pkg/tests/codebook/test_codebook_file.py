import os
import struct
import tempfile
import unittest

import numpy as np

from src.codebook.codebook import Codebook
from src.codebook.codebook_file import HEADER_SIZE, entry_dtype, file_size, load_codebook, \
    save_codebook
from src.codebook.index import IndexParams
from src.utils.exceptions import FormatError


def random_codebook(count: int, dimension: int, seed: int = 0) -> Codebook:
    rng = np.random.default_rng(seed)
    orientations = rng.normal(size=(count, 4))
    orientations /= np.linalg.norm(orientations, axis=1, keepdims=True)
    return Codebook(rng.normal(size=(count, dimension)), rng.normal(size=(count, 3)),
                    orientations, rng.random((count, 32, 32)) < 0.3,
                    rng.integers(1, 5, count), IndexParams(exact=True))


def read(path: str) -> bytes:
    with open(path, "rb") as file:
        return file.read()


class TestCodebookFile(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "codebook.pvcb")

    def tearDown(self):
        self.tmp.cleanup()

    def test_entry_layout(self):
        self.assertEqual(HEADER_SIZE, 20)
        self.assertEqual(entry_dtype(32).itemsize, 4 * 32 + 12 + 16 + 128 + 4)

    def test_round_trip(self):
        codebook = random_codebook(57, 12)
        save_codebook(codebook, self.path)
        self.assertEqual(os.path.getsize(self.path), file_size(12, 57))
        loaded = load_codebook(self.path)

        self.assertEqual(len(loaded), 57)
        for name in ("descriptors", "offsets", "orientations", "masks", "object_ids"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(codebook, name))

        second = os.path.join(self.tmp.name, "second.pvcb")
        save_codebook(loaded, second)
        self.assertEqual(read(self.path), read(second))

    def test_header(self):
        save_codebook(random_codebook(3, 5), self.path)
        self.assertEqual(struct.unpack("<4sIIQ", read(self.path)[:HEADER_SIZE]),
                         (b"PVCB", 1, 5, 3))

    def test_mask_bit_order(self):
        codebook = random_codebook(1, 2)
        codebook.masks[:] = False
        codebook.masks[0, 0, 0] = True
        save_codebook(codebook, self.path)
        mask_start = HEADER_SIZE + 4 * 2 + 12 + 16
        self.assertEqual(read(self.path)[mask_start], 0x80)

    def test_large_file_size(self):
        count = 100_000
        rng = np.random.default_rng(1)
        codebook = Codebook(rng.normal(size=(count, 32)), np.zeros((count, 3)),
                            np.tile([1.0, 0.0, 0.0, 0.0], (count, 1)),
                            np.zeros((count, 32, 32), dtype=bool), np.ones(count))
        save_codebook(codebook, self.path)
        self.assertEqual(os.path.getsize(self.path), file_size(32, count))
        self.assertEqual(len(load_codebook(self.path)), count)

    def test_truncated(self):
        save_codebook(random_codebook(10, 8), self.path)
        content = read(self.path)
        with open(self.path, "wb") as file:
            file.write(content[:-5])
        with self.assertRaises(FormatError) as context:
            load_codebook(self.path)
        self.assertEqual(context.exception.offset, HEADER_SIZE + 9 * entry_dtype(8).itemsize)

    def test_bad_magic(self):
        save_codebook(random_codebook(2, 4), self.path)
        content = read(self.path)
        with open(self.path, "wb") as file:
            file.write(b"PVRG" + content[4:])
        with self.assertRaises(FormatError) as context:
            load_codebook(self.path)
        self.assertEqual(context.exception.offset, 0)

    def test_bad_version(self):
        with open(self.path, "wb") as file:
            file.write(struct.pack("<4sIIQ", b"PVCB", 2, 4, 0))
        with self.assertRaises(FormatError) as context:
            load_codebook(self.path)
        self.assertEqual(context.exception.offset, HEADER_SIZE)

    def test_trailing_bytes(self):
        save_codebook(random_codebook(2, 4), self.path)
        with open(self.path, "ab") as file:
            file.write(b"\1\2")
        with self.assertRaises(FormatError):
            load_codebook(self.path)


if __name__ == '__main__':
    unittest.main()
