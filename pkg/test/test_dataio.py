import os
import unittest

import numpy as np

from test.helpers import get_test_output_dir, remove_dir
from wavemask.dataio import load_pgm, store_pgm, quantize, write_csv, read_csv, write_json, read_json, \
    to_json_text, CSV_COLUMNS
from wavemask.errors import PgmHeaderError, PgmMaxvalError, PgmTruncatedError


class DataIOTestCase(unittest.TestCase):
    def setUp(self):
        self.out_dir = get_test_output_dir('dataio')
        remove_dir(self.out_dir)
        os.makedirs(self.out_dir)

    def tearDown(self):
        remove_dir(self.out_dir)

    def write_bytes(self, name: str, data: bytes) -> str:
        path = os.path.join(self.out_dir, name)
        with open(path, 'wb') as fp:
            fp.write(data)
        return path


class LoadPgmTest(DataIOTestCase):
    def test_load(self):
        path = self.write_bytes('a.pgm', b'P5\n2 2\n255\n' + bytes([0, 255, 255, 0]))
        np.testing.assert_array_equal(load_pgm(path), [[0.0, 1.0], [1.0, 0.0]])

    def test_header_comments(self):
        path = self.write_bytes('b.pgm', b'P5\n# made by hand\n3 1\n# maxval follows\n255\n' + bytes([0, 51, 102]))
        np.testing.assert_allclose(load_pgm(path), [[0.0, 0.2, 0.4]])

    def test_truncated(self):
        data = b'P5\n4 4\n255\n' + bytes(10)
        path = self.write_bytes('c.pgm', data)
        with self.assertRaises(PgmTruncatedError) as cm:
            load_pgm(path)
        self.assertEqual(len(data), cm.exception.offset)

    def test_bad_magic(self):
        path = self.write_bytes('d.pgm', b'P2\n2 2\n255\n0 0 0 0\n')
        with self.assertRaises(PgmHeaderError):
            load_pgm(path)

    def test_bad_size(self):
        path = self.write_bytes('e.pgm', b'P5\nxx 2\n255\n' + bytes(4))
        with self.assertRaises(PgmHeaderError):
            load_pgm(path)

    def test_bad_maxval(self):
        path = self.write_bytes('f.pgm', b'P5\n2 2\n65535\n' + bytes(8))
        with self.assertRaises(PgmMaxvalError):
            load_pgm(path)


class StorePgmTest(DataIOTestCase):
    def test_round_trip(self):
        image = np.arange(64, dtype=np.float64).reshape((8, 8)) * 4.0 / 255.0
        image[0, 0] = 0.0
        image[7, 7] = 1.0
        path = os.path.join(self.out_dir, 'image.pgm')
        sidecar_path = store_pgm(image, path)
        self.assertEqual(path + '.json', sidecar_path)
        with open(path, 'rb') as fp:
            self.assertTrue(fp.read().startswith(b'P5'))
        np.testing.assert_allclose(load_pgm(path), image, atol=1e-12)
        sidecar = read_json(sidecar_path)
        self.assertEqual('P5', sidecar['format'])
        self.assertEqual([8, 8], sidecar['shape'])
        self.assertEqual(False, sidecar['mapping']['degenerate'])

    def test_constant_image(self):
        path = os.path.join(self.out_dir, 'constant.pgm')
        sidecar_path = store_pgm(np.full((8, 8), 0.3), path)
        np.testing.assert_array_equal(load_pgm(path), np.full((8, 8), 128 / 255.0))
        self.assertEqual(True, read_json(sidecar_path)['mapping']['degenerate'])

    def test_deterministic(self):
        image = np.random.default_rng(1).normal(size=(16, 16))
        path_a = os.path.join(self.out_dir, 'a.pgm')
        path_b = os.path.join(self.out_dir, 'b.pgm')
        store_pgm(image, path_a)
        store_pgm(image, path_b)
        with open(path_a, 'rb') as fa, open(path_b, 'rb') as fb:
            self.assertEqual(fa.read(), fb.read())


class QuantizeTest(unittest.TestCase):
    def test_range(self):
        raster, mapping = quantize(np.array([[-1.0, 0.0], [1.0, 3.0]]))
        self.assertEqual(np.uint8, raster.dtype)
        np.testing.assert_array_equal(raster, [[0, 64], [128, 255]])
        self.assertEqual(-1.0, mapping['min'])
        self.assertEqual(3.0, mapping['max'])

    def test_degenerate(self):
        raster, mapping = quantize(np.zeros((2, 2)))
        np.testing.assert_array_equal(raster, np.full((2, 2), 128))
        self.assertTrue(mapping['degenerate'])


class CsvTest(DataIOTestCase):
    def test_header_only(self):
        path = os.path.join(self.out_dir, 'empty.csv')
        write_csv([], path)
        with open(path, encoding='utf-8') as fp:
            self.assertEqual(','.join(CSV_COLUMNS) + '\n', fp.read())

    def test_floats_parse_back(self):
        path = os.path.join(self.out_dir, 'table.csv')
        write_csv([('mtf_dist', 'sphere', 4.0, 0.0, True, 'mean:1', 1.0 / 3.0),
                   ('mtf_dist', 'sphere', 4.0, 0.0, True, 'mean:2', 0.1 + 0.2)], path)
        frame = read_csv(path)
        self.assertEqual(list(CSV_COLUMNS), list(frame.columns))
        self.assertEqual(1.0 / 3.0, frame['value'][0])
        self.assertEqual(0.1 + 0.2, frame['value'][1])
        self.assertEqual('mean:2', frame['n_or_metric'][1])
        with open(path, 'rb') as fp:
            self.assertNotIn(b'\r\n', fp.read())


class JsonTest(DataIOTestCase):
    def test_sorted_and_stable(self):
        value = dict(b=np.float64(0.5), a=[np.int64(1), np.bool_(True)], c=np.arange(3))
        self.assertEqual(to_json_text(value), to_json_text(dict(value)))
        self.assertEqual('{\n  "a": [\n    1,\n    true\n  ],\n  "b": 0.5,\n  "c": [\n    0,\n    1,\n    2\n  ]\n}\n',
                         to_json_text(value))

    def test_write_read(self):
        path = os.path.join(self.out_dir, 'doc.json')
        write_json(dict(x=1.0 / 3.0), path)
        self.assertEqual(dict(x=1.0 / 3.0), read_json(path))

    def test_unsupported_type(self):
        with self.assertRaises(TypeError):
            to_json_text(dict(x=object()))
