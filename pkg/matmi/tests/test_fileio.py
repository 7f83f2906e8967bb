# matmi file format tests
# To run:
# python -m unittest discover -s matmi/tests

import json
import os
import tempfile
import unittest

import numpy as np
import xarray as xr

from matmi import fileio
from matmi.exceptions import FieldFileError, InputError, MeshMismatchError
from matmi.fields import Gauge, ScalarField, TensorField, p1_gradient
from matmi.mesh import build_disk_mesh, build_unit_square_mesh
from matmi.reconstruct import IterationLog


class TestFieldFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.mesh = build_unit_square_mesh(4, "left")
        self.sigma = ScalarField.from_function(self.mesh,
                                               lambda x, y: 0.2 + x * y)

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def test_scalar(self):
        fileio.write_field(self.path("s.fld"), self.sigma, name="sigma")
        again = fileio.read_field(self.path("s.fld"))
        self.assertIsInstance(again, ScalarField)
        np.testing.assert_array_equal(again.values, self.sigma.values)
        self.assertTrue(again.mesh.same_as(self.mesh))

    def test_header(self):
        fileio.write_field(self.path("s.fld"), self.sigma, name="sigma")
        with open(self.path("s.fld"), "rb") as f:
            self.assertEqual(f.readline(), b"MATMI-FIELD 1\n")
            header = json.loads(f.readline())
            offset = f.tell()
        self.assertEqual(header["field_kind"], "scalar")
        self.assertEqual(header["shape"], [self.mesh.n_vertices])
        self.assertEqual(header["mesh"]["diagonal"], "left")
        self.assertEqual(os.path.getsize(self.path("s.fld")),
                         offset + 8 * self.mesh.n_vertices)

    def test_tensor_and_vectors(self):
        n = self.mesh.n_vertices
        D = TensorField(self.mesh, np.full(n, 0.9), np.full(n, 0.05),
                        np.ones(n))
        fileio.write_field(self.path("d.fld"), D)
        again = fileio.read_field(self.path("d.fld"), self.mesh)
        np.testing.assert_array_equal(again.values, D.values)

        E = Gauge().field(self.mesh) + p1_gradient(self.sigma)
        for name, field in (("e.fld", E), ("g.fld", p1_gradient(self.sigma)),
                            ("n.fld", Gauge().field(self.mesh))):
            fileio.write_field(self.path(name), field)
            again = fileio.read_field(self.path(name), self.mesh)
            self.assertEqual(again.representation, field.representation)
            np.testing.assert_array_equal(again.values, field.values)

    def test_disk_mesh(self):
        mesh = build_disk_mesh((0.5, 0.5), 0.5, 2)
        field = ScalarField.constant(mesh, 3.0)
        fileio.write_field(self.path("disk.fld"), field)
        again = fileio.read_field(self.path("disk.fld"))
        np.testing.assert_array_equal(again.mesh.vertices, mesh.vertices)

    def test_mesh_mismatch(self):
        fileio.write_field(self.path("s.fld"), self.sigma)
        with self.assertRaises(MeshMismatchError):
            fileio.read_field(self.path("s.fld"), build_unit_square_mesh(4))

    def test_corrupted(self):
        fileio.write_field(self.path("s.fld"), self.sigma)
        with open(self.path("s.fld"), "rb") as f:
            magic, header, payload = f.readline(), f.readline(), f.read()

        cases = {"magic.fld": b"NOT-A-FIELD 1\n" + header + payload,
                 "version.fld": b"MATMI-FIELD 9\n" + header + payload,
                 "header.fld": magic + b"{broken\n" + payload,
                 "short.fld": magic + header + payload[:-8]}
        for name, content in cases.items():
            with open(self.path(name), "wb") as f:
                f.write(content)
            with self.assertRaises(FieldFileError):
                fileio.read_field(self.path(name))

        with self.assertRaises(FieldFileError):
            fileio.read_field(self.path("missing.fld"))

    def test_csv_twin(self):
        fileio.write_field(self.path("s.fld"), self.sigma, csv=True)
        table = np.genfromtxt(self.path("s.csv"), delimiter=",", names=True)
        self.assertEqual(table.dtype.names, ("x1", "x2", "value"))
        np.testing.assert_array_equal(table["value"], self.sigma.values)


class TestManifestAndTables(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def test_manifest(self):
        manifest = fileio.build_manifest(command="synth", n=np.int64(8),
                                         deltas=np.array([0.0, 0.1]))
        fileio.write_manifest(self.path("manifest.json"), manifest)
        again = fileio.read_manifest(self.path("manifest.json"))
        self.assertEqual(again["software"], "matmi")
        self.assertEqual(again["n"], 8)
        self.assertEqual(again["deltas"], [0.0, 0.1])

        with open(self.path("bad.json"), "w") as f:
            f.write("[1, 2")
        with self.assertRaises(FieldFileError):
            fileio.read_manifest(self.path("bad.json"))

    def test_log(self):
        log = IterationLog("quasi-newton")
        log.append(1, 0.3, 2.0, np.nan, 0.1)
        log.append(2, 0.1, 0.5, 1.0 / 3.0, 0.2)
        fileio.write_log(self.path("log.csv"), log)
        again = fileio.read_log(self.path("log.csv"))
        self.assertEqual(len(again), 2)
        np.testing.assert_array_equal(again.column("k"), [1, 2])
        np.testing.assert_array_equal(again.residuals, [2.0, 0.5])
        self.assertTrue(np.isnan(again.ratios[0]))
        self.assertEqual(again.ratios[1], 1.0 / 3.0)

    def test_table(self):
        ds = xr.Dataset({"error": ("delta", [0.01, 0.02])},
                        coords={"delta": [0.0, 0.12]})
        fileio.write_table(self.path("sweep.csv"), ds)
        again = fileio.read_table(self.path("sweep.csv"))
        np.testing.assert_array_equal(again["delta"].values, [0.0, 0.12])
        np.testing.assert_array_equal(again["error"].values, [0.01, 0.02])

    def test_empty_table(self):
        with open(self.path("empty.csv"), "w") as f:
            f.write("iteration,error,residual,ratio,wall_time\n")
        with self.assertRaises(InputError):
            fileio.read_table(self.path("empty.csv"))
        with self.assertRaises(InputError):
            fileio.read_log(self.path("empty.csv"))


if __name__ == '__main__':
    unittest.main()
