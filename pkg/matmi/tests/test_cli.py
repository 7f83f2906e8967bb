# matmi command line tests
# To run:
# python -m unittest discover -s matmi/tests

import json
import logging
import os
import tempfile
import unittest

from unittest import mock

from matmi.matmi import (EXIT_INPUT_ERROR, EXIT_OK, EXIT_SOLVER_ERROR,
                         MANIFEST, cmd_synth, main)


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.logfile = self.path("matmi.log")

    def tearDown(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            if isinstance(handler, logging.FileHandler):
                root.removeHandler(handler)
                handler.close()
        self.tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.tmp.name, *parts)

    def run_main(self, *args):
        return main(list(args) + ["-lf", self.logfile])

    def synth(self, out, *extra):
        return self.run_main("synth", "-o", self.path(out), "-p",
                             "smooth-bump", "-n", "4", *extra)

    def test_bad_arguments(self):
        self.assertEqual(main([]), EXIT_INPUT_ERROR)
        self.assertEqual(main(["synth"]), EXIT_INPUT_ERROR)
        self.assertEqual(self.run_main("reconstruct", "--data", "x", "-o",
                                       "y", "-a", "newton"),
                         EXIT_INPUT_ERROR)

    def test_unknown_phantom(self):
        status = self.run_main("synth", "-o", self.path("out"), "-p",
                               "shepp-logan", "-n", "4")
        self.assertEqual(status, EXIT_INPUT_ERROR)

    def test_synth(self):
        self.assertEqual(self.synth("a", "-d", "0.1", "--csv"), EXIT_OK)
        for name in ("sigma_true.fld", "tensor.fld", "data.fld",
                     "data_noisy.fld", "data.csv", MANIFEST):
            self.assertTrue(os.path.exists(self.path("a", name)), name)

        with open(self.path("a", MANIFEST)) as f:
            manifest = json.load(f)
        self.assertEqual(manifest["command"], "synth")
        self.assertEqual(manifest["n"], 4)
        self.assertEqual(manifest["delta"], 0.1)
        self.assertIn("data_noisy", manifest["files"])

    def test_synth_is_deterministic(self):
        self.synth("a", "-d", "0.2", "-s", "5")
        self.synth("b", "-d", "0.2", "-s", "5")
        for name in ("data.fld", "data_noisy.fld"):
            with open(self.path("a", name), "rb") as fa, \
                    open(self.path("b", name), "rb") as fb:
                self.assertEqual(fa.read(), fb.read())

    def test_config_file(self):
        with open(self.path("run.cfg"), "w") as f:
            f.write("# synthesis settings\nn = 5\nphantom = inclusion\n")
        status = self.run_main("synth", "-o", self.path("c"), "-c",
                               self.path("run.cfg"))
        self.assertEqual(status, EXIT_OK)
        with open(self.path("c", MANIFEST)) as f:
            manifest = json.load(f)
        self.assertEqual(manifest["n"], 5)
        self.assertEqual(manifest["phantom"], "inclusion")

    def test_reconstruct_and_report(self):
        self.synth("data")
        status = self.run_main("reconstruct", "--data", self.path("data"),
                               "-o", self.path("rec"), "--max-iter", "2")
        self.assertEqual(status, EXIT_OK)
        self.assertTrue(os.path.exists(self.path("rec", "sigma.fld")))

        with open(self.path("rec", MANIFEST)) as f:
            manifest = json.load(f)
        self.assertEqual(manifest["iterations"], 2)
        self.assertEqual(manifest["config"]["max_iter"], 2)

        status = self.run_main("report", "--log",
                               self.path("rec", "log.csv"), "-o",
                               self.path("table.csv"))
        self.assertEqual(status, EXIT_OK)
        with open(self.path("table.csv")) as f:
            self.assertEqual(f.readline().strip(),
                             "iteration,error,residual")

    def test_corrupted_input_writes_nothing(self):
        cmd_synth(phantom="smooth-bump", n=4, out=self.path("data"))
        with open(self.path("data", "data.fld"), "r+b") as f:
            f.readline()
            f.write(b"{not json")
        status = self.run_main("reconstruct", "--data", self.path("data"),
                               "-o", self.path("rec"))
        self.assertEqual(status, EXIT_INPUT_ERROR)
        self.assertFalse(os.path.exists(self.path("rec")))

    def test_bad_mesh_settings(self):
        self.assertEqual(self.run_main("synth", "-o", self.path("a"), "-n",
                                       "1"), EXIT_INPUT_ERROR)
        self.assertEqual(self.synth("b", "--oracle-mesh", "1"),
                         EXIT_INPUT_ERROR)
        self.assertFalse(os.path.exists(self.path("a")))

    def test_bad_config_value(self):
        self.synth("data")
        with open(self.path("run.cfg"), "w") as f:
            f.write("max_iter = 0\n")
        status = self.run_main("reconstruct", "--data", self.path("data"),
                               "-o", self.path("rec"), "-c",
                               self.path("run.cfg"))
        self.assertEqual(status, EXIT_INPUT_ERROR)
        self.assertFalse(os.path.exists(self.path("rec")))

    def test_numerical_value_error_is_solver_failure(self):
        self.synth("data")
        with mock.patch("matmi.matmi.reconstruct",
                        side_effect=ValueError("array must not contain nan")):
            status = self.run_main("reconstruct", "--data",
                                   self.path("data"), "-o", self.path("rec"))
        self.assertEqual(status, EXIT_SOLVER_ERROR)
        self.assertFalse(os.path.exists(self.path("rec")))

    def test_empty_log(self):
        with open(self.path("log.csv"), "w") as f:
            f.write("iteration,error,residual,ratio,wall_time\n")
        status = self.run_main("report", "--log", self.path("log.csv"),
                               "-o", self.path("table.csv"))
        self.assertEqual(status, EXIT_INPUT_ERROR)


if __name__ == '__main__':
    unittest.main()
