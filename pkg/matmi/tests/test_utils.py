# matmi utility and logging tests
# To run:
# python -m unittest discover -s matmi/tests

import logging
import os
import tempfile
import unittest

from matmi import matlog, utils
from matmi.exceptions import InputError


class TestConfigValues(unittest.TestCase):

    def test_read_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.cfg")
            with open(path, "w") as f:
                f.write("# comment\nmax_iter = 7  # inline\nAlgorithm = "
                        "landweber\n")
            config = utils.read_config(path)
            self.assertEqual(config, {"max_iter": "7",
                                      "Algorithm": "landweber"})
            with self.assertRaises(InputError):
                utils.read_config(os.path.join(tmp, "missing.cfg"))

    def test_convert_value(self):
        self.assertEqual(utils.convert_value("3", int), 3)
        self.assertEqual(utils.convert_value(" 0.5 ", float), 0.5)
        self.assertIsNone(utils.convert_value("none", float))
        self.assertTrue(utils.convert_value("on", bool))
        self.assertFalse(utils.convert_value("0", bool))
        self.assertEqual(utils.convert_value(4, int), 4)
        with self.assertRaises(InputError):
            utils.convert_value("maybe", bool)
        with self.assertRaises(InputError):
            utils.convert_value("x1", int)

    def test_parse_float_list(self):
        self.assertEqual(utils.parse_float_list("0, 0.06,0.12,"),
                         [0.0, 0.06, 0.12])
        with self.assertRaises(InputError):
            utils.parse_float_list("0,a")

    def test_status_text(self):
        self.assertEqual(utils.status_text(True, colour=False), "passed")
        self.assertEqual(utils.status_text(False, colour=False), "FAILED")
        self.assertIn("FAILED", utils.status_text(False))

    def test_timed(self):
        @utils.timed
        def add(a, b=1):
            """Sum"""
            return a + b

        self.assertEqual(add.__name__, "add")
        self.assertEqual(add.__doc__, "Sum")
        with self.assertLogs("matmi.utils", "INFO") as cm:
            self.assertEqual(add(2, b=3), 5)
        self.assertIn("add took", cm.output[0])


class TestLogging(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.level = logging.getLogger("matmi").level

    def tearDown(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            if isinstance(handler, logging.FileHandler):
                root.removeHandler(handler)
                handler.close()
        matlog.set_level(self.level or "info")
        self.tmp.cleanup()

    def test_to_level(self):
        self.assertEqual(matlog.to_level("debug"), logging.DEBUG)
        self.assertEqual(matlog.to_level("30"), logging.WARNING)
        with self.assertRaises(ValueError):
            matlog.to_level("loud")

    def test_log_to_file(self):
        matlog.set_level("info")
        first = matlog.log_to_file(os.path.join(self.tmp.name, "first"))
        self.assertTrue(first.baseFilename.endswith("first.log"))

        second = matlog.log_to_file(os.path.join(self.tmp.name, "b.log"))
        handlers = [h for h in logging.getLogger().handlers
                    if isinstance(h, logging.FileHandler)]
        self.assertEqual(handlers, [second])

        logging.getLogger("matmi.test").info("kept")
        logging.getLogger("elsewhere").warning("dropped")
        second.flush()
        with open(second.baseFilename) as f:
            text = f.read()
        self.assertIn("kept", text)
        self.assertNotIn("dropped", text)

    def test_set_level(self):
        handler = matlog.log_to_file(os.path.join(self.tmp.name, "c.log"))
        matlog.set_level("warning")
        self.assertEqual(handler.level, logging.WARNING)
        self.assertEqual(logging.getLogger("matmi").level, logging.WARNING)


if __name__ == '__main__':
    unittest.main()
