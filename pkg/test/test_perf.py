import logging
import time
from unittest import TestCase

from wavemask.perf import measure_time_cm, measure_time


class MeasureTimeTest(TestCase):
    def test_enabled(self):
        measure_time = measure_time_cm(disabled=False)
        with measure_time("hello") as cm:
            time.sleep(0.06)
        self.assertTrue(hasattr(cm, "duration"))
        self.assertTrue(cm.duration > 0.05)
        self.assertTrue(cm.duration_ms > 50.)

    def test_disabled(self):
        measure_time = measure_time_cm(disabled=True)
        with measure_time("hello") as cm:
            time.sleep(0.05)
        self.assertTrue(hasattr(cm, "duration"))
        self.assertIsNone(cm.duration)
        self.assertIsNone(cm.duration_ms)

    def test_sink(self):
        timings = {}
        measure_time = measure_time_cm(sink=timings)
        with measure_time("check a"):
            time.sleep(0.01)
        with measure_time():
            pass
        self.assertEqual(["check a"], list(timings))
        self.assertTrue(timings["check a"] > 5.)

    def test_logged(self):
        with self.assertLogs("wavemask", level=logging.INFO) as logs:
            with measure_time("hello"):
                pass
        self.assertEqual(1, len(logs.records))
        self.assertTrue(logs.output[0].startswith("INFO:wavemask:hello: took "))

    def test_exception_propagates(self):
        timings = {}
        with self.assertRaises(KeyError):
            with measure_time("failing", sink=timings):
                raise KeyError("x")
        self.assertIn("failing", timings)
