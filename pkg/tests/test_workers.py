import threading
import time
import unittest

from eras.workers import WorkerPool


class TestWorkerPool(unittest.TestCase):
    def test_results_in_item_order(self):
        def slow_square(x):
            time.sleep(0.001 * (10 - x))
            return x * x

        for threads in (1, 3, 16):
            self.assertEqual(WorkerPool(threads).map(slow_square, range(10)), [x * x for x in range(10)])

    def test_single_thread_runs_inline(self):
        names = WorkerPool(1).map(lambda _: threading.current_thread().name, range(3))
        self.assertEqual(set(names), {threading.current_thread().name})

    def test_threads_are_named(self):
        names = WorkerPool(2, name="Pool").map(lambda _: threading.current_thread().name, range(4))
        for name in names:
            self.assertTrue(name.startswith("Pool-"), name)

    def test_lowest_failing_index_is_raised(self):
        def fail(x):
            if x in (2, 5):
                raise ValueError(f"item {x}")
            return x

        with self.assertRaisesRegex(ValueError, "item 2"):
            WorkerPool(4).map(fail, range(8))
        with self.assertRaisesRegex(ValueError, "item 2"):
            WorkerPool(1).map(fail, range(8))

    def test_empty_and_invalid(self):
        self.assertEqual(WorkerPool(4).map(str, []), [])
        with self.assertRaises(ValueError):
            WorkerPool(0)
        self.assertGreaterEqual(WorkerPool().threads, 1)


if __name__ == "__main__":
    unittest.main()
