import io
import json
import logging
import os
import unittest

from test.helpers import get_test_output_dir, remove_dir, new_test_config
from wavemask.runner import run, run_experiment, configure_logging, EXIT_OK, EXIT_CONFIG_ERROR


class RunnerTest(unittest.TestCase):
    def setUp(self):
        self.out_dir = get_test_output_dir('runner')
        remove_dir(self.out_dir)
        os.makedirs(self.out_dir)

    def tearDown(self):
        remove_dir(self.out_dir)
        configure_logging(verbose=False)

    def test_run_experiment(self):
        config = new_test_config('theory_check', os.path.join(self.out_dir, 'run'),
                                 periods=[8], checks=['diffraction_bound'])
        ctx = run_experiment(config, max_workers=2)
        self.assertEqual('ok', ctx.manifest.status)
        self.assertIsNone(ctx._executor)
        self.assertIn('theory_check run', ctx.manifest.timings)

    def test_run(self):
        config_path = os.path.join(self.out_dir, 'config.json')
        with open(config_path, 'w') as fp:
            json.dump(dict(kind='theory_check', seed=5, periods=[8], checks=['diffraction_bound']), fp)
        out = os.path.join(self.out_dir, 'run')
        self.assertEqual(EXIT_OK, run(config_path, seed=6, output_dir=out))
        with open(os.path.join(out, 'manifest.json')) as fp:
            manifest = json.load(fp)
        self.assertEqual(6, manifest['config']['seed'])
        self.assertEqual(out, manifest['config']['output_dir'])

    def test_run_config_error(self):
        self.assertEqual(EXIT_CONFIG_ERROR, run(os.path.join(self.out_dir, 'missing.json')))

    def test_configure_logging(self):
        stream = io.StringIO()
        configure_logging(verbose=True, stream=stream)
        logging.getLogger('wavemask').info('hello')
        self.assertIn('hello', stream.getvalue())
        configure_logging(verbose=False, stream=stream)
        logging.getLogger('wavemask').info('hidden')
        self.assertNotIn('hidden', stream.getvalue())
        handlers = [h for h in logging.getLogger('wavemask').handlers if getattr(h, '_wavemask_console', False)]
        self.assertEqual(1, len(handlers))
