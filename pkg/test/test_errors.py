import unittest

from wavemask.errors import WavemaskError, WavemaskConfigError, WavemaskCheckError, EnumerationCapError, \
    WienerNullFrequencyError, PgmFormatError, PgmHeaderError, PgmMaxvalError, PgmTruncatedError


class ErrorsTest(unittest.TestCase):
    def test_same_base_type(self):
        self.assertIsInstance(WavemaskError(''), Exception)
        self.assertEqual(1, WavemaskError('').exit_code)
        self.assertEqual(3, WavemaskError('', exit_code=3).exit_code)

        self.assertIsInstance(WavemaskConfigError(''), WavemaskError)
        self.assertEqual(2, WavemaskConfigError('').exit_code)

        self.assertIsInstance(WavemaskCheckError(''), WavemaskError)
        self.assertEqual(1, WavemaskCheckError('').exit_code)
        self.assertEqual(('closed_form',), WavemaskCheckError('', ['closed_form']).failed_checks)

    def test_enumeration_cap(self):
        error = EnumerationCapError(25, 20)
        self.assertIsInstance(error, ValueError)
        self.assertIsInstance(error, WavemaskError)
        self.assertEqual(25, error.bits)
        self.assertEqual(20, error.cap)
        self.assertIn('2^25', str(error))

    def test_wiener_null_frequency(self):
        error = WienerNullFrequencyError((0, 3))
        self.assertIsInstance(error, ZeroDivisionError)
        self.assertEqual((0, 3), error.frequency)

    def test_pgm_errors(self):
        for error in (PgmHeaderError('bad'), PgmMaxvalError('bad'), PgmTruncatedError('bad', 17)):
            self.assertIsInstance(error, PgmFormatError)
            self.assertIsInstance(error, ValueError)
            self.assertEqual('bad', error.reason)
        self.assertEqual(17, PgmTruncatedError('bad', 17).offset)
