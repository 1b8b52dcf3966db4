import unittest
from coord_mask import CoordMask
from helpers import StructuralError

class CoordMaskUnitTest(unittest.TestCase):

    def test_instantination(self):
        self.assertRaises(StructuralError, CoordMask)
        self.assertRaises(StructuralError, CoordMask, 's')
        self.assertRaises(StructuralError, CoordMask, 0)
        self.assertRaises(StructuralError, CoordMask, True)

        self.assertIsInstance(CoordMask(3), CoordMask)                # int
        self.assertIsInstance(CoordMask(CoordMask(2)), CoordMask)     # CoordMask
        self.assertIsInstance(CoordMask([True, False]), CoordMask)    # list
        self.assertIsInstance(CoordMask((1, 0, 1)), CoordMask)        # tuple

    def test_select_coordinates(self):
        cm = CoordMask(4)  # mask = 1111
        self.assertEqual(4, len(cm))
        self.assertTrue(cm.all())
        self.assertEqual([0, 1, 2, 3], cm.selected())

        cm[1] = False      # mask = 1011
        self.assertFalse(cm.all())
        self.assertTrue(cm.any())
        self.assertEqual([1], cm.frozen())
        self.assertEqual('1011', str(cm))
        self.assertEqual([1.0, 0.0, 1.0, 1.0], list(cm.as_array()))

        cm.clear()
        self.assertFalse(cm.any())
        cm.set()
        self.assertTrue(cm.all())

    def test_copy_and_flags(self):
        cm = CoordMask([True, False, True])
        self.assertEqual('101', str(cm))
        copied = CoordMask(cm)
        self.assertEqual(cm.selected(), copied.selected())

        copied[0] = False
        self.assertTrue(cm[0])

    def test_from_indices(self):
        cm = CoordMask.from_indices(5, [0, 3])
        self.assertEqual('10010', str(cm))
        self.assertEqual([1, 2, 4], cm.frozen())
        self.assertRaises(StructuralError, CoordMask.from_indices, 2, [2])


if __name__ == '__main__':
    unittest.main()
