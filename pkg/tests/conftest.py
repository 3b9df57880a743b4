import numpy as np
import pytest


class FakeStream:
    """Deterministic stand-in for RngStream feeding preset z pairs.

    Pads with zeros once the preset values are exhausted.
    """

    def __init__(self, z1_values, z2_values=None):
        self._z1 = list(z1_values)
        self._z2 = list(z2_values) if z2_values is not None else [0.0] * len(self._z1)
        self._pos = 0

    def normal_pairs(self, count):
        out = np.zeros((count, 2))
        for i in range(count):
            j = self._pos + i
            if j < len(self._z1):
                out[i, 0] = self._z1[j]
                out[i, 1] = self._z2[j]
        self._pos += count
        return out

    def normal_pair(self):
        pair = self.normal_pairs(1)
        return float(pair[0, 0]), float(pair[0, 1])


@pytest.fixture
def fake_stream():
    return FakeStream
