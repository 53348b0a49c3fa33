"""Model-layer serialization round-trips."""

import property_checks as pc


def test_serialization_roundtrip():
    pc.check_serialization_roundtrip()
