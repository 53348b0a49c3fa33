"""Piecewise-polynomial interpolation and mesh adaptation properties."""

import property_checks as pc


def test_polynomial_reproduction():
    pc.check_polynomial_reproduction()


def test_mesh_validity():
    pc.check_mesh_validity()
