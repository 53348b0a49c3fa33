"""Derivative callbacks against finite-difference twins."""

from property_checks import check_system_fd_vs_analytic


def test_fd_vs_analytic_derivatives():
    check_system_fd_vs_analytic()
