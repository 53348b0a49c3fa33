"""Assembled determining-system Jacobians against finite differences."""

import property_checks as pc


def test_jacobian_stst():
    pc.check_corrector_jacobian_stst()


def test_jacobian_fold():
    pc.check_corrector_jacobian_fold()


def test_jacobian_hopf():
    pc.check_corrector_jacobian_hopf()


def test_jacobian_psol():
    pc.check_corrector_jacobian_psol()


def test_jacobian_hcli_directional():
    pc.check_corrector_jacobian_hcli()
