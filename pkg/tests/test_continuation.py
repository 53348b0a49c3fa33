"""Continuation invariants on a synthetic quadratic fold."""

import property_checks as pc


def test_fold_invariants():
    pc.check_continuation_fold_invariants()


def test_insertion_halving():
    pc.check_continuation_insertion_halving()


def test_halt_before_reject():
    pc.check_continuation_halt_before_reject()


def test_reverse_and_degenerate_secant():
    pc.check_continuation_reverse_and_secant()
