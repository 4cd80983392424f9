"""Criterion pass/fail lines collected during the run, printed by conftest."""

lines: list[str] = []
