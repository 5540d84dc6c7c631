"""Shared PASS/FAIL lines for the acceptance suite, printed in the terminal summary."""
VERDICTS = {}
