"""Collects one pass/fail line per acceptance criterion."""

_results = {}


def record(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    _results[number] = line
    print(line)
    return passed


def lines():
    return [_results[k] for k in sorted(_results)]
