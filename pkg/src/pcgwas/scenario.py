"""Scenario files: one ``key = value`` pair per line.

Blank lines and ``#`` comments are ignored.  ``tests`` takes a
comma-separated list.  ``seed`` is mandatory.  Parsing collects every problem
in the file before failing, each tagged with its line number.
"""

import dataclasses
import typing

from .errors import DomainError, ScenarioError
from .experiment import SCENARIO_FIELDS, Scenario, scenario_problems

# flat-file aliases accepted in addition to the field names
_ALIASES = {"replicate": "replicates", "k": "k_assoc", "corr_model": "model"}


def _field_type(name):
    hint = typing.get_type_hints(Scenario)[name]
    return hint


def _convert(name, raw):
    typ = _field_type(name)
    if name == "tests":
        items = tuple(t.strip() for t in raw.split(",") if t.strip())
        if not items:
            raise ValueError("expected a comma-separated list of tests")
        return items
    if typ is int:
        # accept 2000, 2e3 is rejected on purpose (ambiguous for seeds)
        return int(raw, 10)
    if typ is float:
        return float(raw)
    return raw


def parse_scenario_text(text, overrides=None):
    """Build a :class:`Scenario` from file contents.

    ``overrides`` (a dict of already-typed values) is applied after the file,
    so a command-line ``--seed`` can satisfy or replace the file's seed.
    """
    issues = []
    values = {}
    where = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            issues.append((lineno, f"expected 'key = value', got {stripped!r}"))
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in SCENARIO_FIELDS:
            issues.append((lineno, f"unknown key {key!r}"))
            continue
        if key in values:
            issues.append((lineno, f"duplicate key {key!r} (first set on line {where[key]})"))
            continue
        try:
            values[key] = _convert(key, raw)
            where[key] = lineno
        except ValueError as exc:
            kind = _field_type(key)
            tname = getattr(kind, "__name__", str(kind))
            issues.append((lineno, f"{key}: cannot read {raw!r} as {tname} ({exc})"))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in values:
        issues.append((0, "seed is required"))

    if not issues:
        scen = _build(values, where, issues)
        if scen is not None:
            return scen
    else:
        # still report invariant violations of whatever did parse
        _build({**values, "seed": values.get("seed", 0)}, where, issues)
    raise ScenarioError(sorted(set(issues)))


_KEY_FOR_PROBLEM = (
    ("k_assoc", "k_assoc"), ("effect", "effect_lo"), ("alpha", "alpha"),
    ("replicates", "replicates"), ("maf", "maf"), ("seed", "seed"),
    ("generator", "generator"), ("model", "model"), ("scheme", "scheme"),
    ("test", "tests"), ("selection", "selection"), ("signs", "signs"),
    ("genotype", "genotype"), ("n_phe", "n_phe"), ("c +", "c"), ("n=", "n"),
    ("n must", "n"), ("sign2", "sign2"), ("v1", "v1"), ("v2", "v2"),
)


def _line_for(message, where):
    for needle, key in _KEY_FOR_PROBLEM:
        if needle in message and key in where:
            return where[key]
    return 0


def _build(values, where, issues):
    try:
        draft = object.__new__(Scenario)
        defaults = {f.name: f.default for f in dataclasses.fields(Scenario)}
        for k, v in {**defaults, **values}.items():
            object.__setattr__(draft, k, v)
        problems = scenario_problems(draft)
    except (TypeError, KeyError, DomainError) as exc:
        problems = [str(exc)]
    for msg in problems:
        issues.append((_line_for(msg, where), msg))
    if problems:
        return None
    return Scenario(**values)


def parse_scenario(path, overrides=None):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario_text(fh.read(), overrides)


def serialize_scenario(s):
    """Text form of ``s`` listing every field; parses back to an equal Scenario."""
    lines = []
    for f in dataclasses.fields(Scenario):
        v = getattr(s, f.name)
        if f.name == "tests":
            v = ",".join(v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
