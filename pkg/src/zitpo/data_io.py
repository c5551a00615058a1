"""CSV ingestion, truncation recoding and design-matrix construction.

Factors are declared, never inferred; their level order is first appearance
in the file unless a base/dropped level is named. Treatment coding emits one
indicator per non-base level, sum coding emits +1 for the own level and -1
for the dropped level. Interactions are elementwise products of the coded
columns.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec

__all__ = [
    "Dataset",
    "ContrastSpec",
    "FormulaSpec",
    "read_csv",
    "parse_formula",
    "build_design",
    "make_model_spec",
]


@dataclass(frozen=True)
class ContrastSpec:
    """Coding scheme for one categorical variable.

    ``base`` names the reference level for treatment coding, or the dropped
    level for sum coding; ``None`` means first level (treatment) or last
    level (sum) in first-appearance order.
    """

    variable: str
    kind: str = "treatment"
    base: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("treatment", "sum"):
            raise ValueError(f"contrast kind must be 'treatment' or 'sum', got {self.kind!r}")


@dataclass(frozen=True)
class FormulaSpec:
    """Ordered model terms: variable names or 'a:b' interaction pairs.

    The intercept is always included and never listed.
    """

    terms: tuple[str, ...] = ()


@dataclass(frozen=True)
class Dataset:
    """Response, raw covariate columns and the truncation threshold.

    ``recode_count`` tells how many responses in ``(0, y_trunc]`` were moved
    to zero on ingestion. Covariate columns stay as strings until a design
    is built.
    """

    y: np.ndarray
    frame: dict[str, list[str]]
    y_trunc: float
    recode_count: int
    factors: tuple[ContrastSpec, ...] = ()

    @property
    def n(self) -> int:
        return self.y.size

    def contrast_for(self, variable: str) -> ContrastSpec | None:
        for c in self.factors:
            if c.variable == variable:
                return c
        return None


def read_csv(
    path,
    response_column: str,
    y_trunc: float,
    factors: tuple[ContrastSpec, ...] | list[ContrastSpec] = (),
) -> Dataset:
    """Load a UTF-8 comma-separated file with a header row.

    Responses in ``(0, y_trunc]`` are recoded to zero and counted. Negative,
    missing or unparseable response cells raise with row and column named;
    missing cells anywhere are rejected.
    """
    if y_trunc < 0.0:
        raise ValueError(f"truncation threshold must be nonnegative, got {y_trunc}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)
    header = [h.strip() for h in header]
    if response_column not in header:
        raise ValueError(f"{path}: no column named {response_column!r}")
    for c in factors:
        if c.variable not in header:
            raise ValueError(f"{path}: no column named {c.variable!r}")
    columns: dict[str, list[str]] = {name: [] for name in header}
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")
        for name, cell in zip(header, row):
            cell = cell.strip()
            if cell == "":
                raise ValueError(f"{path}: missing value at row {i + 1}, column {name!r}")
            columns[name].append(cell)

    raw = columns.pop(response_column)
    y = np.empty(len(raw))
    for i, cell in enumerate(raw):
        try:
            y[i] = float(cell)
        except ValueError:
            raise ValueError(
                f"{path}: cannot parse {cell!r} at row {i + 1}, column {response_column!r}"
            ) from None
        if not np.isfinite(y[i]) or y[i] < 0.0:
            raise ValueError(
                f"{path}: response must be a nonnegative number, got {cell!r} "
                f"at row {i + 1}"
            )
    recode = (y > 0.0) & (y <= y_trunc)
    y[recode] = 0.0
    return Dataset(
        y=y,
        frame=columns,
        y_trunc=float(y_trunc),
        recode_count=int(np.sum(recode)),
        factors=tuple(factors),
    )


def parse_formula(text: str) -> FormulaSpec:
    """Parse a comma-separated term list; 'a:b' denotes an interaction.

    An empty string gives the intercept-only model. Duplicate terms (also
    'a:b' versus 'b:a') are rejected.
    """
    terms: list[str] = []
    seen: set[frozenset] = set()
    if text.strip() == "":
        return FormulaSpec(terms=())
    for offset, chunk in _split_terms(text):
        term = chunk.strip()
        parts = term.split(":")
        if len(parts) > 2 or any(not _is_identifier(p.strip()) for p in parts):
            raise ValueError(f"formula syntax error at position {offset}: {chunk!r}")
        parts = [p.strip() for p in parts]
        key = frozenset(parts) if len(parts) == 2 else frozenset([parts[0], parts[0]])
        if key in seen:
            raise ValueError(f"duplicate term {term!r} in formula")
        seen.add(key)
        terms.append(":".join(parts))
    return FormulaSpec(terms=tuple(terms))


def _split_terms(text: str):
    offset = 0
    for chunk in text.split(","):
        yield offset, chunk
        offset += len(chunk) + 1


def _is_identifier(s: str) -> bool:
    return bool(s) and (s[0].isalpha() or s[0] == "_") and all(
        ch.isalnum() or ch == "_" for ch in s
    )


def _levels(values: list[str]) -> list[str]:
    seen: dict[str, None] = {}
    for v in values:
        seen.setdefault(v, None)
    return list(seen)


def _coded_columns(
    ds: Dataset, variable: str, declared_levels: dict[str, list[str]] | None = None
) -> tuple[list[str], np.ndarray]:
    """Code one variable: factor contrast columns or a single numeric column."""
    if variable not in ds.frame:
        raise ValueError(f"unknown variable {variable!r}")
    values = ds.frame[variable]
    contrast = ds.contrast_for(variable)
    if contrast is None:
        col = np.empty(len(values))
        for i, cell in enumerate(values):
            try:
                col[i] = float(cell)
            except ValueError:
                raise ValueError(
                    f"cannot parse {cell!r} as a number at row {i + 1}, "
                    f"column {variable!r} (declare it as a factor?)"
                ) from None
        return [variable], col.reshape(-1, 1)

    if declared_levels is not None and variable in declared_levels:
        levels = declared_levels[variable]
        unseen = sorted(set(values) - set(levels))
        if unseen:
            raise ValueError(
                f"column {variable!r} contains level(s) {unseen} not present "
                "when the design was defined"
            )
    else:
        levels = _levels(values)
    if len(levels) < 2:
        raise ValueError(f"factor {variable!r} has fewer than two levels")

    if contrast.kind == "treatment":
        base = contrast.base if contrast.base is not None else levels[0]
        if base not in levels:
            raise ValueError(f"base level {base!r} not among levels of {variable!r}")
        kept = [lv for lv in levels if lv != base]
        cols = np.zeros((len(values), len(kept)))
        for j, lv in enumerate(kept):
            cols[:, j] = [1.0 if v == lv else 0.0 for v in values]
    else:
        dropped = contrast.base if contrast.base is not None else levels[-1]
        if dropped not in levels:
            raise ValueError(f"dropped level {dropped!r} not among levels of {variable!r}")
        kept = [lv for lv in levels if lv != dropped]
        cols = np.zeros((len(values), len(kept)))
        for j, lv in enumerate(kept):
            cols[:, j] = [1.0 if v == lv else (-1.0 if v == dropped else 0.0) for v in values]
    names = [f"{variable}={lv}" for lv in kept]
    return names, cols


def build_design(
    ds: Dataset,
    formula: FormulaSpec,
    declared_levels: dict[str, list[str]] | None = None,
) -> tuple[np.ndarray, tuple[str, ...], dict[str, list[str]]]:
    """Build the design matrix for one model part.

    Returns the matrix (intercept first), column names, and the factor
    levels used, so a later rebuild (e.g. at predict time) can reject
    unseen levels. Rank deficiency is reported with the offending columns.
    """
    names: list[str] = ["intercept"]
    blocks: list[np.ndarray] = [np.ones((ds.n, 1))]
    term_cols: dict[str, tuple[list[str], np.ndarray]] = {}
    levels_used: dict[str, list[str]] = {}

    def coded(variable: str) -> tuple[list[str], np.ndarray]:
        if variable not in term_cols:
            term_cols[variable] = _coded_columns(ds, variable, declared_levels)
            if ds.contrast_for(variable) is not None:
                if declared_levels is not None and variable in declared_levels:
                    levels_used[variable] = list(declared_levels[variable])
                else:
                    levels_used[variable] = _levels(ds.frame[variable])
        return term_cols[variable]

    for term in formula.terms:
        if ":" in term:
            a, b = term.split(":")
            names_a, cols_a = coded(a)
            names_b, cols_b = coded(b)
            for ja, na in enumerate(names_a):
                for jb, nb in enumerate(names_b):
                    names.append(f"{na}:{nb}")
                    blocks.append((cols_a[:, ja] * cols_b[:, jb]).reshape(-1, 1))
        else:
            term_names, cols = coded(term)
            names.extend(term_names)
            blocks.append(cols)

    x = np.hstack(blocks)
    _check_rank(x, names)
    return x, tuple(names), levels_used


def _check_rank(x: np.ndarray, names: list[str]) -> None:
    if np.linalg.matrix_rank(x) == x.shape[1]:
        return
    # walk the columns and name the ones that add no rank
    offenders = []
    kept = np.empty((x.shape[0], 0))
    for j in range(x.shape[1]):
        candidate = np.hstack([kept, x[:, j : j + 1]])
        if np.linalg.matrix_rank(candidate) > kept.shape[1]:
            kept = candidate
        else:
            offenders.append(names[j])
    raise ValueError(f"design is rank deficient; redundant columns: {offenders}")


def make_model_spec(
    ds: Dataset,
    pi_formula: FormulaSpec,
    mu_formula: FormulaSpec,
    declared_levels: dict[str, list[str]] | None = None,
) -> tuple[ModelSpec, dict[str, list[str]]]:
    """Design matrices for both model parts from one dataset."""
    x1, names1, lv1 = build_design(ds, pi_formula, declared_levels)
    x2, names2, lv2 = build_design(ds, mu_formula, declared_levels)
    levels = dict(lv1)
    levels.update(lv2)
    return ModelSpec(x1=x1, x2=x2, names1=names1, names2=names2), levels
