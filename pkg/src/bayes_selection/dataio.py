"""CSV and JSON formats used by the command line tool."""

import csv
import json
import math

import numpy as np

from .chain import ChainDraws
from .model import ModelVariant, SelectionData

MISSING_TOKENS = ("", "NA", "na", "NaN", "nan")


class DataError(ValueError):
    """Input file is missing or violates its schema."""


def _parse_float(text, what, line):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {line}: {what} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {line}: {what} is not finite: {text!r}")
    return value


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path}: empty file")
            rows = [r for r in reader if r]
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DataError(f"{path}: {exc}") from None
    header = [h.strip() for h in header]
    for i, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise DataError(f"line {i}: expected {len(header)} fields, found {len(r)}")
    return header, rows


def read_dataset(path, outcome, select, x_cols, w_cols, binary=False, intercept=True):
    """Load a selection dataset.

    The outcome field must be empty (or NA) exactly when the selection
    indicator is 0.  A column of ones is prepended to X and W unless
    ``intercept`` is false.
    """
    header, rows = _read_rows(path)
    col = {name: j for j, name in enumerate(header)}
    for name in [outcome, select, *x_cols, *w_cols]:
        if name not in col:
            raise DataError(f"{path}: column {name!r} not found")
    if not rows:
        raise DataError(f"{path}: no data rows")
    n = len(rows)
    u = np.empty(n, dtype=np.int8)
    y = np.full(n, np.nan)
    X = np.empty((n, len(x_cols)))
    W = np.empty((n, len(w_cols)))
    for i, r in enumerate(rows):
        line = i + 2
        s = r[col[select]].strip()
        if s not in ("0", "1"):
            raise DataError(f"line {line}: selection value {s!r} not in {{0, 1}}")
        u[i] = int(s)
        yt = r[col[outcome]].strip()
        if yt in MISSING_TOKENS:
            if u[i] == 1:
                raise DataError(f"line {line}: outcome missing where {select} = 1")
        else:
            if u[i] == 0:
                raise DataError(f"line {line}: outcome present where {select} = 0")
            y[i] = _parse_float(yt, outcome, line)
            if binary and y[i] not in (0.0, 1.0):
                raise DataError(f"line {line}: binary outcome must be 0 or 1, found {yt!r}")
        for j, name in enumerate(x_cols):
            X[i, j] = _parse_float(r[col[name]].strip(), name, line)
        for j, name in enumerate(w_cols):
            W[i, j] = _parse_float(r[col[name]].strip(), name, line)
    if intercept:
        X = np.column_stack([np.ones(n), X])
        W = np.column_stack([np.ones(n), W])
    if X.shape[1] == 0 or W.shape[1] == 0:
        raise DataError("both equations need at least one covariate")
    try:
        return SelectionData(u, y, X, W, binary=binary, x_names=list(x_cols), w_names=list(w_cols))
    except ValueError as exc:
        raise DataError(str(exc)) from None


def write_dataset(path, data, outcome="y", select="u"):
    """Write raw covariates (intercept column dropped) plus u and y.

    Covariates shared by both equations are written once under their name.
    """
    cols, values = [], []
    x_names = data.x_names or [f"x{j}" for j in range(data.X.shape[1] - 1)]
    w_names = data.w_names or [f"w{j}" for j in range(data.W.shape[1] - 1)]
    for name, column in zip(x_names, data.X[:, 1:].T):
        cols.append(name)
        values.append(column)
    for name, column in zip(w_names, data.W[:, 1:].T):
        if name not in cols:
            cols.append(name)
            values.append(column)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow([select, outcome, *cols])
        for i in range(data.n):
            yv = "" if data.u[i] == 0 else _fmt(data.y[i])
            out.writerow([int(data.u[i]), yv, *(_fmt(v[i]) for v in values)])


def _fmt(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


DRAWS_PREFIX = ("chain", "iter")


def write_draws(path, chains):
    names = chains[0].param_names()
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow([*DRAWS_PREFIX, *names])
        for c in chains:
            mat = c.as_matrix()
            for it, row in zip(c.iters, mat):
                out.writerow([c.chain, int(it), *(_fmt(v) for v in row)])


def read_draws(path):
    """Parse a draws file into ``(chains, variant)``.

    The variant is inferred from the columns: sigma1 marks a continuous model,
    a constant ``inf`` nu a normal-error model.
    """
    header, rows = _read_rows(path)
    if header[:2] != list(DRAWS_PREFIX) or "rho" not in header or "nu" not in header:
        raise DataError(f"{path}: not a draws file (expected columns chain, iter, ..., rho, nu)")
    names = header[2:]
    if not any(n.startswith("beta_") for n in names) or not any(n.startswith("gamma_") for n in names):
        raise DataError(f"{path}: draws file lacks beta_/gamma_ columns")
    if not rows:
        raise DataError(f"{path}: no draws")
    by_chain = {}
    for i, r in enumerate(rows, start=2):
        try:
            chain = int(r[0])
            it = int(r[1])
            vals = [float(v) for v in r[2:]]
        except ValueError:
            raise DataError(f"line {i}: malformed draw row") from None
        if any(math.isnan(v) for v in vals):
            raise DataError(f"line {i}: NaN in draws")
        by_chain.setdefault(chain, ([], []))
        by_chain[chain][0].append(it)
        by_chain[chain][1].append(vals)
    nu_col = names.index("nu")
    all_nu = np.array([v[nu_col] for _, vals in by_chain.values() for v in vals])
    heavy = not np.all(np.isinf(all_nu))
    binary = "sigma1" not in names
    variant = {(False, False): ModelVariant.SELECTION_NORMAL, (False, True): ModelVariant.SELECTION_T,
               (True, False): ModelVariant.SELECTION_PROBIT,
               (True, True): ModelVariant.SELECTION_ROBIT}[(binary, heavy)]
    chains = [ChainDraws.from_matrix(variant, names, np.array(vals), np.array(its), chain=c)
              for c, (its, vals) in sorted(by_chain.items())]
    return chains, variant


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_json(path, obj):
    """Deterministic JSON; non-finite floats are written as strings."""
    with open(path, "w") as fh:
        json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
