"""Posterior summaries, Gelman-Rubin R-hat and figure data.

All functions accept :class:`~bayes_selection.chain.ChainDraws` objects or a
list of them; a list is pooled by concatenation where pooling makes sense.
"""

import math

import numpy as np

from .chain import ChainDraws

DEFAULT_QUANTILES = (0.025, 0.975)
FIVE_NUMBER = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_BINS = 30


class NotApplicable(ValueError):
    """Raised for a statistic that is undefined for the chain's model."""


def _as_list(draws):
    if isinstance(draws, ChainDraws):
        return [draws]
    draws = list(draws)
    if not draws:
        raise ValueError("no chains given")
    return draws


def pooled(draws):
    """Dict of parameter name -> concatenated draws across chains."""
    chains = _as_list(draws)
    names = chains[0].param_names()
    for c in chains[1:]:
        if c.param_names() != names:
            raise ValueError("chains carry different parameters")
    mats = [c.as_matrix() for c in chains]
    full = np.vstack(mats)
    return dict(zip(names, full.T))


def _quantiles(x, probs):
    if np.all(np.isinf(x)) and np.all(x == x[0]):
        # constant inf column (nu of the normal-error models)
        return [float(x[0])] * len(probs)
    return [float(v) for v in np.quantile(x, probs, method="linear")]


def summarize_values(x, quantiles=DEFAULT_QUANTILES):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("cannot summarize an empty chain")
    lo, hi = _quantiles(x, quantiles)
    if np.all(np.isinf(x)) and np.all(x == x[0]):
        mean = median = float(x[0])
        sd = 0.0
    else:
        mean = float(x.mean())
        median = _quantiles(x, (0.5,))[0]
        sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return {"mean": mean, "median": median, "sd": sd, "ci_lower": lo, "ci_upper": hi}


def summarize(draws, quantiles=DEFAULT_QUANTILES):
    """{parameter: {mean, median, sd, ci_lower, ci_upper}} over pooled draws."""
    if len(quantiles) != 2 or not 0 <= quantiles[0] <= quantiles[1] <= 1:
        raise ValueError("quantiles must be a pair 0 <= lower <= upper <= 1")
    table = pooled(draws)
    if next(iter(table.values())).size == 0:
        raise ValueError("cannot summarize an empty chain")
    return {name: summarize_values(x, quantiles) for name, x in table.items()}


def gelman_rubin_values(chains, split=False):
    """R-hat from an (m, n) array of draws, m chains of length n."""
    arr = np.asarray(chains, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two chains of equal length")
    if split:
        half = arr.shape[1] // 2
        arr = np.vstack([arr[:, :half], arr[:, arr.shape[1] - half:]])
    m, n = arr.shape
    if n < 2:
        raise ValueError("chains need at least two draws")
    means = arr.mean(axis=1)
    within = float(arr.var(axis=1, ddof=1).mean())
    if not within > 0:
        raise ValueError("zero within-chain variance; R-hat undefined")
    between = n * float(means.var(ddof=1))
    return math.sqrt((n - 1) / n + between / (n * within))


def gelman_rubin(chains, parameter, split=False):
    """Potential scale reduction of ``parameter`` across two or more chains."""
    chains = _as_list(chains)
    if len(chains) < 2:
        raise ValueError("R-hat needs at least two chains")
    lengths = {c.n_draws for c in chains}
    if len(lengths) != 1:
        raise ValueError(f"chains have unequal lengths {sorted(lengths)}")
    return gelman_rubin_values([c.parameter(parameter) for c in chains], split=split)


def rhat_table(chains, split=False):
    """R-hat per parameter; parameters without within-chain variation
    (e.g. nu of the normal-error models) are skipped."""
    chains = _as_list(chains)
    out = {}
    for name in chains[0].param_names():
        if name == "nu" and not chains[0].variant.heavy_tailed:
            continue
        out[name] = gelman_rubin(chains, name, split=split)
    return out


def acceptance_rate(draws):
    """Accepted / proposed nu moves after burn-in, pooled over chains."""
    chains = _as_list(draws)
    if not chains[0].variant.heavy_tailed:
        raise NotApplicable(f"{chains[0].variant.value} has no nu updates")
    proposed = sum(c.nu_proposed for c in chains)
    if proposed == 0:
        raise NotApplicable("no nu proposals were recorded after burn-in")
    return sum(c.nu_accepted for c in chains) / proposed


def figure_data(draws, bins=DEFAULT_BINS):
    """Five-number summary and histogram per parameter.

    Returns ``{parameter: {"five_number": [...], "hist_edges": [...],
    "hist_counts": [...]}}``.  The constant ``inf`` nu of the normal-error
    models gets a five-number summary but no histogram.
    """
    out = {}
    for name, x in pooled(draws).items():
        if x.size == 0:
            raise ValueError("cannot build figure data from an empty chain")
        entry = {"five_number": _quantiles(x, FIVE_NUMBER)}
        if np.all(np.isfinite(x)):
            counts, edges = np.histogram(x, bins=bins)
            entry["hist_edges"] = edges.tolist()
            entry["hist_counts"] = counts.tolist()
        else:
            entry["hist_edges"], entry["hist_counts"] = [], []
        out[name] = entry
    return out


def figure_rows(fig):
    """Flatten :func:`figure_data` into CSV rows (parameter, kind, lower, upper, value).

    ``kind`` is one of min, q1, median, q3, max (lower = upper = value) or
    ``bin`` (value = count of draws in [lower, upper)).
    """
    rows = []
    labels = ("min", "q1", "median", "q3", "max")
    for name, entry in fig.items():
        for label, v in zip(labels, entry["five_number"]):
            rows.append((name, label, v, v, v))
        edges, counts = entry["hist_edges"], entry["hist_counts"]
        for j, c in enumerate(counts):
            rows.append((name, "bin", edges[j], edges[j + 1], c))
    return rows
