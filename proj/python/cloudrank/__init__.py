"""Python access to the cloudrank core: AHP weights, tiered pricing, catalogs, QoS averages and ranking."""

import json

from . import _core
from ._core import ValidationError

__all__ = ["ValidationError", "weights", "tiered_cost", "catalog_offers", "qos_averages", "rank"]


def weights(judgments, criteria=None):
    """Weights from pairwise judgments given as (criterion_a, criterion_b, value) triples."""
    return json.loads(_core.weights([tuple(j) for j in judgments], list(criteria or [])))


def tiered_cost(tiers, usage_gb):
    """Marginal cost of usage over (from_gb, to_gb or None, price_per_gb) bands, as a decimal string.

    Returns None when usage exceeds the last bounded band.
    """
    norm = [(str(a), None if b is None else str(b), str(p)) for a, b, p in tiers]
    return _core.tiered_cost(norm, str(usage_gb))


def _text(document):
    return document if isinstance(document, str) else json.dumps(document)


def catalog_offers(document):
    """Validated offers of a catalog document, grouped by kind."""
    return json.loads(_core.catalog_offers(_text(document)))


def qos_averages(csv_text, client_location=None):
    return json.loads(_core.qos_averages(csv_text, client_location))


def rank(request, catalog, qos_csv, by="ratio", limit=100, workers=1):
    """Ranked combinations for a request against a catalog document and QoS sample CSV."""
    return json.loads(_core.rank(_text(request), _text(catalog), qos_csv, by, limit, workers))
