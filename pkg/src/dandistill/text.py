"""Whitespace tokenization and n-gram extraction.

Tokenization is deliberately simple: lowercase, split on runs of Unicode
whitespace, no further normalization. N-grams never cross document
boundaries and are joined with a single space for use as dictionary keys.
"""


def tokenize(text):
    """Lowercase and split on whitespace runs."""
    return text.lower().split()


def iter_ngrams(tokens, n_min, n_max):
    """Yield space-joined n-grams in extraction order.

    Order: all n-grams of order n_min left to right, then n_min+1, etc.
    """
    for n in range(n_min, n_max + 1):
        if n == 1:
            yield from tokens
        else:
            for i in range(len(tokens) - n + 1):
                yield " ".join(tokens[i : i + n])


def count_ngrams_in(tokens, n_min, n_max):
    """Number of n-grams iter_ngrams would yield (no materialization)."""
    total = 0
    for n in range(n_min, n_max + 1):
        total += max(0, len(tokens) - n + 1)
    return total
