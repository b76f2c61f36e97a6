"""The four policy themes and their label-cell encoding."""

import numpy as np

THEMES = ("Mitigation", "Adaptation", "Disaster Risk Management", "Loss and Damage")

# short names used in compact layouts (figure facets, CSV column headers)
SHORT_NAMES = {
    "Mitigation": "Mitigation",
    "Adaptation": "Adaptation",
    "Disaster Risk Management": "DRM",
    "Loss and Damage": "L&D",
}

LABEL_SEPARATOR = "|"


def parse_labels(cell):
    """Parse a pipe-separated label cell into a frozenset of themes.

    Raises ``ValueError`` for any label outside the theme universe.
    """
    cell = cell.strip()
    if not cell:
        return frozenset()
    labels = [part.strip() for part in cell.split(LABEL_SEPARATOR)]
    unknown = [lab for lab in labels if lab not in THEMES]
    if unknown:
        raise ValueError(f"unknown theme label(s): {', '.join(map(repr, unknown))}")
    return frozenset(labels)


def format_labels(labels):
    """Inverse of :func:`parse_labels`, in canonical theme order."""
    return LABEL_SEPARATOR.join(t for t in THEMES if t in labels)


def label_matrix(label_sets):
    """Binary indicator matrix of shape (n_docs, 4)."""
    return np.array([[t in labels for t in THEMES] for labels in label_sets],
                    dtype=np.int8).reshape(-1, len(THEMES))
