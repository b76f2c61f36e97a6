"""Theme-specific climate-policy indicators from policy text.

Classify policy summaries into Mitigation, Adaptation, Disaster Risk
Management and Loss and Damage, aggregate the labels into country-year
indicators, and relate them to development outcomes through correspondence
analysis and two-way fixed-effects regression.
"""

__version__ = "0.1.0"

from .themes import THEMES  # noqa: E402
