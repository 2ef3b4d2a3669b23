"""Tag intelligence for design-image corpora.

Mines tag co-occurrence structure, normalizes the tag vocabulary, predicts
missing semantic tags with per-tag visual+textual classifiers, explains each
prediction, and serves tag-augmented retrieval.
"""

__version__ = "0.1.0"
