"""Cross-lingual ASTE pipeline toolkit: boundary-aware code-switched
corpus construction, test-time augmentation with candidate voting, and
weighted overlap-based evaluation."""

__version__ = "0.1.0"

from .corpus import Corpus, Polarity, Sample, Triplet  # noqa: F401
from .metrics import MetricsReport, all_null_baseline, overlap, sim, \
    weighted_scores  # noqa: F401
from .serde import emit_triplets, parse_triplets  # noqa: F401
from .tta import TtaConfig, tta_predict, vote  # noqa: F401
