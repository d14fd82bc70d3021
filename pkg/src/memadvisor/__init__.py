"""Workload-specific executor memory capacity advisor.

Profile a workload at a few small input sizes, classify it by how much
shuffle data it produces relative to its input, and size executor memory
for a target input from the category's expansion factor.
"""

from memadvisor.classifier import Category, ClassificationResult, classify, classify_profile, expansion_factor
from memadvisor.ingest import ProfileSet, RunProfile, StageRecord, parse_profiles
from memadvisor.metrics import ExpansionMetrics, compute_metrics
from memadvisor.predictor import ClusterConfig, MemoryPlan, plan

__version__ = "0.1.0"

__all__ = [
    "Category",
    "ClassificationResult",
    "ClusterConfig",
    "ExpansionMetrics",
    "MemoryPlan",
    "ProfileSet",
    "RunProfile",
    "StageRecord",
    "classify",
    "classify_profile",
    "compute_metrics",
    "expansion_factor",
    "parse_profiles",
    "plan",
]
