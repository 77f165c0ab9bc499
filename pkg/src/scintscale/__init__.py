"""Scale GNSS amplitude-scintillation (S4) observations to direct-to-cellular
bands and summarize how often strong scintillation occurs."""

from .scintcore import (
    BANDS,
    DNA,
    L1,
    L2,
    L5,
    LB,
    N255,
    N256,
    Constellation,
    ExponentModel,
    FrequencyBand,
    IntensitySeries,
    ModelKind,
    ScintRecord,
    Severity,
    Source,
    classify,
    compute_s4,
    derive_n,
    get_band,
    n_of,
    scale_s4,
)

__version__ = "0.1.0"
