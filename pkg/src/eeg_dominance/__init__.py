"""Band-power and hemisphere dominance analysis for four-channel EEG."""

from .core import (
    BANDS,
    DATA_ELECTRODES,
    MEMORY,
    PUZZLE,
    TALKING,
    ActivityKind,
    Catalog,
    CognitiveDomain,
    EEGError,
    Electrode,
    FrequencyBand,
    Hemisphere,
    SubjectProfile,
    band_of,
    hemisphere_of,
    load_catalog,
)
from .dominance import (
    DominanceVerdict,
    DominantActivity,
    HemisphereGamma,
    classify,
    classify_summaries,
    hemisphere_gamma,
)
from .dsp import (
    ActivitySummary,
    BandStats,
    DSPConfig,
    Epoch,
    Spectrum,
    analyze_activity,
    preprocess,
    segment,
    summarize_activity,
    to_band_stats,
    to_spectrum,
)
from .estimators import BandStatsTransformer, GammaDominanceClassifier
from .ingest import (
    Recording,
    SegmentSpec,
    StreamPacket,
    Tone,
    collect_stream,
    decode_packet,
    encode_packet,
    generate_synthetic,
    read_recording,
    write_recording,
)
from .session import Recommendation, Session, load_session, render_report

__version__ = "0.1.0"
