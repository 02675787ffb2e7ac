"""Scene-aware stimulus layout optimization toolkit.

Estimates perceptual luminance from RGB scenes, recommends multi-stimulus
layouts with a linear contextual bandit, and validates recommendations in
a simulated online steady-state-response session with a fuzzy-attention
decoder on synthetic signals.
"""

from .luminance import (
    SceneLuminance,
    average_clip,
    clip_to_grid,
    discretize,
    frame_luminance,
    linearize,
    normalize_map,
    pixel_luminance,
    to_xyz,
)
from .rewards import (
    RewardConfig,
    RewardCurve,
    RewardCurves,
    StimulusAssessment,
    assess_layout,
    curve_from_anchors,
    default_isd_curve,
    default_luminance_curve,
    layout_reward,
    sod_reward,
)
from .bandit import (
    ContextGrid,
    LinUcbBandit,
    build_features,
    build_features_batch,
    reward_of_arm,
    train_on_triplets,
)
from .sampling import InfeasibleContextError, SamplerConfig, sample_candidates
from .recommend import LayoutRecommender, Recommendation, loo_reward_config, no_layout
from .fuzzy import FuzzyRule, firing_strengths, sal_forward, tal_forward
from .filters import amplitude_spectrum, bandpass, design_bandpass
from .synth import (
    HIGH_QUALITY,
    STIMULI,
    SignalSynthesizer,
    StimulusSpec,
    SynthConfig,
    TrialCondition,
    quality_factor,
    synth_trial,
)
from .decoder import FuzzyDecoder
from .session import (
    OnlineSimulator,
    RingBuffer,
    SessionMetrics,
    TrialRecord,
    extract_epoch,
    itr,
)
from .events import EventClient, EventServer, ProtocolError, serve_events

__version__ = "0.1.0"

__all__ = [
    "SceneLuminance", "average_clip", "clip_to_grid", "discretize",
    "frame_luminance", "linearize", "normalize_map", "pixel_luminance", "to_xyz",
    "RewardConfig", "RewardCurve", "RewardCurves", "StimulusAssessment",
    "assess_layout", "curve_from_anchors", "default_isd_curve",
    "default_luminance_curve", "layout_reward", "sod_reward",
    "ContextGrid", "LinUcbBandit", "build_features", "build_features_batch",
    "reward_of_arm", "train_on_triplets",
    "InfeasibleContextError", "SamplerConfig", "sample_candidates",
    "LayoutRecommender", "Recommendation", "loo_reward_config", "no_layout",
    "FuzzyRule", "firing_strengths", "sal_forward", "tal_forward",
    "amplitude_spectrum", "bandpass", "design_bandpass",
    "HIGH_QUALITY", "STIMULI", "SignalSynthesizer", "StimulusSpec",
    "SynthConfig", "TrialCondition", "quality_factor", "synth_trial",
    "FuzzyDecoder",
    "OnlineSimulator", "RingBuffer", "SessionMetrics", "TrialRecord",
    "extract_epoch", "itr",
    "EventClient", "EventServer", "ProtocolError", "serve_events",
]
