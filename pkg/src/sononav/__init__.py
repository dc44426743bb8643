"""Auditory navigation engine: 4-DOF alignment errors rendered as sound.

The pipeline per tracked pose: geometry (entry-plane and angular error
decomposition) -> alignment state machine (hysteresis zones, phase
transitions) -> parameter mapping (pulse pitch/rate, earcons) -> FM
synthesis. Around it: OSC ingress, a WebSocket state stream for the
steering client, session logging/replay, a deterministic simulation
harness, and the statistics used to evaluate alignment performance.
"""

from .config import EngineConfig, NetworkConfig, load_config, save_config
from .engine import NavigationEngine, phase_event_trace, replay_session
from .fsm import (
    AlignmentState,
    Dimension,
    Phase,
    TransitionEvent,
    TransitionKind,
    ZoneThresholds,
    dimension_flags,
    step,
)
from .geometry import (
    AnatomicalFrame,
    EntryPlane,
    ErrorVector,
    Pose,
    PlannedTrajectory,
    RigidTransform,
    angular_error,
    entry_error,
    error_vector,
    make_entry_plane,
    pivot_calibrate,
    register_landmarks,
)
from .mapping import (
    EarconKind,
    EarconSpec,
    MappingConfig,
    SynthMode,
    SynthParams,
    earcons_for,
    map_params,
    normalize_errors,
)
from .osc import MalformedPacketError, OscMessage, decode_osc, encode_osc
from .session import (
    SessionLog,
    SessionRecord,
    TargetPlan,
    ingest_pose,
    read_session,
    write_session,
)
from .simulate import (
    Keyframe,
    MotionScript,
    NoiseModel,
    Scenario,
    TrialMetrics,
    demo_scenario,
    load_scenario,
    metrics_from_log,
    report,
    run_scenario,
)
from .stats import (
    Sample,
    TostResult,
    least_equivalence_interval,
    paired_t,
    summarize,
    tost,
    welch_t,
)
from .synth import (
    AudioBlock,
    FmVoice,
    PulseStreamSynth,
    StreamMixer,
    SynthConfig,
    offline_render,
    render_earcon,
    write_wav,
)

__version__ = "0.1.0"
