"""Interactive data sonification engine.

Maps tabular data streams to synthesized audio: continuous and discrete
parameter mapping, FM synthesis with cross-track modulation, interleaved
playback, offline WAV rendering, and a live WebSocket control server.
"""

from .data import (
    AttributeSeries,
    Dataset,
    DatasetError,
    EmptyDatasetError,
    NormalizationMethod,
    ParseError,
    load_dataset,
    normalize_value,
)
from .engine import RenderEngine, SessionHost, replay_timeline
from .mapping import (
    DiscreteRule,
    FrequencyMapping,
    ModIndexMapping,
    Transport,
    TransportState,
    advance,
    discrete_step,
    interleave_schedule,
    map_amplitude,
    map_frequency,
    map_mod_index,
)
from .render import render_session, write_wav
from .session import (
    FMLink,
    Modulator,
    OscillatorSource,
    SampleSource,
    Session,
    TrackConfig,
    ValidationError,
    apply_update,
    load_session,
    session_from_dict,
    session_to_dict,
)
from .synth import (
    Envelope,
    OscillatorKind,
    adsr_gain,
    fm_sample,
    load_sample,
    osc_value,
    pan_gains,
    sample_voice,
)

__version__ = "0.1.0"
