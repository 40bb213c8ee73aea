"""Layout-aware resident identification for multi-occupant smart homes.

The pipeline turns a home layout map into an accessibility graph, the
graph into a row-stochastic transition matrix, the matrix into node
embeddings via random walks and skip-gram, and finally trains a
bidirectional LSTM tagger that labels each sensor event with the
resident who caused it.
"""

from .errors import (
    ConfigError,
    DataError,
    NumericError,
    PipelineError,
)
from .geometry import (
    AccessibilityGraph,
    LayoutMap,
    Point,
    Segment,
    build_graph,
    complete_graph_prune,
    load_layout,
    manual_edge,
    on_segment,
    segments_intersect,
)
from .graph import AccessProbabilityGraph, apg_from_ag, transition_row
from .embedding import (
    NodeEmbeddings,
    SkipGramConfig,
    WalkConfig,
    make_encoder,
    random_walks,
    train_skipgram,
)
from .timecodec import cyclic_distance, encode_component, encode_timestamp
from .ingest import (
    EventRecord,
    FeatureSequence,
    LabeledEvent,
    SamplingConfig,
    build_features,
    chunk,
    downsample,
    label_events,
    parse_log,
    upsample_training,
)
from .model import (
    EvalReport,
    LstmParams,
    TrainConfig,
    cross_validate,
    evaluate,
    forward,
    gradient_check,
    lstm_cell,
    train,
)
from .simulator import ResidentScript, SensorModel, SimRun, make_fixture, simulate

__version__ = "0.1.0"
