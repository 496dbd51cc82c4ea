"""Drawing-based depression screening toolkit.

Pipeline: a stroke-ordered sketch is decomposed into 12 cumulative
sub-sketches, each frame is rasterized and encoded by a shared CNN, an LSTM
extracts a temporal feature per step, the final step is fused with a caption
embedding, and a three-layer decoder emits the two-class assessment.
"""

from .autodiff import Tensor, backward
from .captions import (
    CaptionCache,
    CaptionRecord,
    MentalPrompt,
    MockCaptionClient,
    RemoteCaptionClient,
    default_prompt,
    generate_caption,
    mock_caption,
    render_prompt,
)
from .data import (
    DatasetRecord,
    FeatsVector,
    FoldPlan,
    Phq9Response,
    holdout_split,
    label_from_phq9,
    make_folds,
    read_corpus,
    synth_corpus,
    write_corpus,
)
from .encoders import (
    EncoderConfig,
    ExternalVisualEncoder,
    ReferenceVisualEncoder,
    TemporalEncoder,
    TextEncoder,
)
from .evaluate import (
    accuracy,
    baseline_logreg,
    baseline_mlp,
    cross_validate,
    cross_validate_logreg,
    per_class_recall,
    run_ablations,
)
from .losses import FocalLossConfig, focal_loss, softmax_cross_entropy
from .model import (
    Assessment,
    AblationSwitches,
    ModelConfig,
    VsllmModel,
    apply_switches,
    predict,
    train,
)
from .raster import RasterImage, rasterize, rasterize_sequence
from .sketch import (
    Sketch,
    Stroke,
    SubSketchSequence,
    cumulative_stroke_counts,
    decompose,
    parse_sketch_json,
    serialize_sketch,
)

__version__ = "0.1.0"
