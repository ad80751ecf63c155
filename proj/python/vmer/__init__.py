"""Python bindings for the vmer vertical-arithmetic recognition library."""

import json as _json

from ._vmer import (
    CLASS_NAMES,
    Annotation,
    BBox,
    ConfigError,
    Detection,
    DetectionSet,
    DigitSlot,
    ERReport,
    Error,
    Expression,
    FormatError,
    InvalidArgument,
    MeanApResult,
    Operator,
    OptimizeResult,
    ParseError,
    PipelineResult,
    PostprocessParams,
    Prediction,
    SchemaError,
    Transcription,
    TranscriptionError,
    dedup_by_iou,
    emit_latex,
    expression_recognition,
    filter_by_confidence,
    iou,
    mean_ap,
    optimize_params,
    parse_latex,
    postprocess,
    read_annotations,
    read_annotations_file,
    read_detections,
    read_detections_file,
    read_predictions_file,
    tokenize,
    transcribe,
    transcribe_all,
    write_annotations,
    write_detections,
    write_detections_file,
    write_predictions_file,
)
from . import _vmer

__version__ = "0.1.0"


def _dump(config):
    if config is None:
        return "{}"
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def inject_noise(sets, profile=None, seed=0, workers=0):
    """Corrupt ground-truth sets with a noise profile given as a dict or JSON string."""
    return _vmer.inject_noise(sets, _dump(profile), seed, workers)


def generate_dataset(n, seed, out_dir, synth=None, builtin_per_digit=64, workers=0):
    """Render a synthetic dataset into out_dir; returns the annotation file name."""
    return _vmer.generate_dataset(n, seed, str(out_dir), _dump(synth), builtin_per_digit, workers)


def run_pipeline(config):
    """Run generate, noise, postprocess, transcribe and evaluate from a run config."""
    return _vmer.run_pipeline(_dump(config))


def validate_detections(text):
    """Check interchange JSON text; raises ParseError or SchemaError when invalid."""
    return len(read_detections(text))
