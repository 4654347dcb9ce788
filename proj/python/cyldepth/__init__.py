"""Cylindrical surround-view depth geometry."""

from ._cyldepth import (
    ConsistencyError,
    DimensionError,
    EmptyEvaluationError,
    Error,
    FormatError,
    IoError,
    NoOverlapError,
    OnAxisError,
    ParameterError,
    Rig,
    SchemaError,
    aggregate,
    decode_pfm,
    encode_pfm,
    evaluate,
    feature_similarity,
    geodesic_delta,
    presets,
    probe,
    render,
    sparse_attention,
    spatial_weight,
    to_cylinder,
)

__all__ = [name for name in dir() if not name.startswith("_")]
