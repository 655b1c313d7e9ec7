"""Desk-scale depth-prompted camouflaged-object segmentation."""

from .config import RunConfig, VARIANTS
from .data import Sample, augment, read_dataset, synth_sample, write_dataset
from .metrics import (
    e_measure,
    evaluate_pair,
    evaluate_pair_dir,
    mae,
    s_measure,
    weighted_fmeasure,
)
from .model import CamoGraphNet, build_model, count_parameters
from .train import ablate, load_checkpoint, save_checkpoint, train

__all__ = [
    "RunConfig", "VARIANTS", "Sample", "augment", "read_dataset",
    "synth_sample", "write_dataset", "e_measure", "evaluate_pair",
    "evaluate_pair_dir", "mae", "s_measure", "weighted_fmeasure",
    "CamoGraphNet", "build_model", "count_parameters", "ablate",
    "load_checkpoint", "save_checkpoint", "train",
]
