"""Syntactic word-feature spaces and voxelwise fMRI encoding models.

Subpackages cover the full chain for a narrated-story experiment:
ingesting parsed transcripts (`treebank`), building word-level feature
spaces (`features`, `incparser`, `gcn`), aligning them to fMRI timing
(`signal`), fitting cross-validated ridge models per voxel (`encoder`),
and running block-resampling significance analyses aggregated over
language ROIs (`stats`, `atlas`).  `pipeline` wires everything behind a
CLI.
"""

__version__ = "0.1.0"
