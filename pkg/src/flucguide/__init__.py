"""Fluctuation-guided search on planted Ising instances, emulated classically.

The package builds frustrated-loop instances on a chimera graph with embedded
gadgets or domain-wall chains, samples them with path-integral Monte Carlo
under reverse-anneal schedules with per-qubit offsets, classifies the reads,
and runs a penalty-plus-greedy search seeded from the sampled states.
"""

from .ising import IsingProblem, energy, exact_ground_energy
from .chimera import ChimeraGraph, build_chimera
from .planted import InstanceConfig, PlantedInstance, build_instance, certify_planted
from .anneal import AnnealParams, SampleSet, Schedule, forward_anneal, reverse_anneal, sweep_grid
from .analysis import classify, classify_set, conditional_table, heatmap
from .penalty import PenaltyParams, flexibility_tradeoff_16, usecase_pipeline

__version__ = "0.1.0"

__all__ = [
    "IsingProblem", "energy", "exact_ground_energy", "ChimeraGraph", "build_chimera",
    "InstanceConfig", "PlantedInstance", "build_instance", "certify_planted",
    "AnnealParams", "SampleSet", "Schedule", "forward_anneal", "reverse_anneal", "sweep_grid",
    "classify", "classify_set", "conditional_table", "heatmap",
    "PenaltyParams", "flexibility_tradeoff_16", "usecase_pipeline",
]
