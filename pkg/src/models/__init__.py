from src.models.ensemble import FeatureMap, ModelEnsemble, WeightMatrix, is_column_stochastic
from src.models.hard_instances import StateAbstraction, TreeInstance, leaf_state, node_index
from src.models.learner import (
    IterationRecord,
    LearnerConfig,
    LinearConstraint,
    PacResult,
    VersionSpace,
)
from src.models.manifest import DiagnoseSpec, GenerateSpec, RunManifest, RunReport
from src.models.mdp import Policy, TabularMDP, Trajectory, ValueTable, reachable_states
from src.models.selection import PartitionFamily, SelectionResult, SelectionRound

__all__ = [
    'DiagnoseSpec',
    'FeatureMap',
    'GenerateSpec',
    'IterationRecord',
    'LearnerConfig',
    'LinearConstraint',
    'ModelEnsemble',
    'PacResult',
    'PartitionFamily',
    'Policy',
    'RunManifest',
    'RunReport',
    'SelectionResult',
    'SelectionRound',
    'StateAbstraction',
    'TabularMDP',
    'Trajectory',
    'TreeInstance',
    'ValueTable',
    'VersionSpace',
    'WeightMatrix',
    'is_column_stochastic',
    'leaf_state',
    'node_index',
]
