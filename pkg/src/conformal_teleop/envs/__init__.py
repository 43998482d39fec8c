from .arm import (GenerationError, PROFILES, UserProfile, arm_fk, gen_arm_goal,
                  gen_arm_grasp)
from .catalog import SCENARIOS, describe_catalog, get_scenario, load_dataset, make_env
from .core import (ArmEnv, GridEnv, ScenarioDataset, Trajectory, load_jsonl,
                   save_jsonl, wrap_angles)
from .grid import gen_grid_precision, gen_grid_preference
from .schemes import (SCHEME_LADDER, SCHEMES, InputScheme, label_lowdim,
                      noisy_human, relabel_dataset, scheme_by_name)

__all__ = [
    "ArmEnv", "GenerationError", "GridEnv", "InputScheme", "PROFILES",
    "SCENARIOS", "SCHEMES", "SCHEME_LADDER", "ScenarioDataset", "Trajectory",
    "UserProfile", "arm_fk", "describe_catalog", "gen_arm_goal", "gen_arm_grasp",
    "gen_grid_precision", "gen_grid_preference", "get_scenario", "label_lowdim",
    "load_dataset", "load_jsonl", "make_env", "noisy_human", "relabel_dataset",
    "save_jsonl", "scheme_by_name", "wrap_angles",
]
