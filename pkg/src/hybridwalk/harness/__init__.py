"""Training, evaluation and comparison harness."""
from hybridwalk.harness.config import ConfigError, ExperimentConfig, config_from_dict, dump_config, load_config
from hybridwalk.harness.train import (
    METRIC_COLUMNS,
    CheckpointError,
    EvalSummary,
    RunRecord,
    checkpoint_deficit,
    evaluate,
    load_checkpoint,
    read_metrics,
    train,
)
