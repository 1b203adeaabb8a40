from .generate import (
    PHI_SPAN,
    THETA_SPAN,
    DatasetConfig,
    DatasetError,
    ObservationSet,
    TrainingSet,
    add_awgn,
    angle_grid,
    denormalize_label,
    denormalize_labels,
    empirical_snr_db,
    generate_test_set,
    generate_test_sets,
    generate_training_set,
    irs_observations,
    irs_steering,
    normalize_label,
    normalize_labels,
    received_matrices,
    sample_angles,
    source_samples,
    training_snr_draws,
)
from .store import load_dataset, read_header, save_dataset

__all__ = [
    "PHI_SPAN",
    "THETA_SPAN",
    "DatasetConfig",
    "DatasetError",
    "ObservationSet",
    "TrainingSet",
    "add_awgn",
    "angle_grid",
    "denormalize_label",
    "denormalize_labels",
    "empirical_snr_db",
    "generate_test_set",
    "generate_test_sets",
    "generate_training_set",
    "irs_observations",
    "irs_steering",
    "load_dataset",
    "normalize_label",
    "normalize_labels",
    "read_header",
    "received_matrices",
    "sample_angles",
    "save_dataset",
    "source_samples",
    "training_snr_draws",
]
