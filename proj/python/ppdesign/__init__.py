"""Joint sequence-structure diffusion toolkit for protein binder design."""

from ppdesign._core import (  # noqa: F401
    ALPHABET,
    Chain,
    ComplexRecord,
    ConfigError,
    ContractError,
    DenoiserConfig,
    IoError,
    Model,
    NoiseSchedule,
    NumericError,
    RecordParseError,
    __version__,
    amino_acid_recovery,
    build_cosine_schedule,
    build_sigmoid_schedule,
    categorical_kl,
    coordinate_loss,
    coordinate_posterior,
    curate_text,
    diversity,
    estimate_mu_knn,
    forward_marginal_distribution,
    forward_step_distribution,
    knn_dist,
    knn_energy,
    load_records,
    novelty,
    posterior_distribution,
    run_selfchecks,
    save_records,
    sequence_one_hot,
    synth_toy_dataset,
    synthetic_score,
    toy_cipher_sequence,
    train,
)
