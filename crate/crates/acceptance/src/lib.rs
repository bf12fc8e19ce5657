//! Holds the acceptance suite only; see `tests/acceptance.rs`.
//!
//! Run with `cargo test -p crsq-acceptance --test acceptance`. The released
//! dataset is read from `$CRSQ_RELEASED_DATASET` (default
//! `data/released/dataset.tsv` under the workspace root).
