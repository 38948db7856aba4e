//! Holds the acceptance suite in `tests/acceptance.rs`, kept apart from the
//! library crates so its long statistical runs execute after their tests.
