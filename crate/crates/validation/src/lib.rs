//! Holds the `acceptance` test target (`tests/acceptance.rs`), which checks
//! the toolkit's end-to-end claims and prints one PASS/FAIL line each.
