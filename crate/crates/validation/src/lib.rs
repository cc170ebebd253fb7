//! Holds the `acceptance` test target. Run it with
//! `cargo test -p stoplight-validation --test acceptance`.
