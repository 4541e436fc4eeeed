//! Every subcommand, run twice in fresh directories (once on a single
//! thread), must produce byte-identical stdout and files, equal to the
//! checked-in goldens. `HANDCLOUD_BLESS=1` rewrites the goldens.

mod common;

#[test]
fn outputs_are_deterministic_and_match_goldens() {
    let failures = common::check_goldens(std::env::var_os("HANDCLOUD_BLESS").is_some());
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}
