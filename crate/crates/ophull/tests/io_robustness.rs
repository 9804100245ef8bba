//! Corrupted input must surface as typed errors, never as a panic.

mod common;

use common::*;
use ophull::io::{self, FileMode};
use proptest::prelude::*;

fn family_bytes(mode: FileMode) -> Vec<u8> {
    let mut r = rng(42);
    let family = random_family(&mut r, 2, 3, 2, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("family");
    io::write_family(&path, &family, mode).unwrap();
    std::fs::read(&path).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn truncated_or_flipped_family_never_panics(
        cut in 0usize..400,
        flip_pos in 0usize..400,
        flip_to in any::<u8>(),
        binary in any::<bool>(),
    ) {
        let mode = if binary { FileMode::Binary } else { FileMode::Text };
        let mut bytes = family_bytes(mode);
        if flip_pos < bytes.len() {
            bytes[flip_pos] = flip_to;
        }
        bytes.truncate(cut.min(bytes.len()));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mutated");
        std::fs::write(&path, &bytes).unwrap();
        // any outcome is fine as long as it is a typed Result
        let _ = io::read_family(&path);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("garbage");
        std::fs::write(&path, &bytes).unwrap();
        let _ = io::read_family(&path);
        let _ = io::read_operator(&path);
        let _ = io::read_model(&path);
    }
}
