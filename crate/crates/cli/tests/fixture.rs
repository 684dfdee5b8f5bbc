//! The committed fixture must be exactly what the generator produces.

use std::fs;
use std::path::{Path, PathBuf};

use attrib_cli::synth::{generate, write_fixture, DEFAULT_SEED, PUBLISHERS};

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn committed_fixture_matches_generator() {
    let committed = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let tmp = tempfile::tempdir().unwrap();
    let fixture = generate(&PUBLISHERS, DEFAULT_SEED).unwrap();
    write_fixture(&fixture, &tmp.path().join("corpus"), &tmp.path().join("labels.csv")).unwrap();
    let want = files(tmp.path());
    assert_eq!(files(&committed), want);
    for f in &want {
        assert_eq!(fs::read(committed.join(f)).unwrap(), fs::read(tmp.path().join(f)).unwrap(), "{}", f.display());
    }
}
