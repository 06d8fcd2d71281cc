//! Compiles `tests/c/smoke.c` against the header and the static library.

use std::path::PathBuf;
use std::process::Command;

fn static_lib() -> PathBuf {
    // Test binaries live in target/<profile>/deps; the library one level up.
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let name = if cfg!(windows) { "ofisp_ffi.lib" } else { "libofisp_ffi.a" };
    profile_dir.join(name)
}

#[test]
fn c_program_links_and_runs() {
    let lib = static_lib();
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler on PATH");
        return;
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
