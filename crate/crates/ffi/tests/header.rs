use std::path::Path;
use std::process::Command;

const HEADER: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/include/pbl_inspect.h");

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(HEADER).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.trim().strip_prefix("pub unsafe extern \"C\" fn ").or_else(|| l.trim().strip_prefix("pub extern \"C\" fn ")))
        .map(|l| &l[..l.find('(').unwrap()])
        .collect();
    assert!(exports.len() >= 10, "{exports:?}");
    for f in exports {
        assert!(header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}(")), "{f} missing from header");
    }
    for ty in ["typedef struct PblProject PblProject;", "typedef enum PblStatus", "typedef struct PblPhase"] {
        assert!(header.contains(ty), "{ty}");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        if Command::new(cc).arg("--version").output().is_err() {
            eprintln!("{cc} not found; skipping");
            continue;
        }
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("use_header.txt");
        std::fs::write(
            &src,
            "#include \"pbl_inspect.h\"\nint main(void) { PblPhase p = { PBL_PHASE_KIND_APPROVED, 0 }; (void)p; return pbl_version() == 0; }\n",
        )
        .unwrap();
        let out = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(Path::new(HEADER).parent().unwrap())
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{cc}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

/// Links a small C program against the shared library and runs it.
#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(Path::parent).unwrap();
    if !lib_dir.join("libpbl_inspect_ffi.so").exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("shared library or cc unavailable; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "pbl_inspect.h"

int main(void) {
    PblPhase phase = { PBL_PHASE_KIND_GROUP_REVIEW, 0 };
    PblPhase next;
    uint8_t rounds = 0;
    if (pbl_workflow_advance(phase, 0, PBL_EVENT_REQUEST_INSPECTION, &next, &rounds) != PBL_STATUS_OK) return 1;
    if (next.kind != PBL_PHASE_KIND_INSPECTION_REQUESTED || next.round != 1 || rounds != 1) return 2;
    PblPhase last = { PBL_PHASE_KIND_REVISION_REQUESTED, 2 };
    if (pbl_workflow_advance(last, 2, PBL_EVENT_REQUEST_INSPECTION, &next, &rounds) != PBL_STATUS_REJECTED) return 3;
    if (strncmp(pbl_last_error(), "rounds-exhausted", 16) != 0) return 4;
    char *diff = NULL;
    if (pbl_diff_unified("a.txt", "x\n", "y\n", &diff) != PBL_STATUS_OK) return 5;
    fputs(diff, stdout);
    pbl_string_free(diff);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let out = Command::new("cc")
        .arg("-I")
        .arg(Path::new(HEADER).parent().unwrap())
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .arg("-L")
        .arg(lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-lpbl_inspect_ffi")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(
        String::from_utf8_lossy(&run.stdout),
        "--- a/a.txt\n+++ b/a.txt\n@@ -1,1 +1,1 @@\n-x\n+y\n"
    );
}
