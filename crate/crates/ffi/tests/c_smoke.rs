//! Compiles a small C program against the generated header and links it to
//! the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "wayfind.h"

int main(void) {
    size_t d = 0;
    if (wf_levenshtein("Hepatology", "Hematology", &d) != WF_STATUS_OK || d != 1) return 1;
    if (wf_count_output_params(79, 100, false) != 47558) return 2;
    WfGraph *g = NULL;
    if (wf_graph_load(NULL, &g) != WF_STATUS_OK) return 3;
    WfRoute *r = NULL;
    if (wf_route(g, 3, 2, &r) != WF_STATUS_OK) return 4;
    printf("%s\n", wf_route_narration(r));
    wf_route_free(r);
    if (wf_route(g, 3, 999, &r) != WF_STATUS_NOT_FOUND) return 5;
    char msg[128];
    if (wf_last_error_message(msg, sizeof msg) == 0) return 6;
    wf_graph_free(g);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests/ binaries live in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libwayfind_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("Start at Reception."));
}
