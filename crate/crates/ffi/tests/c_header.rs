//! Compiles and links a small C program against the generated header and
//! the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "nsdde.h"

int main(void) {
    double h[4] = {0.5, 0.25, 0.125, 0.0625};
    double e[4];
    NsddeOrderFit fit;
    double exponent;
    NsddeModel *model = NULL;
    double buf[33];
    size_t len = 0;
    for (int i = 0; i < 4; i++) e[i] = 3.0 * h[i];
    if (nsdde_fit_order(h, e, 4, &fit) != NSDDE_STATUS_OK) return 1;
    if (fit.slope < 0.999 || fit.slope > 1.001) return 2;
    if (nsdde_theory_rate_jump(2.0, 0.5, 3.0, 1.0, &exponent) != NSDDE_STATUS_OK) return 3;
    if (nsdde_model_new("gbm", NULL, NULL, 0, &model) != NSDDE_STATUS_OK) return 4;
    if (nsdde_simulate_path(model, 1.0, 1.0, 8, 4, 1.0, 1, 0, buf, 33, &len) != NSDDE_STATUS_OK) return 5;
    nsdde_model_free(model);
    if (nsdde_fit_order(h, e, 2, &fit) != NSDDE_STATUS_DEGENERATE) return 6;
    printf("%s %.5f %zu %s\n", nsdde_version(), exponent, len, nsdde_last_error());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nsdde.h")).unwrap();
    for sym in [
        "nsdde_version",
        "nsdde_last_error",
        "nsdde_config_parse",
        "nsdde_run",
        "nsdde_run_table_row",
        "nsdde_model_new",
        "nsdde_simulate_path",
        "nsdde_fit_order",
        "nsdde_theory_rate_jump",
        "typedef struct NsddeRun NsddeRun;",
        "NSDDE_STATUS_OK = 0",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libnsdde_ffi.a");
    if !have_cc() || !lib.exists() {
        eprintln!("skipping: cc or {} unavailable", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(nsdde::VERSION), "{text}");
    assert!(text.contains("0.29630 33 "), "{text}");
}
