//! Compiles and runs a small C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "operad_forge.h"

int main(void) {
    OfPresentation *p = NULL, *d = NULL;
    size_t n = 0;
    bool ok = false;
    if (of_presentation_builtin("com", &p) != OF_STATUS_OK) return 10;
    if (of_presentation_koszul_dual(p, &d) != OF_STATUS_OK) return 11;
    if (of_presentation_component_dim(d, 3, &n) != OF_STATUS_OK || n != 2) return 12;
    if (of_koszulity_check(p, 1, 3, &ok) != OF_STATUS_OK || !ok) return 13;
    if (of_presentation_builtin("x", &p) != OF_STATUS_USAGE || of_last_error() == NULL) return 14;
    of_presentation_free(d);
    const char *argv[] = {"quaddual", "--preset", "ass"};
    OfReport *r = NULL;
    if (of_run(argv, 3, &r) != OF_STATUS_OK || of_report_exit_code(r) != 0) return 15;
    if (strstr(of_report_json(r), "\"schema\":1") == NULL) return 16;
    of_report_free(r);
    of_presentation_free(p);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("liboperad_forge_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let tmp = std::env::temp_dir().join(format!("operad_forge_c_{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    let src = tmp.join("main.c");
    let exe = tmp.join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("a C compiler is required");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
    let _ = std::fs::remove_dir_all(&tmp);
}
