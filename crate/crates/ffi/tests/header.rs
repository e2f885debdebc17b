use std::path::PathBuf;
use std::process::Command;

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/fdrelay.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).expect("generated header");
    assert!(h.starts_with("#ifndef FDRELAY_H"));
    for sym in [
        "fdr_version",
        "fdr_last_error",
        "fdr_params_new",
        "fdr_params_set",
        "fdr_params_get",
        "fdr_params_free",
        "fdr_success_probability",
        "fdr_evaluate",
        "fdr_simulate",
        "fdr_experiment_csv",
        "fdr_string_free",
        "typedef struct FdrParams FdrParams;",
        "typedef struct FdrEvaluation",
        "typedef struct FdrSimSummary",
        "FDR_STATUS_OK = 0",
        "FDR_STATUS_PANIC = 12",
        "FDR_VERDICT_INCONCLUSIVE = 2",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let probe = r#"
#include <math.h>
#include "fdrelay.h"
int use_api(void) {
    FdrParams *p = fdr_params_new(4, 0.6, 1e-8, 0.1, 0.99);
    FdrEvaluation e;
    FdrSimSummary s;
    double out;
    size_t users[1] = {0};
    char *csv = NULL;
    size_t issues = 0;
    int bad = fdr_params_set(p, "gamma", 1.2) != FDR_STATUS_OK;
    bad |= fdr_evaluate(p, FDR_TABLE_MODE_DERIVED, FDR_DELAY_CONVENTION_HEAD_OF_LINE, &e) != FDR_STATUS_OK;
    bad |= fdr_simulate(p, 100000, 1, FDR_SAMPLING_MODE_SINR, &s) != FDR_STATUS_OK;
    bad |= fdr_success_probability(p, 0, FDR_RECEIVER_RELAY, true, users, 1, &out) != FDR_STATUS_OK;
    bad |= fdr_experiment_csv("n = 3", &csv, &issues) != FDR_STATUS_OK;
    fdr_string_free(csv);
    fdr_params_free(p);
    return bad || !e.stable || isinf(e.delay) || fdr_last_error() != NULL || fdr_version() == NULL;
}
"#;
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = dir.join("fdrelay_header_probe.c");
    std::fs::write(&src, probe).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let include = header().parent().unwrap().to_path_buf();
    for std_flag in ["-std=c99", "-std=c11"] {
        let out = Command::new(&cc)
            .args([
                std_flag,
                "-Wall",
                "-Wextra",
                "-Werror",
                "-pedantic",
                "-fsyntax-only",
                "-I",
            ])
            .arg(&include)
            .arg(&src)
            .output()
            .expect("a C compiler is required to check the header");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
