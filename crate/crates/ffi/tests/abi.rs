use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use mvcp_ffi::*;

fn data(name: &str) -> CString {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/synthetic30")
        .join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = mvcp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn end_to_end_through_handles() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(
            mvcp_graph_load(data("edges.txt").as_ptr(), 0, &mut g),
            MvcpStatus::Ok
        );
        assert_eq!(mvcp_graph_num_nodes(g), 30);
        let mut f = ptr::null_mut();
        assert_eq!(
            mvcp_features_load(data("features.txt").as_ptr(), &mut f),
            MvcpStatus::Ok
        );
        let mut z = ptr::null_mut();
        assert_eq!(mvcp_knn_build(f, 3, &mut z), MvcpStatus::Ok);
        assert!(mvcp_knn_num_edges(z) <= 90);
        let mut x = ptr::null_mut();
        assert_eq!(mvcp_tensor_stack(g, z, &mut x), MvcpStatus::Ok);
        assert_eq!(
            mvcp_tensor_nnz(x),
            2 * mvcp_graph_num_edges(g) + mvcp_knn_num_edges(z)
        );

        let mut cfg = mvcp_als_config_default();
        assert_eq!(cfg.rank, 128);
        cfg.rank = 6;
        let mut m = ptr::null_mut();
        assert_eq!(mvcp_decompose(x, &cfg, &mut m), MvcpStatus::Ok);
        assert_eq!(mvcp_model_rank(m), 6);

        let mut len = 0usize;
        assert_eq!(
            mvcp_model_fit_history(m, ptr::null_mut(), 0, &mut len),
            MvcpStatus::Ok
        );
        assert_eq!(len, mvcp_model_iterations(m));
        let mut hist = vec![0.0; len];
        assert_eq!(
            mvcp_model_fit_history(m, hist.as_mut_ptr(), len, &mut len),
            MvcpStatus::Ok
        );
        assert!(hist.iter().all(|v| (0.0..=1.0).contains(v)));

        let mut e = ptr::null_mut();
        assert_eq!(
            mvcp_embedding_extract(m, MvcpSource::A, &mut e),
            MvcpStatus::Ok
        );
        let (mut r, mut c) = (0, 0);
        assert_eq!(mvcp_embedding_shape(e, &mut r, &mut c), MvcpStatus::Ok);
        assert_eq!((r, c), (30, 6));
        let mut small = vec![0.0; 10];
        assert_eq!(
            mvcp_embedding_copy(e, small.as_mut_ptr(), 10, &mut len),
            MvcpStatus::BufferTooSmall
        );
        assert_eq!(len, 180);
        let mut buf = vec![0.0; 180];
        assert_eq!(
            mvcp_embedding_copy(e, buf.as_mut_ptr(), 180, &mut len),
            MvcpStatus::Ok
        );

        let mut l = ptr::null_mut();
        assert_eq!(
            mvcp_labels_load(data("labels.txt").as_ptr(), &mut l),
            MvcpStatus::Ok
        );
        let mut s = MvcpEvalSummary::default();
        assert_eq!(mvcp_evaluate(e, l, 0.5, 3, 0, 1.0, &mut s), MvcpStatus::Ok);
        assert!((0.0..=1.0).contains(&s.micro_f1_mean));

        let dir = tempfile::tempdir().unwrap();
        let md = CString::new(dir.path().join("model").to_str().unwrap()).unwrap();
        assert_eq!(mvcp_model_save(m, md.as_ptr()), MvcpStatus::Ok);
        let mut m2 = ptr::null_mut();
        assert_eq!(mvcp_model_load(md.as_ptr(), &mut m2), MvcpStatus::Ok);
        let mut e2 = ptr::null_mut();
        assert_eq!(
            mvcp_embedding_extract(m2, MvcpSource::A, &mut e2),
            MvcpStatus::Ok
        );
        let mut buf2 = vec![0.0; 180];
        assert_eq!(
            mvcp_embedding_copy(e2, buf2.as_mut_ptr(), 180, &mut len),
            MvcpStatus::Ok
        );
        assert_eq!(buf, buf2);
        let ep = CString::new(dir.path().join("emb.txt").to_str().unwrap()).unwrap();
        assert_eq!(mvcp_embedding_save(e, ep.as_ptr()), MvcpStatus::Ok);

        mvcp_embedding_free(e2);
        mvcp_model_free(m2);
        mvcp_labels_free(l);
        mvcp_embedding_free(e);
        mvcp_model_free(m);
        mvcp_tensor_free(x);
        mvcp_knn_free(z);
        mvcp_features_free(f);
        mvcp_graph_free(g);
    }
}

#[test]
fn adjacency_only_tensor_from_pairs() {
    unsafe {
        let us = [0usize, 1, 2, 2];
        let vs = [1usize, 2, 3, 2];
        let mut g = ptr::null_mut();
        assert_eq!(
            mvcp_graph_from_pairs(4, us.as_ptr(), vs.as_ptr(), 4, &mut g),
            MvcpStatus::Ok
        );
        assert_eq!(mvcp_graph_num_edges(g), 3);
        let mut x = ptr::null_mut();
        assert_eq!(mvcp_tensor_stack(g, ptr::null(), &mut x), MvcpStatus::Ok);
        assert_eq!(mvcp_tensor_nnz(x), 6);
        mvcp_tensor_free(x);
        mvcp_graph_free(g);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        let missing = CString::new("/nonexistent/edges.txt").unwrap();
        assert_eq!(mvcp_graph_load(missing.as_ptr(), 0, &mut g), MvcpStatus::Io);
        assert!(g.is_null());
        assert!(last_error().contains("/nonexistent/edges.txt"));

        assert_eq!(
            mvcp_graph_load(ptr::null(), 0, &mut g),
            MvcpStatus::NullPointer
        );

        let mut f = ptr::null_mut();
        assert_eq!(
            mvcp_features_load(data("features.txt").as_ptr(), &mut f),
            MvcpStatus::Ok
        );
        let mut z = ptr::null_mut();
        assert_eq!(mvcp_knn_build(f, 0, &mut z), MvcpStatus::InvalidArgument);
        assert!(last_error().contains("k"));
        assert_eq!(
            mvcp_knn_build(ptr::null(), 3, &mut z),
            MvcpStatus::NullPointer
        );
        mvcp_features_free(f);

        let bad = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(bad.path(), "0 x\n").unwrap();
        let bp = CString::new(bad.path().to_str().unwrap()).unwrap();
        assert_eq!(mvcp_graph_load(bp.as_ptr(), 0, &mut g), MvcpStatus::Parse);

        let us = [0usize];
        let vs = [9usize];
        assert_ne!(
            mvcp_graph_from_pairs(3, us.as_ptr(), vs.as_ptr(), 1, &mut g),
            MvcpStatus::Ok
        );

        let mut cfg = mvcp_als_config_default();
        cfg.rank = 0;
        let mut gg = ptr::null_mut();
        assert_eq!(
            mvcp_graph_from_pairs(2, us.as_ptr(), [1usize].as_ptr(), 1, &mut gg),
            MvcpStatus::Ok
        );
        let mut x = ptr::null_mut();
        assert_eq!(mvcp_tensor_stack(gg, ptr::null(), &mut x), MvcpStatus::Ok);
        let mut m = ptr::null_mut();
        assert_eq!(mvcp_decompose(x, &cfg, &mut m), MvcpStatus::InvalidArgument);
        mvcp_tensor_free(x);
        mvcp_graph_free(gg);

        // Freeing NULL is a no-op.
        mvcp_graph_free(ptr::null_mut());
        mvcp_model_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(mvcp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mvcp.h")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header()).unwrap();
    let src =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let mut n = 0;
    for line in src.lines() {
        let Some(rest) = line.split("extern \"C\" fn ").nth(1) else {
            continue;
        };
        let name = rest.split('(').next().unwrap();
        assert!(
            h.contains(&format!("{name}(")),
            "{name} missing from header"
        );
        n += 1;
    }
    assert!(n >= 25);
}

/// Compiles and runs a small C program against the static library when a C
/// compiler is on PATH.
#[test]
fn c_program_links_against_static_lib() {
    let Ok(out) = Command::new("cc").arg("--version").output() else {
        eprintln!("cc not found; skipping");
        return;
    };
    assert!(out.status.success());
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libmvcp_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("main.c");
    std::fs::write(
        &c,
        r#"
#include <stdio.h>
#include "mvcp.h"
int main(int argc, char **argv) {
    MvcpGraph *g = NULL;
    if (mvcp_graph_load(argv[1], 0, &g) != MVCP_STATUS_OK) return 10;
    MvcpTensor *x = NULL;
    if (mvcp_tensor_stack(g, NULL, &x) != MVCP_STATUS_OK) return 11;
    MvcpAlsConfig cfg = mvcp_als_config_default();
    cfg.rank = 4;
    MvcpModel *m = NULL;
    if (mvcp_decompose(x, &cfg, &m) != MVCP_STATUS_OK) return 12;
    MvcpGraph *bad = NULL;
    if (mvcp_graph_load("/nonexistent", 0, &bad) != MVCP_STATUS_IO) return 13;
    if (mvcp_last_error_message() == NULL) return 14;
    printf("%zu %zu\n", mvcp_graph_num_nodes(g), mvcp_model_rank(m));
    mvcp_model_free(m);
    mvcp_tensor_free(x);
    mvcp_graph_free(g);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("prog");
    let status = Command::new("cc")
        .arg(&c)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let edges = data("edges.txt");
    let run = Command::new(&bin)
        .arg(edges.to_str().unwrap())
        .output()
        .unwrap();
    assert!(run.status.success(), "exit {:?}", run.status);
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "30 4");
}
