use std::ffi::{CStr, CString};
use std::ptr;

use conflict_ffi::*;

fn last_error() -> String {
    let p = cf_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(cf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn scalar_statistics() {
    unsafe {
        let mut p = 0.0;
        let mut degenerate = true;
        assert_eq!(cf_fisher_exact(5, 0, 0, 5, &mut p, &mut degenerate), CfStatus::Ok);
        assert!((p - 2.0 / 252.0).abs() < 1e-15);
        assert!(!degenerate);
        assert_eq!(cf_fisher_exact(0, 0, 0, 0, &mut p, ptr::null_mut()), CfStatus::Domain);
        assert!(last_error().contains("zeros"));

        let a = [1u8, 0, 1, 1];
        let b = [0u8, 1, 0, 0];
        let mut mcc = 0.0;
        assert_eq!(cf_matthews_correlation(a.as_ptr(), b.as_ptr(), 4, &mut mcc), CfStatus::Ok);
        assert_eq!(mcc, -1.0);

        let ones = [1u8; 10];
        let zeros = [0u8; 10];
        assert_eq!(
            cf_permutation_test(ones.as_ptr(), 10, zeros.as_ptr(), 10, 1000, 0, CfPermutationMode::Auto, &mut p),
            CfStatus::Ok
        );
        assert_eq!(p, 1.0 / 184_756.0);

        let (mut loss, mut grad) = (0.0, 0.0);
        assert_eq!(cf_focal_loss(0.5, 1.0, 0.0, &mut loss, &mut grad), CfStatus::Ok);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((grad + 0.5).abs() < 1e-15);
        assert_eq!(cf_focal_loss(f64::NAN, 1.0, 0.0, &mut loss, ptr::null_mut()), CfStatus::InvalidArgument);

        let x = [0usize, 0, 1, 1];
        let y = [0usize, 1, 0, 1];
        let mut ari = 0.0;
        assert_eq!(cf_adjusted_rand_index(x.as_ptr(), y.as_ptr(), 4, &mut ari), CfStatus::Ok);
        assert!((ari + 0.5).abs() < 1e-12);

        let u = [1.0f32, 0.0];
        let v = [0.0f32, 1.0];
        let mut s = 0.0;
        assert_eq!(cf_normalized_cosine(u.as_ptr(), v.as_ptr(), 2, &mut s), CfStatus::Ok);
        assert!((s - 0.5).abs() < 1e-12);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(cf_fisher_exact(1, 2, 3, 4, ptr::null_mut(), ptr::null_mut()), CfStatus::NullPointer);
        assert!(last_error().contains("out_p"));
        let mut out = 0.0;
        assert_eq!(cf_matthews_correlation(ptr::null(), ptr::null(), 3, &mut out), CfStatus::NullPointer);
        assert_eq!(cf_embeddings_count(ptr::null()), 0);
        cf_embeddings_free(ptr::null_mut());
        let mut probe = ptr::null_mut();
        assert_eq!(cf_probe_load(ptr::null(), &mut probe), CfStatus::NullPointer);
    }
    let mut out = 0.0;
    unsafe {
        assert_eq!(cf_focal_loss(0.3, 1.0, 2.0, &mut out, ptr::null_mut()), CfStatus::Ok);
    }
    assert!(cf_last_error_message().is_null());
}

#[test]
fn embedding_similarity_partition_roundtrip() {
    // Two tight groups of three points.
    let ids: Vec<CString> = (0..6).map(|i| CString::new(format!("n{i}")).unwrap()).collect();
    let id_ptrs: Vec<_> = ids.iter().map(|c| c.as_ptr()).collect();
    let values: Vec<f32> = (0..6)
        .flat_map(|i| if i < 3 { [1.0, 0.01 * i as f32] } else { [-0.01 * i as f32, 1.0] })
        .collect();
    unsafe {
        let mut emb = ptr::null_mut();
        assert_eq!(cf_embeddings_new(id_ptrs.as_ptr(), 6, 2, values.as_ptr(), &mut emb), CfStatus::Ok);
        assert_eq!(cf_embeddings_count(emb), 6);
        assert_eq!(cf_embeddings_dim(emb), 2);

        let mut sim = ptr::null_mut();
        assert_eq!(cf_similarity_new(emb, &mut sim), CfStatus::Ok);
        assert_eq!(cf_similarity_len(sim), 6);
        let mut w = 0.0;
        assert_eq!(cf_similarity_get(sim, 2, 2, &mut w), CfStatus::Ok);
        assert_eq!(w, 1.0);
        assert_eq!(cf_similarity_get(sim, 0, 9, &mut w), CfStatus::InvalidArgument);

        let mut part = ptr::null_mut();
        assert_eq!(cf_louvain(sim, 60, 0, &mut part), CfStatus::Ok);
        assert_eq!(cf_partition_len(part), 6);
        assert_eq!(cf_partition_community_count(part), 2);
        let mut labels = [9usize; 6];
        assert_eq!(cf_partition_labels(part, labels.as_mut_ptr(), 6), CfStatus::Ok);
        assert_eq!(labels, [0, 0, 0, 1, 1, 1]);
        assert_eq!(cf_partition_labels(part, labels.as_mut_ptr(), 5), CfStatus::InvalidArgument);
        assert_eq!(cf_louvain(sim, 100, 0, &mut part), CfStatus::Domain);

        cf_partition_free(part);
        cf_similarity_free(sim);
        cf_embeddings_free(emb);
    }
}

#[test]
fn embeddings_reject_duplicates_and_missing_files() {
    let ids = [CString::new("a").unwrap(), CString::new("a").unwrap()];
    let id_ptrs: Vec<_> = ids.iter().map(|c| c.as_ptr()).collect();
    let values = [1.0f32, 2.0];
    let missing = CString::new("/nonexistent/file.emb1").unwrap();
    unsafe {
        let mut emb = ptr::null_mut();
        assert_eq!(cf_embeddings_new(id_ptrs.as_ptr(), 2, 1, values.as_ptr(), &mut emb), CfStatus::Domain);
        assert!(emb.is_null());
        assert_eq!(cf_embeddings_load(missing.as_ptr(), &mut emb), CfStatus::Io);
    }
}

#[test]
fn probe_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("m.prb1");
    let mut bytes = b"PRB1".to_vec();
    bytes.extend_from_slice(&2u32.to_le_bytes());
    for v in [1.0f64, -1.0, 0.0] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(&model_path, &bytes).unwrap();
    let c_path = CString::new(model_path.to_str().unwrap()).unwrap();
    unsafe {
        let mut probe = ptr::null_mut();
        assert_eq!(cf_probe_load(c_path.as_ptr(), &mut probe), CfStatus::Ok);
        assert_eq!(cf_probe_dim(probe), 2);
        let x = [2.0f32, 2.0];
        let mut p = 0.0;
        assert_eq!(cf_probe_predict(probe, x.as_ptr(), 2, &mut p), CfStatus::Ok);
        assert_eq!(p, 0.5);
        assert_eq!(cf_probe_predict(probe, x.as_ptr(), 1, &mut p), CfStatus::Domain);
        cf_probe_free(probe);

        let w = [0.0f64; 3];
        assert_eq!(cf_probe_new(w.as_ptr(), 3, 0.0, &mut probe), CfStatus::Ok);
        let z = [5.0f32; 3];
        assert_eq!(cf_probe_predict(probe, z.as_ptr(), 3, &mut p), CfStatus::Ok);
        assert_eq!(p, 0.5);
        cf_probe_free(probe);

        std::fs::write(&model_path, b"PRB1").unwrap();
        assert_eq!(cf_probe_load(c_path.as_ptr(), &mut probe), CfStatus::Format);
    }
}
