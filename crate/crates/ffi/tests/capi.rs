use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pnlab_ffi::*;

const TAPS: [f64; 5] = [0.227, 0.460, 0.668, 0.460, 0.227];

fn params(taps: &[f64]) -> PnlabFrameParams {
    PnlabFrameParams {
        n_data_symbols: 128,
        pilot_period: 64,
        pilots_per_block: 2,
        interleaver_seed: 0,
        taps: taps.as_ptr(),
        n_taps: taps.len(),
        noise_var: 1e-3,
        pn_var: 1e-4,
    }
}

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        pnlab_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(pnlab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        assert_eq!(pnlab_config_new(ptr::null_mut()), PnlabStatus::NullPointer);
        assert!(last_error().contains("out"));
        assert_eq!(
            pnlab_config_set_frames(ptr::null_mut(), 3),
            PnlabStatus::NullPointer
        );
        assert_eq!(pnlab_results_len(ptr::null()), 0);
        pnlab_config_free(ptr::null_mut());
        pnlab_results_free(ptr::null_mut());
    }
}

#[test]
fn bad_toml_reports_config_error() {
    let text = CString::new("n_frames = \"many\"").unwrap();
    let mut cfg = ptr::null_mut();
    let st = unsafe { pnlab_config_from_toml(text.as_ptr(), &mut cfg) };
    assert_eq!(st, PnlabStatus::Config);
    assert!(cfg.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn error_message_is_truncated_safely() {
    unsafe {
        pnlab_config_new(ptr::null_mut());
        let full = pnlab_last_error(ptr::null_mut(), 0);
        assert!(full > 4);
        let mut buf = [0x7f as std::ffi::c_char; 4];
        assert_eq!(pnlab_last_error(buf.as_mut_ptr(), 4), full);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn run_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(pnlab_config_new(&mut cfg), PnlabStatus::Ok);
        let snr = [30.0];
        let kinds = [PnlabReceiver::BpMfEp, PnlabReceiver::KnownPn];
        assert_eq!(
            pnlab_config_set_snr_grid(cfg, snr.as_ptr(), 1),
            PnlabStatus::Ok
        );
        assert_eq!(
            pnlab_config_set_receivers(cfg, kinds.as_ptr(), 2),
            PnlabStatus::Ok
        );
        assert_eq!(pnlab_config_set_frames(cfg, 2), PnlabStatus::Ok);
        assert_eq!(pnlab_config_set_iters(cfg, 2), PnlabStatus::Ok);
        assert_eq!(pnlab_config_set_seed(cfg, 5), PnlabStatus::Ok);
        assert_eq!(pnlab_config_set_pn_var(cfg, 1e-4), PnlabStatus::Ok);
        assert_eq!(pnlab_config_set_layout(cfg, 128, 64, 2), PnlabStatus::Ok);
        assert_eq!(
            pnlab_config_set_taps(cfg, TAPS.as_ptr(), 5),
            PnlabStatus::Ok
        );

        let mut res = ptr::null_mut();
        assert_eq!(
            pnlab_run(cfg, &mut res),
            PnlabStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(pnlab_results_len(res), 4);
        let mut row = std::mem::zeroed::<PnlabRow>();
        assert_eq!(pnlab_results_row(res, 3, &mut row), PnlabStatus::Ok);
        assert_eq!(row.n_frames, 2);
        assert_eq!(row.seed, 5);
        assert_eq!(row.n_bit_errors, 0);
        assert_eq!(pnlab_results_row(res, 4, &mut row), PnlabStatus::OutOfRange);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(
            pnlab_results_write_csv(res, c_path.as_ptr()),
            PnlabStatus::Ok
        );
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("receiver,snr_db,iteration"));
        assert_eq!(text.lines().count(), 5);
        assert!(dir.path().join("r.frames.csv").exists());

        pnlab_results_free(res);
        pnlab_config_free(cfg);
    }
}

#[test]
fn invalid_config_fails_run() {
    unsafe {
        let mut cfg = ptr::null_mut();
        pnlab_config_new(&mut cfg);
        pnlab_config_set_frames(cfg, 0);
        let mut res = ptr::null_mut();
        assert_eq!(pnlab_run(cfg, &mut res), PnlabStatus::Config);
        assert!(res.is_null());
        assert!(last_error().contains("n_frames"));
        pnlab_config_free(cfg);
    }
}

#[test]
fn simulate_and_receive_one_frame() {
    let p = params(&TAPS);
    let (mut k_len, mut n_info) = (0usize, 0usize);
    unsafe {
        assert_eq!(
            pnlab_frame_sizes(&p, &mut k_len, &mut n_info),
            PnlabStatus::Ok
        );
    }
    let mut y = vec![0.0; 2 * k_len];
    let mut bits = vec![0u8; n_info];
    let mut theta = vec![0.0; k_len];
    unsafe {
        let st = pnlab_simulate_frame(
            &p,
            9,
            y.as_mut_ptr(),
            y.len(),
            bits.as_mut_ptr(),
            bits.len(),
            theta.as_mut_ptr(),
            theta.len(),
        );
        assert_eq!(st, PnlabStatus::Ok, "{}", last_error());
    }
    for kind in [
        PnlabReceiver::BpMfEp,
        PnlabReceiver::Eks,
        PnlabReceiver::KnownPn,
    ] {
        let mut decoded = vec![2u8; n_info];
        let mut theta_hat = vec![0.0; k_len];
        let st = unsafe {
            pnlab_receive_frame(
                kind,
                &p,
                3,
                y.as_ptr(),
                y.len(),
                theta.as_ptr(),
                decoded.as_mut_ptr(),
                decoded.len(),
                theta_hat.as_mut_ptr(),
            )
        };
        assert_eq!(st, PnlabStatus::Ok, "{}", last_error());
        assert_eq!(decoded, bits, "{kind:?}");
        if kind == PnlabReceiver::KnownPn {
            assert_eq!(theta_hat, theta);
        }
    }
}

#[test]
fn undersized_buffers_are_reported() {
    let p = params(&TAPS);
    let mut y = vec![0.0; 4];
    let st = unsafe {
        pnlab_simulate_frame(
            &p,
            1,
            y.as_mut_ptr(),
            y.len(),
            ptr::null_mut(),
            0,
            ptr::null_mut(),
            0,
        )
    };
    assert_eq!(st, PnlabStatus::BufferTooSmall);
    let mut bits = vec![0u8; 8];
    let st = unsafe {
        pnlab_receive_frame(
            PnlabReceiver::Eks,
            &p,
            1,
            y.as_ptr(),
            y.len(),
            ptr::null(),
            bits.as_mut_ptr(),
            bits.len(),
            ptr::null_mut(),
        )
    };
    assert_eq!(st, PnlabStatus::InvalidArgument);
}

#[test]
fn known_pn_needs_true_phase() {
    let p = params(&TAPS);
    let (mut k_len, mut n_info) = (0usize, 0usize);
    unsafe { pnlab_frame_sizes(&p, &mut k_len, &mut n_info) };
    let y = vec![0.1; 2 * k_len];
    let mut bits = vec![0u8; n_info];
    let st = unsafe {
        pnlab_receive_frame(
            PnlabReceiver::KnownPn,
            &p,
            1,
            y.as_ptr(),
            y.len(),
            ptr::null(),
            bits.as_mut_ptr(),
            bits.len(),
            ptr::null_mut(),
        )
    };
    assert_eq!(st, PnlabStatus::NullPointer);
    assert!(last_error().contains("true_theta"));
}

#[test]
fn header_declares_every_export() {
    let header_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pnlab.h");
    let header = std::fs::read_to_string(&header_path).unwrap();
    let src =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }

    // Parse the header as C when a compiler is around.
    if let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header_path)
        .output()
    {
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
