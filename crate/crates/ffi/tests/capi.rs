//! Drives the C entry points from Rust: handle lifecycle, status codes,
//! error messages, and agreement with direct library calls.

use ius_core::data::{load_image, save_baseline, save_model, save_png};
use ius_core::harness::{toy_dataset_generate, ToyCorpusConfig};
use ius_core::ius::{compute_baseline, ius_score, profile_of, utility_level, Scope, UtilityLevel};
use ius_core::neural::{ArchConfig, EpuModel};
use ius_core::pfm::{ColorSpace, PfmConfig};
use ius_ffi::{
    ius_baseline_free, ius_baseline_load, ius_last_error_message, ius_model_free, ius_model_load,
    ius_profile_image, ius_score_image, ius_utility_level, ius_version, IusBaseline, IusModel,
    IusStatus,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;
use tempfile::TempDir;

struct Fixture {
    _dir: TempDir,
    model_path: CString,
    baseline_path: CString,
    per_class_baseline_path: CString,
    image_path: CString,
    expect_score: f64,
    expect_components: [f64; 4],
}

fn c_path(path: &std::path::Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

/// Builds an untrained model, a global baseline over a small corpus, and one
/// PNG, then computes the values the C calls must reproduce through the same
/// load path.
fn fixture() -> Fixture {
    let dir = TempDir::new().unwrap();
    let items = toy_dataset_generate(&ToyCorpusConfig {
        size: (16, 16),
        per_class: 3,
        rng_seed: 77,
        ..ToyCorpusConfig::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let arch = ArchConfig { conv_filters: vec![4, 8], dense_units: 8 };
    let model = EpuModel::<f32>::init(PfmConfig::Color, (16, 16), &arch, &mut rng).unwrap();
    let images: Vec<_> = items.iter().map(|it| it.image.clone()).collect();
    let baseline = compute_baseline(&model, &images, None, Scope::Global).unwrap();
    let labels: Vec<String> = items.iter().map(|it| it.class.clone()).collect();
    let per_class = compute_baseline(&model, &images, Some(&labels), Scope::PerClass).unwrap();

    let model_file = dir.path().join("model.json");
    save_model(&model, &model_file).unwrap();
    let baseline_file = dir.path().join("baseline.json");
    save_baseline(&baseline, &baseline_file).unwrap();
    let per_class_file = dir.path().join("per_class.json");
    save_baseline(&per_class, &per_class_file).unwrap();
    let image_file = dir.path().join("img.png");
    save_png(&items[0].image, &image_file).unwrap();

    let loaded = load_image(&image_file, ColorSpace::Srgb, Some((16, 16))).unwrap();
    let profile = profile_of(&model, &loaded).unwrap();
    let expect_score = ius_score(&profile, &baseline, None).unwrap();
    Fixture {
        model_path: c_path(&model_file),
        baseline_path: c_path(&baseline_file),
        per_class_baseline_path: c_path(&per_class_file),
        image_path: c_path(&image_file),
        expect_score,
        expect_components: profile.components(),
        _dir: dir,
    }
}

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { ius_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n.min(buf.len() - 1));
    String::from_utf8(buf).unwrap()
}

#[test]
fn scoring_through_the_c_api_matches_direct_calls_exactly() {
    let fx = fixture();
    unsafe {
        let mut model: *mut IusModel = ptr::null_mut();
        assert_eq!(ius_model_load(fx.model_path.as_ptr(), &mut model), IusStatus::Ok);
        assert!(!model.is_null());
        let mut baseline: *mut IusBaseline = ptr::null_mut();
        assert_eq!(ius_baseline_load(fx.baseline_path.as_ptr(), &mut baseline), IusStatus::Ok);
        assert!(!baseline.is_null());

        let mut score = f64::NAN;
        let status =
            ius_score_image(model, baseline, fx.image_path.as_ptr(), ptr::null(), &mut score);
        assert_eq!(status, IusStatus::Ok);
        assert_eq!(score, fx.expect_score, "saved and reloaded state scores identically");
        assert_eq!(ius_last_error_message(ptr::null_mut(), 0), 0, "success leaves no error");

        let mut components = [f64::NAN; 4];
        let status = ius_profile_image(model, fx.image_path.as_ptr(), components.as_mut_ptr());
        assert_eq!(status, IusStatus::Ok);
        assert_eq!(components, fx.expect_components);

        let mut level: c_int = -1;
        assert_eq!(ius_utility_level(score, &mut level), IusStatus::Ok);
        let want = match utility_level(score).unwrap() {
            UtilityLevel::VeryLow => 0,
            UtilityLevel::Low => 1,
            UtilityLevel::Medium => 2,
            UtilityLevel::High => 3,
            UtilityLevel::VeryHigh => 4,
        };
        assert_eq!(level, want);

        ius_baseline_free(baseline);
        ius_model_free(model);
        ius_model_free(ptr::null_mut());
        ius_baseline_free(ptr::null_mut());
    }
}

#[test]
fn per_class_baselines_require_a_known_class_name() {
    let fx = fixture();
    unsafe {
        let mut model: *mut IusModel = ptr::null_mut();
        assert_eq!(ius_model_load(fx.model_path.as_ptr(), &mut model), IusStatus::Ok);
        let mut baseline: *mut IusBaseline = ptr::null_mut();
        assert_eq!(
            ius_baseline_load(fx.per_class_baseline_path.as_ptr(), &mut baseline),
            IusStatus::Ok
        );

        let mut score = f64::NAN;
        let class = CString::new("normal").unwrap();
        let status =
            ius_score_image(model, baseline, fx.image_path.as_ptr(), class.as_ptr(), &mut score);
        assert_eq!(status, IusStatus::Ok);
        assert!((-1.0..=1.0).contains(&score));

        let ghost = CString::new("unheard-of").unwrap();
        let status =
            ius_score_image(model, baseline, fx.image_path.as_ptr(), ghost.as_ptr(), &mut score);
        assert_eq!(status, IusStatus::Data);
        assert!(last_error().contains("unheard-of"), "{}", last_error());

        let status =
            ius_score_image(model, baseline, fx.image_path.as_ptr(), ptr::null(), &mut score);
        assert_eq!(status, IusStatus::Data, "a per-class baseline needs a class name");

        ius_baseline_free(baseline);
        ius_model_free(model);
    }
}

#[test]
fn null_missing_and_non_utf8_arguments_are_reported() {
    unsafe {
        let mut model: *mut IusModel = ptr::null_mut();
        assert_eq!(ius_model_load(ptr::null(), &mut model), IusStatus::NullArgument);
        assert!(last_error().contains("path"));
        assert_eq!(ius_model_load(c"whatever".as_ptr(), ptr::null_mut()), IusStatus::NullArgument);

        let absent = CString::new("/nonexistent/model.json").unwrap();
        assert_eq!(ius_model_load(absent.as_ptr(), &mut model), IusStatus::Io);
        assert!(model.is_null(), "failed load leaves no handle");
        assert!(last_error().contains("/nonexistent/model.json"), "{}", last_error());

        let bogus = CString::new(&b"\xff\xfe"[..]).unwrap();
        assert_eq!(ius_model_load(bogus.as_ptr(), &mut model), IusStatus::InvalidUtf8);
    }
}

#[test]
fn truncated_messages_stay_nul_terminated_and_report_full_length() {
    unsafe {
        let mut model: *mut IusModel = ptr::null_mut();
        let absent = CString::new("/nonexistent/else.json").unwrap();
        assert_eq!(ius_model_load(absent.as_ptr(), &mut model), IusStatus::Io);

        let full_len = ius_last_error_message(ptr::null_mut(), 0);
        assert!(full_len > 8);
        let mut small = [0x7fu8; 8];
        let reported = ius_last_error_message(small.as_mut_ptr() as *mut c_char, small.len());
        assert_eq!(reported, full_len, "truncation does not change the reported length");
        assert_eq!(small[7], 0, "buffer is NUL-terminated");
        assert!(small[..7].iter().all(|&b| b != 0));
    }
}

#[test]
fn out_of_range_scores_are_a_numeric_error() {
    unsafe {
        let mut level: c_int = -1;
        assert_eq!(ius_utility_level(1.5, &mut level), IusStatus::Numeric);
        assert_eq!(level, -1, "output is untouched on failure");
        assert_eq!(ius_utility_level(f64::NAN, &mut level), IusStatus::Numeric);
        assert_eq!(ius_utility_level(-1.0, &mut level), IusStatus::Ok);
        assert_eq!(level, 0);
        assert_eq!(ius_utility_level(1.0, &mut level), IusStatus::Ok);
        assert_eq!(level, 4);
    }
}

#[test]
fn version_is_a_static_semver_string() {
    let v = unsafe { CStr::from_ptr(ius_version()) }.to_str().unwrap();
    assert!(v.split('.').count() >= 3, "{v}");
}

#[test]
fn committed_header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ius.h"))
        .expect("generated header is present");
    for needle in [
        "typedef struct IusModel IusModel;",
        "typedef struct IusBaseline IusBaseline;",
        "IUS_STATUS_NUMERIC",
        "ius_model_load",
        "ius_baseline_load",
        "ius_score_image",
        "ius_profile_image",
        "ius_utility_level",
        "ius_last_error_message",
        "ius_version",
    ] {
        assert!(header.contains(needle), "header is missing {needle:?}");
    }
}
