use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use prosocial_core::corpus::{build_conversations, read_comments, read_posts, BotList};
use prosocial_ffi::*;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/panel25")
}

fn last_error() -> String {
    let p = prosocial_last_error();
    assert!(!p.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cpath(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn new_context() -> *mut ProsocialContext {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { prosocial_context_new(&mut ctx) }, ProsocialStatus::Ok);
    assert!(!ctx.is_null());
    ctx
}

#[test]
fn metric_names() {
    let first = unsafe { CStr::from_ptr(prosocial_metric_name(0)) };
    assert_eq!(first.to_str().unwrap(), "information_sharing");
    let last = unsafe { CStr::from_ptr(prosocial_metric_name(PROSOCIAL_METRIC_COUNT - 1)) };
    assert_eq!(last.to_str().unwrap(), "toxic_tuned");
    assert!(prosocial_metric_name(PROSOCIAL_METRIC_COUNT).is_null());
}

#[test]
fn panels_match_golden_fixture() {
    let dir = fixture();
    let posts = read_posts(&dir.join("posts.jsonl")).unwrap();
    let comments = read_comments(&dir.join("comments.jsonl"), &BotList::default()).unwrap();
    let (convs, _) = build_conversations(comments, &posts);
    let golden: Vec<serde_json::Value> = std::fs::read_to_string(dir.join("golden_panel.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();

    let ctx = new_context();
    for (kind, file) in [
        (ProsocialClassifier::Information, "information.json"),
        (ProsocialClassifier::Mentoring, "mentoring.json"),
    ] {
        let p = cpath(&dir.join(file));
        assert_eq!(unsafe { prosocial_context_set_classifier(ctx, kind, p.as_ptr()) }, ProsocialStatus::Ok);
    }
    for conv in &convs {
        let want = golden.iter().find(|g| g["id"] == conv.id()).expect("golden row");
        let line = CString::new(conv.to_line()).unwrap();
        let mut values = [0.0f64; PROSOCIAL_METRIC_COUNT];
        let mut defined = [0u8; PROSOCIAL_METRIC_COUNT];
        let st = unsafe { prosocial_panel_compute(ctx, line.as_ptr(), values.as_mut_ptr(), defined.as_mut_ptr()) };
        assert_eq!(st, ProsocialStatus::Ok);
        for j in 0..PROSOCIAL_METRIC_COUNT {
            let name = unsafe { CStr::from_ptr(prosocial_metric_name(j)) }.to_str().unwrap();
            match want["values"][name].as_f64() {
                None => assert_eq!(defined[j], 0, "{}.{name}", conv.id()),
                Some(v) => {
                    assert_eq!(defined[j], 1, "{}.{name}", conv.id());
                    assert!((values[j] - v).abs() <= 1e-9, "{}.{name}: {} vs {v}", conv.id(), values[j]);
                }
            }
        }
    }
    unsafe { prosocial_context_free(ctx) };
}

#[test]
fn error_codes_and_messages() {
    let ctx = new_context();
    let mut values = [0.0f64; PROSOCIAL_METRIC_COUNT];
    let mut defined = [0u8; PROSOCIAL_METRIC_COUNT];

    let st = unsafe { prosocial_panel_compute(ctx, ptr::null(), values.as_mut_ptr(), defined.as_mut_ptr()) };
    assert_eq!(st, ProsocialStatus::NullPointer);
    assert!(last_error().contains("conversation_json"));

    let bad = CString::new("{\"schema_version\": 1").unwrap();
    let st = unsafe { prosocial_panel_compute(ctx, bad.as_ptr(), values.as_mut_ptr(), defined.as_mut_ptr()) };
    assert_eq!(st, ProsocialStatus::InvalidInput);
    assert!(last_error().contains("malformed record"));

    let latin1 = [0xe9u8, 0];
    let mut n = 0usize;
    let st = unsafe { prosocial_count_laughter(latin1.as_ptr().cast(), &mut n) };
    assert_eq!(st, ProsocialStatus::InvalidUtf8);

    let missing = CString::new("/nonexistent/model.json").unwrap();
    let st = unsafe { prosocial_context_set_classifier(ctx, ProsocialClassifier::Mentoring, missing.as_ptr()) };
    assert_eq!(st, ProsocialStatus::Io);
    assert!(last_error().contains("/nonexistent/model.json"));

    // success clears the message
    let haha = CString::new("hahaha ok, lol").unwrap();
    assert_eq!(unsafe { prosocial_count_laughter(haha.as_ptr(), &mut n) }, ProsocialStatus::Ok);
    assert_eq!(n, 2);
    assert!(prosocial_last_error().is_null());

    unsafe {
        prosocial_context_free(ctx);
        prosocial_context_free(ptr::null_mut());
        prosocial_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn trajectory_fit_score_round_trip() {
    let rows = 40;
    let values: Vec<f64> = (0..rows * PROSOCIAL_METRIC_COUNT)
        .map(|i| {
            let (r, j) = (i / PROSOCIAL_METRIC_COUNT, i % PROSOCIAL_METRIC_COUNT);
            let f = (r as f64 * 0.37).sin();
            f * (1.0 + j as f64 / 10.0) + ((i * 7919) % 13) as f64 / 100.0
        })
        .collect();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { prosocial_trajectory_fit(values.as_ptr(), rows, &mut model) }, ProsocialStatus::Ok);

    let mut ev = 0.0;
    assert_eq!(unsafe { prosocial_trajectory_explained_variance(model, 1, &mut ev) }, ProsocialStatus::Ok);
    assert!(ev > 0.5 && ev <= 1.0);
    let mut all = 0.0;
    assert_eq!(unsafe { prosocial_trajectory_explained_variance(model, 22, &mut all) }, ProsocialStatus::Ok);
    assert!((all - 1.0).abs() < 1e-9);
    assert_eq!(unsafe { prosocial_trajectory_explained_variance(model, 0, &mut ev) }, ProsocialStatus::InvalidInput);

    let mut score = 0.0;
    assert_eq!(unsafe { prosocial_trajectory_score(model, values.as_ptr(), &mut score) }, ProsocialStatus::Ok);

    let tmp = tempfile::tempdir().unwrap();
    let path = cpath(&tmp.path().join("trajectory.json"));
    assert_eq!(unsafe { prosocial_trajectory_save(model, path.as_ptr()) }, ProsocialStatus::Ok);
    let mut loaded = ptr::null_mut();
    assert_eq!(unsafe { prosocial_trajectory_load(path.as_ptr(), &mut loaded) }, ProsocialStatus::Ok);
    let mut again = 0.0;
    assert_eq!(unsafe { prosocial_trajectory_score(loaded, values.as_ptr(), &mut again) }, ProsocialStatus::Ok);
    assert_eq!(score, again);

    let mut none = ptr::null_mut();
    assert_ne!(unsafe { prosocial_trajectory_fit(values.as_ptr(), 0, &mut none) }, ProsocialStatus::Ok);
    assert!(none.is_null());
    unsafe {
        prosocial_trajectory_free(model);
        prosocial_trajectory_free(loaded);
    }
}

#[test]
fn header_declares_every_export() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(root.join("include/prosocial.h")).unwrap();
    let src = std::fs::read_to_string(root.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from the header");
    }
    assert!(header.contains("#define PROSOCIAL_METRIC_COUNT 22"));
    assert!(header.contains("typedef struct ProsocialContext ProsocialContext;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let tmp = tempfile::tempdir().unwrap();
    let main = tmp.path().join("main.c");
    std::fs::write(
        &main,
        "#include \"prosocial.h\"\nint main(void) {\n  ProsocialContext *ctx = NULL;\n  \
         ProsocialStatus s = prosocial_context_new(&ctx);\n  prosocial_context_free(ctx);\n  \
         return s == PROSOCIAL_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(root.join("include"))
        .arg(&main)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
