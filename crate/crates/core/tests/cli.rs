use std::fs;
use std::path::{Path, PathBuf};

use tnn_ccca::cca::CcaModel;
use tnn_ccca::cli::{run, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};
use tnn_ccca::dataset::{save_dataset, FeatureView, PairedDataset};
use tnn_ccca::eval::CrossValReport;

fn tnn(args: &[&str]) -> i32 {
    run(std::iter::once("tnn-ccca").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("data");
    let defaults = [("--classes", "3"), ("--per-class", "20"), ("--latent", "4"), ("--dim-x", "6"), ("--dim-y", "5")];
    let mut args = vec!["synth"];
    for (flag, value) in defaults {
        if !extra.contains(&flag) {
            args.extend_from_slice(&[flag, value]);
        }
    }
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--seed", "7", "--out", s(&out)]);
    assert_eq!(tnn(&args), EXIT_OK);
    out.join("manifest.json")
}

const QUICK: [&str; 6] = ["--k", "3", "--epochs", "2", "--batches", "2"];

#[test]
fn synth_is_reproducible_and_needs_out() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), &[]);
    let first = fs::read(a.with_file_name("view_x.csv")).unwrap();
    synth(dir.path(), &[]);
    assert_eq!(fs::read(a.with_file_name("view_x.csv")).unwrap(), first);
    assert_eq!(tnn(&["synth", "--seed", "1"]), EXIT_USAGE);
    assert_eq!(tnn(&["synth", "--out", s(dir.path())]), EXIT_USAGE);
    assert_eq!(tnn(&["synth", "--bogus"]), EXIT_USAGE);
}

#[test]
fn fit_writes_requested_components() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--dim-x", "12", "--dim-y", "11"]);
    let out = dir.path().join("fit");
    let code = tnn(&["fit", "--data", s(&data), "--mode", "cluster-cca", "--k", "10", "--seed", "1", "--out", s(&out)]);
    assert_eq!(code, EXIT_OK);
    let model = CcaModel::load(out.join("cca.json")).unwrap();
    assert_eq!(model.correlations.len(), 10);
    assert_eq!(tnn(&["fit", "--data", s(&data), "--k", "0", "--seed", "1", "--out", s(&out)]), EXIT_USAGE);
    assert_eq!(tnn(&["fit", "--data", s(&data), "--k", "3", "--out", s(&out)]), EXIT_USAGE);
    assert_eq!(tnn(&["fit", "--data", s(&data), "--mode", "pca", "--seed", "1", "--out", s(&out)]), EXIT_USAGE);
    let missing = dir.path().join("nope.json");
    assert_eq!(tnn(&["fit", "--data", s(&missing), "--k", "3", "--seed", "1", "--out", s(&out)]), EXIT_DATA);
}

#[test]
fn singleton_classes_make_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let n = 30;
    let x: Vec<Vec<f64>> = (0..n).map(|i| (0..4).map(|j| ((i * 7 + j * 3) as f64 * 0.61).sin()).collect()).collect();
    let y: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..3).map(|j| x[i][j] + 0.5 * ((i * 5 + j) as f64 * 1.3).cos()).collect())
        .collect();
    let ds = PairedDataset::new(
        FeatureView::from_rows(&x).unwrap(),
        FeatureView::from_rows(&y).unwrap(),
        (0..n).collect(),
        n,
    )
    .unwrap();
    let data = save_dataset(&ds, dir.path().join("data")).unwrap();
    let mut rho = Vec::new();
    for mode in ["cca", "cluster-cca"] {
        let out = dir.path().join(mode);
        assert_eq!(tnn(&["fit", "--data", s(&data), "--mode", mode, "--k", "3", "--seed", "0", "--out", s(&out)]), EXIT_OK);
        rho.push(CcaModel::load(out.join("cca.json")).unwrap().correlations);
    }
    for (a, b) in rho[0].iter().zip(&rho[1]) {
        assert!((a - b).abs() < 1e-8, "{rho:?}");
    }
}

#[test]
fn singular_covariance_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &["--latent", "2", "--noise", "0"]);
    let out = dir.path().join("fit");
    let code = tnn(&["fit", "--data", s(&data), "--k", "2", "--reg", "0", "--seed", "1", "--out", s(&out)]);
    assert_eq!(code, EXIT_NUMERICAL);
}

#[test]
fn stage_wise_run_matches_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let staged = dir.path().join("staged");
    let whole = dir.path().join("whole");
    let common = |out: &Path| {
        let mut v = vec!["--data".to_string(), s(&data).into(), "--seed".into(), "4".into(), "--out".into(), s(out).into()];
        v.extend(QUICK.iter().map(|a| a.to_string()));
        v
    };
    let with = |cmd: &[&str], out: &Path| {
        let mut v: Vec<String> = cmd.iter().map(|a| a.to_string()).collect();
        v.extend(common(out));
        run(std::iter::once("tnn-ccca".to_string()).chain(v))
    };
    assert_eq!(with(&["eval"], &staged), EXIT_DATA);
    for fold in 0..5 {
        let f = fold.to_string();
        assert_eq!(with(&["fit", "--fold", &f], &staged), EXIT_OK);
        assert_eq!(with(&["train", "--fold", &f], &staged), EXIT_OK);
    }
    assert_eq!(with(&["eval"], &staged), EXIT_OK);
    assert_eq!(with(&["eval", "--end-to-end"], &whole), EXIT_OK);

    let report = fs::read(staged.join("report.json")).unwrap();
    assert_eq!(report, fs::read(whole.join("report.json")).unwrap());
    for fold in 0..5 {
        for name in [
            format!("cca_fold{fold}.json"),
            format!("tnn_audio2visual_fold{fold}.json"),
            format!("tnn_visual2audio_fold{fold}.json"),
        ] {
            assert_eq!(fs::read(staged.join(&name)).unwrap(), fs::read(whole.join(&name)).unwrap(), "{name}");
        }
    }
    let parsed: CrossValReport = serde_json::from_slice(&report).unwrap();
    assert_eq!(parsed.audio2visual.fold_maps.len(), 5);
    assert_eq!(parsed.visual2audio.fold_maps.len(), 5);

    let prc = fs::read_to_string(whole.join("prc_audio2visual.csv")).unwrap();
    assert_eq!(prc.lines().next(), Some("recall,precision"));
    assert_eq!(prc.lines().count(), 102);
    let loss = fs::read_to_string(staged.join("loss_visual2audio_fold3.csv")).unwrap();
    assert!(loss.starts_with("epoch,mean_loss,"));
    assert_eq!(loss.lines().count(), 3);
}

#[test]
fn train_single_direction() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let out = dir.path().join("t");
    let base = ["--data", s(&data), "--seed", "2", "--out", s(&out), "--k", "3"];
    assert_eq!(tnn(&[&["train"][..], &base].concat()), EXIT_DATA);
    assert_eq!(tnn(&[&["fit"][..], &base].concat()), EXIT_OK);
    let args = [&["train", "--direction", "visual2audio", "--epochs", "1"][..], &base].concat();
    assert_eq!(tnn(&args), EXIT_OK);
    assert!(out.join("tnn_visual2audio.json").exists());
    assert!(!out.join("tnn_audio2visual.json").exists());
    let bad = [&["train", "--margin", "2.5"][..], &base].concat();
    assert_eq!(tnn(&bad), EXIT_USAGE);
}

#[test]
fn baseline_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let config = dir.path().join("run.json");
    let json = serde_json::json!({
        "data": data,
        "k": 3,
        "seed": 9,
        "train": { "epochs": 1, "batch_count": 2 }
    });
    fs::write(&config, json.to_string()).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(tnn(&["eval", "--config", s(&config), "--baseline", "cluster-cca-only", "--out", s(&a)]), EXIT_OK);
    assert_eq!(tnn(&["eval", "--config", s(&config), "--baseline", "cca-only", "--out", s(&b)]), EXIT_OK);
    let ra: CrossValReport = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let rb: CrossValReport = serde_json::from_slice(&fs::read(b.join("report.json")).unwrap()).unwrap();
    assert_ne!(ra.audio2visual.map, rb.audio2visual.map);
    assert!(!a.join("tnn_audio2visual_fold0.json").exists());

    // the flag wins over the config seed
    let c = dir.path().join("c");
    assert_eq!(tnn(&["eval", "--config", s(&config), "--baseline", "cca-only", "--seed", "10", "--out", s(&c)]), EXIT_OK);
    assert_ne!(fs::read(b.join("report.json")).unwrap(), fs::read(c.join("report.json")).unwrap());

    fs::write(&config, "{ not json").unwrap();
    assert_eq!(tnn(&["eval", "--config", s(&config), "--out", s(&c)]), EXIT_DATA);
}

#[test]
fn sweep_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), &[]);
    let out = dir.path().join("sweep");
    let base = [&["--data", s(&data), "--seed", "3", "--out", s(&out)][..], &QUICK].concat();
    let args = [&["sweep", "--param", "margin", "--values", "0.2,0.5,0.8"][..], &base].concat();
    assert_eq!(tnn(&args), EXIT_OK);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "value,map_a2v,map_v2a,wall_seconds");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("0.5,"));

    let comp = [&["sweep", "--param", "components", "--values", "2,3"][..], &base].concat();
    assert_eq!(tnn(&comp), EXIT_OK);
    let frac = [&["sweep", "--param", "batches", "--values", "2.5"][..], &base].concat();
    assert_eq!(tnn(&frac), EXIT_USAGE);
    let empty = [&["sweep", "--param", "margin", "--values"][..], &base].concat();
    assert_eq!(tnn(&empty), EXIT_USAGE);
    let unknown = [&["sweep", "--param", "lr"][..], &base].concat();
    assert_eq!(tnn(&unknown), EXIT_USAGE);
}
