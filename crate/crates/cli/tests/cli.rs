use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cvrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvrc")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small scene written by `synth`, plus a config pointing at it.
struct Fixture {
    dir: TempDir,
}

const SMALL_SCENE: &str = "\
scene.width = 120
scene.height = 120
scene.cone = 60, 55, 45, 520
scene.rough_mountain = none
scene.lake = 100, 100, 12
scene.scree_radius = 2
teacher.north = 80, 42, 20, 20
teacher.east = 50, 12, 20, 20
teacher.south = 20, 42, 20, 20
teacher.west = 50, 72, 20, 20
teacher.flat = 95, 5, 20, 20
region.flat = 100, 0, 20, 60
region.cone = 15, 10, 90, 90
aspect.per_area = 200
slope.n_res = 40
slope.train_rows = 40, 60, 80
slope.eval_rows = 60, 70
slope.cols = 5-114
sweep.neurons = 1, 5
sweep.frames = 1, 5
";

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("scene.cfg"), SMALL_SCENE).unwrap();
        let scene = dir.path().join("scene");
        let o = cvrc(&["synth", "--config", path(&dir.path().join("scene.cfg")), "--out", path(&scene)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::write(
            dir.path().join("run.cfg"),
            format!("{SMALL_SCENE}input = {}\n", scene.display()),
        )
        .unwrap();
        Self { dir }
    }

    fn config(&self) -> PathBuf {
        self.dir.path().join("run.cfg")
    }

    fn scene(&self) -> PathBuf {
        self.dir.path().join("scene")
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, cmd: &str, out: &str, extra: &[&str]) -> Output {
        let out = self.out(out);
        let cfg = self.config();
        let mut args = vec![cmd, "--config", path(&cfg), "--out", path(&out)];
        args.extend_from_slice(extra);
        cvrc(&args)
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn synth_writes_six_files_reproducibly() {
    let f = Fixture::new();
    let names: Vec<String> = read_dir_sorted(&f.scene()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        ["dem.dem1", "diff_ew.cxr", "diff_ns.cxr", "interferogram.cxr", "slope_truth.dem1", "truth.pgm"]
    );
    let again = f.out("again");
    let o = cvrc(&["synth", "--config", path(&f.dir.path().join("scene.cfg")), "--out", path(&again)]);
    assert_eq!(code(&o), 0);
    assert_eq!(read_dir_sorted(&f.scene()), read_dir_sorted(&again));

    let other = f.out("other");
    let o = cvrc(&["synth", "--config", path(&f.dir.path().join("scene.cfg")), "--out", path(&other), "--seed", "2"]);
    assert_eq!(code(&o), 0);
    assert_ne!(
        fs::read(f.scene().join("interferogram.cxr")).unwrap(),
        fs::read(other.join("interferogram.cxr")).unwrap()
    );
}

#[test]
fn synth_into_unwritable_location_fails_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("plain-file");
    fs::write(&blocker, b"x").unwrap();
    let o = cvrc(&["synth", "--out", path(&blocker.join("scene"))]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("output directory"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn aspect_report_has_accuracies_and_timings() {
    let f = Fixture::new();
    let o = f.run("aspect", "a", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = f.out("a");
    for name in ["model_ew.cvm", "model_ns.cvm", "labels.pgm", "metrics.csv", "report.txt"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    for needle in ["overall accuracy", "flat:", "cone:", "learning time", "classification time", "confusion"] {
        assert!(report.contains(needle), "{needle} missing from\n{report}");
    }
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,region,accuracy_pct,evaluated,learn_time_s,classify_time_s");
    assert!(lines[1].starts_with("cvrc,overall,"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn baselines_produce_comparable_reports() {
    let f = Fixture::new();
    for (method, models) in [("rvrc", true), ("neighbor", false)] {
        let o = f.run("aspect", method, &["--baseline", method]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let out = f.out(method);
        let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
        assert!(csv.lines().nth(1).unwrap().starts_with(&format!("{method},overall,")));
        assert_eq!(out.join("model_ew.cvm").exists(), models);
        assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("overall accuracy"));
    }
    let o = f.run("aspect", "bad", &["--baseline", "cnn"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn aspect_is_idempotent_and_leaves_inputs_alone() {
    let f = Fixture::new();
    let before = read_dir_sorted(&f.scene());
    assert_eq!(code(&f.run("aspect", "one", &["--seed", "4"])), 0);
    assert_eq!(code(&f.run("aspect", "two", &["--seed", "4"])), 0);
    for name in ["labels.pgm", "model_ew.cvm", "model_ns.cvm"] {
        assert_eq!(fs::read(f.out("one").join(name)).unwrap(), fs::read(f.out("two").join(name)).unwrap());
    }
    assert_eq!(read_dir_sorted(&f.scene()), before);
}

#[test]
fn trace_flag_emits_state_csv() {
    let f = Fixture::new();
    let o = f.run("aspect", "t", &["--trace", "i=60"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(f.out("t").join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("step,row,col,rmse,abs_x0,"));
    assert_eq!(lines.count(), 120);

    let o = f.run("trace", "t2", &["--trace", "j=50,i=10-29"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(f.out("t2").join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);

    assert_eq!(code(&f.run("trace", "t3", &[])), 2);
    assert_eq!(code(&f.run("aspect", "t4", &["--trace", "i=500"])), 2);
    assert_eq!(code(&f.run("aspect", "t5", &["--trace", "k=1"])), 2);
}

#[test]
fn general_dynamics_flag_is_accepted() {
    let f = Fixture::new();
    let o = f.run("aspect", "g", &["--dynamics", "general"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(f.out("g").join("report.txt")).unwrap().contains("General"));
    assert_eq!(code(&f.run("aspect", "g2", &["--dynamics", "fast"])), 2);
}

#[test]
fn slope_writes_per_row_csv() {
    let f = Fixture::new();
    let o = f.run("slope", "s", &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = f.out("s");
    for row in [60, 70] {
        let csv = fs::read_to_string(out.join(format!("slope_row{row}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "col,truth_deg,cvrc_deg,neighbor_deg,err_cvrc,err_neighbor");
        assert_eq!(lines.count(), 110 - 5);
    }
    let summary = fs::read_to_string(out.join("slope_summary.csv")).unwrap();
    assert!(summary.contains("\n60,true,"));
    assert!(summary.contains("\n70,false,"));

    fs::write(f.out("far.cfg"), format!("{SMALL_SCENE}slope.eval_rows = 500\n")).unwrap();
    let o = cvrc(&["slope", "--config", path(&f.out("far.cfg")), "--out", path(&f.out("far"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("row 500"));
}

#[test]
fn sweep_tables_have_one_row_per_grid_point() {
    let f = Fixture::new();
    fs::write(f.out("grid.cfg"), format!("input = {}\n{SMALL_SCENE}sweep.neurons = 1,5,15,30,40,50\n", f.scene().display())).unwrap();
    let o = cvrc(&["sweep", "--config", path(&f.out("grid.cfg")), "--out", path(&f.out("sw"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let neurons = fs::read_to_string(f.out("sw").join("sweep_neurons.csv")).unwrap();
    assert_eq!(neurons.lines().count(), 1 + 6);
    assert!(neurons.starts_with("n_res,overall_pct,flat_pct,cone_pct,learn_time_s,classify_time_s"));
    let frames = fs::read_to_string(f.out("sw").join("sweep_frames.csv")).unwrap();
    assert_eq!(frames.lines().count(), 1 + 4);

    fs::write(f.out("empty.cfg"), format!("{SMALL_SCENE}sweep.neurons =\n")).unwrap();
    let o = cvrc(&["sweep", "--config", path(&f.out("empty.cfg")), "--out", path(&f.out("e"))]);
    assert_eq!(code(&o), 2);
    assert!(!f.out("e").exists());
}

#[test]
fn bad_config_and_missing_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = cvrc(&["aspect", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown key"));

    fs::write(&cfg, format!("input = {}\n", dir.path().join("nowhere").display())).unwrap();
    let o = cvrc(&["aspect", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(code(&o), 3);
    assert!(!dir.path().join("o").exists());

    let o = cvrc(&["aspect", "--config", path(&dir.path().join("absent.cfg"))]);
    assert_eq!(code(&o), 3);
    assert_eq!(code(&cvrc(&["aspect", "--seed", "x"])), 2);
    assert_eq!(code(&cvrc(&[])), 2);
}

#[test]
fn corrupt_input_is_an_io_error() {
    let f = Fixture::new();
    fs::write(f.scene().join("truth.pgm"), b"P5\n1 1\n255\n").unwrap();
    let o = f.run("aspect", "c", &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("reading truth"));
}
