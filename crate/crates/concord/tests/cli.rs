use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use concord_core::classic::{bland_altman, ccc_inference, pearson};
use concord_core::sample::{summarize, Divisor};
use concord_core::PairedSample;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_concord"));
    c.env_remove("CONCORD_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn pairs_csv(dir: &TempDir) -> PathBuf {
    let mut text = String::from("a,b\n");
    for i in 0..60 {
        let x = (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.1;
        let y = 0.9 * x + 0.4 + (i as f64 * 1.3).cos() * 0.5;
        text.push_str(&format!("{x},{y}\n"));
    }
    write(dir, "pairs.csv", &text)
}

#[test]
fn ingestion_drops_incomplete_rows() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "five.csv", "x,y\n1,2\n2,NA\n3,3.5\n4,4\n5,6\n");
    let r = json(&run(&["classic", s(&f)]));
    assert_eq!(r["results"]["input"]["n"], 4);
    assert_eq!(r["results"]["input"]["dropped"], 1);
}

#[test]
fn empty_and_malformed_inputs_exit_2() {
    let d = TempDir::new().unwrap();
    let empty = write(&d, "empty.csv", "");
    let out = run(&["classic", s(&empty)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient data"), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = write(&d, "bad.csv", "x,y\n1,2\n2,abc\n3,4\n");
    let out = run(&["classic", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains(":3:") && msg.contains("abc"), "{msg}");

    let ragged = write(&d, "ragged.csv", "x,y\n1,2\n2,3,4\n");
    let out = run(&["classic", s(&ragged)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3:"));

    let ok = write(&d, "ok.csv", "x,y\n1,2\n2,3\n3,5\n");
    let out = run(&["classic", s(&ok), "--y", "z"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no column named"));

    let out = run(&["classic"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analysis_failure_exits_1() {
    let d = TempDir::new().unwrap();
    let flat = write(&d, "flat.csv", "1,5\n2,5\n3,5\n4,5\n5,5\n6,5\n");
    let out = run(&["temporal", "comovement", s(&flat)]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn classic_identical_columns() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "same.csv", "1,1\n2,2\n4,4\n3.5,3.5\n");
    let r = json(&run(&["classic", s(&f)]));
    let res = &r["results"];
    assert_eq!(res["ccc"]["estimate"], 1.0);
    assert_eq!(res["bland_altman"]["limits"]["lower"], 0.0);
    assert_eq!(res["bland_altman"]["limits"]["upper"], 0.0);
}

#[test]
fn report_numbers_match_library() {
    let d = TempDir::new().unwrap();
    let f = pairs_csv(&d);
    let r = json(&run(&["classic", s(&f)]));
    let text = fs::read_to_string(&f).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .unzip();
    let sample = PairedSample::new(xs, ys).unwrap();
    let m = summarize(&sample, Divisor::Unbiased);
    let res = &r["results"];
    assert_eq!(res["pearson"].as_f64().unwrap(), pearson(&m).unwrap());
    let inf = ccc_inference(&sample, 0.05).unwrap();
    assert_eq!(res["ccc"]["estimate"].as_f64().unwrap(), inf.estimate);
    assert_eq!(res["ccc"]["ci_low"].as_f64().unwrap(), inf.ci_low);
    let ba = bland_altman(&sample, 1.96).unwrap();
    assert_eq!(res["bland_altman"]["limits"]["upper"].as_f64().unwrap(), ba.limits.upper);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config"]["classic"]["alpha"], 0.05);
}

#[test]
fn seeded_reports_are_byte_identical() {
    let d = TempDir::new().unwrap();
    let f = pairs_csv(&d);
    let args = ["pa", s(&f), "--c", "0.5,1", "--resamples", "300", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["pa", s(&f), "--c", "0.5,1", "--resamples", "300", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
    // Environment fallback for the seed.
    let e = bin().args(["pa", s(&f), "--c", "0.5,1", "--resamples", "300"]).env("CONCORD_SEED", "42").output().unwrap();
    assert_eq!(a.stdout, e.stdout);
    assert_eq!(json(&e)["seed"], 42);
}

#[test]
fn csv_format_and_series_output() {
    let d = TempDir::new().unwrap();
    let f = pairs_csv(&d);
    let series = d.path().join("series");
    let out = run(&["calibrate", s(&f), "--x", "a", "--y", "b", "--format", "csv", "--series-dir", s(&series)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.contains("results.regression.slope,"));
    let curve = fs::read_to_string(series.join("pa_curve.csv")).unwrap();
    assert!(curve.starts_with("c,pa\n"));
    assert_eq!(curve.lines().count(), 61);
    let cal = fs::read_to_string(series.join("calibration.csv")).unwrap();
    assert_eq!(cal.lines().count(), 61);

    let report = d.path().join("r.json");
    let out = run(&["robust", s(&f), "--out", s(&report)]);
    assert!(out.status.success() && out.stdout.is_empty());
    let r: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["results"]["rho_g"].as_array().unwrap().len(), 3);
}

#[test]
fn pa_default_tolerance_is_reference_sd() {
    let d = TempDir::new().unwrap();
    let f = pairs_csv(&d);
    let r = json(&run(&["pa", s(&f), "--resamples", "200"]));
    let pa = &r["results"]["pa"][0];
    assert!(pa["c"].as_f64().unwrap() > 0.0);
    let est = pa["estimate"]["estimate"].as_f64().unwrap();
    let (lo, hi) = (pa["estimate"]["ci"][0].as_f64().unwrap(), pa["estimate"]["ci"][1].as_f64().unwrap());
    assert!(lo <= est && est <= hi);
}

#[test]
fn temporal_subcommands() {
    let d = TempDir::new().unwrap();
    let mut long = String::from("subject,time,x,y\n");
    for i in 0..12 {
        for t in 0..5 {
            let x = i as f64 * 0.3 + t as f64 * 0.1 + ((i * 7 + t) % 5) as f64 * 0.05;
            long.push_str(&format!("s{i},{t},{x},{}\n", x + 0.02 * ((i + t) % 3) as f64));
        }
    }
    let f = write(&d, "long.csv", &long);
    let r = json(&run(&["temporal", "functional", s(&f)]));
    let v = r["results"]["functional_ccc"]["value"].as_f64().unwrap();
    assert!(v > 0.9 && v <= 1.0);
    assert_eq!(r["results"]["subjects"], 12);

    let unbalanced = write(&d, "unbal.csv", "subject,time,x,y\na,0,1,1\na,1,2,2\nb,0,1,1.5\n");
    assert_eq!(run(&["temporal", "functional", s(&unbalanced)]).status.code(), Some(2));

    let p = pairs_csv(&d);
    let r = json(&run(&["temporal", "comovement", s(&p), "--resamples", "200"]));
    let c = r["results"]["comovement"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&c));
}

#[test]
fn mv_and_lattice() {
    let d = TempDir::new().unwrap();
    let mut text = String::from("x1,x2,y1,y2\n");
    for i in 0..40 {
        let (a, b) = ((i as f64 * 0.7).sin(), (i as f64 * 0.3).cos());
        text.push_str(&format!("{a},{b},{},{}\n", a + 0.1, b * 0.9));
    }
    let f = write(&d, "mv.csv", &text);
    let r = json(&run(&["mv", s(&f), "--x", "x1,x2", "--y", "y1,y2"]));
    assert_eq!(r["results"]["dim"], 2);
    assert!(r["results"]["rm_ccc"].as_f64().unwrap() > 0.8);

    let e = write(&d, "edges.csv", "from,to\n0,1\n");
    let r = json(&run(&["lattice", "--adjacency", s(&e), "--rho1", "0", "--rho2", "0", "--eta0", "0.5"]));
    assert!((r["results"]["lattice_ccc"].as_f64().unwrap() - 4.0 / 9.0).abs() < 1e-12);
    let out = run(&["lattice", "--adjacency", s(&e), "--rho1", "1.5", "--rho2", "0", "--eta0", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ρ1"));
}

#[test]
fn spatial_subcommand_on_small_grid() {
    use concord_core::spatial::{simulate_field, Family, SpatialModel};
    use concord_core::Rng;
    let d = TempDir::new().unwrap();
    let m = SpatialModel::separable(Family::Exponential, (0.0, 0.2), (1.0, 1.0), 2.0, 0.8).unwrap();
    let f = simulate_field(&m, 10, 8, 1.0, &mut Rng::new(5)).unwrap();
    let grid = |v: &nalgebra::DMatrix<f64>| {
        let mut t = format!("nx,ny,spacing\n{},{},1.0\n", v.ncols(), v.nrows());
        for i in 0..v.nrows() {
            let row: Vec<String> = (0..v.ncols()).map(|j| v[(i, j)].to_string()).collect();
            t.push_str(&row.join(","));
            t.push('\n');
        }
        t
    };
    let gx = write(&d, "x.csv", &grid(f.x()));
    // Same y channel as a whitespace matrix.
    let ytxt: String = (0..f.ny()).map(|i| (0..f.nx()).map(|j| f.y()[(i, j)].to_string()).collect::<Vec<_>>().join(" ") + "\n").collect();
    let gy = write(&d, "y.txt", &ytxt);
    let r = json(&run(&["spatial", "--x-grid", s(&gx), "--y-grid", s(&gy), "--c", "1"]));
    let lags = r["results"]["lags"].as_array().unwrap();
    assert_eq!(lags.len(), 3);
    let p0 = lags[0]["pa"][0]["pa"].as_f64().unwrap();
    let p2 = lags[2]["pa"][0]["pa"].as_f64().unwrap();
    assert!(p2 <= p0);
}

fn write_pgm_p2(dir: &TempDir, name: &str, w: usize, h: usize, f: impl Fn(usize, usize) -> u32) -> PathBuf {
    let mut t = format!("P2\n# comment\n{w} {h}\n255\n");
    for i in 0..h {
        let row: Vec<String> = (0..w).map(|j| f(i, j).to_string()).collect();
        t.push_str(&row.join(" "));
        t.push('\n');
    }
    write(dir, name, &t)
}

#[test]
fn image_subcommand() {
    let d = TempDir::new().unwrap();
    let a = write_pgm_p2(&d, "a.pgm", 40, 30, |i, j| ((i * 13 + j * 7) % 256) as u32);
    let b = write_pgm_p2(&d, "b.pgm", 40, 30, |i, j| ((i * 13 + j * 7 + 3) % 256) as u32);
    let series = d.path().join("s");
    let args = [
        "image",
        "--reference",
        s(&a),
        "--compare",
        s(&b),
        "--contaminate",
        "0.05,0.25",
        "--replicates",
        "2",
        "--seed",
        "9",
        "--series-dir",
        s(&series),
    ];
    let out = run(&args);
    let r = json(&out);
    let comps = r["results"]["comparisons"].as_array().unwrap();
    assert_eq!(comps.len(), 5);
    assert_eq!(comps[0]["label"], "b");
    let summary = r["results"]["contamination_summary"].as_array().unwrap();
    let p5 = summary[0]["mean_pearson"].as_f64().unwrap();
    let p25 = summary[1]["mean_pearson"].as_f64().unwrap();
    assert!(p5 > p25);
    let curves = fs::read_to_string(series.join("pa_curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 5 * 4);
    assert_eq!(run(&args).stdout, out.stdout);
    let out = run(&["image", "--reference", s(&a), "--contaminate", "0.1", "--tau2", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}
