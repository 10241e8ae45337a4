use std::fs;
use std::path::{Path, PathBuf};

use lattice_heat_cli::run;
use tempfile::TempDir;

fn lattice_heat(args: &[&str]) -> i32 {
    let mut argv = vec!["lattice-heat"];
    argv.extend_from_slice(args);
    run(argv)
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn entries(dir: &TempDir) -> usize {
    fs::read_dir(dir.path()).unwrap().count()
}

#[test]
fn kernel_at_one() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "k.csv");
    assert_eq!(
        lattice_heat(&["kernel", "--t", "1", "--eps", "1e-12", "--out", s(&out)]),
        0
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("n,value\n"));
    let centre = rows(&out)
        .into_iter()
        .find(|r| r[0] == "0")
        .map(|r| r[1].parse::<f64>().unwrap())
        .unwrap();
    assert!((centre - 0.308_508_322_553_671_04).abs() < 1e-15);
}

#[test]
fn root_table() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "p.csv");
    assert_eq!(
        lattice_heat(&["poly", "--kmax", "6", "--roots", "--out", s(&out)]),
        0
    );
    let table = rows(&out);
    let root = |k: &str, i: &str| -> f64 {
        table
            .iter()
            .find(|r| r[0] == k && r[1] == i)
            .map(|r| r[2].parse().unwrap())
            .unwrap()
    };
    assert_eq!(root("4", "0"), 0.0);
    assert!((root("3", "2") + 0.9281).abs() < 1e-4);
    assert!((root("4", "3") + 1.63703).abs() < 1e-4);
    assert!((root("6", "1") + 0.00099).abs() < 1e-4);
    assert!((root("6", "5") + 3.23203).abs() < 1e-4);
    // True zeros of p_5 = t + 255t² + 2205t³ + 3150t⁴ + 945t⁵.
    assert!((root("5", "4") + 2.412_400_226_572_39).abs() < 1e-10);
    assert_eq!(table.iter().filter(|r| r[0] == "6").count(), 6);
}

#[test]
fn coefficient_table() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.csv");
    assert_eq!(lattice_heat(&["poly", "--kmax", "6", "--out", s(&out)]), 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("k,degree,c0,c1,c2,c3,c4,c5,c6\n"));
    assert!(text.contains("\n6,6,0,1,1023,21120,65835,51975,10395\n"));
    assert!(text.contains("\n2,2,0,1,3,,,,\n"));
}

#[test]
fn sup_norm_decay() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "d.csv");
    let code = lattice_heat(&[
        "decay",
        "--quantity",
        "G",
        "--p",
        "inf",
        "--grid",
        "dyadic:16:1024",
        "--out",
        s(&out),
        "--plot",
    ]);
    assert_eq!(code, 0);
    let meta = json(&dir.path().join("d.json"));
    assert!((meta["slope"].as_f64().unwrap() + 0.5).abs() < 0.02);
    assert_eq!(rows(&out).len(), 7);
    assert!(fs::read_to_string(dir.path().join("d.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn l2_decay_from_data() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "f.csv");
    fs::write(&f, "n,value\n0,1.0\n5,1.0\n").unwrap();
    let out = path(&dir, "l2.csv");
    assert_eq!(lattice_heat(&["decay", "--f", s(&f), "--out", s(&out)]), 0);
    let meta = json(&dir.path().join("l2.json"));
    assert!((meta["slope"].as_f64().unwrap() + 0.25).abs() < 0.02);
    assert_eq!(meta["mass_ratios"].as_array().unwrap().len(), 7);
}

#[test]
fn kernel_output_round_trips_through_evolve() {
    let dir = TempDir::new().unwrap();
    let k = path(&dir, "k.csv");
    let e = path(&dir, "e.csv");
    assert_eq!(lattice_heat(&["kernel", "--t", "2.5", "--out", s(&k)]), 0);
    assert_eq!(
        lattice_heat(&["evolve", "--f", s(&k), "--t", "0", "--out", s(&e)]),
        0
    );
    assert_eq!(fs::read(&k).unwrap(), fs::read(&e).unwrap());
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "f.csv");
    fs::write(&f, "n,value\n-2,0.25\n0,-1.5\n3,2.0\n").unwrap();
    let g = path(&dir, "g.json");
    fs::write(path(&dir, "gs.csv"), "n,value\n1,1.0\n").unwrap();
    fs::write(
        &g,
        r#"{"kind":"separable","spatial":"gs.csv","gamma":2.0,"amplitude":0.5}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = path(&dir, name);
        let args = [
            "evolve",
            "--f",
            s(&f),
            "--g",
            s(&g),
            "--t",
            "7.5",
            "--out",
            s(&out),
        ];
        assert_eq!(lattice_heat(&args), 0);
        outputs.push((
            fs::read(&out).unwrap(),
            fs::read(out.with_extension("json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn forced_runs() {
    let dir = TempDir::new().unwrap();
    fs::write(path(&dir, "gs.csv"), "n,value\n0,1.0\n").unwrap();
    let g = path(&dir, "g.json");
    fs::write(
        &g,
        r#"{"kind":"separable","spatial":"gs.csv","gamma":2.0,"amplitude":1.0}"#,
    )
    .unwrap();

    let u = path(&dir, "u.csv");
    assert_eq!(
        lattice_heat(&["duhamel", "--g", s(&g), "--t", "10", "--out", s(&u)]),
        0
    );
    let meta = json(&u.with_extension("json"));
    assert!(meta["quad_error"].as_f64().unwrap() <= 1e-12);
    let mass: f64 = rows(&u).iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((mass - 10.0 / 11.0).abs() < 1e-10);

    let c = path(&dir, "c.csv");
    let args = [
        "converge",
        "--g",
        s(&g),
        "--p",
        "2",
        "--grid",
        "dyadic:16:128",
        "--out",
        s(&c),
    ];
    assert_eq!(lattice_heat(&args), 0);
    let values: Vec<f64> = rows(&c).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn fourier_and_differences() {
    let dir = TempDir::new().unwrap();
    let f = path(&dir, "f.csv");
    assert_eq!(lattice_heat(&["fourier", "--t", "5", "--out", s(&f)]), 0);
    assert_eq!(rows(&f).len(), 64);
    assert!(
        json(&f.with_extension("json"))["max_abs_error"]
            .as_f64()
            .unwrap()
            <= 1e-10
    );

    let d = path(&dir, "d.csv");
    assert_eq!(
        lattice_heat(&["diffdecay", "--order", "3", "--out", s(&d)]),
        0
    );
    let meta = json(&d.with_extension("json"));
    assert!(meta["label"].as_str().unwrap().contains("EXPERIMENTAL"));
}

#[test]
fn usage_errors_write_nothing() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.csv");
    let o = s(&out);
    let missing = path(&dir, "missing.csv");
    let cases: Vec<Vec<&str>> = vec![
        vec!["kernel", "--t=-1", "--out", o],
        vec!["kernel", "--t", "1", "--eps", "0", "--out", o],
        vec!["kernel", "--t", "1"],
        vec!["evolve", "--f", s(&missing), "--t", "1", "--out", o],
        vec!["decay", "--grid", "dyadic:16:64", "--out", o],
        vec!["decay", "--grid", "linear:1:2", "--out", o],
        vec!["decay", "--p", "0.5", "--out", o],
        vec!["diffdecay", "--order", "7", "--out", o],
        vec!["poly", "--kmax", "13", "--roots", "--out", o],
        vec!["converge", "--out", o],
        vec!["nonsense"],
    ];
    for args in cases {
        assert_eq!(lattice_heat(&args), 2, "{args:?}");
    }
    assert_eq!(entries(&dir), 0);

    let f = path(&dir, "zero.csv");
    fs::write(&f, "n,value\n0,1.0\n1,-1.0\n").unwrap();
    assert_eq!(lattice_heat(&["decay", "--f", s(&f), "--out", o]), 2);
    assert_eq!(lattice_heat(&["converge", "--f", s(&f), "--out", o]), 2);
    assert_eq!(entries(&dir), 1);
}

#[test]
fn computation_failure_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "m.csv");
    assert_eq!(
        lattice_heat(&["moments", "--t", "1000", "--kmax", "64", "--out", s(&out)]),
        1
    );
    assert_eq!(entries(&dir), 0);
}
