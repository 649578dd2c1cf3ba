use std::path::Path;
use std::process::{Command, Output};

fn opmod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opmod")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn clenshaw_curtis_table() {
    let o = opmod(&["moments", "--weight", "clenshaw-curtis", "--m", "5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let expect = [2.0, 0.0, -2.0 / 3.0, 0.0, -2.0 / 15.0];
    for (a, b) in rows.iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(text.lines().next().unwrap(), "n,mu");
}

#[test]
fn log_chebyshev_first_moment() {
    let o = opmod(&["moments", "--weight", "log-chebyshev", "--m", "1"]);
    let mu0: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((mu0 - 2.0 * std::f64::consts::PI * 2f64.ln()).abs() < 1e-14);
}

#[test]
fn algebraic_moments_checked_against_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mu.csv");
    let o = opmod(&[
        "moments",
        "--weight",
        "algebraic",
        "--t=-0.5,-0.25,0.25,0.5",
        "--gamma=-0.5,-0.25,0.25,0.5",
        "--m",
        "200",
        "--check-quadrature",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 200);
    for r in rows {
        assert!(r[2].parse::<f64>().unwrap() <= 1e-8);
    }
}

#[test]
fn factor_prints_stats_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("l.csv");
    let j = dir.path().join("xq.csv");
    let o = opmod(&[
        "factor",
        "--weight",
        "delta-sqrt:0.1",
        "--n",
        "512",
        "--out",
        f.to_str().unwrap(),
        "--jacobi",
        j.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,fill_seconds,factor_seconds,rel_frobenius_residual");
    let stats: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(stats[0], "512");
    assert!(stats[3].parse::<f64>().unwrap() <= 1e-10);
    assert!(std::fs::read_to_string(&f).unwrap().starts_with("i,j,l\n"));
    // tridiagonal band of a 511 x 511 section
    assert_eq!(csv_rows(&j).len(), 3 * 511 - 2);
}

#[test]
fn chebyshev_weight_has_zero_residual() {
    // (1 - x^2)^{-1/2} against ChebyshevT: W is the diagonal mass matrix
    let o = opmod(&["factor", "--weight", "jacobi:-0.5,-0.5", "--n", "64"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let res: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
    assert!(res < 1e-13, "{res}");
}

#[test]
fn hodlr_transform_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = opmod(&[
        "transform",
        "--weight",
        "log-chebyshev",
        "--n",
        "4096",
        "--backend",
        "hodlr",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().nth(1).unwrap().to_string();
    let f: Vec<&str> = line.split(',').collect();
    assert_eq!(f[1], "hodlr");
    assert!(f[2].parse::<f64>().unwrap() <= 1e-8);
    assert_eq!(csv_rows(&out).len(), 4096);
}

#[test]
fn bench_emits_one_row_per_algorithm() {
    let o = opmod(&["bench", "--weight", "log-chebyshev", "--n", "128", "--algos", "dense,displacement"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "n,algo,seconds");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("128,dense,") && rows[2].starts_with("128,displacement,"));
}

#[test]
fn rankmap_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = opmod(&["rankmap", "--weight", "log-chebyshev", "--n", "4096", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let w = std::fs::read(&out).unwrap();
        let r = std::fs::read(out.with_file_name(name.replace(".csv", ".factor.csv"))).unwrap();
        (w, r)
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let rows = csv_rows(&dir.path().join("a.csv"));
    // the first record of each level is the leading block; ranks shrink with block size
    let firsts: Vec<usize> = rows.iter().filter(|r| r[1] == "0").map(|r| r[5].parse().unwrap()).collect();
    assert!(firsts.windows(2).all(|w| w[0] >= w[1]), "{firsts:?}");
    assert!(firsts[0] <= 30);
}

#[test]
fn algebraic_rankmap_with_large_leaves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("alg.csv");
    let o = opmod(&[
        "rankmap", "--weight", "algebraic", "--n", "1024", "--leaf", "256", "--tol", "1e-10", "--seed", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w = csv_rows(&out);
    let r = csv_rows(&dir.path().join("alg.factor.csv"));
    assert_eq!(w.len(), r.len());
    for (a, b) in w.iter().zip(&r) {
        let (ra, rb): (i64, i64) = (a[5].parse().unwrap(), b[5].parse().unwrap());
        assert!((rb - ra).abs() <= 4, "{a:?} vs {b:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(opmod(&["factor", "--n", "1"]).status.code(), Some(2));
    assert_eq!(opmod(&["factor", "--weight", "nope"]).status.code(), Some(2));
    assert_eq!(opmod(&["factor", "--tol", "2"]).status.code(), Some(2));
    assert_eq!(opmod(&["rankmap", "--n", "64"]).status.code(), Some(2));
    // small default leaves cannot hold the algebraic weight's off-diagonal ranks
    let o = opmod(&["rankmap", "--weight", "algebraic", "--n", "1024", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(3));
    // Laguerre fill loses definiteness well before n = 64
    assert_eq!(opmod(&["factor", "--weight", "laguerre-step", "--n", "64"]).status.code(), Some(3));
}

#[test]
fn weight_files() {
    let dir = tempfile::tempdir().unwrap();
    let simple = dir.path().join("step.txt");
    std::fs::write(&simple, "breakpoints = 0, 4, inf\nvalues = 4096, 1\nweighted = true\n").unwrap();
    let o = opmod(&["moments", "--family", "laguerre:0", "--simple", simple.to_str().unwrap(), "--m", "10", "--check-quadrature"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for line in stdout(&o).lines().skip(1) {
        assert!(line.rsplit(',').next().unwrap().parse::<f64>().unwrap() < 1e-10, "{line}");
    }
    let ode = dir.path().join("w.txt");
    std::fs::write(&ode, "# Jacobi(1/2, 1/2) weight against itself\na_coeffs = 1\nb_coeffs = 0, 3\ninitial = 1.5707963267948966\n").unwrap();
    let o = opmod(&["moments", "--family", "jacobi:0.5,0.5", "--ode", ode.to_str().unwrap(), "--m", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let vals: Vec<f64> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(vals[1..].iter().all(|v| v.abs() < 1e-14), "{vals:?}");
    let broken = dir.path().join("bad.txt");
    std::fs::write(&broken, "a_coeffs 1\n").unwrap();
    assert_eq!(opmod(&["moments", "--ode", broken.to_str().unwrap()]).status.code(), Some(2));
}
