use std::fs;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaysym"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["verify", "bracket", "rank", "catalog", "integrate", "roots", "reduce", "traffic"] {
        let a = bin(&[sub, "--help"]);
        assert_eq!(a.status.code(), Some(0), "{sub}");
        assert!(stdout(&a).contains("Usage"), "{sub}");
        assert_eq!(a.stdout, bin(&[sub, "--help"]).stdout);
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bin(&["roots", "--alpha", "0", "--bogus"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["traffic", "--example", "4"]).status.code(), Some(2));
}

#[test]
fn roots_of_lambda_squared_minus_one() {
    let o = bin(&["roots", "--alpha", "0", "--beta", "1", "--gamma", "0", "--C", "1", "--range", "-3,3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("roots: -1, 1\n"), "{}", stdout(&o));
}

#[test]
fn traffic_example1_pipeline() {
    let o = bin(&["traffic", "--example", "1", "--v", "1", "--tau", "0.5", "--A", "-1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("deviation < 1e-9"), "{}", stdout(&o));
}

#[test]
fn traffic_collision_regime_reports_warning() {
    let o = bin(&["traffic", "--example", "2", "--alpha", "1", "--n1", "2", "--k", "1", "--q", "0.25"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("collision is inevitable"));
}

#[test]
fn catalog_check_a6_3_prints_six_pass_lines() {
    let o = bin(&["catalog", "check", "A6_3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(s.lines().filter(|l| l.starts_with("PASS")).count(), 6, "{s}");
    assert_eq!(bin(&["catalog", "show", "nope"]).status.code(), Some(1));
}

#[test]
fn catalog_list_and_export() {
    let o = bin(&["catalog", "list"]);
    assert!(stdout(&o).lines().count() >= 19);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("catalog.txt");
    let o = bin(&["catalog", "export", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let parsed = delaysym::catalog::parse_catalog(&text).unwrap();
    assert_eq!(parsed.len(), delaysym::catalog::entries().len());
}

#[test]
fn verify_reports_and_fails_on_non_symmetry() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.txt");
    fs::write(&sys, "# translation invariant\nf = dym - dy\ng = x - 1\n").unwrap();
    let s = sys.to_str().unwrap();
    let o = bin(&["verify", "--system", s, "--field", "1;0", "--field", "0;1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let o = bin(&["verify", "--system", s, "--field", "0;x^2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn bracket_and_rank() {
    let o = bin(&["bracket", "--fields", "0;1", "0;y", "0;y^2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("[X1, X3] : X2 coefficient 2"), "{}", stdout(&o));
    let o = bin(&["bracket", "--fields", "0;1", "0;y^2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin(&["rank", "--fields", "1;0", "0;1"]);
    assert!(stdout(&o).contains("invariants k = 5"));
}

#[test]
fn integrate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.txt");
    fs::write(&sys, "f = ym\ng = x - 1\n").unwrap();
    let csv = dir.path().join("out.csv");
    let o = bin(&[
        "integrate", "--system", sys.to_str().unwrap(), "--phi", "x", "--dy0", "1", "--to", "1", "--h", "0.001",
        "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("y(1) = 0.666666666667"), "{}", stdout(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x,y,dy\n"));
    assert_eq!(text.lines().count(), 1 + 1001);
}

#[test]
fn reduce_translation_system() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.txt");
    fs::write(&sys, "f = dym - dy + 0.2*(dy - 1)\ng = x - 0.7\n").unwrap();
    let o = bin(&["reduce", "--system", sys.to_str().unwrap(), "--field", "1;1", "--guess", "-1,0.5", "--interval", "0,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("B=0.700000000000") && s.contains("free=A"), "{s}");
}

#[test]
fn platoon_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("scenario.txt");
    fs::write(
        &sc,
        "leader = t\ntau = 0.5\ncars = 2\nhistory.1 = t - 1\nhistory.2 = t - 2\nt_end = 2\nh = 0.01\n",
    )
    .unwrap();
    let csv = dir.path().join("p.csv");
    let o = bin(&["traffic", "--scenario", sc.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("car 2: x(2) = 0"));
    assert!(fs::read_to_string(&csv).unwrap().starts_with("t,x1,dx1,x2,dx2\n"));
}

#[test]
fn seeded_runs_are_identical() {
    let a = bin(&["catalog", "check", "A3_8", "--seed", "7"]);
    let b = bin(&["catalog", "check", "A3_8", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let c = bin(&["traffic", "--example", "3", "--seed", "42"]);
    assert_eq!(c.stdout, bin(&["traffic", "--example", "3", "--seed", "42"]).stdout);
}

#[test]
fn library_entry_point_matches_binary() {
    let mut buf = Vec::new();
    let code = delaysym::cli::run(["delaysym", "traffic", "--example", "3"], &mut buf);
    assert_eq!(code, 0);
    assert_eq!(buf, bin(&["traffic", "--example", "3"]).stdout);
}
