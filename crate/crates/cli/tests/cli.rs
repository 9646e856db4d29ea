use std::path::{Path, PathBuf};
use std::process::Command;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

struct Run {
    code: i32,
    stdout: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_copocert"))
        .args(args)
        .output()
        .expect("spawn copocert");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_horn_exact_then_verify_in_fresh_process() {
    let dir = tempfile::tempdir().unwrap();
    let cert = dir.path().join("horn.cert");
    let r = run(&["certify", s(&data("horn.mat")), "--r-max", "2", "--exact", "--out", s(&cert)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("verdict: certified at r=1"), "{}", r.stdout);
    assert!(r.stdout.contains("level: r=0"), "{}", r.stdout);
    let v = run(&["verify", s(&cert)]);
    assert_eq!(v.code, 0, "{}", v.stdout);
}

#[test]
fn certify_default_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("id.mat");
    std::fs::copy(data("identity3.mat"), &m).unwrap();
    let r = run(&["certify", s(&m), "--exact"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("certified at r=0"), "{}", r.stdout);
    assert_eq!(run(&["verify", s(&dir.path().join("id.mat.cert"))]).code, 0);
}

#[test]
fn certify_identity_numeric() {
    let r = run(&["certify", s(&data("identity3.mat"))]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("member of K^(0)"), "{}", r.stdout);
}

#[test]
fn certify_padded_horn_not_found() {
    let r = run(&["certify", s(&data("horn6.mat")), "--r-max", "3"]);
    assert_eq!(r.code, 2, "{}", r.stdout);
    assert!(r.stdout.contains("not found up to r=3"), "{}", r.stdout);
}

#[test]
fn certify_input_errors() {
    assert_eq!(run(&["certify", s(&data("truncated.mat"))]).code, 1);
    assert_eq!(run(&["certify", s(&data("does-not-exist.mat"))]).code, 1);
    assert_eq!(run(&["certify", s(&data("horn.mat")), "--r-max", "two"]).code, 1);
}

#[test]
fn reports_are_deterministic() {
    let a = run(&["certify", s(&data("horn.mat")), "--r-max", "1"]);
    let b = run(&["certify", s(&data("horn.mat")), "--r-max", "1"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(!a.stdout.contains("time:"));
    let t = run(&["certify", s(&data("horn.mat")), "--r-max", "1", "--timings"]);
    assert!(t.stdout.contains("time: search"));
}

#[test]
fn verdict_lines_name_module_and_tolerance() {
    let r = run(&["certify", s(&data("horn6.mat")), "--r-max", "1"]);
    for line in r.stdout.lines().filter(|l| l.starts_with("verdict:") || l.starts_with("level:")) {
        assert!(line.contains("::") && line.contains("tol"), "{line}");
    }
    assert!(r.stdout.contains("tolerance: solver=1e-8"));
    assert!(r.stdout.contains("tolerance: margin=1e-6"));
}

#[test]
fn theta_c5_k4() {
    let r = run(&["theta", s(&data("c5.dimacs")), "--r", "1"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("alpha: 2"));
    assert!(r.stdout.contains("theta^(1)=2.0000"), "{}", r.stdout);
    let r = run(&["theta", s(&data("k4.dimacs")), "--r", "0"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("alpha: 1"));
    assert!(r.stdout.contains("theta^(0)=1.0000"), "{}", r.stdout);
}

#[test]
fn theta_c5_level_zero_disagrees() {
    let r = run(&["theta", s(&data("c5.dimacs")), "--r", "0"]);
    assert_eq!(r.code, 2, "{}", r.stdout);
    assert!(r.stdout.contains("theta^(0)=2.236"), "{}", r.stdout);
}

#[test]
fn theta_petersen_level_three() {
    let r = run(&["theta", s(&data("petersen.dimacs")), "--r", "3"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("alpha: 4"));
}

#[test]
fn theta_bad_graph() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("bad.dimacs");
    std::fs::write(&g, "p edge 3 2\ne 1 2\n").unwrap();
    assert_eq!(run(&["theta", s(&g)]).code, 1);
}

#[test]
fn horn_explicit_decompositions() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = dir.path().join("d1.cert");
    let r = run(&["horn", "--d", "1,1,1,1,1", "--out", s(&c1)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("vanished terms: 0"));
    assert_eq!(run(&["verify", s(&c1)]).code, 0);

    let c2 = dir.path().join("d2.cert");
    let r = run(&["horn", "--d", "1,2,1,1,1", "--out", s(&c2)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("vanished terms: 1"), "{}", r.stdout);
    assert!(r.stdout.contains("r=1"));
    assert_eq!(run(&["verify", s(&c2)]).code, 0);
}

#[test]
fn horn_fallback_reports_level_one_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("d3.cert");
    let r = run(&["horn", "--d", "1,3,1,1,1", "--out", s(&c), "--r-max", "1"]);
    assert!(r.stdout.contains("condition: violated"), "{}", r.stdout);
    assert!(r.stdout.contains("level: r=1"), "{}", r.stdout);
    assert!(r.stdout.contains("r=1 margin=-1.3"), "{}", r.stdout);
    assert_eq!(r.code, 2, "{}", r.stdout);
}

#[test]
fn horn_nonpositive_d() {
    assert_eq!(run(&["horn", "--d", "1,0,1,1,1"]).code, 1);
    assert_eq!(run(&["horn", "--d", "1,-1,1,1,1"]).code, 1);
    assert_eq!(run(&["horn", "--d", "1,1,1,1"]).code, 1);
}

#[test]
fn verify_tampered_and_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("h.cert");
    assert_eq!(run(&["horn", "--d", "1,1,1,1,1", "--out", s(&c)]).code, 0);
    let text = std::fs::read_to_string(&c).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let first_square = lines.iter().position(|l| l.starts_with("squares")).unwrap() + 1;
    let (_, poly) = lines[first_square].split_once(';').unwrap();
    lines[first_square] = format!("2 ;{poly}");
    let tampered = dir.path().join("tampered.cert");
    std::fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    assert_eq!(run(&["verify", s(&tampered)]).code, 4);

    let malformed = dir.path().join("bad.cert");
    std::fs::write(&malformed, "copocert-certificate 1\nkind nonsense\n").unwrap();
    assert_eq!(run(&["verify", s(&malformed)]).code, 1);
    assert_eq!(run(&["verify", s(&dir.path().join("missing.cert"))]).code, 1);
}

#[test]
fn sweep_directory_and_empty_directory() {
    let r = run(&["sweep", "--graphs", s(&data("graphs"))]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let rows: Vec<&str> = r.stdout.lines().filter(|l| l.starts_with("row:")).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("row: c5.dimacs"));
    assert!(r.stdout.contains("candidates: 0"));

    let empty = tempfile::tempdir().unwrap();
    let r = run(&["sweep", "--graphs", s(empty.path())]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("graphs: 0"));
}

#[test]
fn sweep_bad_file_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("g"), "p edge 2 1\ne 1 1\n").unwrap();
    assert_eq!(run(&["sweep", "--graphs", s(dir.path())]).code, 1);
}

#[test]
fn sweep_all_small_graphs_has_no_candidates() {
    let r = run(&["sweep", "--all", "5"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("graphs: 52"));
    assert!(r.stdout.contains("unchecked: 0"));
    assert!(r.stdout.contains("candidates: 0"));
}

#[test]
fn sweep_random_is_seeded_and_echoed() {
    let a = run(&["sweep", "--random", "6,100,7"]);
    let b = run(&["sweep", "--random", "6,100,7"]);
    assert_eq!(a.code, 0, "{}", a.stdout);
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.contains("seed: 7"));
    assert!(a.stdout.contains("candidates: 0"));
    assert_eq!(run(&["sweep", "--random", "6,x,7"]).code, 1);
    assert_eq!(run(&["sweep"]).code, 1);
}

#[test]
fn dumps_parse_back_to_the_encoded_problems() {
    use copocert::gram::build_reznick;
    use copocert::graphs::theta_encoding;
    use copocert::sdp::parse_dump;

    let dir = tempfile::tempdir().unwrap();
    let levels = dir.path().join("levels");
    let r = run(&["certify", s(&data("horn.mat")), "--r-max", "1", "--dump", s(&levels)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let h = copocert::copositive::horn();
    for level in 0..=1 {
        let text = std::fs::read_to_string(levels.join(format!("r{level}.sdp"))).unwrap();
        assert_eq!(parse_dump(&text).unwrap(), build_reznick(&h, level).problem);
    }

    let file = dir.path().join("c5.sdp");
    let r = run(&["theta", s(&data("c5.dimacs")), "--r", "1", "--dump", s(&file)]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("dump: "));
    let c5 = copocert::graphs::cycle(5);
    let text = std::fs::read_to_string(&file).unwrap();
    assert_eq!(parse_dump(&text).unwrap(), theta_encoding(&c5, 1).unwrap().problem);
}
