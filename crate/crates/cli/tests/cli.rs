use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PHI: &str = r#"
[phi]
domain = { kind = "rect", x = [-1.0, 1.0], y = [-1.0, 1.0] }
family = { kind = "double_phase", p = 2.0, q = 2.2, a = "abs(x1)" }
moduli = { a = { c = 1.0, beta = 1.0 } }
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    let sub = args[0];
    Command::new(env!("CARGO_BIN_EXE_musielak"))
        .arg(sub)
        .arg("--config")
        .arg(&path)
        .args(&args[1..])
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(file)).unwrap()
}

#[test]
fn check_writes_tables_and_report() {
    let dir = scratch("check");
    let cfg = format!("{PHI}\n[check]\nradii = [0.1, 0.05, 0.025]\nballs = 4\n");
    let out = run(&dir, &cfg, &["check", "--eps", "0.2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read(&dir, "report.txt");
    assert!(report.contains("VA1 holds"), "{report}");
    assert!(report.contains("wVA1(0.2)"));
    assert!(report.ends_with("status: ok\n"));
    let conditions = read(&dir, "conditions.csv");
    assert!(conditions.starts_with("condition,verdict,constant,rate\n"));
    assert_eq!(conditions.lines().count(), 7);
    assert!(read(&dir, "modulus.csv").starts_with("condition,r,value\n"));
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = scratch("invalid");
    for cfg in [
        format!("{PHI}\ncolour = 1\n"),
        format!("{PHI}\n[grid]\ncells = 4\n"),
        format!("{PHI}\n[solve]\nboundary = \"x1 +* 2\"\n"),
        PHI.replace("q = 2.2", "q = 1.5"),
    ] {
        let out = run(&dir, &cfg, &["solve"]);
        assert_eq!(out.status.code(), Some(2), "{cfg}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let out = run(&dir, PHI, &["solve"]);
    assert_eq!(out.status.code(), Some(2), "missing [solve] block");
    let out = run(&dir, PHI, &["regularize", "--r", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = Command::new(env!("CARGO_BIN_EXE_musielak"))
        .args(["check", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unconverged_solve_exits_with_3_and_keeps_artifacts() {
    let dir = scratch("unconverged");
    let cfg = format!("{PHI}\n[grid]\ncells = 16\n[solve]\nboundary = \"x1^2 - x2\"\nmax_iter = 2\n");
    let out = run(&dir, &cfg, &["solve"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(read(&dir, "report.txt").contains("status: failed"));
    assert!(read(&dir, "field.csv").starts_with("x,y,u\n"));
    assert!(read(&dir, "energy.csv").lines().count() > 1);
}

#[test]
fn solve_and_holder_on_a_square() {
    let dir = scratch("holder");
    let cfg = format!("{PHI}\n[grid]\ncells = 64\n[solve]\nboundary = \"x1 + 0.5*x2\"\n[holder]\nrho_max = 0.5\n");
    let out = run(&dir, &cfg, &["solve"]);
    assert_eq!(out.status.code(), Some(0));
    // 65 x 65 nodes plus the header
    assert_eq!(read(&dir, "field.csv").lines().count(), 65 * 65 + 1);
    assert_eq!(read(&dir, "gradient.csv").lines().count(), 64 * 64 + 1);
    let out = run(&dir, &cfg, &["holder", "--center", "0,0", "--mode", "function"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&dir, "report.txt").contains("campanato (function)"));
    assert!(read(&dir, "decay.csv").starts_with("rho,oscillation\n"));
    let out = run(&dir, &cfg, &["holder", "--center", "0,0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_reports_metrics() {
    let dir = scratch("compare");
    let cfg = format!("{PHI}\n[solve]\nboundary = \"x1 + 0.5*x2\"\n[compare]\ncenter = [0.5, 0.0]\ncells_per_radius = 8\n");
    let out = run(&dir, &cfg, &["compare", "--r", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = read(&dir, "metrics.csv");
    let row: Vec<f64> = metrics.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 0.1);
    assert!(row[1] > 0.0 && row[4] < 1.0, "{metrics}");
    // B_2r must stay inside the domain
    let out = run(&dir, &cfg, &["compare", "--r", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn regularize_table_is_increasing() {
    let dir = scratch("regularize");
    let cfg = format!("{PHI}\n[regularize]\ncenter = [0.5, 0.0]\ncsv_points = 50\n");
    let out = run(&dir, &cfg, &["regularize", "--r", "0.1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = read(&dir, "phi_tilde.csv");
    let rows: Vec<Vec<f64>> = table.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1] && w[1][2] >= w[0][2]));
    assert!(read(&dir, "report.txt").contains("theta A1 holds"));
}
