use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = r#"
seed = 7
levels = [0.0, 1.0]
replicates = 50

[spectrum]
model = "sachs-wolfe"
G = 1.0
alpha = 3.0

[window]
B = 2.0
j = 2
j_list = [1, 2, 3]
"#;

fn sphex(cmd: &str, dir: &Path, extra: &str) -> Output {
    let cfg = dir.join("run.toml");
    let out = dir.join("out");
    // top-level keys of `extra` must come before its first table header
    let (top, tables) = extra
        .split_once('[')
        .map_or((extra, String::new()), |(a, b)| (a, format!("[{b}")));
    fs::write(
        &cfg,
        format!(
            "output = {:?}\n{top}\n{BASE}\n{tables}",
            out.display().to_string()
        ),
    )
    .unwrap();
    Command::new(env!("CARGO_BIN_EXE_sphex"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Header first, LF endings, trailer with version and a 64-hex hash last.
fn check_csv(text: &str, header: &str) -> Vec<Vec<String>> {
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], header);
    let trailer = lines.last().unwrap();
    let parts: Vec<&str> = trailer.split(' ').collect();
    assert_eq!(parts[..3], ["#", "sphex", env!("CARGO_PKG_VERSION")]);
    assert_eq!(parts[3], "config");
    assert!(parts[4].len() == 64 && parts[4].chars().all(|c| c.is_ascii_hexdigit()));
    let width = header.split(',').count();
    lines[1..lines.len() - 1]
        .iter()
        .map(|l| {
            let cells: Vec<String> = l.split(',').map(str::to_owned).collect();
            assert_eq!(cells.len(), width, "{l}");
            cells
        })
        .collect()
}

#[test]
fn spectra_table_and_variance_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = sphex("spectra", dir.path(), "q = 2\n[kernel]\nL_K = 40");
    assert_ok(&o);
    let rows = check_csv(&read(dir.path(), "spectra.csv"), "ell,cl,b2,kappa2,cl_jq");
    assert_eq!(rows[0][0], "0");
    let total: f64 = rows
        .iter()
        .map(|r| {
            let ell: f64 = r[0].parse().unwrap();
            (2.0 * ell + 1.0) * r[4].parse::<f64>().unwrap()
        })
        .sum::<f64>()
        / (4.0 * std::f64::consts::PI);
    assert!((total - 2.0).abs() < 1e-9, "{total}");
    let m = read(dir.path(), "manifest.txt");
    assert!(m.contains("variance_expected = 2"));
    assert!(m.contains("command = spectra"));
}

#[test]
fn lkc_theory_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&sphex("lkc-theory", dir.path(), ""));
    let rows = check_csv(
        &read(dir.path(), "lkc_theory.csv"),
        "u,l0,l1,l2,len,exc_prob",
    );
    assert_eq!(rows.len(), 2);
    let area: f64 = rows[0][3].parse().unwrap();
    assert!((area - 2.0 * std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn simulate_writes_field_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&sphex("simulate", dir.path(), ""));
    let rows = check_csv(
        &read(dir.path(), "summary.csv"),
        "level,area,boundary_length,euler_char,sup_value",
    );
    assert_eq!(rows.len(), 2);
    let bin = fs::read(dir.path().join("out/field.bin")).unwrap();
    let field = sphere_excursion::simsphere::io::read_binary(&bin[..]).unwrap();
    assert!(field.values().iter().all(|v| v.is_finite()));
}

#[test]
fn runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert_ok(&sphex(
            "mc-validate",
            dir.path(),
            "q = 2\n[kernel]\nL_K = 4",
        ));
    }
    for name in ["mc_validate.csv", "manifest.txt", "config.toml"] {
        assert_eq!(
            read(a.path(), name).replace(&a.path().display().to_string(), ""),
            read(b.path(), name).replace(&b.path().display().to_string(), ""),
            "{name}"
        );
    }
    let rows = check_csv(
        &read(a.path(), "mc_validate.csv"),
        "level,stat,mc_mean,mc_se,theory,z",
    );
    // g and f, three statistics, two levels
    assert_eq!(rows.len(), 12);
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let cfg = dir.path().join("run.toml");
        fs::write(
            &cfg,
            format!(
                "output = {:?}\n{BASE}",
                dir.path().join("out").display().to_string()
            ),
        )
        .unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_sphex"))
            .args(["mc-sup", "--config"])
            .arg(&cfg)
            .env("SPHEX_THREADS", threads)
            .output()
            .unwrap();
        assert_ok(&o);
    }
    let strip = |s: String| {
        s.lines()
            .take_while(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(
        strip(read(a.path(), "mc_sup.csv")),
        strip(read(b.path(), "mc_sup.csv"))
    );
}

#[test]
fn cum4_reports_decay() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&sphex("cum4", dir.path(), "q = 2\n[kernel]\nL_K = 3"));
    let rows = check_csv(&read(dir.path(), "cum4.csv"), "j,k2,k4,cum4");
    assert_eq!(
        rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["1", "2", "3"]
    );
    let m = read(dir.path(), "manifest.txt");
    assert!(m.contains("rate = ") && m.contains("warning = "));
}

#[test]
fn unknown_key_is_rejected_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = sphex("spectra", dir.path(), "bogus = 1");
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "invalid_config");
    assert!(err["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn command_mismatch_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = sphex("spectra", dir.path(), "command = \"simulate\"");
    assert_eq!(o.status.code(), Some(2));

    let o = sphex("spectra", dir.path(), "q = 7");
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "unsupported_order");
}
