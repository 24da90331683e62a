use std::fs;
use std::path::Path;
use std::process::Command as Process;

use qsky::biphoton::contrast_to_purity;
use qsky::tomography::TomographyRecord;
use qsky::HybridStateSpec;
use qsky_cli::{execute, run_sweep, run_topology_gallery, CliError, Command, Config};

fn config(text: &str, out: &Path) -> Config {
    let mut cfg = Config::parse(text).unwrap();
    cfg.apply_overrides(None, Some(out.to_path_buf()), false);
    cfg
}

#[test]
fn noise_sweep_keeps_n_until_full_mixing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "[state]\nell1 = 0\nell2 = 3\n[grid]\nsamples = 128\n[sweep.p]\nstart = 1.0\nstop = 0.0\nstep = 0.1\n",
        dir.path(),
    );
    let table = run_sweep(&cfg).unwrap();
    assert_eq!(table.rows.len(), 11);
    assert!(table.warnings.is_empty());
    for r in &table.rows {
        if r.p > 0.0 {
            assert_eq!(r.rounded, 3, "p = {}", r.p);
            assert!(r.residual < 1e-2);
        } else {
            assert_eq!(r.rounded, 0);
            assert_eq!(r.skyrmion_number, 0.0);
        }
    }
    assert!((table.rows[0].purity - 0.25).abs() < 1e-12);
    assert!((table.rows[10].purity - 1.0).abs() < 1e-12);
    assert!(table.rows.windows(2).all(|w| w[0].p < w[1].p));
}

#[test]
fn contrast_sweep_purity_follows_contrast_relation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "[grid]\nsamples = 64\n[sweep.qc]\nvalues = [32.0, 1.0, 1.5, 2.0, 4.0, 8.0]\n",
        dir.path(),
    );
    let table = run_sweep(&cfg).unwrap();
    let qcs: Vec<f64> = table.rows.iter().map(|r| r.quantum_contrast).collect();
    assert_eq!(qcs, vec![1.0, 1.5, 2.0, 4.0, 8.0, 32.0]);
    for r in &table.rows {
        assert!((r.purity - contrast_to_purity(r.quantum_contrast, 2).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn analytic_and_deterministic_tomographic_sweeps_agree() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[state]\nell1 = 1\nell2 = 2\n[grid]\nsamples = 64\n";
    let points = "[sweep.p]\nvalues = [0.1, 0.4, 0.7, 1.0]\n";
    let analytic = run_sweep(&config(&format!("{base}{points}"), dir.path())).unwrap();
    let tomo_text = format!("{base}[sweep]\npipeline = \"tomographic\"\n{points}");
    let mut tomo_cfg = config(&tomo_text, dir.path());
    tomo_cfg.apply_overrides(None, None, true);
    let tomo = run_sweep(&tomo_cfg).unwrap();
    assert_eq!(tomo.rows.len(), analytic.rows.len());
    for (a, t) in analytic.rows.iter().zip(&tomo.rows) {
        assert_eq!(a.rounded, t.rounded);
        let expected = qsky::biphoton::purity_from_weight(t.p, 2);
        assert!(
            (t.purity - expected).abs() < 1e-6,
            "p {} purity {} vs {}",
            t.p,
            t.purity,
            expected
        );
        assert_eq!(t.mle_converged, Some(true));
    }
    assert!(tomo.rows.last().unwrap().clamped);
}

#[test]
fn gallery_pairs_are_equal_and_pole_sits_at_origin() {
    let grid = qsky::GridSpec::new(5.0, 65).unwrap();
    let specs: Vec<HybridStateSpec> = [[0, -3], [0, -2], [0, -1], [0, 1], [0, 2], [0, 3]]
        .iter()
        .map(|&[a, b]| HybridStateSpec::new(a, b))
        .collect();
    let rows = run_topology_gallery(&specs, 0.5, &grid).unwrap();
    let ns: Vec<i64> = rows.iter().map(|r| r.noisy.rounded).collect();
    assert_eq!(ns, vec![-3, -2, -1, 1, 2, 3]);
    assert!(rows.iter().all(|r| r.equal()));
    let v = rows[3].clean_texture.get(32, 32).unwrap();
    assert_eq!(grid.point(32, 32), (0.0, 0.0));
    assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12 && (v[2].abs() - 1.0).abs() < 1e-12);
}

#[test]
fn near_unit_weight_texture_matches_pure_texture() {
    let grid = qsky::GridSpec::new(5.0, 64).unwrap();
    let spec = [HybridStateSpec::new(1, -2)];
    let clean = &run_topology_gallery(&spec, 1.0, &grid).unwrap()[0];
    let near = &run_topology_gallery(&spec, 0.999, &grid).unwrap()[0];
    assert!(clean.clean_texture.max_distance(&near.noisy_texture) < 1e-9);
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let text = "[state]\nell1 = 0\nell2 = 2\n[grid]\nsamples = 48\n[sweep]\npipeline = \"tomographic\"\n[sweep.p]\nvalues = [0.3, 0.8]\n";
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    execute(Command::Sweep, &config(text, a.path())).unwrap();
    execute(Command::Sweep, &config(text, b.path())).unwrap();
    let fa = fs::read(a.path().join("sweep.csv")).unwrap();
    assert_eq!(fa, fs::read(b.path().join("sweep.csv")).unwrap());
    let mut other = config(text, b.path());
    other.apply_overrides(Some(99), None, false);
    execute(Command::Sweep, &other).unwrap();
    assert_ne!(fa, fs::read(b.path().join("sweep.csv")).unwrap());
}

#[test]
fn convergence_edge_cases() {
    let err = Config::parse("[converge]\nresolutions = []\n").unwrap_err();
    assert!(
        matches!(err, CliError::Config { line: Some(2), .. }),
        "{err}"
    );
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("[converge]\nresolutions = [64]\n", dir.path());
    let report = execute(Command::Converge, &cfg).unwrap();
    assert!(report.stdout.contains("no trend"));
    let text = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2);
    assert_eq!(data[0], "samples,skyrmion_number,residual");
}

#[test]
fn tomo_record_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("[state]\np = 0.6\n[tomography]\nseed = 4\n", dir.path());
    let report = execute(Command::Tomo, &cfg).unwrap();
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    let text = fs::read_to_string(dir.path().join("tomo_record.csv")).unwrap();
    assert!(text.contains("basis_A,eigen_A,basis_B,eigen_B,C,A,B"));
    let rec = TomographyRecord::read_csv(text.as_bytes()).unwrap();
    assert_eq!(rec.entries.len(), 36);
    assert_eq!(rec.seed, 4);
}

#[test]
fn density_file_has_grid_header_and_square_body() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "[state]\nell1 = 0\nell2 = 2\n[grid]\nsamples = 40\n",
        dir.path(),
    );
    let report = execute(Command::Skyrmion, &cfg).unwrap();
    assert!(report.stdout.contains("rounded = 2"));
    let text = fs::read_to_string(dir.path().join("skyrmion_density.csv")).unwrap();
    assert!(text.contains("# samples = 40"));
    assert!(text.contains("# spacing = "));
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 40);
    assert!(body.iter().all(|l| l.split(',').count() == 40));
}

fn qsky(args: &[&str]) -> i32 {
    Process::new(env!("CARGO_BIN_EXE_qsky"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, "[state]\nell1 = 0\nell2 = 1\n[grid]\nsamples = 32\n").unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[state]\np = 2.0\n").unwrap();
    let strict = dir.path().join("strict.toml");
    fs::write(
        &strict,
        "[grid]\nsamples = 24\n[numerics]\nresidual_warn = 1e-14\n",
    )
    .unwrap();

    assert_eq!(
        qsky(&["state", "--config", good.to_str().unwrap(), "--out", out]),
        0
    );
    assert_eq!(
        qsky(&["skyrmion", "--config", bad.to_str().unwrap(), "--out", out]),
        1
    );
    assert_eq!(
        qsky(&[
            "skyrmion",
            "--config",
            strict.to_str().unwrap(),
            "--out",
            out
        ]),
        2
    );
    assert_eq!(qsky(&["nonsense"]), 1);
    assert_eq!(qsky(&["state", "--config", "/nonexistent/qsky.toml"]), 1);
    assert_eq!(qsky(&["--help"]), 0);
}
