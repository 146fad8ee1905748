use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn nozzle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nozzle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("experiment.toml");
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHORT_MARCH: &str = "[grid]\nn_phi = 65\nr_max = 10.0\n";

/// Every file under `root` with its bytes, sorted by relative path.
fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn help_and_version_exit_zero() {
    let o = nozzle(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["background", "march", "verify", "ineq"] {
        assert!(text.contains(cmd), "help lists {cmd}");
    }
    assert_eq!(code(&nozzle(&["--version"])), 0);
}

#[test]
fn bad_arguments_exit_64() {
    assert_eq!(code(&nozzle(&[])), 64);
    assert_eq!(code(&nozzle(&["fly"])), 64);
    assert_eq!(code(&nozzle(&["march", "--refine", "x"])), 64);
    assert_eq!(code(&nozzle(&["march", "--refine", "1", "--coarse"])), 64);
}

#[test]
fn out_of_range_gamma_exits_64() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "[gas]\ngamma = 2.5\n");
    let o = nozzle(&["march", "--config", s(&cfg), "--out", s(&t.path().join("o"))]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
}

#[test]
fn subsonic_entrance_exits_64() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "[gas]\nq0 = 0.3\n");
    let o = nozzle(&["background", "--config", s(&cfg), "--out", s(&t.path().join("o"))]);
    assert_eq!(code(&o), 64);
}

#[test]
fn unknown_key_and_missing_config_exit_64() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "[grid]\nnphi = 65\n");
    assert_eq!(code(&nozzle(&["march", "--config", s(&cfg)])), 64);
    let missing = t.path().join("absent.toml");
    assert_eq!(code(&nozzle(&["march", "--config", s(&missing)])), 64);
}

#[test]
fn unwritable_output_exits_74() {
    let t = TempDir::new().unwrap();
    let blocker = t.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let o = nozzle(&["background", "--out", s(&blocker.join("sub"))]);
    assert_eq!(code(&o), 74);
}

#[test]
fn missing_output_directory_is_created() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("a/b/c");
    let o = nozzle(&["background", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for f in ["background.csv", "decay.csv", "report.txt", "metadata.txt"] {
        assert!(out.join(f).is_file(), "{f} written");
    }
    let header = fs::read_to_string(out.join("background.csv")).unwrap();
    assert!(header.starts_with("r,rho,U,c2,P1,P2,dP1,dP2\n"));
}

#[test]
fn march_writes_one_trace_per_amplitude() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), SHORT_MARCH);
    let out = t.path().join("o");
    let o = nozzle(&["march", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut dirs: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    dirs.sort();
    assert_eq!(dirs, ["eps_00_0e0", "eps_01_1e-3"]);
    for d in &dirs {
        let dir = out.join(d);
        let meta = fs::read_to_string(dir.join("metadata.txt")).unwrap();
        assert!(meta.contains("n_phi = 65") && meta.contains("seed = 2024"));
        let first = fs::read_to_string(dir.join("slices/slice_00000.csv")).unwrap();
        assert!(first.starts_with("r,phi,Phi,dPhi_dr,dPhi_dphi,rho,c2,mach_radial\n"));
        assert_eq!(first.lines().count(), 66);
        assert!(dir.join("guards.csv").is_file() && dir.join("slices/index.csv").is_file());
    }
}

#[test]
fn large_amplitude_aborts_with_exit_3() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), &format!("{SHORT_MARCH}[perturbation]\namplitudes = [0.5]\n"));
    let out = t.path().join("o");
    let o = nozzle(&["march", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 3);
    let msg = String::from_utf8_lossy(&o.stdout);
    assert!(msg.contains("aborted at r ="), "{msg}");
    let abort = fs::read_to_string(out.join("eps_00_5e-1/abort.txt")).unwrap();
    assert!(abort.contains("abort_radius") && abort.contains("cause"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), SHORT_MARCH);
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for out in [&a, &b] {
        let o = nozzle(&["march", "--config", s(&cfg), "--out", s(out), "--plot-data"]);
        assert_eq!(code(&o), 0);
    }
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert!(!sa.is_empty());
    assert_eq!(sa, sb);
}

#[test]
fn plot_data_is_written_only_on_request() {
    let t = TempDir::new().unwrap();
    let with = t.path().join("with");
    let without = t.path().join("without");
    assert_eq!(code(&nozzle(&["background", "--out", s(&with), "--plot-data"])), 0);
    assert_eq!(code(&nozzle(&["background", "--out", s(&without)])), 0);
    let dat = fs::read_to_string(with.join("plot/rho_hat.dat")).unwrap();
    assert!(dat.starts_with("# r rho_hat\n"));
    assert_eq!(dat.lines().count(), 201);
    assert!(!without.join("plot").exists());
}

const SMALL_VERIFY: &str = "[grid]\nn_phi = 65\n[diagnostics]\nz_probes = 10\ninequality_family = 2\ninequality_levels = 2\nenergy_k = [0]\n";

#[test]
fn verify_passes_on_a_small_config_and_fails_on_tampered_mu() {
    let t = TempDir::new().unwrap();
    let good = write_config(t.path(), SMALL_VERIFY);
    let out = t.path().join("good");
    let o = nozzle(&["verify", "--config", s(&good), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    for f in ["report.txt", "energy.csv", "decay.csv", "certificates.csv", "inequality_u.csv"] {
        assert!(out.join(f).is_file(), "{f} written");
    }
    let ineq = fs::read_to_string(out.join("inequality_u.csv")).unwrap();
    assert!(ineq.starts_with("ineq_id,family_member,grid_level,ratio\n"));
    assert_eq!(ineq.lines().count(), 1 + 2 * 2 * 4);

    let bad_dir = t.path().join("bad");
    fs::create_dir(&bad_dir).unwrap();
    let bad = write_config(&bad_dir, &format!("{SMALL_VERIFY}mu = 2.0\n"));
    let o = nozzle(&["verify", "--config", s(&bad), "--out", s(&t.path().join("bad_out"))]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("certificates at gamma = 1.4, mu = 2.0000"), "{err}");
    assert!(err.contains("flux positivity fails"), "{err}");
}

#[test]
fn ineq_honours_seed_override() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "[diagnostics]\ninequality_family = 1\ninequality_levels = 2\n");
    let read = |seed: &str, name: &str| {
        let out = t.path().join(name);
        let o = nozzle(&["ineq", "--config", s(&cfg), "--out", s(&out), "--seed", seed]);
        assert_eq!(code(&o), 0);
        fs::read_to_string(out.join("inequality_u.csv")).unwrap()
    };
    let a = read("7", "a");
    assert_eq!(a, read("7", "b"));
    assert_ne!(a, read("8", "c"));
}

#[test]
fn coarse_grid_uses_half_resolution() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "[grid]\nr_max = 5.0\n[perturbation]\namplitudes = [1e-3]\n");
    let out = t.path().join("o");
    assert_eq!(code(&nozzle(&["march", "--config", s(&cfg), "--out", s(&out), "--coarse"])), 0);
    let meta = fs::read_to_string(out.join("eps_00_1e-3/metadata.txt")).unwrap();
    assert!(meta.contains("n_phi = 65"), "{meta}");
}
