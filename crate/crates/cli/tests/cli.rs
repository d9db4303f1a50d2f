use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qchannel::channel::library;
use qchannel::circuit::{cnot_count, parse};
use qchannel::compiler::ConvexMixture;
use qchannel::io::{channel_to_json, mixture_to_json};

fn qchannel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qchannel")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn random_file(dir: &Path, name: &str, m: &str, n: &str, k: &str, seed: &str) {
    let o = qchannel(&["random", "--m", m, "--n", n, "--kraus-rank", k, "--seed", seed, "--out", name], dir);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn compile_measured_reports_and_writes_circuit() {
    let dir = tempfile::tempdir().unwrap();
    random_file(dir.path(), "ch.json", "2", "1", "4", "7");
    let o = qchannel(&["compile", "--model", "measured", "--in", "ch.json", "--out", "c.qcirc", "--report"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.starts_with("qubits=3 cnots="), "{line}");
    assert!(line.contains(" measurements=2 choi_dist="), "{line}");
    let c = parse(&fs::read_to_string(dir.path().join("c.qcirc")).unwrap()).unwrap();
    assert_eq!(c.num_qubits, 3);
    let reported: usize = line.split("cnots=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert_eq!(reported, cnot_count(&c).worst_case);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    random_file(dir.path(), "a.json", "1", "2", "2", "11");
    random_file(dir.path(), "b.json", "1", "2", "2", "11");
    assert_eq!(fs::read(dir.path().join("a.json")).unwrap(), fs::read(dir.path().join("b.json")).unwrap());
    for out in ["x.qcirc", "y.qcirc"] {
        let o = qchannel(&["compile", "--model", "measured", "--in", "a.json", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(dir.path().join("x.qcirc")).unwrap(), fs::read(dir.path().join("y.qcirc")).unwrap());
}

#[test]
fn compile_flags() {
    let dir = tempfile::tempdir().unwrap();
    random_file(dir.path(), "ch.json", "1", "1", "2", "3");
    let raw = qchannel(&["compile", "--model", "measured", "--in", "ch.json", "--out", "raw.qcirc", "--no-rewrite", "--report"], dir.path());
    let opt = qchannel(&["compile", "--model", "measured", "--in", "ch.json", "--out", "opt.qcirc", "--report"], dir.path());
    let cnots = |o: &Output| -> usize { stdout(o).split("cnots=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap() };
    assert!(cnots(&opt) < cnots(&raw));
    let unverified = qchannel(&["compile", "--model", "qcm", "--in", "ch.json", "--out", "q.qcirc", "--no-verify", "--report"], dir.path());
    assert_eq!(unverified.status.code(), Some(0));
    assert!(stdout(&unverified).contains("choi_dist=unverified"));
    let padded = qchannel(&["compile", "--model", "measured", "--in", "ch.json", "--out", "k.qcirc", "--k", "2", "--report"], dir.path());
    assert_eq!(padded.status.code(), Some(0));
    assert!(stdout(&padded).contains("measurements=2"), "{}", stdout(&padded));
}

#[test]
fn size_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    random_file(dir.path(), "ch.json", "3", "3", "2", "1");
    let o = qchannel(&["compile", "--model", "measured", "--in", "ch.json", "--out", "c.qcirc", "--k", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exceeds"));
}

#[test]
fn verify_mismatch_exits_two_with_distance() {
    let dir = tempfile::tempdir().unwrap();
    random_file(dir.path(), "a.json", "1", "1", "2", "1");
    random_file(dir.path(), "b.json", "1", "1", "2", "2");
    qchannel(&["compile", "--model", "measured", "--in", "a.json", "--out", "a.qcirc"], dir.path());
    let ok = qchannel(&["verify", "--circuit", "a.qcirc", "--channel", "a.json", "--tol", "1e-8"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    let bad = qchannel(&["verify", "--circuit", "a.qcirc", "--channel", "b.json", "--tol", "1e-8"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
    let d: f64 = stdout(&bad).trim().strip_prefix("choi_dist=").unwrap().parse().unwrap();
    assert!(d > 1e-3);
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qchannel(&["compile", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(qchannel(&["nonsense"], dir.path()).status.code(), Some(1));
    assert_eq!(qchannel(&["info", "--in", "missing.json"], dir.path()).status.code(), Some(1));
    fs::write(dir.path().join("bad.json"), "{\"m\": 1, \"n\": 1, \"kraus\": [[[[2, 0], [0, 0]], [[0, 0], [1, 0]]]]}").unwrap();
    assert_eq!(qchannel(&["info", "--in", "bad.json"], dir.path()).status.code(), Some(1));
    let infeasible = qchannel(&["random", "--m", "2", "--n", "1", "--kraus-rank", "1", "--seed", "0", "--out", "x.json"], dir.path());
    assert_eq!(infeasible.status.code(), Some(1));
    assert_eq!(qchannel(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn info_fields() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ad.json"), channel_to_json(&library::amplitude_damping(0.4), false)).unwrap();
    fs::write(dir.path().join("dep.json"), channel_to_json(&library::depolarizing_qubit(), false)).unwrap();
    let ad = stdout(&qchannel(&["info", "--in", "ad.json"], dir.path()));
    assert!(ad.contains("m=1\nn=1\n") && ad.contains("kraus_rank=2\n") && ad.contains("extreme=yes\n"), "{ad}");
    assert!(ad.contains("tp_residual="));
    let dep = stdout(&qchannel(&["info", "--in", "dep.json"], dir.path()));
    assert!(dep.contains("kraus_rank=4\n") && dep.contains("extreme=no\n"), "{dep}");
}

#[test]
fn bounds_output() {
    let dir = tempfile::tempdir().unwrap();
    let one = stdout(&qchannel(&["bounds", "--m", "1", "--n", "2"], dir.path()));
    assert!(one.contains("lb_measured=2\n"), "{one}");
    let grid = qchannel(&["bounds", "--grid", "2", "3", "--csv"], dir.path());
    assert_eq!(grid.status.code(), Some(0));
    let text = stdout(&grid);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 3 * 4);
    assert!(lines[0].starts_with("m,n,lb_qcm,"));
    assert_eq!(qchannel(&["bounds", "--m", "1"], dir.path()).status.code(), Some(1));
    assert_eq!(qchannel(&["bounds", "--m", "30", "--n", "30"], dir.path()).status.code(), Some(1));
}

#[test]
fn random_model_writes_manifest_and_components() {
    let dir = tempfile::tempdir().unwrap();
    let flip = qchannel::channel::KrausSet::unitary(library::pauli('X')).unwrap();
    let mix = ConvexMixture::new(vec![(0.3, library::amplitude_damping(0.2)), (0.7, flip)]).unwrap();
    fs::write(dir.path().join("mix.json"), mixture_to_json(&mix)).unwrap();
    let o = qchannel(&["compile", "--model", "random", "--in", "mix.json", "--out", "mix.manifest.json", "--report"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("components=2"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("mix.manifest.json")).unwrap()).unwrap();
    let comps = manifest["components"].as_array().unwrap();
    assert_eq!(comps.len(), 2);
    for c in comps {
        let file = c["circuit"].as_str().unwrap();
        parse(&fs::read_to_string(dir.path().join(file)).unwrap()).unwrap();
    }
    assert_eq!(comps[1]["p"].as_f64(), Some(0.7));
}

#[test]
fn fit_command() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ad.json"), channel_to_json(&library::amplitude_damping(0.25), false)).unwrap();
    let o = qchannel(&["fit", "--template", "1to1", "--in", "ad.json", "--starts", "8", "--seed", "1", "--out", "t.qcirc"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("template=1to1 cnots=1 distance="));
    let c = parse(&fs::read_to_string(dir.path().join("t.qcirc")).unwrap()).unwrap();
    assert_eq!(cnot_count(&c).worst_case, 1);
    let wrong = qchannel(&["fit", "--template", "2to1", "--in", "ad.json"], dir.path());
    assert_eq!(wrong.status.code(), Some(1));
    let unknown = qchannel(&["fit", "--template", "3to3", "--in", "ad.json"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
}
