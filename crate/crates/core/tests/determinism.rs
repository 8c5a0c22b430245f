use std::fs;
use std::path::Path;

use elastodyn::mesh::BoxDomain;
use elastodyn::scenarios::{cmd_run, InitialKind, Preset};

fn collect(dir: &Path, base: &Path, out: &mut Vec<(String, Vec<u8>)>) {
    let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(&p, base, out);
        } else if p.file_name().unwrap() != "timings.toml" {
            let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
            out.push((rel, fs::read(&p).unwrap()));
        }
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let mut cfg = Preset::Example2.config(false).unwrap();
    cfg.domain = BoxDomain::new([-1.0; 3], [1.0; 3], [3; 3]).unwrap();
    cfg.k = 3f64.powi(-3);
    cfg.t_final = 1.0;
    cfg.initial = InitialKind::Random;
    cfg.seed = 11;
    cfg.initial_amplitude = 1e-3;
    cfg.validate().unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        cmd_run(&cfg, Some(&dir)).unwrap();
        let mut files = Vec::new();
        collect(&dir, &dir, &mut files);
        trees.push(files);
    }
    assert!(trees[0].len() >= 6);
    assert!(trees[0].iter().any(|(n, _)| n.ends_with(".vtk")));
    assert_eq!(trees[0].len(), trees[1].len());
    for ((na, a), (nb, b)) in trees[0].iter().zip(&trees[1]) {
        assert_eq!(na, nb);
        assert!(a == b, "{na} differs between runs");
    }
}
