use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridreach"))
        .args(args)
        .current_dir(dir)
        .env_remove("HYBRIDREACH_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn shipped_configs_validate() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["dog1d", "jumper2d", "aircraft3d", "quadruped3d"] {
        let cfg = configs().join(format!("{name}.cfg"));
        let o = run(&["validate", cfg.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn solve_query_rollout_slice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("dog1d.cfg");
    let cfg = cfg.to_str().unwrap();
    let o = run(&["solve", cfg, "-o", "dog.vfs"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["query", "dog.vfs", "--x", "9.5", "--mode", "walk", "--t", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("member=true"), "{text}");
    assert!(text.contains("u_star=") && text.contains("best_switch="));

    let o = run(&["query", "dog.vfs", "--x", "1.0", "--mode", "0", "--t", "0"], dir.path());
    assert!(stdout(&o).contains("member=false"));

    let o = run(&["rollout", cfg, "--result", "dog.vfs", "-o", "walk.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("status=REACHED_TARGET") && text.contains("modes=walk>crawl>walk"), "{text}");
    assert!(dir.path().join("walk.csv").exists());

    let o = run(&["slice", "dog.vfs", "--mode", "crawl", "-o", "crawl.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let lines = std::fs::read_to_string(dir.path().join("crawl.csv")).unwrap().lines().count();
    assert_eq!(lines, 302);
}

#[test]
fn zero_horizon_cli_and_thread_override() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("dog1d.cfg")).unwrap().replace("solver.horizon = 3", "solver.horizon = 0");
    std::fs::write(dir.path().join("zero.cfg"), text).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hybridreach"))
        .args(["solve", "zero.cfg", "-o", "zero.vfs"])
        .current_dir(dir.path())
        .env("HYBRIDREACH_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = hybridreach::io::read_result(&dir.path().join("zero.vfs")).unwrap();
    assert_eq!(r.meta.config.threads, 2);
    let sys = hybridreach::systems::make_dog1d();
    let l = sys.sample_target(r.grid());
    assert!((0..3).all(|q| r.initial(q).data() == &l[..]));

    let o = Command::new(env!("CARGO_BIN_EXE_hybridreach"))
        .args(["validate", "zero.cfg"])
        .current_dir(dir.path())
        .env("HYBRIDREACH_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["--version"], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["validate", "missing.cfg"], dir.path()).status.code(), Some(1));

    std::fs::write(dir.path().join("bad.cfg"), "model.name = dog1d\nsolver.horizon = 1\nsolver.horizon = 2\n").unwrap();
    let o = run(&["validate", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("solver.horizon"));

}
