use std::path::Path;
use std::process::{Command, Output};

fn lgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgraph")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn params_and_count() {
    let o = lgraph(&["params", "k=3", "n=100"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("rho = 1, 5/7, 4/7, 1/2"), "{text}");
    assert!(text.contains("r = 27, 14"), "{text}");
    let o = lgraph(&["count", "l=2,2", "spec=1,1"]);
    assert_eq!(stdout(&o).trim(), "8");
    let o = lgraph(&["expect", "l=2,2", "r=3", "t=2"]);
    assert!(stdout(&o).contains("2/5"));
}

#[test]
fn build_complexity_round_trip_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.lg");
    let cert = dir.path().join("c.cert");
    let built = lgraph(&["build", "construction=baseline", "k=2", "n=4", "m=4", "--out", path(&graph)]);
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let again = lgraph(&["complexity", "--in", path(&graph)]);
    assert!(again.status.success());
    assert_eq!(stdout(&built), stdout(&again));

    let text = std::fs::read_to_string(&graph).unwrap();
    assert!(text.starts_with("# tool: lgraph"));
    assert!(text.contains("# seed: 0"));

    let o = lgraph(&["certify", "--in", path(&graph), "--out", path(&cert)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&cert).unwrap().starts_with("# tool: lgraph"));
    let o = lgraph(&["verify", "--in", path(&cert)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pairs = 5568"));
    let o = lgraph(&["--exact", "verify", "--in", path(&graph)]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    // bad input
    assert_eq!(lgraph(&["count", "l=2,2", "spec=1,1", "colour=red"]).status.code(), Some(2));
    assert_eq!(lgraph(&["count", "l=2,x", "spec=1,1"]).status.code(), Some(2));
    assert_eq!(lgraph(&["complexity", "--in", "/nonexistent/graph.lg"]).status.code(), Some(2));
    assert_eq!(lgraph(&["no-such-command"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.lg");
    assert!(lgraph(&["build", "construction=baseline", "k=2", "n=3", "m=3", "--out", path(&graph)]).status.success());
    // resource cap
    assert_eq!(lgraph(&["--cap-inputs", "10", "complexity", "--in", path(&graph)]).status.code(), Some(4));

    // a corrupted flow fails the feasibility check
    let text = std::fs::read_to_string(&graph).unwrap();
    let mut broken = String::new();
    let mut done = false;
    for line in text.lines() {
        if !done && line.starts_with("p ") {
            let mut parts = line.split(' ');
            let (_, arc) = (parts.next(), parts.next().unwrap());
            broken.push_str(&format!("p {arc} 5\n"));
            done = true;
        } else {
            broken.push_str(line);
            broken.push('\n');
        }
    }
    let bad = dir.path().join("bad.lg");
    std::fs::write(&bad, broken).unwrap();
    assert_eq!(lgraph(&["complexity", "--in", path(&bad), "flows=stored"]).status.code(), Some(3));
}

#[test]
fn parameter_files_merge() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("p.txt");
    std::fs::write(&params, "# counting\nl=2,2\nspec=2,0\n").unwrap();
    let o = lgraph(&["--params", path(&params), "count", "spec=1,1"]);
    assert_eq!(stdout(&o).trim(), "8");
}
