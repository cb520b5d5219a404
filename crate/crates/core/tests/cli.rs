mod common;

use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skim::format::{read_instances, read_sketches};
use skim::{BaseGraph, SkimConfig};

fn skim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skim"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_graph(dir: &Path, name: &str, g: &BaseGraph) {
    let text: String = g.arcs().iter().map(|(t, h)| format!("{t} {h}\n")).collect();
    std::fs::write(dir.join(name), text).unwrap();
}

fn setup(n: u32, m: usize) -> (tempfile::TempDir, BaseGraph) {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64 * 31 + m as u64);
    let g = common::gnm(&mut rng, n, m);
    write_graph(dir.path(), "g.txt", &g);
    (dir, g)
}

#[test]
fn exit_codes() {
    let (dir, _) = setup(20, 40);
    let d = dir.path();
    assert_eq!(skim(d, &["skim"]).status.code(), Some(1));
    assert_eq!(
        skim(d, &["skim", "--input", "g.txt", "--k", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(skim(d, &["nonsense"]).status.code(), Some(1));
    assert_eq!(skim(d, &["--help"]).status.code(), Some(0));
    assert_eq!(
        skim(d, &["skim", "--input", "missing.txt"]).status.code(),
        Some(2)
    );
    std::fs::write(d.join("bad.txt"), "0 1\n1 x\n").unwrap();
    let out = skim(d, &["skim", "--input", "bad.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn unknown_query_nodes_are_listed() {
    let (dir, _) = setup(20, 40);
    let out = skim(
        dir.path(),
        &["query", "--input", "g.txt", "--nodes", "1,55,99"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("55") && err.contains("99"), "{err}");
}

#[test]
fn sample_with_certain_arcs_copies_the_graph() {
    let (dir, base) = setup(50, 200);
    let d = dir.path();
    stdout(&skim(
        d,
        &[
            "sample", "--input", "g.txt", "--scheme", "un:1.0", "--ell", "3", "--output", "i.bin",
        ],
    ));
    let g = read_instances(&std::fs::read(d.join("i.bin")).unwrap()[..]).unwrap();
    assert_eq!(g.instance_count(), 3);
    for inst in g.instances() {
        assert_eq!(inst.arcs().collect::<Vec<_>>(), base.arcs());
    }
}

#[test]
fn sampled_edge_count_matches_binomial() {
    let (dir, _) = setup(1000, 10_000);
    let d = dir.path();
    let ell = 64;
    stdout(&skim(
        d,
        &[
            "sample", "--input", "g.txt", "--scheme", "un:0.1", "--ell", "64", "--seed", "9",
            "--output", "i.bin",
        ],
    ));
    let g = read_instances(&std::fs::read(d.join("i.bin")).unwrap()[..]).unwrap();
    let mean = g.total_arcs() as f64 / ell as f64;
    // mean of ell Binomial(10^4, 0.1) counts
    let sigma = (10_000.0 * 0.1 * 0.9 / ell as f64).sqrt();
    assert!((mean - 1000.0).abs() <= 3.0 * sigma, "{mean}");
}

#[test]
fn instance_file_feeds_other_commands() {
    let (dir, _) = setup(60, 240);
    let d = dir.path();
    let flags = ["--ell", "8", "--k", "8", "--seed", "4", "--s", "10"];
    stdout(&skim(
        d,
        &[
            &["sample", "--input", "g.txt", "--output", "i.bin"][..],
            &flags,
        ]
        .concat(),
    ));
    let from_text = stdout(&skim(
        d,
        &[&["skim", "--input", "g.txt"][..], &flags].concat(),
    ));
    let from_bin = stdout(&skim(
        d,
        &[&["skim", "--input", "i.bin"][..], &flags].concat(),
    ));
    assert_eq!(from_text, from_bin);
    // held-out evaluation needs the model
    let out = skim(
        d,
        &[&["skim", "--input", "i.bin", "--eval"][..], &flags].concat(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn full_permutation_covers_every_pair() {
    let (dir, _) = setup(40, 120);
    let text = stdout(&skim(
        dir.path(),
        &[
            "skim", "--input", "g.txt", "--ell", "4", "--k", "4", "--s", "all",
        ],
    ));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "position,node,marginal,cumulative,marginal_num");
    assert_eq!(lines.len(), 41);
    let last: Vec<&str> = lines[40].split(',').collect();
    assert_eq!(last[3].parse::<f64>().unwrap(), 40.0);
    let mut nodes: Vec<u32> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    nodes.sort_unstable();
    assert_eq!(nodes, (0..40).collect::<Vec<_>>());
}

#[test]
fn csv_matches_library_run() {
    let (dir, base) = setup(80, 320);
    let text = stdout(&skim(
        dir.path(),
        &[
            "skim", "--input", "g.txt", "--ell", "8", "--k", "16", "--s", "12", "--seed", "3",
        ],
    ));
    let model = skim::assign_weighted_cascade(base);
    let g = skim::sample_instances(&model, 8, 3).unwrap();
    let run = skim::skim_run(&g, SkimConfig::new(16, Some(12), 3)).unwrap();
    let mut expected = Vec::new();
    run.seeds.write_csv(&mut expected, None, None).unwrap();
    assert_eq!(text.as_bytes(), expected);
}

#[test]
fn heldout_column_and_json_envelope() {
    let (dir, _) = setup(300, 1500);
    let d = dir.path();
    let csv = stdout(&skim(
        d,
        &[
            "greedy",
            "--input",
            "g.txt",
            "--s",
            "5",
            "--eval",
            "--eval-ell",
            "64",
        ],
    ));
    assert!(csv.lines().next().unwrap().ends_with(",influence_heldout"));
    let json = stdout(&skim(
        d,
        &[
            "skim", "--input", "g.txt", "--s", "5", "--eval", "--format", "json",
        ],
    ));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["command"], "skim");
    assert_eq!(v["config"]["ell"], 64);
    assert_eq!(v["seeds"].as_array().unwrap().len(), 5);
    assert!(v["seeds"][4]["influence_heldout"].as_f64().unwrap() > 0.0);
    assert_eq!(v["skim"]["ledger"]["curve"].as_array().unwrap().len(), 512);
}

#[test]
fn training_and_heldout_influence_agree() {
    let (dir, _) = setup(2000, 10_000);
    let text = stdout(&skim(
        dir.path(),
        &[
            "skim",
            "--input",
            "g.txt",
            "--s",
            "50",
            "--ell",
            "256",
            "--eval",
            "--eval-ell",
            "512",
        ],
    ));
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    let (train, heldout) = (last[3], last[5]);
    // selection bias pushes training up a little; stay within a few percent
    assert!(
        (train - heldout).abs() / heldout < 0.05,
        "{train} vs {heldout}"
    );
}

#[test]
fn single_seed_query_tracks_the_node_estimate() {
    let (dir, _) = setup(200, 1000);
    let d = dir.path();
    stdout(&skim(
        d,
        &[
            "sketch", "--input", "g.txt", "--ell", "16", "--k", "8", "--output", "s.bin",
        ],
    ));
    let set = read_sketches(&std::fs::read(d.join("s.bin")).unwrap()[..]).unwrap();
    for v in [0u32, 17, 199] {
        let out = stdout(&skim(
            d,
            &["query", "--input", "s.bin", "--nodes", &v.to_string()],
        ));
        let est: f64 = out
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        let sketch = set.sketch(v).unwrap();
        let card = skim::estimate_cardinality(sketch, 200, 16);
        // a full sketch's union weight leaves out the threshold rank itself
        let expected = if sketch.is_full() {
            (card - 1.0) / 16.0
        } else {
            card / 16.0
        };
        assert!((est - expected).abs() < 1e-9, "{est} vs {expected}");
    }
}

#[test]
fn eval_reads_seed_files_and_keeps_input_labels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("g.txt"),
        "# sparse ids\n1000 2000\n2000 3000\n5000 1000\n",
    )
    .unwrap();
    let out = stdout(&skim(
        d,
        &[
            "greedy", "--input", "g.txt", "--scheme", "un:1", "--ell", "1", "--s", "2",
        ],
    ));
    assert_eq!(out.lines().nth(1).unwrap(), "1,5000,4,4,4");
    std::fs::write(d.join("seeds.csv"), &out).unwrap();
    let ev = stdout(&skim(
        d,
        &[
            "eval",
            "--input",
            "g.txt",
            "--scheme",
            "un:1",
            "--ell",
            "1",
            "--seed-file",
            "seeds.csv",
        ],
    ));
    assert_eq!(ev, out);
}

#[test]
fn optimum_and_degree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // two disjoint stars; the larger hub has fewer out-arcs per instance overall
    std::fs::write(d.join("g.txt"), "0 1\n0 2\n0 3\n4 5\n4 6\n").unwrap();
    let opt = stdout(&skim(
        d,
        &[
            "optimum", "--input", "g.txt", "--scheme", "un:1", "--ell", "1", "--s", "2",
        ],
    ));
    let nodes: Vec<&str> = opt
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(nodes, ["0", "4"]);
    let deg = stdout(&skim(
        d,
        &[
            "degree", "--input", "g.txt", "--scheme", "un:1", "--ell", "1", "--s", "1",
        ],
    ));
    assert_eq!(deg.lines().nth(1).unwrap().split(',').nth(1), Some("0"));
    let too_big = skim(d, &["optimum", "--input", "g.txt", "--s", "9"]);
    assert_eq!(too_big.status.code(), Some(1));
}
