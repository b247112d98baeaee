use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use vrpwdn::ils::population_sd;
use vrpwdn::io::{read_instance, read_solution};
use vrpwdn::milp::{build_flow_based, encode_solution, read_model, Formulation};

fn vrpwdn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vrpwdn")).args(args).current_dir(dir).env_remove("VRPWDN_SEED").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn txt_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|x| x == "txt")).collect();
    v.sort();
    v
}

/// A tiny generated instance the exact oracle solves, with its optimum.
fn tiny_feasible(dir: &Path) -> (PathBuf, f64) {
    let out = vrpwdn(&["gen", "--subset", "6,2,1,2", "--count", "6", "--seed", "5", "-o", "tiny"], dir);
    assert_eq!(code(&out), 0);
    for f in txt_files(&dir.join("tiny")) {
        let out = vrpwdn(&["exact", f.to_str().unwrap(), "--format", "json"], dir);
        if code(&out) == 0 {
            let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
            return (f, v["z"].as_f64().unwrap());
        }
    }
    panic!("no feasible tiny instance");
}

#[test]
fn gen_writes_every_suite_instance() {
    let tmp = TempDir::new().unwrap();
    for (suite, count) in [("random-small", 66), ("realistic", 108)] {
        let out = vrpwdn(&["gen", "--suite", suite, "-o", suite], tmp.path());
        assert_eq!(code(&out), 0);
        assert_eq!(txt_files(&tmp.path().join(suite)).len(), count);
        let manifest = fs::read_to_string(tmp.path().join(suite).join("manifest.csv")).unwrap();
        assert_eq!(manifest.lines().count(), count + 1);
    }
}

#[test]
fn gen_is_determined_by_the_seed() {
    let tmp = TempDir::new().unwrap();
    let digest = |seed: &str, dir: &str| {
        let out = vrpwdn(&["gen", "--suite", "random-small", "--seed", seed, "-o", dir], tmp.path());
        stdout(&out).split_whitespace().last().unwrap().to_string()
    };
    let (a, b, c) = (digest("7", "a"), digest("7", "b"), digest("8", "c"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let name = "vrpwdn_20_5_3_3_2.txt";
    assert_eq!(fs::read(tmp.path().join("a").join(name)).unwrap(), fs::read(tmp.path().join("b").join(name)).unwrap());
}

#[test]
fn gen_rejects_a_malformed_subset() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&vrpwdn(&["gen", "--subset", "6,2,1"], tmp.path())), 2);
    assert_eq!(code(&vrpwdn(&["gen", "--suite", "huge"], tmp.path())), 2);
}

#[test]
fn solve_matches_the_exact_optimum_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (inst, z_exact) = tiny_feasible(tmp.path());
    let inst = inst.to_str().unwrap();
    let out = vrpwdn(&["solve", inst, "--max-iter", "200", "--solution", "a.sol", "--report", "a.json"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("a.json")).unwrap()).unwrap();
    assert!((report["z_best"].as_f64().unwrap() - z_exact).abs() < 1e-6);

    vrpwdn(&["solve", inst, "--max-iter", "200", "--solution", "b.sol", "--report", "b.json"], tmp.path());
    assert_eq!(fs::read(tmp.path().join("a.sol")).unwrap(), fs::read(tmp.path().join("b.sol")).unwrap());
    assert_eq!(code(&vrpwdn(&["validate", inst, "a.sol"], tmp.path())), 0);
}

#[test]
fn report_spread_matches_recomputation() {
    let tmp = TempDir::new().unwrap();
    let out = vrpwdn(&["gen", "--subset", "15,3,2,2", "--seed", "3", "-o", "."], tmp.path());
    assert_eq!(code(&out), 0);
    let inst = txt_files(tmp.path()).remove(0);
    let out = vrpwdn(&["solve", inst.to_str().unwrap(), "--max-iter", "30", "--format", "json"], tmp.path());
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let zs: Vec<f64> = v["runs"].as_array().unwrap().iter().map(|r| r["z"].as_f64().unwrap()).collect();
    assert_eq!(zs.len(), 5);
    let mean = zs.iter().sum::<f64>() / 5.0;
    let sd = (zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / 5.0).sqrt();
    assert!((v["sigma_z"].as_f64().unwrap() - sd).abs() < 1e-9);
    assert!((v["z_avg"].as_f64().unwrap() - mean).abs() < 1e-9);
    let best = zs.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((v["z_best"].as_f64().unwrap() - best).abs() < 1e-9);
}

#[test]
fn bench_writes_raw_and_grouped_tables() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&vrpwdn(&["gen", "--subset", "7,1,1,2", "--count", "3", "--seed", "11", "-o", "set"], tmp.path())), 0);
    let out = vrpwdn(&["bench", "set", "--max-iter", "30", "--jobs", "2", "-o", "out"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let mut raw = csv::Reader::from_path(tmp.path().join("out/raw.csv")).unwrap();
    assert_eq!(raw.headers().unwrap().iter().collect::<Vec<_>>(), ["instance", "n_demand", "n_wells", "n_centers", "K", "run", "seed", "z", "l", "t_s"]);
    let rows: Vec<csv::StringRecord> = raw.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 15);
    let mut best = std::collections::BTreeMap::<String, f64>::new();
    let mut by_instance = std::collections::BTreeMap::<String, Vec<f64>>::new();
    for r in &rows {
        let z: f64 = r[7].parse().unwrap();
        let e = best.entry(r[0].to_string()).or_insert(f64::INFINITY);
        *e = e.min(z);
        by_instance.entry(r[0].to_string()).or_default().push(z);
    }

    let mut agg = csv::Reader::from_path(tmp.path().join("out/aggregate.csv")).unwrap();
    assert_eq!(agg.headers().unwrap().iter().collect::<Vec<_>>(), ["group", "z_best", "z_avg", "z_worst", "sigma_z", "t_s_avg"]);
    let groups: Vec<csv::StringRecord> = agg.records().map(Result::unwrap).collect();
    assert_eq!(groups.len(), 1);
    assert_eq!(&groups[0][0], "7_1_1_2");
    let z_best: f64 = groups[0][1].parse().unwrap();
    assert!((z_best - best.values().sum::<f64>() / 3.0).abs() < 1e-5);
    let sigma: f64 = groups[0][4].parse().unwrap();
    let expected = by_instance.values().map(|zs| population_sd(zs)).sum::<f64>() / 3.0;
    assert!(sigma >= 0.0 && (sigma - expected).abs() < 1e-5);

    // Listing order and thread count do not change the table.
    let files: Vec<String> = txt_files(&tmp.path().join("set")).iter().rev().map(|p| p.to_str().unwrap().to_string()).collect();
    let mut args = vec!["bench"];
    args.extend(files.iter().map(String::as_str));
    args.extend(["--max-iter", "30", "--jobs", "1", "-o", "again"]);
    assert_eq!(code(&vrpwdn(&args, tmp.path())), 0);
    let strip_time =
        |p: &str| -> Vec<String> { fs::read_to_string(tmp.path().join(p)).unwrap().lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect() };
    assert_eq!(strip_time("out/raw.csv"), strip_time("again/raw.csv"));
}

#[test]
fn emit_writes_six_models_with_the_audited_row_delta() {
    let tmp = TempDir::new().unwrap();
    let (inst, _) = tiny_feasible(tmp.path());
    let out = vrpwdn(&["emit", inst.to_str().unwrap(), "--vi", "both", "-o", "models"], tmp.path());
    assert_eq!(code(&out), 0);
    let mut files: Vec<PathBuf> = fs::read_dir(tmp.path().join("models")).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert_eq!(files.len(), 6);

    let instance = read_instance(&inst).unwrap();
    let (plain, vi) = (build_flow_based(&instance, false), build_flow_based(&instance, true));
    let stem = instance.name().to_string();
    let read = |tag: &str| read_model(tmp.path().join("models").join(format!("{stem}_flow_{tag}.lp"))).unwrap();
    let (file_plain, file_vi) = (read("novi"), read("vi"));
    assert_eq!(file_vi.row_count() - file_plain.row_count(), vi.row_count() - plain.row_count());
    assert_eq!(file_vi.family_counts(), vi.family_counts());

    let out = vrpwdn(&["emit", inst.to_str().unwrap(), "--formulation", "node", "--format", "mps", "-o", "mps"], tmp.path());
    assert_eq!(code(&out), 0);
    let mps = fs::read_dir(tmp.path().join("mps")).unwrap().next().unwrap().unwrap().path();
    assert_eq!(mps.extension().unwrap(), "mps");
    assert_eq!(read_model(&mps).unwrap().formulation, Formulation::NodeBased);
}

#[test]
fn validate_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let (inst_path, _) = tiny_feasible(tmp.path());
    let inst_arg = inst_path.to_str().unwrap();
    assert_eq!(code(&vrpwdn(&["exact", inst_arg, "--solution", "opt.sol"], tmp.path())), 0);
    assert_eq!(code(&vrpwdn(&["validate", inst_arg, "opt.sol"], tmp.path())), 0);

    // Move a well in front of its key pickup.
    let inst = read_instance(&inst_path).unwrap();
    let sol = read_solution(&inst, tmp.path().join("opt.sol")).unwrap();
    let well = *inst.wells().first().unwrap();
    let c = inst.center_of(well).unwrap();
    let routes: Vec<String> = sol
        .routes
        .iter()
        .enumerate()
        .map(|(r, route)| {
            let mut tokens: Vec<String> = route.visits.iter().map(|v| v.to_string()).collect();
            if let Some(at) = tokens.iter().position(|t| *t == well.to_string()) {
                let w = tokens.remove(at);
                let p = tokens.iter().position(|t| *t == format!("P{c}")).unwrap();
                tokens.insert(p, w);
            }
            format!("ROUTE {}: {}", r + 1, tokens.join(" "))
        })
        .collect();
    fs::write(tmp.path().join("bad.sol"), routes.join("\n") + "\n").unwrap();
    let out = vrpwdn(&["validate", inst_arg, "bad.sol"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("PrecedenceViolation"));

    fs::write(tmp.path().join("unknown.sol"), "ROUTE 1: 999\n").unwrap();
    assert_eq!(code(&vrpwdn(&["validate", inst_arg, "unknown.sol"], tmp.path())), 3);
    assert_eq!(code(&vrpwdn(&["validate", inst_arg, "missing.sol"], tmp.path())), 3);
    assert_eq!(code(&vrpwdn(&["validate", inst_arg], tmp.path())), 2);
}

#[test]
fn validate_checks_solver_value_dumps() {
    let tmp = TempDir::new().unwrap();
    let (inst_path, _) = tiny_feasible(tmp.path());
    let inst_arg = inst_path.to_str().unwrap();
    assert_eq!(code(&vrpwdn(&["exact", inst_arg, "--solution", "opt.sol"], tmp.path())), 0);
    let inst = read_instance(&inst_path).unwrap();
    let sol = read_solution(&inst, tmp.path().join("opt.sol")).unwrap();
    let values = encode_solution(&inst, &sol, Formulation::FlowBased).unwrap();
    let dump: String = values.iter().filter(|(_, v)| **v != 0.0).map(|(k, v)| format!("{k} {v}\n")).collect();
    fs::write(tmp.path().join("ok.txt"), &dump).unwrap();
    let out = vrpwdn(&["validate", inst_arg, "--values", "ok.txt", "--formulation", "flow", "--vi"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    fs::write(tmp.path().join("zero.txt"), "").unwrap();
    assert_eq!(code(&vrpwdn(&["validate", inst_arg, "--values", "zero.txt", "--formulation", "flow"], tmp.path())), 1);
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let (inst, _) = tiny_feasible(tmp.path());
    let inst = inst.to_str().unwrap();
    assert_eq!(code(&vrpwdn(&["solve", inst, "--alpha", "1.5"], tmp.path())), 2);
    assert_eq!(code(&vrpwdn(&["exact", inst, "--max-demand", "3"], tmp.path())), 2);
    assert_eq!(code(&vrpwdn(&["solve", inst, "--no-such-flag"], tmp.path())), 2);
}

#[test]
fn infeasible_instances_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let text = "NAME cramped\nVEHICLES 1\nLMAX 10\nNODES 2\n0 DEPOT 0 0 0\n1 TYPE1 100 0 5\n";
    fs::write(tmp.path().join("cramped.txt"), text).unwrap();
    assert_eq!(code(&vrpwdn(&["exact", "cramped.txt"], tmp.path())), 1);
    assert_eq!(code(&vrpwdn(&["solve", "cramped.txt", "--runs", "1"], tmp.path())), 1);
}

#[test]
fn tune_writes_one_row_per_configuration() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&vrpwdn(&["gen", "--subset", "6,1,1,1", "--count", "2", "--seed", "4", "-o", "set"], tmp.path())), 0);
    let out =
        vrpwdn(&["tune", "set", "--alphas", "0.1,0.25", "--betas", "2", "--gammas", "50", "--max-iters", "10,20", "--runs", "1", "-o", "grid.csv"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_path(tmp.path().join("grid.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["alpha", "beta", "gamma", "max_iter", "gap_pct_avg", "z_avg", "t_s_avg"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|row| row[4].parse::<f64>().unwrap() >= 0.0));
    assert!(rows.iter().any(|row| row[4].parse::<f64>().unwrap() == 0.0));
}
