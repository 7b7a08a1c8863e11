use std::path::Path;
use std::process::Command;

use blochlab::cli::run;
use serde_json::Value;

fn blochlab(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["blochlab".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push(format!("--out={}", out.display()));
    run(argv)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn values(csv: &str) -> Vec<f64> {
    csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect()
}

#[test]
fn martingale_unit_jumps_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["martingale", "--seed", "7", "--p", "2", "--depth", "16", "--law", "rademacher"];
    assert_eq!(blochlab(&a, &args), 0);
    let stats = read_json(&a.join("stats.json"));
    assert!((stats["sigma2"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["subcommand"], "martingale");
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(manifest["config"]["martingale"]["depth"] == 16);

    assert_eq!(blochlab(&b, &["--threads", "1", "martingale", "--seed=7", "--depth=16"]), 0);
    for f in ["stats.csv", "stats.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
}

#[test]
fn martingale_usage_and_corrupt_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(blochlab(&out, &["martingale", "--law", "uniform-real"]), 1);
    assert_eq!(blochlab(&out, &["martingale", "--law", "zeros", "--depth", "4"]), 0);
    assert_eq!(blochlab(&out, &["martingale", "--law", "cauchy", "--seed", "1"]), 1);

    let saved = dir.path().join("saved");
    assert_eq!(blochlab(&saved, &["martingale", "--seed", "3", "--depth", "8", "--law", "unit-roots", "--save"]), 0);
    let again = dir.path().join("again");
    for file in ["martingale.bin", "martingale.json"] {
        let input = saved.join(file);
        assert_eq!(blochlab(&again, &["martingale", "--input", input.to_str().unwrap()]), 0);
        assert_eq!(read(&saved.join("stats.json")), read(&again.join("stats.json")));
    }

    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a martingale").unwrap();
    assert_eq!(blochlab(&out, &["martingale", "--input", junk.to_str().unwrap()]), 3);

    // a tree whose children do not average to the parent
    let mut rec = read_json(&saved.join("martingale.json"));
    rec["levels"][1][0][0] = Value::from(5.0);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, rec.to_string()).unwrap();
    assert_eq!(blochlab(&out, &["martingale", "--input", bad.to_str().unwrap()]), 2);
}

#[test]
fn variance_ladders() {
    let dir = tempfile::tempdir().unwrap();
    let lac = dir.path().join("lac");
    assert_eq!(blochlab(&lac, &["variance", "--family", "lacunary", "--rmin-j", "12", "--rmax-j", "22"]), 0);
    let e = read_json(&lac.join("variance.json"));
    let limit = e["limit"].as_f64().unwrap();
    assert!((limit * std::f64::consts::LN_2 - 1.0).abs() < 0.03, "{limit}");
    assert_eq!(values(&read(&lac.join("variance.csv"))).len(), 6);

    let c = dir.path().join("const");
    assert_eq!(blochlab(&c, &["variance", "--family", "constant"]), 0);
    let v = values(&read(&c.join("variance.csv")));
    assert!(v.windows(2).all(|w| w[1] < w[0]) && *v.last().unwrap() < 0.1, "{v:?}");

    let z = dir.path().join("zero");
    assert_eq!(blochlab(&z, &["ims", "--family", "zero", "--t", "0.1"]), 0);
    assert!(values(&read(&z.join("ims.csv"))).iter().all(|x| *x == 0.0));
    assert_eq!(read_json(&z.join("ims.json"))["limit"].as_f64().unwrap(), 0.0);

    let l = dir.path().join("lil");
    assert_eq!(blochlab(&l, &["lil", "--family", "lacunary", "--rmax-j", "14"]), 0);
    assert!(values(&read(&l.join("lil.csv"))).iter().all(|x| *x > 0.0));

    assert_eq!(blochlab(&z, &["variance", "--family", "bergman"]), 1);
    assert_eq!(blochlab(&z, &["variance", "--family", "search"]), 1);
}

#[test]
fn box_and_bridge_tables() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    assert_eq!(blochlab(&c, &["box", "--family", "constant", "--depth", "10", "--n", "2,4"]), 0);
    let rows = read(&c.join("greens.csv"));
    assert_eq!(rows.lines().count(), 1 + 2 * 4);
    assert!(rows.lines().skip(1).all(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap() == 0.0));

    assert_eq!(blochlab(&c, &["box", "--family", "lacunary", "--domain", "disk", "--depth", "10", "--n", "4"]), 1);
    assert_eq!(blochlab(&c, &["box", "--family", "lacunary", "--depth", "6", "--n", "8"]), 1);

    let l = dir.path().join("l");
    assert_eq!(blochlab(&l, &["bridge", "--family", "lacunary", "--depth", "20", "--n", "4,8,16"]), 0);
    let report = read_json(&l.join("report.json"));
    let median = |n: u64| {
        let mut d: Vec<f64> = report["greens"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|r| r["n"] == n)
            .map(|r| r["defect"].as_f64().unwrap())
            .collect();
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    };
    let (d4, d8, d16) = (median(4), median(8), median(16));
    assert!(d8 < d4 && d16 < d8, "{d4} {d8} {d16}");
    for f in ["greens.csv", "complexification.csv", "levels.csv", "manifest.json"] {
        assert!(l.join(f).exists(), "{f}");
    }
}

#[test]
fn search_resume_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let (once, split) = (dir.path().join("once"), dir.path().join("split"));
    let base = ["search", "--n", "4", "--tile-depth", "2", "--seed", "1"];
    assert_eq!(blochlab(&once, &[&base[..], &["--iters", "100"]].concat()), 0);
    assert_eq!(blochlab(&split, &[&base[..], &["--iters", "50", "--threads", "2"]].concat()), 0);
    let ck = split.join("checkpoint.json");
    assert_eq!(blochlab(&split, &["search", "--resume", ck.to_str().unwrap(), "--iters", "50"]), 0);
    for f in ["result.json", "history.csv", "checkpoint.json", "best_coefficient.json"] {
        assert_eq!(read(&once.join(f)), read(&split.join(f)), "{f}");
    }

    let zero = dir.path().join("zero");
    assert_eq!(blochlab(&zero, &["search", "--n", "3", "--tile-depth", "1", "--seed", "5", "--iters", "0"]), 0);
    let r = read_json(&zero.join("result.json"));
    assert_eq!(r["history"].as_array().unwrap().len(), 1);
    assert_eq!(r["objective"], r["history"][0]["current"]);

    // the best tile feeds the other subcommands
    let coeff = once.join("best_coefficient.json");
    let v = dir.path().join("v");
    assert_eq!(blochlab(&v, &["variance", "--family", "search", "--coefficients", coeff.to_str().unwrap(), "--rmax-j", "12"]), 0);

    std::fs::write(dir.path().join("bad.json"), "{\"config\": 3}").unwrap();
    let bad = dir.path().join("bad.json");
    assert_eq!(blochlab(&zero, &["search", "--resume", bad.to_str().unwrap()]), 3);
    assert_eq!(blochlab(&zero, &["search", "--resume", "/nonexistent/ck.json"]), 1);
    assert_eq!(blochlab(&zero, &["search", "--iters", "3"]), 1);
}

#[test]
fn clt_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("clt");
    assert_eq!(blochlab(&out, &["clt", "--family", "lacunary", "--j", "20", "--N", "65536"]), 0);
    let r = read_json(&out.join("report.json"));
    assert!(r["ks_re"].as_f64().unwrap() <= 0.05, "{r}");
    assert_eq!(r["N"], 65536);
    assert_eq!(r["bad_mass"].as_array().unwrap().len(), 4);
    let hist = read(&out.join("hist_re.csv"));
    let total: u64 = hist.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 65536);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\nseed = 11\ndepth = 6\nlaw = uniform-complex\nsave = true\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(blochlab(&out, &["martingale", "--config", cfg.to_str().unwrap(), "--depth", "5"]), 0);
    let rec = read_json(&out.join("martingale.json"));
    assert_eq!(rec["depth"], 5);
    assert_eq!(rec["seed"], 11);

    std::fs::write(&cfg, "depth\n").unwrap();
    assert_eq!(blochlab(&out, &["martingale", "--config", cfg.to_str().unwrap()]), 1);
}

#[test]
fn selftest_and_binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("st");
    assert_eq!(blochlab(&out, &["selftest", "--criteria", "1,4"]), 0);
    assert!(out.join("criterion_01.json").exists() && out.join("criterion_04.json").exists());
    assert_eq!(blochlab(&out, &["selftest", "--criteria", "99"]), 1);

    let bin = env!("CARGO_BIN_EXE_blochlab");
    let status = Command::new(bin).args(["martingale", "--depth", "3"]).env("BLOCHLAB_DATA_DIR", dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = Command::new(bin)
        .args(["martingale", "--seed", "2", "--depth", "3"])
        .env("BLOCHLAB_DATA_DIR", dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.path().join("martingale").join("manifest.json").exists());
    let status = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(0));
}
