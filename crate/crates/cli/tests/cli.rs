use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cutie::network::ArchConfig;
use cutie::sim::trace_io::record_bytes;

fn cutie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cutie"))
        .args(args)
        .env_remove("CUTIE_COST_MODEL")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = cutie(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    cutie(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// CSV rows as vectors of cells, header included.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

struct Reference {
    _dir: tempfile::TempDir,
    root: PathBuf,
    progs: Vec<PathBuf>,
}

fn reference(extra: &[&str]) -> Reference {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let net = root.join("net");
    let mut args = vec!["zoo", "-o", s(&net), "--seed", "0"];
    args.extend_from_slice(extra);
    ok(&args);
    let prog = root.join("ref.ctprog");
    ok(&["compile", s(&net.join("reference.ctnet")), "-o", s(&prog)]);
    let progs = vec![root.join("ref.0.ctprog"), root.join("ref.1.ctprog")];
    Reference {
        _dir: dir,
        root,
        progs,
    }
}

#[test]
fn compile_reports_operation_counts() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net");
    ok(&["zoo", "-o", s(&net)]);
    let th = dir.path().join("th.csv");
    let out = ok(&[
        "compile",
        s(&net.join("reference.ctnet")),
        "-o",
        s(&dir.path().join("p.ctprog")),
        "--dump-thresholds",
        s(&th),
    ]);
    let r = rows(&out);
    let ops_col = r[0].iter().position(|c| c == "ops").unwrap();
    let ops: Vec<u64> = r[1..].iter().map(|row| row[ops_col].parse().unwrap()).collect();
    assert_eq!(ops.len(), 9);
    // 3x3 kernels over 32x32, 16x16, 8x8 and 4x4 maps, 2 ops per MAC
    assert_eq!(ops[0], 2 * 32 * 32 * 128 * 9 * 126);
    assert_eq!(ops[1], 2 * 32 * 32 * 128 * 9 * 128);
    assert_eq!(ops[3], ops[1] / 4);
    assert_eq!(ops[5], ops[1] / 16);
    assert_eq!(ops[7], ops[1] / 64);
    assert_eq!(ops[8], 2 * 128 * 10);

    let t = fs::read_to_string(th).unwrap();
    assert!(t.starts_with("program,layer,channel,t_lo,t_hi"));
    // 8 * 128 conv channels and 10 classifier channels
    assert_eq!(t.lines().count(), 1 + 8 * 128 + 10);
}

#[test]
fn invalid_network_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net");
    ok(&["zoo", "-o", s(&net)]);
    let o = cutie(&[
        "compile",
        s(&net.join("reference.ctnet")),
        "-o",
        s(&dir.path().join("p.ctprog")),
        "--i-w",
        "16",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("input exceeds feature-map memory"), "{err}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net");
    ok(&["zoo", "-o", s(&net)]);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "i_w = 16\ni_h = 16\n").unwrap();
    let manifest = net.join("reference.ctnet");
    let prog = dir.path().join("p.ctprog");
    let base = ["compile", s(&manifest), "-o", s(&prog), "--config", s(&cfg)];
    assert_eq!(code(&base), 2);
    let mut flagged = base.to_vec();
    flagged.extend(["--i-w", "32", "--i-h", "32"]);
    assert_eq!(code(&flagged), 0);
}

#[test]
fn queue_overflow_without_split_is_a_capacity_error() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net");
    ok(&["zoo", "-o", s(&net)]);
    let (manifest, prog) = (net.join("reference.ctnet"), dir.path().join("p.ctprog"));
    assert_eq!(code(&["compile", s(&manifest), "-o", s(&prog), "--no-split"]), 4);
}

#[test]
fn check_matches_golden_model_and_writes_trace() {
    let r = reference(&[]);
    let trace = r.root.join("out.trc");
    let out = ok(&[
        "run",
        s(&r.progs[0]),
        s(&r.progs[1]),
        "--seed",
        "0",
        "--check",
        "--trace",
        s(&trace),
    ]);
    assert!(out.lines().any(|l| l == "MATCH"), "{out}");
    let cycles: u64 = out
        .lines()
        .find_map(|l| l.strip_prefix("cycles = "))
        .unwrap()
        .parse()
        .unwrap();
    let size = fs::metadata(&trace).unwrap().len();
    assert_eq!(size, cycles * record_bytes(&ArchConfig::default()) as u64);

    // the reference path gives the same output
    let sim = ok(&["run", s(&r.progs[0]), s(&r.progs[1]), "--seed", "0"]);
    let gold = ok(&["run", s(&r.progs[0]), s(&r.progs[1]), "--seed", "0", "--reference"]);
    let output = |t: &str| t.lines().find(|l| l.starts_with("output =")).unwrap().to_string();
    assert_eq!(output(&sim), output(&gold));
}

#[test]
fn encoded_input_runs() {
    let r = reference(&[]);
    let out_t = r.root.join("out.cttensor");
    ok(&[
        "run",
        s(&r.progs[0]),
        s(&r.progs[1]),
        "--input",
        s(&r.root.join("net/input.cttensor")),
        "--output",
        s(&out_t),
    ]);
    assert!(out_t.exists());
}

#[test]
fn missing_input_exits_2() {
    let r = reference(&[]);
    let missing = r.root.join("missing.cttensor");
    assert_eq!(code(&["run", s(&r.progs[0]), "--input", s(&missing)]), 2);
    assert_eq!(code(&["run", s(&r.root.join("missing.ctprog"))]), 2);
}

#[test]
fn report_sections() {
    let r = reference(&["--weight-sparsity", "0.607"]);
    let trace = r.root.join("out.trc");
    let progs = [s(&r.progs[0]), s(&r.progs[1])];
    ok(&["run", progs[0], progs[1], "--trace", s(&trace)]);

    let act = ok(&["report", "--trace", s(&trace), progs[0], progs[1], "--activity", "--iterative", "2"]);
    let a = rows(&act);
    assert_eq!(a.len(), 3);
    assert_eq!(a[1][0], "unrolled");
    assert_eq!(a[2][0], "iterative2");

    let en = ok(&["report", "--trace", s(&trace), progs[0], progs[1], "--energy"]);
    let e = rows(&en);
    let head = &e[0];
    let first = head.iter().position(|c| c == "io_pj").unwrap();
    let total = head.iter().position(|c| c == "total_pj").unwrap();
    for row in &e[1..] {
        let items: f64 = row[first..first + 7].iter().map(|c| c.parse::<f64>().unwrap()).sum();
        let t: f64 = row[total].parse().unwrap();
        assert!((items - t).abs() <= 1e-3 * t.max(1.0) + 0.01, "{row:?}");
    }
    assert_eq!(e.last().unwrap()[1], "total");

    let disc = ok(&["report", "--trace", s(&trace), progs[0], progs[1], "--binary-discount"]);
    let d = rows(&disc);
    let totals: Vec<&Vec<String>> = d.iter().filter(|row| row[1] == "total").collect();
    assert_eq!(totals.len(), 2);
    assert_eq!(totals[1][0], "binary_discount");
    let codec = d[0].iter().position(|c| c == "codec_pj").unwrap();
    assert_eq!(totals[1][codec].parse::<f64>().unwrap(), 0.0);
    let core = d[0].iter().position(|c| c == "core_pj").unwrap();
    assert!(totals[1][core].parse::<f64>().unwrap() < totals[0][core].parse::<f64>().unwrap());

    let cyc = ok(&["report", "--trace", s(&trace), progs[0], progs[1], "--cycles"]);
    assert_eq!(rows(&cyc).len(), 1 + 9);
}

#[test]
fn encode_examples() {
    let t = ok(&["encode", "--values", "110", "-m", "128"]);
    let v: Vec<i32> = t.trim().split(',').map(|x| x.parse().unwrap()).collect();
    let mut want = vec![-1; 18];
    want.extend(vec![0; 110]);
    assert_eq!(v, want);

    assert_eq!(ok(&["encode", "--values", "0", "-m", "4", "--encoder", "binary"]).trim(), "-1,-1,-1,-1");
    assert_eq!(code(&["encode", "--values", "257", "-m", "128"]), 2);
    assert_eq!(code(&["encode", "--values", "5", "-m", "4", "--encoder", "binary"]), 2);
    assert_eq!(code(&["encode", "--values", "1", "-m", "4", "--encoder", "octal"]), 2);
}

fn tiling_totals(fm: &str) -> Vec<(String, f64, f64)> {
    let out = ok(&["tiling", "--fm", fm]);
    let r = rows(&out);
    let col = |n: &str| r[0].iter().position(|c| c == n).unwrap();
    let (st, fmt, tot) = (col("strategy"), col("fm_transfer_uj"), col("total_uj"));
    r[1..]
        .iter()
        .map(|row| (row[st].clone(), row[fmt].parse().unwrap(), row[tot].parse().unwrap()))
        .collect()
}

#[test]
fn tiling_table() {
    for (_, transfer, _) in tiling_totals("32") {
        assert!((transfer - 4.19).abs() < 0.01, "{transfer}");
    }
    for fm in ["64", "96x96"] {
        let t = tiling_totals(fm);
        assert_eq!(t[0].0, "layer_first");
        assert!(t[1].2 < t[0].2, "{fm}: {t:?}");
    }
    assert_eq!(code(&["tiling", "--fm", "64", "--tile", "48"]), 2);
    assert_eq!(code(&["tiling", "--fm", "64", "--strategy", "sideways"]), 2);
}

fn first_step(out: &str, strategy: &str) -> f64 {
    rows(out)
        .iter()
        .find(|r| r[0] == strategy && r[1] == "0")
        .map(|r| r[4].parse().unwrap())
        .unwrap()
}

#[test]
fn quantize_strategies() {
    for seed in ["0", "1", "2"] {
        let out = ok(&["quantize", "--strategy", "all", "--seed", seed]);
        assert!(first_step(&out, "magnitude-inverse") >= first_step(&out, "magnitude"));
    }
    let out = ok(&["quantize", "--schedule", "0.2,0.4,0.6,0.8,1.0", "--random", "100"]);
    let fr: Vec<String> = rows(&out)[1..].iter().map(|r| r[2].clone()).collect();
    assert_eq!(fr, ["0.2", "0.4", "0.6", "0.8", "1"]);
    assert_eq!(code(&["quantize", "--strategy", "largest-first"]), 2);
    assert_eq!(code(&["quantize", "--schedule", "0.5,0.4,1.0"]), 2);
}

#[test]
fn quantize_writes_ternary_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.cttensor");
    ok(&["quantize", "--random", "64", "-o", s(&out)]);
    let t = cutie::network::io::load_trits(&out).unwrap();
    assert_eq!(t.dims(), [64]);
    assert_eq!(code(&["quantize", "--strategy", "all", "-o", s(&out)]), 2);
}

#[test]
fn seeded_commands_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(&["zoo", "-o", s(d), "--random", "--seed", "11"]);
    }
    for f in ["random.ctnet", "input.cttensor"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
    let q = ["quantize", "--strategy", "all", "--seed", "4"];
    assert_eq!(ok(&q), ok(&q));

    let prog = a.path().join("p.ctprog");
    ok(&["compile", s(&a.path().join("random.ctnet")), "-o", s(&prog)]);
    assert_eq!(
        ok(&["run", s(&prog), "--seed", "9", "--check"]),
        ok(&["run", s(&prog), "--seed", "9", "--check"])
    );
}
