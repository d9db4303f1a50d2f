use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qchannel::bounds::{resource_table, BoundsReport, MAX_ARG_SUM};
use qchannel::channel::{ceil_log2, is_extreme, kraus_rank, random_channel, DilationOptions, KrausSet, RANK_TOLERANCE};
use qchannel::circuit::{cnot_count, parse, serialize, Circuit};
use qchannel::compiler::{compile_measured_with, compile_qcm_with, compile_random_qcm, random_qcm_distance};
use qchannel::io::{channel_from_json, channel_to_json, mixture_from_json};
use qchannel::rewrite::optimize;
use qchannel::sim::circuit_distance;
use qchannel::templates::{fit, FitOptions, Template, TemplateId};
use serde_json::json;

/// Largest `m + n + k` accepted by `compile`.
const SIZE_CAP: usize = 9;

const VERIFY_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "qchannel", version, about = "Compile quantum channels into CNOT circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Measured,
    Qcm,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a channel (or, for `random`, a convex mixture) into circuits.
    Compile {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Environment qubits; defaults to ⌈log2 Kraus rank⌉.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        no_verify: bool,
        #[arg(long)]
        no_rewrite: bool,
        #[arg(long)]
        report: bool,
    },
    /// Check a circuit against a channel.
    Verify {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = VERIFY_TOL)]
        tol: f64,
    },
    /// Print dimensions, Kraus rank, extremality and TP residual.
    Info {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write a seeded random channel.
    Random {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        kraus_rank: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// CNOT lower bounds and resource counts.
    Bounds {
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, num_args = 2, value_names = ["MMAX", "NMAX"])]
        grid: Option<Vec<u32>>,
        #[arg(long)]
        csv: bool,
    },
    /// Fit a fixed small-case topology to a channel.
    Fit {
        #[arg(long)]
        template: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 20)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
    },
}

enum Failure {
    /// Bad input, bad flags or a library error: exit 1.
    Invalid(String),
    /// The produced or supplied circuit does not match: exit 2.
    Mismatch(String),
}

impl From<qchannel::Error> for Failure {
    fn from(e: qchannel::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn check_size(m: usize, n: usize, k: usize) -> Outcome {
    if m + n + k > SIZE_CAP {
        return Err(Failure::Invalid(format!("m + n + k = {} exceeds the supported maximum of {SIZE_CAP}", m + n + k)));
    }
    Ok(())
}

fn env_qubits(ks: &KrausSet, k: Option<usize>) -> usize {
    k.unwrap_or_else(|| ceil_log2(kraus_rank(ks, RANK_TOLERANCE).max(1)))
}

fn report_line(qubits: usize, cnots: usize, measurements: usize, dist: Option<f64>) -> String {
    let d = dist.map_or_else(|| "unverified".to_string(), |d| format!("{d:.3e}"));
    format!("qubits={qubits} cnots={cnots} measurements={measurements} choi_dist={d}")
}

fn finish_verify(dist: Option<f64>) -> Outcome {
    match dist {
        Some(d) if d.is_nan() || d >= VERIFY_TOL => Err(Failure::Mismatch(format!("self-verification failed: choi_dist={d:.3e}"))),
        _ => Ok(()),
    }
}

struct CompileArgs {
    k: Option<usize>,
    verify: bool,
    rewrite: bool,
    report: bool,
}

fn compile_single(model: Model, input: &Path, out: &Path, a: &CompileArgs) -> Outcome {
    let ks = channel_from_json(&read(input)?)?;
    check_size(ks.m(), ks.n(), env_qubits(&ks, a.k))?;
    let opts = DilationOptions { minimal: true, k: a.k };
    let mut c = match model {
        Model::Measured => compile_measured_with(&ks, opts)?,
        _ => compile_qcm_with(&ks, opts)?,
    };
    if a.rewrite {
        c = optimize(&c);
    }
    let dist = if a.verify { Some(circuit_distance(&c, &ks)?) } else { None };
    finish_verify(dist)?;
    write(out, &serialize(&c))?;
    if a.report {
        println!("{}", report_line(c.num_qubits, cnot_count(&c).worst_case, c.measurement_count(), dist));
    }
    Ok(())
}

/// Component circuits go next to the manifest as `<out>.<j>.qcirc`.
fn component_path(out: &Path, j: usize) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(format!(".{j}.qcirc"));
    out.with_file_name(name)
}

fn compile_random(input: &Path, out: &Path, a: &CompileArgs) -> Outcome {
    if a.k.is_some() {
        return Err(Failure::Invalid("--k is not supported with --model random".into()));
    }
    let mix = mixture_from_json(&read(input)?)?;
    for (_, ks) in mix.components() {
        check_size(ks.m(), ks.n(), env_qubits(ks, None))?;
    }
    let mut circuits = compile_random_qcm(&mix)?;
    if a.rewrite {
        for (_, c) in &mut circuits {
            *c = optimize(c);
        }
    }
    let dist = if a.verify { Some(random_qcm_distance(&mix, &circuits)?) } else { None };
    finish_verify(dist)?;
    let mut entries = Vec::new();
    for (j, (p, c)) in circuits.iter().enumerate() {
        let path = component_path(out, j);
        write(&path, &serialize(c))?;
        let file = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        entries.push(json!({"p": p, "circuit": file}));
    }
    let manifest = json!({"model": "random", "components": entries});
    write(out, &format!("{}\n", serde_json::to_string_pretty(&manifest).expect("plain JSON values")))?;
    if a.report {
        let qubits = circuits.iter().map(|(_, c)| c.num_qubits).max().unwrap_or(0);
        let cnots = circuits.iter().map(|(_, c)| cnot_count(c).worst_case).max().unwrap_or(0);
        println!("{} components={}", report_line(qubits, cnots, 0, dist), circuits.len());
    }
    Ok(())
}

fn verify(circuit: &Path, channel: &Path, tol: f64) -> Outcome {
    let c: Circuit = parse(&read(circuit)?)?;
    let ks = channel_from_json(&read(channel)?)?;
    if (c.inputs.len(), c.outputs.len()) != (ks.m(), ks.n()) {
        return Err(Failure::Invalid(format!(
            "circuit is {}→{} but the channel is {}→{}",
            c.inputs.len(),
            c.outputs.len(),
            ks.m(),
            ks.n()
        )));
    }
    let d = circuit_distance(&c, &ks)?;
    println!("choi_dist={d:.3e}");
    if d < tol {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("distance {d:.3e} is not below {tol:.1e}")))
    }
}

fn info(input: &Path) -> Outcome {
    let ks = channel_from_json(&read(input)?)?;
    println!("m={}", ks.m());
    println!("n={}", ks.n());
    println!("kraus_operators={}", ks.len());
    println!("kraus_rank={}", kraus_rank(&ks, RANK_TOLERANCE));
    println!("extreme={}", if is_extreme(&ks)? { "yes" } else { "no" });
    println!("tp_residual={:.3e}", ks.tp_residual());
    Ok(())
}

fn bounds(m: Option<u32>, n: Option<u32>, grid: Option<Vec<u32>>, csv: bool) -> Outcome {
    let check = |m: u32, n: u32| {
        if m.checked_add(n).is_none_or(|s| s > MAX_ARG_SUM) {
            Err(Failure::Invalid(format!("m + n must not exceed {MAX_ARG_SUM}")))
        } else {
            Ok(())
        }
    };
    let reports: Vec<BoundsReport> = match (grid, m, n) {
        (Some(g), None, None) => {
            check(g[0], g[1])?;
            (0..=g[0]).flat_map(|m| (0..=g[1]).map(move |n| resource_table(m, n))).collect()
        }
        (None, Some(m), Some(n)) => {
            check(m, n)?;
            vec![resource_table(m, n)]
        }
        _ => return Err(Failure::Invalid("give either --m and --n, or --grid MMAX NMAX".into())),
    };
    if csv {
        println!("{}", BoundsReport::CSV_HEADER);
        for r in &reports {
            println!("{}", r.csv_row());
        }
    } else {
        let blocks: Vec<String> = reports.iter().map(BoundsReport::to_text).collect();
        print!("{}", blocks.join("\n"));
    }
    Ok(())
}

fn fit_cmd(template: &str, input: &Path, opts: FitOptions, out: Option<&Path>) -> Outcome {
    let id = TemplateId::from_name(template)
        .ok_or_else(|| Failure::Invalid(format!("unknown template {template:?}; expected 1to1, 1to2, 2to1 or 2to2")))?;
    let ks = channel_from_json(&read(input)?)?;
    let t = Template::new(id);
    let r = fit(&t, &ks, &opts)?;
    if let Some(out) = out {
        write(out, &serialize(&t.instantiate(&r.params)?))?;
    }
    println!("template={id} cnots={} distance={:.3e} start={} starts_used={}", t.cnot_count, r.distance, r.start, r.starts_used);
    if r.converged(opts.tol) {
        Ok(())
    } else {
        Err(Failure::Mismatch(format!("no start reached tolerance {:.1e}", opts.tol)))
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Compile { model, input, out, k, no_verify, no_rewrite, report } => {
            let a = CompileArgs { k, verify: !no_verify, rewrite: !no_rewrite, report };
            match model {
                Model::Random => compile_random(&input, &out, &a),
                _ => compile_single(model, &input, &out, &a),
            }
        }
        Command::Verify { circuit, channel, tol } => verify(&circuit, &channel, tol),
        Command::Info { input } => info(&input),
        Command::Random { m, n, kraus_rank, seed, out } => {
            check_size(m, n, ceil_log2(kraus_rank.max(1)))?;
            let ks = random_channel(m, n, kraus_rank, seed)?;
            write(&out, &channel_to_json(&ks, false))
        }
        Command::Bounds { m, n, grid, csv } => bounds(m, n, grid, csv),
        Command::Fit { template, input, starts, seed, out, tol, max_iters } => {
            fit_cmd(&template, &input, FitOptions { starts, max_iters, tol, seed }, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Mismatch(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}
